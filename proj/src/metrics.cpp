#include "fedsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedsim/csv.hpp"
#include "fedsim/fl_runtime.hpp"

namespace fedsim::metrics {

EvalResult evaluate(const nn::Model& model, const data::Dataset& test, int eval_batch) {
    const std::size_t n = test.size();
    if (n == 0) throw std::invalid_argument("evaluate: empty test set");
    EvalResult result;
    result.per_class_accuracy.assign(static_cast<std::size_t>(test.num_classes), 0.0);
    result.per_class_count.assign(static_cast<std::size_t>(test.num_classes), 0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> correct(static_cast<std::size_t>(test.num_classes), 0.0);
    std::size_t total_correct = 0;

    fl::ShardRef all{&test, &order};
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(eval_batch)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(eval_batch));
        auto [batch, labels] = fl::gather_batch(all, order, start, stop);
        const nn::ForwardResult fwd = nn::forward(model, batch, nn::Mode::infer);
        for (std::size_t r = 0; r < stop - start; ++r) {
            const double* row = fwd.probs.row(r);
            const int pred = static_cast<int>(std::max_element(row, row + test.num_classes) - row);
            const int truth = test.true_class[order[start + r]];
            ++result.per_class_count[static_cast<std::size_t>(truth)];
            if (pred == truth) {
                correct[static_cast<std::size_t>(truth)] += 1.0;
                ++total_correct;
            }
        }
    }
    for (int c = 0; c < test.num_classes; ++c) {
        const auto count = result.per_class_count[static_cast<std::size_t>(c)];
        result.per_class_accuracy[static_cast<std::size_t>(c)] =
            count == 0 ? 0.0 : correct[static_cast<std::size_t>(c)] / static_cast<double>(count);
    }
    result.accuracy = static_cast<double>(total_correct) / static_cast<double>(n);
    return result;
}

double compute_asr(const nn::Model& model, const data::Dataset& test, int c_src, int c_tgt) {
    const auto& sources = test.class_index.at(static_cast<std::size_t>(c_src));
    if (sources.empty()) {
        throw std::invalid_argument("compute_asr: test set has no samples of source class " +
                                    std::to_string(c_src));
    }
    fl::ShardRef ref{&test, &sources};
    std::size_t hits = 0;
    for (std::size_t start = 0; start < sources.size(); start += 256) {
        const std::size_t stop = std::min(sources.size(), start + 256);
        auto [batch, labels] = fl::gather_batch(ref, sources, start, stop);
        const nn::ForwardResult fwd = nn::forward(model, batch, nn::Mode::infer);
        for (std::size_t r = 0; r < stop - start; ++r) {
            const double* row = fwd.probs.row(r);
            const int pred = static_cast<int>(std::max_element(row, row + test.num_classes) - row);
            if (pred == c_tgt) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(sources.size());
}

std::optional<double> ri_asr(double v_asr, double b_asr) {
    if (v_asr == 0.0) return std::nullopt;
    return (b_asr - v_asr) / v_asr;
}

double windowed_mean(const std::vector<RoundRecord>& records, int from_round, int to_round,
                     RecordField field) {
    if (from_round < 1 || to_round < from_round ||
        static_cast<std::size_t>(to_round) > records.size()) {
        throw std::invalid_argument("windowed_mean: window [" + std::to_string(from_round) + ", " +
                                    std::to_string(to_round) + "] outside recorded rounds 1.." +
                                    std::to_string(records.size()));
    }
    double sum = 0.0;
    for (int r = from_round; r <= to_round; ++r) {
        const RoundRecord& rec = records[static_cast<std::size_t>(r - 1)];
        if (rec.round != r) throw std::logic_error("windowed_mean: records are not 1..T in order");
        switch (field) {
            case RecordField::global_accuracy: sum += rec.global_accuracy; break;
            case RecordField::asr:
                if (!rec.asr_defined) throw std::invalid_argument("windowed_mean: ASR not recorded");
                sum += rec.asr;
                break;
        }
    }
    return sum / static_cast<double>(to_round - from_round + 1);
}

namespace {

std::vector<SoftLabel> hard_labels(const data::Dataset& ds) {
    std::vector<SoftLabel> labels;
    labels.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        labels.push_back(SoftLabel::hard(ds.true_class[i], ds.num_classes));
    }
    return labels;
}

Tensor full_batch(const data::Dataset& ds) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    fl::ShardRef ref{&ds, &order};
    return fl::gather_batch(ref, order, 0, order.size()).first;
}

/// grad of log f_c(x, w): negative of the hard-label cross-entropy gradient.
ParamVector grad_log_prob(const nn::Model& model, const Tensor& x, int cls) {
    ParamVector g = nn::per_sample_loss_gradient(model, x, SoftLabel::hard(cls, model.num_classes()));
    for (auto& v : g.values) v = -v;
    return g;
}

DivergenceReport make_report(ParamVector empirical, ParamVector analytic) {
    DivergenceReport report;
    report.max_abs_error = max_abs_diff(empirical, analytic);
    double scale = 0.0;
    for (double v : empirical.values) scale = std::max(scale, std::abs(v));
    report.rel_error = report.max_abs_error / std::max(scale, 1e-12);
    report.empirical = std::move(empirical);
    report.analytic = std::move(analytic);
    return report;
}

/// One full-batch GD step from model.params; inference-mode loss so the
/// batch gradient is exactly the mean of per-sample gradients.
ParamVector gd_step(const nn::Model& model, const Tensor& batch,
                    const std::vector<SoftLabel>& labels, double lr) {
    const nn::BackwardResult back = nn::backward(model, batch, labels, nn::Mode::infer);
    ParamVector stepped = model.params;
    axpy(stepped, -lr, back.gradient);
    return stepped;
}

}  // namespace

DivergenceReport check_proposition1(const nn::Model& model, const data::Dataset& local_data,
                                    int c_src, int c_tgt, double learning_rate) {
    if (c_src == c_tgt) throw std::invalid_argument("check_proposition1: source equals target");
    const Tensor batch = full_batch(local_data);
    const std::vector<SoftLabel> clean = hard_labels(local_data);
    std::vector<SoftLabel> flipped = clean;
    for (std::size_t i = 0; i < local_data.size(); ++i) {
        if (local_data.true_class[i] == c_src) {
            flipped[i] = SoftLabel::hard(c_tgt, local_data.num_classes);
        }
    }

    const ParamVector w_clean = gd_step(model, batch, clean, learning_rate);
    const ParamVector w_flipped = gd_step(model, batch, flipped, learning_rate);
    ParamVector empirical = sub(w_flipped, w_clean);

    // eta * p(y=src) * E_{x|y=src}[grad log f_tgt - grad log f_src]
    ParamVector analytic = ParamVector::zeros_like(model.params);
    const auto& sources = local_data.class_index.at(static_cast<std::size_t>(c_src));
    if (!sources.empty()) {
        for (std::size_t idx : sources) {
            const Tensor x = local_data.sample(idx);
            axpy(analytic, 1.0, grad_log_prob(model, x, c_tgt));
            axpy(analytic, -1.0, grad_log_prob(model, x, c_src));
        }
        const double p_src = static_cast<double>(sources.size()) / static_cast<double>(local_data.size());
        const double scale = learning_rate * p_src / static_cast<double>(sources.size());
        for (auto& v : analytic.values) v *= scale;
    }
    return make_report(std::move(empirical), std::move(analytic));
}

DivergenceReport check_proposition2(const nn::Model& model, const data::Dataset& local_data,
                                    int c_src, int c_tgt, int intermediate_z, double lambda_z,
                                    double learning_rate) {
    if (intermediate_z == c_src || intermediate_z == c_tgt) {
        throw std::invalid_argument("check_proposition2: intermediate class must differ from source/target");
    }
    if (lambda_z < 0.0 || lambda_z > 1.0) {
        throw std::invalid_argument("check_proposition2: lambda_z must be in [0, 1]");
    }
    const Tensor batch = full_batch(local_data);
    std::vector<SoftLabel> vanilla = hard_labels(local_data);
    for (std::size_t i = 0; i < local_data.size(); ++i) {
        if (local_data.true_class[i] == c_src) {
            vanilla[i] = SoftLabel::hard(c_tgt, local_data.num_classes);
        }
    }
    std::vector<SoftLabel> boosted = vanilla;
    for (std::size_t i = 0; i < local_data.size(); ++i) {
        if (local_data.true_class[i] == intermediate_z) {
            SoftLabel soft;
            soft.probs.assign(static_cast<std::size_t>(local_data.num_classes), 0.0);
            soft.probs[static_cast<std::size_t>(c_tgt)] = lambda_z;
            soft.probs[static_cast<std::size_t>(intermediate_z)] = 1.0 - lambda_z;
            boosted[i] = soft;
        }
    }

    const ParamVector w_vanilla = gd_step(model, batch, vanilla, learning_rate);
    const ParamVector w_boosted = gd_step(model, batch, boosted, learning_rate);
    ParamVector empirical = sub(w_boosted, w_vanilla);

    // lambda_z * eta * p(y=z) * E_{x|y=z}[grad log f_tgt - grad log f_z]
    ParamVector analytic = ParamVector::zeros_like(model.params);
    const auto& members = local_data.class_index.at(static_cast<std::size_t>(intermediate_z));
    if (!members.empty() && lambda_z > 0.0) {
        for (std::size_t idx : members) {
            const Tensor x = local_data.sample(idx);
            axpy(analytic, 1.0, grad_log_prob(model, x, c_tgt));
            axpy(analytic, -1.0, grad_log_prob(model, x, intermediate_z));
        }
        const double p_z = static_cast<double>(members.size()) / static_cast<double>(local_data.size());
        const double scale = lambda_z * learning_rate * p_z / static_cast<double>(members.size());
        for (auto& v : analytic.values) v *= scale;
    }
    return make_report(std::move(empirical), std::move(analytic));
}

namespace {

std::vector<std::vector<double>> feature_rows(const nn::Model& model, const data::Dataset& ds) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ds.size());
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    fl::ShardRef ref{&ds, &order};
    for (std::size_t start = 0; start < ds.size(); start += 256) {
        const std::size_t stop = std::min(ds.size(), start + 256);
        auto [batch, labels] = fl::gather_batch(ref, order, start, stop);
        const nn::ForwardResult fwd = nn::forward(model, batch, nn::Mode::infer);
        for (std::size_t r = 0; r < stop - start; ++r) {
            const double* row = fwd.logits.row(r);
            rows.emplace_back(row, row + model.num_classes());
        }
    }
    return rows;
}

/// Jacobi eigendecomposition of a symmetric matrix (small dimensions).
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors) {
    const std::size_t n = a.size();
    eigenvectors.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

}  // namespace

std::vector<std::array<double, 2>> pca2(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t n = rows.size();
    const std::size_t d = rows.front().size();
    if (d < 2) throw std::invalid_argument("pca2: need at least 2 feature dimensions");

    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (auto& m : mean) m /= static_cast<double>(n);

    // sample covariance (1/(n-1)); a single row degenerates to zeros
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    if (n > 1) {
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < d; ++i) {
                const double di = r[i] - mean[i];
                for (std::size_t j = i; j < d; ++j) cov[i][j] += di * (r[j] - mean[j]);
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                cov[i][j] /= static_cast<double>(n - 1);
                cov[j][i] = cov[i][j];
            }
        }
    }

    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;
    jacobi_eigen(cov, eigenvalues, eigenvectors);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

    std::vector<std::array<double, 2>> projected(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (int k = 0; k < 2; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                s += (rows[r][j] - mean[j]) * eigenvectors[j][order[static_cast<std::size_t>(k)]];
            }
            projected[r][static_cast<std::size_t>(k)] = s;
        }
    }
    return projected;
}

void export_logits_features(const nn::Model& model, const data::Dataset& samples,
                            const std::string& out_path, bool with_pca) {
    const auto rows = feature_rows(model, samples);
    std::vector<std::array<double, 2>> projected;
    if (with_pca) projected = pca2(rows);

    CsvWriter csv(out_path);
    std::vector<std::string> header{"sample_id", "true_class"};
    for (int j = 0; j < model.num_classes(); ++j) header.push_back("feature_" + std::to_string(j));
    if (with_pca) {
        header.push_back("pca_0");
        header.push_back("pca_1");
    }
    csv.row(header);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> cells{std::to_string(i), std::to_string(samples.true_class[i])};
        for (double v : rows[i]) cells.push_back(csv_double(v));
        if (with_pca) {
            cells.push_back(csv_double(projected[i][0]));
            cells.push_back(csv_double(projected[i][1]));
        }
        csv.row(cells);
    }
}

std::vector<ClassDensityScore> density_divergence(const std::vector<nn::Model>& local_models,
                                                  const data::Dataset& probe_set) {
    if (local_models.size() < 2) {
        throw std::invalid_argument("density_divergence: need at least 2 local models");
    }
    std::vector<ClassDensityScore> scores;
    for (int c = 0; c < probe_set.num_classes; ++c) {
        ClassDensityScore score;
        score.cls = c;
        const auto& members = probe_set.class_index[static_cast<std::size_t>(c)];
        if (members.empty()) {
            scores.push_back(score);
            continue;
        }
        score.defined = true;

        std::vector<double> densities;
        densities.reserve(local_models.size());
        for (const auto& model : local_models) {
            std::vector<std::vector<double>> feats;
            feats.reserve(members.size());
            for (std::size_t idx : members) {
                feats.push_back(nn::logits_features(model, probe_set.sample(idx)));
            }
            double total = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                for (std::size_t j = i + 1; j < feats.size(); ++j) {
                    double d2 = 0.0;
                    for (std::size_t k = 0; k < feats[i].size(); ++k) {
                        const double diff = feats[i][k] - feats[j][k];
                        d2 += diff * diff;
                    }
                    total += std::sqrt(d2);
                    ++pairs;
                }
            }
            densities.push_back(pairs == 0 ? 0.0 : total / static_cast<double>(pairs));
        }

        double mean_density = 0.0;
        for (double d : densities) mean_density += d;
        mean_density /= static_cast<double>(densities.size());
        double max_gap = 0.0;
        for (std::size_t i = 0; i < densities.size(); ++i) {
            for (std::size_t j = i + 1; j < densities.size(); ++j) {
                max_gap = std::max(max_gap, std::abs(densities[i] - densities[j]));
            }
        }
        score.score = max_gap / (mean_density + 1e-9);
        scores.push_back(score);
    }
    return scores;
}

}  // namespace fedsim::metrics
