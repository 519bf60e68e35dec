#include "fedsim/botpa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "fedsim/fl_runtime.hpp"
#include "fedsim/log.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::botpa {

void BotpaConfig::validate(int num_classes) const {
    if (num_intermediate < 1) throw std::invalid_argument("botpa: num_intermediate must be >= 1");
    if (num_intermediate > num_classes - 2) {
        throw std::invalid_argument("botpa: num_intermediate " + std::to_string(num_intermediate) +
                                    " exceeds num_classes - 2 = " + std::to_string(num_classes - 2));
    }
    if (surrogate_epochs < 1) throw std::invalid_argument("botpa: surrogate_epochs must be >= 1");
    if (contrib_checkpoint_epoch < 0 || contrib_checkpoint_epoch > surrogate_epochs) {
        throw std::invalid_argument("botpa: contrib_checkpoint_epoch must be in [1, surrogate_epochs]");
    }
    if (per_class_sample_cap < 0) throw std::invalid_argument("botpa: per_class_sample_cap must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("botpa: batch_size must be >= 1");
}

SurrogatePair train_surrogate(const data::Dataset& malicious_flipped, const nn::Architecture& arch,
                              const BotpaConfig& cfg) {
    if (malicious_flipped.size() == 0) {
        throw std::invalid_argument("train_surrogate: no malicious samples");
    }
    const int checkpoint = cfg.checkpoint_epoch();

    nn::Model model = nn::build_model(arch, mix_seed(cfg.seed, 0x737572ULL));
    nn::OptimizerState opt = cfg.optimizer_template.fresh();
    Rng rng(mix_seed(cfg.seed, 0x7375722dULL));

    SurrogatePair pair{model, model};
    std::vector<std::size_t> order(malicious_flipped.size());
    std::iota(order.begin(), order.end(), 0);
    fl::ShardRef ref{&malicious_flipped, &order};

    for (int epoch = 1; epoch <= cfg.surrogate_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(),
                                              start + static_cast<std::size_t>(cfg.batch_size));
            auto [batch, labels] = fl::gather_batch(ref, order, start, stop);
            const double loss = nn::train_step(model, opt, batch, labels);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("train_surrogate: loss diverged at epoch " +
                                         std::to_string(epoch));
            }
        }
        if (epoch == checkpoint) pair.checkpoint_mid = model;
    }
    pair.converged = model;
    return pair;
}

double is_contrib(const nn::Model& model, const Tensor& x, const SoftLabel& label_x,
                  const Tensor& x_prime, const SoftLabel& label_x_prime) {
    const ParamVector ga = nn::per_sample_loss_gradient(model, x, label_x);
    const ParamVector gb = nn::per_sample_loss_gradient(model, x_prime, label_x_prime);
    if (l2_norm(ga) < 1e-12 || l2_norm(gb) < 1e-12) {
        log_warn("is_contrib: vanishing gradient, similarity defined as 0");
        return 0.0;
    }
    return cosine_similarity(ga, gb);
}

namespace {

std::vector<std::size_t> capped_members(const data::Dataset& ds, int cls, int cap,
                                        std::uint64_t seed) {
    const auto& members = ds.class_index.at(static_cast<std::size_t>(cls));
    if (cap <= 0 || members.size() <= static_cast<std::size_t>(cap)) return members;
    Rng rng(mix_seed(seed, 0x636170ULL, static_cast<std::uint64_t>(cls)));
    auto picks = rng.sample_without_replacement(members.size(), static_cast<std::size_t>(cap));
    std::sort(picks.begin(), picks.end());
    std::vector<std::size_t> out;
    out.reserve(picks.size());
    for (std::size_t p : picks) out.push_back(members[p]);
    return out;
}

/// Unit-normalized per-sample loss gradients for the (capped) members of a
/// class; zero-norm gradients stay zero so their pair similarity is 0.
/// `loss_label`, when set, replaces every sample's label in the gradient.
std::vector<ParamVector> unit_gradients(const nn::Model& model, const data::Dataset& ds,
                                        const std::vector<std::size_t>& members,
                                        std::optional<int> loss_label = std::nullopt) {
    std::vector<ParamVector> grads;
    grads.reserve(members.size());
    for (std::size_t idx : members) {
        const SoftLabel label =
            loss_label ? SoftLabel::hard(*loss_label, ds.num_classes) : ds.labels[idx];
        ParamVector g = nn::per_sample_loss_gradient(model, ds.sample(idx), label);
        const double norm = l2_norm(g);
        if (norm < 1e-12) {
            log_warn("cs_contrib: vanishing gradient for sample " + std::to_string(idx));
            for (auto& v : g.values) v = 0.0;
        } else {
            for (auto& v : g.values) v /= norm;
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

std::vector<std::vector<double>> unit_features(const nn::Model& model, const data::Dataset& ds,
                                               const std::vector<std::size_t>& members) {
    std::vector<std::vector<double>> features;
    features.reserve(members.size());
    for (std::size_t idx : members) {
        std::vector<double> f = nn::logits_features(model, ds.sample(idx));
        double norm = 0.0;
        for (double v : f) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            log_warn("cs_ftrs: zero-norm feature vector for sample " + std::to_string(idx));
            std::fill(f.begin(), f.end(), 0.0);
        } else {
            for (auto& v : f) v /= norm;
        }
        features.push_back(std::move(f));
    }
    return features;
}

double mean_pair_dot(const std::vector<ParamVector>& a, const std::vector<ParamVector>& b) {
    double total = 0.0;
    for (const auto& ga : a)
        for (const auto& gb : b) total += dot(ga, gb);
    return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double cs_contrib(const nn::Model& model, const data::Dataset& ds, int c1, int c2, int cap,
                  std::uint64_t seed, std::optional<int> loss_label) {
    const auto m1 = capped_members(ds, c1, cap, seed);
    const auto m2 = capped_members(ds, c2, cap, seed);
    if (m1.empty() || m2.empty()) {
        throw std::invalid_argument("cs_contrib: class " + std::to_string(m1.empty() ? c1 : c2) +
                                    " has no samples");
    }
    const auto g1 = unit_gradients(model, ds, m1, loss_label);
    const auto g2 = c1 == c2 ? g1 : unit_gradients(model, ds, m2, loss_label);
    return mean_pair_dot(g1, g2);
}

std::vector<int> select_intermediate_classes(const nn::Model& model_mid, const data::Dataset& ds,
                                             int c_src, int c_tgt, int N, int cap,
                                             std::uint64_t seed) {
    if (ds.num_classes < 3) {
        throw std::invalid_argument("select_intermediate_classes: need at least 3 classes");
    }
    if (c_src == c_tgt) throw std::invalid_argument("select_intermediate_classes: source equals target");
    if (N < 1 || N > ds.num_classes - 2) {
        throw std::invalid_argument("select_intermediate_classes: N must be in [1, num_classes - 2]");
    }

    const auto src_members = capped_members(ds, c_src, cap, seed);
    if (src_members.empty()) {
        throw std::invalid_argument("select_intermediate_classes: source class has no samples");
    }
    const auto src_grads = unit_gradients(model_mid, ds, src_members, c_tgt);

    std::vector<std::pair<int, double>> scored;
    for (int c = 0; c < ds.num_classes; ++c) {
        if (c == c_src || c == c_tgt) continue;
        const auto members = capped_members(ds, c, cap, seed);
        if (members.empty()) {
            log_warn("select_intermediate_classes: class " + std::to_string(c) +
                     " has no samples in the malicious data, skipped");
            continue;
        }
        const auto grads = unit_gradients(model_mid, ds, members, c_tgt);
        scored.emplace_back(c, mean_pair_dot(src_grads, grads));
    }
    if (static_cast<int>(scored.size()) < N) {
        throw std::invalid_argument("select_intermediate_classes: only " +
                                    std::to_string(scored.size()) + " candidate classes for N=" +
                                    std::to_string(N));
    }

    // Highest CS_contrib first; ties resolved to the lowest class id.
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<int> selected;
    for (int i = 0; i < N; ++i) {
        if (scored[static_cast<std::size_t>(i)].second <= 0.0) {
            log_warn("select_intermediate_classes: class " +
                     std::to_string(scored[static_cast<std::size_t>(i)].first) +
                     " selected with non-positive score " +
                     std::to_string(scored[static_cast<std::size_t>(i)].second));
        }
        selected.push_back(scored[static_cast<std::size_t>(i)].first);
    }
    return selected;
}

double is_ftrs(const nn::Model& model_converged, const Tensor& x, const Tensor& x_prime) {
    const std::vector<double> fa = nn::logits_features(model_converged, x);
    const std::vector<double> fb = nn::logits_features(model_converged, x_prime);
    double na = 0.0, nb = 0.0, d = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        na += fa[i] * fa[i];
        nb += fb[i] * fb[i];
        d += fa[i] * fb[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) {
        log_warn("is_ftrs: zero-norm feature vector, similarity defined as 0");
        return 0.0;
    }
    return d / (na * nb);
}

double cs_ftrs(const nn::Model& model_converged, const data::Dataset& ds, int c1, int c2, int cap,
               std::uint64_t seed) {
    const auto m1 = capped_members(ds, c1, cap, seed);
    const auto m2 = capped_members(ds, c2, cap, seed);
    if (m1.empty() || m2.empty()) {
        throw std::invalid_argument("cs_ftrs: class " + std::to_string(m1.empty() ? c1 : c2) +
                                    " has no samples");
    }
    const auto f1 = unit_features(model_converged, ds, m1);
    const auto f2 = c1 == c2 ? f1 : unit_features(model_converged, ds, m2);
    double total = 0.0;
    for (const auto& a : f1) {
        for (const auto& b : f2) {
            double d = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) d += a[k] * b[k];
            total += d;
        }
    }
    return total / (static_cast<double>(f1.size()) * static_cast<double>(f2.size()));
}

SoftLabel craft_soft_label(double cs, int c_z, int c_tgt, int num_classes) {
    if (c_z == c_tgt) throw std::invalid_argument("craft_soft_label: intermediate class equals target");
    if (c_z < 0 || c_z >= num_classes || c_tgt < 0 || c_tgt >= num_classes) {
        throw std::invalid_argument("craft_soft_label: class id out of range");
    }
    if (cs < -1.0 || cs > 1.0) {
        throw std::invalid_argument("craft_soft_label: similarity " + std::to_string(cs) +
                                    " outside [-1, 1]");
    }
    if (cs <= 0.0) return SoftLabel::hard(c_z, num_classes);
    SoftLabel label;
    label.probs.assign(static_cast<std::size_t>(num_classes), 0.0);
    label.probs[static_cast<std::size_t>(c_tgt)] = cs;
    label.probs[static_cast<std::size_t>(c_z)] = 1.0 - cs;
    return label;
}

MutationReport apply_botpa(data::Dataset& ds,
                           const std::vector<std::vector<std::size_t>>& malicious_shards,
                           const AmplifierSet& amplifier) {
    const std::set<int> classes(amplifier.classes.begin(), amplifier.classes.end());
    MutationReport report;
    for (const auto& shard : malicious_shards) {
        for (std::size_t idx : shard) {
            const int cls = ds.true_class.at(idx);
            if (!classes.count(cls)) continue;
            const SoftLabel& crafted = amplifier.crafted_labels.at(cls);
            if (ds.labels[idx] == crafted) ++report.unchanged;
            ds.labels[idx] = crafted;
            ++report.total_relabeled;
            ++report.per_class[cls];
        }
    }
    return report;
}

PipelineResult run_pipeline(data::Dataset& poisoned,
                            const std::vector<std::vector<std::size_t>>& malicious_shards,
                            const nn::Architecture& fl_arch, const attacks::AttackConfig& attack,
                            const BotpaConfig& cfg) {
    cfg.validate(poisoned.num_classes);

    // Pool the malicious shards into the attacker's centralized dataset.
    std::vector<std::size_t> pooled;
    for (const auto& shard : malicious_shards) pooled.insert(pooled.end(), shard.begin(), shard.end());
    std::sort(pooled.begin(), pooled.end());
    data::Dataset attacker_view = data::subset(poisoned, pooled);

    const nn::Architecture& arch = cfg.surrogate_identical ? fl_arch : cfg.surrogate_custom;
    if (!cfg.surrogate_identical && cfg.surrogate_custom.num_classes != poisoned.num_classes) {
        throw std::invalid_argument("botpa: custom surrogate num_classes must match the task");
    }

    PipelineResult result;
    result.surrogate = train_surrogate(attacker_view, arch, cfg);

    // Contribution-degree scores for every candidate class (the same scores
    // the selection ranks), kept for the emitted artifacts.
    for (int c = 0; c < attacker_view.num_classes; ++c) {
        if (c == attack.source_class || c == attack.target_class) continue;
        if (attacker_view.class_index[static_cast<std::size_t>(c)].empty()) continue;
        result.contrib_scores.emplace_back(
            c, cs_contrib(result.surrogate.checkpoint_mid, attacker_view, attack.source_class, c,
                          cfg.per_class_sample_cap, cfg.seed, attack.target_class));
    }
    result.amplifier.classes = select_intermediate_classes(
        result.surrogate.checkpoint_mid, attacker_view, attack.source_class, attack.target_class,
        cfg.num_intermediate, cfg.per_class_sample_cap, cfg.seed);

    for (int z : result.amplifier.classes) {
        const double score = cs_ftrs(result.surrogate.converged, attacker_view, attack.source_class,
                                     z, cfg.per_class_sample_cap, cfg.seed);
        result.amplifier.ftrs_scores[z] = score;
        result.amplifier.crafted_labels[z] =
            craft_soft_label(score, z, attack.target_class, poisoned.num_classes);
    }

    result.amplifier.sample_indices.clear();
    const std::set<int> chosen(result.amplifier.classes.begin(), result.amplifier.classes.end());
    for (const auto& shard : malicious_shards) {
        std::vector<std::size_t> members;
        for (std::size_t idx : shard) {
            if (chosen.count(poisoned.true_class[idx])) members.push_back(idx);
        }
        result.amplifier.sample_indices.push_back(std::move(members));
    }

    result.report = apply_botpa(poisoned, malicious_shards, result.amplifier);
    return result;
}

int select_n_sweep(const std::vector<int>& n_values, const std::function<double(int)>& run_ri_asr,
                   std::vector<std::pair<int, double>>* evaluated) {
    if (n_values.empty()) throw std::invalid_argument("select_n_sweep: no candidate N values");
    int best_n = n_values.front();
    double best_ri = -std::numeric_limits<double>::infinity();
    double prev_ri = best_ri;
    for (int n : n_values) {
        const double ri = run_ri_asr(n);
        if (evaluated) evaluated->emplace_back(n, ri);
        if (ri > best_ri) {  // strict: flat sequences keep the smallest N
            best_ri = ri;
            best_n = n;
        }
        if (ri < prev_ri) break;  // first decline ends the sweep
        prev_ri = ri;
    }
    return best_n;
}

}  // namespace fedsim::botpa
