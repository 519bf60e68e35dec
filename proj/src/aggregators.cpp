#include "fedsim/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim::agg {

std::string agg_kind_name(AggKind kind) {
    switch (kind) {
        case AggKind::fedavg: return "fedavg";
        case AggKind::krum: return "krum";
        case AggKind::multi_krum: return "multi_krum";
        case AggKind::median: return "median";
        case AggKind::trimmed_mean: return "trimmed_mean";
        case AggKind::flame: return "flame";
    }
    return "unknown";
}

AggKind agg_kind_from_name(const std::string& name) {
    if (name == "fedavg") return AggKind::fedavg;
    if (name == "krum") return AggKind::krum;
    if (name == "multi_krum") return AggKind::multi_krum;
    if (name == "median") return AggKind::median;
    if (name == "trimmed_mean") return AggKind::trimmed_mean;
    if (name == "flame") return AggKind::flame;
    throw std::invalid_argument("unknown aggregator: " + name);
}

std::string AggregatorSpec::summary() const {
    std::string s = agg_kind_name(kind);
    switch (kind) {
        case AggKind::krum: s += "(f=" + std::to_string(f_byzantine) + ")"; break;
        case AggKind::multi_krum:
            s += "(f=" + std::to_string(f_byzantine) + ",m=" + std::to_string(m_select) + ")";
            break;
        case AggKind::trimmed_mean: s += "(trim=" + std::to_string(trim_fraction) + ")"; break;
        case AggKind::flame: s += "(lambda=" + std::to_string(flame_lambda) + ")"; break;
        default: break;
    }
    return s;
}

namespace {

void require_nonempty(const std::vector<fl::ClientUpdate>& updates, const char* who) {
    if (updates.empty()) throw std::invalid_argument(std::string(who) + ": no updates");
    const std::size_t dim = updates.front().delta.size();
    for (const auto& u : updates) {
        if (u.delta.size() != dim) {
            throw std::invalid_argument(std::string(who) + ": update dimensionality mismatch");
        }
    }
}

ParamVector weighted_mean(const std::vector<fl::ClientUpdate>& updates,
                          const std::vector<std::size_t>& indices) {
    std::int64_t total = 0;
    for (std::size_t i : indices) total += updates[i].num_samples;
    if (total <= 0) throw std::invalid_argument("fedavg: all selected updates have zero samples");
    ParamVector out = ParamVector::zeros_like(updates[indices.front()].delta);
    for (std::size_t i : indices) {
        const double w = static_cast<double>(updates[i].num_samples) / static_cast<double>(total);
        axpy(out, w, updates[i].delta);
    }
    return out;
}

std::vector<double> krum_scores(const std::vector<fl::ClientUpdate>& updates, int f) {
    const int n = static_cast<int>(updates.size());
    if (n < 2 * f + 3) {
        throw std::invalid_argument("krum: need n >= 2f+3, got n=" + std::to_string(n) +
                                    ", f=" + std::to_string(f));
    }
    std::vector<std::vector<double>> dist2(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const ParamVector d = sub(updates[static_cast<std::size_t>(i)].delta,
                                      updates[static_cast<std::size_t>(j)].delta);
            const double d2 = dot(d, d);
            dist2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d2;
            dist2[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d2;
        }
    }
    const int neighbors = n - f - 2;
    std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(n) - 1);
        for (int j = 0; j < n; ++j) {
            if (j != i) row.push_back(dist2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        }
        std::sort(row.begin(), row.end());
        double s = 0.0;
        for (int k = 0; k < neighbors; ++k) s += row[static_cast<std::size_t>(k)];
        scores[static_cast<std::size_t>(i)] = s;
    }
    return scores;
}

}  // namespace

ParamVector fedavg(const std::vector<fl::ClientUpdate>& updates) {
    require_nonempty(updates, "fedavg");
    std::vector<std::size_t> all(updates.size());
    std::iota(all.begin(), all.end(), 0);
    return weighted_mean(updates, all);
}

std::pair<std::size_t, ParamVector> krum(const std::vector<fl::ClientUpdate>& updates, int f) {
    require_nonempty(updates, "krum");
    if (f < 0) throw std::invalid_argument("krum: f must be non-negative");
    const auto scores = krum_scores(updates, f);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] < scores[best]) best = i;  // ties keep the lowest index
    }
    return {best, updates[best].delta};
}

std::pair<std::vector<std::size_t>, ParamVector> multi_krum(const std::vector<fl::ClientUpdate>& updates,
                                                            int f, int m) {
    require_nonempty(updates, "multi_krum");
    if (m < 1) throw std::invalid_argument("multi_krum: m must be positive");
    if (m > static_cast<int>(updates.size())) {
        throw std::invalid_argument("multi_krum: m=" + std::to_string(m) + " exceeds n=" +
                                    std::to_string(updates.size()));
    }
    const auto scores = krum_scores(updates, f);
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<std::size_t> selected(order.begin(), order.begin() + m);
    std::sort(selected.begin(), selected.end());
    return {selected, weighted_mean(updates, selected)};
}

ParamVector coordinate_median(const std::vector<fl::ClientUpdate>& updates) {
    require_nonempty(updates, "median");
    const std::size_t n = updates.size();
    const std::size_t dim = updates.front().delta.size();
    ParamVector out = ParamVector::zeros_like(updates.front().delta);
    std::vector<double> column(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) column[i] = updates[i].delta.values[d];
        std::sort(column.begin(), column.end());
        out.values[d] = (n % 2 == 1) ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return out;
}

ParamVector trimmed_mean(const std::vector<fl::ClientUpdate>& updates, double trim_fraction) {
    require_nonempty(updates, "trimmed_mean");
    if (trim_fraction < 0.0 || trim_fraction >= 0.5) {
        throw std::invalid_argument("trimmed_mean: trim_fraction must be in [0, 0.5)");
    }
    const std::size_t n = updates.size();
    const auto cut = static_cast<std::size_t>(trim_fraction * static_cast<double>(n));
    if (2 * cut >= n) {
        throw std::invalid_argument("trimmed_mean: trimming " + std::to_string(cut) +
                                    " from each tail leaves nothing of n=" + std::to_string(n));
    }
    const std::size_t dim = updates.front().delta.size();
    ParamVector out = ParamVector::zeros_like(updates.front().delta);
    std::vector<double> column(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) column[i] = updates[i].delta.values[d];
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (std::size_t i = cut; i < n - cut; ++i) s += column[i];
        out.values[d] = s / static_cast<double>(n - 2 * cut);
    }
    return out;
}

FlameResult flame(const std::vector<fl::ClientUpdate>& updates, double lambda_noise,
                  std::uint64_t seed) {
    require_nonempty(updates, "flame");
    const std::size_t n = updates.size();
    if (n < 3) throw std::invalid_argument("flame: need at least 3 updates, got " + std::to_string(n));
    if (lambda_noise < 0.0) throw std::invalid_argument("flame: lambda_noise must be >= 0");

    // Phase 1: density filter. Complete-linkage agglomeration over pairwise
    // cosine distance down to two clusters; the larger one is the admitted
    // majority when it has at least floor(n/2)+1 members, otherwise keep all.
    const std::size_t min_cluster = n / 2 + 1;
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double na = l2_norm(updates[i].delta);
            const double nb = l2_norm(updates[j].delta);
            double d;
            if (updates[i].delta.values == updates[j].delta.values) d = 0.0;
            else if (na < 1e-12 && nb < 1e-12) d = 0.0;
            else if (na < 1e-12 || nb < 1e-12) d = 1.0;
            else d = std::max(0.0, 1.0 - dot(updates[i].delta, updates[j].delta) / (na * nb));
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double worst = 0.0;
        for (std::size_t i : a)
            for (std::size_t j : b) worst = std::max(worst, dist[i][j]);
        return worst;
    };
    while (clusters.size() > 2) {
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = linkage(clusters[i], clusters[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    std::vector<std::size_t> kept;
    if (clusters.size() == 2 && clusters[0].size() != clusters[1].size()) {
        kept = clusters[0].size() > clusters[1].size() ? clusters[0] : clusters[1];
    }
    if (kept.size() < min_cluster) {  // no majority cluster formed; keep everything
        kept.resize(n);
        std::iota(kept.begin(), kept.end(), 0);
    }
    std::sort(kept.begin(), kept.end());

    // Phase 2: clip to the median norm of the admitted updates.
    std::vector<double> norms;
    norms.reserve(kept.size());
    for (std::size_t i : kept) norms.push_back(l2_norm(updates[i].delta));
    std::vector<double> sorted_norms = norms;
    std::sort(sorted_norms.begin(), sorted_norms.end());
    const std::size_t m = sorted_norms.size();
    const double clip = (m % 2 == 1) ? sorted_norms[m / 2]
                                     : 0.5 * (sorted_norms[m / 2 - 1] + sorted_norms[m / 2]);

    ParamVector mean = ParamVector::zeros_like(updates.front().delta);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const double norm = norms[k];
        const double s = (norm > clip && norm > 0.0) ? clip / norm : 1.0;
        axpy(mean, s / static_cast<double>(kept.size()), updates[kept[k]].delta);
    }

    // Phase 3: seeded Gaussian noise, drawn independently of input order.
    Rng rng(mix_seed(seed, 0x666c616d65ULL));
    const double sigma = lambda_noise * clip;
    if (sigma > 0.0) {
        for (auto& v : mean.values) v += sigma * rng.normal();
    }
    return FlameResult{std::move(mean), std::move(kept), clip};
}

AggregateResult aggregate(const AggregatorSpec& spec, const std::vector<fl::ClientUpdate>& updates,
                          std::uint64_t noise_seed) {
    // Degenerate single-client round: that delta is the update whatever the
    // rule says (Krum/Flame size preconditions cannot hold).
    if (updates.size() == 1 &&
        (spec.kind == AggKind::krum || spec.kind == AggKind::multi_krum || spec.kind == AggKind::flame)) {
        return {updates.front().delta, {0}};
    }
    switch (spec.kind) {
        case AggKind::fedavg:
            return {fedavg(updates), {}};
        case AggKind::krum: {
            auto [idx, delta] = krum(updates, spec.f_byzantine);
            return {std::move(delta), {idx}};
        }
        case AggKind::multi_krum: {
            auto [selected, delta] = multi_krum(updates, spec.f_byzantine, spec.m_select);
            return {std::move(delta), std::move(selected)};
        }
        case AggKind::median:
            return {coordinate_median(updates), {}};
        case AggKind::trimmed_mean:
            return {trimmed_mean(updates, spec.trim_fraction), {}};
        case AggKind::flame: {
            auto result = flame(updates, spec.flame_lambda, noise_seed);
            return {std::move(result.delta), std::move(result.kept)};
        }
    }
    throw std::logic_error("aggregate: unhandled aggregator kind");
}

}  // namespace fedsim::agg
