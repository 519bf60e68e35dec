#pragma once

// Independent oracles used across the test suites. These deliberately avoid
// the library's forward/backward/aggregation code paths: finite differences,
// naive dense algebra, and exhaustive scoring give a second route to every
// value the tests freeze.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "fedsim/fl_runtime.hpp"
#include "fedsim/label.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/param.hpp"
#include "fedsim/tensor.hpp"

namespace oracles {

using fedsim::ParamVector;
using fedsim::SoftLabel;
using fedsim::Tensor;

/// Central finite difference of the mean cross-entropy loss w.r.t. one
/// parameter coordinate.
inline double fd_loss_gradient(const fedsim::nn::Model& model, const Tensor& batch,
                               const std::vector<SoftLabel>& labels, std::size_t coord,
                               double h, fedsim::nn::Mode mode) {
    fedsim::nn::Model plus = model;
    plus.params.values[coord] += h;
    fedsim::nn::Model minus = model;
    minus.params.values[coord] -= h;
    const double lp = fedsim::nn::cross_entropy_loss(
        fedsim::nn::forward(plus, batch, mode).probs, labels);
    const double lm = fedsim::nn::cross_entropy_loss(
        fedsim::nn::forward(minus, batch, mode).probs, labels);
    return (lp - lm) / (2.0 * h);
}

/// Worst relative error between analytic gradient and finite differences
/// over all trainable coordinates (relative to max(|a|, |fd|, floor)).
inline double max_gradient_rel_error(const fedsim::nn::Model& model, const Tensor& batch,
                                     const std::vector<SoftLabel>& labels, double h,
                                     fedsim::nn::Mode mode, double floor = 1e-6) {
    const ParamVector grad = fedsim::nn::backward(model, batch, labels, mode).gradient;
    double worst = 0.0;
    for (const auto& seg : model.layout->segments) {
        if (!seg.trainable) continue;
        for (std::size_t i = seg.offset; i < seg.offset + seg.size; ++i) {
            const double fd = fd_loss_gradient(model, batch, labels, i, h, mode);
            const double denom = std::max({std::abs(grad.values[i]), std::abs(fd), floor});
            worst = std::max(worst, std::abs(grad.values[i] - fd) / denom);
        }
    }
    return worst;
}

/// Naive dense-layer forward: logits = W x + b, independent of the engine.
inline std::vector<double> dense_oracle(const std::vector<double>& W, const std::vector<double>& b,
                                        const std::vector<double>& x) {
    const std::size_t out = b.size();
    const std::size_t in = x.size();
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * x[i];
        y[o] = s;
    }
    return y;
}

inline std::vector<double> softmax_oracle(std::vector<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

// ---- brute-force aggregation oracles -------------------------------------

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// Krum scores from scratch: for each update, sort all other squared
/// distances and sum the closest n-f-2.
inline std::vector<double> krum_scores_oracle(const std::vector<std::vector<double>>& deltas, int f) {
    const int n = static_cast<int>(deltas.size());
    std::vector<double> scores(deltas.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> d;
        for (int j = 0; j < n; ++j) {
            if (j != i) d.push_back(sq_dist(deltas[static_cast<std::size_t>(i)],
                                            deltas[static_cast<std::size_t>(j)]));
        }
        std::sort(d.begin(), d.end());
        for (int k = 0; k < n - f - 2; ++k) scores[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(k)];
    }
    return scores;
}

inline std::size_t krum_pick_oracle(const std::vector<std::vector<double>>& deltas, int f) {
    const auto scores = krum_scores_oracle(deltas, f);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] < scores[best]) best = i;
    }
    return best;
}

inline std::vector<double> median_oracle(const std::vector<std::vector<double>>& deltas) {
    const std::size_t dim = deltas.front().size();
    std::vector<double> out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<double> col;
        for (const auto& v : deltas) col.push_back(v[d]);
        std::sort(col.begin(), col.end());
        const std::size_t n = col.size();
        out[d] = n % 2 == 1 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
    return out;
}

inline std::vector<double> trimmed_mean_oracle(const std::vector<std::vector<double>>& deltas,
                                               double frac) {
    const std::size_t dim = deltas.front().size();
    const std::size_t n = deltas.size();
    const auto cut = static_cast<std::size_t>(frac * static_cast<double>(n));
    std::vector<double> out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<double> col;
        for (const auto& v : deltas) col.push_back(v[d]);
        std::sort(col.begin(), col.end());
        double s = 0.0;
        for (std::size_t i = cut; i < n - cut; ++i) s += col[i];
        out[d] = s / static_cast<double>(n - 2 * cut);
    }
    return out;
}

inline std::vector<double> weighted_mean_oracle(const std::vector<std::vector<double>>& deltas,
                                                const std::vector<std::int64_t>& weights) {
    const std::size_t dim = deltas.front().size();
    double total = 0.0;
    for (auto w : weights) total += static_cast<double>(w);
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            out[d] += static_cast<double>(weights[i]) / total * deltas[i][d];
        }
    }
    return out;
}

/// Exhaustive majority-cosine-cluster membership at small n: every proper
/// subset of size >= floor(n/2)+1 is scored by its separation gap (smallest
/// cosine distance to the excluded updates minus the subset's own cosine
/// diameter); the best-separated subset is the admitted cluster. Ties prefer
/// larger subsets.
inline std::vector<std::size_t> flame_cluster_oracle(const std::vector<std::vector<double>>& deltas) {
    const std::size_t n = deltas.size();
    auto cos_dist = [&](std::size_t i, std::size_t j) {
        double na = 0.0, nb = 0.0, d = 0.0;
        for (std::size_t k = 0; k < deltas[i].size(); ++k) {
            na += deltas[i][k] * deltas[i][k];
            nb += deltas[j][k] * deltas[j][k];
            d += deltas[i][k] * deltas[j][k];
        }
        if (na < 1e-24 && nb < 1e-24) return 0.0;
        if (na < 1e-24 || nb < 1e-24) return 1.0;
        return 1.0 - d / (std::sqrt(na) * std::sqrt(nb));
    };
    const std::size_t min_size = n / 2 + 1;
    double best_gap = -1e300;
    std::size_t best_size = 0;
    std::vector<std::size_t> best;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<std::size_t> members, rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) members.push_back(i);
            else rest.push_back(i);
        }
        if (members.size() < min_size) continue;
        double diameter = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                diameter = std::max(diameter, cos_dist(members[a], members[b]));
            }
        }
        double separation = 1e300;
        for (std::size_t a : members) {
            for (std::size_t b : rest) separation = std::min(separation, cos_dist(a, b));
        }
        const double gap = separation - diameter;
        if (gap > best_gap || (gap == best_gap && members.size() > best_size)) {
            best_gap = gap;
            best_size = members.size();
            best = members;
        }
    }
    return best;
}

// ---- misc -----------------------------------------------------------------

inline std::vector<fedsim::fl::ClientUpdate> as_updates(const std::vector<std::vector<double>>& deltas,
                                                        std::vector<std::int64_t> weights = {}) {
    std::vector<fedsim::fl::ClientUpdate> updates;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        fedsim::fl::ClientUpdate u;
        u.client_id = static_cast<int>(i);
        u.delta = ParamVector(deltas[i]);
        u.num_samples = weights.empty() ? 1 : weights[i];
        updates.push_back(std::move(u));
    }
    return updates;
}

/// Hand-rolled big-endian IDX writer for loader fixtures.
inline void write_idx_fixture(const std::string& images_path, const std::string& labels_path,
                              const std::vector<std::vector<unsigned char>>& images, int rows,
                              int cols, const std::vector<unsigned char>& labels,
                              std::uint32_t image_magic = 0x00000803u,
                              std::uint32_t label_magic = 0x00000801u,
                              int count_override = -1) {
    auto be = [](std::ofstream& out, std::uint32_t v) {
        const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                      static_cast<unsigned char>(v >> 16),
                                      static_cast<unsigned char>(v >> 8),
                                      static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(buf), 4);
    };
    {
        std::ofstream img(images_path, std::ios::binary);
        be(img, image_magic);
        be(img, count_override >= 0 ? static_cast<std::uint32_t>(count_override)
                                    : static_cast<std::uint32_t>(images.size()));
        be(img, static_cast<std::uint32_t>(rows));
        be(img, static_cast<std::uint32_t>(cols));
        for (const auto& image : images) {
            img.write(reinterpret_cast<const char*>(image.data()),
                      static_cast<std::streamsize>(image.size()));
        }
    }
    {
        std::ofstream lab(labels_path, std::ios::binary);
        be(lab, label_magic);
        be(lab, static_cast<std::uint32_t>(labels.size()));
        lab.write(reinterpret_cast<const char*>(labels.data()),
                  static_cast<std::streamsize>(labels.size()));
    }
}

}  // namespace oracles
