#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/fl_runtime.hpp"
#include "fedsim/param.hpp"

namespace fedsim::agg {

enum class AggKind { fedavg, krum, multi_krum, median, trimmed_mean, flame };

std::string agg_kind_name(AggKind kind);
AggKind agg_kind_from_name(const std::string& name);

struct AggregatorSpec {
    AggKind kind = AggKind::fedavg;
    int f_byzantine = 0;        // Krum family
    int m_select = 1;           // Multi-Krum
    double trim_fraction = 0.0; // Trimmed Mean
    double flame_lambda = 1e-3; // Flame noise scale

    std::string summary() const;
};

/// Sample-size-weighted mean of deltas.
ParamVector fedavg(const std::vector<fl::ClientUpdate>& updates);

/// Krum score: sum of squared L2 distances to the n-f-2 nearest other
/// updates. Returns the argmin (ties -> lowest index) and its delta.
/// Requires n >= 2f+3.
std::pair<std::size_t, ParamVector> krum(const std::vector<fl::ClientUpdate>& updates, int f);

/// The m lowest-score updates by Krum score; output is their sample-size
/// weighted mean.
std::pair<std::vector<std::size_t>, ParamVector> multi_krum(const std::vector<fl::ClientUpdate>& updates,
                                                            int f, int m);

/// Coordinate-wise median; even n takes the midpoint of the two central
/// order statistics.
ParamVector coordinate_median(const std::vector<fl::ClientUpdate>& updates);

/// Per-coordinate mean after removing floor(trim_fraction*n) values from
/// each tail.
ParamVector trimmed_mean(const std::vector<fl::ClientUpdate>& updates, double trim_fraction);

struct FlameResult {
    ParamVector delta;
    std::vector<std::size_t> kept;  // indices admitted by the filter
    double clip_bound = 0.0;        // median norm S
};

/// Three phases: cosine-distance density filter (complete-linkage
/// agglomeration down to two clusters; the larger is admitted when it has
/// >= floor(n/2)+1 members, otherwise all updates are kept), clipping to
/// the median norm, and seeded Gaussian noise with sigma = lambda_noise * S.
FlameResult flame(const std::vector<fl::ClientUpdate>& updates, double lambda_noise,
                  std::uint64_t seed);

struct AggregateResult {
    ParamVector delta;
    std::vector<std::size_t> selected;  // indices chosen by selective rules (empty: all used)
};

/// Dispatch on spec.kind; `noise_seed` only feeds Flame.
AggregateResult aggregate(const AggregatorSpec& spec, const std::vector<fl::ClientUpdate>& updates,
                          std::uint64_t noise_seed);

}  // namespace fedsim::agg
