#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim::data {

enum class Scheme { iid, dirichlet };

struct Partition {
    std::vector<std::vector<std::size_t>> shards;  // per-client sample indices
    Scheme scheme = Scheme::iid;
    double beta = 0.0;

    int clients() const { return static_cast<int>(shards.size()); }

    /// Shards are disjoint and cover [0, n).
    void validate(std::size_t n) const;
};

/// Uniform random assignment: shard sizes differ by at most 1, and so do
/// per-class counts across clients.
Partition partition_iid(const Dataset& ds, int clients, std::uint64_t seed);

/// Per-class proportion split with proportions ~ Dir_k(beta); integer counts
/// by largest-remainder rounding. Empty shards are allowed (logged).
Partition partition_dirichlet(const Dataset& ds, int clients, double beta, std::uint64_t seed);

}  // namespace fedsim::data
