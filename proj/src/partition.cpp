#include "fedsim/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedsim/log.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::data {

void Partition::validate(std::size_t n) const {
    std::vector<char> seen(n, 0);
    std::size_t covered = 0;
    for (const auto& shard : shards) {
        for (std::size_t idx : shard) {
            if (idx >= n) throw std::logic_error("Partition: index out of range");
            if (seen[idx]) throw std::logic_error("Partition: shards overlap at index " + std::to_string(idx));
            seen[idx] = 1;
            ++covered;
        }
    }
    if (covered != n) {
        throw std::logic_error("Partition: shards cover " + std::to_string(covered) + " of " +
                               std::to_string(n) + " samples");
    }
}

Partition partition_iid(const Dataset& ds, int clients, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (clients < 1) throw std::invalid_argument("partition_iid: need at least 1 client");
    if (static_cast<std::size_t>(clients) > n) {
        throw std::invalid_argument("partition_iid: " + std::to_string(clients) + " clients exceed " +
                                    std::to_string(n) + " samples");
    }
    Partition part;
    part.scheme = Scheme::iid;
    part.shards.assign(static_cast<std::size_t>(clients), {});

    // Deal each class round-robin; rotating the starting client between
    // classes keeps total shard sizes within 1 of each other as well.
    Rng rng(mix_seed(seed, 0x696964ULL));
    std::size_t start = 0;
    for (int c = 0; c < ds.num_classes; ++c) {
        auto members = ds.class_index[static_cast<std::size_t>(c)];
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j) {
            part.shards[(start + j) % static_cast<std::size_t>(clients)].push_back(members[j]);
        }
        start = (start + members.size()) % static_cast<std::size_t>(clients);
    }
    for (auto& shard : part.shards) std::sort(shard.begin(), shard.end());
    return part;
}

Partition partition_dirichlet(const Dataset& ds, int clients, double beta, std::uint64_t seed) {
    if (beta <= 0.0) throw std::invalid_argument("partition_dirichlet: beta must be > 0");
    if (clients < 1) throw std::invalid_argument("partition_dirichlet: need at least 1 client");

    Partition part;
    part.scheme = Scheme::dirichlet;
    part.beta = beta;
    part.shards.assign(static_cast<std::size_t>(clients), {});

    for (int c = 0; c < ds.num_classes; ++c) {
        Rng rng(mix_seed(seed, 0x646972ULL, static_cast<std::uint64_t>(c)));
        auto members = ds.class_index[static_cast<std::size_t>(c)];
        rng.shuffle(members);
        const auto proportions = rng.dirichlet(beta, clients);

        // Largest-remainder rounding preserves the class total exactly.
        const auto n_c = members.size();
        std::vector<std::size_t> counts(static_cast<std::size_t>(clients), 0);
        std::vector<std::pair<double, std::size_t>> remainders;  // (-fraction, client)
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(clients); ++k) {
            const double exact = proportions[k] * static_cast<double>(n_c);
            counts[k] = static_cast<std::size_t>(exact);
            assigned += counts[k];
            remainders.emplace_back(-(exact - static_cast<double>(counts[k])), k);
        }
        std::sort(remainders.begin(), remainders.end());
        for (std::size_t r = 0; assigned < n_c; ++r, ++assigned) {
            ++counts[remainders[r % remainders.size()].second];
        }

        std::size_t pos = 0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(clients); ++k) {
            for (std::size_t j = 0; j < counts[k]; ++j) part.shards[k].push_back(members[pos++]);
        }
    }

    for (std::size_t k = 0; k < part.shards.size(); ++k) {
        std::sort(part.shards[k].begin(), part.shards[k].end());
        if (part.shards[k].empty()) {
            log_warn("dirichlet partition left client " + std::to_string(k) + " without samples");
        }
    }
    return part;
}

}  // namespace fedsim::data
