#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedsim/aggregators.hpp"
#include "fedsim/rng.hpp"
#include "support/oracles.hpp"

using namespace fedsim;
using oracles::as_updates;

namespace {

std::vector<std::vector<double>> random_deltas(int n, int dim, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<std::vector<double>> deltas(static_cast<std::size_t>(n),
                                            std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& d : deltas)
        for (auto& v : d) v = scale * rng.normal();
    return deltas;
}

}  // namespace

TEST_CASE("fedavg: symmetric deltas cancel") {
    const auto result = agg::fedavg(as_updates({{1.0, -2.0}, {-1.0, 2.0}}));
    CHECK(result.values == std::vector<double>{0.0, 0.0});
}

TEST_CASE("fedavg: sample-size weighting") {
    const auto result = agg::fedavg(as_updates({{0.0}, {4.0}}, {1, 3}));
    CHECK(result.values[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("fedavg: matches the weighted-mean oracle") {
    const auto deltas = random_deltas(5, 6, 100);
    const std::vector<std::int64_t> weights{3, 1, 4, 1, 5};
    const auto expected = oracles::weighted_mean_oracle(deltas, weights);
    const auto result = agg::fedavg(as_updates(deltas, weights));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(std::abs(result.values[i] - expected[i]) < 1e-12);
    }
}

TEST_CASE("fedavg: zero total weight fails") {
    CHECK_THROWS_AS(agg::fedavg(as_updates({{1.0}}, {0})), std::invalid_argument);
}

TEST_CASE("krum: rejects the outlier and breaks ties to the lowest index") {
    const auto [idx, delta] = agg::krum(as_updates({{0.0}, {0.0}, {10.0}}), 0);
    CHECK(idx == 0);
    CHECK(delta.values[0] == 0.0);
}

TEST_CASE("krum: all identical picks index 0") {
    const auto [idx, delta] = agg::krum(as_updates({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}), 0);
    CHECK(idx == 0);
}

TEST_CASE("krum: precondition failure names n and f") {
    CHECK_THROWS_WITH_AS(agg::krum(as_updates({{0.0}, {1.0}, {2.0}}), 1),
                         doctest::Contains("n=3, f=1"), std::invalid_argument);
}

TEST_CASE("krum: matches the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto deltas = random_deltas(7, 5, seed);
        CHECK(agg::krum(as_updates(deltas), 1).first == oracles::krum_pick_oracle(deltas, 1));
    }
}

TEST_CASE("multi_krum: m=1 reduces to krum") {
    const auto deltas = random_deltas(7, 4, 7);
    const auto updates = as_updates(deltas);
    const auto [selected, delta] = agg::multi_krum(updates, 1, 1);
    const auto [kidx, kdelta] = agg::krum(updates, 1);
    REQUIRE(selected.size() == 1);
    CHECK(selected[0] == kidx);
    CHECK(delta.values == kdelta.values);
}

TEST_CASE("multi_krum: m=n with f=0 equals fedavg") {
    const auto deltas = random_deltas(5, 4, 8);
    const std::vector<std::int64_t> weights{2, 1, 1, 3, 1};
    const auto updates = as_updates(deltas, weights);
    const auto [selected, delta] = agg::multi_krum(updates, 0, 5);
    const auto avg = agg::fedavg(updates);
    CHECK(selected.size() == 5);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        CHECK(std::abs(delta.values[i] - avg.values[i]) < 1e-15);
    }
}

TEST_CASE("multi_krum: selection matches the brute-force score ordering") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto deltas = random_deltas(7, 5, 500 + seed);
        const auto scores = oracles::krum_scores_oracle(deltas, 1);
        std::vector<std::size_t> order(deltas.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        std::vector<std::size_t> expected(order.begin(), order.begin() + 3);
        std::sort(expected.begin(), expected.end());
        CHECK(agg::multi_krum(as_updates(deltas), 1, 3).first == expected);
    }
}

TEST_CASE("coordinate_median: odd and even counts") {
    CHECK(agg::coordinate_median(as_updates({{1.0}, {2.0}, {100.0}})).values[0] == 2.0);
    CHECK(agg::coordinate_median(as_updates({{1.0}, {3.0}})).values[0] == 2.0);
}

TEST_CASE("coordinate_median: matches the sort oracle exactly") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto deltas = random_deltas(6, 8, 900 + seed);
        CHECK(agg::coordinate_median(as_updates(deltas)).values == oracles::median_oracle(deltas));
    }
}

TEST_CASE("trimmed_mean: zero trim is the unweighted mean") {
    const auto deltas = random_deltas(5, 3, 31);
    const auto result = agg::trimmed_mean(as_updates(deltas), 0.0);
    for (std::size_t d = 0; d < 3; ++d) {
        double s = 0.0;
        for (const auto& v : deltas) s += v[d];
        CHECK(result.values[d] == doctest::Approx(s / 5.0).epsilon(1e-15));
    }
}

TEST_CASE("trimmed_mean: trims one tail value per side") {
    CHECK(agg::trimmed_mean(as_updates({{0.0}, {5.0}, {100.0}}), 1.0 / 3.0).values[0] == 5.0);
}

TEST_CASE("trimmed_mean: matches the sort-and-slice oracle exactly") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto deltas = random_deltas(8, 4, 1300 + seed);
        CHECK(agg::trimmed_mean(as_updates(deltas), 0.25).values ==
              oracles::trimmed_mean_oracle(deltas, 0.25));
    }
}

TEST_CASE("trimmed_mean: trim fractions of 0.5 and beyond fail") {
    // floor(frac * n) with frac < 0.5 always leaves the middle, so the
    // range check is the over-trim guard
    CHECK_THROWS_AS(agg::trimmed_mean(as_updates(random_deltas(3, 2, 1)), 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(agg::trimmed_mean(as_updates(random_deltas(3, 2, 1)), -0.1),
                    std::invalid_argument);
}

TEST_CASE("flame: a scaled-up outlier is excluded by the filter") {
    // identical benign deltas plus one update scaled by 100
    std::vector<std::vector<double>> deltas(8, {1.0, 2.0, -0.5});
    deltas.push_back({100.0, 200.0, -50.0});
    const auto result = agg::flame(as_updates(deltas), 1e-3, 5);
    CHECK(std::find(result.kept.begin(), result.kept.end(), deltas.size() - 1) == result.kept.end());
    CHECK(result.kept.size() >= deltas.size() / 2 + 1);

    // directionally deviating variant
    auto bent = random_deltas(8, 5, 77, 0.1);
    for (auto& d : bent) d[0] += 1.0;
    bent.push_back({-100.0, 30.0, 30.0, 30.0, 30.0});
    const auto result2 = agg::flame(as_updates(bent), 1e-3, 5);
    CHECK(std::find(result2.kept.begin(), result2.kept.end(), bent.size() - 1) == result2.kept.end());
}

TEST_CASE("flame: zero noise with identical updates returns that update") {
    const std::vector<double> v{0.5, -1.25, 2.0};
    const auto result = agg::flame(as_updates({v, v, v, v}), 0.0, 9);
    CHECK(result.delta.values == v);
}

TEST_CASE("flame: majority cluster matches the exhaustive oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        // 8 clustered + 2 opposite-direction deltas
        Rng rng(4000 + seed);
        std::vector<std::vector<double>> deltas;
        for (int i = 0; i < 8; ++i) {
            std::vector<double> d{1.0, 0.5, -0.25};
            for (auto& v : d) v += 0.05 * rng.normal();
            deltas.push_back(d);
        }
        for (int i = 0; i < 2; ++i) {
            std::vector<double> d{-1.0, -0.5, 0.25};
            for (auto& v : d) v += 0.05 * rng.normal();
            deltas.push_back(d);
        }
        const auto result = agg::flame(as_updates(deltas), 1e-3, seed);
        const auto expected = oracles::flame_cluster_oracle(deltas);
        CHECK(result.kept == expected);
        CHECK(result.kept == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    }
}

TEST_CASE("flame: clipping bound holds") {
    const auto deltas = random_deltas(6, 5, 88, 2.0);
    const auto no_noise = agg::flame(as_updates(deltas), 0.0, 3);
    CHECK(l2_norm(no_noise.delta) <= no_noise.clip_bound + 1e-12);

    const auto with_noise = agg::flame(as_updates(deltas), 0.1, 3);
    const double noise_norm = l2_norm(sub(with_noise.delta, no_noise.delta));
    CHECK(l2_norm(with_noise.delta) <= with_noise.clip_bound + noise_norm + 1e-12);
}

TEST_CASE("permutation of updates changes only the reported indices") {
    // continuous random values keep Krum scores tie-free
    const auto deltas = random_deltas(7, 4, 2024);
    const std::vector<std::size_t> perm{3, 0, 6, 2, 5, 1, 4};
    std::vector<std::vector<double>> permuted;
    for (std::size_t p : perm) permuted.push_back(deltas[p]);

    for (auto kind : {agg::AggKind::fedavg, agg::AggKind::krum, agg::AggKind::multi_krum,
                      agg::AggKind::median, agg::AggKind::trimmed_mean, agg::AggKind::flame}) {
        agg::AggregatorSpec spec;
        spec.kind = kind;
        spec.f_byzantine = 1;
        spec.m_select = 3;
        spec.trim_fraction = 0.2;
        spec.flame_lambda = 1e-3;
        const auto a = agg::aggregate(spec, as_updates(deltas), 42);
        const auto b = agg::aggregate(spec, as_updates(permuted), 42);
        CHECK(max_abs_diff(a.delta, b.delta) < 1e-13);
        if (kind == agg::AggKind::krum) {
            REQUIRE(a.selected.size() == 1);
            REQUIRE(b.selected.size() == 1);
            CHECK(deltas[a.selected[0]] == permuted[b.selected[0]]);
        }
    }
}

TEST_CASE("median and trimmed mean are scale-equivariant") {
    const auto deltas = random_deltas(7, 4, 99);
    for (double c : {2.0, -0.5}) {  // powers of two scale exactly
        std::vector<std::vector<double>> scaled = deltas;
        for (auto& d : scaled)
            for (auto& v : d) v *= c;
        const auto med = agg::coordinate_median(as_updates(deltas));
        const auto med_scaled = agg::coordinate_median(as_updates(scaled));
        const auto trim = agg::trimmed_mean(as_updates(deltas), 0.2);
        const auto trim_scaled = agg::trimmed_mean(as_updates(scaled), 0.2);
        for (std::size_t i = 0; i < med.size(); ++i) {
            CHECK(med_scaled.values[i] == c * med.values[i]);
            // negative scales reverse the per-coordinate sort, so the
            // retained window is summed in the opposite order
            CHECK(std::abs(trim_scaled.values[i] - c * trim.values[i]) < 1e-15);
        }
    }
}

TEST_CASE("flame: needs at least 3 updates") {
    CHECK_THROWS_AS(agg::flame(as_updates({{1.0}, {2.0}}), 1e-3, 1), std::invalid_argument);
}
