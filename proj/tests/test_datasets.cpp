#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fedsim/dataset.hpp"
#include "fedsim/log.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"
#include "support/oracles.hpp"

using namespace fedsim;

namespace {

/// Wilson-Hilferty approximation of the chi-square upper quantile.
double chi2_critical(double df, double z) {
    const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("synth_blobs: zero spread puts samples exactly on the class centers") {
    const data::BlobGeometry geo;
    const auto centers = data::blob_centers(2, 2, geo, 42);
    const data::Dataset ds = data::synth_blobs(2, 1, 2, 0.0, 42, geo);
    REQUIRE(ds.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const int c = ds.true_class[i];
        CHECK(ds.samples.row(i)[0] == centers[static_cast<std::size_t>(c)][0]);
        CHECK(ds.samples.row(i)[1] == centers[static_cast<std::size_t>(c)][1]);
    }
}

TEST_CASE("synth_blobs: bitwise deterministic in the seed") {
    const data::Dataset a = data::synth_blobs(5, 20, 8, 1.5, 7);
    const data::Dataset b = data::synth_blobs(5, 20, 8, 1.5, 7);
    CHECK(a.samples.data == b.samples.data);
    CHECK(a.true_class == b.true_class);
    const data::Dataset c = data::synth_blobs(5, 20, 8, 1.5, 8);
    CHECK(a.samples.data != c.samples.data);
}

TEST_CASE("synth_blobs: a linear classifier separates tight clusters perfectly") {
    const data::Dataset ds = data::synth_blobs(4, 30, 6, 0.05, 3, {.radius = 4.0, .colocate = {}});
    nn::Model model = nn::build_model(nn::mlp_architecture(6, {}, 4), 3);
    auto opt = nn::OptimizerState::sgd(0.5);

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    fl::ShardRef ref{&ds, &order};
    auto [batch, labels] = fl::gather_batch(ref, order, 0, order.size());
    for (int step = 0; step < 200; ++step) nn::train_step(model, opt, batch, labels);

    const auto fwd = nn::forward(model, batch);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const double* row = fwd.probs.row(r);
        if (static_cast<int>(std::max_element(row, row + 4) - row) == ds.true_class[r]) ++correct;
    }
    CHECK(correct == ds.size());
}

TEST_CASE("synth_blobs_split: train and test share centers but not samples") {
    const auto tt = data::synth_blobs_split(3, 10, 5, 4, 0.5, 11);
    CHECK(tt.train.size() == 30);
    CHECK(tt.test.size() == 15);
    // same stream: the test draws continue after the train draws, so the
    // full generation at per_class 15 reproduces train followed by test
    const data::Dataset full = data::synth_blobs(3, 15, 4, 0.5, 11);
    CHECK(std::vector<double>(full.samples.data.begin(), full.samples.data.begin() + 40) ==
          std::vector<double>(tt.train.samples.data.begin(), tt.train.samples.data.begin() + 40));
}

TEST_CASE("load_idx: hand-written fixture round-trips") {
    const std::string img_path = temp_path("fedsim_idx_images");
    const std::string lab_path = temp_path("fedsim_idx_labels");
    std::vector<std::vector<unsigned char>> images(2, std::vector<unsigned char>(28 * 28, 0));
    images[0][0] = 255;
    images[0][28 * 28 - 1] = 128;
    images[1][5] = 7;
    oracles::write_idx_fixture(img_path, lab_path, images, 28, 28, {3, 9});

    const data::Dataset ds = data::load_idx(img_path, lab_path);
    CHECK(ds.samples.shape == std::vector<int>{2, 1, 28, 28});
    CHECK(ds.true_class == std::vector<int>{3, 9});
    CHECK(ds.samples.data[0] == 1.0);
    CHECK(ds.samples.data[28 * 28 - 1] == 128.0 / 255.0);
    CHECK(ds.samples.data[28 * 28 + 5] == 7.0 / 255.0);

    // bit-exact round trip of the pixel bytes
    for (std::size_t i = 0; i < 2 * 28 * 28; ++i) {
        const auto byte = static_cast<unsigned char>(std::lround(ds.samples.data[i] * 255.0));
        CHECK(byte == images[i / (28 * 28)][i % (28 * 28)]);
    }
    std::remove(img_path.c_str());
    std::remove(lab_path.c_str());
}

TEST_CASE("load_idx: bad magic and count mismatches raise distinct errors") {
    const std::string img_path = temp_path("fedsim_idx_bad_images");
    const std::string lab_path = temp_path("fedsim_idx_bad_labels");
    std::vector<std::vector<unsigned char>> images(2, std::vector<unsigned char>(4, 0));

    oracles::write_idx_fixture(img_path, lab_path, images, 2, 2, {1, 0}, 0xdeadbeefu);
    CHECK_THROWS_WITH_AS(data::load_idx(img_path, lab_path), doctest::Contains("bad magic"),
                         std::runtime_error);

    oracles::write_idx_fixture(img_path, lab_path, images, 2, 2, {1, 0, 1});
    CHECK_THROWS_WITH_AS(data::load_idx(img_path, lab_path), doctest::Contains("count mismatch"),
                         std::runtime_error);

    // truncated pixel data (header claims 5 images, bytes for 2)
    oracles::write_idx_fixture(img_path, lab_path, images, 2, 2, {1, 0, 1, 1, 0}, 0x00000803u,
                               0x00000801u, 5);
    CHECK_THROWS_WITH_AS(data::load_idx(img_path, lab_path), doctest::Contains("truncated"),
                         std::runtime_error);

    std::remove(img_path.c_str());
    std::remove(lab_path.c_str());
}

TEST_CASE("partition_iid: balanced shards and class counts") {
    const data::Dataset ds = data::synth_blobs(10, 10, 3, 1.0, 5);  // n = 100
    const data::Partition part = data::partition_iid(ds, 20, 9);
    part.validate(ds.size());
    for (const auto& shard : part.shards) {
        CHECK(shard.size() == 5);
        std::vector<int> per_class(10, 0);
        for (std::size_t idx : shard) ++per_class[static_cast<std::size_t>(ds.true_class[idx])];
        for (int count : per_class) CHECK(count <= 1);
    }
}

TEST_CASE("partition_iid: one client gets everything") {
    const data::Dataset ds = data::synth_blobs(3, 7, 2, 1.0, 5);
    const data::Partition part = data::partition_iid(ds, 1, 1);
    REQUIRE(part.shards.size() == 1);
    CHECK(part.shards[0].size() == ds.size());
}

TEST_CASE("partition_iid: too many clients fails") {
    const data::Dataset ds = data::synth_blobs(2, 2, 2, 1.0, 5);
    CHECK_THROWS_AS(data::partition_iid(ds, 5, 1), std::invalid_argument);
}

TEST_CASE("partition_iid: per-class counts pass a uniformity chi-square over 50 seeds") {
    const data::Dataset ds = data::synth_blobs(10, 95, 4, 1.0, 2);  // 950 samples
    const int clients = 10;
    const double expected = 95.0 / clients;
    const double critical = chi2_critical(10.0 * clients - 1.0, 2.326348);  // alpha = 0.01
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const data::Partition part = data::partition_iid(ds, clients, seed);
        double stat = 0.0;
        for (const auto& shard : part.shards) {
            std::vector<int> per_class(10, 0);
            for (std::size_t idx : shard) ++per_class[static_cast<std::size_t>(ds.true_class[idx])];
            for (int count : per_class) {
                stat += (count - expected) * (count - expected) / expected;
            }
        }
        CHECK(stat < critical);
    }
}

TEST_CASE("partition_dirichlet: huge beta approaches the uniform split") {
    const data::Dataset ds = data::synth_blobs(5, 400, 3, 1.0, 6);
    const int clients = 4;
    const data::Partition part = data::partition_dirichlet(ds, clients, 1e6, 13);
    part.validate(ds.size());
    for (const auto& shard : part.shards) {
        std::vector<int> per_class(5, 0);
        for (std::size_t idx : shard) ++per_class[static_cast<std::size_t>(ds.true_class[idx])];
        for (int count : per_class) {
            CHECK(std::abs(count / 400.0 - 1.0 / clients) < 0.02);
        }
    }
}

TEST_CASE("partition_dirichlet: invariants hold for every seed") {
    const data::Dataset ds = data::synth_blobs(6, 30, 3, 1.0, 20);
    ScopedLogSilence quiet;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const data::Partition part = data::partition_dirichlet(ds, 8, 0.5, seed);
        part.validate(ds.size());
    }
}

TEST_CASE("partition_iid: invariants hold for every seed") {
    const data::Dataset ds = data::synth_blobs(6, 31, 3, 1.0, 21);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const data::Partition part = data::partition_iid(ds, 7, seed);
        part.validate(ds.size());
        std::size_t mn = ds.size(), mx = 0;
        for (const auto& shard : part.shards) {
            mn = std::min(mn, shard.size());
            mx = std::max(mx, shard.size());
        }
        CHECK(mx - mn <= 1);
    }
}

TEST_CASE("partition_dirichlet: empirical mean of proportions is 1/k") {
    const data::Dataset ds = data::synth_blobs(2, 500, 2, 1.0, 3);
    const int clients = 20;
    ScopedLogSilence quiet;
    double total = 0.0;
    const int seeds = 200;
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(seeds); ++seed) {
        const data::Partition part = data::partition_dirichlet(ds, clients, 0.5, seed);
        total += static_cast<double>(part.shards[0].size()) / static_cast<double>(ds.size());
    }
    const double mean = total / seeds;
    // marginal variance of Dir_k(0.5) is (1/k)(1-1/k)/(k*0.5+1)
    const double var = (1.0 / clients) * (1.0 - 1.0 / clients) / (clients * 0.5 + 1.0);
    const double se = std::sqrt(var / seeds);
    CHECK(std::abs(mean - 1.0 / clients) < 3.0 * se + 1e-3);
}

TEST_CASE("dirichlet sampler matches Dirichlet moments") {
    // Direct draws from the sampler (the partitioner consumes these); mean
    // and variance of a component against the analytic Beta marginal.
    for (double beta : {0.5, 1.0}) {
        const int k = 10;
        const int draws = 1000;
        Rng rng(9000 + static_cast<std::uint64_t>(beta * 10));
        std::vector<double> xs;
        xs.reserve(draws);
        for (int i = 0; i < draws; ++i) xs.push_back(rng.dirichlet(beta, k)[0]);

        const double analytic_mean = 1.0 / k;
        const double analytic_var = (1.0 / k) * (1.0 - 1.0 / k) / (k * beta + 1.0);

        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= draws;
        CHECK(std::abs(mean - analytic_mean) < 3.0 * std::sqrt(analytic_var / draws));

        // batched variance estimate with an empirical standard error
        const int batches = 10;
        std::vector<double> batch_vars;
        for (int b = 0; b < batches; ++b) {
            double bm = 0.0;
            for (int i = 0; i < draws / batches; ++i) bm += xs[static_cast<std::size_t>(b * 100 + i)];
            bm /= draws / batches;
            double bv = 0.0;
            for (int i = 0; i < draws / batches; ++i) {
                const double d = xs[static_cast<std::size_t>(b * 100 + i)] - bm;
                bv += d * d;
            }
            batch_vars.push_back(bv / (draws / batches - 1));
        }
        double var_mean = 0.0;
        for (double v : batch_vars) var_mean += v;
        var_mean /= batches;
        double var_se = 0.0;
        for (double v : batch_vars) var_se += (v - var_mean) * (v - var_mean);
        var_se = std::sqrt(var_se / (batches - 1) / batches);
        CHECK(std::abs(var_mean - analytic_var) < 3.0 * var_se);
    }
}

TEST_CASE("colocated blob centers are pulled toward the anchor") {
    data::BlobGeometry geo;
    geo.colocate.push_back({.cls = 2, .anchor = 0, .closeness = 1.0});
    const auto centers = data::blob_centers(4, 3, geo, 77);
    CHECK(centers[2] == centers[0]);

    geo.colocate[0].closeness = 0.5;
    const auto base = data::blob_centers(4, 3, {}, 77);
    const auto half = data::blob_centers(4, 3, geo, 77);
    for (int d = 0; d < 3; ++d) {
        CHECK(half[2][static_cast<std::size_t>(d)] ==
              doctest::Approx(0.5 * (base[2][static_cast<std::size_t>(d)] +
                                     base[0][static_cast<std::size_t>(d)])).epsilon(1e-12));
    }
}

TEST_CASE("subset preserves labels and class grouping") {
    data::Dataset ds = data::synth_blobs(3, 4, 2, 1.0, 30);
    ds.labels[2] = SoftLabel(std::vector<double>{0.25, 0.5, 0.25});
    const data::Dataset sub = data::subset(ds, {0, 2, 5});
    CHECK(sub.size() == 3);
    CHECK(sub.true_class[0] == ds.true_class[0]);
    CHECK(sub.labels[1].probs == ds.labels[2].probs);
    sub.samples.validate("subset");
}
