// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and thresholds are pinned in code; the desk-scale
// experiment configurations are frozen JSON documents below.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/aggregators.hpp"
#include "fedsim/attacks.hpp"
#include "fedsim/botpa.hpp"
#include "fedsim/experiment.hpp"
#include "fedsim/log.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/rng.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace fedsim;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return std::string(buf);
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "fedsim_acceptance";
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------

void criterion1_gradient_correctness() {
    nn::Architecture arch;
    arch.input_shape = {2, 6, 6};
    arch.num_classes = 3;
    arch.layers = {nn::LayerSpec::Conv2d(2, 3, 3, 1, 1), nn::LayerSpec::BatchNorm(),
                   nn::LayerSpec::Relu(), nn::LayerSpec::MaxPool(2, 2), nn::LayerSpec::Flatten(),
                   nn::LayerSpec::Dense(27, 3)};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const nn::Model model = nn::build_model(arch, seed);
        Rng rng(mix_seed(seed, 0xacce97ULL));
        Tensor batch = Tensor::zeros({3, 2, 6, 6});
        for (auto& v : batch.data) v = rng.normal();
        std::vector<SoftLabel> labels;
        for (int i = 0; i < 3; ++i) {
            labels.push_back(SoftLabel::hard(static_cast<int>(rng.uniform_int(0, 2)), 3));
        }
        worst = std::max(worst, oracles::max_gradient_rel_error(model, batch, labels, 1e-5,
                                                                nn::Mode::train));
        worst = std::max(worst, oracles::max_gradient_rel_error(model, batch, labels, 1e-5,
                                                                nn::Mode::infer));
    }
    report(1, "gradient correctness for every layer type", worst < 1e-4,
           fmt("max relative error %.3e over 5 seeds, tolerance 1e-4", worst));
}

void criterion2_proposition1() {
    const auto outcomes = run_proposition_checks(20, 1e-6, "");
    double worst = 0.0;
    for (const auto& out : outcomes) worst = std::max(worst, out.p1_error);
    report(2, "weight-divergence identity, flipped labels", worst < 1e-6,
           fmt("max abs error %.3e over 20 seeds, tolerance 1e-6", worst));
}

void criterion3_proposition2() {
    const auto outcomes = run_proposition_checks(20, 1e-6, "");
    double worst = 0.0, worst_reduction = 0.0;
    for (const auto& out : outcomes) {
        worst = std::max({worst, out.p2_error_l0, out.p2_error_l04, out.p2_error_l1});
        worst_reduction = std::max(worst_reduction, out.reduction_gap);
    }
    report(3, "weight-divergence identity, soft labels (lambda 0/0.4/1)",
           worst < 1e-6 && worst_reduction < 1e-6,
           fmt("max abs error %.3e, lambda=1 reduction gap %.3e, tolerance 1e-6", worst,
               worst_reduction));
}

void criterion4_aggregator_oracles() {
    // 200 random instances, exact match against brute-force scorers.
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(mix_seed(seed, 0xa99ULL));
        const int n = 5 + static_cast<int>(rng.uniform_int(0, 3));  // 5..8 (krum f=1 needs >= 5)
        const int dim = 1 + static_cast<int>(rng.uniform_int(0, 5));
        std::vector<std::vector<double>> deltas(static_cast<std::size_t>(n),
                                                std::vector<double>(static_cast<std::size_t>(dim)));
        for (auto& d : deltas)
            for (auto& v : d) v = rng.normal();
        const auto updates = oracles::as_updates(deltas);

        if (agg::krum(updates, 1).first != oracles::krum_pick_oracle(deltas, 1)) ++mismatches;

        const int m = std::min(3, n - 3);
        const auto scores = oracles::krum_scores_oracle(deltas, 1);
        std::vector<std::size_t> order(deltas.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        std::vector<std::size_t> expected(order.begin(), order.begin() + m);
        std::sort(expected.begin(), expected.end());
        if (agg::multi_krum(updates, 1, m).first != expected) ++mismatches;

        if (agg::coordinate_median(updates).values != oracles::median_oracle(deltas)) ++mismatches;
        if (agg::trimmed_mean(updates, 0.25).values != oracles::trimmed_mean_oracle(deltas, 0.25)) {
            ++mismatches;
        }
    }

    // Flame: a x100-scaled, directionally deviating outlier among >= 7
    // clustered benign updates must be filtered out in every seeded trial.
    int flame_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(mix_seed(seed, 0xf1aULL));
        const int dim = 6;
        std::vector<double> u(dim), v(dim);
        auto unit = [&](std::vector<double>& x) {
            double norm = 0.0;
            for (auto& c : x) {
                c = rng.normal();
                norm += c * c;
            }
            norm = std::sqrt(norm);
            for (auto& c : x) c /= norm;
        };
        unit(u);
        double cos_uv;
        do {
            unit(v);
            cos_uv = std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
        } while (cos_uv > 0.5);

        const int benign = 7 + static_cast<int>(rng.uniform_int(0, 2));
        std::vector<std::vector<double>> deltas;
        for (int i = 0; i < benign; ++i) {
            std::vector<double> d = u;
            for (auto& c : d) c += 0.05 * rng.normal();
            deltas.push_back(d);
        }
        std::vector<double> outlier = v;
        for (auto& c : outlier) c *= 100.0;
        deltas.push_back(outlier);

        const auto result = agg::flame(oracles::as_updates(deltas), 1e-3, seed);
        if (std::find(result.kept.begin(), result.kept.end(), deltas.size() - 1) !=
            result.kept.end()) {
            ++flame_failures;
        }
    }
    report(4, "aggregators match brute-force oracles; Flame filters the outlier",
           mismatches == 0 && flame_failures == 0,
           fmt("%d oracle mismatches over 200 instances, outlier kept in %d/100 Flame trials",
               mismatches, flame_failures));
}

void criterion5_soft_label_validity() {
    bool ok = true;
    std::string detail = "all labels valid, probs[target] == max(CS, 0) exactly";
    for (int step = -100; step <= 100 && ok; ++step) {
        const double cs = step / 100.0;
        const SoftLabel label = botpa::craft_soft_label(cs, 2, 6, 10);
        try {
            label.validate();
        } catch (const std::exception& e) {
            ok = false;
            detail = fmt("invalid label at CS=%.2f: %s", cs, e.what());
            break;
        }
        if (label.probs[6] != std::max(cs, 0.0)) {
            ok = false;
            detail = fmt("probs[target] %.17g != max(CS, 0) %.17g at CS=%.2f", label.probs[6],
                         std::max(cs, 0.0), cs);
        }
    }
    report(5, "crafted soft labels over the CS grid", ok, detail);
}

ExperimentConfig desk_boost_config() {
    const std::string json = R"({
      "name": "desk_boost",
      "seed": 42,
      "runs": 5,
      "dataset": {
        "kind": "blobs", "num_classes": 10, "per_class_train": 500, "per_class_test": 100,
        "dim": 16, "spread": 1.0, "radius": 3.5,
        "colocate": [{"class": 7, "anchor": 3, "closeness": 0.85},
                      {"class": 5, "anchor": 3, "closeness": 0.3}]
      },
      "partition": {"scheme": "iid", "clients": 10},
      "model": {"kind": "mlp", "hidden": [32]},
      "training": {"rounds": 16, "local_epochs": 3, "batch_size": 64,
                   "optimizer": "adam", "learning_rate": 0.001},
      "attack": {"kind": "label_flip", "source_class": 3, "target_class": 5,
                 "malicious_fraction": 0.3},
      "botpa": {"intermediate_classes": 2, "surrogate_epochs": 6, "per_class_sample_cap": 100},
      "metrics": {"window_from": 11, "window_to": 16}
    })";
    return parse_config_json(nlohmann::json::parse(json));
}

PairedSummary g_desk_summary;  // shared between criteria 6 and 7
bool g_desk_ran = false;

void run_desk_boost() {
    if (g_desk_ran) return;
    const auto dir = work_dir() / "desk_boost";
    fs::remove_all(dir);
    g_desk_summary = run_paired(desk_boost_config(), dir.string());
    g_desk_ran = true;
}

void criterion6_desk_boosting() {
    run_desk_boost();
    const auto& s = g_desk_summary;
    const bool ri_ok = s.median_ri.has_value() && *s.median_ri >= 0.10;
    const bool order_ok = s.median_b_asr > s.median_v_asr;
    report(6, "desk-scale boosting: median B-ASR > V-ASR, median RI-ASR >= 10%",
           ri_ok && order_ok,
           fmt("median V-ASR %.3f, B-ASR %.3f, RI-ASR %s", s.median_v_asr, s.median_b_asr,
               s.median_ri ? fmt("%.1f%%", 100.0 * *s.median_ri).c_str() : "undefined"));
}

void criterion7_stealthiness() {
    run_desk_boost();
    double max_gap = 0.0;
    for (const auto& rep : g_desk_summary.reps) {
        max_gap = std::max(max_gap, std::abs(rep.b_acc - rep.v_acc));
    }
    report(7, "stealthiness: per-run |boosted - vanilla| global accuracy <= 2pp",
           max_gap <= 0.02, fmt("max windowed accuracy gap %.2fpp over %zu paired runs",
                                100.0 * max_gap, g_desk_summary.reps.size()));
}

void criterion8_amplifier_selection() {
    int first = 0;
    const int seeds = 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        data::BlobGeometry geo;
        geo.colocate.push_back({.cls = 3, .anchor = 0, .closeness = 0.85});
        data::Dataset ds = data::synth_blobs(6, 30, 8, 0.8, 1000 + seed, geo);
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        attacks::flip_labels(ds, all, 0, 1);

        botpa::BotpaConfig cfg;
        cfg.num_intermediate = 1;
        cfg.surrogate_epochs = 6;
        cfg.batch_size = 32;
        cfg.optimizer_template = nn::OptimizerState::adam(5e-3);
        cfg.seed = 17 + seed;
        const auto pair = botpa::train_surrogate(ds, nn::mlp_architecture(8, {10}, 6), cfg);
        const auto picked =
            botpa::select_intermediate_classes(pair.checkpoint_mid, ds, 0, 1, 1, 0, cfg.seed);
        if (picked == std::vector<int>{3}) ++first;
    }
    report(8, "co-located class ranks first in intermediate-class selection", first >= 9,
           fmt("ranked first in %d/%d seeds, need >= 9", first, seeds));
}

void criterion9_dirichlet() {
    bool ok = true;
    std::string detail;
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
        const double mean_err = std::abs(mean - analytic_mean);
        const double mean_bound = 3.0 * std::sqrt(analytic_var / draws);

        const int batches = 10, per = draws / batches;
        std::vector<double> batch_vars;
        for (int b = 0; b < batches; ++b) {
            double bm = 0.0;
            for (int i = 0; i < per; ++i) bm += xs[static_cast<std::size_t>(b * per + i)];
            bm /= per;
            double bv = 0.0;
            for (int i = 0; i < per; ++i) {
                const double d = xs[static_cast<std::size_t>(b * per + i)] - bm;
                bv += d * d;
            }
            batch_vars.push_back(bv / (per - 1));
        }
        double var_mean = 0.0;
        for (double v : batch_vars) var_mean += v;
        var_mean /= batches;
        double var_se = 0.0;
        for (double v : batch_vars) var_se += (v - var_mean) * (v - var_mean);
        var_se = std::sqrt(var_se / (batches - 1) / batches);
        const double var_err = std::abs(var_mean - analytic_var);

        if (mean_err >= mean_bound || var_err >= 3.0 * var_se) ok = false;
        detail += fmt("beta=%.1f: |mean err| %.2e (< %.2e), |var err| %.2e (< %.2e); ", beta,
                      mean_err, mean_bound, var_err, 3.0 * var_se);
    }

    const data::Dataset ds = data::synth_blobs(6, 30, 3, 1.0, 77);
    int invariant_failures = 0;
    {
        ScopedLogSilence quiet;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            try {
                data::partition_dirichlet(ds, 8, 0.5, seed).validate(ds.size());
                data::partition_iid(ds, 8, seed).validate(ds.size());
            } catch (const std::exception&) {
                ++invariant_failures;
            }
        }
    }
    if (invariant_failures > 0) ok = false;
    report(9, "Dirichlet sampler moments and partition invariants", ok,
           detail + fmt("%d invariant failures over 100 seeds", invariant_failures));
}

void criterion10_determinism() {
    const std::string json = R"({
      "name": "determinism",
      "seed": 7,
      "runs": 2,
      "serial": true,
      "dataset": {"kind": "blobs", "num_classes": 5, "per_class_train": 40, "per_class_test": 10,
                   "dim": 6, "spread": 0.8, "radius": 3.0},
      "partition": {"scheme": "dirichlet", "beta": 1.0, "clients": 5},
      "model": {"kind": "mlp", "hidden": [8]},
      "training": {"rounds": 3, "local_epochs": 2, "batch_size": 16,
                   "optimizer": "adam", "learning_rate": 0.001},
      "attack": {"kind": "label_flip", "source_class": 0, "target_class": 2,
                 "malicious_fraction": 0.2},
      "botpa": {"intermediate_classes": 1, "surrogate_epochs": 4},
      "aggregator": {"kind": "flame", "flame_lambda": 0.001},
      "export_features": true
    })";
    const ExperimentConfig cfg = parse_config_json(nlohmann::json::parse(json));
    const auto dir_a = work_dir() / "det_a";
    const auto dir_b = work_dir() / "det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    {
        ScopedLogSilence quiet;
        run_paired(cfg, dir_a.string());
        run_paired(cfg, dir_b.string());
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    int files = 0, diffs = 0;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        ++files;
        const auto other = dir_b / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            ++diffs;
            if (first_diff.empty()) first_diff = entry.path().filename().string();
        }
    }
    report(10, "equal config+seed reproduce byte-identical outputs", files > 0 && diffs == 0,
           fmt("%d files compared, %d differ%s%s", files, diffs,
               first_diff.empty() ? "" : ", first: ", first_diff.c_str()));
}

void criterion11_krum_boost() {
    const std::string json = R"({
      "name": "krum_boost",
      "seed": 2025,
      "runs": 5,
      "dataset": {
        "kind": "blobs", "num_classes": 10, "per_class_train": 300, "per_class_test": 100,
        "dim": 16, "spread": 1.0, "radius": 3.5,
        "colocate": [{"class": 7, "anchor": 3, "closeness": 0.95},
                      {"class": 5, "anchor": 3, "closeness": 0.45}]
      },
      "partition": {"scheme": "iid", "clients": 10},
      "model": {"kind": "mlp", "hidden": [32]},
      "training": {"rounds": 30, "local_epochs": 2, "batch_size": 64,
                   "optimizer": "adam", "learning_rate": 0.001},
      "attack": {"kind": "stealthy_altmin", "source_class": 3, "target_class": 5,
                 "malicious_clients": [0], "boost_factor": 4.0, "stealth_rho": 250.0,
                 "stealth_benign_weight": 1.5, "altmin_poison_steps": 2,
                 "altmin_stealth_steps": 1},
      "botpa": {"intermediate_classes": 1, "surrogate_epochs": 6, "per_class_sample_cap": 100},
      "aggregator": {"kind": "krum"},
      "metrics": {"window_from": 21, "window_to": 30}
    })";
    const ExperimentConfig cfg = parse_config_json(nlohmann::json::parse(json));
    const auto dir = work_dir() / "krum_boost";
    fs::remove_all(dir);
    const PairedSummary s = run_paired(cfg, dir.string());

    const bool asr_ok = s.median_b_asr >= s.median_v_asr;
    const bool sel_ok = s.median_b_sel >= s.median_v_sel;
    report(11, "alt-min under Krum: boosted ASR and selection rate not below vanilla",
           asr_ok && sel_ok,
           fmt("median ASR vanilla %.3f vs boosted %.3f; malicious selection rate %.2f vs %.2f",
               s.median_v_asr, s.median_b_asr, s.median_v_sel, s.median_b_sel));
}

}  // namespace

int main() {
    log_enabled() = false;
    criterion1_gradient_correctness();
    criterion2_proposition1();
    criterion3_proposition2();
    criterion4_aggregator_oracles();
    criterion5_soft_label_validity();
    criterion6_desk_boosting();
    criterion7_stealthiness();
    criterion8_amplifier_selection();
    criterion9_dirichlet();
    criterion10_determinism();
    criterion11_krum_boost();
    if (g_failures == 0) {
        std::printf("all 11 acceptance criteria passed\n");
    } else {
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    }
    return g_failures == 0 ? 0 : 1;
}
