#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedsim/experiment.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    bool serial = false;
    bool parallel = false;
};

fedsim::ExperimentConfig load(const GlobalOpts& opts) {
    if (opts.config_path.empty()) throw std::runtime_error("--config is required");
    fedsim::ExperimentConfig cfg = fedsim::parse_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    if (opts.serial) cfg.serial = true;
    if (opts.parallel) cfg.serial = false;
    cfg.training.parallel_clients = !cfg.serial;
    return cfg;
}

void add_global_flags(CLI::App* cmd, GlobalOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Path to the JSON experiment config")->required();
    cmd->add_option("--seed", opts.seed, "Override the config seed");
    cmd->add_option("--output-dir", opts.output_dir, "Override the config output directory");
    cmd->add_flag("--serial", opts.serial, "Force serial client execution (bitwise determinism)");
    cmd->add_flag("--parallel", opts.parallel, "Allow concurrent client training");
}

std::string run_dir(const fedsim::ExperimentConfig& cfg, const std::string& verb) {
    return cfg.output_dir + "/" + cfg.name + "_" + verb + "_seed" + std::to_string(cfg.seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedsim: targeted-poisoning boosting experiments for federated learning"};
    app.require_subcommand(1);

    GlobalOpts run_opts, sweep_opts, prop_opts, feat_opts, selectn_opts;
    int prop_seeds = 20;
    double prop_tolerance = 1e-6;

    CLI::App* cmd_run = app.add_subcommand(
        "run", "Paired vanilla/boosted run (or single run without a botpa section)");
    add_global_flags(cmd_run, run_opts);

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "One paired run per sweep-axis value");
    add_global_flags(cmd_sweep, sweep_opts);

    CLI::App* cmd_prop = app.add_subcommand(
        "check-propositions", "Empirical vs analytic weight-divergence checks (full-batch GD)");
    cmd_prop->add_option("--config", prop_opts.config_path,
                         "Optional config (only output_dir/name are used)");
    cmd_prop->add_option("--seeds", prop_seeds, "Number of random seeds")->check(CLI::PositiveNumber);
    cmd_prop->add_option("--tolerance", prop_tolerance, "Max-abs-error tolerance");
    cmd_prop->add_option("--output-dir", prop_opts.output_dir, "Directory for propositions.csv");

    CLI::App* cmd_feat = app.add_subcommand(
        "export-features", "Train per config and export logits-layer features (+PCA) of the test set");
    add_global_flags(cmd_feat, feat_opts);

    CLI::App* cmd_selectn = app.add_subcommand(
        "select-n", "Sweep the number of intermediate classes until RI-ASR declines");
    add_global_flags(cmd_selectn, selectn_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            const fedsim::ExperimentConfig cfg = load(run_opts);
            const std::string dir = run_dir(cfg, "run");
            if (cfg.botpa_spec.enabled) {
                const fedsim::PairedSummary s = fedsim::run_paired(cfg, dir);
                std::printf("median V-ASR %.4f | median B-ASR %.4f | median RI-ASR %s\n",
                            s.median_v_asr, s.median_b_asr,
                            s.median_ri ? std::to_string(*s.median_ri).c_str() : "undefined");
                std::printf("median accuracy: vanilla %.4f, boosted %.4f\n", s.median_v_acc,
                            s.median_b_acc);
            } else {
                const fedsim::SingleSummary s = fedsim::run_single(cfg, dir);
                std::printf("median accuracy %.4f", s.acc);
                if (s.asr) std::printf(" | median ASR %.4f", *s.asr);
                std::printf("\n");
            }
            std::printf("results: %s\n", dir.c_str());
            return 0;
        }
        if (cmd_sweep->parsed()) {
            const fedsim::ExperimentConfig cfg = load(sweep_opts);
            const std::string dir = run_dir(cfg, "sweep");
            const int failures = fedsim::run_sweep(cfg, dir);
            std::printf("sweep done, %d failed point(s); results: %s\n", failures, dir.c_str());
            return failures == 0 ? 0 : 3;
        }
        if (cmd_prop->parsed()) {
            std::string dir = prop_opts.output_dir.value_or("results/propositions");
            if (!prop_opts.config_path.empty()) {
                const fedsim::ExperimentConfig cfg = fedsim::parse_config(prop_opts.config_path);
                if (!prop_opts.output_dir) dir = run_dir(cfg, "propositions");
            }
            std::filesystem::create_directories(dir);
            const auto outcomes =
                fedsim::run_proposition_checks(prop_seeds, prop_tolerance, dir + "/propositions.csv");
            int failed = 0;
            for (const auto& out : outcomes) {
                std::printf("seed %2d | p1 %.3e | p2(0) %.3e | p2(0.4) %.3e | p2(1) %.3e | "
                            "reduction %.3e | %s\n",
                            out.seed, out.p1_error, out.p2_error_l0, out.p2_error_l04,
                            out.p2_error_l1, out.reduction_gap, out.pass ? "pass" : "FAIL");
                if (!out.pass) ++failed;
            }
            std::printf("%zu/%zu seeds within %.1e; results: %s\n", outcomes.size() - failed,
                        outcomes.size(), prop_tolerance, dir.c_str());
            return failed == 0 ? 0 : 3;
        }
        if (cmd_feat->parsed()) {
            const fedsim::ExperimentConfig cfg = load(feat_opts);
            const std::string dir = run_dir(cfg, "features");
            fedsim::run_export_features(cfg, dir);
            std::printf("features exported under %s\n", dir.c_str());
            return 0;
        }
        if (cmd_selectn->parsed()) {
            const fedsim::ExperimentConfig cfg = load(selectn_opts);
            const std::string dir = run_dir(cfg, "select_n");
            const int chosen = fedsim::run_select_n(cfg, dir);
            std::printf("chosen N = %d; results: %s\n", chosen, dir.c_str());
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
