#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/metrics.hpp"

namespace fedsim {

struct BuiltData {
    data::Dataset train;
    data::Dataset test;
};

/// Materialize the configured dataset (one dataset per config; repetitions
/// re-partition it).
BuiltData build_data(const DatasetSpec& spec, std::uint64_t seed);

struct RepetitionSummary {
    int rep = 0;
    std::uint64_t seed = 0;
    std::vector<int> malicious;
    double v_asr = 0.0;
    double b_asr = 0.0;
    std::optional<double> ri;
    double v_acc = 0.0;
    double b_acc = 0.0;
    double v_sel_rate = 0.0;  // rounds where a malicious update was among the selected
    double b_sel_rate = 0.0;
};

struct PairedSummary {
    std::vector<RepetitionSummary> reps;
    double median_v_asr = 0.0;
    double median_b_asr = 0.0;
    std::optional<double> median_ri;
    double median_v_acc = 0.0;
    double median_b_acc = 0.0;
    double median_v_sel = 0.0;
    double median_b_sel = 0.0;
};

double median(std::vector<double> values);

/// Vanilla-vs-boosted paired runs with shared per-repetition seeds and
/// malicious sets. Writes resolved_config.json, rounds_vanilla.csv,
/// rounds_boosted.csv, summary.csv, similarity_contrib.csv,
/// similarity_ftrs.csv, amplifier.csv (and features_*.csv when enabled)
/// under out_dir. Requires attack + botpa sections.
PairedSummary run_paired(const ExperimentConfig& cfg, const std::string& out_dir);

struct SingleSummary {
    double acc = 0.0;                // windowed mean global accuracy (median over reps)
    std::optional<double> asr;       // windowed mean ASR when attacked
};

/// Single-arm run (no boosting): clean baseline or vanilla attack only.
/// Writes resolved_config.json, rounds.csv, summary.csv.
SingleSummary run_single(const ExperimentConfig& cfg, const std::string& out_dir);

/// One paired (or single) run per axis value; per-point failures are
/// recorded in sweep_summary.csv and do not abort the sweep. Returns the
/// number of failed points.
int run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

struct PropositionOutcome {
    int seed = 0;
    double p1_error = 0.0;
    double p2_error_l0 = 0.0;
    double p2_error_l04 = 0.0;
    double p2_error_l1 = 0.0;
    double reduction_gap = 0.0;  // prop2(lambda=1) empirical vs prop1(source:=z) empirical
    bool pass = false;
};

/// Weight-divergence checks on softmax-regression models with full-batch GD
/// (the regime where the divergence identities are exact). One outcome per
/// seed; `csv_path` may be empty to skip the file.
std::vector<PropositionOutcome> run_proposition_checks(int num_seeds, double tolerance,
                                                       const std::string& csv_path);

/// Train per config, then dump logits-layer features (+ 2-component PCA) of
/// the final global model over the test set to features.csv.
void run_export_features(const ExperimentConfig& cfg, const std::string& out_dir);

/// Sweep the number of intermediate classes on the configured "easy case",
/// stopping at the first RI-ASR decline. Returns the chosen N and writes
/// select_n.csv.
int run_select_n(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace fedsim
