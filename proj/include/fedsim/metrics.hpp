#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/param.hpp"

namespace fedsim::metrics {

/// Per-communication-round measurements against the held-out test set.
struct RoundRecord {
    int round = 0;
    double global_accuracy = 0.0;
    std::vector<double> per_class_accuracy;  // classes absent from the test set report 0
    double asr = 0.0;                        // 0 when no attack is configured
    bool asr_defined = false;
    std::vector<std::size_t> selected_update_indices;  // selective defenses only
    std::string aggregator;
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::size_t> per_class_count;
};

/// Inference-mode accuracy on a labeled set.
EvalResult evaluate(const nn::Model& model, const data::Dataset& test, int eval_batch = 256);

/// Fraction of true-source test samples predicted as the target class.
double compute_asr(const nn::Model& model, const data::Dataset& test, int c_src, int c_tgt);

/// (b - v) / v; empty when v == 0 (undefined rather than infinite).
std::optional<double> ri_asr(double v_asr, double b_asr);

enum class RecordField { global_accuracy, asr };

/// Mean of a field over the inclusive round window [from_round, to_round].
double windowed_mean(const std::vector<RoundRecord>& records, int from_round, int to_round,
                     RecordField field);

/// Empirical-vs-analytic weight divergence of a one-step full-batch GD
/// comparison (see check_proposition1/2).
struct DivergenceReport {
    ParamVector empirical;
    ParamVector analytic;
    double max_abs_error = 0.0;
    double rel_error = 0.0;  // max_abs_error / max(1e-12, max |empirical|)
};

/// Divergence introduced by flipping source labels to the target for one
/// full-batch GD step: empirical difference of the two stepped weight
/// vectors against eta * p(y=src) * E[grad log f_tgt - grad log f_src].
DivergenceReport check_proposition1(const nn::Model& model, const data::Dataset& local_data,
                                    int c_src, int c_tgt, double learning_rate);

/// Divergence introduced by additionally soft-labeling intermediate class z
/// with lambda_z * e_tgt + (1 - lambda_z) * e_z on top of the flipped data:
/// analytic side lambda_z * eta * p(y=z) * E[grad log f_tgt - grad log f_z].
DivergenceReport check_proposition2(const nn::Model& model, const data::Dataset& local_data,
                                    int c_src, int c_tgt, int intermediate_z, double lambda_z,
                                    double learning_rate);

/// CSV rows (sample_id, true_class, feature_0..feature_{d-1}) of logits-layer
/// representations; with_pca appends 2 principal-component columns.
void export_logits_features(const nn::Model& model, const data::Dataset& samples,
                            const std::string& out_path, bool with_pca = true);

/// Rows of the feature matrix projected onto the top-2 principal components
/// (covariance eigendecomposition; components ordered by eigenvalue).
std::vector<std::array<double, 2>> pca2(const std::vector<std::vector<double>>& rows);

struct ClassDensityScore {
    int cls = 0;
    bool defined = false;  // false when the class is absent from the probe set
    double score = 0.0;
};

/// Per-class density-divergence scores across local models: density is the
/// mean pairwise L2 distance among a model's logits features for the class's
/// probe samples; the score is the max over model pairs of
/// |density_i - density_j| / (mean density + 1e-9).
std::vector<ClassDensityScore> density_divergence(const std::vector<nn::Model>& local_models,
                                                  const data::Dataset& probe_set);

}  // namespace fedsim::metrics
