#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/label.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim::nn {

/// train: batch-norm normalizes with batch statistics.
/// infer: batch-norm normalizes with running statistics.
enum class Mode { train, infer };

struct ForwardResult {
    Tensor logits;  // (B, num_classes)
    Tensor probs;   // (B, num_classes), rows sum to 1
};

/// Numerically stable softmax (max-subtraction) applied row-wise.
Tensor softmax_rows(const Tensor& logits);

ForwardResult forward(const Model& model, const Tensor& batch, Mode mode = Mode::infer);

/// Pre-softmax logits for a single sample (accepts per-sample shape or a
/// batch-of-1 tensor). Inference mode.
std::vector<double> logits_features(const Model& model, const Tensor& x);

/// Mean soft-label cross-entropy over the batch; probabilities are clamped
/// to >= 1e-12 before the log.
double cross_entropy_loss(const Tensor& probs, const std::vector<SoftLabel>& labels);

/// Per-batch-norm-layer statistics captured during a train-mode forward,
/// used to advance running mean/var after an optimizer step.
struct BnBatchStats {
    std::size_t layer_index = 0;
    std::vector<double> mean;
    std::vector<double> var;  // biased
};

struct BackwardResult {
    ParamVector gradient;  // of the mean cross-entropy; zero on non-trainable blocks
    double loss = 0.0;
    std::vector<BnBatchStats> bn_stats;  // train mode only
};

BackwardResult backward(const Model& model, const Tensor& batch,
                        const std::vector<SoftLabel>& labels, Mode mode = Mode::train);

/// Per-sample weighted variant: loss = (1/B) * sum_i w_i * CE_i. Weights of
/// 1.0 reproduce backward() exactly.
BackwardResult backward_weighted(const Model& model, const Tensor& batch,
                                 const std::vector<SoftLabel>& labels,
                                 const std::vector<double>& sample_weights,
                                 Mode mode = Mode::train);

/// Gradient of the single-sample cross-entropy loss w.r.t. all weights.
/// Inference mode (metrics and similarity computations run against frozen
/// batch-norm statistics).
ParamVector per_sample_loss_gradient(const Model& model, const Tensor& x, const SoftLabel& label);

enum class OptKind { sgd, adam };

struct OptimizerState {
    OptKind kind = OptKind::sgd;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::vector<double> m;  // first moment, sized on first step
    std::vector<double> v;  // second moment

    static OptimizerState sgd(double lr);
    static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                               double epsilon = 1e-8);

    /// Fresh copy with zeroed moments/step count (clients re-initialize
    /// optimizer state every round).
    OptimizerState fresh() const;
};

/// In-place parameter update; SGD is exactly params - lr * grad.
void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad);

/// forward + backward + optimizer step + running-statistics update.
/// Returns the batch loss. Pass sample weights for a weighted loss.
double train_step(Model& model, OptimizerState& opt, const Tensor& batch,
                  const std::vector<SoftLabel>& labels, double bn_momentum = 0.1,
                  const std::vector<double>* sample_weights = nullptr);

}  // namespace fedsim::nn
