#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/attacks.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/nn.hpp"

namespace fedsim::botpa {

struct BotpaConfig {
    int num_intermediate = 1;           // N; must satisfy N <= num_classes - 2
    bool surrogate_identical = true;    // surrogate shares the FL model architecture
    nn::Architecture surrogate_custom;  // used when surrogate_identical is false
    int surrogate_epochs = 6;           // E
    int contrib_checkpoint_epoch = 0;   // 0 -> ceil(E/2)
    int per_class_sample_cap = 100;     // 0 -> unlimited
    int batch_size = 64;
    nn::OptimizerState optimizer_template = nn::OptimizerState::adam(1e-3);
    std::uint64_t seed = 0;

    int checkpoint_epoch() const {
        return contrib_checkpoint_epoch > 0 ? contrib_checkpoint_epoch : (surrogate_epochs + 1) / 2;
    }
    void validate(int num_classes) const;
};

struct SurrogatePair {
    nn::Model checkpoint_mid;  // epoch ceil(E/2) weights (pre-convergence)
    nn::Model converged;       // final-epoch weights
};

/// Centralized training on the pooled, already-flipped malicious data.
/// Throws on divergence (non-finite loss).
SurrogatePair train_surrogate(const data::Dataset& malicious_flipped, const nn::Architecture& arch,
                              const BotpaConfig& cfg);

/// Cosine similarity of the two per-sample loss gradients (contribution
/// degrees). A gradient with norm below 1e-12 yields similarity 0 (logged).
double is_contrib(const nn::Model& model, const Tensor& x, const SoftLabel& label_x,
                  const Tensor& x_prime, const SoftLabel& label_x_prime);

/// Mean pairwise is_contrib between (capped) members of the two classes.
/// cap <= 0 means unlimited; capping subsamples deterministically from seed.
/// By default gradients use each sample's current training label;
/// `loss_label` fixes one label (class id) for every gradient instead, which
/// measures how a weight update moving that class's log-probability on one
/// sample carries over to the other.
double cs_contrib(const nn::Model& model, const data::Dataset& ds, int c1, int c2, int cap,
                  std::uint64_t seed, std::optional<int> loss_label = std::nullopt);

/// Classes ranked by CS_contrib against the source (descending, ties to the
/// lowest class id), excluding source and target; the top N are returned.
/// The pairwise gradients are taken on the target-class log-probability for
/// both samples: a candidate class scores high when weight updates that move
/// the target probability on source samples move it the same way on the
/// candidate's samples. Classes with non-positive scores may still be
/// selected when fewer than N positive ones exist (logged).
std::vector<int> select_intermediate_classes(const nn::Model& model_mid, const data::Dataset& ds,
                                             int c_src, int c_tgt, int N, int cap,
                                             std::uint64_t seed);

/// Cosine similarity of logits-layer representations.
double is_ftrs(const nn::Model& model_converged, const Tensor& x, const Tensor& x_prime);

/// Mean pairwise is_ftrs between (capped) members of the two classes.
double cs_ftrs(const nn::Model& model_converged, const data::Dataset& ds, int c1, int c2, int cap,
               std::uint64_t seed);

/// Piecewise soft-label rule: cs <= 0 keeps the hard label e_z; otherwise
/// probs[c_tgt] = cs and probs[c_z] = 1 - cs.
SoftLabel craft_soft_label(double cs, int c_z, int c_tgt, int num_classes);

struct AmplifierSet {
    std::vector<int> classes;                              // selected intermediate classes
    std::vector<std::vector<std::size_t>> sample_indices;  // per malicious client, amplifier members
    std::map<int, SoftLabel> crafted_labels;               // class -> crafted label
    std::map<int, double> ftrs_scores;                     // class -> CS_ftrs(src, class)
};

struct MutationReport {
    std::size_t total_relabeled = 0;
    std::map<int, std::size_t> per_class;
    std::size_t unchanged = 0;  // amplifier samples whose crafted label equals the hard label
};

/// Replace the labels of amplifier-class samples inside the malicious shards
/// with the crafted labels. Samples of other classes and benign shards are
/// untouched.
MutationReport apply_botpa(data::Dataset& ds,
                           const std::vector<std::vector<std::size_t>>& malicious_shards,
                           const AmplifierSet& amplifier);

struct PipelineResult {
    SurrogatePair surrogate;
    std::vector<std::pair<int, double>> contrib_scores;  // (class, CS_contrib(src, class)), all candidates
    AmplifierSet amplifier;
    MutationReport report;
};

/// Steps 2-5 against a dataset whose malicious shards are already flipped:
/// train the surrogate on the pooled malicious data, select intermediate
/// classes on the mid checkpoint, craft soft labels on the converged model,
/// and relabel the malicious shards in place.
PipelineResult run_pipeline(data::Dataset& poisoned,
                            const std::vector<std::vector<std::size_t>>& malicious_shards,
                            const nn::Architecture& fl_arch, const attacks::AttackConfig& attack,
                            const BotpaConfig& cfg);

/// Incrementally evaluates candidate N values (ascending) with the supplied
/// runner (N -> RI-ASR) and stops at the first strict decline; returns the
/// smallest N attaining the maximum RI-ASR seen up to that point.
int select_n_sweep(const std::vector<int>& n_values, const std::function<double(int)>& run_ri_asr,
                   std::vector<std::pair<int, double>>* evaluated = nullptr);

}  // namespace fedsim::botpa
