#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/fl_runtime.hpp"

namespace fedsim::attacks {

enum class AttackKind { label_flip, explicit_boost, stealthy_altmin };

std::string attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);

struct AttackConfig {
    AttackKind kind = AttackKind::label_flip;
    int source_class = 0;
    int target_class = 1;
    std::vector<int> malicious_clients;
    double boost_factor = 1.0;        // lambda; explicit boost and alt-min poison weighting
    double stealth_rho = 1.0;         // distance-penalty weight
    double stealth_benign_weight = 1.0;
    int altmin_poison_steps = 1;      // full-batch steps per local epoch
    int altmin_stealth_steps = 1;
    int start_round = 1;

    void validate(int num_classes, int num_clients) const;
};

/// Flip every hard source-class label in the shard to the target class.
/// Returns the number of labels flipped (zero is allowed, logged).
std::size_t flip_labels(data::Dataset& ds, const std::vector<std::size_t>& shard, int c_src,
                        int c_tgt);

/// Scale the reported delta by lambda (counteracts FedAvg down-scaling).
fl::ClientUpdate explicit_boost_update(fl::ClientUpdate update, double lambda);

/// Alternating-minimization stealthy model poisoning. Per local epoch:
/// poison steps take full-batch optimizer steps on the shard's cross-entropy
/// with flipped-source samples weighted by boost_factor; stealth steps
/// descend [stealth_benign_weight * CE(non-source samples, true labels)
/// + stealth_rho * ||delta - prev_benign_estimate||^2]. The quadratic
/// penalty's step factor is clamped at 1 so large rho moves the delta
/// exactly onto the estimate instead of overshooting. A shard without
/// source samples falls back to plain local training (logged).
fl::ClientUpdate stealthy_altmin_train(const nn::Model& global, const fl::ShardRef& shard,
                                       const AttackConfig& attack, const fl::TrainingConfig& cfg,
                                       const ParamVector& prev_benign_estimate, int client_id,
                                       int round);

/// Everything run_round needs to apply an attack: the configuration, the
/// poisoned view of the training data (labels flipped, and relabeled when
/// boosting is active), and the benign-direction estimate alt-min anchors to
/// (previous round's aggregated global update, maintained by the round loop).
struct AttackRuntime {
    AttackConfig cfg;
    const data::Dataset* poisoned_train = nullptr;
    ParamVector prev_benign_estimate;

    bool active_in_round(int round) const { return round >= cfg.start_round; }
    bool is_malicious(int client_id) const {
        for (int id : cfg.malicious_clients)
            if (id == client_id) return true;
        return false;
    }
};

/// Default boosting factor: n over k_mal cancels FedAvg's down-scaling.
double default_boost_factor(int num_clients, int num_malicious);

}  // namespace fedsim::attacks
