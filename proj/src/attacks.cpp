#include "fedsim/attacks.hpp"

#include <algorithm>
#include <stdexcept>

#include "fedsim/log.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::attacks {

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::label_flip: return "label_flip";
        case AttackKind::explicit_boost: return "explicit_boost";
        case AttackKind::stealthy_altmin: return "stealthy_altmin";
    }
    return "unknown";
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "label_flip") return AttackKind::label_flip;
    if (name == "explicit_boost") return AttackKind::explicit_boost;
    if (name == "stealthy_altmin") return AttackKind::stealthy_altmin;
    throw std::invalid_argument("unknown attack kind: " + name);
}

void AttackConfig::validate(int num_classes, int num_clients) const {
    if (source_class == target_class) {
        throw std::invalid_argument("attack: source_class and target_class must differ");
    }
    if (source_class < 0 || source_class >= num_classes || target_class < 0 ||
        target_class >= num_classes) {
        throw std::invalid_argument("attack: class id out of range");
    }
    if (malicious_clients.empty()) {
        throw std::invalid_argument("attack: malicious_clients must be non-empty");
    }
    for (int id : malicious_clients) {
        if (id < 0 || id >= num_clients) {
            throw std::invalid_argument("attack: malicious client id " + std::to_string(id) +
                                        " out of range");
        }
    }
    if (boost_factor <= 0.0) throw std::invalid_argument("attack: boost_factor must be positive");
    if (stealth_rho < 0.0 || stealth_benign_weight < 0.0) {
        throw std::invalid_argument("attack: stealth weights must be non-negative");
    }
    if (altmin_poison_steps < 0 || altmin_stealth_steps < 0) {
        throw std::invalid_argument("attack: alt-min step counts must be non-negative");
    }
    if (start_round < 1) throw std::invalid_argument("attack: start_round must be >= 1");
}

std::size_t flip_labels(data::Dataset& ds, const std::vector<std::size_t>& shard, int c_src,
                        int c_tgt) {
    if (c_src == c_tgt) throw std::invalid_argument("flip_labels: source equals target");
    std::size_t flipped = 0;
    for (std::size_t idx : shard) {
        SoftLabel& label = ds.labels.at(idx);
        if (label.is_hard() && label.argmax() == c_src) {
            label = SoftLabel::hard(c_tgt, ds.num_classes);
            ++flipped;
        }
    }
    if (flipped == 0) log_warn("flip_labels: shard contains no source-class samples");
    return flipped;
}

fl::ClientUpdate explicit_boost_update(fl::ClientUpdate update, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("explicit_boost_update: lambda must be positive");
    for (auto& v : update.delta.values) v *= lambda;
    return update;
}

double default_boost_factor(int num_clients, int num_malicious) {
    if (num_malicious < 1) throw std::invalid_argument("default_boost_factor: no malicious clients");
    return static_cast<double>(num_clients) / static_cast<double>(num_malicious);
}

fl::ClientUpdate stealthy_altmin_train(const nn::Model& global, const fl::ShardRef& shard,
                                       const AttackConfig& attack, const fl::TrainingConfig& cfg,
                                       const ParamVector& prev_benign_estimate, int client_id,
                                       int round) {
    if (shard.size() == 0) {
        log_warn("stealthy_altmin_train: empty shard for client " + std::to_string(client_id));
        fl::ClientUpdate u;
        u.client_id = client_id;
        u.delta = ParamVector::zeros_like(global.params);
        u.num_samples = 0;
        u.malicious = true;
        return u;
    }

    const data::Dataset& ds = *shard.ds;
    std::vector<std::size_t> all(shard.indices->begin(), shard.indices->end());
    std::vector<std::size_t> rest;
    std::vector<double> weights;
    weights.reserve(all.size());
    std::size_t flipped_count = 0;
    for (std::size_t idx : all) {
        const bool is_source = ds.true_class[idx] == attack.source_class;
        weights.push_back(is_source ? attack.boost_factor : 1.0);
        if (is_source) ++flipped_count;
        else rest.push_back(idx);
    }

    if (flipped_count == 0) {
        log_warn("stealthy_altmin_train: no flipped source samples in client " +
                 std::to_string(client_id) + "'s shard, training benignly");
        fl::ClientUpdate u = fl::local_train(global, shard, cfg, client_id, round);
        u.malicious = true;
        return u;
    }

    // Poison objective: cross-entropy over the whole contaminated shard with
    // flipped-source samples weighted by the boosting factor.
    auto [poison_batch, poison_labels] = fl::gather_batch(shard, all, 0, all.size());

    // Stealth objective part 1: benign cross-entropy on the unflipped
    // remainder against its true labels (the behavior a benign client
    // would exhibit on this data).
    Tensor rest_batch;
    std::vector<SoftLabel> rest_labels;
    if (!rest.empty()) {
        auto gathered = fl::gather_batch(shard, rest, 0, rest.size());
        rest_batch = std::move(gathered.first);
        rest_labels.reserve(rest.size());
        for (std::size_t idx : rest) {
            rest_labels.push_back(SoftLabel::hard(ds.true_class[idx], ds.num_classes));
        }
    }

    nn::Model local = global;
    nn::OptimizerState opt = cfg.optimizer_template.fresh();
    const double eta = cfg.optimizer_template.learning_rate;
    // Gradient step on rho*||delta - est||^2 scales (delta - est) by 2*eta*rho;
    // clamped at 1 so the step lands on the estimate instead of overshooting.
    const double pull = std::min(1.0, 2.0 * eta * attack.stealth_rho);

    if (prev_benign_estimate.size() != global.params.size()) {
        throw std::invalid_argument("stealthy_altmin_train: benign estimate length mismatch");
    }

    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        for (int p = 0; p < attack.altmin_poison_steps; ++p) {
            nn::train_step(local, opt, poison_batch, poison_labels, 0.1, &weights);
        }
        for (int s = 0; s < attack.altmin_stealth_steps; ++s) {
            if (attack.stealth_benign_weight > 0.0 && !rest.empty()) {
                std::vector<double> w(rest.size(), attack.stealth_benign_weight);
                nn::train_step(local, opt, rest_batch, rest_labels, 0.1, &w);
            }
            if (attack.stealth_rho > 0.0) {
                for (std::size_t i = 0; i < local.params.size(); ++i) {
                    const double delta = local.params[i] - global.params[i];
                    local.params.values[i] -= pull * (delta - prev_benign_estimate[i]);
                }
            }
        }
    }

    fl::ClientUpdate u;
    u.client_id = client_id;
    u.delta = sub(local.params, global.params);
    u.num_samples = static_cast<std::int64_t>(all.size());
    u.malicious = true;
    return u;
}

}  // namespace fedsim::attacks
