#include "fedsim/fl_runtime.hpp"

#include <algorithm>
#include <cstring>
#include <future>
#include <numeric>
#include <stdexcept>

#include "fedsim/aggregators.hpp"
#include "fedsim/attacks.hpp"
#include "fedsim/log.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::fl {

void TrainingConfig::validate() const {
    if (rounds < 1) throw std::invalid_argument("training: rounds must be >= 1");
    if (local_epochs < 0) throw std::invalid_argument("training: local_epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("training: batch_size must be >= 1");
    if (optimizer_template.learning_rate <= 0.0) {
        throw std::invalid_argument("training: learning_rate must be positive");
    }
}

std::pair<Tensor, std::vector<SoftLabel>> gather_batch(const ShardRef& shard,
                                                       const std::vector<std::size_t>& order,
                                                       std::size_t from, std::size_t to) {
    const data::Dataset& ds = *shard.ds;
    const std::size_t count = to - from;
    std::vector<int> shape = ds.samples.shape;
    shape[0] = static_cast<int>(count);
    Tensor batch = Tensor::zeros(shape);
    std::vector<SoftLabel> labels;
    labels.reserve(count);
    const std::size_t rs = ds.samples.row_size();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = order[from + i];
        std::memcpy(batch.row(i), ds.samples.row(idx), rs * sizeof(double));
        labels.push_back(ds.labels[idx]);
    }
    return {std::move(batch), std::move(labels)};
}

ClientUpdate local_train(const nn::Model& global, const ShardRef& shard, const TrainingConfig& cfg,
                         int client_id, int round) {
    ClientUpdate update;
    update.client_id = client_id;
    update.num_samples = static_cast<std::int64_t>(shard.size());
    if (shard.size() == 0) {
        log_warn("local_train: client " + std::to_string(client_id) + " has an empty shard");
        update.delta = ParamVector::zeros_like(global.params);
        return update;
    }

    // Independent stream per (experiment seed, client, round).
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(client_id) + 1,
                     static_cast<std::uint64_t>(round)));

    nn::Model local = global;
    nn::OptimizerState opt = cfg.optimizer_template.fresh();
    std::vector<std::size_t> order(shard.indices->begin(), shard.indices->end());
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(),
                                              start + static_cast<std::size_t>(cfg.batch_size));
            auto [batch, labels] = gather_batch(shard, order, start, stop);
            nn::train_step(local, opt, batch, labels);
        }
    }
    update.delta = sub(local.params, global.params);
    return update;
}

std::vector<Client> make_clients(const data::Partition& partition,
                                 const std::vector<int>& malicious_ids) {
    std::vector<Client> clients;
    clients.reserve(partition.shards.size());
    for (std::size_t i = 0; i < partition.shards.size(); ++i) {
        Client c;
        c.id = static_cast<int>(i);
        c.shard = partition.shards[i];
        c.malicious = std::find(malicious_ids.begin(), malicious_ids.end(), c.id) != malicious_ids.end();
        clients.push_back(std::move(c));
    }
    return clients;
}

namespace {

ClientUpdate train_one_client(const ExperimentState& state, const Client& client,
                              const data::Dataset& clean_train, const TrainingConfig& cfg,
                              attacks::AttackRuntime* attack, int round) {
    const bool attacking = attack != nullptr && client.malicious && attack->active_in_round(round) &&
                           attack->is_malicious(client.id);
    if (!attacking) {
        ShardRef shard{&clean_train, &client.shard};
        return local_train(state.global, shard, cfg, client.id, round);
    }

    ShardRef shard{attack->poisoned_train, &client.shard};
    switch (attack->cfg.kind) {
        case attacks::AttackKind::label_flip: {
            ClientUpdate u = local_train(state.global, shard, cfg, client.id, round);
            u.malicious = true;
            return u;
        }
        case attacks::AttackKind::explicit_boost: {
            ClientUpdate u = local_train(state.global, shard, cfg, client.id, round);
            u.malicious = true;
            return attacks::explicit_boost_update(std::move(u), attack->cfg.boost_factor);
        }
        case attacks::AttackKind::stealthy_altmin:
            return attacks::stealthy_altmin_train(state.global, shard, attack->cfg, cfg,
                                                  attack->prev_benign_estimate, client.id, round);
    }
    throw std::logic_error("train_one_client: unhandled attack kind");
}

}  // namespace

metrics::RoundRecord run_round(ExperimentState& state, const std::vector<Client>& clients,
                               const data::Dataset& clean_train, const TrainingConfig& cfg,
                               const agg::AggregatorSpec& aggregator,
                               attacks::AttackRuntime* attack, const data::Dataset& test,
                               std::vector<ParamVector>* local_params_out) {
    if (clients.empty()) throw std::invalid_argument("run_round: need at least 1 client");
    const int round = state.round + 1;

    if (attack != nullptr && attack->prev_benign_estimate.size() == 0) {
        attack->prev_benign_estimate = ParamVector::zeros_like(state.global.params);
    }

    std::vector<ClientUpdate> updates(clients.size());
    if (cfg.parallel_clients) {
        std::vector<std::future<ClientUpdate>> futures;
        futures.reserve(clients.size());
        for (const Client& client : clients) {
            futures.push_back(std::async(std::launch::async, [&, round] {
                return train_one_client(state, client, clean_train, cfg, attack, round);
            }));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) updates[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < clients.size(); ++i) {
            updates[i] = train_one_client(state, clients[i], clean_train, cfg, attack, round);
        }
    }

    if (local_params_out) {
        local_params_out->clear();
        for (const auto& u : updates) local_params_out->push_back(add(state.global.params, u.delta));
    }

    agg::AggregateResult agg_result;
    try {
        agg_result = agg::aggregate(aggregator, updates,
                                    mix_seed(cfg.seed, 0x616767ULL, static_cast<std::uint64_t>(round)));
    } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
    }

    state.global.params = add(state.global.params, agg_result.delta);
    state.prev_global_delta = agg_result.delta;
    state.round = round;
    if (attack != nullptr) attack->prev_benign_estimate = agg_result.delta;

    metrics::RoundRecord record;
    record.round = round;
    record.aggregator = aggregator.summary();
    record.selected_update_indices = agg_result.selected;
    const metrics::EvalResult eval = metrics::evaluate(state.global, test);
    record.global_accuracy = eval.accuracy;
    record.per_class_accuracy = eval.per_class_accuracy;
    if (attack != nullptr) {
        record.asr = metrics::compute_asr(state.global, test, attack->cfg.source_class,
                                          attack->cfg.target_class);
        record.asr_defined = true;
    }
    return record;
}

void run_experiment(const nn::Model& initial, const std::vector<Client>& clients,
                    const data::Dataset& clean_train, const TrainingConfig& cfg,
                    const agg::AggregatorSpec& aggregator, attacks::AttackRuntime* attack,
                    const data::Dataset& test, std::vector<metrics::RoundRecord>& records,
                    nn::Model* final_model, std::vector<nn::Model>* final_locals) {
    cfg.validate();
    records.clear();
    ExperimentState state{initial, 0, ParamVector::zeros_like(initial.params)};
    if (attack != nullptr) attack->prev_benign_estimate = ParamVector::zeros_like(initial.params);

    std::vector<ParamVector> local_params;
    for (int t = 0; t < cfg.rounds; ++t) {
        const bool last = t + 1 == cfg.rounds;
        records.push_back(run_round(state, clients, clean_train, cfg, aggregator, attack, test,
                                    last && final_locals ? &local_params : nullptr));
    }
    if (final_model != nullptr) *final_model = state.global;
    if (final_locals != nullptr) {
        final_locals->clear();
        for (auto& p : local_params) final_locals->push_back(nn::with_params(initial, std::move(p)));
    }
}

}  // namespace fedsim::fl
