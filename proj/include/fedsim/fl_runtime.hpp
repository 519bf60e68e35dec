#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/partition.hpp"

namespace fedsim::attacks {
struct AttackRuntime;  // defined in attacks.hpp
}

namespace fedsim::metrics {
struct RoundRecord;  // defined in metrics.hpp
}

namespace fedsim::agg {
struct AggregatorSpec;  // defined in aggregators.hpp
}

namespace fedsim::fl {

struct TrainingConfig {
    int rounds = 1;
    int local_epochs = 1;
    int batch_size = 64;
    nn::OptimizerState optimizer_template = nn::OptimizerState::adam(1e-3);
    std::uint64_t seed = 0;
    bool parallel_clients = false;

    void validate() const;
};

struct ClientUpdate {
    int client_id = 0;
    ParamVector delta;  // local params after training minus global params
    std::int64_t num_samples = 0;
    bool malicious = false;
};

/// A client's slice of the training data: dataset reference plus indices.
struct ShardRef {
    const data::Dataset* ds = nullptr;
    const std::vector<std::size_t>* indices = nullptr;

    std::size_t size() const { return indices ? indices->size() : 0; }
};

/// Gather a shard into a (batch, labels) pair, in the given order.
std::pair<Tensor, std::vector<SoftLabel>> gather_batch(const ShardRef& shard,
                                                       const std::vector<std::size_t>& order,
                                                       std::size_t from, std::size_t to);

/// Local training for one round: local_epochs passes of mini-batch steps
/// with a fresh optimizer, RNG stream derived from (seed, client_id, round).
/// An empty shard yields a zero delta with num_samples = 0 (logged).
ClientUpdate local_train(const nn::Model& global, const ShardRef& shard, const TrainingConfig& cfg,
                         int client_id, int round);

struct Client {
    int id = 0;
    std::vector<std::size_t> shard;
    bool malicious = false;
};

struct ExperimentState {
    nn::Model global;
    int round = 0;                  // next round to run (1-based when running)
    ParamVector prev_global_delta;  // previous round's aggregated update
};

/// One communication round: broadcast, local training (attack-aware),
/// aggregation, global update, metric capture against the test set.
/// `local_params_out`, when given, receives each client's post-training
/// parameter vector for this round.
metrics::RoundRecord run_round(ExperimentState& state, const std::vector<Client>& clients,
                               const data::Dataset& clean_train, const TrainingConfig& cfg,
                               const agg::AggregatorSpec& aggregator,
                               attacks::AttackRuntime* attack, const data::Dataset& test,
                               std::vector<ParamVector>* local_params_out = nullptr);

/// cfg.rounds rounds from the initial model. Records are appended to
/// `records` as rounds complete, so a failing round leaves the earlier
/// records with the caller (the failure is rethrown with round context).
void run_experiment(const nn::Model& initial, const std::vector<Client>& clients,
                    const data::Dataset& clean_train, const TrainingConfig& cfg,
                    const agg::AggregatorSpec& aggregator, attacks::AttackRuntime* attack,
                    const data::Dataset& test, std::vector<metrics::RoundRecord>& records,
                    nn::Model* final_model = nullptr,
                    std::vector<nn::Model>* final_locals = nullptr);

std::vector<Client> make_clients(const data::Partition& partition,
                                 const std::vector<int>& malicious_ids);

}  // namespace fedsim::fl
