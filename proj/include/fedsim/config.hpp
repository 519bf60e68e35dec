#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/aggregators.hpp"
#include "fedsim/attacks.hpp"
#include "fedsim/botpa.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/fl_runtime.hpp"
#include "fedsim/partition.hpp"

namespace fedsim {

struct DatasetSpec {
    enum class Kind { blobs, idx };
    Kind kind = Kind::blobs;
    // blobs
    int num_classes = 10;
    int per_class_train = 500;
    int per_class_test = 100;
    int dim = 16;
    double spread = 1.0;
    data::BlobGeometry geometry;
    // idx
    std::string train_images, train_labels, test_images, test_labels;
    int subset_per_class = 0;  // 0 = all
};

struct PartitionSpec {
    data::Scheme scheme = data::Scheme::iid;
    double beta = 0.5;
    int clients = 10;
};

struct ModelSpec {
    enum class Kind { mlp, layers };
    Kind kind = Kind::mlp;
    std::vector<int> hidden{32};
    nn::Architecture custom;  // kind == layers
};

struct AttackSpec {
    bool enabled = false;
    attacks::AttackConfig cfg;
    double malicious_fraction = 0.0;    // used when malicious_clients is empty
    std::vector<int> malicious_clients; // explicit list wins
    bool random_selection = false;      // per-repetition random malicious set
    bool boost_factor_set = false;      // false -> default n / k_mal
};

struct BotpaSpec {
    bool enabled = false;
    botpa::BotpaConfig cfg;
};

struct MetricsSpec {
    int window_from = 0;  // 0 -> resolved to max(1, rounds - 4)
    int window_to = 0;    // 0 -> resolved to rounds
};

struct SweepSpec {
    enum class Axis { malicious_fraction, intermediate_classes, beta, aggregator };
    Axis axis = Axis::malicious_fraction;
    std::vector<double> values;             // numeric axes
    std::vector<std::string> agg_values;    // aggregator axis
};

struct ExperimentConfig {
    std::string name = "run";
    std::uint64_t seed = 0;
    int runs = 1;
    std::string output_dir = "results";
    bool serial = true;
    bool export_features = false;
    DatasetSpec dataset;
    PartitionSpec partition;
    ModelSpec model;
    fl::TrainingConfig training;
    AttackSpec attack;
    BotpaSpec botpa_spec;
    agg::AggregatorSpec aggregator;
    bool aggregator_f_set = false;  // false -> f_byzantine defaults to attacker count
    MetricsSpec metrics;
    std::optional<SweepSpec> sweep;
    std::vector<int> select_n_values;  // select-n verb candidates (default 1..N_C-2)

    /// Cross-field invariants (paired runs need an attack, window within
    /// rounds, N <= N_C - 2, ...). Throws naming the offending key.
    void validate() const;

    /// Fully-resolved echo written into the results directory.
    nlohmann::json to_json() const;
};

/// Parse + validate a JSON config file. Unknown keys are rejected with the
/// offending key path; defaults are applied to absent optional keys.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);

/// The architecture the config describes for a given sample shape.
nn::Architecture resolve_architecture(const ExperimentConfig& cfg,
                                      const std::vector<int>& sample_shape, int num_classes);

}  // namespace fedsim
