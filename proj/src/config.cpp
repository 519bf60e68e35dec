#include "fedsim/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace fedsim {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument("config: unknown key '" + path + key + "'");
        }
    }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

int get_positive(const json& obj, const std::string& key, int fallback, const std::string& path) {
    const int v = get_or<int>(obj, key, fallback);
    if (v < 1) throw std::invalid_argument("config: '" + path + key + "' must be >= 1");
    return v;
}

DatasetSpec parse_dataset(const json& j) {
    reject_unknown(j, "dataset.",
                   {"kind", "num_classes", "per_class_train", "per_class_test", "dim", "spread",
                    "radius", "colocate", "train_images", "train_labels", "test_images",
                    "test_labels", "subset_per_class"});
    DatasetSpec spec;
    const std::string kind = get_or<std::string>(j, "kind", "blobs");
    if (kind == "blobs") {
        spec.kind = DatasetSpec::Kind::blobs;
        spec.num_classes = get_positive(j, "num_classes", spec.num_classes, "dataset.");
        spec.per_class_train = get_positive(j, "per_class_train", spec.per_class_train, "dataset.");
        spec.per_class_test = get_positive(j, "per_class_test", spec.per_class_test, "dataset.");
        spec.dim = get_positive(j, "dim", spec.dim, "dataset.");
        spec.spread = get_or<double>(j, "spread", spec.spread);
        spec.geometry.radius = get_or<double>(j, "radius", spec.geometry.radius);
        if (j.contains("colocate")) {
            for (const auto& entry : j.at("colocate")) {
                reject_unknown(entry, "dataset.colocate.", {"class", "anchor", "closeness"});
                data::BlobGeometry::Colocate co;
                co.cls = entry.at("class").get<int>();
                co.anchor = entry.at("anchor").get<int>();
                co.closeness = entry.at("closeness").get<double>();
                if (co.closeness < 0.0 || co.closeness > 1.0) {
                    throw std::invalid_argument("config: 'dataset.colocate.closeness' must be in [0, 1]");
                }
                spec.geometry.colocate.push_back(co);
            }
        }
    } else if (kind == "idx") {
        spec.kind = DatasetSpec::Kind::idx;
        for (const char* key : {"train_images", "train_labels", "test_images", "test_labels"}) {
            if (!j.contains(key)) {
                throw std::invalid_argument(std::string("config: missing required key 'dataset.") +
                                            key + "' for idx datasets");
            }
        }
        spec.train_images = j.at("train_images").get<std::string>();
        spec.train_labels = j.at("train_labels").get<std::string>();
        spec.test_images = j.at("test_images").get<std::string>();
        spec.test_labels = j.at("test_labels").get<std::string>();
        spec.subset_per_class = get_or<int>(j, "subset_per_class", 0);
        if (spec.subset_per_class < 0) {
            throw std::invalid_argument("config: 'dataset.subset_per_class' must be >= 0");
        }
    } else {
        throw std::invalid_argument("config: 'dataset.kind' must be 'blobs' or 'idx'");
    }
    return spec;
}

PartitionSpec parse_partition(const json& j) {
    reject_unknown(j, "partition.", {"scheme", "beta", "clients"});
    PartitionSpec spec;
    const std::string scheme = get_or<std::string>(j, "scheme", "iid");
    if (scheme == "iid") spec.scheme = data::Scheme::iid;
    else if (scheme == "dirichlet") spec.scheme = data::Scheme::dirichlet;
    else throw std::invalid_argument("config: 'partition.scheme' must be 'iid' or 'dirichlet'");
    spec.beta = get_or<double>(j, "beta", spec.beta);
    if (spec.scheme == data::Scheme::dirichlet && spec.beta <= 0.0) {
        throw std::invalid_argument("config: 'partition.beta' must be > 0");
    }
    spec.clients = get_positive(j, "clients", spec.clients, "partition.");
    return spec;
}

nn::LayerSpec parse_layer(const json& j, const std::string& path) {
    reject_unknown(j, path,
                   {"type", "in", "out", "in_channels", "out_channels", "kernel", "stride",
                    "padding", "pool"});
    const std::string type = j.at("type").get<std::string>();
    if (type == "dense") return nn::LayerSpec::Dense(j.at("in").get<int>(), j.at("out").get<int>());
    if (type == "conv2d") {
        return nn::LayerSpec::Conv2d(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                                     j.at("kernel").get<int>(), get_or<int>(j, "stride", 1),
                                     get_or<int>(j, "padding", 0));
    }
    if (type == "relu") return nn::LayerSpec::Relu();
    if (type == "batchnorm") return nn::LayerSpec::BatchNorm();
    if (type == "maxpool") {
        return nn::LayerSpec::MaxPool(j.at("pool").get<int>(), get_or<int>(j, "stride", 0));
    }
    if (type == "flatten") return nn::LayerSpec::Flatten();
    throw std::invalid_argument("config: unknown layer type '" + type + "'");
}

nn::Architecture parse_layers_architecture(const json& j, const std::string& path) {
    nn::Architecture arch;
    if (!j.contains("input_shape")) {
        throw std::invalid_argument("config: '" + path + "input_shape' required for layer lists");
    }
    arch.input_shape = j.at("input_shape").get<std::vector<int>>();
    for (const auto& layer : j.at("layers")) arch.layers.push_back(parse_layer(layer, path + "layers."));
    return arch;
}

ModelSpec parse_model(const json& j) {
    reject_unknown(j, "model.", {"kind", "hidden", "input_shape", "layers"});
    ModelSpec spec;
    const std::string kind = get_or<std::string>(j, "kind", "mlp");
    if (kind == "mlp") {
        spec.kind = ModelSpec::Kind::mlp;
        spec.hidden = get_or<std::vector<int>>(j, "hidden", spec.hidden);
        for (int h : spec.hidden) {
            if (h < 1) throw std::invalid_argument("config: 'model.hidden' entries must be >= 1");
        }
    } else if (kind == "layers") {
        spec.kind = ModelSpec::Kind::layers;
        spec.custom = parse_layers_architecture(j, "model.");
    } else {
        throw std::invalid_argument("config: 'model.kind' must be 'mlp' or 'layers'");
    }
    return spec;
}

fl::TrainingConfig parse_training(const json& j) {
    reject_unknown(j, "training.",
                   {"rounds", "local_epochs", "batch_size", "optimizer", "learning_rate",
                    "adam_beta1", "adam_beta2", "adam_epsilon"});
    fl::TrainingConfig cfg;
    cfg.rounds = get_positive(j, "rounds", 10, "training.");
    cfg.local_epochs = get_or<int>(j, "local_epochs", 5);
    if (cfg.local_epochs < 0) throw std::invalid_argument("config: 'training.local_epochs' must be >= 0");
    cfg.batch_size = get_positive(j, "batch_size", 64, "training.");
    const std::string opt = get_or<std::string>(j, "optimizer", "adam");
    const double lr = get_or<double>(j, "learning_rate", 1e-3);
    if (lr <= 0.0) throw std::invalid_argument("config: 'training.learning_rate' must be > 0");
    if (opt == "adam") {
        cfg.optimizer_template = nn::OptimizerState::adam(
            lr, get_or<double>(j, "adam_beta1", 0.9), get_or<double>(j, "adam_beta2", 0.999),
            get_or<double>(j, "adam_epsilon", 1e-8));
    } else if (opt == "sgd") {
        cfg.optimizer_template = nn::OptimizerState::sgd(lr);
    } else {
        throw std::invalid_argument("config: 'training.optimizer' must be 'adam' or 'sgd'");
    }
    return cfg;
}

AttackSpec parse_attack(const json& j) {
    reject_unknown(j, "attack.",
                   {"kind", "source_class", "target_class", "malicious_fraction",
                    "malicious_clients", "malicious_selection", "boost_factor", "stealth_rho",
                    "stealth_benign_weight", "altmin_poison_steps", "altmin_stealth_steps",
                    "start_round"});
    AttackSpec spec;
    spec.enabled = true;
    spec.cfg.kind = attacks::attack_kind_from_name(get_or<std::string>(j, "kind", "label_flip"));
    if (!j.contains("source_class") || !j.contains("target_class")) {
        throw std::invalid_argument("config: 'attack.source_class' and 'attack.target_class' are required");
    }
    spec.cfg.source_class = j.at("source_class").get<int>();
    spec.cfg.target_class = j.at("target_class").get<int>();
    if (j.contains("malicious_clients")) {
        spec.malicious_clients = j.at("malicious_clients").get<std::vector<int>>();
        if (spec.malicious_clients.empty()) {
            throw std::invalid_argument("config: 'attack.malicious_clients' must be non-empty");
        }
    } else {
        spec.malicious_fraction = get_or<double>(j, "malicious_fraction", 0.1);
        if (spec.malicious_fraction <= 0.0 || spec.malicious_fraction > 1.0) {
            throw std::invalid_argument("config: 'attack.malicious_fraction' must be in (0, 1]");
        }
    }
    const std::string selection = get_or<std::string>(j, "malicious_selection", "lowest");
    if (selection == "random") spec.random_selection = true;
    else if (selection != "lowest") {
        throw std::invalid_argument("config: 'attack.malicious_selection' must be 'lowest' or 'random'");
    }
    if (j.contains("boost_factor")) {
        spec.cfg.boost_factor = j.at("boost_factor").get<double>();
        spec.boost_factor_set = true;
        if (spec.cfg.boost_factor <= 0.0) {
            throw std::invalid_argument("config: 'attack.boost_factor' must be > 0");
        }
    }
    spec.cfg.stealth_rho = get_or<double>(j, "stealth_rho", 1.0);
    spec.cfg.stealth_benign_weight = get_or<double>(j, "stealth_benign_weight", 1.0);
    spec.cfg.altmin_poison_steps = get_or<int>(j, "altmin_poison_steps", 1);
    spec.cfg.altmin_stealth_steps = get_or<int>(j, "altmin_stealth_steps", 1);
    spec.cfg.start_round = get_or<int>(j, "start_round", 1);
    return spec;
}

BotpaSpec parse_botpa(const json& j) {
    reject_unknown(j, "botpa.",
                   {"intermediate_classes", "surrogate", "surrogate_epochs",
                    "contrib_checkpoint_epoch", "per_class_sample_cap", "batch_size"});
    BotpaSpec spec;
    spec.enabled = true;
    spec.cfg.num_intermediate = get_positive(j, "intermediate_classes", 1, "botpa.");
    if (j.contains("surrogate")) {
        const json& s = j.at("surrogate");
        if (s.is_string()) {
            if (s.get<std::string>() != "identical") {
                throw std::invalid_argument("config: 'botpa.surrogate' must be 'identical' or a layer list");
            }
        } else {
            spec.cfg.surrogate_identical = false;
            spec.cfg.surrogate_custom = parse_layers_architecture(s, "botpa.surrogate.");
        }
    }
    spec.cfg.surrogate_epochs = get_positive(j, "surrogate_epochs", 6, "botpa.");
    spec.cfg.contrib_checkpoint_epoch = get_or<int>(j, "contrib_checkpoint_epoch", 0);
    spec.cfg.per_class_sample_cap = get_or<int>(j, "per_class_sample_cap", 100);
    spec.cfg.batch_size = get_positive(j, "batch_size", 64, "botpa.");
    return spec;
}

std::pair<agg::AggregatorSpec, bool> parse_aggregator(const json& j) {
    reject_unknown(j, "aggregator.", {"kind", "f_byzantine", "m_select", "trim_fraction",
                                      "flame_lambda"});
    agg::AggregatorSpec spec;
    bool f_set = false;
    spec.kind = agg::agg_kind_from_name(get_or<std::string>(j, "kind", "fedavg"));
    if (j.contains("f_byzantine")) {
        spec.f_byzantine = j.at("f_byzantine").get<int>();
        if (spec.f_byzantine < 0) throw std::invalid_argument("config: 'aggregator.f_byzantine' must be >= 0");
        f_set = true;
    }
    spec.m_select = get_or<int>(j, "m_select", 1);
    if (spec.m_select < 1) throw std::invalid_argument("config: 'aggregator.m_select' must be >= 1");
    spec.trim_fraction = get_or<double>(j, "trim_fraction", 0.0);
    if (spec.trim_fraction < 0.0 || spec.trim_fraction >= 0.5) {
        throw std::invalid_argument("config: 'aggregator.trim_fraction' must be in [0, 0.5)");
    }
    spec.flame_lambda = get_or<double>(j, "flame_lambda", 1e-3);
    if (spec.flame_lambda < 0.0) throw std::invalid_argument("config: 'aggregator.flame_lambda' must be >= 0");
    return {spec, f_set};
}

MetricsSpec parse_metrics(const json& j) {
    reject_unknown(j, "metrics.", {"window_from", "window_to"});
    MetricsSpec spec;
    spec.window_from = get_or<int>(j, "window_from", 0);
    spec.window_to = get_or<int>(j, "window_to", 0);
    return spec;
}

SweepSpec parse_sweep(const json& j) {
    reject_unknown(j, "sweep.", {"axis", "values"});
    SweepSpec spec;
    const std::string axis = j.at("axis").get<std::string>();
    if (axis == "malicious_fraction") spec.axis = SweepSpec::Axis::malicious_fraction;
    else if (axis == "intermediate_classes") spec.axis = SweepSpec::Axis::intermediate_classes;
    else if (axis == "beta") spec.axis = SweepSpec::Axis::beta;
    else if (axis == "aggregator") spec.axis = SweepSpec::Axis::aggregator;
    else throw std::invalid_argument("config: unknown sweep axis '" + axis + "'");
    if (!j.contains("values") || j.at("values").empty()) {
        throw std::invalid_argument("config: 'sweep.values' must be a non-empty array");
    }
    if (spec.axis == SweepSpec::Axis::aggregator) {
        spec.agg_values = j.at("values").get<std::vector<std::string>>();
    } else {
        spec.values = j.at("values").get<std::vector<double>>();
    }
    return spec;
}

}  // namespace

ExperimentConfig parse_config_json(const json& j) {
    reject_unknown(j, "",
                   {"name", "seed", "runs", "output_dir", "serial", "export_features", "dataset",
                    "partition", "model", "training", "attack", "botpa", "aggregator", "metrics",
                    "sweep", "select_n_values"});
    ExperimentConfig cfg;
    cfg.name = get_or<std::string>(j, "name", cfg.name);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.runs = get_positive(j, "runs", 1, "");
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.serial = get_or<bool>(j, "serial", true);
    cfg.export_features = get_or<bool>(j, "export_features", false);
    if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"));
    if (j.contains("partition")) cfg.partition = parse_partition(j.at("partition"));
    if (j.contains("model")) cfg.model = parse_model(j.at("model"));
    if (j.contains("training")) cfg.training = parse_training(j.at("training"));
    if (j.contains("attack")) cfg.attack = parse_attack(j.at("attack"));
    if (j.contains("botpa")) cfg.botpa_spec = parse_botpa(j.at("botpa"));
    if (j.contains("aggregator")) {
        auto [spec, f_set] = parse_aggregator(j.at("aggregator"));
        cfg.aggregator = spec;
        cfg.aggregator_f_set = f_set;
    }
    if (j.contains("metrics")) cfg.metrics = parse_metrics(j.at("metrics"));
    if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
    if (j.contains("select_n_values")) {
        cfg.select_n_values = j.at("select_n_values").get<std::vector<int>>();
    }
    cfg.training.parallel_clients = !cfg.serial;
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config_json(j);
}

void ExperimentConfig::validate() const {
    training.validate();

    const int num_classes = dataset.kind == DatasetSpec::Kind::blobs ? dataset.num_classes : 10;
    if (attack.enabled) {
        if (attack.cfg.source_class == attack.cfg.target_class) {
            throw std::invalid_argument("config: 'attack.source_class' must differ from 'attack.target_class'");
        }
        if (dataset.kind == DatasetSpec::Kind::blobs &&
            (attack.cfg.source_class < 0 || attack.cfg.source_class >= num_classes ||
             attack.cfg.target_class < 0 || attack.cfg.target_class >= num_classes)) {
            throw std::invalid_argument("config: attack class ids out of range for the dataset");
        }
        if (!attack.malicious_clients.empty()) {
            for (int id : attack.malicious_clients) {
                if (id < 0 || id >= partition.clients) {
                    throw std::invalid_argument("config: 'attack.malicious_clients' id out of range");
                }
            }
        }
    }
    if (botpa_spec.enabled) {
        if (!attack.enabled) {
            throw std::invalid_argument(
                "config: 'botpa' requires an 'attack' section (boosting augments an attack)");
        }
        if (dataset.kind == DatasetSpec::Kind::blobs) {
            botpa_spec.cfg.validate(num_classes);
        }
    }
    if (metrics.window_from != 0 || metrics.window_to != 0) {
        const int from = metrics.window_from == 0 ? 1 : metrics.window_from;
        const int to = metrics.window_to == 0 ? training.rounds : metrics.window_to;
        if (from < 1 || to < from || to > training.rounds) {
            throw std::invalid_argument("config: 'metrics.window_from/window_to' must satisfy 1 <= from <= to <= rounds");
        }
    }
    for (int n : select_n_values) {
        if (n < 1) throw std::invalid_argument("config: 'select_n_values' entries must be >= 1");
    }
}

nn::Architecture resolve_architecture(const ExperimentConfig& cfg,
                                      const std::vector<int>& sample_shape, int num_classes) {
    if (cfg.model.kind == ModelSpec::Kind::layers) {
        nn::Architecture arch = cfg.model.custom;
        arch.num_classes = num_classes;
        if (!same_shape(arch.input_shape, sample_shape)) {
            throw std::invalid_argument("config: model input_shape " +
                                        shape_to_string(arch.input_shape) +
                                        " does not match dataset sample shape " +
                                        shape_to_string(sample_shape));
        }
        return arch;
    }
    // mlp: flatten leading if the samples are multi-dimensional
    nn::Architecture arch;
    arch.input_shape = sample_shape;
    arch.num_classes = num_classes;
    int width = static_cast<int>(shape_product(sample_shape));
    if (sample_shape.size() > 1) arch.layers.push_back(nn::LayerSpec::Flatten());
    for (int h : cfg.model.hidden) {
        arch.layers.push_back(nn::LayerSpec::Dense(width, h));
        arch.layers.push_back(nn::LayerSpec::Relu());
        width = h;
    }
    arch.layers.push_back(nn::LayerSpec::Dense(width, num_classes));
    return arch;
}

namespace {

json geometry_to_json(const data::BlobGeometry& geo) {
    json colocate = json::array();
    for (const auto& co : geo.colocate) {
        colocate.push_back({{"class", co.cls}, {"anchor", co.anchor}, {"closeness", co.closeness}});
    }
    return colocate;
}

json layers_to_json(const nn::Architecture& arch) {
    json layers = json::array();
    for (const auto& l : arch.layers) {
        json entry{{"type", nn::layer_kind_name(l.kind)}};
        switch (l.kind) {
            case nn::LayerKind::dense:
                entry["in"] = l.in_features;
                entry["out"] = l.out_features;
                break;
            case nn::LayerKind::conv2d:
                entry["in_channels"] = l.in_channels;
                entry["out_channels"] = l.out_channels;
                entry["kernel"] = l.kernel;
                entry["stride"] = l.stride;
                entry["padding"] = l.padding;
                break;
            case nn::LayerKind::maxpool:
                entry["pool"] = l.pool;
                entry["stride"] = l.pool_stride;
                break;
            default:
                break;
        }
        layers.push_back(entry);
    }
    return layers;
}

}  // namespace

json ExperimentConfig::to_json() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["runs"] = runs;
    j["output_dir"] = output_dir;
    j["serial"] = serial;
    j["export_features"] = export_features;

    json ds;
    if (dataset.kind == DatasetSpec::Kind::blobs) {
        ds["kind"] = "blobs";
        ds["num_classes"] = dataset.num_classes;
        ds["per_class_train"] = dataset.per_class_train;
        ds["per_class_test"] = dataset.per_class_test;
        ds["dim"] = dataset.dim;
        ds["spread"] = dataset.spread;
        ds["radius"] = dataset.geometry.radius;
        ds["colocate"] = geometry_to_json(dataset.geometry);
    } else {
        ds["kind"] = "idx";
        ds["train_images"] = dataset.train_images;
        ds["train_labels"] = dataset.train_labels;
        ds["test_images"] = dataset.test_images;
        ds["test_labels"] = dataset.test_labels;
        ds["subset_per_class"] = dataset.subset_per_class;
    }
    j["dataset"] = ds;

    j["partition"] = {{"scheme", partition.scheme == data::Scheme::iid ? "iid" : "dirichlet"},
                      {"beta", partition.beta},
                      {"clients", partition.clients}};

    if (model.kind == ModelSpec::Kind::mlp) {
        j["model"] = {{"kind", "mlp"}, {"hidden", model.hidden}};
    } else {
        j["model"] = {{"kind", "layers"},
                      {"input_shape", model.custom.input_shape},
                      {"layers", layers_to_json(model.custom)}};
    }

    j["training"] = {{"rounds", training.rounds},
                     {"local_epochs", training.local_epochs},
                     {"batch_size", training.batch_size},
                     {"optimizer", training.optimizer_template.kind == nn::OptKind::adam ? "adam" : "sgd"},
                     {"learning_rate", training.optimizer_template.learning_rate},
                     {"adam_beta1", training.optimizer_template.adam_beta1},
                     {"adam_beta2", training.optimizer_template.adam_beta2},
                     {"adam_epsilon", training.optimizer_template.adam_epsilon}};

    if (attack.enabled) {
        json a;
        a["kind"] = attacks::attack_kind_name(attack.cfg.kind);
        a["source_class"] = attack.cfg.source_class;
        a["target_class"] = attack.cfg.target_class;
        if (!attack.malicious_clients.empty()) a["malicious_clients"] = attack.malicious_clients;
        else a["malicious_fraction"] = attack.malicious_fraction;
        a["malicious_selection"] = attack.random_selection ? "random" : "lowest";
        if (attack.boost_factor_set) a["boost_factor"] = attack.cfg.boost_factor;
        a["stealth_rho"] = attack.cfg.stealth_rho;
        a["stealth_benign_weight"] = attack.cfg.stealth_benign_weight;
        a["altmin_poison_steps"] = attack.cfg.altmin_poison_steps;
        a["altmin_stealth_steps"] = attack.cfg.altmin_stealth_steps;
        a["start_round"] = attack.cfg.start_round;
        j["attack"] = a;
    }

    if (botpa_spec.enabled) {
        json b;
        b["intermediate_classes"] = botpa_spec.cfg.num_intermediate;
        if (botpa_spec.cfg.surrogate_identical) {
            b["surrogate"] = "identical";
        } else {
            b["surrogate"] = {{"input_shape", botpa_spec.cfg.surrogate_custom.input_shape},
                              {"layers", layers_to_json(botpa_spec.cfg.surrogate_custom)}};
        }
        b["surrogate_epochs"] = botpa_spec.cfg.surrogate_epochs;
        b["contrib_checkpoint_epoch"] = botpa_spec.cfg.checkpoint_epoch();
        b["per_class_sample_cap"] = botpa_spec.cfg.per_class_sample_cap;
        b["batch_size"] = botpa_spec.cfg.batch_size;
        j["botpa"] = b;
    }

    j["aggregator"] = {{"kind", agg::agg_kind_name(aggregator.kind)},
                       {"f_byzantine", aggregator.f_byzantine},
                       {"m_select", aggregator.m_select},
                       {"trim_fraction", aggregator.trim_fraction},
                       {"flame_lambda", aggregator.flame_lambda}};

    j["metrics"] = {{"window_from", metrics.window_from}, {"window_to", metrics.window_to}};

    if (sweep) {
        json s;
        switch (sweep->axis) {
            case SweepSpec::Axis::malicious_fraction: s["axis"] = "malicious_fraction"; break;
            case SweepSpec::Axis::intermediate_classes: s["axis"] = "intermediate_classes"; break;
            case SweepSpec::Axis::beta: s["axis"] = "beta"; break;
            case SweepSpec::Axis::aggregator: s["axis"] = "aggregator"; break;
        }
        if (sweep->axis == SweepSpec::Axis::aggregator) s["values"] = sweep->agg_values;
        else s["values"] = sweep->values;
        j["sweep"] = s;
    }
    if (!select_n_values.empty()) j["select_n_values"] = select_n_values;
    return j;
}

}  // namespace fedsim
