#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "fedsim/config.hpp"

using namespace fedsim;
using nlohmann::json;

namespace {

json minimal() {
    return json{{"dataset", {{"kind", "blobs"}, {"num_classes", 5}, {"per_class_train", 20},
                             {"per_class_test", 5}, {"dim", 4}}},
                {"partition", {{"scheme", "iid"}, {"clients", 5}}},
                {"training", {{"rounds", 3}}}};
}

json with_attack() {
    json j = minimal();
    j["attack"] = {{"kind", "label_flip"}, {"source_class", 0}, {"target_class", 2},
                   {"malicious_fraction", 0.2}};
    return j;
}

}  // namespace

TEST_CASE("parse_config_json: defaults are applied") {
    const ExperimentConfig cfg = parse_config_json(minimal());
    CHECK(cfg.training.batch_size == 64);
    CHECK(cfg.training.local_epochs == 5);
    CHECK(cfg.training.optimizer_template.kind == nn::OptKind::adam);
    CHECK(cfg.training.optimizer_template.learning_rate == 1e-3);
    CHECK(cfg.aggregator.kind == agg::AggKind::fedavg);
    CHECK(cfg.aggregator.flame_lambda == 1e-3);
    CHECK(cfg.runs == 1);
    CHECK(cfg.serial);
    CHECK(!cfg.attack.enabled);
    CHECK(!cfg.botpa_spec.enabled);
}

TEST_CASE("parse_config_json: unknown keys are rejected by name") {
    json j = minimal();
    j["typo_key"] = 1;
    CHECK_THROWS_WITH_AS(parse_config_json(j), doctest::Contains("typo_key"),
                         std::invalid_argument);

    json j2 = minimal();
    j2["training"]["learning_rte"] = 0.1;
    CHECK_THROWS_WITH_AS(parse_config_json(j2), doctest::Contains("training.learning_rte"),
                         std::invalid_argument);
}

TEST_CASE("parse_config_json: equal source and target classes fail") {
    json j = with_attack();
    j["attack"]["target_class"] = 0;
    CHECK_THROWS_WITH_AS(parse_config_json(j), doctest::Contains("source_class"),
                         std::invalid_argument);
}

TEST_CASE("parse_config_json: too many intermediate classes fail") {
    json j = with_attack();
    j["botpa"] = {{"intermediate_classes", 4}};  // num_classes 5 allows at most 3
    CHECK_THROWS_WITH_AS(parse_config_json(j), doctest::Contains("num_classes"),
                         std::invalid_argument);
}

TEST_CASE("parse_config_json: botpa without attack fails") {
    json j = minimal();
    j["botpa"] = {{"intermediate_classes", 1}};
    CHECK_THROWS_WITH_AS(parse_config_json(j), doctest::Contains("attack"),
                         std::invalid_argument);
}

TEST_CASE("parse_config_json: attack validation") {
    json j = with_attack();
    j["attack"]["malicious_fraction"] = 1.5;
    CHECK_THROWS_AS(parse_config_json(j), std::invalid_argument);

    json j2 = with_attack();
    j2["attack"]["source_class"] = 9;  // out of range for 5 classes
    CHECK_THROWS_AS(parse_config_json(j2), std::invalid_argument);

    json j3 = with_attack();
    j3["attack"]["malicious_clients"] = json::array({0, 7});  // client 7 of 5
    CHECK_THROWS_AS(parse_config_json(j3), std::invalid_argument);
}

TEST_CASE("parse_config_json: window must fit the round count") {
    json j = minimal();
    j["metrics"] = {{"window_from", 2}, {"window_to", 9}};  // rounds = 3
    CHECK_THROWS_AS(parse_config_json(j), std::invalid_argument);
}

TEST_CASE("resolved config echo round-trips") {
    json j = with_attack();
    j["botpa"] = {{"intermediate_classes", 2}, {"surrogate_epochs", 4}};
    j["aggregator"] = {{"kind", "multi_krum"}, {"f_byzantine", 1}, {"m_select", 3}};
    j["metrics"] = {{"window_from", 2}, {"window_to", 3}};
    j["seed"] = 1234;
    j["runs"] = 2;
    const ExperimentConfig cfg = parse_config_json(j);
    const ExperimentConfig reparsed = parse_config_json(cfg.to_json());
    CHECK(cfg.to_json() == reparsed.to_json());
    CHECK(reparsed.aggregator.kind == agg::AggKind::multi_krum);
    CHECK(reparsed.botpa_spec.cfg.num_intermediate == 2);
    CHECK(reparsed.seed == 1234);
}

TEST_CASE("resolve_architecture: mlp flattens image inputs") {
    ExperimentConfig cfg = parse_config_json(minimal());
    cfg.model.hidden = {16};
    const nn::Architecture arch = resolve_architecture(cfg, {1, 6, 6}, 4);
    REQUIRE(arch.layers.size() == 4);
    CHECK(arch.layers[0].kind == nn::LayerKind::flatten);
    CHECK(arch.layers[1].in_features == 36);
    CHECK(arch.num_classes == 4);
    // builds cleanly
    nn::build_model(arch, 1);
}

TEST_CASE("resolve_architecture: custom layer list must match the sample shape") {
    json j = minimal();
    j["model"] = {{"kind", "layers"},
                  {"input_shape", {8}},
                  {"layers", json::array({{{"type", "dense"}, {"in", 8}, {"out", 5}}})}};
    const ExperimentConfig cfg = parse_config_json(j);
    CHECK_THROWS_AS(resolve_architecture(cfg, {9}, 5), std::invalid_argument);
    const nn::Architecture arch = resolve_architecture(cfg, {8}, 5);
    CHECK(arch.layers.size() == 1);
}

TEST_CASE("parse_config_json: sweep section") {
    json j = with_attack();
    j["sweep"] = {{"axis", "malicious_fraction"}, {"values", {0.1, 0.2, 0.3}}};
    const ExperimentConfig cfg = parse_config_json(j);
    REQUIRE(cfg.sweep.has_value());
    CHECK(cfg.sweep->values.size() == 3);

    json bad = with_attack();
    bad["sweep"] = {{"axis", "nonsense"}, {"values", {1.0}}};
    CHECK_THROWS_AS(parse_config_json(bad), std::invalid_argument);
}
