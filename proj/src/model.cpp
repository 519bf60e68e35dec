#include "fedsim/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim::nn {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::flatten: return "flatten";
    }
    return "unknown";
}

LayerSpec LayerSpec::Dense(int in, int out) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in_features = in;
    s.out_features = out;
    return s;
}

LayerSpec LayerSpec::Conv2d(int in_ch, int out_ch, int kernel, int stride, int padding) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::Relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
}

LayerSpec LayerSpec::BatchNorm() {
    LayerSpec s;
    s.kind = LayerKind::batchnorm;
    return s;
}

LayerSpec LayerSpec::MaxPool(int pool, int stride) {
    LayerSpec s;
    s.kind = LayerKind::maxpool;
    s.pool = pool;
    s.pool_stride = stride > 0 ? stride : pool;
    return s;
}

LayerSpec LayerSpec::Flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
}

bool Architecture::operator==(const Architecture& other) const {
    if (input_shape != other.input_shape || num_classes != other.num_classes ||
        layers.size() != other.layers.size()) {
        return false;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = other.layers[i];
        if (a.kind != b.kind || a.in_features != b.in_features || a.out_features != b.out_features ||
            a.in_channels != b.in_channels || a.out_channels != b.out_channels || a.kernel != b.kernel ||
            a.stride != b.stride || a.padding != b.padding || a.pool != b.pool ||
            a.pool_stride != b.pool_stride) {
            return false;
        }
    }
    return true;
}

Architecture mlp_architecture(int input_dim, const std::vector<int>& hidden, int num_classes) {
    Architecture arch;
    arch.input_shape = {input_dim};
    arch.num_classes = num_classes;
    int prev = input_dim;
    for (int h : hidden) {
        arch.layers.push_back(LayerSpec::Dense(prev, h));
        arch.layers.push_back(LayerSpec::Relu());
        prev = h;
    }
    arch.layers.push_back(LayerSpec::Dense(prev, num_classes));
    return arch;
}

namespace {

[[noreturn]] void layer_error(std::size_t index, const LayerSpec& spec, const std::string& msg) {
    throw std::invalid_argument("layer " + std::to_string(index) + " (" + layer_kind_name(spec.kind) +
                                "): " + msg);
}

std::size_t flat_size(const std::vector<int>& shape) {
    return shape_product(shape);
}

}  // namespace

Model build_model(const Architecture& arch, std::uint64_t seed) {
    if (arch.num_classes < 2) {
        throw std::invalid_argument("model needs at least 2 classes, got " +
                                    std::to_string(arch.num_classes));
    }
    if (arch.layers.empty()) throw std::invalid_argument("model needs at least one layer");

    Model m;
    m.arch = arch;

    auto layout = std::make_shared<ParamLayout>();
    std::vector<int> shape = arch.input_shape;
    std::size_t offset = 0;

    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerSpec& spec = arch.layers[i];
        LayerPlan plan;
        plan.spec = spec;
        plan.in_shape = shape;
        plan.param_offset = offset;

        const std::string tag = "layer" + std::to_string(i) + "_" + layer_kind_name(spec.kind);

        switch (spec.kind) {
            case LayerKind::dense: {
                if (shape.size() != 1) layer_error(i, spec, "expects flat input, got " + shape_to_string(shape));
                if (shape[0] != spec.in_features) {
                    layer_error(i, spec, "in_features " + std::to_string(spec.in_features) +
                                             " but incoming width " + std::to_string(shape[0]));
                }
                if (spec.out_features <= 0) layer_error(i, spec, "out_features must be positive");
                plan.param_size = static_cast<std::size_t>(spec.out_features) * spec.in_features +
                                  static_cast<std::size_t>(spec.out_features);
                layout->segments.push_back({tag + "_W", offset,
                                            static_cast<std::size_t>(spec.out_features) * spec.in_features,
                                            true});
                layout->segments.push_back({tag + "_b",
                                            offset + static_cast<std::size_t>(spec.out_features) * spec.in_features,
                                            static_cast<std::size_t>(spec.out_features), true});
                shape = {spec.out_features};
                break;
            }
            case LayerKind::conv2d: {
                if (shape.size() != 3) layer_error(i, spec, "expects (C,H,W) input, got " + shape_to_string(shape));
                if (shape[0] != spec.in_channels) {
                    layer_error(i, spec, "in_channels " + std::to_string(spec.in_channels) +
                                             " but incoming channels " + std::to_string(shape[0]));
                }
                if (spec.kernel <= 0 || spec.stride <= 0 || spec.padding < 0 || spec.out_channels <= 0) {
                    layer_error(i, spec, "invalid kernel/stride/padding/out_channels");
                }
                const int oh = (shape[1] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
                const int ow = (shape[2] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
                if (oh <= 0 || ow <= 0) {
                    layer_error(i, spec, "kernel " + std::to_string(spec.kernel) + " does not fit input " +
                                             shape_to_string(shape));
                }
                const std::size_t wsize = static_cast<std::size_t>(spec.out_channels) * spec.in_channels *
                                          spec.kernel * spec.kernel;
                plan.param_size = wsize + static_cast<std::size_t>(spec.out_channels);
                layout->segments.push_back({tag + "_K", offset, wsize, true});
                layout->segments.push_back({tag + "_b", offset + wsize,
                                            static_cast<std::size_t>(spec.out_channels), true});
                shape = {spec.out_channels, oh, ow};
                break;
            }
            case LayerKind::relu:
                plan.param_size = 0;
                break;
            case LayerKind::batchnorm: {
                int features = 0;
                if (shape.size() == 1) features = shape[0];
                else if (shape.size() == 3) features = shape[0];
                else layer_error(i, spec, "expects flat or (C,H,W) input, got " + shape_to_string(shape));
                plan.bn_features = features;
                const auto f = static_cast<std::size_t>(features);
                plan.param_size = 4 * f;
                layout->segments.push_back({tag + "_gamma", offset, f, true});
                layout->segments.push_back({tag + "_beta", offset + f, f, true});
                layout->segments.push_back({tag + "_running_mean", offset + 2 * f, f, false});
                layout->segments.push_back({tag + "_running_var", offset + 3 * f, f, false});
                break;
            }
            case LayerKind::maxpool: {
                if (shape.size() != 3) layer_error(i, spec, "expects (C,H,W) input, got " + shape_to_string(shape));
                if (spec.pool <= 0 || spec.pool_stride <= 0) layer_error(i, spec, "invalid pool/stride");
                const int oh = (shape[1] - spec.pool) / spec.pool_stride + 1;
                const int ow = (shape[2] - spec.pool) / spec.pool_stride + 1;
                if (oh <= 0 || ow <= 0) {
                    layer_error(i, spec, "pool " + std::to_string(spec.pool) + " does not fit input " +
                                             shape_to_string(shape));
                }
                plan.param_size = 0;
                shape = {shape[0], oh, ow};
                break;
            }
            case LayerKind::flatten: {
                plan.param_size = 0;
                shape = {static_cast<int>(flat_size(shape))};
                break;
            }
        }

        plan.out_shape = shape;
        offset += plan.param_size;
        m.plan.push_back(plan);
    }

    if (shape.size() != 1 || shape[0] != arch.num_classes) {
        throw std::invalid_argument("final layer emits " + shape_to_string(shape) + ", expected (" +
                                    std::to_string(arch.num_classes) + ") logits");
    }

    layout->total = offset;
    layout->validate();
    m.layout = layout;

    // Deterministic init: Glorot-uniform weights, zero biases.
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));
    m.params.values.assign(offset, 0.0);
    m.params.layout = m.layout;
    for (const auto& plan : m.plan) {
        double* p = m.params.values.data() + plan.param_offset;
        switch (plan.spec.kind) {
            case LayerKind::dense: {
                const int fan_in = plan.spec.in_features;
                const int fan_out = plan.spec.out_features;
                const double a = std::sqrt(6.0 / (fan_in + fan_out));
                const std::size_t wsize = static_cast<std::size_t>(fan_in) * fan_out;
                for (std::size_t j = 0; j < wsize; ++j) p[j] = rng.uniform(-a, a);
                break;
            }
            case LayerKind::conv2d: {
                const int k2 = plan.spec.kernel * plan.spec.kernel;
                const int fan_in = plan.spec.in_channels * k2;
                const int fan_out = plan.spec.out_channels * k2;
                const double a = std::sqrt(6.0 / (fan_in + fan_out));
                const std::size_t wsize = static_cast<std::size_t>(plan.spec.out_channels) *
                                          plan.spec.in_channels * k2;
                for (std::size_t j = 0; j < wsize; ++j) p[j] = rng.uniform(-a, a);
                break;
            }
            case LayerKind::batchnorm: {
                const auto f = static_cast<std::size_t>(plan.bn_features);
                for (std::size_t j = 0; j < f; ++j) p[j] = 1.0;              // gamma
                for (std::size_t j = 3 * f; j < 4 * f; ++j) p[j] = 1.0;      // running_var
                break;
            }
            default:
                break;
        }
    }
    return m;
}

Model with_params(const Model& reference, ParamVector params) {
    if (params.values.size() != reference.params.values.size()) {
        throw std::invalid_argument("with_params: expected " +
                                    std::to_string(reference.params.values.size()) + " values, got " +
                                    std::to_string(params.values.size()));
    }
    Model m = reference;
    m.params.values = std::move(params.values);
    m.params.layout = reference.layout;
    return m;
}

BnParamView bn_view(const LayerPlan& layer, ParamVector& params) {
    if (layer.spec.kind != LayerKind::batchnorm) {
        throw std::logic_error("bn_view on non-batchnorm layer");
    }
    const auto f = static_cast<std::size_t>(layer.bn_features);
    double* base = params.values.data() + layer.param_offset;
    return BnParamView{base, base + f, base + 2 * f, base + 3 * f, layer.bn_features};
}

}  // namespace fedsim::nn
