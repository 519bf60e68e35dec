#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedsim/param.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim::nn {

enum class LayerKind { dense, conv2d, relu, batchnorm, maxpool, flatten };

std::string layer_kind_name(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    // dense
    int in_features = 0;
    int out_features = 0;
    // conv2d
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    // maxpool
    int pool = 0;
    int pool_stride = 0;

    static LayerSpec Dense(int in, int out);
    static LayerSpec Conv2d(int in_ch, int out_ch, int kernel, int stride = 1, int padding = 0);
    static LayerSpec Relu();
    static LayerSpec BatchNorm();
    static LayerSpec MaxPool(int pool, int stride = 0);  // stride 0 -> pool
    static LayerSpec Flatten();
};

struct Architecture {
    std::vector<LayerSpec> layers;
    std::vector<int> input_shape;  // per-sample shape, no batch dimension
    int num_classes = 0;

    bool operator==(const Architecture& other) const;
};

/// Convenience: Dense/ReLU stack ending in a num_classes logits layer.
Architecture mlp_architecture(int input_dim, const std::vector<int>& hidden, int num_classes);

/// A layer with its resolved input/output shapes and parameter placement.
struct LayerPlan {
    LayerSpec spec;
    std::vector<int> in_shape;   // per-sample
    std::vector<int> out_shape;  // per-sample
    std::size_t param_offset = 0;
    std::size_t param_size = 0;
    int bn_features = 0;  // batchnorm only: normalized feature count
};

struct Model {
    Architecture arch;
    std::vector<LayerPlan> plan;
    std::shared_ptr<const ParamLayout> layout;
    ParamVector params;

    int num_classes() const { return arch.num_classes; }
    const std::vector<int>& input_shape() const { return arch.input_shape; }
};

/// Validates layer shape chaining (throws naming the offending layer),
/// builds the parameter layout and initializes weights deterministically
/// (Glorot-uniform for dense/conv; batch-norm at gamma=1, beta=0,
/// running mean 0 / variance 1).
Model build_model(const Architecture& arch, std::uint64_t seed);

/// Same architecture and layout, different parameter values.
Model with_params(const Model& reference, ParamVector params);

// Batch-norm parameter block order within a layer's segment:
// gamma, beta, running_mean, running_var (each bn_features long).
struct BnParamView {
    double* gamma;
    double* beta;
    double* running_mean;
    double* running_var;
    int features;
};
BnParamView bn_view(const LayerPlan& layer, ParamVector& params);

}  // namespace fedsim::nn
