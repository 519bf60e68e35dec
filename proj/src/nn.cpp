#include "fedsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedsim::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kProbFloor = 1e-12;

struct BnAux {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> inv_std;
};

struct Trace {
    std::vector<Tensor> acts;                     // acts[0] = input, acts[i+1] = layer i output
    std::vector<BnAux> bn;                        // indexed by layer, empty unless batchnorm
    std::vector<std::vector<std::size_t>> pool;   // argmax (flat input offset) per output element
};

const double* layer_params(const Model& model, const LayerPlan& plan) {
    return model.params.values.data() + plan.param_offset;
}

Tensor as_batch(const Model& model, const Tensor& x) {
    if (same_shape(x.shape, model.input_shape())) {
        std::vector<int> s = x.shape;
        s.insert(s.begin(), 1);
        return Tensor(std::move(s), x.data);
    }
    if (!x.shape.empty() && x.shape[0] == 1) {
        std::vector<int> rest(x.shape.begin() + 1, x.shape.end());
        if (same_shape(rest, model.input_shape())) return x;
    }
    throw std::invalid_argument("sample shape " + shape_to_string(x.shape) +
                                " does not match model input " + shape_to_string(model.input_shape()));
}

void check_batch_shape(const Model& model, const Tensor& batch) {
    if (batch.shape.empty() || batch.shape[0] < 1) {
        throw std::invalid_argument("batch must have a leading batch dimension");
    }
    std::vector<int> rest(batch.shape.begin() + 1, batch.shape.end());
    if (!same_shape(rest, model.input_shape())) {
        throw std::invalid_argument("batch sample shape " + shape_to_string(rest) +
                                    " does not match model input " +
                                    shape_to_string(model.input_shape()));
    }
}

Tensor dense_forward(const LayerPlan& plan, const double* p, const Tensor& in) {
    const int B = in.shape[0];
    const int ni = plan.spec.in_features;
    const int no = plan.spec.out_features;
    const double* W = p;
    const double* bias = p + static_cast<std::size_t>(no) * ni;
    Tensor out = Tensor::zeros({B, no});
    for (int b = 0; b < B; ++b) {
        const double* x = in.row(static_cast<std::size_t>(b));
        double* y = out.row(static_cast<std::size_t>(b));
        for (int o = 0; o < no; ++o) {
            const double* w = W + static_cast<std::size_t>(o) * ni;
            double s = bias[o];
            for (int i = 0; i < ni; ++i) s += w[i] * x[i];
            y[o] = s;
        }
    }
    return out;
}

void dense_backward(const LayerPlan& plan, const double* p, const Tensor& in, const Tensor& g_out,
                    Tensor& g_in, double* g_params) {
    const int B = in.shape[0];
    const int ni = plan.spec.in_features;
    const int no = plan.spec.out_features;
    const double* W = p;
    double* gW = g_params;
    double* gb = g_params + static_cast<std::size_t>(no) * ni;
    for (int b = 0; b < B; ++b) {
        const double* x = in.row(static_cast<std::size_t>(b));
        const double* gy = g_out.row(static_cast<std::size_t>(b));
        double* gx = g_in.row(static_cast<std::size_t>(b));
        for (int o = 0; o < no; ++o) {
            const double g = gy[o];
            if (g == 0.0) continue;
            const double* w = W + static_cast<std::size_t>(o) * ni;
            double* gwrow = gW + static_cast<std::size_t>(o) * ni;
            gb[o] += g;
            for (int i = 0; i < ni; ++i) {
                gwrow[i] += g * x[i];
                gx[i] += g * w[i];
            }
        }
    }
}

Tensor conv_forward(const LayerPlan& plan, const double* p, const Tensor& in) {
    const auto& s = plan.spec;
    const int B = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int OC = s.out_channels, K = s.kernel, st = s.stride, pd = s.padding;
    const int OH = plan.out_shape[1], OW = plan.out_shape[2];
    const double* kern = p;
    const double* bias = p + static_cast<std::size_t>(OC) * C * K * K;
    Tensor out = Tensor::zeros({B, OC, OH, OW});
    for (int b = 0; b < B; ++b) {
        const double* xin = in.row(static_cast<std::size_t>(b));
        double* yout = out.row(static_cast<std::size_t>(b));
        for (int oc = 0; oc < OC; ++oc) {
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    double acc = bias[oc];
                    for (int ic = 0; ic < C; ++ic) {
                        const double* xc = xin + static_cast<std::size_t>(ic) * H * W;
                        const double* kc = kern + ((static_cast<std::size_t>(oc) * C + ic) * K) * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * st - pd + ky;
                            if (iy < 0 || iy >= H) continue;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * st - pd + kx;
                                if (ix < 0 || ix >= W) continue;
                                acc += xc[static_cast<std::size_t>(iy) * W + ix] *
                                       kc[static_cast<std::size_t>(ky) * K + kx];
                            }
                        }
                    }
                    yout[(static_cast<std::size_t>(oc) * OH + oy) * OW + ox] = acc;
                }
            }
        }
    }
    return out;
}

void conv_backward(const LayerPlan& plan, const double* p, const Tensor& in, const Tensor& g_out,
                   Tensor& g_in, double* g_params) {
    const auto& s = plan.spec;
    const int B = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int OC = s.out_channels, K = s.kernel, st = s.stride, pd = s.padding;
    const int OH = plan.out_shape[1], OW = plan.out_shape[2];
    const double* kern = p;
    double* gK = g_params;
    double* gb = g_params + static_cast<std::size_t>(OC) * C * K * K;
    for (int b = 0; b < B; ++b) {
        const double* xin = in.row(static_cast<std::size_t>(b));
        const double* gy = g_out.row(static_cast<std::size_t>(b));
        double* gx = g_in.row(static_cast<std::size_t>(b));
        for (int oc = 0; oc < OC; ++oc) {
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    const double g = gy[(static_cast<std::size_t>(oc) * OH + oy) * OW + ox];
                    if (g == 0.0) continue;
                    gb[oc] += g;
                    for (int ic = 0; ic < C; ++ic) {
                        const double* xc = xin + static_cast<std::size_t>(ic) * H * W;
                        double* gxc = gx + static_cast<std::size_t>(ic) * H * W;
                        const std::size_t kbase = (static_cast<std::size_t>(oc) * C + ic) *
                                                  static_cast<std::size_t>(K) * K;
                        for (int ky = 0; ky < K; ++ky) {
                            const int iy = oy * st - pd + ky;
                            if (iy < 0 || iy >= H) continue;
                            for (int kx = 0; kx < K; ++kx) {
                                const int ix = ox * st - pd + kx;
                                if (ix < 0 || ix >= W) continue;
                                const std::size_t xi = static_cast<std::size_t>(iy) * W + ix;
                                gK[kbase + static_cast<std::size_t>(ky) * K + kx] += g * xc[xi];
                                gxc[xi] += g * kern[kbase + static_cast<std::size_t>(ky) * K + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

// Normalization geometry for batchnorm: feature index and count of entries
// per feature. 2D input -> per feature over B; 4D -> per channel over B*H*W.
struct BnGeom {
    int features;
    std::size_t per_feature;  // entries per feature across the whole batch
    std::size_t spatial;      // entries per feature per sample
};

BnGeom bn_geom(const LayerPlan& plan, const Tensor& in) {
    BnGeom g;
    g.features = plan.bn_features;
    if (in.shape.size() == 2) {
        g.spatial = 1;
        g.per_feature = static_cast<std::size_t>(in.shape[0]);
    } else {
        g.spatial = static_cast<std::size_t>(in.shape[2]) * in.shape[3];
        g.per_feature = static_cast<std::size_t>(in.shape[0]) * g.spatial;
    }
    return g;
}

// Iterates over every (batch, feature, spatial) entry; index math kept in
// one place for forward and backward.
template <class F>
void bn_for_each(const Tensor& t, const BnGeom& g, F&& fn) {
    const int B = t.shape[0];
    for (int b = 0; b < B; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * t.row_size();
        for (int f = 0; f < g.features; ++f) {
            const std::size_t fbase = base + static_cast<std::size_t>(f) * g.spatial;
            for (std::size_t s = 0; s < g.spatial; ++s) fn(f, fbase + s);
        }
    }
}

Tensor bn_forward(const LayerPlan& plan, const double* p, const Tensor& in, Mode mode, BnAux* aux) {
    const BnGeom geom = bn_geom(plan, in);
    const auto F = static_cast<std::size_t>(geom.features);
    const double* gamma = p;
    const double* beta = p + F;
    const double* run_mean = p + 2 * F;
    const double* run_var = p + 3 * F;

    std::vector<double> mean(F, 0.0), var(F, 0.0), inv_std(F, 0.0);
    if (mode == Mode::train) {
        bn_for_each(in, geom, [&](int f, std::size_t i) { mean[static_cast<std::size_t>(f)] += in.data[i]; });
        for (auto& m : mean) m /= static_cast<double>(geom.per_feature);
        bn_for_each(in, geom, [&](int f, std::size_t i) {
            const double d = in.data[i] - mean[static_cast<std::size_t>(f)];
            var[static_cast<std::size_t>(f)] += d * d;
        });
        for (auto& v : var) v /= static_cast<double>(geom.per_feature);
    } else {
        mean.assign(run_mean, run_mean + F);
        var.assign(run_var, run_var + F);
    }
    for (std::size_t f = 0; f < F; ++f) inv_std[f] = 1.0 / std::sqrt(var[f] + kBnEps);

    Tensor out = Tensor::zeros(in.shape);
    bn_for_each(in, geom, [&](int f, std::size_t i) {
        const auto fi = static_cast<std::size_t>(f);
        out.data[i] = gamma[fi] * (in.data[i] - mean[fi]) * inv_std[fi] + beta[fi];
    });
    if (aux) {
        aux->mean = std::move(mean);
        aux->var = std::move(var);
        aux->inv_std = std::move(inv_std);
    }
    return out;
}

void bn_backward(const LayerPlan& plan, const double* p, const Tensor& in, const Tensor& g_out,
                 const BnAux& aux, Mode mode, Tensor& g_in, double* g_params) {
    const BnGeom geom = bn_geom(plan, in);
    const auto F = static_cast<std::size_t>(geom.features);
    const double* gamma = p;
    double* g_gamma = g_params;
    double* g_beta = g_params + F;
    const double m = static_cast<double>(geom.per_feature);

    if (mode == Mode::infer) {
        bn_for_each(in, geom, [&](int f, std::size_t i) {
            const auto fi = static_cast<std::size_t>(f);
            const double xhat = (in.data[i] - aux.mean[fi]) * aux.inv_std[fi];
            g_gamma[fi] += g_out.data[i] * xhat;
            g_beta[fi] += g_out.data[i];
            g_in.data[i] += g_out.data[i] * gamma[fi] * aux.inv_std[fi];
        });
        return;
    }

    // Train mode: batch statistics depend on the inputs, so the gradient
    // carries the mean/variance terms.
    std::vector<double> sum_dxhat(F, 0.0), sum_dxhat_xhat(F, 0.0);
    bn_for_each(in, geom, [&](int f, std::size_t i) {
        const auto fi = static_cast<std::size_t>(f);
        const double xhat = (in.data[i] - aux.mean[fi]) * aux.inv_std[fi];
        const double dxhat = g_out.data[i] * gamma[fi];
        sum_dxhat[fi] += dxhat;
        sum_dxhat_xhat[fi] += dxhat * xhat;
        g_gamma[fi] += g_out.data[i] * xhat;
        g_beta[fi] += g_out.data[i];
    });
    bn_for_each(in, geom, [&](int f, std::size_t i) {
        const auto fi = static_cast<std::size_t>(f);
        const double xhat = (in.data[i] - aux.mean[fi]) * aux.inv_std[fi];
        const double dxhat = g_out.data[i] * gamma[fi];
        g_in.data[i] += (aux.inv_std[fi] / m) * (m * dxhat - sum_dxhat[fi] - xhat * sum_dxhat_xhat[fi]);
    });
}

Tensor pool_forward(const LayerPlan& plan, const Tensor& in, std::vector<std::size_t>* argmax) {
    const auto& s = plan.spec;
    const int B = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int OH = plan.out_shape[1], OW = plan.out_shape[2];
    Tensor out = Tensor::zeros({B, C, OH, OW});
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t oi = 0;
    for (int b = 0; b < B; ++b) {
        const std::size_t bbase = static_cast<std::size_t>(b) * in.row_size();
        for (int c = 0; c < C; ++c) {
            const std::size_t cbase = bbase + static_cast<std::size_t>(c) * H * W;
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (int ky = 0; ky < s.pool; ++ky) {
                        const int iy = oy * s.pool_stride + ky;
                        for (int kx = 0; kx < s.pool; ++kx) {
                            const int ix = ox * s.pool_stride + kx;
                            const std::size_t idx = cbase + static_cast<std::size_t>(iy) * W + ix;
                            if (in.data[idx] > best) {
                                best = in.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.data[oi] = best;
                    if (argmax) (*argmax)[oi] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor forward_impl(const Model& model, const Tensor& batch, Mode mode, Trace* trace) {
    check_batch_shape(model, batch);
    Tensor cur = batch;
    if (trace) {
        trace->acts.clear();
        trace->bn.assign(model.plan.size(), BnAux{});
        trace->pool.assign(model.plan.size(), {});
        trace->acts.push_back(cur);
    }
    for (std::size_t li = 0; li < model.plan.size(); ++li) {
        const LayerPlan& plan = model.plan[li];
        const double* p = layer_params(model, plan);
        switch (plan.spec.kind) {
            case LayerKind::dense:
                cur = dense_forward(plan, p, cur);
                break;
            case LayerKind::conv2d:
                cur = conv_forward(plan, p, cur);
                break;
            case LayerKind::relu: {
                Tensor out = cur;
                for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
                cur = std::move(out);
                break;
            }
            case LayerKind::batchnorm:
                cur = bn_forward(plan, p, cur, mode, trace ? &trace->bn[li] : nullptr);
                break;
            case LayerKind::maxpool:
                cur = pool_forward(plan, cur, trace ? &trace->pool[li] : nullptr);
                break;
            case LayerKind::flatten: {
                std::vector<int> s{cur.shape[0], static_cast<int>(cur.row_size())};
                cur = Tensor(std::move(s), std::move(cur.data));
                break;
            }
        }
        if (trace) trace->acts.push_back(cur);
    }
    return cur;
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
    Tensor probs = logits;
    const std::size_t rows = static_cast<std::size_t>(logits.shape[0]);
    const std::size_t cols = logits.row_size();
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = probs.row(r);
        double mx = row[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
    }
    return probs;
}

ForwardResult forward(const Model& model, const Tensor& batch, Mode mode) {
    Tensor logits = forward_impl(model, batch, mode, nullptr);
    logits.validate("forward logits");
    Tensor probs = softmax_rows(logits);
    return ForwardResult{std::move(logits), std::move(probs)};
}

std::vector<double> logits_features(const Model& model, const Tensor& x) {
    const Tensor batch = as_batch(model, x);
    Tensor logits = forward_impl(model, batch, Mode::infer, nullptr);
    return logits.data;
}

double cross_entropy_loss(const Tensor& probs, const std::vector<SoftLabel>& labels) {
    const auto rows = static_cast<std::size_t>(probs.shape[0]);
    if (labels.size() != rows) {
        throw std::invalid_argument("cross_entropy_loss: " + std::to_string(rows) + " prob rows vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    const std::size_t cols = probs.row_size();
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r].probs.size() != cols) {
            throw std::invalid_argument("cross_entropy_loss: label width mismatch at row " +
                                        std::to_string(r));
        }
        const double* p = probs.row(r);
        double row_loss = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double s = labels[r].probs[c];
            if (s != 0.0) row_loss -= s * std::log(std::max(p[c], kProbFloor));
        }
        total += row_loss;
    }
    return total / static_cast<double>(rows);
}

namespace {

BackwardResult backward_impl(const Model& model, const Tensor& batch,
                             const std::vector<SoftLabel>& labels, Mode mode,
                             const std::vector<double>* sample_weights) {
    Trace trace;
    Tensor logits = forward_impl(model, batch, mode, &trace);
    Tensor probs = softmax_rows(logits);

    BackwardResult result;
    result.gradient = ParamVector::zeros_like(model.params);

    const auto B = static_cast<std::size_t>(batch.shape[0]);
    if (labels.size() != B) {
        throw std::invalid_argument("backward: " + std::to_string(B) + " batch rows vs " +
                                    std::to_string(labels.size()) + " labels");
    }
    if (sample_weights && sample_weights->size() != B) {
        throw std::invalid_argument("backward: sample_weights size mismatch");
    }

    {
        double total = 0.0;
        for (std::size_t r = 0; r < B; ++r) {
            if (labels[r].probs.size() != probs.row_size()) {
                throw std::invalid_argument("backward: label width mismatch at row " + std::to_string(r));
            }
            const double w = sample_weights ? (*sample_weights)[r] : 1.0;
            const double* p = probs.row(r);
            double row_loss = 0.0;
            for (std::size_t c = 0; c < probs.row_size(); ++c) {
                const double s = labels[r].probs[c];
                if (s != 0.0) row_loss -= s * std::log(std::max(p[c], kProbFloor));
            }
            total += w * row_loss;
        }
        result.loss = total / static_cast<double>(B);
    }

    // d(mean weighted CE)/d(logit) = w * (softmax - label) / B
    Tensor g = probs;
    for (std::size_t r = 0; r < B; ++r) {
        const double w = sample_weights ? (*sample_weights)[r] : 1.0;
        double* row = g.row(r);
        for (std::size_t c = 0; c < g.row_size(); ++c) {
            row[c] = w * (row[c] - labels[r].probs[c]) / static_cast<double>(B);
        }
    }

    for (std::size_t li = model.plan.size(); li-- > 0;) {
        const LayerPlan& plan = model.plan[li];
        const Tensor& in = trace.acts[li];
        const double* p = layer_params(model, plan);
        double* gp = result.gradient.values.data() + plan.param_offset;
        Tensor g_in = Tensor::zeros(in.shape);
        switch (plan.spec.kind) {
            case LayerKind::dense:
                dense_backward(plan, p, in, g, g_in, gp);
                break;
            case LayerKind::conv2d:
                conv_backward(plan, p, in, g, g_in, gp);
                break;
            case LayerKind::relu:
                for (std::size_t i = 0; i < in.size(); ++i) {
                    g_in.data[i] = in.data[i] > 0.0 ? g.data[i] : 0.0;
                }
                break;
            case LayerKind::batchnorm: {
                BnAux aux = trace.bn[li];
                if (mode == Mode::infer) {
                    // stats were not captured during an infer-mode forward
                    const auto F = static_cast<std::size_t>(plan.bn_features);
                    aux.mean.assign(p + 2 * F, p + 3 * F);
                    aux.var.assign(p + 3 * F, p + 4 * F);
                    aux.inv_std.resize(F);
                    for (std::size_t f = 0; f < F; ++f) aux.inv_std[f] = 1.0 / std::sqrt(aux.var[f] + kBnEps);
                }
                bn_backward(plan, p, in, g, aux, mode, g_in, gp);
                break;
            }
            case LayerKind::maxpool: {
                const auto& argmax = trace.pool[li];
                for (std::size_t i = 0; i < g.size(); ++i) g_in.data[argmax[i]] += g.data[i];
                break;
            }
            case LayerKind::flatten:
                g_in.data = g.data;
                break;
        }
        g = std::move(g_in);
    }

    if (mode == Mode::train) {
        for (std::size_t li = 0; li < model.plan.size(); ++li) {
            if (model.plan[li].spec.kind != LayerKind::batchnorm) continue;
            result.bn_stats.push_back(BnBatchStats{li, trace.bn[li].mean, trace.bn[li].var});
        }
    }
    return result;
}

}  // namespace

BackwardResult backward(const Model& model, const Tensor& batch,
                        const std::vector<SoftLabel>& labels, Mode mode) {
    return backward_impl(model, batch, labels, mode, nullptr);
}

BackwardResult backward_weighted(const Model& model, const Tensor& batch,
                                 const std::vector<SoftLabel>& labels,
                                 const std::vector<double>& sample_weights, Mode mode) {
    return backward_impl(model, batch, labels, mode, &sample_weights);
}

ParamVector per_sample_loss_gradient(const Model& model, const Tensor& x, const SoftLabel& label) {
    const Tensor batch = as_batch(model, x);
    return backward(model, batch, {label}, Mode::infer).gradient;
}

OptimizerState OptimizerState::sgd(double lr) {
    OptimizerState s;
    s.kind = OptKind::sgd;
    s.learning_rate = lr;
    return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double epsilon) {
    OptimizerState s;
    s.kind = OptKind::adam;
    s.learning_rate = lr;
    s.adam_beta1 = beta1;
    s.adam_beta2 = beta2;
    s.adam_epsilon = epsilon;
    return s;
}

OptimizerState OptimizerState::fresh() const {
    OptimizerState s = *this;
    s.step_count = 0;
    s.m.clear();
    s.v.clear();
    return s;
}

void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad) {
    require_compatible(params, grad, "optimizer_step");
    const std::size_t n = params.values.size();
    if (state.kind == OptKind::sgd) {
        for (std::size_t i = 0; i < n; ++i) params.values[i] -= state.learning_rate * grad.values[i];
        ++state.step_count;
        return;
    }
    if (state.m.empty()) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    if (state.m.size() != n) {
        throw std::invalid_argument("optimizer_step: moment buffers sized " +
                                    std::to_string(state.m.size()) + " but params sized " +
                                    std::to_string(n));
    }
    ++state.step_count;
    const double b1 = state.adam_beta1;
    const double b2 = state.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.values[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.adam_epsilon);
    }
}

double train_step(Model& model, OptimizerState& opt, const Tensor& batch,
                  const std::vector<SoftLabel>& labels, double bn_momentum,
                  const std::vector<double>* sample_weights) {
    BackwardResult back = backward_impl(model, batch, labels, Mode::train, sample_weights);
    optimizer_step(opt, model.params, back.gradient);
    for (const auto& stats : back.bn_stats) {
        BnParamView view = bn_view(model.plan[stats.layer_index], model.params);
        for (int f = 0; f < view.features; ++f) {
            view.running_mean[f] = (1.0 - bn_momentum) * view.running_mean[f] + bn_momentum * stats.mean[static_cast<std::size_t>(f)];
            view.running_var[f] = (1.0 - bn_momentum) * view.running_var[f] + bn_momentum * stats.var[static_cast<std::size_t>(f)];
        }
    }
    return back.loss;
}

}  // namespace fedsim::nn
