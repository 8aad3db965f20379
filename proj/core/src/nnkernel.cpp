#include "ccnn/nnkernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ccnn/modelspec.hpp"

namespace ccnn {

namespace {

template <typename T>
void check_layer(const LayerSpec& layer, const ConvLayerWeights<T>& w) {
    if (w.inMaps != layer.inMaps || w.outMaps != layer.outMaps || w.kernelW != layer.kernelW ||
        w.kernelH != layer.kernelH)
        throw DimensionError("conv weights do not match layer description");
    if (w.kernels.size() != static_cast<std::size_t>(w.inMaps) * w.outMaps * w.kernelW * w.kernelH ||
        w.biases.size() != static_cast<std::size_t>(w.outMaps))
        throw DimensionError("conv weight buffers have the wrong length");
}

template <typename T>
void check_network(const NetworkSpec& spec, const BasicNetworkWeights<T>& weights) {
    if (weights.layers.size() != spec.conv_count())
        throw DimensionError("weight set has " + std::to_string(weights.layers.size()) + " conv layers, spec has " +
                             std::to_string(spec.conv_count()));
    std::size_t c = 0;
    for (const auto& layer : spec.layers)
        if (layer.is_conv()) check_layer(layer, weights.layers[c++]);
}

template <typename T>
void apply_activation(BasicFeatureStack<T>& s) {
    for (T& v : s.values()) v = activation(v);
}

// Everything a backward pass needs from the forward pass.
template <typename T>
struct Trace {
    std::vector<BasicFeatureStack<T>> inputs;  // input of layer l
    std::vector<BasicFeatureStack<T>> pre;     // pre-activation output of conv layer l (empty for pool)
    BasicFeatureStack<T> output;
};

template <typename T>
Trace<T> traced_forward(const BasicPlane<T>& input, const NetworkSpec& spec, const BasicNetworkWeights<T>& weights) {
    Trace<T> t;
    BasicFeatureStack<T> cur(input);
    std::size_t c = 0;
    for (const auto& layer : spec.layers) {
        t.inputs.push_back(cur);
        if (layer.is_conv()) {
            auto z = conv2d_valid(cur, weights.layers[c++]);
            t.pre.push_back(z);
            apply_activation(z);
            cur = std::move(z);
        } else {
            t.pre.emplace_back();
            cur = pool2(cur, spec.pooling);
        }
    }
    t.output = std::move(cur);
    return t;
}

template <typename T>
BasicFeatureStack<T> pool_backward(const BasicFeatureStack<T>& input, const BasicFeatureStack<T>& grad_out,
                                   PoolMode mode) {
    BasicFeatureStack<T> grad_in(input.maps(), input.width(), input.height());
    for (int m = 0; m < input.maps(); ++m) {
        for (int y = 0; y < grad_out.height(); ++y) {
            for (int x = 0; x < grad_out.width(); ++x) {
                const T g = grad_out.at(m, x, y);
                const int x0 = 2 * x;
                const int y0 = 2 * y;
                if (mode == PoolMode::Mean) {
                    const T q = g / T(4);
                    grad_in.at(m, x0, y0) += q;
                    grad_in.at(m, x0 + 1, y0) += q;
                    grad_in.at(m, x0, y0 + 1) += q;
                    grad_in.at(m, x0 + 1, y0 + 1) += q;
                } else {
                    // first maximum in scan order, matching pool2
                    int bx = x0, by = y0;
                    T best = input.at(m, x0, y0);
                    const int ox[3] = {1, 0, 1};
                    const int oy[3] = {0, 1, 1};
                    for (int k = 0; k < 3; ++k) {
                        const T v = input.at(m, x0 + ox[k], y0 + oy[k]);
                        if (v > best) {
                            best = v;
                            bx = x0 + ox[k];
                            by = y0 + oy[k];
                        }
                    }
                    grad_in.at(m, bx, by) += g;
                }
            }
        }
    }
    return grad_in;
}

// Accumulates dL/dW, dL/db into `gw` and returns dL/dInput when requested.
template <typename T>
BasicFeatureStack<T> conv_backward(const BasicFeatureStack<T>& input, const BasicFeatureStack<T>& grad_pre,
                                   const ConvLayerWeights<T>& w, ConvLayerWeights<T>& gw, bool want_input_grad) {
    BasicFeatureStack<T> grad_in;
    if (want_input_grad) grad_in = BasicFeatureStack<T>(input.maps(), input.width(), input.height());
    const int ow = grad_pre.width();
    const int oh = grad_pre.height();
    for (int o = 0; o < w.outMaps; ++o) {
        T bsum = T(0);
        for (T v : grad_pre.map(o)) bsum += v;
        gw.biases[o] += bsum;
        for (int i = 0; i < w.inMaps; ++i) {
            auto k = w.kernel(o, i);
            auto gk = gw.kernel(o, i);
            for (int ky = 0; ky < w.kernelH; ++ky) {
                for (int kx = 0; kx < w.kernelW; ++kx) {
                    const T kv = k[ky * w.kernelW + kx];
                    T acc = T(0);
                    for (int y = 0; y < oh; ++y) {
                        const T* dz = grad_pre.row(o, y);
                        const T* xin = input.row(i, y + ky) + kx;
                        for (int x = 0; x < ow; ++x) acc += dz[x] * xin[x];
                        if (want_input_grad) {
                            T* dx = grad_in.row(i, y + ky) + kx;
                            for (int x = 0; x < ow; ++x) dx[x] += kv * dz[x];
                        }
                    }
                    gk[ky * w.kernelW + kx] += acc;
                }
            }
        }
    }
    return grad_in;
}

}  // namespace

template <typename T>
BasicFeatureStack<T> conv2d_valid(const BasicFeatureStack<T>& input, const ConvLayerWeights<T>& weights) {
    if (input.maps() != weights.inMaps)
        throw DimensionError("conv input has " + std::to_string(input.maps()) + " maps, weights expect " +
                             std::to_string(weights.inMaps));
    if (input.width() < weights.kernelW || input.height() < weights.kernelH)
        throw DimensionError("conv input " + std::to_string(input.width()) + "x" + std::to_string(input.height()) +
                             " smaller than kernel " + std::to_string(weights.kernelW) + "x" +
                             std::to_string(weights.kernelH));
    const int ow = input.width() - weights.kernelW + 1;
    const int oh = input.height() - weights.kernelH + 1;
    BasicFeatureStack<T> out(weights.outMaps, ow, oh);
    std::vector<T> acc(static_cast<std::size_t>(ow));
    for (int o = 0; o < weights.outMaps; ++o) {
        for (int y = 0; y < oh; ++y) {
            std::fill(acc.begin(), acc.end(), T(0));
            T* a = acc.data();
            // per-pixel accumulation order is (i, ky, kx) regardless of plane size,
            // so a window scanned in place matches the same window cropped out.
            for (int i = 0; i < weights.inMaps; ++i) {
                auto k = weights.kernel(o, i);
                for (int ky = 0; ky < weights.kernelH; ++ky) {
                    const T* src = input.row(i, y + ky);
                    for (int kx = 0; kx < weights.kernelW; ++kx) {
                        const T kv = k[ky * weights.kernelW + kx];
                        const T* s = src + kx;
                        for (int x = 0; x < ow; ++x) a[x] += kv * s[x];
                    }
                }
            }
            T* dst = out.row(o, y);
            const T b = weights.biases[o];
            for (int x = 0; x < ow; ++x) dst[x] = a[x] + b;
        }
    }
    return out;
}

template <typename T>
BasicFeatureStack<T> pool2(const BasicFeatureStack<T>& input, PoolMode mode) {
    const int ow = input.width() / 2;
    const int oh = input.height() / 2;
    if (ow == 0 || oh == 0) throw DimensionError("pool2 input must be at least 2x2");
    BasicFeatureStack<T> out(input.maps(), ow, oh);
    for (int m = 0; m < input.maps(); ++m) {
        for (int y = 0; y < oh; ++y) {
            const T* r0 = input.row(m, 2 * y);
            const T* r1 = input.row(m, 2 * y + 1);
            T* dst = out.row(m, y);
            if (mode == PoolMode::Mean) {
                for (int x = 0; x < ow; ++x)
                    dst[x] = (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) * T(0.25);
            } else {
                for (int x = 0; x < ow; ++x)
                    dst[x] = std::max(std::max(r0[2 * x], r0[2 * x + 1]), std::max(r1[2 * x], r1[2 * x + 1]));
            }
        }
    }
    return out;
}

template <typename T>
BasicFeatureStack<T> forward(const BasicPlane<T>& input, const NetworkSpec& spec, const BasicNetworkWeights<T>& weights) {
    check_network(spec, weights);
    BasicFeatureStack<T> cur(input);
    std::size_t c = 0;
    for (const auto& layer : spec.layers) {
        if (layer.is_conv()) {
            cur = conv2d_valid(cur, weights.layers[c++]);
            apply_activation(cur);
        } else {
            cur = pool2(cur, spec.pooling);
        }
    }
    return cur;
}

template <typename T>
GradientResult<T> compute_gradients(std::span<const LabeledSample<T>> batch, const NetworkSpec& spec,
                                    const BasicNetworkWeights<T>& weights) {
    check_network(spec, weights);
    if (batch.empty()) throw DimensionError("empty training batch");
    const Size rf = receptive_field(spec);
    for (const auto& sample : batch)
        if (sample.image.size() != rf) throw DimensionError("training samples must match the receptive field exactly");
    GradientResult<T> result;
    result.gradients = zero_weights<T>(spec);
    const double n = static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& sample : batch) {
        auto trace = traced_forward(sample.image, spec, weights);
        if (trace.output.maps() != 1 || trace.output.width() != 1 || trace.output.height() != 1)
            throw DimensionError("training samples must match the receptive field exactly");
        const T y = trace.output.at(0, 0, 0);
        const double diff = static_cast<double>(y) - static_cast<double>(sample.label);
        loss += diff * diff;

        BasicFeatureStack<T> grad(1, 1, 1, static_cast<T>(2.0 * diff / n));
        std::size_t c = weights.layers.size();
        for (std::size_t l = spec.layers.size(); l-- > 0;) {
            const auto& layer = spec.layers[l];
            if (layer.is_conv()) {
                --c;
                const auto& z = trace.pre[l];
                auto zs = z.values();
                auto gs = grad.values();
                for (std::size_t k = 0; k < gs.size(); ++k) gs[k] *= activation_derivative(zs[k]);
                grad = conv_backward(trace.inputs[l], grad, weights.layers[c], result.gradients.layers[c], l > 0);
            } else {
                grad = pool_backward(trace.inputs[l], grad, spec.pooling);
            }
        }
    }
    result.loss = loss / n;
    return result;
}

template <typename T>
double backward_sgd_step(std::span<const LabeledSample<T>> batch, const NetworkSpec& spec,
                         BasicNetworkWeights<T>& weights, BasicNetworkWeights<T>& velocity, double lr,
                         double momentum) {
    auto g = compute_gradients(batch, spec, weights);
    if (!std::isfinite(g.loss)) throw TrainingError("non-finite training loss");
    if (velocity.layers.size() != weights.layers.size()) velocity = zero_weights<T>(spec);
    const T m = static_cast<T>(momentum);
    const T step = static_cast<T>(lr);
    auto update = [&](std::vector<T>& w, std::vector<T>& v, const std::vector<T>& d) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            v[k] = m * v[k] - step * d[k];
            w[k] += v[k];
        }
    };
    for (std::size_t c = 0; c < weights.layers.size(); ++c) {
        update(weights.layers[c].kernels, velocity.layers[c].kernels, g.gradients.layers[c].kernels);
        update(weights.layers[c].biases, velocity.layers[c].biases, g.gradients.layers[c].biases);
    }
    return g.loss;
}

template <typename T>
BasicNetworkWeights<T> random_weights(const NetworkSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto w = zero_weights<T>(spec);
    for (auto& layer : w.layers) {
        const double fan_in = static_cast<double>(layer.inMaps) * layer.kernelW * layer.kernelH;
        std::uniform_real_distribution<double> dist(-std::sqrt(3.0 / fan_in), std::sqrt(3.0 / fan_in));
        for (auto& k : layer.kernels) k = static_cast<T>(dist(rng));
    }
    return w;
}

ImagePlane normalize_intensity(const ImagePlane& plane) {
    ImagePlane out(plane.width(), plane.height());
    auto src = plane.pixels();
    auto dst = out.pixels();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] * (1.0f / 127.5f) - 1.0f;
    return out;
}

#define CCNN_INSTANTIATE(T)                                                                                   \
    template BasicFeatureStack<T> conv2d_valid<T>(const BasicFeatureStack<T>&, const ConvLayerWeights<T>&);  \
    template BasicFeatureStack<T> pool2<T>(const BasicFeatureStack<T>&, PoolMode);                           \
    template BasicFeatureStack<T> forward<T>(const BasicPlane<T>&, const NetworkSpec&,                       \
                                             const BasicNetworkWeights<T>&);                                 \
    template GradientResult<T> compute_gradients<T>(std::span<const LabeledSample<T>>, const NetworkSpec&,  \
                                                    const BasicNetworkWeights<T>&);                          \
    template double backward_sgd_step<T>(std::span<const LabeledSample<T>>, const NetworkSpec&,             \
                                         BasicNetworkWeights<T>&, BasicNetworkWeights<T>&, double, double);  \
    template BasicNetworkWeights<T> random_weights<T>(const NetworkSpec&, std::uint64_t);

CCNN_INSTANTIATE(float)
CCNN_INSTANTIATE(double)

#undef CCNN_INSTANTIATE

}  // namespace ccnn
