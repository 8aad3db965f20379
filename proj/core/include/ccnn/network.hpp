#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ccnn/tensor.hpp"

namespace ccnn {

enum class PoolMode : std::uint8_t { Max = 0, Mean = 1 };

enum class LayerKind : std::uint8_t { Conv = 0, Pool = 1 };

/// One stage of a network. A conv layer always carries the scaled-tanh
/// activation; a pool layer is a fixed 2x2, stride-2 reduction.
struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int inMaps = 0;
    int outMaps = 0;
    int kernelW = 0;
    int kernelH = 0;

    static LayerSpec conv(int in, int out, int kw, int kh) { return {LayerKind::Conv, in, out, kw, kh}; }
    static LayerSpec pool() { return {LayerKind::Pool, 0, 0, 0, 0}; }

    bool is_conv() const noexcept { return kind == LayerKind::Conv; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    PoolMode pooling = PoolMode::Max;

    std::size_t conv_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.is_conv() ? 1 : 0;
        return n;
    }

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Learned coefficients of one network, one entry per conv layer in order.
template <typename T>
struct BasicNetworkWeights {
    std::vector<ConvLayerWeights<T>> layers;

    std::size_t param_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.param_count();
        return n;
    }

    template <typename U>
    BasicNetworkWeights<U> cast() const {
        BasicNetworkWeights<U> out;
        out.layers.reserve(layers.size());
        for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
        return out;
    }

    friend bool operator==(const BasicNetworkWeights&, const BasicNetworkWeights&) = default;
};

using NetworkWeights = BasicNetworkWeights<float>;

/// Zero-initialized weights shaped after every conv layer of `spec`.
template <typename T>
BasicNetworkWeights<T> zero_weights(const NetworkSpec& spec) {
    BasicNetworkWeights<T> w;
    for (const auto& l : spec.layers)
        if (l.is_conv()) w.layers.emplace_back(l.inMaps, l.outMaps, l.kernelW, l.kernelH);
    return w;
}

}  // namespace ccnn
