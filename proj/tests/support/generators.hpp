#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "ccnn/cascade.hpp"
#include "ccnn/geometry.hpp"
#include "ccnn/network.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn::testing {

/// Thin seeded source for hand-rolled property generators.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }
    std::uint64_t seed() { return rng_(); }

    template <typename T = float>
    BasicPlane<T> plane(int w, int h, double lo = 0.0, double hi = 255.0) {
        BasicPlane<T> p(w, h);
        for (auto& v : p.pixels()) v = static_cast<T>(real(lo, hi));
        return p;
    }

    template <typename T = float>
    BasicFeatureStack<T> stack(int maps, int w, int h, double lo = -1.0, double hi = 1.0) {
        BasicFeatureStack<T> s(maps, w, h);
        for (auto& v : s.values()) v = static_cast<T>(real(lo, hi));
        return s;
    }

    template <typename T = float>
    ConvLayerWeights<T> conv(int in, int out, int kw, int kh, double scale = 0.5) {
        ConvLayerWeights<T> w(in, out, kw, kh);
        for (auto& v : w.kernels) v = static_cast<T>(real(-scale, scale));
        for (auto& v : w.biases) v = static_cast<T>(real(-scale, scale));
        return w;
    }

    /// Valid network: conv/pool stack ending in a single-map conv.
    NetworkSpec spec(int max_pools = 2) {
        NetworkSpec s;
        s.pooling = coin() ? PoolMode::Max : PoolMode::Mean;
        int maps = 1;
        const int pools = integer(0, max_pools);
        for (int p = 0; p < pools; ++p) {
            const int out = integer(1, 3);
            s.layers.push_back(LayerSpec::conv(maps, out, integer(1, 4), integer(1, 4)));
            s.layers.push_back(LayerSpec::pool());
            maps = out;
        }
        if (coin()) {
            const int out = integer(1, 3);
            s.layers.push_back(LayerSpec::conv(maps, out, integer(1, 5), integer(1, 5)));
            maps = out;
        }
        s.layers.push_back(LayerSpec::conv(maps, 1, integer(1, 3), integer(1, 3)));
        return s;
    }

    Box box(double extent = 100.0, double min_size = 1.0, double max_size = 40.0) {
        const double w = real(min_size, max_size), h = real(min_size, max_size);
        return {real(0.0, extent), real(0.0, extent), w, h};
    }

    std::mt19937_64& engine() noexcept { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Quadruple-loop cross-correlation in double precision.
template <typename T>
BasicFeatureStack<double> conv_oracle(const BasicFeatureStack<T>& in, const ConvLayerWeights<T>& w) {
    const int ow = in.width() - w.kernelW + 1, oh = in.height() - w.kernelH + 1;
    BasicFeatureStack<double> out(w.outMaps, ow, oh);
    for (int o = 0; o < w.outMaps; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = static_cast<double>(w.biases[static_cast<std::size_t>(o)]);
                for (int i = 0; i < w.inMaps; ++i) {
                    const auto k = w.kernel(o, i);
                    for (int ky = 0; ky < w.kernelH; ++ky)
                        for (int kx = 0; kx < w.kernelW; ++kx)
                            acc += static_cast<double>(k[static_cast<std::size_t>(ky * w.kernelW + kx)]) *
                                   static_cast<double>(in.at(i, x + kx, y + ky));
                }
                out.at(o, x, y) = acc;
            }
    return out;
}

template <typename T>
BasicFeatureStack<double> pool_oracle(const BasicFeatureStack<T>& in, PoolMode mode) {
    BasicFeatureStack<double> out(in.maps(), in.width() / 2, in.height() / 2);
    for (int m = 0; m < in.maps(); ++m)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) {
                double best = -1e300, sum = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const double v = in.at(m, 2 * x + dx, 2 * y + dy);
                        best = std::max(best, v);
                        sum += v;
                    }
                out.at(m, x, y) = mode == PoolMode::Max ? best : sum / 4.0;
            }
    return out;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / scale;
}

/// Detection lists compared after sorting: boxes exactly, scores within tol.
inline bool same_detections(std::vector<Detection> a, std::vector<Detection> b, double tol = 1e-5) {
    if (a.size() != b.size()) return false;
    auto key = [](const Detection& d) { return std::tie(d.box.y, d.box.x, d.box.w, d.box.h); };
    auto less = [&](const Detection& l, const Detection& r) { return key(l) < key(r); };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i].box == b[i].box) || a[i].neighbors != b[i].neighbors) return false;
        if (std::abs(a[i].score - b[i].score) > tol) return false;
    }
    return true;
}

}  // namespace ccnn::testing
