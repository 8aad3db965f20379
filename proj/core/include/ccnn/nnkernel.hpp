#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "ccnn/network.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

/// Output range of the activation is (-kActivationLimit, kActivationLimit).
inline constexpr double kActivationLimit = 1.7159;

/// Rational tanh approximation, sgn(y) * (1 - 1 / (1 + |y| + y^2 + 1.41645 y^4)).
template <typename T>
inline T approx_tanh(T y) noexcept {
    const T a = std::abs(y);
    const T a2 = a * a;
    const T g = T(1) + a + a2 + T(1.41645) * a2 * a2;
    return std::copysign(T(1) - T(1) / g, y);
}

/// Scaled activation 1.7159 * approx_tanh(2x/3).
template <typename T>
inline T activation(T x) noexcept {
    return T(kActivationLimit) * approx_tanh(x * T(2.0 / 3.0));
}

/// d/dx activation(x). Even in x; the two sign branches meet smoothly at 0.
template <typename T>
inline T activation_derivative(T x) noexcept {
    const T a = std::abs(x * T(2.0 / 3.0));
    const T a2 = a * a;
    const T g = T(1) + a + a2 + T(1.41645) * a2 * a2;
    const T dg = T(1) + T(2) * a + T(4 * 1.41645) * a2 * a;
    return T(kActivationLimit * 2.0 / 3.0) * dg / (g * g);
}

/// Raised when training produces a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Valid cross-correlation, stride 1, bias added, no activation.
template <typename T>
BasicFeatureStack<T> conv2d_valid(const BasicFeatureStack<T>& input, const ConvLayerWeights<T>& weights);

/// 2x2 stride-2 reduction; a trailing odd row/column is dropped.
template <typename T>
BasicFeatureStack<T> pool2(const BasicFeatureStack<T>& input, PoolMode mode);

/// Runs every layer of `spec` and returns the final response map(s).
template <typename T>
BasicFeatureStack<T> forward(const BasicPlane<T>& input, const NetworkSpec& spec,
                             const BasicNetworkWeights<T>& weights);

template <typename T>
struct LabeledSample {
    BasicPlane<T> image;
    T label = T(0);
};

template <typename T>
struct GradientResult {
    double loss = 0.0;
    BasicNetworkWeights<T> gradients;
};

/// Mean squared error over the batch and its gradient with respect to
/// every kernel and bias. Each sample must be exactly receptive-field sized.
template <typename T>
GradientResult<T> compute_gradients(std::span<const LabeledSample<T>> batch, const NetworkSpec& spec,
                                    const BasicNetworkWeights<T>& weights);

/// One momentum-SGD update: v = momentum*v - lr*g; w += v.
/// Returns the batch loss measured before the update.
template <typename T>
double backward_sgd_step(std::span<const LabeledSample<T>> batch, const NetworkSpec& spec,
                         BasicNetworkWeights<T>& weights, BasicNetworkWeights<T>& velocity, double lr,
                         double momentum);

/// LeCun-style uniform initialization, deterministic for a given seed.
template <typename T>
BasicNetworkWeights<T> random_weights(const NetworkSpec& spec, std::uint64_t seed);

/// Maps 8-bit intensities [0, 255] affinely onto [-1, 1].
ImagePlane normalize_intensity(const ImagePlane& plane);

}  // namespace ccnn
