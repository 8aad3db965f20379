#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccnn {

struct Size {
    int width = 0;
    int height = 0;

    friend bool operator==(const Size&, const Size&) = default;
};

/// Raised when tensor shapes do not fit the requested operation.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major 2-D raster. Pixel (x, y) lives at data[y * width + x].
template <typename T>
class BasicPlane {
public:
    using value_type = T;

    BasicPlane() = default;

    BasicPlane(int width, int height, T fill = T{})
        : width_(checked(width)), height_(checked(height)),
          data_(static_cast<std::size_t>(width_) * height_, fill) {}

    BasicPlane(int width, int height, std::vector<T> data)
        : width_(checked(width)), height_(checked(height)), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(width_) * height_)
            throw DimensionError("plane data length does not match width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Size size() const noexcept { return {width_, height_}; }
    bool empty() const noexcept { return data_.empty(); }

    T& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<T> row(int y) noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<const T> row(int y) const noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    template <typename U>
    BasicPlane<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicPlane<U>(width_, height_, std::move(out));
    }

    friend bool operator==(const BasicPlane&, const BasicPlane&) = default;

private:
    static int checked(int v) {
        if (v < 0) throw DimensionError("negative plane dimension");
        return v;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ImagePlane = BasicPlane<float>;

/// A set of equally sized maps stored back to back.
template <typename T>
class BasicFeatureStack {
public:
    BasicFeatureStack() = default;

    BasicFeatureStack(int maps, int width, int height, T fill = T{})
        : maps_(maps), width_(width), height_(height),
          data_(static_cast<std::size_t>(maps) * width * height, fill) {
        if (maps < 0 || width < 0 || height < 0)
            throw DimensionError("negative feature stack dimension");
    }

    explicit BasicFeatureStack(const BasicPlane<T>& plane)
        : maps_(1), width_(plane.width()), height_(plane.height()), data_(plane.data()) {}

    int maps() const noexcept { return maps_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Size size() const noexcept { return {width_, height_}; }
    std::size_t map_area() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    std::span<T> map(int m) noexcept { return {data_.data() + m * map_area(), map_area()}; }
    std::span<const T> map(int m) const noexcept { return {data_.data() + m * map_area(), map_area()}; }

    T* row(int m, int y) noexcept { return data_.data() + m * map_area() + static_cast<std::size_t>(y) * width_; }
    const T* row(int m, int y) const noexcept {
        return data_.data() + m * map_area() + static_cast<std::size_t>(y) * width_;
    }

    T& at(int m, int x, int y) noexcept { return row(m, y)[x]; }
    const T& at(int m, int x, int y) const noexcept { return row(m, y)[x]; }

    BasicPlane<T> plane(int m) const {
        auto view = map(m);
        return BasicPlane<T>(width_, height_, std::vector<T>(view.begin(), view.end()));
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

private:
    int maps_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using FeatureStack = BasicFeatureStack<float>;

/// Kernels are stored output-map-major: [out][in][kernelH][kernelW].
template <typename T>
struct ConvLayerWeights {
    int inMaps = 0;
    int outMaps = 0;
    int kernelW = 0;
    int kernelH = 0;
    std::vector<T> kernels;
    std::vector<T> biases;

    ConvLayerWeights() = default;
    ConvLayerWeights(int in, int out, int kw, int kh)
        : inMaps(in), outMaps(out), kernelW(kw), kernelH(kh),
          kernels(static_cast<std::size_t>(in) * out * kw * kh, T{}), biases(static_cast<std::size_t>(out), T{}) {}

    std::size_t kernel_area() const noexcept { return static_cast<std::size_t>(kernelW) * kernelH; }
    std::size_t param_count() const noexcept { return kernels.size() + biases.size(); }

    std::span<T> kernel(int o, int i) noexcept {
        return {kernels.data() + (static_cast<std::size_t>(o) * inMaps + i) * kernel_area(), kernel_area()};
    }
    std::span<const T> kernel(int o, int i) const noexcept {
        return {kernels.data() + (static_cast<std::size_t>(o) * inMaps + i) * kernel_area(), kernel_area()};
    }

    template <typename U>
    ConvLayerWeights<U> cast() const {
        ConvLayerWeights<U> out(inMaps, outMaps, kernelW, kernelH);
        out.kernels.assign(kernels.begin(), kernels.end());
        out.biases.assign(biases.begin(), biases.end());
        return out;
    }

    friend bool operator==(const ConvLayerWeights&, const ConvLayerWeights&) = default;
};

}  // namespace ccnn
