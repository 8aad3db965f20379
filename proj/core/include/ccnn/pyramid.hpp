#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ccnn/geometry.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

class PackingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit raster (1 or 3 channels) to a gray plane in [0, 255].
/// Three channels use Rec.601 luma rounded to the nearest integer.
ImagePlane to_grayscale(std::span<const std::uint8_t> pixels, int width, int height, int channels);

/// Bilinear resampling where destination pixel x samples the source at
/// (x + 0.5) * step_x - 0.5, clamped to the border.
ImagePlane resample_bilinear(const ImagePlane& src, int dst_width, int dst_height, double step_x, double step_y);

/// Plain resize to an explicit size.
ImagePlane resize_bilinear(const ImagePlane& src, int dst_width, int dst_height);

/// Samples `region` (continuous source coordinates) onto a dst_width x dst_height
/// grid. Reads past the border see the replicated edge.
ImagePlane resample_region(const ImagePlane& src, const Box& region, int dst_width, int dst_height);

struct PyramidLevel {
    double scale = 1.0;  // original -> level multiplier
    ImagePlane image;
    int index = 0;
};

/// Scales of every level that fits the window, starting at window.width / min_size.
std::vector<double> pyramid_scales(Size image, Size window, int min_size, double scale_factor);

/// Levels of size floor(original * scale); level k+1 is resampled from level k.
std::vector<PyramidLevel> build_pyramid(const ImagePlane& image, Size window, int min_size, double scale_factor);

struct StripLayout {
    int width = 0;
    int height = 0;
    std::vector<PixelRect> placements;  // indexed like the input sizes
};

/// Floor-ceiling, no-rotation shelf packing. Items are taken by non-increasing
/// height (ties: wider first, then input order). For each item the shelves are
/// tried in order, floor first (left-justified, left to right) then ceiling
/// (right-justified against the shelf top, right to left); if no shelf takes it
/// a new shelf opens beneath. With align > 1 every footprint and the strip width
/// are rounded up to multiples of align so each placement starts on the grid.
StripLayout fcnr_layout(std::span<const Size> sizes, int strip_width, int align = 1);

/// Height of the trivial one-per-row stacking under the same alignment.
int naive_stack_height(std::span<const Size> sizes, int align = 1);

struct PackedStrip {
    ImagePlane strip;
    std::vector<PixelRect> placements;
    BasicPlane<std::int32_t> ownership;  // level index, or -1 for unowned pixels

    int owner(int x, int y) const { return ownership.at(x, y); }
};

/// Packs every level into one strip; strip_width 0 means the widest level.
PackedStrip pack_fcnr(const std::vector<PyramidLevel>& levels, int strip_width = 0, int align = 1);

}  // namespace ccnn
