#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "ccnn/geometry.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

class ImageDecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit raster as it comes off disk.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;
};

/// Binary PGM (P5) and PPM (P6), maxval <= 255.
RasterImage read_pnm(const std::filesystem::path& path);
RasterImage decode_pnm(const std::vector<std::uint8_t>& bytes);

bool png_supported() noexcept;
RasterImage read_png(const std::filesystem::path& path);

/// Dispatches on the file signature.
RasterImage read_image(const std::filesystem::path& path);

/// read_image followed by grayscale conversion.
ImagePlane load_grayscale(const std::filesystem::path& path);

/// Writes a P5 file; values are rounded and clamped to [0, 255].
void write_pgm(const ImagePlane& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const ImagePlane& image);

/// Burns a one-pixel rectangle outline into the plane.
void draw_box(ImagePlane& image, const Box& box, float value);

}  // namespace ccnn
