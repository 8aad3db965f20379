#include "ccnn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ccnn/pyramid.hpp"

#if defined(CCNN_HAVE_PNG)
#include <png.h>
#endif

namespace ccnn {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageDecodeError("cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class HeaderScanner {
public:
    explicit HeaderScanner(const std::vector<std::uint8_t>& b) : b_(b) {}

    int next_int() {
        skip_space_and_comments();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw ImageDecodeError("malformed PNM header");
        long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_++] - '0');
            if (v > (1 << 24)) throw ImageDecodeError("PNM header value out of range");
        }
        return static_cast<int>(v);
    }

    // exactly one whitespace byte separates maxval from the raster
    std::size_t raster_start() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw ImageDecodeError("malformed PNM header");
        return pos_ + 1;
    }

    std::size_t pos_ = 2;

private:
    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (std::isspace(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& b_;
};

bool is_png(const std::vector<std::uint8_t>& b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

}  // namespace

RasterImage decode_pnm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw ImageDecodeError("not a binary PGM/PPM image");
    HeaderScanner scan(bytes);
    RasterImage img;
    img.channels = bytes[1] == '5' ? 1 : 3;
    img.width = scan.next_int();
    img.height = scan.next_int();
    const int maxval = scan.next_int();
    if (img.width <= 0 || img.height <= 0) throw ImageDecodeError("PNM image has no pixels");
    if (maxval <= 0 || maxval > 255) throw ImageDecodeError("only 8-bit PNM images are supported");
    const std::size_t start = scan.raster_start();
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (bytes.size() - start < n) throw ImageDecodeError("PNM raster truncated");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                      bytes.begin() + static_cast<std::ptrdiff_t>(start + n));
    if (maxval != 255)
        for (auto& p : img.pixels)
            p = static_cast<std::uint8_t>(std::lround(std::min<int>(p, maxval) * 255.0 / maxval));
    return img;
}

RasterImage read_pnm(const std::filesystem::path& path) { return decode_pnm(slurp(path)); }

bool png_supported() noexcept {
#if defined(CCNN_HAVE_PNG)
    return true;
#else
    return false;
#endif
}

RasterImage read_png(const std::filesystem::path& path) {
#if defined(CCNN_HAVE_PNG)
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    const auto bytes = slurp(path);
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw ImageDecodeError("cannot decode PNG " + path.string() + ": " + png.message);
    const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    RasterImage img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.channels = gray ? 1 : 3;
    img.pixels.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
        png_image_free(&png);
        throw ImageDecodeError("cannot decode PNG " + path.string() + ": " + png.message);
    }
    return img;
#else
    throw ImageDecodeError("PNG support not compiled in: " + path.string());
#endif
}

RasterImage read_image(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (is_png(bytes)) return read_png(path);
    return decode_pnm(bytes);
}

ImagePlane load_grayscale(const std::filesystem::path& path) {
    const auto raster = read_image(path);
    return to_grayscale(raster.pixels, raster.width, raster.height, raster.channels);
}

std::vector<std::uint8_t> encode_pgm(const ImagePlane& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixels().size());
    for (float v : image.pixels())
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
    return out;
}

void write_pgm(const ImagePlane& image, const std::filesystem::path& path) {
    const auto bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void draw_box(ImagePlane& image, const Box& box, float value) {
    const int x0 = static_cast<int>(std::lround(box.x));
    const int y0 = static_cast<int>(std::lround(box.y));
    const int x1 = static_cast<int>(std::lround(box.right())) - 1;
    const int y1 = static_cast<int>(std::lround(box.bottom())) - 1;
    auto put = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < image.width() && y < image.height()) image.at(x, y) = value;
    };
    for (int x = x0; x <= x1; ++x) {
        put(x, y0);
        put(x, y1);
    }
    for (int y = y0; y <= y1; ++y) {
        put(x0, y);
        put(x1, y);
    }
}

}  // namespace ccnn
