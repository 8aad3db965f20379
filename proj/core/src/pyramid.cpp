#include "ccnn/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace ccnn {

namespace {

struct Tap {
    int i0;
    int i1;
    float w1;
};

std::vector<Tap> taps(int dst, int src, double step) {
    std::vector<Tap> t(static_cast<std::size_t>(dst));
    for (int d = 0; d < dst; ++d) {
        double s = (d + 0.5) * step - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, src - 1);
        t[d] = {i0, i1, static_cast<float>(s - i0)};
    }
    return t;
}

int round_up(int v, int align) { return (v + align - 1) / align * align; }

// floor(v * scale) tolerant of products such as 640 * 0.675 landing a hair under 432.
int scaled_extent(int v, double scale) { return static_cast<int>(std::floor(v * scale + 1e-9)); }

}  // namespace

ImagePlane to_grayscale(std::span<const std::uint8_t> pixels, int width, int height, int channels) {
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("unsupported channel count " + std::to_string(channels));
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (pixels.size() != n * static_cast<std::size_t>(channels))
        throw DimensionError("raster length does not match width*height*channels");
    ImagePlane out(width, height);
    auto dst = out.pixels();
    if (channels == 1) {
        for (std::size_t k = 0; k < n; ++k) dst[k] = pixels[k];
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const double luma = 0.299 * pixels[3 * k] + 0.587 * pixels[3 * k + 1] + 0.114 * pixels[3 * k + 2];
            dst[k] = static_cast<float>(std::min(255.0, std::round(luma)));
        }
    }
    return out;
}

ImagePlane resample_bilinear(const ImagePlane& src, int dst_width, int dst_height, double step_x, double step_y) {
    if (src.empty()) throw DimensionError("cannot resample an empty plane");
    ImagePlane out(dst_width, dst_height);
    const auto tx = taps(dst_width, src.width(), step_x);
    const auto ty = taps(dst_height, src.height(), step_y);
    std::vector<float> r0(static_cast<std::size_t>(dst_width));
    std::vector<float> r1(static_cast<std::size_t>(dst_width));
    for (int y = 0; y < dst_height; ++y) {
        const auto s0 = src.row(ty[y].i0);
        const auto s1 = src.row(ty[y].i1);
        for (int x = 0; x < dst_width; ++x) {
            const Tap& t = tx[x];
            r0[x] = s0[t.i0] * (1.0f - t.w1) + s0[t.i1] * t.w1;
            r1[x] = s1[t.i0] * (1.0f - t.w1) + s1[t.i1] * t.w1;
        }
        const float wy = ty[y].w1;
        auto d = out.row(y);
        for (int x = 0; x < dst_width; ++x) d[x] = r0[x] * (1.0f - wy) + r1[x] * wy;
    }
    return out;
}

ImagePlane resize_bilinear(const ImagePlane& src, int dst_width, int dst_height) {
    return resample_bilinear(src, dst_width, dst_height, static_cast<double>(src.width()) / dst_width,
                             static_cast<double>(src.height()) / dst_height);
}

ImagePlane resample_region(const ImagePlane& src, const Box& region, int dst_width, int dst_height) {
    if (src.empty()) throw DimensionError("cannot resample an empty plane");
    const double step_x = region.w / dst_width;
    const double step_y = region.h / dst_height;
    std::vector<Tap> tx(static_cast<std::size_t>(dst_width));
    std::vector<Tap> ty(static_cast<std::size_t>(dst_height));
    auto make = [](double s, int n) {
        s = std::clamp(s, 0.0, static_cast<double>(n - 1));
        const int i0 = static_cast<int>(std::floor(s));
        return Tap{i0, std::min(i0 + 1, n - 1), static_cast<float>(s - i0)};
    };
    for (int x = 0; x < dst_width; ++x) tx[x] = make(region.x + (x + 0.5) * step_x - 0.5, src.width());
    for (int y = 0; y < dst_height; ++y) ty[y] = make(region.y + (y + 0.5) * step_y - 0.5, src.height());
    ImagePlane out(dst_width, dst_height);
    for (int y = 0; y < dst_height; ++y) {
        const auto s0 = src.row(ty[y].i0);
        const auto s1 = src.row(ty[y].i1);
        const float wy = ty[y].w1;
        auto d = out.row(y);
        for (int x = 0; x < dst_width; ++x) {
            const Tap& t = tx[x];
            const float a = s0[t.i0] * (1.0f - t.w1) + s0[t.i1] * t.w1;
            const float b = s1[t.i0] * (1.0f - t.w1) + s1[t.i1] * t.w1;
            d[x] = a * (1.0f - wy) + b * wy;
        }
    }
    return out;
}

std::vector<double> pyramid_scales(Size image, Size window, int min_size, double scale_factor) {
    if (!(scale_factor > 1.0)) throw std::invalid_argument("scale factor must exceed 1");
    if (min_size < 1) throw std::invalid_argument("minimum size must be at least 1");
    std::vector<double> scales;
    for (double s = static_cast<double>(window.width) / min_size;; s /= scale_factor) {
        if (scaled_extent(image.width, s) < window.width || scaled_extent(image.height, s) < window.height) break;
        scales.push_back(s);
    }
    return scales;
}

std::vector<PyramidLevel> build_pyramid(const ImagePlane& image, Size window, int min_size, double scale_factor) {
    const auto scales = pyramid_scales(image.size(), window, min_size, scale_factor);
    std::vector<PyramidLevel> levels;
    levels.reserve(scales.size());
    for (std::size_t k = 0; k < scales.size(); ++k) {
        const double s = scales[k];
        const int w = scaled_extent(image.width(), s);
        const int h = scaled_extent(image.height(), s);
        PyramidLevel level;
        level.scale = s;
        level.index = static_cast<int>(k);
        if (k == 0) {
            if (w == image.width() && h == image.height() && s == 1.0)
                level.image = image;
            else
                level.image = resample_bilinear(image, w, h, 1.0 / s, 1.0 / s);
        } else {
            const double step = scales[k - 1] / s;
            level.image = resample_bilinear(levels.back().image, w, h, step, step);
        }
        levels.push_back(std::move(level));
    }
    return levels;
}

StripLayout fcnr_layout(std::span<const Size> sizes, int strip_width, int align) {
    if (align < 1) throw std::invalid_argument("alignment must be positive");
    StripLayout layout;
    layout.width = round_up(strip_width, align);
    layout.placements.resize(sizes.size());

    std::vector<Size> foot(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k].width <= 0 || sizes[k].height <= 0) throw PackingError("cannot pack an empty rectangle");
        foot[k] = {round_up(sizes[k].width, align), round_up(sizes[k].height, align)};
        if (foot[k].width > layout.width)
            throw PackingError("rectangle of width " + std::to_string(sizes[k].width) + " exceeds strip width " +
                               std::to_string(strip_width));
    }

    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (foot[a].height != foot[b].height) return foot[a].height > foot[b].height;
        return foot[a].width > foot[b].width;
    });

    struct Shelf {
        int y;
        int height;
        int floor_x;
        int ceil_x;
        std::vector<PixelRect> used;
    };
    std::vector<Shelf> shelves;

    auto fits = [](const Shelf& s, const PixelRect& r) {
        return std::none_of(s.used.begin(), s.used.end(), [&](const PixelRect& u) { return u.intersects(r); });
    };

    for (std::size_t idx : order) {
        const Size f = foot[idx];
        std::optional<PixelRect> spot;
        for (auto& shelf : shelves) {
            if (f.height > shelf.height) continue;
            if (shelf.floor_x + f.width <= layout.width) {
                const PixelRect r{shelf.floor_x, shelf.y, f.width, f.height};
                if (fits(shelf, r)) {
                    shelf.floor_x += f.width;
                    shelf.used.push_back(r);
                    spot = r;
                    break;
                }
            }
            if (shelf.ceil_x - f.width >= 0) {
                const PixelRect r{shelf.ceil_x - f.width, shelf.y + shelf.height - f.height, f.width, f.height};
                if (fits(shelf, r)) {
                    shelf.ceil_x -= f.width;
                    shelf.used.push_back(r);
                    spot = r;
                    break;
                }
            }
        }
        if (!spot) {
            Shelf s{layout.height, f.height, f.width, layout.width, {}};
            const PixelRect r{0, s.y, f.width, f.height};
            s.used.push_back(r);
            layout.height += f.height;
            shelves.push_back(std::move(s));
            spot = r;
        }
        layout.placements[idx] = {spot->x, spot->y, sizes[idx].width, sizes[idx].height};
    }
    return layout;
}

int naive_stack_height(std::span<const Size> sizes, int align) {
    int h = 0;
    for (const auto& s : sizes) h += round_up(s.height, align);
    return h;
}

PackedStrip pack_fcnr(const std::vector<PyramidLevel>& levels, int strip_width, int align) {
    std::vector<Size> sizes;
    sizes.reserve(levels.size());
    int widest = 0;
    for (const auto& l : levels) {
        sizes.push_back(l.image.size());
        widest = std::max(widest, l.image.width());
    }
    if (strip_width == 0) strip_width = widest;
    const auto layout = fcnr_layout(sizes, strip_width, align);

    PackedStrip packed;
    packed.placements = layout.placements;
    packed.strip = ImagePlane(layout.width, layout.height, 0.0f);
    packed.ownership = BasicPlane<std::int32_t>(layout.width, layout.height, -1);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto& p = layout.placements[k];
        const auto& img = levels[k].image;
        for (int y = 0; y < p.h; ++y) {
            auto src = img.row(y);
            auto dst = packed.strip.row(p.y + y);
            auto own = packed.ownership.row(p.y + y);
            std::copy(src.begin(), src.end(), dst.begin() + p.x);
            std::fill(own.begin() + p.x, own.begin() + p.x + p.w, static_cast<std::int32_t>(k));
        }
    }
    return packed;
}

}  // namespace ccnn
