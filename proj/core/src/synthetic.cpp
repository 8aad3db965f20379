#include "ccnn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ccnn/cascade.hpp"
#include "ccnn/nnkernel.hpp"
#include "ccnn/pyramid.hpp"

namespace ccnn {

namespace {

struct Blob {
    double cx, cy, rx, ry;
    bool inside(double x, double y) const noexcept {
        const double u = (x - cx) / rx, v = (y - cy) / ry;
        return u * u + v * v <= 1.0;
    }
};

constexpr int kSuper = 4;

double mean_under(const ImagePlane& canvas, const Box& box) {
    const int x0 = std::clamp(static_cast<int>(box.x), 0, canvas.width() - 1);
    const int y0 = std::clamp(static_cast<int>(box.y), 0, canvas.height() - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(box.right())), x0 + 1, canvas.width());
    const int y1 = std::clamp(static_cast<int>(std::ceil(box.bottom())), y0 + 1, canvas.height());
    double sum = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) sum += canvas.at(x, y);
    return sum / ((x1 - x0) * (y1 - y0));
}

// Paints layered blobs with 4x4 supersampled coverage. `shade` receives the
// index of the topmost blob hit (or -1) and the sub-pixel position.
template <typename Shade>
void paint(ImagePlane& canvas, const Box& bounds, Shade shade) {
    const int x0 = std::max(0, static_cast<int>(std::floor(bounds.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(bounds.y)));
    const int x1 = std::min(canvas.width(), static_cast<int>(std::ceil(bounds.right())));
    const int y1 = std::min(canvas.height(), static_cast<int>(std::ceil(bounds.bottom())));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < kSuper; ++sy)
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double px = x + (sx + 0.5) / kSuper, py = y + (sy + 0.5) / kSuper;
                    acc += shade(px, py, canvas.at(x, y));
                }
            canvas.at(x, y) = static_cast<float>(std::clamp(acc / (kSuper * kSuper), 0.0, 255.0));
        }
}

}  // namespace

double SyntheticFaces::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

int SyntheticFaces::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

ImagePlane SyntheticFaces::background(int width, int height) {
    ImagePlane out(width, height, static_cast<float>(uniform(45.0, 165.0)));
    const double gx = uniform(-30.0, 30.0) / std::max(width, 1), gy = uniform(-30.0, 30.0) / std::max(height, 1);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(x, y) += static_cast<float>(gx * x + gy * y);

    static constexpr std::array<double, 4> cells{40.0, 14.0, 5.0, 1.5};
    static constexpr std::array<double, 4> amps{30.0, 20.0, 12.0, 6.0};
    for (std::size_t o = 0; o < cells.size(); ++o) {
        const double cell = cells[o] * uniform(0.7, 1.4);
        const double amp = amps[o] * uniform(0.4, 1.5);
        const int gw = static_cast<int>(width / cell) + 3, gh = static_cast<int>(height / cell) + 3;
        std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
        for (double& g : grid) g = uniform(-1.0, 1.0);
        const double ox = uniform(0.0, 1.0), oy = uniform(0.0, 1.0);
        for (int y = 0; y < height; ++y) {
            const double fy = y / cell + oy;
            const int iy = static_cast<int>(fy);
            double ty = fy - iy;
            ty = ty * ty * (3 - 2 * ty);
            for (int x = 0; x < width; ++x) {
                const double fx = x / cell + ox;
                const int ix = static_cast<int>(fx);
                double tx = fx - ix;
                tx = tx * tx * (3 - 2 * tx);
                auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
                const double top = g(ix, iy) + (g(ix + 1, iy) - g(ix, iy)) * tx;
                const double bot = g(ix, iy + 1) + (g(ix + 1, iy + 1) - g(ix, iy + 1)) * tx;
                out.at(x, y) += static_cast<float>(amp * (top + (bot - top) * ty));
            }
        }
    }
    for (float& v : out.pixels()) v = std::clamp(v, 0.0f, 255.0f);
    return out;
}

void SyntheticFaces::draw_face(ImagePlane& canvas, const Box& box) {
    const double w = box.w, h = box.h;
    const double base = mean_under(canvas, box);
    const double skin = std::min(250.0, base + uniform(45.0, 85.0));
    const double eye_tone = skin - uniform(80.0, 130.0);
    const double mouth_tone = skin - uniform(55.0, 105.0);
    const double shade_x = uniform(-18.0, 18.0), shade_y = uniform(-10.0, 10.0);

    const Blob oval{box.x + w * uniform(0.48, 0.52), box.y + h * uniform(0.49, 0.53), w * uniform(0.43, 0.48),
                    h * uniform(0.46, 0.50)};
    const double eye_y = box.y + h * uniform(0.37, 0.43);
    const double eye_dx = w * uniform(0.16, 0.20);
    const double erx = w * uniform(0.07, 0.095), ery = h * uniform(0.04, 0.06);
    const Blob left{oval.cx - eye_dx, eye_y + h * uniform(-0.01, 0.01), erx, ery};
    const Blob right{oval.cx + eye_dx, eye_y + h * uniform(-0.01, 0.01), erx, ery};
    const Blob mouth{oval.cx + w * uniform(-0.02, 0.02), box.y + h * uniform(0.70, 0.76), w * uniform(0.12, 0.18),
                     h * uniform(0.03, 0.05)};

    paint(canvas, box, [&](double x, double y, float under) -> double {
        if (!oval.inside(x, y)) return under;
        if (left.inside(x, y) || right.inside(x, y)) return eye_tone;
        if (mouth.inside(x, y)) return mouth_tone;
        return skin + shade_x * (x - oval.cx) / oval.rx + shade_y * (y - oval.cy) / oval.ry;
    });
}

void SyntheticFaces::draw_distractor(ImagePlane& canvas, const Box& box) {
    const double base = mean_under(canvas, box);
    const double tone = std::clamp(base + (uniform(0.0, 1.0) < 0.7 ? 1 : -1) * uniform(40.0, 90.0), 0.0, 255.0);
    const int kind = uniform_int(0, 2);
    const Blob oval{box.cx(), box.cy(), box.w * 0.47, box.h * 0.49};
    // a single dark spot keeps plain ovals from being trivially separable
    const Blob spot{box.x + box.w * uniform(0.25, 0.75), box.y + box.h * uniform(0.25, 0.75), box.w * 0.09,
                    box.h * 0.06};
    const double spot_tone = tone - uniform(60.0, 110.0);
    paint(canvas, box, [&](double x, double y, float under) -> double {
        switch (kind) {
        case 0: return oval.inside(x, y) ? tone : under;
        case 1:
            if (!oval.inside(x, y)) return under;
            return spot.inside(x, y) ? spot_tone : tone;
        default: return tone;
        }
    });
}

SyntheticScene SyntheticFaces::scene(const SceneConfig& config) {
    SyntheticScene out;
    out.image = background(config.width, config.height);
    for (int i = 0; i < config.distractors; ++i) {
        const double w = uniform(10.0, 90.0), h = w * uniform(0.4, 1.6);
        draw_distractor(out.image, {uniform(-w / 2, config.width - w / 2), uniform(-h / 2, config.height - h / 2), w, h});
    }
    const int want = uniform_int(config.min_faces, std::max(config.min_faces, config.max_faces));
    const double lmin = std::log(config.min_face), lmax = std::log(std::max(config.min_face, config.max_face));
    for (int i = 0; i < want; ++i) {
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double w = std::exp(uniform(lmin, lmax)), h = w * 31.0 / 27.0;
            if (w >= config.width || h >= config.height) continue;
            const Box b{uniform(0.0, config.width - w), uniform(0.0, config.height - h), w, h};
            const Box guard = b.scaled(1.3);
            const bool clash = std::any_of(out.faces.begin(), out.faces.end(),
                                           [&](const Box& f) { return intersection_area(f.scaled(1.3), guard) > 0; });
            if (clash) continue;
            draw_face(out.image, b);
            out.faces.push_back(b);
            break;
        }
    }
    return out;
}

ImagePlane SyntheticFaces::render_view(Size out, double step, const Box& face, bool with_face) {
    const int cw = static_cast<int>(std::ceil(out.width * step)) + 1;
    const int ch = static_cast<int>(std::ceil(out.height * step)) + 1;
    ImagePlane canvas = background(cw, ch);
    if (uniform(0.0, 1.0) < 0.3) {
        const double w = uniform(0.3, 1.2) * out.width * step, h = w * uniform(0.5, 1.5);
        draw_distractor(canvas, {uniform(-w / 2, cw - w / 2), uniform(-h / 2, ch - h / 2), w, h});
    }
    if (with_face) draw_face(canvas, {face.x * step, face.y * step, face.w * step, face.h * step});
    return resample_bilinear(canvas, out.width, out.height, step, step);
}

ImagePlane SyntheticFaces::window_sample(bool face) {
    const Size win{27, 31};
    const double step = uniform(1.0, 3.0);
    if (face) {
        const double s = uniform(0.93, 1.07), dx = uniform(-2.0, 2.0), dy = uniform(-2.0, 2.0);
        return render_view(win, step, {13.5 + dx - 13.5 * s, 15.5 + dy - 15.5 * s, 27 * s, 31 * s}, true);
    }
    const double r = uniform(0.0, 1.0);
    if (r < 0.45) return render_view(win, step, {}, false);
    if (r < 0.6) {
        ImagePlane v = render_view(win, step, {}, false);
        const double s = uniform(0.6, 1.3);
        draw_distractor(v, {13.5 - 13.5 * s + uniform(-3, 3), 15.5 - 15.5 * s + uniform(-3, 3), 27 * s, 31 * s});
        return v;
    }
    double s = 1.0, dx = 0.0, dy = 0.0;
    if (r < 0.8) {
        s = uniform(0.85, 1.15);
        const double mag = uniform(9.0, 22.0), ang = uniform(0.0, 2 * 3.14159265358979);
        dx = mag * std::cos(ang);
        dy = mag * std::sin(ang);
    } else {
        s = uniform(0.0, 1.0) < 0.5 ? uniform(0.35, 0.62) : uniform(1.6, 2.6);
        dx = uniform(-3.0, 3.0);
        dy = uniform(-3.0, 3.0);
    }
    return render_view(win, step, {13.5 + dx - 13.5 * s, 15.5 + dy - 15.5 * s, 27 * s, 31 * s}, true);
}

ImagePlane SyntheticFaces::patch_sample(bool face, int* crop_x, int* crop_y) {
    const Size patch{51, 55};
    const double cx = kPatchCoreOffsetX + 17.5, cy = kPatchCoreOffsetY + 19.5;
    const double step = uniform(1.0, 3.0);
    int ox = kPatchCoreOffsetX, oy = kPatchCoreOffsetY;
    ImagePlane out;
    if (face) {
        const double s = uniform(0.93, 1.07), dx = uniform(-2.6, 2.6), dy = uniform(-2.6, 2.6);
        out = render_view(patch, step, {cx + dx - 17.5 * s, cy + dy - 19.5 * s, 35 * s, 39 * s}, true);
    } else {
        const double r = uniform(0.0, 1.0);
        if (r < 0.55) {
            out = render_view(patch, step, {}, false);
            if (r < 0.2) {
                const double s = uniform(0.6, 1.3);
                draw_distractor(out, {cx - 17.5 * s + uniform(-4, 4), cy - 19.5 * s + uniform(-4, 4), 35 * s, 39 * s});
            }
            ox = 4 * uniform_int(0, 4);
            oy = 4 * uniform_int(0, 4);
        } else {
            double s = 1.0, dx = 0.0, dy = 0.0;
            if (r < 0.8) {
                s = uniform(0.85, 1.15);
                const double mag = uniform(12.0, 26.0), ang = uniform(0.0, 2 * 3.14159265358979);
                dx = mag * std::cos(ang);
                dy = mag * std::sin(ang);
            } else {
                s = uniform(0.0, 1.0) < 0.5 ? uniform(0.35, 0.62) : uniform(1.6, 2.6);
                dx = uniform(-3.0, 3.0);
                dy = uniform(-3.0, 3.0);
            }
            out = render_view(patch, step, {cx + dx - 17.5 * s, cy + dy - 19.5 * s, 35 * s, 39 * s}, true);
        }
    }
    if (crop_x) *crop_x = ox;
    if (crop_y) *crop_y = oy;
    return out;
}

ImagePlane SyntheticFaces::stage1_input(bool face) { return normalize_intensity(window_sample(face)); }

ImagePlane SyntheticFaces::selective_input(bool face) {
    int ox = 0, oy = 0;
    ImagePlane patch = patch_sample(face, &ox, &oy);
    for (float& v : patch.pixels()) v = static_cast<float>(std::clamp(std::lround(v), 0L, 255L));
    const ImagePlane eq = normalize_intensity(equalize_histogram(patch));
    ImagePlane crop(35, 39);
    for (int y = 0; y < 39; ++y)
        for (int x = 0; x < 35; ++x) crop.at(x, y) = eq.at(x + ox, y + oy);
    return crop;
}

}  // namespace ccnn
