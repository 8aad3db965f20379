#pragma once

#include <algorithm>

namespace ccnn {

/// Axis-aligned rectangle in continuous image coordinates.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }
    double cx() const noexcept { return x + 0.5 * w; }
    double cy() const noexcept { return y + 0.5 * h; }

    /// Same center, both extents multiplied by `f`.
    Box scaled(double f) const noexcept { return {cx() - 0.5 * w * f, cy() - 0.5 * h * f, w * f, h * f}; }

    friend bool operator==(const Box&, const Box&) = default;
};

inline double intersection_area(const Box& a, const Box& b) noexcept {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

/// |a ∩ b| / |a ∪ b|; 0 when the union is empty.
inline double iou(const Box& a, const Box& b) noexcept {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Integer pixel rectangle, half-open: [x, x+w) x [y, y+h).
struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const noexcept { return x + w; }
    int bottom() const noexcept { return y + h; }
    bool contains(int px, int py) const noexcept { return px >= x && px < x + w && py >= y && py < y + h; }
    bool contains(const PixelRect& r) const noexcept {
        return r.x >= x && r.y >= y && r.right() <= right() && r.bottom() <= bottom();
    }
    bool intersects(const PixelRect& r) const noexcept {
        return x < r.right() && r.x < right() && y < r.bottom() && r.y < bottom();
    }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

}  // namespace ccnn
