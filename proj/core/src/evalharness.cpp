#include "ccnn/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ccnn {

bool Ellipse::contains(double x, double y) const noexcept {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (dx * c + dy * s) / major;
    const double v = (-dx * s + dy * c) / minor;
    return u * u + v * v <= 1.0;
}

Box Ellipse::bounds() const noexcept {
    const double c = std::cos(angle), s = std::sin(angle);
    const double hx = std::sqrt(major * major * c * c + minor * minor * s * s);
    const double hy = std::sqrt(major * major * s * s + minor * minor * c * c);
    return {cx - hx, cy - hy, 2 * hx, 2 * hy};
}

double Ellipse::area() const noexcept { return std::numbers::pi * major * minor; }

double iou_rect(const Box& a, const Box& b) noexcept { return iou(a, b); }

double iou_ellipse_rect(const Ellipse& e, const Box& r, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (e.major <= 0 || e.minor <= 0 || r.w <= 0 || r.h <= 0) return 0.0;
    const Box eb = e.bounds();
    if (intersection_area(eb, r) <= 0.0) return 0.0;

    const double x0 = std::min(eb.x, r.x), y0 = std::min(eb.y, r.y);
    const double x1 = std::max(eb.right(), r.right()), y1 = std::max(eb.bottom(), r.bottom());
    const long nx = static_cast<long>(std::ceil((x1 - x0) / step));
    const long ny = static_cast<long>(std::ceil((y1 - y0) / step));
    long in_e = 0, in_r = 0, both = 0;
    for (long j = 0; j < ny; ++j) {
        const double y = y0 + (static_cast<double>(j) + 0.5) * step;
        const bool ry = y >= r.y && y < r.bottom();
        for (long i = 0; i < nx; ++i) {
            const double x = x0 + (static_cast<double>(i) + 0.5) * step;
            const bool a = e.contains(x, y);
            const bool b = ry && x >= r.x && x < r.right();
            in_e += a;
            in_r += b;
            both += a && b;
        }
    }
    const long uni = in_e + in_r - both;
    return uni == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(uni);
}

double iou_shape(const Shape& s, const Box& r, double step) {
    if (const auto* b = std::get_if<Box>(&s)) return iou_rect(*b, r);
    return iou_ellipse_rect(std::get<Ellipse>(s), r, step);
}

MatchResult match_greedy(const std::vector<std::vector<double>>& iou, double threshold) {
    const int na = static_cast<int>(iou.size());
    const int nd = na == 0 ? 0 : static_cast<int>(iou.front().size());
    std::vector<MatchPair> edges;
    for (int a = 0; a < na; ++a) {
        if (static_cast<int>(iou[static_cast<std::size_t>(a)].size()) != nd)
            throw std::invalid_argument("ragged IoU matrix");
        for (int d = 0; d < nd; ++d) {
            const double v = iou[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)];
            if (v >= threshold && v > 0.0) edges.push_back({a, d, v});
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const MatchPair& l, const MatchPair& r) { return l.iou > r.iou; });

    MatchResult out;
    std::vector<char> used_a(static_cast<std::size_t>(na), 0), used_d(static_cast<std::size_t>(nd), 0);
    for (const auto& e : edges) {
        if (used_a[static_cast<std::size_t>(e.annotation)] || used_d[static_cast<std::size_t>(e.detection)]) continue;
        used_a[static_cast<std::size_t>(e.annotation)] = used_d[static_cast<std::size_t>(e.detection)] = 1;
        out.pairs.push_back(e);
    }
    for (int a = 0; a < na; ++a)
        if (!used_a[static_cast<std::size_t>(a)]) out.missed.push_back(a);
    for (int d = 0; d < nd; ++d)
        if (!used_d[static_cast<std::size_t>(d)]) out.spurious.push_back(d);
    return out;
}

MatchResult match_discrete(std::span<const Shape> annotations, std::span<const Box> detections, double threshold) {
    std::vector<std::vector<double>> m(annotations.size(), std::vector<double>(detections.size(), 0.0));
    for (std::size_t a = 0; a < annotations.size(); ++a)
        for (std::size_t d = 0; d < detections.size(); ++d) m[a][d] = iou_shape(annotations[a], detections[d]);
    if (annotations.empty()) {
        MatchResult out;
        for (std::size_t d = 0; d < detections.size(); ++d) out.spurious.push_back(static_cast<int>(d));
        return out;
    }
    return match_greedy(m, threshold);
}

std::vector<double> score_thresholds(std::span<const ImageEval> images) {
    std::vector<double> t;
    for (const auto& img : images)
        for (const auto& d : img.detections) t.push_back(d.score);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

namespace {

std::vector<Box> boxes_at_or_above(const std::vector<ScoredDetection>& dets, double threshold, int min_neighbors) {
    std::vector<Box> out;
    for (const auto& d : dets)
        if (d.score >= threshold && d.neighbors >= min_neighbors) out.push_back(d.box);
    return out;
}

std::vector<Box> annotation_boxes(const std::vector<Shape>& shapes) {
    std::vector<Box> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) {
        if (const auto* b = std::get_if<Box>(&s))
            out.push_back(*b);
        else
            out.push_back(std::get<Ellipse>(s).bounds());
    }
    return out;
}

}  // namespace

FddbReport score_fddb(std::span<const ImageEval> images, std::span<const double> thresholds) {
    FddbReport report;
    for (const auto& img : images) report.annotations += img.annotations.size();

    // IoU matrices do not depend on the threshold
    std::vector<std::vector<std::vector<double>>> ious(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        ious[i].assign(img.annotations.size(), std::vector<double>(img.detections.size(), 0.0));
        for (std::size_t a = 0; a < img.annotations.size(); ++a)
            for (std::size_t d = 0; d < img.detections.size(); ++d)
                ious[i][a][d] = iou_shape(img.annotations[a], img.detections[d].box);
    }

    auto evaluate = [&](double threshold, double* iou_sum) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto& dets = images[i].detections;
            std::vector<int> keep;
            for (std::size_t d = 0; d < dets.size(); ++d)
                if (dets[d].score >= threshold) keep.push_back(static_cast<int>(d));
            if (images[i].annotations.empty()) {
                fp += keep.size();
                continue;
            }
            std::vector<std::vector<double>> m(images[i].annotations.size(), std::vector<double>(keep.size()));
            for (std::size_t a = 0; a < m.size(); ++a)
                for (std::size_t k = 0; k < keep.size(); ++k)
                    m[a][k] = ious[i][a][static_cast<std::size_t>(keep[k])];
            const auto r = match_greedy(m);
            tp += r.pairs.size();
            fp += r.spurious.size();
            if (iou_sum)
                for (const auto& p : r.pairs) *iou_sum += p.iou;
        }
        return std::pair{tp, fp};
    };

    for (double t : thresholds) {
        const auto [tp, fp] = evaluate(t, nullptr);
        report.roc.push_back({t, fp, report.annotations == 0
                                         ? 0.0
                                         : static_cast<double>(tp) / static_cast<double>(report.annotations)});
    }
    double iou_sum = 0.0;
    evaluate(-std::numeric_limits<double>::infinity(), &iou_sum);
    report.continuous = report.annotations == 0 ? 0.0 : iou_sum / static_cast<double>(report.annotations);
    return report;
}

std::vector<Box> multiscale_variants(const Box& annotation, int count, double low, double high) {
    if (count < 1) throw std::invalid_argument("variant count must be positive");
    std::vector<Box> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? low : low + i * (high - low) / (count - 1);
        out.push_back(annotation.scaled(f));
    }
    return out;
}

double best_variant_iou(const Box& annotation, const Box& detection, std::span<const Box> variants) {
    double best = iou_rect(annotation, detection);
    for (const auto& v : variants) best = std::max(best, iou_rect(v, detection));
    return best;
}

double best_variant_iou(const Box& annotation, const Box& detection) {
    const auto v = multiscale_variants(annotation);
    return best_variant_iou(annotation, detection, v);
}

bool match_multiscale(const Box& annotation, const Box& detection, int count, double low, double high,
                      double threshold) {
    const auto v = multiscale_variants(annotation, count, low, high);
    return best_variant_iou(annotation, detection, v) >= threshold;
}

MatchResult match_rect_multiscale(std::span<const Box> annotations, std::span<const Box> detections,
                                  double threshold) {
    if (annotations.empty()) {
        MatchResult out;
        for (std::size_t d = 0; d < detections.size(); ++d) out.spurious.push_back(static_cast<int>(d));
        return out;
    }
    std::vector<std::vector<double>> m(annotations.size(), std::vector<double>(detections.size(), 0.0));
    for (std::size_t a = 0; a < annotations.size(); ++a) {
        const auto v = multiscale_variants(annotations[a]);
        for (std::size_t d = 0; d < detections.size(); ++d) m[a][d] = best_variant_iou(annotations[a], detections[d], v);
    }
    return match_greedy(m, threshold);
}

Prf1 score_prf1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
    Prf1 s;
    if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (s.precision + s.recall > 0) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

Prf1 score_prf1(std::span<const ImageEval> images, Matcher matcher, int min_neighbors) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& img : images) {
        const auto dets = boxes_at_or_above(img.detections, -std::numeric_limits<double>::infinity(), min_neighbors);
        MatchResult r;
        if (matcher == Matcher::Discrete) {
            r = match_discrete(img.annotations, dets);
        } else {
            const auto anns = annotation_boxes(img.annotations);
            r = match_rect_multiscale(anns, dets);
        }
        tp += r.pairs.size();
        fp += r.spurious.size();
        fn += r.missed.size();
    }
    return score_prf1(tp, fp, fn);
}

NeighborSweep sweep_min_neighbors(std::span<const ImageEval> images, Matcher matcher, std::span<const int> values) {
    static constexpr int kDefault[] = {1, 2, 3};
    if (values.empty()) values = kDefault;
    NeighborSweep out;
    double sum = 0.0;
    for (int v : values) {
        out.min_neighbors.push_back(v);
        out.scores.push_back(score_prf1(images, matcher, v));
        sum += out.scores.back().f1;
    }
    out.mean_f1 = sum / static_cast<double>(values.size());
    return out;
}

}  // namespace ccnn
