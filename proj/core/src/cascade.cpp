#include "ccnn/cascade.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "ccnn/nnkernel.hpp"

namespace ccnn {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

// Window extent a stride-4 selective network needs to emit a 5x5 map: 35x39.
constexpr Size kPatchCore{kSelectivePatch.width - (kSelectiveMap.width - 1) * 4,
                          kSelectivePatch.height - (kSelectiveMap.height - 1) * 4};

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::size_t> parent;
};

}  // namespace

std::string_view to_string(DecisionRule rule) noexcept { return rule == DecisionRule::Strict ? "strict" : "weak"; }

std::string_view to_string(ExecutionMode mode) noexcept {
    switch (mode) {
    case ExecutionMode::Sync: return "sync";
    case ExecutionMode::Async: return "async";
    case ExecutionMode::Patchwork: return "patchwork";
    case ExecutionMode::Partitioned: return "partitioned";
    }
    return "unknown";
}

DecisionRule parse_rule(std::string_view text) {
    if (text == "strict") return DecisionRule::Strict;
    if (text == "weak") return DecisionRule::Weak;
    throw std::invalid_argument("unknown decision rule '" + std::string(text) + "'");
}

ExecutionMode parse_mode(std::string_view text) {
    if (text == "sync") return ExecutionMode::Sync;
    if (text == "async") return ExecutionMode::Async;
    if (text == "patchwork") return ExecutionMode::Patchwork;
    if (text == "partitioned") return ExecutionMode::Partitioned;
    throw std::invalid_argument("unknown execution mode '" + std::string(text) + "'");
}

void DetectorParams::validate() const {
    if (minSize < 1) throw std::invalid_argument("minSize must be at least 1");
    if (!(scaleFactor > 1.0)) throw std::invalid_argument("scaleFactor must exceed 1");
    const auto in_range = [](float t) { return t > -kActivationLimit && t < kActivationLimit; };
    if (!in_range(t1) || !in_range(t2)) throw std::invalid_argument("T1 and T2 must lie inside (-1.7159, 1.7159)");
    if (tm < 1) throw std::invalid_argument("Tm must be at least 1");
    if (minNeighbors < 1) throw std::invalid_argument("minNeighbors must be at least 1");
    if (!(groupOverlap > 0.0 && groupOverlap <= 1.0)) throw std::invalid_argument("group overlap must be in (0, 1]");
}

std::uint64_t window_positions(Size level, Size window, int stride) {
    if (level.width < window.width || level.height < window.height) return 0;
    const std::uint64_t nx = static_cast<std::uint64_t>((level.width - window.width) / stride + 1);
    const std::uint64_t ny = static_cast<std::uint64_t>((level.height - window.height) / stride + 1);
    return nx * ny;
}

std::vector<CandidateRegion> scan_stage1(const ImagePlane& normalized, const NetworkSpec& spec,
                                         const NetworkWeights& weights, float t1, int level_index) {
    std::vector<CandidateRegion> out;
    const Size rf = receptive_field(spec);
    if (normalized.width() < rf.width || normalized.height() < rf.height) return out;
    const int stride = output_stride(spec);
    const auto response = forward(normalized, spec, weights);
    for (int i = 0; i < response.height(); ++i) {
        const float* row = response.row(0, i);
        for (int j = 0; j < response.width(); ++j)
            if (row[j] > t1) out.push_back({level_index, stride * j, stride * i, row[j]});
    }
    return out;
}

std::vector<CandidateRegion> scan_stage1(const PyramidLevel& level, const CascadeModel& model, float t1) {
    return scan_stage1(normalize_intensity(level.image), model.specs[0], model.weights[0], t1, level.index);
}

Box candidate_box(const CandidateRegion& c, double scale, Size window) {
    return {c.x / scale, c.y / scale, window.width / scale, window.height / scale};
}

ImagePlane extract_patch(const ImagePlane& image, const CandidateRegion& c, double scale, Size window) {
    const Box core = candidate_box(c, scale, window);
    const double fx = static_cast<double>(kSelectivePatch.width) / kPatchCore.width;
    const double fy = static_cast<double>(kSelectivePatch.height) / kPatchCore.height;
    const Box region{core.cx() - 0.5 * core.w * fx, core.cy() - 0.5 * core.h * fy, core.w * fx, core.h * fy};
    return resample_region(image, region, kSelectivePatch.width, kSelectivePatch.height);
}

ImagePlane equalize_histogram(const ImagePlane& patch) {
    std::array<std::uint64_t, 256> hist{};
    for (float v : patch.pixels()) ++hist[static_cast<std::size_t>(std::clamp(std::lround(v), 0L, 255L))];
    const std::uint64_t n = patch.pixels().size();
    std::uint64_t cdf_min = 0;
    for (auto h : hist)
        if (h) {
            cdf_min = h;
            break;
        }
    if (n == 0 || cdf_min == n) return patch;
    std::array<float, 256> lut{};
    std::uint64_t cdf = 0;
    for (std::size_t v = 0; v < 256; ++v) {
        cdf += hist[v];
        const double num = 255.0 * static_cast<double>(cdf >= cdf_min ? cdf - cdf_min : 0);
        lut[v] = static_cast<float>(std::round(num / static_cast<double>(n - cdf_min)));
    }
    ImagePlane out(patch.width(), patch.height());
    auto src = patch.pixels();
    auto dst = out.pixels();
    for (std::size_t k = 0; k < src.size(); ++k)
        dst[k] = lut[static_cast<std::size_t>(std::clamp(std::lround(src[k]), 0L, 255L))];
    return out;
}

ImagePlane mirror_horizontal(const ImagePlane& patch) {
    ImagePlane out(patch.width(), patch.height());
    for (int y = 0; y < patch.height(); ++y) {
        auto s = patch.row(y);
        auto d = out.row(y);
        std::reverse_copy(s.begin(), s.end(), d.begin());
    }
    return out;
}

ImagePlane prepare_patch(const ImagePlane& image, const CandidateRegion& c, double scale, Size window) {
    auto patch = extract_patch(image, c, scale, window);
    for (float& v : patch.pixels()) v = static_cast<float>(std::clamp(std::lround(v), 0L, 255L));
    return normalize_intensity(equalize_histogram(patch));
}

int count_above(std::span<const float> responses, float threshold) noexcept {
    int k = 0;
    for (float v : responses) k += v > threshold ? 1 : 0;
    return k;
}

SelectiveOutcome classify_region(const ImagePlane& patch, const CascadeModel& model, float t2, int tm,
                                 DecisionRule rule) {
    if (patch.size() != kSelectivePatch)
        throw DimensionError("selective patch must be " + std::to_string(kSelectivePatch.width) + "x" +
                             std::to_string(kSelectivePatch.height));
    const ImagePlane mirrored = mirror_horizontal(patch);

    auto evaluate = [&](int stage, int& k, float& best) {
        const auto a = forward(patch, model.specs[stage], model.weights[stage]);
        const auto b = forward(mirrored, model.specs[stage], model.weights[stage]);
        k = count_above(a.values(), t2) + count_above(b.values(), t2);
        best = std::max(*std::max_element(a.values().begin(), a.values().end()),
                        *std::max_element(b.values().begin(), b.values().end()));
    };

    SelectiveOutcome out;
    evaluate(1, out.k2, out.best_score);
    // CNN3 is skipped when its count can no longer change the verdict.
    if (rule == DecisionRule::Strict && out.k2 == 0) return out;
    if (rule == DecisionRule::Weak && out.k2 >= tm) {
        out.accepted = true;
        return out;
    }
    evaluate(2, out.k3, out.best_score);
    out.ran_stage3 = true;
    out.accepted = decide(rule, out.k2, out.k3, tm);
    return out;
}

std::vector<Detection> group_detections(std::span<const ScoredBox> raw, int min_neighbors, double overlap) {
    const std::size_t n = raw.size();
    DisjointSets sets(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (iou(raw[a].box, raw[b].box) >= overlap) sets.unite(a, b);

    struct Acc {
        double x = 0, y = 0, w = 0, h = 0;
        float score = 0;
        int count = 0;
    };
    std::vector<Acc> acc(n);
    for (std::size_t k = 0; k < n; ++k) {
        Acc& a = acc[sets.find(k)];
        a.x += raw[k].box.x;
        a.y += raw[k].box.y;
        a.w += raw[k].box.w;
        a.h += raw[k].box.h;
        a.score = a.count == 0 ? raw[k].score : std::max(a.score, raw[k].score);
        ++a.count;
    }
    std::vector<Detection> out;
    for (const auto& a : acc) {
        if (a.count == 0 || a.count < min_neighbors) continue;
        const double c = a.count;
        out.push_back({{a.x / c, a.y / c, a.w / c, a.h / c}, a.score, a.count});
    }
    std::sort(out.begin(), out.end(), [](const Detection& p, const Detection& q) {
        return std::tie(p.box.y, p.box.x, p.box.w, p.box.h) < std::tie(q.box.y, q.box.x, q.box.w, q.box.h);
    });
    return out;
}

CandidateVerdict evaluate_candidate(const ImagePlane& image, const CandidateRegion& c, double scale,
                                    const CascadeModel& model, const DetectorParams& params) {
    const Size window = model.window();
    CandidateVerdict v;
    v.candidate = c;
    v.box = candidate_box(c, scale, window);
    v.outcome = classify_region(prepare_patch(image, c, scale, window), model, params.t2, params.tm, params.rule);
    return v;
}

std::vector<Detection> finish_frame(std::vector<CandidateVerdict>& verdicts, const DetectorParams& params,
                                    RunStats& stats) {
    const auto t0 = Clock::now();
    std::sort(verdicts.begin(), verdicts.end(), [](const CandidateVerdict& a, const CandidateVerdict& b) {
        return std::tie(a.candidate.level, a.candidate.y, a.candidate.x) <
               std::tie(b.candidate.level, b.candidate.y, b.candidate.x);
    });
    stats.stage1 = verdicts.size();
    stats.stage2 = 0;
    stats.stage3 = 0;
    std::vector<ScoredBox> raw;
    for (const auto& v : verdicts) {
        // a candidate survives stage 2 when CNN2 did not settle a rejection on its own
        const bool rejected_by_cnn2 = params.rule == DecisionRule::Strict && v.outcome.k2 == 0;
        if (!rejected_by_cnn2) ++stats.stage2;
        if (v.outcome.accepted) {
            ++stats.stage3;
            raw.push_back({v.box, v.outcome.best_score});
        }
    }
    auto detections = group_detections(raw, params.minNeighbors, params.groupOverlap);
    stats.nms = detections.size();
    stats.grouping_us = micros_since(t0);
    return detections;
}

DetectionResult detect(const ImagePlane& gray, const CascadeModel& model, const DetectorParams& params) {
    params.validate();
    DetectionResult result;
    RunStats& stats = result.stats;
    stats.mode = ExecutionMode::Sync;
    stats.workers = 1;
    const auto t_start = Clock::now();

    const Size window = model.window();
    const int stride = model.stride();
    auto t0 = Clock::now();
    const auto levels = build_pyramid(gray, window, params.minSize, params.scaleFactor);
    stats.pyramid_us = micros_since(t0);

    std::vector<CandidateVerdict> verdicts;
    for (const auto& level : levels) {
        stats.sliding += window_positions(level.image.size(), window, stride);
        t0 = Clock::now();
        const auto candidates = scan_stage1(level, model, params.t1);
        stats.scan_us += micros_since(t0);
        t0 = Clock::now();
        for (const auto& c : candidates) verdicts.push_back(evaluate_candidate(gray, c, level.scale, model, params));
        stats.selective_us += micros_since(t0);
    }
    result.detections = finish_frame(verdicts, params, stats);
    stats.total_us = micros_since(t_start);
    return result;
}

}  // namespace ccnn
