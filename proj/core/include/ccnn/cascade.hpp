#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccnn/geometry.hpp"
#include "ccnn/modelspec.hpp"
#include "ccnn/pyramid.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

enum class DecisionRule { Strict, Weak };
enum class ExecutionMode { Sync, Async, Patchwork, Partitioned };

std::string_view to_string(DecisionRule rule) noexcept;
std::string_view to_string(ExecutionMode mode) noexcept;
DecisionRule parse_rule(std::string_view text);
ExecutionMode parse_mode(std::string_view text);

struct DetectorParams {
    int minSize = 15;
    double scaleFactor = 1.05;
    float t1 = 0.0f;
    float t2 = 0.0f;
    int tm = 1;
    int minNeighbors = 1;
    DecisionRule rule = DecisionRule::Strict;
    ExecutionMode mode = ExecutionMode::Sync;
    double groupOverlap = 0.3;

    /// Throws std::invalid_argument on out-of-range knobs.
    void validate() const;
};

/// A stage-1 hit: window at (x, y) of pyramid level `level`.
struct CandidateRegion {
    int level = 0;
    int x = 0;
    int y = 0;
    float score = 0.0f;

    friend bool operator==(const CandidateRegion&, const CandidateRegion&) = default;
};

struct ScoredBox {
    Box box;
    float score = 0.0f;
};

struct Detection {
    Box box;
    float score = 0.0f;
    int neighbors = 0;
};

/// Per-stage window counts and wall times (microseconds) of one frame.
struct RunStats {
    std::uint64_t sliding = 0;
    std::uint64_t stage1 = 0;
    std::uint64_t stage2 = 0;
    std::uint64_t stage3 = 0;
    std::uint64_t nms = 0;

    double pyramid_us = 0.0;
    double scan_us = 0.0;
    double selective_us = 0.0;
    double grouping_us = 0.0;
    double total_us = 0.0;

    ExecutionMode mode = ExecutionMode::Sync;
    int workers = 1;
    int workers_b = 0;
    std::vector<int> level_pool;  // partitioned mode: pool (0 = A, 1 = B) that scanned each level

    double stage1_rejection() const noexcept {
        return sliding == 0 ? 0.0 : 1.0 - static_cast<double>(stage1) / static_cast<double>(sliding);
    }
};

struct DetectionResult {
    std::vector<Detection> detections;
    RunStats stats;
};

/// Eq. 2: (K2 >= Tm and K3 > 0) or (K2 > 0 and K3 >= Tm).
constexpr bool decide_strict(int k2, int k3, int tm) noexcept {
    return (k2 >= tm && k3 > 0) || (k2 > 0 && k3 >= tm);
}

/// Eq. 3: K2 >= Tm or K3 >= Tm.
constexpr bool decide_weak(int k2, int k3, int tm) noexcept { return k2 >= tm || k3 >= tm; }

constexpr bool decide(DecisionRule rule, int k2, int k3, int tm) noexcept {
    return rule == DecisionRule::Strict ? decide_strict(k2, k3, tm) : decide_weak(k2, k3, tm);
}

/// Number of stride-spaced window positions inside a level.
std::uint64_t window_positions(Size level, Size window, int stride);

/// Dense stage-1 scan of one normalized plane. Cell (i, j) above t1 becomes a
/// candidate at (stride*j, stride*i).
std::vector<CandidateRegion> scan_stage1(const ImagePlane& normalized, const NetworkSpec& spec,
                                         const NetworkWeights& weights, float t1, int level_index = 0);

/// Normalizes the level and scans it with the cascade's first network.
std::vector<CandidateRegion> scan_stage1(const PyramidLevel& level, const CascadeModel& model, float t1);

/// Candidate window in original-image coordinates.
Box candidate_box(const CandidateRegion& c, double scale, Size window);

/// Crop around the candidate, expanded by 51/35 x 55/39 about its centre,
/// resampled to 51x55. Values stay in the [0, 255] domain.
ImagePlane extract_patch(const ImagePlane& image, const CandidateRegion& c, double scale, Size window);

/// 256-bin CDF remap; single-valued inputs come back unchanged.
ImagePlane equalize_histogram(const ImagePlane& patch);

ImagePlane mirror_horizontal(const ImagePlane& patch);

/// extract_patch -> round to 8-bit -> equalize -> normalize to [-1, 1].
ImagePlane prepare_patch(const ImagePlane& image, const CandidateRegion& c, double scale, Size window);

struct SelectiveOutcome {
    bool accepted = false;
    int k2 = 0;
    int k3 = 0;
    bool ran_stage3 = false;
    float best_score = 0.0f;
};

/// Selective unit on a prepared 51x55 patch. Both mirror orientations are
/// pooled into each K count.
SelectiveOutcome classify_region(const ImagePlane& patch, const CascadeModel& model, float t2, int tm,
                                 DecisionRule rule);

/// Number of response cells above `threshold` across the given maps.
int count_above(std::span<const float> responses, float threshold) noexcept;

/// Transitive clustering on IoU >= overlap; clusters smaller than
/// min_neighbors are dropped; each survivor is the coordinate-wise mean box
/// with the best member score. Output sorted by (y, x, w, h).
std::vector<Detection> group_detections(std::span<const ScoredBox> raw, int min_neighbors, double overlap = 0.3);

/// Selective verdict for one candidate, shared by every execution mode.
struct CandidateVerdict {
    CandidateRegion candidate;
    SelectiveOutcome outcome;
    Box box;
};

CandidateVerdict evaluate_candidate(const ImagePlane& image, const CandidateRegion& c, double scale,
                                    const CascadeModel& model, const DetectorParams& params);

/// Canonically orders verdicts by (level, y, x), fills the stage counts and
/// groups the accepted ones. Every execution mode funnels through here.
std::vector<Detection> finish_frame(std::vector<CandidateVerdict>& verdicts, const DetectorParams& params,
                                    RunStats& stats);

/// Full synchronous pipeline on a [0, 255] grayscale frame.
DetectionResult detect(const ImagePlane& gray, const CascadeModel& model, const DetectorParams& params);

}  // namespace ccnn
