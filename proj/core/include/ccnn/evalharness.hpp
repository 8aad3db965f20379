#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ccnn/geometry.hpp"

namespace ccnn {

/// FDDB-style ellipse: semi-axis radii, major-axis angle in radians, centre.
struct Ellipse {
    double major = 0.0;
    double minor = 0.0;
    double angle = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    bool contains(double x, double y) const noexcept;
    Box bounds() const noexcept;
    double area() const noexcept;
};

using Shape = std::variant<Box, Ellipse>;

struct Annotation {
    std::string image;
    Shape shape;
};

struct ScoredDetection {
    Box box;
    float score = 0.0f;
    int neighbors = 1;
};

struct MatchPair {
    int annotation = 0;
    int detection = 0;
    double iou = 0.0;

    friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<int> missed;    // annotation indices (false negatives)
    std::vector<int> spurious;  // detection indices (false positives)

    std::size_t true_positives() const noexcept { return pairs.size(); }
};

double iou_rect(const Box& a, const Box& b) noexcept;

/// Both shapes sampled at pixel centres of a `step`-spaced grid over their
/// joint bounding box.
double iou_ellipse_rect(const Ellipse& e, const Box& r, double step = 1.0);

double iou_shape(const Shape& s, const Box& r, double step = 1.0);

/// Greedy one-to-one assignment on a dense IoU matrix (rows are annotations):
/// the highest remaining pair is taken first; ties go to the lower
/// (annotation, detection) index; pairs below threshold never match.
MatchResult match_greedy(const std::vector<std::vector<double>>& iou, double threshold = 0.5);

MatchResult match_discrete(std::span<const Shape> annotations, std::span<const Box> detections,
                           double threshold = 0.5);

/// One image as seen by the scorers.
struct ImageEval {
    std::string image;
    std::vector<Shape> annotations;
    std::vector<ScoredDetection> detections;
};

struct RocPoint {
    double threshold = 0.0;
    std::size_t fp = 0;
    double tpr = 0.0;
};

struct FddbReport {
    std::vector<RocPoint> roc;
    double continuous = 0.0;  // summed matched IoU / annotation count, all detections kept
    std::size_t annotations = 0;
};

/// Distinct detection scores in ascending order.
std::vector<double> score_thresholds(std::span<const ImageEval> images);

/// Detections with score >= threshold take part at each sweep point.
FddbReport score_fddb(std::span<const ImageEval> images, std::span<const double> thresholds);

inline constexpr int kMultiscaleVariants = 44;
inline constexpr double kMultiscaleLow = 0.9;
inline constexpr double kMultiscaleHigh = 1.2;

/// Centre-preserving copies at factors low + i * (high - low) / (count - 1).
std::vector<Box> multiscale_variants(const Box& annotation, int count = kMultiscaleVariants,
                                     double low = kMultiscaleLow, double high = kMultiscaleHigh);

/// Best IoU over the original box and its variants.
double best_variant_iou(const Box& annotation, const Box& detection, std::span<const Box> variants);
double best_variant_iou(const Box& annotation, const Box& detection);

bool match_multiscale(const Box& annotation, const Box& detection, int count = kMultiscaleVariants,
                      double low = kMultiscaleLow, double high = kMultiscaleHigh, double threshold = 0.5);

/// One-to-one greedy matching where pair strength is the best-variant IoU.
MatchResult match_rect_multiscale(std::span<const Box> annotations, std::span<const Box> detections,
                                  double threshold = 0.5);

struct Prf1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Zero denominators report 0.
Prf1 score_prf1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;

enum class Matcher { Discrete, Multiscale };

/// Aggregates over images, keeping detections whose neighbour count is at
/// least min_neighbors.
Prf1 score_prf1(std::span<const ImageEval> images, Matcher matcher, int min_neighbors = 1);

struct NeighborSweep {
    std::vector<int> min_neighbors;
    std::vector<Prf1> scores;
    double mean_f1 = 0.0;
};

NeighborSweep sweep_min_neighbors(std::span<const ImageEval> images, Matcher matcher,
                                  std::span<const int> values = {});

}  // namespace ccnn
