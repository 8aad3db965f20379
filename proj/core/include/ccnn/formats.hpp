#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccnn/cascade.hpp"
#include "ccnn/evalharness.hpp"

namespace ccnn {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DetectionRecord {
    std::string image;
    Box box;
    float score = 0.0f;
    int neighbors = 0;
};

/// {"image":..,"x":..,"y":..,"w":..,"h":..,"score":..,"neighbors":..}
std::string to_json_line(const DetectionRecord& r);
DetectionRecord parse_json_line(const std::string& line);

void write_detections_jsonl(std::ostream& out, std::span<const DetectionRecord> records);
/// Blank lines are skipped; anything else malformed throws FormatError with the line number.
std::vector<DetectionRecord> read_detections_jsonl(std::istream& in);

/// Table-1 shaped per-frame row.
std::string runstats_csv_header();
std::string runstats_csv_row(const std::string& image, const RunStats& stats);

struct BenchRow {
    std::string frame;
    ExecutionMode mode = ExecutionMode::Sync;
    int workers = 1;
    int repetitions = 0;
    double pyramid_ms = 0.0;  // medians over repetitions
    double scan_ms = 0.0;
    double selective_ms = 0.0;
    double grouping_ms = 0.0;
    double total_ms = 0.0;
    RunStats counts;
    double fps = 0.0;
};

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

struct AnnotatedImage {
    std::string image;
    std::vector<Shape> shapes;
};

/// FDDB ellipse list: image path line, face-count line, then one
/// "major minor angle cx cy [1]" line per face.
std::vector<AnnotatedImage> parse_fddb(std::istream& in);

/// image,x,y,w,h per line; an optional header line is skipped. Rows of one
/// image are grouped in first-appearance order.
std::vector<AnnotatedImage> parse_rect_csv(std::istream& in);

void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc);

struct SummaryRow {
    std::string scope;
    Prf1 scores;
    double continuous = 0.0;
};

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Fixed six-decimal rendering used by every CSV writer.
std::string format_fixed(double v, int decimals = 6);

}  // namespace ccnn
