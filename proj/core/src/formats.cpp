#include "ccnn/formats.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace ccnn {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const char* what, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(field.substr(used)).size() != 0)
        throw FormatError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string to_json_line(const DetectionRecord& r) {
    ordered_json j;
    j["image"] = r.image;
    j["x"] = r.box.x;
    j["y"] = r.box.y;
    j["w"] = r.box.w;
    j["h"] = r.box.h;
    j["score"] = r.score;
    j["neighbors"] = r.neighbors;
    return j.dump();
}

DetectionRecord parse_json_line(const std::string& line) {
    DetectionRecord r;
    try {
        const auto j = nlohmann::json::parse(line);
        r.image = j.at("image").get<std::string>();
        r.box = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
        r.score = j.at("score").get<float>();
        r.neighbors = j.value("neighbors", 1);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(e.what());
    }
    if (!(r.box.w > 0) || !(r.box.h > 0)) throw FormatError("detection with non-positive extent");
    return r;
}

void write_detections_jsonl(std::ostream& out, std::span<const DetectionRecord> records) {
    for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<DetectionRecord> read_detections_jsonl(std::istream& in) {
    std::vector<DetectionRecord> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(parse_json_line(line));
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::string runstats_csv_header() {
    return "image,mode,workers,sliding,stage1,stage2,stage3,nms,stage1_rejected_pct,"
           "pyramid_us,scan_us,selective_us,grouping_us,total_us";
}

std::string runstats_csv_row(const std::string& image, const RunStats& s) {
    std::ostringstream o;
    o << image << ',' << to_string(s.mode) << ',' << s.workers << ',' << s.sliding << ',' << s.stage1 << ','
      << s.stage2 << ',' << s.stage3 << ',' << s.nms << ',' << format_fixed(100.0 * s.stage1_rejection(), 4) << ','
      << format_fixed(s.pyramid_us, 1) << ',' << format_fixed(s.scan_us, 1) << ',' << format_fixed(s.selective_us, 1)
      << ',' << format_fixed(s.grouping_us, 1) << ',' << format_fixed(s.total_us, 1);
    return o.str();
}

std::string bench_csv_header() {
    return "frame,mode,workers,reps,pyramid_ms,scan_ms,selective_ms,grouping_ms,total_ms,"
           "sliding,stage1,stage2,stage3,nms,fps";
}

std::string bench_csv_row(const BenchRow& r) {
    std::ostringstream o;
    o << r.frame << ',' << to_string(r.mode) << ',' << r.workers << ',' << r.repetitions << ','
      << format_fixed(r.pyramid_ms, 3) << ',' << format_fixed(r.scan_ms, 3) << ',' << format_fixed(r.selective_ms, 3)
      << ',' << format_fixed(r.grouping_ms, 3) << ',' << format_fixed(r.total_ms, 3) << ',' << r.counts.sliding << ','
      << r.counts.stage1 << ',' << r.counts.stage2 << ',' << r.counts.stage3 << ',' << r.counts.nms << ','
      << format_fixed(r.fps, 2);
    return o.str();
}

std::vector<AnnotatedImage> parse_fddb(std::istream& in) {
    std::vector<AnnotatedImage> out;
    std::string line;
    std::size_t n = 0;
    auto next = [&](std::string& dst) {
        while (std::getline(in, dst)) {
            ++n;
            dst = trim(dst);
            if (!dst.empty()) return true;
        }
        return false;
    };
    while (next(line)) {
        AnnotatedImage img;
        img.image = line;
        std::string count_line;
        if (!next(count_line)) throw FormatError("line " + std::to_string(n) + ": missing face count for " + img.image);
        const double count = parse_number(count_line, "face count", n);
        if (count < 0 || count != static_cast<long>(count))
            throw FormatError("line " + std::to_string(n) + ": bad face count");
        for (long f = 0; f < static_cast<long>(count); ++f) {
            std::string face;
            if (!next(face)) throw FormatError("line " + std::to_string(n) + ": truncated face list for " + img.image);
            std::istringstream ss(face);
            std::vector<std::string> fields;
            for (std::string t; ss >> t;) fields.push_back(t);
            if (fields.size() != 5 && fields.size() != 6)
                throw FormatError("line " + std::to_string(n) + ": expected 'major minor angle cx cy 1'");
            Ellipse e{parse_number(fields[0], "major radius", n), parse_number(fields[1], "minor radius", n),
                      parse_number(fields[2], "angle", n), parse_number(fields[3], "centre x", n),
                      parse_number(fields[4], "centre y", n)};
            if (!(e.major > 0) || !(e.minor > 0))
                throw FormatError("line " + std::to_string(n) + ": radii must be positive");
            img.shapes.emplace_back(e);
        }
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<AnnotatedImage> parse_rect_csv(std::istream& in) {
    std::vector<AnnotatedImage> out;
    std::map<std::string, std::size_t> index;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 5) throw FormatError("line " + std::to_string(n) + ": expected image,x,y,w,h");
        if (n == 1 && f[0] == "image" && f[1] == "x") continue;
        const Box b{parse_number(f[1], "x", n), parse_number(f[2], "y", n), parse_number(f[3], "w", n),
                    parse_number(f[4], "h", n)};
        if (!(b.w > 0) || !(b.h > 0)) throw FormatError("line " + std::to_string(n) + ": extents must be positive");
        auto [it, fresh] = index.try_emplace(f[0], out.size());
        if (fresh) out.push_back({f[0], {}});
        out[it->second].shapes.emplace_back(b);
    }
    return out;
}

void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc) {
    out << "threshold,fp,tpr\n";
    for (const auto& p : roc) out << format_fixed(p.threshold) << ',' << p.fp << ',' << format_fixed(p.tpr) << '\n';
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "scope,precision,recall,f1,continuous\n";
    for (const auto& r : rows)
        out << r.scope << ',' << format_fixed(r.scores.precision) << ',' << format_fixed(r.scores.recall) << ','
            << format_fixed(r.scores.f1) << ',' << format_fixed(r.continuous) << '\n';
}

}  // namespace ccnn
