#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "ccnn/evalharness.hpp"
#include "ccnn/formats.hpp"
#include "ccnn/image_io.hpp"
#include "ccnn/modelspec.hpp"
#include "ccnn/pyramid.hpp"

namespace fs = std::filesystem;

namespace ccnn::cli {

namespace {

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    return in;
}

CascadeModel require_model(const std::string& path) {
    if (path.empty()) throw UsageError("no model given (use --model or CCNN_MODEL)");
    return load_model(path);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string image_id(const fs::path& image, const std::string& root) {
    fs::path p = image;
    if (!root.empty()) p = fs::path(image).lexically_relative(root);
    if (p.empty() || *p.begin() == "..") p = image;
    p.replace_extension();
    return p.generic_string();
}

int run_detect(const DetectOptions& o) {
    o.params.validate();
    const CascadeModel model = require_model(o.model);
    if (o.images.empty()) throw UsageError("no input images");

    auto det_out = open_out(o.detections);
    auto stats_out = open_out(o.stats);
    stats_out << runstats_csv_header() << '\n';
    if (!o.annotate_dir.empty()) fs::create_directories(o.annotate_dir);

    int failures = 0;
    for (const auto& path : o.images) {
        ImagePlane gray;
        try {
            gray = load_grayscale(path);
        } catch (const std::exception& e) {
            std::cerr << "skipping " << path << ": " << e.what() << '\n';
            ++failures;
            continue;
        }
        const auto result = run_pipeline(gray, model, o.params, o.pipeline);
        const std::string id = image_id(path, o.image_root);
        for (const auto& d : result.detections)
            det_out << to_json_line({id, d.box, d.score, d.neighbors}) << '\n';
        stats_out << runstats_csv_row(id, result.stats) << '\n';
        if (!o.annotate_dir.empty()) {
            ImagePlane copy = gray;
            for (const auto& d : result.detections) draw_box(copy, d.box, 255.0f);
            write_pgm(copy, fs::path(o.annotate_dir) / (fs::path(path).stem().string() + ".pgm"));
        }
    }
    return failures ? kPartial : kOk;
}

int run_train(const TrainOptions& o) {
    auto log_cb = [](const EpochLog& e) {
        std::cerr << "stage " << e.stage + 1 << " epoch " << e.epoch << " loss " << format_fixed(e.loss, 6)
                  << " holdout_error " << format_fixed(e.holdout_error, 4) << '\n';
    };
    CascadeTrainResult r;
    try {
        r = o.samples.empty() ? train_cascade_synthetic(o.synthetic, o.config, log_cb)
                              : train_cascade_from_dirs(o.samples, o.config, log_cb);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    save_model(r.model, o.out);
    auto log = open_out(o.log);
    write_training_log_csv(log, r.log);
    for (int s = 0; s < 3; ++s)
        std::cout << "stage " << s + 1 << " holdout_error " << format_fixed(r.holdout_error[static_cast<std::size_t>(s)])
                  << '\n';
    return kOk;
}

int run_eval(const EvalOptions& o) {
    if (o.protocol != "fddb" && o.protocol != "rect") throw UsageError("protocol must be fddb or rect");
    auto det_in = open_in(o.detections);
    const auto records = read_detections_jsonl(det_in);
    auto ann_in = open_in(o.annotations);
    const auto annotated = o.protocol == "fddb" ? parse_fddb(ann_in) : parse_rect_csv(ann_in);

    std::map<std::string, std::size_t> index;
    std::vector<ImageEval> images;
    for (const auto& a : annotated) {
        if (index.count(a.image)) throw FormatError("duplicate annotation block for " + a.image);
        index[a.image] = images.size();
        images.push_back({a.image, a.shapes, {}});
    }
    std::set<std::string> unknown;
    for (const auto& r : records) {
        const auto it = index.find(r.image);
        if (it == index.end()) {
            unknown.insert(r.image);
            continue;
        }
        images[it->second].detections.push_back({r.box, r.score, r.neighbors});
    }
    for (const auto& id : unknown) std::cerr << "warning: no annotations for " << id << "; excluded\n";

    const auto thresholds = score_thresholds(images);
    const auto fddb = score_fddb(images, thresholds);
    auto roc = open_out(o.roc);
    write_roc_csv(roc, fddb.roc);

    std::vector<SummaryRow> rows;
    const Matcher matcher = o.protocol == "fddb" ? Matcher::Discrete : Matcher::Multiscale;
    const auto sweep = sweep_min_neighbors(images, matcher);
    Prf1 mean;
    for (std::size_t i = 0; i < sweep.scores.size(); ++i) {
        rows.push_back({"min_neighbors=" + std::to_string(sweep.min_neighbors[i]), sweep.scores[i], fddb.continuous});
        mean.precision += sweep.scores[i].precision / static_cast<double>(sweep.scores.size());
        mean.recall += sweep.scores[i].recall / static_cast<double>(sweep.scores.size());
    }
    mean.f1 = sweep.mean_f1;
    rows.push_back({"mean", mean, fddb.continuous});
    auto summary = open_out(o.summary);
    write_summary_csv(summary, rows);
    std::cout << "images " << images.size() << " annotations " << fddb.annotations << " mean_f1 "
              << format_fixed(sweep.mean_f1) << " continuous " << format_fixed(fddb.continuous) << '\n';
    return kOk;
}

int run_bench(const BenchOptions& o) {
    o.params.validate();
    const CascadeModel model = require_model(o.model);
    if (o.images.empty()) throw UsageError("no input images");
    if (o.repetitions < 1) throw UsageError("--reps must be positive");
    std::vector<ExecutionMode> modes;
    for (const auto& m : o.modes) {
        try {
            modes.push_back(parse_mode(m));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }

    auto out = open_out(o.out);
    out << bench_csv_header() << '\n';
    int failures = 0;
    for (const auto& path : o.images) {
        ImagePlane gray;
        try {
            gray = load_grayscale(path);
        } catch (const std::exception& e) {
            std::cerr << "skipping " << path << ": " << e.what() << '\n';
            ++failures;
            continue;
        }
        for (const ExecutionMode mode : modes) {
            const bool threaded = mode == ExecutionMode::Async || mode == ExecutionMode::Partitioned;
            const std::vector<int> counts = threaded ? o.workers : std::vector<int>{1};
            for (const int w : counts) {
                DetectorParams p = o.params;
                p.mode = mode;
                PipelineOptions po;
                po.selectiveWorkers = po.poolA = po.poolB = w;
                std::vector<double> pyr, scan, sel, grp, tot;
                BenchRow row;
                for (int rep = 0; rep < o.repetitions; ++rep) {
                    const auto r = run_pipeline(gray, model, p, po);
                    pyr.push_back(r.stats.pyramid_us / 1000.0);
                    scan.push_back(r.stats.scan_us / 1000.0);
                    sel.push_back(r.stats.selective_us / 1000.0);
                    grp.push_back(r.stats.grouping_us / 1000.0);
                    tot.push_back(r.stats.total_us / 1000.0);
                    row.counts = r.stats;
                }
                row.frame = image_id(path, "");
                row.mode = mode;
                row.workers = w;
                row.repetitions = o.repetitions;
                row.pyramid_ms = median(pyr);
                row.scan_ms = median(scan);
                row.selective_ms = median(sel);
                row.grouping_ms = median(grp);
                row.total_ms = median(tot);
                row.fps = row.total_ms > 0 ? 1000.0 / row.total_ms : 0.0;
                out << bench_csv_row(row) << '\n';
            }
        }
    }
    return failures ? kPartial : kOk;
}

int run_pack_inspect(const PackOptions& o) {
    o.params.validate();
    ImagePlane frame;
    if (!o.image.empty()) {
        frame = load_grayscale(o.image);
    } else {
        if (o.width < 1 || o.height < 1) throw UsageError("give an image or --width/--height");
        frame = ImagePlane(o.width, o.height, 128.0f);
    }
    const Size window = receptive_field(reference_network(0));
    const auto levels = build_pyramid(frame, window, o.params.minSize, o.params.scaleFactor);
    if (levels.empty()) throw UsageError("frame smaller than the scanning window at this minSize");
    const auto packed = pack_fcnr(levels, 0, o.align);
    std::vector<Size> sizes;
    for (const auto& l : levels) sizes.push_back(l.image.size());

    std::uint64_t level_area = 0;
    for (const auto& s : sizes) level_area += static_cast<std::uint64_t>(s.width) * static_cast<std::uint64_t>(s.height);
    const double strip_area = static_cast<double>(packed.strip.width()) * packed.strip.height();
    std::cout << "levels " << levels.size() << "\nstrip " << packed.strip.width() << "x" << packed.strip.height()
              << "\nnaive_height " << naive_stack_height(sizes, o.align) << "\nfill " << format_fixed(level_area / strip_area, 4)
              << "\nlevel,scale,width,height,x,y\n";
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& p = packed.placements[i];
        std::cout << i << ',' << format_fixed(levels[i].scale) << ',' << sizes[i].width << ',' << sizes[i].height << ','
                  << p.x << ',' << p.y << '\n';
    }
    if (!o.strip_out.empty()) write_pgm(packed.strip, o.strip_out);
    if (!o.ownership_out.empty()) {
        ImagePlane own(packed.ownership.width(), packed.ownership.height());
        const float spread = 255.0f / static_cast<float>(levels.size());
        for (int y = 0; y < own.height(); ++y)
            for (int x = 0; x < own.width(); ++x) {
                const int k = packed.ownership.at(x, y);
                own.at(x, y) = k < 0 ? 0.0f : 255.0f - spread * static_cast<float>(k);
            }
        write_pgm(own, o.ownership_out);
    }
    return kOk;
}

int run_manifest(const std::string& model) {
    std::array<NetworkSpec, 3> specs = reference_specs();
    if (!model.empty()) specs = load_model(model).specs;
    std::cout << manifest(specs);
    return kOk;
}

int run_synth(const SynthOptions& o) {
    if (o.count < 1) throw UsageError("--count must be positive");
    fs::create_directories(o.out_dir);
    SyntheticFaces gen(o.seed);
    auto csv = open_out((fs::path(o.out_dir) / "annotations.csv").string());
    csv << "image,x,y,w,h\n";
    for (int i = 0; i < o.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d", i);
        const auto scene = gen.scene(o.scene);
        write_pgm(scene.image, fs::path(o.out_dir) / (std::string(name) + ".pgm"));
        for (const auto& b : scene.faces)
            csv << name << ',' << format_fixed(b.x, 3) << ',' << format_fixed(b.y, 3) << ',' << format_fixed(b.w, 3) << ','
                << format_fixed(b.h, 3) << '\n';
    }
    return kOk;
}

}  // namespace ccnn::cli
