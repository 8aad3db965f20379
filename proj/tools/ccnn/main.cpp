#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "ccnn/formats.hpp"
#include "ccnn/image_io.hpp"
#include "ccnn/modelspec.hpp"
#include "ccnn/nnkernel.hpp"
#include "commands.hpp"

using namespace ccnn;
using namespace ccnn::cli;

namespace {

void add_detector_options(CLI::App* app, DetectorParams& p) {
    app->add_option("--min-size", p.minSize, "Smallest face width in pixels")->capture_default_str();
    app->add_option("--scale-factor", p.scaleFactor, "Pyramid step between levels")->capture_default_str();
    app->add_option("--t1", p.t1, "Stage-1 response threshold")->capture_default_str();
    app->add_option("--t2", p.t2, "Selective response threshold")->capture_default_str();
    app->add_option("--tm", p.tm, "Response-count threshold")->capture_default_str();
    app->add_option("--min-neighbors", p.minNeighbors, "Smallest cluster kept by grouping")->capture_default_str();
    app->add_option("--group-overlap", p.groupOverlap, "IoU linking two raw detections")->capture_default_str();
    app->add_option_function<std::string>(
           "--rule", [&p](const std::string& v) { p.rule = parse_rule(v); }, "Decision rule")
        ->check(CLI::IsMember({"strict", "weak"}))
        ->default_str("strict");
}

void add_model_option(CLI::App* app, std::string& model) {
    app->add_option("--model,-m", model, "Model file")->envname("CCNN_MODEL");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ccnn: compact CNN cascade face detector"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ccnn 0.1.0");

    DetectOptions det;
    std::string det_mode = "sync";
    auto* detect = app.add_subcommand("detect", "Detect faces in PGM/PNG images");
    detect->add_option("images", det.images, "Input images")->required();
    add_model_option(detect, det.model);
    add_detector_options(detect, det.params);
    detect->add_option("--mode", det_mode, "sync, async, partitioned or patchwork")
        ->check(CLI::IsMember({"sync", "async", "partitioned", "patchwork"}))
        ->capture_default_str();
    detect->add_option("--workers", det.pipeline.selectiveWorkers, "Async selective workers / partitioned pool A")
        ->capture_default_str();
    detect->add_option("--pool-b", det.pipeline.poolB, "Partitioned pool B workers")->capture_default_str();
    detect->add_option("--queue", det.pipeline.queueCapacity, "Async candidate queue capacity")->capture_default_str();
    detect->add_option("--out,-o", det.detections, "Detection JSONL")->capture_default_str();
    detect->add_option("--stats", det.stats, "Per-image RunStats CSV")->capture_default_str();
    detect->add_option("--annotate-dir", det.annotate_dir, "Write copies with detections drawn");
    detect->add_option("--image-root", det.image_root, "Image ids are taken relative to this directory");

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Train the three cascade networks");
    train->add_option("--samples", tr.samples, "Directory with stage{1,2,3}/{pos,neg}; synthetic data when omitted");
    train->add_option("--out,-o", tr.out, "Model file")->capture_default_str();
    train->add_option("--log", tr.log, "Training log CSV")->capture_default_str();
    train->add_option("--seed", tr.config.seed, "Initialization and shuffling seed")->capture_default_str();
    train->add_option("--data-seed", tr.synthetic.seed, "Synthetic data seed")->capture_default_str();
    train->add_option("--epochs", tr.config.epochs)->capture_default_str();
    train->add_option("--batch", tr.config.batch)->capture_default_str();
    train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
    train->add_option("--momentum", tr.config.momentum)->capture_default_str();
    train->add_option("--holdout", tr.config.holdout_fraction, "Holdout fraction")->capture_default_str();
    train->add_option("--target-error", tr.config.target_error, "Stop once holdout error stays at or below this")
        ->capture_default_str();
    train->add_option("--stage1-faces", tr.synthetic.stage1_faces)->capture_default_str();
    train->add_option("--stage1-backgrounds", tr.synthetic.stage1_backgrounds)->capture_default_str();
    train->add_option("--selective-faces", tr.synthetic.selective_faces)->capture_default_str();
    train->add_option("--selective-backgrounds", tr.synthetic.selective_backgrounds)->capture_default_str();
    train->add_option("--mining-scenes", tr.synthetic.mining_scenes)->capture_default_str();

    EvalOptions ev;
    auto* eval = app.add_subcommand("eval", "Score detections against annotations");
    eval->add_option("--detections,-d", ev.detections, "Detection JSONL")->required();
    eval->add_option("--annotations,-a", ev.annotations, "FDDB ellipse list or image,x,y,w,h CSV")->required();
    eval->add_option("--protocol", ev.protocol)->check(CLI::IsMember({"fddb", "rect"}))->capture_default_str();
    eval->add_option("--roc", ev.roc, "ROC CSV")->capture_default_str();
    eval->add_option("--summary", ev.summary, "Summary CSV")->capture_default_str();

    BenchOptions be;
    auto* bench = app.add_subcommand("bench", "Time execution modes over images");
    bench->add_option("images", be.images, "Input images")->required();
    add_model_option(bench, be.model);
    add_detector_options(bench, be.params);
    bench->add_option("--modes", be.modes, "Modes to run")->delimiter(',')->capture_default_str();
    bench->add_option("--workers", be.workers, "Worker counts for threaded modes")->delimiter(',')->capture_default_str();
    bench->add_option("--reps", be.repetitions, "Repetitions per configuration")->capture_default_str();
    bench->add_option("--out,-o", be.out, "Bench CSV")->capture_default_str();

    PackOptions pk;
    auto* pack = app.add_subcommand("pack-inspect", "Show the packed pyramid strip of a frame");
    pack->add_option("image", pk.image, "Frame to pack");
    pack->add_option("--width", pk.width, "Blank frame width when no image is given");
    pack->add_option("--height", pk.height, "Blank frame height when no image is given");
    pack->add_option("--align", pk.align, "Placement grid")->capture_default_str();
    pack->add_option("--strip", pk.strip_out, "Write the packed strip as PGM");
    pack->add_option("--ownership", pk.ownership_out, "Write the ownership map as PGM");
    add_detector_options(pack, pk.params);

    std::string manifest_model;
    auto* manifest_cmd = app.add_subcommand("manifest", "Print parameter and feature-map counts");
    manifest_cmd->add_option("--model,-m", manifest_model, "Model file; reference geometry when omitted");

    SynthOptions sy;
    auto* synth = app.add_subcommand("synth", "Generate synthetic scenes with rectangle annotations");
    synth->add_option("--out,-o", sy.out_dir)->capture_default_str();
    synth->add_option("--count,-n", sy.count)->capture_default_str();
    synth->add_option("--seed", sy.seed)->capture_default_str();
    synth->add_option("--width", sy.scene.width)->capture_default_str();
    synth->add_option("--height", sy.scene.height)->capture_default_str();
    synth->add_option("--min-faces", sy.scene.min_faces)->capture_default_str();
    synth->add_option("--max-faces", sy.scene.max_faces)->capture_default_str();
    synth->add_option("--min-face", sy.scene.min_face)->capture_default_str();
    synth->add_option("--max-face", sy.scene.max_face)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*detect) {
            det.params.mode = parse_mode(det_mode);
            det.pipeline.poolA = det.pipeline.selectiveWorkers;
            return run_detect(det);
        }
        if (*train) return run_train(tr);
        if (*eval) return run_eval(ev);
        if (*bench) return run_bench(be);
        if (*pack) return run_pack_inspect(pk);
        if (*manifest_cmd) return run_manifest(manifest_model);
        if (*synth) return run_synth(sy);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ModelFormatError& e) {
        std::cerr << "model format error: " << e.what() << '\n';
        return kFormat;
    } catch (const ModelTruncatedError& e) {
        std::cerr << "model format error: " << e.what() << '\n';
        return kFormat;
    } catch (const ModelGeometryError& e) {
        std::cerr << "model format error: " << e.what() << '\n';
        return kFormat;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kFormat;
    } catch (const ImageDecodeError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kFormat;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return kTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kUsage;
}
