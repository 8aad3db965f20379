#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccnn/cascade.hpp"
#include "ccnn/pipeline.hpp"
#include "ccnn/synthetic.hpp"
#include "ccnn/trainer.hpp"

namespace ccnn::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kFormat = 3,
    kTraining = 4,
    kPartial = 5,
};

/// Thrown for bad invocations that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DetectOptions {
    std::vector<std::string> images;
    std::string model;
    std::string detections = "detections.jsonl";
    std::string stats = "runstats.csv";
    std::string annotate_dir;
    std::string image_root;
    DetectorParams params;
    PipelineOptions pipeline;
};

struct TrainOptions {
    std::string samples;  // empty: synthetic
    std::string out = "model.ccnn";
    std::string log = "training_log.csv";
    SyntheticTrainSpec synthetic;
    TrainConfig config;
};

struct EvalOptions {
    std::string detections;
    std::string annotations;
    std::string protocol = "fddb";
    std::string roc = "roc.csv";
    std::string summary = "summary.csv";
};

struct BenchOptions {
    std::vector<std::string> images;
    std::string model;
    std::string out = "bench.csv";
    std::vector<std::string> modes{"sync", "async", "partitioned", "patchwork"};
    std::vector<int> workers{1, 2, 4};
    int repetitions = 5;
    DetectorParams params;
};

struct PackOptions {
    std::string image;
    int width = 0;
    int height = 0;
    int align = 4;
    std::string strip_out;
    std::string ownership_out;
    DetectorParams params;
};

struct SynthOptions {
    std::string out_dir = "synth";
    int count = 10;
    SceneConfig scene;
    std::uint64_t seed = 1;
};

int run_detect(const DetectOptions& o);
int run_train(const TrainOptions& o);
int run_eval(const EvalOptions& o);
int run_bench(const BenchOptions& o);
int run_pack_inspect(const PackOptions& o);
int run_manifest(const std::string& model);
int run_synth(const SynthOptions& o);

/// Image id used in detection records: path relative to `root` when given,
/// extension removed.
std::string image_id(const std::filesystem::path& image, const std::string& root);

}  // namespace ccnn::cli
