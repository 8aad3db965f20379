#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ccnn/modelspec.hpp"
#include "ccnn/nnkernel.hpp"

namespace ccnn {

struct TrainConfig {
    int epochs = 40;
    int batch = 16;
    double learning_rate = 0.02;
    double momentum = 0.9;
    double holdout_fraction = 0.2;
    /// Training stops early once the holdout error has stayed at or below this
    /// for `patience` consecutive epochs; 0 disables early stopping.
    double target_error = 0.0;
    int patience = 3;
    std::uint64_t seed = 1;
};

struct EpochLog {
    int stage = 0;
    int epoch = 0;
    double loss = 0.0;
    double holdout_error = 0.0;
    double train_error = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
    NetworkWeights weights;  // the epoch with the lowest holdout error
    double holdout_error = 1.0;
    std::vector<EpochLog> log;
    std::size_t train_size = 0;
    std::size_t holdout_size = 0;
};

/// Fraction of samples whose single-cell response disagrees in sign with the label.
double classification_error(std::span<const LabeledSample<float>> samples, const NetworkSpec& spec,
                            const NetworkWeights& weights);

/// Momentum SGD on MSE against +-1 targets. The sample order and the holdout
/// split are fixed by config.seed; epoch 0 in the log is the untrained state.
TrainResult train_network(const NetworkSpec& spec, std::vector<LabeledSample<float>> samples,
                          const TrainConfig& config, int stage = 0, const EpochCallback& on_epoch = {});

struct SyntheticTrainSpec {
    int stage1_faces = 3000;
    int stage1_backgrounds = 6000;
    int selective_faces = 2000;
    int selective_backgrounds = 4000;
    /// Stage-1 false positives harvested from face-free scenes and added to the
    /// selective negatives.
    int mining_scenes = 40;
    std::uint64_t seed = 7;
};

std::vector<LabeledSample<float>> synthetic_stage1_samples(int faces, int backgrounds, std::uint64_t seed);
std::vector<LabeledSample<float>> synthetic_selective_samples(int faces, int backgrounds, std::uint64_t seed);

/// Selective-sized negatives cut from stage-1 hits on face-free scenes.
std::vector<LabeledSample<float>> mine_selective_negatives(const NetworkSpec& stage1, const NetworkWeights& weights,
                                                          int scenes, std::uint64_t seed, std::size_t limit);

struct CascadeTrainResult {
    CascadeModel model;
    std::vector<EpochLog> log;
    std::array<double, 3> holdout_error{};
};

/// Trains the three reference networks in sequence on generated data.
CascadeTrainResult train_cascade_synthetic(const SyntheticTrainSpec& data, const TrainConfig& config,
                                           const EpochCallback& on_epoch = {});

/// Loads pos/ and neg/ PGM or PNG samples from `root` for the given stage.
/// Stage 0 samples are resized to 27x31; stage 1 and 2 samples are resized to
/// 51x55, equalized, and centre-cropped to 35x39. Throws std::invalid_argument
/// when either class is empty.
std::vector<LabeledSample<float>> load_sample_dir(const std::filesystem::path& root, int stage);

/// Trains from sample directories root/stage1, root/stage2, root/stage3.
CascadeTrainResult train_cascade_from_dirs(const std::filesystem::path& root, const TrainConfig& config,
                                           const EpochCallback& on_epoch = {});

std::string training_log_csv_header();
void write_training_log_csv(std::ostream& out, std::span<const EpochLog> log);

}  // namespace ccnn
