#include "ccnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "ccnn/cascade.hpp"
#include "ccnn/formats.hpp"
#include "ccnn/image_io.hpp"
#include "ccnn/pyramid.hpp"
#include "ccnn/synthetic.hpp"

namespace ccnn {

namespace {

ImagePlane crop(const ImagePlane& src, int x0, int y0, int w, int h) {
    ImagePlane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = src.at(x + x0, y + y0);
    return out;
}

ImagePlane selective_crop(ImagePlane patch, int ox, int oy) {
    for (float& v : patch.pixels()) v = static_cast<float>(std::clamp(std::lround(v), 0L, 255L));
    return crop(normalize_intensity(equalize_histogram(patch)), ox, oy, 35, 39);
}

}  // namespace

double classification_error(std::span<const LabeledSample<float>> samples, const NetworkSpec& spec,
                            const NetworkWeights& weights) {
    if (samples.empty()) return 0.0;
    std::size_t wrong = 0;
    for (const auto& s : samples) {
        const float y = forward(s.image, spec, weights).values()[0];
        if ((y > 0.0f) != (s.label > 0.0f)) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

TrainResult train_network(const NetworkSpec& spec, std::vector<LabeledSample<float>> samples,
                          const TrainConfig& config, int stage, const EpochCallback& on_epoch) {
    validate_network(spec);
    if (config.batch < 1 || config.epochs < 0) throw std::invalid_argument("batch must be positive, epochs non-negative");
    if (samples.size() < 2) throw std::invalid_argument("need at least two samples");
    const bool has_pos = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label > 0; });
    const bool has_neg = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label <= 0; });
    if (!has_pos || !has_neg) throw std::invalid_argument("both classes need samples");

    std::mt19937_64 rng(config.seed);
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto n_hold = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(samples.size()))), 1,
        samples.size() - 1);
    const std::vector<LabeledSample<float>> holdout(samples.end() - static_cast<std::ptrdiff_t>(n_hold), samples.end());
    samples.resize(samples.size() - n_hold);

    TrainResult result;
    result.train_size = samples.size();
    result.holdout_size = holdout.size();
    NetworkWeights w = random_weights<float>(spec, config.seed ^ 0x9e3779b97f4a7c15ULL);
    NetworkWeights velocity = zero_weights<float>(spec);

    auto record = [&](int epoch, double loss) {
        EpochLog e{stage, epoch, loss, classification_error(holdout, spec, w), classification_error(samples, spec, w)};
        result.log.push_back(e);
        if (on_epoch) on_epoch(e);
        if (e.holdout_error < result.holdout_error || result.log.size() == 1) {
            result.holdout_error = e.holdout_error;
            result.weights = w;
        }
        return e.holdout_error;
    };
    {
        double loss = 0.0;
        for (const auto& s : samples) {
            const double d = forward(s.image, spec, w).values()[0] - s.label;
            loss += d * d;
        }
        record(0, loss / static_cast<double>(samples.size()));
    }

    int streak = 0;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LabeledSample<float>> batch;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(config.batch)) {
            batch.clear();
            for (std::size_t k = i; k < std::min(order.size(), i + static_cast<std::size_t>(config.batch)); ++k)
                batch.push_back(samples[order[k]]);
            loss_sum += backward_sgd_step<float>(batch, spec, w, velocity, config.learning_rate, config.momentum);
            ++batches;
        }
        const double err = record(epoch, loss_sum / static_cast<double>(batches));
        if (config.target_error > 0.0) {
            streak = err <= config.target_error ? streak + 1 : 0;
            if (streak >= config.patience) break;
        }
    }
    return result;
}

std::vector<LabeledSample<float>> synthetic_stage1_samples(int faces, int backgrounds, std::uint64_t seed) {
    SyntheticFaces gen(seed);
    std::vector<LabeledSample<float>> out;
    out.reserve(static_cast<std::size_t>(faces + backgrounds));
    for (int i = 0; i < faces; ++i) out.push_back({gen.stage1_input(true), 1.0f});
    for (int i = 0; i < backgrounds; ++i) out.push_back({gen.stage1_input(false), -1.0f});
    return out;
}

std::vector<LabeledSample<float>> synthetic_selective_samples(int faces, int backgrounds, std::uint64_t seed) {
    SyntheticFaces gen(seed);
    std::vector<LabeledSample<float>> out;
    out.reserve(static_cast<std::size_t>(faces + backgrounds));
    for (int i = 0; i < faces; ++i) out.push_back({gen.selective_input(true), 1.0f});
    for (int i = 0; i < backgrounds; ++i) out.push_back({gen.selective_input(false), -1.0f});
    return out;
}

std::vector<LabeledSample<float>> mine_selective_negatives(const NetworkSpec& stage1, const NetworkWeights& weights,
                                                          int scenes, std::uint64_t seed, std::size_t limit) {
    SyntheticFaces gen(seed);
    std::mt19937_64 pick(seed + 1);
    const Size window = receptive_field(stage1);
    std::vector<LabeledSample<float>> out;
    for (int s = 0; s < scenes && out.size() < limit; ++s) {
        SceneConfig cfg;
        cfg.width = 200;
        cfg.height = 150;
        cfg.min_faces = cfg.max_faces = 0;
        cfg.distractors = 8;
        const auto scene = gen.scene(cfg);
        for (const auto& level : build_pyramid(scene.image, window, window.width, 1.2)) {
            for (const auto& c : scan_stage1(normalize_intensity(level.image), stage1, weights, 0.0f, level.index)) {
                if (out.size() >= limit) break;
                ImagePlane patch = extract_patch(scene.image, c, level.scale, window);
                const int ox = 4 * std::uniform_int_distribution<int>(0, 4)(pick);
                const int oy = 4 * std::uniform_int_distribution<int>(0, 4)(pick);
                out.push_back({selective_crop(std::move(patch), ox, oy), -1.0f});
            }
        }
    }
    return out;
}

CascadeTrainResult train_cascade_synthetic(const SyntheticTrainSpec& data, const TrainConfig& config,
                                           const EpochCallback& on_epoch) {
    CascadeTrainResult out;
    const auto specs = reference_specs();
    out.model.specs = specs;

    auto r1 = train_network(specs[0], synthetic_stage1_samples(data.stage1_faces, data.stage1_backgrounds, data.seed),
                            config, 0, on_epoch);
    out.model.weights[0] = r1.weights;
    out.holdout_error[0] = r1.holdout_error;
    out.log = r1.log;

    auto selective = synthetic_selective_samples(data.selective_faces, data.selective_backgrounds, data.seed + 101);
    auto mined = mine_selective_negatives(specs[0], r1.weights, data.mining_scenes, data.seed + 202,
                                          static_cast<std::size_t>(data.selective_backgrounds / 2));
    selective.insert(selective.end(), mined.begin(), mined.end());

    for (int stage = 1; stage < 3; ++stage) {
        TrainConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(stage) * 1000;
        auto r = train_network(specs[static_cast<std::size_t>(stage)], selective, c, stage, on_epoch);
        out.model.weights[static_cast<std::size_t>(stage)] = r.weights;
        out.holdout_error[static_cast<std::size_t>(stage)] = r.holdout_error;
        out.log.insert(out.log.end(), r.log.begin(), r.log.end());
    }
    validate_cascade(out.model);
    return out;
}

std::vector<LabeledSample<float>> load_sample_dir(const std::filesystem::path& root, int stage) {
    if (stage < 0 || stage > 2) throw std::invalid_argument("stage must be 0, 1 or 2");
    std::vector<LabeledSample<float>> out;
    std::size_t counts[2] = {0, 0};
    for (int cls = 0; cls < 2; ++cls) {
        const auto dir = root / (cls == 0 ? "pos" : "neg");
        if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("missing sample directory " + dir.string());
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const ImagePlane img = load_grayscale(f);
            ImagePlane input;
            if (stage == 0) {
                input = normalize_intensity(img.size() == Size{27, 31} ? img : resize_bilinear(img, 27, 31));
            } else {
                ImagePlane patch = img.size() == kSelectivePatch
                                       ? img
                                       : resize_bilinear(img, kSelectivePatch.width, kSelectivePatch.height);
                input = selective_crop(std::move(patch), kPatchCoreOffsetX, kPatchCoreOffsetY);
            }
            out.push_back({std::move(input), cls == 0 ? 1.0f : -1.0f});
            ++counts[cls];
        }
    }
    if (counts[0] == 0 || counts[1] == 0)
        throw std::invalid_argument("empty sample class under " + root.string());
    return out;
}

CascadeTrainResult train_cascade_from_dirs(const std::filesystem::path& root, const TrainConfig& config,
                                           const EpochCallback& on_epoch) {
    CascadeTrainResult out;
    out.model.specs = reference_specs();
    for (int stage = 0; stage < 3; ++stage) {
        TrainConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(stage) * 1000;
        auto r = train_network(out.model.specs[static_cast<std::size_t>(stage)],
                               load_sample_dir(root / ("stage" + std::to_string(stage + 1)), stage), c, stage,
                               on_epoch);
        out.model.weights[static_cast<std::size_t>(stage)] = r.weights;
        out.holdout_error[static_cast<std::size_t>(stage)] = r.holdout_error;
        out.log.insert(out.log.end(), r.log.begin(), r.log.end());
    }
    validate_cascade(out.model);
    return out;
}

std::string training_log_csv_header() { return "stage,epoch,loss,train_error,holdout_error"; }

void write_training_log_csv(std::ostream& out, std::span<const EpochLog> log) {
    out << training_log_csv_header() << '\n';
    for (const auto& e : log)
        out << e.stage + 1 << ',' << e.epoch << ',' << format_fixed(e.loss, 8) << ',' << format_fixed(e.train_error)
            << ',' << format_fixed(e.holdout_error) << '\n';
}

}  // namespace ccnn
