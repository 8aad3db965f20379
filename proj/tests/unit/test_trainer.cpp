#include <filesystem>
#include <sstream>

#include "ccnn/image_io.hpp"
#include "ccnn/synthetic.hpp"
#include "ccnn/trainer.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace ccnn;

namespace {

TrainConfig quick(int epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.seed = 11;
    return c;
}

}  // namespace

TEST_CASE("synthetic samples are network ready") {
    const auto s1 = synthetic_stage1_samples(20, 40, 3);
    REQUIRE(s1.size() == 60);
    int pos = 0;
    for (const auto& s : s1) {
        CHECK(s.image.size() == Size{27, 31});
        pos += s.label > 0 ? 1 : 0;
        for (float v : s.image.pixels()) {
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
        }
    }
    CHECK(pos == 20);
    const auto s2 = synthetic_selective_samples(5, 5, 3);
    for (const auto& s : s2) CHECK(s.image.size() == Size{35, 39});

    const auto again = synthetic_stage1_samples(20, 40, 3);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(again[i].image == s1[i].image);
}

TEST_CASE("training is deterministic and learns the synthetic task") {
    const auto samples = synthetic_stage1_samples(300, 600, 5);
    const auto spec = reference_network(0);
    const auto a = train_network(spec, samples, quick(4));
    const auto b = train_network(spec, samples, quick(4));
    CHECK(a.weights == b.weights);
    CHECK(a.holdout_error == b.holdout_error);
    CHECK(a.train_size + a.holdout_size == samples.size());
    CHECK(a.holdout_size == 180);
    REQUIRE(a.log.size() == 5);
    CHECK(a.log[0].epoch == 0);
    CHECK(a.holdout_error < a.log[0].holdout_error);
    CHECK(a.holdout_error < 0.1);
}

TEST_CASE("zero learning rate keeps the initial weights") {
    const auto samples = synthetic_stage1_samples(30, 30, 6);
    const auto spec = reference_network(0);
    auto cfg = quick(2);
    cfg.learning_rate = 0.0;
    const auto r = train_network(spec, samples, cfg);
    CHECK(r.log[1].loss == doctest::Approx(r.log[2].loss));
    CHECK(r.log[0].holdout_error == r.log[2].holdout_error);
}

TEST_CASE("early stop") {
    const auto samples = synthetic_stage1_samples(300, 600, 8);
    auto cfg = quick(30);
    cfg.target_error = 0.05;
    cfg.patience = 1;
    const auto r = train_network(reference_network(0), samples, cfg);
    CHECK(r.log.size() < 31);
}

TEST_CASE("classification error counts sign disagreements") {
    const auto spec = NetworkSpec{{LayerSpec::conv(1, 1, 1, 1)}};
    auto w = zero_weights<float>(spec);
    w.layers[0].kernels[0] = 1.0f;
    std::vector<LabeledSample<float>> s{{ImagePlane(1, 1, 0.5f), 1.0f},
                                        {ImagePlane(1, 1, -0.5f), 1.0f},
                                        {ImagePlane(1, 1, -0.5f), -1.0f},
                                        {ImagePlane(1, 1, 0.5f), -1.0f}};
    CHECK(classification_error(s, spec, w) == doctest::Approx(0.5));
}

TEST_CASE("sample directories") {
    const auto root = std::filesystem::temp_directory_path() / "ccnn_samples_test";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root / "pos");
    std::filesystem::create_directories(root / "neg");
    SyntheticFaces gen(2);
    for (int i = 0; i < 3; ++i) {
        write_pgm(gen.window_sample(true), root / "pos" / ("p" + std::to_string(i) + ".pgm"));
        write_pgm(gen.patch_sample(false), root / "neg" / ("n" + std::to_string(i) + ".pgm"));
    }
    const auto s0 = load_sample_dir(root, 0);
    REQUIRE(s0.size() == 6);
    for (const auto& s : s0) CHECK(s.image.size() == Size{27, 31});
    const auto s1 = load_sample_dir(root, 1);
    for (const auto& s : s1) CHECK(s.image.size() == Size{35, 39});

    std::filesystem::remove_all(root / "neg");
    CHECK_THROWS_AS(load_sample_dir(root, 0), std::invalid_argument);
    std::filesystem::remove_all(root);
}

TEST_CASE("training log csv") {
    std::stringstream ss;
    const std::vector<EpochLog> log{{0, 1, 0.5, 0.25, 0.125}};
    write_training_log_csv(ss, log);
    CHECK(ss.str().rfind(training_log_csv_header() + "\n", 0) == 0);
    CHECK(ss.str().find("\n1,1,0.50000000,0.125000,0.250000\n") != std::string::npos);
}
