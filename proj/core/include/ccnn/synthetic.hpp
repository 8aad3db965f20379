#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ccnn/geometry.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

struct SyntheticScene {
    ImagePlane image;         // [0, 255]
    std::vector<Box> faces;   // ground-truth boxes, 27:31 aspect
};

struct SceneConfig {
    int width = 320;
    int height = 240;
    int min_faces = 0;
    int max_faces = 3;
    double min_face = 28.0;  // face box width in pixels
    double max_face = 72.0;
    int distractors = 3;     // featureless ovals and bars scattered over the background
};

/// Seeded generator of face-like patterns over textured noise. Every draw
/// advances one internal stream, so a seed fixes the whole sequence.
class SyntheticFaces {
public:
    explicit SyntheticFaces(std::uint64_t seed) : rng_(seed) {}

    ImagePlane background(int width, int height);
    /// Bright oval with two dark eye blobs and a mouth bar, filling `box`.
    void draw_face(ImagePlane& canvas, const Box& box);
    /// Oval or bar without facial features.
    void draw_distractor(ImagePlane& canvas, const Box& box);

    /// Faces never overlap each other; `config.max_faces` is a request and may
    /// be cut short when the frame is crowded.
    SyntheticScene scene(const SceneConfig& config);

    /// 27x31 window crop in [0, 255]. Positives hold a face within +-2 px and
    /// +-7% of the window; negatives hold background, distractors, or a face
    /// clearly off in position or scale.
    ImagePlane window_sample(bool face);

    /// 51x55 candidate patch in [0, 255], framed the way the detector frames a
    /// stage-1 window. Negatives report the crop offset that keeps a misplaced
    /// face off-centre.
    ImagePlane patch_sample(bool face, int* crop_x = nullptr, int* crop_y = nullptr);

    /// Network-ready inputs in [-1, 1]: a normalized window for stage 1, and an
    /// equalized 35x39 crop of a patch for stages 2 and 3.
    ImagePlane stage1_input(bool face);
    ImagePlane selective_input(bool face);

    std::mt19937_64& rng() noexcept { return rng_; }

private:
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);
    ImagePlane render_view(Size out, double step, const Box& face, bool with_face);

    std::mt19937_64 rng_;
};

/// Offset of the 35x39 core inside a 51x55 patch.
inline constexpr int kPatchCoreOffsetX = 8;
inline constexpr int kPatchCoreOffsetY = 8;

}  // namespace ccnn
