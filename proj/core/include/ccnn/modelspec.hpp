#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccnn/network.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad magic, unknown version or an undecodable field.
class ModelFormatError : public ModelError {
public:
    using ModelError::ModelError;
};

/// The payload ended before the declared content.
class ModelTruncatedError : public ModelError {
public:
    using ModelError::ModelError;
};

/// The content decodes but violates a structural or geometric invariant.
class ModelGeometryError : public ModelError {
public:
    using ModelError::ModelError;
};

inline constexpr Size kSelectivePatch{51, 55};
inline constexpr Size kSelectiveMap{5, 5};
inline constexpr int kStage1Stride = 4;
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Published per-network parameter budgets and the total feature-map budget.
inline constexpr std::array<std::size_t, 3> kParamTargets{797, 1819, 2923};
inline constexpr std::size_t kFeatureMapTarget = 355;

/// Input size producing a 1x1 final map.
Size receptive_field(const NetworkSpec& spec);

/// Spacing in input pixels between adjacent response-map cells.
int output_stride(const NetworkSpec& spec);

std::size_t param_count(const NetworkSpec& spec);

/// Forward dimension chaining; empty if any intermediate map would vanish.
std::optional<Size> output_size(const NetworkSpec& spec, Size input);

/// Checks map chaining, kernel sizes and the single-response-map rule.
void validate_network(const NetworkSpec& spec);
void validate_weights(const NetworkSpec& spec, const NetworkWeights& weights);

struct CascadeModel {
    std::array<NetworkSpec, 3> specs;
    std::array<NetworkWeights, 3> weights;

    /// Stage-1 scanning window (receptive field of the first network).
    Size window() const { return receptive_field(specs[0]); }
    int stride() const { return output_stride(specs[0]); }

    friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

/// Throws ModelGeometryError unless the cascade has a stride-4 first stage and
/// second/third stages mapping a 51x55 patch onto a 5x5 response map.
void validate_cascade(const CascadeModel& model);

/// Reference stacks for stage 1, 2 and 3 (index 0..2).
NetworkSpec reference_network(int stage, PoolMode pooling = PoolMode::Max);
std::array<NetworkSpec, 3> reference_specs(PoolMode pooling = PoolMode::Max);

struct FeatureMapTally {
    std::size_t hidden = 0;       // every conv output map, including the final response map
    std::size_t with_inputs = 0;  // hidden plus the input plane of each network
};

FeatureMapTally feature_maps(const NetworkSpec& spec);

/// Human-readable description of the three networks with parameter counts
/// next to the published targets.
std::string manifest(const std::array<NetworkSpec, 3>& specs);

std::vector<std::uint8_t> serialize_model(const CascadeModel& model);
CascadeModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_model(const std::filesystem::path& path);

std::string describe(const NetworkSpec& spec);

}  // namespace ccnn
