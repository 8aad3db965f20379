#include "ccnn/modelspec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace ccnn {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'N', 'C'};
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxMapsOrKernel = 4096;

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    void need(std::size_t n, const char* what) const {
        if (in_.size() - pos_ < n) throw ModelTruncatedError(std::string("model payload truncated while reading ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return in_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in_[pos_ + k]) << (8 * k);
        pos_ += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    void copy(void* dst, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, in_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

PoolMode shared_pooling(const CascadeModel& model) {
    const PoolMode p = model.specs[0].pooling;
    for (const auto& s : model.specs)
        if (s.pooling != p) throw ModelGeometryError("all networks of a cascade must share one pooling mode");
    return p;
}

}  // namespace

Size receptive_field(const NetworkSpec& spec) {
    Size s{1, 1};
    for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
        if (it->is_conv()) {
            s.width += it->kernelW - 1;
            s.height += it->kernelH - 1;
        } else {
            s.width *= 2;
            s.height *= 2;
        }
    }
    return s;
}

int output_stride(const NetworkSpec& spec) {
    int stride = 1;
    for (const auto& l : spec.layers)
        if (!l.is_conv()) stride *= 2;
    return stride;
}

std::size_t param_count(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (const auto& l : spec.layers)
        if (l.is_conv())
            n += static_cast<std::size_t>(l.outMaps) * (static_cast<std::size_t>(l.inMaps) * l.kernelW * l.kernelH + 1);
    return n;
}

std::optional<Size> output_size(const NetworkSpec& spec, Size input) {
    Size s = input;
    for (const auto& l : spec.layers) {
        if (l.is_conv()) {
            s.width -= l.kernelW - 1;
            s.height -= l.kernelH - 1;
        } else {
            s.width /= 2;
            s.height /= 2;
        }
        if (s.width <= 0 || s.height <= 0) return std::nullopt;
    }
    return s;
}

void validate_network(const NetworkSpec& spec) {
    if (spec.layers.empty()) throw ModelGeometryError("network has no layers");
    int maps = 1;
    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        const auto& l = spec.layers[k];
        if (l.kind != LayerKind::Conv && l.kind != LayerKind::Pool)
            throw ModelGeometryError("unknown layer kind");
        if (!l.is_conv()) continue;
        if (l.inMaps != maps)
            throw ModelGeometryError("layer " + std::to_string(k) + " expects " + std::to_string(l.inMaps) +
                                     " input maps, previous layer produces " + std::to_string(maps));
        if (l.outMaps < 1 || l.kernelW < 1 || l.kernelH < 1)
            throw ModelGeometryError("layer " + std::to_string(k) + " has a non-positive size");
        maps = l.outMaps;
    }
    const auto& last = spec.layers.back();
    if (!last.is_conv() || last.outMaps != 1)
        throw ModelGeometryError("final layer must be a conv layer emitting one response map");
    if (!output_size(spec, receptive_field(spec)))
        throw ModelGeometryError("layer chain collapses at its own receptive field");
}

void validate_weights(const NetworkSpec& spec, const NetworkWeights& weights) {
    if (weights.layers.size() != spec.conv_count())
        throw ModelGeometryError("weight set does not match the number of conv layers");
    std::size_t c = 0;
    for (const auto& l : spec.layers) {
        if (!l.is_conv()) continue;
        const auto& w = weights.layers[c++];
        if (w.inMaps != l.inMaps || w.outMaps != l.outMaps || w.kernelW != l.kernelW || w.kernelH != l.kernelH ||
            w.kernels.size() != static_cast<std::size_t>(l.inMaps) * l.outMaps * l.kernelW * l.kernelH ||
            w.biases.size() != static_cast<std::size_t>(l.outMaps))
            throw ModelGeometryError("conv weights do not match their layer description");
    }
}

void validate_cascade(const CascadeModel& model) {
    for (std::size_t k = 0; k < 3; ++k) {
        validate_network(model.specs[k]);
        validate_weights(model.specs[k], model.weights[k]);
    }
    shared_pooling(model);
    if (output_stride(model.specs[0]) != kStage1Stride)
        throw ModelGeometryError("stage-1 network must have output stride " + std::to_string(kStage1Stride));
    for (std::size_t k = 1; k < 3; ++k) {
        const auto out = output_size(model.specs[k], kSelectivePatch);
        if (!out || *out != kSelectiveMap)
            throw ModelGeometryError("stage-" + std::to_string(k + 1) +
                                     " network must map a 51x55 patch onto a 5x5 response map");
    }
}

NetworkSpec reference_network(int stage, PoolMode pooling) {
    NetworkSpec s;
    s.pooling = pooling;
    using L = LayerSpec;
    switch (stage) {
    case 0:  // 27x31 window, stride 4, 797 parameters
        s.layers = {L::conv(1, 6, 4, 4), L::pool(), L::conv(6, 6, 3, 3), L::pool(), L::conv(6, 2, 5, 6),
                    L::conv(2, 1, 1, 1)};
        break;
    case 1:  // 35x39 field, 51x55 -> 5x5, 1819 parameters
        s.layers = {L::conv(1, 2, 6, 6), L::pool(), L::conv(2, 6, 2, 2), L::pool(), L::conv(6, 5, 7, 8),
                    L::conv(5, 1, 1, 1)};
        break;
    case 2:  // 35x39 field, 51x55 -> 5x5, 2923 parameters
        s.layers = {L::conv(1, 5, 6, 6), L::pool(), L::conv(5, 5, 4, 4), L::pool(), L::conv(5, 11, 6, 7),
                    L::conv(11, 1, 1, 1)};
        break;
    default:
        throw std::out_of_range("cascade stage index must be 0, 1 or 2");
    }
    return s;
}

std::array<NetworkSpec, 3> reference_specs(PoolMode pooling) {
    return {reference_network(0, pooling), reference_network(1, pooling), reference_network(2, pooling)};
}

FeatureMapTally feature_maps(const NetworkSpec& spec) {
    FeatureMapTally t;
    for (const auto& l : spec.layers)
        if (l.is_conv()) t.hidden += static_cast<std::size_t>(l.outMaps);
    t.with_inputs = t.hidden + 1;
    return t;
}

std::string describe(const NetworkSpec& spec) {
    std::ostringstream os;
    bool first = true;
    for (const auto& l : spec.layers) {
        if (!first) os << " / ";
        first = false;
        if (l.is_conv())
            os << "conv" << l.kernelW << "x" << l.kernelH << "(" << l.inMaps << "->" << l.outMaps << ")";
        else
            os << "pool2";
    }
    return os.str();
}

std::string manifest(const std::array<NetworkSpec, 3>& specs) {
    std::ostringstream os;
    os << "# cascade manifest\n";
    os << "pooling: " << (specs[0].pooling == PoolMode::Max ? "max" : "mean") << "\n";
    FeatureMapTally total;
    std::size_t params_total = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& s = specs[k];
        const Size rf = receptive_field(s);
        const std::size_t params = param_count(s);
        const auto maps = feature_maps(s);
        total.hidden += maps.hidden;
        total.with_inputs += maps.with_inputs;
        params_total += params;
        const long long dev = static_cast<long long>(params) - static_cast<long long>(kParamTargets[k]);
        os << "\n[cnn" << (k + 1) << "]\n";
        os << "layers: " << describe(s) << "\n";
        os << "receptive_field: " << rf.width << "x" << rf.height << "\n";
        os << "output_stride: " << output_stride(s) << "\n";
        if (k > 0) {
            const auto out = output_size(s, kSelectivePatch);
            os << "patch_response: " << kSelectivePatch.width << "x" << kSelectivePatch.height << " -> ";
            if (out)
                os << out->width << "x" << out->height << "\n";
            else
                os << "none\n";
        }
        os << "parameters: " << params << "\n";
        os << "parameter_target: " << kParamTargets[k] << "\n";
        os << "parameter_deviation: " << (dev > 0 ? "+" : "") << dev << "\n";
        os << "feature_maps_hidden: " << maps.hidden << "\n";
        os << "feature_maps_with_input: " << maps.with_inputs << "\n";
    }
    os << "\n[total]\n";
    os << "parameters: " << params_total << "\n";
    os << "feature_maps_hidden: " << total.hidden << "\n";
    os << "feature_maps_with_input: " << total.with_inputs << "\n";
    os << "feature_map_target: " << kFeatureMapTarget << "\n";
    return os.str();
}

std::vector<std::uint8_t> serialize_model(const CascadeModel& model) {
    validate_cascade(model);
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kModelFormatVersion);
    w.u8(static_cast<std::uint8_t>(shared_pooling(model)));
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& spec = model.specs[k];
        w.u32(static_cast<std::uint32_t>(spec.layers.size()));
        for (const auto& l : spec.layers) {
            w.u8(static_cast<std::uint8_t>(l.kind));
            w.u32(static_cast<std::uint32_t>(l.inMaps));
            w.u32(static_cast<std::uint32_t>(l.outMaps));
            w.u32(static_cast<std::uint32_t>(l.kernelW));
            w.u32(static_cast<std::uint32_t>(l.kernelH));
        }
        for (const auto& layer : model.weights[k].layers) {
            for (float v : layer.kernels) w.f32(v);
            for (float v : layer.biases) w.f32(v);
        }
    }
    return w.take();
}

CascadeModel deserialize_model(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    char magic[4];
    r.copy(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw ModelFormatError("not a cascade model file (bad magic)");
    const std::uint32_t version = r.u32("version");
    if (version != kModelFormatVersion)
        throw ModelFormatError("unsupported model format version " + std::to_string(version));
    const std::uint8_t pool_byte = r.u8("pooling mode");
    if (pool_byte > static_cast<std::uint8_t>(PoolMode::Mean))
        throw ModelFormatError("unknown pooling mode " + std::to_string(pool_byte));
    const auto pooling = static_cast<PoolMode>(pool_byte);

    CascadeModel model;
    for (std::size_t k = 0; k < 3; ++k) {
        auto& spec = model.specs[k];
        spec.pooling = pooling;
        const std::uint32_t count = r.u32("layer count");
        if (count == 0 || count > kMaxLayers) throw ModelFormatError("implausible layer count " + std::to_string(count));
        for (std::uint32_t i = 0; i < count; ++i) {
            LayerSpec l;
            const std::uint8_t kind = r.u8("layer kind");
            if (kind > static_cast<std::uint8_t>(LayerKind::Pool))
                throw ModelFormatError("unknown layer kind " + std::to_string(kind));
            l.kind = static_cast<LayerKind>(kind);
            const std::uint32_t fields[4] = {r.u32("layer descriptor"), r.u32("layer descriptor"),
                                             r.u32("layer descriptor"), r.u32("layer descriptor")};
            for (auto f : fields)
                if (f > kMaxMapsOrKernel) throw ModelFormatError("implausible layer descriptor value");
            l.inMaps = static_cast<int>(fields[0]);
            l.outMaps = static_cast<int>(fields[1]);
            l.kernelW = static_cast<int>(fields[2]);
            l.kernelH = static_cast<int>(fields[3]);
            spec.layers.push_back(l);
        }
        validate_network(spec);
        auto& weights = model.weights[k];
        weights = zero_weights<float>(spec);
        for (auto& layer : weights.layers) {
            for (auto& v : layer.kernels) v = r.f32("kernel weights");
            for (auto& v : layer.biases) v = r.f32("bias weights");
        }
    }
    if (!r.done()) throw ModelFormatError("trailing bytes after model payload");
    validate_cascade(model);
    return model;
}

void save_model(const CascadeModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ModelError("failed writing " + path.string());
}

CascadeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace ccnn
