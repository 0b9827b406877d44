#include "nsc/container.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "byte_io.hpp"
#include "nsc/errors.hpp"

namespace nsc {

namespace {

constexpr uint16_t kFormatVersion = 1;
const char kMagic[4] = {'N', 'S', 'C', 'M'};
constexpr uint64_t kMaxElements = 1u << 24;

[[noreturn]] void fail(const std::string& msg) {
    throw FormatError(FormatError::Kind::Invariant, "model: " + msg);
}

// Weighted-layer record tags. DenseMasked carries per-level mask planes and
// only appears in Trained containers with a non-empty level set.
enum RecordTag : uint8_t { kDenseRaw = 0, kDenseMasked = 1, kEncodedBlob = 2 };

std::vector<const LayerSpec*> weighted_specs(const std::vector<LayerSpec>& layers) {
    std::vector<const LayerSpec*> out;
    for (const LayerSpec& spec : layers)
        if (spec.weighted()) out.push_back(&spec);
    return out;
}

void check_matrix_shape(const Matrix& m, const LayerSpec& spec, const char* what) {
    if (m.rows != spec.weight_rows() || m.cols != spec.weight_cols())
        fail(std::string(what) + " shape " + std::to_string(m.rows) + "x" +
             std::to_string(m.cols) + " does not match layer " +
             std::to_string(spec.weight_rows()) + "x" + std::to_string(spec.weight_cols()));
    if (m.data.size() != static_cast<size_t>(m.rows) * m.cols)
        fail(std::string(what) + " payload size mismatch");
}

void check_mask_set(const NestedMaskSet& set, const LayerSpec& spec,
                    const SparsityLevelSet& levels) {
    if (set.count() != static_cast<int>(levels.levels.size()))
        fail("mask level count " + std::to_string(set.count()) + " does not match model");
    const int bm = levels.block_m;
    const int bn = levels.block_n;
    if (spec.weight_rows() % bm != 0 || spec.weight_cols() % bn != 0)
        fail("block shape does not divide layer weights");
    for (const BlockMask& mask : set.masks) {
        if (mask.rows != spec.weight_rows() || mask.cols != spec.weight_cols())
            fail("mask shape does not match layer weights");
        if (mask.bits.size() != static_cast<size_t>(mask.rows) * mask.cols)
            fail("mask payload size mismatch");
        for (uint8_t b : mask.bits)
            if (b > 1) fail("mask bit outside {0,1}");
        for (int r = 0; r < mask.rows; ++r)
            for (int col = 0; col < mask.cols; ++col)
                if (mask.at(r, col) != mask.at(r - r % bm, col - col % bn))
                    fail("mask not constant within a block");
    }
}

void check_encoded_layer(const EncodedLayer& layer, const LayerSpec& spec,
                         const ModelContainer& c) {
    if (spec.prunable) {
        if (!layer.encoded) fail("prunable layer stored without encoding");
        const NestedCSRMatrix& m = layer.sparse;
        if (m.rows != spec.weight_rows() || m.cols != spec.weight_cols())
            fail("encoded layer shape does not match layer weights");
        if (m.block_m != c.levels.block_m || m.block_n != c.levels.block_n)
            fail("encoded layer block shape does not match model");
        if (m.level_count() != c.level_count())
            fail("encoded layer level count does not match model");
        for (int i = 0; i < m.level_count(); ++i)
            if (m.levels_pm[i] != to_per_mille(c.levels.levels[i]))
                fail("encoded layer sparsity levels do not match model");
        const ValueType want =
            c.kind == ModelKind::EncodedI8 ? ValueType::I8 : ValueType::F32;
        if (m.dtype != want) fail("encoded layer dtype does not match container kind");
        if (c.kind == ModelKind::EncodedF32 && layer.exponent != 0)
            fail("float payload carries a nonzero exponent");
        m.validate();
    } else {
        if (layer.encoded) fail("non-prunable layer stored encoded");
        check_matrix_shape(layer.dense, spec, "dense layer");
    }
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Trained: return "trained";
        case ModelKind::EncodedF32: return "encoded-f32";
        case ModelKind::EncodedI8: return "encoded-i8";
    }
    return "unknown";
}

void ModelContainer::validate() const {
    if (layers.empty()) fail("no layers");
    try {
        (void)ToyNetwork::create(layers);
    } catch (const std::exception& e) {
        fail(std::string("invalid layer chain: ") + e.what());
    }
    if (level_count() > 0) {
        try {
            levels.validate();
        } catch (const std::exception& e) {
            fail(std::string("invalid level set: ") + e.what());
        }
    }

    const std::vector<const LayerSpec*> specs = weighted_specs(layers);
    if (kind == ModelKind::Trained) {
        if (!encoded.empty()) fail("trained container carries encoded layers");
        if (weights.size() != specs.size()) fail("weight count does not match layer chain");
        if (masks.size() != specs.size()) fail("mask count does not match layer chain");
        for (size_t i = 0; i < specs.size(); ++i) {
            check_matrix_shape(weights[i], *specs[i], "weights");
            if (specs[i]->prunable && level_count() > 0)
                check_mask_set(masks[i], *specs[i], levels);
            else if (masks[i].count() != 0)
                fail("unexpected masks on a dense-trained layer");
        }
    } else if (kind == ModelKind::EncodedF32 || kind == ModelKind::EncodedI8) {
        if (!weights.empty() || !masks.empty())
            fail("encoded container carries raw training state");
        if (level_count() < 1) fail("encoded container without sparsity levels");
        if (encoded.size() != specs.size())
            fail("encoded layer count does not match layer chain");
        for (size_t i = 0; i < specs.size(); ++i)
            check_encoded_layer(encoded[i], *specs[i], *this);
    } else {
        fail("unknown container kind");
    }
}

ModelContainer container_from_trained(const TrainedModel& model,
                                      const SparsityLevelSet& levels) {
    ModelContainer c;
    c.kind = ModelKind::Trained;
    c.layers = model.net.layers;
    c.weights = model.net.weights;
    if (model.masks.empty()) {
        // Dense-trained model: keep the block geometry but no levels, and
        // give every weighted layer an empty mask set.
        c.levels = SparsityLevelSet{{}, levels.block_m, levels.block_n};
        c.masks.assign(model.net.weights.size(), NestedMaskSet{});
    } else {
        c.levels = levels;
        c.masks = model.masks;
    }
    c.validate();
    return c;
}

ToyNetwork network_from_container(const ModelContainer& c) {
    if (c.kind != ModelKind::Trained)
        throw std::invalid_argument("network_from_container needs a trained container");
    ToyNetwork net = ToyNetwork::create(c.layers);
    for (size_t i = 0; i < c.weights.size(); ++i)
        net.set_weight(static_cast<int>(i), c.weights[i]);
    return net;
}

void save_model(const ModelContainer& c, const std::string& path) {
    c.validate();
    detail::ByteWriter w;
    for (char ch : kMagic) w.u8(static_cast<uint8_t>(ch));
    w.u16(kFormatVersion);
    w.u8(static_cast<uint8_t>(c.kind));

    w.u16(static_cast<uint16_t>(c.layers.size()));
    for (const LayerSpec& spec : c.layers) {
        w.u8(static_cast<uint8_t>(spec.kind));
        w.u8(spec.prunable ? 1 : 0);
        switch (spec.kind) {
            case LayerKind::FullyConnected:
                w.u32(static_cast<uint32_t>(spec.in_features));
                w.u32(static_cast<uint32_t>(spec.out_features));
                break;
            case LayerKind::Conv2D:
                w.u32(static_cast<uint32_t>(spec.in_channels));
                w.u32(static_cast<uint32_t>(spec.out_channels));
                w.u32(static_cast<uint32_t>(spec.kernel_h));
                w.u32(static_cast<uint32_t>(spec.kernel_w));
                w.u32(static_cast<uint32_t>(spec.stride));
                w.u32(static_cast<uint32_t>(spec.padding));
                w.u32(static_cast<uint32_t>(spec.in_h));
                w.u32(static_cast<uint32_t>(spec.in_w));
                break;
            case LayerKind::ReLU:
            case LayerKind::SoftmaxCE:
                break;
        }
    }

    w.u8(static_cast<uint8_t>(c.level_count()));
    w.u8(static_cast<uint8_t>(c.levels.block_m));
    w.u8(static_cast<uint8_t>(c.levels.block_n));
    for (float s : c.levels.levels) w.u16(to_per_mille(s));

    const std::vector<const LayerSpec*> specs = weighted_specs(c.layers);
    for (size_t i = 0; i < specs.size(); ++i) {
        if (c.kind == ModelKind::Trained) {
            const bool masked = specs[i]->prunable && c.level_count() > 0;
            w.u8(masked ? kDenseMasked : kDenseRaw);
            const Matrix& m = c.weights[i];
            w.u32(static_cast<uint32_t>(m.rows));
            w.u32(static_cast<uint32_t>(m.cols));
            for (float v : m.data) w.f32(v);
            if (masked)
                for (const BlockMask& mask : c.masks[i].masks)
                    w.bytes(mask.bits.data(), mask.bits.size());
        } else if (c.encoded[i].encoded) {
            w.u8(kEncodedBlob);
            w.u8(static_cast<uint8_t>(static_cast<int8_t>(c.encoded[i].exponent)));
            const std::vector<uint8_t> blob = serialize(c.encoded[i].sparse);
            w.u64(blob.size());
            w.bytes(blob.data(), blob.size());
        } else {
            w.u8(kDenseRaw);
            const Matrix& m = c.encoded[i].dense;
            w.u32(static_cast<uint32_t>(m.rows));
            w.u32(static_cast<uint32_t>(m.cols));
            for (float v : m.data) w.f32(v);
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(w.out.data()),
              static_cast<std::streamsize>(w.out.size()));
    if (!out) throw IoError("write failed on " + path);
}

ModelContainer load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path);

    detail::ByteReader r{bytes, "model"};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatError::Kind::BadMagic, "not a model file");
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kFormatVersion)
        throw FormatError(FormatError::Kind::BadVersion,
                          "unsupported model version " + std::to_string(version));

    ModelContainer c;
    const uint8_t kind = r.u8("kind");
    if (kind > 2) fail("unknown container kind " + std::to_string(kind));
    c.kind = static_cast<ModelKind>(kind);

    const uint16_t layer_count = r.u16("layer count");
    if (layer_count == 0 || layer_count > 256) fail("implausible layer count");
    for (int li = 0; li < layer_count; ++li) {
        const uint8_t lk = r.u8("layer kind");
        const uint8_t prunable = r.u8("layer prunable flag");
        if (lk > 3) fail("unknown layer kind " + std::to_string(lk));
        if (prunable > 1) fail("layer prunable flag outside {0,1}");
        auto field = [&](const char* what) {
            const uint32_t v = r.u32(what);
            if (v > kMaxElements) fail(std::string("implausible ") + what);
            return static_cast<int>(v);
        };
        switch (static_cast<LayerKind>(lk)) {
            case LayerKind::FullyConnected: {
                const int in = field("fc input width");
                const int out = field("fc output width");
                c.layers.push_back(LayerSpec::fc(in, out, prunable != 0));
                break;
            }
            case LayerKind::Conv2D: {
                const int in_c = field("conv input channels");
                const int out_c = field("conv output channels");
                const int kh = field("conv kernel height");
                const int kw = field("conv kernel width");
                const int stride = field("conv stride");
                const int padding = field("conv padding");
                const int in_h = field("conv input height");
                const int in_w = field("conv input width");
                c.layers.push_back(LayerSpec::conv2d(in_c, out_c, kh, kw, stride, padding,
                                                     in_h, in_w, prunable != 0));
                break;
            }
            case LayerKind::ReLU:
                if (prunable) fail("activation layer marked prunable");
                c.layers.push_back(LayerSpec::relu());
                break;
            case LayerKind::SoftmaxCE:
                if (prunable) fail("activation layer marked prunable");
                c.layers.push_back(LayerSpec::softmax_ce());
                break;
        }
    }

    const uint8_t level_count = r.u8("level count");
    const uint8_t block_m = r.u8("block rows");
    const uint8_t block_n = r.u8("block cols");
    if (block_m == 0 || block_n == 0) fail("zero block dimension");
    c.levels.block_m = block_m;
    c.levels.block_n = block_n;
    uint16_t prev_pm = 0;
    for (int i = 0; i < level_count; ++i) {
        const uint16_t pm = r.u16("sparsity level");
        if (pm == 0 || pm >= 1000) fail("sparsity level outside (0,1)");
        if (i > 0 && pm <= prev_pm) fail("sparsity levels not strictly ascending");
        prev_pm = pm;
        c.levels.levels.push_back(static_cast<float>(pm) / 1000.0f);
    }

    const std::vector<const LayerSpec*> specs = weighted_specs(c.layers);
    for (size_t i = 0; i < specs.size(); ++i) {
        const uint8_t tag = r.u8("record tag");
        if (tag == kDenseRaw || tag == kDenseMasked) {
            const uint32_t rows = r.u32("weight rows");
            const uint32_t cols = r.u32("weight cols");
            const uint64_t count = static_cast<uint64_t>(rows) * cols;
            if (rows == 0 || cols == 0 || count > kMaxElements)
                fail("implausible weight extents");
            r.need(count * 4, "weight values");
            Matrix m(static_cast<int>(rows), static_cast<int>(cols));
            for (float& v : m.data) v = r.f32("weight values");
            if (tag == kDenseMasked) {
                if (c.kind != ModelKind::Trained) fail("masked record in encoded container");
                NestedMaskSet set;
                set.levels = c.levels;
                for (int l = 0; l < level_count; ++l) {
                    BlockMask mask;
                    mask.rows = m.rows;
                    mask.cols = m.cols;
                    r.need(count, "mask bits");
                    mask.bits.assign(bytes.begin() + static_cast<ptrdiff_t>(r.pos),
                                     bytes.begin() + static_cast<ptrdiff_t>(r.pos + count));
                    r.pos += count;
                    size_t zeros = 0;
                    for (uint8_t b : mask.bits) {
                        if (b > 1) fail("mask bit outside {0,1}");
                        zeros += b == 0;
                    }
                    mask.sparsity = static_cast<float>(zeros) / static_cast<float>(count);
                    set.masks.push_back(std::move(mask));
                }
                c.masks.push_back(std::move(set));
                c.weights.push_back(std::move(m));
            } else if (c.kind == ModelKind::Trained) {
                c.weights.push_back(std::move(m));
                c.masks.emplace_back();
            } else {
                EncodedLayer layer;
                layer.dense = std::move(m);
                c.encoded.push_back(std::move(layer));
            }
        } else if (tag == kEncodedBlob) {
            if (c.kind == ModelKind::Trained) fail("encoded record in trained container");
            EncodedLayer layer;
            layer.encoded = true;
            layer.exponent = static_cast<int8_t>(r.u8("payload exponent"));
            const uint64_t len = r.u64("blob length");
            r.need(len, "encoded blob");
            std::vector<uint8_t> blob(bytes.begin() + static_cast<ptrdiff_t>(r.pos),
                                      bytes.begin() + static_cast<ptrdiff_t>(r.pos + len));
            r.pos += len;
            layer.sparse = deserialize(blob);
            c.encoded.push_back(std::move(layer));
        } else {
            fail("unknown record tag " + std::to_string(tag));
        }
    }

    if (r.pos != bytes.size()) fail("trailing bytes after model payload");
    c.validate();
    return c;
}

}  // namespace nsc
