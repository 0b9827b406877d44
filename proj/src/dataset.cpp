#include "nsc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include "byte_io.hpp"
#include "nsc/errors.hpp"
#include "nsc/rng.hpp"

namespace nsc {

namespace {

constexpr uint16_t kFormatVersion = 1;
const char kMagic[4] = {'N', 'S', 'C', 'D'};
constexpr float kPi = 3.14159265358979323846f;

void require_positive_samples(int samples) {
    if (samples < 1)
        throw UsageError("sample count must be >= 1, got " + std::to_string(samples));
}

}  // namespace

int Dataset::feature_width() const {
    int w = 1;
    for (int d : dims) w *= d;
    return w;
}

TrainData Dataset::as_train_data() const {
    TrainData t;
    t.features = features;
    t.labels = labels;
    return t;
}

void Dataset::validate() const {
    if (features.rows < 1)
        throw FormatError(FormatError::Kind::Invariant, "dataset: no samples");
    if (dims.empty())
        throw FormatError(FormatError::Kind::Invariant, "dataset: empty feature shape");
    for (int d : dims)
        if (d < 1)
            throw FormatError(FormatError::Kind::Invariant,
                              "dataset: non-positive feature dimension");
    if (features.cols != feature_width())
        throw FormatError(FormatError::Kind::Invariant,
                          "dataset: feature width " + std::to_string(features.cols) +
                              " does not match shape product " +
                              std::to_string(feature_width()));
    if (static_cast<int>(labels.size()) != features.rows)
        throw FormatError(FormatError::Kind::Invariant,
                          "dataset: label count does not match sample count");
    if (class_count < 2)
        throw FormatError(FormatError::Kind::Invariant, "dataset: fewer than 2 classes");
    for (int label : labels)
        if (label < 0 || label >= class_count)
            throw FormatError(FormatError::Kind::Invariant,
                              "dataset: label " + std::to_string(label) +
                                  " outside [0," + std::to_string(class_count) + ")");
    if (!features.all_finite())
        throw FormatError(FormatError::Kind::Invariant, "dataset: non-finite feature");
}

Dataset make_blobs(int samples, int classes, uint64_t seed) {
    require_positive_samples(samples);
    if (classes < 2)
        throw UsageError("blobs need >= 2 classes, got " + std::to_string(classes));
    Dataset d;
    d.dims = {2};
    d.class_count = classes;
    d.features = Matrix(samples, 2);
    d.labels.resize(samples);
    Rng rng(derive_seed(seed, 11));
    for (int i = 0; i < samples; ++i) {
        const int c = i % classes;
        const float angle = 2.0f * kPi * static_cast<float>(c) / classes;
        d.labels[i] = c;
        d.features.at(i, 0) = 1.5f * std::cos(angle) + 0.4f * rng.normal();
        d.features.at(i, 1) = 1.5f * std::sin(angle) + 0.4f * rng.normal();
    }
    return d;
}

Dataset make_spiral(int samples, uint64_t seed, float turns, float noise) {
    require_positive_samples(samples);
    Dataset d;
    d.dims = {1, 8, 8};
    d.class_count = 2;
    d.features = Matrix(samples, 64);
    d.labels.resize(samples);
    Rng rng(derive_seed(seed, 12));
    const float sigma = 0.25f;  // bump width in the [-1,1] image frame
    for (int i = 0; i < samples; ++i) {
        const int c = i % 2;
        d.labels[i] = c;
        const float t = rng.uniform();
        const float phi = t * turns * 2.0f * kPi + static_cast<float>(c) * kPi;
        const float r = 0.15f + 0.8f * t;
        const float x = r * std::cos(phi) + noise * rng.normal();
        const float y = r * std::sin(phi) + noise * rng.normal();
        for (int py = 0; py < 8; ++py) {
            for (int px = 0; px < 8; ++px) {
                const float cx = -1.0f + (static_cast<float>(px) + 0.5f) * 0.25f;
                const float cy = -1.0f + (static_cast<float>(py) + 0.5f) * 0.25f;
                const float d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y);
                d.features.at(i, py * 8 + px) = std::exp(-d2 / (2.0f * sigma * sigma));
            }
        }
    }
    return d;
}

Dataset make_textures(int samples, uint64_t seed) {
    require_positive_samples(samples);
    Dataset d;
    d.dims = {1, 8, 8};
    d.class_count = 3;
    d.features = Matrix(samples, 64);
    d.labels.resize(samples);
    Rng rng(derive_seed(seed, 13));
    for (int i = 0; i < samples; ++i) {
        const int c = i % 3;
        d.labels[i] = c;
        const int phase = static_cast<int>(rng.below(4));
        const float amp = 0.6f + 0.4f * rng.uniform();
        for (int py = 0; py < 8; ++py) {
            for (int px = 0; px < 8; ++px) {
                int stripe = 0;
                if (c == 0) stripe = (py + phase) / 2;
                if (c == 1) stripe = (px + phase) / 2;
                if (c == 2) stripe = (py + phase) / 2 + (px + phase) / 2;
                const float base = (stripe % 2 == 0) ? amp : -amp;
                d.features.at(i, py * 8 + px) = base + 0.1f * rng.normal();
            }
        }
    }
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    d.validate();
    detail::ByteWriter w;
    for (char c : kMagic) w.u8(static_cast<uint8_t>(c));
    w.u16(kFormatVersion);
    w.u32(static_cast<uint32_t>(d.sample_count()));
    w.u8(static_cast<uint8_t>(d.dims.size()));
    for (int dim : d.dims) w.u32(static_cast<uint32_t>(dim));
    w.u16(static_cast<uint16_t>(d.class_count));
    for (float v : d.features.data) w.f32(v);
    for (int label : d.labels) w.u16(static_cast<uint16_t>(label));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(w.out.data()),
              static_cast<std::streamsize>(w.out.size()));
    if (!out) throw IoError("write failed on " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path);

    detail::ByteReader r{bytes, "dataset"};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatError::Kind::BadMagic, "not a dataset file");
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kFormatVersion)
        throw FormatError(FormatError::Kind::BadVersion,
                          "unsupported dataset version " + std::to_string(version));

    Dataset d;
    const uint32_t samples = r.u32("sample count");
    const uint8_t rank = r.u8("rank");
    if (samples == 0 || samples > (1u << 24) || rank == 0 || rank > 4)
        throw FormatError(FormatError::Kind::Invariant,
                          "dataset: implausible header extents");
    uint64_t width = 1;
    d.dims.resize(rank);
    for (int i = 0; i < rank; ++i) {
        const uint32_t dim = r.u32("dims");
        if (dim == 0 || dim > (1u << 20))
            throw FormatError(FormatError::Kind::Invariant,
                              "dataset: implausible feature dimension");
        d.dims[i] = static_cast<int>(dim);
        width *= dim;
    }
    if (width > (1u << 24))
        throw FormatError(FormatError::Kind::Invariant,
                          "dataset: implausible feature width");
    d.class_count = r.u16("class count");

    const uint64_t value_count = static_cast<uint64_t>(samples) * width;
    r.need(value_count * 4, "features");
    d.features = Matrix(static_cast<int>(samples), static_cast<int>(width));
    for (uint64_t i = 0; i < value_count; ++i) d.features.data[i] = r.f32("features");
    d.labels.resize(samples);
    for (uint32_t i = 0; i < samples; ++i) d.labels[i] = r.u16("labels");
    if (r.pos != bytes.size())
        throw FormatError(FormatError::Kind::Invariant,
                          "dataset: " + std::to_string(bytes.size() - r.pos) +
                              " trailing bytes");
    d.validate();
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, float train_fraction,
                                          uint64_t seed) {
    d.validate();
    if (!(train_fraction > 0.0f && train_fraction < 1.0f))
        throw UsageError("train fraction must lie in (0,1)");
    const int n = d.sample_count();
    const int train_n = std::max(1, std::min(n - 1, static_cast<int>(
                                                        std::lround(train_fraction * n))));
    if (n < 2) throw UsageError("cannot split a single-sample dataset");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 29));
    rng.shuffle(order);

    auto take = [&](int begin, int end) {
        Dataset part;
        part.dims = d.dims;
        part.class_count = d.class_count;
        part.features = Matrix(end - begin, d.features.cols);
        part.labels.resize(end - begin);
        for (int i = begin; i < end; ++i) {
            const int src = order[i];
            for (int c = 0; c < d.features.cols; ++c)
                part.features.at(i - begin, c) = d.features.at(src, c);
            part.labels[i - begin] = d.labels[src];
        }
        return part;
    };
    return {take(0, train_n), take(train_n, n)};
}

}  // namespace nsc
