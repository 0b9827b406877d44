#include "nsc/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsc {

namespace {

// Smallest n with maxabs / 2^n <= 127. Zero input maps to n = 0.
int binary_exponent(double maxabs) {
    if (maxabs == 0.0) return 0;
    int n = 0;
    while (maxabs / std::exp2(n) > 127.0) ++n;
    while (maxabs / std::exp2(n - 1) <= 127.0) --n;
    return n;
}

double max_abs(const Matrix& x) {
    double m = 0.0;
    for (float v : x.data) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
}

int8_t quantize_one(float v, double scale) {
    const double q = std::round(v * scale);
    return static_cast<int8_t>(std::clamp(q, -127.0, 127.0));
}

}  // namespace

QuantizedWeights quantize_weights(const Matrix& w) {
    if (!w.all_finite())
        throw std::invalid_argument("quantize_weights: non-finite weight");
    QuantizedWeights out;
    out.exponent = binary_exponent(max_abs(w));
    out.q = Int8Matrix(w.rows, w.cols);
    // 2^-n is exact in double, so v * scale is a correctly rounded quotient.
    const double scale = std::exp2(-out.exponent);
    for (size_t i = 0; i < w.data.size(); ++i)
        out.q.data[i] = quantize_one(w.data[i], scale);
    return out;
}

Matrix dequantize(const QuantizedWeights& qw) {
    Matrix out(qw.q.rows, qw.q.cols);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::ldexp(static_cast<float>(qw.q.data[i]), qw.exponent);
    return out;
}

int activation_exponent(const Matrix& x) {
    if (!x.all_finite())
        throw std::invalid_argument("activation_exponent: non-finite activation");
    return binary_exponent(max_abs(x));
}

Int8Matrix quantize_activations(const Matrix& x, int exponent) {
    if (!x.all_finite())
        throw std::invalid_argument("quantize_activations: non-finite activation");
    Int8Matrix out(x.rows, x.cols);
    const double scale = std::exp2(-exponent);
    for (size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = quantize_one(x.data[i], scale);
    return out;
}

QuantizedLayer encode_quantized(const Matrix& weights, const NestedMaskSet& masks) {
    QuantizedLayer layer;
    layer.weights = encode(weights, masks);
    double maxabs = 0.0;
    for (float v : layer.weights.values_f32)
        maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
    layer.scale_exponent = binary_exponent(maxabs);
    const double scale = std::exp2(-layer.scale_exponent);
    layer.weights.values_i8.resize(layer.weights.values_f32.size());
    for (size_t i = 0; i < layer.weights.values_f32.size(); ++i)
        layer.weights.values_i8[i] = quantize_one(layer.weights.values_f32[i], scale);
    layer.weights.values_f32.clear();
    layer.weights.dtype = ValueType::I8;
    layer.weights.finalize();
    return layer;
}

Int8Matrix decode_i8(const NestedCSRMatrix& m, int level_index) {
    if (level_index < 1 || level_index > m.level_count())
        throw std::out_of_range("decode_i8: level " + std::to_string(level_index) +
                                " outside [1," + std::to_string(m.level_count()) + "]");
    if (m.dtype != ValueType::I8)
        throw std::invalid_argument("decode_i8: payload is not int8");
    Int8Matrix out(m.rows, m.cols);
    const int bs = m.block_size();
    for (int band = 1; band <= m.bands_for_level(level_index); ++band) {
        for (int br = 0; br < m.block_rows(); ++br) {
            for (size_t k = m.cell_begin(band, br); k < m.cell_end(band, br); ++k) {
                const int bc = static_cast<int>(m.nz_jidx[k]);
                const int8_t* blk = &m.values_i8[k * static_cast<size_t>(bs)];
                for (int mi = 0; mi < m.block_m; ++mi)
                    for (int ni = 0; ni < m.block_n; ++ni)
                        out.at(br * m.block_m + mi, bc * m.block_n + ni) =
                            blk[mi * m.block_n + ni];
            }
        }
    }
    return out;
}

}  // namespace nsc
