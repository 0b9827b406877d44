#ifndef NSC_QUANTIZATION_HPP
#define NSC_QUANTIZATION_HPP

#include "nsc/kernels.hpp"
#include "nsc/matrix.hpp"
#include "nsc/nested_csr.hpp"
#include "nsc/pruning.hpp"

namespace nsc {

/// Layer-wise symmetric binary scaling: real value ~= q * 2^exponent.
struct QuantizedWeights {
    Int8Matrix q;
    int exponent = 0;
};

/// Sparse int8 layer: banded payload plus the scale exponents the integer
/// pipeline combines at requantization time.
struct QuantizedLayer {
    NestedCSRMatrix weights;  // dtype I8
    int scale_exponent = 0;
    int in_exponent = 0;
    int out_exponent = 0;
};

/// exponent = smallest n with max|w| / 2^n <= 127 (0 for an all-zero input);
/// q = round(w / 2^n), half away from zero, saturated to [-127, 127].
QuantizedWeights quantize_weights(const Matrix& w);

Matrix dequantize(const QuantizedWeights& qw);

/// Same exponent rule applied to an activation tensor.
int activation_exponent(const Matrix& x);

/// Elementwise quantization of activations at a fixed exponent.
Int8Matrix quantize_activations(const Matrix& x, int exponent);

/// Banded int8 encoding: encodes the masked weights, then quantizes the
/// payload with one layer-wide exponent.
QuantizedLayer encode_quantized(const Matrix& weights, const NestedMaskSet& masks);

/// Dense int8 reconstruction of one level (zeros outside the support).
Int8Matrix decode_i8(const NestedCSRMatrix& m, int level_index);

}  // namespace nsc

#endif
