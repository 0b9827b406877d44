#ifndef NSC_KERNELS_HPP
#define NSC_KERNELS_HPP

#include <cstdint>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/nested_csr.hpp"
#include "nsc/net.hpp"

namespace nsc {

/// Micro-tiling and level selection for the sparse kernels. Correctness is
/// independent of tile_M; only traversal of the dense operand changes.
struct KernelConfig {
    int tile_M = 4;
    int selected_level = 1;  // 1 = least sparse
};

struct Int8Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<int8_t> data;

    Int8Matrix() = default;
    Int8Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0) {}

    int8_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    int8_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct Int32Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<int32_t> data;

    Int32Matrix() = default;
    Int32Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0) {}

    int32_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    int32_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

/// C = A|level * B over the band prefix for the selected level. Reads A only;
/// switching levels between calls touches no storage. Parallel across block
/// rows; per-output accumulation order (band, block, lane) is fixed, so
/// results are bit-identical to spmm_serial and across tile_M choices.
Matrix spmm(const NestedCSRMatrix& a, const Matrix& b, const KernelConfig& cfg);

/// Untiled single-thread reference with the same accumulation order.
Matrix spmm_serial(const NestedCSRMatrix& a, const Matrix& b, const KernelConfig& cfg);

/// Exact multiply-accumulate count spmm performs at this level.
size_t mac_count(const NestedCSRMatrix& a, int level_index, int b_cols);

/// Integer variant: int8 operands, 32-bit accumulators. Exact; requires
/// a.cols * 127 * 127 < 2^31 so a dot product cannot overflow.
Int32Matrix spmm_q(const NestedCSRMatrix& a, const Int8Matrix& b, const KernelConfig& cfg);

/// Serial reference for the integer path; integer addition is associative,
/// so equality with spmm_q is exact by construction.
Int32Matrix spmm_q_serial(const NestedCSRMatrix& a, const Int8Matrix& b,
                          const KernelConfig& cfg);

/// Scales accumulators by 2^-shift with round-half-away-from-zero, then
/// saturates to [-127, 127]. Negative shift scales up.
Int8Matrix requantize(const Int32Matrix& acc, int shift);

/// Convolution as GEMM over sparse weights: im2col, spmm at the selected
/// level, then scatter back to the flat CHW activation layout.
Matrix conv_sparse(const LayerSpec& conv, const NestedCSRMatrix& weights,
                   const Matrix& input, const KernelConfig& cfg);

}  // namespace nsc

#endif
