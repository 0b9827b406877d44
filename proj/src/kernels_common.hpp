#ifndef NSC_SRC_KERNELS_COMMON_HPP
#define NSC_SRC_KERNELS_COMMON_HPP

#include <stdexcept>
#include <string>

#include "nsc/kernels.hpp"

namespace nsc::detail {

inline void check_spmm_args(const NestedCSRMatrix& a, int b_rows, ValueType want,
                            const KernelConfig& cfg) {
    if (a.block_offsets.size() !=
        static_cast<size_t>(a.level_count()) * a.block_rows() + 1)
        throw FormatError(FormatError::Kind::Invariant, "spmm: matrix not finalized");
    if (a.dtype != want) throw std::invalid_argument("spmm: wrong payload dtype");
    if (cfg.tile_M < 1) throw std::invalid_argument("spmm: tile_M must be >= 1");
    if (cfg.selected_level < 1 || cfg.selected_level > a.level_count())
        throw std::out_of_range("spmm: level " + std::to_string(cfg.selected_level) +
                                " outside [1," + std::to_string(a.level_count()) + "]");
    if (a.cols != b_rows)
        throw DimensionError("spmm: A has " + std::to_string(a.cols) + " cols, B has " +
                             std::to_string(b_rows) + " rows");
}

// Per dot product the int32 accumulator sees at most cols terms of 127*127.
inline void check_q_bound(const NestedCSRMatrix& a) {
    if (static_cast<int64_t>(a.cols) * 127 * 127 >= (int64_t{1} << 31))
        throw std::invalid_argument(
            "spmm_q: reduction length " + std::to_string(a.cols) +
            " can overflow the int32 accumulator (needs K*127*127 < 2^31)");
}

}  // namespace nsc::detail

#endif
