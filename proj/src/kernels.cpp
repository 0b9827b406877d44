#include "nsc/kernels.hpp"

#include <algorithm>
#include <cstdlib>

#include "kernels_common.hpp"

namespace nsc {

Matrix spmm(const NestedCSRMatrix& a, const Matrix& b, const KernelConfig& cfg) {
    detail::check_spmm_args(a, b.rows, ValueType::F32, cfg);
    Matrix c(a.rows, b.cols);
    const int bands = a.bands_for_level(cfg.selected_level);
    const int bs = a.block_size();
    const int tile = cfg.tile_M;
    const int block_rows = a.block_rows();

#pragma omp parallel for schedule(static)
    for (int br = 0; br < block_rows; ++br) {
        for (int j0 = 0; j0 < b.cols; j0 += tile) {
            const int j1 = std::min(b.cols, j0 + tile);
            for (int band = 1; band <= bands; ++band) {
                for (size_t k = a.cell_begin(band, br); k < a.cell_end(band, br); ++k) {
                    const float* blk = &a.values_f32[k * static_cast<size_t>(bs)];
                    const int col0 = static_cast<int>(a.nz_jidx[k]) * a.block_n;
                    for (int mi = 0; mi < a.block_m; ++mi) {
                        float* crow =
                            &c.data[static_cast<size_t>(br * a.block_m + mi) * c.cols];
                        for (int ni = 0; ni < a.block_n; ++ni) {
                            const float w = blk[mi * a.block_n + ni];
                            const float* brow =
                                &b.data[static_cast<size_t>(col0 + ni) * b.cols];
                            for (int j = j0; j < j1; ++j) crow[j] += w * brow[j];
                        }
                    }
                }
            }
        }
    }
    return c;
}

size_t mac_count(const NestedCSRMatrix& a, int level_index, int b_cols) {
    if (level_index < 1 || level_index > a.level_count())
        throw std::out_of_range("mac_count: level " + std::to_string(level_index) +
                                " outside [1," + std::to_string(a.level_count()) + "]");
    if (b_cols < 0) throw std::invalid_argument("mac_count: negative B width");
    const int bands = a.bands_for_level(level_index);
    const size_t blocks = a.block_offsets[static_cast<size_t>(bands) * a.block_rows()];
    return blocks * static_cast<size_t>(a.block_size()) * static_cast<size_t>(b_cols);
}

Int32Matrix spmm_q(const NestedCSRMatrix& a, const Int8Matrix& b,
                   const KernelConfig& cfg) {
    detail::check_spmm_args(a, b.rows, ValueType::I8, cfg);
    detail::check_q_bound(a);
    Int32Matrix c(a.rows, b.cols);
    const int bands = a.bands_for_level(cfg.selected_level);
    const int bs = a.block_size();
    const int tile = cfg.tile_M;
    const int block_rows = a.block_rows();

#pragma omp parallel for schedule(static)
    for (int br = 0; br < block_rows; ++br) {
        for (int j0 = 0; j0 < b.cols; j0 += tile) {
            const int j1 = std::min(b.cols, j0 + tile);
            for (int band = 1; band <= bands; ++band) {
                for (size_t k = a.cell_begin(band, br); k < a.cell_end(band, br); ++k) {
                    const int8_t* blk = &a.values_i8[k * static_cast<size_t>(bs)];
                    const int col0 = static_cast<int>(a.nz_jidx[k]) * a.block_n;
                    for (int mi = 0; mi < a.block_m; ++mi) {
                        int32_t* crow =
                            &c.data[static_cast<size_t>(br * a.block_m + mi) * c.cols];
                        for (int ni = 0; ni < a.block_n; ++ni) {
                            const int32_t w = blk[mi * a.block_n + ni];
                            const int8_t* brow =
                                &b.data[static_cast<size_t>(col0 + ni) * b.cols];
                            for (int j = j0; j < j1; ++j) crow[j] += w * brow[j];
                        }
                    }
                }
            }
        }
    }
    return c;
}

Int8Matrix requantize(const Int32Matrix& acc, int shift) {
    Int8Matrix out(acc.rows, acc.cols);
    for (size_t i = 0; i < acc.data.size(); ++i) {
        const int64_t v = acc.data[i];
        int64_t scaled;
        if (shift > 0) {
            // Any int32 magnitude shifts to zero beyond 40 bits.
            const int s = std::min(shift, 40);
            const int64_t mag = std::llabs(v);
            const int64_t rounded = (mag + (int64_t{1} << (s - 1))) >> s;
            scaled = v < 0 ? -rounded : rounded;
        } else if (shift < 0) {
            // Cap at 31 so |int32| << s stays inside int64; any nonzero
            // value is far past the saturation point by then.
            const int s = std::min(-shift, 31);
            scaled = v << s;
        } else {
            scaled = v;
        }
        out.data[i] = static_cast<int8_t>(std::clamp<int64_t>(scaled, -127, 127));
    }
    return out;
}

Matrix conv_sparse(const LayerSpec& conv, const NestedCSRMatrix& weights,
                   const Matrix& input, const KernelConfig& cfg) {
    if (conv.kind != LayerKind::Conv2D)
        throw std::invalid_argument("conv_sparse: layer is not Conv2D");
    if (weights.rows != conv.weight_rows() || weights.cols != conv.weight_cols())
        throw DimensionError("conv_sparse: weights " + std::to_string(weights.rows) +
                             "x" + std::to_string(weights.cols) + ", layer wants " +
                             std::to_string(conv.weight_rows()) + "x" +
                             std::to_string(conv.weight_cols()));
    const Matrix cols = im2col(input, conv);
    const Matrix patches_t = transpose(cols);  // patch x (batch * positions)
    const Matrix prod = spmm(weights, patches_t, cfg);
    const int positions = conv.out_h() * conv.out_w();
    Matrix out(input.rows, conv.out_channels * positions);
    for (int b = 0; b < input.rows; ++b)
        for (int oc = 0; oc < conv.out_channels; ++oc)
            for (int pos = 0; pos < positions; ++pos)
                out.at(b, oc * positions + pos) = prod.at(oc, b * positions + pos);
    return out;
}

}  // namespace nsc
