#include "nsc/kernels.hpp"

#include "kernels_common.hpp"

namespace nsc {

Matrix spmm_serial(const NestedCSRMatrix& a, const Matrix& b, const KernelConfig& cfg) {
    detail::check_spmm_args(a, b.rows, ValueType::F32, cfg);
    Matrix c(a.rows, b.cols);
    const int bands = a.bands_for_level(cfg.selected_level);
    const int bs = a.block_size();

    for (int br = 0; br < a.block_rows(); ++br) {
        for (int band = 1; band <= bands; ++band) {
            for (size_t k = a.cell_begin(band, br); k < a.cell_end(band, br); ++k) {
                const float* blk = &a.values_f32[k * static_cast<size_t>(bs)];
                const int col0 = static_cast<int>(a.nz_jidx[k]) * a.block_n;
                for (int mi = 0; mi < a.block_m; ++mi) {
                    float* crow = &c.data[static_cast<size_t>(br * a.block_m + mi) * c.cols];
                    for (int ni = 0; ni < a.block_n; ++ni) {
                        const float w = blk[mi * a.block_n + ni];
                        const float* brow = &b.data[static_cast<size_t>(col0 + ni) * b.cols];
                        for (int j = 0; j < b.cols; ++j) crow[j] += w * brow[j];
                    }
                }
            }
        }
    }
    return c;
}

Int32Matrix spmm_q_serial(const NestedCSRMatrix& a, const Int8Matrix& b,
                          const KernelConfig& cfg) {
    detail::check_spmm_args(a, b.rows, ValueType::I8, cfg);
    detail::check_q_bound(a);
    Int32Matrix c(a.rows, b.cols);
    const int bands = a.bands_for_level(cfg.selected_level);
    const int bs = a.block_size();

    for (int br = 0; br < a.block_rows(); ++br) {
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
                        for (int j = 0; j < b.cols; ++j) crow[j] += w * brow[j];
                    }
                }
            }
        }
    }
    return c;
}

}  // namespace nsc
