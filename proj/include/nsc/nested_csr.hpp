#ifndef NSC_NESTED_CSR_HPP
#define NSC_NESTED_CSR_HPP

#include <cstdint>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/pruning.hpp"

namespace nsc {

enum class ValueType : uint8_t { F32 = 0, I8 = 1 };

/// Band-partitioned block CSR holding every nested configuration in one
/// payload. Band 1 is the sparsest core; band j holds the blocks that first
/// appear at the j-th sparsest level, so level i is served by reading bands
/// 1..(N-i+1) and switching levels never touches the arrays.
///
/// nz_iidx stores per-row block counts (band-major, one entry per matrix
/// row); a block spanning block_m rows is counted on the first of them.
/// Immutable after finalize(); safe to share read-only across threads.
struct NestedCSRMatrix {
    int rows = 0;
    int cols = 0;
    int block_m = 1;
    int block_n = 2;
    std::vector<uint16_t> levels_pm;  // ascending sparsity levels, per-mille
    ValueType dtype = ValueType::F32;

    std::vector<float> values_f32;   // block payloads, band order, row-major
    std::vector<int8_t> values_i8;   // within each block; one array per dtype
    std::vector<uint32_t> nz_iidx;   // N * rows counts
    std::vector<uint32_t> nz_jidx;   // block-column index per block

    // Block-count prefix over (band, block row) cells, built by finalize().
    // Length N * block_rows() + 1.
    std::vector<size_t> block_offsets;

    int level_count() const { return static_cast<int>(levels_pm.size()); }
    int block_rows() const { return rows / block_m; }
    int block_cols() const { return cols / block_n; }
    int block_size() const { return block_m * block_n; }
    size_t block_count() const { return nz_jidx.size(); }

    /// Number of leading bands a level reads: N for level 1 (least sparse)
    /// down to 1 for level N.
    int bands_for_level(int level_index) const {
        return level_count() - level_index + 1;
    }

    size_t cell_begin(int band, int block_row) const {
        return block_offsets[static_cast<size_t>(band - 1) * block_rows() + block_row];
    }
    size_t cell_end(int band, int block_row) const {
        return block_offsets[static_cast<size_t>(band - 1) * block_rows() + block_row + 1];
    }

    /// Builds block_offsets and validates every structural invariant.
    void finalize();

    /// Throws FormatError(Invariant) on any structural violation.
    void validate() const;
};

/// Read-only addressing for one band: its block range plus the per-row
/// counts slice of nz_iidx.
struct BandView {
    int band = 1;  // 1-based, 1 = sparsest core
    size_t block_begin = 0;
    size_t block_end = 0;
    const uint32_t* row_counts = nullptr;  // `rows` entries
};

BandView band_view(const NestedCSRMatrix& m, int band);

struct FootprintReport {
    size_t values_bytes = 0;
    size_t iidx_bytes = 0;
    size_t jidx_bytes = 0;
    size_t total_bytes = 0;
};

/// Nearest per-mille representation of a sparsity fraction.
uint16_t to_per_mille(float s);

/// Builds the banded layout from a weight matrix and its nested masks.
/// Applies the least-sparse mask to the weights first, so values outside
/// that support never reach the payload.
NestedCSRMatrix encode(const Matrix& weights, const NestedMaskSet& masks);

/// Dense reconstruction of level `level_index` (1 = least sparse, reads all
/// bands; N = sparsest core only). Bit-exact inverse of encode under the
/// selected mask. F32 payloads only.
Matrix decode(const NestedCSRMatrix& m, int level_index);

/// Byte accounting per array for the given element widths. Widths are
/// parameters so narrow-index deployments can be modeled without re-encoding.
FootprintReport footprint(const NestedCSRMatrix& m, int value_bytes, int index_bytes);

/// Little-endian stream: "NCSR" magic, version, geometry, per-mille levels,
/// dtype tag, then the three arrays. Canonical: equal matrices serialize to
/// identical bytes.
std::vector<uint8_t> serialize(const NestedCSRMatrix& m);

/// Parses and validates a stream; every failure is a FormatError whose kind
/// distinguishes bad magic, bad version, truncation and invariant breaks.
NestedCSRMatrix deserialize(const std::vector<uint8_t>& bytes);

/// Field-by-field equality; float payloads compare by bit pattern.
bool structurally_equal(const NestedCSRMatrix& a, const NestedCSRMatrix& b);

}  // namespace nsc

#endif
