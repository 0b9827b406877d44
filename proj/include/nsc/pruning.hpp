#ifndef NSC_PRUNING_HPP
#define NSC_PRUNING_HPP

#include <cstdint>
#include <vector>

#include "nsc/matrix.hpp"

namespace nsc {

/// Ordered set of sparsity fractions plus the block shape shared by all of
/// them. Levels must be strictly increasing and inside (0, 1).
struct SparsityLevelSet {
    std::vector<float> levels;
    int block_m = 1;
    int block_n = 2;

    int count() const { return static_cast<int>(levels.size()); }
    void validate() const;

    static SparsityLevelSet defaults() { return {{0.70f, 0.80f, 0.90f}, 1, 2}; }
};

/// Binary mask over one weight matrix, constant within each block.
struct BlockMask {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> bits;  // row-major, 0 = pruned, 1 = kept
    float sparsity = 0.0f;      // realized zero fraction

    uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * cols + c]; }
};

/// One mask per sparsity level, nested by construction: the support of each
/// mask contains the support of every sparser one.
struct NestedMaskSet {
    SparsityLevelSet levels;
    std::vector<BlockMask> masks;  // ascending sparsity, same order as levels

    int count() const { return static_cast<int>(masks.size()); }
};

/// L2 norm of every m x n block. Grid shape (rows/m) x (cols/n); throws
/// BlockShapeError when the matrix does not divide evenly.
Matrix group_blocks(const Matrix& weights, int block_m, int block_n);

/// Magnitude mask: zeroes exactly ceil(s * total_blocks) lowest-norm blocks.
/// Ties are broken by pruning the lower row-major block index first.
BlockMask get_mask(const Matrix& weights, float s, int block_m, int block_n);

/// All masks of a level set from one ranking of one weight snapshot.
NestedMaskSet get_nested_masks(const Matrix& weights, const SparsityLevelSet& levels);

/// Elementwise select: weight where the mask bit is 1, +0.0 where it is 0.
Matrix apply_mask(const Matrix& weights, const BlockMask& mask);

/// True iff every sparser support is contained in every denser one.
bool masks_nested(const NestedMaskSet& set);

}  // namespace nsc

#endif
