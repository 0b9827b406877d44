#include "nsc/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nsc {

void SparsityLevelSet::validate() const {
    if (levels.empty()) throw std::invalid_argument("sparsity level set is empty");
    if (block_m < 1 || block_n < 1)
        throw std::invalid_argument("block shape must be at least 1x1");
    for (float s : levels)
        if (!(s > 0.0f && s < 1.0f))
            throw std::invalid_argument("sparsity level outside (0,1)");
    for (size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1])
            throw std::invalid_argument("sparsity levels must be strictly increasing");
}

Matrix group_blocks(const Matrix& weights, int block_m, int block_n) {
    if (block_m < 1 || block_n < 1)
        throw BlockShapeError("block shape must be at least 1x1");
    if (weights.rows % block_m != 0 || weights.cols % block_n != 0)
        throw BlockShapeError("matrix " + std::to_string(weights.rows) + "x" +
                              std::to_string(weights.cols) + " not divisible by block " +
                              std::to_string(block_m) + "x" + std::to_string(block_n));
    const int grid_r = weights.rows / block_m;
    const int grid_c = weights.cols / block_n;
    Matrix grid(grid_r, grid_c);
    for (int br = 0; br < grid_r; ++br) {
        for (int bc = 0; bc < grid_c; ++bc) {
            float sq = 0.0f;
            for (int mi = 0; mi < block_m; ++mi)
                for (int ni = 0; ni < block_n; ++ni) {
                    const float w = weights.at(br * block_m + mi, bc * block_n + ni);
                    sq += w * w;
                }
            grid.at(br, bc) = std::sqrt(sq);
        }
    }
    return grid;
}

namespace {

// Block indices ordered lowest norm first; equal norms keep ascending index
// order so pruning is a total, deterministic order.
std::vector<int> rank_blocks(const Matrix& norm_grid) {
    std::vector<int> order(norm_grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return norm_grid.data[a] < norm_grid.data[b];
    });
    return order;
}

BlockMask mask_from_ranking(const Matrix& norm_grid, const std::vector<int>& order,
                            float s, int rows, int cols, int block_m, int block_n) {
    const int total_blocks = norm_grid.rows * norm_grid.cols;
    const int pruned = static_cast<int>(
        std::ceil(static_cast<double>(s) * static_cast<double>(total_blocks)));
    BlockMask mask;
    mask.rows = rows;
    mask.cols = cols;
    mask.bits.assign(static_cast<size_t>(rows) * cols, 1);
    for (int k = 0; k < pruned && k < total_blocks; ++k) {
        const int idx = order[k];
        const int br = idx / norm_grid.cols;
        const int bc = idx % norm_grid.cols;
        for (int mi = 0; mi < block_m; ++mi)
            for (int ni = 0; ni < block_n; ++ni)
                mask.bits[static_cast<size_t>(br * block_m + mi) * cols +
                          (bc * block_n + ni)] = 0;
    }
    const int clamped = std::min(pruned, total_blocks);
    mask.sparsity = static_cast<float>(static_cast<double>(clamped) / total_blocks);
    return mask;
}

}  // namespace

BlockMask get_mask(const Matrix& weights, float s, int block_m, int block_n) {
    if (!(s >= 0.0f && s <= 1.0f))
        throw std::invalid_argument("sparsity must lie in [0,1]");
    const Matrix grid = group_blocks(weights, block_m, block_n);
    const std::vector<int> order = rank_blocks(grid);
    return mask_from_ranking(grid, order, s, weights.rows, weights.cols, block_m, block_n);
}

NestedMaskSet get_nested_masks(const Matrix& weights, const SparsityLevelSet& levels) {
    levels.validate();
    const Matrix grid = group_blocks(weights, levels.block_m, levels.block_n);
    const std::vector<int> order = rank_blocks(grid);
    NestedMaskSet set;
    set.levels = levels;
    set.masks.reserve(levels.levels.size());
    // One ranking serves every level, which makes the supports nested no
    // matter how ties fall.
    for (float s : levels.levels)
        set.masks.push_back(mask_from_ranking(grid, order, s, weights.rows, weights.cols,
                                              levels.block_m, levels.block_n));
    return set;
}

Matrix apply_mask(const Matrix& weights, const BlockMask& mask) {
    if (weights.rows != mask.rows || weights.cols != mask.cols)
        throw DimensionError("apply_mask: weights " + std::to_string(weights.rows) + "x" +
                             std::to_string(weights.cols) + " vs mask " +
                             std::to_string(mask.rows) + "x" + std::to_string(mask.cols));
    Matrix out(weights.rows, weights.cols);
    for (size_t i = 0; i < weights.size(); ++i)
        out.data[i] = mask.bits[i] ? weights.data[i] : 0.0f;
    return out;
}

bool masks_nested(const NestedMaskSet& set) {
    for (size_t i = 1; i < set.masks.size(); ++i) {
        const BlockMask& denser = set.masks[i - 1];
        const BlockMask& sparser = set.masks[i];
        if (denser.rows != sparser.rows || denser.cols != sparser.cols) return false;
        for (size_t k = 0; k < denser.bits.size(); ++k)
            if (sparser.bits[k] && !denser.bits[k]) return false;
    }
    return true;
}

}  // namespace nsc
