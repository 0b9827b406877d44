#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "nsc/nested_csr.hpp"
#include "nsc/rng.hpp"
#include "testutil.hpp"

using namespace nsc;
using namespace nsc::test;

namespace {

// 2x4 worked example: block norms 5, 0.2236, 1.414, 7.071 with 1x2 blocks.
Matrix sample_2x4() {
    return Matrix(2, 4, {3.0f, 4.0f, 0.1f, 0.2f, 1.0f, 1.0f, 5.0f, 5.0f});
}

NestedCSRMatrix sample_encoded() {
    SparsityLevelSet s{{0.25f, 0.50f, 0.75f}, 1, 2};
    return encode(sample_2x4(), get_nested_masks(sample_2x4(), s));
}

SparsityLevelSet random_level_set(Rng& rng, int n_levels, int bm, int bn) {
    std::vector<float> levels;
    float s = 0.05f + 0.8f * rng.uniform() / n_levels;
    for (int i = 0; i < n_levels; ++i) {
        levels.push_back(s);
        s += 0.02f + (0.9f - s) * rng.uniform() * 0.5f;
    }
    return SparsityLevelSet{levels, bm, bn};
}

}  // namespace

TEST_CASE("encode: hand-partitioned bands of the worked example") {
    NestedCSRMatrix m = sample_encoded();
    CHECK(m.rows == 2);
    CHECK(m.cols == 4);
    CHECK(m.level_count() == 3);
    CHECK(m.levels_pm == std::vector<uint16_t>{250, 500, 750});
    CHECK(m.values_f32 == std::vector<float>{5, 5, 3, 4, 1, 1});
    CHECK(m.nz_iidx == std::vector<uint32_t>{0, 1, 1, 0, 0, 1});
    CHECK(m.nz_jidx == std::vector<uint32_t>{1, 0, 0});
}

TEST_CASE("band_view: block ranges of the worked example") {
    NestedCSRMatrix m = sample_encoded();
    BandView b1 = band_view(m, 1);
    CHECK(b1.block_begin == 0);
    CHECK(b1.block_end == 1);
    CHECK(b1.row_counts[0] == 0);
    CHECK(b1.row_counts[1] == 1);
    BandView b3 = band_view(m, 3);
    CHECK(b3.block_begin == 2);
    CHECK(b3.block_end == 3);
    CHECK_THROWS_AS(band_view(m, 0), std::out_of_range);
    CHECK_THROWS_AS(band_view(m, 4), std::out_of_range);
}

TEST_CASE("decode: hand values at both ends of the level range") {
    NestedCSRMatrix m = sample_encoded();
    Matrix sparsest = decode(m, 3);
    CHECK(bit_equal(sparsest, Matrix(2, 4, {0, 0, 0, 0, 0, 0, 5, 5})));
    Matrix least = decode(m, 1);
    CHECK(bit_equal(least, Matrix(2, 4, {3, 4, 0, 0, 1, 1, 5, 5})));
    CHECK_THROWS_AS(decode(m, 0), std::out_of_range);
    CHECK_THROWS_AS(decode(m, 4), std::out_of_range);
}

TEST_CASE("encode: single level with an all-ones mask degenerates to block CSR") {
    Matrix w(2, 4, {1, 2, 3, 4, 5, 6, 7, 8});
    NestedMaskSet masks;
    masks.levels = SparsityLevelSet{{0.001f}, 1, 2};
    BlockMask all{2, 4, std::vector<uint8_t>(8, 1), 0.0f};
    masks.masks.push_back(all);
    NestedCSRMatrix m = encode(w, masks);
    CHECK(m.values_f32.size() == 8);  // R*C, nothing pruned
    CHECK(m.nz_iidx == std::vector<uint32_t>{2, 2});
    CHECK(m.nz_jidx == std::vector<uint32_t>{0, 1, 0, 1});
    CHECK(bit_equal(decode(m, 1), w));
}

TEST_CASE("encode: a level that prunes everything leaves band 1 empty") {
    SparsityLevelSet s{{0.25f, 0.99f}, 1, 2};
    Matrix w = sample_2x4();
    NestedCSRMatrix m = encode(w, get_nested_masks(w, s));
    // Band 1 ranges over the first R iidx entries.
    CHECK(m.nz_iidx[0] == 0);
    CHECK(m.nz_iidx[1] == 0);
    CHECK(band_view(m, 1).block_begin == band_view(m, 1).block_end);
    CHECK(bit_equal(decode(m, 2), Matrix(2, 4)));
}

TEST_CASE("encode: adjacent levels with identical supports give an empty band") {
    // T=4 blocks: ceil(0.55*4) = ceil(0.6*4) = 3, so both levels keep one block.
    SparsityLevelSet s{{0.55f, 0.60f}, 1, 2};
    Matrix w = sample_2x4();
    NestedCSRMatrix m = encode(w, get_nested_masks(w, s));
    CHECK(band_view(m, 2).block_begin == band_view(m, 2).block_end);
    CHECK(bit_equal(decode(m, 1), decode(m, 2)));
}

TEST_CASE("encode rejects bad inputs") {
    Matrix w = sample_2x4();
    SparsityLevelSet s{{0.25f, 0.75f}, 1, 2};
    NestedMaskSet masks = get_nested_masks(w, s);

    NestedMaskSet broken = masks;
    // Invert one bit of the denser mask so the sparser support escapes it.
    broken.masks[0].bits = {0, 0, 1, 1, 1, 1, 0, 0};
    CHECK_THROWS_AS(encode(w, broken), NestingViolationError);

    CHECK_THROWS_AS(encode(Matrix(4, 4), masks), DimensionError);
    CHECK_THROWS_AS(encode(w, NestedMaskSet{}), NestingViolationError);
}

TEST_CASE("footprint: hand-computed byte counts") {
    NestedCSRMatrix m = sample_encoded();
    FootprintReport r = footprint(m, 1, 2);
    CHECK(r.values_bytes == 6);
    CHECK(r.iidx_bytes == 12);
    CHECK(r.jidx_bytes == 6);
    CHECK(r.total_bytes == 24);

    FootprintReport wide = footprint(m, 4, 4);
    CHECK(wide.values_bytes == 24);
    CHECK(wide.total_bytes == 24 + 24 + 12);
}

TEST_CASE("footprint: adding a level costs exactly R index entries") {
    // Same lowest level, so values and jidx arrays are identical; the extra
    // level only adds one band of per-row counts.
    Matrix w = sample_2x4();
    SparsityLevelSet base{{0.25f, 0.50f}, 1, 2};
    SparsityLevelSet more{{0.25f, 0.50f, 0.75f}, 1, 2};
    FootprintReport a = footprint(encode(w, get_nested_masks(w, base)), 4, 4);
    FootprintReport b = footprint(encode(w, get_nested_masks(w, more)), 4, 4);
    CHECK(b.values_bytes == a.values_bytes);
    CHECK(b.jidx_bytes == a.jidx_bytes);
    CHECK(b.iidx_bytes - a.iidx_bytes == 2u * 4u);  // R rows of u32 counts
}

TEST_CASE("property: roundtrip, accounting, disjointness over random cases") {
    Rng rng(60601);
    const int block_shapes[3][2] = {{1, 1}, {1, 2}, {2, 2}};
    for (int iter = 0; iter < 150; ++iter) {
        const int bm = block_shapes[iter % 3][0];
        const int bn = block_shapes[iter % 3][1];
        const int rows = bm * static_cast<int>(1 + rng.below(10));
        const int cols = bn * static_cast<int>(1 + rng.below(10));
        const int n_levels = 1 + static_cast<int>(iter % 4);
        Matrix w = random_matrix(rows, cols, rng);
        SparsityLevelSet set = random_level_set(rng, n_levels, bm, bn);
        NestedMaskSet masks = get_nested_masks(w, set);
        NestedCSRMatrix m = encode(w, masks);

        // Eq. 2 with the realized lowest sparsity: exact integer identities.
        const double s_real = masks.masks[0].sparsity;
        const auto want_values = static_cast<size_t>(
            std::llround((1.0 - s_real) * rows * cols));
        CHECK(m.values_f32.size() == want_values);
        CHECK(m.nz_iidx.size() == static_cast<size_t>(n_levels) * rows);
        CHECK(m.nz_jidx.size() == want_values / static_cast<size_t>(bm * bn));

        for (int li = 0; li < n_levels; ++li) {
            Matrix got = decode(m, li + 1);
            Matrix want = apply_mask(w, masks.masks[static_cast<size_t>(li)]);
            CHECK(bit_equal(got, want));
        }

        // No block may appear in two bands.
        std::vector<uint8_t> seen(
            static_cast<size_t>(m.block_rows()) * m.block_cols(), 0);
        for (int band = 1; band <= n_levels; ++band)
            for (int br = 0; br < m.block_rows(); ++br)
                for (size_t k = m.cell_begin(band, br); k < m.cell_end(band, br); ++k) {
                    const size_t cell =
                        static_cast<size_t>(br) * m.block_cols() + m.nz_jidx[k];
                    CHECK(seen[cell] == 0);
                    seen[cell] = 1;
                }
    }
}

TEST_CASE("property: nested container beats separate encodings, overhead is (N-1)*R*ib") {
    Rng rng(7171);
    for (int iter = 0; iter < 40; ++iter) {
        const int rows = 2 * static_cast<int>(2 + rng.below(8));
        const int cols = 2 * static_cast<int>(2 + rng.below(8));
        Matrix w = random_matrix(rows, cols, rng);
        SparsityLevelSet set = random_level_set(rng, 3, 1, 2);
        NestedMaskSet masks = get_nested_masks(w, set);
        const int ib = 4, vb = 4;
        FootprintReport nested = footprint(encode(w, masks), vb, ib);

        size_t separate = 0;
        for (int li = 0; li < masks.count(); ++li) {
            NestedMaskSet single;
            single.levels = SparsityLevelSet{{set.levels[static_cast<size_t>(li)]}, 1, 2};
            single.masks = {masks.masks[static_cast<size_t>(li)]};
            separate += footprint(encode(w, single), vb, ib).total_bytes;
        }
        CHECK(nested.total_bytes <= separate);

        // Against the single least-sparse encoding, the nested container
        // pays only the extra per-band row counts.
        NestedMaskSet base;
        base.levels = SparsityLevelSet{{set.levels[0]}, 1, 2};
        base.masks = {masks.masks[0]};
        FootprintReport single = footprint(encode(w, base), vb, ib);
        CHECK(nested.total_bytes - single.total_bytes ==
              static_cast<size_t>(masks.count() - 1) * rows * ib);
    }
}

TEST_CASE("serialize/deserialize: identity on random encodings, canonical bytes") {
    Rng rng(90909);
    for (int iter = 0; iter < 40; ++iter) {
        const int bm = (iter % 2) ? 2 : 1;
        const int bn = 2;
        const int rows = bm * static_cast<int>(1 + rng.below(8));
        const int cols = bn * static_cast<int>(1 + rng.below(8));
        Matrix w = random_matrix(rows, cols, rng);
        SparsityLevelSet set = random_level_set(rng, 1 + static_cast<int>(rng.below(4)),
                                                bm, bn);
        NestedCSRMatrix m = encode(w, get_nested_masks(w, set));
        std::vector<uint8_t> bytes = serialize(m);
        CHECK(serialize(m) == bytes);  // canonical
        NestedCSRMatrix back = deserialize(bytes);
        CHECK(structurally_equal(m, back));
        for (int li = 1; li <= m.level_count(); ++li)
            CHECK(bit_equal(decode(m, li), decode(back, li)));
    }
}

TEST_CASE("i8 payload roundtrips through the stream") {
    NestedCSRMatrix m = sample_encoded();
    NestedCSRMatrix q = m;
    q.dtype = ValueType::I8;
    q.values_i8.assign({5, 5, 3, 4, 1, 1});
    q.values_f32.clear();
    q.finalize();
    NestedCSRMatrix back = deserialize(serialize(q));
    CHECK(structurally_equal(q, back));
    CHECK(back.values_i8 == std::vector<int8_t>{5, 5, 3, 4, 1, 1});
}

TEST_CASE("deserialize: each corruption class maps to its error kind") {
    std::vector<uint8_t> good = serialize(sample_encoded());
    REQUIRE_NOTHROW(deserialize(good));

    SUBCASE("bad magic") {
        std::vector<uint8_t> bytes = good;
        bytes[0] ^= 0xFF;
        try {
            deserialize(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::BadMagic);
        }
    }
    SUBCASE("bad version") {
        std::vector<uint8_t> bytes = good;
        bytes[4] = 0x77;
        try {
            deserialize(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::BadVersion);
        }
    }
    SUBCASE("truncated tail") {
        for (size_t cut = 0; cut < good.size(); cut += 7) {
            std::vector<uint8_t> bytes(good.begin(), good.begin() + cut);
            CHECK_THROWS_AS(deserialize(bytes), FormatError);
        }
    }
    SUBCASE("incremented row count runs past the stream") {
        std::vector<uint8_t> bytes = good;
        // Header: magic 4 + version 2 + dims 8 + blocks 2 + N 1 + levels 6
        // + dtype 1 = 24; first iidx entry sits right after.
        bytes[24] = 1;  // count 0 -> 1
        try {
            deserialize(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::Truncated);
        }
    }
    SUBCASE("decremented row count leaves trailing bytes") {
        std::vector<uint8_t> bytes = good;
        bytes[28] = 0;  // second iidx entry, count 1 -> 0
        try {
            deserialize(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::Invariant);
        }
    }
    SUBCASE("out-of-range block column") {
        std::vector<uint8_t> bytes = good;
        // jidx array follows the 6 iidx words at offset 24.
        bytes[24 + 24] = 9;
        try {
            deserialize(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind() == FormatError::Kind::Invariant);
        }
    }
}

TEST_CASE("validate rejects hand-built structural violations") {
    NestedCSRMatrix m = sample_encoded();

    NestedCSRMatrix dup = m;
    // Same block column in two bands of block row 1.
    dup.nz_jidx = {1, 0, 1};
    CHECK_THROWS_AS(dup.finalize(), FormatError);

    SparsityLevelSet s22{{0.5f}, 2, 2};
    Matrix w4(4, 4, std::vector<float>(16, 1.0f));
    NestedCSRMatrix big = encode(w4, get_nested_masks(w4, s22));
    // Move a block count off the first row of its block row. The all-ones
    // 2x2 case keeps both blocks of block row 1, counted at matrix row 2.
    REQUIRE(big.nz_iidx == std::vector<uint32_t>{0, 0, 2, 0});
    big.nz_iidx[2] -= 1;
    big.nz_iidx[3] += 1;
    CHECK_THROWS_AS(big.finalize(), FormatError);
}
