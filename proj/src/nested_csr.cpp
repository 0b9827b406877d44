#include "nsc/nested_csr.hpp"

#include "byte_io.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace nsc {

namespace {

constexpr uint16_t kFormatVersion = 1;
const char kMagic[4] = {'N', 'C', 'S', 'R'};

std::string invariant_msg(const std::string& what) {
    return "NestedCSR invariant: " + what;
}

}  // namespace

uint16_t to_per_mille(float s) {
    return static_cast<uint16_t>(std::lround(static_cast<double>(s) * 1000.0));
}

void NestedCSRMatrix::validate() const {
    auto fail = [](const std::string& what) {
        throw FormatError(FormatError::Kind::Invariant, invariant_msg(what));
    };
    if (rows < 1 || cols < 1) fail("non-positive matrix shape");
    if (block_m < 1 || block_n < 1) fail("non-positive block shape");
    if (rows % block_m != 0 || cols % block_n != 0)
        fail("matrix shape not divisible by block shape");
    if (levels_pm.empty()) fail("no sparsity levels");
    for (size_t i = 0; i < levels_pm.size(); ++i) {
        if (levels_pm[i] < 1 || levels_pm[i] > 999)
            fail("level " + std::to_string(i) + " outside (0,1000) per-mille");
        if (i > 0 && levels_pm[i] <= levels_pm[i - 1])
            fail("levels not strictly increasing");
    }
    if (dtype != ValueType::F32 && dtype != ValueType::I8) fail("unknown dtype");

    const int n = level_count();
    const size_t want_iidx = static_cast<size_t>(n) * rows;
    if (nz_iidx.size() != want_iidx)
        fail("nz_iidx length " + std::to_string(nz_iidx.size()) + ", want " +
             std::to_string(want_iidx));

    uint64_t total = 0;
    for (int band = 0; band < n; ++band) {
        for (int r = 0; r < rows; ++r) {
            const uint32_t c = nz_iidx[static_cast<size_t>(band) * rows + r];
            if (r % block_m != 0 && c != 0)
                fail("block count on row " + std::to_string(r) +
                     ", not the first row of its block row");
            if (c > static_cast<uint32_t>(block_cols()))
                fail("row block count " + std::to_string(c) + " exceeds " +
                     std::to_string(block_cols()) + " block columns");
            total += c;
        }
    }
    if (nz_jidx.size() != total)
        fail("nz_jidx length " + std::to_string(nz_jidx.size()) +
             " does not match count sum " + std::to_string(total));
    const size_t want_values = static_cast<size_t>(total) * block_size();
    const size_t have_values =
        dtype == ValueType::F32 ? values_f32.size() : values_i8.size();
    const size_t other_values =
        dtype == ValueType::F32 ? values_i8.size() : values_f32.size();
    if (have_values != want_values)
        fail("value array length " + std::to_string(have_values) + ", want " +
             std::to_string(want_values));
    if (other_values != 0) fail("payload present for the inactive dtype");

    // Per block row: column indices ascending within each band and disjoint
    // across bands. `seen` carries a row stamp so it is cleared O(1).
    std::vector<int> seen(static_cast<size_t>(block_cols()), -1);
    size_t cursor = 0;
    std::vector<size_t> cell(static_cast<size_t>(n), 0);
    for (int band = 0; band < n; ++band)
        for (int br = 0; br < block_rows(); ++br) {
            const uint32_t c =
                nz_iidx[static_cast<size_t>(band) * rows + static_cast<size_t>(br) * block_m];
            uint32_t prev = 0;
            for (uint32_t k = 0; k < c; ++k, ++cursor) {
                const uint32_t j = nz_jidx[cursor];
                if (j >= static_cast<uint32_t>(block_cols()))
                    fail("block column " + std::to_string(j) + " out of range");
                if (k > 0 && j <= prev)
                    fail("block columns not ascending within band " +
                         std::to_string(band + 1) + " row " + std::to_string(br));
                prev = j;
            }
        }
    // Disjointness needs a second pass keyed by block row across bands.
    if (block_offsets.size() != static_cast<size_t>(n) * block_rows() + 1)
        fail("derived block offsets missing (finalize not run)");
    for (int br = 0; br < block_rows(); ++br) {
        for (int band = 0; band < n; ++band) {
            const size_t idx = static_cast<size_t>(band) * block_rows() + br;
            const size_t begin = block_offsets[idx];
            const size_t end = block_offsets[idx + 1];
            for (size_t k = begin; k < end; ++k) {
                const int j = static_cast<int>(nz_jidx[k]);
                if (seen[static_cast<size_t>(j)] == br)
                    fail("block (" + std::to_string(br) + "," + std::to_string(j) +
                         ") present in two bands");
                seen[static_cast<size_t>(j)] = br;
            }
        }
    }
}

void NestedCSRMatrix::finalize() {
    const int n = level_count();
    if (n < 1 || rows < 1 || block_m < 1 || rows % block_m != 0 ||
        nz_iidx.size() != static_cast<size_t>(n) * rows)
        throw FormatError(FormatError::Kind::Invariant,
                          invariant_msg("finalize on malformed header"));
    block_offsets.assign(static_cast<size_t>(n) * block_rows() + 1, 0);
    size_t acc = 0;
    for (int band = 0; band < n; ++band)
        for (int br = 0; br < block_rows(); ++br) {
            block_offsets[static_cast<size_t>(band) * block_rows() + br] = acc;
            acc += nz_iidx[static_cast<size_t>(band) * rows +
                           static_cast<size_t>(br) * block_m];
        }
    block_offsets.back() = acc;
    validate();
}

BandView band_view(const NestedCSRMatrix& m, int band) {
    if (band < 1 || band > m.level_count())
        throw std::out_of_range("band_view: band " + std::to_string(band) + " of " +
                                std::to_string(m.level_count()));
    BandView v;
    v.band = band;
    v.block_begin = m.cell_begin(band, 0);
    v.block_end = m.cell_end(band, m.block_rows() - 1);
    v.row_counts = &m.nz_iidx[static_cast<size_t>(band - 1) * m.rows];
    return v;
}

NestedCSRMatrix encode(const Matrix& weights, const NestedMaskSet& masks) {
    const int n = masks.count();
    if (n < 1) throw NestingViolationError("encode: empty mask set");
    if (!masks_nested(masks))
        throw NestingViolationError("encode: mask supports are not nested");
    const BlockMask& base = masks.masks[0];
    if (base.rows != weights.rows || base.cols != weights.cols)
        throw DimensionError("encode: weights " + std::to_string(weights.rows) + "x" +
                             std::to_string(weights.cols) + " vs masks " +
                             std::to_string(base.rows) + "x" + std::to_string(base.cols));

    NestedCSRMatrix m;
    m.rows = weights.rows;
    m.cols = weights.cols;
    m.block_m = masks.levels.block_m;
    m.block_n = masks.levels.block_n;
    m.levels_pm.reserve(static_cast<size_t>(n));
    for (float s : masks.levels.levels) m.levels_pm.push_back(to_per_mille(s));
    for (int i = 1; i < n; ++i)
        if (m.levels_pm[static_cast<size_t>(i)] <= m.levels_pm[static_cast<size_t>(i - 1)])
            throw std::invalid_argument(
                "encode: sparsity levels collide in per-mille representation");

    const Matrix w = apply_mask(weights, base);

    // Band of a block = N - (number of levels that keep it) + 1; nesting
    // makes the kept levels a prefix, so counting level hits suffices.
    const int grid_rows = m.block_rows();
    const int grid_cols = m.block_cols();
    std::vector<int8_t> band_of(static_cast<size_t>(grid_rows) * grid_cols, 0);
    for (int br = 0; br < grid_rows; ++br)
        for (int bc = 0; bc < grid_cols; ++bc) {
            int kept = 0;
            for (int li = 0; li < n; ++li)
                if (masks.masks[static_cast<size_t>(li)].at(br * m.block_m,
                                                            bc * m.block_n))
                    ++kept;
                else
                    break;
            band_of[static_cast<size_t>(br) * grid_cols + bc] =
                static_cast<int8_t>(kept == 0 ? 0 : n - kept + 1);
        }

    m.nz_iidx.assign(static_cast<size_t>(n) * m.rows, 0);
    for (int band = 1; band <= n; ++band)
        for (int br = 0; br < grid_rows; ++br)
            for (int bc = 0; bc < grid_cols; ++bc) {
                if (band_of[static_cast<size_t>(br) * grid_cols + bc] != band) continue;
                m.nz_jidx.push_back(static_cast<uint32_t>(bc));
                ++m.nz_iidx[static_cast<size_t>(band - 1) * m.rows +
                            static_cast<size_t>(br) * m.block_m];
                for (int mi = 0; mi < m.block_m; ++mi)
                    for (int ni = 0; ni < m.block_n; ++ni)
                        m.values_f32.push_back(
                            w.at(br * m.block_m + mi, bc * m.block_n + ni));
            }

    m.finalize();
    return m;
}

Matrix decode(const NestedCSRMatrix& m, int level_index) {
    if (level_index < 1 || level_index > m.level_count())
        throw std::out_of_range("decode: level " + std::to_string(level_index) +
                                " outside [1," + std::to_string(m.level_count()) + "]");
    if (m.dtype != ValueType::F32)
        throw std::invalid_argument("decode: payload is not f32");
    Matrix out(m.rows, m.cols);
    const int bs = m.block_size();
    for (int band = 1; band <= m.bands_for_level(level_index); ++band)
        for (int br = 0; br < m.block_rows(); ++br)
            for (size_t k = m.cell_begin(band, br); k < m.cell_end(band, br); ++k) {
                const int bc = static_cast<int>(m.nz_jidx[k]);
                const float* v = &m.values_f32[k * static_cast<size_t>(bs)];
                for (int mi = 0; mi < m.block_m; ++mi)
                    for (int ni = 0; ni < m.block_n; ++ni)
                        out.at(br * m.block_m + mi, bc * m.block_n + ni) =
                            v[mi * m.block_n + ni];
            }
    return out;
}

FootprintReport footprint(const NestedCSRMatrix& m, int value_bytes, int index_bytes) {
    FootprintReport r;
    r.values_bytes = m.block_count() * static_cast<size_t>(m.block_size()) *
                     static_cast<size_t>(value_bytes);
    r.iidx_bytes = m.nz_iidx.size() * static_cast<size_t>(index_bytes);
    r.jidx_bytes = m.nz_jidx.size() * static_cast<size_t>(index_bytes);
    r.total_bytes = r.values_bytes + r.iidx_bytes + r.jidx_bytes;
    return r;
}

std::vector<uint8_t> serialize(const NestedCSRMatrix& m) {
    detail::ByteWriter w;
    w.out.reserve(16 + m.levels_pm.size() * 2 + m.nz_iidx.size() * 4 +
                  m.nz_jidx.size() * 4 + m.values_f32.size() * 4 + m.values_i8.size());
    for (char c : kMagic) w.u8(static_cast<uint8_t>(c));
    w.u16(kFormatVersion);
    w.u32(static_cast<uint32_t>(m.rows));
    w.u32(static_cast<uint32_t>(m.cols));
    w.u8(static_cast<uint8_t>(m.block_m));
    w.u8(static_cast<uint8_t>(m.block_n));
    w.u8(static_cast<uint8_t>(m.level_count()));
    for (uint16_t pm : m.levels_pm) w.u16(pm);
    w.u8(static_cast<uint8_t>(m.dtype));
    for (uint32_t v : m.nz_iidx) w.u32(v);
    for (uint32_t v : m.nz_jidx) w.u32(v);
    if (m.dtype == ValueType::F32)
        for (float v : m.values_f32) w.f32(v);
    else
        for (int8_t v : m.values_i8) w.u8(static_cast<uint8_t>(v));
    return w.out;
}

NestedCSRMatrix deserialize(const std::vector<uint8_t>& bytes) {
    detail::ByteReader r{bytes, "NestedCSR"};
    r.need(4, "magic");
    if (std::memcmp(&bytes[0], kMagic, 4) != 0)
        throw FormatError(FormatError::Kind::BadMagic, "not a NestedCSR stream");
    r.pos = 4;
    const uint16_t version = r.u16("version");
    if (version != kFormatVersion)
        throw FormatError(FormatError::Kind::BadVersion,
                          "unsupported NestedCSR version " + std::to_string(version));

    NestedCSRMatrix m;
    const uint32_t rows = r.u32("rows");
    const uint32_t cols = r.u32("cols");
    const uint8_t block_m = r.u8("block_m");
    const uint8_t block_n = r.u8("block_n");
    const uint8_t n = r.u8("level count");
    if (rows == 0 || cols == 0 || block_m == 0 || block_n == 0 || n == 0)
        throw FormatError(FormatError::Kind::Invariant,
                          invariant_msg("zero extent in header"));
    if (rows > (1u << 24) || cols > (1u << 24))
        throw FormatError(FormatError::Kind::Invariant,
                          invariant_msg("implausible matrix extent"));
    m.rows = static_cast<int>(rows);
    m.cols = static_cast<int>(cols);
    m.block_m = block_m;
    m.block_n = block_n;
    m.levels_pm.resize(n);
    for (int i = 0; i < n; ++i) m.levels_pm[static_cast<size_t>(i)] = r.u16("levels");
    const uint8_t tag = r.u8("dtype");
    if (tag > 1)
        throw FormatError(FormatError::Kind::Invariant,
                          invariant_msg("unknown dtype tag " + std::to_string(tag)));
    m.dtype = static_cast<ValueType>(tag);

    const uint64_t iidx_len = static_cast<uint64_t>(n) * rows;
    r.need(iidx_len * 4, "nz_iidx");
    m.nz_iidx.resize(iidx_len);
    for (uint64_t i = 0; i < iidx_len; ++i) m.nz_iidx[i] = r.u32("nz_iidx");

    uint64_t blocks = 0;
    for (uint32_t c : m.nz_iidx) blocks += c;
    // A block costs at least 4 jidx bytes, so a sum beyond the stream size
    // is bogus; rejecting it here keeps the multiplications below in range.
    if (blocks > bytes.size())
        throw FormatError(FormatError::Kind::Truncated,
                          "NestedCSR stream truncated in nz_jidx");
    r.need(blocks * 4, "nz_jidx");
    m.nz_jidx.resize(blocks);
    for (uint64_t i = 0; i < blocks; ++i) m.nz_jidx[i] = r.u32("nz_jidx");

    const uint64_t value_count =
        blocks * static_cast<uint64_t>(block_m) * static_cast<uint64_t>(block_n);
    if (m.dtype == ValueType::F32) {
        r.need(value_count * 4, "values");
        m.values_f32.resize(value_count);
        for (uint64_t i = 0; i < value_count; ++i) m.values_f32[i] = r.f32("values");
    } else {
        r.need(value_count, "values");
        m.values_i8.resize(value_count);
        for (uint64_t i = 0; i < value_count; ++i)
            m.values_i8[i] = static_cast<int8_t>(r.u8("values"));
    }
    if (r.pos != bytes.size())
        throw FormatError(FormatError::Kind::Invariant,
                          invariant_msg(std::to_string(bytes.size() - r.pos) +
                                        " trailing bytes"));
    m.finalize();
    return m;
}

bool structurally_equal(const NestedCSRMatrix& a, const NestedCSRMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols || a.block_m != b.block_m ||
        a.block_n != b.block_n || a.levels_pm != b.levels_pm || a.dtype != b.dtype ||
        a.nz_iidx != b.nz_iidx || a.nz_jidx != b.nz_jidx ||
        a.values_i8 != b.values_i8 || a.values_f32.size() != b.values_f32.size())
        return false;
    return a.values_f32.empty() ||
           std::memcmp(a.values_f32.data(), b.values_f32.data(),
                       a.values_f32.size() * sizeof(float)) == 0;
}

}  // namespace nsc
