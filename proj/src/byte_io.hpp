#ifndef NSC_SRC_BYTE_IO_HPP
#define NSC_SRC_BYTE_IO_HPP

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "nsc/errors.hpp"

namespace nsc::detail {

// Little-endian append-only buffer shared by all file formats.
struct ByteWriter {
    std::vector<uint8_t> out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) {
        out.push_back(static_cast<uint8_t>(v));
        out.push_back(static_cast<uint8_t>(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void bytes(const uint8_t* data, size_t len) { out.insert(out.end(), data, data + len); }
};

// Bounds-checked little-endian cursor. `format` names the stream in
// truncation errors.
struct ByteReader {
    const std::vector<uint8_t>& in;
    const char* format;
    size_t pos = 0;

    void need(size_t n, const char* what) {
        if (in.size() - pos < n)
            throw FormatError(FormatError::Kind::Truncated,
                              std::string(format) + " stream truncated in " + what);
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return in[pos++];
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(in[pos] | (in[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* what) {
        const uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace nsc::detail

#endif
