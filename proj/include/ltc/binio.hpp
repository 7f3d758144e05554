#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "ltc/error.hpp"
#include "ltc/matrix.hpp"

// Little-endian scalar I/O shared by the code-bank and checkpoint formats.
namespace ltc::binio {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b, 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_le(std::istream& is, int bytes) {
    unsigned char b[8] = {};
    is.read(reinterpret_cast<char*>(b), bytes);
    if (!is) throw FormatError("unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le(is, 4)); }
inline std::uint64_t get_u64(std::istream& is) { return get_le(is, 8); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le(is, 8)); }

inline void put_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
    char got[4] = {};
    is.read(got, 4);
    if (!is) throw FormatError("file too short for magic");
    if (std::string(got, 4) != std::string(magic, 4)) {
        throw FormatError("bad magic: expected '" + std::string(magic, 4) + "', found '" +
                          std::string(got, 4) + "'");
    }
}

// u32 rows, u32 cols, then rows*cols f64.
inline void put_matrix(std::ostream& os, const Matrix& m) {
    put_u32(os, static_cast<std::uint32_t>(m.rows()));
    put_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.flat()) put_f64(os, v);
}

inline Matrix get_matrix(std::istream& is) {
    const std::uint32_t r = get_u32(is);
    const std::uint32_t c = get_u32(is);
    // Guard against absurd sizes from corrupted headers before allocating.
    if (static_cast<std::uint64_t>(r) * c > (1ull << 32)) throw FormatError("matrix header too large");
    Matrix m(r, c);
    for (double& v : m.flat()) v = get_f64(is);
    return m;
}

} // namespace ltc::binio
