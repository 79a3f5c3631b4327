#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "pptkit/error.hpp"

// Little-endian field encoding shared by the binary formats.
namespace pptkit::detail {

template <class T>
void put_le(std::string& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
    }
}

inline void put_f32(std::string& out, float value) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
}

template <class T>
T get_le(const unsigned char* p) {
    static_assert(std::is_unsigned_v<T>);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
    return value;
}

/// Reads exactly n bytes or throws TruncationError at the offset where the
/// stream ran dry.
inline void read_exact(std::istream& in, void* dst, std::size_t n, std::uint64_t offset,
                       const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::uint64_t>(in.gcount());
    if (got != n) throw TruncationError(std::string("truncated ") + what, offset + got);
}

inline void check_magic(std::string_view found, std::string_view expected) {
    if (found != expected) {
        std::string shown;
        for (char c : found) shown.push_back((c >= 0x20 && c < 0x7f) ? c : '?');
        throw FormatError("bad magic: expected '" + std::string(expected) + "', found '" + shown + "'");
    }
}

inline void write_all(std::ostream& out, const std::string& bytes) {
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed");
}

/// 64-bit FNV-1a, used for content hashes in file headers.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace pptkit::detail
