#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

#include "chaoslab/errors.hpp"

namespace chaoslab::binary {

// Little-endian scalar I/O used by every on-disk format in the project.

inline constexpr std::array<char, 4> kMagic{'C', 'H', 'A', 'O'};

template <typename T>
T byteswap_if_big(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::array<unsigned char, sizeof(T)> bytes;
        std::memcpy(bytes.data(), &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        std::memcpy(&v, bytes.data(), sizeof(T));
        return v;
    }
}

template <typename T>
void put(std::ostream& os, T v) {
    v = byteswap_if_big(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    if (!os) throw IoError("binary write failed");
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("unexpected end of binary stream");
    return byteswap_if_big(v);
}

inline void put_magic(std::ostream& os) {
    os.write(kMagic.data(), kMagic.size());
    if (!os) throw IoError("binary write failed");
}

inline void expect_magic(std::istream& is) {
    std::array<char, 4> m{};
    is.read(m.data(), m.size());
    if (!is || m != kMagic) throw IoError("bad magic: not a CHAO file");
}

} // namespace chaoslab::binary
