#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "field.hpp"

namespace sf {

// SFLD snapshots: "SFLD", u32 version, u32 n, u32 d, then n^d float64,
// everything little-endian, row-major (x1 slow). A vector field is two
// consecutive records, a time series is records back to back.
namespace sfld {

inline constexpr std::uint32_t version = 1;

namespace detail {
template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}
template <class T>
void put(std::ostream& os, T v) {
    v = to_le(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated SFLD record");
    return to_le(v);
}
} // namespace detail

inline void write(std::ostream& os, const Field& f) {
    os.write("SFLD", 4);
    detail::put<std::uint32_t>(os, version);
    detail::put<std::uint32_t>(os, std::uint32_t(f.grid.n()));
    detail::put<std::uint32_t>(os, 2);
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(f.v.data()), std::streamsize(f.v.size() * sizeof(double)));
    } else {
        for (double x : f.v) detail::put(os, x);
    }
    if (!os) throw IoError("failed writing SFLD record");
}

inline void write(std::ostream& os, const VectorField& u) {
    write(os, u[0]);
    write(os, u[1]);
}

// Reads one record; returns false on clean end of stream.
inline bool read(std::istream& is, Field& out) {
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() == 0 && is.eof()) return false;
    if (!is || std::memcmp(magic, "SFLD", 4) != 0) throw IoError("not an SFLD record (bad magic)");
    auto ver = detail::get<std::uint32_t>(is);
    if (ver != version) throw IoError("unsupported SFLD version " + std::to_string(ver));
    auto n = detail::get<std::uint32_t>(is);
    auto d = detail::get<std::uint32_t>(is);
    if (d != 2) throw IoError("SFLD dimension " + std::to_string(d) + " is not supported (2D only)");
    Grid g{int(n)};
    out = Field(g);
    is.read(reinterpret_cast<char*>(out.v.data()), std::streamsize(out.v.size() * sizeof(double)));
    if (!is) throw IoError("truncated SFLD payload");
    if constexpr (std::endian::native != std::endian::little)
        for (auto& x : out.v) x = detail::to_le(x);
    return true;
}

inline void save(const std::string& path, const std::vector<Field>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    for (const auto& f : records) write(os, f);
}

inline void save(const std::string& path, const Field& f) { save(path, std::vector<Field>{f}); }

inline std::vector<Field> load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::vector<Field> out;
    Field f;
    while (read(is, f)) {
        if (!out.empty()) require_same(out.front().grid, f.grid);
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace sfld
} // namespace sf
