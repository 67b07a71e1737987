#pragma once

// HPF1 binary arrays.
//
//   bytes 0..3   magic "HPF1"
//   u32 LE       rank word: low 8 bits = rank (1 or 2), bit 31 set for complex data
//   u32 LE       dim0
//   u32 LE       dim1 (1 for rank-1 arrays)
//   f64 LE ...   dim0*dim1 values in row-major order; complex values are
//                interleaved (re, im)
//
// Fields are stored as rank-2 arrays with dim0 = nz and dim1 = nx.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "psido/grid.hpp"

namespace psido::hpf1 {

inline constexpr std::uint32_t kComplexFlag = 0x80000000u;

struct Array {
    std::uint32_t rank = 1;
    bool is_complex = false;
    std::uint32_t dim0 = 0;
    std::uint32_t dim1 = 1;
    std::vector<double> payload;  // interleaved when complex

    [[nodiscard]] std::size_t count() const { return static_cast<std::size_t>(dim0) * dim1; }
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    if (!is) throw FormatError("HPF1: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &d, sizeof bits);
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b.data()), 8);
}

inline double get_f64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw FormatError("HPF1: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d = 0.0;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

}  // namespace detail

inline void write(const std::filesystem::path& path, const Array& a) {
    const std::size_t expected = a.count() * (a.is_complex ? 2 : 1);
    if (a.payload.size() != expected) throw FormatError("HPF1: payload size does not match dims");
    if (a.rank < 1 || a.rank > 2) throw FormatError("HPF1: rank must be 1 or 2");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("HPF1: cannot open " + path.string() + " for writing");
    os.write("HPF1", 4);
    detail::put_u32(os, a.rank | (a.is_complex ? kComplexFlag : 0u));
    detail::put_u32(os, a.dim0);
    detail::put_u32(os, a.dim1);
    for (double d : a.payload) detail::put_f64(os, d);
    if (!os) throw FormatError("HPF1: write failed for " + path.string());
}

inline Array read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("HPF1: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "HPF1", 4) != 0) throw FormatError("HPF1: bad magic in " + path.string());
    Array a;
    const std::uint32_t word = detail::get_u32(is);
    a.is_complex = (word & kComplexFlag) != 0;
    a.rank = word & 0xffu;
    if (a.rank < 1 || a.rank > 2) throw FormatError("HPF1: unsupported rank");
    a.dim0 = detail::get_u32(is);
    a.dim1 = detail::get_u32(is);
    const std::size_t n = a.count() * (a.is_complex ? 2 : 1);
    a.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i) a.payload[i] = detail::get_f64(is);
    return a;
}

inline Array from_vector(const RealVector& v) {
    Array a;
    a.rank = 1;
    a.dim0 = static_cast<std::uint32_t>(v.size());
    a.payload.assign(v.data(), v.data() + v.size());
    return a;
}

inline Array from_complex_vector(const ComplexVector& v) {
    Array a;
    a.rank = 1;
    a.is_complex = true;
    a.dim0 = static_cast<std::uint32_t>(v.size());
    a.payload.reserve(2 * static_cast<std::size_t>(v.size()));
    for (const Complex& c : v) {
        a.payload.push_back(c.real());
        a.payload.push_back(c.imag());
    }
    return a;
}

inline Array from_field(const Field& f) {
    Array a = from_vector(f.values);
    a.rank = 2;
    a.dim0 = static_cast<std::uint32_t>(f.grid.nz);
    a.dim1 = static_cast<std::uint32_t>(f.grid.nx);
    return a;
}

inline Array from_complex_field(const Grid2D& g, const ComplexVector& v) {
    Array a = from_complex_vector(v);
    a.rank = 2;
    a.dim0 = static_cast<std::uint32_t>(g.nz);
    a.dim1 = static_cast<std::uint32_t>(g.nx);
    return a;
}

inline Array from_matrix(const RealMatrix& m) {
    Array a;
    a.rank = 2;
    a.dim0 = static_cast<std::uint32_t>(m.rows());
    a.dim1 = static_cast<std::uint32_t>(m.cols());
    a.payload.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.payload.push_back(m(i, j));
    return a;
}

inline RealVector to_vector(const Array& a) {
    if (a.is_complex) throw FormatError("HPF1: expected real data");
    return Eigen::Map<const RealVector>(a.payload.data(), static_cast<Eigen::Index>(a.payload.size()));
}

inline ComplexVector to_complex_vector(const Array& a) {
    if (!a.is_complex) throw FormatError("HPF1: expected complex data");
    ComplexVector v(static_cast<Eigen::Index>(a.count()));
    for (std::size_t i = 0; i < a.count(); ++i) v[static_cast<Eigen::Index>(i)] = Complex(a.payload[2 * i], a.payload[2 * i + 1]);
    return v;
}

inline RealMatrix to_matrix(const Array& a) {
    if (a.is_complex) throw FormatError("HPF1: expected real data");
    RealMatrix m(a.dim0, a.dim1);
    for (std::uint32_t i = 0; i < a.dim0; ++i)
        for (std::uint32_t j = 0; j < a.dim1; ++j) m(i, j) = a.payload[static_cast<std::size_t>(i) * a.dim1 + j];
    return m;
}

inline Field to_field(const Array& a, const Grid2D& g) {
    if (a.dim0 * a.dim1 != g.size()) throw GridMismatch("HPF1: array size does not match grid");
    if (a.rank == 2 && (a.dim0 != static_cast<std::uint32_t>(g.nz) || a.dim1 != static_cast<std::uint32_t>(g.nx)))
        throw GridMismatch("HPF1: field dims do not match grid");
    return Field(g, to_vector(a));
}

inline void write_field(const std::filesystem::path& p, const Field& f) { write(p, from_field(f)); }
inline Field read_field(const std::filesystem::path& p, const Grid2D& g) { return to_field(read(p), g); }
inline void write_vector(const std::filesystem::path& p, const RealVector& v) { write(p, from_vector(v)); }
inline RealVector read_vector(const std::filesystem::path& p) { return to_vector(read(p)); }

}  // namespace psido::hpf1
