#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "psido/errors.hpp"

namespace psido {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kTwoPiSq = kTwoPi * kTwoPi;

/// Regular 2D grid. Points are stored z-major: index = iz * nx + ix, with
/// x = ix * dx and z = iz * dz (z is depth).
struct Grid2D {
    int nx = 0;
    int nz = 0;
    double dx = 1.0;
    double dz = 1.0;

    Grid2D() = default;
    Grid2D(int nx_, int nz_, double dx_ = 1.0, double dz_ = 1.0) : nx(nx_), nz(nz_), dx(dx_), dz(dz_) {
        if (nx < 4 || nz < 4) throw InvalidArgument("Grid2D: nx and nz must be >= 4");
        if (!(dx > 0.0) || !(dz > 0.0)) throw InvalidArgument("Grid2D: spacings must be positive");
    }

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(nz); }
    [[nodiscard]] double cell_area() const { return dx * dz; }
    [[nodiscard]] int index(int ix, int iz) const { return iz * nx + ix; }
    [[nodiscard]] int ix_of(int idx) const { return idx % nx; }
    [[nodiscard]] int iz_of(int idx) const { return idx / nx; }
    [[nodiscard]] double x_of(int ix) const { return ix * dx; }
    [[nodiscard]] double z_of(int iz) const { return iz * dz; }
    /// Physical extents used by the benchmark symbol: coordinate of the last grid line.
    [[nodiscard]] double x_max() const { return (nx - 1) * dx; }
    [[nodiscard]] double z_max() const { return (nz - 1) * dz; }

    /// Signed DFT wavenumber index in [-n/2, n/2).
    static int signed_index(int j, int n) { return j < (n + 1) / 2 ? j : j - n; }
    [[nodiscard]] double xi_x(int jx) const { return kTwoPi * signed_index(jx, nx) / (nx * dx); }
    [[nodiscard]] double xi_z(int jz) const { return kTwoPi * signed_index(jz, nz) / (nz * dz); }
    [[nodiscard]] double dxi_x() const { return kTwoPi / (nx * dx); }
    [[nodiscard]] double dxi_z() const { return kTwoPi / (nz * dz); }
    [[nodiscard]] double nyquist() const { return std::numbers::pi / std::max(dx, dz); }

    /// Index of the frequency -xi for the frequency stored at `idx`.
    [[nodiscard]] int negated_frequency_index(int idx) const {
        const int jx = ix_of(idx);
        const int jz = iz_of(idx);
        return index((nx - jx) % nx, (nz - jz) % nz);
    }

    friend bool operator==(const Grid2D& a, const Grid2D& b) {
        return a.nx == b.nx && a.nz == b.nz && a.dx == b.dx && a.dz == b.dz;
    }
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where) {
    if (!(a == b)) throw GridMismatch(std::string(where) + ": grid mismatch");
}

/// Real-valued function sampled on a grid.
struct Field {
    Grid2D grid;
    RealVector values;

    Field() = default;
    explicit Field(const Grid2D& g) : grid(g), values(RealVector::Zero(static_cast<Eigen::Index>(g.size()))) {}
    Field(const Grid2D& g, RealVector v) : grid(g), values(std::move(v)) {
        if (values.size() != static_cast<Eigen::Index>(g.size())) throw InvalidArgument("Field: length does not match grid");
    }

    static Field constant(const Grid2D& g, double c) { return Field(g, RealVector::Constant(static_cast<Eigen::Index>(g.size()), c)); }

    [[nodiscard]] double& at(int ix, int iz) { return values[grid.index(ix, iz)]; }
    [[nodiscard]] double at(int ix, int iz) const { return values[grid.index(ix, iz)]; }
    [[nodiscard]] bool finite() const { return values.allFinite(); }

    Field& operator+=(const Field& o) { require_same_grid(grid, o.grid, "Field+="); values += o.values; return *this; }
    Field& operator-=(const Field& o) { require_same_grid(grid, o.grid, "Field-="); values -= o.values; return *this; }
    Field& operator*=(double s) { values *= s; return *this; }
    friend Field operator+(Field a, const Field& b) { a += b; return a; }
    friend Field operator-(Field a, const Field& b) { a -= b; return a; }
    friend Field operator*(double s, Field a) { a *= s; return a; }
    friend Field operator*(Field a, double s) { a *= s; return a; }
};

/// Complex function on the discrete frequency grid (unshifted DFT order).
struct Spectrum {
    Grid2D grid;
    ComplexVector values;

    Spectrum() = default;
    explicit Spectrum(const Grid2D& g) : grid(g), values(ComplexVector::Zero(static_cast<Eigen::Index>(g.size()))) {}
    Spectrum(const Grid2D& g, ComplexVector v) : grid(g), values(std::move(v)) {
        if (values.size() != static_cast<Eigen::Index>(g.size())) throw InvalidArgument("Spectrum: length does not match grid");
    }
};

/// Area-weighted inner product <u, v> = sum u v dx dz.
inline double dot(const Field& u, const Field& v) {
    require_same_grid(u.grid, v.grid, "dot");
    return u.values.dot(v.values) * u.grid.cell_area();
}

inline double norm(const Field& u) { return std::sqrt(dot(u, u)); }

/// Pointwise product.
inline Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid, "hadamard");
    return Field(a.grid, a.values.cwiseProduct(b.values));
}

/// Angular frequency coordinates in DFT index layout.
struct FreqGrid {
    Grid2D grid;
    RealVector xi_x;  // length nx
    RealVector xi_z;  // length nz

    [[nodiscard]] double magnitude(int idx) const {
        const double a = xi_x[grid.ix_of(idx)];
        const double b = xi_z[grid.iz_of(idx)];
        return std::hypot(a, b);
    }
    [[nodiscard]] double angle(int idx) const { return std::atan2(xi_z[grid.iz_of(idx)], xi_x[grid.ix_of(idx)]); }
    [[nodiscard]] double kx(int idx) const { return xi_x[grid.ix_of(idx)]; }
    [[nodiscard]] double kz(int idx) const { return xi_z[grid.iz_of(idx)]; }
};

inline FreqGrid freq_coords(const Grid2D& g) {
    FreqGrid f{g, RealVector(g.nx), RealVector(g.nz)};
    for (int j = 0; j < g.nx; ++j) f.xi_x[j] = g.xi_x(j);
    for (int j = 0; j < g.nz; ++j) f.xi_z[j] = g.xi_z(j);
    return f;
}

/// |xi| for every frequency index.
inline RealVector frequency_magnitudes(const Grid2D& g) {
    const FreqGrid f = freq_coords(g);
    RealVector out(static_cast<Eigen::Index>(g.size()));
    for (int i = 0; i < out.size(); ++i) out[i] = f.magnitude(i);
    return out;
}

}  // namespace psido
