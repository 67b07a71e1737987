#pragma once

#include <cmath>
#include <complex>

#include "psido/psido.hpp"
#include "psido/random.hpp"

namespace testutil {

using namespace psido;

inline Field random_field(const Grid2D& g, Rng& rng) {
    return Field(g, standard_normal(rng, static_cast<Eigen::Index>(g.size())));
}

inline double rel_err(const RealVector& a, const RealVector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel_err(const Field& a, const Field& b) { return rel_err(a.values, b.values); }

// Direct O(N^2) evaluation of the forward transform: sum_x f(x) e^{-i x.xi} dx dz / (2 pi)^2.
inline ComplexMatrix naive_forward_matrix(const Grid2D& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    ComplexMatrix f(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const int jx = g.ix_of(static_cast<int>(k)), jz = g.iz_of(static_cast<int>(k));
        for (Eigen::Index p = 0; p < n; ++p) {
            const int ix = g.ix_of(static_cast<int>(p)), iz = g.iz_of(static_cast<int>(p));
            const double ph = -kTwoPi * (static_cast<double>(jx) * ix / g.nx + static_cast<double>(jz) * iz / g.nz);
            f(k, p) = std::polar(g.cell_area() / kTwoPiSq, ph);
        }
    }
    return f;
}

// Dense matrix of a symbol operator built entry by entry from
// (H v)(x) = sum_xi e^{i x.xi} s(x, xi) vhat(xi) * (2 pi)^2 / (N dx dz).
inline RealMatrix naive_symbol_matrix(const LowRankSymbol& sym) {
    const Grid2D& g = sym.grid();
    const auto n = static_cast<Eigen::Index>(g.size());
    const ComplexMatrix f = naive_forward_matrix(g);
    ComplexMatrix h(n, n);
    const double inv = kTwoPiSq / (static_cast<double>(n) * g.cell_area());
    for (Eigen::Index x = 0; x < n; ++x) {
        const int ix = g.ix_of(static_cast<int>(x)), iz = g.iz_of(static_cast<int>(x));
        ComplexVector row(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const int jx = g.ix_of(static_cast<int>(k)), jz = g.iz_of(static_cast<int>(k));
            const double ph = kTwoPi * (static_cast<double>(jx) * ix / g.nx + static_cast<double>(jz) * iz / g.nz);
            row[k] = std::polar(inv, ph) * sym.value(static_cast<int>(x), static_cast<int>(k));
        }
        h.row(x) = row.transpose() * f;
    }
    return h.real();
}

// Random symbol whose frequency factors are Hermitian, so it maps real fields to real fields.
inline LowRankSymbol random_symbol(const Grid2D& g, int rank, Rng& rng) {
    std::vector<Field> a;
    std::vector<ComplexVector> b;
    const auto n = static_cast<Eigen::Index>(g.size());
    for (int k = 0; k < rank; ++k) {
        a.push_back(random_field(g, rng));
        const RealVector re = standard_normal(rng, n), im = standard_normal(rng, n);
        ComplexVector bk(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int j = g.negated_frequency_index(static_cast<int>(i));
            bk[i] = Complex(0.5 * (re[i] + re[j]), 0.5 * (im[i] - im[j]));
        }
        b.push_back(bk);
    }
    return LowRankSymbol::from_real(g, a, b);
}

// Fully complex random symbol (spatial and frequency factors complex).
inline LowRankSymbol random_complex_symbol(const Grid2D& g, int rank, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(g.size());
    std::vector<ComplexVector> a, b;
    for (int k = 0; k < rank; ++k) {
        a.push_back(standard_normal(rng, n).cast<Complex>() + Complex(0, 1) * standard_normal(rng, n).cast<Complex>());
        b.push_back(standard_normal(rng, n).cast<Complex>() + Complex(0, 1) * standard_normal(rng, n).cast<Complex>());
    }
    return LowRankSymbol(g, a, b);
}

}  // namespace testutil
