#pragma once

// Pseudo-differential operators with separated (low-rank) symbols
//
//   s(x, xi) = sum_k a_k(x) b_k(xi),      H v = sum_k a_k . F^-1 (b_k . F v)
//
// Applying H costs one forward and r inverse transforms. Spatial factors may be
// complex (PSF+ produces complex coefficient fields); the operator acting on a
// real field returns the real part.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psido/fft.hpp"
#include "psido/hpf1.hpp"
#include "psido/operator.hpp"

namespace psido {

class LowRankSymbol {
public:
    LowRankSymbol() = default;

    LowRankSymbol(const Grid2D& grid, std::vector<ComplexVector> spatial, std::vector<ComplexVector> frequency)
        : grid_(grid), spatial_(std::move(spatial)), frequency_(std::move(frequency)) {
        validate();
    }

    static LowRankSymbol from_real(const Grid2D& grid, const std::vector<Field>& spatial,
                                   std::vector<ComplexVector> frequency) {
        std::vector<ComplexVector> a;
        a.reserve(spatial.size());
        for (const Field& f : spatial) {
            require_same_grid(grid, f.grid, "LowRankSymbol::from_real");
            a.push_back(f.values.cast<Complex>());
        }
        return LowRankSymbol(grid, std::move(a), std::move(frequency));
    }

    /// Rank-1 symbol a(x) b(xi).
    static LowRankSymbol separable(const Field& a, const ComplexVector& b) {
        return from_real(a.grid, {a}, {b});
    }

    static LowRankSymbol identity(const Grid2D& g) {
        return separable(Field::constant(g, 1.0), ComplexVector::Ones(static_cast<Eigen::Index>(g.size())));
    }

    /// Fourier multiplier m(xi), constant in x.
    static LowRankSymbol multiplier(const Grid2D& g, const RealVector& m) {
        return separable(Field::constant(g, 1.0), m.cast<Complex>());
    }

    [[nodiscard]] const Grid2D& grid() const { return grid_; }
    [[nodiscard]] int rank() const { return static_cast<int>(spatial_.size()); }
    [[nodiscard]] const std::vector<ComplexVector>& spatial_factors() const { return spatial_; }
    [[nodiscard]] const std::vector<ComplexVector>& frequency_factors() const { return frequency_; }

    /// Point value s(x_i, xi_j).
    [[nodiscard]] Complex value(int point, int freq) const {
        Complex s = 0.0;
        for (int k = 0; k < rank(); ++k) s += spatial_[k][point] * frequency_[k][freq];
        return s;
    }

private:
    void validate() const {
        if (spatial_.empty()) throw InvalidArgument("LowRankSymbol: rank must be >= 1");
        if (spatial_.size() != frequency_.size()) throw InvalidArgument("LowRankSymbol: factor counts differ");
        const auto n = static_cast<Eigen::Index>(grid_.size());
        for (std::size_t k = 0; k < spatial_.size(); ++k) {
            if (spatial_[k].size() != n || frequency_[k].size() != n) throw GridMismatch("LowRankSymbol: factor length");
            if (!spatial_[k].allFinite() || !frequency_[k].allFinite()) throw InvalidArgument("LowRankSymbol: non-finite factor");
        }
    }

    Grid2D grid_;
    std::vector<ComplexVector> spatial_;
    std::vector<ComplexVector> frequency_;
};

/// Complex-valued H v; the imaginary part is a diagnostic of symbol asymmetry.
inline ComplexVector psido_apply_complex(const LowRankSymbol& sym, const Field& v) {
    require_same_grid(sym.grid(), v.grid, "psido_apply");
    const Grid2D& g = sym.grid();
    const ComplexVector vhat = forward_complex(g, v.values.cast<Complex>());
    ComplexVector out = ComplexVector::Zero(vhat.size());
    for (int k = 0; k < sym.rank(); ++k) {
        const ComplexVector t = inverse_complex(g, sym.frequency_factors()[k].cwiseProduct(vhat));
        out += sym.spatial_factors()[k].cwiseProduct(t);
    }
    return out;
}

inline Field psido_apply(const LowRankSymbol& sym, const Field& v) {
    return Field(v.grid, psido_apply_complex(sym, v).real());
}

/// Adjoint in the area-weighted inner product:
/// H^T v = sum_k F^-1( conj(b_k) . F( conj(a_k) . v ) ).
inline Field psido_apply_adjoint(const LowRankSymbol& sym, const Field& v) {
    require_same_grid(sym.grid(), v.grid, "psido_apply_adjoint");
    const Grid2D& g = sym.grid();
    const ComplexVector vc = v.values.cast<Complex>();
    ComplexVector acc = ComplexVector::Zero(vc.size());
    for (int k = 0; k < sym.rank(); ++k) {
        const ComplexVector t = forward_complex(g, sym.spatial_factors()[k].conjugate().cwiseProduct(vc));
        acc += sym.frequency_factors()[k].conjugate().cwiseProduct(t);
    }
    return Field(g, inverse_complex(g, acc).real());
}

/// 0.5 (H + H^T) v.
inline Field psido_apply_symmetric(const LowRankSymbol& sym, const Field& v) {
    Field out = psido_apply(sym, v);
    out += psido_apply_adjoint(sym, v);
    out *= 0.5;
    return out;
}

inline LinearOperator as_operator(const LowRankSymbol& sym) {
    return LinearOperator(sym.grid(), [sym](const Field& v) { return psido_apply(sym, v); });
}
inline LinearOperator as_adjoint_operator(const LowRankSymbol& sym) {
    return LinearOperator(sym.grid(), [sym](const Field& v) { return psido_apply_adjoint(sym, v); });
}
inline LinearOperator as_symmetric_operator(const LowRankSymbol& sym) {
    return LinearOperator(sym.grid(), [sym](const Field& v) { return psido_apply_symmetric(sym, v); });
}

/// Symbol rows s(x_i, .) for the given point indices (|points| x N).
inline ComplexMatrix eval_symbol_rows(const LowRankSymbol& sym, const std::vector<int>& points) {
    const auto n = static_cast<Eigen::Index>(sym.grid().size());
    ComplexMatrix rows = ComplexMatrix::Zero(static_cast<Eigen::Index>(points.size()), n);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] < 0 || points[i] >= n) throw IndexOutOfRange("eval_symbol_rows: point index out of range");
        for (int k = 0; k < sym.rank(); ++k)
            rows.row(static_cast<Eigen::Index>(i)) += sym.spatial_factors()[k][points[i]] * sym.frequency_factors()[k].transpose();
    }
    return rows;
}

/// Symbol columns s(., xi_j) for the given frequency indices (N x |freqs|).
inline ComplexMatrix eval_symbol_cols(const LowRankSymbol& sym, const std::vector<int>& freqs) {
    const auto n = static_cast<Eigen::Index>(sym.grid().size());
    ComplexMatrix cols = ComplexMatrix::Zero(n, static_cast<Eigen::Index>(freqs.size()));
    for (std::size_t j = 0; j < freqs.size(); ++j) {
        if (freqs[j] < 0 || freqs[j] >= n) throw IndexOutOfRange("eval_symbol_cols: frequency index out of range");
        for (int k = 0; k < sym.rank(); ++k)
            cols.col(static_cast<Eigen::Index>(j)) += sym.frequency_factors()[k][freqs[j]] * sym.spatial_factors()[k];
    }
    return cols;
}

inline constexpr std::size_t kDenseLimit = 4096;

/// Dense matrix of a linear operator; column j is apply(e_j). Test oracle only.
inline RealMatrix dense_materialize(const LinearOperator& op) {
    const std::size_t n = op.dims();
    if (n > kDenseLimit) throw TooLarge("dense_materialize: N = " + std::to_string(n) + " exceeds 4096");
    RealMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Field e(op.grid());
    for (std::size_t j = 0; j < n; ++j) {
        e.values.setZero();
        e.values[static_cast<Eigen::Index>(j)] = 1.0;
        m.col(static_cast<Eigen::Index>(j)) = op.apply(e).values;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Persistence: <dir>/manifest.json plus a_<k>.hpf / b_<k>.hpf per factor.

inline void save_symbol(const std::filesystem::path& dir, const LowRankSymbol& sym, nlohmann::json extra = {}) {
    std::filesystem::create_directories(dir);
    const Grid2D& g = sym.grid();
    nlohmann::json manifest = {
        {"kind", "low_rank_symbol"}, {"rank", sym.rank()}, {"nx", g.nx}, {"nz", g.nz}, {"dx", g.dx}, {"dz", g.dz}};
    if (!extra.is_null()) manifest["meta"] = std::move(extra);
    for (int k = 0; k < sym.rank(); ++k) {
        hpf1::write(dir / ("a_" + std::to_string(k) + ".hpf"), hpf1::from_complex_field(g, sym.spatial_factors()[k]));
        hpf1::write(dir / ("b_" + std::to_string(k) + ".hpf"), hpf1::from_complex_field(g, sym.frequency_factors()[k]));
    }
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

inline LowRankSymbol load_symbol(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw MissingArtifacts("load_symbol: no manifest in " + dir.string());
    const nlohmann::json m = nlohmann::json::parse(is);
    const Grid2D g(m.at("nx").get<int>(), m.at("nz").get<int>(), m.at("dx").get<double>(), m.at("dz").get<double>());
    const int r = m.at("rank").get<int>();
    std::vector<ComplexVector> a, b;
    for (int k = 0; k < r; ++k) {
        a.push_back(hpf1::to_complex_vector(hpf1::read(dir / ("a_" + std::to_string(k) + ".hpf"))));
        b.push_back(hpf1::to_complex_vector(hpf1::read(dir / ("b_" + std::to_string(k) + ".hpf"))));
    }
    return LowRankSymbol(g, std::move(a), std::move(b));
}

}  // namespace psido
