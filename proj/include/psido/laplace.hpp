#pragma once

// Factored Laplace approximation of the posterior
//
//   factor M:      symbol sqrt(s(x, xi)^2 + (delta + gamma |xi|^2)^2), s = square-root misfit symbol
//   inverse K:     pointwise reciprocal symbol, K ~ M^-1
//   correction:    E = K H K^T - I ~ U diag(d) U^T
//   sampler:       zeta = K^T (z + U ((1 + d)^(-1/2) - 1) U^T z)
//
// The sampler's covariance is K^T (I + U D U^T)^-1 K, so its precision is
// K^-1 (I + U D U^T) K^-T, which equals H whenever the correction captures E.
// quad_form evaluates that precision exactly through CG.

#include <filesystem>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "psido/linalg.hpp"
#include "psido/prior.hpp"
#include "psido/probing.hpp"

namespace psido {

struct SpdFactorOptions {
    int stride = 2;              // spacing (cells) of the sampling lattice for the combined symbol
    double compress_tol = 1e-4;  // singular values below tol * largest are dropped
    int max_rank = 0;            // 0: no cap
};

struct SpdFactor {
    LowRankSymbol factor;   // M
    LowRankSymbol inverse;  // K ~ M^-1
};

namespace detail {

inline std::vector<int> stride_lattice(int n, int stride) {
    std::vector<int> out;
    for (int i = 0; i < n; i += stride) out.push_back(i);
    if (out.back() != n - 1) out.push_back(n - 1);
    return out;
}

// Separated form of sum_k w_k(x) rows_k(xi), compressed by a truncated SVD of the rows.
inline LowRankSymbol compress_rows(const Grid2D& g, const RealMatrix& rows, const std::vector<Field>& weights,
                                   double tol, int max_rank) {
    RealMatrix gram = rows * rows.transpose();
    gram = 0.5 * (gram + gram.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram);
    const Eigen::Index k = gram.rows();
    const double top = std::max(es.eigenvalues()[k - 1], 0.0);
    RealMatrix wmat(static_cast<Eigen::Index>(g.size()), k);
    for (Eigen::Index j = 0; j < k; ++j) wmat.col(j) = weights[static_cast<std::size_t>(j)].values;
    std::vector<Field> a;
    std::vector<ComplexVector> b;
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        const double lam = es.eigenvalues()[i];
        if (lam <= tol * tol * top) break;
        if (max_rank > 0 && static_cast<int>(a.size()) >= max_rank) break;
        const RealVector u = es.eigenvectors().col(i);
        const RealVector v = rows.transpose() * u / std::sqrt(lam);  // unit right singular vector
        a.emplace_back(g, std::sqrt(lam) * (wmat * u));
        b.push_back(v.cast<Complex>());
    }
    return LowRankSymbol::from_real(g, a, std::move(b));
}

}  // namespace detail

/// Square-root factor and its approximate inverse. `sym_sqrt` may be empty
/// (no misfit information), in which case M is the prior square root. With a
/// window the misfit part is W S S^T W, i.e. the square-root symbol w(x) s(x, xi).
inline SpdFactor build_spd_factor(const std::optional<LowRankSymbol>& sym_sqrt, const BiharmonicPrior& prior,
                                  const SpdFactorOptions& opt = {}, const std::optional<Field>& window = std::nullopt) {
    const Grid2D& g = prior.grid();
    if (opt.stride < 1) throw InvalidArgument("build_spd_factor: stride must be >= 1");
    const auto lx = detail::stride_lattice(g.nx, opt.stride);
    const auto lz = detail::stride_lattice(g.nz, opt.stride);
    std::vector<int> points;
    for (int iz : lz)
        for (int ix : lx) points.push_back(g.index(ix, iz));
    const RealVector p = prior.sqrt_symbol();
    RealMatrix s = RealMatrix::Zero(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(g.size()));
    if (sym_sqrt) {
        require_same_grid(g, sym_sqrt->grid(), "build_spd_factor");
        s = eval_symbol_rows(*sym_sqrt, points).real();
        if (window) {
            require_same_grid(g, window->grid, "build_spd_factor window");
            for (std::size_t i = 0; i < points.size(); ++i) s.row(static_cast<Eigen::Index>(i)) *= window->values[points[i]];
        }
    }
    RealMatrix c(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = 0; j < s.cols(); ++j) c(i, j) = std::hypot(s(i, j), p[j]);
    const RealMatrix cinv = c.cwiseInverse();
    const auto w = lattice_hat_weights(g, lx, lz);
    return {detail::compress_rows(g, c, w, opt.compress_tol, opt.max_rank),
            detail::compress_rows(g, cinv, w, opt.compress_tol, opt.max_rank)};
}

struct Correction {
    std::vector<Field> vectors;  // orthonormal (area-weighted)
    RealVector values;           // d_i > -1 + 1e-6

    [[nodiscard]] int rank() const { return static_cast<int>(vectors.size()); }
};

/// Leading-k (by magnitude) eigenpairs of K H K^T - I.
inline Correction build_correction(const LinearOperator& h_full, const SpdFactor& f, int k, std::uint64_t seed,
                                   int oversample = 10, int power_iters = 2) {
    const Grid2D& g = h_full.grid();
    const LowRankSymbol inv = f.inverse;
    const LinearOperator resid(g, [h_full, inv](const Field& v) {
        return psido_apply(inv, h_full.apply(psido_apply_adjoint(inv, v))) - v;
    });
    const SymmetricEigenpairs ep = randomized_symmetric_eig(resid, k, oversample, power_iters, seed, true);
    Correction c;
    c.vectors = ep.vectors;
    c.values = ep.values.unaryExpr([](double d) { return std::max(d, -1.0 + 1e-6); });
    return c;
}

struct LaplaceApproximation {
    Field m_map;
    SpdFactor factor;
    Correction correction;

    [[nodiscard]] const Grid2D& grid() const { return m_map.grid; }

    /// (I + U diag(coef) U^T) v.
    [[nodiscard]] Field apply_correction(const Field& v, double power) const {
        Field out = v;
        for (int i = 0; i < correction.rank(); ++i) {
            const double c = std::pow(1.0 + correction.values[i], power) - 1.0;
            out += (c * dot(correction.vectors[static_cast<std::size_t>(i)], v)) * correction.vectors[static_cast<std::size_t>(i)];
        }
        return out;
    }

    /// zeta = K^T (I + U ((1+d)^(-1/2) - 1) U^T) z: maps area-scaled white noise to a draw.
    [[nodiscard]] Field sampling_map(const Field& z) const {
        return psido_apply_adjoint(factor.inverse, apply_correction(z, -0.5));
    }

    /// Covariance of the sampler: K^T (I + U D U^T)^-1 K.
    [[nodiscard]] Field apply_covariance(const Field& v) const {
        return psido_apply_adjoint(factor.inverse, apply_correction(psido_apply(factor.inverse, v), -1.0));
    }

    /// Approximate precision M (I + U D U^T) M^T (exact when K = M^-1).
    [[nodiscard]] Field apply_precision_estimate(const Field& v) const {
        return psido_apply(factor.factor, apply_correction(psido_apply_adjoint(factor.factor, v), 1.0));
    }

    [[nodiscard]] LinearOperator covariance_operator() const {
        return LinearOperator(grid(), [self = *this](const Field& v) { return self.apply_covariance(v); });
    }
    [[nodiscard]] LinearOperator precision_estimate_operator() const {
        return LinearOperator(grid(), [self = *this](const Field& v) { return self.apply_precision_estimate(v); });
    }
    /// K^T K: cheap approximate inverse Hessian (no correction), used as a preconditioner.
    [[nodiscard]] LinearOperator approximate_inverse_operator() const {
        return LinearOperator(grid(), [inv = factor.inverse](const Field& v) { return psido_apply_adjoint(inv, psido_apply(inv, v)); });
    }
};

inline LaplaceApproximation make_laplace(Field m_map, SpdFactor f, Correction c = {}) {
    require_same_grid(m_map.grid, f.factor.grid(), "make_laplace");
    return {std::move(m_map), std::move(f), std::move(c)};
}

inline Field laplace_sample(const LaplaceApproximation& la, Rng& rng) {
    return la.m_map + la.sampling_map(white_noise(la.grid(), rng));
}

inline Field laplace_sample(const LaplaceApproximation& la, std::uint64_t seed) {
    Rng rng(seed);
    return laplace_sample(la, rng);
}

/// 0.5 <v, C^-1 v> for the sampler covariance C (CG, relative residual 1e-10).
inline double quad_form(const LaplaceApproximation& la, const Field& v, double tol = 1e-10, int max_iter = 500) {
    if (norm(v) == 0.0) return 0.0;
    const CgResult r = pcg(la.covariance_operator(), v, la.precision_estimate_operator(), tol, max_iter);
    return 0.5 * dot(v, r.solution);
}

inline void save_laplace(const std::filesystem::path& dir, const LaplaceApproximation& la, nlohmann::json meta = {}) {
    std::filesystem::create_directories(dir);
    const Grid2D& g = la.grid();
    hpf1::write_field(dir / "m_map.hpf", la.m_map);
    save_symbol(dir / "factor", la.factor.factor);
    save_symbol(dir / "inverse", la.factor.inverse);
    hpf1::write_vector(dir / "d.hpf", la.correction.values);
    for (int i = 0; i < la.correction.rank(); ++i)
        hpf1::write_field(dir / ("u_" + std::to_string(i) + ".hpf"), la.correction.vectors[static_cast<std::size_t>(i)]);
    nlohmann::json m = {{"kind", "laplace"}, {"nx", g.nx}, {"nz", g.nz}, {"dx", g.dx}, {"dz", g.dz},
                        {"correction_rank", la.correction.rank()}};
    if (!meta.is_null()) m["meta"] = std::move(meta);
    std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

inline LaplaceApproximation load_laplace(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw MissingArtifacts("load_laplace: no manifest in " + dir.string());
    const nlohmann::json m = nlohmann::json::parse(is);
    const Grid2D g(m.at("nx").get<int>(), m.at("nz").get<int>(), m.at("dx").get<double>(), m.at("dz").get<double>());
    LaplaceApproximation la;
    la.m_map = hpf1::read_field(dir / "m_map.hpf", g);
    la.factor = {load_symbol(dir / "factor"), load_symbol(dir / "inverse")};
    const int k = m.at("correction_rank").get<int>();
    la.correction.values = k > 0 ? hpf1::read_vector(dir / "d.hpf") : RealVector();
    for (int i = 0; i < k; ++i) la.correction.vectors.push_back(hpf1::read_field(dir / ("u_" + std::to_string(i) + ".hpf"), g));
    return la;
}

}  // namespace psido
