#pragma once

// Quadratic benchmark with an explicitly constructed misfit Hessian
//
//   H_d = A A^T + V diag(lambda) V^T
//
// where A is an order-1/2 pseudo-differential operator with the rank-3 symbol
//
//   s_A(x, xi) = w(x) P(|xi|) (0.1 + cos^2(arg xi + pi x / x_max)) / (0.1 + (z / z_max)^2)
//
// and V holds ten orthonormal surface-concentrated plane waves. The objective
// is Phi(m) = Phi_d(W m) + 0.5 |m - m_pr|_R^2 with
// Phi_d(u) = 0.5 u^T H_d u - b^T u + 0.5 b^T m*, b = H_d m*.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "psido/prior.hpp"
#include "psido/problem.hpp"
#include "psido/psido.hpp"

namespace psido {

struct QuadraticModelParams {
    int nx = 64;
    int nz = 32;
    double dx = 1.0;
    double dz = 1.0;
    int n_modes = 10;
    double mode_decay = 3.0;          // v_k ~ exp(-mode_decay z / z_max)
    double mode_weight_max = 1e2;     // lambda logarithmically spaced max .. min
    double mode_weight_min = 1e0;
    double band_fraction = 0.7;       // rho_band = band_fraction * Nyquist
    double taper_side = 0.1;          // left, right, bottom taper fractions
    double taper_top = 0.15;
    double misfit_scale = 1.0;        // multiplies H_d (data informativeness)
    double prior_delta = 0.08;
    double prior_gamma = 1.0;
    std::uint64_t target_seed = 7;
    std::optional<Field> target;      // overrides the generated m*
    std::optional<Field> prior_mean;  // default zero
};

/// P(rho) = sqrt(rho) exp(-(rho / rho_band)^4): grows like |xi|^(1/2), then decays.
inline double band_profile(double rho, double rho_band) {
    const double t = rho / rho_band;
    return std::sqrt(rho) * std::exp(-t * t * t * t);
}

/// Raised-cosine taper on [0, 1]: 0 at both ends, 1 in the interior.
inline double tukey(double u, double lo_frac, double hi_frac) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    if (lo_frac > 0.0 && u < lo_frac) return 0.5 * (1.0 - std::cos(std::numbers::pi * u / lo_frac));
    if (hi_frac > 0.0 && u > 1.0 - hi_frac) return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - u) / hi_frac));
    return 1.0;
}

/// Separable window: zero on the boundary ring, top (z = 0) taper `top`, others `side`.
inline Field make_window(const Grid2D& g, double side, double top) {
    Field w(g);
    for (int iz = 0; iz < g.nz; ++iz) {
        const double wz = tukey(static_cast<double>(iz) / (g.nz - 1), top, side);
        for (int ix = 0; ix < g.nx; ++ix) w.at(ix, iz) = wz * tukey(static_cast<double>(ix) / (g.nx - 1), side, side);
    }
    return w;
}

/// Rank-3 separated form of the benchmark symbol s_A.
inline LowRankSymbol build_toy_symbol(const Grid2D& g, const Field& window, double band_fraction = 0.7) {
    const double rho_band = band_fraction * g.nyquist();
    const FreqGrid fg = freq_coords(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    ComplexVector b1(n), b2(n), b3(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int idx = static_cast<int>(i);
        const double p = band_profile(fg.magnitude(idx), rho_band);
        const double th = fg.angle(idx);
        b1[i] = 0.6 * p;
        b2[i] = 0.5 * std::cos(2.0 * th) * p;
        b3[i] = -0.5 * std::sin(2.0 * th) * p;
    }
    Field a1(g), a2(g), a3(g);
    for (int iz = 0; iz < g.nz; ++iz) {
        const double zr = g.z_of(iz) / g.z_max();
        const double depth = 1.0 / (0.1 + zr * zr);
        for (int ix = 0; ix < g.nx; ++ix) {
            const double phase = kTwoPi * g.x_of(ix) / g.x_max();
            const double base = window.at(ix, iz) * depth;
            a1.at(ix, iz) = base;
            a2.at(ix, iz) = base * std::cos(phase);
            a3.at(ix, iz) = base * std::sin(phase);
        }
    }
    return LowRankSymbol::from_real(g, {a1, a2, a3}, {b1, b2, b3});
}

/// Closed-form s_A(x, xi) for oracle comparisons.
inline double toy_symbol_closed_form(const Grid2D& g, const Field& window, int point, int freq, double band_fraction = 0.7) {
    const FreqGrid fg = freq_coords(g);
    const double rho = fg.magnitude(freq);
    const double th = fg.angle(freq);
    const double x = g.x_of(g.ix_of(point));
    const double zr = g.z_of(g.iz_of(point)) / g.z_max();
    const double c = std::cos(th + std::numbers::pi * x / g.x_max());
    return window.values[point] * band_profile(rho, band_fraction * g.nyquist()) * (0.1 + c * c) / (0.1 + zr * zr);
}

/// Orthonormalizes fields in place (modified Gram-Schmidt, area-weighted).
inline void orthonormalize(std::vector<Field>& fs) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) fs[i] -= dot(fs[i], fs[j]) * fs[j];
        const double nrm = norm(fs[i]);
        if (nrm <= 0.0) throw InvalidArgument("orthonormalize: linearly dependent input");
        fs[i] *= 1.0 / nrm;
    }
}

inline std::vector<Field> build_planewave_modes(const Grid2D& g, int n_modes, double decay) {
    std::vector<Field> modes;
    for (int k = 1; k <= n_modes; ++k) {
        Field v(g);
        for (int iz = 0; iz < g.nz; ++iz)
            for (int ix = 0; ix < g.nx; ++ix)
                v.at(ix, iz) = std::cos(k * std::numbers::pi * g.x_of(ix) / g.x_max()) *
                               std::exp(-decay * g.z_of(iz) / g.z_max());
        modes.push_back(std::move(v));
    }
    orthonormalize(modes);
    return modes;
}

/// Band-passed random target, scaled to unit maximum magnitude.
inline Field make_target(const Grid2D& g, std::uint64_t seed) {
    Rng rng(seed);
    const Field noise(g, standard_normal(rng, static_cast<Eigen::Index>(g.size())));
    const double k_lo = 0.15 * g.nyquist();
    const double k_hi = 0.45 * g.nyquist();
    const RealVector filt = frequency_magnitudes(g).unaryExpr([&](double r) {
        return (1.0 - std::exp(-(r / k_lo) * (r / k_lo))) * std::exp(-(r / k_hi) * (r / k_hi));
    });
    Field t = apply_multiplier(noise, filt);
    t *= 1.0 / t.values.cwiseAbs().maxCoeff();
    return t;
}

class QuadraticProblem : public ObjectiveProblem {
public:
    explicit QuadraticProblem(const QuadraticModelParams& p)
        : params_(p),
          grid_(p.nx, p.nz, p.dx, p.dz),
          window_(make_window(grid_, p.taper_side, p.taper_top)),
          symbol_(build_toy_symbol(grid_, window_, p.band_fraction)),
          modes_(build_planewave_modes(grid_, p.n_modes, p.mode_decay)),
          weights_(p.n_modes),
          prior_(grid_, p.prior_delta, p.prior_gamma, p.prior_mean ? *p.prior_mean : Field(grid_)),
          target_(p.target ? *p.target : make_target(grid_, p.target_seed)) {
        require_same_grid(grid_, target_.grid, "QuadraticProblem target");
        for (int k = 0; k < p.n_modes; ++k) {
            const double t = p.n_modes > 1 ? static_cast<double>(k) / (p.n_modes - 1) : 0.0;
            weights_[k] = std::exp(std::log(p.mode_weight_max) * (1.0 - t) + std::log(p.mode_weight_min) * t);
        }
        rhs_ = apply_data_hessian(target_);
    }

    [[nodiscard]] const Grid2D& grid() const override { return grid_; }
    [[nodiscard]] const QuadraticModelParams& params() const { return params_; }
    [[nodiscard]] Field window() const override { return window_; }
    [[nodiscard]] const LowRankSymbol& symbol() const { return symbol_; }
    [[nodiscard]] const std::vector<Field>& modes() const { return modes_; }
    [[nodiscard]] const RealVector& mode_weights() const { return weights_; }
    [[nodiscard]] const BiharmonicPrior& prior() const { return prior_; }
    [[nodiscard]] const Field& target() const { return target_; }
    [[nodiscard]] const Field& rhs() const { return rhs_; }

    /// H_d m = A A^T m + sum_i lambda_i <v_i, m> v_i (scaled by misfit_scale).
    [[nodiscard]] Field apply_data_hessian(const Field& m) const {
        require_same_grid(grid_, m.grid, "apply_misfit_hessian");
        Field out = psido_apply(symbol_, psido_apply_adjoint(symbol_, m));
        for (std::size_t i = 0; i < modes_.size(); ++i) out += (weights_[static_cast<Eigen::Index>(i)] * dot(modes_[i], m)) * modes_[i];
        out *= params_.misfit_scale;
        return out;
    }

    /// Phi_d(u) = 0.5 <u, H_d u> - <b, u> + 0.5 <b, m*>.
    [[nodiscard]] double data_misfit(const Field& u) const {
        return 0.5 * dot(u, apply_data_hessian(u)) - dot(rhs_, u) + 0.5 * dot(rhs_, target_);
    }

    [[nodiscard]] double misfit(const Field& m) const override { return data_misfit(hadamard(window_, m)); }

    [[nodiscard]] double objective(const Field& m) const override { return misfit(m) + prior_.cost(m); }

    [[nodiscard]] Field gradient(const Field& m) const override {
        const Field wm = hadamard(window_, m);
        Field g = hadamard(window_, apply_data_hessian(wm) - rhs_);
        g += prior_.apply_precision(m - prior_.mean());
        return g;
    }

    /// W H_d W: the misfit Hessian of Phi_d(W m).
    [[nodiscard]] LinearOperator misfit_hessian() const override {
        return LinearOperator(grid_, [this](const Field& v) {
            return hadamard(window_, apply_data_hessian(hadamard(window_, v)));
        });
    }

    [[nodiscard]] LinearOperator data_hessian() const override {
        return LinearOperator(grid_, [this](const Field& v) { return apply_data_hessian(v); });
    }

    /// W H_d W + R.
    [[nodiscard]] LinearOperator full_hessian() const {
        return LinearOperator(grid_, [this](const Field& v) {
            return hadamard(window_, apply_data_hessian(hadamard(window_, v))) + prior_.apply_precision(v);
        });
    }

private:
    QuadraticModelParams params_;
    Grid2D grid_;
    Field window_;
    LowRankSymbol symbol_;
    std::vector<Field> modes_;
    RealVector weights_;
    BiharmonicPrior prior_;
    Field target_;
    Field rhs_;
};

/// Dense Gaussian posterior of the quadratic problem (small grids only).
struct ExactPosterior {
    Field mean;
    RealMatrix covariance;  // Euclidean covariance of the grid values
    Field stddev;
};

inline ExactPosterior exact_posterior(const QuadraticProblem& qp) {
    const Grid2D& g = qp.grid();
    if (g.size() > kDenseLimit) throw TooLarge("exact_posterior: N exceeds 4096");
    const RealMatrix p = dense_materialize(qp.full_hessian());
    const RealMatrix sym = 0.5 * (p + p.transpose());
    Eigen::LLT<RealMatrix> llt(sym);
    if (llt.info() != Eigen::Success) throw InvalidArgument("exact_posterior: posterior precision not SPD");
    const RealVector rhs = hadamard(qp.window(), qp.rhs()).values + qp.prior().apply_precision(qp.prior().mean()).values;
    ExactPosterior out;
    out.mean = Field(g, llt.solve(rhs));
    out.covariance = llt.solve(RealMatrix::Identity(sym.rows(), sym.cols())) / g.cell_area();
    out.stddev = Field(g, out.covariance.diagonal().cwiseSqrt());
    return out;
}

}  // namespace psido
