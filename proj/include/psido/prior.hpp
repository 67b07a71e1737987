#pragma once

// Biharmonic Matern prior with precision R = (delta I - gamma Laplacian)^2.
// The Laplacian is the periodic spectral one (symbol -|xi|^2), so every real
// power of R is a Fourier multiplier (delta + gamma |xi|^2)^(2s).

#include <cmath>
#include <cstdint>

#include "psido/fft.hpp"
#include "psido/operator.hpp"
#include "psido/random.hpp"

namespace psido {

class BiharmonicPrior {
public:
    BiharmonicPrior(const Grid2D& grid, double delta, double gamma)
        : BiharmonicPrior(grid, delta, gamma, Field(grid)) {}

    BiharmonicPrior(const Grid2D& grid, double delta, double gamma, Field mean)
        : grid_(grid), delta_(delta), gamma_(gamma), mean_(std::move(mean)) {
        if (!(delta > 0.0) || !(gamma > 0.0)) throw InvalidArgument("BiharmonicPrior: delta and gamma must be positive");
        require_same_grid(grid_, mean_.grid, "BiharmonicPrior mean");
        base_ = frequency_magnitudes(grid_).unaryExpr([&](double r) { return delta_ + gamma_ * r * r; });
    }

    [[nodiscard]] const Grid2D& grid() const { return grid_; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] double gamma() const { return gamma_; }
    [[nodiscard]] const Field& mean() const { return mean_; }

    /// Symbol of R^s: (delta + gamma |xi|^2)^(2s), in DFT order.
    [[nodiscard]] RealVector power_symbol(double s) const {
        return base_.unaryExpr([s](double b) { return std::pow(b, 2.0 * s); });
    }

    /// Symbol of R^(1/2): delta + gamma |xi|^2.
    [[nodiscard]] const RealVector& sqrt_symbol() const { return base_; }

    [[nodiscard]] Field apply_power(const Field& m, double s) const {
        require_same_grid(grid_, m.grid, "BiharmonicPrior::apply_power");
        if (s == 0.0) return m;
        return apply_multiplier(m, power_symbol(s));
    }

    [[nodiscard]] Field apply_precision(const Field& m) const { return apply_power(m, 1.0); }
    [[nodiscard]] Field apply_covariance(const Field& m) const { return apply_power(m, -1.0); }

    /// 0.5 <m - m_pr, R (m - m_pr)>.
    [[nodiscard]] double cost(const Field& m) const {
        const Field d = m - mean_;
        return 0.5 * dot(d, apply_precision(d));
    }

    /// Zero-mean draw from N(0, R^-1).
    [[nodiscard]] Field sample_zero_mean(Rng& rng) const { return apply_power(white_noise(grid_, rng), -0.5); }

    [[nodiscard]] Field sample(Rng& rng) const { return mean_ + sample_zero_mean(rng); }

    [[nodiscard]] Field sample(std::uint64_t seed) const {
        Rng rng(seed);
        return sample(rng);
    }

    [[nodiscard]] LinearOperator precision_operator() const {
        return LinearOperator(grid_, [p = *this](const Field& v) { return p.apply_precision(v); });
    }
    [[nodiscard]] LinearOperator power_operator(double s) const {
        return LinearOperator(grid_, [p = *this, s](const Field& v) { return p.apply_power(v, s); });
    }

    /// Pointwise variance of the prior (constant over the periodic grid).
    [[nodiscard]] double pointwise_variance() const {
        return power_symbol(-1.0).sum() / (static_cast<double>(grid_.size()) * grid_.cell_area());
    }

private:
    Grid2D grid_;
    double delta_;
    double gamma_;
    Field mean_;
    RealVector base_;
};

}  // namespace psido
