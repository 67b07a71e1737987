#pragma once

// End-to-end Hessian approximation for an ObjectiveProblem: probe the
// high-pass-filtered data Hessian once (four delta probes, one sinusoid
// probe), then assemble PSF, PDO or PSF+ symbols, plain or square-root.

#include <algorithm>
#include <optional>
#include <string>

#include "psido/laplace.hpp"
#include "psido/probing.hpp"
#include "psido/problem.hpp"

namespace psido {

enum class Method { psf, pdo, psfplus };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::psf: return "psf";
        case Method::pdo: return "pdo";
        case Method::psfplus: return "psfplus";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "psf") return Method::psf;
    if (s == "pdo") return Method::pdo;
    if (s == "psfplus" || s == "psf+") return Method::psfplus;
    throw InvalidArgument("unknown approximation method '" + s + "'");
}

struct ApproxConfig {
    int psf_points_x = 6;
    int psf_points_z = 6;
    int psf_radius = -1;              // < 0: largest admissible
    int n_angles = 8;
    double rho0 = 0.0;                // sample radius; 0: rho0_fraction * Nyquist
    double rho0_fraction = 0.5;
    std::optional<FrequencyBand> band;  // when set, rho0 = f_max / c_max
    double mask_rolloff = 2.0;
    double highpass_cutoff = 0.5;     // fractions of rho0
    double highpass_width = 0.2;
    double pdo_order = 1.0;           // radial extension order of the PDO weights
    double pdo_sqrt_order = 0.5;      // same, for square-root columns
    PsfPlusOptions psfplus;
    SpdFactorOptions factor;
};

struct ProbeData {
    Grid2D grid;
    HighPassSpec highpass;
    PsfSet psfs;
    std::vector<Field> psf_weights;
    SymbolColumns columns;
};

inline double resolve_rho0(const Grid2D& g, const ApproxConfig& cfg) {
    if (cfg.band) return choose_probe_frequencies(g, *cfg.band, cfg.n_angles, cfg.mask_rolloff).rho0;
    return cfg.rho0 > 0.0 ? cfg.rho0 : cfg.rho0_fraction * g.nyquist();
}

inline ProbeData probe_hessian(const LinearOperator& data_hessian, const ApproxConfig& cfg) {
    const Grid2D& g = data_hessian.grid();
    const double rho0 = resolve_rho0(g, cfg);
    ProbeData d{g, HighPassSpec{cfg.highpass_cutoff * rho0, cfg.highpass_width * rho0}, {}, {}, {}};
    const LinearOperator filtered = wrap_highpass(data_hessian, d.highpass);
    const PsfProbePlan plan = make_psf_plan(g, cfg.psf_points_x, cfg.psf_points_z, cfg.psf_radius);
    d.psfs = probe_psfs(filtered, plan);
    d.psf_weights = build_psf_weights(plan, g);
    d.columns = probe_symbol_columns(filtered, choose_probe_frequencies(g, rho0, cfg.n_angles, cfg.mask_rolloff));
    return d;
}

/// Symbol of the filtered data Hessian (sqrt = false) or of its square root.
inline LowRankSymbol approximate_symbol(const ProbeData& d, Method method, bool sqrt, const ApproxConfig& cfg) {
    const ComplexMatrix rows = sqrt ? ComplexMatrix(pointwise_sqrt_samples(d.psfs.rows).cast<Complex>()) : d.psfs.rows;
    const ComplexMatrix cols = sqrt ? ComplexMatrix(pointwise_sqrt_samples(d.columns.cols).cast<Complex>()) : d.columns.cols;
    switch (method) {
        case Method::psf: return assemble_psf_operator(rows, d.psf_weights);
        case Method::pdo: {
            // The probed operator is Q H Q, whose symbol carries q(xi)^2; the radial
            // extension of the weights does not, so apply it explicitly.
            auto w = build_pdo_weights(d.columns.plan, d.grid, sqrt ? cfg.pdo_sqrt_order : cfg.pdo_order);
            const RealVector q = highpass_multiplier(d.grid, d.highpass).array().pow(sqrt ? 1.0 : 2.0);
            for (auto& wk : w) wk = wk.cwiseProduct(q.cast<Complex>());
            return assemble_pdo_operator(cols, w, d.grid);
        }
        case Method::psfplus: return build_psf_plus(rows, d.psf_weights, cols, d.columns.plan.freq_index, cfg.psfplus).symbol;
    }
    throw InvalidArgument("approximate_symbol: bad method");
}

/// Square-root factor of W H~_d W + R for the problem's window and prior.
inline SpdFactor approximate_factor(const ProbeData& d, Method method, const BiharmonicPrior& prior, const Field& window,
                                    const ApproxConfig& cfg) {
    return build_spd_factor(approximate_symbol(d, method, true, cfg), prior, cfg.factor, window);
}

/// Laplace approximation at m_map with a rank-k whitened-residual correction.
inline LaplaceApproximation build_laplace(const Field& m_map, SpdFactor factor, const LinearOperator& full_hessian, int k,
                                          std::uint64_t seed) {
    Correction c = k > 0 ? build_correction(full_hessian, factor, k, seed) : Correction{};
    return make_laplace(m_map, std::move(factor), std::move(c));
}

/// White noise restricted to the pass band cutoff + width/2 <= |xi| <= upper * Nyquist.
inline std::vector<Field> band_limited_probes(const Grid2D& g, const HighPassSpec& hp, int n, std::uint64_t seed,
                                              double upper = 0.8) {
    const double lo = hp.cutoff + 0.5 * hp.transition_width;
    const double hi = upper * g.nyquist();
    const RealVector band = frequency_magnitudes(g).unaryExpr([&](double r) { return r >= lo && r <= hi ? 1.0 : 0.0; });
    Rng rng(seed);
    std::vector<Field> out;
    for (int i = 0; i < n; ++i) out.push_back(apply_multiplier(white_noise(g, rng), band));
    return out;
}

/// Median over probes of ||A v - H v|| / ||H v||.
inline double median_relative_error(const LinearOperator& approx, const LinearOperator& exact, const std::vector<Field>& probes) {
    if (probes.empty()) throw InvalidArgument("median_relative_error: no probes");
    std::vector<double> e;
    for (const Field& v : probes) {
        const Field hv = exact.apply(v);
        e.push_back(norm(approx.apply(v) - hv) / norm(hv));
    }
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    return n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
}

/// W H W + R as an operator.
inline LinearOperator posterior_hessian(const ObjectiveProblem& prob, const BiharmonicPrior& prior) {
    return sum(prob.misfit_hessian(), prior.precision_operator());
}

}  // namespace psido
