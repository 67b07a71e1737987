#pragma once

// pCN and gpCN samplers plus chain diagnostics.
//
// Every chain runs in the whitened coordinate u of its Gaussian reference,
// m = mean + S u with S S^T the reference covariance. The Crank-Nicolson step
// u' = sqrt(1 - beta^2) u + beta z leaves N(0, I) invariant, and the reference
// negative log-density is exactly 0.5 <u, u>, so
//
//   Delta(m) = Phi(m) - 0.5 <u, u>,    accept with min{1, exp(Delta(m_k) - Delta(m'))}.
//
// pCN is the special case S = R^(-1/2) about the prior mean, where Delta is the misfit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

#include <fftw3.h>

#include "psido/laplace.hpp"
#include "psido/lowrank.hpp"
#include "psido/problem.hpp"

namespace psido {

struct ChainConfig {
    double beta = 0.2;
    int n_samples = 20000;
    int burn_in = -1;  // < 0: 10% of n_samples
    std::uint64_t seed = 0;
    std::vector<int> probe_points;
    int thin = 10;
    bool keep_samples = true;

    [[nodiscard]] int effective_burn_in() const { return burn_in < 0 ? n_samples / 10 : burn_in; }

    void validate(const Grid2D& g) const {
        if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("ChainConfig: beta must lie in (0, 1)");
        if (n_samples < 1) throw InvalidArgument("ChainConfig: n_samples must be >= 1");
        if (effective_burn_in() >= n_samples) throw InvalidArgument("ChainConfig: burn_in must be < n_samples");
        if (thin < 1) throw InvalidArgument("ChainConfig: thin must be >= 1");
        for (int p : probe_points)
            if (p < 0 || static_cast<std::size_t>(p) >= g.size()) throw IndexOutOfRange("ChainConfig: probe point outside the grid");
    }
};

/// Five interior points at increasing depth.
inline std::vector<int> default_probe_points(const Grid2D& g) {
    const double fx[] = {0.2, 0.4, 0.6, 0.8, 0.5};
    const double fz[] = {0.3, 0.45, 0.6, 0.75, 0.85};
    std::vector<int> out;
    for (int i = 0; i < 5; ++i)
        out.push_back(g.index(static_cast<int>(std::lround(fx[i] * (g.nx - 1))), static_cast<int>(std::lround(fz[i] * (g.nz - 1)))));
    return out;
}

struct Chain {
    ChainConfig config;
    std::vector<Field> samples;            // post burn-in, thinned
    std::vector<RealVector> probe_traces;  // one per probe point, length n_samples
    long accepted = 0;
    double max_delta_change = 0.0;         // max |Delta(m') - Delta(m_k)| over proposals
    // Welford accumulators over every post burn-in state.
    long stats_count = 0;
    RealVector stats_mean;
    RealVector stats_m2;
    Grid2D grid;

    [[nodiscard]] double acceptance_rate() const {
        return config.n_samples > 0 ? static_cast<double>(accepted) / config.n_samples : 0.0;
    }
};

/// Gaussian reference N(mean, S S^T) given by its sampling map S.
struct GaussianReference {
    Field mean;
    std::function<Field(const Field&)> sampling_map;
};

inline GaussianReference laplace_reference(const LaplaceApproximation& la) {
    return {la.m_map, [la](const Field& z) { return la.sampling_map(z); }};
}

inline GaussianReference lowrank_reference(const Field& m_map, const GenEigPairs& pairs, const BiharmonicPrior& prior) {
    return {m_map, [pairs, prior](const Field& z) { return lowrank_sampling_map(pairs, prior, z); }};
}

inline GaussianReference prior_reference(const BiharmonicPrior& prior) {
    return {prior.mean(), [prior](const Field& z) { return prior.apply_power(z, -0.5); }};
}

/// Generic whitened Crank-Nicolson chain. `delta(u, m)` is the potential
/// difference; `start` is the initial whitened coordinate (zero if empty).
inline Chain run_whitened_chain(const GaussianReference& ref, const std::function<double(const Field&, const Field&)>& delta,
                                const ChainConfig& cfg, const std::optional<Field>& start = std::nullopt) {
    const Grid2D& g = ref.mean.grid;
    cfg.validate(g);
    Chain ch;
    ch.config = cfg;
    ch.grid = g;
    const int burn = cfg.effective_burn_in();
    const std::size_t np = cfg.probe_points.size();
    ch.probe_traces.assign(np, RealVector(cfg.n_samples));
    ch.stats_mean = RealVector::Zero(static_cast<Eigen::Index>(g.size()));
    ch.stats_m2 = RealVector::Zero(static_cast<Eigen::Index>(g.size()));

    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double keep = std::sqrt(1.0 - cfg.beta * cfg.beta);

    Field u = start ? *start : Field(g);
    Field m = ref.mean + ref.sampling_map(u);
    double d = delta(u, m);
    for (int k = 0; k < cfg.n_samples; ++k) {
        Field u_new = keep * u + cfg.beta * white_noise(g, rng);
        Field m_new = ref.mean + ref.sampling_map(u_new);
        const double d_new = delta(u_new, m_new);
        ch.max_delta_change = std::max(ch.max_delta_change, std::abs(d_new - d));
        const double log_a = d - d_new;
        if (std::isfinite(d_new) && (log_a >= 0.0 || std::log(unif(rng)) < log_a)) {
            u = std::move(u_new);
            m = std::move(m_new);
            d = d_new;
            ++ch.accepted;
        }
        for (std::size_t i = 0; i < np; ++i) ch.probe_traces[i][k] = m.values[cfg.probe_points[i]];
        if (k >= burn) {
            ++ch.stats_count;
            const RealVector diff = m.values - ch.stats_mean;
            ch.stats_mean += diff / static_cast<double>(ch.stats_count);
            ch.stats_m2 += diff.cwiseProduct(m.values - ch.stats_mean);
            if (cfg.keep_samples && (k - burn) % cfg.thin == 0) ch.samples.push_back(m);
        }
    }
    return ch;
}

/// gpCN with a Laplace reference, started at the MAP point.
inline Chain run_gpcn(const ObjectiveProblem& prob, const LaplaceApproximation& la, const ChainConfig& cfg) {
    require_same_grid(prob.grid(), la.grid(), "run_gpcn");
    return run_whitened_chain(laplace_reference(la), [&prob](const Field& u, const Field& m) {
        return prob.objective(m) - 0.5 * dot(u, u);
    }, cfg);
}

/// gpCN with any Gaussian reference, started at its mean.
inline Chain run_gpcn(const ObjectiveProblem& prob, const GaussianReference& ref, const ChainConfig& cfg) {
    require_same_grid(prob.grid(), ref.mean.grid, "run_gpcn");
    return run_whitened_chain(ref, [&prob](const Field& u, const Field& m) {
        return prob.objective(m) - 0.5 * dot(u, u);
    }, cfg);
}

/// Classical pCN about the prior. `start` (e.g. the MAP point) defaults to the prior mean.
inline Chain run_pcn(const ObjectiveProblem& prob, const BiharmonicPrior& prior, const ChainConfig& cfg,
                     const std::optional<Field>& start = std::nullopt) {
    require_same_grid(prob.grid(), prior.grid(), "run_pcn");
    std::optional<Field> u0;
    if (start) u0 = prior.apply_power(*start - prior.mean(), 0.5);
    return run_whitened_chain(prior_reference(prior), [&prob](const Field&, const Field& m) { return prob.misfit(m); }, cfg, u0);
}

/// Step size whose pilot acceptance rate falls in [lo, hi]; bisection on log(beta).
/// `acceptance(beta)` runs a pilot chain and returns its acceptance rate.
inline double tune_beta(const std::function<double(double)>& acceptance, double lo = 0.2, double hi = 0.4, int max_rounds = 10) {
    double b_lo = 1e-4, b_hi = 0.999;
    double beta = 0.2;
    for (int r = 0; r < max_rounds; ++r) {
        const double a = acceptance(beta);
        if (a >= lo && a <= hi) return beta;
        if (a > hi) b_lo = beta;
        else b_hi = beta;
        beta = std::sqrt(b_lo * b_hi);
    }
    return beta;
}

// ---------------------------------------------------------------- diagnostics

/// Normalized autocorrelation (rho_0 = 1) via a zero-padded FFT.
inline RealVector autocorrelation(const RealVector& trace) {
    const Eigen::Index n = trace.size();
    if (n < 100) throw TraceTooShort("autocorrelation: trace needs at least 100 entries");
    Eigen::Index len = 1;
    while (len < 2 * n) len *= 2;
    ComplexVector buf = ComplexVector::Zero(len);
    const double mean = trace.mean();
    for (Eigen::Index i = 0; i < n; ++i) buf[i] = trace[i] - mean;
    ComplexVector spec(len);
    static std::mutex planner;
    fftw_plan fwd, inv;
    {
        std::lock_guard<std::mutex> lock(planner);
        fwd = fftw_plan_dft_1d(static_cast<int>(len), reinterpret_cast<fftw_complex*>(buf.data()),
                               reinterpret_cast<fftw_complex*>(spec.data()), FFTW_FORWARD, FFTW_ESTIMATE);
        inv = fftw_plan_dft_1d(static_cast<int>(len), reinterpret_cast<fftw_complex*>(spec.data()),
                               reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (Eigen::Index i = 0; i < len; ++i) spec[i] = std::norm(spec[i]);
    fftw_execute(inv);
    {
        std::lock_guard<std::mutex> lock(planner);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    RealVector acf(n);
    const double c0 = buf[0].real();
    if (c0 <= 0.0) {
        acf.setZero();
        acf[0] = 1.0;
        return acf;
    }
    for (Eigen::Index i = 0; i < n; ++i) acf[i] = buf[i].real() / c0;
    return acf;
}

/// Effective sample size with Geyer's initial positive sequence. A constant trace gives 1.
inline double ess(const RealVector& trace) {
    const Eigen::Index n = trace.size();
    if (n < 100) throw TraceTooShort("ess: trace needs at least 100 entries");
    if ((trace.array() == trace[0]).all()) return 1.0;
    const RealVector rho = autocorrelation(trace);
    double tau = -1.0;
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        const double pair = rho[k] + rho[k + 1];
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return std::clamp(static_cast<double>(n) / tau, 1.0, static_cast<double>(n));
}

struct Histogram {
    double lo = 0.0;
    double width = 0.0;
    std::vector<long> counts;
};

/// Freedman-Diaconis binning (width 2 IQR n^(-1/3)); at most 1000 bins.
inline Histogram histogram(const RealVector& x) {
    if (x.size() == 0) throw InvalidArgument("histogram: empty input");
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double t = pos - static_cast<double>(i);
        return i + 1 < v.size() ? (1.0 - t) * v[i] + t * v[i + 1] : v[i];
    };
    Histogram h;
    h.lo = v.front();
    const double span = v.back() - v.front();
    const double iqr = quantile(0.75) - quantile(0.25);
    int bins = 1;
    if (span > 0.0 && iqr > 0.0) {
        const double w = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
        bins = std::clamp(static_cast<int>(std::ceil(span / w)), 1, 1000);
    }
    h.width = span > 0.0 ? span / bins : 1.0;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double xi : v) {
        const int b = span > 0.0 ? std::min(bins - 1, static_cast<int>((xi - h.lo) / h.width)) : 0;
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

struct ChainStatistics {
    Field mean;
    Field stddev;
    std::vector<Histogram> histograms;  // one per probe point, post burn-in
    std::vector<double> ess;            // one per probe point, post burn-in
};

inline ChainStatistics chain_statistics(const Chain& ch) {
    if (ch.stats_count < 100) throw InvalidArgument("chain_statistics: need at least 100 post burn-in states");
    ChainStatistics s;
    s.mean = Field(ch.grid, ch.stats_mean);
    s.stddev = Field(ch.grid, (ch.stats_m2 / static_cast<double>(ch.stats_count - 1)).cwiseMax(0.0).cwiseSqrt());
    const int burn = ch.config.effective_burn_in();
    for (const RealVector& t : ch.probe_traces) {
        const RealVector post = t.tail(t.size() - burn);
        s.histograms.push_back(histogram(post));
        s.ess.push_back(ess(post));
    }
    return s;
}

}  // namespace psido
