#pragma once

// L-BFGS with a pluggable initial inverse Hessian h0 and a strong-Wolfe line
// search (bracketing + zoom with cubic interpolation).

#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "psido/problem.hpp"
#include "psido/random.hpp"

namespace psido {

struct LbfgsConfig {
    int memory = 10;
    int max_iters = 1000;
    double grad_reduction_tol = 1e-6;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 40;
    std::vector<int> snapshot_steps;

    void validate() const {
        if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw InvalidArgument("LbfgsConfig: need 0 < c1 < c2 < 1");
        if (memory < 1) throw InvalidArgument("LbfgsConfig: memory must be >= 1");
        if (max_iters < 0) throw InvalidArgument("LbfgsConfig: max_iters must be >= 0");
    }
};

struct RunRecord {
    std::vector<double> objective;
    std::vector<double> misfit;
    std::vector<double> grad_norm;
    std::vector<double> solution_error;  // empty without a reference
    std::vector<std::pair<int, Field>> snapshots;
    int iterations = 0;
    bool converged = false;
};

struct LbfgsResult {
    Field solution;
    RunRecord record;
};

namespace detail {

// Minimizer of the cubic through (a, fa, ga), (b, fb, gb), safeguarded to the interval.
inline double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
        const double margin = 0.1 * (hi - lo);
        if (std::isfinite(t) && t >= lo + margin && t <= hi - margin) return t;
    }
    return 0.5 * (a + b);
}

struct LinePoint {
    double step;
    double f;
    double slope;
    Field m;
    Field g;
};

}  // namespace detail

/// Strong-Wolfe step along p from m (f0, g0 given). Throws LineSearchFailed.
inline detail::LinePoint wolfe_line_search(const ObjectiveProblem& prob, const Field& m, double f0, const Field& g0,
                                           const Field& p, double step0, const LbfgsConfig& cfg) {
    const double slope0 = dot(g0, p);
    auto eval = [&](double a) {
        Field x = m + a * p;
        const double f = prob.objective(x);
        Field g = prob.gradient(x);
        const double s = dot(g, p);
        return detail::LinePoint{a, f, s, std::move(x), std::move(g)};
    };
    int trials = 0;
    auto zoom = [&](detail::LinePoint lo, detail::LinePoint hi) {
        while (trials < cfg.max_line_search) {
            const double a = detail::cubic_min(lo.step, lo.f, lo.slope, hi.step, hi.f, hi.slope);
            detail::LinePoint cur = eval(a);
            ++trials;
            if (cur.f > f0 + cfg.c1 * a * slope0 || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.slope) <= -cfg.c2 * slope0) return cur;
                if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
            if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
        }
        throw LineSearchFailed("line search: no strong-Wolfe point in " + std::to_string(cfg.max_line_search) + " trials");
    };
    detail::LinePoint prev{0.0, f0, slope0, m, g0};
    double a = step0;
    while (trials < cfg.max_line_search) {
        detail::LinePoint cur = eval(a);
        ++trials;
        if (!std::isfinite(cur.f)) {
            a = 0.5 * (prev.step + a);
            continue;
        }
        if (cur.f > f0 + cfg.c1 * a * slope0 || (trials > 1 && cur.f >= prev.f)) return zoom(std::move(prev), std::move(cur));
        if (std::abs(cur.slope) <= -cfg.c2 * slope0) return cur;
        if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev));
        prev = std::move(cur);
        a *= 2.0;
    }
    throw LineSearchFailed("line search: no strong-Wolfe point in " + std::to_string(cfg.max_line_search) + " trials");
}

/// Checks <v, h0 v> > 0 on five random vectors; throws InvalidArgument otherwise.
inline void check_spd_map(const LinearOperator& h0, std::uint64_t seed = 12345) {
    Rng rng(seed);
    for (int i = 0; i < 5; ++i) {
        const Field v(h0.grid(), standard_normal(rng, static_cast<Eigen::Index>(h0.dims())));
        const double q = dot(v, h0.apply(v));
        if (!(q > 0.0)) throw InvalidArgument("lbfgs: initial inverse Hessian is not positive definite (<v, h0 v> = " + std::to_string(q) + ")");
    }
}

inline LbfgsResult minimize(const ObjectiveProblem& prob, const LinearOperator& h0, const LbfgsConfig& cfg, const Field& start,
                            const std::optional<Field>& reference = std::nullopt) {
    cfg.validate();
    require_same_grid(prob.grid(), start.grid, "minimize");
    if (h0.valid()) check_spd_map(h0);

    LbfgsResult out{start, {}};
    RunRecord& rec = out.record;
    Field& m = out.solution;
    double f = prob.objective(m);
    Field g = prob.gradient(m);
    const double g0 = norm(g);
    auto log = [&](int it) {
        rec.objective.push_back(f);
        rec.misfit.push_back(prob.misfit(m));
        rec.grad_norm.push_back(norm(g));
        if (reference) rec.solution_error.push_back(norm(m - *reference));
        for (int s : cfg.snapshot_steps)
            if (s == it) rec.snapshots.emplace_back(it, m);
    };
    log(0);
    if (g0 == 0.0) {
        rec.converged = true;
        return out;
    }

    std::deque<Field> s_hist, y_hist;
    std::deque<double> rho_hist;
    auto direction = [&]() {
        Field q = g;
        const std::size_t k = s_hist.size();
        std::vector<double> alpha(k);
        for (std::size_t i = k; i-- > 0;) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            q -= alpha[i] * y_hist[i];
        }
        Field r = q;
        if (h0.valid()) {
            r = h0.apply(q);
        } else if (k > 0) {
            r *= dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        }
        for (std::size_t i = 0; i < k; ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], r);
            r += (alpha[i] - beta) * s_hist[i];
        }
        r *= -1.0;
        return r;
    };

    for (int it = 1; it <= cfg.max_iters; ++it) {
        Field p = direction();
        if (!(dot(g, p) < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            p = direction();
            if (!(dot(g, p) < 0.0)) throw NonDescentDirection("lbfgs: search direction is not a descent direction after reset");
        }
        const double step0 = (it == 1 && !h0.valid()) ? std::min(1.0, 1.0 / norm(p)) : 1.0;
        detail::LinePoint lp = wolfe_line_search(prob, m, f, g, p, step0, cfg);
        Field s = lp.m - m;
        Field y = lp.g - g;
        m = std::move(lp.m);
        g = std::move(lp.g);
        f = lp.f;
        const double sy = dot(s, y);
        if (sy > 1e-12 * norm(s) * norm(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        rec.iterations = it;
        log(it);
        if (norm(g) <= cfg.grad_reduction_tol * g0) {
            rec.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace psido
