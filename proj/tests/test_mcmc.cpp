#include <gtest/gtest.h>

#include "psido/approximation.hpp"
#include "psido/mcmc.hpp"
#include "psido/quadratic_model.hpp"
#include "test_util.hpp"

using namespace psido;
using testutil::rel_err;

namespace {

RealVector iid_normal(int n, std::uint64_t seed) {
    Rng rng(seed);
    return standard_normal(rng, n);
}

RealVector ar1(int n, double phi, std::uint64_t seed) {
    Rng rng(seed);
    const RealVector e = standard_normal(rng, n);
    RealVector x(n);
    x[0] = e[0] / std::sqrt(1.0 - phi * phi);
    for (int i = 1; i < n; ++i) x[i] = phi * x[i - 1] + e[i];
    return x;
}

// Objective equal to 0.5 <m - mu, P (m - mu)> for a Gaussian with operator precision P.
class GaussianProblem : public ObjectiveProblem {
public:
    GaussianProblem(const BiharmonicPrior& prior, double misfit_weight) : prior_(prior), w_(misfit_weight) {}
    [[nodiscard]] const Grid2D& grid() const override { return prior_.grid(); }
    [[nodiscard]] double misfit(const Field& m) const override { return 0.5 * w_ * dot(m, m); }
    [[nodiscard]] double objective(const Field& m) const override { return misfit(m) + prior_.cost(m); }
    [[nodiscard]] Field gradient(const Field& m) const override { return w_ * m + prior_.apply_precision(m - prior_.mean()); }
    [[nodiscard]] LinearOperator misfit_hessian() const override {
        return LinearOperator(grid(), [w = w_](const Field& v) { return w * v; });
    }

private:
    BiharmonicPrior prior_;
    double w_;
};

ChainConfig short_chain(int n, std::uint64_t seed, const Grid2D& g) {
    ChainConfig cfg;
    cfg.n_samples = n;
    cfg.seed = seed;
    cfg.probe_points = default_probe_points(g);
    return cfg;
}

}  // namespace

TEST(Ess, IidSamplesGiveFullLength) {
    const int n = 20000;
    const double e = ess(iid_normal(n, 1));
    EXPECT_GT(e, 0.8 * n);
    EXPECT_LE(e, n);
}

TEST(Ess, Ar1MatchesIntegratedAutocorrelation) {
    const int n = 200000;
    for (double phi : {0.5, 0.9}) {
        const double expected = n * (1.0 - phi) / (1.0 + phi);
        EXPECT_NEAR(ess(ar1(n, phi, 2)), expected, 0.1 * expected) << phi;
    }
}

TEST(Ess, ConstantTraceIsOne) { EXPECT_EQ(ess(RealVector::Constant(500, 3.0)), 1.0); }

TEST(Ess, ShortTraceThrows) {
    EXPECT_THROW(ess(RealVector::Zero(99)), TraceTooShort);
    EXPECT_THROW(autocorrelation(RealVector::Zero(10)), TraceTooShort);
}

TEST(Autocorrelation, MatchesDirectSum) {
    const RealVector x = ar1(300, 0.7, 3);
    const RealVector acf = autocorrelation(x);
    const RealVector c = x.array() - x.mean();
    const double c0 = c.squaredNorm();
    for (int k : {0, 1, 5, 50, 299}) {
        const double direct = c.head(300 - k).dot(c.tail(300 - k)) / c0;
        EXPECT_NEAR(acf[k], direct, 1e-12) << k;
    }
}

TEST(Histogram, CountsEverySample) {
    const RealVector x = iid_normal(10000, 4);
    const Histogram h = histogram(x);
    long total = 0;
    for (long c : h.counts) total += c;
    EXPECT_EQ(total, 10000);
    EXPECT_EQ(h.lo, x.minCoeff());
    EXPECT_NEAR(h.lo + h.width * static_cast<double>(h.counts.size()), x.maxCoeff(), 1e-12);
    // Freedman-Diaconis on N(0, 1): width about 2 * 1.349 * n^(-1/3).
    EXPECT_NEAR(h.width, 2.0 * 1.349 / std::cbrt(10000.0), 0.1 * h.width);
}

TEST(Histogram, DegenerateInputs) {
    const Histogram h = histogram(RealVector::Constant(7, 1.5));
    ASSERT_EQ(h.counts.size(), 1u);
    EXPECT_EQ(h.counts[0], 7);
    EXPECT_THROW(histogram(RealVector()), InvalidArgument);
}

TEST(ChainConfig, Validation) {
    const Grid2D g(8, 8);
    ChainConfig c;
    c.beta = 1.0;
    EXPECT_THROW(c.validate(g), InvalidArgument);
    c = {};
    c.n_samples = 100;
    c.burn_in = 100;
    EXPECT_THROW(c.validate(g), InvalidArgument);
    c = {};
    c.probe_points = {64};
    EXPECT_THROW(c.validate(g), IndexOutOfRange);
    EXPECT_EQ(ChainConfig{}.effective_burn_in(), 2000);
}

TEST(Pcn, AcceptsEverythingWithoutMisfit) {
    const Grid2D g(12, 12);
    const BiharmonicPrior prior(g, 0.3, 1.0);
    const GaussianProblem prob(prior, 0.0);
    const Chain ch = run_pcn(prob, prior, short_chain(2000, 5, g));
    EXPECT_EQ(ch.accepted, 2000);
    EXPECT_EQ(ch.max_delta_change, 0.0);
}

TEST(Pcn, RecoversPriorVariance) {
    const Grid2D g(8, 8);
    const BiharmonicPrior prior(g, 0.5, 1.0);
    const GaussianProblem prob(prior, 0.0);
    ChainConfig cfg = short_chain(20000, 6, g);
    cfg.beta = 0.9;
    const Chain ch = run_pcn(prob, prior, cfg);
    const ChainStatistics st = chain_statistics(ch);
    const double sd = std::sqrt(prior.pointwise_variance());
    EXPECT_NEAR(st.stddev.values.mean(), sd, 0.05 * sd);
}

TEST(Gpcn, ExactReferenceAcceptsEverything) {
    // The reference equals the target: Delta is constant and every proposal is accepted.
    const Grid2D g(12, 12);
    const BiharmonicPrior prior(g, 0.3, 1.0);
    const GaussianProblem prob(prior, 0.0);
    const LaplaceApproximation la = make_laplace(Field(g), build_spd_factor(std::nullopt, prior));
    ChainConfig cfg = short_chain(3000, 7, g);
    cfg.beta = 0.5;
    const Chain ch = run_gpcn(prob, la, cfg);
    EXPECT_EQ(ch.accepted, 3000);
    EXPECT_LT(ch.max_delta_change, 1e-9);
}

TEST(Gpcn, LowRankReferenceOnMisfitProblem) {
    // misfit 0.5 w |m|^2 whitened by the prior has generalized eigenvalues w / r(xi):
    // with every pair retained the low-rank reference is exact.
    const Grid2D g(8, 8);
    const BiharmonicPrior prior(g, 0.5, 1.0);
    const GaussianProblem prob(prior, 2.0);
    const GenEigPairs pairs = randomized_gen_eig(prob.misfit_hessian(), prior, 64, 0, 0, 8);
    ChainConfig cfg = short_chain(2000, 9, g);
    cfg.beta = 0.7;
    const Chain ch = run_gpcn(prob, lowrank_reference(Field(g), pairs, prior), cfg);
    EXPECT_EQ(ch.accepted, 2000);
    EXPECT_LT(ch.max_delta_change, 1e-8);
}

TEST(Chains, DeterministicUnderSeed) {
    const QuadraticProblem qp([] {
        QuadraticModelParams p;
        p.nx = 10;
        p.nz = 10;
        return p;
    }());
    ChainConfig cfg = short_chain(500, 10, qp.grid());
    const Chain a = run_pcn(qp, qp.prior(), cfg);
    const Chain b = run_pcn(qp, qp.prior(), cfg);
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.probe_traces[0], b.probe_traces[0]);
    cfg.seed = 11;
    const Chain c = run_pcn(qp, qp.prior(), cfg);
    EXPECT_NE(a.probe_traces[0], c.probe_traces[0]);
}

TEST(Chains, ThinningAndTraces) {
    const Grid2D g(8, 8);
    const BiharmonicPrior prior(g, 0.5, 1.0);
    const GaussianProblem prob(prior, 1.0);
    ChainConfig cfg = short_chain(1000, 12, g);
    cfg.burn_in = 200;
    cfg.thin = 7;
    const Chain ch = run_pcn(prob, prior, cfg);
    EXPECT_EQ(ch.samples.size(), 115u);  // ceil(800 / 7)
    EXPECT_EQ(ch.stats_count, 800);
    ASSERT_EQ(ch.probe_traces.size(), 5u);
    EXPECT_EQ(ch.probe_traces[0].size(), 1000);
    EXPECT_EQ(ch.probe_traces[2][998], ch.samples.back().values[cfg.probe_points[2]]);
    const double a = ch.acceptance_rate();
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
}

TEST(Chains, StatisticsOfIdenticalStatesHaveZeroSpread) {
    Chain ch;
    ch.grid = Grid2D(4, 4);
    ch.config.n_samples = 200;
    ch.config.burn_in = 0;
    ch.stats_count = 200;
    ch.stats_mean = RealVector::Constant(16, 2.0);
    ch.stats_m2 = RealVector::Zero(16);
    ch.probe_traces = {RealVector::Constant(200, 2.0)};
    const ChainStatistics st = chain_statistics(ch);
    EXPECT_EQ(st.stddev.values.maxCoeff(), 0.0);
    EXPECT_EQ(st.ess[0], 1.0);
}

TEST(TuneBeta, FindsBandOnMonotoneModel) {
    int calls = 0;
    const auto acc = [&](double b) {
        ++calls;
        return std::exp(-8.0 * b);  // acceptance falls with step size
    };
    const double b = tune_beta(acc);
    EXPECT_GE(acc(b), 0.2);
    EXPECT_LE(acc(b), 0.4);
    EXPECT_LE(calls, 11);
}

TEST(DefaultProbePoints, InsideGridAndDistinct) {
    const Grid2D g(64, 32);
    const auto pts = default_probe_points(g);
    ASSERT_EQ(pts.size(), 5u);
    std::set<int> uniq(pts.begin(), pts.end());
    EXPECT_EQ(uniq.size(), 5u);
    for (int p : pts) {
        EXPECT_GE(p, 0);
        EXPECT_LT(p, static_cast<int>(g.size()));
    }
}
