#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <filesystem>

#include "psido/approximation.hpp"
#include "psido/quadratic_model.hpp"
#include "test_util.hpp"

using namespace psido;
using testutil::rel_err;

namespace {

QuadraticProblem small_problem(int n) {
    QuadraticModelParams p;
    p.nx = n;
    p.nz = n;
    return QuadraticProblem(p);
}

SpdFactor psfplus_factor(const QuadraticProblem& qp, const ApproxConfig& cfg = {}) {
    const ProbeData d = probe_hessian(qp.data_hessian(), cfg);
    return approximate_factor(d, Method::psfplus, qp.prior(), qp.window(), cfg);
}

RealMatrix symmetric(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

double op_norm(const RealMatrix& m) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetric(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST(SpdFactor, NoMisfitGivesPriorSquareRoot) {
    const Grid2D g(16, 16);
    const BiharmonicPrior prior(g, 0.1, 1.0);
    const SpdFactor f = build_spd_factor(std::nullopt, prior);
    Rng rng(1);
    const Field v = testutil::random_field(g, rng);
    EXPECT_LT(rel_err(psido_apply(f.factor, v), prior.apply_power(v, 0.5)), 1e-10);
    EXPECT_LT(rel_err(psido_apply(f.factor, psido_apply(f.inverse, v)), v), 1e-10);
}

TEST(SpdFactor, ConstantSymbolWithNegligiblePrior) {
    const Grid2D g(16, 16);
    const BiharmonicPrior prior(g, 1e-9, 1e-12);
    const double c = 2.5;
    const LowRankSymbol sym = LowRankSymbol::separable(Field::constant(g, c), ComplexVector::Ones(static_cast<Eigen::Index>(g.size())));
    const SpdFactor f = build_spd_factor(sym, prior);
    Rng rng(2);
    const Field v = testutil::random_field(g, rng);
    EXPECT_LT(rel_err(psido_apply(f.factor, psido_apply_adjoint(f.factor, v)), c * c * v), 1e-10);
}

TEST(SpdFactor, InverseIsCloseOnQuadraticModel) {
    const QuadraticProblem qp = small_problem(32);
    const SpdFactor f = psfplus_factor(qp);
    Rng rng(3);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const Field v = testutil::random_field(qp.grid(), rng);
        worst = std::max(worst, rel_err(psido_apply(f.factor, psido_apply(f.inverse, v)), v));
    }
    EXPECT_LT(worst, 0.1);
}

TEST(Correction, ExactFactorNeedsNoCorrection) {
    // H = M M^T with M = K^-1 exactly: take M a pure multiplier.
    const Grid2D g(12, 12);
    const BiharmonicPrior prior(g, 0.3, 1.0);
    const SpdFactor f = build_spd_factor(std::nullopt, prior);
    const Correction c = build_correction(prior.precision_operator(), f, 5, 4);
    EXPECT_LT(c.values.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Correction, RankOneRecovery) {
    const Grid2D g(12, 12);
    const BiharmonicPrior prior(g, 0.3, 1.0);
    const SpdFactor f = build_spd_factor(std::nullopt, prior);
    Rng rng(5);
    const Field u = 0.7 * testutil::random_field(g, rng);
    const double u2 = dot(u, u);
    // H = M M^T + M u u^T M^T
    const LinearOperator h(g, [&](const Field& v) {
        Field out = prior.apply_precision(v);
        const Field mu = psido_apply(f.factor, u);
        out += dot(mu, v) * mu;
        return out;
    });
    const Correction c = build_correction(h, f, 1, 6);
    ASSERT_EQ(c.rank(), 1);
    EXPECT_NEAR(c.values[0], u2, 1e-8 * u2);
    EXPECT_NEAR(std::abs(dot(c.vectors[0], u)) / std::sqrt(u2), 1.0, 1e-10);
}

TEST(Correction, OrthonormalAndClipped) {
    const QuadraticProblem qp = small_problem(16);
    const SpdFactor f = psfplus_factor(qp);
    const Correction c = build_correction(qp.full_hessian(), f, 10, 7);
    for (int i = 0; i < c.rank(); ++i) {
        EXPECT_GT(c.values[i], -1.0 + 1e-7);
        for (int j = 0; j < c.rank(); ++j) EXPECT_NEAR(dot(c.vectors[i], c.vectors[j]), i == j ? 1.0 : 0.0, 1e-8);
    }
}

TEST(Correction, DenseErrorSmallAndNonIncreasing) {
    const QuadraticProblem qp = small_problem(16);
    const Grid2D& g = qp.grid();
    const SpdFactor f = psfplus_factor(qp);
    const RealMatrix h = symmetric(dense_materialize(qp.full_hessian()));
    double prev = std::numeric_limits<double>::infinity();
    double last = 0.0;
    for (int k : {0, 10, 20, 30}) {
        const LaplaceApproximation la = build_laplace(Field(g), f, qp.full_hessian(), k, 8);
        // Precision of the sampling distribution: inverse of its covariance.
        const RealMatrix prec = symmetric(dense_materialize(la.covariance_operator())).inverse();
        const double err = op_norm(prec - h) / op_norm(h);
        EXPECT_LE(err, prev * 1.02) << k;
        prev = err;
        last = err;
    }
    EXPECT_LT(last, 0.05);
}

TEST(Laplace, SampleCovarianceConsistency) {
    const QuadraticProblem qp = small_problem(12);
    const Grid2D& g = qp.grid();
    const LaplaceApproximation la = build_laplace(Field(g), psfplus_factor(qp), qp.full_hessian(), 10, 9);
    const RealMatrix s = dense_materialize(LinearOperator(g, [&](const Field& z) { return la.sampling_map(z); }));
    const RealMatrix c = dense_materialize(la.covariance_operator());
    EXPECT_LT((s * s.transpose() - c).norm() / c.norm(), 1e-10);
}

TEST(Laplace, EmptyCorrectionPriorFactorSamplesPrior) {
    const Grid2D g(12, 12);
    const BiharmonicPrior prior(g, 0.3, 1.0);
    const LaplaceApproximation la = make_laplace(Field(g), build_spd_factor(std::nullopt, prior));
    Rng a(10), b(10);
    EXPECT_LT(rel_err(laplace_sample(la, a), prior.sample_zero_mean(b)), 1e-10);
    EXPECT_EQ(laplace_sample(la, 11).values, laplace_sample(la, 11).values);
}

TEST(Laplace, QuadFormChangeOfVariables) {
    const QuadraticProblem qp = small_problem(12);
    const Grid2D& g = qp.grid();
    const LaplaceApproximation la = build_laplace(Field(g), psfplus_factor(qp), qp.full_hessian(), 10, 12);
    EXPECT_EQ(quad_form(la, Field(g)), 0.0);
    Field z(g);
    z.at(3, 4) = 1.0 / std::sqrt(g.cell_area());
    EXPECT_NEAR(quad_form(la, la.sampling_map(z)), 0.5 * dot(z, z), 1e-8);
    Rng rng(13);
    const Field w = white_noise(g, rng);
    EXPECT_NEAR(quad_form(la, la.sampling_map(w)), 0.5 * dot(w, w), 1e-8 * dot(w, w));
}

TEST(Laplace, QuadFormMatchesDensePrecision) {
    const QuadraticProblem qp = small_problem(12);
    const Grid2D& g = qp.grid();
    const LaplaceApproximation la = build_laplace(Field(g), psfplus_factor(qp), qp.full_hessian(), 10, 14);
    const RealMatrix prec = symmetric(dense_materialize(la.covariance_operator())).inverse();
    Rng rng(15);
    const Field v = testutil::random_field(g, rng);
    const double dense = 0.5 * g.cell_area() * v.values.dot(prec * v.values);
    EXPECT_NEAR(quad_form(la, v), dense, 1e-8 * dense);
}

TEST(Laplace, QuadFormOfSamplesIsHalfChiSquared) {
    const QuadraticProblem qp = small_problem(8);
    const Grid2D& g = qp.grid();
    const LaplaceApproximation la = build_laplace(Field(g), psfplus_factor(qp), qp.full_hessian(), 10, 16);
    const int n = 10000;
    std::vector<double> q;
    Rng rng(17);
    for (int i = 0; i < n; ++i) q.push_back(2.0 * quad_form(la, la.sampling_map(white_noise(g, rng))));
    std::sort(q.begin(), q.end());
    const boost::math::chi_squared chi(static_cast<double>(g.size()));
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = boost::math::cdf(chi, q[static_cast<std::size_t>(i)]);
        d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
    }
    // Kolmogorov-Smirnov critical value at level 0.01.
    EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(Laplace, PrecisionIsPositive) {
    const QuadraticProblem qp = small_problem(16);
    const Grid2D& g = qp.grid();
    const LaplaceApproximation la = build_laplace(Field(g), psfplus_factor(qp), qp.full_hessian(), 10, 18);
    Rng rng(19);
    for (int t = 0; t < 100; ++t) {
        const Field v = testutil::random_field(g, rng);
        ASSERT_GT(dot(v, la.apply_precision_estimate(v)), 0.0);
        ASSERT_GT(dot(v, la.apply_covariance(v)), 0.0);
    }
}

TEST(Laplace, WhitenedResidualReducesToLowRankSampler) {
    // With M = R^(1/2) and H = R + H_d, the whitened correction is the
    // generalized eigenproblem; the sampler must match the low-rank formula.
    const QuadraticProblem qp = small_problem(10);
    const Grid2D& g = qp.grid();
    const BiharmonicPrior& prior = qp.prior();
    const SpdFactor f = build_spd_factor(std::nullopt, prior);
    const int n = static_cast<int>(g.size());
    const LaplaceApproximation la = build_laplace(Field(g), f, qp.full_hessian(), n, 20);
    const RealMatrix exact = symmetric(dense_materialize(qp.full_hessian())).inverse();
    const RealMatrix cov = dense_materialize(la.covariance_operator());
    EXPECT_LT((cov - exact).norm() / exact.norm(), 1e-8);
}

TEST(Laplace, SaveLoadRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "psido_laplace_test";
    std::filesystem::remove_all(dir);
    const QuadraticProblem qp = small_problem(12);
    const Grid2D& g = qp.grid();
    Rng rng(21);
    const LaplaceApproximation la = build_laplace(testutil::random_field(g, rng), psfplus_factor(qp), qp.full_hessian(), 5, 22);
    save_laplace(dir, la, {{"seed", 22}});
    const LaplaceApproximation back = load_laplace(dir);
    EXPECT_EQ(back.m_map.values, la.m_map.values);
    const Field v = testutil::random_field(g, rng);
    EXPECT_EQ(back.sampling_map(v).values, la.sampling_map(v).values);
    std::filesystem::remove_all(dir);
}
