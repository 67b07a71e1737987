#include <gtest/gtest.h>

#include "psido/quadratic_model.hpp"
#include "test_util.hpp"

using namespace psido;
using testutil::rel_err;

namespace {

QuadraticModelParams params(int nx, int nz) {
    QuadraticModelParams p;
    p.nx = nx;
    p.nz = nz;
    return p;
}

}  // namespace

TEST(QuadraticModel, ToySymbolIsRankThree) {
    const QuadraticProblem qp(params(32, 16));
    EXPECT_EQ(qp.symbol().rank(), 3);
}

TEST(QuadraticModel, ToySymbolMatchesClosedForm) {
    const QuadraticProblem qp(params(32, 24));
    const Grid2D& g = qp.grid();
    Rng rng(1);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(g.size()) - 1);
    for (int t = 0; t < 500; ++t) {
        const int x = pick(rng), f = pick(rng);
        const double exact = toy_symbol_closed_form(g, qp.window(), x, f);
        EXPECT_NEAR(qp.symbol().value(x, f).real(), exact, 1e-14 * std::max(1.0, std::abs(exact)));
        EXPECT_EQ(qp.symbol().value(x, f).imag(), 0.0);
    }
}

TEST(QuadraticModel, BandProfileShape) {
    EXPECT_EQ(band_profile(0.0, 1.0), 0.0);
    EXPECT_NEAR(band_profile(1e-4, 1.0) / std::sqrt(1e-4), 1.0, 1e-12);
    EXPECT_NEAR(band_profile(1.0, 1.0), std::exp(-1.0), 1e-15);
    // Past the band the profile is small relative to its peak.
    const Grid2D g(64, 64);
    const double rb = 0.7 * g.nyquist();
    double peak = 0.0;
    for (int i = 1; i <= 100; ++i) peak = std::max(peak, band_profile(i * g.nyquist() / 100.0, rb));
    EXPECT_LT(band_profile(g.nyquist(), rb), 0.05 * peak);
}

TEST(QuadraticModel, WindowVanishesOnBoundary) {
    const Grid2D g(20, 16);
    const Field w = make_window(g, 0.1, 0.15);
    for (int ix = 0; ix < g.nx; ++ix) {
        EXPECT_EQ(w.at(ix, 0), 0.0);
        EXPECT_EQ(w.at(ix, g.nz - 1), 0.0);
    }
    for (int iz = 0; iz < g.nz; ++iz) {
        EXPECT_EQ(w.at(0, iz), 0.0);
        EXPECT_EQ(w.at(g.nx - 1, iz), 0.0);
    }
    EXPECT_EQ(w.at(g.nx / 2, g.nz / 2), 1.0);
    EXPECT_GE(w.values.minCoeff(), 0.0);
    EXPECT_LE(w.values.maxCoeff(), 1.0);
}

TEST(QuadraticModel, ModesOrthonormal) {
    const QuadraticProblem qp(params(24, 16));
    const auto& v = qp.modes();
    ASSERT_EQ(v.size(), 10u);
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(dot(v[i], v[j]), i == j ? 1.0 : 0.0, 1e-12);
    EXPECT_NEAR(qp.mode_weights()[0], 100.0, 1e-10);
    EXPECT_NEAR(qp.mode_weights()[9], 1.0, 1e-12);
}

TEST(QuadraticModel, TargetScaledAndSeeded) {
    const Grid2D g(24, 16);
    const Field a = make_target(g, 3), b = make_target(g, 3), c = make_target(g, 4);
    EXPECT_NEAR(a.values.cwiseAbs().maxCoeff(), 1.0, 1e-15);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
}

TEST(QuadraticModel, DataMisfitVanishesAtTarget) {
    const QuadraticProblem qp(params(16, 16));
    EXPECT_NEAR(qp.data_misfit(qp.target()), 0.0, 1e-10 * dot(qp.rhs(), qp.target()));
    Rng rng(2);
    for (int t = 0; t < 5; ++t) EXPECT_GE(qp.data_misfit(testutil::random_field(qp.grid(), rng)), 0.0);
}

TEST(QuadraticModel, DataHessianSymmetricPositive) {
    const QuadraticProblem qp(params(16, 12));
    Rng rng(3);
    const LinearOperator h = qp.data_hessian();
    for (int t = 0; t < 5; ++t) {
        const Field u = testutil::random_field(qp.grid(), rng), v = testutil::random_field(qp.grid(), rng);
        const double a = dot(u, h.apply(v)), b = dot(v, h.apply(u));
        EXPECT_NEAR(a, b, 1e-12 * std::max(std::abs(a), 1.0));
        EXPECT_GT(dot(u, h.apply(u)), 0.0);
    }
}

TEST(QuadraticModel, GradientMatchesFiniteDifferences) {
    const QuadraticProblem qp(params(16, 16));
    Rng rng(4);
    const Field m = testutil::random_field(qp.grid(), rng), d = testutil::random_field(qp.grid(), rng);
    const double h = 1e-5;
    const double fd = (qp.objective(m + h * d) - qp.objective(m - h * d)) / (2.0 * h);
    const double an = dot(qp.gradient(m), d);
    EXPECT_NEAR(fd, an, 1e-6 * std::abs(an));
}

TEST(QuadraticModel, GradientDifferenceIsFullHessian) {
    const QuadraticProblem qp(params(16, 16));
    Rng rng(5);
    const Field m = testutil::random_field(qp.grid(), rng), v = testutil::random_field(qp.grid(), rng);
    EXPECT_LT(rel_err(qp.gradient(m + v) - qp.gradient(m), qp.full_hessian().apply(v)), 1e-10);
    EXPECT_LT(rel_err(qp.full_hessian().apply(v), qp.misfit_hessian().apply(v) + qp.prior().apply_precision(v)), 1e-14);
}

TEST(QuadraticModel, MisfitScaleIsLinear) {
    QuadraticModelParams p = params(12, 12);
    const QuadraticProblem one(p);
    p.misfit_scale = 30.0;
    const QuadraticProblem thirty(p);
    Rng rng(6);
    const Field v = testutil::random_field(one.grid(), rng);
    EXPECT_LT(rel_err(thirty.apply_data_hessian(v), 30.0 * one.apply_data_hessian(v)), 1e-14);
}

TEST(QuadraticModel, ExactPosteriorIsStationary) {
    const QuadraticProblem qp(params(12, 12));
    const ExactPosterior post = exact_posterior(qp);
    EXPECT_LT(norm(qp.gradient(post.mean)), 1e-9 * norm(qp.gradient(Field(qp.grid()))));
    const RealMatrix h = dense_materialize(qp.full_hessian());
    const RealMatrix id = h * post.covariance * qp.grid().cell_area();
    EXPECT_LT((id - RealMatrix::Identity(id.rows(), id.cols())).norm(), 1e-8);
    EXPECT_GT(post.stddev.values.minCoeff(), 0.0);
}

TEST(QuadraticModel, ExactPosteriorRefusesLargeGrids) {
    const QuadraticProblem qp(params(128, 64));
    EXPECT_THROW(exact_posterior(qp), TooLarge);
}

TEST(QuadraticModel, RejectsMismatchedTarget) {
    QuadraticModelParams p = params(12, 12);
    p.target = Field(Grid2D(8, 8));
    EXPECT_THROW(QuadraticProblem{p}, GridMismatch);
}
