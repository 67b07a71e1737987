#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <fstream>
#include <numbers>

#include "psido/fft.hpp"
#include "psido/hpf1.hpp"
#include "test_util.hpp"

using namespace psido;
using testutil::rel_err;

TEST(Grid, RejectsTinyOrDegenerateGrids) {
    EXPECT_THROW(Grid2D(3, 8), InvalidArgument);
    EXPECT_THROW(Grid2D(8, 8, 0.0, 1.0), InvalidArgument);
    EXPECT_EQ(Grid2D(8, 6).size(), 48u);
}

TEST(Grid, FrequencyCoordinates) {
    const Grid2D g(4, 6, 1.0, 0.5);
    const FreqGrid f = freq_coords(g);
    const double q = kTwoPi / 4.0;
    EXPECT_DOUBLE_EQ(f.xi_x[0], 0.0);
    EXPECT_DOUBLE_EQ(f.xi_x[1], q);
    EXPECT_DOUBLE_EQ(f.xi_x[2], -2.0 * q);
    EXPECT_DOUBLE_EQ(f.xi_x[3], -q);
    EXPECT_DOUBLE_EQ(f.magnitude(0), 0.0);
    EXPECT_DOUBLE_EQ(Grid2D(8, 8, 0.5, 0.5).nyquist(), std::numbers::pi / 0.5);
}

TEST(Grid, FieldLengthAndGridChecks) {
    const Grid2D g(8, 8);
    EXPECT_THROW(Field(g, RealVector::Zero(10)), InvalidArgument);
    EXPECT_THROW(dot(Field(g), Field(Grid2D(8, 8, 2.0))), GridMismatch);
}

TEST(Fft, ConstantMapsToZeroFrequency) {
    const Grid2D g(8, 6, 0.5, 2.0);
    const Spectrum s = forward_transform(Field::constant(g, 1.0));
    const double expected = g.nx * g.nz * g.cell_area() / kTwoPiSq;
    EXPECT_NEAR(s.values[0].real(), expected, 1e-12);
    EXPECT_LT(s.values.tail(s.values.size() - 1).norm(), 1e-12);
}

TEST(Fft, DeltaHasFlatSpectrum) {
    const Grid2D g(8, 8, 0.5, 0.25);
    Field d(g);
    d.at(3, 5) = 1.0 / g.cell_area();
    const Spectrum s = forward_transform(d);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) EXPECT_NEAR(std::abs(s.values[i]), 1.0 / kTwoPiSq, 1e-12);
}

TEST(Fft, MatchesDirectSummation) {
    const Grid2D g(6, 4, 0.7, 1.3);
    Rng rng(1);
    const Field f = testutil::random_field(g, rng);
    const ComplexVector direct = testutil::naive_forward_matrix(g) * f.values.cast<Complex>();
    EXPECT_LT((forward_transform(f).values - direct).norm() / direct.norm(), 1e-13);
}

TEST(Fft, RoundTripAcrossGridSizes) {
    Rng rng(2);
    for (int n : {8, 16, 32, 64, 128}) {
        const Grid2D g(n, n / 2 + 4, 1.0, 0.5);
        const Field f = testutil::random_field(g, rng);
        EXPECT_LT(rel_err(inverse_transform(forward_transform(f)), f), 1e-12) << n;
    }
}

TEST(Fft, HermitianSymmetryOfRealInput) {
    const Grid2D g(10, 8);
    Rng rng(3);
    const Spectrum s = forward_transform(testutil::random_field(g, rng));
    for (int i = 0; i < static_cast<int>(g.size()); ++i)
        EXPECT_LT(std::abs(s.values[i] - std::conj(s.values[g.negated_frequency_index(i)])), 1e-12 * s.values.norm());
}

TEST(Fft, HermitianPairGivesCosine) {
    const Grid2D g(16, 8, 0.5, 1.0);
    Spectrum s(g);
    const int k = g.index(3, 2);
    s.values[k] = 1.0;
    s.values[g.negated_frequency_index(k)] = 1.0;
    const Field f = inverse_transform(s);
    const double amp = 2.0 * inverse_scale(g);
    for (int iz = 0; iz < g.nz; ++iz)
        for (int ix = 0; ix < g.nx; ++ix)
            EXPECT_NEAR(f.at(ix, iz), amp * std::cos(g.xi_x(3) * g.x_of(ix) + g.xi_z(2) * g.z_of(iz)), 1e-12 * amp);
}

TEST(Fft, SingleZeroFrequencyEntryGivesConstant) {
    const Grid2D g(8, 8);
    Spectrum s(g);
    s.values[0] = 2.0;
    const Field f = inverse_transform(s);
    EXPECT_LT((f.values.array() - f.values[0]).abs().maxCoeff(), 1e-14);
}

TEST(Fft, RoundTripOfRandomHermitianSpectrum) {
    const Grid2D g(12, 10);
    Rng rng(4);
    const auto n = static_cast<Eigen::Index>(g.size());
    ComplexVector raw = standard_normal(rng, n).cast<Complex>() + Complex(0, 1) * standard_normal(rng, n).cast<Complex>();
    const Spectrum s(g, hermitian_part(g, raw));
    EXPECT_LT((forward_transform(inverse_transform(s)).values - s.values).norm() / s.values.norm(), 1e-12);
}

TEST(Fft, NonHermitianSpectrumIsRejected) {
    const Grid2D g(8, 8);
    Spectrum s(g);
    s.values[g.index(1, 0)] = 1.0;
    EXPECT_THROW(inverse_transform(s), NonHermitianInput);
}

TEST(Fft, LinearityAndParseval) {
    const Grid2D g(16, 12, 0.5, 0.75);
    Rng rng(5);
    const Field a = testutil::random_field(g, rng), b = testutil::random_field(g, rng);
    const ComplexVector lhs = forward_transform(2.0 * a - 3.0 * b).values;
    const ComplexVector rhs = 2.0 * forward_transform(a).values - 3.0 * forward_transform(b).values;
    EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-12);
    const double space = a.values.squaredNorm() * g.cell_area();
    const double freq = kTwoPiSq * forward_transform(a).values.squaredNorm() * g.dxi_x() * g.dxi_z();
    EXPECT_NEAR(space / freq, 1.0, 1e-10);
}

TEST(Fft, TransformCounterCounts) {
    const Grid2D g(8, 8);
    const long long before = transform_count();
    (void)inverse_transform(forward_transform(Field(g)));
    EXPECT_EQ(transform_count() - before, 2);
}

class Hpf1Test : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "psido_hpf1_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(Hpf1Test, FieldRoundTripAndLayout) {
    const Grid2D g(5, 4);
    Rng rng(6);
    const Field f = testutil::random_field(g, rng);
    hpf1::write_field(dir / "f.hpf", f);
    EXPECT_EQ(hpf1::read_field(dir / "f.hpf", g).values, f.values);
    std::ifstream is(dir / "f.hpf", std::ios::binary);
    char head[16];
    is.read(head, 16);
    EXPECT_EQ(std::string(head, 4), "HPF1");
    std::uint32_t words[3];
    std::memcpy(words, head + 4, 12);
    EXPECT_EQ(words[0], 2u);
    EXPECT_EQ(words[1], 4u);  // nz
    EXPECT_EQ(words[2], 5u);  // nx
    EXPECT_EQ(std::filesystem::file_size(dir / "f.hpf"), 16u + 8u * 20u);
}

TEST_F(Hpf1Test, ComplexRoundTripSetsFlag) {
    ComplexVector v(3);
    v << Complex(1, 2), Complex(-3, 0.5), Complex(0, -1);
    hpf1::write(dir / "c.hpf", hpf1::from_complex_vector(v));
    const hpf1::Array a = hpf1::read(dir / "c.hpf");
    EXPECT_TRUE(a.is_complex);
    EXPECT_EQ(hpf1::to_complex_vector(a), v);
}

TEST_F(Hpf1Test, BadMagicAndShapeMismatch) {
    std::ofstream(dir / "bad.hpf", std::ios::binary) << "NOPE0000000000000000";
    EXPECT_THROW(hpf1::read(dir / "bad.hpf"), FormatError);
    hpf1::write_field(dir / "f.hpf", Field(Grid2D(4, 4)));
    EXPECT_ANY_THROW(hpf1::read_field(dir / "f.hpf", Grid2D(8, 4)));
}
