#pragma once

// Low-rank posterior from the generalized eigenproblem H_d v = lambda R v:
//
//   (H~_d + R)^-1 = R^-1 - V D V^T,           D = diag(lambda / (lambda + 1))
//   zeta = (I - V S V^T R) z,  z ~ N(0, R^-1),  S = I - (Lambda + I)^(-1/2)
//
// V is R-orthonormal. Solved by a two-pass randomized method: probe R^-1 H_d,
// R-orthonormalize, then Rayleigh-Ritz in the R inner product.

#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "psido/hpf1.hpp"
#include "psido/linalg.hpp"
#include "psido/prior.hpp"

namespace psido {

struct GenEigPairs {
    RealVector eigenvalues;      // descending, clipped at 0
    std::vector<Field> vectors;  // R-orthonormal

    [[nodiscard]] int rank() const { return static_cast<int>(vectors.size()); }
};

namespace detail {

// Basis of range(y) orthonormal in <., R .>_area; drops dependent directions.
inline RealMatrix r_orthonormalize(const RealMatrix& y, const BiharmonicPrior& prior) {
    const Grid2D& g = prior.grid();
    RealMatrix q = y;
    for (int pass = 0; pass < 2; ++pass) {
        const RealMatrix rq = apply_columns(prior.precision_operator(), q);
        RealMatrix gram = g.cell_area() * (q.transpose() * rq);
        gram = 0.5 * (gram + gram.transpose());
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram);
        const double top = es.eigenvalues().maxCoeff();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i)
            if (es.eigenvalues()[i] > 1e-13 * top) keep.push_back(i);
        RealMatrix t(gram.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j)
            t.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()[keep[j]]);
        q = q * t;
    }
    return q;
}

}  // namespace detail

inline GenEigPairs randomized_gen_eig(const LinearOperator& hd, const BiharmonicPrior& prior, int r,
                                      int oversample = 10, int power_iters = 2, std::uint64_t seed = 0) {
    if (r < 1) throw InvalidArgument("randomized_gen_eig: r must be >= 1");
    const Grid2D& g = prior.grid();
    require_same_grid(g, hd.grid(), "randomized_gen_eig");
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::Index l = std::min<Eigen::Index>(n, r + std::max(0, oversample));
    const LinearOperator cov = prior.power_operator(-1.0);
    const LinearOperator pencil = compose(cov, hd);  // R^-1 H_d

    Rng rng(seed);
    RealMatrix omega(n, l);
    for (Eigen::Index j = 0; j < l; ++j) omega.col(j) = standard_normal(rng, n);
    RealMatrix q = detail::r_orthonormalize(apply_columns(pencil, omega), prior);
    for (int it = 0; it < power_iters; ++it) q = detail::r_orthonormalize(apply_columns(pencil, q), prior);

    RealMatrix t = g.cell_area() * (q.transpose() * apply_columns(hd, q));
    t = 0.5 * (t + t.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(t);
    const auto m = t.rows();
    const auto kk = std::min<Eigen::Index>(r, m);
    GenEigPairs out;
    out.eigenvalues.resize(kk);
    for (Eigen::Index i = 0; i < kk; ++i) {
        const Eigen::Index src = m - 1 - i;  // ascending -> descending
        out.eigenvalues[i] = std::max(0.0, es.eigenvalues()[src]);
        out.vectors.emplace_back(g, q * es.eigenvectors().col(src));
    }
    return out;
}

/// R^-1 v - V D V^T v, with V^T v = <V_i, v>_area.
inline Field lowrank_posterior_apply_inverse(const GenEigPairs& pairs, const BiharmonicPrior& prior, const Field& v) {
    Field out = prior.apply_covariance(v);
    for (int i = 0; i < pairs.rank(); ++i) {
        const double lam = pairs.eigenvalues[i];
        out -= (lam / (lam + 1.0) * dot(pairs.vectors[static_cast<std::size_t>(i)], v)) * pairs.vectors[static_cast<std::size_t>(i)];
    }
    return out;
}

/// (R + R V Lambda V^T R) v.
inline Field lowrank_posterior_apply(const GenEigPairs& pairs, const BiharmonicPrior& prior, const Field& v) {
    Field out = prior.apply_precision(v);
    Field acc(v.grid);
    for (int i = 0; i < pairs.rank(); ++i)
        acc += (pairs.eigenvalues[i] * dot(pairs.vectors[static_cast<std::size_t>(i)], out)) * pairs.vectors[static_cast<std::size_t>(i)];
    out += prior.apply_precision(acc);
    return out;
}

/// zeta = (I - V S V^T R) z for a given prior draw z.
inline Field lowrank_transform(const GenEigPairs& pairs, const BiharmonicPrior& prior, const Field& z) {
    Field out = z;
    if (pairs.rank() == 0) return out;
    const Field rz = prior.apply_precision(z);
    for (int i = 0; i < pairs.rank(); ++i) {
        const double s = 1.0 - 1.0 / std::sqrt(pairs.eigenvalues[i] + 1.0);
        out -= (s * dot(pairs.vectors[static_cast<std::size_t>(i)], rz)) * pairs.vectors[static_cast<std::size_t>(i)];
    }
    return out;
}

/// Sampling map from area-scaled white noise: w -> (I - V S V^T R) R^(-1/2) w.
inline Field lowrank_sampling_map(const GenEigPairs& pairs, const BiharmonicPrior& prior, const Field& w) {
    return lowrank_transform(pairs, prior, prior.apply_power(w, -0.5));
}

inline Field lowrank_sample(const GenEigPairs& pairs, const BiharmonicPrior& prior, Rng& rng) {
    return lowrank_sampling_map(pairs, prior, white_noise(prior.grid(), rng));
}

inline Field lowrank_sample(const GenEigPairs& pairs, const BiharmonicPrior& prior, std::uint64_t seed) {
    Rng rng(seed);
    return lowrank_sample(pairs, prior, rng);
}

inline void save_eigenpairs(const std::filesystem::path& dir, const GenEigPairs& pairs, const Grid2D& g) {
    std::filesystem::create_directories(dir);
    hpf1::write(dir / "eigenvalues.hpf", hpf1::from_vector(pairs.eigenvalues));
    for (int i = 0; i < pairs.rank(); ++i)
        hpf1::write_field(dir / ("v_" + std::to_string(i) + ".hpf"), pairs.vectors[static_cast<std::size_t>(i)]);
    const nlohmann::json m = {{"kind", "gen_eig_pairs"}, {"rank", pairs.rank()}, {"nx", g.nx}, {"nz", g.nz}, {"dx", g.dx}, {"dz", g.dz}};
    std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

inline GenEigPairs load_eigenpairs(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw MissingArtifacts("load_eigenpairs: no manifest in " + dir.string());
    const nlohmann::json m = nlohmann::json::parse(is);
    const Grid2D g(m.at("nx").get<int>(), m.at("nz").get<int>(), m.at("dx").get<double>(), m.at("dz").get<double>());
    GenEigPairs pairs;
    pairs.eigenvalues = hpf1::to_vector(hpf1::read(dir / "eigenvalues.hpf"));
    for (int i = 0; i < m.at("rank").get<int>(); ++i) pairs.vectors.push_back(hpf1::read_field(dir / ("v_" + std::to_string(i) + ".hpf"), g));
    return pairs;
}

}  // namespace psido
