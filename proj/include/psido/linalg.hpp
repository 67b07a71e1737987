#pragma once

// Matrix-free helpers: blocks of fields, randomized symmetric eigensolver,
// preconditioned CG. Inner products are area-weighted; since the weight is a
// constant, the adjoint of any operator coincides with its Euclidean transpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "psido/operator.hpp"
#include "psido/random.hpp"

namespace psido {

inline RealMatrix to_matrix(const std::vector<Field>& fs) {
    if (fs.empty()) return {};
    RealMatrix m(fs.front().values.size(), static_cast<Eigen::Index>(fs.size()));
    for (std::size_t j = 0; j < fs.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = fs[j].values;
    return m;
}

inline std::vector<Field> to_fields(const Grid2D& g, const RealMatrix& m) {
    std::vector<Field> fs;
    for (Eigen::Index j = 0; j < m.cols(); ++j) fs.emplace_back(g, m.col(j));
    return fs;
}

inline RealMatrix apply_columns(const LinearOperator& op, const RealMatrix& x) {
    RealMatrix y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) y.col(j) = op.apply(Field(op.grid(), x.col(j))).values;
    return y;
}

/// Orthonormal basis (Euclidean) of range(y), dropping numerically dependent columns.
inline RealMatrix orthonormal_basis(const RealMatrix& y, double rel_tol = 1e-12) {
    Eigen::ColPivHouseholderQR<RealMatrix> qr(y);
    const RealMatrix r = qr.matrixR().template triangularView<Eigen::Upper>();
    const double top = y.cols() ? std::abs(r(0, 0)) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < std::min(r.rows(), r.cols()); ++i)
        if (std::abs(r(i, i)) > rel_tol * top) ++rank;
    return qr.householderQ() * RealMatrix::Identity(y.rows(), rank);
}

struct SymmetricEigenpairs {
    RealVector values;
    std::vector<Field> vectors;  // orthonormal in the area-weighted inner product
};

/// Leading eigenpairs of a symmetric operator by randomized range finding with
/// power iterations and Rayleigh-Ritz. With by_magnitude the pairs are ranked
/// by |lambda|, otherwise by lambda (descending).
inline SymmetricEigenpairs randomized_symmetric_eig(const LinearOperator& op, int k, int oversample, int power_iters,
                                                    std::uint64_t seed, bool by_magnitude = false) {
    const Grid2D& g = op.grid();
    const auto n = static_cast<Eigen::Index>(g.size());
    if (k < 0) throw InvalidArgument("randomized_symmetric_eig: negative rank");
    SymmetricEigenpairs out;
    if (k == 0) return out;
    const Eigen::Index l = std::min<Eigen::Index>(n, k + std::max(0, oversample));
    Rng rng(seed);
    RealMatrix omega(n, l);
    for (Eigen::Index j = 0; j < l; ++j) omega.col(j) = standard_normal(rng, n);
    RealMatrix q = orthonormal_basis(apply_columns(op, omega));
    for (int it = 0; it < power_iters; ++it) q = orthonormal_basis(apply_columns(op, q));
    const RealMatrix aq = apply_columns(op, q);
    RealMatrix t = q.transpose() * aq;
    t = 0.5 * (t + t.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(t);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(t.rows()));
    std::iota(order.begin(), order.end(), 0);
    const RealVector ev = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return by_magnitude ? std::abs(ev[a]) > std::abs(ev[b]) : ev[a] > ev[b];
    });
    const auto kk = std::min<Eigen::Index>(k, t.rows());
    out.values.resize(kk);
    const double scale = 1.0 / std::sqrt(g.cell_area());
    for (Eigen::Index i = 0; i < kk; ++i) {
        out.values[i] = ev[order[static_cast<std::size_t>(i)]];
        out.vectors.emplace_back(g, scale * (q * es.eigenvectors().col(order[static_cast<std::size_t>(i)])));
    }
    return out;
}

struct CgResult {
    Field solution;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Preconditioned CG for SPD `op`; `precond` approximates op^-1 (identity if invalid).
inline CgResult pcg(const LinearOperator& op, const Field& rhs, const LinearOperator& precond = {},
                    double rel_tol = 1e-10, int max_iter = 500) {
    const Grid2D& g = op.grid();
    CgResult res{Field(g), 0, 0.0};
    const double bnorm = norm(rhs);
    if (bnorm == 0.0) return res;
    Field r = rhs;
    Field z = precond.valid() ? precond.apply(r) : r;
    Field p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        const Field ap = op.apply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw CGNoConvergence("pcg: operator not positive definite along search direction");
        const double alpha = rz / pap;
        res.solution += alpha * p;
        r -= alpha * ap;
        res.iterations = it;
        res.relative_residual = norm(r) / bnorm;
        if (res.relative_residual <= rel_tol) return res;
        z = precond.valid() ? precond.apply(r) : r;
        const double rz_new = dot(r, z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw CGNoConvergence("pcg: no convergence in " + std::to_string(max_iter) + " iterations (residual " +
                          std::to_string(res.relative_residual) + ")");
}

}  // namespace psido
