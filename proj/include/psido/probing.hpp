#pragma once

// Hessian approximations from a handful of operator applications.
//
//  * PSF: delta probes give point spread functions p_k; each converts to a
//    symbol row s(x_k, .) = (2 pi)^2 conj(F p_k), and rows are blended with
//    bilinear hat weights in x.
//  * PDO: one sum-of-sinusoids probe gives symbol columns s(., xi_k); columns
//    are blended in xi with (rho / rho_k)^order times angular trigonometric
//    cardinal functions.
//  * PSF+: SVD basis of the rows, spatial coefficients refined against the
//    columns by Tikhonov-regularized least squares.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "psido/fft.hpp"
#include "psido/psido.hpp"

namespace psido {

// ---------------------------------------------------------------------------
// PSF probing

struct PsfProbePlan {
    std::vector<int> lattice_x;              // grid columns of the sample lattice
    std::vector<int> lattice_z;              // grid rows of the sample lattice
    std::vector<int> points;                 // grid indices, z-major over the lattice
    std::vector<std::vector<int>> batches;   // positions into `points`
    int extraction_radius = 0;

    [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

inline std::vector<int> spread(int n, int count, int margin) {
    if (count < 1) throw InvalidArgument("PSF plan: need at least one point per axis");
    std::vector<int> out;
    if (count == 1) {
        out.push_back((n - 1) / 2);
        return out;
    }
    const double lo = margin;
    const double hi = n - 1 - margin;
    if (hi - lo < count - 1) throw SeparationViolated("PSF plan: lattice does not fit inside the margin");
    for (int i = 0; i < count; ++i) out.push_back(static_cast<int>(std::lround(lo + (hi - lo) * i / (count - 1))));
    return out;
}

inline int chebyshev(const Grid2D& g, int a, int b) {
    return std::max(std::abs(g.ix_of(a) - g.ix_of(b)), std::abs(g.iz_of(a) - g.iz_of(b)));
}

}  // namespace detail

/// Checks the batching invariants; throws SeparationViolated.
inline void validate_psf_plan(const PsfProbePlan& plan, const Grid2D& g) {
    const int r = plan.extraction_radius;
    if (r < 0) throw InvalidArgument("PSF plan: negative extraction radius");
    std::vector<int> seen(plan.points.size(), 0);
    for (const auto& batch : plan.batches) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ++seen.at(static_cast<std::size_t>(batch[i]));
            for (std::size_t j = i + 1; j < batch.size(); ++j) {
                if (detail::chebyshev(g, plan.points[batch[i]], plan.points[batch[j]]) < 2 * r + 1)
                    throw SeparationViolated("PSF plan: points in one batch closer than 2*radius+1");
            }
        }
    }
    for (int s : seen)
        if (s != 1) throw InvalidArgument("PSF plan: batches must partition the points");
    for (int p : plan.points) {
        const int ix = g.ix_of(p), iz = g.iz_of(p);
        if (ix < r || iz < r || ix > g.nx - 1 - r || iz > g.nz - 1 - r)
            throw SeparationViolated("PSF plan: point inside the boundary margin");
    }
}

/// Regular lattice of px x pz points grouped into four interleaved batches
/// (lattice parity), so each probe holds every other point in both axes.
/// With radius < 0 the largest admissible extraction radius is chosen.
inline PsfProbePlan make_psf_plan(const Grid2D& g, int px, int pz, int radius = -1) {
    auto build = [&](int r) {
        PsfProbePlan plan;
        plan.extraction_radius = r;
        plan.lattice_x = detail::spread(g.nx, px, r);
        plan.lattice_z = detail::spread(g.nz, pz, r);
        std::vector<std::vector<int>> groups(4);
        for (int j = 0; j < pz; ++j)
            for (int i = 0; i < px; ++i) {
                groups[static_cast<std::size_t>((j % 2) * 2 + (i % 2))].push_back(static_cast<int>(plan.points.size()));
                plan.points.push_back(g.index(plan.lattice_x[i], plan.lattice_z[j]));
            }
        for (auto& grp : groups)
            if (!grp.empty()) plan.batches.push_back(std::move(grp));
        validate_psf_plan(plan, g);
        return plan;
    };
    if (radius >= 0) return build(radius);
    for (int r = std::min(g.nx, g.nz) / 2; r >= 0; --r) {
        try {
            return build(r);
        } catch (const SeparationViolated&) {
        }
    }
    throw SeparationViolated("PSF plan: no admissible extraction radius");
}

/// One field per batch: sum of discrete deltas of weight 1 / (dx dz).
inline std::vector<Field> build_delta_probes(const PsfProbePlan& plan, const Grid2D& g) {
    validate_psf_plan(plan, g);
    std::vector<Field> probes;
    for (const auto& batch : plan.batches) {
        Field f(g);
        for (int pos : batch) f.values[plan.points[pos]] += 1.0 / g.cell_area();
        probes.push_back(std::move(f));
    }
    return probes;
}

struct PsfSet {
    PsfProbePlan plan;
    std::vector<Field> psfs;   // p_k re-centred at the grid origin (periodic)
    ComplexMatrix rows;        // symbol rows, one per point
};

/// s(x_k, xi) = (2 pi)^2 conj(F p_k)(xi) for every PSF.
inline ComplexMatrix psf_symbol_rows(const std::vector<Field>& psfs) {
    if (psfs.empty()) return {};
    const Grid2D& g = psfs.front().grid;
    ComplexMatrix rows(static_cast<Eigen::Index>(psfs.size()), static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < psfs.size(); ++k)
        rows.row(static_cast<Eigen::Index>(k)) = (kTwoPiSq * forward_transform(psfs[k]).values.conjugate()).transpose();
    return rows;
}

inline PsfSet extract_psfs(const PsfProbePlan& plan, const std::vector<Field>& responses) {
    if (responses.size() != plan.batches.size()) throw InvalidArgument("extract_psfs: need one response per batch");
    const Grid2D& g = responses.front().grid;
    const int r = plan.extraction_radius;
    PsfSet set;
    set.plan = plan;
    set.psfs.assign(plan.points.size(), Field(g));
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        require_same_grid(g, responses[b].grid, "extract_psfs");
        for (int pos : plan.batches[b]) {
            const int cx = g.ix_of(plan.points[pos]);
            const int cz = g.iz_of(plan.points[pos]);
            Field& p = set.psfs[static_cast<std::size_t>(pos)];
            for (int oz = -r; oz <= r; ++oz)
                for (int ox = -r; ox <= r; ++ox) {
                    const int sx = ((cx + ox) % g.nx + g.nx) % g.nx;
                    const int sz = ((cz + oz) % g.nz + g.nz) % g.nz;
                    p.at((ox + g.nx) % g.nx, (oz + g.nz) % g.nz) = responses[b].at(sx, sz);
                }
        }
    }
    set.rows = psf_symbol_rows(set.psfs);
    return set;
}

/// Applies `op` to every delta probe and extracts the PSFs.
inline PsfSet probe_psfs(const LinearOperator& op, const PsfProbePlan& plan) {
    std::vector<Field> responses;
    for (const Field& probe : build_delta_probes(plan, op.grid())) responses.push_back(op.apply(probe));
    return extract_psfs(plan, responses);
}

namespace detail {

// Piecewise-linear cardinal functions on sorted nodes, clamped outside.
inline RealMatrix hat_functions(const std::vector<int>& nodes, int n) {
    RealMatrix h = RealMatrix::Zero(static_cast<Eigen::Index>(nodes.size()), n);
    for (int i = 0; i < n; ++i) {
        if (nodes.size() == 1 || i <= nodes.front()) {
            h(0, i) = 1.0;
            continue;
        }
        if (i >= nodes.back()) {
            h(static_cast<Eigen::Index>(nodes.size()) - 1, i) = 1.0;
            continue;
        }
        std::size_t k = 0;
        while (nodes[k + 1] < i) ++k;
        const double t = static_cast<double>(i - nodes[k]) / (nodes[k + 1] - nodes[k]);
        h(static_cast<Eigen::Index>(k), i) = 1.0 - t;
        h(static_cast<Eigen::Index>(k) + 1, i) = t;
    }
    return h;
}

}  // namespace detail

/// Tensor-product hat weights on the lattice lx x lz (z-major order), constant
/// beyond the outermost lattice lines: w_k >= 0, sum_k w_k = 1, w_k(x_j) = delta_kj.
inline std::vector<Field> lattice_hat_weights(const Grid2D& g, const std::vector<int>& lx, const std::vector<int>& lz) {
    const RealMatrix hx = detail::hat_functions(lx, g.nx);
    const RealMatrix hz = detail::hat_functions(lz, g.nz);
    std::vector<Field> w;
    for (std::size_t j = 0; j < lz.size(); ++j)
        for (std::size_t i = 0; i < lx.size(); ++i) {
            Field f(g);
            for (int iz = 0; iz < g.nz; ++iz)
                for (int ix = 0; ix < g.nx; ++ix)
                    f.at(ix, iz) = hx(static_cast<Eigen::Index>(i), ix) * hz(static_cast<Eigen::Index>(j), iz);
            w.push_back(std::move(f));
        }
    return w;
}

inline std::vector<Field> build_psf_weights(const PsfProbePlan& plan, const Grid2D& g) {
    return lattice_hat_weights(g, plan.lattice_x, plan.lattice_z);
}

/// Product-convolution operator as a low-rank symbol: a_k = w_k, b_k = row k.
inline LowRankSymbol assemble_psf_operator(const ComplexMatrix& rows, const std::vector<Field>& weights) {
    if (rows.rows() != static_cast<Eigen::Index>(weights.size())) throw InvalidArgument("assemble_psf_operator: count mismatch");
    const Grid2D& g = weights.front().grid;
    std::vector<ComplexVector> b;
    for (Eigen::Index k = 0; k < rows.rows(); ++k) b.push_back(rows.row(k).transpose());
    return LowRankSymbol::from_real(g, weights, std::move(b));
}

inline LowRankSymbol assemble_psf_operator(const PsfSet& set, const std::vector<Field>& weights) {
    return assemble_psf_operator(set.rows, weights);
}

// ---------------------------------------------------------------------------
// PDO probing

struct FrequencyBand {
    double f_min = 0.0;
    double f_max = 0.0;
    double c_min = 0.0;
    double c_max = 0.0;
};

struct PdoProbePlan {
    double rho0 = 0.0;
    std::vector<double> angles;   // angle of each snapped sample frequency
    std::vector<double> radii;    // |xi_k| of each snapped sample frequency
    std::vector<int> freq_index;  // grid frequency index of xi_k
    double mask_radius = 0.0;     // radians per unit length
    double rolloff = 2.0;         // cosine rolloff width inside the mask, in cells of the coarser frequency axis

    [[nodiscard]] int size() const { return static_cast<int>(freq_index.size()); }
};

namespace detail {

inline double frequency_distance(const Grid2D& g, int a, int b) {
    const int dxi = std::abs(Grid2D::signed_index(g.ix_of(a), g.nx) - Grid2D::signed_index(g.ix_of(b), g.nx));
    const int dzi = std::abs(Grid2D::signed_index(g.iz_of(a), g.nz) - Grid2D::signed_index(g.iz_of(b), g.nz));
    const int wx = std::min(dxi, g.nx - dxi);  // periodic wrap
    const int wz = std::min(dzi, g.nz - dzi);
    return std::hypot(wx * g.dxi_x(), wz * g.dxi_z());
}

inline int snap_frequency(const Grid2D& g, double kx, double kz) {
    const int jx = static_cast<int>(std::lround(kx / g.dxi_x()));
    const int jz = static_cast<int>(std::lround(kz / g.dxi_z()));
    if (2 * std::abs(jx) >= g.nx || 2 * std::abs(jz) >= g.nz)
        throw InvalidArgument("choose_probe_frequencies: sample frequency beyond Nyquist");
    return g.index((jx % g.nx + g.nx) % g.nx, (jz % g.nz + g.nz) % g.nz);
}

}  // namespace detail

/// Sample frequencies on a circle of radius rho0 at n equally spaced angles
/// 2 pi k / n, snapped to the grid with exact antipodal pairing.
inline PdoProbePlan choose_probe_frequencies(const Grid2D& g, double rho0, int n_angles, double rolloff = 2.0) {
    if (n_angles < 2 || n_angles % 2 != 0) throw InvalidArgument("choose_probe_frequencies: n_angles must be even and >= 2");
    if (!(rho0 > 0.0)) throw InvalidArgument("choose_probe_frequencies: rho0 must be positive");
    const FreqGrid fg = freq_coords(g);
    PdoProbePlan plan;
    plan.rho0 = rho0;
    plan.rolloff = rolloff;
    const int half = n_angles / 2;
    plan.freq_index.resize(static_cast<std::size_t>(n_angles));
    for (int k = 0; k < half; ++k) {
        const double th = kTwoPi * k / n_angles;
        const int idx = detail::snap_frequency(g, rho0 * std::cos(th), rho0 * std::sin(th));
        plan.freq_index[static_cast<std::size_t>(k)] = idx;
        plan.freq_index[static_cast<std::size_t>(k + half)] = g.negated_frequency_index(idx);
    }
    for (int idx : plan.freq_index) {
        plan.angles.push_back(fg.angle(idx));
        plan.radii.push_back(fg.magnitude(idx));
    }
    // antipodal partners get angle + pi exactly
    for (int k = 0; k < half; ++k) plan.angles[static_cast<std::size_t>(k + half)] = plan.angles[static_cast<std::size_t>(k)] + std::numbers::pi;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plan.freq_index.size(); ++i)
        for (std::size_t j = i + 1; j < plan.freq_index.size(); ++j) {
            if (plan.freq_index[i] == plan.freq_index[j]) throw InvalidArgument("choose_probe_frequencies: sample frequencies collide on this grid");
            dmin = std::min(dmin, detail::frequency_distance(g, plan.freq_index[i], plan.freq_index[j]));
        }
    plan.mask_radius = 0.5 * dmin;
    return plan;
}

/// Band-driven choice: rho0 = f_max / c_max (frequencies in angular units).
inline PdoProbePlan choose_probe_frequencies(const Grid2D& g, const FrequencyBand& band, int n_angles, double rolloff = 2.0) {
    if (!(band.f_min > 0.0 && band.c_min > 0.0 && band.f_max > band.f_min && band.c_max >= band.c_min))
        throw InvalidArgument("choose_probe_frequencies: invalid band");
    if (!(band.f_max / band.f_min > band.c_max / band.c_min))
        throw BandTooNarrow("choose_probe_frequencies: f_max/f_min must exceed c_max/c_min");
    return choose_probe_frequencies(g, band.f_max / band.c_max, n_angles, rolloff);
}

/// v_p(x) = sum_k exp(i x . xi_k); real because the frequencies pair up.
inline Field build_sinusoid_probe(const PdoProbePlan& plan, const Grid2D& g) {
    const FreqGrid fg = freq_coords(g);
    Field v(g);
    for (int k = 0; k < plan.size() / 2; ++k) {
        const int idx = plan.freq_index[static_cast<std::size_t>(k)];
        const double kx = fg.kx(idx), kz = fg.kz(idx);
        for (int iz = 0; iz < g.nz; ++iz)
            for (int ix = 0; ix < g.nx; ++ix) v.at(ix, iz) += 2.0 * std::cos(kx * g.x_of(ix) + kz * g.z_of(iz));
    }
    return v;
}

/// Plane wave exp(i x . xi) for the frequency index `idx`.
inline ComplexVector plane_wave(const Grid2D& g, int idx) {
    const FreqGrid fg = freq_coords(g);
    const double kx = fg.kx(idx), kz = fg.kz(idx);
    ComplexVector phi(static_cast<Eigen::Index>(g.size()));
    for (int iz = 0; iz < g.nz; ++iz)
        for (int ix = 0; ix < g.nx; ++ix) phi[g.index(ix, iz)] = std::polar(1.0, kx * g.x_of(ix) + kz * g.z_of(iz));
    return phi;
}

/// Spectral mask around the frequency `center`: 1 inside, cosine rolloff to 0
/// at mask_radius. The rolloff width is given in cells of the coarser axis.
inline RealVector spectral_mask(const Grid2D& g, int center, double mask_radius, double rolloff) {
    RealVector m(static_cast<Eigen::Index>(g.size()));
    const double inner = std::max(0.0, mask_radius - rolloff * std::max(g.dxi_x(), g.dxi_z()));
    for (int i = 0; i < m.size(); ++i) {
        const double d = detail::frequency_distance(g, i, center);
        if (d <= inner) m[i] = 1.0;
        else if (d >= mask_radius) m[i] = 0.0;
        else m[i] = 0.5 * (1.0 + std::cos(std::numbers::pi * (d - inner) / (mask_radius - inner)));
    }
    return m;
}

struct SymbolColumns {
    Grid2D grid;
    PdoProbePlan plan;
    ComplexMatrix cols;  // N x r
};

inline SymbolColumns extract_symbol_columns(const PdoProbePlan& plan, const Field& response) {
    const Grid2D& g = response.grid;
    const ComplexVector rhat = forward_complex(g, response.values.cast<Complex>());
    SymbolColumns out{g, plan, ComplexMatrix(static_cast<Eigen::Index>(g.size()), plan.size())};
    for (int k = 0; k < plan.size(); ++k) {
        const int idx = plan.freq_index[static_cast<std::size_t>(k)];
        const RealVector mask = spectral_mask(g, idx, plan.mask_radius, plan.rolloff);
        const ComplexVector part = inverse_complex(g, rhat.cwiseProduct(mask.cast<Complex>()));
        out.cols.col(k) = part.cwiseProduct(plane_wave(g, idx).conjugate());
    }
    return out;
}

inline SymbolColumns probe_symbol_columns(const LinearOperator& op, const PdoProbePlan& plan) {
    return extract_symbol_columns(plan, op.apply(build_sinusoid_probe(plan, op.grid())));
}

namespace detail {

// Real trigonometric basis of dimension n (n even): 1, cos t, sin t, ...,
// cos((n/2-1)t), sin((n/2-1)t), cos((n/2)t).
inline RealVector trig_basis(double t, int n) {
    RealVector b(n);
    b[0] = 1.0;
    int c = 1;
    for (int m = 1; m < n / 2; ++m) {
        b[c++] = std::cos(m * t);
        b[c++] = std::sin(m * t);
    }
    b[c] = std::cos((n / 2) * t);
    return b;
}

}  // namespace detail

/// w_k(xi) = (|xi| / rho_k)^radial_order * w_k^circle(arg xi), where w^circle
/// are the trigonometric cardinal functions through the sample angles. For
/// equally spaced angles these are the periodic Dirichlet kernels.
inline std::vector<ComplexVector> build_pdo_weights(const PdoProbePlan& plan, const Grid2D& g, double radial_order = 1.0) {
    const int n = plan.size();
    RealMatrix vander(n, n);
    for (int j = 0; j < n; ++j) vander.row(j) = detail::trig_basis(plan.angles[static_cast<std::size_t>(j)], n).transpose();
    const RealMatrix coeff = vander.inverse();  // column k: cardinal function k
    const FreqGrid fg = freq_coords(g);
    std::vector<ComplexVector> w(static_cast<std::size_t>(n), ComplexVector::Zero(static_cast<Eigen::Index>(g.size())));
    for (int i = 0; i < static_cast<int>(g.size()); ++i) {
        const double rho = fg.magnitude(i);
        if (rho == 0.0) continue;
        const RealVector basis = detail::trig_basis(fg.angle(i), n);
        const RealVector card = coeff.transpose() * basis;
        for (int k = 0; k < n; ++k)
            w[static_cast<std::size_t>(k)][i] = std::pow(rho / plan.radii[static_cast<std::size_t>(k)], radial_order) * card[k];
    }
    return w;
}

/// s(x, xi) ~ sum_k Re s(x, xi_k) w_k(xi). `max_imag` receives the largest
/// discarded imaginary magnitude.
inline LowRankSymbol assemble_pdo_operator(const ComplexMatrix& cols, const std::vector<ComplexVector>& weights,
                                           const Grid2D& g, double* max_imag = nullptr) {
    if (cols.cols() != static_cast<Eigen::Index>(weights.size())) throw InvalidArgument("assemble_pdo_operator: count mismatch");
    std::vector<Field> a;
    for (Eigen::Index k = 0; k < cols.cols(); ++k) a.emplace_back(g, cols.col(k).real());
    if (max_imag) *max_imag = cols.size() ? cols.imag().cwiseAbs().maxCoeff() : 0.0;
    return LowRankSymbol::from_real(g, a, weights);
}

inline LowRankSymbol assemble_pdo_operator(const SymbolColumns& cols, const std::vector<ComplexVector>& weights,
                                           double* max_imag = nullptr) {
    return assemble_pdo_operator(cols.cols, weights, cols.grid, max_imag);
}

// ---------------------------------------------------------------------------
// PSF+

struct PsfPlusOptions {
    int basis_rank = 0;            // 0: choose by singular-value threshold
    double sv_threshold = 1e-2;    // relative to the largest singular value
};

struct PsfPlusResult {
    LowRankSymbol symbol;
    int basis_rank = 0;
    double alpha = 0.0;
    RealVector singular_values;
};

/// rows: r_rows x N symbol rows; row_weights: spatial weights per row;
/// cols: N x r_cols symbol columns at frequency indices `col_freqs`.
inline PsfPlusResult build_psf_plus(const ComplexMatrix& rows, const std::vector<Field>& row_weights,
                                    const ComplexMatrix& cols, const std::vector<int>& col_freqs,
                                    const PsfPlusOptions& opt = {}) {
    if (row_weights.empty() || rows.rows() != static_cast<Eigen::Index>(row_weights.size()))
        throw InvalidArgument("build_psf_plus: row/weight count mismatch");
    if (cols.cols() != static_cast<Eigen::Index>(col_freqs.size())) throw InvalidArgument("build_psf_plus: column count mismatch");
    const Grid2D& g = row_weights.front().grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    if (rows.cols() != n || cols.rows() != n) throw GridMismatch("build_psf_plus: sample length");
    if (opt.basis_rank > rows.rows()) throw RankTooLarge("build_psf_plus: basis_rank exceeds number of rows");

    // (i) S_psf = W rows, (ii) rows = U S V^H, B = leading V^H rows, A0 = W U S.
    Eigen::BDCSVD<ComplexMatrix> svd(rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector sv = svd.singularValues();
    int rank = opt.basis_rank;
    if (rank <= 0) {
        rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv[i] > opt.sv_threshold * sv[0]) ++rank;
        rank = std::max(rank, 1);
    }
    const ComplexMatrix basis = svd.matrixV().leftCols(rank).adjoint();                      // rank x N
    const ComplexMatrix coef = svd.matrixU().leftCols(rank) * sv.head(rank).cast<Complex>().asDiagonal();  // r_rows x rank
    RealMatrix wmat(n, rows.rows());
    for (Eigen::Index k = 0; k < rows.rows(); ++k) wmat.col(k) = row_weights[static_cast<std::size_t>(k)].values;
    const ComplexMatrix a0 = wmat.cast<Complex>() * coef;  // N x rank

    // (iii) min |A B_c - S_c|^2 + alpha |A - A0|^2, alpha = |B_c|^2 / |B|^2.
    ComplexMatrix bc(rank, static_cast<Eigen::Index>(col_freqs.size()));
    for (std::size_t j = 0; j < col_freqs.size(); ++j) bc.col(static_cast<Eigen::Index>(j)) = basis.col(col_freqs[j]);
    const double alpha = bc.squaredNorm() / basis.squaredNorm();
    const ComplexMatrix lhs = bc * bc.adjoint() + alpha * ComplexMatrix::Identity(rank, rank);
    const ComplexMatrix rhs = cols * bc.adjoint() + alpha * a0;
    // A = rhs * lhs^-1  <=>  lhs^H A^H = rhs^H (lhs is Hermitian)
    const ComplexMatrix a = lhs.ldlt().solve(rhs.adjoint()).adjoint();

    std::vector<ComplexVector> af, bf;
    for (int k = 0; k < rank; ++k) {
        af.push_back(a.col(k));
        bf.push_back(basis.row(k).transpose());
    }
    return {LowRankSymbol(g, std::move(af), std::move(bf)), rank, alpha, sv};
}

// ---------------------------------------------------------------------------
// Practical corrections

struct HighPassSpec {
    double cutoff = 0.0;
    double transition_width = 0.0;
};

/// q(xi): 0 below cutoff - width/2, 1 above cutoff + width/2, raised cosine between.
inline RealVector highpass_multiplier(const Grid2D& g, const HighPassSpec& hp) {
    if (!(hp.cutoff > 0.0) || hp.transition_width < 0.0) throw InvalidArgument("HighPassSpec: invalid cutoff/width");
    const double lo = hp.cutoff - 0.5 * hp.transition_width;
    const double hi = hp.cutoff + 0.5 * hp.transition_width;
    return frequency_magnitudes(g).unaryExpr([=](double r) {
        if (r <= lo) return 0.0;
        if (r >= hi) return 1.0;
        return 0.5 * (1.0 - std::cos(std::numbers::pi * (r - lo) / (hi - lo)));
    });
}

/// v -> Q H Q v.
inline LinearOperator wrap_highpass(LinearOperator op, const HighPassSpec& hp) {
    const RealVector q = highpass_multiplier(op.grid(), hp);
    const Grid2D g = op.grid();
    return LinearOperator(g, [op = std::move(op), q](const Field& v) {
        return apply_multiplier(op.apply(apply_multiplier(v, q)), q);
    });
}

/// Entrywise sqrt(max(Re s, 0)); imaginary parts are dropped.
inline RealMatrix pointwise_sqrt_samples(const ComplexMatrix& samples, double* max_imag = nullptr) {
    if (max_imag) *max_imag = samples.size() ? samples.imag().cwiseAbs().maxCoeff() : 0.0;
    return samples.real().unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
}

}  // namespace psido
