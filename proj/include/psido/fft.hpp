#pragma once

// Continuous-convention Fourier transforms on a periodic grid:
//   forward:  v_hat(xi) = dx dz / (2 pi)^2 * sum_x exp(-i x.xi) v(x)
//   inverse:  v(x)      = sum_xi exp(i x.xi) v_hat(xi) dxi_x dxi_z
// Both are backed by FFTW; plans are cached per (nz, nx, direction).

#include <atomic>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "psido/grid.hpp"

namespace psido {

namespace detail {

class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan plan(int nz, int nx, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_tuple(nz, nx, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        ComplexVector in(nz * nx), out(nz * nx);
        fftw_plan p = fftw_plan_dft_2d(nz, nx, reinterpret_cast<fftw_complex*>(in.data()),
                                       reinterpret_cast<fftw_complex*>(out.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    FftPlanCache(const FftPlanCache&) = delete;
    FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline std::atomic<long long>& transform_counter() {
    static std::atomic<long long> counter{0};
    return counter;
}

// Raw unnormalized DFT, out-of-place.
inline ComplexVector raw_dft(const Grid2D& g, const ComplexVector& in, int sign) {
    ComplexVector out(in.size());
    fftw_plan p = FftPlanCache::instance().plan(g.nz, g.nx, sign);
    // fftw_execute_dft is thread-safe; the input is not modified for out-of-place complex plans.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    transform_counter().fetch_add(1, std::memory_order_relaxed);
    return out;
}

}  // namespace detail

/// Number of forward plus inverse transforms executed so far in this process.
inline long long transform_count() { return detail::transform_counter().load(); }

inline double forward_scale(const Grid2D& g) { return g.cell_area() / kTwoPiSq; }
inline double inverse_scale(const Grid2D& g) {
    return kTwoPiSq / (g.cell_area() * static_cast<double>(g.size()));
}

inline ComplexVector forward_complex(const Grid2D& g, const ComplexVector& v) {
    if (v.size() != static_cast<Eigen::Index>(g.size())) throw GridMismatch("forward_complex: length mismatch");
    ComplexVector out = detail::raw_dft(g, v, FFTW_FORWARD);
    out *= forward_scale(g);
    return out;
}

inline ComplexVector inverse_complex(const Grid2D& g, const ComplexVector& s) {
    if (s.size() != static_cast<Eigen::Index>(g.size())) throw GridMismatch("inverse_complex: length mismatch");
    ComplexVector out = detail::raw_dft(g, s, FFTW_BACKWARD);
    out *= inverse_scale(g);
    return out;
}

inline Spectrum forward_transform(const Field& f) {
    return Spectrum(f.grid, forward_complex(f.grid, f.values.cast<Complex>()));
}

/// Inverse transform to a real field. Throws NonHermitianInput when the
/// imaginary part of the result exceeds `tol` relative to its real part.
inline Field inverse_transform(const Spectrum& s, double tol = 1e-10) {
    const ComplexVector v = inverse_complex(s.grid, s.values);
    const double re = v.real().norm();
    const double im = v.imag().norm();
    if (im > tol * std::max(re, 1e-300) && im > 1e-300) {
        throw NonHermitianInput("inverse_transform: imaginary residual " + std::to_string(im / std::max(re, 1e-300)));
    }
    return Field(s.grid, v.real());
}

/// Hermitian part of a spectrum: 0.5 (s(k) + conj(s(-k))).
inline ComplexVector hermitian_part(const Grid2D& g, const ComplexVector& s) {
    ComplexVector out(s.size());
    for (int i = 0; i < s.size(); ++i) out[i] = 0.5 * (s[i] + std::conj(s[g.negated_frequency_index(i)]));
    return out;
}

/// Applies a real Fourier multiplier m(xi) to a real field.
inline Field apply_multiplier(const Field& f, const RealVector& multiplier) {
    if (multiplier.size() != f.values.size()) throw GridMismatch("apply_multiplier: length mismatch");
    ComplexVector s = forward_complex(f.grid, f.values.cast<Complex>());
    s = s.cwiseProduct(multiplier.cast<Complex>());
    return Field(f.grid, inverse_complex(f.grid, s).real());
}

}  // namespace psido
