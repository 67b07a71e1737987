#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "psido/grid.hpp"

namespace psido {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives a per-stage seed: mix64(global ^ fnv1a(stage)). Stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage, std::uint64_t counter = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return mix64(global_seed ^ h ^ mix64(counter));
}

inline RealVector standard_normal(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    RealVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

/// White noise with identity covariance in the area-weighted inner product:
/// E[<z,u><z,w>] = <u,w>.
inline Field white_noise(const Grid2D& g, Rng& rng) {
    return Field(g, standard_normal(rng, static_cast<Eigen::Index>(g.size())) / std::sqrt(g.cell_area()));
}

}  // namespace psido
