#pragma once

#include "factorcov/types.hpp"

#include <cstdint>
#include <random>

namespace factorcov {

/// splitmix64 finalizer; maps (master, stream) to an independent-looking seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// rows x cols iid N(0, sd^2), filled column by column.
inline Matrix normal_matrix(Index rows, Index cols, double sd, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) out(i, j) = sd * dist(rng);
    }
    return out;
}

}  // namespace factorcov
