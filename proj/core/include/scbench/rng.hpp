#pragma once

#include "scbench/types.hpp"

#include <cstdint>
#include <random>

namespace scbench {

/// Named sub-streams derived from one experiment seed. Each stream gets an
/// independent engine so that, e.g., changing the number of codes drawn never
/// perturbs the dictionary.
enum class Stream : std::uint64_t {
    Dictionary = 1,
    Codes = 2,
    EncoderInit = 3,
    DecoderInit = 4,
    CodeInit = 5,
    Resample = 6,
    Minibatch = 7,
    Probe = 8,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Mixes (seed, stream) into an engine seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    Rng(std::uint64_t seed, Stream stream)
        : engine_(derive_seed(seed, static_cast<std::uint64_t>(stream))) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    /// Uniform integer in [0, n).
    Index below(Index n) {
        return std::uniform_int_distribution<Index>(0, n - 1)(engine_);
    }

    Matrix normal_matrix(Index rows, Index cols, double stddev = 1.0);
    Vector unit_vector(Index dim);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace scbench
