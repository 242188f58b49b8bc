#pragma once

#include "scbench/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scbench {

enum class CodeDistribution { Uniform, Zipf };

std::string to_string(CodeDistribution d);
CodeDistribution code_distribution_from_string(const std::string& s);

/// Parameters of the synthetic compressed-sensing generator.
struct GenConfig {
    int n_sources = 16;       // N
    int n_measurements = 8;   // M
    int k_active = 3;         // K
    int n_samples = 2048;
    std::uint64_t seed = 0;
    CodeDistribution distribution = CodeDistribution::Uniform;
    double alpha = 1.0;       // Zipf exponent, ignored for Uniform

    /// Throws ConfigError unless 1 <= K <= N, M >= 1, n >= 1 and alpha > 0
    /// for Zipf. M >= N is accepted.
    void validate() const;
};

/// Observations X = S * D^T together with the codes that produced them.
struct Dataset {
    Matrix X;  // n x M
    Matrix S;  // n x N
    Dictionary dictionary;
    GenConfig config;
};

/// A contiguous block of rows of a Dataset.
struct DataSplit {
    Matrix X;
    Matrix S;

    Index size() const noexcept { return X.rows(); }
};

/// Gaussian M x N matrix with unit-norm columns; deterministic in seed.
Dictionary generate_dictionary(int measurements, int sources, std::uint64_t seed);

/// n x N code matrix with exactly K non-zeros per row.
///
/// Uniform: support drawn uniformly without replacement, values N(0, 1).
/// Zipf: dimension r (1-based rank) is selected with probability
/// proportional to r^-alpha, without replacement; its value is N(0, 1)
/// scaled by r^-alpha.
Matrix generate_codes(const GenConfig& cfg);

Dataset generate_dataset(const GenConfig& cfg);

/// Normalised selection weights r^-alpha / sum_r r^-alpha, r = 1..N.
std::vector<double> zipf_selection_weights(int sources, double alpha);

/// K ln(N / K): the plotting convention for the compressed-sensing boundary.
double recovery_boundary(int sources, int active);

/// First half of the rows for training, the remainder for testing.
std::pair<DataSplit, DataSplit> split_even(const Dataset& data);

}  // namespace scbench
