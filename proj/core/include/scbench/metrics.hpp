#pragma once

#include "scbench/models.hpp"
#include "scbench/types.hpp"

#include <utility>
#include <vector>

namespace scbench {

struct MetricsRecord {
    double latent_mcc = 0.0;
    double dict_mcc = 0.0;
    double mse = 0.0;
    double l0_mean = 0.0;
    double l1_mean = 0.0;
    double dead_fraction = 0.0;
};

/// Auto uses Hungarian for square problems and greedy otherwise. Hungarian
/// on a rectangular problem pads it to square.
enum class MatchMode { Auto, Hungarian, Greedy };

struct MatchResult {
    std::vector<std::pair<Index, Index>> pairs;  // (true index, learned index)
    std::vector<double> abs_corr;
};

struct MccResult {
    double value = 0.0;
    MatchResult match;
};

/// p x q Pearson correlations between the columns of A (n x p) and B
/// (n x q). Zero-variance columns correlate 0 with everything.
Matrix correlation_matrix(const Matrix& A, const Matrix& B);

/// Maximum-weight assignment of rows to columns. Returns, for each row, the
/// assigned column or -1 when rows outnumber columns.
std::vector<Index> max_weight_assignment(const Matrix& score);

/// Mean absolute correlation over a one-to-one matching of true and learned
/// features.
MccResult mcc(const Matrix& truth, const Matrix& learned, MatchMode mode = MatchMode::Auto);

/// MCC between dictionaries, correlating atoms across their M coordinates.
double dictionary_mcc(const Dictionary& truth, const Dictionary& learned,
                      MatchMode mode = MatchMode::Auto);

struct SparsityStats {
    double l0_mean = 0.0;
    double l1_mean = 0.0;
    double dead_fraction = 0.0;
};

/// l0 counts |entry| > threshold per row; a column is dead when no entry
/// exceeds the threshold.
SparsityStats sparsity_stats(const Matrix& codes, double threshold);

/// Mean over all entries of (X - X_hat)^2.
double mean_squared_error(const Matrix& X, const Matrix& X_hat);

struct GramReport {
    Matrix gram;                   // D^T D
    double max_offdiag = 0.0;
    double identity_deviation = 0.0;  // ||G - I||_F
};

GramReport gram_analysis(const Dictionary& dict);

/// Numerical check of the linear-nonlinear encoder's recovery limit. Feeds
/// the one-hot sources S = I through x = D_probe s and the bias-free SAE
/// encoder, so the pre-activation matrix is S' = S D_probe^T W_e^T.
struct RankWitness {
    int rank = 0;
    int sources = 0;
    std::vector<double> singular_values;
    bool one_hot_recovered = false;  // ReLU(S') == |S| on every one-hot source
    bool pairs_recovered = false;    // same for every two-sparse e_i + e_j
    bool gap_certificate = false;    // rank < N and some probe source fails
};

RankWitness sae_rank_witness(const SaeModel& sae, const Dictionary& probe);

/// Numerical rank with singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& A, double rel_tol = 1e-8, std::vector<double>* singular_values = nullptr);

}  // namespace scbench
