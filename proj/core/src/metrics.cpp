#include "scbench/metrics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scbench {

namespace {

/// Centres each column and scales it to unit norm; constant columns become 0.
Matrix standardise_columns(const Matrix& A) {
    Matrix z = A.rowwise() - A.colwise().mean();
    for (Index j = 0; j < z.cols(); ++j) {
        const double norm = z.col(j).norm();
        const double scale = A.col(j).cwiseAbs().maxCoeff();
        if (norm <= 1e-12 * std::max(1.0, scale) * std::sqrt(double(A.rows()))) {
            z.col(j).setZero();
        } else {
            z.col(j) /= norm;
        }
    }
    return z;
}

/// Shortest augmenting path Hungarian method for a rows <= cols cost
/// matrix (minimisation). Returns the column assigned to every row.
std::vector<Index> hungarian_min(const Matrix& cost) {
    const Index n = cost.rows(), m = cost.cols();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<Index> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const Index i0 = p[j0];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> row_to_col(static_cast<std::size_t>(n), -1);
    for (Index j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

MatchResult greedy_match(const Matrix& score) {
    struct Entry {
        double value;
        Index row, col;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(score.size()));
    for (Index i = 0; i < score.rows(); ++i)
        for (Index j = 0; j < score.cols(); ++j) entries.push_back({score(i, j), i, j});
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.value > b.value; });

    std::vector<char> row_used(score.rows(), 0), col_used(score.cols(), 0);
    const Index want = std::min(score.rows(), score.cols());
    MatchResult out;
    for (const Entry& e : entries) {
        if (static_cast<Index>(out.pairs.size()) == want) break;
        if (row_used[e.row] || col_used[e.col]) continue;
        row_used[e.row] = col_used[e.col] = 1;
        out.pairs.emplace_back(e.row, e.col);
        out.abs_corr.push_back(e.value);
    }
    return out;
}

MatchResult assignment_match(const Matrix& score) {
    std::vector<Index> assign = max_weight_assignment(score);
    MatchResult out;
    for (Index i = 0; i < score.rows(); ++i) {
        if (assign[i] < 0) continue;
        out.pairs.emplace_back(i, assign[i]);
        out.abs_corr.push_back(score(i, assign[i]));
    }
    return out;
}

}  // namespace

Matrix correlation_matrix(const Matrix& A, const Matrix& B) {
    require_shape(A.rows() == B.rows(), "correlation_matrix: row counts differ");
    if (A.rows() < 2) throw ConfigError("correlation requires at least two samples");
    Matrix corr = standardise_columns(A).transpose() * standardise_columns(B);
    return corr.cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<Index> max_weight_assignment(const Matrix& score) {
    if (score.rows() == 0 || score.cols() == 0) return std::vector<Index>(score.rows(), -1);
    if (score.rows() <= score.cols()) return hungarian_min(-score);
    // more rows than columns: solve the transpose and invert the map
    std::vector<Index> col_to_row = hungarian_min(-score.transpose());
    std::vector<Index> row_to_col(static_cast<std::size_t>(score.rows()), -1);
    for (Index j = 0; j < score.cols(); ++j) row_to_col[col_to_row[j]] = j;
    return row_to_col;
}

MccResult mcc(const Matrix& truth, const Matrix& learned, MatchMode mode) {
    const Matrix score = correlation_matrix(truth, learned).cwiseAbs();
    const bool square = score.rows() == score.cols();
    MccResult out;
    if (mode == MatchMode::Greedy || (mode == MatchMode::Auto && !square)) {
        out.match = greedy_match(score);
    } else {
        out.match = assignment_match(score);
    }
    if (!out.match.abs_corr.empty()) {
        out.value = std::accumulate(out.match.abs_corr.begin(), out.match.abs_corr.end(), 0.0) /
                    static_cast<double>(out.match.abs_corr.size());
    }
    return out;
}

double dictionary_mcc(const Dictionary& truth, const Dictionary& learned, MatchMode mode) {
    require_shape(truth.measurements() == learned.measurements(),
                  "dictionary_mcc: dictionaries have different M");
    if (truth.measurements() < 2) throw ConfigError("dictionary MCC requires M >= 2");
    return mcc(truth.columns, learned.columns, mode).value;
}

SparsityStats sparsity_stats(const Matrix& codes, double threshold) {
    require(threshold >= 0.0, "threshold must be >= 0");
    SparsityStats s;
    if (codes.rows() == 0) return s;
    const auto active = (codes.array().abs() > threshold);
    const double rows = static_cast<double>(codes.rows());
    s.l0_mean = static_cast<double>(active.count()) / rows;
    s.l1_mean = codes.lpNorm<1>() / rows;
    Index dead = 0;
    for (Index j = 0; j < codes.cols(); ++j)
        if (!active.col(j).any()) ++dead;
    s.dead_fraction = codes.cols() ? static_cast<double>(dead) / static_cast<double>(codes.cols()) : 0.0;
    return s;
}

double mean_squared_error(const Matrix& X, const Matrix& X_hat) {
    require_shape(X.rows() == X_hat.rows() && X.cols() == X_hat.cols(), "mse: shapes differ");
    if (X.size() == 0) return 0.0;
    return (X - X_hat).squaredNorm() / static_cast<double>(X.size());
}

GramReport gram_analysis(const Dictionary& dict) {
    GramReport r;
    r.gram = dict.columns.transpose() * dict.columns;
    const Index n = r.gram.rows();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) r.max_offdiag = std::max(r.max_offdiag, std::abs(r.gram(i, j)));
    r.identity_deviation = (r.gram - Matrix::Identity(n, n)).norm();
    return r;
}

int numerical_rank(const Matrix& A, double rel_tol, std::vector<double>* singular_values) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(A);
    const Vector& sv = svd.singularValues();
    if (singular_values) singular_values->assign(sv.data(), sv.data() + sv.size());
    const double top = sv.size() ? sv(0) : 0.0;
    if (top <= 0.0) return 0;
    return static_cast<int>((sv.array() > rel_tol * top).count());
}

namespace {

bool relu_matches_abs(const Matrix& sources, const Matrix& preact) {
    const Matrix target = sources.cwiseAbs();
    const Matrix got = preact.cwiseMax(0.0);
    const double tol = 1e-6 * std::max(1.0, target.cwiseAbs().maxCoeff());
    return (got - target).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

RankWitness sae_rank_witness(const SaeModel& sae, const Dictionary& probe) {
    require(!sae.use_bias, "rank witness is defined for bias-free encoders");
    require_shape(probe.measurements() == sae.measurements(), "rank witness: probe M must match encoder");
    const Index n = probe.atoms();
    require_shape(sae.latents() == n, "rank witness: encoder latents must equal probe atoms");

    RankWitness w;
    w.sources = static_cast<int>(n);
    const Matrix sources = Matrix::Identity(n, n);
    const Matrix preact = sources * probe.columns.transpose() * sae.encoder.transpose();
    w.rank = numerical_rank(preact, 1e-8, &w.singular_values);
    w.one_hot_recovered = relu_matches_abs(sources, preact);

    Index pairs = n * (n - 1) / 2;
    Matrix pair_sources = Matrix::Zero(pairs, n);
    Index row = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            pair_sources(row, i) = 1.0;
            pair_sources(row, j) = 1.0;
            ++row;
        }
    w.pairs_recovered = pairs == 0 || relu_matches_abs(pair_sources, pair_sources * probe.columns.transpose() *
                                                                         sae.encoder.transpose());
    w.gap_certificate = w.rank < n && !(w.one_hot_recovered && w.pairs_recovered);
    return w;
}

}  // namespace scbench
