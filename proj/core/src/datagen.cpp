#include "scbench/datagen.hpp"

#include "scbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scbench {

std::string to_string(CodeDistribution d) {
    return d == CodeDistribution::Uniform ? "uniform" : "zipf";
}

CodeDistribution code_distribution_from_string(const std::string& s) {
    if (s == "uniform") return CodeDistribution::Uniform;
    if (s == "zipf") return CodeDistribution::Zipf;
    throw ConfigError("unknown code distribution '" + s + "'");
}

void GenConfig::validate() const {
    require(n_sources >= 1, "N must be >= 1");
    require(n_measurements >= 1, "M must be >= 1");
    require(k_active >= 1 && k_active <= n_sources, "K must satisfy 1 <= K <= N");
    require(n_samples >= 1, "sample count must be >= 1");
    if (distribution == CodeDistribution::Zipf)
        require(alpha > 0.0 && std::isfinite(alpha), "Zipf alpha must be > 0");
}

Dictionary generate_dictionary(int measurements, int sources, std::uint64_t seed) {
    require(measurements >= 1 && sources >= 1, "dictionary dimensions must be >= 1");
    Rng rng(seed, Stream::Dictionary);
    Matrix d = rng.normal_matrix(measurements, sources);
    for (Index j = 0; j < d.cols(); ++j) {
        double norm = d.col(j).norm();
        if (norm < 1e-12) {
            d.col(j) = rng.unit_vector(measurements);
        } else {
            d.col(j) /= norm;
        }
    }
    return {std::move(d), Provenance::GroundTruth};
}

std::vector<double> zipf_selection_weights(int sources, double alpha) {
    require(sources >= 1, "N must be >= 1");
    require(alpha > 0.0, "Zipf alpha must be > 0");
    std::vector<double> w(static_cast<std::size_t>(sources));
    for (int r = 1; r <= sources; ++r) w[r - 1] = std::pow(static_cast<double>(r), -alpha);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
}

namespace {

void fill_uniform_rows(Matrix& codes, int k, Rng& rng) {
    const Index n_src = codes.cols();
    std::vector<Index> pool(static_cast<std::size_t>(n_src));
    for (Index i = 0; i < codes.rows(); ++i) {
        std::iota(pool.begin(), pool.end(), Index{0});
        // partial Fisher-Yates: the first k slots become the support
        for (int t = 0; t < k; ++t) {
            Index pick = t + rng.below(n_src - t);
            std::swap(pool[t], pool[pick]);
            codes(i, pool[t]) = rng.normal();
        }
    }
}

void fill_zipf_rows(Matrix& codes, int k, double alpha, Rng& rng) {
    const Index n_src = codes.cols();
    std::vector<double> scale(static_cast<std::size_t>(n_src));
    for (Index j = 0; j < n_src; ++j) scale[j] = std::pow(static_cast<double>(j + 1), -alpha);

    // Weighted sampling without replacement via exponential keys: keeping the
    // k largest log(u)/w_j is equivalent to drawing successively with
    // probability proportional to w_j among the remaining dimensions.
    std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(n_src));
    for (Index i = 0; i < codes.rows(); ++i) {
        for (Index j = 0; j < n_src; ++j) {
            double u = rng.uniform(0.0, 1.0);
            while (u <= 0.0) u = rng.uniform(0.0, 1.0);
            keys[j] = {std::log(u) / scale[j], j};
        }
        std::partial_sort(keys.begin(), keys.begin() + k, keys.end(),
                          [](const auto& a, const auto& b) {
                              return a.first > b.first || (a.first == b.first && a.second < b.second);
                          });
        for (int t = 0; t < k; ++t) {
            Index j = keys[t].second;
            codes(i, j) = rng.normal() * scale[j];
        }
    }
}

}  // namespace

Matrix generate_codes(const GenConfig& cfg) {
    cfg.validate();
    Matrix codes = Matrix::Zero(cfg.n_samples, cfg.n_sources);
    Rng rng(cfg.seed, Stream::Codes);
    if (cfg.distribution == CodeDistribution::Uniform) {
        fill_uniform_rows(codes, cfg.k_active, rng);
    } else {
        fill_zipf_rows(codes, cfg.k_active, cfg.alpha, rng);
    }
    return codes;
}

Dataset generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    Dataset data;
    data.config = cfg;
    data.dictionary = generate_dictionary(cfg.n_measurements, cfg.n_sources, cfg.seed);
    data.S = generate_codes(cfg);
    data.X.noalias() = data.S * data.dictionary.columns.transpose();
    return data;
}

double recovery_boundary(int sources, int active) {
    if (active < 1 || active > sources)
        throw ConfigError("recovery boundary requires 1 <= K <= N");
    return active * std::log(static_cast<double>(sources) / active);
}

std::pair<DataSplit, DataSplit> split_even(const Dataset& data) {
    const Index n = data.X.rows();
    const Index n_train = n / 2;
    require(n_train >= 1 && n - n_train >= 1, "need at least two samples to split");
    DataSplit train{data.X.topRows(n_train), data.S.topRows(n_train)};
    DataSplit test{data.X.bottomRows(n - n_train), data.S.bottomRows(n - n_train)};
    return {std::move(train), std::move(test)};
}

}  // namespace scbench
