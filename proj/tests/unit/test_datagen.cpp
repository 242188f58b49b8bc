#include "scbench/datagen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace scbench;

TEST(Dictionary, SingleColumnHasUnitNorm) {
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        Dictionary d = generate_dictionary(2, 1, seed);
        EXPECT_NEAR(d.columns.col(0).norm(), 1.0, 1e-9);
    }
}

TEST(Dictionary, DeterministicAndUnitGram) {
    Dictionary a = generate_dictionary(8, 16, 0), b = generate_dictionary(8, 16, 0);
    EXPECT_EQ(a.columns, b.columns);
    EXPECT_EQ(a.provenance, Provenance::GroundTruth);
    Matrix g = a.columns.transpose() * a.columns;
    for (Index j = 0; j < 16; ++j) EXPECT_NEAR(g(j, j), 1.0, 1e-6);
    EXPECT_NE(generate_dictionary(8, 16, 1).columns, a.columns);
}

TEST(Dictionary, UnitColumnsForManyShapes) {
    for (int M : {1, 3, 8, 20})
        for (int N : {1, 5, 16})
            for (std::uint64_t seed = 0; seed < 5; ++seed)
                EXPECT_LE(generate_dictionary(M, N, seed).max_norm_deviation(), 1e-6);
}

TEST(Codes, FullSupportWhenKEqualsN) {
    GenConfig c;
    c.n_sources = 4;
    c.k_active = 4;
    c.n_samples = 50;
    Matrix s = generate_codes(c);
    for (Index i = 0; i < s.rows(); ++i) EXPECT_EQ((s.row(i).array() != 0.0).count(), 4);
}

TEST(Codes, ExactlyKNonZerosUniformAndZipf) {
    for (auto dist : {CodeDistribution::Uniform, CodeDistribution::Zipf}) {
        for (int K : {1, 3, 9}) {
            GenConfig c;
            c.k_active = K;
            c.n_samples = 500;
            c.distribution = dist;
            c.seed = 7;
            Matrix s = generate_codes(c);
            for (Index i = 0; i < s.rows(); ++i) ASSERT_EQ((s.row(i).array() != 0.0).count(), K);
        }
    }
}

TEST(Codes, ZipfWeightsForFourSources) {
    auto w = zipf_selection_weights(4, 1.0);
    const double h = 1 + 0.5 + 1.0 / 3 + 0.25;
    ASSERT_EQ(w.size(), 4u);
    EXPECT_NEAR(w[0], 1 / h, 1e-12);
    EXPECT_NEAR(w[0], 0.48, 5e-3);
    EXPECT_NEAR(w[1], 0.24, 5e-3);
    EXPECT_NEAR(w[2], 0.16, 5e-3);
    EXPECT_NEAR(w[3], 0.12, 5e-3);
}

TEST(Codes, UniformActivationFrequency) {
    GenConfig c;
    c.n_samples = 10000;
    c.seed = 123;
    Matrix s = generate_codes(c);
    for (Index j = 0; j < 16; ++j) {
        const double freq = double((s.col(j).array() != 0.0).count()) / c.n_samples;
        EXPECT_NEAR(freq, 3.0 / 16.0, 0.01) << "dimension " << j;
    }
}

TEST(Codes, ZipfSelectionDecreasesWithRank) {
    GenConfig c;
    c.n_samples = 100000;
    c.distribution = CodeDistribution::Zipf;
    c.alpha = 1.0;
    c.seed = 5;
    Matrix s = generate_codes(c);
    std::vector<double> counts(16);
    for (Index j = 0; j < 16; ++j) counts[j] = double((s.col(j).array() != 0.0).count());
    for (Index j = 0; j + 1 < 16; ++j) {
        // difference of two counts, 3 sigma under a Poisson approximation
        const double sigma = std::sqrt(counts[j] + counts[j + 1]);
        EXPECT_GT(counts[j] - counts[j + 1], -3 * sigma) << "rank " << j + 1;
        EXPECT_GT(counts[j], counts[j + 1]) << "rank " << j + 1;
    }
}

TEST(Codes, ZipfMagnitudeScalesWithRank) {
    GenConfig c;
    c.n_samples = 20000;
    c.distribution = CodeDistribution::Zipf;
    c.seed = 2;
    Matrix s = generate_codes(c);
    // E|z| r^-alpha for a standard normal z
    for (Index j : {0, 3, 9}) {
        double sum = 0;
        long n = 0;
        for (Index i = 0; i < s.rows(); ++i)
            if (s(i, j) != 0.0) {
                sum += std::abs(s(i, j));
                ++n;
            }
        EXPECT_NEAR(sum / n, std::sqrt(2 / M_PI) / double(j + 1), 0.1 / double(j + 1));
    }
}

TEST(Dataset, SingleActiveComponentScalesColumn) {
    GenConfig c;
    c.k_active = 1;
    c.n_samples = 20;
    Dataset d = generate_dataset(c);
    for (Index i = 0; i < d.S.rows(); ++i) {
        Index j;
        d.S.row(i).cwiseAbs().maxCoeff(&j);
        Vector expect = d.S(i, j) * d.dictionary.columns.col(j);
        EXPECT_LE((d.X.row(i).transpose() - expect).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Dataset, ShapesAndReconstructionIdentity) {
    GenConfig c;
    Dataset d = generate_dataset(c);
    EXPECT_EQ(d.X.rows(), 2048);
    EXPECT_EQ(d.X.cols(), 8);
    EXPECT_EQ(d.S.rows(), 2048);
    EXPECT_EQ(d.S.cols(), 16);
    const Matrix recon = d.S * d.dictionary.columns.transpose();
    EXPECT_LE((d.X - recon).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, d.X.cwiseAbs().maxCoeff()));
}

TEST(Dataset, SameSeedBitIdentical) {
    GenConfig c;
    c.seed = 42;
    Dataset a = generate_dataset(c), b = generate_dataset(c);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.S, b.S);
    EXPECT_EQ(a.dictionary.columns, b.dictionary.columns);
    c.seed = 43;
    EXPECT_NE(generate_dataset(c).S, a.S);
}

TEST(Dataset, OvercompleteMeasurementsAccepted) {
    GenConfig c;
    c.n_sources = 4;
    c.n_measurements = 10;
    c.k_active = 2;
    c.n_samples = 16;
    EXPECT_NO_THROW(generate_dataset(c));
}

TEST(Dataset, SplitEven) {
    GenConfig c;
    c.n_samples = 11;
    auto [tr, te] = split_even(generate_dataset(c));
    EXPECT_EQ(tr.size(), 5);
    EXPECT_EQ(te.size(), 6);
}

TEST(GenConfigValidate, RejectsBadValues) {
    GenConfig c;
    c.k_active = 17;
    EXPECT_THROW(c.validate(), ConfigError);
    c = GenConfig{};
    c.k_active = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = GenConfig{};
    c.n_measurements = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = GenConfig{};
    c.distribution = CodeDistribution::Zipf;
    c.alpha = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.alpha = 0.5;
    EXPECT_NO_THROW(c.validate());
}

TEST(RecoveryBoundary, Values) {
    EXPECT_DOUBLE_EQ(recovery_boundary(16, 16), 0.0);
    EXPECT_NEAR(recovery_boundary(16, 3), 5.0225, 1e-3);
    EXPECT_NEAR(recovery_boundary(1000, 20), 78.24, 0.01);
    EXPECT_THROW(recovery_boundary(3, 4), ConfigError);
}
