#pragma once

#include "scbench/rng.hpp"
#include "scbench/types.hpp"

#include <cstdint>
#include <vector>

namespace scbench {

/// Linear-nonlinear encoder: codes = ReLU(X W_e^T + b_e), decoded by D.
struct SaeModel {
    Matrix encoder;        // N x M
    Vector encoder_bias;   // N, used only when use_bias
    Dictionary decoder;    // M x N
    Vector decoder_bias;   // M, used only when use_bias
    bool use_bias = false;

    Index measurements() const noexcept { return encoder.cols(); }
    Index latents() const noexcept { return encoder.rows(); }
};

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Multi-layer encoder with ReLU after every layer, including the last.
struct MlpModel {
    std::vector<DenseLayer> layers;  // M -> H (-> H ...) -> N
    Dictionary decoder;
    Vector decoder_bias;
    bool use_bias = false;

    Index measurements() const { return layers.front().weight.cols(); }
    Index latents() const { return layers.back().weight.rows(); }
    Index hidden_width() const { return layers.size() > 1 ? layers.front().weight.rows() : 0; }
};

struct EncoderOutput {
    Matrix codes;           // max(0, preactivations)
    Matrix preactivations;
};

/// Encoder ~ N(0, 1/M); decoder a fresh random unit-norm dictionary.
SaeModel make_sae(int measurements, int latents, std::uint64_t seed, bool use_bias = false);

/// `hidden_layers` hidden layers of width `hidden`, each ~ N(0, 1/fan_in).
MlpModel make_mlp(int measurements, int latents, int hidden, std::uint64_t seed,
                  bool use_bias = false, int hidden_layers = 1);

EncoderOutput sae_encode(const SaeModel& model, const Matrix& X);

/// Keeps every layer's pre- and post-activation for backpropagation.
struct MlpActivations {
    std::vector<Matrix> pre;   // per layer, n x out
    std::vector<Matrix> post;  // per layer, n x out, post = ReLU(pre)
};

MlpActivations mlp_forward(const MlpModel& model, const Matrix& X);
EncoderOutput mlp_encode(const MlpModel& model, const Matrix& X);

/// codes * D^T, optionally plus a broadcast bias.
Matrix decode(const Dictionary& dict, const Matrix& codes);
Matrix decode(const Dictionary& dict, const Matrix& codes, const Vector& bias);

/// Divides every column by its norm. Columns with norm below 1e-12 are
/// replaced by random unit vectors and their indices returned.
std::vector<Index> normalize_columns(Matrix& columns, Rng& rng);

struct NormalizedDictionary {
    Dictionary dictionary;
    std::vector<Index> reinitialised;
};

NormalizedDictionary normalize_decoder(const Dictionary& dict, std::uint64_t seed);

/// Zero all but the k largest-magnitude entries of each row. Ties keep the
/// lower index.
Matrix topk_project(const Matrix& codes, int k);
void topk_project_in_place(Matrix& codes, int k);

/// Accumulates per-latent activation counts between resamples.
void accumulate_activity(const Matrix& codes, double threshold, std::vector<std::int64_t>& activity);

/// For every latent with zero recorded activity: new random unit decoder
/// column and fresh encoder row of scale 1e-2 (final layer for the MLP).
/// Clears `activity` and returns the resampled indices. keep_decoder leaves
/// a fixed dictionary alone.
std::vector<Index> resample_dead_latents(SaeModel& model, std::vector<std::int64_t>& activity,
                                         std::uint64_t seed, bool keep_decoder = false);
std::vector<Index> resample_dead_latents(MlpModel& model, std::vector<std::int64_t>& activity,
                                         std::uint64_t seed, bool keep_decoder = false);

}  // namespace scbench
