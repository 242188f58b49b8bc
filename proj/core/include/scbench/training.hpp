#pragma once

#include "scbench/datagen.hpp"
#include "scbench/inference.hpp"
#include "scbench/method.hpp"
#include "scbench/metrics.hpp"
#include "scbench/models.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace scbench {

// ---------------------------------------------------------------------------
// Losses and gradients

/// Mean over rows of 1 - cos(pred_i, target_i). A row with zero norm on
/// either side contributes 1 and increments *degenerate_rows.
double loss_known_codes(const Matrix& pred, const Matrix& target, long* degenerate_rows = nullptr);

/// d loss_known_codes / d pred. Degenerate rows get a zero gradient.
Matrix loss_known_codes_gradient(const Matrix& pred, const Matrix& target);

/// Mean over samples of ||x - x_hat||^2 + lambda ||codes||_1.
double loss_reconstruction(const Matrix& X, const Matrix& X_hat, const Matrix& codes, double lambda);

struct Objective {
    enum class Kind { CosineToCodes, Reconstruction };
    Kind kind = Kind::Reconstruction;
    const Matrix* target_codes = nullptr;  // CosineToCodes only
    double lambda = 0.0;
    bool learn_dictionary = false;

    static Objective cosine(const Matrix& target) { return {Kind::CosineToCodes, &target, 0.0, false}; }
    static Objective reconstruction(double lambda, bool learn_dictionary) {
        return {Kind::Reconstruction, nullptr, lambda, learn_dictionary};
    }
};

struct SaeGradients {
    double loss = 0.0;
    Matrix encoder;
    Vector encoder_bias;
    Matrix decoder;        // empty unless the objective learns the dictionary
    Vector decoder_bias;
};

SaeGradients sae_loss_and_gradients(const SaeModel& model, const Matrix& X, const Objective& objective);

struct MlpGradients {
    double loss = 0.0;
    std::vector<DenseLayer> layers;
    Matrix decoder;
    Vector decoder_bias;
};

MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Matrix& X, const Objective& objective);

struct CodeGradients {
    double loss = 0.0;
    Matrix codes;
    Matrix decoder;
};

/// Joint gradient of the sparse coding objective w.r.t. codes and D.
CodeGradients sparse_coding_gradients(const Dictionary& dict, const Matrix& codes, const Matrix& X,
                                      double lambda);

// ---------------------------------------------------------------------------
// Optimiser

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamSlot {
    T m;
    T v;
};

template <typename T>
void adam_update(T& param, const T& grad, AdamSlot<T>& slot, const AdamConfig& cfg, long step) {
    if (slot.m.size() != param.size()) {
        slot.m = T::Zero(param.rows(), param.cols());
        slot.v = T::Zero(param.rows(), param.cols());
    }
    slot.m = cfg.beta1 * slot.m + (1.0 - cfg.beta1) * grad;
    slot.v = cfg.beta2 * slot.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    param.array() -= cfg.lr * (slot.m.array() / c1) / ((slot.v.array() / c2).sqrt() + cfg.eps);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    Scenario scenario = Scenario::UnknownBoth;
    MethodSpec method;
    int hidden_layers = 1;
    int steps = 20000;
    double lr = 1e-4;
    /// Adam step for the per-sample latents of sparse coding.
    double code_lr = 1e-2;
    double lambda = 0.0;
    int batch_size = 0;  // 0 = full batch
    int eval_every = 1000;
    std::optional<int> resample_every;
    std::uint64_t seed = 0;
    bool use_bias = false;
    /// Top-k applied to the sparse coding latents after each training step.
    std::optional<int> train_topk;
    /// Test-time optimisation for sparse coding and SAE+ITO.
    InferConfig eval_inference;
    double l0_threshold = 1e-5;

    /// Throws ConfigError for a (scenario, method) pair outside the
    /// applicability table or for out-of-range values.
    void validate() const;
};

/// Sparse coding's learnable state: a dictionary plus one latent per
/// training sample.
struct SparseCodingState {
    Dictionary dictionary;
    Matrix train_codes;
};

using Artifact = std::variant<SaeModel, MlpModel, SparseCodingState>;

const Dictionary& artifact_dictionary(const Artifact& a);

struct TracePoint {
    int step = 0;
    MetricsRecord metrics;
    double flops_train_cum = 0.0;
    double train_loss = 0.0;
};

struct TrainTrace {
    std::vector<TracePoint> points;
};

struct TrainResult {
    Artifact artifact;
    TrainTrace trace;
    long degenerate_rows = 0;        // known-codes warning counter
    long resampled_latents = 0;
    long reinitialised_columns = 0;
};

/// Optional per-step hook (step, artifact) used by tests to inspect
/// invariants after every update.
using TrainObserver = std::function<void(int, const Artifact&)>;

/// Cumulative training FLOPs after `steps` updates.
double training_flops(const TrainConfig& cfg, Index M, Index N, Index n_train, long steps);

TrainResult train(const DataSplit& train_split, const DataSplit& test_split, const Dictionary& truth,
                  const TrainConfig& cfg, const TrainObserver& observer = {});

struct EvalConfig {
    InferConfig inference;
    double l0_threshold = 1e-5;
};

/// Codes the artifact assigns to the split's observations.
Matrix encode_split(const Artifact& artifact, Method method, const Matrix& X, const InferConfig& inference);

MetricsRecord evaluate(const Artifact& artifact, const DataSplit& split, const Dictionary& truth, Method method,
                       const EvalConfig& cfg);

}  // namespace scbench
