#include "scbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scbench {

namespace {

Dictionary random_dictionary(Index measurements, Index atoms, Rng& rng) {
    Matrix cols = rng.normal_matrix(measurements, atoms);
    normalize_columns(cols, rng);
    return {std::move(cols), Provenance::Learned};
}

void check_input(const Matrix& X, Index measurements, const char* who) {
    require_shape(X.cols() == measurements,
                  std::string(who) + ": input has " + std::to_string(X.cols()) +
                      " columns, model expects " + std::to_string(measurements));
}

}  // namespace

SaeModel make_sae(int measurements, int latents, std::uint64_t seed, bool use_bias) {
    require(measurements >= 1 && latents >= 1, "SAE dimensions must be >= 1");
    Rng enc(seed, Stream::EncoderInit);
    Rng dec(seed, Stream::DecoderInit);
    SaeModel m;
    m.encoder = enc.normal_matrix(latents, measurements, 1.0 / std::sqrt(double(measurements)));
    m.decoder = random_dictionary(measurements, latents, dec);
    m.use_bias = use_bias;
    m.encoder_bias = Vector::Zero(latents);
    m.decoder_bias = Vector::Zero(measurements);
    return m;
}

MlpModel make_mlp(int measurements, int latents, int hidden, std::uint64_t seed, bool use_bias,
                  int hidden_layers) {
    require(measurements >= 1 && latents >= 1 && hidden >= 1, "MLP dimensions must be >= 1");
    require(hidden_layers >= 1, "MLP needs at least one hidden layer");
    Rng enc(seed, Stream::EncoderInit);
    Rng dec(seed, Stream::DecoderInit);
    MlpModel m;
    Index fan_in = measurements;
    for (int l = 0; l <= hidden_layers; ++l) {
        Index out = (l == hidden_layers) ? latents : hidden;
        DenseLayer layer;
        layer.weight = enc.normal_matrix(out, fan_in, 1.0 / std::sqrt(double(fan_in)));
        layer.bias = Vector::Zero(out);
        m.layers.push_back(std::move(layer));
        fan_in = out;
    }
    m.decoder = random_dictionary(measurements, latents, dec);
    m.decoder_bias = Vector::Zero(measurements);
    m.use_bias = use_bias;
    return m;
}

EncoderOutput sae_encode(const SaeModel& model, const Matrix& X) {
    check_input(X, model.measurements(), "sae_encode");
    EncoderOutput out;
    out.preactivations.noalias() = X * model.encoder.transpose();
    if (model.use_bias) out.preactivations.rowwise() += model.encoder_bias.transpose();
    out.codes = out.preactivations.cwiseMax(0.0);
    return out;
}

MlpActivations mlp_forward(const MlpModel& model, const Matrix& X) {
    require(!model.layers.empty(), "MLP has no layers");
    check_input(X, model.measurements(), "mlp_encode");
    MlpActivations acts;
    acts.pre.reserve(model.layers.size());
    acts.post.reserve(model.layers.size());
    const Matrix* input = &X;
    for (const DenseLayer& layer : model.layers) {
        require_shape(layer.weight.cols() == input->cols(), "mlp_encode: layer shapes do not chain");
        Matrix pre;
        pre.noalias() = *input * layer.weight.transpose();
        if (model.use_bias) pre.rowwise() += layer.bias.transpose();
        acts.post.push_back(pre.cwiseMax(0.0));
        acts.pre.push_back(std::move(pre));
        input = &acts.post.back();
    }
    return acts;
}

EncoderOutput mlp_encode(const MlpModel& model, const Matrix& X) {
    MlpActivations acts = mlp_forward(model, X);
    return {std::move(acts.post.back()), std::move(acts.pre.back())};
}

Matrix decode(const Dictionary& dict, const Matrix& codes) {
    require_shape(codes.cols() == dict.atoms(),
                  "decode: codes have " + std::to_string(codes.cols()) + " columns, dictionary has " +
                      std::to_string(dict.atoms()) + " atoms");
    Matrix out;
    out.noalias() = codes * dict.columns.transpose();
    return out;
}

Matrix decode(const Dictionary& dict, const Matrix& codes, const Vector& bias) {
    require_shape(bias.size() == dict.measurements(), "decode: bias length must equal M");
    Matrix out = decode(dict, codes);
    out.rowwise() += bias.transpose();
    return out;
}

std::vector<Index> normalize_columns(Matrix& columns, Rng& rng) {
    std::vector<Index> reinitialised;
    for (Index j = 0; j < columns.cols(); ++j) {
        const double norm = columns.col(j).norm();
        if (!(norm >= 1e-12)) {
            columns.col(j) = rng.unit_vector(columns.rows());
            reinitialised.push_back(j);
        } else {
            columns.col(j) /= norm;
        }
    }
    return reinitialised;
}

NormalizedDictionary normalize_decoder(const Dictionary& dict, std::uint64_t seed) {
    NormalizedDictionary out{dict, {}};
    Rng rng(seed, Stream::Resample);
    out.reinitialised = normalize_columns(out.dictionary.columns, rng);
    return out;
}

void topk_project_in_place(Matrix& codes, int k) {
    require(k >= 1 && k <= codes.cols(), "top-k requires 1 <= k <= N");
    if (k == codes.cols()) return;
    std::vector<Index> order(static_cast<std::size_t>(codes.cols()));
    for (Index i = 0; i < codes.rows(); ++i) {
        std::iota(order.begin(), order.end(), Index{0});
        std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), [&](Index a, Index b) {
            const double fa = std::abs(codes(i, a)), fb = std::abs(codes(i, b));
            return fa > fb || (fa == fb && a < b);
        });
        for (auto it = order.begin() + k; it != order.end(); ++it) codes(i, *it) = 0.0;
    }
}

Matrix topk_project(const Matrix& codes, int k) {
    Matrix out = codes;
    topk_project_in_place(out, k);
    return out;
}

void accumulate_activity(const Matrix& codes, double threshold, std::vector<std::int64_t>& activity) {
    activity.resize(static_cast<std::size_t>(codes.cols()), 0);
    for (Index j = 0; j < codes.cols(); ++j)
        activity[j] += (codes.col(j).array().abs() > threshold).count();
}

namespace {

std::vector<Index> dead_indices(const std::vector<std::int64_t>& activity, Index latents) {
    require_shape(static_cast<Index>(activity.size()) == latents,
                  "resample: activity length must equal the latent count");
    std::vector<Index> dead;
    for (Index j = 0; j < latents; ++j)
        if (activity[j] == 0) dead.push_back(j);
    return dead;
}

}  // namespace

std::vector<Index> resample_dead_latents(SaeModel& model, std::vector<std::int64_t>& activity,
                                         std::uint64_t seed, bool keep_decoder) {
    std::vector<Index> dead = dead_indices(activity, model.latents());
    Rng rng(seed, Stream::Resample);
    for (Index j : dead) {
        const Vector direction = rng.unit_vector(model.measurements());
        if (!keep_decoder) model.decoder.columns.col(j) = direction;
        for (Index c = 0; c < model.encoder.cols(); ++c) model.encoder(j, c) = 1e-2 * rng.normal();
        if (model.use_bias) model.encoder_bias(j) = 0.0;
    }
    std::fill(activity.begin(), activity.end(), 0);
    return dead;
}

std::vector<Index> resample_dead_latents(MlpModel& model, std::vector<std::int64_t>& activity,
                                         std::uint64_t seed, bool keep_decoder) {
    std::vector<Index> dead = dead_indices(activity, model.latents());
    Rng rng(seed, Stream::Resample);
    DenseLayer& last = model.layers.back();
    for (Index j : dead) {
        const Vector direction = rng.unit_vector(model.decoder.measurements());
        if (!keep_decoder) model.decoder.columns.col(j) = direction;
        for (Index c = 0; c < last.weight.cols(); ++c) last.weight(j, c) = 1e-2 * rng.normal();
        if (model.use_bias) last.bias(j) = 0.0;
    }
    std::fill(activity.begin(), activity.end(), 0);
    return dead;
}

}  // namespace scbench
