#include "scbench/training.hpp"

#include "scbench/flops.hpp"
#include "scbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace scbench {

// ---------------------------------------------------------------------------
// Losses

double loss_known_codes(const Matrix& pred, const Matrix& target, long* degenerate_rows) {
    require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(),
                  "loss_known_codes: shapes differ");
    if (pred.rows() == 0) return 0.0;
    double total = 0.0;
    for (Index i = 0; i < pred.rows(); ++i) {
        const double np = pred.row(i).norm(), nt = target.row(i).norm();
        if (np == 0.0 || nt == 0.0) {
            total += 1.0;
            if (degenerate_rows) ++*degenerate_rows;
            continue;
        }
        total += 1.0 - pred.row(i).dot(target.row(i)) / (np * nt);
    }
    return total / static_cast<double>(pred.rows());
}

Matrix loss_known_codes_gradient(const Matrix& pred, const Matrix& target) {
    require_shape(pred.rows() == target.rows() && pred.cols() == target.cols(),
                  "loss_known_codes: shapes differ");
    Matrix grad = Matrix::Zero(pred.rows(), pred.cols());
    const double inv_n = pred.rows() ? 1.0 / static_cast<double>(pred.rows()) : 0.0;
    for (Index i = 0; i < pred.rows(); ++i) {
        const double np = pred.row(i).norm(), nt = target.row(i).norm();
        if (np == 0.0 || nt == 0.0) continue;
        const double cos = pred.row(i).dot(target.row(i)) / (np * nt);
        grad.row(i) = -inv_n * (target.row(i) / (np * nt) - cos * pred.row(i) / (np * np));
    }
    return grad;
}

double loss_reconstruction(const Matrix& X, const Matrix& X_hat, const Matrix& codes, double lambda) {
    require_shape(X.rows() == X_hat.rows() && X.cols() == X_hat.cols(), "loss_reconstruction: X shapes differ");
    require_shape(codes.rows() == X.rows(), "loss_reconstruction: codes rows differ");
    if (X.rows() == 0) return 0.0;
    return ((X - X_hat).squaredNorm() + lambda * codes.lpNorm<1>()) / static_cast<double>(X.rows());
}

// ---------------------------------------------------------------------------
// Gradients

namespace {

struct CodeLoss {
    double loss = 0.0;
    Matrix d_codes;
    Matrix d_recon;  // d loss / d X_hat, reconstruction objectives only
};

/// Loss and its gradient w.r.t. the encoder output.
CodeLoss code_loss(const Matrix& codes, const Matrix& X, const Dictionary& dict, const Vector* decoder_bias,
                   const Objective& objective) {
    CodeLoss out;
    if (objective.kind == Objective::Kind::CosineToCodes) {
        require(objective.target_codes != nullptr, "cosine objective needs target codes");
        out.loss = loss_known_codes(codes, *objective.target_codes);
        out.d_codes = loss_known_codes_gradient(codes, *objective.target_codes);
        return out;
    }
    const double inv_n = 1.0 / static_cast<double>(std::max<Index>(X.rows(), 1));
    Matrix residual = X;
    residual.noalias() -= codes * dict.columns.transpose();
    if (decoder_bias) residual.rowwise() -= decoder_bias->transpose();
    out.loss = (residual.squaredNorm() + objective.lambda * codes.lpNorm<1>()) * inv_n;
    out.d_recon = (-2.0 * inv_n) * residual;
    out.d_codes.noalias() = out.d_recon * dict.columns;
    if (objective.lambda != 0.0) out.d_codes.array() += (objective.lambda * inv_n) * codes.array().sign();
    return out;
}

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

}  // namespace

SaeGradients sae_loss_and_gradients(const SaeModel& model, const Matrix& X, const Objective& objective) {
    EncoderOutput enc = sae_encode(model, X);
    const Vector* bias = model.use_bias ? &model.decoder_bias : nullptr;
    CodeLoss cl = code_loss(enc.codes, X, model.decoder, bias, objective);

    SaeGradients g;
    g.loss = cl.loss;
    Matrix d_pre = cl.d_codes.cwiseProduct(relu_mask(enc.preactivations));
    g.encoder.noalias() = d_pre.transpose() * X;
    if (model.use_bias) g.encoder_bias = d_pre.colwise().sum().transpose();
    if (objective.kind == Objective::Kind::Reconstruction && objective.learn_dictionary) {
        g.decoder.noalias() = cl.d_recon.transpose() * enc.codes;
        if (model.use_bias) g.decoder_bias = cl.d_recon.colwise().sum().transpose();
    }
    return g;
}

MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Matrix& X, const Objective& objective) {
    MlpActivations acts = mlp_forward(model, X);
    const Vector* bias = model.use_bias ? &model.decoder_bias : nullptr;
    CodeLoss cl = code_loss(acts.post.back(), X, model.decoder, bias, objective);

    MlpGradients g;
    g.loss = cl.loss;
    const std::size_t L = model.layers.size();
    g.layers.resize(L);
    Matrix delta = cl.d_codes.cwiseProduct(relu_mask(acts.pre.back()));
    for (std::size_t l = L; l-- > 0;) {
        const Matrix& input = (l == 0) ? X : acts.post[l - 1];
        g.layers[l].weight.noalias() = delta.transpose() * input;
        if (model.use_bias) g.layers[l].bias = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix back;
            back.noalias() = delta * model.layers[l].weight;
            delta = back.cwiseProduct(relu_mask(acts.pre[l - 1]));
        }
    }
    if (objective.kind == Objective::Kind::Reconstruction && objective.learn_dictionary) {
        g.decoder.noalias() = cl.d_recon.transpose() * acts.post.back();
        if (model.use_bias) g.decoder_bias = cl.d_recon.colwise().sum().transpose();
    }
    return g;
}

CodeGradients sparse_coding_gradients(const Dictionary& dict, const Matrix& codes, const Matrix& X, double lambda) {
    require_shape(codes.rows() == X.rows() && codes.cols() == dict.atoms(), "sparse coding: codes must be n x N");
    require_shape(X.cols() == dict.measurements(), "sparse coding: X columns must equal M");
    CodeLoss cl = code_loss(codes, X, dict, nullptr, Objective::reconstruction(lambda, true));
    CodeGradients g;
    g.loss = cl.loss;
    g.codes = std::move(cl.d_codes);
    g.decoder.noalias() = cl.d_recon.transpose() * codes;
    return g;
}

// ---------------------------------------------------------------------------
// Training loop

void TrainConfig::validate() const {
    if (!is_applicable(scenario, method.method))
        throw ConfigError("method " + method.label() + " is not applicable to scenario " + to_string(scenario));
    require(steps >= 1, "training steps must be >= 1");
    require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
    require(code_lr > 0.0 && std::isfinite(code_lr), "code lr must be positive");
    require(lambda >= 0.0, "lambda must be >= 0");
    require(batch_size >= 0, "batch size must be >= 0 (0 = full batch)");
    require(eval_every >= 1, "eval_every must be >= 1");
    require(hidden_layers >= 1, "MLP needs at least one hidden layer");
    if (method.method == Method::Mlp) require(method.hidden >= 1, "MLP width must be >= 1");
    if (resample_every) require(*resample_every >= 1, "resample interval must be >= 1");
    if (train_topk) require(*train_topk >= 1, "top-k must be >= 1");
    require(l0_threshold >= 0.0, "threshold must be >= 0");
    eval_inference.validate();
}

const Dictionary& artifact_dictionary(const Artifact& a) {
    return std::visit(
        [](const auto& x) -> const Dictionary& {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, SparseCodingState>) {
                return x.dictionary;
            } else {
                return x.decoder;
            }
        },
        a);
}

double training_flops(const TrainConfig& cfg, Index M, Index N, Index n_train, long steps) {
    const bool learn = cfg.scenario == Scenario::UnknownBoth;
    const double n_s = static_cast<double>(n_train);
    const double n_b = cfg.batch_size > 0 ? std::min<double>(cfg.batch_size, n_s) : n_s;
    const double m = static_cast<double>(M), n = static_cast<double>(N), t = static_cast<double>(steps);
    switch (cfg.method.method) {
        case Method::Sae: return flops_sae(m, n, n_s, n_b, t, learn, Phase::Train);
        case Method::Mlp: return flops_mlp(m, n, cfg.method.hidden, n_s, n_b, t, learn, Phase::Train);
        case Method::SparseCoding: return flops_sc_train(m, n, n_s, n_b, t, true);
        case Method::SaeIto: return 0.0;
    }
    return 0.0;
}

Matrix encode_split(const Artifact& artifact, Method method, const Matrix& X, const InferConfig& inference) {
    if (const auto* sae = std::get_if<SaeModel>(&artifact)) {
        if (method == Method::SaeIto) return sae_ito(*sae, X, inference);
        return sae_encode(*sae, X).codes;
    }
    if (const auto* mlp = std::get_if<MlpModel>(&artifact)) return mlp_encode(*mlp, X).codes;
    const auto& sc = std::get<SparseCodingState>(artifact);
    return infer_codes(sc.dictionary, X, inference);
}

MetricsRecord evaluate(const Artifact& artifact, const DataSplit& split, const Dictionary& truth, Method method,
                       const EvalConfig& cfg) {
    const Matrix codes = encode_split(artifact, method, split.X, cfg.inference);
    const Dictionary& dict = artifact_dictionary(artifact);

    MetricsRecord r;
    if (split.size() >= 2) r.latent_mcc = mcc(split.S, codes).value;
    if (truth.measurements() >= 2 && truth.measurements() == dict.measurements())
        r.dict_mcc = dictionary_mcc(truth, dict);

    Matrix recon = decode(dict, codes);
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (!std::is_same_v<T, SparseCodingState>) {
                if (x.use_bias) recon.rowwise() += x.decoder_bias.transpose();
            }
        },
        artifact);
    r.mse = mean_squared_error(split.X, recon);
    const SparsityStats s = sparsity_stats(codes, cfg.l0_threshold);
    r.l0_mean = s.l0_mean;
    r.l1_mean = s.l1_mean;
    r.dead_fraction = s.dead_fraction;
    return r;
}

namespace {

Artifact initial_artifact(const TrainConfig& cfg, Index M, Index N, const DataSplit& train_split,
                          const Dictionary& truth) {
    const bool fixed_dict = cfg.scenario == Scenario::KnownDictionary;
    switch (cfg.method.method) {
        case Method::Sae:
        case Method::SaeIto: {
            SaeModel m = make_sae(int(M), int(N), cfg.seed, cfg.use_bias);
            if (fixed_dict) m.decoder = truth;
            return m;
        }
        case Method::Mlp: {
            MlpModel m = make_mlp(int(M), int(N), cfg.method.hidden, cfg.seed, cfg.use_bias, cfg.hidden_layers);
            if (fixed_dict) m.decoder = truth;
            return m;
        }
        case Method::SparseCoding: {
            SparseCodingState s;
            Rng dec(cfg.seed, Stream::DecoderInit);
            s.dictionary.columns = dec.normal_matrix(M, N);
            normalize_columns(s.dictionary.columns, dec);
            InferConfig init = cfg.eval_inference;
            init.init = CodeInit::Uniform;
            init.seed = cfg.seed;
            s.train_codes = initial_codes(s.dictionary, train_split.X, init);
            return s;
        }
    }
    throw ConfigError("unknown method");
}

// glibc hands large blocks straight back to the kernel; with per-step Eigen
// temporaries that turns into page faults dominating the run time.
void keep_heap_blocks() {
#if defined(__GLIBC__)
    static const bool once = [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)once;
#endif
}

void check_finite(double loss, int step, const TrainConfig& cfg) {
    if (!std::isfinite(loss)) throw DivergenceError("train[" + cfg.method.label() + "]", step, loss);
}

std::vector<Index> draw_batch(Index n, int batch_size, Rng& rng) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    if (batch_size <= 0 || batch_size >= n) return idx;
    for (int t = 0; t < batch_size; ++t) std::swap(idx[t], idx[t + rng.below(n - t)]);
    idx.resize(static_cast<std::size_t>(batch_size));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
    return out;
}

/// Trainer state for the encoder-based methods (SAE, MLP, SAE+ITO).
struct EncoderSlots {
    std::vector<AdamSlot<Matrix>> weights;
    std::vector<AdamSlot<Vector>> biases;
    AdamSlot<Matrix> decoder;
    AdamSlot<Vector> decoder_bias;
};

void reset_latent_moments(EncoderSlots& slots, const std::vector<Index>& latents) {
    auto& last_w = slots.weights.back();
    for (Index j : latents) {
        if (last_w.m.size()) {
            last_w.m.row(j).setZero();
            last_w.v.row(j).setZero();
        }
        if (!slots.biases.empty() && slots.biases.back().m.size()) {
            slots.biases.back().m(j) = 0.0;
            slots.biases.back().v(j) = 0.0;
        }
        if (slots.decoder.m.size()) {
            slots.decoder.m.col(j).setZero();
            slots.decoder.v.col(j).setZero();
        }
    }
}

}  // namespace

TrainResult train(const DataSplit& train_split, const DataSplit& test_split, const Dictionary& truth,
                  const TrainConfig& cfg, const TrainObserver& observer) {
    cfg.validate();
    keep_heap_blocks();
    const Index M = train_split.X.cols();
    const Index N = train_split.S.cols();
    const Index n_train = train_split.size();
    require(n_train >= 1, "empty training split");
    require_shape(truth.measurements() == M && truth.atoms() == N, "ground-truth dictionary must be M x N");
    if (cfg.train_topk) require(*cfg.train_topk <= N, "top-k must be <= N");

    const bool learn_dict = cfg.scenario == Scenario::UnknownBoth;
    const Objective base_objective = Objective::reconstruction(cfg.lambda, learn_dict);

    TrainResult result{initial_artifact(cfg, M, N, train_split, truth), {}, 0, 0, 0};
    Rng batch_rng(cfg.seed, Stream::Minibatch);
    Rng norm_rng(cfg.seed, Stream::Resample);
    const AdamConfig adam{cfg.lr};
    AdamConfig code_adam = adam;
    code_adam.lr = cfg.code_lr;

    EncoderSlots enc_slots;
    AdamSlot<Matrix> sc_codes_slot, sc_dict_slot;
    std::vector<std::int64_t> activity(static_cast<std::size_t>(N), 0);
    const EvalConfig eval_cfg{cfg.eval_inference, cfg.l0_threshold};

    auto record = [&](int step, double loss) {
        TracePoint p;
        p.step = step;
        p.metrics = evaluate(result.artifact, test_split, truth, cfg.method.method, eval_cfg);
        p.flops_train_cum = training_flops(cfg, M, N, n_train, step);
        p.train_loss = loss;
        result.trace.points.push_back(p);
    };

    // One optimisation step on a batch; returns the pre-update loss.
    auto step_once = [&](long t, const std::vector<Index>& rows) -> double {
        const bool full = static_cast<Index>(rows.size()) == n_train;
        const Matrix Xb = full ? train_split.X : gather_rows(train_split.X, rows);
        const Matrix Sb = (cfg.scenario == Scenario::KnownCodes)
                              ? (full ? train_split.S : gather_rows(train_split.S, rows))
                              : Matrix();
        const Objective objective = cfg.scenario == Scenario::KnownCodes ? Objective::cosine(Sb) : base_objective;

        if (auto* sae = std::get_if<SaeModel>(&result.artifact)) {
            SaeGradients g = sae_loss_and_gradients(*sae, Xb, objective);
            check_finite(g.loss, int(t), cfg);
            if (enc_slots.weights.empty()) {
                enc_slots.weights.resize(1);
                enc_slots.biases.resize(1);
            }
            adam_update(sae->encoder, g.encoder, enc_slots.weights[0], adam, t);
            if (sae->use_bias) adam_update(sae->encoder_bias, g.encoder_bias, enc_slots.biases[0], adam, t);
            if (g.decoder.size()) {
                adam_update(sae->decoder.columns, g.decoder, enc_slots.decoder, adam, t);
                if (sae->use_bias) adam_update(sae->decoder_bias, g.decoder_bias, enc_slots.decoder_bias, adam, t);
                result.reinitialised_columns += long(normalize_columns(sae->decoder.columns, norm_rng).size());
            }
            if (cfg.resample_every) accumulate_activity(sae_encode(*sae, Xb).codes, cfg.l0_threshold, activity);
            return g.loss;
        }
        if (auto* mlp = std::get_if<MlpModel>(&result.artifact)) {
            MlpGradients g = mlp_loss_and_gradients(*mlp, Xb, objective);
            check_finite(g.loss, int(t), cfg);
            if (enc_slots.weights.empty()) {
                enc_slots.weights.resize(mlp->layers.size());
                enc_slots.biases.resize(mlp->layers.size());
            }
            for (std::size_t l = 0; l < mlp->layers.size(); ++l) {
                adam_update(mlp->layers[l].weight, g.layers[l].weight, enc_slots.weights[l], adam, t);
                if (mlp->use_bias) adam_update(mlp->layers[l].bias, g.layers[l].bias, enc_slots.biases[l], adam, t);
            }
            if (g.decoder.size()) {
                adam_update(mlp->decoder.columns, g.decoder, enc_slots.decoder, adam, t);
                if (mlp->use_bias) adam_update(mlp->decoder_bias, g.decoder_bias, enc_slots.decoder_bias, adam, t);
                result.reinitialised_columns += long(normalize_columns(mlp->decoder.columns, norm_rng).size());
            }
            if (cfg.resample_every) accumulate_activity(mlp_encode(*mlp, Xb).codes, cfg.l0_threshold, activity);
            return g.loss;
        }

        auto& sc = std::get<SparseCodingState>(result.artifact);
        if (full) {
            CodeGradients g = sparse_coding_gradients(sc.dictionary, sc.train_codes, Xb, cfg.lambda);
            check_finite(g.loss, int(t), cfg);
            adam_update(sc.train_codes, g.codes, sc_codes_slot, code_adam, t);
            if (cfg.train_topk) topk_project_in_place(sc.train_codes, *cfg.train_topk);
            adam_update(sc.dictionary.columns, g.decoder, sc_dict_slot, adam, t);
            result.reinitialised_columns += long(normalize_columns(sc.dictionary.columns, norm_rng).size());
            return g.loss;
        }
        Matrix codes = gather_rows(sc.train_codes, rows);
        CodeGradients g = sparse_coding_gradients(sc.dictionary, codes, Xb, cfg.lambda);
        check_finite(g.loss, int(t), cfg);
        if (sc_codes_slot.m.size() == 0) {
            sc_codes_slot.m = Matrix::Zero(n_train, N);
            sc_codes_slot.v = Matrix::Zero(n_train, N);
        }
        AdamSlot<Matrix> local{gather_rows(sc_codes_slot.m, rows), gather_rows(sc_codes_slot.v, rows)};
        adam_update(codes, g.codes, local, code_adam, t);
        if (cfg.train_topk) topk_project_in_place(codes, *cfg.train_topk);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            sc.train_codes.row(rows[r]) = codes.row(Index(r));
            sc_codes_slot.m.row(rows[r]) = local.m.row(Index(r));
            sc_codes_slot.v.row(rows[r]) = local.v.row(Index(r));
        }
        adam_update(sc.dictionary.columns, g.decoder, sc_dict_slot, adam, t);
        result.reinitialised_columns += long(normalize_columns(sc.dictionary.columns, norm_rng).size());
        return g.loss;
    };

    auto maybe_resample = [&](long t) {
        if (!cfg.resample_every || t % *cfg.resample_every != 0) return;
        const std::uint64_t rs = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        std::vector<Index> dead;
        if (auto* sae = std::get_if<SaeModel>(&result.artifact)) {
            dead = resample_dead_latents(*sae, activity, rs, !learn_dict);
        } else if (auto* mlp = std::get_if<MlpModel>(&result.artifact)) {
            dead = resample_dead_latents(*mlp, activity, rs, !learn_dict);
        }
        if (!dead.empty() && !enc_slots.weights.empty()) reset_latent_moments(enc_slots, dead);
        result.resampled_latents += long(dead.size());
    };

    // step-0 loss without touching parameters
    {
        double loss0 = 0.0;
        const Objective obj0 =
            cfg.scenario == Scenario::KnownCodes ? Objective::cosine(train_split.S) : base_objective;
        if (const auto* sae = std::get_if<SaeModel>(&result.artifact)) {
            loss0 = sae_loss_and_gradients(*sae, train_split.X, obj0).loss;
        } else if (const auto* mlp = std::get_if<MlpModel>(&result.artifact)) {
            loss0 = mlp_loss_and_gradients(*mlp, train_split.X, obj0).loss;
        } else {
            const auto& sc = std::get<SparseCodingState>(result.artifact);
            loss0 = sparse_coding_gradients(sc.dictionary, sc.train_codes, train_split.X, cfg.lambda).loss;
        }
        record(0, loss0);
    }

    for (long t = 1; t <= cfg.steps; ++t) {
        const std::vector<Index> rows = draw_batch(n_train, cfg.batch_size, batch_rng);
        const double loss = step_once(t, rows);
        maybe_resample(t);
        if (observer) observer(int(t), result.artifact);
        if (t % cfg.eval_every == 0 || t == cfg.steps) record(int(t), loss);
    }

    // degenerate (all-zero) prediction rows of the final encoder
    if (cfg.scenario == Scenario::KnownCodes) {
        const Matrix final_codes =
            encode_split(result.artifact, cfg.method.method, train_split.X, cfg.eval_inference);
        loss_known_codes(final_codes, train_split.S, &result.degenerate_rows);
    }
    return result;
}

}  // namespace scbench
