#include "scbench/inference.hpp"

#include "scbench/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace scbench {

std::string to_string(CodeInit init) {
    switch (init) {
        case CodeInit::Zeros: return "zeros";
        case CodeInit::SaeEncoder: return "sae";
        case CodeInit::Uniform: return "uniform";
    }
    return "?";
}

CodeInit code_init_from_string(const std::string& s) {
    if (s == "zeros") return CodeInit::Zeros;
    if (s == "sae") return CodeInit::SaeEncoder;
    if (s == "uniform") return CodeInit::Uniform;
    throw ConfigError("unknown init '" + s + "'");
}

void InferConfig::validate() const {
    require(steps >= 1, "inference steps must be >= 1");
    require(lr >= 0.0 && std::isfinite(lr), "inference lr must be finite and >= 0");
    require(lambda >= 0.0, "lambda must be >= 0");
    require(threshold >= 0.0, "threshold must be >= 0");
    require(init_scale >= 0.0, "init scale must be >= 0");
    if (topk) require(*topk >= 1, "top-k must be >= 1");
}

double max_safe_step(const Dictionary& dict) {
    // D D^T shares its non-zero spectrum with D^T D and is the smaller side
    // in the overcomplete regime.
    const Matrix& d = dict.columns;
    Matrix gram = d.rows() <= d.cols() ? Matrix(d * d.transpose()) : Matrix(d.transpose() * d);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    return top > 0.0 ? 1.0 / top : 1.0;
}

Matrix initial_codes(const Dictionary& dict, const Matrix& X, const InferConfig& cfg) {
    switch (cfg.init) {
        case CodeInit::Zeros:
            return Matrix::Zero(X.rows(), dict.atoms());
        case CodeInit::Uniform: {
            Rng rng(cfg.seed, Stream::CodeInit);
            Matrix codes(X.rows(), dict.atoms());
            for (Index j = 0; j < codes.cols(); ++j)
                for (Index i = 0; i < codes.rows(); ++i)
                    codes(i, j) = rng.uniform(-cfg.init_scale, cfg.init_scale);
            return codes;
        }
        case CodeInit::SaeEncoder:
            break;
    }
    throw ConfigError("SaeEncoder init requires an SAE; use sae_ito");
}

Matrix refine_codes(const Dictionary& dict, const Matrix& X, Matrix codes, const InferConfig& cfg,
                    const StepObserver& observer) {
    cfg.validate();
    require_shape(X.cols() == dict.measurements(), "inference: X columns must equal M");
    require_shape(codes.rows() == X.rows() && codes.cols() == dict.atoms(),
                  "inference: initial codes must be n x N");
    if (cfg.topk) require(*cfg.topk <= dict.atoms(), "top-k must be <= N");

    const Matrix& d = dict.columns;
    const double step = cfg.lr_relative ? cfg.lr * max_safe_step(dict) : cfg.lr;
    Matrix residual(X.rows(), X.cols());
    Matrix back(codes.rows(), codes.cols());

    for (int t = 1; t <= cfg.steps; ++t) {
        residual = X;
        residual.noalias() -= codes * d.transpose();
        const double loss = (residual.squaredNorm() + cfg.lambda * codes.lpNorm<1>()) /
                            static_cast<double>(std::max<Index>(X.rows(), 1));
        if (!std::isfinite(loss)) throw DivergenceError("infer_codes", t, loss);

        back.noalias() = residual * d;  // -0.5 * gradient of the quadratic term
        if (cfg.rule == UpdateRule::Subgradient) {
            codes.array() += step * (2.0 * back.array() - cfg.lambda * codes.array().sign());
        } else {
            codes.noalias() += (2.0 * step) * back;
            const double shrink = step * cfg.lambda;
            codes = codes.unaryExpr([shrink](double v) {
                return v > shrink ? v - shrink : (v < -shrink ? v + shrink : 0.0);
            });
        }
        if (cfg.topk) topk_project_in_place(codes, *cfg.topk);
        if (observer) observer(t, codes);
    }

    if (cfg.threshold > 0.0) {
        const double thr = cfg.threshold;
        codes = codes.unaryExpr([thr](double v) { return std::abs(v) < thr ? 0.0 : v; });
    }
    return codes;
}

Matrix infer_codes(const Dictionary& dict, const Matrix& X, const InferConfig& cfg,
                   const StepObserver& observer) {
    cfg.validate();
    return refine_codes(dict, X, initial_codes(dict, X, cfg), cfg, observer);
}

Matrix sae_ito(const SaeModel& sae, const Matrix& X, const InferConfig& cfg, const StepObserver& observer) {
    Matrix start = sae_encode(sae, X).codes;
    if (sae.use_bias) {
        Matrix centred = X.rowwise() - sae.decoder_bias.transpose();
        return refine_codes(sae.decoder, centred, std::move(start), cfg, observer);
    }
    return refine_codes(sae.decoder, X, std::move(start), cfg, observer);
}

}  // namespace scbench
