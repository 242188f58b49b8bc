#pragma once

#include "scbench/models.hpp"
#include "scbench/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace scbench {

enum class CodeInit { Zeros, SaeEncoder, Uniform };
enum class UpdateRule { Subgradient, Ista };

std::string to_string(CodeInit init);
CodeInit code_init_from_string(const std::string& s);

/// Per-sample latent optimisation of ||x - D s||^2 + lambda ||s||_1.
struct InferConfig {
    int steps = 1000;
    double lr = 0.05;
    /// Interpret lr as a fraction of 1 / lambda_max(D^T D), the largest step
    /// for which plain gradient descent on the quadratic term is monotone.
    bool lr_relative = false;
    double lambda = 0.0;
    CodeInit init = CodeInit::Zeros;
    double init_scale = 0.1;  // Uniform init draws from [-scale, scale]
    std::optional<int> topk;
    double threshold = 1e-5;  // final |s| < threshold is zeroed
    UpdateRule rule = UpdateRule::Subgradient;
    std::uint64_t seed = 0;   // for Uniform init

    void validate() const;
};

/// Called after each update with the 1-based step index and current codes.
using StepObserver = std::function<void(int, const Matrix&)>;

/// 1 / lambda_max(D^T D).
double max_safe_step(const Dictionary& dict);

/// Starting codes for Zeros or Uniform init. SaeEncoder init needs a model
/// and is rejected here.
Matrix initial_codes(const Dictionary& dict, const Matrix& X, const InferConfig& cfg);

/// Runs cfg.steps updates starting from `codes`. After each step the
/// optional top-k projection is applied; at the end entries below
/// cfg.threshold are zeroed. Throws DivergenceError on a non-finite loss.
Matrix refine_codes(const Dictionary& dict, const Matrix& X, Matrix codes, const InferConfig& cfg,
                    const StepObserver& observer = {});

Matrix infer_codes(const Dictionary& dict, const Matrix& X, const InferConfig& cfg,
                   const StepObserver& observer = {});

/// SAE decoder kept, encoder replaced by optimisation started from the SAE's
/// own codes.
Matrix sae_ito(const SaeModel& sae, const Matrix& X, const InferConfig& cfg,
               const StepObserver& observer = {});

}  // namespace scbench
