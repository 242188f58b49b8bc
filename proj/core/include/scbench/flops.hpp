#pragma once

#include "scbench/method.hpp"

#include <string>

namespace scbench {

// Closed-form FLOP counts per method and phase. Training totals scale with
// the effective iteration count n_eff = n_steps * n_b / n_s; the sparse
// coding component terms additionally carry n_b, exactly as the formulas are
// written, so SC and SAE/MLP training totals are not in the same unit.

enum class Phase { Train, Inference };

double flops_sc_inference(double M, double N, double n_s, bool learn_dict);
double flops_sc_train(double M, double N, double n_s, double n_b, double n_steps, bool learn_dict);

double flops_sae_forward(double M, double N, bool learn_dict);
double flops_sae_backward(double M, double N, bool learn_dict);
double flops_sae(double M, double N, double n_s, double n_b, double n_steps, bool learn_dict, Phase phase);

double flops_mlp_forward(double M, double N, double H, bool learn_dict);
double flops_mlp_backward(double M, double N, double H, bool learn_dict);
double flops_mlp(double M, double N, double H, double n_s, double n_b, double n_steps, bool learn_dict,
                 Phase phase);

double flops_ito(double M, double N, double n_s, double n_iter);

struct FlopParams {
    double M = 8, N = 16, H = 0;
    double n_s = 1, n_b = 1, n_steps = 0;
    double n_iter = 0;
    bool learn_dict = true;
};

struct FlopsLedger {
    std::string method;
    double train_flops = 0.0;
    double inference_flops = 0.0;
    FlopParams params;
    bool bias_unaccounted = false;
};

/// Ledger for one method. Sparse coding inference is counted per optimisation
/// iteration times n_iter; SAE+ITO never has training FLOPs.
FlopsLedger flops_ledger(Method method, const FlopParams& p, bool uses_bias = false);

}  // namespace scbench
