#include "scbench/flops.hpp"

#include "scbench/types.hpp"

namespace scbench {

namespace {

double effective_iterations(double n_s, double n_b, double n_steps) {
    require(n_s > 0 && n_b > 0, "sample and batch counts must be positive");
    require(n_steps >= 0, "step count must be >= 0");
    return n_steps * n_b / n_s;
}

}  // namespace

double flops_sc_inference(double M, double N, double n_s, bool learn_dict) {
    return (learn_dict ? 3.0 : 2.0) * M * N + N * n_s;
}

double flops_sc_train(double M, double N, double n_s, double n_b, double n_steps, bool learn_dict) {
    require(n_b <= n_s, "batch size cannot exceed the sample count");
    const double forward = flops_sc_inference(M, N, n_b, learn_dict);
    const double loss = 2.0 * M * n_b + N * n_b;
    const double backward = 2.0 * forward;
    const double update = N * n_b + (learn_dict ? M * N : 0.0);
    return effective_iterations(n_s, n_b, n_steps) * (forward + loss + backward + update);
}

double flops_sae_forward(double M, double N, bool learn_dict) {
    return (learn_dict ? 5.0 : 4.0) * M * N + N;
}

double flops_sae_backward(double M, double N, bool learn_dict) {
    return N + (2 * N * M + N) + 2 * N * M + 2 * (M * N + N) + (learn_dict ? 2 * N * M : 0.0);
}

double flops_sae(double M, double N, double n_s, double n_b, double n_steps, bool learn_dict, Phase phase) {
    if (phase == Phase::Inference) return (4 * M * N + N) * n_s;
    return effective_iterations(n_s, n_b, n_steps) *
           (flops_sae_forward(M, N, learn_dict) + flops_sae_backward(M, N, learn_dict));
}

double flops_mlp_forward(double M, double N, double H, bool learn_dict) {
    return 2 * M * H + H + 2 * H * N + N + 2 * N * M + (learn_dict ? M * N : 0.0);
}

double flops_mlp_backward(double M, double N, double H, bool learn_dict) {
    return N + (2 * N * H + N) + H + (2 * M * H + H) + 2 * N * M + 2 * (M * H + H + H * N + N) +
           (learn_dict ? 2 * N * M : 0.0);
}

double flops_mlp(double M, double N, double H, double n_s, double n_b, double n_steps, bool learn_dict,
                 Phase phase) {
    if (phase == Phase::Inference) return (2 * M * H + H + 2 * H * N + N + 2 * N * M) * n_s;
    return effective_iterations(n_s, n_b, n_steps) *
           (flops_mlp_forward(M, N, H, learn_dict) + flops_mlp_backward(M, N, H, learn_dict));
}

double flops_ito(double M, double N, double n_s, double n_iter) {
    require(n_iter >= 0, "iteration count must be >= 0");
    return (M * N + N + n_iter * (4 * M * N + 2 * M + 11 * N)) * n_s;
}

FlopsLedger flops_ledger(Method method, const FlopParams& p, bool uses_bias) {
    FlopsLedger l;
    l.method = to_string(method);
    l.params = p;
    l.bias_unaccounted = uses_bias;
    switch (method) {
        case Method::Sae:
            l.train_flops = flops_sae(p.M, p.N, p.n_s, p.n_b, p.n_steps, p.learn_dict, Phase::Train);
            l.inference_flops = flops_sae(p.M, p.N, p.n_s, p.n_b, 0, p.learn_dict, Phase::Inference);
            break;
        case Method::Mlp:
            l.train_flops = flops_mlp(p.M, p.N, p.H, p.n_s, p.n_b, p.n_steps, p.learn_dict, Phase::Train);
            l.inference_flops = flops_mlp(p.M, p.N, p.H, p.n_s, p.n_b, 0, p.learn_dict, Phase::Inference);
            break;
        case Method::SparseCoding: {
            l.train_flops = flops_sc_train(p.M, p.N, p.n_s, p.n_b, p.n_steps, p.learn_dict);
            // test-time codes come from n_iter passes with the dictionary frozen
            const double passes = p.n_iter > 0 ? p.n_iter : 1.0;
            l.inference_flops = passes * flops_sc_inference(p.M, p.N, p.n_s, false);
            break;
        }
        case Method::SaeIto:
            l.train_flops = 0.0;
            l.inference_flops = flops_ito(p.M, p.N, p.n_s, p.n_iter);
            break;
    }
    return l;
}

}  // namespace scbench
