// Throughput of the per-sample encoders the FLOP ledger compares: one
// forward pass (SAE, MLP) versus iterative latent optimisation (SC, ITO).

#include "scbench/datagen.hpp"
#include "scbench/inference.hpp"
#include "scbench/models.hpp"
#include "scbench/training.hpp"

#include <benchmark/benchmark.h>

using namespace scbench;

namespace {

const Dataset& data() {
    static const Dataset d = [] {
        GenConfig g;
        g.n_samples = 1024;
        return generate_dataset(g);
    }();
    return d;
}

void BM_SaeEncode(benchmark::State& state) {
    SaeModel m = make_sae(8, 16, 0);
    for (auto _ : state) benchmark::DoNotOptimize(sae_encode(m, data().X).codes.data());
    state.SetItemsProcessed(state.iterations() * data().X.rows());
}
BENCHMARK(BM_SaeEncode);

void BM_MlpEncode(benchmark::State& state) {
    MlpModel m = make_mlp(8, 16, int(state.range(0)), 0);
    for (auto _ : state) benchmark::DoNotOptimize(mlp_encode(m, data().X).codes.data());
    state.SetItemsProcessed(state.iterations() * data().X.rows());
}
BENCHMARK(BM_MlpEncode)->Arg(32)->Arg(256)->Arg(1024);

void BM_InferCodes(benchmark::State& state) {
    InferConfig cfg;
    cfg.steps = int(state.range(0));
    cfg.rule = UpdateRule::Ista;
    cfg.lr = 0.5;
    cfg.lr_relative = true;
    cfg.lambda = 1e-2;
    for (auto _ : state) benchmark::DoNotOptimize(infer_codes(data().dictionary, data().X, cfg).data());
    state.SetItemsProcessed(state.iterations() * data().X.rows());
}
BENCHMARK(BM_InferCodes)->Arg(10)->Arg(100)->Arg(1000);

void BM_SaeTrainStep(benchmark::State& state) {
    SaeModel m = make_sae(8, 16, 0);
    const Objective obj = Objective::reconstruction(1e-2, true);
    for (auto _ : state) benchmark::DoNotOptimize(sae_loss_and_gradients(m, data().X, obj).loss);
}
BENCHMARK(BM_SaeTrainStep);

void BM_SparseCodingStep(benchmark::State& state) {
    const Matrix codes = data().S;
    for (auto _ : state)
        benchmark::DoNotOptimize(sparse_coding_gradients(data().dictionary, codes, data().X, 1e-2).loss);
}
BENCHMARK(BM_SparseCodingStep);

}  // namespace
BENCHMARK_MAIN();
