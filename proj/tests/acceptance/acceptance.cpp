// Acceptance gate: ten criteria, one PASS/FAIL line each. Exit status is
// nonzero when any selected criterion fails.

#include "scbench/experiments.hpp"
#include "scbench/flops.hpp"

#include "op_counter.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

using namespace scbench;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Matrix random(Index n, Index p, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed, Stream::Probe);
    return rng.normal_matrix(n, p, scale);
}

GenConfig desk_gen(CodeDistribution dist = CodeDistribution::Uniform) {
    GenConfig g;  // N=16, M=8, K=3, n=2048
    g.distribution = dist;
    g.alpha = 1.0;
    return g;
}

std::vector<MethodSpec> specs(std::initializer_list<const char*> labels) {
    std::vector<MethodSpec> out;
    for (auto l : labels) out.push_back(MethodSpec::parse(l));
    return out;
}

struct Context {
    fs::path out;
    int jobs = 1;
    std::optional<SuiteResult> unknown;  // shared by criteria 3 and 6
};

// ---------------------------------------------------------------------------

Outcome mcc_oracle(Context&) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Index p = 1 + Index(seed % 6);
        Matrix A = random(50, p, 2 * seed), B = random(50, p, 2 * seed + 1);
        worst = std::max(worst, std::abs(mcc(A, B, MatchMode::Hungarian).value - oracle::brute_force_mcc(A, B)));
    }
    return {worst <= 1e-10, "max |hungarian - brute force| = " + fmt("%.2e", worst)};
}

Outcome gradients(Context&) {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int M = 2 + i % 5, N = 2 + (3 * i) % 5, H = 2 + (7 * i) % 5;
        const std::uint64_t s = 1000 + std::uint64_t(i);
        Matrix X = random(8, M, s), T = random(8, N, s + 1).cwiseAbs();
        const bool bias = i % 2 == 0;

        SaeModel sae = make_sae(M, N, s, bias);
        sae.encoder_bias = random(N, 1, s + 2, 0.1).col(0);
        sae.decoder_bias = random(M, 1, s + 3, 0.1).col(0);
        MlpModel mlp = make_mlp(M, N, H, s, bias);
        for (auto& l : mlp.layers) l.bias = random(l.weight.rows(), 1, s + 4, 0.1).col(0);
        mlp.decoder_bias = sae.decoder_bias;

        for (const Objective& obj : {Objective::cosine(T), Objective::reconstruction(0.05, true)}) {
            const bool rec = obj.kind == Objective::Kind::Reconstruction;
            SaeGradients gs = sae_loss_and_gradients(sae, X, obj);
            auto fs = [&] { return sae_loss_and_gradients(sae, X, obj).loss; };
            worst = std::max(worst, oracle::relative_error(gs.encoder, oracle::numeric_gradient<Matrix>(fs, sae.encoder)));
            if (bias)
                worst = std::max(worst, oracle::relative_error(gs.encoder_bias,
                                                               oracle::numeric_gradient<Vector>(fs, sae.encoder_bias)));
            if (rec) {
                worst = std::max(worst, oracle::relative_error(
                                            gs.decoder, oracle::numeric_gradient<Matrix>(fs, sae.decoder.columns)));
                if (bias)
                    worst = std::max(worst, oracle::relative_error(
                                                gs.decoder_bias, oracle::numeric_gradient<Vector>(fs, sae.decoder_bias)));
            }

            MlpGradients gm = mlp_loss_and_gradients(mlp, X, obj);
            auto fm = [&] { return mlp_loss_and_gradients(mlp, X, obj).loss; };
            for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
                worst = std::max(worst, oracle::relative_error(
                                            gm.layers[l].weight, oracle::numeric_gradient<Matrix>(fm, mlp.layers[l].weight)));
                if (bias)
                    worst = std::max(worst, oracle::relative_error(
                                                gm.layers[l].bias, oracle::numeric_gradient<Vector>(fm, mlp.layers[l].bias)));
            }
            if (rec) {
                worst = std::max(worst, oracle::relative_error(
                                            gm.decoder, oracle::numeric_gradient<Matrix>(fm, mlp.decoder.columns)));
                if (bias)
                    worst = std::max(worst, oracle::relative_error(
                                                gm.decoder_bias, oracle::numeric_gradient<Vector>(fm, mlp.decoder_bias)));
            }
        }
    }
    return {worst <= 1e-4, "max relative error = " + fmt("%.2e", worst)};
}

ExperimentOptions options(const Context& ctx, int repeats) {
    ExperimentOptions o;
    o.repeats = repeats;
    o.jobs = ctx.jobs;
    return o;
}

Outcome amortisation_gap(Context& ctx) {
    ctx.unknown = run_scenario_suite(Scenario::UnknownBoth, specs({"sc", "sae"}), desk_gen(),
                                     default_train_config(Scenario::UnknownBoth), ctx.out / "c3_unknown",
                                     options(ctx, 5));
    const auto& s = *ctx.unknown;
    const double sc_l = s.mean_final("sc", &MetricsRecord::latent_mcc);
    const double sae_l = s.mean_final("sae", &MetricsRecord::latent_mcc);
    const double sc_d = s.mean_final("sc", &MetricsRecord::dict_mcc);
    const double sae_d = s.mean_final("sae", &MetricsRecord::dict_mcc);
    std::ostringstream d;
    d << "latent sc " << fmt("%.3f", sc_l) << " sae " << fmt("%.3f", sae_l) << " (gap " << fmt("%+.3f", sc_l - sae_l)
      << "), dict sc " << fmt("%.3f", sc_d) << " sae " << fmt("%.3f", sae_d) << " (gap " << fmt("%+.3f", sc_d - sae_d)
      << ")";
    return {sc_l - sae_l >= 0.05 && sc_d - sae_d >= 0.05, d.str()};
}

Outcome known_codes(Context& ctx) {
    SuiteResult s = run_scenario_suite(Scenario::KnownCodes, specs({"sae", "mlp-1024"}), desk_gen(),
                                       default_train_config(Scenario::KnownCodes), ctx.out / "c4_known_codes",
                                       options(ctx, 5));
    const double mlp = s.mean_final("mlp-1024", &MetricsRecord::latent_mcc);
    const double sae = s.mean_final("sae", &MetricsRecord::latent_mcc);
    return {mlp - sae >= 0.05, "mlp-1024 " + fmt("%.3f", mlp) + " sae " + fmt("%.3f", sae) + " (gap " +
                                   fmt("%+.3f", mlp - sae) + ")"};
}

Outcome known_dictionary(Context& ctx) {
    SuiteResult s = run_scenario_suite(Scenario::KnownDictionary, specs({"sae", "mlp-32", "mlp-256", "sae-ito"}),
                                       desk_gen(), default_train_config(Scenario::KnownDictionary),
                                       ctx.out / "c5_known_dictionary", options(ctx, 5));
    const double ito = s.mean_final("sae-ito", &MetricsRecord::latent_mcc);
    double best = 0.0;
    std::ostringstream d;
    d << "sae-ito " << fmt("%.3f", ito);
    for (const char* m : {"sae", "mlp-32", "mlp-256"}) {
        const double v = s.mean_final(m, &MetricsRecord::latent_mcc);
        best = std::max(best, v);
        d << ", " << m << " " << fmt("%.3f", v);
    }
    return {ito >= best - 0.01, d.str()};
}

Outcome rank_witness(Context& ctx) {
    if (!ctx.unknown) return {false, "needs the criterion 3 models"};
    int checked = 0, ok = 0, worst_rank = 0;
    for (const auto& run : ctx.unknown->runs) {
        const auto* sae = std::get_if<SaeModel>(&run.result.artifact);
        if (!sae || run.label != "sae") continue;
        ++checked;
        const Dictionary probe = generate_dictionary(8, 16, std::uint64_t(run.repeat));
        const RankWitness w = sae_rank_witness(*sae, probe);
        worst_rank = std::max(worst_rank, w.rank);
        ok += (w.rank <= 8 && w.gap_certificate);
    }
    SaeModel id = make_sae(6, 6, 0);
    id.encoder = Matrix::Identity(6, 6);
    const RankWitness wi = sae_rank_witness(id, Dictionary{Matrix::Identity(6, 6), Provenance::GroundTruth});
    const bool ident = wi.rank == 6 && !wi.gap_certificate && wi.one_hot_recovered;
    std::ostringstream d;
    d << ok << "/" << checked << " trained SAEs certified (max rank " << worst_rank << "), identity rank " << wi.rank
      << (wi.gap_certificate ? " with gap" : " no gap");
    return {checked == 5 && ok == checked && ident, d.str()};
}

Outcome flop_ledger(Context&) {
    FlopParams p;
    p.M = 8;
    p.N = 16;
    p.H = 32;
    p.n_s = 1;
    p.n_iter = 1;
    const bool exact = flops_sc_inference(8, 16, 1, true) == 400 && flops_sc_inference(8, 16, 1, false) == 272 &&
                       flops_ledger(Method::Sae, p).inference_flops == 528 &&
                       flops_ledger(Method::Mlp, p).inference_flops == 1840 &&
                       flops_ledger(Method::SaeIto, p).inference_flops == 848;
    double lo = 1e9, hi = 0;
    auto track = [&](double counted, double formula) {
        lo = std::min(lo, counted / formula);
        hi = std::max(hi, counted / formula);
    };
    for (int M = 2; M <= 4; ++M)
        for (int N = 2; N <= 4; ++N)
            for (int H = 2; H <= 4; ++H) {
                Rng rng(std::uint64_t(M * 100 + N * 10 + H), Stream::Probe);
                Matrix W = rng.normal_matrix(N, M), D = rng.normal_matrix(M, N);
                Matrix W1 = rng.normal_matrix(H, M), W2 = rng.normal_matrix(N, H);
                Vector x = rng.normal_matrix(M, 1).col(0), s = rng.normal_matrix(N, 1).col(0);
                track(oracle::count_sae_inference(W, D, x), flops_sae(M, N, 1, 1, 0, true, Phase::Inference));
                track(oracle::count_mlp_inference(W1, W2, D, x), flops_mlp(M, N, H, 1, 1, 0, true, Phase::Inference));
                track(oracle::count_sc_inference(D, s), flops_sc_inference(M, N, 1, false));
                for (bool learn : {true, false}) {
                    track(oracle::count_sae_step(W, D, x, 0.1, learn), flops_sae(M, N, 1, 1, 1, learn, Phase::Train));
                    track(oracle::count_mlp_step(W1, W2, D, x, 0.1, learn),
                          flops_mlp(M, N, H, 1, 1, 1, learn, Phase::Train));
                }
                track(oracle::count_sc_step(D, s, x, 0.1), flops_sc_train(M, N, 1, 1, 1, true));
                for (int it = 1; it <= 3; ++it) track(oracle::count_ito(W, D, x, 0.1, it), flops_ito(M, N, 1, it));
            }
    std::ostringstream d;
    d << "hand values " << (exact ? "exact" : "MISMATCH") << ", counted/formula in [" << fmt("%.3f", lo) << ", "
      << fmt("%.3f", hi) << "]";
    return {exact && lo >= 1 / 1.25 && hi <= 1.25, d.str()};
}

Outcome invariants(Context& ctx) {
    std::vector<std::string> failures;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };

    // unit-norm decoder after every update, and a fixed dictionary never moves
    GenConfig g = desk_gen();
    g.n_samples = 512;
    Dataset data = generate_dataset(g);
    auto [tr, te] = split_even(data);
    for (const char* m : {"sae", "mlp-32", "sc"}) {
        TrainConfig c = default_train_config(Scenario::UnknownBoth);
        c.method = MethodSpec::parse(m);
        c.steps = 200;
        c.eval_every = 100;
        c.batch_size = 64;
        c.eval_inference.steps = 50;
        double worst = 0;
        train(tr, te, data.dictionary, c,
              [&](int, const Artifact& a) { worst = std::max(worst, artifact_dictionary(a).max_norm_deviation()); });
        check(worst <= 1e-6, std::string("unit norm ") + m);
    }
    for (const char* m : {"sae", "mlp-32", "sae-ito"}) {
        TrainConfig c = default_train_config(Scenario::KnownDictionary);
        c.method = MethodSpec::parse(m);
        c.steps = 100;
        c.eval_every = 50;
        c.eval_inference.steps = 20;
        c.resample_every = 25;
        bool same = true;
        train(tr, te, data.dictionary, c,
              [&](int, const Artifact& a) { same = same && artifact_dictionary(a).columns == data.dictionary.columns; });
        check(same, std::string("fixed dictionary ") + m);
    }

    // K-exact L0
    for (auto dist : {CodeDistribution::Uniform, CodeDistribution::Zipf})
        for (int K : {1, 3, 9}) {
            GenConfig gc = desk_gen(dist);
            gc.k_active = K;
            Matrix S = generate_codes(gc);
            check(((S.array() != 0).rowwise().count() == K).all(), "K-exact L0");
        }

    // MCC range and invariances
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Matrix A = random(40, 5, 7000 + seed), B = random(40, 5, 8000 + seed);
        const double base = mcc(A, B).value;
        check(base >= 0 && base <= 1 + 1e-12, "mcc range");
        Matrix P(40, 5);
        const int perm[] = {3, 1, 4, 0, 2};
        for (int j = 0; j < 5; ++j) P.col(j) = B.col(perm[j]) * ((j % 2) ? -2.5 : 0.3);
        check(std::abs(mcc(A, P).value - base) <= 1e-12, "mcc invariance");
        check(std::abs(mcc(A, A).value - 1.0) <= 1e-12, "mcc self");
    }

    // monotone MSE for lambda = 0 refinement with a safe step
    {
        SaeModel sae = make_sae(8, 16, 3);
        InferConfig ic;
        ic.steps = 200;
        ic.lr = 0.95;
        ic.lr_relative = true;
        ic.threshold = 0.0;
        Vector prev = (te.X - decode(sae.decoder, sae_encode(sae, te.X).codes)).rowwise().squaredNorm();
        bool mono = true;
        sae_ito(sae, te.X, ic, [&](int, const Matrix& c) {
            Vector now = (te.X - decode(sae.decoder, c)).rowwise().squaredNorm();
            mono = mono && ((now - prev).array() <= 1e-10).all();
            prev = now;
        });
        check(mono, "monotone ITO MSE");
    }

    // byte-identical metric columns on rerun
    {
        const fs::path a = ctx.out / "c8_rerun_a", b = ctx.out / "c8_rerun_b";
        TrainConfig c = default_train_config(Scenario::UnknownBoth);
        c.steps = 200;
        c.eval_every = 50;
        c.eval_inference.steps = 100;
        ExperimentOptions o;
        o.repeats = 2;
        o.jobs = ctx.jobs;
        o.write_checkpoints = false;
        run_scenario_suite(Scenario::UnknownBoth, specs({"sae", "sc"}), g, c, a, o);
        run_scenario_suite(Scenario::UnknownBoth, specs({"sae", "sc"}), g, c, b, o);
        check(read_text(a / "comparison.csv") == read_text(b / "comparison.csv"), "deterministic rerun");
    }

    std::string d = failures.empty() ? "all property checks hold" : "failed:";
    for (auto& f : failures) d += " [" + f + "]";
    return {failures.empty(), d};
}

Outcome pareto(Context& ctx) {
    const std::vector<double> lambdas{0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    ParetoResult r = run_pareto_sweep(lambdas, specs({"sc", "sae"}), desk_gen(),
                                      default_train_config(Scenario::UnknownBoth), ctx.out / "c9_pareto",
                                      options(ctx, 3));
    const int levels = int(lambdas.size()) - 1;
    const int dominated = count_dominated_levels(r.rows, "sc", "sae");
    return {dominated >= 3, "sc dominates sae at " + std::to_string(dominated) + "/" + std::to_string(levels) +
                                " matched levels"};
}

Outcome zipf(Context& ctx) {
    SuiteResult s = run_scenario_suite(Scenario::UnknownBoth, specs({"sc", "sae"}), desk_gen(CodeDistribution::Zipf),
                                       default_train_config(Scenario::UnknownBoth), ctx.out / "c10_zipf",
                                       options(ctx, 5));
    const double sc = s.mean_final("sc", &MetricsRecord::latent_mcc);
    const double sae = s.mean_final("sae", &MetricsRecord::latent_mcc);
    return {sc - sae >= 0.03,
            "sc " + fmt("%.3f", sc) + " sae " + fmt("%.3f", sae) + " (gap " + fmt("%+.3f", sc - sae) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    Context ctx;
    std::string out = "acceptance_runs";
    std::vector<int> only;
    ctx.jobs = int(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--out", out, "directory for run artifacts");
    app.add_option("--jobs", ctx.jobs, "worker threads");
    app.add_option("--only", only, "criterion numbers to run (default all)");
    CLI11_PARSE(app, argc, argv);
    ctx.out = out;
    fs::create_directories(ctx.out);

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome(Context&)> fn;
    };
    const std::vector<Criterion> all{
        {1, "mcc oracle equivalence", mcc_oracle},
        {2, "gradient correctness", gradients},
        {3, "amortisation gap (unknown codes and dictionary)", amortisation_gap},
        {4, "known-codes gap", known_codes},
        {5, "known-dictionary ordering", known_dictionary},
        {6, "rank witness", rank_witness},
        {7, "flop ledger", flop_ledger},
        {8, "invariant suite", invariants},
        {9, "pareto sanity", pareto},
        {10, "zipf suite", zipf},
    };
    std::set<int> selected(only.begin(), only.end());
    if (selected.count(6)) selected.insert(3);

    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%s\n", failed ? "acceptance: FAILED" : "acceptance: all criteria passed");
    return failed ? 1 : 0;
}
