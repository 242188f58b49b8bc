#include "scbench/experiments.hpp"
#include "scbench/flops.hpp"
#include "scbench/io.hpp"
#include "scbench/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <sstream>

using namespace scbench;
using nlohmann::json;

namespace {

struct Globals {
    std::string out = "runs";
    int jobs = 1;
    std::uint64_t seed = 0;
    std::string config;
};

json load_config(const Globals& g) {
    if (g.config.empty()) return json::object();
    json j = json::parse(read_text(g.config));
    if (!j.is_object()) throw ConfigError("--config must hold a JSON object");
    return j;
}

// defaults, then the "gen" section of --config, then explicit flags
GenConfig gen_from(const json& cfg, const Globals& g) {
    GenConfig base;
    base.seed = g.seed;
    json j = json::parse(gen_config_json(base));
    if (cfg.contains("gen")) j.merge_patch(cfg.at("gen"));
    return gen_config_from_json(j.dump());
}

TrainConfig train_from(const json& cfg, Scenario scenario) {
    json j = json::parse(train_config_json(default_train_config(scenario)));
    if (cfg.contains("train")) {
        json patch = cfg.at("train");
        if (patch.contains("eval_inference")) {
            json inf = j.at("eval_inference");
            inf.merge_patch(patch.at("eval_inference"));
            patch["eval_inference"] = inf;
        }
        j.merge_patch(patch);
    }
    j["scenario"] = to_string(scenario);
    return train_config_from_json(j.dump());
}

ExperimentOptions options_from(const json& cfg, const Globals& g) {
    ExperimentOptions o;
    o.repeats = cfg.value("repeats", 1);
    o.jobs = g.jobs;
    o.seed = g.seed;
    return o;
}

std::vector<MethodSpec> parse_methods(const std::vector<std::string>& labels) {
    std::vector<MethodSpec> out;
    for (const auto& l : labels) out.push_back(MethodSpec::parse(l));
    return out;
}

void print_manifest(const RunManifest& m, const std::string& dir) {
    std::cout << m.kind << " -> " << dir << " (" << m.outputs.size() << " outputs, status " << m.status << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse encoding benchmark: SAE, MLP, sparse coding and SAE+ITO on synthetic data"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--jobs", g.jobs, "Parallel workers for independent runs")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Base seed");
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset (X.csv, S.csv, D.csv, manifest.json)");
    int N = -1, M = -1, K = -1, n_samples = -1;
    std::string distribution;
    double alpha = -1;
    gen_cmd->add_option("-N,--n", N, "Number of sparse sources");
    gen_cmd->add_option("-M,--m", M, "Measurement dimension");
    gen_cmd->add_option("-K,--k", K, "Active sources per sample");
    gen_cmd->add_option("--samples", n_samples, "Number of samples");
    gen_cmd->add_option("--dist,--distribution", distribution, "uniform or zipf");
    gen_cmd->add_option("--alpha", alpha, "Zipf exponent");
    auto apply_gen_flags = [&](GenConfig& c) {
        if (N > 0) c.n_sources = N;
        if (M > 0) c.n_measurements = M;
        if (K > 0) c.k_active = K;
        if (n_samples > 0) c.n_samples = n_samples;
        if (!distribution.empty()) c.distribution = code_distribution_from_string(distribution);
        if (alpha > 0) c.alpha = alpha;
        c.validate();
    };

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one method and write trace.csv plus a checkpoint");
    std::string scenario_s = "unknown", method_s = "sae", data_dir;
    int hidden = 0, steps = 0, batch = -1, eval_every = 0, resample = 0;
    double lr = 0, lambda = -1, code_lr = 0;
    bool bias = false;
    train_cmd->add_option("--scenario", scenario_s, "known-codes, known-dictionary or unknown");
    train_cmd->add_option("--method", method_s, "sae, mlp, sc, sae-ito (or mlp-<H>)");
    train_cmd->add_option("--hidden", hidden, "MLP hidden width");
    train_cmd->add_option("--steps", steps, "Training steps");
    train_cmd->add_option("--lr", lr, "Adam learning rate");
    train_cmd->add_option("--lambda", lambda, "L1 penalty");
    train_cmd->add_option("--code-lr", code_lr, "Adam learning rate of sparse coding latents");
    train_cmd->add_option("--batch", batch, "Batch size, 0 = full batch");
    train_cmd->add_option("--eval-every", eval_every, "Evaluation interval");
    train_cmd->add_option("--resample-every", resample, "Dead-latent resampling interval");
    train_cmd->add_flag("--bias", bias, "Enable bias terms");
    train_cmd->add_option("--data", data_dir, "Dataset directory from `generate` (generated in memory if omitted)");

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Encode a dataset with a checkpoint");
    std::string ckpt_dir;
    int infer_steps = 0, topk = 0;
    double infer_lr = 0, infer_lambda = -1;
    infer_cmd->add_option("--checkpoint", ckpt_dir, "Checkpoint directory")->required();
    infer_cmd->add_option("--data", data_dir, "Dataset directory, or a bare X.csv (codes only, no metrics)")
        ->required();
    infer_cmd->add_option("--steps", infer_steps, "Inference steps (sparse coding, SAE+ITO)");
    infer_cmd->add_option("--lr", infer_lr, "Inference step size");
    infer_cmd->add_option("--lambda", infer_lambda, "Inference L1 penalty");
    infer_cmd->add_option("--topk", topk, "Keep the k largest codes per sample");

    // gram
    auto* gram_cmd = app.add_subcommand("gram", "Gram-matrix analysis of a decoder");
    std::string dict_csv;
    auto* gram_src = gram_cmd->add_option_group("source");
    gram_src->add_option("--checkpoint", ckpt_dir, "Checkpoint directory");
    gram_src->add_option("--dictionary", dict_csv, "M x N dictionary CSV");
    gram_src->require_option(1);

    // flops
    auto* flops_cmd = app.add_subcommand("flops", "Print the FLOP ledger as JSON");
    FlopParams fp{8, 16, 32, 1, 1, 1, 1, true};
    std::string flops_method = "all";
    bool fixed_dict = false;
    flops_cmd->add_option("-M", fp.M, "Measurement dimension");
    flops_cmd->add_option("-N", fp.N, "Latent dimension");
    flops_cmd->add_option("-H", fp.H, "MLP hidden width");
    flops_cmd->add_option("--n-s", fp.n_s, "Samples");
    flops_cmd->add_option("--n-b", fp.n_b, "Batch size");
    flops_cmd->add_option("--steps", fp.n_steps, "Training steps");
    flops_cmd->add_option("--n-iter", fp.n_iter, "Inference iterations (ITO, sparse coding)");
    flops_cmd->add_flag("--fixed-dictionary", fixed_dict, "Dictionary is not learned");
    flops_cmd->add_option("--method", flops_method, "sae, mlp, sc, sae-ito or all");

    // sweeps
    auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweeps");
    sweep_cmd->require_subcommand(1);
    auto* nmk_cmd = sweep_cmd->add_subcommand("nmk", "N/M/K contour sweep (contour.csv)");
    std::vector<int> grid_N, grid_M, grid_K;
    std::string m1 = "sc", m2 = "sae";
    nmk_cmd->add_option("--N", grid_N, "N axis");
    nmk_cmd->add_option("--M", grid_M, "M axis");
    nmk_cmd->add_option("--K", grid_K, "K axis");
    nmk_cmd->add_option("--method1", m1, "First method");
    nmk_cmd->add_option("--method2", m2, "Second method");
    auto* pareto_cmd = sweep_cmd->add_subcommand("pareto", "Lambda sweep (pareto.csv)");
    std::vector<double> lambdas;
    std::vector<std::string> methods;
    pareto_cmd->add_option("--lambdas", lambdas, "Lambda ladder");
    pareto_cmd->add_option("--methods", methods, "Methods");

    int repeats = 0;
    for (auto* c : {nmk_cmd, pareto_cmd}) c->add_option("--repeats", repeats, "Seeds per cell");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Ablations: mlp-width, bias, topk, large-scale, zipf");
    std::string ablation;
    std::vector<int> widths;
    ablate_cmd->add_option("kind", ablation, "Ablation kind")->required();
    ablate_cmd->add_option("--widths", widths, "MLP widths");
    ablate_cmd->add_option("--methods", methods, "Methods");
    ablate_cmd->add_option("--topk", topk, "k for the top-k study");
    ablate_cmd->add_option("--repeats", repeats, "Seeds");

    // suite
    auto* suite_cmd = app.add_subcommand("suite", "Scenario comparison (comparison.csv)");
    std::string suite_scenario;
    suite_cmd->add_option("scenario", suite_scenario, "known-codes, known-dictionary or unknown")->required();
    suite_cmd->add_option("--methods", methods, "Methods");
    suite_cmd->add_option("--repeats", repeats, "Seeds");
    suite_cmd->add_option("--steps", steps, "Training steps");

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(g);
        const fs::path out(g.out);
        auto opts_with_repeats = [&] {
            ExperimentOptions o = options_from(cfg, g);
            if (repeats > 0) o.repeats = repeats;
            return o;
        };

        if (*gen_cmd) {
            GenConfig c = gen_from(cfg, g);
            apply_gen_flags(c);
            const Dataset d = generate_dataset(c);
            write_dataset(out, d);
            std::cout << "wrote " << d.X.rows() << " samples to " << out.string() << "\n";
            return 0;
        }

        if (*train_cmd) {
            const Scenario scenario = scenario_from_string(scenario_s);
            TrainConfig tc = train_from(cfg, scenario);
            tc.method = MethodSpec::parse(method_s);
            if (hidden > 0) tc.method.hidden = hidden;
            if (steps > 0) tc.steps = steps;
            if (lr > 0) tc.lr = lr;
            if (lambda >= 0) tc.lambda = tc.eval_inference.lambda = lambda;
            if (code_lr > 0) tc.code_lr = code_lr;
            if (batch >= 0) tc.batch_size = batch;
            if (eval_every > 0) tc.eval_every = eval_every;
            if (resample > 0) tc.resample_every = resample;
            if (bias) tc.use_bias = true;
            tc.seed = tc.eval_inference.seed = g.seed;
            tc.validate();

            Dataset d;
            if (!data_dir.empty()) {
                d = read_dataset(data_dir);
            } else {
                GenConfig c = gen_from(cfg, g);
                apply_gen_flags(c);
                d = generate_dataset(c);
            }
            const auto [tr, te] = split_even(d);
            TrainResult r = train(tr, te, d.dictionary, tc);
            fs::create_directories(out);
            write_trace_csv(out / "trace.csv", r.trace);
            save_checkpoint(out / "checkpoint", {r.artifact, tc.method, tc.scenario, tc.steps});
            write_text(out / "config.json", train_config_json(tc) + "\n");
            const MetricsRecord& f = r.trace.points.back().metrics;
            std::cout << tc.method.label() << " " << to_string(tc.scenario) << ": latent_mcc " << f.latent_mcc
                      << " dict_mcc " << f.dict_mcc << " mse " << f.mse << " l0 " << f.l0_mean << "\n";
            if (r.degenerate_rows > 0)
                std::cerr << "warning: " << r.degenerate_rows << " all-zero prediction rows at the end of training\n";
            return 0;
        }

        if (*infer_cmd) {
            const Checkpoint ck = load_checkpoint(ckpt_dir);
            InferConfig ic = train_from(cfg, ck.scenario).eval_inference;
            if (infer_steps > 0) ic.steps = infer_steps;
            if (infer_lr > 0) ic.lr = infer_lr;
            if (infer_lambda >= 0) ic.lambda = infer_lambda;
            if (topk > 0) ic.topk = topk;
            ic.seed = g.seed;
            fs::create_directories(out);
            if (fs::is_regular_file(data_dir)) {
                const Matrix X = read_matrix_csv(data_dir);
                write_matrix_csv(out / "codes.csv", encode_split(ck.artifact, ck.method.method, X, ic));
                std::cout << "wrote " << X.rows() << " code rows\n";
                return 0;
            }
            const Dataset d = read_dataset(data_dir);
            const Matrix codes = encode_split(ck.artifact, ck.method.method, d.X, ic);
            const DataSplit all{d.X, d.S};
            const MetricsRecord m = evaluate(ck.artifact, all, d.dictionary, ck.method.method, {ic, ic.threshold});
            write_matrix_csv(out / "codes.csv", codes);
            json summary{{"latent_mcc", m.latent_mcc}, {"dict_mcc", m.dict_mcc}, {"mse", m.mse},
                         {"l0", m.l0_mean},            {"l1", m.l1_mean},         {"dead_fraction", m.dead_fraction}};
            write_text(out / "metrics.json", summary.dump(2) + "\n");
            std::cout << summary.dump(2) << "\n";
            return 0;
        }

        if (*gram_cmd) {
            Dictionary dict = !ckpt_dir.empty() ? artifact_dictionary(load_checkpoint(ckpt_dir).artifact)
                                                : Dictionary{read_matrix_csv(dict_csv), Provenance::Learned};
            const GramReport rep = gram_analysis(dict);
            fs::create_directories(out);
            write_matrix_csv(out / "G.csv", rep.gram);
            json summary{{"N", dict.atoms()},
                         {"M", dict.measurements()},
                         {"max_offdiag", rep.max_offdiag},
                         {"identity_deviation", rep.identity_deviation},
                         {"max_norm_deviation", dict.max_norm_deviation()}};
            write_text(out / "gram.json", summary.dump(2) + "\n");
            std::cout << summary.dump(2) << "\n";
            return 0;
        }

        if (*flops_cmd) {
            fp.learn_dict = !fixed_dict;
            json ledgers = json::array();
            std::vector<Method> ms;
            if (flops_method == "all")
                ms = {Method::Sae, Method::Mlp, Method::SparseCoding, Method::SaeIto};
            else
                ms = {method_from_string(flops_method)};
            for (Method m : ms) {
                const FlopsLedger l = flops_ledger(m, fp);
                ledgers.push_back({{"method", l.method},
                                   {"train_flops", l.train_flops},
                                   {"inference_flops", l.inference_flops},
                                   {"bias_unaccounted", l.bias_unaccounted}});
            }
            json j{{"params",
                    {{"M", fp.M}, {"N", fp.N}, {"H", fp.H}, {"n_s", fp.n_s}, {"n_b", fp.n_b},
                     {"n_steps", fp.n_steps}, {"n_iter", fp.n_iter}, {"learn_dict", fp.learn_dict}}},
                   {"units", "train = n_steps * n_b / n_s effective passes, each term per batch; "
                             "inference = whole set of n_s samples"},
                   {"ledgers", ledgers}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*nmk_cmd) {
            SweepGrid grid;
            grid.gen = gen_from(cfg, g);
            grid.base = train_from(cfg, Scenario::UnknownBoth);
            if (cfg.contains("grid")) {
                const json& gj = cfg.at("grid");
                grid.N = gj.value("N", grid.N);
                grid.M = gj.value("M", grid.M);
                grid.K = gj.value("K", grid.K);
            }
            if (!grid_N.empty()) grid.N = grid_N;
            if (!grid_M.empty()) grid.M = grid_M;
            if (!grid_K.empty()) grid.K = grid_K;
            ExperimentOptions o = opts_with_repeats();
            if (repeats <= 0 && !cfg.contains("repeats")) o.repeats = 3;
            const SweepResult r = run_nmk_sweep(grid, MethodSpec::parse(m1), MethodSpec::parse(m2), out, o);
            print_manifest(r.manifest, g.out);
            return 0;
        }

        if (*pareto_cmd) {
            if (lambdas.empty()) lambdas = cfg.value("lambdas", std::vector<double>{0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2});
            if (methods.empty()) methods = cfg.value("methods", std::vector<std::string>{"sc", "sae"});
            const ParetoResult r = run_pareto_sweep(lambdas, parse_methods(methods), gen_from(cfg, g),
                                                    train_from(cfg, Scenario::UnknownBoth), out, opts_with_repeats());
            print_manifest(r.manifest, g.out);
            return 0;
        }

        if (*ablate_cmd) {
            AblationParams p;
            p.gen = gen_from(cfg, g);
            if (cfg.contains("train")) p.base = train_from(cfg, Scenario::UnknownBoth);
            p.widths = widths.empty() ? cfg.value("widths", p.widths) : widths;
            if (methods.empty()) methods = cfg.value("methods", std::vector<std::string>{});
            p.methods = parse_methods(methods);
            p.topk = topk > 0 ? topk : cfg.value("topk", p.topk);
            const AblationResult r = run_ablation(ablation_from_string(ablation), p, out, opts_with_repeats());
            print_manifest(r.manifest, g.out);
            return 0;
        }

        if (*suite_cmd) {
            const Scenario scenario = scenario_from_string(suite_scenario);
            if (methods.empty()) {
                static const std::map<Scenario, std::vector<std::string>> defaults{
                    {Scenario::KnownCodes, {"sae", "mlp-1024"}},
                    {Scenario::KnownDictionary, {"sae", "mlp-32", "mlp-256", "sae-ito"}},
                    {Scenario::UnknownBoth, {"sae", "mlp-256", "sc", "sae-ito"}}};
                methods = cfg.value("methods", defaults.at(scenario));
            }
            TrainConfig base = train_from(cfg, scenario);
            if (steps > 0) base.steps = steps;
            const SuiteResult r =
                run_scenario_suite(scenario, parse_methods(methods), gen_from(cfg, g), base, out, opts_with_repeats());
            for (const auto& m : methods)
                std::cout << m << ": latent_mcc " << r.mean_final(MethodSpec::parse(m).label(), &MetricsRecord::latent_mcc)
                          << " dict_mcc " << r.mean_final(MethodSpec::parse(m).label(), &MetricsRecord::dict_mcc)
                          << "\n";
            print_manifest(r.manifest, g.out);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
