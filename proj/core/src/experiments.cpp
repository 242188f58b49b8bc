#include "scbench/experiments.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef SCBENCH_VERSION
#define SCBENCH_VERSION "0.0.0"
#endif

namespace scbench {

using nlohmann::json;

const char* code_version() { return "scbench " SCBENCH_VERSION; }

std::string content_hash(const std::string& content) {
    const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
        throw Error("sha1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out.push_back(',');
        out += cells[i];
    }
    return out;
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::string text = join(header) + "\n";
    for (const auto& r : rows) text += join(r) + "\n";
    write_text(path, text);
}

std::mutex g_index_mutex;

// one JSON line per finished run; the only file shared between workers
void append_index(const fs::path& out_dir, const json& entry) {
    std::lock_guard<std::mutex> lock(g_index_mutex);
    std::ofstream out(out_dir / "index.jsonl", std::ios::app);
    out << entry.dump() << '\n';
}

void add_output(RunManifest& m, const fs::path& root, const fs::path& file, bool header) {
    m.outputs.push_back({fs::relative(file, root).generic_string(), count_csv_rows(file, header)});
}

RunManifest begin_manifest(const std::string& kind, const json& config, std::uint64_t seed) {
    RunManifest m;
    m.kind = kind;
    m.config_json = config.dump();
    m.seed = seed;
    m.input_hash = content_hash(m.config_json);
    m.started_at = utc_now();
    return m;
}

json experiment_json(const GenConfig& gen, const TrainConfig& base, const ExperimentOptions& opts) {
    return {{"gen", json::parse(gen_config_json(gen))},
            {"train", json::parse(train_config_json(base))},
            {"repeats", opts.repeats},
            {"seed", opts.seed}};
}

json methods_json(const std::vector<MethodSpec>& methods) {
    json j = json::array();
    for (const auto& m : methods) j.push_back(m.label());
    return j;
}

/// Wraps body so that a failure still leaves a manifest marked failed.
template <typename Body>
void guarded(RunManifest& m, const fs::path& out_dir, Body&& body) {
    fs::create_directories(out_dir);
    try {
        body();
    } catch (const std::exception& e) {
        m.status = "failed";
        m.error = e.what();
        m.finished_at = utc_now();
        write_manifest(out_dir, m);
        throw;
    }
    m.finished_at = utc_now();
    write_manifest(out_dir, m);
}

Dataset repeat_dataset(GenConfig gen, const ExperimentOptions& opts, int r) {
    gen.seed = opts.seed + static_cast<std::uint64_t>(r);
    return generate_dataset(gen);
}

TrainConfig run_config(const TrainConfig& base, Scenario scenario, const MethodSpec& spec, std::uint64_t seed) {
    TrainConfig cfg = base;
    cfg.scenario = scenario;
    cfg.method = spec;
    cfg.seed = seed;
    cfg.eval_inference.seed = seed;
    return cfg;
}

std::string lambda_tag(double lambda) { return "lambda" + num(lambda); }

}  // namespace

std::string manifest_json(const RunManifest& m) {
    json outputs = json::array();
    for (const auto& o : m.outputs) outputs.push_back({{"file", o.file}, {"rows", o.rows}});
    json j{{"kind", m.kind},
           {"config", json::parse(m.config_json)},
           {"seed", m.seed},
           {"input_hash", m.input_hash},
           {"started_at", m.started_at},
           {"finished_at", m.finished_at},
           {"outputs", outputs},
           {"skipped", m.skipped},
           {"status", m.status},
           {"version", m.version}};
    if (!m.error.empty()) j["error"] = m.error;
    return j.dump(2);
}

RunManifest manifest_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunManifest m;
    m.kind = j.at("kind");
    m.config_json = j.at("config").dump();
    m.seed = j.at("seed");
    m.input_hash = j.at("input_hash");
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    for (const auto& o : j.at("outputs")) m.outputs.push_back({o.at("file"), o.at("rows")});
    m.skipped = j.value("skipped", std::vector<std::string>{});
    m.status = j.value("status", "ok");
    m.error = j.value("error", "");
    m.version = j.value("version", "");
    return m;
}

void write_manifest(const fs::path& dir, const RunManifest& m) { write_text(dir / "manifest.json", manifest_json(m) + "\n"); }

RunManifest read_manifest(const fs::path& dir) { return manifest_from_json(read_text(dir / "manifest.json")); }

std::vector<std::string> verify_manifest(const fs::path& dir, const RunManifest& m) {
    std::vector<std::string> problems;
    for (const auto& o : m.outputs) {
        const fs::path p = dir / o.file;
        if (!fs::exists(p)) {
            problems.push_back("missing " + o.file);
            continue;
        }
        const long rows = count_csv_rows(p, p.extension() == ".csv");
        if (rows != o.rows)
            problems.push_back(o.file + ": " + std::to_string(rows) + " rows, manifest says " + std::to_string(o.rows));
    }
    if (m.input_hash != content_hash(m.config_json)) problems.push_back("input hash does not match config");
    return problems;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

TrainConfig default_train_config(Scenario scenario) {
    TrainConfig c;
    c.scenario = scenario;
    c.steps = 20000;
    c.eval_every = 1000;
    c.lr = 1e-3;
    c.lambda = 1e-2;
    // test-time codes: proximal steps of half the safe size from a small uniform start
    c.eval_inference.steps = 1000;
    c.eval_inference.rule = UpdateRule::Ista;
    c.eval_inference.lr = 0.5;
    c.eval_inference.lr_relative = true;
    c.eval_inference.init = CodeInit::Uniform;
    if (scenario == Scenario::KnownCodes) {
        // cosine loss; ReLU outputs die without resampling
        c.lr = 3e-3;
        c.lambda = 0.0;
        c.batch_size = 256;
        c.resample_every = 2000;
    }
    c.eval_inference.lambda = c.lambda;
    return c;
}

// ---------------------------------------------------------------------------

double SuiteResult::mean_final(const std::string& label, double MetricsRecord::*field) const {
    double total = 0.0;
    int count = 0;
    for (const auto& r : runs) {
        if (r.label != label) continue;
        total += r.final_metrics().*field;
        ++count;
    }
    if (count == 0) throw Error("no runs for method " + label);
    return total / count;
}

SuiteResult run_scenario_suite(Scenario scenario, const std::vector<MethodSpec>& methods, const GenConfig& gen,
                               const TrainConfig& base, const fs::path& out_dir, const ExperimentOptions& opts) {
    require(!methods.empty(), "suite needs at least one method");
    require(opts.repeats >= 1, "repeats must be >= 1");
    for (const auto& m : methods) run_config(base, scenario, m, 0).validate();
    gen.validate();

    json config = experiment_json(gen, base, opts);
    config["scenario"] = to_string(scenario);
    config["methods"] = methods_json(methods);

    SuiteResult result;
    result.manifest = begin_manifest("suite", config, opts.seed);
    guarded(result.manifest, out_dir, [&] {
        const std::size_t R = static_cast<std::size_t>(opts.repeats);
        result.runs.resize(methods.size() * R);
        parallel_for(result.runs.size(), opts.jobs, [&](std::size_t task) {
            const MethodSpec& spec = methods[task / R];
            const int r = static_cast<int>(task % R);
            const Dataset data = repeat_dataset(gen, opts, r);
            const auto [tr, te] = split_even(data);
            const TrainConfig cfg = run_config(base, scenario, spec, opts.seed + static_cast<std::uint64_t>(r));
            MethodRun run{spec.label(), r, train(tr, te, data.dictionary, cfg)};

            const fs::path dir = out_dir / spec.label() / ("seed" + std::to_string(r));
            write_trace_csv(dir / "trace.csv", run.result.trace);
            if (opts.write_checkpoints)
                save_checkpoint(dir / "checkpoint", {run.result.artifact, spec, scenario, cfg.steps});
            const MetricsRecord& fin = run.final_metrics();
            append_index(out_dir, {{"run", spec.label() + "/seed" + std::to_string(r)},
                                   {"latent_mcc", fin.latent_mcc},
                                   {"dict_mcc", fin.dict_mcc}});
            result.runs[task] = std::move(run);
        });

        std::vector<std::vector<std::string>> rows;
        for (const auto& run : result.runs) {
            const fs::path dir = out_dir / run.label / ("seed" + std::to_string(run.repeat));
            add_output(result.manifest, out_dir, dir / "trace.csv", true);
            for (const auto& p : run.result.trace.points) {
                const MetricsRecord& m = p.metrics;
                rows.push_back({run.label, std::to_string(opts.seed + run.repeat), std::to_string(p.step),
                                num(p.flops_train_cum), num(m.mse), num(m.latent_mcc), num(m.dict_mcc),
                                num(m.l0_mean), num(m.l1_mean)});
            }
        }
        std::vector<std::string> header;
        std::stringstream hs(kComparisonHeader);
        for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
        write_table(out_dir / "comparison.csv", header, rows);
        add_output(result.manifest, out_dir, out_dir / "comparison.csv", true);
    });
    return result;
}

// ---------------------------------------------------------------------------

void SweepGrid::validate() const {
    require(!N.empty() && !M.empty() && !K.empty(), "sweep axes must be non-empty");
    for (int v : N) require(v >= 1, "grid N must be >= 1");
    for (int v : M) require(v >= 1, "grid M must be >= 1");
    for (int v : K) require(v >= 1, "grid K must be >= 1");
}

SweepResult run_nmk_sweep(const SweepGrid& grid, const MethodSpec& a, const MethodSpec& b, const fs::path& out_dir,
                          const ExperimentOptions& opts) {
    grid.validate();
    require(opts.repeats >= 1, "repeats must be >= 1");
    const Scenario scenario = grid.base.scenario;
    run_config(grid.base, scenario, a, 0).validate();
    run_config(grid.base, scenario, b, 0).validate();

    json config = experiment_json(grid.gen, grid.base, opts);
    config["grid"] = {{"N", grid.N}, {"M", grid.M}, {"K", grid.K}};
    config["methods"] = methods_json({a, b});

    SweepResult result;
    result.manifest = begin_manifest("sweep-nmk", config, opts.seed);
    guarded(result.manifest, out_dir, [&] {
        struct Cell {
            int N, M, K;
        };
        std::vector<Cell> cells;
        for (int K : grid.K)
            for (int N : grid.N)
                for (int M : grid.M) {
                    if (K > N) {
                        result.manifest.skipped.push_back("N=" + std::to_string(N) + ",M=" + std::to_string(M) +
                                                          ",K=" + std::to_string(K) + ": K > N");
                        continue;
                    }
                    cells.push_back({N, M, K});
                }
        const std::size_t R = static_cast<std::size_t>(opts.repeats);
        std::vector<double> mcc(cells.size() * R * 2, 0.0);
        parallel_for(mcc.size(), opts.jobs, [&](std::size_t task) {
            const Cell& c = cells[task / (2 * R)];
            const int r = static_cast<int>((task / 2) % R);
            const MethodSpec& spec = (task % 2 == 0) ? a : b;
            GenConfig g = grid.gen;
            g.n_sources = c.N;
            g.n_measurements = c.M;
            g.k_active = c.K;
            const Dataset data = repeat_dataset(g, opts, r);
            const auto [tr, te] = split_even(data);
            TrainResult res = train(tr, te, data.dictionary,
                                    run_config(grid.base, scenario, spec, opts.seed + static_cast<std::uint64_t>(r)));
            mcc[task] = res.trace.points.back().metrics.latent_mcc;
        });

        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            ContourRow row{cells[i].N, cells[i].M, cells[i].K};
            for (std::size_t r = 0; r < R; ++r) {
                row.mcc_a += mcc[(i * R + r) * 2] / double(R);
                row.mcc_b += mcc[(i * R + r) * 2 + 1] / double(R);
            }
            row.diff = row.mcc_a - row.mcc_b;
            row.boundary = recovery_boundary(row.N, row.K);
            result.rows.push_back(row);
            rows.push_back({std::to_string(row.N), std::to_string(row.M), std::to_string(row.K), a.label(), b.label(),
                            num(row.mcc_a), num(row.mcc_b), num(row.diff), num(row.boundary),
                            std::to_string(opts.repeats)});
        }
        write_table(out_dir / "contour.csv",
                    {"N", "M", "K", "method1", "method2", "mcc_method1", "mcc_method2", "diff", "boundary", "repeats"},
                    rows);
        add_output(result.manifest, out_dir, out_dir / "contour.csv", true);
    });
    return result;
}

// ---------------------------------------------------------------------------

ParetoResult run_pareto_sweep(const std::vector<double>& lambdas, const std::vector<MethodSpec>& methods,
                              const GenConfig& gen, const TrainConfig& base, const fs::path& out_dir,
                              const ExperimentOptions& opts) {
    require(!lambdas.empty() && !methods.empty(), "pareto sweep needs lambdas and methods");
    for (double l : lambdas) require(l >= 0.0 && std::isfinite(l), "lambda values must be >= 0");
    require(opts.repeats >= 1, "repeats must be >= 1");
    for (const auto& m : methods) run_config(base, base.scenario, m, 0).validate();
    gen.validate();

    json config = experiment_json(gen, base, opts);
    config["lambdas"] = lambdas;
    config["methods"] = methods_json(methods);

    ParetoResult result;
    result.manifest = begin_manifest("sweep-pareto", config, opts.seed);
    guarded(result.manifest, out_dir, [&] {
        const std::size_t L = lambdas.size(), R = static_cast<std::size_t>(opts.repeats);
        std::vector<ParetoRow> cells(methods.size() * L * R);
        parallel_for(cells.size(), opts.jobs, [&](std::size_t task) {
            const MethodSpec& spec = methods[task / (L * R)];
            const double lambda = lambdas[(task / R) % L];
            const int r = static_cast<int>(task % R);
            const Dataset data = repeat_dataset(gen, opts, r);
            const auto [tr, te] = split_even(data);
            TrainConfig cfg = run_config(base, base.scenario, spec, opts.seed + static_cast<std::uint64_t>(r));
            cfg.lambda = lambda;
            cfg.eval_inference.lambda = lambda;
            TrainResult res = train(tr, te, data.dictionary, cfg);
            const fs::path dir = out_dir / spec.label() / lambda_tag(lambda) / ("seed" + std::to_string(r));
            write_trace_csv(dir / "trace.csv", res.trace);

            // raw codes, no final zeroing, so the threshold columns mean what they say
            InferConfig raw = cfg.eval_inference;
            raw.threshold = 0.0;
            const Matrix codes = encode_split(res.artifact, spec.method, te.X, raw);
            ParetoRow row;
            row.method = spec.label();
            row.lambda = lambda;
            row.l0_zero = sparsity_stats(codes, 0.0).l0_mean;
            row.l0_1e5 = sparsity_stats(codes, 1e-5).l0_mean;
            row.l0_1e3 = sparsity_stats(codes, 1e-3).l0_mean;
            row.l1 = sparsity_stats(codes, 0.0).l1_mean;
            const MetricsRecord& fin = res.trace.points.back().metrics;
            row.mse = fin.mse;
            row.latent_mcc = fin.latent_mcc;
            row.true_k = gen.k_active;
            row.repeats = 1;
            cells[task] = row;
        });

        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < methods.size() * L; ++i) {
            ParetoRow mean = cells[i * R];
            for (std::size_t r = 1; r < R; ++r) {
                const ParetoRow& c = cells[i * R + r];
                mean.l0_zero += c.l0_zero;
                mean.l0_1e5 += c.l0_1e5;
                mean.l0_1e3 += c.l0_1e3;
                mean.l1 += c.l1;
                mean.mse += c.mse;
                mean.latent_mcc += c.latent_mcc;
            }
            for (double* f : {&mean.l0_zero, &mean.l0_1e5, &mean.l0_1e3, &mean.l1, &mean.mse, &mean.latent_mcc})
                *f /= double(R);
            mean.repeats = opts.repeats;
            result.rows.push_back(mean);
            rows.push_back({mean.method, num(mean.lambda), num(mean.l0_zero), num(mean.l0_1e5), num(mean.l0_1e3),
                            num(mean.l1), num(mean.mse), num(mean.latent_mcc), std::to_string(mean.true_k),
                            std::to_string(mean.repeats)});
            for (std::size_t r = 0; r < R; ++r)
                add_output(result.manifest, out_dir,
                           out_dir / mean.method / lambda_tag(mean.lambda) / ("seed" + std::to_string(r)) / "trace.csv",
                           true);
        }
        write_table(out_dir / "pareto.csv",
                    {"method", "lambda", "l0_t0", "l0_t1e-5", "l0_t1e-3", "l1", "mse", "latent_mcc", "true_k",
                     "repeats"},
                    rows);
        add_output(result.manifest, out_dir, out_dir / "pareto.csv", true);
    });
    return result;
}

int count_dominated_levels(const std::vector<ParetoRow>& rows, const std::string& leader,
                           const std::string& challenger) {
    int count = 0;
    for (const auto& c : rows) {
        if (c.method != challenger || c.lambda <= 0.0) continue;
        const bool dominated = std::any_of(rows.begin(), rows.end(), [&](const ParetoRow& l) {
            return l.method == leader && l.l1 <= c.l1 && l.latent_mcc >= c.latent_mcc;
        });
        if (dominated) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------

std::string to_string(AblationKind k) {
    switch (k) {
        case AblationKind::MlpWidth: return "mlp-width";
        case AblationKind::Bias: return "bias";
        case AblationKind::TopK: return "topk";
        case AblationKind::LargeScale: return "large-scale";
        case AblationKind::ZipfSuite: return "zipf";
    }
    return "?";
}

AblationKind ablation_from_string(const std::string& s) {
    for (AblationKind k : {AblationKind::MlpWidth, AblationKind::Bias, AblationKind::TopK, AblationKind::LargeScale,
                           AblationKind::ZipfSuite})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown ablation '" + s + "' (mlp-width, bias, topk, large-scale, zipf)");
}

namespace {

std::vector<std::string> summary_row(const SuiteResult& s, const std::string& label, int repeats) {
    return {num(s.mean_final(label, &MetricsRecord::latent_mcc)), num(s.mean_final(label, &MetricsRecord::dict_mcc)),
            num(s.mean_final(label, &MetricsRecord::mse)), std::to_string(repeats)};
}

std::vector<MethodSpec> parse_all(std::initializer_list<const char*> labels) {
    std::vector<MethodSpec> out;
    for (const char* l : labels) out.push_back(MethodSpec::parse(l));
    return out;
}

}  // namespace

AblationResult run_ablation(AblationKind kind, const AblationParams& params, const fs::path& out_dir,
                            const ExperimentOptions& opts) {
    auto base_for = [&](Scenario s) {
        TrainConfig c = params.base ? *params.base : default_train_config(s);
        c.scenario = s;
        return c;
    };

    json config = experiment_json(params.gen, base_for(Scenario::UnknownBoth), opts);
    config["ablation"] = to_string(kind);
    config["widths"] = params.widths;
    config["methods"] = methods_json(params.methods);
    config["topk"] = params.topk;

    AblationResult result;
    result.manifest = begin_manifest("ablation-" + to_string(kind), config, opts.seed);
    std::string table;
    guarded(result.manifest, out_dir, [&] {
        switch (kind) {
            case AblationKind::MlpWidth: {
                require(!params.widths.empty(), "mlp-width ablation needs widths");
                std::vector<MethodSpec> methods;
                for (int w : params.widths) methods.push_back({Method::Mlp, w});
                result.suites.push_back(run_scenario_suite(Scenario::UnknownBoth, methods, params.gen,
                                                           base_for(Scenario::UnknownBoth), out_dir / "runs", opts));
                result.header = {"width", "latent_mcc", "dict_mcc", "mse", "repeats"};
                for (const auto& m : methods) {
                    auto row = summary_row(result.suites[0], m.label(), opts.repeats);
                    row.insert(row.begin(), std::to_string(m.hidden));
                    result.rows.push_back(row);
                }
                table = "mlp_width.csv";
                break;
            }
            case AblationKind::Bias: {
                const auto methods = params.methods.empty() ? parse_all({"sae"}) : params.methods;
                TrainConfig off = base_for(Scenario::UnknownBoth), on = off;
                off.use_bias = false;
                on.use_bias = true;
                result.suites.push_back(
                    run_scenario_suite(Scenario::UnknownBoth, methods, params.gen, off, out_dir / "bias_off", opts));
                result.suites.push_back(
                    run_scenario_suite(Scenario::UnknownBoth, methods, params.gen, on, out_dir / "bias_on", opts));
                result.header = {"method",        "mcc_no_bias", "mcc_bias", "delta", "dict_mcc_no_bias",
                                 "dict_mcc_bias", "mse_no_bias", "mse_bias", "repeats"};
                for (const auto& m : methods) {
                    const std::string l = m.label();
                    const double a = result.suites[0].mean_final(l, &MetricsRecord::latent_mcc);
                    const double b = result.suites[1].mean_final(l, &MetricsRecord::latent_mcc);
                    result.rows.push_back({l, num(a), num(b), num(b - a),
                                           num(result.suites[0].mean_final(l, &MetricsRecord::dict_mcc)),
                                           num(result.suites[1].mean_final(l, &MetricsRecord::dict_mcc)),
                                           num(result.suites[0].mean_final(l, &MetricsRecord::mse)),
                                           num(result.suites[1].mean_final(l, &MetricsRecord::mse)),
                                           std::to_string(opts.repeats)});
                }
                table = "bias.csv";
                break;
            }
            case AblationKind::TopK: {
                require(params.topk >= 1 && params.topk <= params.gen.n_sources, "top-k must be in [1, N]");
                const auto sc = parse_all({"sc"});
                TrainConfig inference_only = base_for(Scenario::UnknownBoth);
                inference_only.train_topk.reset();
                inference_only.eval_inference.topk = params.topk;
                TrainConfig during_training = inference_only;
                during_training.train_topk = params.topk;
                result.suites.push_back(run_scenario_suite(Scenario::UnknownBoth, sc, params.gen, inference_only,
                                                           out_dir / "topk_inference", opts));
                result.suites.push_back(run_scenario_suite(Scenario::UnknownBoth, sc, params.gen, during_training,
                                                           out_dir / "topk_training", opts));
                result.header = {"variant", "seed", "step", "mse", "latent_mcc", "dict_mcc", "l0", "l1"};
                const char* names[] = {"topk-inference", "topk-training"};
                for (std::size_t v = 0; v < 2; ++v)
                    for (const auto& run : result.suites[v].runs)
                        for (const auto& p : run.result.trace.points)
                            result.rows.push_back({names[v], std::to_string(opts.seed + run.repeat),
                                                   std::to_string(p.step), num(p.metrics.mse),
                                                   num(p.metrics.latent_mcc), num(p.metrics.dict_mcc),
                                                   num(p.metrics.l0_mean), num(p.metrics.l1_mean)});
                table = "topk.csv";
                break;
            }
            case AblationKind::LargeScale: {
                GenConfig g = params.gen;
                g.n_sources = 200;
                g.n_measurements = 40;
                g.k_active = 5;
                TrainConfig c = base_for(Scenario::KnownCodes);
                c.batch_size = 1024;
                const auto methods = params.methods.empty() ? parse_all({"sae", "mlp-256"}) : params.methods;
                result.suites.push_back(run_scenario_suite(Scenario::KnownCodes, methods, g, c, out_dir / "runs", opts));
                result.header = {"method", "latent_mcc", "dict_mcc", "mse", "repeats"};
                for (const auto& m : methods) {
                    auto row = summary_row(result.suites[0], m.label(), opts.repeats);
                    row.insert(row.begin(), m.label());
                    result.rows.push_back(row);
                }
                table = "large_scale.csv";
                break;
            }
            case AblationKind::ZipfSuite: {
                GenConfig g = params.gen;
                g.distribution = CodeDistribution::Zipf;
                const std::map<Scenario, std::vector<MethodSpec>> defaults{
                    {Scenario::KnownCodes, parse_all({"sae", "mlp-256"})},
                    {Scenario::KnownDictionary, parse_all({"sae", "mlp-256", "sae-ito"})},
                    {Scenario::UnknownBoth, parse_all({"sae", "mlp-256", "sc"})}};
                result.header = {"scenario", "method", "latent_mcc", "dict_mcc", "mse", "repeats"};
                for (const auto& [scenario, fallback] : defaults) {
                    std::vector<MethodSpec> methods;
                    for (const auto& m : params.methods)
                        if (is_applicable(scenario, m.method)) methods.push_back(m);
                    if (params.methods.empty()) methods = fallback;
                    if (methods.empty()) continue;
                    result.suites.push_back(run_scenario_suite(scenario, methods, g, base_for(scenario),
                                                               out_dir / to_string(scenario), opts));
                    for (const auto& m : methods) {
                        auto row = summary_row(result.suites.back(), m.label(), opts.repeats);
                        row.insert(row.begin(), {to_string(scenario), m.label()});
                        result.rows.push_back(row);
                    }
                }
                table = "zipf.csv";
                break;
            }
        }
        write_table(out_dir / table, result.header, result.rows);
        add_output(result.manifest, out_dir, out_dir / table, true);
    });
    return result;
}

}  // namespace scbench
