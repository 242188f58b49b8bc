#pragma once

#include "scbench/datagen.hpp"
#include "scbench/io.hpp"
#include "scbench/training.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace scbench {

const char* code_version();

/// Git blob hash: sha1("blob <len>\0" + content), lowercase hex.
std::string content_hash(const std::string& content);

struct ManifestOutput {
    std::string file;  // relative to the run directory
    long rows = 0;     // data rows (CSV header excluded)
};

struct RunManifest {
    std::string kind;
    std::string config_json;
    std::uint64_t seed = 0;
    std::string input_hash;
    std::string started_at;
    std::string finished_at;
    std::vector<ManifestOutput> outputs;
    std::vector<std::string> skipped;  // e.g. grid cells with K > N
    std::string status = "ok";
    std::string error;
    std::string version = code_version();
};

std::string manifest_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const fs::path& dir, const RunManifest& m);
RunManifest read_manifest(const fs::path& dir);

/// Empty when every listed file exists with its recorded row count,
/// otherwise one message per mismatch.
std::vector<std::string> verify_manifest(const fs::path& dir, const RunManifest& m);

/// Runs fn(0..count-1) on at most `jobs` threads. The exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// Tuned desk-scale defaults per scenario; every field can still be
/// overridden from a config file.
TrainConfig default_train_config(Scenario scenario);

struct ExperimentOptions {
    int repeats = 1;
    int jobs = 1;
    std::uint64_t seed = 0;       // repeat r uses data seed seed + r
    bool write_checkpoints = true;
};

// ---------------------------------------------------------------------------
// Scenario suite

struct MethodRun {
    std::string label;
    int repeat = 0;
    TrainResult result;

    const MetricsRecord& final_metrics() const { return result.trace.points.back().metrics; }
};

struct SuiteResult {
    RunManifest manifest;
    std::vector<MethodRun> runs;  // ordered by method, then repeat

    /// Mean of a final metric over the repeats of one method.
    double mean_final(const std::string& label, double MetricsRecord::*field) const;
};

inline constexpr const char* kComparisonHeader =
    "method,seed,step,flops_train_cum,mse,latent_mcc,dict_mcc,l0,l1";

/// Trains every method on shared data for each repeat. Writes
/// <method>/seed<r>/trace.csv (+ checkpoint/) and comparison.csv.
SuiteResult run_scenario_suite(Scenario scenario, const std::vector<MethodSpec>& methods, const GenConfig& gen,
                               const TrainConfig& base, const fs::path& out_dir, const ExperimentOptions& opts);

// ---------------------------------------------------------------------------
// N / M / K sweep

struct SweepGrid {
    std::vector<int> N{8, 12, 16, 24, 32};
    std::vector<int> M{2, 4, 6, 8, 12, 16};
    std::vector<int> K{3, 9};
    GenConfig gen;     // N, M, K overwritten per cell
    TrainConfig base;  // method overwritten per run

    void validate() const;
};

struct ContourRow {
    int N = 0, M = 0, K = 0;
    double mcc_a = 0.0, mcc_b = 0.0, diff = 0.0, boundary = 0.0;
};

inline constexpr const char* kContourHeader = "N,M,K,method1,method2,mcc_method1,mcc_method2,diff,boundary,repeats";

struct SweepResult {
    RunManifest manifest;
    std::vector<ContourRow> rows;
};

SweepResult run_nmk_sweep(const SweepGrid& grid, const MethodSpec& a, const MethodSpec& b, const fs::path& out_dir,
                          const ExperimentOptions& opts);

// ---------------------------------------------------------------------------
// Lambda / Pareto sweep

struct ParetoRow {
    std::string method;
    double lambda = 0.0;
    double l0_zero = 0.0, l0_1e5 = 0.0, l0_1e3 = 0.0;  // L0 at thresholds 0, 1e-5, 1e-3
    double l1 = 0.0, mse = 0.0, latent_mcc = 0.0;
    int true_k = 0;
    int repeats = 0;
};

inline constexpr const char* kParetoHeader =
    "method,lambda,l0_t0,l0_t1e-5,l0_t1e-3,l1,mse,latent_mcc,true_k,repeats";

struct ParetoResult {
    RunManifest manifest;
    std::vector<ParetoRow> rows;  // averaged over repeats
};

ParetoResult run_pareto_sweep(const std::vector<double>& lambdas, const std::vector<MethodSpec>& methods,
                              const GenConfig& gen, const TrainConfig& base, const fs::path& out_dir,
                              const ExperimentOptions& opts);

/// Among `challenger`'s lambda > 0 points, the number for which `leader` has
/// some point with l1 <= and latent_mcc >= it.
int count_dominated_levels(const std::vector<ParetoRow>& rows, const std::string& leader,
                           const std::string& challenger);

// ---------------------------------------------------------------------------
// Ablations

enum class AblationKind { MlpWidth, Bias, TopK, LargeScale, ZipfSuite };

std::string to_string(AblationKind k);
AblationKind ablation_from_string(const std::string& s);

struct AblationParams {
    GenConfig gen;
    std::optional<TrainConfig> base;  // default_train_config of the kind's scenario otherwise
    std::vector<int> widths{16, 64, 256};
    std::vector<MethodSpec> methods;  // Bias / LargeScale / ZipfSuite method lists; empty = kind default
    int topk = 3;
};

/// One summary row per line of the kind-specific CSV, keyed by name.
struct AblationResult {
    RunManifest manifest;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<SuiteResult> suites;  // LargeScale / ZipfSuite sub-runs
};

AblationResult run_ablation(AblationKind kind, const AblationParams& params, const fs::path& out_dir,
                            const ExperimentOptions& opts);

}  // namespace scbench
