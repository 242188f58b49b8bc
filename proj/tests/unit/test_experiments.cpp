#include "scbench/experiments.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace scbench;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("scbench_exp_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

GenConfig tiny_gen() {
    GenConfig g;
    g.n_samples = 128;
    return g;
}

TrainConfig tiny_train(Scenario s) {
    TrainConfig c = default_train_config(s);
    c.steps = 10;
    c.eval_every = 5;
    c.batch_size = 0;
    c.eval_inference.steps = 10;
    return c;
}

std::vector<std::string> lines(const fs::path& p) {
    std::istringstream in(read_text(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

}  // namespace

TEST(ContentHash, MatchesGitBlobHash) {
    EXPECT_EQ(content_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(content_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Manifest, JsonRoundTripAndVerify) {
    fs::path dir = scratch("manifest");
    fs::create_directories(dir);
    write_text(dir / "t.csv", "a,b\n1,2\n3,4\n");
    RunManifest m;
    m.kind = "suite";
    m.config_json = R"({"x":1})";
    m.input_hash = content_hash(m.config_json);
    m.seed = 7;
    m.outputs.push_back({"t.csv", 2});
    m.skipped.push_back("cell");
    write_manifest(dir, m);
    RunManifest back = read_manifest(dir);
    EXPECT_EQ(back.kind, "suite");
    EXPECT_EQ(back.seed, 7u);
    EXPECT_EQ(back.outputs.size(), 1u);
    EXPECT_EQ(back.skipped, m.skipped);
    EXPECT_EQ(back.version, code_version());
    EXPECT_TRUE(verify_manifest(dir, back).empty());
    back.outputs[0].rows = 5;
    back.outputs.push_back({"gone.csv", 1});
    EXPECT_EQ(verify_manifest(dir, back).size(), 2u);
    back.config_json = "{}";
    EXPECT_EQ(verify_manifest(dir, back).size(), 3u);
    fs::remove_all(dir);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    try {
        parallel_for(20, 3, [](std::size_t i) {
            if (i == 7 || i == 13) throw ConfigError("fail " + std::to_string(i));
        });
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "fail 7");
    }
}

TEST(Suite, SingleMethodComparisonHasOnlyThatMethod) {
    fs::path dir = scratch("suite1");
    ExperimentOptions opts;
    opts.repeats = 2;
    SuiteResult r = run_scenario_suite(Scenario::UnknownBoth, {MethodSpec::parse("sae")}, tiny_gen(),
                                       tiny_train(Scenario::UnknownBoth), dir, opts);
    auto rows = lines(dir / "comparison.csv");
    EXPECT_EQ(rows.front(), kComparisonHeader);
    ASSERT_EQ(rows.size(), 1u + 2 * 3);  // 2 repeats x steps {0,5,10}
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].substr(0, 4), "sae,");
    EXPECT_TRUE(fs::exists(dir / "sae" / "seed0" / "trace.csv"));
    EXPECT_TRUE(fs::exists(dir / "sae" / "seed1" / "checkpoint" / "model.json"));
    EXPECT_TRUE(verify_manifest(dir, read_manifest(dir)).empty());
    EXPECT_EQ(r.manifest.status, "ok");
    fs::remove_all(dir);
}

TEST(Suite, DeterministicAcrossJobCounts) {
    fs::path a = scratch("det_a"), b = scratch("det_b");
    ExperimentOptions o1, o4;
    o1.repeats = o4.repeats = 2;
    o4.jobs = 4;
    o1.write_checkpoints = o4.write_checkpoints = false;
    const std::vector<MethodSpec> methods{MethodSpec::parse("sae"), MethodSpec::parse("sc")};
    run_scenario_suite(Scenario::UnknownBoth, methods, tiny_gen(), tiny_train(Scenario::UnknownBoth), a, o1);
    run_scenario_suite(Scenario::UnknownBoth, methods, tiny_gen(), tiny_train(Scenario::UnknownBoth), b, o4);
    EXPECT_EQ(read_text(a / "comparison.csv"), read_text(b / "comparison.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Suite, InapplicableMethodRejectedUpFront) {
    fs::path dir = scratch("bad");
    EXPECT_THROW(run_scenario_suite(Scenario::KnownCodes, {MethodSpec::parse("sc")}, tiny_gen(),
                                    tiny_train(Scenario::KnownCodes), dir, {}),
                 ConfigError);
    EXPECT_FALSE(fs::exists(dir / "comparison.csv"));
    fs::remove_all(dir);
}

TEST(Suite, FailureMarksManifest) {
    fs::path dir = scratch("diverge");
    TrainConfig c = tiny_train(Scenario::UnknownBoth);
    c.eval_inference.rule = UpdateRule::Subgradient;
    c.eval_inference.lr_relative = false;
    c.eval_inference.lr = 50.0;
    c.eval_inference.steps = 5000;
    EXPECT_THROW(run_scenario_suite(Scenario::UnknownBoth, {MethodSpec::parse("sc")}, tiny_gen(), c, dir, {}),
                 DivergenceError);
    RunManifest m = read_manifest(dir);
    EXPECT_EQ(m.status, "failed");
    EXPECT_FALSE(m.error.empty());
    fs::remove_all(dir);
}

TEST(NmkSweep, SingleCellOneRowAndSkipsKAboveN) {
    fs::path dir = scratch("nmk");
    SweepGrid g;
    g.N = {4, 6};
    g.M = {3};
    g.K = {5};
    g.gen = tiny_gen();
    g.base = tiny_train(Scenario::UnknownBoth);
    SweepResult r = run_nmk_sweep(g, MethodSpec::parse("sc"), MethodSpec::parse("sae"), dir, {});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].N, 6);
    EXPECT_NEAR(r.rows[0].diff, r.rows[0].mcc_a - r.rows[0].mcc_b, 1e-15);
    EXPECT_NEAR(r.rows[0].boundary, recovery_boundary(6, 5), 1e-12);
    EXPECT_EQ(r.manifest.skipped.size(), 1u);
    auto rows = lines(dir / "contour.csv");
    EXPECT_EQ(rows.front(), kContourHeader);
    EXPECT_EQ(rows.size(), 2u);
    fs::remove_all(dir);
}

TEST(ParetoSweep, ThresholdColumnsMonotoneAndRowsPerCell) {
    fs::path dir = scratch("pareto");
    TrainConfig base = tiny_train(Scenario::UnknownBoth);
    ParetoResult r = run_pareto_sweep({0.0, 1e-2}, {MethodSpec::parse("sc"), MethodSpec::parse("sae")}, tiny_gen(),
                                      base, dir, {});
    ASSERT_EQ(r.rows.size(), 4u);
    for (const auto& row : r.rows) {
        EXPECT_LE(row.l0_1e3, row.l0_1e5);
        EXPECT_LE(row.l0_1e5, row.l0_zero);
        EXPECT_EQ(row.true_k, 3);
    }
    EXPECT_EQ(lines(dir / "pareto.csv").front(), kParetoHeader);
    EXPECT_TRUE(verify_manifest(dir, read_manifest(dir)).empty());
    fs::remove_all(dir);
}

TEST(ParetoSweep, DominationCount) {
    std::vector<ParetoRow> rows{
        {"sc", 0.0, 0, 0, 0, 5.0, 0, 0.5}, {"sc", 0.1, 0, 0, 0, 2.0, 0, 0.6},
        {"sae", 0.0, 0, 0, 0, 4.0, 0, 0.2}, {"sae", 0.1, 0, 0, 0, 3.0, 0, 0.4}, {"sae", 0.2, 0, 0, 0, 1.0, 0, 0.3},
    };
    EXPECT_EQ(count_dominated_levels(rows, "sc", "sae"), 1);
    EXPECT_EQ(count_dominated_levels(rows, "sae", "sc"), 0);
}

TEST(Ablation, KindNamesRoundTrip) {
    for (auto k : {AblationKind::MlpWidth, AblationKind::Bias, AblationKind::TopK, AblationKind::LargeScale,
                   AblationKind::ZipfSuite})
        EXPECT_EQ(ablation_from_string(to_string(k)), k);
    EXPECT_THROW(ablation_from_string("nope"), ConfigError);
}

TEST(Ablation, BiasWritesTable) {
    fs::path dir = scratch("bias");
    AblationParams p;
    p.gen = tiny_gen();
    p.base = tiny_train(Scenario::UnknownBoth);
    p.methods = {MethodSpec::parse("sae")};
    AblationResult r = run_ablation(AblationKind::Bias, p, dir, {});
    EXPECT_TRUE(fs::exists(dir / "bias.csv"));
    EXPECT_FALSE(r.rows.empty());
    EXPECT_TRUE(verify_manifest(dir, read_manifest(dir)).empty());
    fs::remove_all(dir);
}

TEST(Defaults, TrainConfigsValidate) {
    for (auto s : {Scenario::KnownCodes, Scenario::KnownDictionary, Scenario::UnknownBoth}) {
        TrainConfig c = default_train_config(s);
        c.method = MethodSpec::parse("sae");
        EXPECT_NO_THROW(c.validate());
        EXPECT_EQ(c.steps, 20000);
    }
}
