#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"
#include "splitforge/pipeline.hpp"
#include "test_helpers.hpp"

using namespace splitforge;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small planted dataset on disk + a config pointing at it
struct Fixture {
    testutil::TempDir dir{"pipeline"};
    std::filesystem::path data;

    explicit Fixture(std::uint64_t seed = 5) {
        SynthSpec spec;
        spec.n_concepts = 60;
        spec.n_supercats = 4;
        spec.dim = 4;
        spec.noise_sigma = 0.05;
        spec.n_taxonomic_attrs = 2;
        spec.n_transversal_attrs = 5;
        spec.transversal_pos_rate = 0.35;
        spec.seed = seed;
        data = dir.path() / "data";
        write_synth(data, generate(spec), EmbeddingFormat::csv);
    }

    RunConfig config(Strategy strategy, const std::string& out_name) const {
        RunConfig c;
        c.embeddings = (data / "embeddings.csv").string();
        c.attributes = (data / "attributes.csv").string();
        c.supercategories = (data / "supercategories.csv").string();
        c.strategy = strategy;
        c.k = 4;
        c.master_seed = 77;
        c.out_dir = (dir.path() / out_name).string();
        return c;
    }
};

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char ch : text) n += ch == '\n';
    return n;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("run config parsing: defaults, overrides and unknown keys") {
    testutil::TempDir dir("cfg");
    const auto path = dir.path() / "config.json";
    write_file(path, R"({
      "embeddings": "emb.csv",
      "attributes": "attr.csv",
      "strategy": "clustering",
      "k": 25,
      "split": {"ratio_window": [0.55, 0.88], "beta": 3.0},
      "probe": {"max_iter": 500},
      "master_seed": 9,
      "workers": 2
    })");
    RunConfig c = load_run_config(path);
    CHECK(c.strategy == Strategy::clustering);
    CHECK(c.k == 25);
    CHECK(c.split.ratio_window_lo == 0.55);
    CHECK(c.split.ratio_window_hi == 0.88);
    CHECK(c.beta_explicit);
    CHECK(c.probe.max_iter == 500);
    CHECK(c.master_seed == 9);
    CHECK(c.top_k_pairs == 600); // pipeline default for the similarity strategy
    CHECK(c.probe.grad_tol == 1e-6);
    CHECK(c.split.target_train_ratio == 0.8);
    CHECK(c.split.trials == 64);

    const auto bad = dir.path() / "bad.json";
    write_file(bad, R"({"embeddings": "e", "attributes": "a", "strtaegy": "random"})");
    CHECK_THROWS_WITH_AS(load_run_config(bad), doctest::Contains("unknown config key"),
                         ConfigError);

    const auto bad_nested = dir.path() / "bad2.json";
    write_file(bad_nested, R"({"embeddings": "e", "attributes": "a", "split": {"window": 1}})");
    CHECK_THROWS_AS(load_run_config(bad_nested), ConfigError);
}

TEST_CASE("random strategy zeroes beta unless explicitly configured") {
    RunConfig c;
    c.strategy = Strategy::random;
    CHECK(effective_constraints(c).beta == 0.0);
    c.beta_explicit = true;
    c.split.beta = 1.5;
    CHECK(effective_constraints(c).beta == 1.5);

    RunConfig fresh;
    fresh.strategy = Strategy::clustering;
    CHECK(effective_constraints(fresh).beta == 2.0);
}

TEST_CASE("cmd_split writes grouping, splits, rejections and diagnostics") {
    Fixture fx;
    RunConfig c = fx.config(Strategy::clustering, "split_out");
    cmd_split(c);
    const auto out = std::filesystem::path(c.out_dir);
    CHECK(std::filesystem::exists(out / "grouping.json"));
    CHECK(std::filesystem::exists(out / "split_meta.json"));
    CHECK(std::filesystem::exists(out / "rejected.json"));

    const std::string splits = slurp(out / "splits.jsonl");
    CHECK(count_lines(splits) == 7); // every attribute gets a record

    nlohmann::json diag = nlohmann::json::parse(slurp(out / "split_diagnostics.json"));
    CHECK(diag["strategy"] == "clustering");
    CHECK(diag["n_groups"] == 4);
    CHECK(diag["coverage"] == 1.0);
}

TEST_CASE("supercategory strategy rejects taxonomic attributes by construction") {
    Fixture fx;
    RunConfig c = fx.config(Strategy::supercategory, "super_out");
    cmd_split(c);
    nlohmann::json rejected = nlohmann::json::parse(
        slurp(std::filesystem::path(c.out_dir) / "rejected.json"));
    std::set<std::string> names;
    for (const auto& r : rejected) names.insert(r["attribute"].get<std::string>());
    CHECK(names.count("tax0_s00"));
    CHECK(names.count("tax1_s01"));
}

TEST_CASE("llm strategy with empty pair file matches random splittable set") {
    Fixture fx;
    const auto pair_path = fx.dir.path() / "empty_pairs.csv";
    write_pair_list(pair_path, PairList{});

    RunConfig llm_cfg = fx.config(Strategy::llm, "llm_out");
    llm_cfg.pair_file = pair_path.string();
    LoadedDataset llm_data = load_dataset(llm_cfg);
    SplitRun llm_run = run_split(llm_cfg, llm_data);

    RunConfig rnd_cfg = fx.config(Strategy::random, "rnd_out");
    LoadedDataset rnd_data = load_dataset(rnd_cfg);
    SplitRun rnd_run = run_split(rnd_cfg, rnd_data);

    CHECK(llm_run.splittable == rnd_run.splittable);
}

TEST_CASE("probe results and summary are deterministic across runs and worker counts") {
    Fixture fx;
    RunConfig c = fx.config(Strategy::random, "probe_a");
    c.probe.max_iter = 300;
    cmd_split(c);
    cmd_probe(c, std::filesystem::path(c.out_dir) / "splits.jsonl");
    const std::string results_a = slurp(std::filesystem::path(c.out_dir) / "results.jsonl");
    const std::string summary_a = slurp(std::filesystem::path(c.out_dir) / "summary.json");

    RunConfig c2 = c;
    c2.out_dir = (fx.dir.path() / "probe_b").string();
    c2.workers = 4;
    cmd_split(c2);
    cmd_probe(c2, std::filesystem::path(c2.out_dir) / "splits.jsonl");
    CHECK(slurp(std::filesystem::path(c2.out_dir) / "results.jsonl") == results_a);
    CHECK(slurp(std::filesystem::path(c2.out_dir) / "summary.json") == summary_a);

    nlohmann::json summary = nlohmann::json::parse(summary_a);
    CHECK(summary["n_feasible"].get<int>() >= 5);
    CHECK(summary["results"].size() == summary["n_feasible"].get<std::size_t>());
    for (const auto& r : summary["results"]) {
        CHECK(std::abs(r["f1_selectivity"].get<double>() -
                       (r["f1"].get<double>() - r["baseline_f1"].get<double>())) < 1e-12);
    }
}

TEST_CASE("report merges strategies and refuses mismatched datasets") {
    Fixture fx;
    RunConfig random_cfg = fx.config(Strategy::random, "rep_random");
    random_cfg.probe.max_iter = 300;
    cmd_split(random_cfg);
    cmd_probe(random_cfg, std::filesystem::path(random_cfg.out_dir) / "splits.jsonl");

    RunConfig cluster_cfg = fx.config(Strategy::clustering, "rep_cluster");
    cluster_cfg.probe.max_iter = 300;
    cmd_split(cluster_cfg);
    cmd_probe(cluster_cfg, std::filesystem::path(cluster_cfg.out_dir) / "splits.jsonl");

    const auto report_dir = fx.dir.path() / "report";
    cmd_report({std::filesystem::path(random_cfg.out_dir) / "summary.json",
                std::filesystem::path(cluster_cfg.out_dir) / "summary.json"},
               report_dir);
    const std::string table = slurp(report_dir / "selectivity.csv");
    CHECK(table.find("features,random,clustering") == 0);
    CHECK(count_lines(table) == 2);
    CHECK(std::filesystem::exists(report_dir / "cs_table.csv"));
    const std::string scatter = slurp(report_dir / "scatter_random.csv");
    nlohmann::json summary =
        nlohmann::json::parse(slurp(std::filesystem::path(random_cfg.out_dir) / "summary.json"));
    CHECK(count_lines(scatter) == summary["n_feasible"].get<std::size_t>() + 1);

    // a different dataset fingerprint must be refused
    Fixture other(31);
    RunConfig other_cfg = other.config(Strategy::random, "rep_other");
    other_cfg.probe.max_iter = 300;
    cmd_split(other_cfg);
    cmd_probe(other_cfg, std::filesystem::path(other_cfg.out_dir) / "splits.jsonl");
    CHECK_THROWS_WITH_AS(
        cmd_report({std::filesystem::path(random_cfg.out_dir) / "summary.json",
                    std::filesystem::path(other_cfg.out_dir) / "summary.json"},
                   fx.dir.path() / "report2"),
        doctest::Contains("inconsistent dataset fingerprints"), ValidationError);
}

TEST_CASE("probe refuses splits from a different dataset") {
    Fixture fx;
    RunConfig c = fx.config(Strategy::random, "mismatch");
    cmd_split(c);

    Fixture other(99);
    RunConfig other_cfg = other.config(Strategy::random, "mismatch_other");
    CHECK_THROWS_WITH_AS(cmd_probe(other_cfg, std::filesystem::path(c.out_dir) / "splits.jsonl"),
                         doctest::Contains("different dataset"), ValidationError);
}

TEST_CASE("ablate-k writes one row per k") {
    Fixture fx;
    RunConfig c = fx.config(Strategy::clustering, "ablate");
    c.probe.max_iter = 200;
    cmd_ablate_k(c, {2, 4, 8});
    const std::string csv = slurp(std::filesystem::path(c.out_dir) / "ablation.csv");
    CHECK(count_lines(csv) == 4); // header + 3 rows
    CHECK(csv.rfind("k,n_feasible,mean_f1_selectivity,cs\n", 0) == 0);
    CHECK_THROWS_AS(cmd_ablate_k(c, {1000}), ConfigError);
}

TEST_CASE("exit codes map per error class") {
    CHECK(static_cast<int>(ConfigError("x").exit_code()) == 1);
    CHECK(static_cast<int>(ValidationError("x").exit_code()) == 2);
    CHECK(static_cast<int>(InfeasibleError("x").exit_code()) == 3);
}

TEST_CASE("fingerprints are stable and sensitive") {
    CHECK(fnv1a64_hex("abc") == fnv1a64_hex("abc"));
    CHECK(fnv1a64_hex("abc") != fnv1a64_hex("abd"));
    CHECK(fnv1a64_hex("").size() == 16);
}

} // TEST_SUITE
