#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splitforge/error.hpp"
#include "splitforge/kernels.hpp"
#include "splitforge/pipeline.hpp"

namespace {

struct CommonOverrides {
    std::string config_path;
    std::string strategy;
    std::string out_dir;
    std::string pair_file;
    int k = -1;
    long long seed = -1;
    int workers = -1;
    std::string baseline;
};

void add_common(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run config")->required();
    cmd->add_option("--strategy", o.strategy,
                    "random|llm|similarity|clustering|supercategory (overrides config)");
    cmd->add_option("--k", o.k, "k-means cluster count (overrides config)");
    cmd->add_option("--seed", o.seed, "master seed (overrides config)");
    cmd->add_option("--out", o.out_dir, "output directory (overrides config)");
    cmd->add_option("--pair-file", o.pair_file, "pair list CSV for the llm strategy");
    cmd->add_option("--workers", o.workers, "worker threads for per-attribute tasks");
    cmd->add_option("--baseline", o.baseline, "prior-matched|coin-flip (overrides config)");
}

splitforge::RunConfig resolve(const CommonOverrides& o) {
    splitforge::RunConfig config = splitforge::load_run_config(o.config_path);
    if (!o.strategy.empty()) config.strategy = splitforge::strategy_from_name(o.strategy);
    if (o.k >= 0) config.k = o.k;
    if (o.seed >= 0) config.master_seed = static_cast<std::uint64_t>(o.seed);
    if (!o.out_dir.empty()) config.out_dir = o.out_dir;
    if (!o.pair_file.empty()) config.pair_file = o.pair_file;
    if (o.workers > 0) config.workers = o.workers;
    if (!o.baseline.empty()) config.baseline = splitforge::baseline_mode_from_name(o.baseline);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"split-forge: leakage-controlled train/test splits and linear probing"};
    app.require_subcommand(1);

    CommonOverrides split_o, probe_o, ablate_o, suggest_o;
    std::string probe_splits;
    std::vector<int> ablate_ks;
    std::vector<std::string> report_summaries;
    std::string report_out = "report";
    std::string suggest_out = "pairs.csv";

    auto* split_cmd = app.add_subcommand("split", "group concepts and assign per-attribute splits");
    add_common(split_cmd, split_o);

    auto* probe_cmd = app.add_subcommand("probe", "train per-attribute probes on a split");
    add_common(probe_cmd, probe_o);
    probe_cmd->add_option("--splits", probe_splits,
                          "splits.jsonl produced by the split command (default <out>/splits.jsonl)");

    auto* report_cmd = app.add_subcommand("report", "merge probe summaries into report tables");
    report_cmd->add_option("summaries", report_summaries, "summary.json files")->required();
    report_cmd->add_option("--out", report_out, "report output directory");

    auto* ablate_cmd = app.add_subcommand("ablate-k", "sweep the clustering cluster count");
    add_common(ablate_cmd, ablate_o);
    ablate_cmd->add_option("--k-values", ablate_ks, "k values (default 10 25 50 100 200 400)");

    splitforge::SynthSpec synth_spec;
    std::string synth_out = "synth";
    std::string synth_format = "csv";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic planted dataset");
    synth_cmd->add_option("--n", synth_spec.n_concepts, "concept count");
    synth_cmd->add_option("--supercats", synth_spec.n_supercats, "supercategory count");
    synth_cmd->add_option("--dim", synth_spec.dim, "embedding dimension");
    synth_cmd->add_option("--sigma", synth_spec.noise_sigma, "within-supercategory noise");
    synth_cmd->add_option("--taxonomic", synth_spec.n_taxonomic_attrs, "taxonomic attribute count");
    synth_cmd->add_option("--transversal", synth_spec.n_transversal_attrs,
                          "transversal attribute count");
    synth_cmd->add_option("--rate", synth_spec.transversal_pos_rate,
                          "transversal positive rate");
    synth_cmd->add_option("--seed", synth_spec.seed, "generation seed");
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--format", synth_format, "embeddings format: csv|binary");

    auto* suggest_cmd =
        app.add_subcommand("suggest-pairs", "query a chat endpoint for similar-concept pairs");
    add_common(suggest_cmd, suggest_o);
    suggest_cmd->add_option("--out-file", suggest_out, "pair list CSV to write");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*split_cmd) {
            splitforge::cmd_split(resolve(split_o));
        } else if (*probe_cmd) {
            auto config = resolve(probe_o);
            std::filesystem::path splits = probe_splits.empty()
                                               ? std::filesystem::path(config.out_dir) / "splits.jsonl"
                                               : std::filesystem::path(probe_splits);
            splitforge::cmd_probe(config, splits);
        } else if (*report_cmd) {
            std::vector<std::filesystem::path> paths(report_summaries.begin(),
                                                     report_summaries.end());
            splitforge::cmd_report(paths, report_out);
        } else if (*ablate_cmd) {
            if (ablate_ks.empty()) ablate_ks = {10, 25, 50, 100, 200, 400};
            splitforge::cmd_ablate_k(resolve(ablate_o), ablate_ks);
        } else if (*synth_cmd) {
            splitforge::EmbeddingFormat fmt;
            if (synth_format == "csv") {
                fmt = splitforge::EmbeddingFormat::csv;
            } else if (synth_format == "binary") {
                fmt = splitforge::EmbeddingFormat::binary;
            } else {
                throw splitforge::ConfigError("synth --format must be csv or binary");
            }
            splitforge::cmd_synth(synth_spec, synth_out, fmt);
        } else if (*suggest_cmd) {
            splitforge::cmd_suggest_pairs(resolve(suggest_o), suggest_out);
        }
    } catch (const splitforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
