#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "splitforge/dataset.hpp"
#include "splitforge/grouping.hpp"
#include "splitforge/llm_client.hpp"
#include "splitforge/metrics.hpp"
#include "splitforge/probe.hpp"
#include "splitforge/splitter.hpp"
#include "splitforge/synth.hpp"

namespace splitforge {

struct RunConfig {
    // dataset files
    std::string embeddings;
    EmbeddingFormat embeddings_format = EmbeddingFormat::auto_detect;
    std::string grouping_embeddings; // empty: same file drives grouping and probing
    std::string attributes;
    std::string supercategories; // empty: no supercategory map

    // grouping strategy
    Strategy strategy = Strategy::random;
    std::string pair_file;        // llm strategy
    std::size_t top_k_pairs = 600; // similarity strategy
    int k = 100;                  // clustering strategy
    KmeansOptions kmeans;

    SplitConstraints split;
    bool beta_explicit = false; // random strategy defaults beta to 0 unless set

    ProbeConfig probe;
    BaselineMode baseline = BaselineMode::prior_matched;

    std::uint64_t master_seed = 0;

    // execution-only settings, excluded from fingerprints and output echoes
    std::string out_dir = "out";
    int workers = 1;

    LlmEndpointConfig llm;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Constraints actually used for splitting: master_seed propagated, and the
// random strategy zeroes the positive-rate penalty weight unless the config
// set beta explicitly.
SplitConstraints effective_constraints(const RunConfig& config);

struct LoadedDataset {
    DatasetBundle bundle;
    ConceptSet grouping_embeddings;
    std::vector<RejectedAttribute> degenerate;
    std::string dataset_fingerprint;
    std::string config_fingerprint;
    std::string embedding_source; // embeddings file stem, for report rows
};

LoadedDataset load_dataset(const RunConfig& config);

Grouping build_grouping(const RunConfig& config, const LoadedDataset& data);

struct SplitRun {
    Grouping grouping;
    std::vector<SplitAssignment> assignments; // one per attribute, id ascending
    std::vector<int> splittable;
    std::vector<std::pair<int, std::string>> rejected;
};

SplitRun run_split(const RunConfig& config, const LoadedDataset& data);

RunSummary run_probe(const RunConfig& config, const LoadedDataset& data, const SplitRun& split);

// File-level commands backing the CLI. All outputs are deterministic for a
// fixed config: derived RNG streams per attribute, fixed write order, no
// timestamps.
void cmd_split(const RunConfig& config);
void cmd_probe(const RunConfig& config, const std::filesystem::path& splits_path);
void cmd_report(const std::vector<std::filesystem::path>& summary_paths,
                const std::filesystem::path& out_dir);
void cmd_ablate_k(const RunConfig& config, const std::vector<int>& ks);
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir,
               EmbeddingFormat format);
void cmd_suggest_pairs(const RunConfig& config, const std::filesystem::path& out_path);

// FNV-1a 64 as a 16-hex-digit string; used for dataset/config fingerprints.
std::string fnv1a64_hex(std::string_view bytes);

} // namespace splitforge
