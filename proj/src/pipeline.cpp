#include "splitforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"
#include "splitforge/rng.hpp"

namespace splitforge {

using ordered_json = nlohmann::ordered_json;

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    out << text;
}

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key '" + it.key() + "' in " + where);
        }
    }
}

EmbeddingFormat format_from_name(const std::string& name) {
    if (name == "auto") return EmbeddingFormat::auto_detect;
    if (name == "csv") return EmbeddingFormat::csv;
    if (name == "binary") return EmbeddingFormat::binary;
    throw ConfigError("unknown embeddings format '" + name + "' (expected auto|csv|binary)");
}

// Experiment identity: everything that affects results. out_dir and workers
// are deliberately absent.
ordered_json experiment_echo(const RunConfig& c) {
    ordered_json j;
    j["embeddings"] = c.embeddings;
    j["grouping_embeddings"] = c.grouping_embeddings;
    j["attributes"] = c.attributes;
    j["supercategories"] = c.supercategories;
    j["strategy"] = strategy_name(c.strategy);
    j["pair_file"] = c.pair_file;
    j["top_k_pairs"] = c.top_k_pairs;
    j["k"] = c.k;
    j["kmeans"] = {{"max_iter", c.kmeans.max_iter},
                   {"n_init", c.kmeans.n_init},
                   {"normalize", c.kmeans.normalize}};
    const SplitConstraints sc = effective_constraints(c);
    j["split"] = {{"target_train_ratio", sc.target_train_ratio},
                  {"ratio_window", {sc.ratio_window_lo, sc.ratio_window_hi}},
                  {"pos_rate_tolerance", sc.pos_rate_tolerance},
                  {"min_pos_per_side", sc.min_pos_per_side},
                  {"min_neg_per_side", sc.min_neg_per_side},
                  {"trials", sc.trials},
                  {"alpha", sc.alpha},
                  {"beta", sc.beta}};
    j["probe"] = {{"max_iter", c.probe.max_iter},
                  {"grad_tol", c.probe.grad_tol},
                  {"standardize", c.probe.standardize}};
    j["baseline_mode"] = baseline_mode_name(c.baseline);
    j["master_seed"] = c.master_seed;
    return j;
}

} // namespace

SplitConstraints effective_constraints(const RunConfig& config) {
    SplitConstraints c = config.split;
    c.master_seed = config.master_seed;
    if (config.strategy == Strategy::random && !config.beta_explicit) c.beta = 0.0;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config JSON " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    reject_unknown_keys(j,
                        {"embeddings", "embeddings_format", "grouping_embeddings", "attributes",
                         "supercategories", "strategy", "pair_file", "top_k_pairs", "k", "kmeans",
                         "split", "probe", "baseline_mode", "master_seed", "out_dir", "workers",
                         "llm"},
                        "config root");

    RunConfig c;
    auto get_str = [&](const char* key, std::string& dst) {
        if (j.contains(key)) dst = j[key].get<std::string>();
    };
    get_str("embeddings", c.embeddings);
    get_str("grouping_embeddings", c.grouping_embeddings);
    get_str("attributes", c.attributes);
    get_str("supercategories", c.supercategories);
    get_str("pair_file", c.pair_file);
    get_str("out_dir", c.out_dir);
    if (j.contains("embeddings_format")) {
        c.embeddings_format = format_from_name(j["embeddings_format"].get<std::string>());
    }
    if (j.contains("strategy")) c.strategy = strategy_from_name(j["strategy"].get<std::string>());
    if (j.contains("top_k_pairs")) c.top_k_pairs = j["top_k_pairs"].get<std::size_t>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("baseline_mode")) {
        c.baseline = baseline_mode_from_name(j["baseline_mode"].get<std::string>());
    }

    if (j.contains("kmeans")) {
        const auto& k = j["kmeans"];
        reject_unknown_keys(k, {"max_iter", "n_init", "normalize"}, "kmeans");
        if (k.contains("max_iter")) c.kmeans.max_iter = k["max_iter"].get<int>();
        if (k.contains("n_init")) c.kmeans.n_init = k["n_init"].get<int>();
        if (k.contains("normalize")) c.kmeans.normalize = k["normalize"].get<bool>();
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        reject_unknown_keys(s,
                            {"target_train_ratio", "ratio_window", "pos_rate_tolerance",
                             "min_pos_per_side", "min_neg_per_side", "trials", "alpha", "beta"},
                            "split");
        if (s.contains("target_train_ratio")) {
            c.split.target_train_ratio = s["target_train_ratio"].get<double>();
        }
        if (s.contains("ratio_window")) {
            auto w = s["ratio_window"].get<std::vector<double>>();
            if (w.size() != 2) throw ConfigError("split.ratio_window must be [lo, hi]");
            c.split.ratio_window_lo = w[0];
            c.split.ratio_window_hi = w[1];
        }
        if (s.contains("pos_rate_tolerance")) {
            c.split.pos_rate_tolerance = s["pos_rate_tolerance"].get<double>();
        }
        if (s.contains("min_pos_per_side")) {
            c.split.min_pos_per_side = s["min_pos_per_side"].get<int>();
        }
        if (s.contains("min_neg_per_side")) {
            c.split.min_neg_per_side = s["min_neg_per_side"].get<int>();
        }
        if (s.contains("trials")) c.split.trials = s["trials"].get<int>();
        if (s.contains("alpha")) c.split.alpha = s["alpha"].get<double>();
        if (s.contains("beta")) {
            c.split.beta = s["beta"].get<double>();
            c.beta_explicit = true;
        }
    }
    if (j.contains("probe")) {
        const auto& p = j["probe"];
        reject_unknown_keys(p, {"max_iter", "grad_tol", "standardize"}, "probe");
        if (p.contains("max_iter")) c.probe.max_iter = p["max_iter"].get<int>();
        if (p.contains("grad_tol")) c.probe.grad_tol = p["grad_tol"].get<double>();
        if (p.contains("standardize")) c.probe.standardize = p["standardize"].get<bool>();
    }
    if (j.contains("llm")) {
        const auto& l = j["llm"];
        reject_unknown_keys(l,
                            {"base_url", "completions_path", "model", "temperature", "timeout_ms",
                             "max_concepts_per_request", "max_attempts", "backoff_ms",
                             "api_key_env"},
                            "llm");
        if (l.contains("base_url")) c.llm.base_url = l["base_url"].get<std::string>();
        if (l.contains("completions_path")) {
            c.llm.completions_path = l["completions_path"].get<std::string>();
        }
        if (l.contains("model")) c.llm.model_name = l["model"].get<std::string>();
        if (l.contains("temperature")) c.llm.temperature = l["temperature"].get<double>();
        if (l.contains("timeout_ms")) c.llm.request_timeout_ms = l["timeout_ms"].get<int>();
        if (l.contains("max_concepts_per_request")) {
            c.llm.max_concepts_per_request = l["max_concepts_per_request"].get<std::size_t>();
        }
        if (l.contains("max_attempts")) c.llm.max_attempts = l["max_attempts"].get<int>();
        if (l.contains("backoff_ms")) c.llm.backoff_base_ms = l["backoff_ms"].get<int>();
    }
    const std::string key_env = j.contains("llm") && j["llm"].contains("api_key_env")
                                    ? j["llm"]["api_key_env"].get<std::string>()
                                    : "SPLITFORGE_API_KEY";
    if (const char* v = std::getenv(key_env.c_str())) c.llm.api_key = v;
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    return c;
}

LoadedDataset load_dataset(const RunConfig& config) {
    if (config.embeddings.empty()) throw ConfigError("config: embeddings path is required");
    if (config.attributes.empty()) throw ConfigError("config: attributes path is required");

    LoadedDataset out;
    out.bundle.concept_set = load_embeddings(config.embeddings, config.embeddings_format);
    auto attrs = load_attributes(config.attributes, out.bundle.concept_set);
    out.bundle.attributes = std::move(attrs.matrix);
    out.degenerate = std::move(attrs.rejected);
    if (!config.supercategories.empty()) {
        out.bundle.supercategories =
            load_supercategories(config.supercategories, out.bundle.concept_set);
    }
    validate_bundle(out.bundle);

    std::string fingerprint_bytes = read_file_bytes(config.embeddings);
    fingerprint_bytes += read_file_bytes(config.attributes);
    if (!config.supercategories.empty()) fingerprint_bytes += read_file_bytes(config.supercategories);

    if (!config.grouping_embeddings.empty() && config.grouping_embeddings != config.embeddings) {
        out.grouping_embeddings = load_embeddings(config.grouping_embeddings);
        if (out.grouping_embeddings.names != out.bundle.concept_set.names) {
            throw ValidationError(
                "grouping embeddings disagree with probe embeddings on concept names/order");
        }
        fingerprint_bytes += read_file_bytes(config.grouping_embeddings);
    } else {
        out.grouping_embeddings = out.bundle.concept_set;
    }

    out.dataset_fingerprint = fnv1a64_hex(fingerprint_bytes);
    out.config_fingerprint =
        fnv1a64_hex(experiment_echo(config).dump() + out.dataset_fingerprint);
    out.embedding_source = std::filesystem::path(config.embeddings).stem().string();
    return out;
}

Grouping build_grouping(const RunConfig& config, const LoadedDataset& data) {
    switch (config.strategy) {
        case Strategy::random:
            return group_random(data.bundle.concept_set);
        case Strategy::llm: {
            if (config.pair_file.empty()) {
                throw ConfigError("llm strategy requires pair_file");
            }
            return group_llm_pairs(data.bundle.concept_set, load_pair_list(config.pair_file));
        }
        case Strategy::similarity:
            return group_similarity(data.grouping_embeddings, config.top_k_pairs);
        case Strategy::clustering: {
            ClusterAssignment ca =
                kmeans(data.grouping_embeddings, config.k, config.master_seed, config.kmeans);
            return group_clustering(ca);
        }
        case Strategy::supercategory:
            if (!data.bundle.supercategories) {
                throw ConfigError("supercategory strategy requires a supercategories file");
            }
            return group_supercategory(*data.bundle.supercategories);
    }
    throw ConfigError("unhandled strategy");
}

SplitRun run_split(const RunConfig& config, const LoadedDataset& data) {
    SplitRun run;
    run.grouping = build_grouping(config, data);
    validate_grouping(run.grouping);
    const SplitConstraints c = effective_constraints(config);
    validate_constraints(c);

    const auto& am = data.bundle.attributes;
    run.assignments.resize(am.n_attributes());
    for (std::size_t a = 0; a < am.n_attributes(); ++a) {
        SplitAssignment sa = assign_split(run.grouping, am.column(a), c,
                                          derive_seed(c.master_seed, static_cast<std::uint64_t>(a)));
        sa.attribute_id = static_cast<int>(a);
        run.assignments[a] = std::move(sa);
    }
    FilterResult filtered = filter_attributes(am, run.grouping, c);
    run.splittable = std::move(filtered.splittable);
    run.rejected = std::move(filtered.rejected);

    for (int a : run.splittable) {
        VerifyReport report = verify_split(run.assignments[a], run.grouping, am.column(a), c);
        if (!report.all_pass) {
            throw ValidationError("internal: feasible split for attribute '" + am.names[a] +
                                  "' failed verification");
        }
    }
    return run;
}

namespace {

AttributeResult probe_one(const RunConfig& config, const LoadedDataset& data,
                          const SplitAssignment& sa, int attribute_id) {
    const auto& cs = data.bundle.concept_set;
    const auto& labels = data.bundle.attributes.column(attribute_id);

    std::vector<int> train_ids, test_ids;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (sa.side[i] == Side::Train ? train_ids : test_ids).push_back(static_cast<int>(i));
    }

    Matrix x_train(train_ids.size(), cs.dim());
    std::vector<std::uint8_t> y_train(train_ids.size());
    for (std::size_t r = 0; r < train_ids.size(); ++r) {
        auto src = cs.embeddings.row(train_ids[r]);
        std::copy(src.begin(), src.end(), x_train.row(r).begin());
        y_train[r] = labels[train_ids[r]];
    }
    Matrix x_test(test_ids.size(), cs.dim());
    std::vector<std::uint8_t> y_test(test_ids.size());
    for (std::size_t r = 0; r < test_ids.size(); ++r) {
        auto src = cs.embeddings.row(test_ids[r]);
        std::copy(src.begin(), src.end(), x_test.row(r).begin());
        y_test[r] = labels[test_ids[r]];
    }

    ProbeModel model = train_probe(x_train, y_train, config.probe);
    auto y_pred = predict(model, x_test);

    AttributeResult res;
    res.attribute_id = attribute_id;
    res.attribute_name = data.bundle.attributes.names[attribute_id];
    res.f1 = f1_score(y_test, y_pred);
    std::size_t pos_test = 0;
    for (std::uint8_t v : y_test) pos_test += v;
    res.test_pos_rate = static_cast<double>(pos_test) / static_cast<double>(y_test.size());
    res.baseline_f1 = baseline_f1(res.test_pos_rate, config.baseline);
    res.f1_selectivity = res.f1 - res.baseline_f1;
    if (data.bundle.supercategories) {
        std::vector<int> positives;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i]) positives.push_back(static_cast<int>(i));
        }
        res.dominance = supercategory_dominance(positives, *data.bundle.supercategories);
    }
    return res;
}

} // namespace

RunSummary run_probe(const RunConfig& config, const LoadedDataset& data, const SplitRun& split) {
    RunSummary summary;
    summary.strategy = strategy_name(config.strategy);
    summary.embedding_source = data.embedding_source;
    summary.dataset_fingerprint = data.dataset_fingerprint;
    summary.config_fingerprint = data.config_fingerprint;
    summary.excluded = split.rejected;

    const std::vector<int>& tasks = split.splittable;
    std::vector<AttributeResult> results(tasks.size());
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(tasks.size())));
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            results[t] = probe_one(config, data, split.assignments[tasks[t]], tasks[t]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                try {
                    for (;;) {
                        const std::size_t t = next.fetch_add(1);
                        if (t >= tasks.size()) return;
                        results[t] = probe_one(config, data, split.assignments[tasks[t]], tasks[t]);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(tasks.size()); // drain remaining work
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    summary.results = std::move(results);
    double mean = 0.0;
    for (const auto& r : summary.results) mean += r.f1_selectivity;
    summary.mean_f1_selectivity =
        summary.results.empty() ? 0.0 : mean / static_cast<double>(summary.results.size());
    try {
        summary.cs = cs_score(summary.results);
    } catch (const ValidationError&) {
        summary.cs.reset(); // undefined: too few attributes or zero variance
    }
    return summary;
}

namespace {

ordered_json split_line(const std::string& attribute_name, const SplitAssignment& sa) {
    ordered_json j;
    j["attribute"] = attribute_name;
    j["feasible"] = sa.feasible;
    j["train_ratio"] = sa.achieved_train_ratio;
    j["pos_rate_train"] = sa.pos_rate_train;
    j["pos_rate_test"] = sa.pos_rate_test;
    std::vector<int> train_ids;
    for (std::size_t i = 0; i < sa.side.size(); ++i) {
        if (sa.side[i] == Side::Train) train_ids.push_back(static_cast<int>(i));
    }
    j["train_ids"] = std::move(train_ids);
    return j;
}

ordered_json result_to_json(const AttributeResult& r) {
    ordered_json j;
    j["attribute"] = r.attribute_name;
    j["attribute_id"] = r.attribute_id;
    j["f1"] = r.f1;
    j["baseline_f1"] = r.baseline_f1;
    j["f1_selectivity"] = r.f1_selectivity;
    if (r.dominance) {
        j["dominance"] = *r.dominance;
    } else {
        j["dominance"] = nullptr;
    }
    j["test_pos_rate"] = r.test_pos_rate;
    return j;
}

ordered_json summary_to_json(const RunConfig& config, const LoadedDataset& data,
                             const RunSummary& summary) {
    ordered_json j;
    j["strategy"] = summary.strategy;
    j["embedding_source"] = summary.embedding_source;
    j["baseline_mode"] = baseline_mode_name(config.baseline);
    j["dataset_fingerprint"] = summary.dataset_fingerprint;
    j["config_fingerprint"] = summary.config_fingerprint;
    j["n_attributes"] = data.bundle.attributes.n_attributes();
    j["n_feasible"] = summary.results.size();
    j["mean_f1_selectivity"] = summary.mean_f1_selectivity;
    if (summary.cs) {
        j["cs"] = *summary.cs;
    } else {
        j["cs"] = nullptr;
    }
    auto excluded = ordered_json::array();
    for (const auto& [id, reason] : summary.excluded) {
        excluded.push_back({{"attribute", data.bundle.attributes.names[id]}, {"reason", reason}});
    }
    j["excluded"] = std::move(excluded);
    auto results = ordered_json::array();
    for (const auto& r : summary.results) results.push_back(result_to_json(r));
    j["results"] = std::move(results);
    j["config"] = experiment_echo(config);
    return j;
}

} // namespace

void cmd_split(const RunConfig& config) {
    LoadedDataset data = load_dataset(config);
    SplitRun run = run_split(config, data);
    const auto out_dir = std::filesystem::path(config.out_dir);
    std::filesystem::create_directories(out_dir);

    write_text(out_dir / "grouping.json", grouping_to_json(run.grouping) + "\n");

    std::string lines;
    for (std::size_t a = 0; a < run.assignments.size(); ++a) {
        lines += split_line(data.bundle.attributes.names[a], run.assignments[a]).dump();
        lines += '\n';
    }
    write_text(out_dir / "splits.jsonl", lines);

    ordered_json rejected = ordered_json::array();
    for (const auto& [id, reason] : run.rejected) {
        rejected.push_back({{"attribute", data.bundle.attributes.names[id]}, {"reason", reason}});
    }
    for (const auto& r : data.degenerate) {
        rejected.push_back({{"attribute", r.name}, {"reason", "degenerate at load: " + r.reason}});
    }
    write_text(out_dir / "rejected.json", rejected.dump(2) + "\n");

    // comparison artifact: one global split from the per-attribute train votes,
    // cut at the target ratio (a plain >=50% majority sends everything to Train
    // when each attribute trains on ~80% of concepts)
    if (!run.splittable.empty()) {
        const std::size_t n = data.bundle.concept_set.size();
        std::vector<int> train_votes(n, 0);
        for (int a : run.splittable) {
            for (std::size_t i = 0; i < n; ++i) {
                train_votes[i] += run.assignments[a].side[i] == Side::Train;
            }
        }
        std::vector<int> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
            if (train_votes[a] != train_votes[b]) return train_votes[a] > train_votes[b];
            return a < b;
        });
        const auto cut = static_cast<std::size_t>(
            std::llround(effective_constraints(config).target_train_ratio * static_cast<double>(n)));
        std::vector<int> global_train(ranked.begin(), ranked.begin() + std::min(cut, n));
        std::sort(global_train.begin(), global_train.end());
        ordered_json global;
        global["method"] = "train-vote ranking over feasible per-attribute splits, cut at target ratio";
        global["train_ratio"] = static_cast<double>(global_train.size()) / static_cast<double>(n);
        global["train_ids"] = std::move(global_train);
        write_text(out_dir / "global_split.json", global.dump(2) + "\n");
    }

    ordered_json meta;
    meta["dataset_fingerprint"] = data.dataset_fingerprint;
    meta["config_fingerprint"] = data.config_fingerprint;
    meta["strategy"] = strategy_name(config.strategy);
    write_text(out_dir / "split_meta.json", meta.dump(2) + "\n");

    std::map<std::size_t, int> histogram;
    for (const auto& g : run.grouping.groups) ++histogram[g.members.size()];
    ordered_json diag;
    diag["strategy"] = strategy_name(config.strategy);
    diag["coverage"] = run.grouping.coverage;
    diag["n_groups"] = run.grouping.groups.size();
    ordered_json hist;
    for (const auto& [size, count] : histogram) hist[std::to_string(size)] = count;
    diag["group_size_histogram"] = std::move(hist);
    diag["n_splittable"] = run.splittable.size();
    diag["n_rejected"] = run.rejected.size();
    diag["n_degenerate_at_load"] = data.degenerate.size();
    if (config.strategy == Strategy::similarity) {
        auto ranking = max_similarity_rank(data.grouping_embeddings);
        auto arr = ordered_json::array();
        for (const auto& [id, sim] : ranking) arr.push_back({id, sim});
        diag["max_similarity_rank"] = std::move(arr);
    }
    write_text(out_dir / "split_diagnostics.json", diag.dump(2) + "\n");

    std::cerr << "strategy=" << strategy_name(config.strategy)
              << " groups=" << run.grouping.groups.size() << " coverage=" << run.grouping.coverage
              << " splittable=" << run.splittable.size() << " rejected=" << run.rejected.size()
              << "\n";

    if (run.splittable.empty()) {
        throw InfeasibleError("no attribute admits a feasible split under the given constraints");
    }
}

void cmd_probe(const RunConfig& config, const std::filesystem::path& splits_path) {
    LoadedDataset data = load_dataset(config);

    const auto meta_path = splits_path.parent_path() / "split_meta.json";
    if (!std::filesystem::exists(meta_path)) {
        throw ConfigError("missing split_meta.json next to " + splits_path.string() +
                          " (run the split command first)");
    }
    nlohmann::json meta = nlohmann::json::parse(read_file_bytes(meta_path));
    if (meta.value("dataset_fingerprint", "") != data.dataset_fingerprint) {
        throw ValidationError("split file was produced from a different dataset (fingerprint " +
                              meta.value("dataset_fingerprint", "?") + " vs " +
                              data.dataset_fingerprint + ")");
    }

    // rebuild a SplitRun from the persisted assignment
    SplitRun run;
    run.grouping.n_concepts = data.bundle.concept_set.size();
    run.assignments.resize(data.bundle.attributes.n_attributes());
    std::map<std::string, int> attr_index;
    for (std::size_t a = 0; a < data.bundle.attributes.n_attributes(); ++a) {
        attr_index[data.bundle.attributes.names[a]] = static_cast<int>(a);
    }
    std::istringstream in(read_file_bytes(splits_path));
    std::string line;
    std::size_t seen = 0;
    std::vector<bool> covered(run.assignments.size(), false);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string name = j.at("attribute").get<std::string>();
        auto it = attr_index.find(name);
        if (it == attr_index.end()) {
            throw ValidationError("split file references unknown attribute '" + name + "'");
        }
        if (covered[it->second]) {
            throw ValidationError("split file has duplicate records for attribute '" + name + "'");
        }
        covered[it->second] = true;
        SplitAssignment sa;
        sa.attribute_id = it->second;
        sa.feasible = j.at("feasible").get<bool>();
        sa.achieved_train_ratio = j.at("train_ratio").get<double>();
        sa.pos_rate_train = j.at("pos_rate_train").get<double>();
        sa.pos_rate_test = j.at("pos_rate_test").get<double>();
        sa.side.assign(data.bundle.concept_set.size(), Side::Test);
        for (int id : j.at("train_ids").get<std::vector<int>>()) {
            if (id < 0 || static_cast<std::size_t>(id) >= sa.side.size()) {
                throw ValidationError("split file train_id out of range for '" + name + "'");
            }
            sa.side[id] = Side::Train;
        }
        run.assignments[it->second] = std::move(sa);
        ++seen;
    }
    if (seen != run.assignments.size()) {
        throw ValidationError("split file covers " + std::to_string(seen) + " of " +
                              std::to_string(run.assignments.size()) + " attributes");
    }
    for (std::size_t a = 0; a < run.assignments.size(); ++a) {
        if (run.assignments[a].feasible) {
            run.splittable.push_back(static_cast<int>(a));
        } else {
            run.rejected.emplace_back(static_cast<int>(a), "infeasible split");
        }
    }

    RunSummary summary = run_probe(config, data, run);
    const auto out_dir = std::filesystem::path(config.out_dir);
    std::filesystem::create_directories(out_dir);

    std::string lines;
    for (const auto& r : summary.results) {
        lines += result_to_json(r).dump();
        lines += '\n';
    }
    write_text(out_dir / "results.jsonl", lines);
    write_text(out_dir / "summary.json", summary_to_json(config, data, summary).dump(2) + "\n");

    std::cerr << "strategy=" << summary.strategy << " feasible=" << summary.results.size()
              << " mean_f1_selectivity=" << summary.mean_f1_selectivity;
    if (summary.cs) std::cerr << " cs=" << *summary.cs;
    std::cerr << "\n";
}

namespace {

struct LoadedSummary {
    std::string strategy;
    std::string source;
    std::string dataset_fingerprint;
    double mean_f1_selectivity = 0.0;
    std::optional<double> cs;
    std::vector<std::pair<std::string, std::pair<double, double>>> scatter; // name -> (dom, sel)
};

const std::vector<std::string> kStrategyOrder = {"random", "llm", "similarity", "clustering",
                                                 "supercategory"};

std::string format_fixed(double v, int decimals) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(decimals);
    ss << v;
    return ss.str();
}

} // namespace

void cmd_report(const std::vector<std::filesystem::path>& summary_paths,
                const std::filesystem::path& out_dir) {
    if (summary_paths.empty()) throw ConfigError("report needs at least one summary.json");

    std::vector<LoadedSummary> loaded;
    for (const auto& path : summary_paths) {
        nlohmann::json j = nlohmann::json::parse(read_file_bytes(path));
        LoadedSummary s;
        s.strategy = j.at("strategy").get<std::string>();
        s.source = j.at("embedding_source").get<std::string>();
        s.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        s.mean_f1_selectivity = j.at("mean_f1_selectivity").get<double>();
        if (!j.at("cs").is_null()) s.cs = j.at("cs").get<double>();
        for (const auto& r : j.at("results")) {
            if (r.at("dominance").is_null()) continue;
            s.scatter.push_back({r.at("attribute").get<std::string>(),
                                 {r.at("dominance").get<double>(),
                                  r.at("f1_selectivity").get<double>()}});
        }
        loaded.push_back(std::move(s));
    }

    for (const auto& s : loaded) {
        if (s.dataset_fingerprint != loaded.front().dataset_fingerprint) {
            throw ValidationError("inconsistent dataset fingerprints across results files (" +
                                  s.dataset_fingerprint + " vs " +
                                  loaded.front().dataset_fingerprint + ")");
        }
    }

    std::vector<std::string> strategies;
    for (const auto& name : kStrategyOrder) {
        if (std::any_of(loaded.begin(), loaded.end(),
                        [&](const LoadedSummary& s) { return s.strategy == name; })) {
            strategies.push_back(name);
        }
    }
    std::vector<std::string> sources;
    for (const auto& s : loaded) {
        if (std::find(sources.begin(), sources.end(), s.source) == sources.end()) {
            sources.push_back(s.source);
        }
    }

    auto find_cell = [&](const std::string& source, const std::string& strategy)
        -> const LoadedSummary* {
        for (const auto& s : loaded) {
            if (s.source == source && s.strategy == strategy) return &s;
        }
        return nullptr;
    };

    std::filesystem::create_directories(out_dir);

    // mean F1 selectivity x100, one row per embedding source
    std::string selectivity_table = "features";
    for (const auto& st : strategies) selectivity_table += "," + st;
    selectivity_table += "\n";
    for (const auto& src : sources) {
        selectivity_table += src;
        for (const auto& st : strategies) {
            const LoadedSummary* cell = find_cell(src, st);
            selectivity_table += ",";
            if (cell) selectivity_table += format_fixed(cell->mean_f1_selectivity * 100.0, 1);
        }
        selectivity_table += "\n";
    }
    write_text(out_dir / "selectivity.csv", selectivity_table);

    // per-source CS
    std::string cs_table = "features";
    for (const auto& st : strategies) cs_table += "," + st;
    cs_table += "\n";
    for (const auto& src : sources) {
        cs_table += src;
        for (const auto& st : strategies) {
            const LoadedSummary* cell = find_cell(src, st);
            cs_table += ",";
            if (cell && cell->cs) cs_table += format_fixed(*cell->cs, 4);
        }
        cs_table += "\n";
    }
    write_text(out_dir / "cs_table.csv", cs_table);

    // dominance/selectivity scatter data, one file per strategy
    for (const auto& st : strategies) {
        std::string scatter = "source,attribute,dominance,f1_selectivity\n";
        for (const auto& src : sources) {
            const LoadedSummary* cell = find_cell(src, st);
            if (!cell) continue;
            for (const auto& [name, point] : cell->scatter) {
                std::ostringstream row;
                row << src << ',' << name << ',' << point.first << ',' << point.second << "\n";
                scatter += row.str();
            }
        }
        write_text(out_dir / ("scatter_" + st + ".csv"), scatter);
    }

    std::cout << selectivity_table;
    std::cout << "cs:\n" << cs_table;
    if (strategies.size() == kStrategyOrder.size()) {
        for (const auto& src : sources) {
            bool monotone = true;
            for (std::size_t i = 0; i + 1 < kStrategyOrder.size(); ++i) {
                const LoadedSummary* a = find_cell(src, kStrategyOrder[i]);
                const LoadedSummary* b = find_cell(src, kStrategyOrder[i + 1]);
                if (!a || !b || a->mean_f1_selectivity < b->mean_f1_selectivity) {
                    monotone = false;
                    break;
                }
            }
            std::cout << "selectivity_monotone_decreasing[" << src << "]="
                      << (monotone ? "yes" : "no") << "\n";
        }
    }
}

void cmd_ablate_k(const RunConfig& config, const std::vector<int>& ks) {
    if (ks.empty()) throw ConfigError("ablate-k needs at least one k value");
    RunConfig base = config;
    base.strategy = Strategy::clustering;

    LoadedDataset data = load_dataset(base);
    for (int k : ks) {
        if (k < 1 || static_cast<std::size_t>(k) > data.bundle.concept_set.size()) {
            throw ConfigError("ablate-k: k=" + std::to_string(k) + " outside [1, N]");
        }
    }

    std::string csv = "k,n_feasible,mean_f1_selectivity,cs\n";
    for (int k : ks) {
        RunConfig c = base;
        c.k = k;
        // config fingerprint depends on k
        LoadedDataset d = data;
        d.config_fingerprint = fnv1a64_hex(experiment_echo(c).dump() + d.dataset_fingerprint);
        SplitRun run = run_split(c, d);
        RunSummary summary = run_probe(c, d, run);
        csv += std::to_string(k) + "," + std::to_string(summary.results.size()) + "," +
               format_fixed(summary.mean_f1_selectivity, 6) + ",";
        if (summary.cs) csv += format_fixed(*summary.cs, 6);
        csv += "\n";
    }
    const auto out_dir = std::filesystem::path(config.out_dir);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "ablation.csv", csv);
    std::cout << csv;
}

void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir,
               EmbeddingFormat format) {
    SynthResult result = generate(spec);
    write_synth(out_dir, result, format);
    std::cerr << "synth n=" << spec.n_concepts << " supercats=" << spec.n_supercats
              << " attrs=" << result.bundle.attributes.n_attributes() << " -> " << out_dir.string()
              << "\n";
}

void cmd_suggest_pairs(const RunConfig& config, const std::filesystem::path& out_path) {
    if (config.embeddings.empty()) {
        throw ConfigError("suggest-pairs needs the embeddings file for concept names");
    }
    ConceptSet cs = load_embeddings(config.embeddings, config.embeddings_format);
    SuggestOutcome outcome = suggest_pairs(cs.names, config.llm);
    write_pair_list(out_path, outcome.pairs);
    std::cerr << "pairs=" << outcome.pairs.pairs.size() << " dropped=" << outcome.dropped_lines
              << " -> " << out_path.string() << "\n";
}

} // namespace splitforge
