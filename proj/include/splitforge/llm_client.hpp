#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "splitforge/grouping.hpp"

namespace splitforge {

struct LlmEndpointConfig {
    std::string base_url; // scheme://host[:port]
    std::string completions_path = "/v1/chat/completions";
    std::string api_key; // resolved from an environment variable by the caller
    std::string model_name;
    double temperature = 0.0;
    int request_timeout_ms = 30000;
    std::size_t max_concepts_per_request = 200;
    int max_attempts = 3;
    int backoff_base_ms = 500;
};

struct SuggestOutcome {
    PairList pairs;
    std::size_t dropped_lines = 0; // unknown names or unparseable lines
};

// Versioned prompt template; request bodies are byte-stable for fixed inputs.
extern const char* const kPairPromptVersion;
std::string build_pair_prompt(std::span<const std::string> names);
std::string build_request_body(std::span<const std::string> names, const LlmEndpointConfig& cfg);

// Chunks names into batches, asks the endpoint for similar-concept pairs, and
// merges responses in batch order. Pairs naming unknown concepts are dropped
// and counted.
SuggestOutcome suggest_pairs(const std::vector<std::string>& names, const LlmEndpointConfig& cfg);

} // namespace splitforge
