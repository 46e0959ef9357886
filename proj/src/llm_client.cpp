#include "splitforge/llm_client.hpp"

#include <chrono>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"

namespace splitforge {

const char* const kPairPromptVersion = "pair-prompt/v1";

std::string build_pair_prompt(std::span<const std::string> names) {
    std::string prompt =
        "You are given a list of object concept names, one per line.\n"
        "Identify pairs of highly semantically similar concepts (for example: cup,mug).\n"
        "Return only lines of the form name_a,name_b using the exact names given.\n"
        "Do not output anything else.\n\nConcepts:\n";
    for (const auto& name : names) {
        prompt += name;
        prompt += '\n';
    }
    return prompt;
}

std::string build_request_body(std::span<const std::string> names, const LlmEndpointConfig& cfg) {
    nlohmann::ordered_json body;
    body["model"] = cfg.model_name;
    body["temperature"] = cfg.temperature;
    auto messages = nlohmann::ordered_json::array();
    nlohmann::ordered_json msg;
    msg["role"] = "user";
    msg["content"] = build_pair_prompt(names);
    messages.push_back(std::move(msg));
    body["messages"] = std::move(messages);
    return body.dump();
}

namespace {

std::string post_with_retries(const std::string& body, const LlmEndpointConfig& cfg) {
    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(cfg.request_timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(cfg.request_timeout_ms));
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    std::string last_error;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg.backoff_base_ms * (1 << (attempt - 1))));
        }
        auto res = client.Post(cfg.completions_path, headers, body, "application/json");
        if (!res) {
            last_error = "network failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw Error("llm endpoint authentication failed (HTTP " +
                        std::to_string(res->status) + ")");
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        return res->body;
    }
    throw Error("llm request failed after " + std::to_string(cfg.max_attempts) +
                " attempts; last error: " + last_error);
}

std::string extract_content(const std::string& payload) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception&) {
        throw Error("unparseable llm response payload: " + payload.substr(0, 512));
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty() ||
        !j["choices"][0].contains("message") || !j["choices"][0]["message"].contains("content")) {
        throw Error("llm response missing choices[0].message.content: " + payload.substr(0, 512));
    }
    return j["choices"][0]["message"]["content"].get<std::string>();
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

SuggestOutcome suggest_pairs(const std::vector<std::string>& names, const LlmEndpointConfig& cfg) {
    if (cfg.base_url.empty()) throw ConfigError("llm base_url is empty");
    if (cfg.request_timeout_ms <= 0) throw ConfigError("llm request timeout must be > 0");
    if (cfg.max_concepts_per_request == 0) {
        throw ConfigError("llm max_concepts_per_request must be >= 1");
    }
    std::unordered_set<std::string> known(names.begin(), names.end());
    if (known.size() != names.size()) throw ValidationError("suggest_pairs: names must be unique");

    SuggestOutcome out;
    for (std::size_t start = 0; start < names.size(); start += cfg.max_concepts_per_request) {
        const std::size_t count = std::min(cfg.max_concepts_per_request, names.size() - start);
        std::span<const std::string> batch(names.data() + start, count);
        const std::string payload = post_with_retries(build_request_body(batch, cfg), cfg);
        const std::string content = extract_content(payload);

        std::size_t pos = 0;
        while (pos <= content.size()) {
            std::size_t end = content.find('\n', pos);
            if (end == std::string::npos) end = content.size();
            const std::string line = trim(content.substr(pos, end - pos));
            pos = end + 1;
            if (line.empty()) continue;
            const std::size_t comma = line.find(',');
            if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
                ++out.dropped_lines;
                continue;
            }
            const std::string a = trim(line.substr(0, comma));
            const std::string b = trim(line.substr(comma + 1));
            if (a == b || !known.count(a) || !known.count(b)) {
                ++out.dropped_lines;
                continue;
            }
            out.pairs.pairs.emplace_back(a, b);
        }
    }
    return out;
}

} // namespace splitforge
