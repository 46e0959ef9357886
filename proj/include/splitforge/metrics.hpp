#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitforge/dataset.hpp"

namespace splitforge {

enum class BaselineMode { prior_matched, coin_flip };

struct AttributeResult {
    int attribute_id = -1;
    std::string attribute_name;
    double f1 = 0.0;
    double baseline_f1 = 0.0;
    double f1_selectivity = 0.0; // f1 - baseline_f1
    std::optional<double> dominance;
    double test_pos_rate = 0.0;
};

struct RunSummary {
    double mean_f1_selectivity = 0.0; // raw scale; reports show x100
    std::optional<double> cs;
    std::vector<AttributeResult> results; // feasible attributes, attribute_id ascending
    std::vector<std::pair<int, std::string>> excluded; // infeasible attribute_id + reason
    std::string dataset_fingerprint;
    std::string config_fingerprint;
    std::string strategy;
    std::string embedding_source;
};

double f1_score(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

// Expected F1 of a random predictor against positives at rate p:
// prior-matched emits positives at rate p (F1 = p); coin-flip at rate 0.5
// (F1 = p / (p + 0.5)).
double baseline_f1(double test_pos_rate, BaselineMode mode = BaselineMode::prior_matched);

double supercategory_dominance(const std::vector<int>& positives, const SupercategoryMap& sm);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation between f1_selectivity and dominance over results with
// defined dominance; callers pass feasible attributes only.
double cs_score(const std::vector<AttributeResult>& results);

std::string baseline_mode_name(BaselineMode mode);
BaselineMode baseline_mode_from_name(const std::string& name);

} // namespace splitforge
