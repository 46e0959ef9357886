#include "splitforge/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "splitforge/error.hpp"

namespace splitforge {

double f1_score(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
    if (y_true.size() != y_pred.size()) throw ValidationError("f1_score: length mismatch");
    if (y_true.empty()) throw ValidationError("f1_score: empty input");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_pred[i] && y_true[i]) ++tp;
        else if (y_pred[i] && !y_true[i]) ++fp;
        else if (!y_pred[i] && y_true[i]) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(tp) / denom;
}

double baseline_f1(double test_pos_rate, BaselineMode mode) {
    if (test_pos_rate < 0.0 || test_pos_rate > 1.0) {
        throw ValidationError("baseline_f1: pos rate must be in [0, 1]");
    }
    if (mode == BaselineMode::prior_matched) return test_pos_rate;
    if (test_pos_rate == 0.0) return 0.0;
    return test_pos_rate / (test_pos_rate + 0.5);
}

double supercategory_dominance(const std::vector<int>& positives, const SupercategoryMap& sm) {
    if (positives.empty()) throw ValidationError("supercategory_dominance: empty positive set");
    std::vector<int> counts(sm.n_supercats(), 0);
    for (int id : positives) {
        if (id < 0 || static_cast<std::size_t>(id) >= sm.assignment.size()) {
            throw ValidationError("supercategory_dominance: concept id out of range");
        }
        ++counts[sm.assignment[id]];
    }
    const int best = *std::max_element(counts.begin(), counts.end());
    return static_cast<double>(best) / static_cast<double>(positives.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
    const std::size_t k = x.size();
    if (k < 2) throw ValidationError("pearson: needs K >= 2");
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(k);
    mean_y /= static_cast<double>(k);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ValidationError("pearson: zero-variance input (correlation undefined)");
    }
    return sxy / std::sqrt(sxx * syy);
}

double cs_score(const std::vector<AttributeResult>& results) {
    std::vector<double> selectivities, dominances;
    for (const auto& r : results) {
        if (!r.dominance) continue;
        selectivities.push_back(r.f1_selectivity);
        dominances.push_back(*r.dominance);
    }
    if (selectivities.size() < 2) {
        throw ValidationError("cs_score: needs at least 2 attributes with defined dominance");
    }
    return pearson(selectivities, dominances);
}

std::string baseline_mode_name(BaselineMode mode) {
    return mode == BaselineMode::prior_matched ? "prior-matched" : "coin-flip";
}

BaselineMode baseline_mode_from_name(const std::string& name) {
    if (name == "prior-matched") return BaselineMode::prior_matched;
    if (name == "coin-flip") return BaselineMode::coin_flip;
    throw ConfigError("unknown baseline mode '" + name + "' (expected prior-matched|coin-flip)");
}

} // namespace splitforge
