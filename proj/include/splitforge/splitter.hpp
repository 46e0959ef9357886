#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitforge/dataset.hpp"
#include "splitforge/grouping.hpp"

namespace splitforge {

struct SplitConstraints {
    double target_train_ratio = 0.8;
    double ratio_window_lo = 0.5;
    double ratio_window_hi = 0.9;
    double pos_rate_tolerance = 0.1; // max |pos_rate_train - pos_rate_test|
    int min_pos_per_side = 1;
    int min_neg_per_side = 1;
    int trials = 64;
    double alpha = 1.0; // weight of |ratio - target|
    double beta = 2.0;  // weight of |pos_rate_train - pos_rate_test|
    std::uint64_t master_seed = 0;
};

enum class Side : std::uint8_t { Train = 0, Test = 1 };

struct SplitAssignment {
    int attribute_id = -1;
    std::vector<Side> side; // per concept_id
    bool feasible = false;
    double penalty = 0.0;
    double achieved_train_ratio = 0.0;
    double pos_rate_train = 0.0;
    double pos_rate_test = 0.0;
    std::uint64_t trial_seed = 0;
};

struct FilterResult {
    std::vector<int> splittable;
    std::vector<std::pair<int, std::string>> rejected; // attribute_id, dominant violation
};

struct VerifyCheck {
    std::string name;
    bool pass;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_pass = true;
};

void validate_constraints(const SplitConstraints& c);

// Randomized-greedy with `trials` seeded restarts; whole groups only.
// ForceTrain groups go to Train before anything else; every other group is
// placed on the side with the lower prospective penalty, ties toward Train.
// Returns the lowest-penalty feasible assignment, else the lowest-penalty
// infeasible one flagged feasible=false.
SplitAssignment assign_split(const Grouping& g, const std::vector<std::uint8_t>& labels,
                             const SplitConstraints& c, std::uint64_t seed);

// Per-attribute seeds derive from (c.master_seed, attribute_id).
FilterResult filter_attributes(const AttributeMatrix& am, const Grouping& g,
                               const SplitConstraints& c);

// Re-checks every invariant from scratch, independent of the construction path.
VerifyReport verify_split(const SplitAssignment& sa, const Grouping& g,
                          const std::vector<std::uint8_t>& labels, const SplitConstraints& c);

} // namespace splitforge
