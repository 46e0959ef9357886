#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "splitforge/dataset.hpp"
#include "splitforge/embedding_ops.hpp"

namespace splitforge {

enum class PlacementHint { Free, PreferTrain, ForceTrain };
enum class Strategy { random, llm, similarity, clustering, supercategory };

struct ConceptGroup {
    std::vector<int> members; // ascending concept_ids
    PlacementHint hint = PlacementHint::Free;
};

// Partition of all concepts; ungrouped concepts are materialized as Free
// singletons so that every concept gets placed at split time. Groups are
// canonically ordered by smallest member.
struct Grouping {
    std::vector<ConceptGroup> groups;
    Strategy strategy = Strategy::random;
    double coverage = 0.0; // fraction of concepts grouped by the strategy itself
    std::size_t n_concepts = 0;
};

struct PairList {
    std::vector<std::pair<std::string, std::string>> pairs;
};

Grouping group_random(const ConceptSet& cs);
Grouping group_llm_pairs(const ConceptSet& cs, const PairList& pairs);
Grouping group_similarity(const ConceptSet& cs, std::size_t top_k = 600);
Grouping group_clustering(const ClusterAssignment& ca);
Grouping group_supercategory(const SupercategoryMap& sm);

// Throws ValidationError unless groups form a partition of 0..n_concepts-1
// with no empty group.
void validate_grouping(const Grouping& g);

PairList load_pair_list(const std::filesystem::path& path);
void write_pair_list(const std::filesystem::path& path, const PairList& pairs);

std::string grouping_to_json(const Grouping& g);
std::string strategy_name(Strategy s);
std::string hint_name(PlacementHint h);
Strategy strategy_from_name(const std::string& name);

} // namespace splitforge
