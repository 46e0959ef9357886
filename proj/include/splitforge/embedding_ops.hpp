#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitforge/dataset.hpp"

namespace splitforge {

struct SimilarPair {
    int i; // i < j
    int j;
    double sim; // cosine similarity, clamped to [-1, 1]
};

struct ClusterAssignment {
    int k = 0;
    std::vector<int> assignment; // concept_id -> cluster_id, every cluster non-empty
    Matrix centroids;            // k x D
    double inertia = 0.0;
    std::uint64_t seed = 0;
    // Not serialized: per-iteration inertia of the winning restart, for the
    // monotone-descent property.
    std::vector<double> inertia_trace;
    int iterations = 0;
};

struct KmeansOptions {
    int max_iter = 300;
    int n_init = 10;       // k-means++ restarts, best inertia wins; sub-seeded from seed
    bool normalize = false; // L2-normalize rows before clustering (off by default)
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// The K largest-similarity unordered pairs, sorted by sim descending with
// (i, j) lexicographic ascending tie-break.
std::vector<SimilarPair> top_pairs(const ConceptSet& cs, std::size_t k);

// For each concept, its maximum cosine similarity to any other concept,
// sorted by max_sim descending (concept_id ascending on ties).
std::vector<std::pair<int, double>> max_similarity_rank(const ConceptSet& cs);

ClusterAssignment kmeans(const ConceptSet& cs, int k, std::uint64_t seed,
                         const KmeansOptions& opts = {});

std::string cluster_assignment_to_json(const ClusterAssignment& ca);

} // namespace splitforge
