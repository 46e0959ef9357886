#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splitforge/dataset.hpp"

namespace splitforge {

struct SynthSpec {
    std::size_t n_concepts = 500;
    std::size_t n_supercats = 10;
    std::size_t dim = 16;
    double noise_sigma = 0.05;
    std::size_t n_taxonomic_attrs = 10;
    std::size_t n_transversal_attrs = 20;
    double transversal_pos_rate = 0.3;
    std::uint64_t seed = 0;
};

struct PlantedAttribute {
    std::string name;
    std::string kind;       // "taxonomic" | "transversal"
    int supercategory = -1; // taxonomic only
    double dominance = 0.0; // dominance of the planted positive set
};

struct SynthResult {
    DatasetBundle bundle;
    std::vector<PlantedAttribute> attributes;
    Matrix centroids; // S x D planted supercategory centroids
};

// Concepts are supercategory centroids plus Gaussian noise; taxonomic
// attributes are positive exactly on one supercategory (dominance 1.0),
// transversal attributes are i.i.d. Bernoulli independent of supercategory.
SynthResult generate(const SynthSpec& spec);

// Writes embeddings + attributes + supercategories in the dataset formats,
// plus planted.json with the generation metadata.
void write_synth(const std::filesystem::path& dir, const SynthResult& result,
                 EmbeddingFormat format = EmbeddingFormat::csv);

} // namespace splitforge
