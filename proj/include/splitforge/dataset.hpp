#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "splitforge/matrix.hpp"

namespace splitforge {

// Concept identity is the name string; the embeddings file defines the
// canonical concept order and all other files must agree with it.

struct ConceptSet {
    std::vector<std::string> names; // concept_id = index into names
    Matrix embeddings;              // N x D

    std::size_t size() const { return names.size(); }
    std::size_t dim() const { return embeddings.cols(); }
};

struct AttributeMatrix {
    std::vector<std::string> names;              // A attribute names
    std::vector<std::vector<std::uint8_t>> cols; // A columns of length N, entries 0/1

    std::size_t n_attributes() const { return names.size(); }
    std::size_t n_concepts() const { return cols.empty() ? 0 : cols[0].size(); }
    const std::vector<std::uint8_t>& column(std::size_t a) const { return cols[a]; }
};

struct SupercategoryMap {
    std::vector<int> assignment;    // concept_id -> supercategory_id, total
    std::vector<std::string> names; // supercategory_id -> name, first-appearance order

    std::size_t n_supercats() const { return names.size(); }
};

struct DatasetBundle {
    ConceptSet concept_set;
    AttributeMatrix attributes;
    std::optional<SupercategoryMap> supercategories;
};

struct RejectedAttribute {
    std::string name;
    std::size_t column; // 0-based position in the input file
    std::string reason;
};

struct AttributeLoadResult {
    AttributeMatrix matrix;
    std::vector<RejectedAttribute> rejected; // degenerate columns dropped at load
};

enum class EmbeddingFormat { auto_detect, csv, binary };
enum class BinaryDtype { f32, f64 };

// Throw ValidationError on any invariant breach; loaders call these before returning.
void validate_concept_set(const ConceptSet& cs);
void validate_attribute_matrix(const AttributeMatrix& am, std::size_t n_concepts);
void validate_supercategory_map(const SupercategoryMap& sm, std::size_t n_concepts);
void validate_bundle(const DatasetBundle& bundle);

ConceptSet load_embeddings(const std::filesystem::path& path,
                           EmbeddingFormat format = EmbeddingFormat::auto_detect);
AttributeLoadResult load_attributes(const std::filesystem::path& path, const ConceptSet& cs);
SupercategoryMap load_supercategories(const std::filesystem::path& path, const ConceptSet& cs);

void write_embeddings_csv(const std::filesystem::path& path, const ConceptSet& cs);
void write_embeddings_binary(const std::filesystem::path& path, const ConceptSet& cs,
                             BinaryDtype dtype = BinaryDtype::f64);
void write_attributes_csv(const std::filesystem::path& path, const ConceptSet& cs,
                          const AttributeMatrix& am);
void write_supercategories_csv(const std::filesystem::path& path, const ConceptSet& cs,
                               const SupercategoryMap& sm);

} // namespace splitforge
