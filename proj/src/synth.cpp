#include "splitforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"
#include "splitforge/kernels.hpp"
#include "splitforge/metrics.hpp"
#include "splitforge/rng.hpp"

namespace splitforge {

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
    std::string num = std::to_string(i);
    std::string out(prefix);
    for (int p = static_cast<int>(num.size()); p < width; ++p) out += '0';
    return out + num;
}

Matrix sample_centroids(const SynthSpec& spec, Rng& rng) {
    const double min_sep = 10.0 * spec.noise_sigma;
    const double box = std::max(1.0, 25.0 * spec.noise_sigma);
    Matrix centroids(spec.n_supercats, spec.dim);
    std::vector<double> candidate(spec.dim);
    int budget = 10000;
    for (std::size_t s = 0; s < spec.n_supercats; ++s) {
        for (;;) {
            if (--budget < 0) {
                throw InfeasibleError(
                    "synth: cannot place " + std::to_string(spec.n_supercats) +
                    " centroids at separation " + std::to_string(min_sep) + " in dim " +
                    std::to_string(spec.dim) + " (retry budget exceeded)");
            }
            for (std::size_t j = 0; j < spec.dim; ++j) candidate[j] = rng.next_double() * box;
            bool ok = true;
            for (std::size_t prev = 0; prev < s; ++prev) {
                const double d2 =
                    kernels::l2sqr(candidate.data(), centroids.row(prev).data(), spec.dim);
                if (d2 < min_sep * min_sep) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        for (std::size_t j = 0; j < spec.dim; ++j) centroids.at(s, j) = candidate[j];
    }
    return centroids;
}

} // namespace

SynthResult generate(const SynthSpec& spec) {
    if (spec.n_concepts < 2) throw ConfigError("synth: n_concepts must be >= 2");
    if (spec.n_supercats < 2 || spec.n_supercats > spec.n_concepts) {
        throw ConfigError("synth: need 2 <= n_supercats <= n_concepts");
    }
    if (spec.dim < 1) throw ConfigError("synth: dim must be >= 1");
    if (spec.noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be >= 0");
    if (spec.n_transversal_attrs > 0 &&
        !(spec.transversal_pos_rate > 0.0 && spec.transversal_pos_rate < 1.0)) {
        throw ConfigError("synth: transversal_pos_rate must be in (0, 1)");
    }

    Rng rng(spec.seed);
    SynthResult out;
    out.centroids = sample_centroids(spec, rng);

    ConceptSet cs;
    cs.names.reserve(spec.n_concepts);
    cs.embeddings = Matrix(spec.n_concepts, spec.dim);
    SupercategoryMap sm;
    sm.assignment.resize(spec.n_concepts);
    for (std::size_t s = 0; s < spec.n_supercats; ++s) sm.names.push_back(padded("s", s, 2));

    for (std::size_t i = 0; i < spec.n_concepts; ++i) {
        const int s = static_cast<int>(i % spec.n_supercats);
        sm.assignment[i] = s;
        cs.names.push_back(padded("c", i, 4));
        for (std::size_t j = 0; j < spec.dim; ++j) {
            cs.embeddings.at(i, j) = out.centroids.at(s, j) + spec.noise_sigma * rng.next_normal();
        }
    }

    AttributeMatrix am;
    for (std::size_t t = 0; t < spec.n_taxonomic_attrs; ++t) {
        const int s = static_cast<int>(t % spec.n_supercats);
        std::vector<std::uint8_t> col(spec.n_concepts, 0);
        for (std::size_t i = 0; i < spec.n_concepts; ++i) col[i] = sm.assignment[i] == s ? 1 : 0;
        am.names.push_back("tax" + std::to_string(t) + "_" + sm.names[s]);
        am.cols.push_back(std::move(col));
        out.attributes.push_back({am.names.back(), "taxonomic", s, 0.0});
    }
    for (std::size_t t = 0; t < spec.n_transversal_attrs; ++t) {
        std::vector<std::uint8_t> col(spec.n_concepts, 0);
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            std::size_t pos = 0;
            for (std::size_t i = 0; i < spec.n_concepts; ++i) {
                col[i] = rng.next_double() < spec.transversal_pos_rate ? 1 : 0;
                pos += col[i];
            }
            ok = pos > 0 && pos < spec.n_concepts;
        }
        if (!ok) {
            // extreme rates on tiny n: force one concept per class
            col[0] = 1;
            col[1] = 0;
        }
        am.names.push_back("trans" + std::to_string(t));
        am.cols.push_back(std::move(col));
        out.attributes.push_back({am.names.back(), "transversal", -1, 0.0});
    }

    out.bundle.concept_set = std::move(cs);
    out.bundle.attributes = std::move(am);
    out.bundle.supercategories = std::move(sm);
    validate_bundle(out.bundle);

    for (std::size_t a = 0; a < out.attributes.size(); ++a) {
        std::vector<int> positives;
        const auto& col = out.bundle.attributes.cols[a];
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (col[i]) positives.push_back(static_cast<int>(i));
        }
        out.attributes[a].dominance =
            supercategory_dominance(positives, *out.bundle.supercategories);
    }
    return out;
}

void write_synth(const std::filesystem::path& dir, const SynthResult& result,
                 EmbeddingFormat format) {
    std::filesystem::create_directories(dir);
    if (format == EmbeddingFormat::binary) {
        write_embeddings_binary(dir / "embeddings.sftn", result.bundle.concept_set);
    } else {
        write_embeddings_csv(dir / "embeddings.csv", result.bundle.concept_set);
    }
    write_attributes_csv(dir / "attributes.csv", result.bundle.concept_set,
                         result.bundle.attributes);
    write_supercategories_csv(dir / "supercategories.csv", result.bundle.concept_set,
                              *result.bundle.supercategories);

    nlohmann::ordered_json j;
    auto attrs = nlohmann::ordered_json::array();
    for (const auto& a : result.attributes) {
        nlohmann::ordered_json item;
        item["name"] = a.name;
        item["kind"] = a.kind;
        if (a.kind == "taxonomic") item["supercategory"] = a.supercategory;
        item["dominance"] = a.dominance;
        attrs.push_back(std::move(item));
    }
    j["attributes"] = std::move(attrs);
    std::ofstream out(dir / "planted.json", std::ios::binary);
    if (!out) throw ValidationError("cannot write planted.json under " + dir.string());
    out << j.dump(2) << "\n";
}

} // namespace splitforge
