#include "splitforge/grouping.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"

namespace splitforge {

namespace {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a > b) std::swap(a, b); // root is the smallest member
        parent[b] = a;
    }
};

// Multi-member components get `hint`; everything else becomes a Free singleton.
// Groups are ordered by smallest member, members ascending.
Grouping from_components(std::size_t n, UnionFind& uf, PlacementHint hint, Strategy strategy) {
    std::map<int, std::vector<int>> components;
    for (std::size_t i = 0; i < n; ++i) {
        components[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));
    }
    Grouping g;
    g.strategy = strategy;
    g.n_concepts = n;
    std::size_t grouped = 0;
    for (auto& [root, members] : components) {
        ConceptGroup group;
        group.members = std::move(members);
        group.hint = group.members.size() >= 2 ? hint : PlacementHint::Free;
        if (group.members.size() >= 2) grouped += group.members.size();
        g.groups.push_back(std::move(group));
    }
    g.coverage = n == 0 ? 0.0 : static_cast<double>(grouped) / static_cast<double>(n);
    return g;
}

Grouping from_partition_ids(std::size_t n, const std::vector<int>& ids, Strategy strategy) {
    std::map<int, std::vector<int>> by_id;
    for (std::size_t i = 0; i < n; ++i) by_id[ids[i]].push_back(static_cast<int>(i));
    std::vector<ConceptGroup> groups;
    groups.reserve(by_id.size());
    for (auto& [id, members] : by_id) {
        groups.push_back({std::move(members), PlacementHint::Free});
    }
    std::sort(groups.begin(), groups.end(),
              [](const ConceptGroup& a, const ConceptGroup& b) {
                  return a.members.front() < b.members.front();
              });
    Grouping g;
    g.groups = std::move(groups);
    g.strategy = strategy;
    g.coverage = 1.0; // every concept belongs to a strategy-defined group
    g.n_concepts = n;
    return g;
}

} // namespace

Grouping group_random(const ConceptSet& cs) {
    Grouping g;
    g.strategy = Strategy::random;
    g.n_concepts = cs.size();
    g.coverage = 0.0;
    g.groups.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        g.groups.push_back({{static_cast<int>(i)}, PlacementHint::Free});
    }
    return g;
}

Grouping group_llm_pairs(const ConceptSet& cs, const PairList& pairs) {
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < cs.size(); ++i) index[cs.names[i]] = static_cast<int>(i);

    UnionFind uf(cs.size());
    for (const auto& [a, b] : pairs.pairs) {
        auto ia = index.find(a);
        auto ib = index.find(b);
        if (ia == index.end()) throw ValidationError("unknown concept name in pair: '" + a + "'");
        if (ib == index.end()) throw ValidationError("unknown concept name in pair: '" + b + "'");
        if (ia->second == ib->second) {
            throw ValidationError("pair references the same concept twice: '" + a + "'");
        }
        uf.unite(ia->second, ib->second);
    }
    return from_components(cs.size(), uf, PlacementHint::ForceTrain, Strategy::llm);
}

Grouping group_similarity(const ConceptSet& cs, std::size_t top_k) {
    auto pairs = top_pairs(cs, top_k);
    UnionFind uf(cs.size());
    for (const auto& p : pairs) uf.unite(p.i, p.j);
    return from_components(cs.size(), uf, PlacementHint::PreferTrain, Strategy::similarity);
}

Grouping group_clustering(const ClusterAssignment& ca) {
    return from_partition_ids(ca.assignment.size(), ca.assignment, Strategy::clustering);
}

Grouping group_supercategory(const SupercategoryMap& sm) {
    return from_partition_ids(sm.assignment.size(), sm.assignment, Strategy::supercategory);
}

void validate_grouping(const Grouping& g) {
    std::vector<int> seen(g.n_concepts, 0);
    for (const auto& group : g.groups) {
        if (group.members.empty()) throw ValidationError("grouping contains an empty group");
        for (int m : group.members) {
            if (m < 0 || static_cast<std::size_t>(m) >= g.n_concepts) {
                throw ValidationError("group member out of range: " + std::to_string(m));
            }
            if (seen[m]++) {
                throw ValidationError("concept " + std::to_string(m) +
                                      " appears in more than one group");
            }
        }
    }
    for (std::size_t i = 0; i < g.n_concepts; ++i) {
        if (!seen[i]) {
            throw ValidationError("concept " + std::to_string(i) + " missing from grouping");
        }
    }
}

PairList load_pair_list(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open pair file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty pair file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "name_a,name_b") {
        throw ValidationError("malformed pair file header (expected 'name_a,name_b')");
    }
    PairList out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ValidationError("pair file row " + std::to_string(row) +
                                  " must have exactly 2 columns");
        }
        out.pairs.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    }
    return out;
}

void write_pair_list(const std::filesystem::path& path, const PairList& pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write pair file: " + path.string());
    out << "name_a,name_b\n";
    for (const auto& [a, b] : pairs.pairs) out << a << ',' << b << "\n";
}

std::string grouping_to_json(const Grouping& g) {
    nlohmann::ordered_json j;
    j["strategy"] = strategy_name(g.strategy);
    j["coverage"] = g.coverage;
    auto groups = nlohmann::ordered_json::array();
    for (const auto& group : g.groups) {
        nlohmann::ordered_json item;
        item["members"] = group.members;
        item["hint"] = hint_name(group.hint);
        groups.push_back(std::move(item));
    }
    j["groups"] = std::move(groups);
    return j.dump();
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::random: return "random";
        case Strategy::llm: return "llm";
        case Strategy::similarity: return "similarity";
        case Strategy::clustering: return "clustering";
        case Strategy::supercategory: return "supercategory";
    }
    return "unknown";
}

std::string hint_name(PlacementHint h) {
    switch (h) {
        case PlacementHint::Free: return "Free";
        case PlacementHint::PreferTrain: return "PreferTrain";
        case PlacementHint::ForceTrain: return "ForceTrain";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "random") return Strategy::random;
    if (name == "llm") return Strategy::llm;
    if (name == "similarity") return Strategy::similarity;
    if (name == "clustering") return Strategy::clustering;
    if (name == "supercategory") return Strategy::supercategory;
    throw ConfigError("unknown strategy '" + name +
                      "' (expected random|llm|similarity|clustering|supercategory)");
}

} // namespace splitforge
