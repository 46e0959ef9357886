#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "splitforge/error.hpp"
#include "splitforge/grouping.hpp"
#include "test_helpers.hpp"

using namespace splitforge;

namespace {

ConceptSet named_set(std::vector<std::string> names) {
    ConceptSet cs;
    cs.names = std::move(names);
    cs.embeddings = Matrix(cs.names.size(), 2);
    for (std::size_t i = 0; i < cs.names.size(); ++i) {
        cs.embeddings.at(i, 0) = 1.0 + static_cast<double>(i);
        cs.embeddings.at(i, 1) = 0.5;
    }
    return cs;
}

// brute-force connected components over an explicit pair graph
std::set<std::set<int>> brute_components(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> comp(n);
    for (std::size_t i = 0; i < n; ++i) comp[i] = static_cast<int>(i);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [a, b] : edges) {
            const int m = std::min(comp[a], comp[b]);
            if (comp[a] != m || comp[b] != m) {
                comp[a] = comp[b] = m;
                changed = true;
            }
        }
    }
    std::map<int, std::set<int>> by_comp;
    for (std::size_t i = 0; i < n; ++i) by_comp[comp[i]].insert(static_cast<int>(i));
    std::set<std::set<int>> out;
    for (auto& [root, members] : by_comp) out.insert(members);
    return out;
}

std::set<std::set<int>> group_sets(const Grouping& g) {
    std::set<std::set<int>> out;
    for (const auto& group : g.groups) out.insert({group.members.begin(), group.members.end()});
    return out;
}

} // namespace

TEST_SUITE("grouping") {

TEST_CASE("random grouping is all Free singletons") {
    ConceptSet cs = named_set({"a", "b", "c", "d", "e"});
    Grouping g = group_random(cs);
    validate_grouping(g);
    CHECK(g.groups.size() == 5);
    CHECK(g.coverage == 0.0);
    for (const auto& group : g.groups) {
        CHECK(group.members.size() == 1);
        CHECK(group.hint == PlacementHint::Free);
    }
}

TEST_CASE("llm pairs closure with ForceTrain hints") {
    ConceptSet cs = named_set({"cup", "mug", "zebra", "chair"});
    PairList pairs;
    pairs.pairs = {{"cup", "mug"}};
    Grouping g = group_llm_pairs(cs, pairs);
    validate_grouping(g);
    CHECK(g.groups.size() == 3);
    CHECK(g.coverage == doctest::Approx(0.5));
    CHECK(g.groups[0].members == std::vector<int>{0, 1});
    CHECK(g.groups[0].hint == PlacementHint::ForceTrain);
    CHECK(g.groups[1].hint == PlacementHint::Free);

    PairList chain;
    chain.pairs = {{"cup", "mug"}, {"mug", "zebra"}};
    Grouping gc = group_llm_pairs(cs, chain);
    CHECK(gc.groups[0].members == std::vector<int>{0, 1, 2});

    PairList unknown;
    unknown.pairs = {{"cup", "teapot"}};
    CHECK_THROWS_WITH_AS(group_llm_pairs(cs, unknown), doctest::Contains("unknown concept"),
                         ValidationError);
}

TEST_CASE("similarity grouping closes over the top-K pair graph") {
    // 0 and 2 nearly parallel, 1 orthogonal-ish
    ConceptSet cs = testutil::make_concept_set({{1, 0.01}, {0.1, 1}, {1, 0.02}});
    Grouping g = group_similarity(cs, 1);
    validate_grouping(g);
    CHECK(g.groups.size() == 2);
    CHECK(g.groups[0].members == std::vector<int>{0, 2});
    CHECK(g.groups[0].hint == PlacementHint::PreferTrain);
    CHECK(g.groups[1].members == std::vector<int>{1});
    CHECK(g.coverage == doctest::Approx(2.0 / 3.0));

    Grouping full = group_similarity(cs, 3);
    CHECK(full.groups.size() == 1);
    CHECK(full.groups[0].members.size() == 3);
}

TEST_CASE("clustering grouping covers everything") {
    ClusterAssignment ca;
    ca.k = 2;
    ca.assignment = {0, 1, 0, 1};
    Grouping g = group_clustering(ca);
    validate_grouping(g);
    CHECK(g.groups.size() == 2);
    CHECK(g.coverage == 1.0);
    CHECK(g.groups[0].members == std::vector<int>{0, 2});
    CHECK(g.groups[1].members == std::vector<int>{1, 3});

    ClusterAssignment singletons;
    singletons.k = 4;
    singletons.assignment = {3, 2, 1, 0};
    Grouping gs = group_clustering(singletons);
    CHECK(gs.groups.size() == 4);
    for (const auto& group : gs.groups) CHECK(group.members.size() == 1);
    CHECK(gs.coverage == 1.0); // full coverage by construction, even as singletons
}

TEST_CASE("supercategory grouping forms one group per supercategory") {
    SupercategoryMap sm;
    sm.assignment = {0, 0, 1};
    sm.names = {"container", "mammal"};
    Grouping g = group_supercategory(sm);
    validate_grouping(g);
    CHECK(g.groups.size() == 2);
    CHECK(g.groups[0].members == std::vector<int>{0, 1});
    CHECK(g.groups[1].members == std::vector<int>{2});
    CHECK(g.coverage == 1.0);

    std::set<int> seen;
    for (const auto& group : g.groups) {
        for (int m : group.members) CHECK(seen.insert(m).second);
    }
    CHECK(seen.size() == 3);
}

TEST_CASE("pair closure equals brute-force connected components") {
    Rng rng(55);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 4 + rng.next_below(8);
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
        ConceptSet cs = named_set(names);

        const std::size_t n_edges = rng.next_below(n * 2);
        PairList pairs;
        std::vector<std::pair<int, int>> edges;
        for (std::size_t e = 0; e < n_edges; ++e) {
            int a = static_cast<int>(rng.next_below(n));
            int b = static_cast<int>(rng.next_below(n));
            if (a == b) continue;
            edges.emplace_back(a, b);
            pairs.pairs.emplace_back(names[a], names[b]);
        }
        Grouping g = group_llm_pairs(cs, pairs);
        validate_grouping(g);
        CHECK(group_sets(g) == brute_components(n, edges));
    }
}

TEST_CASE("pair list round trips through csv") {
    testutil::TempDir dir("pairs");
    PairList pairs;
    pairs.pairs = {{"cup", "mug"}, {"dog", "wolf"}};
    const auto path = dir.path() / "pairs.csv";
    write_pair_list(path, pairs);
    PairList back = load_pair_list(path);
    CHECK(back.pairs == pairs.pairs);

    const auto empty = dir.path() / "empty.csv";
    write_pair_list(empty, PairList{});
    CHECK(load_pair_list(empty).pairs.empty());
}

TEST_CASE("grouping serializes with strategy, coverage and hints") {
    ConceptSet cs = named_set({"a", "b", "c"});
    PairList pairs;
    pairs.pairs = {{"a", "b"}};
    Grouping g = group_llm_pairs(cs, pairs);
    const std::string json = grouping_to_json(g);
    CHECK(json.find("\"strategy\":\"llm\"") != std::string::npos);
    CHECK(json.find("\"hint\":\"ForceTrain\"") != std::string::npos);
    CHECK(json.find("\"members\":[0,1]") != std::string::npos);
}

} // TEST_SUITE
