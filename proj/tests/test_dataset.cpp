#include <doctest.h>

#include <fstream>

#include "splitforge/dataset.hpp"
#include "splitforge/error.hpp"
#include "splitforge/rng.hpp"
#include "test_helpers.hpp"

using namespace splitforge;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("embeddings csv happy path preserves order") {
    testutil::TempDir dir("emb");
    const auto path = dir.path() / "emb.csv";
    write_file(path, "name,d0,d1\na,1,0\nb,0,1\nc,1,1\n");
    ConceptSet cs = load_embeddings(path);
    CHECK(cs.size() == 3);
    CHECK(cs.dim() == 2);
    CHECK(cs.names[0] == "a");
    CHECK(cs.names[2] == "c");
    CHECK(cs.embeddings.at(1, 1) == 1.0);
    CHECK(cs.embeddings.at(2, 0) == 1.0);
}

TEST_CASE("embeddings csv accepts scientific notation") {
    testutil::TempDir dir("emb_sci");
    const auto path = dir.path() / "emb.csv";
    write_file(path, "name,d0,d1\na,1.5e-3,2E2\nb,-0.25,3\n");
    ConceptSet cs = load_embeddings(path);
    CHECK(cs.embeddings.at(0, 0) == doctest::Approx(0.0015));
    CHECK(cs.embeddings.at(0, 1) == doctest::Approx(200.0));
}

TEST_CASE("embeddings csv rejects inconsistent row width") {
    testutil::TempDir dir("emb_bad");
    const auto path = dir.path() / "emb.csv";
    write_file(path, "name,d0,d1\na,1,0\nb,0\nc,1,1\n");
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("inconsistent dimension at row 2"),
                         ValidationError);
}

TEST_CASE("embeddings csv rejects duplicates, non-finite and empty names") {
    testutil::TempDir dir("emb_bad2");
    const auto dup = dir.path() / "dup.csv";
    write_file(dup, "name,d0\na,1\na,2\n");
    CHECK_THROWS_AS(load_embeddings(dup), ValidationError);

    const auto nan = dir.path() / "nan.csv";
    write_file(nan, "name,d0\na,nan\nb,2\n");
    CHECK_THROWS_WITH_AS(load_embeddings(nan), doctest::Contains("non-finite"), ValidationError);

    const auto empty_name = dir.path() / "empty.csv";
    write_file(empty_name, "name,d0\n,1\nb,2\n");
    CHECK_THROWS_AS(load_embeddings(empty_name), ValidationError);

    const auto single = dir.path() / "single.csv";
    write_file(single, "name,d0\na,1\n");
    CHECK_THROWS_WITH_AS(load_embeddings(single), doctest::Contains("N >= 2"), ValidationError);

    // a comma smuggled in through the binary container's JSON name list
    ConceptSet comma_name = testutil::make_concept_set({{1, 0}, {0, 1}});
    comma_name.names[0] = "a,b";
    const auto comma_path = dir.path() / "comma.sftn";
    write_embeddings_binary(comma_path, comma_name);
    CHECK_THROWS_WITH_AS(load_embeddings(comma_path), doctest::Contains("separator"),
                         ValidationError);
}

TEST_CASE("binary tensor with a large header round trips") {
    Rng rng(11);
    ConceptSet cs;
    cs.embeddings = testutil::random_matrix(rng, 1854, 64);
    for (std::size_t i = 0; i < 1854; ++i) cs.names.push_back("c" + std::to_string(i));

    testutil::TempDir dir("sftn");
    const auto path = dir.path() / "emb.sftn";
    write_embeddings_binary(path, cs, BinaryDtype::f64);
    ConceptSet back = load_embeddings(path); // auto-detects via magic
    CHECK(back.size() == 1854);
    CHECK(back.dim() == 64);
    CHECK(back.names == cs.names);
    CHECK(back.embeddings == cs.embeddings); // bitwise for f64

    const auto path32 = dir.path() / "emb32.sftn";
    write_embeddings_binary(path32, cs, BinaryDtype::f32);
    ConceptSet back32 = load_embeddings(path32, EmbeddingFormat::binary);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(back32.embeddings.at(i, 3) ==
              doctest::Approx(cs.embeddings.at(i, 3)).epsilon(1e-6));
    }
}

TEST_CASE("binary tensor rejects corrupted containers") {
    ConceptSet cs = testutil::make_concept_set({{1, 2}, {3, 4}});
    testutil::TempDir dir("sftn_bad");
    const auto path = dir.path() / "emb.sftn";
    write_embeddings_binary(path, cs);

    auto bytes = [&] {
        std::ifstream in(path, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }();

    const auto bad_magic = dir.path() / "bad_magic.sftn";
    write_file(bad_magic, "XXXX" + bytes.substr(4));
    CHECK_THROWS_WITH_AS(load_embeddings(bad_magic, EmbeddingFormat::binary),
                         doctest::Contains("bad magic"), ValidationError);

    const auto truncated = dir.path() / "trunc.sftn";
    write_file(truncated, bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_WITH_AS(load_embeddings(truncated, EmbeddingFormat::binary),
                         doctest::Contains("payload size"), ValidationError);
}

TEST_CASE("csv round trip is exact") {
    Rng rng(13);
    ConceptSet cs;
    cs.embeddings = testutil::random_matrix(rng, 25, 7, -100.0, 100.0);
    for (std::size_t i = 0; i < 25; ++i) cs.names.push_back("n" + std::to_string(i));
    testutil::TempDir dir("rt");
    const auto path = dir.path() / "emb.csv";
    write_embeddings_csv(path, cs);
    ConceptSet back = load_embeddings(path, EmbeddingFormat::csv);
    CHECK(back.names == cs.names);
    for (std::size_t i = 0; i < 25; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(std::abs(back.embeddings.at(i, j) - cs.embeddings.at(i, j)) <= 1e-12);
        }
    }
}

TEST_CASE("attributes load, degenerate columns dropped with diagnostics") {
    testutil::TempDir dir("attr");
    const auto emb = dir.path() / "emb.csv";
    write_file(emb, "name,d0\na,1\nb,2\nc,3\nd,4\n");
    ConceptSet cs = load_embeddings(emb);

    const auto attrs = dir.path() / "attr.csv";
    write_file(attrs, "name,has_legs,all_zero,all_one\na,1,0,1\nb,1,0,1\nc,0,0,1\nd,0,0,1\n");
    AttributeLoadResult r = load_attributes(attrs, cs);
    CHECK(r.matrix.n_attributes() == 1);
    CHECK(r.matrix.names[0] == "has_legs");
    CHECK(r.matrix.column(0) == std::vector<std::uint8_t>{1, 1, 0, 0});
    REQUIRE(r.rejected.size() == 2);
    CHECK(r.rejected[0].name == "all_zero");
    CHECK(r.rejected[0].reason == "no positive concept");
    CHECK(r.rejected[1].reason == "no negative concept");
}

TEST_CASE("attributes reject non-binary cells and name mismatches") {
    testutil::TempDir dir("attr_bad");
    const auto emb = dir.path() / "emb.csv";
    write_file(emb, "name,d0\na,1\nb,2\n");
    ConceptSet cs = load_embeddings(emb);

    const auto bad_cell = dir.path() / "bad.csv";
    write_file(bad_cell, "name,x\na,1\nb,2\n");
    CHECK_THROWS_WITH_AS(load_attributes(bad_cell, cs), doctest::Contains("non-binary"),
                         ValidationError);

    const auto wrong_order = dir.path() / "order.csv";
    write_file(wrong_order, "name,x\nb,1\na,0\n");
    CHECK_THROWS_WITH_AS(load_attributes(wrong_order, cs), doctest::Contains("name-order mismatch"),
                         ValidationError);
}

TEST_CASE("supercategories load with first-appearance ids") {
    testutil::TempDir dir("sup");
    const auto emb = dir.path() / "emb.csv";
    write_file(emb, "name,d0\na,1\nb,2\nc,3\n");
    ConceptSet cs = load_embeddings(emb);

    const auto sup = dir.path() / "sup.csv";
    write_file(sup, "name,supercategory\na,container\nb,container\nc,mammal\n");
    SupercategoryMap sm = load_supercategories(sup, cs);
    CHECK(sm.n_supercats() == 2);
    CHECK(sm.names[0] == "container");
    CHECK(sm.names[1] == "mammal");
    CHECK(sm.assignment == std::vector<int>{0, 0, 1});

    const auto missing = dir.path() / "missing.csv";
    write_file(missing, "name,supercategory\na,container\nb,container\n");
    CHECK_THROWS_WITH_AS(load_supercategories(missing, cs), doctest::Contains("uncovered concept"),
                         ValidationError);

    const auto dup = dir.path() / "dup.csv";
    write_file(dup, "name,supercategory\na,container\na,mammal\nb,x\nc,y\n");
    CHECK_THROWS_WITH_AS(load_supercategories(dup, cs), doctest::Contains("duplicate row"),
                         ValidationError);

    const auto unknown = dir.path() / "unknown.csv";
    write_file(unknown, "name,supercategory\nz,container\n");
    CHECK_THROWS_WITH_AS(load_supercategories(unknown, cs), doctest::Contains("unknown concept"),
                         ValidationError);
}

TEST_CASE("large dataset shapes load: 1854x1024 tensor, 277 attributes, 53 supercategories") {
    Rng rng(14);
    ConceptSet cs;
    const std::size_t n = 1854, d = 1024;
    cs.embeddings = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        cs.names.push_back("c" + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) cs.embeddings.at(i, j) = rng.next_double();
    }
    testutil::TempDir dir("scale");
    write_embeddings_binary(dir.path() / "emb.sftn", cs, BinaryDtype::f32);
    ConceptSet back = load_embeddings(dir.path() / "emb.sftn");
    CHECK(back.size() == 1854);
    CHECK(back.dim() == 1024);

    std::string attrs = "name";
    for (int a = 0; a < 277; ++a) attrs += ",attr" + std::to_string(a);
    attrs += "\n";
    for (std::size_t i = 0; i < n; ++i) {
        attrs += cs.names[i];
        for (int a = 0; a < 277; ++a) {
            // guarantee each column has both classes
            const bool v = (i + a) % 7 == 0 || i == static_cast<std::size_t>(a);
            attrs += v ? ",1" : ",0";
        }
        attrs += "\n";
    }
    write_file(dir.path() / "attrs.csv", attrs);
    AttributeLoadResult ar = load_attributes(dir.path() / "attrs.csv", back);
    CHECK(ar.matrix.n_attributes() == 277);
    CHECK(ar.rejected.empty());

    std::string sup = "name,supercategory\n";
    for (std::size_t i = 0; i < n; ++i) {
        sup += cs.names[i] + ",super" + std::to_string(i % 53) + "\n";
    }
    write_file(dir.path() / "sup.csv", sup);
    SupercategoryMap sm = load_supercategories(dir.path() / "sup.csv", back);
    CHECK(sm.n_supercats() == 53);
}

TEST_CASE("single-cell mutations of valid files are rejected or preserve invariants") {
    // validation completeness: flip one cell at a time in known-good files;
    // each load must either throw or still satisfy every type invariant
    testutil::TempDir dir("mut");
    const std::string emb_good = "name,d0,d1\na,1,0\nb,0,1\nc,1,1\nd,0.5,0.5\n";
    const std::vector<std::string> emb_mutants = {
        "name,d0,d1\na,1,0\nb,0,1\nc,1,1\nd,0.5\n",       // short row
        "name,d0,d1\na,1,0\na,0,1\nc,1,1\nd,0.5,0.5\n",   // duplicate name
        "name,d0,d1\na,1,inf\nb,0,1\nc,1,1\nd,0.5,0.5\n", // non-finite
        "name,d0,d1\na,1,zz\nb,0,1\nc,1,1\nd,0.5,0.5\n",  // unparseable
    };
    const auto emb = dir.path() / "emb.csv";
    write_file(emb, emb_good);
    ConceptSet cs = load_embeddings(emb);
    for (std::size_t m = 0; m < emb_mutants.size(); ++m) {
        const auto path = dir.path() / ("emb_mut" + std::to_string(m) + ".csv");
        write_file(path, emb_mutants[m]);
        CHECK_THROWS_AS(load_embeddings(path), ValidationError);
    }

    const std::vector<std::string> attr_mutants = {
        "name,x\na,1\nb,0\nc,2\nd,0\n", // non-binary
        "name,x\na,1\nb,0\nc,1\n",      // missing concept row
        "name,x\nb,1\na,0\nc,1\nd,0\n", // order mismatch
    };
    for (std::size_t m = 0; m < attr_mutants.size(); ++m) {
        const auto path = dir.path() / ("attr_mut" + std::to_string(m) + ".csv");
        write_file(path, attr_mutants[m]);
        CHECK_THROWS_AS(load_attributes(path, cs), ValidationError);
    }

    // a flipped binary cell keeps the file valid; the loaded matrix must then
    // satisfy the invariants end to end
    const auto benign = dir.path() / "attr_ok.csv";
    write_file(benign, "name,x\na,0\nb,1\nc,1\nd,0\n");
    AttributeLoadResult r = load_attributes(benign, cs);
    validate_attribute_matrix(r.matrix, cs.size());
}

} // TEST_SUITE
