#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/kg.hpp"

using namespace qagnn;
using qagnn_test::kg_from_string;

namespace {

const char* kFiveLines =
    "a\tr0\tb\n"
    "b\tr0\tc\n"
    "a\tr1\td\n"
    "d\tr0\tc\n"
    "e\tr1\tf\n";

}  // namespace

TEST_SUITE("kg") {

TEST_CASE("load counts vocab and edges") {
    auto g = kg_from_string(kFiveLines);
    CHECK(g.num_entities() == 6);
    CHECK(g.num_relations() == 2);
    CHECK(g.num_edges() == 5);
    CHECK(!g.augmented());
    CHECK(g.entity_name(0) == "a");  // first-appearance order
    CHECK(g.entity_name(2) == "c");
    CHECK(*g.find_entity("f") == 5);
    CHECK(!g.find_entity("zz"));
}

TEST_CASE("duplicate triples are dropped") {
    auto g = kg_from_string("a\tr0\tb\nb\tr0\tc\na\tr0\tb\n");
    CHECK(g.num_edges() == 2);
}

TEST_CASE("malformed line reports the line number") {
    std::istringstream in("a\tr0\tb\noops\n");
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load(in), doctest::Contains("line 2"), DataError);

    std::istringstream four("a\tr0\tb\tc\n");
    CHECK_THROWS_AS(KnowledgeGraph::load(four), DataError);
}

TEST_CASE("empty input is an error") {
    std::istringstream in("\n\n");
    CHECK_THROWS_AS(KnowledgeGraph::load(in), DataError);
}

TEST_CASE("augmentation doubles relations and edges") {
    auto g = augment_inverse_edges(kg_from_string(kFiveLines));
    CHECK(g.num_edges() == 10);
    CHECK(g.num_relations() == 4);
    CHECK(g.num_base_relations() == 2);
    CHECK(g.augmented());
    CHECK(g.relation_is_inverse(2));
    CHECK(!g.relation_is_inverse(0));
    CHECK(g.inverse_of(0) == 2);
    CHECK(g.inverse_of(3) == 1);
}

TEST_CASE("inverse edge exists for each forward edge") {
    auto g = augment_inverse_edges(kg_from_string("x\tr0\ty\n"));
    // (e1, r0^-1, e0) must be among e1's outgoing edges.
    auto nbrs = g.neighbors(1);
    REQUIRE(nbrs.size() == 1);
    CHECK(nbrs[0].first == 1);  // r0^-1 pairs with r0
    CHECK(nbrs[0].second == 0);
    CHECK(g.relation_name(1) == "r0^-1");
}

TEST_CASE("self-edge keeps both directions") {
    auto g = augment_inverse_edges(kg_from_string("s\tr0\ts\nx\tr0\ty\n"));
    CHECK(g.num_edges() == 4);
    auto nbrs = g.neighbors(0);
    REQUIRE(nbrs.size() == 2);
    CHECK(nbrs[0].first == 0);
    CHECK(nbrs[1].first == 1);
}

TEST_CASE("double augmentation is an error") {
    auto g = augment_inverse_edges(kg_from_string(kFiveLines));
    CHECK_THROWS_AS(augment_inverse_edges(g), DataError);
}

TEST_CASE("neighbors of an isolated node are empty") {
    // f only appears as a tail pre-augmentation.
    auto g = kg_from_string(kFiveLines);
    CHECK(g.neighbors(*g.find_entity("f")).empty());
}

TEST_CASE("node with one forward and one incoming edge sees two after augmentation") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\nc\tr1\ta\n"));
    CHECK(g.neighbors(*g.find_entity("a")).size() == 2);
}

TEST_CASE("star center degree, pre and post augmentation") {
    // Seven leaves connected in both directions: undirected degree 7.
    std::ostringstream tsv;
    for (int i = 0; i < 7; ++i) {
        tsv << "hub\tr0\tleaf" << i << "\n";
        tsv << "leaf" << i << "\tr0\thub\n";
    }
    auto g0 = kg_from_string(tsv.str());
    CHECK(g0.neighbors(*g0.find_entity("hub")).size() == 7);
    auto g1 = augment_inverse_edges(g0);
    CHECK(g1.neighbors(*g1.find_entity("hub")).size() == 14);
}

TEST_CASE("neighbor totals cover the augmented edge set exactly") {
    auto g = augment_inverse_edges(kg_from_string(kFiveLines));
    size_t total = 0;
    for (size_t v = 0; v < g.num_entities(); ++v) {
        total += g.neighbors(static_cast<EntityId>(v)).size();
    }
    CHECK(total == g.num_edges());
}

TEST_CASE("serialize round-trips the deduplicated triples") {
    auto g = kg_from_string("a\tr0\tb\nb\tr0\tc\na\tr0\tb\n");
    std::ostringstream out;
    g.serialize(out);
    CHECK(out.str() == "a\tr0\tb\nb\tr0\tc\n");
    auto g2 = kg_from_string(out.str());
    std::ostringstream out2;
    g2.serialize(out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("neighbors is pure") {
    auto g = augment_inverse_edges(kg_from_string(kFiveLines));
    auto a = g.neighbors(0);
    auto b = g.neighbors(0);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
    }
}

TEST_CASE("invalid entity id is an error") {
    auto g = kg_from_string(kFiveLines);
    CHECK_THROWS_AS(g.neighbors(-1), UsageError);
    CHECK_THROWS_AS(g.neighbors(99), UsageError);
    CHECK_THROWS_AS(g.entity_name(99), UsageError);
}

TEST_CASE("entity embedding file loads and skips unknown names") {
    auto g = kg_from_string(kFiveLines);
    std::istringstream in("a\t0.5 1.0\nzz\t1 2\nb\t-0.25 0\n");
    auto emb = EntityEmbeddings::load(in, g);
    CHECK(emb.dim == 2);
    CHECK(emb.skipped == 1);
    CHECK(emb.vectors.at(*g.find_entity("a"))[1] == 1.0);

    std::istringstream bad("a\t1 2\nb\t1 2 3\n");
    CHECK_THROWS_AS(EntityEmbeddings::load(bad, g), DataError);
}

}  // TEST_SUITE
