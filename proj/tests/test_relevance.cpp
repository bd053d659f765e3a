#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/relevance.hpp"
#include "qagnn/text.hpp"

using namespace qagnn;
using qagnn_test::kg_from_string;

TEST_SUITE("relevance") {

TEST_CASE("overlap stand-in on the worked examples") {
    RelevanceScorer scorer(ScorerKind::overlap_standin);
    auto ctx = tokenize("where is the door");
    CHECK(scorer.score_node(ctx, "door") == doctest::Approx(0.75));
    CHECK(scorer.score_node(ctx, "window") == doctest::Approx(0.25));
    // Two-token entity with one overlapping token: (1 + 0.5) / (2 + 1).
    CHECK(scorer.score_node(ctx, "door_frame") == doctest::Approx(1.5 / 3.0));
}

TEST_CASE("constant scorer returns one") {
    RelevanceScorer scorer(ScorerKind::constant);
    CHECK(scorer.score_node(tokenize("anything"), "door") == 1.0);
    CHECK(scorer.score_node({}, "door") == 1.0);
}

TEST_CASE("score_node is pure and bounded") {
    RelevanceScorer scorer(ScorerKind::overlap_standin);
    auto ctx = tokenize("a river bank near the water");
    double s1 = scorer.score_node(ctx, "river_bank");
    double s2 = scorer.score_node(ctx, "river_bank");
    CHECK(s1 == s2);
    CHECK(s1 > 0.0);
    CHECK(s1 < 1.0);
}

TEST_CASE("overlap monotonicity") {
    RelevanceScorer scorer(ScorerKind::overlap_standin);
    // Fixed entity, growing overlap: score strictly increases.
    double none = scorer.score_node(tokenize("x y z"), "salt_water");
    double one = scorer.score_node(tokenize("salt y z"), "salt_water");
    double two = scorer.score_node(tokenize("salt water z"), "salt_water");
    CHECK(none < one);
    CHECK(one < two);
    // Adding context tokens never decreases the score.
    double more = scorer.score_node(tokenize("salt water z extra tokens"), "salt_water");
    CHECK(more >= two);
}

TEST_CASE("score_subgraph covers every node deterministically") {
    auto g = augment_inverse_edges(kg_from_string(
        "door\tr0\troom\n"
        "room\tr0\thouse\n"
        "door\tr1\thouse\n"
        "key\tr0\tdoor\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("door")};
    topics.v_a = {*g.find_entity("house")};
    auto sub = retrieve_subgraph(g, topics, 2);
    REQUIRE(sub.nodes.size() == 4);

    RelevanceScorer scorer(ScorerKind::overlap_standin);
    auto scores = scorer.score_subgraph(tokenize("the door of the house"), sub);
    CHECK(scores.size() == 4);
    for (const auto& [v, s] : scores) {
        (void)v;
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK(scores.at(*g.find_entity("door")) == doctest::Approx(0.75));
    CHECK(scores.at(*g.find_entity("key")) == doctest::Approx(0.25));
}

TEST_CASE("identical names score identically") {
    RelevanceScorer scorer(ScorerKind::overlap_standin);
    auto ctx = tokenize("some context");
    CHECK(scorer.score_node(ctx, "thing", 3) == scorer.score_node(ctx, "thing", 9));
}

TEST_CASE("external score file") {
    auto g = kg_from_string("door\tr0\troom\n");
    std::istringstream in("door\t0.93\nunknown_entity\t0.5\n");
    auto ext = ExternalScores::load(in, g);
    CHECK(ext.skipped == 1);
    RelevanceScorer scorer(ScorerKind::external_file, ext);
    CHECK(scorer.score_node({}, "door", *g.find_entity("door")) == doctest::Approx(0.93));
    CHECK_THROWS_WITH_AS(scorer.score_node({}, "room", *g.find_entity("room")),
                         doctest::Contains("room"), DataError);
}

TEST_CASE("external score range errors") {
    auto g = kg_from_string("door\tr0\troom\n");
    std::istringstream high("door\t1.50\n");
    CHECK_THROWS_AS(ExternalScores::load(high, g), DataError);
    std::istringstream low("door\t-0.1\n");
    CHECK_THROWS_AS(ExternalScores::load(low, g), DataError);
    std::istringstream junk("door\tabc\n");
    CHECK_THROWS_AS(ExternalScores::load(junk, g), DataError);
}

TEST_CASE("empty external file loads as an empty map") {
    auto g = kg_from_string("door\tr0\troom\n");
    std::istringstream in("");
    auto ext = ExternalScores::load(in, g);
    CHECK(ext.values.empty());
    CHECK(ext.skipped == 0);
}

TEST_CASE("empty entity name is rejected") {
    RelevanceScorer scorer(ScorerKind::overlap_standin);
    CHECK_THROWS_AS(scorer.score_node({}, ""), UsageError);
}

}  // TEST_SUITE
