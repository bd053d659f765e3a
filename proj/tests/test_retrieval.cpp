#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/retrieval.hpp"
#include "qagnn/text.hpp"

using namespace qagnn;
using qagnn_test::kg_from_string;

namespace {

KnowledgeGraph random_graph(std::mt19937_64& rng, size_t n, double p) {
    std::ostringstream tsv;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (uni(rng) < p) {
                tsv << "v" << i << "\tr" << (i + j) % 3 << "\tv" << j << "\n";
                any = true;
            }
        }
    }
    if (!any) tsv << "v0\tr0\tv1\n";
    return augment_inverse_edges(kg_from_string(tsv.str()));
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("unigram entity match") {
    auto g = kg_from_string("door\topens_to\troom\n");
    EntityMatcher matcher(g);
    auto topics = link_entities(tokenize("where is the door"), {}, matcher);
    CHECK(topics.v_q == std::set<EntityId>{*g.find_entity("door")});
    CHECK(topics.v_a.empty());
}

TEST_CASE("longest span wins over nested entities") {
    auto g = kg_from_string(
        "revolving_door\tat\tbank\n"
        "door\topens_to\troom\n");
    EntityMatcher matcher(g);
    auto topics = link_entities(tokenize("revolving door bank"), {}, matcher);
    CHECK(topics.v_q.count(*g.find_entity("revolving_door")) == 1);
    CHECK(topics.v_q.count(*g.find_entity("door")) == 0);
    CHECK(topics.v_q.count(*g.find_entity("bank")) == 1);
}

TEST_CASE("underscored names match multiword answers") {
    auto g = kg_from_string("salt_water\tin\tocean\n");
    EntityMatcher matcher(g);
    auto topics = link_entities({}, tokenize("salt water"), matcher);
    CHECK(topics.v_a == std::set<EntityId>{*g.find_entity("salt_water")});
}

TEST_CASE("two-hop retrieval on the worked example") {
    auto g = augment_inverse_edges(kg_from_string(
        "e0\tr0\te1\n"
        "e1\tr0\te2\n"
        "e0\tr1\te3\n"
        "e3\tr0\te2\n"
        "e4\tr1\te5\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("e0")};
    topics.v_a = {*g.find_entity("e2")};
    auto sub = retrieve_subgraph(g, topics, 2);
    std::vector<EntityId> expect = {*g.find_entity("e0"), *g.find_entity("e1"),
                                    *g.find_entity("e2"), *g.find_entity("e3")};
    std::sort(expect.begin(), expect.end());
    CHECK(sub.nodes == expect);
    for (const Edge& e : sub.edges) {
        CHECK(sub.contains(e.head));
        CHECK(sub.contains(e.tail));
    }
}

TEST_CASE("single topic yields only itself") {
    auto g = augment_inverse_edges(kg_from_string("e0\tr0\te1\ne1\tr0\te2\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("e0")};
    auto sub = retrieve_subgraph(g, topics, 2);
    CHECK(sub.nodes == std::vector<EntityId>{*g.find_entity("e0")});
}

TEST_CASE("adjacent topics at k=1 keep just the pair") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\nb\tr0\tc\nc\tr0\td\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("a")};
    topics.v_a = {*g.find_entity("b")};
    auto sub = retrieve_subgraph(g, topics, 1);
    std::vector<EntityId> expect = {*g.find_entity("a"), *g.find_entity("b")};
    std::sort(expect.begin(), expect.end());
    CHECK(sub.nodes == expect);
}

TEST_CASE("absent topics are skipped with a warning count") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    TopicEntities topics;
    topics.v_q = {0, 77};
    topics.v_a = {1};
    auto sub = retrieve_subgraph(g, topics, 2);
    CHECK(sub.skipped_topics == 1);
    CHECK(sub.nodes.size() == 2);

    TopicEntities all_absent;
    all_absent.v_q = {55, 66};
    auto empty = retrieve_subgraph(g, all_absent, 2);
    CHECK(empty.skipped_topics == 2);
    CHECK(empty.nodes.empty());
}

TEST_CASE("preconditions") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    TopicEntities topics;
    topics.v_q = {0};
    CHECK_THROWS_AS(retrieve_subgraph(g, topics, 0), UsageError);
    CHECK_THROWS_AS(retrieve_subgraph(g, TopicEntities{}, 2), UsageError);
}

TEST_CASE("oracle equivalence on random graphs") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<size_t> n_dist(4, 30);
    std::uniform_int_distribution<int> k_dist(1, 3);
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = n_dist(rng);
        auto g = random_graph(rng, n, 0.08);
        std::uniform_int_distribution<EntityId> v_dist(
            0, static_cast<EntityId>(g.num_entities() - 1));
        TopicEntities topics;
        size_t n_topics = 2 + rng() % 3;
        for (size_t i = 0; i < n_topics; ++i) {
            (i % 2 == 0 ? topics.v_q : topics.v_a).insert(v_dist(rng));
        }
        int k = k_dist(rng);
        auto sub = retrieve_subgraph(g, topics, k);
        auto expect = qagnn_test::brute_force_path_nodes(g, topics.all(), k);
        std::set<EntityId> got(sub.nodes.begin(), sub.nodes.end());
        REQUIRE(got == expect);
    }
}

TEST_CASE("monotonicity in k") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_graph(rng, 18, 0.06);
        std::uniform_int_distribution<EntityId> v_dist(
            0, static_cast<EntityId>(g.num_entities() - 1));
        TopicEntities topics;
        topics.v_q = {v_dist(rng)};
        topics.v_a = {v_dist(rng), v_dist(rng)};
        std::set<EntityId> prev;
        for (int k = 1; k <= 4; ++k) {
            auto sub = retrieve_subgraph(g, topics, k);
            std::set<EntityId> cur(sub.nodes.begin(), sub.nodes.end());
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = std::move(cur);
        }
    }
}

TEST_CASE("pruning keeps topics and applies the score order") {
    auto g = augment_inverse_edges(kg_from_string(
        "t0\tr0\tn1\n"
        "t0\tr0\tn2\n"
        "t0\tr0\tn3\n"
        "t0\tr0\tn4\n"
        "t0\tr0\tn5\n"
        "t1\tr0\tt0\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("t0")};
    topics.v_a = {*g.find_entity("t1")};
    auto sub = retrieve_subgraph(g, topics, 2);
    REQUIRE(sub.nodes.size() == 7);

    std::unordered_map<EntityId, double> scores;
    scores[*g.find_entity("t0")] = 0.0;  // topics survive regardless of score
    scores[*g.find_entity("t1")] = 0.0;
    scores[*g.find_entity("n1")] = 0.9;
    scores[*g.find_entity("n2")] = 0.7;
    scores[*g.find_entity("n3")] = 0.7;
    scores[*g.find_entity("n4")] = 0.2;
    scores[*g.find_entity("n5")] = 0.1;

    auto pruned = prune_subgraph(sub, scores, 4);
    std::set<EntityId> got(pruned.nodes.begin(), pruned.nodes.end());
    // Topics, the 0.9 node, and the 0.7 tie with the smaller id.
    std::set<EntityId> expect = {*g.find_entity("t0"), *g.find_entity("t1"),
                                 *g.find_entity("n1"), *g.find_entity("n2")};
    CHECK(got == expect);
    for (const Edge& e : pruned.edges) {
        CHECK(pruned.contains(e.head));
        CHECK(pruned.contains(e.tail));
    }
}

TEST_CASE("pruning under budget is a no-op") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\nb\tr0\tc\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("a")};
    topics.v_a = {*g.find_entity("c")};
    auto sub = retrieve_subgraph(g, topics, 2);
    auto pruned = prune_subgraph(sub, {{0, 0.5}, {1, 0.5}, {2, 0.5}}, 200);
    CHECK(pruned.nodes == sub.nodes);
    CHECK(pruned.edges.size() == sub.edges.size());
}

TEST_CASE("missing score is an error") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("a")};
    topics.v_a = {*g.find_entity("b")};
    auto sub = retrieve_subgraph(g, topics, 2);
    CHECK_THROWS_AS(prune_subgraph(sub, {{0, 0.5}}, 10), DataError);
}

TEST_CASE("pruned set is always a subset and deterministic") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_graph(rng, 16, 0.1);
        std::uniform_int_distribution<EntityId> v_dist(
            0, static_cast<EntityId>(g.num_entities() - 1));
        TopicEntities topics;
        topics.v_q = {v_dist(rng)};
        topics.v_a = {v_dist(rng)};
        auto sub = retrieve_subgraph(g, topics, 3);
        std::unordered_map<EntityId, double> scores;
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (EntityId v : sub.nodes) scores[v] = uni(rng);
        size_t budget = std::max<size_t>(sub.topics.size(), 4);
        auto p1 = prune_subgraph(sub, scores, budget);
        auto p2 = prune_subgraph(sub, scores, budget);
        CHECK(p1.nodes == p2.nodes);
        CHECK(std::includes(sub.nodes.begin(), sub.nodes.end(), p1.nodes.begin(),
                            p1.nodes.end()));
        for (EntityId t : sub.topics) CHECK(p1.contains(t));
    }
}

}  // TEST_SUITE
