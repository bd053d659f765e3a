#include <doctest.h>

#include "helpers.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/working_graph.hpp"

using namespace qagnn;
using qagnn_test::kg_from_string;

namespace {

struct Fixture {
    KnowledgeGraph g;
    TopicEntities topics;
    Subgraph sub;
    std::unordered_map<EntityId, double> scores;

    Fixture()
        : g(augment_inverse_edges(kg_from_string("e0\tr0\te1\n"
                                                 "e1\tr0\te2\n"
                                                 "e0\tr1\te3\n"
                                                 "e3\tr0\te2\n"))) {
        topics.v_q = {*g.find_entity("e0")};
        topics.v_a = {*g.find_entity("e2")};
        sub = retrieve_subgraph(g, topics, 2);
        for (EntityId v : sub.nodes) scores[v] = 0.5;
    }

    WorkingGraph build() const {
        return build_working_graph(sub, topics, scores, "ex0", 0, {"ctx"});
    }
};

size_t count_kind(const WorkingGraph& wg, WgRelKind kind) {
    size_t n = 0;
    for (const auto& e : wg.edges) {
        if (wg.rel_kind(e.rel) == kind) ++n;
    }
    return n;
}

}  // namespace

TEST_SUITE("working_graph") {

TEST_CASE("construction on the four-node example") {
    Fixture f;
    auto wg = f.build();
    REQUIRE(wg.num_nodes() == 5);
    // Order: z, topics ascending (e0, e2), remaining ascending (e1, e3).
    CHECK(wg.node_entity[0] == -1);
    CHECK(wg.node_entity[1] == *f.g.find_entity("e0"));
    CHECK(wg.node_entity[2] == *f.g.find_entity("e2"));
    CHECK(wg.node_entity[3] == *f.g.find_entity("e1"));
    CHECK(wg.node_entity[4] == *f.g.find_entity("e3"));
    CHECK(wg.node_types[0] == NodeType::Z);
    CHECK(wg.node_types[1] == NodeType::Q);
    CHECK(wg.node_types[2] == NodeType::A);
    CHECK(wg.node_types[3] == NodeType::O);
    CHECK(wg.node_types[4] == NodeType::O);
    CHECK(wg.relevance[0] == 1.0);

    CHECK(count_kind(wg, WgRelKind::z_question) == 1);
    CHECK(count_kind(wg, WgRelKind::z_question_inv) == 1);
    CHECK(count_kind(wg, WgRelKind::z_answer) == 1);
    CHECK(count_kind(wg, WgRelKind::z_answer_inv) == 1);
    CHECK(count_kind(wg, WgRelKind::self_loop) == wg.num_nodes());
    // 4 KG edges + their inverses, remapped locally.
    CHECK(count_kind(wg, WgRelKind::kg_forward) == 4);
    CHECK(count_kind(wg, WgRelKind::kg_inverse) == 4);

    for (const auto& e : wg.edges) {
        CHECK(e.src >= 0);
        CHECK(e.dst >= 0);
        CHECK(static_cast<size_t>(e.src) < wg.num_nodes());
        CHECK(static_cast<size_t>(e.dst) < wg.num_nodes());
    }
}

TEST_CASE("z edges land on the right topics") {
    Fixture f;
    auto wg = f.build();
    int q_local = 1, a_local = 2;
    bool zq = false, za = false, zq_inv = false, za_inv = false;
    for (const auto& e : wg.edges) {
        if (e.src == 0 && e.dst == q_local && e.rel == wg.rel_z_question()) zq = true;
        if (e.src == q_local && e.dst == 0 && e.rel == wg.rel_z_question_inv()) zq_inv = true;
        if (e.src == 0 && e.dst == a_local && e.rel == wg.rel_z_answer()) za = true;
        if (e.src == a_local && e.dst == 0 && e.rel == wg.rel_z_answer_inv()) za_inv = true;
    }
    CHECK(zq);
    CHECK(za);
    CHECK(zq_inv);
    CHECK(za_inv);
}

TEST_CASE("degenerate graph is z plus its self-loop") {
    KnowledgeGraph g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    Subgraph sub;
    sub.origin = &g;
    auto wg = build_working_graph(sub, {}, {}, "empty", 0, {"ctx"});
    REQUIRE(wg.num_nodes() == 1);
    REQUIRE(wg.edges.size() == 1);
    CHECK(wg.rel_kind(wg.edges[0].rel) == WgRelKind::self_loop);
    CHECK(wg.node_types[0] == NodeType::Z);
}

TEST_CASE("overlap topics take the answer type with both z relations") {
    auto g = augment_inverse_edges(kg_from_string("e5\tr0\te1\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("e5")};
    topics.v_a = {*g.find_entity("e5")};
    auto sub = retrieve_subgraph(g, topics, 2);
    std::unordered_map<EntityId, double> scores{{*g.find_entity("e5"), 0.4}};
    auto wg = build_working_graph(sub, topics, scores, "ex", 0, {});
    int local = wg.local_index(*g.find_entity("e5"));
    REQUIRE(local == 1);
    CHECK(wg.node_types[1] == NodeType::A);
    CHECK(count_kind(wg, WgRelKind::z_question) == 1);
    CHECK(count_kind(wg, WgRelKind::z_answer) == 1);
}

TEST_CASE("missing score is an error") {
    Fixture f;
    f.scores.erase(*f.g.find_entity("e1"));
    CHECK_THROWS_AS(f.build(), DataError);
}

TEST_CASE("exactly one Z node and one-hop reachability of topics") {
    Fixture f;
    auto wg = f.build();
    size_t z_count = 0;
    for (auto t : wg.node_types) {
        if (t == NodeType::Z) ++z_count;
    }
    CHECK(z_count == 1);
    for (size_t i = 1; i < wg.num_nodes(); ++i) {
        if (wg.node_types[i] == NodeType::Q || wg.node_types[i] == NodeType::A) {
            bool reached = false;
            for (const auto& e : wg.edges) {
                if (e.src == 0 && e.dst == static_cast<int>(i)) reached = true;
            }
            CHECK(reached);
        }
    }
}

TEST_CASE("relation ids partition cleanly") {
    Fixture f;
    auto wg = f.build();
    CHECK(wg.num_relations() == wg.num_kg_relations + 5);
    for (const auto& e : wg.edges) {
        CHECK_NOTHROW(wg.rel_kind(e.rel));
    }
    CHECK_THROWS_AS(wg.rel_kind(wg.num_relations()), UsageError);
}

TEST_CASE("construction is deterministic") {
    Fixture f;
    auto a = f.build();
    auto b = f.build();
    CHECK(a.node_entity == b.node_entity);
    REQUIRE(a.edges.size() == b.edges.size());
    for (size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].src == b.edges[i].src);
        CHECK(a.edges[i].rel == b.edges[i].rel);
        CHECK(a.edges[i].dst == b.edges[i].dst);
    }
}

TEST_CASE("connect_z_to_all adds pairs for non-topic nodes only") {
    Fixture f;
    auto wg = f.build();
    size_t before = wg.edges.size();
    auto all = connect_z_to_all(wg);
    // Two non-topic entities (e1, e3) -> two new edge pairs.
    CHECK(all.edges.size() == before + 4);
    auto again = connect_z_to_all(all);
    CHECK(again.edges.size() == all.edges.size());
}

TEST_CASE("connect_z_to_all is a fixed point when every entity is a topic") {
    auto g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    TopicEntities topics;
    topics.v_q = {*g.find_entity("a")};
    topics.v_a = {*g.find_entity("b")};
    auto sub = retrieve_subgraph(g, topics, 2);
    std::unordered_map<EntityId, double> scores{{0, 0.5}, {1, 0.5}};
    auto wg = build_working_graph(sub, topics, scores, "ex", 0, {});
    auto all = connect_z_to_all(wg);
    CHECK(all.edges.size() == wg.edges.size());
}

TEST_CASE("drop_z_edges removes z connectivity but keeps its self-loop") {
    Fixture f;
    auto wg = f.build();
    auto dropped = drop_z_edges(wg);
    // Two topics with two edge pairs = 4 edges removed.
    CHECK(dropped.edges.size() == wg.edges.size() - 4);
    bool z_self = false;
    for (const auto& e : dropped.edges) {
        if (e.src == 0 || e.dst == 0) {
            CHECK(e.src == 0);
            CHECK(e.dst == 0);
            CHECK(dropped.rel_kind(e.rel) == WgRelKind::self_loop);
            z_self = true;
        }
    }
    CHECK(z_self);
}

TEST_CASE("drop_z_edges leaves the degenerate graph unchanged") {
    KnowledgeGraph g = augment_inverse_edges(kg_from_string("a\tr0\tb\n"));
    Subgraph sub;
    sub.origin = &g;
    auto wg = build_working_graph(sub, {}, {}, "empty", 0, {});
    auto dropped = drop_z_edges(wg);
    CHECK(dropped.edges.size() == wg.edges.size());
}

}  // TEST_SUITE
