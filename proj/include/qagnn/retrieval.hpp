#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "qagnn/kg.hpp"

namespace qagnn {

struct TopicEntities {
    std::set<EntityId> v_q;  // question entities
    std::set<EntityId> v_a;  // answer-choice entities

    std::set<EntityId> all() const;
    bool empty() const { return v_q.empty() && v_a.empty(); }
};

struct Subgraph {
    std::vector<EntityId> nodes;   // ascending
    std::vector<Edge> edges;       // induced, deterministic order
    std::vector<EntityId> topics;  // topic entities present in nodes, ascending
    size_t skipped_topics = 0;     // topic ids absent from the KG
    const KnowledgeGraph* origin = nullptr;

    bool contains(EntityId v) const;
};

// Greedy longest-span matcher from token n-grams to entity names
// (underscores in names treated as spaces). Build once per KG.
class EntityMatcher {
public:
    explicit EntityMatcher(const KnowledgeGraph& g);

    // Each token is consumed by at most one match; longer spans win,
    // ties broken left to right.
    std::set<EntityId> match(const std::vector<std::string>& tokens) const;

private:
    size_t max_span_ = 0;
    std::unordered_map<std::string, EntityId> by_token_seq_;
};

TopicEntities link_entities(const std::vector<std::string>& question_tokens,
                            const std::vector<std::string>& answer_tokens,
                            const EntityMatcher& matcher);

// All nodes on <=k-hop paths between distinct topic entities, via per-topic
// BFS distance maps: v is kept iff it is a topic or
// dist(a, v) + dist(v, b) <= k for some topic pair a != b.
Subgraph retrieve_subgraph(const KnowledgeGraph& g, const TopicEntities& topics, int k);

// Keeps every topic entity, then the highest-scoring non-topic nodes up to
// max_nodes (ties broken by ascending id); induced edges recomputed.
Subgraph prune_subgraph(const Subgraph& sub,
                        const std::unordered_map<EntityId, double>& scores,
                        size_t max_nodes);

}  // namespace qagnn
