#include "qagnn/retrieval.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "qagnn/errors.hpp"
#include "qagnn/text.hpp"

namespace qagnn {

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

// Depth-bounded BFS over outgoing (augmented) edges.
std::vector<int> bfs_distances(const KnowledgeGraph& g, EntityId start, int max_depth) {
    std::vector<int> dist(g.num_entities(), kUnreached);
    dist[static_cast<size_t>(start)] = 0;
    std::deque<EntityId> frontier{start};
    while (!frontier.empty()) {
        EntityId v = frontier.front();
        frontier.pop_front();
        int d = dist[static_cast<size_t>(v)];
        if (d >= max_depth) continue;
        for (const auto& [rel, dst] : g.neighbors(v)) {
            (void)rel;
            if (dist[static_cast<size_t>(dst)] == kUnreached) {
                dist[static_cast<size_t>(dst)] = d + 1;
                frontier.push_back(dst);
            }
        }
    }
    return dist;
}

std::vector<Edge> induced_edges(const KnowledgeGraph& g, const std::vector<EntityId>& nodes) {
    std::vector<char> keep(g.num_entities(), 0);
    for (EntityId v : nodes) keep[static_cast<size_t>(v)] = 1;
    std::vector<Edge> edges;
    for (EntityId v : nodes) {
        for (const auto& [rel, dst] : g.neighbors(v)) {
            if (keep[static_cast<size_t>(dst)]) edges.push_back({v, rel, dst});
        }
    }
    return edges;
}

}  // namespace

std::set<EntityId> TopicEntities::all() const {
    std::set<EntityId> out = v_q;
    out.insert(v_a.begin(), v_a.end());
    return out;
}

bool Subgraph::contains(EntityId v) const {
    return std::binary_search(nodes.begin(), nodes.end(), v);
}

EntityMatcher::EntityMatcher(const KnowledgeGraph& g) {
    for (size_t v = 0; v < g.num_entities(); ++v) {
        auto toks = tokenize(g.entity_name(static_cast<EntityId>(v)));
        if (toks.empty()) continue;
        max_span_ = std::max(max_span_, toks.size());
        // First entity id wins for homonym token sequences.
        by_token_seq_.emplace(join_tokens(toks), static_cast<EntityId>(v));
    }
}

std::set<EntityId> EntityMatcher::match(const std::vector<std::string>& tokens) const {
    std::set<EntityId> out;
    std::vector<char> consumed(tokens.size(), 0);
    size_t top = std::min(max_span_, tokens.size());
    for (size_t n = top; n >= 1; --n) {
        for (size_t start = 0; start + n <= tokens.size(); ++start) {
            bool free = true;
            for (size_t i = start; i < start + n; ++i) {
                if (consumed[i]) { free = false; break; }
            }
            if (!free) continue;
            std::string key;
            for (size_t i = start; i < start + n; ++i) {
                if (i > start) key.push_back(' ');
                key += tokens[i];
            }
            auto it = by_token_seq_.find(key);
            if (it == by_token_seq_.end()) continue;
            out.insert(it->second);
            for (size_t i = start; i < start + n; ++i) consumed[i] = 1;
        }
        if (n == 1) break;
    }
    return out;
}

TopicEntities link_entities(const std::vector<std::string>& question_tokens,
                            const std::vector<std::string>& answer_tokens,
                            const EntityMatcher& matcher) {
    TopicEntities t;
    t.v_q = matcher.match(question_tokens);
    t.v_a = matcher.match(answer_tokens);
    return t;
}

Subgraph retrieve_subgraph(const KnowledgeGraph& g, const TopicEntities& topics, int k) {
    if (k < 1) throw UsageError("hop count must be >= 1");
    if (topics.empty()) throw UsageError("retrieve_subgraph requires topic entities");

    Subgraph sub;
    sub.origin = &g;
    std::vector<EntityId> present;
    for (EntityId v : topics.all()) {
        if (g.valid_entity(v)) {
            present.push_back(v);
        } else {
            ++sub.skipped_topics;
        }
    }
    if (present.empty()) return sub;

    std::vector<std::vector<int>> dist;
    dist.reserve(present.size());
    for (EntityId t : present) dist.push_back(bfs_distances(g, t, k));

    std::vector<char> keep(g.num_entities(), 0);
    for (EntityId t : present) keep[static_cast<size_t>(t)] = 1;
    for (size_t v = 0; v < g.num_entities(); ++v) {
        if (keep[v]) continue;
        // Smallest two distances from distinct topics decide membership.
        int best1 = kUnreached, best2 = kUnreached;
        for (const auto& d : dist) {
            int dv = d[v];
            if (dv < best1) {
                best2 = best1;
                best1 = dv;
            } else if (dv < best2) {
                best2 = dv;
            }
        }
        if (best1 != kUnreached && best2 != kUnreached && best1 + best2 <= k) keep[v] = 1;
    }

    for (size_t v = 0; v < g.num_entities(); ++v) {
        if (keep[v]) sub.nodes.push_back(static_cast<EntityId>(v));
    }
    sub.topics = present;
    std::sort(sub.topics.begin(), sub.topics.end());
    sub.edges = induced_edges(g, sub.nodes);
    return sub;
}

Subgraph prune_subgraph(const Subgraph& sub,
                        const std::unordered_map<EntityId, double>& scores,
                        size_t max_nodes) {
    if (max_nodes < sub.topics.size()) {
        throw UsageError("max_nodes smaller than the topic entity count");
    }
    for (EntityId v : sub.nodes) {
        if (!scores.count(v)) {
            throw DataError("missing relevance score for node " +
                            (sub.origin ? sub.origin->entity_name(v) : std::to_string(v)));
        }
    }
    Subgraph out;
    out.origin = sub.origin;
    out.topics = sub.topics;
    out.skipped_topics = sub.skipped_topics;
    if (sub.nodes.size() <= max_nodes) {
        out.nodes = sub.nodes;
        out.edges = sub.edges;
        return out;
    }

    std::vector<EntityId> rest;
    for (EntityId v : sub.nodes) {
        if (!std::binary_search(sub.topics.begin(), sub.topics.end(), v)) rest.push_back(v);
    }
    std::stable_sort(rest.begin(), rest.end(), [&scores](EntityId a, EntityId b) {
        double sa = scores.at(a), sb = scores.at(b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    size_t budget = max_nodes - sub.topics.size();
    rest.resize(std::min(budget, rest.size()));

    out.nodes = sub.topics;
    out.nodes.insert(out.nodes.end(), rest.begin(), rest.end());
    std::sort(out.nodes.begin(), out.nodes.end());
    out.edges = induced_edges(*sub.origin, out.nodes);
    return out;
}

}  // namespace qagnn
