#include "qagnn/working_graph.hpp"

#include <algorithm>

#include "qagnn/errors.hpp"

namespace qagnn {

char node_type_letter(NodeType t) {
    switch (t) {
        case NodeType::Z: return 'Z';
        case NodeType::Q: return 'Q';
        case NodeType::A: return 'A';
        case NodeType::O: return 'O';
    }
    return '?';
}

WgRelKind WorkingGraph::rel_kind(RelationId r) const {
    if (r < 0 || r >= num_relations()) throw UsageError("relation id out of range");
    if (r < num_kg_base_relations) return WgRelKind::kg_forward;
    if (r < num_kg_relations) return WgRelKind::kg_inverse;
    if (r == rel_z_question()) return WgRelKind::z_question;
    if (r == rel_z_question_inv()) return WgRelKind::z_question_inv;
    if (r == rel_z_answer()) return WgRelKind::z_answer;
    if (r == rel_z_answer_inv()) return WgRelKind::z_answer_inv;
    return WgRelKind::self_loop;
}

int WorkingGraph::local_index(EntityId v) const {
    for (size_t i = 1; i < node_entity.size(); ++i) {
        if (node_entity[i] == v) return static_cast<int>(i);
    }
    return -1;
}

WorkingGraph build_working_graph(const Subgraph& sub, const TopicEntities& topics,
                                 const std::unordered_map<EntityId, double>& scores,
                                 const std::string& example_id, int choice_index,
                                 const std::vector<std::string>& context_tokens) {
    WorkingGraph wg;
    wg.example_id = example_id;
    wg.choice_index = choice_index;
    wg.context_tokens = context_tokens;
    if (sub.origin) {
        if (!sub.origin->augmented()) {
            throw UsageError("working graph requires an inverse-augmented KG");
        }
        wg.num_kg_relations = static_cast<int>(sub.origin->num_relations());
        wg.num_kg_base_relations = static_cast<int>(sub.origin->num_base_relations());
    }

    for (EntityId t : topics.all()) {
        if (std::find(sub.topics.begin(), sub.topics.end(), t) == sub.topics.end() &&
            sub.origin && sub.origin->valid_entity(t)) {
            throw DataError("topic entity missing from subgraph: " + sub.origin->entity_name(t));
        }
    }

    // Node order: z, topics ascending, remaining entities ascending.
    wg.node_entity.push_back(-1);
    wg.node_types.push_back(NodeType::Z);
    wg.relevance.push_back(1.0);
    std::vector<EntityId> ordered = sub.topics;
    for (EntityId v : sub.nodes) {
        if (!std::binary_search(sub.topics.begin(), sub.topics.end(), v)) ordered.push_back(v);
    }
    std::unordered_map<EntityId, int> local;
    for (EntityId v : ordered) {
        int idx = static_cast<int>(wg.node_entity.size());
        local[v] = idx;
        wg.node_entity.push_back(v);
        bool in_q = topics.v_q.count(v) > 0;
        bool in_a = topics.v_a.count(v) > 0;
        // Overlap nodes carry the answer type; both z relations still attach.
        NodeType t = in_a ? NodeType::A : (in_q ? NodeType::Q : NodeType::O);
        wg.node_types.push_back(t);
        auto it = scores.find(v);
        if (it == scores.end()) {
            throw DataError("missing relevance score for entity " +
                            (sub.origin ? sub.origin->entity_name(v) : std::to_string(v)));
        }
        wg.relevance.push_back(it->second);
    }

    for (const Edge& e : sub.edges) {
        wg.edges.push_back({local.at(e.head), e.relation, local.at(e.tail)});
    }
    for (EntityId v : sub.topics) {
        int idx = local.at(v);
        if (topics.v_q.count(v)) {
            wg.edges.push_back({0, wg.rel_z_question(), idx});
            wg.edges.push_back({idx, wg.rel_z_question_inv(), 0});
        }
        if (topics.v_a.count(v)) {
            wg.edges.push_back({0, wg.rel_z_answer(), idx});
            wg.edges.push_back({idx, wg.rel_z_answer_inv(), 0});
        }
    }
    for (size_t i = 0; i < wg.num_nodes(); ++i) {
        wg.edges.push_back({static_cast<int>(i), wg.rel_self_loop(), static_cast<int>(i)});
    }
    return wg;
}

WorkingGraph connect_z_to_all(const WorkingGraph& wg) {
    WorkingGraph out = wg;
    std::vector<char> has_z_edge(wg.num_nodes(), 0);
    for (const auto& e : wg.edges) {
        if (e.src == 0 && e.dst != 0) has_z_edge[static_cast<size_t>(e.dst)] = 1;
    }
    // Keep self-loops at the tail of the edge list.
    auto insert_at = std::remove_if(out.edges.begin(), out.edges.end(),
                                    [&](const WorkingGraph::LocalEdge& e) {
                                        return out.rel_kind(e.rel) == WgRelKind::self_loop;
                                    });
    out.edges.erase(insert_at, out.edges.end());
    for (size_t v = 1; v < wg.num_nodes(); ++v) {
        if (has_z_edge[v]) continue;
        out.edges.push_back({0, out.rel_z_question(), static_cast<int>(v)});
        out.edges.push_back({static_cast<int>(v), out.rel_z_question_inv(), 0});
    }
    for (size_t i = 0; i < out.num_nodes(); ++i) {
        out.edges.push_back({static_cast<int>(i), out.rel_self_loop(), static_cast<int>(i)});
    }
    return out;
}

WorkingGraph drop_z_edges(const WorkingGraph& wg) {
    WorkingGraph out = wg;
    out.edges.clear();
    for (const auto& e : wg.edges) {
        bool touches_z = e.src == 0 || e.dst == 0;
        bool z_self = e.src == 0 && e.dst == 0 && wg.rel_kind(e.rel) == WgRelKind::self_loop;
        if (!touches_z || z_self) out.edges.push_back(e);
    }
    return out;
}

}  // namespace qagnn
