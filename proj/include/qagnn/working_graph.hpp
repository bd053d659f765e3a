#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "qagnn/kg.hpp"
#include "qagnn/retrieval.hpp"

namespace qagnn {

enum class NodeType : uint8_t { Z = 0, Q = 1, A = 2, O = 3 };
constexpr size_t kNumNodeTypes = 4;

char node_type_letter(NodeType t);

enum class WgRelKind {
    kg_forward,
    kg_inverse,
    z_question,
    z_question_inv,
    z_answer,
    z_answer_inv,
    self_loop,
};

// The joint graph over the QA context and the retrieved subgraph. Local
// node 0 is the context node z; entity nodes follow (topics first, then the
// rest, each ascending by EntityId). Relation ids 0..R-1 are the augmented
// KG relations; the four z relations and the self-loop relation follow.
struct WorkingGraph {
    struct LocalEdge {
        int src;
        RelationId rel;
        int dst;
    };

    std::vector<EntityId> node_entity;  // per local index; -1 for z
    std::vector<NodeType> node_types;
    std::vector<double> relevance;  // z fixed at 1.0
    std::vector<LocalEdge> edges;
    int num_kg_relations = 0;  // augmented KG relation count
    int num_kg_base_relations = 0;

    std::string example_id;
    int choice_index = 0;
    std::vector<std::string> context_tokens;  // question + choice, tokenized

    size_t num_nodes() const { return node_entity.size(); }
    int num_relations() const { return num_kg_relations + 5; }
    RelationId rel_z_question() const { return num_kg_relations; }
    RelationId rel_z_question_inv() const { return num_kg_relations + 1; }
    RelationId rel_z_answer() const { return num_kg_relations + 2; }
    RelationId rel_z_answer_inv() const { return num_kg_relations + 3; }
    RelationId rel_self_loop() const { return num_kg_relations + 4; }
    WgRelKind rel_kind(RelationId r) const;

    int local_index(EntityId v) const;  // -1 if absent
};

// Builds the working graph: typed nodes, induced KG edges remapped to local
// indices, z edges to every topic entity (with inverses), one self-loop per
// node. Nodes in both V_q and V_a are typed A and receive both z relations.
WorkingGraph build_working_graph(const Subgraph& sub, const TopicEntities& topics,
                                 const std::unordered_map<EntityId, double>& scores,
                                 const std::string& example_id, int choice_index,
                                 const std::vector<std::string>& context_tokens);

// Ablation: adds (z, r_zq, v) + inverse for every entity node that has no
// z edge yet. Idempotent.
WorkingGraph connect_z_to_all(const WorkingGraph& wg);

// Ablation: removes every edge incident to z except z's self-loop.
WorkingGraph drop_z_edges(const WorkingGraph& wg);

}  // namespace qagnn
