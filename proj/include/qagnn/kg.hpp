#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qagnn {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Edge {
    EntityId head;
    RelationId relation;
    EntityId tail;
};

// Immutable multi-relational graph. Loaded from edge-list TSV
// (head<TAB>relation<TAB>tail, one triple per line, duplicates dropped),
// then optionally inverse-augmented: each relation r gets a paired inverse
// with id r + R and every edge (h, r, t) an inverse edge (t, r + R, h).
class KnowledgeGraph {
public:
    static KnowledgeGraph load(std::istream& in);
    static KnowledgeGraph load_file(const std::string& path);

    size_t num_entities() const { return entity_names_.size(); }
    size_t num_relations() const { return relation_names_.size(); }
    size_t num_edges() const { return edges_.size(); }
    bool augmented() const { return augmented_; }

    const std::string& entity_name(EntityId v) const;
    const std::string& relation_name(RelationId r) const;
    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;
    bool valid_entity(EntityId v) const {
        return v >= 0 && static_cast<size_t>(v) < entity_names_.size();
    }

    bool relation_is_inverse(RelationId r) const;
    // For augmented graphs: r <-> r's pair (forward <-> inverse).
    RelationId inverse_of(RelationId r) const;
    // Relation count before augmentation.
    size_t num_base_relations() const { return augmented_ ? relation_names_.size() / 2 : relation_names_.size(); }

    const std::vector<Edge>& edges() const { return edges_; }

    // All outgoing edges of v in load order (inverse edges follow the
    // originals). Pure; repeated calls return identical views.
    std::span<const std::pair<RelationId, EntityId>> neighbors(EntityId v) const;

    // Writes the current triple list back as TSV.
    void serialize(std::ostream& out) const;

    friend KnowledgeGraph augment_inverse_edges(const KnowledgeGraph& g);

private:
    KnowledgeGraph() = default;
    void build_adjacency();

    std::vector<std::string> entity_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Edge> edges_;
    bool augmented_ = false;

    // CSR adjacency over edges_, in edge-list order per node.
    std::vector<size_t> adj_offsets_;
    std::vector<std::pair<RelationId, EntityId>> adj_entries_;
};

KnowledgeGraph augment_inverse_edges(const KnowledgeGraph& g);

// Optional initial node features: entity_name<TAB>v1 v2 ... vd.
// Unknown entity names are skipped (counted in skipped). All vectors must
// share one dimension.
struct EntityEmbeddings {
    size_t dim = 0;
    std::unordered_map<EntityId, std::vector<double>> vectors;
    size_t skipped = 0;

    static EntityEmbeddings load(std::istream& in, const KnowledgeGraph& g);
    static EntityEmbeddings load_file(const std::string& path, const KnowledgeGraph& g);
};

}  // namespace qagnn
