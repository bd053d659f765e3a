#include "qagnn/kg.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "qagnn/errors.hpp"

namespace qagnn {

namespace {

struct TripleHash {
    size_t operator()(const std::tuple<EntityId, RelationId, EntityId>& t) const {
        size_t h = std::hash<std::int64_t>()(
            (static_cast<std::int64_t>(std::get<0>(t)) << 21) ^ std::get<2>(t));
        return h * 1000003u + static_cast<size_t>(std::get<1>(t));
    }
};

}  // namespace

KnowledgeGraph KnowledgeGraph::load(std::istream& in) {
    KnowledgeGraph g;
    std::unordered_set<std::tuple<EntityId, RelationId, EntityId>, TripleHash> seen;
    std::string line;
    size_t lineno = 0;
    auto intern_entity = [&g](const std::string& name) {
        auto it = g.entity_ids_.find(name);
        if (it != g.entity_ids_.end()) return it->second;
        EntityId id = static_cast<EntityId>(g.entity_names_.size());
        g.entity_names_.push_back(name);
        g.entity_ids_.emplace(name, id);
        return id;
    };
    auto intern_relation = [&g](const std::string& name) {
        auto it = g.relation_ids_.find(name);
        if (it != g.relation_ids_.end()) return it->second;
        RelationId id = static_cast<RelationId>(g.relation_names_.size());
        g.relation_names_.push_back(name);
        g.relation_ids_.emplace(name, id);
        return id;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos) {
            throw DataError("edge list line " + std::to_string(lineno) +
                            ": expected head<TAB>relation<TAB>tail");
        }
        std::string head = line.substr(0, t1);
        std::string rel = line.substr(t1 + 1, t2 - t1 - 1);
        std::string tail = line.substr(t2 + 1);
        if (head.empty() || rel.empty() || tail.empty()) {
            throw DataError("edge list line " + std::to_string(lineno) + ": empty field");
        }
        Edge e{intern_entity(head), intern_relation(rel), intern_entity(tail)};
        if (seen.emplace(e.head, e.relation, e.tail).second) {
            g.edges_.push_back(e);
        }
    }
    if (g.edges_.empty()) throw DataError("edge list is empty");
    g.build_adjacency();
    return g;
}

KnowledgeGraph KnowledgeGraph::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list: " + path);
    return load(in);
}

const std::string& KnowledgeGraph::entity_name(EntityId v) const {
    if (!valid_entity(v)) throw UsageError("entity id out of range: " + std::to_string(v));
    return entity_names_[static_cast<size_t>(v)];
}

const std::string& KnowledgeGraph::relation_name(RelationId r) const {
    if (r < 0 || static_cast<size_t>(r) >= relation_names_.size()) {
        throw UsageError("relation id out of range: " + std::to_string(r));
    }
    return relation_names_[static_cast<size_t>(r)];
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

bool KnowledgeGraph::relation_is_inverse(RelationId r) const {
    if (r < 0 || static_cast<size_t>(r) >= relation_names_.size()) {
        throw UsageError("relation id out of range: " + std::to_string(r));
    }
    return augmented_ && static_cast<size_t>(r) >= relation_names_.size() / 2;
}

RelationId KnowledgeGraph::inverse_of(RelationId r) const {
    if (!augmented_) throw UsageError("inverse_of on a non-augmented graph");
    size_t base = relation_names_.size() / 2;
    if (r < 0 || static_cast<size_t>(r) >= relation_names_.size()) {
        throw UsageError("relation id out of range: " + std::to_string(r));
    }
    return static_cast<size_t>(r) < base ? r + static_cast<RelationId>(base)
                                         : r - static_cast<RelationId>(base);
}

std::span<const std::pair<RelationId, EntityId>> KnowledgeGraph::neighbors(EntityId v) const {
    if (!valid_entity(v)) throw UsageError("entity id out of range: " + std::to_string(v));
    size_t b = adj_offsets_[static_cast<size_t>(v)];
    size_t e = adj_offsets_[static_cast<size_t>(v) + 1];
    return {adj_entries_.data() + b, e - b};
}

void KnowledgeGraph::serialize(std::ostream& out) const {
    for (const Edge& e : edges_) {
        out << entity_names_[static_cast<size_t>(e.head)] << '\t'
            << relation_names_[static_cast<size_t>(e.relation)] << '\t'
            << entity_names_[static_cast<size_t>(e.tail)] << '\n';
    }
}

void KnowledgeGraph::build_adjacency() {
    adj_offsets_.assign(entity_names_.size() + 1, 0);
    for (const Edge& e : edges_) {
        ++adj_offsets_[static_cast<size_t>(e.head) + 1];
    }
    for (size_t i = 1; i < adj_offsets_.size(); ++i) adj_offsets_[i] += adj_offsets_[i - 1];
    adj_entries_.resize(edges_.size());
    std::vector<size_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
    for (const Edge& e : edges_) {
        adj_entries_[cursor[static_cast<size_t>(e.head)]++] = {e.relation, e.tail};
    }
}

KnowledgeGraph augment_inverse_edges(const KnowledgeGraph& g) {
    if (g.augmented_) throw DataError("graph is already inverse-augmented");
    KnowledgeGraph out;
    out.entity_names_ = g.entity_names_;
    out.entity_ids_ = g.entity_ids_;
    out.relation_names_ = g.relation_names_;
    out.relation_ids_ = g.relation_ids_;
    size_t base = g.relation_names_.size();
    for (size_t r = 0; r < base; ++r) {
        std::string inv = g.relation_names_[r] + "^-1";
        out.relation_ids_.emplace(inv, static_cast<RelationId>(out.relation_names_.size()));
        out.relation_names_.push_back(std::move(inv));
    }
    out.edges_ = g.edges_;
    out.edges_.reserve(g.edges_.size() * 2);
    for (const Edge& e : g.edges_) {
        out.edges_.push_back({e.tail, e.relation + static_cast<RelationId>(base), e.head});
    }
    out.augmented_ = true;
    out.build_adjacency();
    return out;
}

EntityEmbeddings EntityEmbeddings::load(std::istream& in, const KnowledgeGraph& g) {
    EntityEmbeddings emb;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("embedding line " + std::to_string(lineno) +
                            ": expected entity_name<TAB>values");
        }
        std::string name = line.substr(0, tab);
        auto id = g.find_entity(name);
        std::vector<double> vals;
        std::istringstream vs(line.substr(tab + 1));
        double x;
        while (vs >> x) vals.push_back(x);
        if (!vs.eof()) {
            throw DataError("embedding line " + std::to_string(lineno) + ": bad number");
        }
        if (vals.empty()) {
            throw DataError("embedding line " + std::to_string(lineno) + ": no values");
        }
        if (emb.dim == 0) emb.dim = vals.size();
        if (vals.size() != emb.dim) {
            throw DataError("embedding line " + std::to_string(lineno) +
                            ": dimension mismatch (" + std::to_string(vals.size()) + " vs " +
                            std::to_string(emb.dim) + ")");
        }
        if (!id) {
            ++emb.skipped;
            continue;
        }
        emb.vectors[*id] = std::move(vals);
    }
    return emb;
}

EntityEmbeddings EntityEmbeddings::load_file(const std::string& path, const KnowledgeGraph& g) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);
    return load(in, g);
}

}  // namespace qagnn
