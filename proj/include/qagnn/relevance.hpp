#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "qagnn/kg.hpp"
#include "qagnn/retrieval.hpp"

namespace qagnn {

enum class ScorerKind {
    overlap_standin,  // smoothed token-overlap stand-in for the LM head
    external_file,    // precomputed per-entity scores
    constant,         // 1.0 everywhere
};

ScorerKind parse_scorer_kind(const std::string& name);
const char* scorer_kind_name(ScorerKind kind);

// Per-entity scores in [0, 1], keyed through the KG vocabulary.
// Lines: entity_name<TAB>score. Unknown names are skipped (counted).
struct ExternalScores {
    std::unordered_map<EntityId, double> values;
    size_t skipped = 0;

    static ExternalScores load(std::istream& in, const KnowledgeGraph& g);
    static ExternalScores load_file(const std::string& path, const KnowledgeGraph& g);
};

class RelevanceScorer {
public:
    explicit RelevanceScorer(ScorerKind kind, ExternalScores external = {});

    ScorerKind kind() const { return kind_; }

    // overlap_standin: (|T_c intersect T_e| + 0.5) / (|T_e| + 1.0) with T_c the
    // context token set and T_e the entity-name token set (underscores split).
    double score_node(const std::vector<std::string>& context_tokens,
                      const std::string& entity_name, EntityId id = -1) const;

    std::unordered_map<EntityId, double> score_subgraph(
        const std::vector<std::string>& context_tokens, const Subgraph& sub) const;

private:
    ScorerKind kind_;
    ExternalScores external_;
};

}  // namespace qagnn
