#include "qagnn/relevance.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qagnn/errors.hpp"
#include "qagnn/text.hpp"

namespace qagnn {

ScorerKind parse_scorer_kind(const std::string& name) {
    if (name == "overlap" || name == "overlap_standin") return ScorerKind::overlap_standin;
    if (name == "external" || name == "external_file") return ScorerKind::external_file;
    if (name == "constant") return ScorerKind::constant;
    throw UsageError("unknown scorer kind: " + name);
}

const char* scorer_kind_name(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::overlap_standin: return "overlap_standin";
        case ScorerKind::external_file: return "external_file";
        case ScorerKind::constant: return "constant";
    }
    return "?";
}

ExternalScores ExternalScores::load(std::istream& in, const KnowledgeGraph& g) {
    ExternalScores out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("score line " + std::to_string(lineno) +
                            ": expected entity_name<TAB>score");
        }
        std::string name = line.substr(0, tab);
        double value;
        std::istringstream vs(line.substr(tab + 1));
        if (!(vs >> value)) {
            throw DataError("score line " + std::to_string(lineno) + ": bad number");
        }
        if (!(value >= 0.0 && value <= 1.0)) {
            throw DataError("score line " + std::to_string(lineno) + ": score " +
                            std::to_string(value) + " outside [0,1]");
        }
        auto id = g.find_entity(name);
        if (!id) {
            ++out.skipped;
            continue;
        }
        out.values[*id] = value;
    }
    return out;
}

ExternalScores ExternalScores::load_file(const std::string& path, const KnowledgeGraph& g) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score file: " + path);
    return load(in, g);
}

RelevanceScorer::RelevanceScorer(ScorerKind kind, ExternalScores external)
    : kind_(kind), external_(std::move(external)) {}

double RelevanceScorer::score_node(const std::vector<std::string>& context_tokens,
                                   const std::string& entity_name, EntityId id) const {
    if (entity_name.empty()) throw UsageError("score_node: empty entity name");
    switch (kind_) {
        case ScorerKind::constant:
            return 1.0;
        case ScorerKind::external_file: {
            auto it = external_.values.find(id);
            if (it == external_.values.end()) {
                throw DataError("no external relevance score for entity " + entity_name);
            }
            return it->second;
        }
        case ScorerKind::overlap_standin: {
            std::set<std::string> context(context_tokens.begin(), context_tokens.end());
            auto name_tokens = tokenize(entity_name);
            std::set<std::string> entity(name_tokens.begin(), name_tokens.end());
            size_t overlap = 0;
            for (const auto& t : entity) overlap += context.count(t);
            double rho = (static_cast<double>(overlap) + 0.5) /
                         (static_cast<double>(entity.size()) + 1.0);
            if (!std::isfinite(rho)) throw NumericError("relevance score is not finite");
            return rho;
        }
    }
    throw UsageError("invalid scorer kind");
}

std::unordered_map<EntityId, double> RelevanceScorer::score_subgraph(
    const std::vector<std::string>& context_tokens, const Subgraph& sub) const {
    std::unordered_map<EntityId, double> out;
    out.reserve(sub.nodes.size());
    for (EntityId v : sub.nodes) {
        out[v] = score_node(context_tokens, sub.origin->entity_name(v), v);
    }
    return out;
}

}  // namespace qagnn
