#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qagnn/dataset.hpp"
#include "qagnn/kg.hpp"
#include "qagnn/retrieval.hpp"

namespace qagnn {

// Seeded random multi-relational toy graph. Entities are named e0..e{n-1},
// relations r0..r{m-1}; every ordered pair gets an independent edge per
// relation with probability p. Regenerated (up to 20 times) until the
// largest weakly-connected component covers >= 0.8 n.
struct ToyKG {
    size_t n = 0;
    size_t m = 0;
    double p = 0.0;
    uint64_t seed = 0;
    std::vector<std::array<int, 3>> edges;  // (head, relation, tail)

    std::string entity_name(int i) const { return "e" + std::to_string(i); }
    std::string relation_name(int j) const { return "r" + std::to_string(j); }
    void to_tsv(std::ostream& out) const;
    std::string to_tsv_string() const;
};

ToyKG gen_toy_kg(size_t n, size_t m, double p, uint64_t seed);

enum class LogicalPattern {
    one_hop,             // r(a, ?)
    two_hop,             // r1(a, x) and r2(x, ?)
    conjunction,         // r1(a, ?) and r2(b, ?)
    negated_conjunction  // r1(a, ?) and not r2(b, ?)
};

const char* logical_pattern_name(LogicalPattern p);

struct LogicalQuery {
    LogicalPattern pattern;
    std::vector<int> anchors;
    std::vector<int> relations;
    std::vector<int> answers;     // exact answer set, ascending
    std::vector<int> candidates;  // scored entities; one is the designated gold
    int gold = 0;                 // index into candidates

    std::string question_text(const ToyKG& kg) const;
    QAExample to_example(const ToyKG& kg, const std::string& id) const;
};

struct ParsedLogicalQuestion {
    LogicalPattern pattern;
    std::vector<std::string> anchors;
    std::vector<std::string> relations;
};

// Recovers pattern, anchors and relations from the controlled-language
// question text.
ParsedLogicalQuestion parse_logical_question(const std::string& question);

struct LogicalQueryOptions {
    std::map<LogicalPattern, size_t> counts;
    size_t num_candidates = 10;
    size_t resample_budget = 2000;
};

std::vector<LogicalQuery> gen_logical_queries(const ToyKG& kg, const LogicalQueryOptions& opts,
                                              uint64_t seed);

// Matched question pairs built from a conjunction and its negated variant:
// both share one choice set; inserting "not" flips the gold answer. Each
// pair may carry an anchor-substitution variant ("…_sub") when one exists.
struct NegationDataset {
    std::vector<QAExample> examples;
    size_t pairs = 0;
    size_t substitutions = 0;
};

NegationDataset gen_negation_qa(const ToyKG& kg, size_t count, uint64_t seed);

struct EntityCountSplit {
    std::vector<size_t> few;   // indices with linked-entity count <= threshold
    std::vector<size_t> many;  // indices above the threshold
    double threshold = 0.0;
    std::vector<size_t> counts;  // per example
};

// Splits examples by linked topic-entity count (question plus all choices).
// Default threshold is the median count.
EntityCountSplit gen_entity_count_split(const std::vector<QAExample>& examples,
                                        const KnowledgeGraph& kg,
                                        std::optional<double> threshold = std::nullopt);

}  // namespace qagnn
