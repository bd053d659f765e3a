#pragma once

#include <string>
#include <vector>

#include "qagnn/model.hpp"
#include "qagnn/working_graph.hpp"

namespace qagnn {

struct TraceStep {
    int src;
    int dst;
    size_t layer;
    double alpha;
};

struct AttentionTrace {
    std::vector<TraceStep> steps;  // in expansion order
    int start = 0;
    size_t top_b = 2;
    double min_alpha = 0.1;
};

struct TraceOptions {
    int start = 0;  // local node index; defaults to z
    // Allowed destination node type per depth (depth 1 first), e.g. {Q, O}
    // walks Z -> Q -> O. Empty means any type at any depth.
    std::vector<NodeType> directions;
    size_t top_b = 2;
    double min_alpha = 0.1;
    int layer = -1;  // attention layer to read; -1 = final layer
};

// Best-first expansion over the recorded attention weights: repeatedly pops
// the highest-alpha frontier edge whose destination matches the next allowed
// type, visiting each node once. Ties break by ascending destination then
// source index. At most top_b qualifying out-edges per expanded node enter
// the frontier; edges below min_alpha are ignored.
AttentionTrace trace_attention(const AttentionRecord& record, const WorkingGraph& wg,
                               const TraceOptions& opts);

// Deterministic Graphviz text: nodes labeled "name (type, rho=score)", edge
// pen widths proportional to alpha, trace edges highlighted.
std::string export_dot(const WorkingGraph& wg, const AttentionTrace& trace,
                       const KnowledgeGraph* kg = nullptr,
                       const AttentionRecord* record = nullptr, int layer = -1);

}  // namespace qagnn
