#include "qagnn/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "qagnn/errors.hpp"

namespace qagnn {

namespace {

struct FrontierEdge {
    double alpha;
    int src;
    int dst;
    size_t depth;  // depth of dst if accepted

    // Highest alpha first; ties by ascending dst, then src.
    bool operator<(const FrontierEdge& o) const {
        if (alpha != o.alpha) return alpha < o.alpha;
        if (dst != o.dst) return dst > o.dst;
        return src > o.src;
    }
};

std::string format_alpha(double a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", a);
    return buf;
}

}  // namespace

AttentionTrace trace_attention(const AttentionRecord& record, const WorkingGraph& wg,
                               const TraceOptions& opts) {
    if (record.layers.empty()) throw UsageError("attention record is empty");
    size_t layer = opts.layer < 0 ? record.layers.size() - 1 : static_cast<size_t>(opts.layer);
    if (layer >= record.layers.size()) throw UsageError("attention layer out of range");
    if (opts.start < 0 || static_cast<size_t>(opts.start) >= wg.num_nodes()) {
        throw UsageError("trace start node out of range");
    }

    // alpha per (src, dst) at the chosen layer; parallel edges keep the max.
    std::map<std::pair<int, int>, double> alpha;
    for (const auto& e : record.layers[layer]) {
        auto key = std::make_pair(e.src, e.dst);
        auto it = alpha.find(key);
        if (it == alpha.end() || it->second < e.alpha) alpha[key] = e.alpha;
    }

    AttentionTrace trace;
    trace.start = opts.start;
    trace.top_b = opts.top_b;
    trace.min_alpha = opts.min_alpha;

    std::vector<char> visited(wg.num_nodes(), 0);
    visited[static_cast<size_t>(opts.start)] = 1;
    std::priority_queue<FrontierEdge> frontier;

    auto push_out_edges = [&](int node, size_t depth) {
        if (!opts.directions.empty() && depth >= opts.directions.size()) return;
        std::vector<FrontierEdge> candidates;
        for (const auto& [key, a] : alpha) {
            if (key.first != node || key.second == node) continue;
            if (a < opts.min_alpha) continue;
            if (visited[static_cast<size_t>(key.second)]) continue;
            if (!opts.directions.empty() &&
                wg.node_types[static_cast<size_t>(key.second)] != opts.directions[depth]) {
                continue;
            }
            candidates.push_back({a, key.first, key.second, depth + 1});
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const FrontierEdge& a, const FrontierEdge& b) { return b < a; });
        if (candidates.size() > opts.top_b) candidates.resize(opts.top_b);
        for (const auto& c : candidates) frontier.push(c);
    };

    push_out_edges(opts.start, 0);
    while (!frontier.empty()) {
        FrontierEdge e = frontier.top();
        frontier.pop();
        if (visited[static_cast<size_t>(e.dst)]) continue;
        visited[static_cast<size_t>(e.dst)] = 1;
        trace.steps.push_back({e.src, e.dst, layer, e.alpha});
        push_out_edges(e.dst, e.depth);
    }
    return trace;
}

std::string export_dot(const WorkingGraph& wg, const AttentionTrace& trace,
                       const KnowledgeGraph* kg, const AttentionRecord* record, int layer) {
    std::ostringstream out;
    out << "digraph working_graph {\n";
    out << "  rankdir=LR;\n";
    for (size_t i = 0; i < wg.num_nodes(); ++i) {
        std::string name = i == 0 ? "z"
                           : (kg ? kg->entity_name(wg.node_entity[i])
                                 : "n" + std::to_string(wg.node_entity[i]));
        char rho[32];
        std::snprintf(rho, sizeof(rho), "%.4f", wg.relevance[i]);
        out << "  n" << i << " [label=\"" << name << " ("
            << node_type_letter(wg.node_types[i]) << ", rho=" << rho << ")\"];\n";
    }

    std::map<std::pair<int, int>, double> alpha;
    if (record && !record->layers.empty()) {
        size_t l = layer < 0 ? record->layers.size() - 1 : static_cast<size_t>(layer);
        if (l >= record->layers.size()) throw UsageError("attention layer out of range");
        for (const auto& e : record->layers[l]) {
            auto key = std::make_pair(e.src, e.dst);
            auto it = alpha.find(key);
            if (it == alpha.end() || it->second < e.alpha) alpha[key] = e.alpha;
        }
    }
    std::set<std::pair<int, int>> traced;
    for (const auto& s : trace.steps) traced.emplace(s.src, s.dst);

    std::set<std::pair<int, int>> emitted;
    for (const auto& e : wg.edges) {
        if (e.src == e.dst) continue;  // self-loops stay out of the picture
        auto key = std::make_pair(e.src, e.dst);
        if (!emitted.insert(key).second) continue;
        out << "  n" << e.src << " -> n" << e.dst;
        std::vector<std::string> attrs;
        auto it = alpha.find(key);
        double a = it != alpha.end() ? it->second : -1.0;
        if (traced.count(key)) {
            double width = 1.0 + 4.0 * std::max(a, 0.0);
            char w[32];
            std::snprintf(w, sizeof(w), "%.2f", width);
            attrs.push_back("color=red");
            attrs.push_back("penwidth=" + std::string(w));
            if (a >= 0.0) attrs.push_back("label=\"" + format_alpha(a) + "\"");
        } else if (a >= 0.0) {
            char w[32];
            std::snprintf(w, sizeof(w), "%.2f", 0.5 + 4.0 * a);
            attrs.push_back("color=gray");
            attrs.push_back("penwidth=" + std::string(w));
        } else {
            attrs.push_back("color=gray");
        }
        if (!attrs.empty()) {
            out << " [";
            for (size_t i = 0; i < attrs.size(); ++i) {
                if (i) out << ", ";
                out << attrs[i];
            }
            out << "]";
        }
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace qagnn
