#pragma once

// Brute-force reference implementations used only by tests. These stay
// independent of the library code paths they check.

#include <functional>
#include <set>
#include <vector>

#include "qagnn/kg.hpp"
#include "qagnn/retrieval.hpp"

namespace qagnn_test {

// Every node lying on some walk of length <= k that starts at one topic
// entity and ends at a different one, plus the topic entities themselves.
// Enumerates walks explicitly (repeats allowed).
inline std::set<qagnn::EntityId> brute_force_path_nodes(const qagnn::KnowledgeGraph& g,
                                                        const std::set<qagnn::EntityId>& topics,
                                                        int k) {
    std::set<qagnn::EntityId> result;
    std::vector<qagnn::EntityId> present;
    for (qagnn::EntityId t : topics) {
        if (g.valid_entity(t)) {
            present.push_back(t);
            result.insert(t);
        }
    }
    std::vector<qagnn::EntityId> walk;
    std::function<void(qagnn::EntityId, qagnn::EntityId)> dfs =
        [&](qagnn::EntityId start, qagnn::EntityId node) {
            if (static_cast<int>(walk.size()) - 1 >= 1 && node != start &&
                topics.count(node)) {
                for (qagnn::EntityId v : walk) result.insert(v);
            }
            if (static_cast<int>(walk.size()) - 1 >= k) return;
            for (const auto& [rel, dst] : g.neighbors(node)) {
                (void)rel;
                walk.push_back(dst);
                dfs(start, dst);
                walk.pop_back();
            }
        };
    for (qagnn::EntityId start : present) {
        walk = {start};
        dfs(start, start);
    }
    return result;
}

}  // namespace qagnn_test
