#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qagnn/config.hpp"
#include "qagnn/dataset.hpp"
#include "qagnn/relevance.hpp"
#include "qagnn/text.hpp"
#include "qagnn/trainer.hpp"
#include "qagnn/working_graph.hpp"

namespace qagnn {

// Preprocessed working graphs, one record per dataset example with one
// graph per answer choice. "QGWC" magic + version byte, then length-prefixed
// records; the graph index (entry offsets) makes partial reads cheap.
struct GraphCache {
    static constexpr uint8_t kVersion = 1;

    int num_kg_relations = 0;       // augmented
    int num_kg_base_relations = 0;
    uint64_t num_entities = 0;

    struct Entry {
        std::string id;
        int answer_index = 0;
        std::vector<WorkingGraph> graphs;  // one per choice
    };
    std::vector<Entry> entries;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static GraphCache load(std::istream& in);
    static GraphCache load_file(const std::string& path);
};

// Per-(example, choice) context vectors replacing the built-in encoder:
// example_id<TAB>choice_index<TAB>v1 v2 ... v_dlm.
struct ZlmTable {
    size_t dim = 0;
    std::map<std::pair<std::string, int>, std::vector<double>> vectors;

    static ZlmTable load(std::istream& in);
    static ZlmTable load_file(const std::string& path);
};

// Exclusive ownership of an output directory for the duration of a
// subcommand (creates <dir>/.qagnn.lock, removed on destruction).
class OutputDirLock {
public:
    explicit OutputDirLock(const std::string& dir);
    ~OutputDirLock();
    OutputDirLock(const OutputDirLock&) = delete;
    OutputDirLock& operator=(const OutputDirLock&) = delete;

private:
    std::string path_;
};

// Seed resolution order: config key, WORKGRAPH_SEED env var, 0.
uint64_t resolve_seed(const KvConfig& cfg);

struct PreprocessStats {
    size_t graphs = 0;
    double mean_subgraph_nodes = 0.0;  // retrieved |V_sub| before pruning
    double mean_kept_nodes = 0.0;      // entity nodes after pruning
    double mean_edges = 0.0;
    size_t pruned_graphs = 0;
    size_t no_topic_graphs = 0;
};

// link -> retrieve(k) -> score -> prune(max_nodes) -> build working graph,
// per (example, choice).
GraphCache preprocess_dataset(const KnowledgeGraph& kg, const std::vector<QAExample>& examples,
                              const RelevanceScorer& scorer, int k, size_t max_nodes,
                              PreprocessStats* stats = nullptr);

// Token vocabulary over every cached context, in cache order.
TokenVocab build_token_vocab(const GraphCache& cache);

std::vector<TrainExample> to_train_examples(const GraphCache& cache, const TokenVocab& vocab,
                                            const ZlmTable* zlm = nullptr,
                                            bool no_z_edges = false, bool z_to_all = false);

ModelConfig model_config_from_kv(const KvConfig& cfg);

void run_gen(const KvConfig& cfg, std::ostream& log);
void run_preprocess(const KvConfig& cfg, std::ostream& log);
void run_train(const KvConfig& cfg, std::ostream& log);
void run_eval(const KvConfig& cfg, std::ostream& log);
void run_explain(const KvConfig& cfg, std::ostream& log);

}  // namespace qagnn
