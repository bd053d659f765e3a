#pragma once

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qagnn/kg.hpp"
#include "qagnn/nn.hpp"
#include "qagnn/tensor.hpp"
#include "qagnn/working_graph.hpp"

namespace qagnn {

enum class PoolingKind { attention, mean };
enum class AttentionNorm { outgoing, incoming };

struct ModelConfig {
    size_t hidden_dim = 200;  // D, must be even
    size_t layers = 5;        // L
    double dropout = 0.2;
    size_t d_lm = 200;      // context encoder output width
    size_t entity_dim = 0;  // learned entity table width; 0 -> hidden_dim

    bool use_relevance_in_attention = true;
    bool use_type_embedding = true;
    bool use_relation_embedding = true;
    PoolingKind pooling = PoolingKind::attention;
    // Verbatim mode normalizes attention over each source's edge set;
    // `incoming` is the conventional target-side softmax.
    AttentionNorm attention_norm = AttentionNorm::outgoing;
    bool batch_norm_identity = false;

    void validate() const;
};

// Per-layer (src, dst, alpha) triples over a working graph's local indices.
struct AttentionRecord {
    struct Entry {
        int src;
        int dst;
        double alpha;
    };
    std::vector<std::vector<Entry>> layers;
};

struct GraphInput {
    const WorkingGraph* wg = nullptr;
    std::vector<int> token_ids;                         // encoded context tokens
    const std::vector<double>* external_zlm = nullptr;  // optional precomputed z^LM
};

struct GraphOutput {
    Tensor logit;  // scalar
    Tensor z_gnn;  // [1, D]
    Tensor g;      // [1, D]
    bool degenerate_pool = false;
    AttentionRecord attention;  // filled when record_attention is set
};

struct ForwardStats {
    size_t messages_computed = 0;      // one per edge per layer
    size_t edge_feature_elements = 0;  // doubles allocated for per-edge features
};

enum class RunMode { train, eval };

struct ForwardOptions {
    bool record_attention = false;
    bool skip_gnn = false;  // encoder-only baseline: logit from z^LM alone
};

// The joint-reasoning network: context encoding, typed/relational attention
// message passing over working graphs, pooling, and the answer-scoring head.
// A batch of graphs is processed jointly so batch normalization sees every
// node row in the mini-batch.
class Model {
public:
    Model(ModelConfig cfg, int num_wg_relations, size_t num_entities, size_t token_vocab_size,
          uint64_t seed, const EntityEmbeddings* frozen_embeddings = nullptr);

    std::vector<GraphOutput> forward(Tape& tape, std::span<const GraphInput> inputs,
                                     RunMode mode, std::mt19937_64* dropout_rng = nullptr,
                                     const ForwardOptions& opts = {});

    // Bag-of-tokens stand-in for the pretrained context encoder: mean of
    // learned token embeddings through a 2-layer MLP.
    Tensor encode_context(Tape& tape, const std::vector<int>& token_ids) const;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }
    int num_wg_relations() const { return num_wg_relations_; }
    const ForwardStats& stats() const { return stats_; }

private:
    struct LayerParams {
        Linear f_u;   // |T| -> D/2
        Mlp2 f_r;     // |R|+2|T| -> D
        Mlp2 f_rho;   // 1 -> D/2
        Linear f_q;   // 2D -> D
        Linear f_k;   // 3D -> D
        Linear f_m;   // 2.5D -> D
        Linear f_n1;  // D -> D
        BatchNorm f_n_bn;
        Linear f_n2;  // D -> D
    };

    Tensor initial_states(Tape& tape, const GraphInput& in, const Tensor& z_lm) const;

    ModelConfig cfg_;
    int num_wg_relations_;
    size_t num_entities_;
    const EntityEmbeddings* frozen_embeddings_;
    ParamStore params_;

    Tensor tok_emb_;
    Mlp2 encoder_mlp_;
    Tensor entity_emb_;  // learned table (unused in frozen mode)
    Linear f_h_;
    Linear f_h_z_;
    std::vector<LayerParams> layers_;
    Linear pool_;
    Mlp2 head_;
    ForwardStats stats_;
};

PoolingKind parse_pooling(const std::string& name);
AttentionNorm parse_attention_norm(const std::string& name);

}  // namespace qagnn
