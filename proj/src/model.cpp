#include "qagnn/model.hpp"

#include <cmath>

#include "qagnn/errors.hpp"

namespace qagnn {

void ModelConfig::validate() const {
    if (hidden_dim == 0 || hidden_dim % 2 != 0) {
        throw UsageError("hidden_dim must be a positive even number");
    }
    if (layers < 1) throw UsageError("layer count must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0,1)");
    if (d_lm == 0) throw UsageError("d_lm must be positive");
}

PoolingKind parse_pooling(const std::string& name) {
    if (name == "attention") return PoolingKind::attention;
    if (name == "mean") return PoolingKind::mean;
    throw UsageError("unknown pooling mode: " + name);
}

AttentionNorm parse_attention_norm(const std::string& name) {
    if (name == "outgoing") return AttentionNorm::outgoing;
    if (name == "incoming") return AttentionNorm::incoming;
    throw UsageError("unknown attention normalization mode: " + name);
}

Model::Model(ModelConfig cfg, int num_wg_relations, size_t num_entities,
             size_t token_vocab_size, uint64_t seed, const EntityEmbeddings* frozen_embeddings)
    : cfg_(cfg),
      num_wg_relations_(num_wg_relations),
      num_entities_(num_entities),
      frozen_embeddings_(frozen_embeddings),
      params_(seed) {
    cfg_.validate();
    if (num_wg_relations_ <= 0) throw UsageError("working-graph relation count must be positive");
    size_t d = cfg_.hidden_dim;
    size_t half = d / 2;
    size_t ent_dim = frozen_embeddings_ ? frozen_embeddings_->dim
                                        : (cfg_.entity_dim ? cfg_.entity_dim : d);

    tok_emb_ = params_.create("encoder.tok_emb", {token_vocab_size, cfg_.d_lm});
    encoder_mlp_ = Mlp2::create(params_, "encoder.mlp", cfg_.d_lm, cfg_.d_lm, cfg_.d_lm);
    if (!frozen_embeddings_) {
        entity_emb_ = params_.create("entity_emb", {num_entities_, ent_dim});
    }
    f_h_ = Linear::create(params_, "f_h", ent_dim, d);
    f_h_z_ = Linear::create(params_, "f_h_z", cfg_.d_lm, d);

    size_t rel_in = static_cast<size_t>(num_wg_relations_) + 2 * kNumNodeTypes;
    for (size_t l = 0; l < cfg_.layers; ++l) {
        std::string p = "gnn." + std::to_string(l) + ".";
        LayerParams lp;
        lp.f_u = Linear::create(params_, p + "f_u", kNumNodeTypes, half);
        lp.f_r = Mlp2::create(params_, p + "f_r", rel_in, d, d);
        lp.f_rho = Mlp2::create(params_, p + "f_rho", 1, half, half);
        lp.f_q = Linear::create(params_, p + "f_q", 2 * d, d);
        lp.f_k = Linear::create(params_, p + "f_k", 3 * d, d);
        lp.f_m = Linear::create(params_, p + "f_m", d + half + d, d);
        lp.f_n1 = Linear::create(params_, p + "f_n.l1", d, d);
        lp.f_n_bn = BatchNorm::create(params_, p + "f_n.bn", d);
        lp.f_n2 = Linear::create(params_, p + "f_n.l2", d, d);
        layers_.push_back(std::move(lp));
    }
    pool_ = Linear::create(params_, "pool", cfg_.d_lm, d);
    head_ = Mlp2::create(params_, "head", cfg_.d_lm + 2 * d, d, 1);
}

Tensor Model::encode_context(Tape& tape, const std::vector<int>& token_ids) const {
    if (token_ids.empty()) throw DataError("encode_context: empty token list");
    Tensor rows = tape.gather_rows(tok_emb_, token_ids);
    return encoder_mlp_.apply(tape, tape.mean_rows(rows));
}

Tensor Model::initial_states(Tape& tape, const GraphInput& in, const Tensor& z_lm) const {
    const WorkingGraph& wg = *in.wg;
    Tensor z_row = f_h_z_.apply(tape, z_lm);
    size_t n_ent = wg.num_nodes() - 1;
    if (n_ent == 0) return z_row;

    Tensor ent;
    if (frozen_embeddings_) {
        Tensor fixed = Tensor::zeros({n_ent, frozen_embeddings_->dim});
        for (size_t i = 0; i < n_ent; ++i) {
            EntityId v = wg.node_entity[i + 1];
            auto it = frozen_embeddings_->vectors.find(v);
            if (it == frozen_embeddings_->vectors.end()) {
                throw DataError("missing entity embedding for entity id " + std::to_string(v));
            }
            std::copy(it->second.begin(), it->second.end(),
                      fixed.data().begin() + i * frozen_embeddings_->dim);
        }
        ent = fixed;
    } else {
        std::vector<int> ids(n_ent);
        for (size_t i = 0; i < n_ent; ++i) {
            EntityId v = wg.node_entity[i + 1];
            if (v < 0 || static_cast<size_t>(v) >= num_entities_) {
                throw DataError("entity id out of range for embedding table: " +
                                std::to_string(v));
            }
            ids[i] = v;
        }
        ent = tape.gather_rows(entity_emb_, ids);
    }
    Tensor rows[2] = {z_row, f_h_.apply(tape, ent)};
    return tape.concat_rows(rows);
}

std::vector<GraphOutput> Model::forward(Tape& tape, std::span<const GraphInput> inputs,
                                        RunMode mode, std::mt19937_64* dropout_rng,
                                        const ForwardOptions& opts) {
    if (inputs.empty()) throw UsageError("forward: empty batch");
    stats_ = ForwardStats{};
    size_t d = cfg_.hidden_dim;
    size_t half = d / 2;

    // Per-graph context vectors.
    std::vector<Tensor> z_lms;
    z_lms.reserve(inputs.size());
    for (const GraphInput& in : inputs) {
        if (in.external_zlm) {
            if (in.external_zlm->size() != cfg_.d_lm) {
                throw DataError("external z^LM width " + std::to_string(in.external_zlm->size()) +
                                " does not match d_lm " + std::to_string(cfg_.d_lm));
            }
            z_lms.push_back(Tensor::from_data({1, cfg_.d_lm}, *in.external_zlm));
        } else {
            z_lms.push_back(encode_context(tape, in.token_ids));
        }
    }

    std::vector<GraphOutput> outputs(inputs.size());
    if (opts.skip_gnn) {
        // Encoder-only baseline: the head sees z^LM with zeroed graph vectors.
        for (size_t gi = 0; gi < inputs.size(); ++gi) {
            Tensor zeros_d = Tensor::zeros({1, d});
            Tensor parts[3] = {z_lms[gi], zeros_d, zeros_d};
            Tensor logit_row = head_.apply(tape, tape.concat_cols(parts));
            outputs[gi].logit = tape.sum(logit_row);
            outputs[gi].z_gnn = zeros_d;
            outputs[gi].g = zeros_d;
        }
        return outputs;
    }

    // Disjoint union of the batch graphs: offsets into a shared row space.
    std::vector<size_t> offset(inputs.size() + 1, 0);
    for (size_t gi = 0; gi < inputs.size(); ++gi) {
        if (!inputs[gi].wg) throw UsageError("forward: null working graph");
        if (inputs[gi].wg->num_relations() != num_wg_relations_) {
            throw DataError("working graph relation vocabulary does not match the model");
        }
        offset[gi + 1] = offset[gi] + inputs[gi].wg->num_nodes();
    }
    size_t n_total = offset.back();

    std::vector<Tensor> h0_parts;
    h0_parts.reserve(inputs.size());
    for (size_t gi = 0; gi < inputs.size(); ++gi) {
        h0_parts.push_back(initial_states(tape, inputs[gi], z_lms[gi]));
    }
    Tensor h = tape.concat_rows(h0_parts);

    // Combined edge arrays; edges stay grouped by graph.
    std::vector<int> e_src, e_dst, e_rel, e_graph;
    std::vector<int> type_ids(n_total);
    Tensor rho_col = Tensor::zeros({n_total, 1});
    for (size_t gi = 0; gi < inputs.size(); ++gi) {
        const WorkingGraph& wg = *inputs[gi].wg;
        int base = static_cast<int>(offset[gi]);
        for (size_t i = 0; i < wg.num_nodes(); ++i) {
            type_ids[offset[gi] + i] = static_cast<int>(wg.node_types[i]);
            rho_col.data()[offset[gi] + i] = wg.relevance[i];
        }
        for (const auto& e : wg.edges) {
            e_src.push_back(base + e.src);
            e_dst.push_back(base + e.dst);
            e_rel.push_back(e.rel);
            e_graph.push_back(static_cast<int>(gi));
        }
    }
    size_t n_edges = e_src.size();
    const std::vector<int>& groups =
        cfg_.attention_norm == AttentionNorm::outgoing ? e_src : e_dst;

    BatchNormMode bn_mode = cfg_.batch_norm_identity
                                ? BatchNormMode::identity
                                : (mode == RunMode::train ? BatchNormMode::train
                                                          : BatchNormMode::eval);
    bool use_dropout = mode == RunMode::train && cfg_.dropout > 0.0 && dropout_rng != nullptr;

    std::vector<AttentionRecord> records(inputs.size());
    if (opts.record_attention) {
        for (auto& r : records) r.layers.resize(cfg_.layers);
    }

    for (size_t l = 0; l < cfg_.layers; ++l) {
        const LayerParams& lp = layers_[l];

        // Node type embedding u and relevance embedding rho.
        Tensor u;
        if (cfg_.use_type_embedding) {
            u = tape.add_rowvec(tape.gather_rows(lp.f_u.W, type_ids), lp.f_u.b);
        } else {
            u = Tensor::zeros({n_total, half});
        }
        Tensor rho_emb;
        if (cfg_.use_relevance_in_attention) {
            rho_emb = lp.f_rho.apply(tape, rho_col);
        } else {
            rho_emb = Tensor::zeros({n_total, half});
        }

        // Relation embedding r_st from the relation/type one-hots, realized
        // as row lookups into the first MLP layer (no dense one-hot matrix).
        Tensor r;
        if (cfg_.use_relation_embedding) {
            Tensor l1 = tape.gather_rows(lp.f_r.l1.W, e_rel);
            if (cfg_.use_type_embedding) {
                std::vector<int> src_t(n_edges), dst_t(n_edges);
                for (size_t e = 0; e < n_edges; ++e) {
                    src_t[e] = num_wg_relations_ + type_ids[static_cast<size_t>(e_src[e])];
                    dst_t[e] = num_wg_relations_ + static_cast<int>(kNumNodeTypes) +
                               type_ids[static_cast<size_t>(e_dst[e])];
                }
                l1 = tape.add(l1, tape.gather_rows(lp.f_r.l1.W, src_t));
                l1 = tape.add(l1, tape.gather_rows(lp.f_r.l1.W, dst_t));
            }
            l1 = tape.add_rowvec(l1, lp.f_r.l1.b);
            r = lp.f_r.l2.apply(tape, tape.relu(l1));
        } else {
            r = Tensor::zeros({n_edges, d});
        }
        stats_.edge_feature_elements += r.numel();

        // Messages m_st = f_m(h_s, u_s, r_st).
        Tensor h_src = tape.gather_rows(h, e_src);
        Tensor u_src = tape.gather_rows(u, e_src);
        Tensor m_parts[3] = {h_src, u_src, r};
        Tensor m = lp.f_m.apply(tape, tape.concat_cols(m_parts));
        stats_.messages_computed += n_edges;
        stats_.edge_feature_elements += m.numel();

        // Attention: q per node, k per edge, gamma = q.k / sqrt(D).
        Tensor q_parts[3] = {h, u, rho_emb};
        Tensor q = lp.f_q.apply(tape, tape.concat_cols(q_parts));
        Tensor h_dst = tape.gather_rows(h, e_dst);
        Tensor u_dst = tape.gather_rows(u, e_dst);
        Tensor rho_dst = tape.gather_rows(rho_emb, e_dst);
        Tensor k_parts[4] = {h_dst, u_dst, rho_dst, r};
        Tensor k = lp.f_k.apply(tape, tape.concat_cols(k_parts));
        stats_.edge_feature_elements += k.numel();
        Tensor gamma = tape.scale(tape.rowwise_dot(tape.gather_rows(q, e_src), k),
                                  1.0 / std::sqrt(static_cast<double>(d)));
        Tensor alpha = tape.segment_softmax(gamma, groups, n_total);
        stats_.edge_feature_elements += gamma.numel() + alpha.numel();

        if (opts.record_attention) {
            for (size_t e = 0; e < n_edges; ++e) {
                size_t gi = static_cast<size_t>(e_graph[e]);
                int base = static_cast<int>(offset[gi]);
                records[gi].layers[l].push_back(
                    {e_src[e] - base, e_dst[e] - base, alpha.data()[e]});
            }
        }

        // Aggregate incoming messages, then f_n with residual.
        Tensor agg = tape.scatter_add_rows(tape.scale_rows(m, alpha), e_dst, n_total);
        Tensor fn = lp.f_n2.apply(
            tape, tape.relu(lp.f_n_bn.apply(tape, lp.f_n1.apply(tape, agg), bn_mode)));
        Tensor h_next = tape.add(fn, h);
        if (use_dropout) h_next = tape.dropout(h_next, cfg_.dropout, *dropout_rng);
        h = h_next;
    }

    for (size_t gi = 0; gi < inputs.size(); ++gi) {
        size_t begin = offset[gi], end = offset[gi + 1];
        GraphOutput& out = outputs[gi];
        out.z_gnn = tape.slice_rows(h, begin, begin + 1);
        size_t n_ent = end - begin - 1;
        if (n_ent == 0) {
            out.g = Tensor::zeros({1, d});
            out.degenerate_pool = true;
        } else {
            Tensor ent_rows = tape.slice_rows(h, begin + 1, end);
            if (cfg_.pooling == PoolingKind::mean) {
                out.g = tape.mean_rows(ent_rows);
            } else {
                Tensor p = pool_.apply(tape, z_lms[gi]);  // [1, D]
                Tensor p_rep = tape.gather_rows(p, std::vector<int>(n_ent, 0));
                Tensor w = tape.softmax_rows(tape.rowwise_dot(ent_rows, p_rep));
                out.g = tape.scatter_add_rows(tape.scale_rows(ent_rows, w),
                                              std::vector<int>(n_ent, 0), 1);
            }
        }
        Tensor head_parts[3] = {z_lms[gi], out.z_gnn, out.g};
        Tensor logit_row = head_.apply(tape, tape.concat_cols(head_parts));
        out.logit = tape.sum(logit_row);
        if (opts.record_attention) out.attention = std::move(records[gi]);
    }
    return outputs;
}

}  // namespace qagnn
