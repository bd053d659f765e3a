// Command-line front end for the qagnn shared library. Every subcommand
// maps its flags onto config keys and hands off to the C API.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qagnn.h"

namespace {

struct ConfigHandle {
    qagnn_config* cfg = nullptr;
    ConfigHandle() { qagnn_config_create(&cfg); }
    ~ConfigHandle() { qagnn_config_destroy(cfg); }
};

int finish(qagnn_status status) {
    if (status != QAGNN_OK) {
        std::fprintf(stderr, "error: %s\n", qagnn_last_error());
    }
    return static_cast<int>(status);
}

// Flags staged as strings; only flags the user passed reach the config so
// --config file values stay in effect unless overridden.
struct Staged {
    std::map<std::string, std::string> values;
    std::string config_file;

    qagnn_status apply(qagnn_config* cfg) const {
        if (!config_file.empty()) {
            qagnn_status s = qagnn_config_load_file(cfg, config_file.c_str());
            if (s != QAGNN_OK) return s;
        }
        for (const auto& [key, value] : values) {
            qagnn_status s = qagnn_config_set(cfg, key.c_str(), value.c_str());
            if (s != QAGNN_OK) return s;
        }
        return QAGNN_OK;
    }
};

void add_option(CLI::App* cmd, Staged& staged, const std::string& flag, const std::string& key,
                const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&staged, key](const std::string& v) { staged.values[key] = v; }, help);
}

void add_flag(CLI::App* cmd, Staged& staged, const std::string& flag, const std::string& key,
              const std::string& help) {
    cmd->add_flag_callback(
        flag, [&staged, key]() { staged.values[key] = "true"; }, help);
}

void add_common(CLI::App* cmd, Staged& staged) {
    cmd->add_option("--config", staged.config_file, "flat key = value config file");
    add_option(cmd, staged, "--out", "out", "output directory");
    add_option(cmd, staged, "--seed", "seed", "RNG seed (WORKGRAPH_SEED is the fallback)");
}

void add_model_options(CLI::App* cmd, Staged& staged) {
    add_option(cmd, staged, "--hidden-dim", "hidden_dim", "GNN hidden width D (default 200)");
    add_option(cmd, staged, "--layers", "layers", "GNN layer count L (default 5)");
    add_option(cmd, staged, "--dropout", "dropout", "dropout rate (default 0.2)");
    add_option(cmd, staged, "--d-lm", "d_lm", "context encoder width (default = hidden dim)");
    add_option(cmd, staged, "--entity-dim", "entity_dim", "learned entity embedding width");
    add_option(cmd, staged, "--pooling", "pooling", "attention | mean");
    add_option(cmd, staged, "--attention-norm", "attention_norm", "outgoing | incoming");
    add_flag(cmd, staged, "--bn-identity", "bn_identity", "replace batch norm with identity");
    add_flag(cmd, staged, "--encoder-only", "encoder_only", "no-GNN baseline");
    cmd->add_option_function<std::vector<std::string>>(
        "--ablate",
        [&staged](const std::vector<std::string>& names) {
            for (const auto& n : names) staged.values[n] = "true";
        },
        "ablation switches: no_z_edges z_to_all no_relevance no_type_embedding "
        "no_relation_embedding");
}

void add_inference_options(CLI::App* cmd, Staged& staged) {
    add_option(cmd, staged, "--cache", "cache", "preprocessed graph cache");
    add_option(cmd, staged, "--checkpoint", "checkpoint", "model checkpoint");
    add_option(cmd, staged, "--vocab", "vocab", "token vocab (default: next to checkpoint)");
    add_option(cmd, staged, "--kg", "kg", "edge-list TSV");
    add_option(cmd, staged, "--embeddings", "embeddings", "entity embedding TSV");
    add_option(cmd, staged, "--zlm", "zlm", "external per-example context vectors");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qagnn: joint reasoning over QA contexts and knowledge graphs"};
    app.require_subcommand(1);

    Staged gen_s, pre_s, train_s, eval_s, explain_s;

    CLI::App* gen = app.add_subcommand("gen", "generate a toy KG and synthetic datasets");
    add_common(gen, gen_s);
    add_option(gen, gen_s, "--task", "task", "logical | negation");
    add_option(gen, gen_s, "--n", "n", "toy KG entity count (default 50)");
    add_option(gen, gen_s, "--m", "m", "toy KG relation count (default 3)");
    add_option(gen, gen_s, "--p", "p", "edge probability (default 0.05)");
    add_option(gen, gen_s, "--count", "count",
               "queries per pattern, or negation pair count (default 25)");
    add_option(gen, gen_s, "--test-count", "test_count", "extra held-out examples");

    CLI::App* pre = app.add_subcommand("preprocess", "build working-graph caches");
    add_common(pre, pre_s);
    add_option(pre, pre_s, "--kg", "kg", "edge-list TSV");
    add_option(pre, pre_s, "--dataset", "dataset", "question records (JSONL)");
    add_option(pre, pre_s, "--scorer", "scorer", "overlap | external | constant");
    add_option(pre, pre_s, "--scores", "scores", "external relevance score TSV");
    add_option(pre, pre_s, "--hop-k", "hop_k", "retrieval hop count (default 2)");
    add_option(pre, pre_s, "--max-nodes", "max_nodes", "pruning budget (default 200)");

    CLI::App* train = app.add_subcommand("train", "train a model on a graph cache");
    add_common(train, train_s);
    add_inference_options(train, train_s);
    add_model_options(train, train_s);
    add_option(train, train_s, "--dev-cache", "dev_cache", "dev-set cache");
    add_option(train, train_s, "--batch-size", "batch_size", "questions per batch");
    add_option(train, train_s, "--lr-encoder", "lr_encoder", "encoder learning rate");
    add_option(train, train_s, "--lr-gnn", "lr_gnn", "GNN learning rate");
    add_option(train, train_s, "--epochs", "epochs", "epoch count");
    add_option(train, train_s, "--grad-clip", "grad_clip", "global gradient norm bound");
    add_flag(train, train_s, "--verbose", "verbose", "per-epoch progress lines");

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(ev, eval_s);
    add_inference_options(ev, eval_s);
    add_model_options(ev, eval_s);
    add_option(ev, eval_s, "--hit", "hit", "comma-separated Hit@k list, e.g. 1,3");

    CLI::App* ex = app.add_subcommand("explain", "export an attention-trace DOT file");
    add_common(ex, explain_s);
    add_inference_options(ex, explain_s);
    add_model_options(ex, explain_s);
    add_option(ex, explain_s, "--example", "example", "example id or index");
    add_option(ex, explain_s, "--choice", "choice", "choice index (default 0)");
    add_option(ex, explain_s, "--trace-types", "trace_types",
               "allowed node type per depth, e.g. Q,O");
    add_option(ex, explain_s, "--top-b", "top_b", "branching bound (default 2)");
    add_option(ex, explain_s, "--min-alpha", "min_alpha", "attention floor (default 0.1)");
    add_option(ex, explain_s, "--trace-layer", "trace_layer", "layer to trace (default last)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(QAGNN_ERROR_USAGE);
    }

    ConfigHandle handle;
    if (!handle.cfg) {
        std::fprintf(stderr, "error: could not allocate config\n");
        return static_cast<int>(QAGNN_ERROR_DATA);
    }

    if (gen->parsed()) {
        qagnn_status s = gen_s.apply(handle.cfg);
        return finish(s == QAGNN_OK ? qagnn_run_gen(handle.cfg) : s);
    }
    if (pre->parsed()) {
        qagnn_status s = pre_s.apply(handle.cfg);
        return finish(s == QAGNN_OK ? qagnn_run_preprocess(handle.cfg) : s);
    }
    if (train->parsed()) {
        qagnn_status s = train_s.apply(handle.cfg);
        return finish(s == QAGNN_OK ? qagnn_run_train(handle.cfg) : s);
    }
    if (ev->parsed()) {
        qagnn_status s = eval_s.apply(handle.cfg);
        return finish(s == QAGNN_OK ? qagnn_run_eval(handle.cfg) : s);
    }
    if (ex->parsed()) {
        qagnn_status s = explain_s.apply(handle.cfg);
        return finish(s == QAGNN_OK ? qagnn_run_explain(handle.cfg) : s);
    }
    return static_cast<int>(QAGNN_ERROR_USAGE);
}
