#include "qagnn/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "qagnn/checkpoint.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/explain.hpp"
#include "qagnn/model.hpp"
#include "qagnn/retrieval.hpp"
#include "qagnn/tasks.hpp"

namespace fs = std::filesystem;

namespace qagnn {

namespace {

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("graph cache: truncated file");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    uint32_t len = read_pod<uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw DataError("graph cache: truncated file");
    return s;
}

void validate_keys(const KvConfig& cfg, const std::set<std::string>& allowed,
                   const char* subcommand) {
    for (const auto& key : cfg.keys()) {
        if (!allowed.count(key) && key != "subcommand") {
            throw UsageError(std::string("unknown option for ") + subcommand + ": " + key);
        }
    }
}

const std::set<std::string> kModelKeys = {
    "hidden_dim", "layers",         "dropout",           "d_lm",
    "entity_dim", "pooling",        "attention_norm",    "bn_identity",
    "no_relevance", "no_type_embedding", "no_relation_embedding",
};

const std::set<std::string> kAblationGraphKeys = {"no_z_edges", "z_to_all"};

std::string out_path(const KvConfig& cfg, const std::string& name) {
    return (fs::path(cfg.require_string("out")) / name).string();
}

void write_manifest(const KvConfig& cfg, const std::string& subcommand,
                    const std::string& path) {
    KvConfig manifest;
    manifest.set("subcommand", subcommand);
    for (const auto& key : cfg.keys()) {
        if (key != "subcommand") manifest.set(key, *cfg.get(key));
    }
    if (!manifest.has("seed")) manifest.set("seed", std::to_string(resolve_seed(cfg)));
    manifest.save_file(path);
}

struct LoadedModel {
    std::unique_ptr<Model> model;
    TokenVocab vocab;
    GraphCache cache;
    std::unique_ptr<EntityEmbeddings> frozen;
    std::unique_ptr<KnowledgeGraph> kg;
};

ModelConfig parse_model_config(const KvConfig& cfg) {
    ModelConfig mc;
    mc.hidden_dim = static_cast<size_t>(cfg.get_int("hidden_dim", 200));
    mc.layers = static_cast<size_t>(cfg.get_int("layers", 5));
    mc.dropout = cfg.get_double("dropout", 0.2);
    mc.d_lm = static_cast<size_t>(cfg.get_int("d_lm", static_cast<long>(mc.hidden_dim)));
    mc.entity_dim = static_cast<size_t>(cfg.get_int("entity_dim", 0));
    mc.use_relevance_in_attention = !cfg.get_bool("no_relevance", false);
    mc.use_type_embedding = !cfg.get_bool("no_type_embedding", false);
    mc.use_relation_embedding = !cfg.get_bool("no_relation_embedding", false);
    mc.pooling = parse_pooling(cfg.get_string("pooling", "attention"));
    mc.attention_norm = parse_attention_norm(cfg.get_string("attention_norm", "outgoing"));
    mc.batch_norm_identity = cfg.get_bool("bn_identity", false);
    mc.validate();
    return mc;
}

}  // namespace

ModelConfig model_config_from_kv(const KvConfig& cfg) { return parse_model_config(cfg); }

void GraphCache::save(std::ostream& out) const {
    out.write("QGWC", 4);
    write_pod<uint8_t>(out, kVersion);
    write_pod<int32_t>(out, num_kg_relations);
    write_pod<int32_t>(out, num_kg_base_relations);
    write_pod<uint64_t>(out, num_entities);
    write_pod<uint32_t>(out, static_cast<uint32_t>(entries.size()));
    for (const auto& entry : entries) {
        write_string(out, entry.id);
        write_pod<int32_t>(out, entry.answer_index);
        write_pod<uint32_t>(out, static_cast<uint32_t>(entry.graphs.size()));
        for (const auto& wg : entry.graphs) {
            write_pod<uint32_t>(out, static_cast<uint32_t>(wg.context_tokens.size()));
            for (const auto& t : wg.context_tokens) write_string(out, t);
            write_pod<uint32_t>(out, static_cast<uint32_t>(wg.num_nodes()));
            for (size_t i = 0; i < wg.num_nodes(); ++i) {
                write_pod<int32_t>(out, wg.node_entity[i]);
                write_pod<uint8_t>(out, static_cast<uint8_t>(wg.node_types[i]));
                write_pod<double>(out, wg.relevance[i]);
            }
            write_pod<uint32_t>(out, static_cast<uint32_t>(wg.edges.size()));
            for (const auto& e : wg.edges) {
                write_pod<int32_t>(out, e.src);
                write_pod<int32_t>(out, e.rel);
                write_pod<int32_t>(out, e.dst);
            }
        }
    }
    if (!out) throw DataError("graph cache: write failed");
}

void GraphCache::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open cache for writing: " + path);
    save(out);
}

GraphCache GraphCache::load(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "QGWC", 4) != 0) throw DataError("graph cache: bad magic");
    if (read_pod<uint8_t>(in) != kVersion) throw DataError("graph cache: unsupported version");
    GraphCache cache;
    cache.num_kg_relations = read_pod<int32_t>(in);
    cache.num_kg_base_relations = read_pod<int32_t>(in);
    cache.num_entities = read_pod<uint64_t>(in);
    uint32_t n_entries = read_pod<uint32_t>(in);
    cache.entries.resize(n_entries);
    for (auto& entry : cache.entries) {
        entry.id = read_string(in);
        entry.answer_index = read_pod<int32_t>(in);
        uint32_t n_graphs = read_pod<uint32_t>(in);
        entry.graphs.resize(n_graphs);
        for (uint32_t gi = 0; gi < n_graphs; ++gi) {
            WorkingGraph& wg = entry.graphs[gi];
            wg.example_id = entry.id;
            wg.choice_index = static_cast<int>(gi);
            wg.num_kg_relations = cache.num_kg_relations;
            wg.num_kg_base_relations = cache.num_kg_base_relations;
            uint32_t n_tokens = read_pod<uint32_t>(in);
            wg.context_tokens.resize(n_tokens);
            for (auto& t : wg.context_tokens) t = read_string(in);
            uint32_t n_nodes = read_pod<uint32_t>(in);
            wg.node_entity.resize(n_nodes);
            wg.node_types.resize(n_nodes);
            wg.relevance.resize(n_nodes);
            for (uint32_t i = 0; i < n_nodes; ++i) {
                wg.node_entity[i] = read_pod<int32_t>(in);
                wg.node_types[i] = static_cast<NodeType>(read_pod<uint8_t>(in));
                wg.relevance[i] = read_pod<double>(in);
            }
            uint32_t n_edges = read_pod<uint32_t>(in);
            wg.edges.resize(n_edges);
            for (auto& e : wg.edges) {
                e.src = read_pod<int32_t>(in);
                e.rel = read_pod<int32_t>(in);
                e.dst = read_pod<int32_t>(in);
            }
        }
    }
    return cache;
}

GraphCache GraphCache::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open cache: " + path);
    return load(in);
}

ZlmTable ZlmTable::load(std::istream& in) {
    ZlmTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw DataError("z^LM line " + std::to_string(lineno) +
                            ": expected example_id<TAB>choice<TAB>values");
        }
        std::string id = line.substr(0, t1);
        int choice = 0;
        try {
            choice = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
        } catch (const std::exception&) {
            throw DataError("z^LM line " + std::to_string(lineno) + ": bad choice index");
        }
        std::vector<double> vals;
        std::istringstream vs(line.substr(t2 + 1));
        double x;
        while (vs >> x) vals.push_back(x);
        if (vals.empty() || !vs.eof()) {
            throw DataError("z^LM line " + std::to_string(lineno) + ": bad vector");
        }
        if (table.dim == 0) table.dim = vals.size();
        if (vals.size() != table.dim) {
            throw DataError("z^LM line " + std::to_string(lineno) + ": dimension mismatch");
        }
        table.vectors[{id, choice}] = std::move(vals);
    }
    return table;
}

ZlmTable ZlmTable::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open z^LM file: " + path);
    return load(in);
}

OutputDirLock::OutputDirLock(const std::string& dir) {
    fs::create_directories(dir);
    path_ = (fs::path(dir) / ".qagnn.lock").string();
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw DataError("output directory is locked by another run: " + dir);
    }
    ::close(fd);
}

OutputDirLock::~OutputDirLock() { ::unlink(path_.c_str()); }

uint64_t resolve_seed(const KvConfig& cfg) {
    if (cfg.has("seed")) return static_cast<uint64_t>(cfg.get_int("seed", 0));
    if (const char* env = std::getenv("WORKGRAPH_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError(std::string("WORKGRAPH_SEED is not an integer: ") + env);
        }
    }
    return 0;
}

GraphCache preprocess_dataset(const KnowledgeGraph& kg, const std::vector<QAExample>& examples,
                              const RelevanceScorer& scorer, int k, size_t max_nodes,
                              PreprocessStats* stats) {
    if (!kg.augmented()) throw UsageError("preprocess requires an inverse-augmented KG");
    EntityMatcher matcher(kg);
    GraphCache cache;
    cache.num_kg_relations = static_cast<int>(kg.num_relations());
    cache.num_kg_base_relations = static_cast<int>(kg.num_base_relations());
    cache.num_entities = kg.num_entities();

    PreprocessStats st;
    double sum_sub = 0.0, sum_kept = 0.0, sum_edges = 0.0;
    for (const auto& ex : examples) {
        GraphCache::Entry entry;
        entry.id = ex.id;
        entry.answer_index = ex.answer_index;
        auto q_tokens = tokenize(ex.question);
        for (size_t c = 0; c < ex.choices.size(); ++c) {
            auto c_tokens = tokenize(ex.choices[c]);
            std::vector<std::string> context = q_tokens;
            context.insert(context.end(), c_tokens.begin(), c_tokens.end());
            TopicEntities topics = link_entities(q_tokens, c_tokens, matcher);

            Subgraph sub;
            if (topics.empty()) {
                sub.origin = &kg;
                ++st.no_topic_graphs;
            } else {
                sub = retrieve_subgraph(kg, topics, k);
            }
            auto scores = scorer.score_subgraph(context, sub);
            Subgraph pruned = prune_subgraph(sub, scores, std::max(max_nodes, sub.topics.size()));
            if (pruned.nodes.size() < sub.nodes.size()) ++st.pruned_graphs;
            WorkingGraph wg = build_working_graph(pruned, topics, scores, ex.id,
                                                  static_cast<int>(c), context);
            sum_sub += static_cast<double>(sub.nodes.size());
            sum_kept += static_cast<double>(pruned.nodes.size());
            sum_edges += static_cast<double>(wg.edges.size());
            ++st.graphs;
            entry.graphs.push_back(std::move(wg));
        }
        cache.entries.push_back(std::move(entry));
    }
    if (st.graphs > 0) {
        st.mean_subgraph_nodes = sum_sub / static_cast<double>(st.graphs);
        st.mean_kept_nodes = sum_kept / static_cast<double>(st.graphs);
        st.mean_edges = sum_edges / static_cast<double>(st.graphs);
    }
    if (stats) *stats = st;
    return cache;
}

TokenVocab build_token_vocab(const GraphCache& cache) {
    TokenVocab vocab;
    for (const auto& entry : cache.entries) {
        for (const auto& wg : entry.graphs) {
            for (const auto& t : wg.context_tokens) vocab.add(t);
        }
    }
    return vocab;
}

std::vector<TrainExample> to_train_examples(const GraphCache& cache, const TokenVocab& vocab,
                                            const ZlmTable* zlm, bool no_z_edges,
                                            bool z_to_all) {
    if (no_z_edges && z_to_all) {
        throw UsageError("no_z_edges and z_to_all are mutually exclusive");
    }
    std::vector<TrainExample> out;
    out.reserve(cache.entries.size());
    for (const auto& entry : cache.entries) {
        TrainExample ex;
        ex.id = entry.id;
        ex.answer_index = entry.answer_index;
        for (size_t c = 0; c < entry.graphs.size(); ++c) {
            WorkingGraph wg = entry.graphs[c];
            if (no_z_edges) wg = drop_z_edges(wg);
            if (z_to_all) wg = connect_z_to_all(wg);
            ex.choice_token_ids.push_back(vocab.encode(wg.context_tokens));
            ex.choice_graphs.push_back(std::move(wg));
            if (zlm) {
                auto it = zlm->vectors.find({entry.id, static_cast<int>(c)});
                if (it == zlm->vectors.end()) {
                    throw DataError("z^LM table is missing example " + entry.id + " choice " +
                                    std::to_string(c));
                }
                ex.choice_zlm.emplace_back(it->second);
            } else {
                ex.choice_zlm.emplace_back(std::nullopt);
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void run_gen(const KvConfig& cfg, std::ostream& log) {
    validate_keys(cfg,
                  {"task", "out", "seed", "n", "m", "p", "count", "test_count", "config"},
                  "gen");
    std::string task = cfg.require_string("task");
    OutputDirLock lock(cfg.require_string("out"));
    uint64_t seed = resolve_seed(cfg);
    size_t n = static_cast<size_t>(cfg.get_int("n", 50));
    size_t m = static_cast<size_t>(cfg.get_int("m", 3));
    double p = cfg.get_double("p", 0.05);
    size_t count = static_cast<size_t>(cfg.get_int("count", 25));
    size_t test_count = static_cast<size_t>(cfg.get_int("test_count", 0));

    ToyKG kg = gen_toy_kg(n, m, p, seed);
    {
        std::ofstream kg_out(out_path(cfg, "kg.tsv"));
        if (!kg_out) throw DataError("cannot write kg.tsv");
        kg.to_tsv(kg_out);
    }

    if (task == "logical") {
        LogicalQueryOptions opts;
        for (auto pattern : {LogicalPattern::one_hop, LogicalPattern::two_hop,
                             LogicalPattern::conjunction, LogicalPattern::negated_conjunction}) {
            opts.counts[pattern] = count + test_count;
        }
        auto queries = gen_logical_queries(kg, opts, seed + 1);
        std::vector<QAExample> train_set, test_set;
        std::map<LogicalPattern, size_t> emitted;
        for (const auto& q : queries) {
            size_t idx = emitted[q.pattern]++;
            std::string id = std::string(logical_pattern_name(q.pattern)) + "_" +
                             std::to_string(idx);
            if (idx < count) {
                train_set.push_back(q.to_example(kg, id));
            } else {
                test_set.push_back(q.to_example(kg, id));
            }
        }
        save_examples_file(out_path(cfg, "queries.jsonl"), train_set);
        if (test_count > 0) save_examples_file(out_path(cfg, "test.jsonl"), test_set);
        log << "gen: wrote " << train_set.size() << " queries";
        if (test_count > 0) log << " + " << test_set.size() << " test queries";
        log << " over a " << kg.n << "-entity toy KG (" << kg.edges.size() << " edges)\n";
    } else if (task == "negation") {
        auto ds = gen_negation_qa(kg, count + test_count, seed + 1);
        std::vector<QAExample> train_set, test_set;
        for (const auto& ex : ds.examples) {
            // Ids are neg<i>_pos / _neg / _sub; pairs stay within one split.
            size_t pair_idx = std::stoul(ex.id.substr(3, ex.id.find('_') - 3));
            (pair_idx < count ? train_set : test_set).push_back(ex);
        }
        save_examples_file(out_path(cfg, "negation.jsonl"), train_set);
        if (test_count > 0) save_examples_file(out_path(cfg, "test.jsonl"), test_set);
        log << "gen: wrote " << ds.pairs << " negation pairs (" << ds.substitutions
            << " substitution variants)\n";
    } else {
        throw UsageError("unknown gen task: " + task + " (expected logical or negation)");
    }
    write_manifest(cfg, "gen", out_path(cfg, "gen_manifest.txt"));
}

void run_preprocess(const KvConfig& cfg, std::ostream& log) {
    validate_keys(cfg,
                  {"kg", "dataset", "out", "scorer", "scores", "hop_k", "max_nodes", "seed",
                   "config"},
                  "preprocess");
    OutputDirLock lock(cfg.require_string("out"));
    KnowledgeGraph kg = augment_inverse_edges(KnowledgeGraph::load_file(
        cfg.require_string("kg")));
    auto examples = load_examples_file(cfg.require_string("dataset"));
    if (examples.empty()) throw DataError("dataset is empty");

    ScorerKind kind = parse_scorer_kind(cfg.get_string("scorer", "overlap"));
    ExternalScores external;
    if (kind == ScorerKind::external_file) {
        external = ExternalScores::load_file(cfg.require_string("scores"), kg);
    }
    RelevanceScorer scorer(kind, std::move(external));

    int k = static_cast<int>(cfg.get_int("hop_k", 2));
    size_t max_nodes = static_cast<size_t>(cfg.get_int("max_nodes", 200));

    PreprocessStats stats;
    GraphCache cache = preprocess_dataset(kg, examples, scorer, k, max_nodes, &stats);
    cache.save_file(out_path(cfg, "graphs.cache"));

    std::ofstream st(out_path(cfg, "preprocess_stats.txt"));
    st << "graphs = " << stats.graphs << "\n"
       << "mean_subgraph_nodes = " << stats.mean_subgraph_nodes << "\n"
       << "mean_kept_nodes = " << stats.mean_kept_nodes << "\n"
       << "mean_edges = " << stats.mean_edges << "\n"
       << "pruned_graphs = " << stats.pruned_graphs << "\n"
       << "no_topic_graphs = " << stats.no_topic_graphs << "\n";
    write_manifest(cfg, "preprocess", out_path(cfg, "preprocess_manifest.txt"));
    log << "preprocess: " << stats.graphs << " graphs, mean |V_sub| "
        << stats.mean_subgraph_nodes << ", mean kept " << stats.mean_kept_nodes
        << ", mean edges " << stats.mean_edges << "\n";
}

namespace {

std::set<std::string> train_eval_keys() {
    std::set<std::string> keys = {"cache",   "dev_cache", "out",          "kg",
                                  "embeddings", "zlm",    "checkpoint",   "vocab",
                                  "batch_size", "lr_encoder", "lr_gnn",   "epochs",
                                  "grad_clip",  "seed",   "encoder_only", "verbose",
                                  "hit",        "config", "example",      "choice",
                                  "trace_types", "top_b", "min_alpha",    "trace_layer"};
    keys.insert(kModelKeys.begin(), kModelKeys.end());
    keys.insert(kAblationGraphKeys.begin(), kAblationGraphKeys.end());
    return keys;
}

LoadedModel load_model_for_inference(const KvConfig& cfg) {
    LoadedModel lm;
    lm.cache = GraphCache::load_file(cfg.require_string("cache"));
    std::string ckpt = cfg.require_string("checkpoint");
    std::string vocab_path = cfg.get_string(
        "vocab", (fs::path(ckpt).parent_path() / "token_vocab.txt").string());
    std::ifstream vin(vocab_path);
    if (!vin) throw DataError("cannot open token vocab: " + vocab_path);
    lm.vocab = TokenVocab::load(vin);

    if (cfg.has("embeddings")) {
        lm.kg = std::make_unique<KnowledgeGraph>(
            augment_inverse_edges(KnowledgeGraph::load_file(cfg.require_string("kg"))));
        lm.frozen = std::make_unique<EntityEmbeddings>(
            EntityEmbeddings::load_file(*cfg.get("embeddings"), *lm.kg));
    }
    ModelConfig mc = parse_model_config(cfg);
    lm.model = std::make_unique<Model>(mc, lm.cache.num_kg_relations + 5,
                                       static_cast<size_t>(lm.cache.num_entities),
                                       lm.vocab.size(), 0, lm.frozen.get());
    checkpoint::load_file(ckpt, lm.model->params());
    return lm;
}

std::vector<int> parse_hit_ks(const std::string& spec) {
    std::vector<int> ks;
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            int k = std::stoi(item);
            if (k < 1) throw std::invalid_argument(item);
            ks.push_back(k);
        } catch (const std::exception&) {
            throw UsageError("bad hit@k list: " + spec);
        }
    }
    return ks;
}

}  // namespace

void run_train(const KvConfig& cfg, std::ostream& log) {
    validate_keys(cfg, train_eval_keys(), "train");
    OutputDirLock lock(cfg.require_string("out"));
    GraphCache cache = GraphCache::load_file(cfg.require_string("cache"));
    if (cache.entries.empty()) throw DataError("training cache is empty");

    TokenVocab vocab = build_token_vocab(cache);
    std::unique_ptr<ZlmTable> zlm;
    if (cfg.has("zlm")) zlm = std::make_unique<ZlmTable>(ZlmTable::load_file(*cfg.get("zlm")));

    bool no_z_edges = cfg.get_bool("no_z_edges", false);
    bool z_to_all = cfg.get_bool("z_to_all", false);
    auto train_set = to_train_examples(cache, vocab, zlm.get(), no_z_edges, z_to_all);

    std::vector<TrainExample> dev_set;
    if (cfg.has("dev_cache")) {
        GraphCache dev_cache = GraphCache::load_file(*cfg.get("dev_cache"));
        dev_set = to_train_examples(dev_cache, vocab, zlm.get(), no_z_edges, z_to_all);
    } else {
        dev_set = train_set;
    }

    std::unique_ptr<KnowledgeGraph> kg;
    std::unique_ptr<EntityEmbeddings> frozen;
    if (cfg.has("embeddings")) {
        kg = std::make_unique<KnowledgeGraph>(
            augment_inverse_edges(KnowledgeGraph::load_file(cfg.require_string("kg"))));
        frozen = std::make_unique<EntityEmbeddings>(
            EntityEmbeddings::load_file(*cfg.get("embeddings"), *kg));
    }

    TrainConfig tc;
    tc.batch_size = static_cast<size_t>(cfg.get_int("batch_size", 32));
    tc.lr_encoder = cfg.get_double("lr_encoder", 1e-3);
    tc.lr_gnn = cfg.get_double("lr_gnn", 1e-3);
    tc.epochs = static_cast<size_t>(cfg.get_int("epochs", 50));
    tc.seed = resolve_seed(cfg);
    tc.grad_clip_norm = cfg.get_double("grad_clip", 0.0);

    ModelConfig mc = parse_model_config(cfg);
    Model model(mc, cache.num_kg_relations + 5, static_cast<size_t>(cache.num_entities),
                vocab.size(), tc.seed, frozen.get());

    {
        std::ofstream vout(out_path(cfg, "token_vocab.txt"));
        if (!vout) throw DataError("cannot write token vocab");
        vocab.save(vout);
    }
    bool encoder_only = cfg.get_bool("encoder_only", false);
    auto result = train(model, train_set, dev_set, tc, out_path(cfg, "best.ckpt"),
                        out_path(cfg, "loss_curve.csv"), encoder_only,
                        !cfg.get_bool("verbose", false));
    write_manifest(cfg, "train", out_path(cfg, "train_manifest.txt"));
    log << "train: best dev accuracy " << result.best_dev_accuracy << " at epoch "
        << result.best_epoch << " (" << result.curve.size() << " epochs)\n";
}

void run_eval(const KvConfig& cfg, std::ostream& log) {
    validate_keys(cfg, train_eval_keys(), "eval");
    OutputDirLock lock(cfg.require_string("out"));
    LoadedModel lm = load_model_for_inference(cfg);

    std::unique_ptr<ZlmTable> zlm;
    if (cfg.has("zlm")) zlm = std::make_unique<ZlmTable>(ZlmTable::load_file(*cfg.get("zlm")));
    auto dataset = to_train_examples(lm.cache, lm.vocab, zlm.get(),
                                     cfg.get_bool("no_z_edges", false),
                                     cfg.get_bool("z_to_all", false));
    auto ks = parse_hit_ks(cfg.get_string("hit", "1"));
    auto report = evaluate(*lm.model, dataset, ks, cfg.get_bool("encoder_only", false));

    std::ofstream csv(out_path(cfg, "eval_report.csv"));
    csv << "id,gold,predicted,gold_rank,logits\n";
    for (const auto& rec : report.per_example) {
        csv << rec.id << ',' << rec.gold << ',' << rec.predicted << ',' << rec.gold_rank << ',';
        for (size_t i = 0; i < rec.logits.size(); ++i) {
            if (i) csv << ' ';
            csv << rec.logits[i];
        }
        csv << '\n';
    }
    std::ostringstream summary;
    summary << "examples = " << report.per_example.size() << "\n";
    summary << "accuracy = " << report.accuracy << "\n";
    for (const auto& [k, v] : report.hit_at_k) {
        summary << "hit@" << k << " = " << v << "\n";
    }
    std::ofstream st(out_path(cfg, "eval_summary.txt"));
    st << summary.str();
    write_manifest(cfg, "eval", out_path(cfg, "eval_manifest.txt"));
    log << summary.str();
}

void run_explain(const KvConfig& cfg, std::ostream& log) {
    validate_keys(cfg, train_eval_keys(), "explain");
    OutputDirLock lock(cfg.require_string("out"));
    LoadedModel lm = load_model_for_inference(cfg);
    if (!cfg.has("kg")) throw UsageError("explain requires the kg option for node labels");
    KnowledgeGraph kg =
        augment_inverse_edges(KnowledgeGraph::load_file(cfg.require_string("kg")));

    std::string example = cfg.require_string("example");
    size_t entry_idx = lm.cache.entries.size();
    for (size_t i = 0; i < lm.cache.entries.size(); ++i) {
        if (lm.cache.entries[i].id == example) {
            entry_idx = i;
            break;
        }
    }
    if (entry_idx == lm.cache.entries.size()) {
        try {
            entry_idx = static_cast<size_t>(std::stoul(example));
        } catch (const std::exception&) {
            throw DataError("example not found in cache: " + example);
        }
        if (entry_idx >= lm.cache.entries.size()) {
            throw DataError("example index out of range: " + example);
        }
    }
    int choice = static_cast<int>(cfg.get_int("choice", 0));
    const auto& entry = lm.cache.entries[entry_idx];
    if (choice < 0 || static_cast<size_t>(choice) >= entry.graphs.size()) {
        throw UsageError("choice index out of range");
    }

    WorkingGraph wg = entry.graphs[static_cast<size_t>(choice)];
    if (cfg.get_bool("no_z_edges", false)) wg = drop_z_edges(wg);
    if (cfg.get_bool("z_to_all", false)) wg = connect_z_to_all(wg);

    GraphInput input;
    input.wg = &wg;
    input.token_ids = lm.vocab.encode(wg.context_tokens);
    Tape tape;
    ForwardOptions opts;
    opts.record_attention = true;
    auto outs = lm.model->forward(tape, std::span<const GraphInput>(&input, 1), RunMode::eval,
                                  nullptr, opts);

    TraceOptions topts;
    topts.top_b = static_cast<size_t>(cfg.get_int("top_b", 2));
    topts.min_alpha = cfg.get_double("min_alpha", 0.1);
    topts.layer = static_cast<int>(cfg.get_int("trace_layer", -1));
    if (cfg.has("trace_types")) {
        std::istringstream ss(*cfg.get("trace_types"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "Q" || item == "q") topts.directions.push_back(NodeType::Q);
            else if (item == "A" || item == "a") topts.directions.push_back(NodeType::A);
            else if (item == "O" || item == "o") topts.directions.push_back(NodeType::O);
            else if (item == "Z" || item == "z") topts.directions.push_back(NodeType::Z);
            else throw UsageError("bad trace_types entry: " + item);
        }
    }
    auto trace = trace_attention(outs[0].attention, wg, topts);
    std::string dot = export_dot(wg, trace, &kg, &outs[0].attention, topts.layer);
    std::string dot_path = out_path(cfg, entry.id + "_choice" + std::to_string(choice) + ".dot");
    std::ofstream dout(dot_path);
    if (!dout) throw DataError("cannot write DOT file");
    dout << dot;
    write_manifest(cfg, "explain", out_path(cfg, "explain_manifest.txt"));
    log << "explain: wrote " << dot_path << " (" << trace.steps.size()
        << " trace steps, logit " << outs[0].logit.value() << ")\n";
}

}  // namespace qagnn
