#include "qagnn.h"

#include <cstring>
#include <functional>
#include <iostream>
#include <string>

#include "qagnn/config.hpp"
#include "qagnn/errors.hpp"
#include "qagnn/kg.hpp"
#include "qagnn/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

qagnn_status run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        g_last_error.clear();
        return QAGNN_OK;
    } catch (const qagnn::UsageError& e) {
        g_last_error = e.what();
        return QAGNN_ERROR_USAGE;
    } catch (const qagnn::NumericError& e) {
        g_last_error = e.what();
        return QAGNN_ERROR_NUMERIC;
    } catch (const qagnn::DataError& e) {
        g_last_error = e.what();
        return QAGNN_ERROR_DATA;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QAGNN_ERROR_DATA;
    }
}

qagnn_status copy_out(const std::string& value, char* buf, size_t buf_len) {
    if (!buf || buf_len == 0 || value.size() + 1 > buf_len) {
        g_last_error = "output buffer too small";
        return QAGNN_ERROR_USAGE;
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    g_last_error.clear();
    return QAGNN_OK;
}

}  // namespace

struct qagnn_config {
    qagnn::KvConfig kv;
};

struct qagnn_kg {
    qagnn::KnowledgeGraph graph;
};

extern "C" {

const char* qagnn_version(void) { return "1.0.0"; }

const char* qagnn_last_error(void) { return g_last_error.c_str(); }

qagnn_status qagnn_config_create(qagnn_config** out) {
    if (!out) {
        g_last_error = "null output pointer";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { *out = new qagnn_config(); });
}

void qagnn_config_destroy(qagnn_config* cfg) { delete cfg; }

qagnn_status qagnn_config_load_file(qagnn_config* cfg, const char* path) {
    if (!cfg || !path) {
        g_last_error = "null argument";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { cfg->kv.load_file(path); });
}

qagnn_status qagnn_config_set(qagnn_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value || !*key) {
        g_last_error = "null or empty argument";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { cfg->kv.set(key, value); });
}

qagnn_status qagnn_config_get(const qagnn_config* cfg, const char* key, char* buf,
                              size_t buf_len) {
    if (!cfg || !key) {
        g_last_error = "null argument";
        return QAGNN_ERROR_USAGE;
    }
    auto v = cfg->kv.get(key);
    if (!v) {
        g_last_error = std::string("unknown config key: ") + key;
        return QAGNN_ERROR_USAGE;
    }
    return copy_out(*v, buf, buf_len);
}

qagnn_status qagnn_kg_load(const char* tsv_path, int augment_inverses, qagnn_kg** out) {
    if (!tsv_path || !out) {
        g_last_error = "null argument";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] {
        auto g = qagnn::KnowledgeGraph::load_file(tsv_path);
        if (augment_inverses) g = qagnn::augment_inverse_edges(g);
        *out = new qagnn_kg{std::move(g)};
    });
}

void qagnn_kg_destroy(qagnn_kg* kg) { delete kg; }

long long qagnn_kg_entity_count(const qagnn_kg* kg) {
    return kg ? static_cast<long long>(kg->graph.num_entities()) : -1;
}

long long qagnn_kg_relation_count(const qagnn_kg* kg) {
    return kg ? static_cast<long long>(kg->graph.num_relations()) : -1;
}

long long qagnn_kg_edge_count(const qagnn_kg* kg) {
    return kg ? static_cast<long long>(kg->graph.num_edges()) : -1;
}

long long qagnn_kg_entity_id(const qagnn_kg* kg, const char* name) {
    if (!kg || !name) return -1;
    auto id = kg->graph.find_entity(name);
    return id ? static_cast<long long>(*id) : -1;
}

qagnn_status qagnn_kg_entity_name(const qagnn_kg* kg, long long id, char* buf, size_t buf_len) {
    if (!kg) {
        g_last_error = "null graph handle";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] {
        const std::string& name = kg->graph.entity_name(static_cast<qagnn::EntityId>(id));
        if (copy_out(name, buf, buf_len) != QAGNN_OK) {
            throw qagnn::UsageError(g_last_error);
        }
    });
}

qagnn_status qagnn_run_gen(const qagnn_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { qagnn::run_gen(cfg->kv, std::cout); });
}

qagnn_status qagnn_run_preprocess(const qagnn_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { qagnn::run_preprocess(cfg->kv, std::cout); });
}

qagnn_status qagnn_run_train(const qagnn_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { qagnn::run_train(cfg->kv, std::cout); });
}

qagnn_status qagnn_run_eval(const qagnn_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { qagnn::run_eval(cfg->kv, std::cout); });
}

qagnn_status qagnn_run_explain(const qagnn_config* cfg) {
    if (!cfg) {
        g_last_error = "null config";
        return QAGNN_ERROR_USAGE;
    }
    return run_guarded([&] { qagnn::run_explain(cfg->kv, std::cout); });
}

}  // extern "C"
