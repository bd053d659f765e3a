/*
 * C API for the qagnn engine: KG-grounded question answering with a
 * context-conditioned attention GNN. All functions return qagnn_status;
 * a human-readable message for the last failure on the calling thread is
 * available via qagnn_last_error(). Handles are opaque and must be released
 * with their matching destroy function.
 */
#ifndef QAGNN_H
#define QAGNN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qagnn_status {
    QAGNN_OK = 0,
    QAGNN_ERROR_USAGE = 1,   /* bad arguments or configuration */
    QAGNN_ERROR_DATA = 2,    /* unreadable or inconsistent inputs */
    QAGNN_ERROR_NUMERIC = 3, /* NaN/Inf detected during computation */
} qagnn_status;

const char* qagnn_version(void);

/* Thread-local message describing the most recent failure; empty string when
 * the last call on this thread succeeded. */
const char* qagnn_last_error(void);

/* ---- configuration ---------------------------------------------------- */

typedef struct qagnn_config qagnn_config;

qagnn_status qagnn_config_create(qagnn_config** out);
void qagnn_config_destroy(qagnn_config* cfg);
/* Merges a flat `key = value` file into the config. */
qagnn_status qagnn_config_load_file(qagnn_config* cfg, const char* path);
qagnn_status qagnn_config_set(qagnn_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated). Fails with QAGNN_ERROR_USAGE
 * when the key is absent or buf is too small. */
qagnn_status qagnn_config_get(const qagnn_config* cfg, const char* key, char* buf,
                              size_t buf_len);

/* ---- knowledge graph inspection --------------------------------------- */

typedef struct qagnn_kg qagnn_kg;

/* Loads an edge-list TSV (head<TAB>relation<TAB>tail). When
 * augment_inverses is nonzero every relation gains a paired inverse and
 * every edge a reversed copy, which is what the reasoning pipeline uses. */
qagnn_status qagnn_kg_load(const char* tsv_path, int augment_inverses, qagnn_kg** out);
void qagnn_kg_destroy(qagnn_kg* kg);

long long qagnn_kg_entity_count(const qagnn_kg* kg);
long long qagnn_kg_relation_count(const qagnn_kg* kg);
long long qagnn_kg_edge_count(const qagnn_kg* kg);
/* Returns the dense id for a name, or -1 when absent. */
long long qagnn_kg_entity_id(const qagnn_kg* kg, const char* name);
qagnn_status qagnn_kg_entity_name(const qagnn_kg* kg, long long id, char* buf, size_t buf_len);

/* ---- pipeline subcommands --------------------------------------------- */
/* Each driver reads every input and output path from the config; see the
 * project README for the key reference. Progress lines go to stdout. */

qagnn_status qagnn_run_gen(const qagnn_config* cfg);
qagnn_status qagnn_run_preprocess(const qagnn_config* cfg);
qagnn_status qagnn_run_train(const qagnn_config* cfg);
qagnn_status qagnn_run_eval(const qagnn_config* cfg);
qagnn_status qagnn_run_explain(const qagnn_config* cfg);

#ifdef __cplusplus
}
#endif

#endif /* QAGNN_H */
