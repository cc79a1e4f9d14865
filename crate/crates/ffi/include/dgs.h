#ifndef DGS_H
#define DGS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DgsStatus {
  DGS_STATUS_OK = 0,
  DGS_STATUS_NULL_POINTER = 1,
  DGS_STATUS_INVALID_ARGUMENT = 2,
  DGS_STATUS_CONFIG = 3,
  DGS_STATUS_ABORTED = 4,
  DGS_STATUS_VERTEX_NOT_FOUND = 5,
  DGS_STATUS_UNSUPPORTED = 6,
  DGS_STATUS_INTERNAL = 7,
  DGS_STATUS_PANIC = 8,
} DgsStatus;

typedef enum DgsContainer {
  DGS_CONTAINER_UNSORTED = 0,
  DGS_CONTAINER_SORTED = 1,
  DGS_CONTAINER_PMA = 2,
  DGS_CONTAINER_SEGSL = 3,
  DGS_CONTAINER_COW = 4,
} DgsContainer;

typedef enum DgsCc {
  DGS_CC_FINE = 0,
  DGS_CC_COARSE = 1,
  DGS_CC_OFF = 2,
} DgsCc;

/**
 * Opaque graph handle.
 */
typedef struct DgsGraph DgsGraph;

/**
 * Opaque read transaction.
 */
typedef struct DgsRead DgsRead;

/**
 * Opaque write transaction.
 */
typedef struct DgsWrite DgsWrite;

/**
 * Receives one neighbor per call during `dgs_read_scan`.
 */
typedef void (*DgsNeighborFn)(void *ctx, uint64_t v);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *dgs_last_error(void);

/**
 * Create a graph with default tuning for the given container and regime.
 */
enum DgsStatus dgs_graph_new(enum DgsContainer container,
                             enum DgsCc cc,
                             struct DgsGraph **out_graph);

void dgs_graph_free(struct DgsGraph *graph);

/**
 * Latest committed timestamp.
 */
enum DgsStatus dgs_graph_now(const struct DgsGraph *graph, uint64_t *out_ts);

/**
 * Bulk-load `count` edges given as `pairs[2i] -> pairs[2i + 1]`.
 */
enum DgsStatus dgs_graph_load(const struct DgsGraph *graph, const uint64_t *pairs, size_t count);

/**
 * Single-edge insert transaction; `out_ts` may be null.
 */
enum DgsStatus dgs_insert_edge(const struct DgsGraph *graph,
                               uint64_t u,
                               uint64_t v,
                               uint64_t *out_ts);

/**
 * Single-edge delete transaction; `out_ts` may be null.
 */
enum DgsStatus dgs_delete_edge(const struct DgsGraph *graph,
                               uint64_t u,
                               uint64_t v,
                               uint64_t *out_ts);

enum DgsStatus dgs_read_begin(const struct DgsGraph *graph, struct DgsRead **out_read);

void dgs_read_end(struct DgsRead *read);

enum DgsStatus dgs_read_start_ts(const struct DgsRead *read, uint64_t *out_ts);

enum DgsStatus dgs_read_search(const struct DgsRead *read, uint64_t u, uint64_t v, bool *out_found);

/**
 * Call `f(ctx, v)` for every neighbor of `u`; `out_count` may be null.
 */
enum DgsStatus dgs_read_scan(const struct DgsRead *read,
                             uint64_t u,
                             DgsNeighborFn f,
                             void *ctx,
                             size_t *out_count);

/**
 * Copy up to `cap` neighbors of `u` into `buf`; `out_degree` receives the
 * full count so callers can retry with a larger buffer.
 */
enum DgsStatus dgs_read_neighbors(const struct DgsRead *read,
                                  uint64_t u,
                                  uint64_t *buf,
                                  size_t cap,
                                  size_t *out_degree);

/**
 * Open a write transaction over the `count` vertices in `delta_v`.
 */
enum DgsStatus dgs_write_begin(const struct DgsGraph *graph,
                               const uint64_t *delta_v,
                               size_t count,
                               struct DgsWrite **out_write);

/**
 * On failure the transaction is aborted; it must still be released with
 * `dgs_write_abort`.
 */
enum DgsStatus dgs_write_insert(struct DgsWrite *write, uint64_t u, uint64_t v);

enum DgsStatus dgs_write_delete(struct DgsWrite *write, uint64_t u, uint64_t v);

/**
 * Commit and release the handle; `out_ts` may be null.
 */
enum DgsStatus dgs_write_commit(struct DgsWrite *write, uint64_t *out_ts);

/**
 * Roll back and release the handle.
 */
void dgs_write_abort(struct DgsWrite *write);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DGS_H */
