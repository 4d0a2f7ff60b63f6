#ifndef TGALG_H
#define TGALG_H

/* Generated by cbindgen; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define TGALG_OK 0

// A null or otherwise unusable argument.
#define TGALG_ERR_ARGUMENT 2

// Input rejected: unreadable file, schema violation, failed precondition.
#define TGALG_ERR_INPUT 3

// Internal invariant failure.
#define TGALG_ERR_INTERNAL 4

// Verdict codes for `tgalg_decide_finiteness_json`.
#define TGALG_VERDICT_CONSISTENT_WITH_FINITE 0

#define TGALG_VERDICT_INFINITE 1

#define TGALG_VERDICT_INCONCLUSIVE 2

// An opaque graph handle.
typedef struct TgalgGraph TgalgGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. Borrowed;
// valid until the next failing call. Never null.
const char *tgalg_last_error(void);

// Parses a graph document from a NUL-terminated TOML string.
//
// # Safety
// `text` must point to a valid NUL-terminated string and `out` to a
// writable pointer slot.
int tgalg_graph_load_str(const char *text, struct TgalgGraph **out);

// Loads a graph document from a file path.
//
// # Safety
// `path` must point to a valid NUL-terminated string and `out` to a
// writable pointer slot.
int tgalg_graph_load_path(const char *path, struct TgalgGraph **out);

// Releases a graph handle. Null is ignored.
//
// # Safety
// `graph` must be a handle from `tgalg_graph_load_*` not yet freed.
void tgalg_graph_free(struct TgalgGraph *graph);

// Number of vertices; 0 for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
size_t tgalg_graph_vertex_count(const struct TgalgGraph *graph);

// Number of edges; 0 for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
size_t tgalg_graph_edge_count(const struct TgalgGraph *graph);

// Structural validation report as JSON.
//
// # Safety
// `graph` must be a live handle; `out_json` must be writable. On
// success the caller owns the string and frees it with
// `tgalg_string_free`.
int tgalg_validate_json(const struct TgalgGraph *graph, char **out_json);

// Runs the finiteness decision. `eps` points to `eps_len` positive
// reals (may be null when `eps_len` is 0 and `exact` is nonzero).
// Writes the JSON report to `out_json` and, when `out_verdict` is not
// null, one of the `TGALG_VERDICT_*` codes.
//
// # Safety
// `graph` must be a live handle; `eps` must point to `eps_len` readable
// doubles when non-null; `out_json` must be writable.
int tgalg_decide_finiteness_json(const struct TgalgGraph *graph,
                                 const double *eps,
                                 size_t eps_len,
                                 bool exact,
                                 char **out_json,
                                 int *out_verdict);

// Analyzes the weighted shift of a directed tree. Weights are given per
// vertex in graph order: `weights_re` is required, `weights_im` may be
// null for real weights.
//
// # Safety
// `graph` must be a live handle; the weight arrays must hold `len`
// readable doubles each when non-null; `out_json` must be writable.
int tgalg_shift_analyze_json(const struct TgalgGraph *graph,
                             const double *weights_re,
                             const double *weights_im,
                             size_t len,
                             char **out_json);

// Releases a string produced by this library. Null is ignored.
//
// # Safety
// `s` must originate from a tgalg out-parameter and not be freed twice.
void tgalg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TGALG_H */
