/* Build (from the workspace root, after `cargo build -p tgalg-ffi`):
 *
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      -Ltarget/debug -ltgalg_ffi -o demo
 *   LD_LIBRARY_PATH=target/debug ./demo
 */
#include <stdio.h>
#include <stdlib.h>

#include "tgalg.h"

static const char *LOOP_GRAPH =
    "[[vertices]]\n"
    "id = \"v\"\n"
    "[[edges]]\n"
    "id = \"e\"\n"
    "src = \"v\"\n"
    "rng = \"v\"\n";

int main(void) {
    TgalgGraph *graph = NULL;
    if (tgalg_graph_load_str(LOOP_GRAPH, &graph) != TGALG_OK) {
        fprintf(stderr, "load failed: %s\n", tgalg_last_error());
        return 1;
    }
    printf("loaded graph: %zu vertices, %zu edges\n",
           tgalg_graph_vertex_count(graph), tgalg_graph_edge_count(graph));

    char *json = NULL;
    int verdict = -1;
    int code = tgalg_decide_finiteness_json(graph, NULL, 0, true, &json, &verdict);
    if (code != TGALG_OK) {
        fprintf(stderr, "decide failed: %s\n", tgalg_last_error());
        tgalg_graph_free(graph);
        return 1;
    }
    printf("verdict code: %d\n%s\n", verdict, json);
    tgalg_string_free(json);
    tgalg_graph_free(graph);
    return verdict == TGALG_VERDICT_CONSISTENT_WITH_FINITE ? 0 : 1;
}
