//! Walks the three built-in models through the finiteness decision.
//!
//! ```sh
//! cargo run --example finiteness_tour
//! ```

use tgalg::finiteness::{decide, Verdict};
use tgalg::graph::{discretize, load_graph_str, DiscretizeSpec, TopGraph};

fn report(name: &str, g: &TopGraph, eps: &[f64], exact: bool) {
    let verdict = decide(g, eps, exact).expect("decision runs");
    let label = match verdict.verdict {
        Verdict::ConsistentWithFinite => "consistent-with-finite",
        Verdict::Infinite => "infinite",
        Verdict::Inconclusive => "inconclusive",
    };
    println!(
        "{name}: {} vertices, {} edges -> {label}",
        g.vertex_count(),
        g.edge_count()
    );
    for scan in &verdict.scans {
        if let Some(&v) = scan.failing.first() {
            println!(
                "  eps = {}: first vertex without a pseudoloop: {}",
                scan.eps,
                g.vertex_label(v)
            );
        }
    }
}

fn main() {
    // A single loop: every chain closes exactly.
    let loop_graph = load_graph_str(
        "[[vertices]]\nid = \"v\"\n[[edges]]\nid = \"e\"\nsrc = \"v\"\nrng = \"v\"\n",
    )
    .unwrap();
    report("loop", &loop_graph, &[], true);

    // The compactified integer shift drifts toward -inf; chains from the
    // middle never return.
    let shift = discretize(&DiscretizeSpec::CompactifiedShift { half_width: 50 }, 0).unwrap();
    report("compactified shift (N=50)", &shift, &[0.05], false);

    // A snapped irrational rotation is a cyclic permutation of the net.
    let phi = 0.6180339887498949f64;
    let resolution = 200;
    let circle = discretize(
        &DiscretizeSpec::CircleRotation {
            angle: std::f64::consts::TAU * phi,
        },
        resolution,
    )
    .unwrap();
    let mesh = std::f64::consts::TAU / resolution as f64;
    report("circle rotation (n=200)", &circle, &[2.0 * mesh], false);
}
