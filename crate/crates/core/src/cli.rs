//! Command dispatch and report rendering for the command-line front end.
//!
//! Every subcommand produces a report struct that renders either as
//! human-readable text or as versioned JSON. Structured output is fully
//! deterministic: rerunning a command on the same inputs with the same
//! seed yields identical bytes, and each report embeds the exact ε
//! values, window bounds, and seed it was produced with.

use std::collections::HashMap;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correspondence::{EdgeFunction, VertexFunction};
use crate::dynamics::{self, is_pseudoperiodic, FiniteDynSystem, LiftReport};
use crate::error::{Error, Result};
use crate::finiteness::{self, EpsPseudoloop, Obstruction, Verdict};
use crate::graph::{self, DiscretizeSpec, Path, TopGraph};
use crate::orbit::{self, InfinitePath, RelationResiduals};
use crate::shifts;

/// Structured-output schema version, embedded in every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

pub mod exit_code {
    pub const OK: i32 = 0;
    /// Verdict "infinite" under --fail-on-infinite.
    pub const INFINITE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Clone)]
pub enum Command {
    Validate {
        graph: PathBuf,
    },
    ShiftAnalyze {
        tree: PathBuf,
        weights: PathBuf,
    },
    OrbitRep {
        graph: PathBuf,
        prefix: Vec<String>,
        cycle: Vec<String>,
        window: (i64, i64),
        battery: usize,
        seed: u64,
    },
    DynsysCheck {
        system: PathBuf,
        eps: Vec<f64>,
        exact: bool,
        inverse_limit_depth: Option<usize>,
    },
    DecideFiniteness {
        graph: PathBuf,
        eps: Vec<f64>,
        exact: bool,
        fail_on_infinite: bool,
    },
    Discretize {
        spec: DiscretizeSpec,
        resolution: usize,
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
}

/// A finished run: what to print and how to exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub exit: i32,
    pub body: String,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Internal(_) => exit_code::INTERNAL,
        _ => exit_code::INPUT,
    }
}

/// Routes a config to its command. Errors bubble up for the binary to
/// print on stderr with the matching exit code.
pub fn dispatch(config: &RunConfig) -> Result<Rendered> {
    match &config.command {
        Command::Validate { graph } => {
            let g = graph::load_graph_path(graph)?;
            let report = validate_report(&g);
            Ok(Rendered {
                exit: exit_code::OK,
                body: render(config.format, &report, render_validate_text),
            })
        }
        Command::ShiftAnalyze { tree, weights } => {
            let g = graph::load_graph_path(tree)?;
            let w = load_weights(&g, weights)?;
            let report = shift_analyze_report(&g, w)?;
            Ok(Rendered {
                exit: exit_code::OK,
                body: render(config.format, &report, render_shift_text),
            })
        }
        Command::OrbitRep {
            graph: path,
            prefix,
            cycle,
            window,
            battery,
            seed,
        } => {
            let g = graph::load_graph_path(path)?;
            let report = orbit_rep_report(&g, prefix, cycle, *window, *battery, *seed)?;
            Ok(Rendered {
                exit: exit_code::OK,
                body: render(config.format, &report, render_orbit_text),
            })
        }
        Command::DynsysCheck {
            system,
            eps,
            exact,
            inverse_limit_depth,
        } => {
            let sys = dynamics::load_system_path(system)?;
            let report = dynsys_report(&sys, eps, *exact, *inverse_limit_depth)?;
            Ok(Rendered {
                exit: exit_code::OK,
                body: render(config.format, &report, render_dynsys_text),
            })
        }
        Command::DecideFiniteness {
            graph: path,
            eps,
            exact,
            fail_on_infinite,
        } => {
            let g = graph::load_graph_path(path)?;
            let verdict = finiteness::decide(&g, eps, *exact)?;
            let report = decide_report(&g, &verdict, eps, *exact);
            let exit = if *fail_on_infinite && verdict.verdict == Verdict::Infinite {
                exit_code::INFINITE
            } else {
                exit_code::OK
            };
            Ok(Rendered {
                exit,
                body: render(config.format, &report, render_decide_text),
            })
        }
        Command::Discretize {
            spec,
            resolution,
            out,
        } => {
            let g = graph::discretize(spec, *resolution)?;
            let doc = graph_to_toml(&g, spec);
            if let Some(path) = out {
                std::fs::write(path, &doc).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                Ok(Rendered {
                    exit: exit_code::OK,
                    body: format!(
                        "wrote {} vertices, {} edges to {}\n",
                        g.vertex_count(),
                        g.edge_count(),
                        path.display()
                    ),
                })
            } else {
                Ok(Rendered {
                    exit: exit_code::OK,
                    body: doc,
                })
            }
        }
    }
}

fn render<T: Serialize>(format: OutputFormat, report: &T, text: impl Fn(&T) -> String) -> String {
    match format {
        OutputFormat::Structured => {
            let mut body = serde_json::to_string_pretty(report).expect("reports serialize");
            body.push('\n');
            body
        }
        OutputFormat::Text => text(report),
    }
}

// ---------------------------------------------------------------------------
// validate

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub vertices: usize,
    pub edges: usize,
    pub sinks: Vec<String>,
    pub sources: Vec<String>,
    pub s_injective: bool,
    pub s_witness: Option<(String, String)>,
    pub regular_vertices: Vec<String>,
    pub no_sinks: bool,
}

pub fn validate_report(g: &TopGraph) -> ValidateReport {
    let r = graph::validate(g);
    ValidateReport {
        schema_version: SCHEMA_VERSION,
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        sinks: r.sinks.iter().map(|&v| g.vertex_label(v).into()).collect(),
        sources: r
            .sources
            .iter()
            .map(|&v| g.vertex_label(v).into())
            .collect(),
        s_injective: r.s_injective,
        s_witness: r
            .s_witness
            .map(|(a, b)| (g.edge_label(a).into(), g.edge_label(b).into())),
        regular_vertices: r
            .regular_vertices
            .iter()
            .map(|&v| g.vertex_label(v).into())
            .collect(),
        no_sinks: r.no_sinks,
    }
}

fn render_validate_text(r: &ValidateReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "graph: {} vertices, {} edges\n",
        r.vertices, r.edges
    ));
    out.push_str(&format!("sinks: {}\n", join_or_none(&r.sinks)));
    out.push_str(&format!("sources: {}\n", join_or_none(&r.sources)));
    match &r.s_witness {
        Some((a, b)) => out.push_str(&format!(
            "source map: not injective (edges {a} and {b} share a source)\n"
        )),
        None => out.push_str("source map: injective\n"),
    }
    out.push_str(&format!(
        "regular vertices: {}\n",
        join_or_none(&r.regular_vertices)
    ));
    out
}

fn join_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

// ---------------------------------------------------------------------------
// shift-analyze

#[derive(Debug, Serialize)]
pub struct ShiftAnalyzeReport {
    pub schema_version: u32,
    pub vertices: usize,
    pub norm: f64,
    pub injective: bool,
    pub bounded_below: Option<f64>,
    pub closed_range: bool,
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub index: i64,
    pub surjective: bool,
    pub x_set: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc {
    weights: HashMap<String, WeightValue>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WeightValue {
    Real(f64),
    Complex([f64; 2]),
}

fn load_weights(g: &TopGraph, path: &PathBuf) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: WeightsDoc = toml::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
    for key in doc.weights.keys() {
        if g.vertex_by_label(key).is_none() {
            return Err(Error::Schema(format!(
                "weights table lists unknown vertex `{key}`"
            )));
        }
    }
    g.vertices()
        .map(|v| {
            let value = doc.weights.get(g.vertex_label(v)).ok_or_else(|| {
                Error::Schema(format!(
                    "weights table misses vertex `{}`",
                    g.vertex_label(v)
                ))
            })?;
            Ok(match value {
                WeightValue::Real(re) => Complex64::new(*re, 0.0),
                WeightValue::Complex([re, im]) => Complex64::new(*re, *im),
            })
        })
        .collect()
}

pub fn shift_analyze_report(g: &TopGraph, weights: Vec<Complex64>) -> Result<ShiftAnalyzeReport> {
    let tree = shifts::check_tree(g).map_err(|violations| {
        let msgs: Vec<String> = violations.iter().map(|v| v.describe(g)).collect();
        Error::NotATree(msgs.join("; "))
    })?;
    let shift = shifts::WeightedShift::new(tree, weights)?;
    let analysis = shifts::analyze(&shift);
    Ok(ShiftAnalyzeReport {
        schema_version: SCHEMA_VERSION,
        vertices: g.vertex_count(),
        norm: analysis.norm,
        injective: analysis.injective,
        bounded_below: analysis.bounded_below,
        closed_range: analysis.closed_range,
        ker_dim: analysis.ker_dim,
        coker_dim: analysis.coker_dim,
        index: analysis.index,
        surjective: analysis.surjective,
        x_set: analysis
            .x_set
            .iter()
            .map(|&v| g.vertex_label(v).into())
            .collect(),
    })
}

fn render_shift_text(r: &ShiftAnalyzeReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("weighted shift on {} vertices\n", r.vertices));
    out.push_str(&format!("norm = {}\n", r.norm));
    out.push_str(&format!(
        "ker = {} coker = {} index = {}\n",
        r.ker_dim, r.coker_dim, r.index
    ));
    out.push_str(&format!(
        "injective: {}  surjective: {}  closed range: {}\n",
        r.injective, r.surjective, r.closed_range
    ));
    match r.bounded_below {
        Some(eps) => out.push_str(&format!("bounded below by {eps}\n")),
        None => out.push_str("not bounded below\n"),
    }
    out
}

// ---------------------------------------------------------------------------
// orbit-rep

#[derive(Debug, Serialize)]
pub struct OrbitRepReport {
    pub schema_version: u32,
    pub base_path: String,
    pub window: (i64, i64),
    pub nodes: usize,
    pub nodes_per_level: Vec<(i64, usize)>,
    pub battery: usize,
    pub seed: u64,
    /// Largest residual seen per relation over the whole battery.
    pub max_residuals: RelationResiduals,
    pub unit_shift: Option<UnitShiftReport>,
}

#[derive(Debug, Serialize)]
pub struct UnitShiftReport {
    /// max over interior columns of |(S·T - 1) entries|
    pub left_inverse_residual: f64,
    pub s_norm: f64,
    /// min over non-top nodes of the basis image norm of T
    pub t_lower_bound: f64,
}

fn parse_lasso(
    g: &TopGraph,
    prefix_labels: &[String],
    cycle_labels: &[String],
) -> Result<InfinitePath> {
    let lookup = |labels: &[String]| -> Result<Vec<graph::EdgeId>> {
        labels
            .iter()
            .map(|l| {
                g.edge_by_label(l)
                    .ok_or_else(|| Error::Schema(format!("unknown edge `{l}`")))
            })
            .collect()
    };
    let cycle_edges = lookup(cycle_labels)?;
    if cycle_edges.is_empty() {
        return Err(Error::Schema("lasso cycle must be nonempty".into()));
    }
    let cycle = Path::from_edges(g, cycle_edges)?;
    let prefix = {
        let edges = lookup(prefix_labels)?;
        if edges.is_empty() {
            Path::at_vertex(cycle.range(g))
        } else {
            Path::from_edges(g, edges)?
        }
    };
    InfinitePath::new(g, &prefix, &cycle)
}

pub fn orbit_rep_report(
    g: &TopGraph,
    prefix: &[String],
    cycle: &[String],
    window: (i64, i64),
    battery: usize,
    seed: u64,
) -> Result<OrbitRepReport> {
    let alpha = parse_lasso(g, prefix, cycle)?;
    let tree = orbit::build_orbit_tree(g, &alpha, window.0, window.1)?;
    let regular: Vec<graph::VertexId> = graph::validate(g).regular_vertices;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max = RelationResiduals {
        toeplitz_module: 0.0,
        toeplitz_inner: 0.0,
        covariance: 0.0,
        gauge: 0.0,
    };
    for _ in 0..battery {
        let mut a = VertexFunction::zero(g);
        for &v in &regular {
            a.set(
                v,
                Complex64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64),
            );
        }
        let rand_edge_fn = |rng: &mut ChaCha8Rng| {
            let mut f = EdgeFunction::zero(g);
            for e in g.edges() {
                f.set(
                    e,
                    Complex64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64),
                );
            }
            f
        };
        let xi = rand_edge_fn(&mut rng);
        let eta = rand_edge_fn(&mut rng);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = Complex64::new(theta.cos(), theta.sin());
        let res = orbit::verify_relations(&tree, &a, &xi, &eta, z)?;
        max.toeplitz_module = max.toeplitz_module.max(res.toeplitz_module);
        max.toeplitz_inner = max.toeplitz_inner.max(res.toeplitz_inner);
        max.covariance = max.covariance.max(res.covariance);
        max.gauge = max.gauge.max(res.gauge);
    }

    let unit_shift = match orbit::unit_shift(&tree) {
        Ok((t, s)) => {
            let id = orbit::LevelOperator::identity(tree.len());
            let residual = s
                .mul(&t)
                .sub(&id)
                .max_abs_where(|_, j| tree.level_of(j) < window.1);
            let t_lower = (0..tree.len())
                .filter(|&i| tree.level_of(i) < window.1)
                .map(|i| {
                    t.column(i)
                        .iter()
                        .map(|(_, v)| v.norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            Some(UnitShiftReport {
                left_inverse_residual: residual,
                s_norm: s.norm2(),
                t_lower_bound: if t_lower.is_finite() { t_lower } else { 0.0 },
            })
        }
        Err(Error::SinkPresent(_)) => None,
        Err(e) => return Err(e),
    };

    let mut nodes_per_level = Vec::new();
    for level in window.0..=window.1 {
        nodes_per_level.push((level, tree.level_nodes(level).len()));
    }
    Ok(OrbitRepReport {
        schema_version: SCHEMA_VERSION,
        base_path: alpha.display(g),
        window,
        nodes: tree.len(),
        nodes_per_level,
        battery,
        seed,
        max_residuals: max,
        unit_shift,
    })
}

fn render_orbit_text(r: &OrbitRepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "orbit tree of {} on window [{}, {}]: {} nodes\n",
        r.base_path, r.window.0, r.window.1, r.nodes
    ));
    for (level, count) in &r.nodes_per_level {
        out.push_str(&format!("  level {level}: {count}\n"));
    }
    out.push_str(&format!(
        "battery of {} random tuples (seed {}):\n",
        r.battery, r.seed
    ));
    out.push_str(&format!(
        "  toeplitz-module residual {}\n  toeplitz-inner residual {}\n  covariance residual {}\n  gauge residual {}\n",
        r.max_residuals.toeplitz_module,
        r.max_residuals.toeplitz_inner,
        r.max_residuals.covariance,
        r.max_residuals.gauge
    ));
    match &r.unit_shift {
        Some(u) => out.push_str(&format!(
            "unit shift: left-inverse residual {}, |S| = {}, min |T delta| = {}\n",
            u.left_inverse_residual, u.s_norm, u.t_lower_bound
        )),
        None => out.push_str("unit shift: skipped (sink reachable in window)\n"),
    }
    out
}

// ---------------------------------------------------------------------------
// dynsys-check

#[derive(Debug, Serialize)]
pub struct DynsysReport {
    pub schema_version: u32,
    pub points: usize,
    pub surjective: bool,
    /// Metric was rescaled to diameter 1 before inverse-limit work.
    pub normalized_for_lift: bool,
    pub scans: Vec<DynsysScan>,
    pub lift: Option<LiftReport>,
}

#[derive(Debug, Serialize)]
pub struct DynsysScan {
    pub eps: f64,
    pub exact: bool,
    pub all_pseudoperiodic: bool,
    pub failing: Vec<String>,
    pub witnesses: Vec<DynsysWitness>,
}

#[derive(Debug, Serialize)]
pub struct DynsysWitness {
    pub point: String,
    pub orbit: Vec<String>,
}

pub fn dynsys_report(
    sys: &FiniteDynSystem,
    eps_list: &[f64],
    exact: bool,
    depth: Option<usize>,
) -> Result<DynsysReport> {
    if eps_list.is_empty() && !exact && depth.is_none() {
        return Err(Error::EmptyEpsList);
    }
    let mut requests: Vec<(f64, bool)> = eps_list.iter().map(|&e| (e, false)).collect();
    if exact {
        let eps = sys.space().min_positive_distance().unwrap_or(1.0);
        requests.push((eps, true));
    }
    let mut scans = Vec::new();
    for (eps, is_exact) in requests {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Schema(format!(
                "epsilon values must be positive, got {eps}"
            )));
        }
        let mut failing = Vec::new();
        let mut witnesses = Vec::new();
        for x in 0..sys.len() {
            match is_pseudoperiodic(sys, eps, x) {
                Some(w) => witnesses.push(DynsysWitness {
                    point: sys.space().label(x).into(),
                    orbit: w
                        .points
                        .iter()
                        .map(|&p| sys.space().label(p).into())
                        .collect(),
                }),
                None => failing.push(sys.space().label(x).to_string()),
            }
        }
        scans.push(DynsysScan {
            eps,
            exact: is_exact,
            all_pseudoperiodic: failing.is_empty(),
            failing,
            witnesses,
        });
    }
    let mut normalized_for_lift = false;
    let lift = match depth {
        Some(n) => {
            let eps = eps_list.first().copied().unwrap_or(0.1);
            let target = if sys.space().diameter() > 1.0 {
                normalized_for_lift = true;
                sys.normalized()
            } else {
                sys.clone()
            };
            Some(dynamics::verify_lift(&target, eps, n)?)
        }
        None => None,
    };
    Ok(DynsysReport {
        schema_version: SCHEMA_VERSION,
        points: sys.len(),
        surjective: sys.is_surjective(),
        normalized_for_lift,
        scans,
        lift,
    })
}

fn render_dynsys_text(r: &DynsysReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "system: {} points, surjective: {}\n",
        r.points, r.surjective
    ));
    for scan in &r.scans {
        let mode = if scan.exact { " (exact mode)" } else { "" };
        out.push_str(&format!(
            "eps = {}{mode}: all pseudoperiodic: {}\n",
            scan.eps, scan.all_pseudoperiodic
        ));
        if !scan.failing.is_empty() {
            out.push_str(&format!("  failing: {}\n", scan.failing.join(", ")));
        }
        for w in &scan.witnesses {
            out.push_str(&format!("  {} -> cycle [{}]\n", w.point, w.orbit.join(" ")));
        }
    }
    if let Some(l) = &r.lift {
        if r.normalized_for_lift {
            out.push_str("metric rescaled to diameter 1 for the inverse limit\n");
        }
        out.push_str(&format!(
            "inverse limit depth {}: base {} limit {} downward-ok {} upward-ok {}\n",
            l.depth,
            l.base_all_pseudoperiodic,
            l.limit_all_pseudoperiodic,
            l.downward_ok,
            l.upward_ok
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// decide-finiteness

#[derive(Debug, Serialize)]
pub struct DecideReport {
    pub schema_version: u32,
    pub vertices: usize,
    pub edges: usize,
    pub requested_eps: Vec<f64>,
    pub exact_mode: bool,
    pub verdict: Verdict,
    pub s_injective: bool,
    pub s_witness: Option<(String, String)>,
    pub scans: Vec<DecideScan>,
    pub obstruction: Option<ObstructionReport>,
    pub hypothesis_failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DecideScan {
    pub eps: f64,
    pub exact: bool,
    pub failing: Vec<String>,
    pub loops: Vec<LoopReport>,
}

#[derive(Debug, Serialize)]
pub struct LoopReport {
    pub vertex: String,
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObstructionReport {
    /// Orbit nodes over this vertex have two children each; the unit
    /// shift cannot be injective.
    BranchingSource {
        vertex: String,
        edges: (String, String),
    },
    /// No edge reaches this vertex; the unit shift cannot be surjective.
    SourceVertex { vertex: String },
}

pub fn decide_report(
    g: &TopGraph,
    verdict: &finiteness::FinitenessVerdict,
    requested_eps: &[f64],
    exact: bool,
) -> DecideReport {
    let loops_of = |loops: &[Option<EpsPseudoloop>]| -> Vec<LoopReport> {
        g.vertices()
            .map(|v| LoopReport {
                vertex: g.vertex_label(v).into(),
                witness: loops[v.0].as_ref().map(|l| {
                    l.path
                        .edges
                        .iter()
                        .map(|&e| g.edge_label(e).to_string())
                        .collect()
                }),
            })
            .collect()
    };
    DecideReport {
        schema_version: SCHEMA_VERSION,
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        requested_eps: requested_eps.to_vec(),
        exact_mode: exact,
        verdict: verdict.verdict,
        s_injective: verdict.s_injective,
        s_witness: verdict
            .s_witness
            .map(|(a, b)| (g.edge_label(a).into(), g.edge_label(b).into())),
        scans: verdict
            .scans
            .iter()
            .map(|s| DecideScan {
                eps: s.eps,
                exact: s.exact,
                failing: s
                    .failing
                    .iter()
                    .map(|&v| g.vertex_label(v).into())
                    .collect(),
                loops: loops_of(&s.loops),
            })
            .collect(),
        obstruction: verdict.obstruction.as_ref().map(|o| match o {
            Obstruction::BranchingSource { vertex, edges } => ObstructionReport::BranchingSource {
                vertex: g.vertex_label(*vertex).into(),
                edges: (g.edge_label(edges.0).into(), g.edge_label(edges.1).into()),
            },
            Obstruction::SourceVertex { vertex } => ObstructionReport::SourceVertex {
                vertex: g.vertex_label(*vertex).into(),
            },
        }),
        hypothesis_failure: verdict.hypothesis_failure.clone(),
    }
}

fn render_decide_text(r: &DecideReport) -> String {
    let mut out = String::new();
    let verdict = match r.verdict {
        Verdict::ConsistentWithFinite => "consistent-with-finite",
        Verdict::Infinite => "infinite",
        Verdict::Inconclusive => "inconclusive",
    };
    out.push_str(&format!(
        "graph: {} vertices, {} edges\nverdict: {verdict}\n",
        r.vertices, r.edges
    ));
    if let Some(reason) = &r.hypothesis_failure {
        out.push_str(&format!("  {reason}\n"));
    }
    match &r.s_witness {
        Some((a, b)) => out.push_str(&format!(
            "source map: not injective ({a} and {b} share a source)\n"
        )),
        None => out.push_str("source map: injective\n"),
    }
    for scan in &r.scans {
        let mode = if scan.exact { " (exact mode)" } else { "" };
        if scan.failing.is_empty() {
            out.push_str(&format!(
                "eps = {}{mode}: pseudoloops at every vertex\n",
                scan.eps
            ));
        } else {
            out.push_str(&format!(
                "eps = {}{mode}: no pseudoloop at {}\n",
                scan.eps,
                scan.failing.join(", ")
            ));
        }
    }
    match &r.obstruction {
        Some(ObstructionReport::BranchingSource { vertex, edges }) => out.push_str(&format!(
            "obstruction: vertex {vertex} emits both {} and {}; orbit nodes over it have two children, so the unit shift is not injective\n",
            edges.0, edges.1
        )),
        Some(ObstructionReport::SourceVertex { vertex }) => out.push_str(&format!(
            "obstruction: vertex {vertex} receives no edge; the unit shift misses it, so it is not surjective\n"
        )),
        None => {}
    }
    out
}

// ---------------------------------------------------------------------------
// discretize output

fn graph_to_toml(g: &TopGraph, spec: &DiscretizeSpec) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        out.push_str(&format!("[[vertices]]\nid = \"{}\"\n", g.vertex_label(v)));
    }
    match spec {
        DiscretizeSpec::CompactifiedShift { .. } => {
            out.push_str("\n[metric]\nkind = \"arctan-z\"\n");
        }
        _ => {
            // Emit the computed metric explicitly so the document is
            // self-contained.
            out.push_str("\n[metric]\nkind = \"explicit\"\n");
            for i in 0..g.vertex_count() {
                for j in (i + 1)..g.vertex_count() {
                    out.push_str(&format!(
                        "[[metric.entries]]\nfrom = \"{}\"\nto = \"{}\"\ndist = {:?}\n",
                        g.metric().label(i),
                        g.metric().label(j),
                        g.metric().dist(i, j)
                    ));
                }
            }
        }
    }
    out.push('\n');
    for e in g.edges() {
        out.push_str(&format!(
            "[[edges]]\nid = \"{}\"\nsrc = \"{}\"\nrng = \"{}\"\n",
            g.edge_label(e),
            g.vertex_label(g.src(e)),
            g.vertex_label(g.rng(e))
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// shared CLI parsers

pub fn parse_eps_list(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("bad epsilon `{part}`")))
        })
        .collect()
}

pub fn parse_window(text: &str) -> Result<(i64, i64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Schema(format!(
            "window must be `lo,hi`, got `{text}`"
        )));
    }
    let lo = parts[0]
        .parse::<i64>()
        .map_err(|_| Error::Schema(format!("bad window bound `{}`", parts[0])))?;
    let hi = parts[1]
        .parse::<i64>()
        .map_err(|_| Error::Schema(format!("bad window bound `{}`", parts[1])))?;
    if lo >= hi {
        return Err(Error::Schema(format!("window [{lo}, {hi}] is empty")));
    }
    Ok((lo, hi))
}

pub fn parse_edge_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}
