use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tgalg::cli::{
    dispatch, exit_code, exit_code_for, parse_edge_list, parse_eps_list, parse_window, Command,
    OutputFormat, RunConfig,
};
use tgalg::graph::DiscretizeSpec;

/// Finiteness analysis for topological graph algebras.
#[derive(Parser)]
#[command(name = "tgalg", version, about, max_term_width = 100)]
struct TgalgCli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Human-readable lines.
    Text,
    /// Versioned JSON, byte-identical across reruns with the same seed.
    Json,
}

#[derive(Args)]
struct FormatArg {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Scan a graph for sinks, sources, regular vertices, and source-map
    /// injectivity.
    Validate {
        /// Graph file (TOML).
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Analyze the weighted shift of a directed tree: norm, kernel,
    /// cokernel, index, and boundedness-below.
    ShiftAnalyze {
        /// Tree file (same schema as graphs).
        #[arg(long)]
        tree: PathBuf,
        /// Weights table: `[weights]` mapping vertex ids to a real or an
        /// `[re, im]` pair.
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Build an orbit-tree window over a lasso path and verify the
    /// representation relations on a random battery.
    OrbitRep {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated edge ids of the lasso prefix (may be empty).
        #[arg(long, default_value = "")]
        prefix: String,
        /// Comma-separated edge ids of the lasso cycle.
        #[arg(long)]
        cycle: String,
        /// Level window `lo,hi`.
        #[arg(long, default_value = "-2,2", allow_hyphen_values = true)]
        window: String,
        /// Number of random (a, xi, eta, z) tuples to test.
        #[arg(long, default_value_t = 8)]
        battery: usize,
        /// Seed for the battery.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Check pseudoperiodicity of a finite dynamical system, optionally
    /// through a truncated inverse limit.
    DynsysCheck {
        /// System file: points, metric, and a `[map]` table.
        #[arg(long)]
        system: PathBuf,
        /// Comma-separated epsilon list.
        #[arg(long, default_value = "")]
        eps: String,
        /// Also run exact mode (epsilon below the smallest positive
        /// distance).
        #[arg(long)]
        exact: bool,
        /// Depth N for the inverse-limit transfer check, run at the
        /// first --eps value (0.1 when none is given).
        #[arg(long)]
        inverse_limit_depth: Option<usize>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Decide the finiteness condition: source-map injectivity plus
    /// pseudoloops at every vertex for every requested epsilon.
    DecideFiniteness {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated epsilon list.
        #[arg(long, default_value = "")]
        eps: String,
        /// Also run exact mode.
        #[arg(long)]
        exact: bool,
        /// Exit with code 1 when the verdict is infinite.
        #[arg(long)]
        fail_on_infinite: bool,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Build one of the parametric example graphs and emit its graph
    /// file.
    Discretize {
        /// Rotation angle in radians for the circle model.
        #[arg(long, conflicts_with_all = ["compactified_shift", "from_system"])]
        circle_rotation: Option<f64>,
        /// Net size for the circle model.
        #[arg(long, default_value_t = 16)]
        resolution: usize,
        /// Half-width N of the compactified integer window {-N..N, ±inf}.
        #[arg(long, conflicts_with = "from_system")]
        compactified_shift: Option<i64>,
        /// Turn an explicit dynamical system (system file) into the graph
        /// with one edge per point running from its image back to it.
        #[arg(long)]
        from_system: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_config(cli: TgalgCli) -> Result<RunConfig, tgalg::Error> {
    let (command, format) = match cli.command {
        CliCommand::Validate { graph, format } => (Command::Validate { graph }, format.format),
        CliCommand::ShiftAnalyze {
            tree,
            weights,
            format,
        } => (Command::ShiftAnalyze { tree, weights }, format.format),
        CliCommand::OrbitRep {
            graph,
            prefix,
            cycle,
            window,
            battery,
            seed,
            format,
        } => (
            Command::OrbitRep {
                graph,
                prefix: parse_edge_list(&prefix),
                cycle: parse_edge_list(&cycle),
                window: parse_window(&window)?,
                battery,
                seed,
            },
            format.format,
        ),
        CliCommand::DynsysCheck {
            system,
            eps,
            exact,
            inverse_limit_depth,
            format,
        } => (
            Command::DynsysCheck {
                system,
                eps: parse_eps_list(&eps)?,
                exact,
                inverse_limit_depth,
            },
            format.format,
        ),
        CliCommand::DecideFiniteness {
            graph,
            eps,
            exact,
            fail_on_infinite,
            format,
        } => (
            Command::DecideFiniteness {
                graph,
                eps: parse_eps_list(&eps)?,
                exact,
                fail_on_infinite,
            },
            format.format,
        ),
        CliCommand::Discretize {
            circle_rotation,
            resolution,
            compactified_shift,
            from_system,
            out,
        } => {
            let spec = match (circle_rotation, compactified_shift, from_system) {
                (Some(angle), None, None) => DiscretizeSpec::CircleRotation { angle },
                (None, Some(half_width), None) => DiscretizeSpec::CompactifiedShift { half_width },
                (None, None, Some(path)) => {
                    let sys = tgalg::dynamics::load_system_path(&path)?;
                    let map = (0..sys.len()).map(|x| sys.apply(x)).collect();
                    DiscretizeSpec::ExplicitMap {
                        space: sys.space().clone(),
                        map,
                    }
                }
                _ => return Err(tgalg::Error::Schema(
                    "pass exactly one of --circle-rotation, --compactified-shift, or --from-system"
                        .into(),
                )),
            };
            (
                Command::Discretize {
                    spec,
                    resolution,
                    out,
                },
                Format::Text,
            )
        }
    };
    let format = match format {
        Format::Text => OutputFormat::Text,
        Format::Json => OutputFormat::Structured,
    };
    Ok(RunConfig { command, format })
}

fn main() -> ExitCode {
    let cli = TgalgCli::parse();
    let config = match build_config(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code::USAGE as u8);
        }
    };
    match dispatch(&config) {
        Ok(rendered) => {
            print!("{}", rendered.body);
            ExitCode::from(rendered.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
