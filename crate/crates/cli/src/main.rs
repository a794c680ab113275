use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vector_heat::io::{Command, Format, RunConfig, SourceSpec, Suite};

/// Parallel transport, log maps and geodesic centers by vector heat diffusion.
#[derive(Debug, Parser)]
#[command(name = "vheat", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Transport tangent vectors from sources to every vertex.
    Transport(MeshArgs),
    /// Closest-point interpolation of scalar values.
    Interpolate(MeshArgs),
    /// Logarithmic map about the first source.
    Logmap(MeshArgs),
    /// Karcher mean of the sources.
    Mean(CenterArgs),
    /// Geometric median of the sources.
    Median(CenterArgs),
    /// Geodesic centroidal Voronoi tessellation.
    Gcvt(SitesArgs),
    /// Ordered intrinsic landmarks.
    Landmarks(SitesArgs),
    /// Run oracle suites and write a metrics file.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Time step multiplier m in t = m·h².
    #[arg(long = "t-mult", default_value_t = 1.0)]
    t_mult: f64,
    /// Build operators on the input triangulation instead of its intrinsic Delaunay triangulation.
    #[arg(long = "no-idt")]
    no_idt: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Write here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Mesh file (.obj, or .txt/.imesh intrinsic format).
    mesh: PathBuf,
    /// `v:<vertex>` or `f:<face>,b:<b0>;<b1>;<b2>`, with optional `angle:`, `mag:`, `value:`, `weight:`.
    #[arg(long = "source", short, required = true)]
    sources: Vec<SourceSpec>,
    /// Symmetry degree k of transported k-direction fields.
    #[arg(long, default_value_t = 1)]
    degree: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CenterArgs {
    mesh: PathBuf,
    #[arg(long = "source", short, required = true)]
    sources: Vec<SourceSpec>,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SitesArgs {
    mesh: PathBuf,
    /// Number of sites or landmarks.
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// Lloyd iterations (gcvt).
    #[arg(long, default_value_t = 20)]
    iterations: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Refinement levels for the convergence, flat and trace suites.
    #[arg(long, default_value_t = 3)]
    levels: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metrics file (JSON); standard output if omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn apply(config: &mut RunConfig, mesh: PathBuf, common: Common) {
    config.input = Some(mesh);
    config.t_multiplier = common.t_mult;
    config.use_intrinsic_delaunay = !common.no_idt;
    config.seed = common.seed;
    config.format = common.format;
    config.output = common.output;
}

fn to_config(cli: Cli) -> RunConfig {
    let (command, sub) = match &cli.command {
        Sub::Transport(_) => (Command::Transport, cli.command),
        Sub::Interpolate(_) => (Command::Interpolate, cli.command),
        Sub::Logmap(_) => (Command::Logmap, cli.command),
        Sub::Mean(_) => (Command::Mean, cli.command),
        Sub::Median(_) => (Command::Median, cli.command),
        Sub::Gcvt(_) => (Command::Gcvt, cli.command),
        Sub::Landmarks(_) => (Command::Landmarks, cli.command),
        Sub::Validate(_) => (Command::Validate, cli.command),
    };
    let mut config = RunConfig::new(command);
    match sub {
        Sub::Transport(a) | Sub::Interpolate(a) | Sub::Logmap(a) => {
            config.sources = a.sources;
            config.degree = a.degree;
            apply(&mut config, a.mesh, a.common);
        }
        Sub::Mean(a) | Sub::Median(a) => {
            config.sources = a.sources;
            config.iterations = a.iterations;
            apply(&mut config, a.mesh, a.common);
        }
        Sub::Gcvt(a) | Sub::Landmarks(a) => {
            config.count = a.count;
            config.iterations = a.iterations;
            apply(&mut config, a.mesh, a.common);
        }
        Sub::Validate(a) => {
            config.suite = Some(a.suite);
            config.levels = a.levels;
            config.seed = a.seed;
            config.format = Format::Json;
            config.output = a.output;
        }
    }
    config
}

fn main() -> ExitCode {
    let config = to_config(Cli::parse());
    match vheat::run(&config) {
        Ok(outcome) => {
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            let written = match &config.output {
                Some(path) => std::fs::write(path, &outcome.artifact)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", outcome.artifact);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: validation failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
