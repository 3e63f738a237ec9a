//! `thermotopo` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or runtime failure, 2 invalid configuration or
//! arguments, 3 numerical failure (every requested point failed, or a check suite
//! exceeded its tolerance).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermotopo::checks::{self, CheckSizes};
use thermotopo::invariants::{DdWeighting, Rule};
use thermotopo::sweep::{emit_figure, evaluate_point, run_sweep, write_csv, Axis, AxisRange, FigureId, Invariant, SweepConfig};
use thermotopo::{Embedding, Error, Family, ModelSpec, WeightConvention};

#[derive(Parser)]
#[command(name = "thermotopo", version, about = "Mixed-state topological invariants of non-Hermitian Hamiltonians")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uhlmann phase around a loop (nh2: circle in the plane, nh4: circle in four dimensions).
    Phase {
        #[command(flatten)]
        model: ModelArgs,
        /// Loop radius.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        /// Displacement of the loop centre along the first axis.
        #[arg(long, default_value_t = 2.5)]
        displacement: f64,
        /// Number of times the loop is traversed (1 or 2).
        #[arg(long, default_value_t = 2)]
        windings: usize,
        /// Transport samples per winding.
        #[arg(long, default_value_t = 800)]
        samples: usize,
    },
    /// Thermal Uhlmann-Chern number on a sphere (nh2).
    Chern {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sphere: SphereArgs,
        /// Report the unweighted (non-topological) integral.
        #[arg(long)]
        nt: bool,
    },
    /// Dixmier-Douady invariant on a three-sphere (nh3, hermitian3).
    Dd {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sphere: SphereArgs,
        #[arg(long)]
        nt: bool,
        /// Weight of the topological variant: restoring, as-printed or none.
        #[arg(long, default_value = "restoring")]
        weighting: String,
    },
    /// Second thermal Uhlmann-Chern number on a four-sphere (nh4).
    Chern2 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sphere: SphereArgs,
        #[arg(long)]
        nt: bool,
    },
    /// Run a sweep described by a TOML configuration and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (overrides the `output` key; stdout when neither is set).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data of a figure (fig1..fig6, figDD or `all`).
    Figure {
        id: String,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
    /// Run the algebra and cross-check suites, or validate a sweep configuration.
    Check {
        /// Only validate this configuration instead of running the suites.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the randomly sampled points.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random points per connection suite.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Model family: nh2, nh3, nh4 or hermitian3.
    #[arg(long, default_value = "nh2")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, short = 'T', default_value_t = 0.5)]
    temperature: f64,
    /// Weight convention: abs (sign(Re E)|E|) or re (Re E).
    #[arg(long, default_value = "abs")]
    weight_convention: String,
}

#[derive(Args)]
struct SphereArgs {
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    /// Comma-separated node counts per coordinate (default depends on the manifold).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Quadrature rule: trapezoid or simpson.
    #[arg(long, default_value = "trapezoid")]
    rule: String,
    /// Integrate every azimuthal node instead of using the rotational symmetry.
    #[arg(long)]
    full: bool,
}

enum Failure {
    Config(String),
    Numeric(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidInput(_) | Error::IncompatibleEmbedding { .. } => Failure::Config(e.to_string()),
            Error::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Numeric(format!("{} ({})", e, e.tag())),
        }
    }
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, Failure> {
    s.parse().map_err(|_| Failure::Config(format!("invalid {what} `{s}`")))
}

fn parse_rule(s: &str) -> Result<Rule, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "trapezoid" => Ok(Rule::Trapezoid),
        "simpson" => Ok(Rule::Simpson),
        _ => Err(Failure::Config(format!("invalid rule `{s}`"))),
    }
}

fn parse_weighting(s: &str) -> Result<DdWeighting, Failure> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "restoring" => Ok(DdWeighting::Restoring),
        "as-printed" => Ok(DdWeighting::AsPrinted),
        "none" => Ok(DdWeighting::None),
        _ => Err(Failure::Config(format!("invalid weighting `{s}`"))),
    }
}

/// Builds a one-point sweep so single evaluations share the sweep code path.
fn single_point(m: &ModelArgs, embedding: Embedding, invariant: Invariant) -> Result<SweepConfig, Failure> {
    let family: Family = parse("model", &m.model)?;
    let model = ModelSpec::new(family, m.gamma, embedding)?;
    let t = m.temperature;
    let mut c = SweepConfig::new(model, invariant, AxisRange { axis: Axis::T, start: t, stop: t, step: 1.0 }, t);
    c.weight_convention = parse::<WeightConvention>("weight convention", &m.weight_convention)?;
    Ok(c)
}

fn apply_sphere(c: &mut SweepConfig, s: &SphereArgs) -> Result<(), Failure> {
    c.resolution.rule = parse_rule(&s.rule)?;
    c.resolution.reduced = !s.full;
    if let Some(g) = &s.grid {
        let bad = || Failure::Config(format!("--grid needs one count per coordinate of {}", c.model.embedding));
        match c.invariant {
            Invariant::Chern1 | Invariant::Chern1Nt => c.resolution.sphere = g.as_slice().try_into().map_err(|_| bad())?,
            Invariant::Dd | Invariant::DdNt => c.resolution.s3 = g.as_slice().try_into().map_err(|_| bad())?,
            Invariant::Chern2 | Invariant::Chern2Nt if g.len() == 1 => c.resolution.reduced_nodes = g[0],
            _ => c.resolution.s4 = g.as_slice().try_into().map_err(|_| bad())?,
        }
    }
    Ok(())
}

fn evaluate(c: &SweepConfig) -> Result<(), Failure> {
    c.validate()?;
    let (value, delta, excluded) = evaluate_point(c, &c.model, c.temperature)?;
    let out = serde_json::json!({
        "invariant": c.invariant,
        "model": c.model,
        "temperature": c.temperature,
        "value": value,
        "refinement_delta": delta,
        "excluded_points": excluded,
    });
    println!("{out:#}");
    Ok(())
}

fn read_config(path: &Path) -> Result<SweepConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(SweepConfig::from_toml(&text)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Phase { model, radius, displacement, windings, samples } => {
            let family: Family = parse("model", &model.model)?;
            let embedding = match family {
                Family::NH4 => Embedding::Loop4D { r: radius, d: displacement },
                _ => Embedding::Loop2D { r: radius, d: displacement },
            };
            let mut c = single_point(&model, embedding, Invariant::UhlmannPhase)?;
            c.windings = windings;
            c.resolution.loop_samples = samples;
            evaluate(&c)
        }
        Command::Chern { model, sphere, nt } => {
            let inv = if nt { Invariant::Chern1Nt } else { Invariant::Chern1 };
            let mut c = single_point(&model, Embedding::Sphere2D { radius: sphere.radius }, inv)?;
            apply_sphere(&mut c, &sphere)?;
            evaluate(&c)
        }
        Command::Dd { model, sphere, nt, weighting } => {
            let inv = if nt { Invariant::DdNt } else { Invariant::Dd };
            let mut c = single_point(&model, Embedding::S3 { radius: sphere.radius }, inv)?;
            c.dd_weighting = parse_weighting(&weighting)?;
            apply_sphere(&mut c, &sphere)?;
            evaluate(&c)
        }
        Command::Chern2 { model, sphere, nt } => {
            let inv = if nt { Invariant::Chern2Nt } else { Invariant::Chern2 };
            let mut c = single_point(&model, Embedding::S4 { radius: sphere.radius }, inv)?;
            apply_sphere(&mut c, &sphere)?;
            evaluate(&c)
        }
        Command::Sweep { config, out } => {
            let c = read_config(&config)?;
            let records = run_sweep(&c)?;
            match out.or(c.output.clone()) {
                Some(path) => write_csv(&records, std::fs::File::create(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?)?,
                None => write_csv(&records, std::io::stdout().lock())?,
            }
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} points failed", records.len());
            }
            if failed == records.len() {
                return Err(Failure::Numeric("every sweep point failed".into()));
            }
            Ok(())
        }
        Command::Figure { id, out } => {
            let ids = if id.eq_ignore_ascii_case("all") { FigureId::ALL.to_vec() } else { vec![id.parse::<FigureId>()?] };
            for f in ids {
                for path in emit_figure(f, &out)? {
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::Check { config: Some(config), .. } => {
            let c = read_config(&config)?;
            let outer = c.outer.map_or(1, |o| o.values().len());
            println!("ok: {} on {} with {} points", c.invariant, c.model.embedding, outer * c.sweep.values().len());
            Ok(())
        }
        Command::Check { config: None, seed, points } => {
            let sizes = CheckSizes { connection_points: points, trace_points: points.min(50), ..CheckSizes::default() };
            let results = checks::run_all(seed, sizes)?;
            for c in &results {
                println!("{:<34} {:>9.2e}  < {:.0e}  {}", c.name, c.residual, c.tolerance, if c.passed() { "ok" } else { "FAILED" });
            }
            match results.iter().filter(|c| !c.passed()).count() {
                0 => Ok(()),
                n => Err(Failure::Numeric(format!("{n} check suites failed"))),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("invalid configuration: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
