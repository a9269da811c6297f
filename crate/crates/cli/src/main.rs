//! `pipage` command-line front end.
//!
//! Reports are JSON on stdout (or `--out`); a short human summary goes to
//! stderr. Exit status is 0 on success, 1 on error (or a verification
//! suite with failures) and 2 under `--strict` when the concentration bound
//! is vacuous.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use pipage::apps::{self, AppConfig, RoundingReport};
use pipage::graphs::{self, WeightedGraph};
use pipage::io;
use pipage::matroid::Matroid;
use pipage::report::{self, real};
use pipage::symmat::SymMatrix;
use pipage::verify;

#[derive(Parser, Debug)]
#[command(
    name = "pipage",
    version,
    about = "Pipage rounding with matrix concentration certificates"
)]
struct Cli {
    /// Rounding mode.
    #[arg(long, value_enum, global = true, default_value = "det")]
    mode: ModeArg,
    /// Seed; required with `--mode rand`. Verification suites default to 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the deviation δ of the concentration bound.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of independent seeded runs (or suite trials).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Exit with status 2 when the bound is at least 1.
    #[arg(long, global = true)]
    strict: bool,
    /// Coordinate tolerance for fractional points.
    #[arg(long = "coord-tol", env = "PIPAGE_TOL", global = true, hide_env_values = true)]
    coord_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    #[value(alias = "deterministic")]
    Det,
    #[value(alias = "randomized")]
    Rand,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrally thin spanning tree of a connected graph.
    ThinTree {
        /// Edge list `u v [weight]`.
        #[arg(long)]
        graph: PathBuf,
    },
    /// Basis of unit vectors in isotropic position.
    Isotropic {
        /// Dense vector file; columns are the vectors.
        #[arg(long)]
        vectors: PathBuf,
        /// Probabilities as a `1 m` dense file; uniform when omitted.
        #[arg(long)]
        probs: Option<PathBuf>,
    },
    /// Column subset of size ⌊stable rank⌋.
    Css {
        /// Dense file whose columns are the unit columns of A.
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Rounds a fractional solution of Σ xᵢAᵢ ⪯ B to a matroid base.
    SdpRound(SdpArgs),
    /// Instance generators.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Numerical verification suites.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Times the applications on built-in instances.
    Bench,
}

#[derive(Args, Debug)]
struct SdpArgs {
    /// One matrix file per ground element, in element order.
    #[arg(long = "a", required = true, num_args = 1..)]
    a: Vec<PathBuf>,
    /// Right-hand side matrix file.
    #[arg(long = "b")]
    b: PathBuf,
    /// Starting point as a `1 m` dense file.
    #[arg(long)]
    x0: PathBuf,
    #[command(flatten)]
    matroid: MatroidArgs,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct MatroidArgs {
    /// Uniform matroid of the given rank.
    #[arg(long)]
    uniform: Option<usize>,
    /// Graphic matroid of an edge list.
    #[arg(long = "graph")]
    graph: Option<PathBuf>,
    /// Linear matroid of a dense vector file.
    #[arg(long)]
    linear: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Cycle-plus-matching family without spectrally thin trees.
    Bp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: f64,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Concavity of the Lieb-type curve near zero.
    Lieb {
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Concavity of the estimators along swap directions.
    Swaps,
    /// Estimators against exhaustive enumeration of their events.
    Pessimism,
    /// The chain of means √(xy) ≤ LM ≤ AGM ≤ (x+y)/2.
    Carlson,
    /// Empirical marginals of randomized rounding.
    Marginals,
}

const CARLSON_PAIRS: usize = 1000;

struct Outcome {
    report: Value,
    summary: String,
    status: u8,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors share status 1 with every other failure; 2 is
            // reserved for `--strict`
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => match emit(&cli, &outcome) {
            Ok(()) => ExitCode::from(outcome.status),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let text = match &outcome.report {
        Value::String(s) => s.clone(),
        v => report::render(v),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if !outcome.summary.is_empty() {
        eprintln!("{}", outcome.summary);
    }
    Ok(())
}

fn app_config(cli: &Cli, seed: u64) -> Result<AppConfig> {
    let mut cfg = match cli.mode {
        ModeArg::Det => AppConfig::deterministic(),
        ModeArg::Rand => AppConfig::randomized(seed),
    };
    cfg.delta = cli.delta;
    if let Some(tol) = cli.coord_tol {
        if !(tol > 0.0 && tol.is_finite()) {
            bail!("coordinate tolerance {tol} must be positive");
        }
        cfg.pipage.coord_tol = tol;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::ThinTree { graph } => {
            let g = io::read_edge_list(graph)?;
            rounding_runs(cli, |cfg| Ok(apps::thin_tree(&g, cfg)?))
        }
        Command::Isotropic { vectors, probs } => {
            let ws = io::read_vectors(vectors)?;
            let p = match probs {
                Some(path) => read_point(path)?,
                None => vec![1.0 / ws.len().max(1) as f64; ws.len()],
            };
            rounding_runs(cli, |cfg| Ok(apps::isotropic_basis(&ws, &p, cfg)?))
        }
        Command::Css { matrix } => {
            let cols = io::read_vectors(matrix)?;
            rounding_runs(cli, |cfg| Ok(apps::column_subset(&cols, cfg)?))
        }
        Command::SdpRound(args) => {
            let a: Vec<SymMatrix> = args.a.iter().map(|p| io::read_matrix(p)).collect::<Result<_, _>>()?;
            let b = io::read_matrix(&args.b)?;
            let x0 = read_point(&args.x0)?;
            let matroid = read_matroid(&args.matroid, a.len())?;
            rounding_runs(cli, |cfg| Ok(apps::sdp_round(&a, &b, &matroid, &x0, cfg)?))
        }
        Command::Gen(GenCommand::Bp { n, k }) => {
            let g = graphs::boyd_pulleyblank_graph(*n, *k)?;
            Ok(Outcome {
                report: Value::String(io::write_edge_list(&g)),
                summary: format!("generated {} vertices, {} edges", g.vertex_count(), g.edge_count()),
                status: 0,
            })
        }
        Command::Verify(suite) => run_verify(cli, suite),
        Command::Bench => bench(cli),
    }
}

/// Runs an application once, or `--trials` times with consecutive seeds.
fn rounding_runs<F>(cli: &Cli, app: F) -> Result<Outcome>
where
    F: Fn(&AppConfig) -> Result<RoundingReport> + Sync,
{
    let trials = cli.trials.unwrap_or(1);
    let base_seed = match (cli.mode, cli.seed) {
        (ModeArg::Rand, None) => bail!("--mode rand requires --seed"),
        (_, seed) => seed.unwrap_or(0),
    };
    if trials > 1 && cli.mode == ModeArg::Det {
        bail!("--trials > 1 needs --mode rand; deterministic runs are identical");
    }
    let reports: Vec<RoundingReport> = (0..trials)
        .into_par_iter()
        .map(|i| app(&app_config(cli, base_seed.wrapping_add(i))?))
        .collect::<Result<_>>()?;
    let vacuous = reports.iter().any(|r| r.bound_value >= 1.0);
    let mut summary: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{} seed {}: |S| = {}, alpha achieved {:.6} / certified {:.6}, bound {:.3e}, {} steps",
                r.mode.as_str(),
                r.seed,
                r.selected.len(),
                r.alpha_achieved,
                r.alpha_certified,
                r.bound_value,
                r.trajectory.steps.len()
            )
        })
        .collect();
    if vacuous {
        summary.push("warning: bound ≥ 1, the certificate carries no guarantee".into());
    }
    let report = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        json!({ "runs": reports.iter().map(RoundingReport::to_json).collect::<Vec<_>>() })
    };
    Ok(Outcome {
        report,
        summary: summary.join("\n"),
        status: if vacuous && cli.strict { 2 } else { 0 },
    })
}

fn read_point(path: &Path) -> Result<Vec<f64>> {
    let cols = io::read_vectors(path)?;
    if cols.iter().any(|c| c.len() != 1) {
        bail!("{}: expected a single row (header `1 m`)", path.display());
    }
    Ok(cols.into_iter().map(|c| c[0]).collect())
}

fn read_matroid(args: &MatroidArgs, m: usize) -> Result<Matroid> {
    if let Some(k) = args.uniform {
        return Ok(Matroid::uniform(m, k));
    }
    if let Some(path) = &args.graph {
        let g: WeightedGraph = io::read_edge_list(path)?;
        return Ok(g.matroid());
    }
    if let Some(path) = &args.linear {
        return Ok(Matroid::linear(io::read_vectors(path)?)?);
    }
    unreachable!("clap requires one matroid source")
}

fn suite_trials(cli: &Cli, default: u64) -> u64 {
    cli.trials.unwrap_or(default)
}

fn run_verify(cli: &Cli, suite: &VerifyCommand) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(0);
    let (report, ok) = match suite {
        VerifyCommand::Lieb { dim } => {
            if *dim == 0 {
                bail!("--dim must be at least 1");
            }
            let values: Vec<f64> = (0..suite_trials(cli, 100))
                .into_par_iter()
                .map(|t| verify::lieb_trial(*dim, seed, t))
                .collect::<Result<_, _>>()?;
            let ok = values.iter().all(|&v| v <= verify::CONCAVITY_TOL);
            (verify::lieb_report(*dim, seed, &values), ok)
        }
        VerifyCommand::Swaps => {
            let outcomes: Vec<_> = (0..suite_trials(cli, 500))
                .into_par_iter()
                .map(|t| verify::swaps_trial(seed, t))
                .collect::<Result<_, _>>()?;
            let ok = outcomes.iter().all(|o| o.1 <= verify::CONCAVITY_TOL);
            (verify::swaps_report(seed, &outcomes), ok)
        }
        VerifyCommand::Pessimism => {
            let outcomes: Vec<_> = (0..suite_trials(cli, 300))
                .into_par_iter()
                .map(|t| verify::pessimism_trial(seed, t))
                .collect::<Result<_, _>>()?;
            let ok = outcomes.iter().all(|o| o.excess() <= verify::PESSIMISM_TOL);
            (verify::pessimism_report(seed, &outcomes), ok)
        }
        VerifyCommand::Carlson => {
            let values: Vec<f64> = (0..suite_trials(cli, 100))
                .into_par_iter()
                .map(|t| verify::carlson_trial(seed, t, CARLSON_PAIRS))
                .collect::<Result<_, _>>()?;
            let ok = values.iter().all(|&v| v <= verify::CARLSON_TOL);
            (verify::carlson_report(seed, CARLSON_PAIRS, &values), ok)
        }
        VerifyCommand::Marginals => {
            let trials = suite_trials(cli, 10_000);
            let mut instances = Vec::new();
            let mut ok = true;
            for (name, matroid, x0) in verify::marginal_instances() {
                let ends: Vec<Vec<f64>> = (0..trials)
                    .into_par_iter()
                    .map(|t| verify::marginals_trial(&matroid, &x0, seed, t))
                    .collect::<Result<_, _>>()?;
                let r = verify::marginals_report(name, &x0, seed, &ends);
                ok &= r["within_3_sigma"] == json!(true);
                instances.push(r);
            }
            (
                json!({ "suite": "marginals", "seed": seed, "trials": trials, "instances": instances }),
                ok,
            )
        }
    };
    let summary = format!(
        "verify {}: {} ({} trials, seed {seed})",
        report["suite"].as_str().unwrap_or("?"),
        if ok { "pass" } else { "FAILURES" },
        report["trials"]
    );
    Ok(Outcome {
        report,
        summary,
        status: if ok { 0 } else { 1 },
    })
}

/// Deterministic runs on fixed instances. Timings go to stderr only, so the
/// JSON report stays reproducible.
fn bench(cli: &Cli) -> Result<Outcome> {
    let cfg = app_config(cli, cli.seed.unwrap_or(0))?;
    if cli.mode == ModeArg::Rand && cli.seed.is_none() {
        bail!("--mode rand requires --seed");
    }
    let rotation = |n: usize, m: usize| -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / m as f64;
                let mut v = vec![0.0; n];
                v[(2 * i / m) % n] = t.cos();
                v[(2 * i / m + 1) % n] = t.sin();
                v
            })
            .collect()
    };
    let css_cols = rotation(4, 12);
    let mut iso = Vec::new();
    for _ in 0..3 {
        for k in 0..6 {
            let mut e = vec![0.0; 6];
            e[k] = 1.0;
            iso.push(e);
        }
    }
    let iso_p = vec![1.0 / iso.len() as f64; iso.len()];
    type Job<'a> = (&'a str, Box<dyn Fn() -> Result<RoundingReport> + 'a>);
    let jobs: Vec<Job> = vec![
        (
            "thin-tree K8",
            Box::new(|| Ok(apps::thin_tree(&graphs::complete(8), &cfg)?)),
        ),
        (
            "thin-tree K16",
            Box::new(|| Ok(apps::thin_tree(&graphs::complete(16), &cfg)?)),
        ),
        (
            "thin-tree Q4",
            Box::new(|| Ok(apps::thin_tree(&graphs::hypercube(4), &cfg)?)),
        ),
        (
            "isotropic 3×I6",
            Box::new(|| Ok(apps::isotropic_basis(&iso, &iso_p, &cfg)?)),
        ),
        (
            "css rotations 4×12",
            Box::new(|| Ok(apps::column_subset(&css_cols, &cfg)?)),
        ),
    ];
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (name, job) in jobs {
        let start = Instant::now();
        let r = job()?;
        let secs = start.elapsed().as_secs_f64();
        summary.push(format!("{name}: {secs:.3} s, {} steps", r.trajectory.steps.len()));
        rows.push(json!({
            "instance": name,
            "ground_size": r.trajectory.start.len(),
            "steps": r.trajectory.steps.len(),
            "alpha_achieved": real(r.alpha_achieved),
            "alpha_certified": real(r.alpha_certified),
            "bound_value": real(r.bound_value),
        }));
    }
    Ok(Outcome {
        report: json!({ "bench": rows, "mode": cfg.mode.as_str(), "seed": cfg.seed }),
        summary: summary.join("\n"),
        status: 0,
    })
}
