//! `symou`: checks and reports for symmetric Ornstein-Uhlenbeck models.
//!
//! Exit status: 0 when every check passed, 2 when a check failed, 1 on
//! input errors (message on standard error).

// `!(x > y)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod output;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Example2Args, MehlerArgs, MethodArg, SimulateArgs};
use manifest::{now_ms, RunManifest, Timestamps};
use output::{Format, Outcome};
use symou::quadrature::DEFAULT_NODES;
use symou::symmetry::DEFAULT_TOL;
use symou::{Error, OUModel};

#[derive(Parser)]
#[command(name = "symou", version, about = "Symmetric Ornstein-Uhlenbeck semigroups")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance of the symmetry checks.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Directory for report.json and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Record wall-clock timestamps in the manifest (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timestamps: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reversibility and invariant-measure checks.
    Check {
        /// Model document, or `-` for standard input.
        model: PathBuf,
        /// Fail (exit 2) unless the model is symmetric.
        #[arg(long)]
        expect_symmetric: bool,
    },
    /// Invariant and finite-time covariances.
    Gramian {
        model: PathBuf,
        /// Comma-separated times; defaults to {0.01, 0.1, 1, 10}/‖A‖.
        #[arg(long)]
        times: Option<String>,
    },
    /// Spectral gap and the low generator spectrum.
    Gap {
        model: PathBuf,
        /// Chaos order of the listed generator spectrum.
        #[arg(long, default_value_t = 2)]
        degree: usize,
    },
    /// Transition semigroup applied to a polynomial observable.
    Mehler {
        model: PathBuf,
        /// Observable document.
        #[arg(long)]
        observable: PathBuf,
        /// Comma-separated evaluation point (default: origin).
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Gauss-Hermite nodes per axis.
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Target exponent of the hypercontractivity check (p = 2).
        #[arg(long, default_value_t = 4.0)]
        q: f64,
    },
    /// Sobolev norms and Meyer-type ratios over an observable corpus.
    Sobolev {
        model: PathBuf,
        /// List of observable documents.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Random points for the pointwise identities.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Exact-in-law path simulation.
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Comma-separated start point (default: stationary law).
        #[arg(long)]
        start: Option<String>,
        /// Fail (exit 2) when detailed balance is rejected at |z| > 4.
        #[arg(long)]
        expect_symmetric: bool,
    },
    /// Trace, covariance and gradient diagnostics of a symmetric model.
    Diagnostics { model: PathBuf },
    /// Every applicable check in one report.
    Report {
        model: PathBuf,
        /// Optional observable corpus for the Sobolev section.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        expect_symmetric: bool,
    },
    /// Diagonal chain α_k = −1/k, q_k = k^{-3}.
    Example1 {
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Finite-difference weighted heat equation.
    Example2 {
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.09)]
        m: f64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        /// Truncation half-width (default 40/κ).
        #[arg(long)]
        halfwidth: Option<f64>,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[arg(long, default_value_t = 128)]
        refinement_base: usize,
        #[arg(long, default_value_t = 2)]
        doublings: usize,
    },
}

fn load(path: &Path) -> symou::Result<OUModel> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        symou::model::parse_model(&text)
    } else {
        symou::model::load_model(path)
    }
}

fn list(s: Option<&str>) -> symou::Result<Option<Vec<f64>>> {
    s.map(commands::parse_list).transpose()
}

fn run(cli: &Cli) -> symou::Result<Outcome> {
    let ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
    };
    if !(ctx.tol > 0.0) {
        return Err(Error::InvalidArgument("--tol must be positive".into()));
    }
    match &cli.command {
        Command::Check {
            model,
            expect_symmetric,
        } => commands::check(&load(model)?, ctx, *expect_symmetric),
        Command::Gramian { model, times } => commands::gramian(&load(model)?, ctx, list(times.as_deref())?),
        Command::Gap { model, degree } => commands::gap(&load(model)?, ctx, *degree),
        Command::Mehler {
            model,
            observable,
            point,
            time,
            method,
            nodes,
            samples,
            q,
        } => commands::mehler(
            &load(model)?,
            ctx,
            MehlerArgs {
                observable,
                point: list(point.as_deref())?,
                time: *time,
                method: *method,
                nodes: *nodes,
                samples: *samples,
                q: *q,
            },
        ),
        Command::Sobolev {
            model,
            corpus,
            p,
            points,
        } => commands::sobolev(&load(model)?, ctx, corpus, *p, *points),
        Command::Simulate {
            model,
            dt,
            steps,
            samples,
            start,
            expect_symmetric,
        } => commands::simulate(
            &load(model)?,
            ctx,
            SimulateArgs {
                dt: *dt,
                steps: *steps,
                samples: *samples,
                start: list(start.as_deref())?,
                expect_symmetric: *expect_symmetric,
            },
        ),
        Command::Diagnostics { model } => commands::diagnostics(&load(model)?, ctx),
        Command::Report {
            model,
            corpus,
            expect_symmetric,
        } => commands::report(&load(model)?, ctx, corpus.as_deref(), *expect_symmetric),
        Command::Example1 { n } => commands::example1(*n, ctx),
        Command::Example2 {
            kappa,
            m,
            n,
            halfwidth,
            samples,
            refinement_base,
            doublings,
        } => commands::example2(
            Example2Args {
                kappa: *kappa,
                m: *m,
                n: *n,
                halfwidth: *halfwidth,
                samples: *samples,
                refinement_base: *refinement_base,
                doublings: *doublings,
            },
            ctx,
        ),
    }
}

/// Errors that are verdicts about the model rather than bad input.
fn is_check_failure(e: &Error) -> bool {
    matches!(e, Error::NotSymmetric { .. } | Error::Hypothesis(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = now_ms();
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("symou: {e}");
            return ExitCode::from(if is_check_failure(&e) { 2 } else { 1 });
        }
    };
    let mut manifest = RunManifest::new(command, cli.seed);
    if cli.timestamps {
        manifest.timestamps = Some(Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        });
    }
    if let Err(e) = output::emit(manifest, &outcome, cli.out.as_deref(), cli.format) {
        eprintln!("symou: cannot write output: {e}");
        return ExitCode::from(1);
    }
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("symou: check failed: {} ({:e} against {:e})", c.name, c.value, c.limit);
    }
    ExitCode::from(if outcome.passed() { 0 } else { 2 })
}
