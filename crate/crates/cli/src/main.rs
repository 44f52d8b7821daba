//! `chanbox`: batch front-end. Prints one JSON report per line; exits 0 on
//! success, 1 when a computation fails, 2 on malformed input.

mod report;
mod tasks;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use chanbox::boxtrans::DEFAULT_CHOI_DIM_CAP;
use chanbox::sdp::SolverSettings;
use chanbox::state_div::RenyiKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tasks::{BoundArgs, Context, Failure, Job, Level, Measure, Suite};

#[derive(Parser, Debug)]
#[command(name = "chanbox", version, about = "Distinguishability of quantum channel boxes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for heuristic restarts and random inputs.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Solver feasibility tolerance.
    #[arg(long, global = true, default_value_t = SolverSettings::default().feasibility_tol)]
    tol: f64,
    /// Solver duality-gap tolerance.
    #[arg(long = "gap-tol", global = true, default_value_t = SolverSettings::default().gap_tol)]
    gap_tol: f64,
    /// Random restarts of the input search for quantities without an SDP.
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,
    /// Smoothing parameter or allowed error ε.
    #[arg(long, global = true, default_value_t = 0.0)]
    eps: f64,
    /// Worker threads; independent inputs run in parallel, reports keep input order.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Divergence of state pairs, channel boxes or cq boxes.
    Divergence {
        /// What the input files hold.
        #[arg(long, value_enum, default_value_t = Level::Channel)]
        kind: Level,
        #[arg(long, value_enum)]
        measure: Measure,
        /// Rényi order.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Diamond distance ½‖N − M‖⋄ of each box.
    Diamond {
        #[arg(long = "box", required = true, num_args = 1..)]
        boxes: Vec<PathBuf>,
    },
    /// Smallest error of turning one box into another with a common superchannel.
    Transform {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Distillable distinguishability log₂M at error --eps, with the protocol.
    Distill {
        #[arg(long = "box", required = true, num_args = 1..)]
        boxes: Vec<PathBuf>,
    },
    /// Dilution cost log₂M at error --eps, with the protocol.
    Dilute {
        #[arg(long = "box", required = true, num_args = 1..)]
        boxes: Vec<PathBuf>,
    },
    /// Evaluate an inequality on each input.
    Bounds {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Box files (cq files for cq-upper).
        inputs: Vec<PathBuf>,
        /// Evaluate on this many seeded random qubit boxes instead of files.
        #[arg(long)]
        random: Option<usize>,
        /// Rényi order [default: 2 for cq-upper, 0.75 otherwise].
        #[arg(long)]
        alpha: Option<f64>,
        /// Second smoothing parameter of min-max [default: --eps].
        #[arg(long)]
        eps2: Option<f64>,
        #[arg(long, value_enum, default_value_t = Renyi::Sandwiched)]
        renyi: Renyi,
        /// Channel compared against in pseudo-continuity.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        /// Source copies in parallel-converse.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Target copies in parallel-converse.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Largest Choi dimension of a tensor power.
        #[arg(long, default_value_t = DEFAULT_CHOI_DIM_CAP)]
        cap: usize,
    },
    /// Replay a superchannel, bare or embedded in a distill, dilute or transform report.
    Verify {
        #[arg(long)]
        superchannel: PathBuf,
        /// Original box of a distill or dilute report.
        #[arg(long = "box")]
        boxfile: Option<PathBuf>,
        #[arg(long, conflicts_with = "boxfile")]
        source: Option<PathBuf>,
        #[arg(long, conflicts_with = "boxfile")]
        target: Option<PathBuf>,
    },
    /// Built-in demonstrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Subcommand, Debug)]
enum Demo {
    /// Min-relative entropy of (id, diag(1, i)): 1 bit at one copy, +inf at two.
    Acin,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Renyi {
    Petz,
    Sandwiched,
}

impl From<Renyi> for RenyiKind {
    fn from(r: Renyi) -> Self {
        match r {
            Renyi::Petz => RenyiKind::Petz,
            Renyi::Sandwiched => RenyiKind::Sandwiched,
        }
    }
}

fn context(task: &str, c: &Common) -> Context {
    Context {
        task: task.to_string(),
        settings: SolverSettings { feasibility_tol: c.tol, gap_tol: c.gap_tol, ..SolverSettings::default() },
        seed: c.seed,
        restarts: c.restarts,
        eps: c.eps,
        parameters: BTreeMap::new(),
    }
}

fn plan(cli: &Cli) -> Result<(Context, Vec<Job<'static>>), Failure> {
    let c = &cli.common;
    if !(c.tol > 0.0 && c.gap_tol > 0.0) {
        return Err(Failure::Input("--tol and --gap-tol must be positive".into()));
    }
    Ok(match &cli.command {
        Command::Divergence { kind, measure, alpha, inputs } => {
            let ctx = context("divergence", c).with("kind", kind).with("measure", measure).with("alpha", alpha);
            let jobs = tasks::divergence(&ctx, *kind, *measure, *alpha, inputs);
            (ctx, jobs)
        }
        Command::Diamond { boxes } => {
            let ctx = context("diamond", c);
            let jobs = tasks::diamond(&ctx, boxes);
            (ctx, jobs)
        }
        Command::Transform { source, target } => {
            let ctx = context("transform", c);
            let jobs = tasks::transform(&ctx, source, target);
            (ctx, jobs)
        }
        Command::Distill { boxes } => {
            let ctx = context("distill", c);
            let jobs = tasks::distill(&ctx, boxes);
            (ctx, jobs)
        }
        Command::Dilute { boxes } => {
            let ctx = context("dilute", c);
            let jobs = tasks::dilute(&ctx, boxes);
            (ctx, jobs)
        }
        Command::Bounds { suite, inputs, random, alpha, eps2, renyi, reference, source, target, n, m, cap } => {
            let alpha = alpha.or(suite.default_alpha());
            let mut ctx =
                context("bounds", c).with("suite", suite).with("alpha", alpha).with("renyi", RenyiKind::from(*renyi));
            if *suite == Suite::MinMax {
                ctx = ctx.with("eps2", eps2.unwrap_or(c.eps));
            }
            if *suite == Suite::ParallelConverse {
                ctx = ctx.with("n", n).with("m", m).with("cap", cap);
            }
            let sources = match random {
                Some(count) if !inputs.is_empty() => {
                    return Err(Failure::Input(format!("pass either files or --random {count}, not both")))
                }
                Some(count) => {
                    ctx = ctx.with("random", count);
                    tasks::random_sources(*suite, *count, c.seed)
                }
                None => tasks::files(inputs),
            };
            let args = BoundArgs {
                suite: *suite,
                alpha,
                eps2: *eps2,
                renyi: (*renyi).into(),
                n: *n,
                m: *m,
                cap: *cap,
                reference: reference.clone(),
                source: source.clone(),
                target: target.clone(),
            };
            let jobs = tasks::bounds(&ctx, args, sources)?;
            (ctx, jobs)
        }
        Command::Verify { superchannel, boxfile, source, target } => {
            let ctx = context("verify", c);
            let jobs = tasks::verify(&ctx, superchannel, boxfile.as_deref(), source.as_deref(), target.as_deref());
            (ctx, jobs)
        }
        Command::Demo { which: Demo::Acin } => {
            let ctx = context("demo_acin", c);
            let jobs = tasks::demo_acin(&ctx);
            (ctx, jobs)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (ctx, jobs) = match plan(&cli) {
        Ok(p) => p,
        Err(Failure::Input(m)) | Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let reports = tasks::run_all(&ctx, jobs, cli.common.jobs);
    let mut code = 0;
    for r in &reports {
        println!("{}", serde_json::to_string(r).expect("report serializes"));
        if let Some(e) = &r.error {
            eprintln!("error: {e}");
        }
        code = code.max(r.status.exit_code());
    }
    ExitCode::from(code)
}
