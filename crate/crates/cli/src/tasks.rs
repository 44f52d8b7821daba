use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chanbox::boxtrans::{
    bound_cq_smooth_dmax_upper, bound_parallel_converse, bound_pseudo_continuity, bound_smooth_dmax_lower,
    bound_smooth_min_max, dilute_eps, distill_eps, tensor_power_box, transform_error, verify_protocol, ProtocolResult,
    TransformResult, SUPERCHANNEL_VALIDATION_TOL,
};
use chanbox::channel_div::{
    channel_div_heuristic, channel_dmax, channel_dmax_eps, channel_dmin_eps, cq_divergence, diamond_distance,
    unitary_dmin, DivergenceReport, HeuristicSettings,
};
use chanbox::io::{
    parse_box, parse_channel, parse_cq, parse_state_pair, parse_superchannel, BoxSpec, CqSpec, InputError,
};
use chanbox::linalg::{c64, kron_matrix, to_pairs, CMatrix, DEFAULT_HERMITICITY_TOL, DEFAULT_RANK_TOL};
use chanbox::qobjects::{validate_superchannel, CQBox, ChannelBox, Superchannel};
use chanbox::random::{derive_seed, random_box, random_cq_pairs, rng};
use chanbox::sdp::SolverSettings;
use chanbox::state_div::{state_divergence, Divergence, ExtendedReal, RenyiKind};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::report::{Config, InputDigest, Report, Status, Timing};

/// Why a job produced no result.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Compute(String),
}

impl From<chanbox::Error> for Failure {
    fn from(e: chanbox::Error) -> Self {
        use chanbox::Error as E;
        match e {
            E::Solver(_) | E::Infeasible(_) | E::SpectralDomain(_) | E::Seize(_) => Failure::Compute(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<Produced, Failure>;

pub struct Produced {
    pub result: Value,
    pub note: Option<String>,
}

fn produced(v: impl Serialize) -> Outcome {
    Ok(Produced { result: to_value(v)?, note: None })
}

fn to_value(v: impl Serialize) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Compute(format!("serialization: {e}")))
}

/// Where a job input comes from.
pub enum Source {
    File(PathBuf),
    Inline { name: String, text: String },
}

impl Source {
    fn name(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Inline { name, .. } => name.clone(),
        }
    }

    fn load(&self) -> Result<String, Failure> {
        match self {
            Source::File(p) => std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
            Source::Inline { text, .. } => Ok(text.clone()),
        }
    }
}

pub struct Loaded {
    pub name: String,
    pub text: String,
}

impl Loaded {
    fn parse<T>(&self, parser: fn(&str) -> Result<T, InputError>) -> Result<T, Failure> {
        parser(&self.text).map_err(|e| Failure::Input(format!("{}: {e}", self.name)))
    }
}

type Runner<'a> = Box<dyn Fn(&[Loaded]) -> Outcome + Send + Sync + 'a>;

pub struct Job<'a> {
    pub sources: Vec<Source>,
    pub run: Runner<'a>,
}

impl<'a> Job<'a> {
    pub fn new(sources: Vec<Source>, run: impl Fn(&[Loaded]) -> Outcome + Send + Sync + 'a) -> Self {
        Self { sources, run: Box::new(run) }
    }
}

/// Shared configuration of one invocation.
#[derive(Clone, Debug)]
pub struct Context {
    pub task: String,
    pub settings: SolverSettings,
    pub seed: u64,
    pub restarts: usize,
    pub eps: f64,
    pub parameters: BTreeMap<String, Value>,
}

impl Context {
    pub fn config(&self) -> Config {
        Config {
            solver: self.settings,
            hermiticity_tol: DEFAULT_HERMITICITY_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            seed: self.seed,
            restarts: self.restarts,
            eps: self.eps,
            parameters: self.parameters.clone(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).expect("plain parameter"));
        self
    }

    fn heuristic(&self) -> HeuristicSettings {
        HeuristicSettings::new(self.restarts, self.seed)
    }
}

fn run_job(ctx: &Context, job: &Job) -> Report {
    let started_at = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default();
    let clock = Instant::now();
    let mut inputs = Vec::new();
    let mut loaded = Vec::new();
    let mut outcome = None;
    for source in &job.sources {
        match source.load() {
            Ok(text) => {
                inputs.push(InputDigest::of(&source.name(), text.as_bytes()));
                loaded.push(Loaded { name: source.name(), text });
            }
            Err(f) => {
                inputs.push(InputDigest { name: source.name(), sha256: None });
                outcome.get_or_insert(Err(f));
            }
        }
    }
    let outcome = outcome.unwrap_or_else(|| (job.run)(&loaded));
    let (status, result, note, error) = match outcome {
        Ok(p) => (Status::Ok, Some(p.result), p.note, None),
        Err(Failure::Input(m)) => (Status::InputError, None, None, Some(m)),
        Err(Failure::Compute(m)) => (Status::ComputationError, None, None, Some(m)),
    };
    Report {
        task: ctx.task.clone(),
        inputs,
        config: ctx.config(),
        status,
        result,
        note,
        error,
        timing: Timing { started_at, elapsed_seconds: clock.elapsed().as_secs_f64() },
    }
}

/// Runs jobs on `jobs` workers; reports keep the job order.
pub fn run_all(ctx: &Context, work: Vec<Job>, jobs: usize) -> Vec<Report> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| work.par_iter().map(|job| run_job(ctx, job)).collect())
}

pub fn files(paths: &[PathBuf]) -> Vec<Source> {
    paths.iter().map(|p| Source::File(p.clone())).collect()
}

fn check_eps(eps: f64) -> Result<(), Failure> {
    if (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Failure::Input(format!("--eps must lie in [0, 1), got {eps}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    State,
    Channel,
    Cq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Trace distance; the diamond distance for channels.
    Trace,
    /// −log₂ of the fidelity.
    Fidelity,
    Relative,
    /// Petz Rényi divergence of order --alpha.
    Petz,
    /// Sandwiched Rényi divergence of order --alpha.
    Sandwiched,
    /// Min-relative entropy; smoothed when --eps > 0.
    Dmin,
    /// Max-relative entropy; smoothed when --eps > 0.
    Dmax,
}

fn divergence_of(measure: Measure, alpha: Option<f64>) -> Result<Divergence, Failure> {
    let order = || alpha.ok_or_else(|| Failure::Input(format!("--alpha is required for {measure:?}")));
    Ok(match measure {
        Measure::Trace => Divergence::Trace,
        Measure::Fidelity => Divergence::Fidelity,
        Measure::Relative => Divergence::Relative,
        Measure::Petz => Divergence::Petz(order()?),
        Measure::Sandwiched => Divergence::Sandwiched(order()?),
        Measure::Dmin => Divergence::Dmin,
        Measure::Dmax => Divergence::Dmax,
    })
}

/// Channel quantity: SDP or closed form where one exists, heuristic search
/// over inputs otherwise.
fn channel_report(ctx: &Context, b: &ChannelBox, div: Divergence) -> Result<DivergenceReport, Failure> {
    let eps = ctx.eps;
    Ok(match div {
        Divergence::Trace => diamond_distance(&b.first, &b.second, &ctx.settings)?,
        Divergence::Dmin => channel_dmin_eps(b, eps, &ctx.settings)?.report,
        Divergence::Dmax if eps == 0.0 => DivergenceReport::closed_form(channel_dmax(b)?),
        Divergence::Dmax => channel_dmax_eps(b, eps, &ctx.settings)?.report,
        other => channel_div_heuristic(other, b, &ctx.heuristic())?,
    })
}

fn smoothed(measure: Measure) -> bool {
    matches!(measure, Measure::Dmin | Measure::Dmax)
}

pub fn divergence(
    ctx: &Context,
    level: Level,
    measure: Measure,
    alpha: Option<f64>,
    inputs: &[PathBuf],
) -> Vec<Job<'static>> {
    let ctx = ctx.clone();
    files(inputs)
        .into_iter()
        .map(|source| {
            let ctx = ctx.clone();
            Job::new(vec![source], move |l| {
                check_eps(ctx.eps)?;
                let div = divergence_of(measure, alpha)?;
                if ctx.eps > 0.0 && !smoothed(measure) {
                    return Err(Failure::Input("--eps applies only to dmin and dmax".into()));
                }
                let report = match level {
                    Level::Channel => channel_report(&ctx, &l[0].parse(parse_box)?, div)?,
                    Level::State => {
                        let (rho, sigma) = l[0].parse(parse_state_pair)?;
                        if ctx.eps > 0.0 {
                            // A replacer with trivial input carries exactly the state quantity.
                            channel_report(&ctx, &ChannelBox::replacer(&rho, &sigma, 1)?, div)?
                        } else {
                            DivergenceReport::closed_form(state_divergence(div, &rho, &sigma)?)
                        }
                    }
                    Level::Cq => {
                        let cq = l[0].parse(parse_cq)?;
                        if ctx.eps > 0.0 {
                            channel_report(&ctx, &cq.to_box(), div)?
                        } else {
                            DivergenceReport::closed_form(cq_divergence(&cq, div)?)
                        }
                    }
                };
                produced(report)
            })
        })
        .collect()
}

pub fn diamond(ctx: &Context, boxes: &[PathBuf]) -> Vec<Job<'static>> {
    let settings = ctx.settings;
    files(boxes)
        .into_iter()
        .map(|s| {
            Job::new(vec![s], move |l| {
                let b = l[0].parse(parse_box)?;
                produced(diamond_distance(&b.first, &b.second, &settings)?)
            })
        })
        .collect()
}

pub fn transform(ctx: &Context, source: &Path, target: &Path) -> Vec<Job<'static>> {
    let settings = ctx.settings;
    let sources = vec![Source::File(source.to_path_buf()), Source::File(target.to_path_buf())];
    vec![Job::new(sources, move |l| {
        produced(transform_error(&l[0].parse(parse_box)?, &l[1].parse(parse_box)?, &settings)?)
    })]
}

const PERFECTLY_DISTINGUISHABLE: &str = "perfectly distinguishable";

pub fn distill(ctx: &Context, boxes: &[PathBuf]) -> Vec<Job<'static>> {
    let (settings, eps) = (ctx.settings, ctx.eps);
    files(boxes)
        .into_iter()
        .map(|s| {
            Job::new(vec![s], move |l| {
                check_eps(eps)?;
                let r = distill_eps(&l[0].parse(parse_box)?, eps, &settings)?;
                let note = (!r.log2_m.is_finite()).then(|| PERFECTLY_DISTINGUISHABLE.to_string());
                Ok(Produced { result: to_value(&r)?, note })
            })
        })
        .collect()
}

pub fn dilute(ctx: &Context, boxes: &[PathBuf]) -> Vec<Job<'static>> {
    let (settings, eps) = (ctx.settings, ctx.eps);
    files(boxes)
        .into_iter()
        .map(|s| {
            Job::new(vec![s], move |l| {
                check_eps(eps)?;
                produced(dilute_eps(&l[0].parse(parse_box)?, eps, &settings)?)
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// D_min^{ε₁} ≤ D_max^{ε₂} + log₂(1/(1−ε₁−ε₂)) on each box.
    MinMax,
    /// Smooth max upper bound on each cq box (order > 1).
    CqUpper,
    /// Rényi lower bounds on the smooth max-relative entropy.
    DmaxLower,
    /// Pseudo-continuity of (first, second) against --reference.
    PseudoContinuity,
    /// Converse for an (n, m, ε) parallel transformation --source → --target.
    ParallelConverse,
}

impl Suite {
    pub fn default_alpha(self) -> Option<f64> {
        match self {
            Suite::MinMax => None,
            Suite::CqUpper => Some(2.0),
            _ => Some(0.75),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundArgs {
    pub suite: Suite,
    pub alpha: Option<f64>,
    pub eps2: Option<f64>,
    pub renyi: RenyiKind,
    pub n: usize,
    pub m: usize,
    pub cap: usize,
    pub reference: Option<PathBuf>,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
}

/// Random qubit boxes (or 3-symbol cq boxes) as inline inputs.
pub fn random_sources(suite: Suite, count: usize, seed: u64) -> Vec<Source> {
    (0..count)
        .map(|i| {
            let mut r = rng(derive_seed(seed, i as u64));
            let text = if suite == Suite::CqUpper {
                let cq = CQBox::new(random_cq_pairs(3, 2, &mut r)).expect("equal dimensions");
                serde_json::to_string(&CqSpec::from_cq(&cq))
            } else {
                serde_json::to_string(&BoxSpec::from_box(&random_box(2, 2, &mut r)))
            };
            Source::Inline { name: format!("random[{i}]"), text: text.expect("serializable spec") }
        })
        .collect()
}

pub fn bounds(ctx: &Context, args: BoundArgs, mut sources: Vec<Source>) -> Result<Vec<Job<'static>>, Failure> {
    let ctx = ctx.clone();
    let alpha = args.alpha.or(args.suite.default_alpha());
    let need =
        |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Input(format!("{flag} is required for this suite")));
    Ok(match args.suite {
        Suite::ParallelConverse => {
            let (Some(s), Some(t)) = (args.source.clone(), args.target.clone()) else {
                return Err(Failure::Input("parallel-converse needs --source and --target".into()));
            };
            let alpha = need(alpha, "--alpha")?;
            vec![Job::new(vec![Source::File(s), Source::File(t)], move |l| {
                let h = ctx.heuristic();
                let (src, tgt) = (l[0].parse(parse_box)?, l[1].parse(parse_box)?);
                produced(bound_parallel_converse(&src, &tgt, args.n, args.m, ctx.eps, args.renyi, alpha, args.cap, &h)?)
            })]
        }
        suite => {
            if sources.is_empty() {
                return Err(Failure::Input("no inputs: pass files or --random".into()));
            }
            let reference = match suite {
                Suite::PseudoContinuity => Some(
                    args.reference
                        .clone()
                        .ok_or_else(|| Failure::Input("pseudo-continuity needs --reference".into()))?,
                ),
                _ => None,
            };
            sources
                .drain(..)
                .map(|s| {
                    let ctx = ctx.clone();
                    let mut inputs = vec![s];
                    inputs.extend(reference.clone().map(Source::File));
                    let args = args.clone();
                    Job::new(inputs, move |l| {
                        let (settings, h) = (&ctx.settings, ctx.heuristic());
                        match suite {
                            Suite::MinMax => {
                                let eps2 = args.eps2.unwrap_or(ctx.eps);
                                produced(bound_smooth_min_max(&l[0].parse(parse_box)?, ctx.eps, eps2, settings)?)
                            }
                            Suite::CqUpper => {
                                let alpha = need(alpha, "--alpha")?;
                                produced(bound_cq_smooth_dmax_upper(&l[0].parse(parse_cq)?, alpha, ctx.eps, settings)?)
                            }
                            Suite::DmaxLower => {
                                let alpha = need(alpha, "--alpha")?;
                                produced(bound_smooth_dmax_lower(
                                    &l[0].parse(parse_box)?,
                                    alpha,
                                    ctx.eps,
                                    args.renyi,
                                    settings,
                                    &h,
                                )?)
                            }
                            Suite::PseudoContinuity => {
                                let alpha = need(alpha, "--alpha")?;
                                let (b, m) = (l[0].parse(parse_box)?, l[1].parse(parse_channel)?);
                                produced(bound_pseudo_continuity(
                                    args.renyi, alpha, &b.first, &b.second, &m, settings, &h,
                                )?)
                            }
                            Suite::ParallelConverse => unreachable!("handled above"),
                        }
                    })
                })
                .collect()
        }
    })
}

/// Superchannel plus the boxes it should map between, read from either a
/// bare superchannel file or a report that embeds one.
fn replay_target(l: &[Loaded], has_box: bool) -> Result<(Superchannel, ChannelBox, ChannelBox, Option<f64>), Failure> {
    let extra = &l[1..];
    let pair = |what: &str| -> Result<(ChannelBox, ChannelBox), Failure> {
        match extra {
            [s, t] if !has_box => Ok((s.parse(parse_box)?, t.parse(parse_box)?)),
            _ => Err(Failure::Input(format!("{what} needs --source and --target"))),
        }
    };
    if let Ok(theta) = parse_superchannel(&l[0].text) {
        let (s, t) = pair("a bare superchannel")?;
        return Ok((theta, s, t, None));
    }
    let report: Report = serde_json::from_str(&l[0].text)
        .map_err(|e| Failure::Input(format!("{}: neither a superchannel nor a report ({e})", l[0].name)))?;
    let result = report.result.ok_or_else(|| Failure::Input(format!("{}: report carries no result", l[0].name)))?;
    let bad = |e: serde_json::Error| Failure::Input(format!("{}: result: {e}", l[0].name));
    match report.task.as_str() {
        "distill" | "dilute" => {
            let protocol: ProtocolResult = serde_json::from_value(result).map_err(bad)?;
            let [b] = extra else {
                return Err(Failure::Input("a distill or dilute report needs --box".into()));
            };
            let b = b.parse(parse_box)?;
            let (Some(theta), Some((s, t))) = (protocol.superchannel.clone(), protocol.boxes(&b)?) else {
                return Err(Failure::Input("the report has an infinite value and no superchannel".into()));
            };
            Ok((theta, s, t, Some(protocol.epsilon)))
        }
        "transform" => {
            let t: TransformResult = serde_json::from_value(result).map_err(bad)?;
            let (s, tg) = pair("a transform report")?;
            Ok((t.superchannel, s, tg, Some(t.epsilon_star)))
        }
        other => Err(Failure::Input(format!("{}: cannot replay a {other} report", l[0].name))),
    }
}

pub fn verify(
    ctx: &Context,
    superchannel: &Path,
    boxfile: Option<&Path>,
    source: Option<&Path>,
    target: Option<&Path>,
) -> Vec<Job<'static>> {
    let settings = ctx.settings;
    let mut sources = vec![Source::File(superchannel.to_path_buf())];
    let has_box = boxfile.is_some();
    sources.extend([boxfile, source, target].into_iter().flatten().map(|p| Source::File(p.to_path_buf())));
    vec![Job::new(sources, move |l| {
        let (theta, s, t, expected) = replay_target(l, has_box)?;
        let validation = validate_superchannel(&theta, SUPERCHANNEL_VALIDATION_TOL);
        let check = verify_protocol(&theta, &s, &t, &settings)?;
        produced(json!({
            "validation": validation,
            "check": check,
            "expected_epsilon": expected,
            "validation_tol": SUPERCHANNEL_VALIDATION_TOL,
        }))
    })]
}

fn acin_unitary() -> CMatrix {
    let phases = [c64(1.0, 0.0), c64(0.0, 1.0)];
    CMatrix::from_fn(2, 2, |i, j| if i == j { phases[i] } else { c64(0.0, 0.0) })
}

fn acin_source() -> Source {
    let spec = json!({
        "first": {"kind": "unitary", "in_dim": 2, "out_dim": 2, "data": to_pairs(&CMatrix::identity(2, 2))},
        "second": {"kind": "unitary", "in_dim": 2, "out_dim": 2, "data": to_pairs(&acin_unitary())},
    });
    Source::Inline { name: "builtin:acin".into(), text: spec.to_string() }
}

/// `D_min` of `(id, diag(1, i))` at one and two copies, from the eigenvalue
/// hull and from the SDP.
pub fn demo_acin(ctx: &Context) -> Vec<Job<'static>> {
    let settings = ctx.settings;
    vec![Job::new(vec![acin_source()], move |l| {
        let b = l[0].parse(parse_box)?;
        let u = acin_unitary();
        let mut values = Vec::new();
        let mut power = u.clone();
        for n in 1..=2usize {
            let closed = unitary_dmin(&power)?;
            let sdp =
                channel_dmin_eps(&tensor_power_box(&b, n, chanbox::boxtrans::DEFAULT_CHOI_DIM_CAP)?, 0.0, &settings)?;
            values.push(json!({"n": n, "value": closed, "sdp": sdp.report}));
            power = kron_matrix(&power, &u);
        }
        let single: ExtendedReal =
            serde_json::from_value(values[0]["value"].clone()).map_err(|e| Failure::Compute(e.to_string()))?;
        let note = format!("one copy gives {} bit, two copies are perfectly distinguishable", single.value());
        Ok(Produced { result: json!({"unitary": to_pairs(&u), "values": values}), note: Some(note) })
    })]
}
