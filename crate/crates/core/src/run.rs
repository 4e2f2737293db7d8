//! Configuration-driven batches of checks and probes.
//!
//! A run validates every job before executing any of them; a job that
//! fails validation makes the whole configuration invalid. Reports are
//! deterministic for a given configuration and seed except for the
//! `timing` object.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{
    self, CatalogEntry, CheckKind, CompletenessSeed, GeodesicSeed, HeightFunctionSpec, InlineEntry, SolitonSpec,
};
use crate::dynamics::WarpODEProblem;
use crate::expr::parse;
use crate::parallel::Execution;
use crate::sampling::{SamplingPlan, DEFAULT_SEED};
use crate::soliton::StructureConstants;
use crate::verify::{self, Evidence, Outcome};

pub const REPORT_VERSION: &str = "1";
pub const SEED_ENV: &str = "WARPCHECK_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub sampling: SamplingDefaults,
    /// Per-kind tolerance overrides, keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub jobs: Vec<JobSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Soliton,
    FiberDependent,
    BaseOnly,
    Improper,
    Sc,
    Einstein,
    ConformalConstants,
    Bochner,
    CrossCheck,
    Geodesic,
    Completeness,
    WarpOde,
    HeightZero,
    /// Every check the instance lists.
    All,
}

impl JobKind {
    pub fn check(self) -> Option<CheckKind> {
        Some(match self {
            JobKind::Soliton => CheckKind::Soliton,
            JobKind::FiberDependent => CheckKind::FiberDependent,
            JobKind::BaseOnly => CheckKind::BaseOnly,
            JobKind::Improper => CheckKind::Improper,
            JobKind::Sc => CheckKind::Sc,
            JobKind::Einstein => CheckKind::Einstein,
            JobKind::ConformalConstants => CheckKind::ConformalConstants,
            JobKind::Bochner => CheckKind::Bochner,
            JobKind::CrossCheck => CheckKind::CrossCheck,
            JobKind::Geodesic => CheckKind::Geodesic,
            JobKind::Completeness => CheckKind::Completeness,
            JobKind::WarpOde | JobKind::HeightZero | JobKind::All => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            JobKind::WarpOde => "warp_ode",
            JobKind::HeightZero => "height_zero",
            JobKind::All => "all",
            k => k.check().expect("check kind").name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Instance {
    Name(String),
    Inline(Box<InlineEntry>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
}

/// One check request or probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub kind: JobKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
    /// Catalog parameters, for named instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<StructureConstants>,
    /// Replacement potential, in the instance's coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Replacement soliton function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<WarpODEProblem>,
    /// Expected zero of h for a warp ODE job.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_zero_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<HeightFunctionSpec>,
}

/// A configuration problem, with the index of the offending job if any.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub job: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.job {
            Some(j) => write!(f, "job {j}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn job(job: usize, message: impl ToString) -> Self {
        ConfigError {
            job: Some(job),
            message: message.to_string(),
        }
    }

    pub fn global(message: impl ToString) -> Self {
        ConfigError {
            job: None,
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Jobs evaluated concurrently; 1 runs them in order on this thread.
    pub jobs: usize,
    /// Seed from the environment, overriding every configured seed.
    pub seed_override: Option<u64>,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            seed_override: None,
            execution: Execution::default(),
        }
    }
}

/// Reads WARPCHECK_SEED; a value that is not a u64 is a config error.
pub fn seed_from_env() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::global(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

pub fn parse_config(src: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(src).map_err(|e| ConfigError::global(format!("invalid JSON: {e}")))?;
    let jobs = value
        .get("jobs")
        .and_then(Value::as_array)
        .ok_or_else(|| ConfigError::global("`jobs` must be an array"))?;
    // Parse jobs one at a time so errors carry their index.
    for (i, job) in jobs.iter().enumerate() {
        serde_json::from_value::<JobSpec>(job.clone()).map_err(|e| ConfigError::job(i, e))?;
    }
    serde_json::from_value(value).map_err(|e| ConfigError::global(e))
}

#[derive(Clone, Debug)]
enum Task {
    Checks {
        entry: Box<CatalogEntry>,
        checks: Vec<(CheckKind, SamplingPlan, f64)>,
    },
    WarpOde {
        problem: WarpODEProblem,
        expect_zero: Option<f64>,
    },
    Height(HeightFunctionSpec),
}

#[derive(Clone, Debug)]
struct Prepared {
    kind: JobKind,
    instance: Option<String>,
    task: Task,
}

fn samples(kind: CheckKind) -> bool {
    kind != CheckKind::Geodesic
}

fn prepare(config: &RunConfig, opts: &RunOptions) -> Result<Vec<Prepared>, ConfigError> {
    for (k, t) in &config.tolerances {
        if !(t.is_finite() && *t > 0.0) {
            return Err(ConfigError::global(format!("tolerance for `{k}` must be positive")));
        }
        if !CATALOG_CHECKS.iter().any(|c| c.name() == k) {
            return Err(ConfigError::global(format!(
                "tolerance override for unknown check `{k}`"
            )));
        }
    }
    if config.jobs.is_empty() {
        return Err(ConfigError::global("no jobs"));
    }
    config
        .jobs
        .iter()
        .enumerate()
        .map(|(i, job)| prepare_job(config, opts, job).map_err(|m| ConfigError::job(i, m)))
        .collect()
}

const CATALOG_CHECKS: [CheckKind; 11] = [
    CheckKind::Soliton,
    CheckKind::FiberDependent,
    CheckKind::BaseOnly,
    CheckKind::Improper,
    CheckKind::Sc,
    CheckKind::Einstein,
    CheckKind::ConformalConstants,
    CheckKind::Bochner,
    CheckKind::CrossCheck,
    CheckKind::Geodesic,
    CheckKind::Completeness,
];

fn prepare_job(config: &RunConfig, opts: &RunOptions, job: &JobSpec) -> Result<Prepared, String> {
    if let Some(t) = job.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err("tolerance must be positive".into());
        }
    }
    let seed = opts
        .seed_override
        .or(job.sampling.as_ref().and_then(|s| s.seed))
        .or(config.sampling.seed);
    let probe_only = |what: &str| -> Result<(), String> {
        if job.instance.is_some() || job.params.is_some() || job.f.is_some() || job.lambda.is_some() {
            return Err(format!("{what} jobs take no instance"));
        }
        Ok(())
    };
    match job.kind {
        JobKind::WarpOde => {
            probe_only("warp_ode")?;
            let problem = job.problem.clone().ok_or("warp_ode jobs need `problem`")?;
            return Ok(Prepared {
                kind: job.kind,
                instance: None,
                task: Task::WarpOde {
                    problem,
                    expect_zero: job.expect_zero_at,
                },
            });
        }
        JobKind::HeightZero => {
            probe_only("height_zero")?;
            let mut spec = job.height.clone().ok_or("height_zero jobs need `height`")?;
            if let Some(s) = opts.seed_override.or(spec.seed).or(config.sampling.seed) {
                spec.seed = Some(s);
            }
            return Ok(Prepared {
                kind: job.kind,
                instance: None,
                task: Task::Height(spec),
            });
        }
        _ => {}
    }

    let instance = job.instance.as_ref().ok_or("missing `instance`")?;
    let mut entry = match instance {
        Instance::Name(name) => catalog::build(name, job.params.as_ref()).map_err(|e| e.to_string())?,
        Instance::Inline(inline) => {
            if job.params.is_some() {
                return Err("`params` applies only to named instances".into());
            }
            inline.build().map_err(|e| e.to_string())?
        }
    };
    apply_overrides(&mut entry, job)?;

    let kinds: Vec<CheckKind> = match job.kind.check() {
        Some(k) => vec![k],
        None if !entry.checks.is_empty() => entry.checks.clone(),
        None => CATALOG_CHECKS
            .iter()
            .copied()
            .filter(|k| verify::applicable(&entry, *k).is_ok())
            .collect(),
    };
    if kinds.is_empty() {
        return Err(format!("`{}` supports no checks", entry.name));
    }
    let dim = entry.metric.dim();
    let mut checks = Vec::with_capacity(kinds.len());
    for kind in kinds {
        verify::applicable(&entry, kind).map_err(|e| e.to_string())?;
        let mut plan = entry.sampling.clone().with_execution(opts.execution);
        if plan.bounds.is_empty() {
            if let Some(b) = &config.sampling.bounds {
                plan.bounds = b.clone();
            }
        }
        if let Some(c) = config.sampling.count {
            plan.count = c;
        }
        if let Some(o) = &job.sampling {
            if let Some(b) = &o.bounds {
                plan.bounds = b.clone();
            }
            if let Some(c) = o.count {
                plan.count = c;
            }
        }
        if let Some(s) = seed {
            plan.seed = s;
        }
        if samples(kind) {
            if plan.bounds.len() != dim {
                return Err(format!(
                    "sampling box has {} intervals but `{}` has dimension {dim}",
                    plan.bounds.len(),
                    entry.name
                ));
            }
            if plan.count == 0 {
                return Err("sampling count must be positive".into());
            }
        }
        let tol = job
            .tolerance
            .or_else(|| config.tolerances.get(kind.name()).copied())
            .unwrap_or_else(|| verify::default_tolerance(kind));
        checks.push((kind, plan, tol));
    }
    Ok(Prepared {
        kind: job.kind,
        instance: Some(entry.name.clone()),
        task: Task::Checks {
            entry: Box::new(entry),
            checks,
        },
    })
}

fn apply_overrides(entry: &mut CatalogEntry, job: &JobSpec) -> Result<(), String> {
    if let Some(k) = job.constants {
        entry.constants = Some(k);
    }
    if let Some(g) = &job.geodesic {
        if g.p0.len() != entry.metric.dim() || g.v0.len() != entry.metric.dim() {
            return Err("geodesic p0 and v0 must match the chart dimension".into());
        }
        entry.geodesic = Some(g.clone());
    }
    if let Some(c) = &job.completeness {
        entry.completeness = Some(c.clone());
    }
    if job.f.is_some() || job.lambda.is_some() {
        let coords = entry.metric.coords().to_vec();
        let read = |src: &str| parse(src, &coords).map_err(|e| e.to_string());
        let current = entry.soliton.clone();
        let f = match (&job.f, &current) {
            (Some(src), _) => read(src)?,
            (None, Some(s)) => s.f.clone(),
            (None, None) => return Err("`lambda` given without a potential".into()),
        };
        let lambda = match (&job.lambda, &current) {
            (Some(src), _) => read(src)?,
            (None, Some(s)) => s.lambda.clone(),
            (None, None) => return Err("`f` given without a soliton function".into()),
        };
        if job.f.is_some() {
            // A new potential invalidates any stored split.
            entry.split = None;
        }
        entry.soliton = Some(SolitonSpec { f, lambda });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
}

impl CheckResult {
    fn from_result(name: &str, r: crate::Result<Outcome>) -> Self {
        match r {
            Ok(o) => CheckResult {
                check: o.check,
                pass: o.pass,
                error: None,
                evidence: Some(o.evidence),
            },
            Err(e) => CheckResult {
                check: name.into(),
                pass: false,
                error: Some(e.to_string()),
                evidence: None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub index: usize,
    pub kind: JobKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub warpcheck: String,
    pub report: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub jobs: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Wall-clock data; the only part of a report that varies between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub threads: usize,
    pub total_ms: f64,
    pub jobs_ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub versions: Versions,
    pub seed: u64,
    pub config: RunConfig,
    pub pass: bool,
    pub summary: Summary,
    pub jobs: Vec<JobReport>,
    pub timing: Timing,
}

impl RunReport {
    /// 0 when every job passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn execute(index: usize, job: &Prepared) -> (JobReport, f64) {
    let start = Instant::now();
    let checks: Vec<CheckResult> = match &job.task {
        Task::Checks { entry, checks } => checks
            .iter()
            .map(|(kind, plan, tol)| CheckResult::from_result(kind.name(), verify::run_check(entry, *kind, plan, *tol)))
            .collect(),
        Task::WarpOde { problem, expect_zero } => {
            vec![CheckResult::from_result(
                "warp_ode",
                verify::warp_ode_outcome(problem, *expect_zero),
            )]
        }
        Task::Height(spec) => vec![CheckResult::from_result("height_zero", verify::height_outcome(spec))],
    };
    let report = JobReport {
        index,
        kind: job.kind,
        instance: job.instance.clone(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    (report, start.elapsed().as_secs_f64() * 1e3)
}

#[cfg(feature = "parallel")]
fn execute_all(jobs: &[Prepared], threads: usize) -> Result<Vec<(JobReport, f64)>, ConfigError> {
    use rayon::prelude::*;
    if threads <= 1 {
        return Ok(jobs.iter().enumerate().map(|(i, j)| execute(i, j)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ConfigError::global(format!("thread pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().enumerate().map(|(i, j)| execute(i, j)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute_all(jobs: &[Prepared], _threads: usize) -> Result<Vec<(JobReport, f64)>, ConfigError> {
    Ok(jobs.iter().enumerate().map(|(i, j)| execute(i, j)).collect())
}

/// Validate and execute every job. Only configuration problems are
/// errors; failing or erroring checks are recorded in the report.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunReport, ConfigError> {
    if opts.jobs == 0 {
        return Err(ConfigError::global("--jobs must be at least 1"));
    }
    let start = Instant::now();
    let prepared = prepare(config, opts)?;
    let results = execute_all(&prepared, opts.jobs)?;
    let mut echo = config.clone();
    let seed = opts.seed_override.or(config.sampling.seed).unwrap_or(DEFAULT_SEED);
    echo.sampling.seed = Some(seed);
    let (jobs, jobs_ms): (Vec<JobReport>, Vec<f64>) = results.into_iter().unzip();
    let passed = jobs.iter().filter(|j| j.pass).count();
    Ok(RunReport {
        versions: Versions {
            warpcheck: env!("CARGO_PKG_VERSION").into(),
            report: REPORT_VERSION.into(),
        },
        seed,
        config: echo,
        pass: passed == jobs.len(),
        summary: Summary {
            jobs: jobs.len(),
            passed,
            failed: jobs.len() - passed,
        },
        jobs,
        timing: Timing {
            threads: opts.jobs,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            jobs_ms,
        },
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Plain-text rendering with one residual table per check.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "warpcheck {} seed {}", report.versions.warpcheck, report.seed);
    for job in &report.jobs {
        let _ = writeln!(
            out,
            "\n[{}] job {} {} {}",
            verdict(job.pass),
            job.index,
            job.kind.name(),
            job.instance.as_deref().unwrap_or("-")
        );
        for c in &job.checks {
            render_check(&mut out, c);
        }
    }
    let _ = writeln!(
        out,
        "\n{} of {} jobs passed",
        report.summary.passed, report.summary.jobs
    );
    out
}

fn render_check(out: &mut String, c: &CheckResult) {
    let _ = writeln!(out, "  {} {}", verdict(c.pass), c.check);
    if let Some(e) = &c.error {
        let _ = writeln!(out, "    error: {e}");
    }
    match &c.evidence {
        Some(Evidence::Residuals(r)) => {
            let width = r.lines.iter().map(|l| l.label.len()).max().unwrap_or(8).max(8);
            let _ = writeln!(out, "    {:<width$}  {:>10}  {:>10}", "equation", "max abs", "max norm");
            for l in &r.lines {
                let _ = writeln!(
                    out,
                    "    {:<width$}  {:>10.3e}  {:>10.3e}  {}",
                    l.label,
                    l.max_abs,
                    l.max_normalized,
                    verdict(l.pass)
                );
            }
            for (k, v) in &r.derived {
                let _ = writeln!(out, "    {k} = {v}");
            }
            for n in &r.notes {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        Some(Evidence::Geodesic(g)) => {
            let _ = writeln!(
                out,
                "    status {:?}, norm drift {:.3e}, {} steps",
                g.status, g.relative_norm_drift, g.accepted_steps
            );
        }
        Some(Evidence::Completeness(p)) => {
            let _ = writeln!(out, "    {}", p.verdict);
            if let Some(t0) = p.t0 {
                let _ = writeln!(out, "    t0 = {t0}");
            }
        }
        Some(Evidence::WarpOde(w)) => {
            if let Some(t) = w.zero_crossing {
                let _ = writeln!(out, "    h reaches zero at t = {t}");
            }
            if let (Some(fam), Some(d), Some(e)) = (w.family, w.max_energy_drift, w.max_relative_error) {
                let _ = writeln!(
                    out,
                    "    {fam:?} branch, energy drift {d:.3e}, closed-form error {e:.3e}"
                );
            }
        }
        Some(Evidence::HeightZero(h)) => {
            let _ = writeln!(
                out,
                "    {:?} A, predicted no zeros: {}, sign change: {}, min |phi| {:.3e}",
                h.causal, h.predicted_no_zeros, h.sign_change, h.sampled_min_abs
            );
        }
        None => {}
    }
}
