//! Batch harness behind the `morrey-lab` binary: experiment configs, the run
//! scheduler, and report serialization.
//!
//! A run writes `report.json` (config echo, environment stamp, every record,
//! estimates, sweeps, verdict) and `records.csv`, plus `estimates.csv` and
//! `sweep.csv` when those were requested. Report bytes depend only on the
//! config, the seed and the tool version; the output directory is not echoed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::extremal::{estimate_constant, kappa_sweep, OptimizerConfig, SweepRow};
use crate::functions::{ExponentSet, FunctionOnSpace};
use crate::generators::{generate_function, generate_space, FunctionSpec, SpaceSpec};
use crate::space::{MetricMeasureSpace, SpaceFile};
use crate::theorems::{enumerate_balls, run_check, CheckId, CheckReport, GammaGrid};

pub const TOOL_VERSION: &str = concat!("morrey-lab ", env!("CARGO_PKG_VERSION"));

/// Everything that can go wrong before any check runs (exit status 2).
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("exponent triple #{index} (p={p}, q={q}, alpha={alpha}) is invalid: {source}")]
    Exponent { index: usize, p: f64, q: f64, alpha: f64, source: Error },
    #[error("space `{id}`: {source}")]
    Space { id: String, source: Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Generated copies with seeds `seed, seed + 1, ...`; ids get a `#k` suffix.
    #[serde(default = "one")]
    pub replicas: usize,
}

fn one() -> usize {
    1
}

fn default_balls() -> usize {
    64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentTriple {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

/// Optimizer settings for one estimate; unset fields take the defaults of
/// [`OptimizerConfig`]. The seed always comes from the experiment seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    pub check: CheckId,
    pub space: String,
    /// Index into `exponents`.
    pub exponent: usize,
    #[serde(default)]
    pub optimizer: OptimizerOverrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    /// Space ids, in increasing size.
    pub spaces: Vec<String>,
    pub function: FunctionSpec,
    pub p: f64,
    pub alpha: f64,
    pub kappas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub spaces: Vec<SpaceEntry>,
    pub functions: Vec<FunctionEntry>,
    pub exponents: Vec<ExponentTriple>,
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub gamma_grid: GammaGrid,
    #[serde(default = "default_balls")]
    pub balls_per_instance: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepRequest>,
}

impl ExperimentConfig {
    /// Parses a TOML document; relative file references resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut cfg.spaces {
            if let Some(f) = &s.file {
                s.file = Some(base.join(f));
            }
        }
        for f in &mut cfg.functions {
            if let Some(p) = &f.file {
                f.file = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn exponent_sets(&self) -> Result<Vec<ExponentSet>, ConfigError> {
        self.exponents
            .iter()
            .enumerate()
            .map(|(index, e)| {
                ExponentSet::new(e.p, e.q, e.alpha).map_err(|source| ConfigError::Exponent {
                    index,
                    p: e.p,
                    q: e.q,
                    alpha: e.alpha,
                    source,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.spaces.is_empty() || self.functions.is_empty() || self.checks.is_empty() {
            return invalid("need at least one space, one function and one check".into());
        }
        self.exponent_sets()?;
        if self.exponents.is_empty() && self.checks.iter().any(|c| *c != CheckId::WeakL1) {
            return invalid("checks other than weakL1 need at least one exponent triple".into());
        }
        self.gamma_grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.balls_per_instance == 0 {
            return invalid("balls_per_instance must be positive".into());
        }
        let mut seen = BTreeSet::new();
        for s in &self.spaces {
            check_id(&s.id)?;
            if !seen.insert(s.id.clone()) {
                return invalid(format!("duplicate space id `{}`", s.id));
            }
            if s.spec.is_some() == s.file.is_some() {
                return invalid(format!("space `{}` needs exactly one of spec / file", s.id));
            }
        }
        let mut fseen = BTreeSet::new();
        for f in &self.functions {
            check_id(&f.id)?;
            if !fseen.insert(f.id.clone()) {
                return invalid(format!("duplicate function id `{}`", f.id));
            }
            if f.spec.is_some() == f.file.is_some() {
                return invalid(format!("function `{}` needs exactly one of spec / file", f.id));
            }
            if f.replicas == 0 || (f.file.is_some() && f.replicas != 1) {
                return invalid(format!("function `{}` has invalid replicas {}", f.id, f.replicas));
            }
        }
        for (i, e) in self.estimates.iter().enumerate() {
            if !seen.contains(&e.space) {
                return invalid(format!("estimate #{i} names unknown space `{}`", e.space));
            }
            if e.exponent >= self.exponents.len() {
                return invalid(format!("estimate #{i} names exponent #{} which does not exist", e.exponent));
            }
            self.optimizer_for(e).validate().map_err(|err| ConfigError::Invalid(format!("estimate #{i}: {err}")))?;
        }
        for (i, s) in self.sweeps.iter().enumerate() {
            if let Some(id) = s.spaces.iter().find(|id| !seen.contains(*id)) {
                return invalid(format!("sweep #{i} names unknown space `{id}`"));
            }
            if !s.kappas.contains(&1.0) || !s.kappas.contains(&2.0) {
                return invalid(format!("sweep #{i} must include kappa 1 and 2"));
            }
        }
        Ok(())
    }

    fn optimizer_for(&self, req: &EstimateRequest) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        let o = &req.optimizer;
        OptimizerConfig {
            seed: self.seed,
            restarts: o.restarts.unwrap_or(d.restarts),
            max_iters: o.max_iters.unwrap_or(d.max_iters),
            initial_step: o.initial_step.unwrap_or(d.initial_step),
            decay: o.decay.unwrap_or(d.decay),
            stop_tol: o.stop_tol.unwrap_or(d.stop_tol),
            ball_limit: self.balls_per_instance,
            gamma_grid: self.gamma_grid,
        }
    }

    /// The config as echoed into the report: no output directory.
    fn echo(&self) -> Self {
        Self { output_dir: None, ..self.clone() }
    }
}

fn check_id(id: &str) -> Result<(), ConfigError> {
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        Err(ConfigError::Invalid(format!("id `{id}` must be non-empty and free of commas, quotes and newlines")))
    } else {
        Ok(())
    }
}

/// What part of a config to execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Checks,
    Estimates,
    Sweeps,
    All,
}

impl Mode {
    fn checks(self) -> bool {
        matches!(self, Mode::Checks | Mode::All)
    }
    fn estimates(self) -> bool {
        matches!(self, Mode::Estimates | Mode::All)
    }
    fn sweeps(self) -> bool {
        matches!(self, Mode::Sweeps | Mode::All)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check_id: CheckId,
    pub space_id: String,
    pub function_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub id: String,
    pub n: usize,
    pub total_mass: f64,
    pub doubling_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub check_id: CheckId,
    pub space_id: String,
    pub exponent_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations_used: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_f: Option<FunctionOnSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub request: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: usize,
    pub failed: usize,
    /// Records without an explicit constant.
    pub reported: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub spaces: Vec<SpaceSummary>,
    pub records: Vec<Record>,
    pub estimates: Vec<EstimateSummary>,
    pub sweeps: Vec<SweepTable>,
    pub verdict: Verdict,
}

impl RunReport {
    /// 0 when no check with an explicit constant failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.failed == 0 {
            0
        } else {
            1
        }
    }
}

fn load_space(entry: &SpaceEntry) -> Result<MetricMeasureSpace, ConfigError> {
    let wrap = |source| ConfigError::Space { id: entry.id.clone(), source };
    match (&entry.spec, &entry.file) {
        (Some(spec), _) => generate_space(spec).map_err(wrap),
        (None, Some(path)) => {
            let raw: SpaceFile = read_json(path)?;
            MetricMeasureSpace::try_from(raw).map_err(wrap)
        }
        (None, None) => Err(ConfigError::Invalid(format!("space `{}` has no source", entry.id))),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
}

/// One concrete function: id plus either a generator spec or explicit values.
#[derive(Clone, Debug)]
pub struct FunctionInstance {
    pub id: String,
    pub source: FunctionSource,
}

#[derive(Clone, Debug)]
pub enum FunctionSource {
    Spec(FunctionSpec),
    Values(Vec<f64>),
}

impl FunctionInstance {
    pub fn materialize(&self, space: &MetricMeasureSpace) -> crate::Result<FunctionOnSpace> {
        match &self.source {
            FunctionSource::Spec(spec) => generate_function(space, spec),
            FunctionSource::Values(v) => FunctionOnSpace::new(space, v.clone()),
        }
    }
}

/// Builds every space of a config, in config order.
pub fn load_spaces(cfg: &ExperimentConfig) -> Result<Vec<(String, MetricMeasureSpace)>, ConfigError> {
    cfg.spaces.iter().map(|e| load_space(e).map(|s| (e.id.clone(), s))).collect()
}

/// Expands replicas into concrete function instances, in config order.
pub fn expand_functions(cfg: &ExperimentConfig) -> Result<Vec<FunctionInstance>, ConfigError> {
    let mut out = Vec::new();
    for entry in &cfg.functions {
        match (&entry.spec, &entry.file) {
            (Some(spec), _) => {
                let width = (entry.replicas - 1).to_string().len().max(2);
                for k in 0..entry.replicas {
                    let id = if entry.replicas == 1 { entry.id.clone() } else { format!("{}#{k:0width$}", entry.id) };
                    let spec = FunctionSpec { seed: spec.seed.wrapping_add(k as u64), ..spec.clone() };
                    out.push(FunctionInstance { id, source: FunctionSource::Spec(spec) });
                }
            }
            (None, Some(path)) => {
                let values: Vec<f64> = read_json(path)?;
                out.push(FunctionInstance { id: entry.id.clone(), source: FunctionSource::Values(values) });
            }
            (None, None) => {
                return Err(ConfigError::Invalid(format!("function `{}` has no source", entry.id)));
            }
        }
    }
    Ok(out)
}

fn config_hash(echo: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(echo).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// Executes the requested parts of a config. Config problems are returned as
/// errors; failures of individual checks become error entries in the report.
pub fn run(cfg: &ExperimentConfig, mode: Mode, jobs: Option<usize>, quiet: bool) -> Result<RunReport, ConfigError> {
    cfg.validate()?;
    let exps = cfg.exponent_sets()?;
    let log = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let spaces = load_spaces(cfg)?;
    let functions = expand_functions(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;

    let summaries: Vec<SpaceSummary> = pool.install(|| {
        spaces
            .par_iter()
            .map(|(id, s)| SpaceSummary {
                id: id.clone(),
                n: s.len(),
                total_mass: s.total_mass(),
                doubling_ratio: s.doubling_ratio().ratio,
            })
            .collect()
    });

    let mut records = Vec::new();
    if mode.checks() {
        log(format!("checking {} spaces x {} functions x {} checks", spaces.len(), functions.len(), cfg.checks.len()));
        records = pool.install(|| run_checks(cfg, &spaces, &functions, &exps));
        // Stable: records sharing a level keep their ball order.
        records.sort_by(|a, b| {
            (a.check_id, &a.space_id, &a.function_id, a.exponent_index)
                .cmp(&(b.check_id, &b.space_id, &b.function_id, b.exponent_index))
                .then_with(|| record_gamma(a).total_cmp(&record_gamma(b)))
        });
    }

    let mut estimates = Vec::new();
    if mode.estimates() {
        log(format!("running {} estimates", cfg.estimates.len()));
        estimates = pool.install(|| {
            cfg.estimates
                .par_iter()
                .map(|req| {
                    let space = &spaces.iter().find(|(id, _)| *id == req.space).expect("validated").1;
                    let mut summary = EstimateSummary {
                        check_id: req.check,
                        space_id: req.space.clone(),
                        exponent_index: req.exponent,
                        best_ratio: None,
                        iterations_used: None,
                        argmax_f: None,
                        error: None,
                    };
                    match estimate_constant(space, req.check, &exps[req.exponent], &cfg.optimizer_for(req)) {
                        Ok(r) => {
                            summary.best_ratio = Some(r.best_ratio);
                            summary.iterations_used = Some(r.iterations_used);
                            summary.argmax_f = Some(r.argmax_f);
                        }
                        Err(e) => summary.error = Some(e.to_string()),
                    }
                    summary
                })
                .collect()
        });
    }

    let mut sweeps = Vec::new();
    if mode.sweeps() {
        log(format!("running {} sweeps", cfg.sweeps.len()));
        sweeps = pool.install(|| {
            cfg.sweeps
                .par_iter()
                .enumerate()
                .map(|(request, req)| {
                    let instances: Vec<(String, MetricMeasureSpace)> = req
                        .spaces
                        .iter()
                        .map(|id| spaces.iter().find(|(sid, _)| sid == id).expect("validated").clone())
                        .collect();
                    match kappa_sweep(&instances, &req.function, req.alpha, req.p, &req.kappas) {
                        Ok(rows) => SweepTable { request, rows, error: None },
                        Err(e) => SweepTable { request, rows: Vec::new(), error: Some(e.to_string()) },
                    }
                })
                .collect()
        });
    }

    let mut verdict = Verdict::default();
    for r in &records {
        match (&r.report, &r.error) {
            (_, Some(_)) => verdict.errors += 1,
            (Some(rep), None) => match rep.pass {
                Some(true) => verdict.passed += 1,
                Some(false) => verdict.failed += 1,
                None => verdict.reported += 1,
            },
            (None, None) => {}
        }
    }
    verdict.errors += estimates.iter().filter(|e| e.error.is_some()).count();
    verdict.errors += sweeps.iter().filter(|s| s.error.is_some()).count();
    log(format!(
        "passed {} failed {} reported {} errors {}",
        verdict.passed, verdict.failed, verdict.reported, verdict.errors
    ));

    let echo = cfg.echo();
    Ok(RunReport {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: config_hash(&echo),
        config: echo,
        spaces: summaries,
        records,
        estimates,
        sweeps,
        verdict,
    })
}

fn record_gamma(r: &Record) -> f64 {
    r.report.as_ref().and_then(|r| r.params.gamma).unwrap_or(f64::NEG_INFINITY)
}

fn run_checks(
    cfg: &ExperimentConfig,
    spaces: &[(String, MetricMeasureSpace)],
    functions: &[FunctionInstance],
    exps: &[ExponentSet],
) -> Vec<Record> {
    let mut items = Vec::new();
    for (si, _) in spaces.iter().enumerate() {
        for (fi, _) in functions.iter().enumerate() {
            for &check in &cfg.checks {
                if check == CheckId::WeakL1 {
                    items.push((si, fi, check, None));
                } else {
                    items.extend((0..exps.len()).map(|e| (si, fi, check, Some(e))));
                }
            }
        }
    }
    let balls: Vec<_> = spaces.iter().map(|(_, s)| enumerate_balls(s, cfg.balls_per_instance, cfg.seed)).collect();
    items
        .par_iter()
        .map(|&(si, fi, check, e)| {
            let (space_id, space) = &spaces[si];
            let func = &functions[fi];
            let base = Record {
                check_id: check,
                space_id: space_id.clone(),
                function_id: func.id.clone(),
                exponent_index: e,
                report: None,
                error: None,
            };
            // weakL1 ignores exponents; any valid set will do.
            let placeholder = ExponentSet { p: 2.0, q: 2.0, alpha: 0.25, s: 4.0, t: 4.0 };
            let exps = e.map_or(placeholder, |i| exps[i]);
            let outcome =
                func.materialize(space).and_then(|f| run_check(space, &f, check, &exps, &balls[si], &cfg.gamma_grid));
            match outcome {
                Ok(reports) => reports.into_iter().map(|r| Record { report: Some(r), ..base.clone() }).collect(),
                Err(err) => vec![Record { error: Some(err.to_string()), ..base }],
            }
        })
        .collect::<Vec<Vec<Record>>>()
        .into_iter()
        .flatten()
        .collect()
}

pub const CSV_HEADER: &str = "check_id,space_id,function_id,p,q,alpha,s,t,kappa,gamma,lhs,rhs_without_constant,empirical_constant,paper_constant,pass";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// The flat records table; records carrying an error are omitted.
pub fn records_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(records.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in records {
        let Some(r) = &rec.report else { continue };
        let p = &r.params;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            rec.check_id,
            rec.space_id,
            rec.function_id,
            fmt_opt(p.p),
            fmt_opt(p.q),
            fmt_opt(p.alpha),
            fmt_opt(p.s),
            fmt_opt(p.t),
            fmt_opt(p.kappa),
            fmt_opt(p.gamma),
            fmt_num(r.lhs),
            fmt_num(r.rhs_without_constant),
            fmt_num(r.empirical_constant),
            fmt_opt(r.paper_constant),
            r.pass.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

pub fn estimates_csv(estimates: &[EstimateSummary]) -> String {
    let mut out = String::from("check_id,space_id,exponent_index,best_ratio,iterations_used,error\n");
    for e in estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.check_id,
            e.space_id,
            e.exponent_index,
            fmt_opt(e.best_ratio),
            e.iterations_used.map(|i| i.to_string()).unwrap_or_default(),
            e.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    out
}

pub fn sweep_csv(sweeps: &[SweepTable]) -> String {
    let mut out = String::from("request,instance,kappa,ratio\n");
    for t in sweeps {
        for row in &t.rows {
            let _ = writeln!(out, "{},{},{},{}", t.request, row.instance, fmt_num(row.kappa), fmt_num(row.ratio));
        }
    }
    out
}

/// Writes `report.json` and the CSV tables into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_vec(report).map_err(std::io::Error::other)?;
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("records.csv"), records_csv(&report.records))?;
    if !report.estimates.is_empty() {
        fs::write(dir.join("estimates.csv"), estimates_csv(&report.estimates))?;
    }
    if !report.sweeps.is_empty() {
        fs::write(dir.join("sweep.csv"), sweep_csv(&report.sweeps))?;
    }
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<RunReport, ConfigError> {
    read_json(&dir.join("report.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
seed = 7
checks = ["T1", "T2", "T6", "weakL1"]
balls_per_instance = 4

[gamma_grid]
min_multiplier = 0.01
max_multiplier = 100.0
count = 5

[[spaces]]
id = "one"
spec = { family = "grid", dim = 1, n_per_axis = 1, domain_halfwidth = 0.5 }

[[spaces]]
id = "g8"
spec = { family = "gaussian-grid", dim = 1, n_per_axis = 8, domain_halfwidth = 2.0 }

[[functions]]
id = "const"
spec = { family = "constant", params = { c = 2.0 } }

[[functions]]
id = "ru"
spec = { family = "random-uniform", seed = 3 }
replicas = 2

[[exponents]]
p = 2.0
q = 1.5
alpha = 0.25
"#;

    fn small() -> ExperimentConfig {
        toml::from_str(SMALL).unwrap()
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SMALL.replace("balls_per_instance", "balls_per_instanse");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
        let bad = SMALL.replace("family = \"constant\"", "family = \"constant\", colour = 1");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn malformed_triple_names_the_triple() {
        let mut cfg = small();
        cfg.exponents.push(ExponentTriple { p: 2.0, q: 1.5, alpha: 0.5 });
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Exponent { index: 1, .. }));
        assert!(msg.contains("p=2") && msg.contains("alpha=0.5"), "{msg}");
    }

    #[test]
    fn run_is_deterministic_and_sorted() {
        let cfg = small();
        let a = run(&cfg, Mode::All, Some(1), true).unwrap();
        let b = run(&cfg, Mode::All, Some(3), true).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.exit_code(), 0);
        assert_eq!(a.verdict.errors, 0);
        let keys: Vec<_> = a.records.iter().map(|r| (r.check_id, r.space_id.clone(), r.function_id.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(a.records.iter().any(|r| r.function_id == "ru#01"));
    }

    #[test]
    fn single_point_t6_record() {
        let mut cfg = small();
        cfg.spaces.truncate(1);
        cfg.functions.truncate(1);
        cfg.checks = vec![CheckId::T6];
        let rep = run(&cfg, Mode::Checks, None, true).unwrap();
        assert_eq!(rep.records.len(), 1);
        let c = rep.records[0].report.as_ref().unwrap().empirical_constant;
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn mismatched_function_file_is_a_record_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f.json"), "[1.0, 2.0]").unwrap();
        let mut cfg = small();
        cfg.functions =
            vec![FunctionEntry { id: "file".into(), spec: None, file: Some(dir.path().join("f.json")), replicas: 1 }];
        cfg.checks = vec![CheckId::T6];
        let rep = run(&cfg, Mode::Checks, None, true).unwrap();
        assert_eq!(rep.verdict.errors, 2);
        assert!(rep.records.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn csv_has_fixed_columns_and_round_trips_numbers() {
        let rep = run(&small(), Mode::Checks, None, true).unwrap();
        let csv = records_csv(&rep.records);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        for (line, rec) in lines.zip(rep.records.iter()) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 15);
            let lhs: f64 = cols[10].parse().unwrap();
            assert_eq!(lhs, rec.report.as_ref().unwrap().lhs);
        }
    }

    #[test]
    fn report_ignores_output_dir() {
        let mut a = small();
        a.output_dir = Some("x".into());
        let mut b = small();
        b.output_dir = Some("y".into());
        let ra = run(&a, Mode::Checks, None, true).unwrap();
        let rb = run(&b, Mode::Checks, None, true).unwrap();
        assert_eq!(ra.config_hash, rb.config_hash);
    }
}
