//! Lower bounds on best constants by derivative-free search over `f >= 0`,
//! and the kernel-dilation sweep.
//!
//! The search is multiplicative coordinate ascent: each iteration picks one
//! coordinate, tries scaling it up and then down by the current step, and
//! keeps the first move that raises the objective. Candidates are rescaled
//! to `max f = 1` before evaluation; every objective is scale invariant, so
//! this only pins the representative. After a sweep over all coordinates
//! that gains less than `stop_tol` (relative), the step shrinks toward 1 by
//! `decay`; the restart ends when `step - 1 < stop_tol` or the iteration
//! budget is spent.

use serde::{Deserialize, Serialize};

use crate::error::{exponent_error, Error, Result};
use crate::functions::{ExponentSet, FunctionOnSpace};
use crate::generators::{generate_function, FunctionFamily, FunctionSpec};
use crate::operators::KernelConvention;
use crate::rng;
use crate::space::MetricMeasureSpace;
use crate::theorems::{enumerate_balls, hedberg_profile, worst_constant, CheckId, GammaGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    pub decay: f64,
    pub stop_tol: f64,
    /// Balls per instance for `T1`/`T3` objectives.
    pub ball_limit: usize,
    pub gamma_grid: GammaGrid,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            max_iters: 2000,
            initial_step: 1.5,
            decay: 0.9,
            stop_tol: 1e-6,
            ball_limit: 64,
            gamma_grid: GammaGrid::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.restarts > 0
            && self.max_iters > 0
            && self.initial_step > 1.0
            && self.initial_step.is_finite()
            && self.decay > 0.0
            && self.decay < 1.0
            && self.stop_tol > 0.0
            && self.ball_limit > 0;
        if !ok {
            return Err(Error::InvalidSpec(format!("bad optimizer config {self:?}")));
        }
        self.gamma_grid.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalResult {
    pub best_ratio: f64,
    pub argmax_f: FunctionOnSpace,
    pub iterations_used: usize,
    /// Best ratio after each iteration, one sequence per restart.
    pub trace: Vec<Vec<f64>>,
}

struct Objective<'a> {
    space: &'a MetricMeasureSpace,
    check: CheckId,
    exps: ExponentSet,
    balls: Vec<crate::space::BallSpec>,
    grid: GammaGrid,
}

impl Objective<'_> {
    fn eval(&self, values: &[f64]) -> Result<f64> {
        let f = FunctionOnSpace::from_values(values.to_vec());
        worst_constant(self.space, &f, self.check, &self.exps, &self.balls, &self.grid)
    }
}

/// Rescales to `max = 1`; `None` when every entry is zero.
fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
        Some(v)
    } else {
        None
    }
}

fn initial(space: &MetricMeasureSpace, restart: usize, seed: u64) -> Result<Vec<f64>> {
    let spec = match restart % 5 {
        0 => FunctionSpec::new(FunctionFamily::Constant, seed),
        // single spike
        1 => FunctionSpec::new(FunctionFamily::BallIndicator, seed).param("radius", 0.0),
        2 => FunctionSpec::new(FunctionFamily::RandomSparse, seed),
        3 => FunctionSpec::new(FunctionFamily::BallIndicator, seed),
        _ => FunctionSpec::new(FunctionFamily::RandomUniform, seed),
    };
    let v = generate_function(space, &spec)?.values().to_vec();
    Ok(normalized(v).unwrap_or_else(|| vec![1.0; space.len()]))
}

/// Searches for `f >= 0` maximising the empirical constant of `check`
/// (for level/ball checks, the worst record over the configured grid and balls).
pub fn estimate_constant(
    space: &MetricMeasureSpace,
    check: CheckId,
    exps: &ExponentSet,
    cfg: &OptimizerConfig,
) -> Result<ExtremalResult> {
    cfg.validate()?;
    let exps = ExponentSet::new(exps.p, exps.q, exps.alpha)?;
    let objective = Objective {
        space,
        check,
        exps,
        balls: if check.uses_balls() { enumerate_balls(space, cfg.ball_limit, cfg.seed) } else { Vec::new() },
        grid: cfg.gamma_grid,
    };
    let n = space.len();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut trace = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let stream = rng::derive(cfg.seed, restart as u64);
        let mut f = initial(space, restart, stream)?;
        let mut ratio = objective.eval(&f)?;
        let mut seq = vec![ratio];
        let mut step = cfg.initial_step;
        let mut iters = 0;
        let mut sweep = 0u64;
        'restart: loop {
            let sweep_start = ratio;
            for i in sweep_order(n, stream, sweep) {
                if iters >= cfg.max_iters {
                    break 'restart;
                }
                iters += 1;
                let up = if f[i] > 0.0 { f[i] * step } else { step - 1.0 };
                for candidate in [up, f[i] / step] {
                    let mut g = f.clone();
                    g[i] = candidate;
                    let Some(g) = normalized(g) else { continue };
                    let r = objective.eval(&g)?;
                    if r > ratio {
                        f = g;
                        ratio = r;
                        break;
                    }
                }
                seq.push(ratio);
            }
            sweep += 1;
            if ratio - sweep_start <= cfg.stop_tol * sweep_start.abs() {
                step = 1.0 + (step - 1.0) * cfg.decay;
                if step - 1.0 < cfg.stop_tol {
                    break;
                }
            }
        }
        trace.push(seq);
        if best.as_ref().is_none_or(|(b, _, _)| ratio > *b) {
            best = Some((ratio, f, iters));
        }
    }
    let (best_ratio, values, iterations_used) = best.expect("at least one restart");
    Ok(ExtremalResult { best_ratio, argmax_f: FunctionOnSpace::from_values(values), iterations_used, trace })
}

fn sweep_order(n: usize, stream: u64, sweep: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let base = sweep.wrapping_mul(n as u64);
    for i in 0..n.saturating_sub(1) {
        let j = i + rng::index_below(stream, base + i as u64, n - i);
        order.swap(i, j);
    }
    order
}

/// One cell of the kernel-dilation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub instance: String,
    pub kappa: f64,
    pub ratio: f64,
}

/// Worst Hedberg quotient `max_x I^{(kappa)} f(x) / (M_2 f(x)^{1-p alpha} ||f||^{p alpha})`
/// for every instance and dilation. Exploratory: nothing is asserted.
pub fn kappa_sweep(
    instances: &[(String, MetricMeasureSpace)],
    f_spec: &FunctionSpec,
    alpha: f64,
    p: f64,
    kappas: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(&k) = kappas.iter().find(|&&k| !(k > 0.0 && k <= 2.0)) {
        return Err(exponent_error("kappa", k, "need 0 < kappa <= 2"));
    }
    if !kappas.contains(&1.0) || !kappas.contains(&2.0) {
        return Err(Error::InvalidSpec("kappa list must include 1 and 2".into()));
    }
    let mut rows = Vec::with_capacity(instances.len() * kappas.len());
    for (name, space) in instances {
        let f = generate_function(space, f_spec)?;
        for &kappa in kappas {
            let profile = hedberg_profile(space, &f, p, alpha, KernelConvention::closed(kappa))?;
            rows.push(SweepRow { instance: name.clone(), kappa, ratio: profile.into_iter().fold(0.0, f64::max) });
        }
    }
    Ok(rows)
}
