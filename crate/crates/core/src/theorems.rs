//! Executable checks of the weak- and strong-type inequalities.
//!
//! Each check evaluates both sides of one inequality on a concrete space and
//! function and reports their quotient, the empirical constant. Checks whose
//! constant is explicit (`T1` with 4, `T2` with [`hedberg_constant`]) also
//! carry a pass flag; the others only assert that some constant exists, so
//! they report and never fail.
//!
//! All checks act on `|f|`, use `kappa = 2` with closed-ball kernels, and
//! treat `0/0` as an empirical constant of 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{exponent_error, Error, Result};
use crate::functions::{level_set_measure, lq_norm, morrey_norm, ExponentSet, FunctionOnSpace};
use crate::operators::{fractional_integral, hedberg_constant, maximal, KernelConvention, CHECK_KAPPA};
use crate::rng;
use crate::space::{BallSpec, Closure, MetricMeasureSpace};

/// Constant in the weak-type bound for `M_2` on Morrey spaces.
pub const T1_CONSTANT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    T1,
    T2,
    T3,
    T6,
    T7,
    #[serde(rename = "weakL1")]
    WeakL1,
}

impl CheckId {
    pub const ALL: [CheckId; 6] = [CheckId::T1, CheckId::T2, CheckId::T3, CheckId::T6, CheckId::T7, CheckId::WeakL1];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::T1 => "T1",
            CheckId::T2 => "T2",
            CheckId::T3 => "T3",
            CheckId::T6 => "T6",
            CheckId::T7 => "T7",
            CheckId::WeakL1 => "weakL1",
        }
    }

    /// Checks that quantify over balls `B(a, r)`.
    pub fn uses_balls(self) -> bool {
        matches!(self, CheckId::T1 | CheckId::T3)
    }

    /// Checks that sweep a level `gamma`.
    pub fn uses_gammas(self) -> bool {
        matches!(self, CheckId::T1 | CheckId::T3 | CheckId::WeakL1)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| Error::UnknownCheckId(s.to_string()))
    }
}

/// Parameters a record was evaluated at; fields a check does not use are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckParams {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub ball: Option<BallSpec>,
}

impl CheckParams {
    fn exponents(e: &ExponentSet) -> Self {
        Self {
            p: Some(e.p),
            q: Some(e.q),
            alpha: Some(e.alpha),
            s: Some(e.s),
            t: Some(e.t),
            kappa: Some(CHECK_KAPPA),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: CheckId,
    pub params: CheckParams,
    pub lhs: f64,
    pub rhs_without_constant: f64,
    pub empirical_constant: f64,
    pub paper_constant: Option<f64>,
    pub pass: Option<bool>,
}

impl CheckReport {
    pub fn new(check_id: CheckId, params: CheckParams, lhs: f64, rhs: f64, paper_constant: Option<f64>) -> Self {
        let empirical_constant = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            check_id,
            params,
            lhs,
            rhs_without_constant: rhs,
            empirical_constant,
            paper_constant,
            pass: paper_constant.map(|c| lhs <= c * rhs),
        }
    }
}

/// Logarithmic grid of levels relative to a reference operator value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaGrid {
    pub min_multiplier: f64,
    pub max_multiplier: f64,
    pub count: usize,
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self { min_multiplier: 1e-3, max_multiplier: 1e3, count: 25 }
    }
}

impl GammaGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_multiplier > 0.0
            && self.max_multiplier >= self.min_multiplier
            && self.max_multiplier.is_finite()
            && self.count > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("bad gamma grid {self:?}")))
        }
    }

    /// Levels spanning `[min, max] * reference`; a nonpositive reference is replaced by 1.
    pub fn levels(&self, reference: f64) -> Vec<f64> {
        let base = if reference > 0.0 && reference.is_finite() { reference } else { 1.0 };
        if self.count == 1 {
            return vec![base * self.min_multiplier];
        }
        let lo = self.min_multiplier.ln();
        let step = (self.max_multiplier.ln() - lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| base * (lo + step * i as f64).exp()).collect()
    }
}

/// Open balls `B(a, r)` with `r` in `{0.5, 1, 1.5} * breakpoints(a)`, capped at
/// the diameter. When there are more than `limit`, a seeded subsample of
/// `limit` is kept. Output is sorted by `(center, radius)`.
pub fn enumerate_balls(space: &MetricMeasureSpace, limit: usize, seed: u64) -> Vec<BallSpec> {
    let diam = space.diameter();
    let mut all = Vec::new();
    for a in 0..space.len() {
        let mut radii: Vec<f64> = space
            .breakpoint_groups(a)
            .flat_map(|(b, _)| [0.5 * b, b, 1.5 * b])
            .filter(|&r| r > 0.0)
            .map(|r| r.min(diam))
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        all.extend(radii.into_iter().map(|r| BallSpec::open(a, r)));
    }
    if all.len() > limit {
        for i in 0..limit {
            let j = i + rng::index_below(seed, i as u64, all.len() - i);
            all.swap(i, j);
        }
        all.truncate(limit);
        all.sort_by(|x, y| x.center.cmp(&y.center).then(x.radius.total_cmp(&y.radius)));
    }
    all
}

fn check_ball(space: &MetricMeasureSpace, ball: &BallSpec) -> Result<()> {
    space.check_index(ball.center)?;
    if space.ball_measure(ball)? > 0.0 {
        Ok(())
    } else {
        Err(Error::EmptyBall { center: ball.center, radius: ball.radius })
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(exponent_error("p", p, "need 1 < p < inf"))
    }
}

fn open_members(space: &MetricMeasureSpace, ball: &BallSpec) -> Result<Vec<usize>> {
    space.ball_members(&BallSpec { closure: Closure::Open, ..*ball })
}

/// `mu{x in B(a,r) : M_2 f(x) > gamma} <= 4 mu(B(a,6r))^{1-1/p} ||f||_{M^p_1(2)} / gamma`.
pub fn check_t1_weak_maximal(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    a: usize,
    r: f64,
    p: f64,
    gammas: &[f64],
) -> Result<Vec<CheckReport>> {
    check_t1_over_balls(space, f, &[BallSpec::open(a, r)], p, gammas)
}

/// [`check_t1_weak_maximal`] for several balls, sharing `M_2 f` and the norm.
pub fn check_t1_over_balls(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    balls: &[BallSpec],
    p: f64,
    gammas: &[f64],
) -> Result<Vec<CheckReport>> {
    check_p(p)?;
    let f = f.abs();
    let m2 = maximal(space, &f, 2.0)?;
    let norm = morrey_norm(space, &f, p, 1.0, 2.0)?;
    let mut out = Vec::with_capacity(balls.len() * gammas.len());
    for ball in balls {
        check_ball(space, ball)?;
        let members = open_members(space, ball)?;
        let outer = space.ball_measure(&BallSpec::open(ball.center, 6.0 * ball.radius))?;
        let scale = outer.powf(1.0 - 1.0 / p) * norm;
        for &gamma in gammas {
            let params = CheckParams {
                p: Some(p),
                kappa: Some(CHECK_KAPPA),
                gamma: Some(gamma),
                ball: Some(BallSpec { closure: Closure::Open, ..*ball }),
                ..CheckParams::default()
            };
            let lhs = level_set_measure(space, &m2, &members, gamma);
            out.push(CheckReport::new(CheckId::T1, params, lhs, scale / gamma, Some(T1_CONSTANT)));
        }
    }
    Ok(out)
}

/// Pointwise Hedberg quotients `I f(x) / (M_2 f(x)^{1-p alpha} ||f||_{M^p_1(2)}^{p alpha})`
/// for the given kernel convention, `0/0 = 0`.
pub fn hedberg_profile(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    p: f64,
    alpha: f64,
    conv: KernelConvention,
) -> Result<Vec<f64>> {
    hedberg_constant(p, alpha)?;
    let f = f.abs();
    let frac = fractional_integral(space, &f, alpha, conv)?;
    let m2 = maximal(space, &f, 2.0)?;
    let norm = morrey_norm(space, &f, p, 1.0, 2.0)?;
    let pa = p * alpha;
    Ok(frac
        .values()
        .iter()
        .zip(m2.values())
        .map(|(&i, &m)| {
            let denom = m.powf(1.0 - pa) * norm.powf(pa);
            if denom > 0.0 {
                i / denom
            } else if i == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// `I_alpha f(x) <= C_H M_2 f(x)^{1-p alpha} ||f||_{M^p_1(2)}^{p alpha}`, worst point.
pub fn check_t2_hedberg(space: &MetricMeasureSpace, f: &FunctionOnSpace, p: f64, alpha: f64) -> Result<CheckReport> {
    let constant = hedberg_constant(p, alpha)?;
    let profile = hedberg_profile(space, f, p, alpha, KernelConvention::default())?;
    let lhs = profile.into_iter().fold(0.0, f64::max);
    let params = CheckParams { p: Some(p), alpha: Some(alpha), kappa: Some(CHECK_KAPPA), ..CheckParams::default() };
    Ok(CheckReport::new(CheckId::T2, params, lhs, 1.0, Some(constant)))
}

/// `mu{x in B(a,r) : I_alpha f(x) > gamma} <= C mu(B(a,6r))^{1-1/p} (||f||_{M^p_1(2)} / gamma)^{s/p}`.
pub fn check_t3_weak_frac(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    a: usize,
    r: f64,
    exps: &ExponentSet,
    gammas: &[f64],
) -> Result<Vec<CheckReport>> {
    check_t3_over_balls(space, f, &[BallSpec::open(a, r)], exps, gammas)
}

pub fn check_t3_over_balls(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    balls: &[BallSpec],
    exps: &ExponentSet,
    gammas: &[f64],
) -> Result<Vec<CheckReport>> {
    let exps = ExponentSet::new(exps.p, exps.q, exps.alpha)?;
    let f = f.abs();
    let frac = fractional_integral(space, &f, exps.alpha, KernelConvention::default())?;
    let norm = morrey_norm(space, &f, exps.p, 1.0, 2.0)?;
    let power = exps.s / exps.p;
    let mut out = Vec::with_capacity(balls.len() * gammas.len());
    for ball in balls {
        check_ball(space, ball)?;
        let members = open_members(space, ball)?;
        let outer = space.ball_measure(&BallSpec::open(ball.center, 6.0 * ball.radius))?;
        let prefactor = outer.powf(1.0 - 1.0 / exps.p);
        for &gamma in gammas {
            let params = CheckParams {
                gamma: Some(gamma),
                ball: Some(BallSpec { closure: Closure::Open, ..*ball }),
                ..CheckParams::exponents(&exps)
            };
            let lhs = level_set_measure(space, &frac, &members, gamma);
            let rhs = prefactor * (norm / gamma).powf(power);
            out.push(CheckReport::new(CheckId::T3, params, lhs, rhs, None));
        }
    }
    Ok(out)
}

/// `||I_alpha f||_{M^s_t(6)} <= C ||f||_{M^p_q(2)}`.
pub fn check_t6_strong(space: &MetricMeasureSpace, f: &FunctionOnSpace, exps: &ExponentSet) -> Result<CheckReport> {
    let exps = ExponentSet::new(exps.p, exps.q, exps.alpha)?;
    let f = f.abs();
    let frac = fractional_integral(space, &f, exps.alpha, KernelConvention::default())?;
    let lhs = morrey_norm(space, &frac, exps.s, exps.t, 6.0)?;
    let rhs = morrey_norm(space, &f, exps.p, exps.q, 2.0)?;
    Ok(CheckReport::new(CheckId::T6, CheckParams::exponents(&exps), lhs, rhs, None))
}

/// `||M_2 f||_{M^p_q(6)} <= C ||f||_{M^p_q(2)}`.
pub fn check_t7_maximal_morrey(space: &MetricMeasureSpace, f: &FunctionOnSpace, p: f64, q: f64) -> Result<CheckReport> {
    check_p(p)?;
    if !(q > 1.0 && q <= p) {
        return Err(exponent_error("q", q, format!("need 1 < q <= p = {p}")));
    }
    let f = f.abs();
    let m2 = maximal(space, &f, 2.0)?;
    let lhs = morrey_norm(space, &m2, p, q, 6.0)?;
    let rhs = morrey_norm(space, &f, p, q, 2.0)?;
    let params = CheckParams { p: Some(p), q: Some(q), kappa: Some(CHECK_KAPPA), ..CheckParams::default() };
    Ok(CheckReport::new(CheckId::T7, params, lhs, rhs, None))
}

/// `mu{M_2 f > gamma} <= C ||f||_{L^1} / gamma`; report only.
pub fn check_weak_l1(space: &MetricMeasureSpace, f: &FunctionOnSpace, gammas: &[f64]) -> Result<Vec<CheckReport>> {
    let f = f.abs();
    let m2 = maximal(space, &f, 2.0)?;
    let l1 = lq_norm(space, &f, 1.0, None)?;
    let all: Vec<usize> = (0..space.len()).collect();
    Ok(gammas
        .iter()
        .map(|&gamma| {
            let params = CheckParams { kappa: Some(CHECK_KAPPA), gamma: Some(gamma), ..CheckParams::default() };
            let lhs = level_set_measure(space, &m2, &all, gamma);
            CheckReport::new(CheckId::WeakL1, params, lhs, l1 / gamma, None)
        })
        .collect())
}

/// Runs one check the way the harness does: levels come from `grid` relative
/// to the largest value of the operator the check thresholds, balls from
/// `balls`. Unused arguments are ignored.
pub fn run_check(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    check: CheckId,
    exps: &ExponentSet,
    balls: &[BallSpec],
    grid: &GammaGrid,
) -> Result<Vec<CheckReport>> {
    match check {
        CheckId::T1 => {
            let reference = maximal(space, &f.abs(), 2.0)?.max_value();
            check_t1_over_balls(space, f, balls, exps.p, &grid.levels(reference))
        }
        CheckId::T2 => Ok(vec![check_t2_hedberg(space, f, exps.p, exps.alpha)?]),
        CheckId::T3 => {
            let reference = fractional_integral(space, &f.abs(), exps.alpha, KernelConvention::default())?.max_value();
            check_t3_over_balls(space, f, balls, exps, &grid.levels(reference))
        }
        CheckId::T6 => Ok(vec![check_t6_strong(space, f, exps)?]),
        CheckId::T7 => Ok(vec![check_t7_maximal_morrey(space, f, exps.p, exps.q)?]),
        CheckId::WeakL1 => {
            let reference = maximal(space, &f.abs(), 2.0)?.max_value();
            check_weak_l1(space, f, &grid.levels(reference))
        }
    }
}

/// Largest empirical constant among the records of [`run_check`].
pub fn worst_constant(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    check: CheckId,
    exps: &ExponentSet,
    balls: &[BallSpec],
    grid: &GammaGrid,
) -> Result<f64> {
    Ok(run_check(space, f, check, exps, balls, grid)?.iter().map(|r| r.empirical_constant).fold(0.0, f64::max))
}
