//! The centered maximal operator `M_k`, the fractional integral `I_alpha`
//! with dilated kernel, and the dyadic layer radii behind the pointwise
//! Hedberg bound.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{exponent_error, Error, Result};
use crate::functions::FunctionOnSpace;
use crate::space::{Closure, MetricMeasureSpace};

/// Dilation used by every theorem checker.
pub const CHECK_KAPPA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalMode {
    /// Kernel mass is the right limit `mu(closed B(x, kappa d(x,y)))`; the
    /// atom at `x` weighs itself.
    ClosedBall,
    /// Drops every `y` with `d(x,y) = 0` and uses open balls.
    ExcludeDiagonal,
}

/// How the kernel `mu(B(x, kappa d(x,y)))^{alpha-1}` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConvention {
    pub kappa: f64,
    pub diagonal: DiagonalMode,
}

impl Default for KernelConvention {
    fn default() -> Self {
        Self { kappa: CHECK_KAPPA, diagonal: DiagonalMode::ClosedBall }
    }
}

impl KernelConvention {
    pub fn closed(kappa: f64) -> Self {
        Self { kappa, diagonal: DiagonalMode::ClosedBall }
    }
}

/// `M_k f(x) = sup_r mu(B(x, k r))^{-1} int_{B(x,r)} |f|`, evaluated exactly
/// over the breakpoints of each center.
pub fn maximal(space: &MetricMeasureSpace, f: &FunctionOnSpace, k: f64) -> Result<FunctionOnSpace> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(exponent_error("k", k, "need k >= 1"));
    }
    f.check_len(space)?;
    let weights: Vec<f64> = f.values().iter().zip(space.mass()).map(|(v, m)| v.abs() * m).collect();
    let out = (0..space.len()).map(|x| maximal_at(space, &weights, x, k)).collect();
    Ok(FunctionOnSpace::from_values(out))
}

fn maximal_at(space: &MetricMeasureSpace, weights: &[f64], x: usize, k: f64) -> f64 {
    let nbrs = space.neighbors(x);
    let mut acc = 0.0;
    let mut done = 0;
    let mut best = 0.0f64;
    for (rho, count) in space.breakpoint_groups(x) {
        acc += nbrs[done..count].iter().map(|&y| weights[y]).sum::<f64>();
        done = count;
        best = best.max(acc / space.closed_measure(x, k * rho));
    }
    best
}

/// `I_alpha f(x) = sum_y f(y) mu({y}) mu(B(x, kappa d(x,y)))^{alpha-1}`.
pub fn fractional_integral(
    space: &MetricMeasureSpace,
    f: &FunctionOnSpace,
    alpha: f64,
    conv: KernelConvention,
) -> Result<FunctionOnSpace> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(exponent_error("alpha", alpha, "need 0 < alpha < 1"));
    }
    if !(conv.kappa > 0.0 && conv.kappa.is_finite()) {
        return Err(exponent_error("kappa", conv.kappa, "need kappa > 0"));
    }
    f.check_len(space)?;
    let n = space.len();
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let mut acc = 0.0;
        for y in 0..n {
            let fy = f.values()[y];
            let d = space.dist(x, y);
            let kernel_mass = match conv.diagonal {
                DiagonalMode::ClosedBall => space.closed_measure(x, conv.kappa * d),
                DiagonalMode::ExcludeDiagonal => {
                    if d == 0.0 {
                        continue;
                    }
                    let m = space.measure(x, conv.kappa * d, Closure::Open);
                    if m <= 0.0 {
                        return Err(Error::DivisionByZeroKernel { x, y });
                    }
                    m
                }
            };
            acc += fy * space.mass()[y] * kernel_mass.powf(alpha - 1.0);
        }
        out.push(acc);
    }
    Ok(FunctionOnSpace::from_values(out))
}

/// `(k, R_k(x))` with `R_k(x) = inf{R > 0 : mu(B(x, 2R)) > 2^k}`; an empty set
/// gives `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LayerRadius {
    pub k: i32,
    pub radius: f64,
}

/// Outside this range `R_k(x)` is constant (0 below, infinite above).
pub fn default_layer_range(space: &MetricMeasureSpace) -> RangeInclusive<i32> {
    let min_mass = space.mass().iter().copied().fold(f64::INFINITY, f64::min);
    let lo = min_mass.log2().floor() as i32 - 1;
    let hi = space.total_mass().log2().ceil() as i32 + 1;
    lo..=hi
}

pub fn layer_radii(space: &MetricMeasureSpace, x: usize, k_range: RangeInclusive<i32>) -> Result<Vec<LayerRadius>> {
    space.check_index(x)?;
    Ok(k_range.map(|k| LayerRadius { k, radius: layer_radius(space, x, k) }).collect())
}

fn layer_radius(space: &MetricMeasureSpace, x: usize, k: i32) -> f64 {
    let level = 2f64.powi(k);
    // mu(B(x, 2R)) > 2^k  iff  2R exceeds the first distance whose closed
    // ball carries more than 2^k.
    let cum = space.cumulative_mass(x);
    let j = cum.partition_point(|&c| c <= level);
    if j == cum.len() {
        f64::INFINITY
    } else {
        space.sorted_distances(x)[j] / 2.0
    }
}

/// The dyadic layer sum
/// `sum_{k : R_{k-1} < R_k} 2^{(k-1)(alpha-1)} int_{B(x, R_k)} |f|`,
/// which dominates `I_alpha f(x)` (closed-ball kernel, `kappa = 2`) and is
/// itself dominated by `hedberg_constant(p, alpha) M_2 f(x)^{1-p alpha} ||f||^{p alpha}`.
pub fn layer_sum(space: &MetricMeasureSpace, f: &FunctionOnSpace, x: usize, alpha: f64) -> Result<f64> {
    f.check_len(space)?;
    let range = default_layer_range(space);
    let radii = layer_radii(space, x, range)?;
    let mut total = 0.0;
    for w in radii.windows(2) {
        let (prev, cur) = (w[0].radius, w[1].radius);
        if prev >= cur {
            continue;
        }
        let k = w[1].k;
        let inner: f64 = if cur.is_infinite() {
            (0..space.len()).map(|y| f.values()[y].abs() * space.mass()[y]).sum()
        } else {
            let c = space.member_count(x, cur, Closure::Open);
            space.neighbors(x)[..c].iter().map(|&y| f.values()[y].abs() * space.mass()[y]).sum()
        };
        total += 2f64.powf((k - 1) as f64 * (alpha - 1.0)) * inner;
    }
    Ok(total)
}

/// Explicit constant of the pointwise bound
/// `I_alpha f(x) <= C M_2 f(x)^{1 - p alpha} ||f||_{M^p_1(2)}^{p alpha}`:
/// `2^{1-alpha} (1/(1 - 2^{-alpha}) + 1/(1 - 2^{alpha - 1/p}))`.
pub fn hedberg_constant(p: f64, alpha: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(exponent_error("p", p, "need 1 < p < inf"));
    }
    if !(alpha > 0.0 && alpha < 1.0 / p) {
        return Err(exponent_error("alpha", alpha, format!("need 0 < alpha < 1/p = {}", 1.0 / p)));
    }
    let small = 1.0 / (1.0 - (-alpha).exp2());
    let large = 1.0 / (1.0 - (alpha - 1.0 / p).exp2());
    Ok((1.0 - alpha).exp2() * (small + large))
}
