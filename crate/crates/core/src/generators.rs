//! Seeded families of spaces and functions.
//!
//! Space families run from doubling (Lebesgue grid) through polynomially
//! decaying weights to Gaussian weights, plus an ultrametric tree. Grid
//! coordinates are cell centres `-halfwidth + (i + 1/2) h`, which are dyadic
//! whenever `halfwidth` and `n_per_axis` are, so equal distances compare equal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::FunctionOnSpace;
use crate::rng;
use crate::space::{validate_space, MetricMeasureSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceFamily {
    Grid,
    GaussianGrid,
    RadialDecayGrid,
    UltrametricTree,
    RandomPoints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub family: SpaceFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_per_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_halfwidth: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SpaceSpec {
    pub fn new(family: SpaceFamily) -> Self {
        Self { family, dim: None, n_per_axis: None, n: None, depth: None, beta: None, domain_halfwidth: None, seed: 0 }
    }

    pub fn grid(family: SpaceFamily, dim: usize, n_per_axis: usize, halfwidth: f64) -> Self {
        Self { dim: Some(dim), n_per_axis: Some(n_per_axis), domain_halfwidth: Some(halfwidth), ..Self::new(family) }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn ultrametric(depth: u32) -> Self {
        Self { depth: Some(depth), ..Self::new(SpaceFamily::UltrametricTree) }
    }

    pub fn random_points(dim: usize, n: usize, halfwidth: f64, seed: u64) -> Self {
        Self {
            dim: Some(dim),
            n: Some(n),
            domain_halfwidth: Some(halfwidth),
            seed,
            ..Self::new(SpaceFamily::RandomPoints)
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

pub fn generate_space(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    match spec.family {
        SpaceFamily::Grid | SpaceFamily::GaussianGrid | SpaceFamily::RadialDecayGrid => grid(spec),
        SpaceFamily::UltrametricTree => ultrametric(spec),
        SpaceFamily::RandomPoints => random_points(spec),
    }
}

fn dim_of(spec: &SpaceSpec) -> Result<usize> {
    match spec.dim.unwrap_or(1) {
        0 => Err(invalid("dim must be positive")),
        d => Ok(d),
    }
}

fn halfwidth_of(spec: &SpaceSpec) -> Result<f64> {
    let hw = spec.domain_halfwidth.ok_or_else(|| invalid("domain_halfwidth is required"))?;
    if hw > 0.0 && hw.is_finite() {
        Ok(hw)
    } else {
        Err(invalid(format!("domain_halfwidth must be positive, got {hw}")))
    }
}

fn grid(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    if spec.depth.is_some() {
        return Err(invalid("depth is only meaningful for ultrametric-tree"));
    }
    let dim = dim_of(spec)?;
    let per_axis = match (spec.n_per_axis, spec.n) {
        (Some(m), None) => m,
        (None, Some(n)) if dim == 1 => n,
        (Some(_), Some(_)) => return Err(invalid("give either n_per_axis or n, not both")),
        _ => return Err(invalid("grid families need n_per_axis (or n when dim = 1)")),
    };
    if per_axis == 0 {
        return Err(invalid("n_per_axis must be positive"));
    }
    let hw = halfwidth_of(spec)?;
    let beta = match spec.family {
        SpaceFamily::RadialDecayGrid => {
            let b = spec.beta.ok_or_else(|| invalid("radial-decay-grid needs beta"))?;
            if !(b >= 0.0 && b.is_finite()) {
                return Err(invalid(format!("beta must be >= 0, got {b}")));
            }
            b
        }
        _ if spec.beta.is_some() => return Err(invalid("beta is only meaningful for radial-decay-grid")),
        _ => 0.0,
    };
    let count = per_axis.checked_pow(dim as u32).filter(|&c| c <= 1 << 14).ok_or_else(|| invalid("grid too large"))?;
    let h = 2.0 * hw / per_axis as f64;
    let cell = h.powi(dim as i32);
    let mut points = Vec::with_capacity(count);
    let mut mass = Vec::with_capacity(count);
    for flat in 0..count {
        let mut rest = flat;
        let mut coord = vec![0.0; dim];
        for axis in (0..dim).rev() {
            coord[axis] = -hw + (rest % per_axis) as f64 * h + 0.5 * h;
            rest /= per_axis;
        }
        let r2: f64 = coord.iter().map(|c| c * c).sum();
        mass.push(match spec.family {
            SpaceFamily::GaussianGrid => cell * (-r2).exp(),
            SpaceFamily::RadialDecayGrid => cell * (1.0 + r2.sqrt()).powf(-beta),
            _ => cell,
        });
        points.push(coord);
    }
    MetricMeasureSpace::from_points(&points, mass)
}

fn ultrametric(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    let depth = spec.depth.ok_or_else(|| invalid("ultrametric-tree needs depth"))?;
    if !(1..=12).contains(&depth) {
        return Err(invalid(format!("depth must be in 1..=12, got {depth}")));
    }
    let n = 1usize << depth;
    let mut dist = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                // The least common ancestor sits `bits(u ^ v)` levels above the leaves.
                let above = usize::BITS - (u ^ v).leading_zeros();
                let lca_depth = depth - above;
                dist[u * n + v] = (-(lca_depth as f64)).exp2();
            }
        }
    }
    validate_space(n, dist, vec![1.0; n])
}

fn random_points(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    let dim = dim_of(spec)?;
    let n = spec.n.ok_or_else(|| invalid("random-points needs n"))?;
    if n == 0 || n > 1 << 14 {
        return Err(invalid(format!("n must be in 1..=16384, got {n}")));
    }
    let hw = halfwidth_of(spec)?;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..dim).map(|j| -hw + 2.0 * hw * rng::unit(spec.seed, (i * dim + j) as u64)).collect())
        .collect();
    MetricMeasureSpace::from_points(&points, vec![1.0; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionFamily {
    Constant,
    BallIndicator,
    PowerSpike,
    RandomSparse,
    RandomUniform,
}

impl FunctionFamily {
    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            FunctionFamily::Constant => &["c"],
            FunctionFamily::BallIndicator => &["c", "center", "radius"],
            FunctionFamily::PowerSpike => &["beta", "cap", "center"],
            FunctionFamily::RandomSparse => &["density", "scale"],
            FunctionFamily::RandomUniform => &["scale"],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FunctionFamily::Constant => "constant",
            FunctionFamily::BallIndicator => "ball-indicator",
            FunctionFamily::PowerSpike => "power-spike",
            FunctionFamily::RandomSparse => "random-sparse",
            FunctionFamily::RandomUniform => "random-uniform",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub family: FunctionFamily,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl FunctionSpec {
    pub fn new(family: FunctionFamily, seed: u64) -> Self {
        Self { family, params: BTreeMap::new(), seed }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn get(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.params.get(key).copied().unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(format!("parameter {key} must be finite")))
        }
    }

    fn nonneg(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(invalid(format!("parameter {key} must be >= 0, got {v}")))
        }
    }

    fn point(&self, space: &MetricMeasureSpace, key: &str, stream: u64) -> Result<usize> {
        match self.params.get(key) {
            Some(&c) if c >= 0.0 && c.fract() == 0.0 && (c as usize) < space.len() => Ok(c as usize),
            Some(&c) => Err(invalid(format!("{key} = {c} is not a point index of this space"))),
            None => Ok(rng::index_below(self.seed, stream, space.len())),
        }
    }
}

pub fn generate_function(space: &MetricMeasureSpace, spec: &FunctionSpec) -> Result<FunctionOnSpace> {
    let allowed = spec.family.allowed_params();
    if let Some(k) = spec.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(format!("unknown parameter `{k}` for {}", spec.family.tag())));
    }
    let n = space.len();
    // Streams 0..2n are per-point draws; the auxiliary draws sit above them.
    let aux = 2 * n as u64;
    let values: Vec<f64> = match spec.family {
        FunctionFamily::Constant => vec![spec.nonneg("c", 1.0)?; n],
        FunctionFamily::BallIndicator => {
            let c = spec.nonneg("c", 1.0)?;
            let center = spec.point(space, "center", aux)?;
            let radius = match spec.params.get("radius") {
                Some(_) => spec.nonneg("radius", 0.0)?,
                None => {
                    let bps = space.breakpoints(center)?;
                    bps[rng::index_below(spec.seed, aux + 1, bps.len())]
                }
            };
            (0..n).map(|y| if space.dist(center, y) <= radius { c } else { 0.0 }).collect()
        }
        FunctionFamily::PowerSpike => {
            let beta = spec.nonneg("beta", 1.0)?;
            let cap = spec.nonneg("cap", 1e3)?;
            let center = spec.point(space, "center", aux)?;
            (0..n)
                .map(|y| {
                    let d = space.dist(center, y);
                    if d == 0.0 {
                        cap
                    } else {
                        d.powf(-beta).min(cap)
                    }
                })
                .collect()
        }
        FunctionFamily::RandomSparse => {
            let density = spec.get("density", 0.25)?;
            if !(0.0..=1.0).contains(&density) {
                return Err(invalid(format!("density must be in [0, 1], got {density}")));
            }
            let scale = spec.nonneg("scale", 1.0)?;
            (0..n)
                .map(|i| {
                    if rng::unit(spec.seed, 2 * i as u64) < density {
                        scale * rng::unit(spec.seed, 2 * i as u64 + 1)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        FunctionFamily::RandomUniform => {
            let scale = spec.nonneg("scale", 1.0)?;
            (0..n).map(|i| scale * rng::unit(spec.seed, 2 * i as u64 + 1)).collect()
        }
    };
    FunctionOnSpace::new(space, values)
}
