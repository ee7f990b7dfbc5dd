//! Finite metric measure spaces and ball queries.
//!
//! A space stores the full distance matrix together with, for every center,
//! its neighbours sorted by distance and the running sum of their masses.
//! Every ball measure is then a binary search plus one lookup, and every
//! sup over radii reduces to a scan of the distinct sorted distances
//! (the breakpoints) of a center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Relative slack allowed in the triangle inequality, so that Euclidean
/// distances produced by `sqrt` on collinear points still validate.
const TRIANGLE_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    Open,
    Closed,
}

/// `B(center, radius)`, open or closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: usize,
    pub radius: f64,
    pub closure: Closure,
}

impl BallSpec {
    pub fn open(center: usize, radius: f64) -> Self {
        Self { center, radius, closure: Closure::Open }
    }

    pub fn closed(center: usize, radius: f64) -> Self {
        Self { center, radius, closure: Closure::Closed }
    }
}

/// On-disk representation: `{ "n": .., "dist": [row-major n*n], "mass": [n] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub n: usize,
    pub dist: Vec<f64>,
    pub mass: Vec<f64>,
}

/// A validated triple `(X, d, mu)` with strictly positive atoms.
#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    mass: Vec<f64>,
    total_mass: f64,
    // Row x holds the neighbours of x sorted by (distance, index).
    order: Vec<usize>,
    sorted_dist: Vec<f64>,
    cum_mass: Vec<f64>,
}

impl PartialEq for MetricMeasureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dist == other.dist && self.mass == other.mass
    }
}

/// Largest doubling quotient `mu(B(x,2r)) / mu(B(x,r))` and where it occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoublingWitness {
    pub ratio: f64,
    pub center: usize,
    /// The quotient is attained as `r` decreases to this value.
    pub radius: f64,
}

/// Checks every invariant and returns either the space or all violations.
pub fn validate_space(n: usize, dist: Vec<f64>, mass: Vec<f64>) -> Result<MetricMeasureSpace> {
    let violations = violations(n, &dist, &mass);
    if !violations.is_empty() {
        return Err(Error::InvalidSpace(violations));
    }
    Ok(MetricMeasureSpace::build(n, dist, mass))
}

fn violations(n: usize, dist: &[f64], mass: &[f64]) -> Vec<Violation> {
    if n == 0 || dist.len() != n * n || mass.len() != n {
        return vec![Violation::ShapeMismatch { n, dist_len: dist.len(), mass_len: mass.len() }];
    }
    let d = |i: usize, j: usize| dist[i * n + j];
    let mut out = Vec::new();
    let mut finite = true;
    for i in 0..n {
        for j in 0..n {
            let v = d(i, j);
            if !v.is_finite() {
                out.push(Violation::NonFiniteDistance(i, j));
                finite = false;
            } else if v < 0.0 {
                out.push(Violation::NegativeDistance(i, j));
            }
        }
    }
    for i in 0..n {
        if d(i, i) != 0.0 && d(i, i).is_finite() {
            out.push(Violation::NonzeroDiagonal(i));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if d(i, j) != d(j, i) {
                out.push(Violation::Asymmetry(i, j));
            }
        }
    }
    if finite {
        for i in 0..n {
            for k in (i + 1)..n {
                let dik = d(i, k);
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let bound = d(i, j) + d(j, k);
                    if dik > bound * (1.0 + TRIANGLE_SLACK) {
                        out.push(Violation::TriangleViolation(i, j, k));
                    }
                }
            }
        }
    }
    for (i, &m) in mass.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            out.push(Violation::NonpositiveMass(i));
        }
    }
    if out.is_empty() && !mass.iter().sum::<f64>().is_finite() {
        out.push(Violation::NonpositiveMass(0));
    }
    out
}

impl TryFrom<SpaceFile> for MetricMeasureSpace {
    type Error = Error;

    fn try_from(raw: SpaceFile) -> Result<Self> {
        validate_space(raw.n, raw.dist, raw.mass)
    }
}

impl MetricMeasureSpace {
    fn build(n: usize, dist: Vec<f64>, mass: Vec<f64>) -> Self {
        let mut order = Vec::with_capacity(n * n);
        let mut sorted_dist = Vec::with_capacity(n * n);
        let mut cum_mass = Vec::with_capacity(n * n);
        for x in 0..n {
            let row = &dist[x * n..(x + 1) * n];
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut acc = 0.0;
            for &y in &idx {
                acc += mass[y];
                sorted_dist.push(row[y]);
                cum_mass.push(acc);
            }
            order.extend(idx);
        }
        let total_mass = mass.iter().sum();
        Self { n, dist, mass, total_mass, order, sorted_dist, cum_mass }
    }

    /// Builds a space from explicit planar/linear coordinates with Euclidean distance.
    pub fn from_points(points: &[Vec<f64>], mass: Vec<f64>) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        validate_space(n, dist, mass)
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile { n: self.n, dist: self.dist.clone(), mass: self.mass.clone() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_index(&self, x: usize) -> Result<()> {
        if x < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: x, n: self.n })
        }
    }

    /// Neighbours of `x` ordered by distance, ties by index.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.order[x * self.n..(x + 1) * self.n]
    }

    /// Distances from `x` in the same order as [`Self::neighbors`].
    pub fn sorted_distances(&self, x: usize) -> &[f64] {
        &self.sorted_dist[x * self.n..(x + 1) * self.n]
    }

    pub(crate) fn cumulative_mass(&self, x: usize) -> &[f64] {
        &self.cum_mass[x * self.n..(x + 1) * self.n]
    }

    /// Number of leading neighbours of `x` inside the ball.
    pub(crate) fn member_count(&self, x: usize, radius: f64, closure: Closure) -> usize {
        let row = self.sorted_distances(x);
        match closure {
            Closure::Open => row.partition_point(|&d| d < radius),
            Closure::Closed => row.partition_point(|&d| d <= radius),
        }
    }

    /// `mu(B(x, r))` for the given closure; no index check.
    pub(crate) fn measure(&self, x: usize, radius: f64, closure: Closure) -> f64 {
        match self.member_count(x, radius, closure) {
            0 => 0.0,
            c => self.cumulative_mass(x)[c - 1],
        }
    }

    pub(crate) fn closed_measure(&self, x: usize, radius: f64) -> f64 {
        self.measure(x, radius, Closure::Closed)
    }

    pub fn ball_members(&self, ball: &BallSpec) -> Result<Vec<usize>> {
        self.check_index(ball.center)?;
        let c = self.member_count(ball.center, ball.radius, ball.closure);
        let mut members = self.neighbors(ball.center)[..c].to_vec();
        members.sort_unstable();
        Ok(members)
    }

    pub fn ball_measure(&self, ball: &BallSpec) -> Result<f64> {
        self.check_index(ball.center)?;
        Ok(self.measure(ball.center, ball.radius, ball.closure))
    }

    /// Distinct distances from `x`, ascending; always starts at 0.
    pub fn breakpoints(&self, x: usize) -> Result<Vec<f64>> {
        self.check_index(x)?;
        Ok(self.breakpoint_groups(x).map(|(rho, _)| rho).collect())
    }

    /// Each distinct distance `rho` from `x` paired with the number of
    /// neighbours at distance `<= rho`.
    pub(crate) fn breakpoint_groups(&self, x: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        let row = self.sorted_distances(x);
        (0..row.len()).filter(move |&j| j + 1 == row.len() || row[j + 1] != row[j]).map(move |j| (row[j], j + 1))
    }

    /// Exact sup of `mu(B(x,2r)) / mu(B(x,r))` over all centers and radii.
    pub fn doubling_ratio(&self) -> DoublingWitness {
        let mut best = DoublingWitness { ratio: 1.0, center: 0, radius: 0.0 };
        for x in 0..self.n {
            let bps: Vec<f64> = self.breakpoint_groups(x).map(|(r, _)| r).collect();
            let mut cands: Vec<f64> = bps.iter().flat_map(|&r| [r, r / 2.0]).collect();
            cands.push(0.0);
            cands.sort_by(f64::total_cmp);
            cands.dedup();
            for c in cands {
                let ratio = self.closed_measure(x, 2.0 * c) / self.closed_measure(x, c);
                if ratio > best.ratio {
                    best = DoublingWitness { ratio, center: x, radius: c };
                }
            }
        }
        best
    }

    /// Same points and distances with every atom multiplied by `factor`.
    pub fn scale_mass(&self, factor: f64) -> Result<Self> {
        let mass = self.mass.iter().map(|m| m * factor).collect();
        validate_space(self.n, self.dist.clone(), mass)
    }

    /// Same atoms with every distance multiplied by `factor`.
    pub fn scale_metric(&self, factor: f64) -> Result<Self> {
        let dist = self.dist.iter().map(|d| d * factor).collect();
        validate_space(self.n, dist, self.mass.clone())
    }
}

/// A centered ball `B(c, rho)` with `c` in `B(a, r)` that reaches outside
/// `B(a, 3r)` but whose double `B(c, 2 rho)` misses part of `B(a, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngulfingFailure {
    pub a: usize,
    pub r: f64,
    pub c: usize,
    pub rho: f64,
}

fn probe_radii(space: &MetricMeasureSpace, x: usize) -> Vec<f64> {
    let mut out: Vec<f64> =
        space.breakpoint_groups(x).flat_map(|(b, _)| [0.5 * b, b, 1.5 * b, b.next_up()]).filter(|&r| r > 0.0).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Enumerates open balls `B(a, r)` and centered balls `B(c, rho)` with
/// `c in B(a, r)`; every `B(c, rho)` meeting `X \ B(a, 3r)` must have its
/// double containing `B(a, r)`. Returns the pairs for which that fails.
pub fn engulfing_check(space: &MetricMeasureSpace) -> Vec<EngulfingFailure> {
    let mut failures = Vec::new();
    for a in 0..space.len() {
        for r in probe_radii(space, a) {
            let inner = space.member_count(a, r, Closure::Open);
            let inner_pts = &space.neighbors(a)[..inner];
            for &c in inner_pts {
                for rho in probe_radii(space, c) {
                    let reaches_out = (0..space.len()).any(|z| space.dist(c, z) < rho && space.dist(a, z) >= 3.0 * r);
                    if !reaches_out {
                        continue;
                    }
                    if inner_pts.iter().any(|&w| space.dist(c, w) >= 2.0 * rho) {
                        failures.push(EngulfingFailure { a, r, c, rho });
                    }
                }
            }
        }
    }
    failures
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
