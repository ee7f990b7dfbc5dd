//! Functions on a finite space and the norms the inequalities are stated in.

use serde::{Deserialize, Serialize};

use crate::error::{exponent_error, Error, Result};
use crate::space::MetricMeasureSpace;

/// One real value per point of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionOnSpace {
    values: Vec<f64>,
}

impl FunctionOnSpace {
    pub fn new(space: &MetricMeasureSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self { values })
    }

    /// Wraps values that are known to be finite and of the right length.
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn constant(space: &MetricMeasureSpace, c: f64) -> Self {
        Self::from_values(vec![c; space.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Self {
        Self::from_values(self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_values(self.values.iter().map(|v| v * factor).collect())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_len(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.values.len() == space.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: space.len(), found: self.values.len() })
        }
    }
}

/// The exponent tuple `(p, q, alpha)` together with the derived `s` and `t`
/// satisfying `1/s = 1/p - alpha` and `q/p = t/s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub s: f64,
    pub t: f64,
}

impl ExponentSet {
    pub fn new(p: f64, q: f64, alpha: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(exponent_error("p", p, "need 1 < p < inf"));
        }
        if !(q > 1.0 && q <= p) {
            return Err(exponent_error("q", q, format!("need 1 < q <= p = {p}")));
        }
        if !(alpha > 0.0 && alpha < 1.0 / p) {
            return Err(exponent_error("alpha", alpha, format!("need 0 < alpha < 1/p = {}", 1.0 / p)));
        }
        let s = p / (1.0 - p * alpha);
        let t = s * q / p;
        Ok(Self { p, q, alpha, s, t })
    }
}

/// `(sum_{i in region} |f_i|^q mass_i)^{1/q}`; `region = None` means all of X.
pub fn lq_norm(space: &MetricMeasureSpace, f: &FunctionOnSpace, q: f64, region: Option<&[usize]>) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(exponent_error("q", q, "need q >= 1"));
    }
    f.check_len(space)?;
    let all: Vec<usize>;
    let pts = match region {
        Some(pts) => {
            for &i in pts {
                space.check_index(i)?;
            }
            pts
        }
        None => {
            all = (0..space.len()).collect();
            &all
        }
    };
    // Factor out the peak so large q cannot overflow.
    let peak = pts.iter().map(|&i| f.values[i].abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = pts.iter().map(|&i| (f.values[i].abs() / peak).powf(q) * space.mass()[i]).sum();
    Ok(peak * sum.powf(1.0 / q))
}

/// The Morrey norm `||f||_{M^p_q(k, mu)}`:
/// sup over `x` and `r > 0` of `mu(B(x, k r))^{1/p - 1/q} (int_{B(x,r)} |f|^q)^{1/q}`.
///
/// Between consecutive distances from `x` the local integral is constant while
/// the normaliser can only grow (and carries a nonpositive power), so each
/// interval's sup is its left end's right limit, i.e. a closed ball at a
/// breakpoint. The maximum over those candidates is exact.
pub fn morrey_norm(space: &MetricMeasureSpace, f: &FunctionOnSpace, p: f64, q: f64, k: f64) -> Result<f64> {
    check_morrey_exponents(p, q, k)?;
    f.check_len(space)?;
    let peak = f.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(0.0);
    }
    let weights: Vec<f64> = f.values.iter().zip(space.mass()).map(|(v, m)| (v.abs() / peak).powf(q) * m).collect();
    let exponent = 1.0 / p - 1.0 / q;
    let mut best = 0.0f64;
    for x in 0..space.len() {
        best = best.max(morrey_at(space, &weights, x, exponent, q, k));
    }
    Ok(peak * best)
}

pub(crate) fn check_morrey_exponents(p: f64, q: f64, k: f64) -> Result<()> {
    if !(q >= 1.0 && q <= p && p.is_finite()) {
        return Err(exponent_error("q", q, format!("need 1 <= q <= p = {p} < inf")));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(exponent_error("k", k, "need k >= 1"));
    }
    Ok(())
}

fn morrey_at(space: &MetricMeasureSpace, weights: &[f64], x: usize, exponent: f64, q: f64, k: f64) -> f64 {
    let nbrs = space.neighbors(x);
    let mut acc = 0.0;
    let mut done = 0;
    let mut best = 0.0f64;
    for (rho, count) in space.breakpoint_groups(x) {
        acc += nbrs[done..count].iter().map(|&y| weights[y]).sum::<f64>();
        done = count;
        if acc == 0.0 {
            continue;
        }
        let norm = space.closed_measure(x, k * rho);
        best = best.max(norm.powf(exponent) * acc.powf(1.0 / q));
    }
    best
}

/// `mu{ i in region : g_i > gamma }` (strict inequality).
pub fn level_set_measure(space: &MetricMeasureSpace, g: &FunctionOnSpace, region: &[usize], gamma: f64) -> f64 {
    region.iter().filter(|&&i| g.values[i] > gamma).map(|&i| space.mass()[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::validate_space;

    fn two_point(m0: f64, m1: f64) -> MetricMeasureSpace {
        validate_space(2, vec![0.0, 1.0, 1.0, 0.0], vec![m0, m1]).unwrap()
    }

    fn func(s: &MetricMeasureSpace, v: &[f64]) -> FunctionOnSpace {
        FunctionOnSpace::new(s, v.to_vec()).unwrap()
    }

    #[test]
    fn function_validation() {
        let s = two_point(1.0, 1.0);
        assert!(matches!(FunctionOnSpace::new(&s, vec![1.0]), Err(Error::LengthMismatch { expected: 2, found: 1 })));
        assert!(matches!(FunctionOnSpace::new(&s, vec![1.0, f64::NAN]), Err(Error::NonFiniteValue(1))));
    }

    #[test]
    fn exponent_derivation() {
        let e = ExponentSet::new(2.0, 1.5, 0.25).unwrap();
        assert_eq!(e.s, 4.0);
        assert_eq!(e.t, 3.0);
        assert!(ExponentSet::new(2.0, 1.5, 0.5).is_err());
        assert!(ExponentSet::new(2.0, 2.5, 0.1).is_err());
        assert!(ExponentSet::new(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn lq_examples() {
        let s = two_point(1.0, 2.0);
        assert_eq!(lq_norm(&s, &func(&s, &[3.0, 0.0]), 2.0, None).unwrap(), 3.0);
        assert_eq!(lq_norm(&s, &func(&s, &[0.0, 0.0]), 3.0, None).unwrap(), 0.0);
        let c = lq_norm(&s, &FunctionOnSpace::constant(&s, 2.0), 2.0, None).unwrap();
        assert!((c - 2.0 * 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(lq_norm(&s, &func(&s, &[3.0, 1.0]), 1.0, Some(&[1])).unwrap(), 2.0);
        assert!(lq_norm(&s, &func(&s, &[3.0, 1.0]), 0.5, None).is_err());
    }

    #[test]
    fn morrey_single_point() {
        let s = validate_space(1, vec![0.0], vec![0.3]).unwrap();
        let f = func(&s, &[-2.0]);
        for p in [1.5, 2.0, 4.0] {
            let got = morrey_norm(&s, &f, p, 1.0, 2.0).unwrap();
            let want = 2.0 * 0.3f64.powf(1.0 / p);
            assert!((got - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn morrey_two_point_attained_at_origin_atom() {
        let s = two_point(1.0, 1.0);
        let f = func(&s, &[1.0, 0.0]);
        for p in [1.1, 2.0, 7.0] {
            assert_eq!(morrey_norm(&s, &f, p, 1.0, 2.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn morrey_homogeneous() {
        let s = validate_space(3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0], vec![0.5, 2.0, 1.0]).unwrap();
        let f = func(&s, &[0.2, 1.3, 0.7]);
        let base = morrey_norm(&s, &f, 3.0, 2.0, 2.0).unwrap();
        let scaled = morrey_norm(&s, &f.scale(4.5), 3.0, 2.0, 2.0).unwrap();
        assert!((scaled - 4.5 * base).abs() <= 1e-14 * scaled);
    }

    #[test]
    fn morrey_rejects_bad_exponents() {
        let s = two_point(1.0, 1.0);
        let f = func(&s, &[1.0, 0.0]);
        assert!(morrey_norm(&s, &f, 2.0, 3.0, 2.0).is_err());
        assert!(morrey_norm(&s, &f, 2.0, 0.5, 2.0).is_err());
        assert!(morrey_norm(&s, &f, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn level_set_examples() {
        let s = two_point(1.0, 2.0);
        assert_eq!(level_set_measure(&s, &func(&s, &[0.0, 0.0]), &[0, 1], 0.5), 0.0);
        assert_eq!(level_set_measure(&s, &func(&s, &[2.0, 2.0]), &[0, 1], 1.0), 3.0);
        assert_eq!(level_set_measure(&s, &func(&s, &[5.0, 1.0]), &[0, 1], 3.0), 1.0);
        // strict inequality
        assert_eq!(level_set_measure(&s, &func(&s, &[3.0, 1.0]), &[0, 1], 3.0), 0.0);
    }
}
