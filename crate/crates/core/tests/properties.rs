mod common;

use common::close;
use morrey_lab::operators::{default_layer_range, layer_radii, layer_sum};
use morrey_lab::theorems::{enumerate_balls, run_check};
use morrey_lab::{
    engulfing_check, fractional_integral, generate_function, generate_space, hedberg_constant, level_set_measure,
    lq_norm, maximal, morrey_norm, validate_space, BallSpec, CheckId, Closure, DiagonalMode, ExponentSet,
    FunctionFamily, FunctionOnSpace, FunctionSpec, GammaGrid, KernelConvention, MetricMeasureSpace, SpaceFamily,
    SpaceSpec, Violation,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    space: MetricMeasureSpace,
    f: Vec<f64>,
    g: Vec<f64>,
}

fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1..=2usize).prop_flat_map(|(n, dim)| {
        (
            prop::collection::vec(prop::collection::vec(-4.0..4.0f64, dim), n),
            prop::collection::vec(0.01..10.0f64, n),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..5.0f64], n),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..5.0f64], n),
        )
            .prop_filter_map("distinct points", |(pts, mass, f, g)| {
                let space = MetricMeasureSpace::from_points(&pts, mass).ok()?;
                let n = space.len();
                let distinct = (0..n).all(|i| (0..n).all(|j| i == j || space.dist(i, j) > 1e-6));
                distinct.then_some(Instance { space, f, g })
            })
    })
}

fn exponents() -> impl Strategy<Value = ExponentSet> {
    (1.05..6.0f64, 0.0..1.0f64, 0.02..0.98f64)
        .prop_map(|(p, qf, af)| ExponentSet::new(p, 1.0 + 1e-6 + (p - 1.0 - 1e-6) * qf, af / p).unwrap())
}

fn func(s: &MetricMeasureSpace, v: &[f64]) -> FunctionOnSpace {
    FunctionOnSpace::new(s, v.to_vec()).unwrap()
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balls_are_monotone_in_radius(inst in instance(10), r1 in 0.0..10.0f64, dr in 0.0..5.0f64) {
        let s = &inst.space;
        for x in 0..s.len() {
            for closure in [Closure::Open, Closure::Closed] {
                let small = s.ball_members(&BallSpec { center: x, radius: r1, closure }).unwrap();
                let big = s.ball_members(&BallSpec { center: x, radius: r1 + dr, closure }).unwrap();
                prop_assert!(small.iter().all(|i| big.contains(i)));
            }
            prop_assert!(s.ball_members(&BallSpec::open(x, 0.0)).unwrap().is_empty());
            prop_assert_eq!(s.ball_members(&BallSpec::closed(x, 0.0)).unwrap(), vec![x]);
        }
    }

    #[test]
    fn open_balls_shrink_to_closed_balls(inst in instance(10)) {
        let s = &inst.space;
        for x in 0..s.len() {
            let bps = s.breakpoints(x).unwrap();
            for (i, &rho) in bps.iter().enumerate() {
                let closed = s.ball_members(&BallSpec::closed(x, rho)).unwrap();
                let gap = bps.get(i + 1).map_or(1.0, |next| next - rho);
                for e in [0.5, 1e-3, 1e-6, 1e-9] {
                    let open = s.ball_members(&BallSpec::open(x, rho + gap * e)).unwrap();
                    prop_assert_eq!(&open, &closed);
                }
            }
        }
    }

    #[test]
    fn centered_balls_are_engulfed(inst in instance(12)) {
        prop_assert!(engulfing_check(&inst.space).is_empty());
    }

    #[test]
    fn doubling_ratio_matches_scan(inst in instance(10)) {
        let s = &inst.space;
        let w = s.doubling_ratio();
        let mut best = 1.0f64;
        for x in 0..s.len() {
            let bps = s.breakpoints(x).unwrap();
            let mut radii: Vec<f64> = (1..=200).map(|j| s.diameter().max(1.0) * 1.1 * j as f64 / 200.0).collect();
            for &b in &bps {
                radii.push(b * (1.0 + 1e-9) + 1e-300);
                radii.push(0.5 * b * (1.0 + 1e-9) + 1e-300);
            }
            for r in radii {
                let small = s.ball_measure(&BallSpec::open(x, r)).unwrap();
                let big = s.ball_measure(&BallSpec::open(x, 2.0 * r)).unwrap();
                prop_assert!(big / small <= w.ratio * (1.0 + 1e-12));
                best = best.max(big / small);
            }
        }
        prop_assert!(close(best, w.ratio, 1e-12), "{} vs {}", best, w.ratio);
    }

    #[test]
    fn morrey_norm_scaling(inst in instance(10), e in exponents(), k in 1.0..6.0f64, lambda in 0.1..10.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let (p, q) = (e.p, e.q);
        let base = morrey_norm(s, &f, p, q, k).unwrap();
        let heavy = morrey_norm(&s.scale_mass(lambda).unwrap(), &f, p, q, k).unwrap();
        prop_assert!(close(heavy, lambda.powf(1.0 / p) * base, 1e-10));
        let wide = s.scale_metric(lambda).unwrap();
        prop_assert!(close(morrey_norm(&wide, &f, p, q, k).unwrap(), base, 1e-10));
        prop_assert!(close(lq_norm(&wide, &f, q, None).unwrap(), lq_norm(s, &f, q, None).unwrap(), 1e-12));
        let all: Vec<usize> = (0..s.len()).collect();
        prop_assert_eq!(level_set_measure(&wide, &f, &all, 1.0), level_set_measure(s, &f, &all, 1.0));
    }

    #[test]
    fn norms_are_monotone(inst in instance(10), e in exponents(), k in 1.0..6.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let g = func(s, &sum(&inst.f, &inst.g));
        prop_assert!(morrey_norm(s, &f, e.p, e.q, k).unwrap() <= morrey_norm(s, &g, e.p, e.q, k).unwrap() * (1.0 + 1e-12));
        prop_assert!(lq_norm(s, &f, e.q, None).unwrap() <= lq_norm(s, &g, e.q, None).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn morrey_with_q_equal_p_is_local_lp(inst in instance(10), p in 1.0..5.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let mut best = 0.0f64;
        for x in 0..s.len() {
            for rho in s.breakpoints(x).unwrap() {
                let members = s.ball_members(&BallSpec::closed(x, rho)).unwrap();
                best = best.max(lq_norm(s, &f, p, Some(&members)).unwrap());
            }
        }
        prop_assert!(close(morrey_norm(s, &f, p, p, 1.0).unwrap(), best, 1e-12));
        prop_assert!(close(morrey_norm(s, &f, p, p, 4.0).unwrap(), best, 1e-12));
    }

    #[test]
    fn maximal_is_sublinear_and_monotone(inst in instance(10), k in 1.0..6.0f64, lambda in -3.0..3.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let g = func(s, &inst.g);
        let mf = maximal(s, &f, k).unwrap();
        let mg = maximal(s, &g, k).unwrap();
        let mfg = maximal(s, &func(s, &sum(&inst.f, &inst.g)), k).unwrap();
        let ml = maximal(s, &f.scale(lambda), k).unwrap();
        for x in 0..s.len() {
            let (a, b, c) = (mf.values()[x], mg.values()[x], mfg.values()[x]);
            prop_assert!(c <= (a + b) * (1.0 + 1e-12));
            prop_assert!(c >= a * (1.0 - 1e-12) && c >= b * (1.0 - 1e-12));
            prop_assert!(close(ml.values()[x], lambda.abs() * a, 1e-12));
        }
    }

    #[test]
    fn fractional_integral_is_linear_and_monotone(inst in instance(10), alpha in 0.01..0.99f64, lambda in 0.0..5.0f64) {
        let s = &inst.space;
        let conv = KernelConvention::default();
        let f = func(s, &inst.f);
        let g = func(s, &inst.g);
        let i_f = fractional_integral(s, &f, alpha, conv).unwrap();
        let i_g = fractional_integral(s, &g, alpha, conv).unwrap();
        let i_fg = fractional_integral(s, &func(s, &sum(&inst.f, &inst.g)), alpha, conv).unwrap();
        let i_l = fractional_integral(s, &f.scale(lambda), alpha, conv).unwrap();
        for x in 0..s.len() {
            prop_assert!(close(i_fg.values()[x], i_f.values()[x] + i_g.values()[x], 1e-12));
            prop_assert!(i_fg.values()[x] >= i_f.values()[x] * (1.0 - 1e-12));
            prop_assert!(close(i_l.values()[x], lambda * i_f.values()[x], 1e-12));
        }
    }

    #[test]
    fn operators_scale(inst in instance(10), alpha in 0.01..0.99f64, k in 1.0..4.0f64, lambda in 0.1..10.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let conv = KernelConvention::default();
        let heavy = s.scale_mass(lambda).unwrap();
        let wide = s.scale_metric(lambda).unwrap();
        let i0 = fractional_integral(s, &f, alpha, conv).unwrap();
        let m0 = maximal(s, &f, k).unwrap();
        let i_heavy = fractional_integral(&heavy, &f, alpha, conv).unwrap();
        let i_wide = fractional_integral(&wide, &f, alpha, conv).unwrap();
        let m_heavy = maximal(&heavy, &f, k).unwrap();
        let m_wide = maximal(&wide, &f, k).unwrap();
        for x in 0..s.len() {
            prop_assert!(close(i_heavy.values()[x], lambda.powf(alpha) * i0.values()[x], 1e-10));
            prop_assert!(close(i_wide.values()[x], i0.values()[x], 1e-10));
            prop_assert!(close(m_heavy.values()[x], m0.values()[x], 1e-10));
            prop_assert!(close(m_wide.values()[x], m0.values()[x], 1e-10));
        }
    }

    #[test]
    fn kernel_is_monotone_in_kappa(inst in instance(10), alpha in 0.01..0.99f64, k1 in 0.1..2.0f64, dk in 0.0..2.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        for diagonal in [DiagonalMode::ClosedBall, DiagonalMode::ExcludeDiagonal] {
            let a = fractional_integral(s, &f, alpha, KernelConvention { kappa: k1, diagonal }).unwrap();
            let b = fractional_integral(s, &f, alpha, KernelConvention { kappa: k1 + dk, diagonal }).unwrap();
            for x in 0..s.len() {
                prop_assert!(a.values()[x] >= b.values()[x]);
            }
        }
    }

    #[test]
    fn layer_sum_brackets_fractional_integral(inst in instance(10), e in exponents()) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let (p, alpha) = (e.p, e.alpha);
        let i = fractional_integral(s, &f, alpha, KernelConvention::default()).unwrap();
        let m2 = maximal(s, &f, 2.0).unwrap();
        let norm = morrey_norm(s, &f, p, 1.0, 2.0).unwrap();
        let ch = hedberg_constant(p, alpha).unwrap();
        for x in 0..s.len() {
            let ls = layer_sum(s, &f, x, alpha).unwrap();
            prop_assert!(ls >= i.values()[x] * (1.0 - 1e-12), "x={} {} < {}", x, ls, i.values()[x]);
            let bound = ch * m2.values()[x].powf(1.0 - p * alpha) * norm.powf(p * alpha);
            prop_assert!(ls <= bound * (1.0 + 1e-12), "x={} {} > {}", x, ls, bound);
            let radii = layer_radii(s, x, default_layer_range(s)).unwrap();
            prop_assert!(radii.windows(2).all(|w| w[0].radius <= w[1].radius));
            prop_assert_eq!(radii.first().unwrap().radius, 0.0);
            prop_assert!(radii.last().unwrap().radius.is_infinite());
        }
    }

    #[test]
    fn exponent_coupling(e in exponents()) {
        prop_assert!(close(1.0 / e.s, 1.0 / e.p - e.alpha, 1e-12));
        prop_assert!(close(e.t * e.p, e.s * e.q, 1e-12));
        prop_assert!(e.s > e.p && e.t > 1.0 && e.t <= e.s * (1.0 + 1e-15));
    }

    #[test]
    fn checks_are_scale_invariant(inst in instance(8), e in exponents(), lambda in 0.01..100.0f64) {
        let s = &inst.space;
        let f = func(s, &inst.f);
        let balls = enumerate_balls(s, 8, 1);
        let grid = GammaGrid { count: 7, ..GammaGrid::default() };
        for check in CheckId::ALL {
            let a = run_check(s, &f, check, &e, &balls, &grid).unwrap();
            let b = run_check(s, &f.scale(lambda), check, &e, &balls, &grid).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (ra, rb) in a.iter().zip(&b) {
                prop_assert!(close(ra.empirical_constant, rb.empirical_constant, 1e-9),
                    "{}: {} vs {}", check, ra.empirical_constant, rb.empirical_constant);
                if ra.rhs_without_constant > 0.0 {
                    prop_assert!(ra.empirical_constant.is_finite());
                }
                prop_assert_eq!(ra.pass.is_some(), ra.paper_constant.is_some());
            }
            if matches!(check, CheckId::T1 | CheckId::T2) {
                prop_assert!(a.iter().all(|r| r.pass == Some(true)), "{} failed", check);
            }
        }
    }

    #[test]
    fn generators_are_valid_and_deterministic(
        family in prop_oneof![
            Just(SpaceFamily::Grid),
            Just(SpaceFamily::GaussianGrid),
            Just(SpaceFamily::RadialDecayGrid),
            Just(SpaceFamily::RandomPoints),
        ],
        dim in 1..=2usize,
        n in 1..=12usize,
        hw in 0.1..10.0f64,
        seed: u64,
        fseed: u64,
    ) {
        let spec = match family {
            SpaceFamily::RandomPoints => SpaceSpec::random_points(dim, n, hw, seed),
            SpaceFamily::RadialDecayGrid => SpaceSpec::grid(family, dim, n, hw).with_beta(1.5),
            _ => SpaceSpec::grid(family, dim, n, hw),
        };
        let s = generate_space(&spec).unwrap();
        prop_assert_eq!(&s, &generate_space(&spec).unwrap());
        let file = s.to_file();
        let again = validate_space(file.n, file.dist, file.mass).unwrap();
        prop_assert_eq!(&again, &s);
        if family == SpaceFamily::Grid {
            prop_assert!(close(s.total_mass(), (2.0 * hw).powi(dim as i32), 1e-12));
        }
        for ff in [
            FunctionFamily::Constant,
            FunctionFamily::BallIndicator,
            FunctionFamily::PowerSpike,
            FunctionFamily::RandomSparse,
            FunctionFamily::RandomUniform,
        ] {
            let fs = FunctionSpec::new(ff, fseed);
            let f = generate_function(&s, &fs).unwrap();
            prop_assert!(f.values().iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert_eq!(f, generate_function(&s, &fs).unwrap());
        }
    }

    #[test]
    fn validation_reports_asymmetry(inst in instance(8), i in 0usize..8, j in 0usize..8, bump in 0.1..1.0f64) {
        let s = &inst.space;
        let n = s.len();
        prop_assume!(n >= 2);
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let mut file = s.to_file();
        file.dist[i * n + j] += bump;
        let err = validate_space(n, file.dist, file.mass).unwrap_err();
        let morrey_lab::Error::InvalidSpace(v) = err else { panic!("wrong error") };
        prop_assert!(v.contains(&Violation::Asymmetry(i.min(j), i.max(j))));
    }
}

#[test]
fn ultrametric_is_strong() {
    for depth in 1..=5 {
        let s = generate_space(&SpaceSpec::ultrametric(depth)).unwrap();
        let n = s.len();
        assert_eq!(n, 1 << depth);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert!(s.dist(i, k) <= s.dist(i, j).max(s.dist(j, k)));
                }
            }
        }
        assert!(engulfing_check(&s).is_empty());
    }
}
