//! Fractional integrals, centered maximal operators and Morrey norms on
//! finite metric measure spaces with arbitrary atomic measures, together with
//! checkers for the weak- and strong-type inequalities relating them, a
//! best-constant search, and a seeded batch harness.
//!
//! All radius suprema are evaluated exactly by enumerating the distinct
//! distances from each center; see [`space`] for the ball conventions.

pub mod cli;
pub mod error;
pub mod extremal;
pub mod functions;
pub mod generators;
pub mod operators;
pub mod rng;
pub mod space;
pub mod theorems;

pub use error::{Error, Result, Violation};
pub use extremal::{estimate_constant, kappa_sweep, ExtremalResult, OptimizerConfig, SweepRow};
pub use functions::{level_set_measure, lq_norm, morrey_norm, ExponentSet, FunctionOnSpace};
pub use generators::{generate_function, generate_space, FunctionFamily, FunctionSpec, SpaceFamily, SpaceSpec};
pub use operators::{
    default_layer_range, fractional_integral, hedberg_constant, layer_radii, layer_sum, maximal, DiagonalMode,
    KernelConvention, LayerRadius,
};
pub use space::{engulfing_check, validate_space, BallSpec, Closure, DoublingWitness, MetricMeasureSpace, SpaceFile};
pub use theorems::{
    check_t1_weak_maximal, check_t2_hedberg, check_t3_weak_frac, check_t6_strong, check_t7_maximal_morrey,
    check_weak_l1, CheckId, CheckParams, CheckReport, GammaGrid,
};
