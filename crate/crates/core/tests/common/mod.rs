#![allow(dead_code)]

use std::path::PathBuf;

use morrey_lab::cli::{self, ExperimentConfig, FunctionInstance};
use morrey_lab::{ExponentSet, MetricMeasureSpace};

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/corpus.toml")
}

pub struct Corpus {
    pub config: ExperimentConfig,
    pub spaces: Vec<(String, MetricMeasureSpace)>,
    pub functions: Vec<FunctionInstance>,
    pub exponents: Vec<ExponentSet>,
}

pub fn corpus() -> Corpus {
    let config = ExperimentConfig::load(&corpus_path()).expect("shipped corpus parses");
    config.validate().expect("shipped corpus is valid");
    Corpus {
        spaces: cli::load_spaces(&config).unwrap(),
        functions: cli::expand_functions(&config).unwrap(),
        exponents: config.exponent_sets().unwrap(),
        config,
    }
}

/// `a` and `b` agree to relative tolerance `tol` (absolute near zero).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
