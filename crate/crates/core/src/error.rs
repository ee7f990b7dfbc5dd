use std::fmt;

/// A single violated invariant found while validating a candidate space.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Violation {
    ShapeMismatch { n: usize, dist_len: usize, mass_len: usize },
    NonFiniteDistance(usize, usize),
    NegativeDistance(usize, usize),
    NonzeroDiagonal(usize),
    Asymmetry(usize, usize),
    TriangleViolation(usize, usize, usize),
    NonpositiveMass(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch { n, dist_len, mass_len } => {
                write!(f, "shape mismatch: n={n} but dist has {dist_len} entries and mass has {mass_len}")
            }
            Violation::NonFiniteDistance(i, j) => write!(f, "non-finite distance d({i},{j})"),
            Violation::NegativeDistance(i, j) => write!(f, "negative distance d({i},{j})"),
            Violation::NonzeroDiagonal(i) => write!(f, "nonzero diagonal d({i},{i})"),
            Violation::Asymmetry(i, j) => write!(f, "asymmetry d({i},{j}) != d({j},{i})"),
            Violation::TriangleViolation(i, j, k) => {
                write!(f, "triangle violation d({i},{k}) > d({i},{j}) + d({j},{k})")
            }
            Violation::NonpositiveMass(i) => write!(f, "nonpositive or non-finite mass at {i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid space: {}", join(.0))]
    InvalidSpace(Vec<Violation>),
    #[error("point index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("exponent {name}={value} out of range: {reason}")]
    ExponentOutOfRange { name: &'static str, value: f64, reason: String },
    #[error("function has {found} values but the space has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("function value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("kernel ball around {x} at distance of {y} has zero mass")]
    DivisionByZeroKernel { x: usize, y: usize },
    #[error("ball B({center}, {radius}) has zero measure")]
    EmptyBall { center: usize, radius: f64 },
    #[error("unknown check id `{0}`")]
    UnknownCheckId(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn exponent_error(name: &'static str, value: f64, reason: impl Into<String>) -> Error {
    Error::ExponentOutOfRange { name, value, reason: reason.into() }
}
