use crate::exprlang::ExprError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("degree overflow: {left} + {right} exceeds dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },
    #[error("expected a form of degree {expected}, got degree {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("(p,q) = ({p},{q}) does not match form degree {degree}")]
    TypeMismatch { p: usize, q: usize, degree: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("J*J + I has residual {residual:.3e}; not an almost complex structure")]
    NotAlmostComplex { residual: f64 },
    #[error("metric is not J-invariant (residual {residual:.3e})")]
    NotJInvariant { residual: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("point {point:?} lies outside the chart box")]
    OutsideChart { point: Vec<f64> },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    Missing(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("scene parse error{}: {message}", location.as_ref().map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    SceneParse {
        message: String,
        location: Option<(usize, usize)>,
    },
    #[error("scene check `{check}` failed at point {point:?} (residual {residual:.3e})")]
    SceneInvariant {
        check: String,
        point: Vec<f64>,
        residual: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
