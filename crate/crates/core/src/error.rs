use crate::blocks::BlockLabel;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("direction must be a finite nonzero 3-vector")]
    InvalidDirection,
    #[error("N must be even, got {0}")]
    OddQubitCount(usize),
    #[error("N must be positive")]
    EmptyRegister,
    #[error("{qubits} qubits exceed the dense cap of {cap}")]
    CapExceeded { qubits: usize, cap: usize },
    #[error("spin j={j} out of range for N={n}")]
    SpinOutOfRange { n: usize, j: u32 },
    #[error("invalid projection m={m} for j={j}")]
    InvalidProjection { j: u32, m: i32 },
    #[error("block label (j={j}, alpha={alpha}) does not exist for N={n}")]
    InvalidLabel { n: usize, j: u32, alpha: usize },
    #[error("invalid qubit index set: {0}")]
    InvalidQubitSet(&'static str),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("spin-{j} sector of N={n} qubits: found {found} independent highest-weight vectors, expected {expected}")]
    RankDeficiency {
        n: usize,
        j: u32,
        found: usize,
        expected: usize,
    },
    #[error("quadrature needs at least {required} nodes, got {given}")]
    InsufficientNodes { required: usize, given: usize },
    #[error("verification failed: {check} residual {residual:e} >= tol {tol:e}{}", fmt_label(.label))]
    Verification {
        check: &'static str,
        label: Option<BlockLabel>,
        residual: f64,
        tol: f64,
    },
    #[error("output count M={m} must be at least {min}")]
    TooFewOutputs { m: u64, min: u64 },
    #[error("{0}")]
    InvalidArgument(&'static str),
}

fn fmt_label(label: &Option<BlockLabel>) -> alloc::string::String {
    match label {
        Some(l) => alloc::format!(" at (j={}, alpha={})", l.j, l.alpha),
        None => alloc::string::String::new(),
    }
}
