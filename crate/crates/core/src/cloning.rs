//! Cloning and estimation fidelities for mixed qubits.

use alloc::vec::Vec;
use core::fmt;

use crate::analytics::{block_fidelity, block_probability};
use crate::error::{Error, Result};
use crate::qubit::MixedQubit;
use crate::stats::NeumaierSum;

/// Number of output qubits; `Infinite` is the estimation limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputCount {
    Finite(u64),
    Infinite,
}

impl OutputCount {
    /// `(M + 2) / M`, which is 1 in the limit.
    pub fn scaling_factor(self) -> f64 {
        match self {
            Self::Finite(m) => (m as f64 + 2.0) / m as f64,
            Self::Infinite => 1.0,
        }
    }
}

impl fmt::Display for OutputCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(m) => write!(f, "{m}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloneSettings {
    n_in: usize,
    m_out: OutputCount,
    lambda: f64,
}

impl CloneSettings {
    pub fn new(n_in: usize, m_out: OutputCount, lambda: f64) -> Result<Self> {
        if n_in == 0 {
            return Err(Error::EmptyRegister);
        }
        if n_in % 2 == 1 {
            return Err(Error::OddQubitCount(n_in));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidLambda(lambda));
        }
        if let OutputCount::Finite(m) = m_out {
            if m < n_in as u64 {
                return Err(Error::TooFewOutputs { m, min: n_in as u64 });
            }
        }
        Ok(Self { n_in, m_out, lambda })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn m_out(&self) -> OutputCount {
        self.m_out
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Weights of a covariant single-output map: the input direction is
/// reproduced with weight `x` and flipped with weight `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariantMapParams {
    x: f64,
    y: f64,
}

impl CovariantMapParams {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x >= 0.0 && y >= 0.0 && x + y <= 1.0 + 1e-15) {
            return Err(Error::InvalidArgument("covariant map needs x, y >= 0 and x + y <= 1"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Optimal fidelity of `M` clones from `2j` pure copies.
pub fn pure_cloning_fidelity(j: u32, m_out: OutputCount) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("pure cloning fidelity needs j >= 1"));
    }
    let two_j = 2.0 * j as f64;
    match m_out {
        OutputCount::Infinite => Ok((two_j + 1.0) / (two_j + 2.0)),
        OutputCount::Finite(m) if m < 2 * j as u64 => Err(Error::TooFewOutputs {
            m,
            min: 2 * j as u64,
        }),
        OutputCount::Finite(m) => {
            let m = m as f64;
            Ok((m * (two_j + 1.0) + two_j) / (m * (two_j + 2.0)))
        }
    }
}

/// Contribution of one block to the mixed-state cloning fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloningTerm {
    pub j: u32,
    pub probability: f64,
    /// `1/2` for `j = 0`.
    pub pure_fidelity: f64,
    pub block_fidelity: f64,
    /// `F^pur f_j + (1 − F^pur)(1 − f_j)`.
    pub fidelity: f64,
}

pub fn mixed_cloning_terms(s: &CloneSettings) -> Result<Vec<CloningTerm>> {
    (0..=(s.n_in / 2) as u32)
        .map(|j| {
            let probability = block_probability(s.n_in, s.lambda, j)?;
            let f = block_fidelity(s.lambda, j)?;
            let (pure_fidelity, fidelity) = if j == 0 {
                (0.5, 0.5)
            } else {
                let fp = pure_cloning_fidelity(j, s.m_out)?;
                (fp, fp * f + (1.0 - fp) * (1.0 - f))
            };
            Ok(CloningTerm {
                j,
                probability,
                pure_fidelity,
                block_fidelity: f,
                fidelity,
            })
        })
        .collect()
}

pub fn mixed_cloning_fidelity(s: &CloneSettings) -> Result<f64> {
    Ok(mixed_cloning_terms(s)?
        .iter()
        .map(|t| t.probability * t.fidelity)
        .collect::<NeumaierSum>()
        .value())
}

/// `λ^mix_{N,∞} = Σ_j p_j (2f_j − 1) j/(j+1)`.
pub fn estimation_lambda(n: usize, lambda: f64) -> Result<f64> {
    let mut total = NeumaierSum::default();
    for j in 1..=(n / 2) as u32 {
        let p = block_probability(n, lambda, j)?;
        let f = block_fidelity(lambda, j)?;
        total.add(p * (2.0 * f - 1.0) * j as f64 / (j as f64 + 1.0));
    }
    Ok(total.value())
}

/// `|(2F^mix_{N,M} − 1) − λ^mix_{N,∞}(M+2)/M|`.
pub fn scaling_relation_check(s: &CloneSettings) -> Result<f64> {
    if s.m_out == OutputCount::Infinite {
        return Err(Error::InvalidArgument("scaling relation needs a finite M"));
    }
    let lhs = 2.0 * mixed_cloning_fidelity(s)? - 1.0;
    let rhs = estimation_lambda(s.n_in, s.lambda)? * s.m_out.scaling_factor();
    Ok((lhs - rhs).abs())
}

/// Fidelity of the covariant map `(x, y)` applied to `ρ_j`, by quadrature
/// over the pure-state components of `ρ_j`.
pub fn covariant_map_fidelity(q: &MixedQubit, j: u32, params: CovariantMapParams) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("covariant map needs j >= 1"));
    }
    let total = params.x + params.y;
    if total <= 0.0 {
        return Err(Error::InvalidArgument("covariant map needs x + y > 0"));
    }
    let out = crate::oracle::covariant_single_output(q, j, params.x, params.y);
    Ok(q.fidelity_of(&out) / out.trace().re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub best: CovariantMapParams,
    pub fidelity: f64,
    pub points: usize,
}

/// Grid search over the `(x, y)` triangle, starting at `(1, 0)`. A point
/// replaces the incumbent only if it is better by more than `1e-14`, so ties
/// along the `y = 0` edge keep `(1, 0)`.
pub fn optimality_scan(q: &MixedQubit, j: u32, grid: usize) -> Result<ScanResult> {
    if grid < 11 {
        return Err(Error::InvalidArgument("optimality scan needs grid >= 11"));
    }
    let steps = grid - 1;
    let mut best = CovariantMapParams::new(1.0, 0.0)?;
    let mut fidelity = covariant_map_fidelity(q, j, best)?;
    let mut points = 1;
    for a in 0..=steps {
        for b in 0..=(steps - a) {
            if (a, b) == (0, 0) || (a, b) == (steps, 0) {
                continue;
            }
            let params = CovariantMapParams::new(a as f64 / steps as f64, b as f64 / steps as f64)?;
            let f = covariant_map_fidelity(q, j, params)?;
            points += 1;
            if f > fidelity + 1e-14 {
                best = params;
                fidelity = f;
            }
        }
    }
    Ok(ScanResult { best, fidelity, points })
}
