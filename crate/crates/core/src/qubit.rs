//! The single-qubit input model `ρ = ½(1 + λ n̂·σ) = c₁|1_n̂><1_n̂| + c₀|0_n̂><0_n̂|`.
//!
//! In the `{|0>, |1>}` ordering used throughout the crate, `|1>` is the `+1`
//! eigenvector of `σ_z`, so `σ_z = diag(-1, 1)`.


use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, SingleQubitOp, StateVector, C64, ONE};

/// Unit 3-vector on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    /// Normalizes `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidDirection);
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub const fn z() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl Default for Direction {
    fn default() -> Self {
        Self::z()
    }
}

/// `n̂·σ` in the crate's basis ordering.
pub fn pauli_along(d: &Direction) -> SingleQubitOp {
    let [x, y, z] = d.components();
    SingleQubitOp([
        [C64::new(-z, 0.0), C64::new(x, y)],
        [C64::new(x, -y), C64::new(z, 0.0)],
    ])
}

/// One copy of the mixed input qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedQubit {
    lambda: f64,
    direction: Direction,
}

impl MixedQubit {
    pub fn new(lambda: f64, direction: Direction) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self { lambda, direction })
    }

    /// Bloch vector along `+ẑ`.
    pub fn along_z(lambda: f64) -> Result<Self> {
        Self::new(lambda, Direction::z())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Larger eigenvalue `(1+λ)/2`.
    pub fn c1(&self) -> f64 {
        (1.0 + self.lambda) / 2.0
    }

    /// Smaller eigenvalue `(1-λ)/2`.
    pub fn c0(&self) -> f64 {
        (1.0 - self.lambda) / 2.0
    }

    /// `(|1_n̂>, |0_n̂>)`.
    ///
    /// `|1_n̂>` carries a real nonnegative coefficient on `|1>` (on `|0>` when
    /// the `|1>` coefficient vanishes); `|0_n̂>` is fixed so that the pair,
    /// as columns `(|0_n̂>, |1_n̂>)`, forms an SU(2) matrix.
    pub fn eigenstates(&self) -> (StateVector, StateVector) {
        let u = self.rotation();
        let m = u.0;
        let one = StateVector::from_normalized(alloc::vec![m[0][1], m[1][1]]);
        let zero = StateVector::from_normalized(alloc::vec![m[0][0], m[1][0]]);
        (one, zero)
    }

    /// SU(2) rotation `U_n̂` with `U_n̂|0> = |0_n̂>` and `U_n̂|1> = |1_n̂>`.
    pub fn rotation(&self) -> SingleQubitOp {
        rotation_to(&self.direction)
    }

    pub fn density_matrix(&self) -> DenseOperator {
        let s = pauli_along(&self.direction);
        let half = 0.5;
        let l = self.lambda;
        let m = s.0;
        DenseOperator::from_rows(
            2,
            &[
                C64::new(half, 0.0) + m[0][0] * (half * l),
                m[0][1] * (half * l),
                m[1][0] * (half * l),
                C64::new(half, 0.0) + m[1][1] * (half * l),
            ],
        )
    }

    /// `<1_n̂| σ |1_n̂>` for a 2×2 operator `σ`.
    pub fn fidelity_of(&self, sigma: &DenseOperator) -> f64 {
        let (one, _) = self.eigenstates();
        sigma.expectation(one.amplitudes(), one.amplitudes()).re
    }
}

/// SU(2) matrix mapping `|1>` to the `+1` eigenvector of `d·σ`.
pub fn rotation_to(d: &Direction) -> SingleQubitOp {
    let [x, y, z] = d.components();
    let cos_half = ((1.0 + z) / 2.0).max(0.0).sqrt();
    let sin_half = ((1.0 - z) / 2.0).max(0.0).sqrt();
    let rho = (x * x + y * y).sqrt();
    let phase = if rho > 0.0 {
        C64::new(x / rho, y / rho)
    } else {
        ONE
    };
    // |1_n̂> = e^{iφ} sin(θ/2)|0> + cos(θ/2)|1>
    // |0_n̂> = cos(θ/2)|0> - e^{-iφ} sin(θ/2)|1>
    let one = [phase * sin_half, C64::new(cos_half, 0.0)];
    let zero = [C64::new(cos_half, 0.0), -phase.conj() * sin_half];
    SingleQubitOp::from_columns(zero, one)
}

/// Eigenvectors of `ρ` for `q`, as `(|1_n̂>, |0_n̂>)`.
pub fn qubit_eigenstates(q: &MixedQubit) -> (StateVector, StateVector) {
    q.eigenstates()
}

pub fn density_matrix(q: &MixedQubit) -> DenseOperator {
    q.density_matrix()
}
