//! Haar-distributed single-qubit unitaries and isotropic directions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{SingleQubitOp, C64};
use crate::qubit::Direction;

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random `U(2)` element.
///
/// Gram–Schmidt on the columns of a complex Ginibre matrix; the positive
/// diagonal of the implied `R` factor fixes the phases so the result is
/// exactly Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> SingleQubitOp {
    loop {
        let a = [complex_normal(rng), complex_normal(rng)];
        let b = [complex_normal(rng), complex_normal(rng)];
        let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
        if na < 1e-12 {
            continue;
        }
        let e0 = [a[0] / na, a[1] / na];
        let overlap = e0[0].conj() * b[0] + e0[1].conj() * b[1];
        let r = [b[0] - overlap * e0[0], b[1] - overlap * e0[1]];
        let nr = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
        if nr < 1e-12 {
            continue;
        }
        return SingleQubitOp::from_columns(e0, [r[0] / nr, r[1] / nr]);
    }
}

/// Uniformly distributed point on the unit sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    loop {
        let (x, y, z): (f64, f64, f64) = (
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Ok(d) = Direction::new(x, y, z) {
            return d;
        }
    }
}

/// Image of the Bloch vector `d` under conjugation by `u`.
pub fn rotate_direction(u: &SingleQubitOp, d: &Direction) -> Direction {
    let sigma = crate::qubit::pauli_along(d);
    let rotated = u.mul(&sigma).mul(&u.adjoint()).0;
    // n̂·σ = [[-z, x+iy], [x-iy, z]] in the crate's ordering.
    let x = rotated[0][1].re;
    let y = rotated[0][1].im;
    let z = rotated[1][1].re;
    Direction::new(x, y, z).unwrap_or_default()
}
