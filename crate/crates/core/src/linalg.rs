//! Dense complex vectors and matrices over qubit registers.
//!
//! Index convention: a register of `n` qubits uses the computational basis
//! `|b_1 b_2 ... b_n>` with qubit 1 as the most significant bit, and `|0>`
//! maps to index 0.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Largest register the dense routines will materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseCap {
    pub max_qubits: usize,
}

impl DenseCap {
    pub const DEFAULT_QUBITS: usize = 12;

    pub const fn new(max_qubits: usize) -> Self {
        Self { max_qubits }
    }

    pub fn check(&self, qubits: usize) -> Result<()> {
        if qubits > self.max_qubits {
            return Err(Error::CapExceeded {
                qubits,
                cap: self.max_qubits,
            });
        }
        Ok(())
    }
}

impl Default for DenseCap {
    fn default() -> Self {
        Self::new(Self::DEFAULT_QUBITS)
    }
}

/// Bit mask selecting qubit `k` (1-based) in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n: usize, k: usize) -> usize {
    1 << (n - k)
}

/// Number of qubits of a power-of-two dimension.
pub fn register_size(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument("dimension is not a power of two"));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amps`; fails on a zero or non-finite vector.
    pub fn new(mut amps: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amps).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        let inv = 1.0 / norm;
        for a in amps.iter_mut() {
            *a *= inv;
        }
        Ok(Self { amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    /// Wraps amplitudes the caller already knows to be normalized.
    pub(crate) fn from_normalized(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }

    /// `U^{⊗n} |self>`.
    pub fn collective_apply(&self, u: &SingleQubitOp) -> Result<StateVector> {
        let n = register_size(self.dim())?;
        let mut amps = self.amps.clone();
        for k in 1..=n {
            apply_local(u, n, k, &mut amps);
        }
        Ok(Self { amps })
    }

    pub fn projector(&self) -> DenseOperator {
        DenseOperator::outer(&self.amps, &self.amps)
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Applies a single-qubit operator to qubit `k` of an `n`-qubit amplitude vector.
pub(crate) fn apply_local(u: &SingleQubitOp, n: usize, k: usize, amps: &mut [C64]) {
    let mask = qubit_mask(n, k);
    let m = &u.0;
    for i0 in 0..amps.len() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps[i1] = m[1][0] * a0 + m[1][1] * a1;
    }
}

/// A 2×2 complex matrix acting on one qubit, rows/columns ordered `|0>, |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitOp(pub [[C64; 2]; 2]);

impl SingleQubitOp {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    /// Operator whose columns are `col0` and `col1`.
    pub fn from_columns(col0: [C64; 2], col1: [C64; 2]) -> Self {
        Self([[col0[0], col1[0]], [col0[1], col1[1]]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn to_dense(&self) -> DenseOperator {
        let m = &self.0;
        DenseOperator::from_rows(2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
    }
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<C64>,
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out[(i, i)] = ONE;
        }
        out
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            out[(i, i)] = *d;
        }
        out
    }

    /// Row-major entries; panics if `entries.len() != dim * dim`.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim^2");
        Self {
            dim,
            data: entries.to_vec(),
        }
    }

    /// `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for x in a {
            for y in b {
                data.push(x * y.conj());
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&mut self, s: C64) {
        for v in self.data.iter_mut() {
            *v *= s;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0));
        self
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &DenseOperator, s: C64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self += s |a><b|`.
    pub fn add_outer(&mut self, a: &[C64], b: &[C64], s: C64) {
        assert_eq!(a.len(), self.dim);
        assert_eq!(b.len(), self.dim);
        for (r, x) in a.iter().enumerate() {
            let sx = s * x;
            if sx.is_zero() {
                continue;
            }
            let row = &mut self.data[r * self.dim..(r + 1) * self.dim];
            for (v, y) in row.iter_mut().zip(b) {
                *v += sx * y.conj();
            }
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            let out_row = &mut out.data[r * d..(r + 1) * d];
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.is_zero() {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(&other.data[k * d..(k + 1) * d]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        let mut out = self.matmul(other);
        out.add_scaled(&other.matmul(self), C64::new(-1.0, 0.0));
        out
    }

    /// `A |v>` without renormalization.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `<v| A` as a row vector, returned as its conjugate transpose `A† |v>`.
    pub(crate) fn adjoint_apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for (r, x) in v.iter().enumerate() {
            let xc = x.conj();
            if xc.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += xc * a;
            }
        }
        out.iter_mut().for_each(|o| *o = o.conj());
        out
    }

    /// `<a| A |b>`.
    pub fn expectation(&self, a: &[C64], b: &[C64]) -> C64 {
        inner(a, &self.apply(b))
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = Self::zeros(d);
        for ar in 0..da {
            for ac in 0..da {
                let a = self[(ar, ac)];
                if a.is_zero() {
                    continue;
                }
                for br in 0..db {
                    for bc in 0..db {
                        out[(ar * db + br, ac * db + bc)] = a * other[(br, bc)];
                    }
                }
            }
        }
        out
    }

    /// Largest element-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest element of `|A - A†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `U^{⊗n} A U^{†⊗n}` for an `n`-qubit operator.
    pub fn collective_conjugate(&self, u: &SingleQubitOp) -> Result<DenseOperator> {
        let n = register_size(self.dim)?;
        let mut out = self.clone();
        for k in 1..=n {
            out.apply_local_left(u, n, k);
            out.apply_local_right_adjoint(u, n, k);
        }
        Ok(out)
    }

    fn apply_local_left(&mut self, u: &SingleQubitOp, n: usize, k: usize) {
        let mask = qubit_mask(n, k);
        let d = self.dim;
        let m = &u.0;
        for r0 in 0..d {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c in 0..d {
                let (a0, a1) = (self.data[r0 * d + c], self.data[r1 * d + c]);
                self.data[r0 * d + c] = m[0][0] * a0 + m[0][1] * a1;
                self.data[r1 * d + c] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_local_right_adjoint(&mut self, u: &SingleQubitOp, n: usize, k: usize) {
        let mask = qubit_mask(n, k);
        let d = self.dim;
        let m = &u.0;
        for r in 0..d {
            let row = &mut self.data[r * d..(r + 1) * d];
            for c0 in 0..d {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let (a0, a1) = (row[c0], row[c1]);
                row[c0] = a0 * m[0][0].conj() + a1 * m[0][1].conj();
                row[c1] = a0 * m[1][0].conj() + a1 * m[1][1].conj();
            }
        }
    }

    /// Traces out every qubit not listed in `keep` (1-based indices).
    ///
    /// The kept qubits retain their relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DenseOperator> {
        let n = register_size(self.dim)?;
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        if kept.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidQubitSet("duplicate qubit index"));
        }
        if kept.iter().any(|&k| k == 0 || k > n) {
            return Err(Error::InvalidQubitSet("qubit index outside 1..=N"));
        }
        let traced: Vec<usize> = (1..=n).filter(|k| !kept.contains(k)).collect();

        let spread = |bits: usize, qubits: &[usize]| -> usize {
            let width = qubits.len();
            qubits
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << (width - 1 - i)) != 0)
                .map(|(_, &q)| qubit_mask(n, q))
                .sum()
        };

        let dk = 1usize << kept.len();
        let keep_offsets: Vec<usize> = (0..dk).map(|a| spread(a, &kept)).collect();
        let mut out = DenseOperator::zeros(dk);
        for t in 0..(1usize << traced.len()) {
            let base = spread(t, &traced);
            for (a, &ia) in keep_offsets.iter().enumerate() {
                let row = (base | ia) * self.dim;
                for (b, &ib) in keep_offsets.iter().enumerate() {
                    out.data[a * dk + b] += self.data[row + (base | ib)];
                }
            }
        }
        Ok(out)
    }

    /// Applies the qubit permutation `perm` (0-based, `perm[k]` is where
    /// qubit `k` is sent) to both sides of the operator.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<DenseOperator> {
        let n = register_size(self.dim)?;
        if perm.len() != n {
            return Err(Error::InvalidQubitSet("permutation length differs from N"));
        }
        let map: Vec<usize> = (0..self.dim)
            .map(|i| permute_index(i, n, perm))
            .collect();
        let mut out = DenseOperator::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(map[r], map[c])] = self[(r, c)];
            }
        }
        Ok(out)
    }
}

/// Moves bit of qubit `k` (0-based from the most significant) to position `perm[k]`.
pub(crate) fn permute_index(index: usize, n: usize, perm: &[usize]) -> usize {
    let mut out = 0;
    for (k, &target) in perm.iter().enumerate() {
        if index & (1 << (n - 1 - k)) != 0 {
            out |= 1 << (n - 1 - target);
        }
    }
    out
}

/// `a^{⊗n}` with qubit 1 as the most significant factor.
pub fn kron_power(a: &DenseOperator, n: usize, cap: DenseCap) -> Result<DenseOperator> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    let per = register_size(a.dim())?;
    cap.check(per * n)?;
    let mut out = a.clone();
    for _ in 1..n {
        out = out.kron(a);
    }
    Ok(out)
}

/// Singlet `(|01> - |10>)/√2`.
pub fn singlet() -> StateVector {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_normalized(vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_power_of_identity_is_identity() {
        let id = DenseOperator::identity(2);
        let out = kron_power(&id, 2, DenseCap::default()).unwrap();
        assert_eq!(out, DenseOperator::identity(4));
    }

    #[test]
    fn kron_power_of_diagonal() {
        let d = DenseOperator::from_diagonal(&[c(0.25), c(0.75)]);
        let out = kron_power(&d, 2, DenseCap::default()).unwrap();
        let expected = DenseOperator::from_diagonal(&[c(0.0625), c(0.1875), c(0.1875), c(0.5625)]);
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn kron_power_respects_cap() {
        let d = DenseOperator::identity(2);
        let err = kron_power(&d, 5, DenseCap::new(4)).unwrap_err();
        assert_eq!(err, Error::CapExceeded { qubits: 5, cap: 4 });
        assert!(kron_power(&d, 4, DenseCap::new(4)).is_ok());
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = DenseOperator::from_rows(2, &[c(0.3), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.7)]);
        let sigma = DenseOperator::from_diagonal(&[c(1.5), c(0.5)]);
        let prod = rho.kron(&sigma);
        let first = prod.partial_trace(&[1]).unwrap();
        assert!(first.max_abs_diff(&rho.clone().scaled(2.0)) < 1e-15);
        let second = prod.partial_trace(&[2]).unwrap();
        assert!(second.max_abs_diff(&sigma) < 1e-15);
    }

    #[test]
    fn partial_trace_of_singlet_is_maximally_mixed() {
        let p = singlet().projector();
        let half = DenseOperator::identity(2).scaled(0.5);
        for k in [1, 2] {
            assert!(p.partial_trace(&[k]).unwrap().max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_sets() {
        let p = DenseOperator::identity(8);
        assert!(matches!(p.partial_trace(&[1, 1]), Err(Error::InvalidQubitSet(_))));
        assert!(matches!(p.partial_trace(&[0]), Err(Error::InvalidQubitSet(_))));
        assert!(matches!(p.partial_trace(&[4]), Err(Error::InvalidQubitSet(_))));
    }

    #[test]
    fn partial_trace_keeps_order_of_middle_qubits() {
        // |0>|1>|0>: keeping qubits 2 and 3 leaves |10>.
        let v = StateVector::basis(8, 0b010);
        let reduced = v.projector().partial_trace(&[2, 3]).unwrap();
        assert_eq!(reduced[(0b10, 0b10)], ONE);
        assert!((reduced.trace() - ONE).norm() < 1e-15);
    }

    #[test]
    fn collective_conjugate_matches_explicit_tensor_power() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let u = SingleQubitOp([[c(h), C64::new(0.0, h)], [C64::new(0.0, h), c(h)]]);
        let a = DenseOperator::from_rows(
            4,
            &(0..16).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect::<Vec<_>>(),
        );
        let v = kron_power(&u.to_dense(), 2, DenseCap::default()).unwrap();
        let explicit = v.matmul(&a).matmul(&v.adjoint());
        let fast = a.collective_conjugate(&u).unwrap();
        assert!(explicit.max_abs_diff(&fast) < 1e-12);
    }

    #[test]
    fn permute_qubits_swaps_factors() {
        let a = DenseOperator::from_diagonal(&[c(1.0), c(2.0)]);
        let b = DenseOperator::from_diagonal(&[c(3.0), c(5.0)]);
        let swapped = a.kron(&b).permute_qubits(&[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&b.kron(&a)) < 1e-15);
    }

    #[test]
    fn state_vector_rejects_zero() {
        assert_eq!(StateVector::new(vec![ZERO; 4]), Err(Error::ZeroVector));
    }
}
