//! Explicit `|j, m, α>` basis for an even register of `N = 2J` qubits.
//!
//! For each spin `j` the highest-weight vector `|j, j, 1>` (a fully excited
//! block on qubits `1..2j` followed by singlets on consecutive pairs) is
//! permuted over coset representatives of its stabilizer, visited in
//! lexicographic order of their one-line notation, and Gram–Schmidt
//! orthonormalized until `d_j` vectors are found. Lower `m` follow by the
//! collective lowering operator, so the `α` label means the same thing for
//! every `m`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use num_traits::ToPrimitive;

use crate::analytics::multiplicity;
use crate::error::{Error, Result};
use crate::linalg::{
    inner, norm_sqr, permute_index, qubit_mask, singlet, DenseCap, DenseOperator, StateVector,
    C64, ZERO,
};

/// Squared norm below which a projected orbit vector counts as dependent.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-8;

/// Irreducible block `S_{j,α}`; `alpha` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockLabel {
    pub j: u32,
    pub alpha: usize,
}

impl BlockLabel {
    pub const fn new(j: u32, alpha: usize) -> Self {
        Self { j, alpha }
    }
}

fn check_even(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddQubitCount(n));
    }
    Ok(n / 2)
}

fn check_projection(j: u32, m: i32) -> Result<()> {
    if m.unsigned_abs() > j {
        return Err(Error::InvalidProjection { j, m });
    }
    Ok(())
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Symmetric state of `2j` qubits with `j + m` of them in `|1>`.
pub fn dicke_state(j: u32, m: i32) -> Result<StateVector> {
    check_projection(j, m)?;
    let qubits = 2 * j as usize;
    let ones = (j as i32 + m) as u32;
    let amp = C64::new(1.0 / binomial_f64(qubits, ones as usize).sqrt(), 0.0);
    let amps = (0..1usize << qubits)
        .map(|b| if b.count_ones() == ones { amp } else { ZERO })
        .collect();
    Ok(StateVector::from_normalized(amps))
}

/// `|j, m, 1> = |j, m> ⊗ |Ψ₋>^{⊗(J-j)}` on `n` qubits.
pub fn seed_vector(n: usize, j: u32, m: i32) -> Result<StateVector> {
    let big_j = check_even(n)?;
    if j as usize > big_j {
        return Err(Error::SpinOutOfRange { n, j });
    }
    let mut v = dicke_state(j, m)?;
    let s = singlet();
    for _ in 0..(big_j - j as usize) {
        v = v.kron(&s);
    }
    Ok(v)
}

/// Applies `J₋ = Σ_k σ₋^{(k)}` (with `σ₋|1> = |0>`).
pub(crate) fn collective_lowering(amps: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; amps.len()];
    for (i, a) in amps.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        for k in 1..=n {
            let mask = qubit_mask(n, k);
            if i & mask != 0 {
                out[i ^ mask] += a;
            }
        }
    }
    out
}

/// Visits coset representatives of the seed stabilizer for spin `j` in
/// lexicographic order. A representative lists, for each role of the seed
/// (symmetric qubits first, then singlet pairs), the 0-based qubit it
/// occupies.
pub fn for_each_orbit_permutation<F>(n: usize, j: u32, mut visit: F)
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let two_j = 2 * j as usize;
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let _ = choose_symmetric(n, two_j, 0, &mut perm, &mut used, &mut visit);
}

fn choose_symmetric<F>(
    n: usize,
    remaining: usize,
    start: usize,
    perm: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if remaining == 0 {
        return pair_up(n, perm, used, visit);
    }
    for q in start..=(n - remaining) {
        perm.push(q);
        used[q] = true;
        let flow = choose_symmetric(n, remaining - 1, q + 1, perm, used, visit);
        used[q] = false;
        perm.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

fn pair_up<F>(n: usize, perm: &mut Vec<usize>, used: &mut [bool], visit: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    // Canonical pairing: each pair opens with the smallest unused qubit.
    let Some(first) = (0..n).find(|&q| !used[q]) else {
        return visit(perm);
    };
    used[first] = true;
    perm.push(first);
    let mut flow = ControlFlow::Continue(());
    for second in (first + 1)..n {
        if used[second] {
            continue;
        }
        used[second] = true;
        perm.push(second);
        flow = pair_up(n, perm, used, visit);
        perm.pop();
        used[second] = false;
        if flow.is_break() {
            break;
        }
    }
    perm.pop();
    used[first] = false;
    flow
}

/// Orthonormal vectors `|j, m, α>` for one spin value.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSector {
    j: u32,
    /// `vectors[α - 1][j - m]`.
    vectors: Vec<Vec<StateVector>>,
}

impl SpinSector {
    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn multiplicity(&self) -> usize {
        self.vectors.len()
    }

    /// Vectors of block `α`, ordered `m = j, j-1, ..., -j`.
    pub fn block(&self, alpha: usize) -> Option<&[StateVector]> {
        alpha
            .checked_sub(1)
            .and_then(|a| self.vectors.get(a))
            .map(Vec::as_slice)
    }
}

/// Builds the spin-`j` sector of the basis for `n` qubits.
pub fn build_spin_sector(n: usize, j: u32, cap: DenseCap) -> Result<SpinSector> {
    let big_j = check_even(n)?;
    cap.check(n)?;
    if j as usize > big_j {
        return Err(Error::SpinOutOfRange { n, j });
    }
    let expected = multiplicity(n, j)?
        .to_usize()
        .expect("multiplicity below the dense cap fits in usize");

    let seed = seed_vector(n, j, j as i32)?;
    let support: Vec<(usize, C64)> = seed
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != ZERO)
        .map(|(i, a)| (i, *a))
        .collect();

    let mut highest: Vec<Vec<C64>> = Vec::with_capacity(expected);
    for_each_orbit_permutation(n, j, |perm| {
        let mut candidate = vec![ZERO; seed.dim()];
        for &(i, a) in &support {
            candidate[permute_index(i, n, perm)] = a;
        }
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for e in &highest {
                let overlap = inner(e, &candidate);
                for (c, x) in candidate.iter_mut().zip(e) {
                    *c -= overlap * x;
                }
            }
        }
        let norm2 = norm_sqr(&candidate);
        if norm2 >= DEPENDENCE_THRESHOLD {
            let inv = 1.0 / norm2.sqrt();
            candidate.iter_mut().for_each(|c| *c *= inv);
            highest.push(candidate);
        }
        if highest.len() == expected {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if highest.len() != expected {
        return Err(Error::RankDeficiency {
            n,
            j,
            found: highest.len(),
            expected,
        });
    }

    let width = 2 * j as usize + 1;
    let mut vectors = Vec::with_capacity(expected);
    for (idx, top) in highest.into_iter().enumerate() {
        let mut ladder = Vec::with_capacity(width);
        if idx == 0 {
            // α = 1 is the seed family itself.
            for step in 0..width {
                ladder.push(seed_vector(n, j, j as i32 - step as i32)?);
            }
        } else {
            let mut current = StateVector::from_normalized(top);
            for _ in 1..width {
                let next = StateVector::new(collective_lowering(current.amplitudes(), n))?;
                ladder.push(current);
                current = next;
            }
            ladder.push(current);
        }
        vectors.push(ladder);
    }
    Ok(SpinSector { j, vectors })
}

/// Full orthonormal basis `{|j, m, α>}` of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurBasis {
    n: usize,
    sectors: Vec<SpinSector>,
}

/// Key of a single basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisKey {
    pub j: u32,
    pub m: i32,
    pub alpha: usize,
}

impl SchurBasis {
    /// Assembles a basis from independently built sectors `j = 0..=N/2`.
    pub fn from_sectors(n: usize, mut sectors: Vec<SpinSector>) -> Result<Self> {
        let big_j = check_even(n)?;
        sectors.sort_by_key(|s| s.j);
        let complete = sectors.len() == big_j + 1
            && sectors.iter().enumerate().all(|(i, s)| s.j as usize == i);
        if !complete {
            return Err(Error::InvalidArgument("sectors must cover j = 0..=N/2 exactly once"));
        }
        if sectors
            .iter()
            .flat_map(|s| s.vectors.iter().flatten())
            .any(|v| v.dim() != 1 << n)
        {
            return Err(Error::InvalidArgument("sector vectors have the wrong dimension"));
        }
        Ok(Self { n, sectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn max_spin(&self) -> u32 {
        (self.n / 2) as u32
    }

    pub fn sector(&self, j: u32) -> Option<&SpinSector> {
        self.sectors.get(j as usize)
    }

    pub fn sectors(&self) -> &[SpinSector] {
        &self.sectors
    }

    pub fn multiplicity(&self, j: u32) -> usize {
        self.sector(j).map_or(0, SpinSector::multiplicity)
    }

    pub fn vector(&self, j: u32, m: i32, alpha: usize) -> Option<&StateVector> {
        if m.unsigned_abs() > j {
            return None;
        }
        self.block(BlockLabel::new(j, alpha))
            .map(|b| &b[(j as i32 - m) as usize])
    }

    /// Vectors spanning `S_{j,α}`, ordered `m = j, ..., -j`.
    pub fn block(&self, label: BlockLabel) -> Option<&[StateVector]> {
        self.sector(label.j).and_then(|s| s.block(label.alpha))
    }

    pub fn check_label(&self, label: BlockLabel) -> Result<()> {
        if self.block(label).is_none() {
            return Err(Error::InvalidLabel {
                n: self.n,
                j: label.j,
                alpha: label.alpha,
            });
        }
        Ok(())
    }

    /// Every block label, ordered by `j` then `α`.
    pub fn labels(&self) -> Vec<BlockLabel> {
        self.sectors
            .iter()
            .flat_map(|s| (1..=s.multiplicity()).map(move |a| BlockLabel::new(s.j, a)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.sectors
            .iter()
            .map(|s| s.multiplicity() * (2 * s.j as usize + 1))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisKey, &StateVector)> + '_ {
        self.sectors.iter().flat_map(|s| {
            s.vectors.iter().enumerate().flat_map(move |(a, ladder)| {
                ladder.iter().enumerate().map(move |(step, v)| {
                    let key = BasisKey {
                        j: s.j,
                        m: s.j as i32 - step as i32,
                        alpha: a + 1,
                    };
                    (key, v)
                })
            })
        })
    }

    /// Largest `|<u|v> - δ_uv|` over all pairs of basis vectors.
    pub fn orthonormality_residual(&self) -> f64 {
        let all: Vec<&StateVector> = self.iter().map(|(_, v)| v).collect();
        let mut worst = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for (k, b) in all.iter().enumerate().skip(i) {
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Nonzero amplitudes as `(key, basis_index, amplitude)` rows.
    pub fn export_rows(&self) -> impl Iterator<Item = (BasisKey, usize, C64)> + '_ {
        self.iter().flat_map(|(key, v)| {
            v.amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != ZERO)
                .map(move |(i, a)| (key, i, *a))
        })
    }
}

/// Builds every spin sector of `n` qubits sequentially.
pub fn build_schur_basis(n: usize, cap: DenseCap) -> Result<SchurBasis> {
    let big_j = check_even(n)?;
    cap.check(n)?;
    let sectors = (0..=big_j as u32)
        .map(|j| build_spin_sector(n, j, cap))
        .collect::<Result<Vec<_>>>()?;
    SchurBasis::from_sectors(n, sectors)
}

/// Orthogonal projector onto `S_{j,α}`, held as its orthonormal frame.
#[derive(Debug, Clone)]
pub struct BlockProjector {
    label: BlockLabel,
    frame: Vec<StateVector>,
}

impl BlockProjector {
    pub fn label(&self) -> BlockLabel {
        self.label
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[StateVector] {
        &self.frame
    }

    /// Dense `Σ_m |j,m,α><j,m,α|`.
    pub fn matrix(&self) -> DenseOperator {
        let dim = self.frame[0].dim();
        let mut p = DenseOperator::zeros(dim);
        for v in &self.frame {
            p.add_outer(v.amplitudes(), v.amplitudes(), C64::new(1.0, 0.0));
        }
        p
    }

    /// `tr(P A)`.
    pub fn expectation(&self, a: &DenseOperator) -> C64 {
        self.frame
            .iter()
            .map(|v| a.expectation(v.amplitudes(), v.amplitudes()))
            .sum()
    }

    /// `P A P`.
    pub fn sandwich(&self, a: &DenseOperator) -> DenseOperator {
        let images: Vec<Vec<C64>> = self.frame.iter().map(|v| a.apply(v.amplitudes())).collect();
        let mut out = DenseOperator::zeros(a.dim());
        for vr in &self.frame {
            for (vc, image) in self.frame.iter().zip(&images) {
                let coeff = inner(vr.amplitudes(), image);
                out.add_outer(vr.amplitudes(), vc.amplitudes(), coeff);
            }
        }
        out
    }
}

pub fn block_projector(basis: &SchurBasis, j: u32, alpha: usize) -> Result<BlockProjector> {
    let label = BlockLabel::new(j, alpha);
    basis.check_label(label)?;
    Ok(BlockProjector {
        label,
        frame: basis.block(label).unwrap_or_default().to_vec(),
    })
}

/// Unitary exchanging `S_{j,1}` and `S_{j,α}` vector by vector, identity elsewhere.
///
/// Written as the reflection `1 - 2 Σ_m |w_m><w_m|` with
/// `w_m = (|j,m,1> - |j,m,α>)/√2`.
#[derive(Debug, Clone)]
pub struct BlockSwap {
    label: BlockLabel,
    dim: usize,
    reflection: Vec<Vec<C64>>,
}

impl BlockSwap {
    pub fn label(&self) -> BlockLabel {
        self.label
    }

    /// Set when `α = 1`, where the swap is the identity.
    pub fn is_identity(&self) -> bool {
        self.reflection.is_empty()
    }

    pub fn matrix(&self) -> DenseOperator {
        let mut u = DenseOperator::identity(self.dim);
        for w in &self.reflection {
            u.add_outer(w, w, C64::new(-2.0, 0.0));
        }
        u
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let mut out = v.amplitudes().to_vec();
        for w in &self.reflection {
            let overlap = inner(w, v.amplitudes()) * 2.0;
            for (o, x) in out.iter_mut().zip(w) {
                *o -= overlap * x;
            }
        }
        StateVector::from_normalized(out)
    }

    /// `U A U†`.
    pub fn conjugate(&self, a: &DenseOperator) -> DenseOperator {
        if self.is_identity() {
            return a.clone();
        }
        // (1 - 2Q) A (1 - 2Q) = A - 2QA - 2AQ + 4QAQ with Q = Σ|w><w|.
        let k = self.reflection.len();
        let a_w: Vec<Vec<C64>> = self.reflection.iter().map(|w| a.apply(w)).collect();
        let adj_a_w: Vec<Vec<C64>> = self.reflection.iter().map(|w| a.adjoint_apply(w)).collect();
        let mut out = a.clone();
        let two = C64::new(2.0, 0.0);
        for i in 0..k {
            let w = &self.reflection[i];
            out.add_outer(w, &adj_a_w[i], -two);
            out.add_outer(&a_w[i], w, -two);
            for (l, wl) in self.reflection.iter().enumerate() {
                let coeff = inner(w, &a_w[l]) * 4.0;
                out.add_outer(w, wl, coeff);
            }
        }
        out
    }
}

pub fn block_swap(basis: &SchurBasis, j: u32, alpha: usize) -> Result<BlockSwap> {
    let label = BlockLabel::new(j, alpha);
    basis.check_label(label)?;
    let dim = basis.dim();
    if alpha == 1 {
        return Ok(BlockSwap {
            label,
            dim,
            reflection: Vec::new(),
        });
    }
    let first = basis.block(BlockLabel::new(j, 1)).unwrap_or_default();
    let other = basis.block(label).unwrap_or_default();
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let reflection = first
        .iter()
        .zip(other)
        .map(|(a, b)| {
            a.amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y) * s)
                .collect()
        })
        .collect();
    Ok(BlockSwap {
        label,
        dim,
        reflection,
    })
}
