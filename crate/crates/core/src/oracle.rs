//! Dense-matrix verification of the block decomposition.
//!
//! Everything here materializes `2^N × 2^N` operators and is limited by the
//! dense cap. Two independent reconstructions of `ρ^{⊗N}` are compared with
//! the plain tensor power: the block sum `Σ_j p_j/d_j Σ_α U_{j,α} ρ_{j,1} U_{j,α}†`
//! and the excitation-number sum `Σ_k c₀^k c₁^{N-k} P̂_k`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analytics::{block_fidelity, block_probability, block_state_matrix};
use crate::blocks::{block_projector, block_swap, BlockLabel, SchurBasis};
use crate::error::{Error, Result};
use crate::haar::{haar_unitary, random_direction};
use crate::linalg::{kron_power, singlet, DenseCap, DenseOperator, SingleQubitOp, C64, ZERO};
use crate::quadrature::{periodic_trapezoid, GaussLegendre};
use crate::qubit::{Direction, MixedQubit};
use crate::stats::NeumaierSum;

/// Probability below which a post-measurement state is left undefined.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;

/// Outcome of projecting a state onto one block.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub probability: f64,
    /// `P ρ P / tr(P ρ)`, absent when the probability is negligible.
    pub post_state: Option<DenseOperator>,
}

pub fn measure_block(state: &DenseOperator, basis: &SchurBasis, label: BlockLabel) -> Result<Measurement> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: basis.dim(),
        });
    }
    let projector = block_projector(basis, label.j, label.alpha)?;
    let probability = projector.expectation(state).re;
    let post_state = (probability >= NEGLIGIBLE_PROBABILITY)
        .then(|| projector.sandwich(state).scaled(1.0 / probability));
    Ok(Measurement {
        probability,
        post_state,
    })
}

/// `(|Ψ₋><Ψ₋|)^{⊗pairs}`; the 1×1 identity when `pairs == 0`.
pub fn singlet_pairs(pairs: usize) -> DenseOperator {
    let s = singlet().projector();
    (0..pairs).fold(DenseOperator::identity(1), |acc, _| acc.kron(&s))
}

/// `ρ_{j,1} = ρ_j ⊗ (|Ψ₋><Ψ₋|)^{⊗(J-j)}`.
pub fn seed_block_state(q: &MixedQubit, n: usize, j: u32, cap: DenseCap) -> Result<DenseOperator> {
    let rho_j = block_state_matrix(q, j, cap)?;
    Ok(rho_j.kron(&singlet_pairs(n / 2 - j as usize)))
}

/// Residuals for one block `(j, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub label: BlockLabel,
    /// `tr(P_{j,α} ρ^{⊗N})`.
    pub probability: f64,
    /// `p_j / d_j` from the closed form.
    pub expected_probability: f64,
    /// Post-measurement state against `U_{j,α} ρ_{j,1} U_{j,α}†`.
    pub post_residual: f64,
    /// State of the kept `2j` qubits after swap and discard, against `ρ_j`.
    pub purified_residual: f64,
    /// Worst `|<1_n̂|ρ_k|1_n̂> - f_j|` over kept qubits `k`.
    pub fidelity_residual: f64,
}

impl BlockCheck {
    pub fn probability_residual(&self) -> f64 {
        (self.probability - self.expected_probability).abs()
    }
}

/// Matrix-level evidence for the decomposition of `ρ^{⊗N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub n: usize,
    pub lambda: f64,
    pub direction: Direction,
    /// Block-sum reconstruction against the tensor power.
    pub block_sum_residual: f64,
    /// Excitation-projector reconstruction against the tensor power.
    pub excitation_residual: f64,
    pub blocks: Vec<BlockCheck>,
}

impl DecompositionReport {
    pub fn total_probability(&self) -> f64 {
        self.blocks.iter().map(|b| b.probability).collect::<NeumaierSum>().value()
    }

    pub fn max_residual(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| {
                [
                    b.probability_residual(),
                    b.post_residual,
                    b.purified_residual,
                    b.fidelity_residual,
                ]
            })
            .chain([self.block_sum_residual, self.excitation_residual])
            .fold(0.0, f64::max)
    }

    /// First residual at or above `tol`, as an error naming the block.
    pub fn check(&self, tol: f64) -> Result<()> {
        let fail = |check, label, residual| Error::Verification {
            check,
            label,
            residual,
            tol,
        };
        if self.block_sum_residual.is_nan() || self.block_sum_residual >= tol {
            return Err(fail("block-sum reconstruction", None, self.block_sum_residual));
        }
        if self.excitation_residual.is_nan() || self.excitation_residual >= tol {
            return Err(fail("excitation reconstruction", None, self.excitation_residual));
        }
        for b in &self.blocks {
            let checks = [
                ("block probability", b.probability_residual()),
                ("post-measurement state", b.post_residual),
                ("purified state", b.purified_residual),
                ("kept-qubit fidelity", b.fidelity_residual),
            ];
            for (name, r) in checks {
                if r.is_nan() || r >= tol {
                    return Err(fail(name, Some(b.label), r));
                }
            }
        }
        Ok(())
    }
}

/// `Σ_k c₀^k c₁^{N-k} P̂_k`, with `P̂_k` projecting onto `k` qubits in `|0_n̂>`.
pub fn excitation_reconstruction(q: &MixedQubit, n: usize, cap: DenseCap) -> Result<DenseOperator> {
    cap.check(n)?;
    let (c0, c1) = (q.c0(), q.c1());
    let diag: Vec<C64> = (0..1usize << n)
        .map(|b| {
            let ones = b.count_ones() as i32;
            C64::new(c0.powi(n as i32 - ones) * c1.powi(ones), 0.0)
        })
        .collect();
    DenseOperator::from_diagonal(&diag).collective_conjugate(&q.rotation())
}

/// `Σ_j p_j/d_j Σ_α U_{j,α} ρ_{j,1} U_{j,α}†`.
pub fn block_sum_reconstruction(basis: &SchurBasis, q: &MixedQubit, cap: DenseCap) -> Result<DenseOperator> {
    let n = basis.n();
    let mut total = DenseOperator::zeros(basis.dim());
    for sector in basis.sectors() {
        let j = sector.j();
        let weight = block_probability(n, q.lambda(), j)? / sector.multiplicity() as f64;
        if weight == 0.0 {
            continue;
        }
        let seed = seed_block_state(q, n, j, cap)?;
        for alpha in 1..=sector.multiplicity() {
            let swapped = block_swap(basis, j, alpha)?.conjugate(&seed);
            total.add_scaled(&swapped, C64::new(weight, 0.0));
        }
    }
    Ok(total)
}

fn kept_qubits(j: u32) -> Vec<usize> {
    (1..=2 * j as usize).collect()
}

/// Runs every matrix-level check without judging the result.
pub fn decomposition_report(basis: &SchurBasis, q: &MixedQubit, cap: DenseCap) -> Result<DecompositionReport> {
    let n = basis.n();
    cap.check(n)?;
    let rho_n = kron_power(&q.density_matrix(), n, cap)?;

    let block_sum_residual = block_sum_reconstruction(basis, q, cap)?.max_abs_diff(&rho_n);
    let excitation_residual = excitation_reconstruction(q, n, cap)?.max_abs_diff(&rho_n);

    let mut blocks = Vec::new();
    for sector in basis.sectors() {
        let j = sector.j();
        let d = sector.multiplicity() as f64;
        let expected_probability = block_probability(n, q.lambda(), j)? / d;
        let rho_j = block_state_matrix(q, j, cap)?;
        let seed = rho_j.kron(&singlet_pairs(n / 2 - j as usize));
        let f_j = block_fidelity(q.lambda(), j)?;
        for alpha in 1..=sector.multiplicity() {
            let label = BlockLabel::new(j, alpha);
            let swap = block_swap(basis, j, alpha)?;
            let measured = measure_block(&rho_n, basis, label)?;
            let (post_residual, purified_residual, fidelity_residual) = match &measured.post_state {
                Some(post) => {
                    let predicted = swap.conjugate(&seed);
                    // The swap is an involution, so it also undoes itself.
                    let restored = swap.conjugate(post);
                    let kept = restored.partial_trace(&kept_qubits(j))?;
                    let fidelity = (1..=2 * j as usize)
                        .map(|k| {
                            kept.partial_trace(&[k])
                                .map(|r| (q.fidelity_of(&r) - f_j).abs())
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                    (post.max_abs_diff(&predicted), kept.max_abs_diff(&rho_j), fidelity)
                }
                None => (0.0, 0.0, 0.0),
            };
            blocks.push(BlockCheck {
                label,
                probability: measured.probability,
                expected_probability,
                post_residual,
                purified_residual,
                fidelity_residual,
            });
        }
    }
    Ok(DecompositionReport {
        n,
        lambda: q.lambda(),
        direction: q.direction(),
        block_sum_residual,
        excitation_residual,
        blocks,
    })
}

/// [`decomposition_report`] followed by [`DecompositionReport::check`].
pub fn verify_decomposition(
    basis: &SchurBasis,
    q: &MixedQubit,
    tol: f64,
    cap: DenseCap,
) -> Result<DecompositionReport> {
    let report = decomposition_report(basis, q, cap)?;
    report.check(tol)?;
    Ok(report)
}

/// Rebuilds `ρ_j` from its pure-state integral representation and returns
/// the largest element-wise deviation from the closed-form `ρ_j`.
///
/// `cos θ` uses a `nodes`-point Gauss–Legendre rule and `φ` a
/// `2·nodes − 1`-point trapezoid rule; both are exact for the degree-`2j`
/// integrand once `nodes ≥ 2j + 1`.
pub fn quadrature_check(q: &MixedQubit, j: u32, nodes: usize, cap: DenseCap) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("quadrature check needs j >= 1"));
    }
    let required = 2 * j as usize + 1;
    if nodes < required {
        return Err(Error::InsufficientNodes {
            required,
            given: nodes,
        });
    }
    let rebuilt = integral_representation(q, j, nodes, 2 * nodes - 1, cap)?;
    Ok(rebuilt.max_abs_diff(&block_state_matrix(q, j, cap)?))
}

/// `Σ_k c₁^k c₀^{2j-k}`, equal to `(c₁^{2j+1} − c₀^{2j+1})/(c₁ − c₀)`.
fn geometric_norm(c0: f64, c1: f64, j: u32) -> f64 {
    let two_j = 2 * j as i32;
    (0..=two_j).map(|k| c1.powi(k) * c0.powi(two_j - k)).sum()
}

/// Component `|Ψ(θ, φ)>` of the pure-state representation, in the computational basis,
/// together with `n(θ)`.
fn pure_component(q: &MixedQubit, cos_theta: f64, phi: f64) -> ([C64; 2], f64) {
    let (c0, c1) = (q.c0(), q.c1());
    let cos_half_sq = (1.0 + cos_theta) / 2.0;
    let sin_half_sq = (1.0 - cos_theta) / 2.0;
    let n_theta = c1 * cos_half_sq + c0 * sin_half_sq;
    let a1 = (c1 * cos_half_sq / n_theta).sqrt();
    let a0 = C64::from_polar((c0 * sin_half_sq / n_theta).sqrt(), phi);
    let (one, zero) = q.eigenstates();
    let (one, zero) = (one.amplitudes(), zero.amplitudes());
    (
        [one[0] * a1 + zero[0] * a0, one[1] * a1 + zero[1] * a0],
        n_theta,
    )
}

/// Quadrature over `∫ dΩ/4π · n(θ)^{2j} (|Ψ><Ψ|)^{⊗2j}`, normalized as `ρ_j`.
fn integral_representation(
    q: &MixedQubit,
    j: u32,
    theta_nodes: usize,
    phi_nodes: usize,
    cap: DenseCap,
) -> Result<DenseOperator> {
    let qubits = 2 * j as usize;
    cap.check(qubits)?;
    let prefactor = (2 * j + 1) as f64 / geometric_norm(q.c0(), q.c1(), j) / (4.0 * core::f64::consts::PI);
    let gl = GaussLegendre::new(theta_nodes);
    let phis = periodic_trapezoid(phi_nodes);
    let mut out = DenseOperator::zeros(1 << qubits);
    for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
        for (phi, wp) in &phis {
            let (psi, n_theta) = pure_component(q, *t, *phi);
            let weight = prefactor * wt * wp * n_theta.powi(qubits as i32);
            if weight == 0.0 {
                continue;
            }
            let product = (1..qubits).fold(psi.to_vec(), |acc, _| {
                acc.iter().flat_map(|a| [a * psi[0], a * psi[1]]).collect()
            });
            out.add_outer(&product, &product, C64::new(weight, 0.0));
        }
    }
    Ok(out)
}

/// `P_1(ρ_j) = ∫ w · (x|Ψ><Ψ| + y|Ψ⊥><Ψ⊥|)` by quadrature over the pure-state
/// components of `ρ_j`, returned as a 2×2 operator.
pub(crate) fn covariant_single_output(q: &MixedQubit, j: u32, x: f64, y: f64) -> DenseOperator {
    let nodes = 2 * j as usize + 1;
    let gl = GaussLegendre::new(nodes);
    let phis = periodic_trapezoid(2 * nodes - 1);
    let prefactor = (2 * j + 1) as f64 / geometric_norm(q.c0(), q.c1(), j) / (4.0 * core::f64::consts::PI);
    let mut out = DenseOperator::zeros(2);
    for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
        for (phi, wp) in &phis {
            let (psi, n_theta) = pure_component(q, *t, *phi);
            let weight = prefactor * wt * wp * n_theta.powi(2 * j as i32);
            let perp = [-psi[1].conj(), psi[0].conj()];
            out.add_outer(&psi, &psi, C64::new(weight * x, 0.0));
            out.add_outer(&perp, &perp, C64::new(weight * y, 0.0));
        }
    }
    out
}

/// One branch of a quantum instrument: `kept` output qubits in an
/// unnormalized state whose trace is the branch probability.
#[derive(Debug, Clone)]
pub struct Branch {
    pub kept: usize,
    pub output: DenseOperator,
}

/// A purification procedure: maps an `N`-qubit state to its branches.
/// Branches must be returned in a fixed order.
pub trait Procedure {
    fn input_qubits(&self) -> usize;
    fn apply(&self, input: &DenseOperator) -> Result<Vec<Branch>>;
}

/// The block-measurement protocol: project onto `S_{j,α}`, swap back to
/// `S_{j,1}`, keep the first `2j` qubits. One branch per block label.
#[derive(Debug, Clone, Copy)]
pub struct BlockMeasurement<'a> {
    pub basis: &'a SchurBasis,
}

impl Procedure for BlockMeasurement<'_> {
    fn input_qubits(&self) -> usize {
        self.basis.n()
    }

    fn apply(&self, input: &DenseOperator) -> Result<Vec<Branch>> {
        self.basis
            .labels()
            .into_iter()
            .map(|label| {
                let projector = block_projector(self.basis, label.j, label.alpha)?;
                let swap = block_swap(self.basis, label.j, label.alpha)?;
                let post = swap.conjugate(&projector.sandwich(input));
                Ok(Branch {
                    kept: 2 * label.j as usize,
                    output: post.partial_trace(&kept_qubits(label.j))?,
                })
            })
            .collect()
    }
}

/// Keeps qubit 1 and discards the rest.
#[derive(Debug, Clone, Copy)]
pub struct KeepFirstQubit {
    pub n: usize,
}

impl Procedure for KeepFirstQubit {
    fn input_qubits(&self) -> usize {
        self.n
    }

    fn apply(&self, input: &DenseOperator) -> Result<Vec<Branch>> {
        Ok(vec![Branch {
            kept: 1,
            output: input.partial_trace(&[1])?,
        }])
    }
}

/// `(P_M, P_M · F_M)` contributions of the branches, indexed by `M`.
fn branch_merits(branches: &[Branch], target: &MixedQubit, max_kept: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(0.0, 0.0); max_kept + 1];
    for b in branches {
        let p = b.output.trace().re;
        let mut weighted = 0.0;
        if b.kept > 0 {
            for k in 1..=b.kept {
                weighted += target.fidelity_of(&b.output.partial_trace(&[k])?);
            }
            weighted /= b.kept as f64;
        }
        out[b.kept].0 += p;
        out[b.kept].1 += weighted;
    }
    Ok(out)
}

/// Sampled figures of merit for one output size `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritEstimate {
    pub probability: f64,
    pub probability_error: f64,
    /// `NaN` for `M = 0` or when the branch never fires.
    pub fidelity: f64,
    pub fidelity_error: f64,
}

fn estimate(samples: &[(f64, f64)]) -> MeritEstimate {
    let k = samples.len() as f64;
    let ps: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (p, p_err) = crate::stats::mean_and_error(&ps);
    let a = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let (fidelity, fidelity_error) = if p > 0.0 {
        let f = a / p;
        let resid: Vec<f64> = samples.iter().map(|s| s.1 - f * s.0).collect();
        let (_, r_err) = crate::stats::mean_and_error(&resid);
        (f, r_err / p)
    } else {
        (f64::NAN, f64::NAN)
    };
    MeritEstimate {
        probability: p,
        probability_error: p_err,
        fidelity,
        fidelity_error,
    }
}

/// Symmetrized-versus-raw comparison for every output size.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationReport {
    /// Indexed by `M`.
    pub symmetrized: Vec<MeritEstimate>,
    pub raw: Vec<MeritEstimate>,
    pub samples: usize,
}

fn agree(a: f64, ea: f64, b: f64, eb: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    let se = (ea * ea + eb * eb).sqrt();
    (a - b).abs() <= 3.0 * se || (a - b).abs() < 1e-9
}

impl SymmetrizationReport {
    /// Whether `P_M` and `F_M` of both estimates agree within three
    /// standard errors for every `M`.
    pub fn consistent(&self) -> bool {
        self.symmetrized.iter().zip(&self.raw).all(|(s, r)| {
            agree(s.probability, s.probability_error, r.probability, r.probability_error)
                && agree(s.fidelity, s.fidelity_error, r.fidelity, r.fidelity_error)
        })
    }
}

/// Conjugates the outputs of `branches` by `U^{⊗M}` in place.
fn rotate_branches(branches: &mut [Branch], u: &SingleQubitOp) -> Result<()> {
    for b in branches.iter_mut() {
        b.output = b.output.collective_conjugate(u)?;
    }
    Ok(())
}

/// Symmetrizes `procedure` (random collective rotation, procedure, inverse
/// rotation, random permutation of the outputs) and compares its sampled
/// `P_M`, `F_M` at fixed direction with the raw procedure averaged over
/// isotropic input directions.
pub fn symmetrize_and_compare<P: Procedure, R: Rng + ?Sized>(
    procedure: &P,
    q: &MixedQubit,
    samples: usize,
    rng: &mut R,
    cap: DenseCap,
) -> Result<SymmetrizationReport> {
    let n = procedure.input_qubits();
    let rho_n = kron_power(&q.density_matrix(), n, cap)?;
    let mut sym = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_unitary(rng);
        let mut branches = procedure.apply(&rho_n.collective_conjugate(&u)?)?;
        rotate_branches(&mut branches, &u.adjoint())?;
        for b in branches.iter_mut() {
            let mut perm: Vec<usize> = (0..b.kept).collect();
            perm.shuffle(rng);
            if b.kept > 0 {
                b.output = b.output.permute_qubits(&perm)?;
            }
        }
        sym.push(branch_merits(&branches, q, n)?);
    }
    let mut raw = Vec::with_capacity(samples);
    for _ in 0..samples {
        let q_random = MixedQubit::new(q.lambda(), random_direction(rng))?;
        let input = kron_power(&q_random.density_matrix(), n, cap)?;
        raw.push(branch_merits(&procedure.apply(&input)?, &q_random, n)?);
    }
    let per_m = |all: &[Vec<(f64, f64)>], m: usize| -> Vec<(f64, f64)> { all.iter().map(|s| s[m]).collect() };
    Ok(SymmetrizationReport {
        symmetrized: (0..=n).map(|m| estimate(&per_m(&sym, m))).collect(),
        raw: (0..=n).map(|m| estimate(&per_m(&raw, m))).collect(),
        samples,
    })
}

/// `max_branch ‖P((UρU†)^{⊗N}) − U^{⊗M} P(ρ^{⊗N}) U†^{⊗M}‖_max`.
pub fn covariance_residual<P: Procedure>(
    procedure: &P,
    q: &MixedQubit,
    u: &SingleQubitOp,
    cap: DenseCap,
) -> Result<f64> {
    let n = procedure.input_qubits();
    let rho_n = kron_power(&q.density_matrix(), n, cap)?;
    let mut expected = procedure.apply(&rho_n)?;
    rotate_branches(&mut expected, u)?;
    let actual = procedure.apply(&rho_n.collective_conjugate(u)?)?;
    Ok(actual
        .iter()
        .zip(&expected)
        .map(|(a, e)| a.output.max_abs_diff(&e.output))
        .fold(0.0, f64::max))
}

/// Re-embeds the purified `ρ_j` with fresh singlets, applies `U_{j,α}` and
/// compares with the measured post-measurement state of block `(j, α)`.
///
/// Blocks with negligible probability are compared unnormalized.
pub fn reversibility_check(basis: &SchurBasis, q: &MixedQubit, label: BlockLabel, cap: DenseCap) -> Result<f64> {
    let n = basis.n();
    let rho_n = kron_power(&q.density_matrix(), n, cap)?;
    let measured = measure_block(&rho_n, basis, label)?;
    let rebuilt = block_swap(basis, label.j, label.alpha)?.conjugate(&seed_block_state(q, n, label.j, cap)?);
    Ok(match measured.post_state {
        Some(post) => rebuilt.max_abs_diff(&post),
        None => {
            let weight = block_probability(n, q.lambda(), label.j)? / basis.multiplicity(label.j) as f64;
            let raw = block_projector(basis, label.j, label.alpha)?.sandwich(&rho_n);
            rebuilt.scaled(weight).max_abs_diff(&raw)
        }
    })
}

/// Checks that `U^{⊗N}` maps each `S_{j,α}` into itself through one and the
/// same unitary `(2j+1)×(2j+1)` matrix for every `α`. Returns the worst of:
/// leakage out of the block, non-unitarity of the coefficient matrix, and
/// the spread of that matrix across `α`.
pub fn rotation_residual(basis: &SchurBasis, u: &SingleQubitOp) -> Result<f64> {
    let mut worst = 0.0f64;
    for sector in basis.sectors() {
        let width = 2 * sector.j() as usize + 1;
        let mut reference: Option<Vec<C64>> = None;
        for alpha in 1..=sector.multiplicity() {
            let block = sector.block(alpha).unwrap_or_default();
            let mut coeffs = vec![ZERO; width * width];
            for (c, v) in block.iter().enumerate() {
                let image = v.collective_apply(u)?;
                let mut residual = image.amplitudes().to_vec();
                for (r, w) in block.iter().enumerate() {
                    let overlap = w.inner(&image);
                    coeffs[r * width + c] = overlap;
                    for (x, y) in residual.iter_mut().zip(w.amplitudes()) {
                        *x -= overlap * y;
                    }
                }
                worst = worst.max(residual.iter().map(|x| x.norm()).fold(0.0, f64::max));
            }
            let d = DenseOperator::from_rows(width, &coeffs);
            worst = worst.max(d.matmul(&d.adjoint()).max_abs_diff(&DenseOperator::identity(width)));
            match &reference {
                None => reference = Some(coeffs),
                Some(r) => {
                    let spread = r.iter().zip(&coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    worst = worst.max(spread);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::build_schur_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(n: usize) -> SchurBasis {
        build_schur_basis(n, DenseCap::default()).unwrap()
    }

    fn random_qubit(rng: &mut ChaCha8Rng) -> MixedQubit {
        MixedQubit::new(rng.random::<f64>(), random_direction(rng)).unwrap()
    }

    #[test]
    fn two_qubit_decomposition() {
        let b = basis(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let q = random_qubit(&mut rng);
            let report = verify_decomposition(&b, &q, 1e-10, DenseCap::default()).unwrap();
            assert!((report.total_probability() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_input_occupies_the_symmetric_block() {
        let b = basis(4);
        let q = MixedQubit::new(1.0, Direction::new(0.3, 0.4, -0.5).unwrap()).unwrap();
        let report = verify_decomposition(&b, &q, 1e-10, DenseCap::default()).unwrap();
        for block in &report.blocks {
            if block.label == BlockLabel::new(2, 1) {
                assert!((block.probability - 1.0).abs() < 1e-12);
            } else {
                assert!(block.probability.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singlet_probability_at_half_mixing() {
        let b = basis(2);
        let q = MixedQubit::along_z(0.5).unwrap();
        let rho = kron_power(&q.density_matrix(), 2, DenseCap::default()).unwrap();
        let m = measure_block(&rho, &b, BlockLabel::new(0, 1)).unwrap();
        assert!((m.probability - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn probabilities_are_alpha_independent() {
        let b = basis(6);
        let q = MixedQubit::new(0.45, Direction::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        let report = decomposition_report(&b, &q, DenseCap::default()).unwrap();
        report.check(1e-10).unwrap();
        for block in &report.blocks {
            assert!(block.probability_residual() < 1e-10);
        }
    }

    #[test]
    fn check_names_the_offending_block() {
        let b = basis(4);
        let q = MixedQubit::along_z(0.3).unwrap();
        let mut report = decomposition_report(&b, &q, DenseCap::default()).unwrap();
        report.blocks[3].post_residual = 1.0;
        let label = report.blocks[3].label;
        match report.check(1e-9) {
            Err(Error::Verification { label: Some(l), .. }) => assert_eq!(l, label),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quadrature_examples() {
        let cap = DenseCap::default();
        let pure = MixedQubit::new(1.0, Direction::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(quadrature_check(&pure, 2, 5, cap).unwrap() < 1e-9);
        let q = MixedQubit::new(0.5, Direction::new(1.0, -1.0, 0.5).unwrap()).unwrap();
        assert!(quadrature_check(&q, 1, 3, cap).unwrap() < 1e-10);
        let q = MixedQubit::new(0.3, Direction::new(-0.2, 0.1, 0.9).unwrap()).unwrap();
        assert!(quadrature_check(&q, 3, 7, cap).unwrap() < 1e-9);
        assert_eq!(
            quadrature_check(&q, 3, 6, cap),
            Err(Error::InsufficientNodes { required: 7, given: 6 })
        );
        let flat = MixedQubit::along_z(0.0).unwrap();
        assert!(quadrature_check(&flat, 2, 5, cap).unwrap() < 1e-10);
    }

    #[test]
    fn keep_first_qubit_symmetrizes_to_input_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = MixedQubit::new(0.4, Direction::new(0.1, 0.7, 0.2).unwrap()).unwrap();
        let report = symmetrize_and_compare(&KeepFirstQubit { n: 2 }, &q, 30, &mut rng, DenseCap::default()).unwrap();
        assert!((report.symmetrized[1].fidelity - q.c1()).abs() < 1e-12);
        assert!((report.raw[1].fidelity - q.c1()).abs() < 1e-12);
        assert!(report.consistent());
    }

    #[test]
    fn block_measurement_symmetrization_is_a_no_op() {
        let b = basis(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = MixedQubit::new(0.6, Direction::new(0.5, 0.5, -0.1).unwrap()).unwrap();
        let report = symmetrize_and_compare(&BlockMeasurement { basis: &b }, &q, 8, &mut rng, DenseCap::default()).unwrap();
        assert!(report.consistent());
        for m in [0, 2, 4] {
            let p = block_probability(4, 0.6, (m / 2) as u32).unwrap();
            assert!((report.symmetrized[m].probability - p).abs() < 1e-12);
            assert!(report.symmetrized[m].probability_error < 1e-12);
        }
        for m in [2, 4] {
            let f = block_fidelity(0.6, (m / 2) as u32).unwrap();
            assert!((report.symmetrized[m].fidelity - f).abs() < 1e-12);
            assert!((report.raw[m].fidelity - f).abs() < 1e-12);
        }
        assert!(report.symmetrized[1].fidelity.is_nan());
    }

    #[test]
    fn block_measurement_is_covariant() {
        let b = basis(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_qubit(&mut rng);
        for _ in 0..5 {
            let u = haar_unitary(&mut rng);
            let r = covariance_residual(&BlockMeasurement { basis: &b }, &q, &u, DenseCap::default()).unwrap();
            assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn a_non_covariant_procedure_is_detected() {
        /// Projects qubit 1 onto |1> before keeping it.
        struct Filter;
        impl Procedure for Filter {
            fn input_qubits(&self) -> usize {
                2
            }
            fn apply(&self, input: &DenseOperator) -> Result<Vec<Branch>> {
                let mut out = input.partial_trace(&[1])?;
                out[(0, 0)] = ZERO;
                out[(0, 1)] = ZERO;
                out[(1, 0)] = ZERO;
                Ok(vec![Branch { kept: 1, output: out }])
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = MixedQubit::along_z(0.5).unwrap();
        let u = haar_unitary(&mut rng);
        assert!(covariance_residual(&Filter, &q, &u, DenseCap::default()).unwrap() > 1e-3);
    }

    #[test]
    fn reversibility_examples() {
        let cap = DenseCap::default();
        let b2 = basis(2);
        let q = MixedQubit::new(0.7, Direction::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        for label in b2.labels() {
            assert!(reversibility_check(&b2, &q, label, cap).unwrap() < 1e-12);
        }
        let b4 = basis(4);
        let q = MixedQubit::along_z(0.5).unwrap();
        for alpha in 1..=3 {
            assert!(reversibility_check(&b4, &q, BlockLabel::new(1, alpha), cap).unwrap() < 1e-10);
        }
        let pure = MixedQubit::along_z(1.0).unwrap();
        for label in b4.labels() {
            assert!(reversibility_check(&b4, &pure, label, cap).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rotations_act_identically_on_every_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2, 4, 6] {
            let b = basis(n);
            for _ in 0..5 {
                let u = haar_unitary(&mut rng);
                assert!(rotation_residual(&b, &u).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn covariant_output_trace_and_orientation() {
        let q = MixedQubit::new(0.5, Direction::new(0.3, 0.0, 0.4).unwrap()).unwrap();
        let out = covariant_single_output(&q, 2, 1.0, 0.0);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        let f = q.fidelity_of(&out);
        assert!((f - block_fidelity(0.5, 2).unwrap()).abs() < 1e-12);
    }
}
