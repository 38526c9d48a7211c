//! Monte Carlo runs of the purification protocol.
//!
//! The fast path samples `(j, α)` straight from the closed-form distribution;
//! the dense path measures explicit `2^N × 2^N` operators. Each trial draws
//! from its own ChaCha stream (`seed`, stream = trial index), and summaries
//! are built from integer histograms, so results do not depend on how trials
//! are split between workers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{block_fidelity, block_probability, multiplicity};
use crate::blocks::{block_projector, block_swap, build_schur_basis, BlockLabel, SchurBasis};
use crate::error::{Error, Result};
use crate::linalg::{kron_power, DenseCap};
use crate::qubit::MixedQubit;
use crate::stats::{chi_square_goodness_of_fit, chi_square_two_sample, grouped_mean_and_error, ChiSquare, NeumaierSum};

/// One protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub trial: u64,
    pub j: u32,
    /// `1..=d_j`; `d_j` outgrows 64 bits for large `N`.
    pub alpha: BigUint,
    pub kept_qubits: usize,
    /// `f_j`, or the `j → 0` continuation when nothing is kept.
    pub fidelity: f64,
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// `(value − target) / error`; infinite when the error vanishes and the
    /// value is off target.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if self.error > 0.0 {
            diff / self.error
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub n: usize,
    pub lambda: f64,
    pub trials: u64,
    pub seed: u64,
    pub empirical_yield: Estimate,
    pub empirical_mean_fidelity: Estimate,
    /// Counts indexed by `j`.
    pub histogram: Vec<u64>,
}

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform integer in `[0, bound)` by rejection on the bit length of `bound`.
fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    debug_assert!(*bound > BigUint::ZERO);
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = match bits % 32 {
        0 => u32::MAX,
        r => (1u32 << r) - 1,
    };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
        if let Some(top) = digits.last_mut() {
            *top &= top_mask;
        }
        let candidate = BigUint::new(digits);
        if candidate < *bound {
            return candidate;
        }
    }
}

/// Index of the first cumulative weight above `u`, skipping empty bins.
fn pick(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().unwrap_or(&1.0);
    let target = u * total;
    match cumulative.iter().position(|&c| target < c) {
        Some(i) => i,
        // Rounding at the top end: fall back to the last populated bin.
        None => {
            let mut i = cumulative.len() - 1;
            while i > 0 && cumulative[i] == cumulative[i - 1] {
                i -= 1;
            }
            i
        }
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = NeumaierSum::default();
    weights
        .iter()
        .map(|&w| {
            acc.add(w);
            acc.value()
        })
        .collect()
}

fn check_register(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    if n % 2 == 1 {
        return Err(Error::OddQubitCount(n));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1"));
    }
    Ok(())
}

/// Per-`j` fidelity as reported in outcome records.
fn outcome_fidelities(lambda: f64, max_j: u32) -> Result<Vec<f64>> {
    (0..=max_j).map(|j| block_fidelity(lambda, j)).collect()
}

/// Builds a summary from a `j` histogram and per-`j` fidelities.
pub fn summarize(n: usize, lambda: f64, seed: u64, histogram: Vec<u64>, fidelities: &[f64]) -> SimulationSummary {
    let yields: Vec<(u64, f64)> = histogram
        .iter()
        .enumerate()
        .map(|(j, &c)| (c, 2.0 * j as f64 / n as f64))
        .collect();
    let fids: Vec<(u64, f64)> = histogram.iter().zip(fidelities).map(|(&c, &f)| (c, f)).collect();
    let (y, y_err) = grouped_mean_and_error(&yields);
    let (f, f_err) = grouped_mean_and_error(&fids);
    SimulationSummary {
        n,
        lambda,
        trials: histogram.iter().sum(),
        seed,
        empirical_yield: Estimate { value: y, error: y_err },
        empirical_mean_fidelity: Estimate { value: f, error: f_err },
        histogram,
    }
}

/// Samples outcomes from the closed-form block distribution.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    n: usize,
    lambda: f64,
    cumulative: Vec<f64>,
    fidelities: Vec<f64>,
    multiplicities: Vec<BigUint>,
}

impl OutcomeSampler {
    pub fn new(q: &MixedQubit, n: usize) -> Result<Self> {
        check_register(n)?;
        let max_j = (n / 2) as u32;
        let lambda = q.lambda();
        let probabilities = (0..=max_j)
            .map(|j| block_probability(n, lambda, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            lambda,
            cumulative: cumulative(&probabilities),
            fidelities: outcome_fidelities(lambda, max_j)?,
            multiplicities: (0..=max_j).map(|j| multiplicity(n, j)).collect::<Result<_>>()?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fidelities(&self) -> &[f64] {
        &self.fidelities
    }

    fn sample_j(&self, rng: &mut ChaCha8Rng) -> u32 {
        pick(&self.cumulative, rng.random::<f64>()) as u32
    }

    pub fn sample(&self, seed: u64, trial: u64) -> OutcomeRecord {
        let mut rng = trial_rng(seed, trial);
        let j = self.sample_j(&mut rng);
        let alpha = uniform_below(&mut rng, &self.multiplicities[j as usize]) + 1u32;
        OutcomeRecord {
            trial,
            j,
            alpha,
            kept_qubits: 2 * j as usize,
            fidelity: self.fidelities[j as usize],
        }
    }

    pub fn records(&self, seed: u64, trials: Range<u64>) -> impl Iterator<Item = OutcomeRecord> + '_ {
        trials.map(move |t| self.sample(seed, t))
    }

    /// `j` histogram over a range of trials. Only `j` is drawn, but the
    /// stream is consumed exactly as in [`Self::sample`].
    pub fn histogram(&self, seed: u64, trials: Range<u64>) -> Vec<u64> {
        let mut counts = vec![0u64; self.cumulative.len()];
        for t in trials {
            let mut rng = trial_rng(seed, t);
            counts[self.sample_j(&mut rng) as usize] += 1;
        }
        counts
    }

    pub fn summarize(&self, seed: u64, histogram: Vec<u64>) -> SimulationSummary {
        summarize(self.n, self.lambda, seed, histogram, &self.fidelities)
    }
}

/// Element-wise sum of histograms from disjoint trial ranges.
pub fn merge_histograms(parts: &[Vec<u64>]) -> Vec<u64> {
    let len = parts.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![0u64; len];
    for part in parts {
        for (o, c) in out.iter_mut().zip(part) {
            *o += c;
        }
    }
    out
}

pub fn run_protocol(q: &MixedQubit, n: usize, trials: u64, seed: u64) -> Result<SimulationSummary> {
    check_trials(trials)?;
    let sampler = OutcomeSampler::new(q, n)?;
    Ok(sampler.summarize(seed, sampler.histogram(seed, 0..trials)))
}

/// The protocol executed on explicit operators.
///
/// Measurement statistics and the post-processed state of every block are
/// computed once from `ρ^{⊗N}`: trace of the projected state for the label
/// probabilities, then swap, discard of the singlet pairs and a partial trace
/// per kept qubit for the fidelity. Trials then only draw labels.
#[derive(Debug, Clone)]
pub struct DenseProtocol {
    n: usize,
    lambda: f64,
    labels: Vec<BlockLabel>,
    probabilities: Vec<f64>,
    fidelities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DenseProtocol {
    pub fn new(q: &MixedQubit, n: usize, cap: DenseCap) -> Result<Self> {
        check_register(n)?;
        cap.check(n)?;
        Self::from_basis(&build_schur_basis(n, cap)?, q, cap)
    }

    pub fn from_basis(basis: &SchurBasis, q: &MixedQubit, cap: DenseCap) -> Result<Self> {
        let n = basis.n();
        let rho_n = kron_power(&q.density_matrix(), n, cap)?;
        let labels = basis.labels();
        let mut probabilities = Vec::with_capacity(labels.len());
        let mut fidelities = Vec::with_capacity(labels.len());
        for label in &labels {
            let projector = block_projector(basis, label.j, label.alpha)?;
            let projected = projector.sandwich(&rho_n);
            let p = projected.trace().re.max(0.0);
            probabilities.push(p);
            let kept = 2 * label.j as usize;
            let fidelity = if kept == 0 {
                block_fidelity(q.lambda(), 0)?
            } else if p < crate::oracle::NEGLIGIBLE_PROBABILITY {
                // Never drawn; record the closed form for completeness.
                block_fidelity(q.lambda(), label.j)?
            } else {
                let restored = block_swap(basis, label.j, label.alpha)?.conjugate(&projected);
                let keep: Vec<usize> = (1..=kept).collect();
                let purified = restored.partial_trace(&keep)?.scaled(1.0 / p);
                let mut total = NeumaierSum::default();
                for k in 1..=kept {
                    total.add(q.fidelity_of(&purified.partial_trace(&[k])?));
                }
                total.value() / kept as f64
            };
            fidelities.push(fidelity);
        }
        Ok(Self {
            n,
            lambda: q.lambda(),
            cumulative: cumulative(&probabilities),
            labels,
            probabilities,
            fidelities,
        })
    }

    pub fn labels(&self) -> &[BlockLabel] {
        &self.labels
    }

    /// `tr(P_{j,α} ρ^{⊗N})` per label.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Mean kept-qubit fidelity per label.
    pub fn fidelities(&self) -> &[f64] {
        &self.fidelities
    }

    fn sample_index(&self, seed: u64, trial: u64) -> usize {
        let mut rng = trial_rng(seed, trial);
        pick(&self.cumulative, rng.random::<f64>())
    }

    pub fn sample(&self, seed: u64, trial: u64) -> OutcomeRecord {
        let i = self.sample_index(seed, trial);
        let label = self.labels[i];
        OutcomeRecord {
            trial,
            j: label.j,
            alpha: BigUint::from(label.alpha),
            kept_qubits: 2 * label.j as usize,
            fidelity: self.fidelities[i],
        }
    }

    /// Counts per label, in the order of [`Self::labels`].
    pub fn label_histogram(&self, seed: u64, trials: Range<u64>) -> Vec<u64> {
        let mut counts = vec![0u64; self.labels.len()];
        for t in trials {
            counts[self.sample_index(seed, t)] += 1;
        }
        counts
    }

    pub fn summarize(&self, seed: u64, label_counts: &[u64]) -> SimulationSummary {
        let max_j = self.n / 2;
        let mut histogram = vec![0u64; max_j + 1];
        for (label, &c) in self.labels.iter().zip(label_counts) {
            histogram[label.j as usize] += c;
        }
        let yields: Vec<(u64, f64)> = histogram
            .iter()
            .enumerate()
            .map(|(j, &c)| (c, 2.0 * j as f64 / self.n as f64))
            .collect();
        let fids: Vec<(u64, f64)> = label_counts.iter().zip(&self.fidelities).map(|(&c, &f)| (c, f)).collect();
        let (y, y_err) = grouped_mean_and_error(&yields);
        let (f, f_err) = grouped_mean_and_error(&fids);
        SimulationSummary {
            n: self.n,
            lambda: self.lambda,
            trials: histogram.iter().sum(),
            seed,
            empirical_yield: Estimate { value: y, error: y_err },
            empirical_mean_fidelity: Estimate { value: f, error: f_err },
            histogram,
        }
    }
}

pub fn run_protocol_dense(q: &MixedQubit, n: usize, trials: u64, seed: u64, cap: DenseCap) -> Result<SimulationSummary> {
    check_trials(trials)?;
    let dense = DenseProtocol::new(q, n, cap)?;
    Ok(dense.summarize(seed, &dense.label_histogram(seed, 0..trials)))
}

/// Goodness of fit of a `j` histogram against the closed-form `p_j`.
pub fn histogram_fit(summary: &SimulationSummary) -> Result<ChiSquare> {
    let expected = (0..summary.histogram.len() as u32)
        .map(|j| block_probability(summary.n, summary.lambda, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(chi_square_goodness_of_fit(&summary.histogram, &expected))
}

/// Two-sample homogeneity test between the `j` histograms of two runs.
pub fn compare_histograms(a: &SimulationSummary, b: &SimulationSummary) -> ChiSquare {
    chi_square_two_sample(&a.histogram, &b.histogram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{distillation_yield, mean_fidelity};
    use crate::qubit::Direction;

    #[test]
    fn pure_input_always_keeps_everything() {
        let q = MixedQubit::along_z(1.0).unwrap();
        let s = run_protocol(&q, 8, 500, 3).unwrap();
        assert_eq!(s.histogram, vec![0, 0, 0, 0, 500]);
        assert_eq!(s.empirical_yield.value, 1.0);
        assert_eq!(s.empirical_mean_fidelity.value, 1.0);
        let sampler = OutcomeSampler::new(&q, 8).unwrap();
        assert!(sampler.records(3, 0..50).all(|r| r.alpha == BigUint::from(1u32) && r.kept_qubits == 8));
    }

    #[test]
    fn two_qubit_yield_within_three_sigma() {
        let q = MixedQubit::along_z(0.5).unwrap();
        let s = run_protocol(&q, 2, 100_000, 11).unwrap();
        assert!(s.empirical_yield.z_score(0.8125).abs() < 3.0);
    }

    #[test]
    fn twenty_qubit_fidelity_within_three_sigma() {
        let q = MixedQubit::along_z(0.6).unwrap();
        let s = run_protocol(&q, 20, 100_000, 42).unwrap();
        let target = mean_fidelity(20, 0.6, true).unwrap();
        assert!(s.empirical_mean_fidelity.z_score(target).abs() < 3.0);
        assert!(s.empirical_yield.z_score(distillation_yield(20, 0.6).unwrap()).abs() < 4.0);
    }

    #[test]
    fn seeded_runs_are_identical_and_split_invariant() {
        let q = MixedQubit::along_z(0.3).unwrap();
        let a = run_protocol(&q, 12, 5000, 9).unwrap();
        let b = run_protocol(&q, 12, 5000, 9).unwrap();
        assert_eq!(a, b);
        let sampler = OutcomeSampler::new(&q, 12).unwrap();
        let parts = [
            sampler.histogram(9, 0..1234),
            sampler.histogram(9, 1234..4000),
            sampler.histogram(9, 4000..5000),
        ];
        assert_eq!(sampler.summarize(9, merge_histograms(&parts)), a);
        let c = run_protocol(&q, 12, 5000, 10).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn records_agree_with_histogram() {
        let q = MixedQubit::along_z(0.7).unwrap();
        let sampler = OutcomeSampler::new(&q, 10).unwrap();
        let mut counts = vec![0u64; 6];
        for r in sampler.records(5, 0..2000) {
            counts[r.j as usize] += 1;
            assert_eq!(r.kept_qubits, 2 * r.j as usize);
            let d = multiplicity(10, r.j).unwrap();
            assert!(r.alpha >= BigUint::from(1u32) && r.alpha <= d);
        }
        assert_eq!(counts, sampler.histogram(5, 0..2000));
    }

    #[test]
    fn alpha_is_uniform_over_huge_multiplicities() {
        let q = MixedQubit::along_z(0.2).unwrap();
        let sampler = OutcomeSampler::new(&q, 200).unwrap();
        let mut top_half = 0u32;
        let total = 4000;
        for r in sampler.records(1, 0..total) {
            let d = multiplicity(200, r.j).unwrap();
            assert!(r.alpha <= d);
            if r.alpha.clone() * 2u32 > d {
                top_half += 1;
            }
        }
        let frac = top_half as f64 / total as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / total as f64).sqrt());
    }

    #[test]
    fn uniform_below_small_bounds() {
        let mut rng = trial_rng(0, 0);
        let bound = BigUint::from(3u32);
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            let v = uniform_below(&mut rng, &bound);
            counts[usize::try_from(&v).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0);
        }
    }

    #[test]
    fn sampling_matches_closed_form_probabilities() {
        let q = MixedQubit::along_z(0.4).unwrap();
        let s = run_protocol(&q, 16, 1_000_000, 77).unwrap();
        for (j, &c) in s.histogram.iter().enumerate() {
            let p = block_probability(16, 0.4, j as u32).unwrap();
            let se = (p * (1.0 - p) / 1e6).sqrt();
            assert!((c as f64 / 1e6 - p).abs() < 4.0 * se.max(1e-12), "j={j}");
        }
        assert!(histogram_fit(&s).unwrap().p_value > 1e-3);
    }

    #[test]
    fn dense_two_qubit_examples() {
        let cap = DenseCap::default();
        let flat = DenseProtocol::new(&MixedQubit::along_z(0.0).unwrap(), 2, cap).unwrap();
        assert!((flat.probabilities()[0] - 0.25).abs() < 1e-14);
        assert!((flat.probabilities()[1] - 0.75).abs() < 1e-14);
        let pure = run_protocol_dense(&MixedQubit::along_z(1.0).unwrap(), 2, 200, 1, cap).unwrap();
        assert_eq!(pure.histogram, vec![0, 200]);
    }

    #[test]
    fn dense_label_frequencies_and_fidelities() {
        let q = MixedQubit::new(0.5, Direction::new(0.2, -0.4, 0.9).unwrap()).unwrap();
        let dense = DenseProtocol::new(&q, 4, DenseCap::default()).unwrap();
        let trials = 60_000u64;
        let counts = dense.label_histogram(8, 0..trials);
        for ((label, &c), (&p, &f)) in dense
            .labels()
            .iter()
            .zip(&counts)
            .zip(dense.probabilities().iter().zip(dense.fidelities()))
        {
            let expected = block_probability(4, 0.5, label.j).unwrap() / multiplicity(4, label.j).unwrap().try_into().map(|d: u64| d as f64).unwrap();
            assert!((p - expected).abs() < 1e-12);
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((c as f64 / trials as f64 - p).abs() < 3.0 * se, "{label:?}");
            assert!((f - block_fidelity(0.5, label.j).unwrap()).abs() < 1e-10);
        }
        let summary = dense.summarize(8, &counts);
        // Same seed would reuse the same uniforms, so compare independent runs.
        let fast = run_protocol(&q, 4, trials, 1008).unwrap();
        assert!(compare_histograms(&summary, &fast).p_value > 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let q = MixedQubit::along_z(0.5).unwrap();
        assert_eq!(run_protocol(&q, 3, 10, 0), Err(Error::OddQubitCount(3)));
        assert!(run_protocol(&q, 4, 0, 0).is_err());
        assert!(matches!(
            run_protocol_dense(&q, 14, 10, 0, DenseCap::new(12)),
            Err(Error::CapExceeded { .. })
        ));
    }
}
