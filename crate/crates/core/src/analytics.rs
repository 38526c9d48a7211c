//! Closed-form statistics of the block decomposition of `ρ^{⊗N}`.
//!
//! Everything here is evaluated without forming any `2^N` object, so it is
//! usable for `N` in the hundreds. Multiplicities are exact big integers;
//! probabilities switch to log space above [`LOG_SPACE_ABOVE`] qubits.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::blocks::dicke_state;
use crate::error::{Error, Result};
use crate::linalg::{DenseCap, DenseOperator, C64};
use crate::qubit::MixedQubit;
use crate::stats::NeumaierSum;

/// Below this `λ` the `c₁ = c₀` limit formulas are used.
pub const SMALL_LAMBDA: f64 = 1e-8;
/// Within this distance of `λ = 1` the pure-input limits are used.
pub const PURE_MARGIN: f64 = 1e-12;
/// Registers larger than this evaluate `p_j` in log space.
pub const LOG_SPACE_ABOVE: usize = 50;

fn half_register(n: usize) -> Result<u32> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddQubitCount(n));
    }
    Ok((n / 2) as u32)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

fn eigenvalues(lambda: f64) -> (f64, f64) {
    ((1.0 - lambda) / 2.0, (1.0 + lambda) / 2.0)
}

/// `1 − (c₀/c₁)^w` without cancellation for small `λ`, using
/// `ln(c₀/c₁) = −2 atanh λ`.
fn one_minus_ratio_pow(lambda: f64, w: i32) -> f64 {
    -libm::expm1(-2.0 * w as f64 * libm::atanh(lambda))
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Natural log of a positive big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * core::f64::consts::LN_2
}

/// `d_j = C(2J, J-j) - C(2J, J-j-1)`, with `d_J = 1`.
pub fn multiplicity(n: usize, j: u32) -> Result<BigUint> {
    let big_j = half_register(n)?;
    if j > big_j {
        return Err(Error::SpinOutOfRange { n, j });
    }
    let (two_j_total, k) = (n as u64, (big_j - j) as u64);
    if k == 0 {
        return Ok(BigUint::one());
    }
    Ok(binomial(two_j_total, k) - binomial(two_j_total, k - 1))
}

/// `Σ_j d_j (2j+1)`, which must equal `2^N`.
pub fn total_dimension(n: usize) -> Result<BigUint> {
    let big_j = half_register(n)?;
    let mut total = BigUint::zero();
    for j in 0..=big_j {
        total += multiplicity(n, j)? * (2 * j + 1);
    }
    Ok(total)
}

/// Probability `p_j` that the block measurement on `ρ^{⊗N}` returns spin `j`.
pub fn block_probability(n: usize, lambda: f64, j: u32) -> Result<f64> {
    check_lambda(lambda)?;
    let big_j = half_register(n)?;
    if j > big_j {
        return Err(Error::SpinOutOfRange { n, j });
    }
    let d = multiplicity(n, j)?;
    let width = 2 * j as i32 + 1;
    let pairs = (big_j - j) as i32;

    if lambda < SMALL_LAMBDA {
        // c₀ = c₁ = 1/2
        let ln_p = ln_big(&d) + (width as f64).ln() - n as f64 * core::f64::consts::LN_2;
        return Ok(ln_p.exp());
    }

    let (c0, c1) = eigenvalues(lambda);
    if n <= LOG_SPACE_ABOVE {
        let d = d.to_f64().unwrap_or(f64::INFINITY);
        let geometric = c1.powi(width) * one_minus_ratio_pow(lambda, width) / lambda;
        return Ok(d * (c0 * c1).powi(pairs) * geometric);
    }

    if pairs > 0 && c0 == 0.0 {
        return Ok(0.0);
    }
    let ln_geometric = width as f64 * c1.ln() + one_minus_ratio_pow(lambda, width).ln() - lambda.ln();
    let ln_pairs = if pairs > 0 {
        pairs as f64 * (c0 * c1).ln()
    } else {
        0.0
    };
    Ok((ln_big(&d) + ln_pairs + ln_geometric).exp())
}

/// Single-qubit fidelity of the `2j` qubits kept after outcome `j ≥ 1`.
///
/// `j = 0` keeps no qubits; it returns [`zero_block_fidelity`], the
/// `j → 0` continuation.
pub fn block_fidelity(lambda: f64, j: u32) -> Result<f64> {
    check_lambda(lambda)?;
    if j == 0 {
        return Ok(zero_block_fidelity(lambda));
    }
    if (1.0 - lambda).abs() < PURE_MARGIN {
        return Ok(1.0);
    }
    if lambda < SMALL_LAMBDA {
        return Ok(0.5);
    }
    let (_, c1) = eigenvalues(lambda);
    let two_j = 2.0 * j as f64;
    let width = 2 * j as i32 + 1;
    // c₁^{2j+1} / (c₁^{2j+1} - c₀^{2j+1})
    let lead = 1.0 / one_minus_ratio_pow(lambda, width);
    Ok(((two_j + 1.0) * lead - c1 / lambda) / two_j)
}

/// `f₀ = c₁/(c₁-c₀) + c₁c₀ ln(c₀/c₁)/(c₁-c₀)²`, the `j → 0` limit of the
/// block fidelity.
pub fn zero_block_fidelity(lambda: f64) -> f64 {
    if (1.0 - lambda).abs() < PURE_MARGIN {
        return 1.0;
    }
    if lambda < SMALL_LAMBDA {
        return 0.5;
    }
    if lambda < 0.25 {
        // 1/2 + Σ_k λ^{2k-1}/(4k²-1); the closed form cancels badly here.
        let mut sum = 0.5;
        let mut power = lambda;
        for k in 1..=40 {
            let kf = k as f64;
            sum += power / (4.0 * kf * kf - 1.0);
            power *= lambda * lambda;
        }
        return sum;
    }
    let (c0, c1) = eigenvalues(lambda);
    c1 / lambda - 2.0 * c1 * c0 * libm::atanh(lambda) / (lambda * lambda)
}

/// One row of [`BlockSpectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub j: u32,
    pub multiplicity: BigUint,
    pub probability: f64,
    /// `f_j` for `j ≥ 1`, the continuation `f₀` for `j = 0`.
    pub fidelity: f64,
}

/// Per-spin table of `(d_j, p_j, f_j)` for a given `(N, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    pub n: usize,
    pub lambda: f64,
    pub rows: Vec<SpectrumRow>,
}

impl BlockSpectrum {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        let big_j = half_register(n)?;
        check_lambda(lambda)?;
        let rows = (0..=big_j)
            .map(|j| {
                Ok(SpectrumRow {
                    j,
                    multiplicity: multiplicity(n, j)?,
                    probability: block_probability(n, lambda, j)?,
                    fidelity: block_fidelity(lambda, j)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, lambda, rows })
    }

    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).collect::<NeumaierSum>().value()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.probability).collect()
    }

    /// `D_N = Σ_j p_j · 2j / N`.
    pub fn distillation_yield(&self) -> f64 {
        let big_j = (self.n / 2) as f64;
        self.rows
            .iter()
            .map(|r| r.probability * r.j as f64 / big_j)
            .collect::<NeumaierSum>()
            .value()
    }

    /// `F̄_N = Σ_j p_j f_j`; the `j = 0` term is dropped unless `include_j0`.
    pub fn mean_fidelity(&self, include_j0: bool) -> f64 {
        self.rows
            .iter()
            .filter(|r| include_j0 || r.j > 0)
            .map(|r| r.probability * r.fidelity)
            .collect::<NeumaierSum>()
            .value()
    }
}

/// Expected fraction of qubits kept by the purification protocol.
pub fn distillation_yield(n: usize, lambda: f64) -> Result<f64> {
    Ok(BlockSpectrum::new(n, lambda)?.distillation_yield())
}

pub fn mean_fidelity(n: usize, lambda: f64, include_j0: bool) -> Result<f64> {
    Ok(BlockSpectrum::new(n, lambda)?.mean_fidelity(include_j0))
}

/// Leading large-`N` behaviour `λ + (1-λ)/(Nλ)` of the yield.
pub fn asymptotic_yield(n: usize, lambda: f64) -> f64 {
    lambda + (1.0 - lambda) / (n as f64 * lambda)
}

/// Leading large-`N` behaviour `1 - (1-λ)/(2Nλ²)` of the mean fidelity.
pub fn asymptotic_mean_fidelity(n: usize, lambda: f64) -> f64 {
    1.0 - (1.0 - lambda) / (2.0 * n as f64 * lambda * lambda)
}

/// Dicke weights of `ρ_j`: `w_m ∝ c₀^{j-m} c₁^{j+m}`, ordered `m = -j..=j`.
pub fn block_state_weights(lambda: f64, j: u32) -> Vec<f64> {
    let width = 2 * j as i32 + 1;
    if lambda < SMALL_LAMBDA {
        return alloc::vec![1.0 / width as f64; width as usize];
    }
    let (c0, c1) = eigenvalues(lambda);
    let norm = (c1 - c0) / (c1.powi(width) - c0.powi(width));
    (0..width)
        .map(|k| norm * c0.powi(2 * j as i32 - k) * c1.powi(k))
        .collect()
}

/// `ρ_j` on `2j` qubits, diagonal in the rotated Dicke basis `|j, m>_n̂`.
pub fn block_state_matrix(q: &MixedQubit, j: u32, cap: DenseCap) -> Result<DenseOperator> {
    let qubits = 2 * j as usize;
    cap.check(qubits)?;
    let rotation = q.rotation();
    let weights = block_state_weights(q.lambda(), j);
    let mut rho = DenseOperator::zeros(1 << qubits);
    for (k, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let m = k as i32 - j as i32;
        let v = dicke_state(j, m)?.collective_apply(&rotation)?;
        rho.add_outer(v.amplitudes(), v.amplitudes(), C64::new(*w, 0.0));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn multiplicity_examples() {
        let d = |n, j| multiplicity(n, j).unwrap().to_u64().unwrap();
        assert_eq!((d(2, 0), d(2, 1)), (1, 1));
        assert_eq!((d(4, 0), d(4, 1), d(4, 2)), (2, 3, 1));
        for n in (2..=40).step_by(2) {
            assert_eq!(d(n, (n / 2) as u32), 1);
        }
        assert!(matches!(multiplicity(4, 3), Err(Error::SpinOutOfRange { .. })));
        assert!(matches!(multiplicity(5, 0), Err(Error::OddQubitCount(5))));
    }

    #[test]
    fn multiplicity_is_exact_beyond_u64() {
        // C(200, 100) - C(200, 99) = C(200,100) / 101.
        let d = multiplicity(200, 0).unwrap();
        assert_eq!(d.clone() * 101u32, binomial(200, 100));
        assert!(d.bits() > 64);
    }

    #[test]
    fn completeness_exact() {
        for n in (2..=20).step_by(2) {
            assert_eq!(total_dimension(n).unwrap(), BigUint::one() << n);
        }
    }

    #[test]
    fn probability_examples() {
        assert_eq!(block_probability(6, 1.0, 3).unwrap(), 1.0);
        for j in 0..3 {
            assert_eq!(block_probability(6, 1.0, j).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(block_probability(2, 0.5, 0).unwrap(), 0.1875, epsilon = 1e-15);
        assert_abs_diff_eq!(block_probability(2, 0.5, 1).unwrap(), 0.8125, epsilon = 1e-15);
        for (j, expected) in [(0, 2.0 / 16.0), (1, 9.0 / 16.0), (2, 5.0 / 16.0)] {
            assert_abs_diff_eq!(block_probability(4, 0.0, j).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn log_space_agrees_with_direct_evaluation_at_the_switch() {
        // Independent direct product at N = 52 against the log-space branch.
        let n = 52;
        for lambda in [0.2, 0.5, 0.9] {
            let (c0, c1) = eigenvalues(lambda);
            for j in [0u32, 5, 13, 26] {
                let d = multiplicity(n, j).unwrap().to_f64().unwrap();
                let w = 2 * j as i32 + 1;
                let direct = d * (c0 * c1).powi(26 - j as i32) * (c1.powi(w) - c0.powi(w)) / lambda;
                let got = block_probability(n, lambda, j).unwrap();
                assert!((got - direct).abs() <= 1e-12 * direct.max(1e-300), "{lambda} {j}");
            }
        }
    }

    #[test]
    fn normalization_on_grid() {
        for n in (2..=40).step_by(2) {
            for i in 0..=20 {
                let lambda = i as f64 / 20.0;
                let s = BlockSpectrum::new(n, lambda).unwrap();
                assert!((s.total_probability() - 1.0).abs() < 1e-12, "n={n} λ={lambda}");
                assert!(s.rows.iter().all(|r| r.probability >= 0.0));
            }
        }
        for n in [100, 200, 400] {
            let s = BlockSpectrum::new(n, 0.6).unwrap();
            assert!((s.total_probability() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_examples() {
        for j in 1..10 {
            assert_eq!(block_fidelity(1.0, j).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(block_fidelity(0.5, 1).unwrap(), 0.75 * 0.875 / 0.8125, epsilon = 1e-15);
        for j in [1, 3, 10] {
            let a = block_fidelity(1e-6, j).unwrap();
            let b = block_fidelity(1e-7, j).unwrap();
            assert!((a - 0.5).abs() < 1e-4 && (b - 0.5).abs() < 1e-5);
            assert!(b < a);
            assert_eq!(block_fidelity(1e-9, j).unwrap(), 0.5);
        }
    }

    /// Reduced fidelity of the Dicke mixture: `Σ_k w_k · k/(2j)`.
    fn fidelity_by_dicke_average(lambda: f64, j: u32) -> f64 {
        let w = block_state_weights(lambda, j);
        w.iter()
            .enumerate()
            .map(|(k, wk)| wk * k as f64 / (2 * j) as f64)
            .sum()
    }

    #[test]
    fn closed_form_fidelity_matches_dicke_average() {
        for i in 1..20 {
            let lambda = i as f64 / 20.0;
            for j in 1..=30 {
                let f = block_fidelity(lambda, j).unwrap();
                assert!((f - fidelity_by_dicke_average(lambda, j)).abs() < 1e-12);
                assert!((0.5..=1.0).contains(&f));
            }
        }
    }

    #[test]
    fn fidelity_nondecreasing_in_j() {
        for i in 1..20 {
            let lambda = i as f64 / 20.0;
            let f: Vec<f64> = (1..=50).map(|j| block_fidelity(lambda, j).unwrap()).collect();
            assert!(f.windows(2).all(|w| w[1] >= w[0] - 1e-15), "λ={lambda}");
        }
    }

    #[test]
    fn two_qubit_fidelity_beats_input() {
        for i in 1..100 {
            let lambda = i as f64 / 100.0;
            let c1 = (1.0 + lambda) / 2.0;
            assert!(block_fidelity(lambda, 1).unwrap() > c1);
        }
    }

    #[test]
    fn zero_block_continuation() {
        // f₀ = 1/2 + Σ_k λ^{2k-1}/(4k²-1)
        for lambda in [0.01f64, 0.1, 0.3, 0.5, 0.9] {
            let series: f64 = (1..400)
                .map(|k| lambda.powi(2 * k - 1) / (4.0 * (k * k) as f64 - 1.0))
                .sum::<f64>()
                + 0.5;
            assert!((zero_block_fidelity(lambda) - series).abs() < 1e-10, "{lambda}");
        }
        assert_eq!(zero_block_fidelity(1.0), 1.0);
        assert_eq!(zero_block_fidelity(0.0), 0.5);
        assert_eq!(block_fidelity(0.4, 0).unwrap(), zero_block_fidelity(0.4));
    }

    #[test]
    fn yield_examples() {
        assert_abs_diff_eq!(distillation_yield(8, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(distillation_yield(2, 0.5).unwrap(), 0.8125, epsilon = 1e-15);
        assert!(distillation_yield(4, 0.0).unwrap() > 0.0);
        // The residual against λ + (1-λ)/(Nλ) is bounded by C/N² (and in fact
        // decays much faster).
        let lambda = 0.6;
        let scaled: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| {
                let r = distillation_yield(n, lambda).unwrap() - asymptotic_yield(n, lambda);
                r.abs() * (n * n) as f64
            })
            .collect();
        assert!(scaled.iter().all(|s| *s < 0.02));
        assert!(scaled.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn mean_fidelity_examples() {
        assert_abs_diff_eq!(mean_fidelity(10, 1.0, true).unwrap(), 1.0, epsilon = 1e-15);
        let part = mean_fidelity(2, 0.5, false).unwrap();
        assert_abs_diff_eq!(part, 0.8125 * (0.75 * 0.875 / 0.8125), epsilon = 1e-15);
        assert_abs_diff_eq!(part, 0.65625, epsilon = 1e-15);
        let full = mean_fidelity(2, 0.5, true).unwrap();
        assert_abs_diff_eq!(full - part, 0.1875 * zero_block_fidelity(0.5), epsilon = 1e-15);

        let lambda = 0.6;
        let ratio = |n: usize| {
            (1.0 - mean_fidelity(n, lambda, true).unwrap()) * 2.0 * n as f64 * lambda * lambda
                / (1.0 - lambda)
        };
        let r: Vec<f64> = [20, 80, 320, 1280].iter().map(|&n| ratio(n)).collect();
        assert!(r.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
        assert!((r[3] - 1.0).abs() < 0.01);
    }

    #[test]
    fn fidelity_residual_scales_quadratically_where_concentrated() {
        for lambda in [0.6, 0.8] {
            let res = |n| mean_fidelity(n, lambda, true).unwrap() - asymptotic_mean_fidelity(n, lambda);
            for n in [20, 40, 80] {
                let factor = res(n) / res(2 * n);
                assert!((3.5..=4.5).contains(&factor), "λ={lambda} n={n} factor={factor}");
            }
        }
    }

    #[test]
    fn block_state_matrix_examples() {
        let cap = DenseCap::default();
        let pure = block_state_matrix(&MixedQubit::along_z(1.0).unwrap(), 1, cap).unwrap();
        let mut expected = DenseOperator::zeros(4);
        expected[(3, 3)] = C64::new(1.0, 0.0);
        assert!(pure.max_abs_diff(&expected) < 1e-15);

        let flat = block_state_matrix(&MixedQubit::along_z(0.0).unwrap(), 1, cap).unwrap();
        let mut triplet = DenseOperator::zeros(4);
        for m in -1..=1 {
            let d = dicke_state(1, m).unwrap();
            triplet.add_outer(d.amplitudes(), d.amplitudes(), C64::new(1.0 / 3.0, 0.0));
        }
        assert!(flat.max_abs_diff(&triplet) < 1e-15);

        let q = MixedQubit::along_z(0.5).unwrap();
        let rho = block_state_matrix(&q, 1, cap).unwrap();
        let (c0, c1) = (0.25, 0.75);
        let z = c0 * c0 + c0 * c1 + c1 * c1;
        assert_abs_diff_eq!(rho[(0, 0)].re, c0 * c0 / z, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[(3, 3)].re, c1 * c1 / z, epsilon = 1e-15);
        let d0 = dicke_state(1, 0).unwrap();
        let mid = rho.expectation(d0.amplitudes(), d0.amplitudes()).re;
        assert_abs_diff_eq!(mid, c0 * c1 / z, epsilon = 1e-15);
        assert!(block_state_matrix(&q, 7, cap).is_err());
    }

    #[test]
    fn block_state_reduced_fidelity() {
        let cap = DenseCap::default();
        let d = crate::qubit::Direction::new(0.2, -0.5, 0.7).unwrap();
        for lambda in [0.2, 0.5, 0.9] {
            let q = MixedQubit::new(lambda, d).unwrap();
            for j in 1..=3u32 {
                let rho = block_state_matrix(&q, j, cap).unwrap();
                assert!((rho.trace().re - 1.0).abs() < 1e-12);
                let f = block_fidelity(lambda, j).unwrap();
                let first = rho.partial_trace(&[1]).unwrap();
                for k in 1..=2 * j as usize {
                    let reduced = rho.partial_trace(&[k]).unwrap();
                    assert!(reduced.max_abs_diff(&first) < 1e-12);
                    assert!((q.fidelity_of(&reduced) - f).abs() < 1e-10);
                }
            }
        }
    }
}
