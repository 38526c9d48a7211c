//! Compensated summation and chi-square tail probabilities.

use alloc::vec::Vec;


/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-15;

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - libm::lgamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - libm::lgamma(a)).exp() * h
}

/// Upper tail `P(χ²_dof ≥ statistic)`.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, statistic / 2.0)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `observed` counts against `expected` probabilities.
///
/// Bins with zero expected probability must be empty; they are skipped.
pub fn chi_square_goodness_of_fit(observed: &[u64], expected: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let mut stat = NeumaierSum::default();
    let mut bins = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            if o > 0 {
                stat.add(f64::INFINITY);
            }
            continue;
        }
        bins += 1;
        let e = p * total as f64;
        let diff = o as f64 - e;
        stat.add(diff * diff / e);
    }
    let statistic = stat.value();
    let dof = bins.saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    }
}

/// Two-sample chi-square homogeneity test for binned counts with unequal
/// sample sizes.
pub fn chi_square_two_sample(first: &[u64], second: &[u64]) -> ChiSquare {
    assert_eq!(first.len(), second.len());
    let r: f64 = first.iter().sum::<u64>() as f64;
    let s: f64 = second.iter().sum::<u64>() as f64;
    let (k1, k2) = ((s / r).sqrt(), (r / s).sqrt());
    let mut stat = NeumaierSum::default();
    let mut bins = 0usize;
    for (&a, &b) in first.iter().zip(second) {
        if a + b == 0 {
            continue;
        }
        bins += 1;
        let diff = k1 * a as f64 - k2 * b as f64;
        stat.add(diff * diff / (a + b) as f64);
    }
    let statistic = stat.value();
    let dof = bins.saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    }
}

/// Mean and standard error of a weighted sample given as `(count, value)` groups.
pub fn grouped_mean_and_error(groups: &[(u64, f64)]) -> (f64, f64) {
    let total: u64 = groups.iter().map(|g| g.0).sum();
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let t = total as f64;
    let mean = groups
        .iter()
        .map(|&(c, v)| c as f64 * v)
        .collect::<NeumaierSum>()
        .value()
        / t;
    if total < 2 {
        return (mean, 0.0);
    }
    let ss = groups
        .iter()
        .map(|&(c, v)| c as f64 * (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .value();
    let var = ss / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Sample mean and standard error.
pub fn mean_and_error(samples: &[f64]) -> (f64, f64) {
    let groups: Vec<(u64, f64)> = samples.iter().map(|&x| (1, x)).collect();
    grouped_mean_and_error(&groups)
}
