//! Multi-threaded drivers over the core library. Trial ranges are split into
//! contiguous chunks; because every trial owns its RNG stream and results
//! are merged as integer histograms, the output does not depend on the
//! number of workers.

use std::ops::Range;

use rayon::prelude::*;
use schur_purify::blocks::{build_spin_sector, SchurBasis};
use schur_purify::protocol::{merge_histograms, DenseProtocol, OutcomeSampler, SimulationSummary};
use schur_purify::{DenseCap, Error, MixedQubit};

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Splits `0..trials` into `parts` contiguous ranges.
pub fn split(trials: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = parts.max(1) as u64;
    let step = trials.div_ceil(parts).max(1);
    (0..parts)
        .map(|i| (i * step).min(trials)..((i + 1) * step).min(trials))
        .filter(|r| !r.is_empty())
        .collect()
}

pub fn simulate(q: &MixedQubit, n: usize, trials: u64, seed: u64, workers: usize) -> Result<SimulationSummary, Error> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1"));
    }
    let sampler = OutcomeSampler::new(q, n)?;
    let chunks = split(trials, workers * 4);
    let parts: Vec<Vec<u64>> =
        pool(workers).install(|| chunks.into_par_iter().map(|r| sampler.histogram(seed, r)).collect());
    Ok(sampler.summarize(seed, merge_histograms(&parts)))
}

/// Returns the summary together with the per-label counts.
pub fn simulate_dense(
    dense: &DenseProtocol,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<(SimulationSummary, Vec<u64>), Error> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1"));
    }
    let chunks = split(trials, workers * 4);
    let parts: Vec<Vec<u64>> =
        pool(workers).install(|| chunks.into_par_iter().map(|r| dense.label_histogram(seed, r)).collect());
    let counts = merge_histograms(&parts);
    Ok((dense.summarize(seed, &counts), counts))
}

/// Builds each spin sector on its own worker.
pub fn build_basis(n: usize, cap: DenseCap, workers: usize) -> Result<SchurBasis, Error> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    if n % 2 == 1 {
        return Err(Error::OddQubitCount(n));
    }
    cap.check(n)?;
    let sectors = pool(workers).install(|| {
        (0..=(n / 2) as u32)
            .into_par_iter()
            .map(|j| build_spin_sector(n, j, cap))
            .collect::<Result<Vec<_>, _>>()
    })?;
    SchurBasis::from_sectors(n, sectors)
}
