//! Block decomposition of `N` identically prepared mixed qubits, the optimal
//! purification protocol built on it, and the resulting mixed-state cloning
//! and estimation fidelities.
//!
//! The crate is `no_std` with `alloc`. Closed forms in [`analytics`] and
//! [`cloning`] work for `N` in the hundreds; everything that materializes a
//! `2^N`-dimensional object ([`blocks`], [`oracle`], the dense path of
//! [`protocol`]) is bounded by a [`DenseCap`].
//!
//! Conventions: qubit 1 is the most significant bit of a basis index,
//! `σ_z = diag(−1, 1)` so that `|1>` is spin up, and a qubit with Bloch vector
//! `λ n̂` has eigenvalues `c₁ = (1+λ)/2` on `|1_n̂>` and `c₀ = (1−λ)/2` on `|0_n̂>`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod blocks;
pub mod cloning;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod oracle;
pub mod protocol;
pub mod quadrature;
pub mod qubit;
pub mod stats;

pub use analytics::{
    block_fidelity, block_probability, block_state_matrix, distillation_yield, mean_fidelity, multiplicity,
    BlockSpectrum,
};
pub use blocks::{block_projector, block_swap, build_schur_basis, BlockLabel, SchurBasis};
pub use cloning::{CloneSettings, OutputCount};
pub use error::{Error, Result};
pub use linalg::{DenseCap, DenseOperator, SingleQubitOp, StateVector, C64};
pub use protocol::{run_protocol, run_protocol_dense, OutcomeRecord, SimulationSummary};
pub use qubit::{Direction, MixedQubit};
