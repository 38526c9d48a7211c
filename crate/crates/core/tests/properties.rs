use num_bigint::BigUint;
use proptest::prelude::*;
use schur_purify::analytics::{block_fidelity, block_probability, block_state_matrix, multiplicity};
use schur_purify::cloning::{
    estimation_lambda, mixed_cloning_fidelity, pure_cloning_fidelity, scaling_relation_check, CloneSettings,
    OutputCount,
};
use schur_purify::linalg::{DenseCap, DenseOperator};
use schur_purify::protocol::run_protocol;
use schur_purify::qubit::{Direction, MixedQubit};

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Direction::new(x, y, z).unwrap())
}

proptest! {
    #[test]
    fn probabilities_sum_to_one(half in 1usize..120, lambda in 0.0f64..=1.0) {
        let n = 2 * half;
        let total: f64 = (0..=half as u32).map(|j| block_probability(n, lambda, j).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "n={} total={}", n, total);
    }

    #[test]
    fn multiplicities_fill_the_register(half in 1usize..60) {
        let n = 2 * half;
        let total: BigUint = (0..=half as u32)
            .map(|j| multiplicity(n, j).unwrap() * BigUint::from(2 * j + 1))
            .sum();
        prop_assert_eq!(total, BigUint::from(1u8) << n);
    }

    #[test]
    fn fidelities_are_bounded_and_monotone(lambda in 1e-6f64..1.0) {
        let mut previous = 0.5;
        for j in 1..=50 {
            let f = block_fidelity(lambda, j).unwrap();
            prop_assert!((0.5..=1.0).contains(&f));
            prop_assert!(f >= previous - 1e-12);
            previous = f;
        }
    }

    #[test]
    fn pure_cloning_identity(j in 1u32..=50, extra in 0u64..10_000) {
        let m = 2 * j as u64 + extra;
        let f = pure_cloning_fidelity(j, OutputCount::Finite(m)).unwrap();
        let rhs = (j as f64 / (j as f64 + 1.0)) * (m as f64 + 2.0) / m as f64;
        prop_assert!((2.0 * f - 1.0 - rhs).abs() < 1e-13);
    }

    #[test]
    fn scaling_relation_holds(half in 1usize..40, extra in 0u64..500, lambda in 0.0f64..=1.0) {
        let n = 2 * half;
        let s = CloneSettings::new(n, OutputCount::Finite(n as u64 + extra), lambda).unwrap();
        prop_assert!(scaling_relation_check(&s).unwrap() < 1e-12);
    }

    #[test]
    fn cloning_fidelity_falls_with_more_outputs(half in 1usize..20, lambda in 0.01f64..=1.0) {
        let n = 2 * half;
        let at = |m| mixed_cloning_fidelity(&CloneSettings::new(n, m, lambda).unwrap()).unwrap();
        let limit = at(OutputCount::Infinite);
        let mut previous = f64::INFINITY;
        for m in [n as u64, n as u64 + 1, 2 * n as u64, 10 * n as u64, 1000 * n as u64] {
            let f = at(OutputCount::Finite(m));
            prop_assert!(f <= previous + 1e-15 && f >= limit - 1e-15);
            previous = f;
        }
        prop_assert!((2.0 * limit - 1.0 - estimation_lambda(n, lambda).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn block_states_are_normalized_and_symmetric(lambda in 0.0f64..=1.0, d in direction(), j in 1u32..=4) {
        let q = MixedQubit::new(lambda, d).unwrap();
        let rho = block_state_matrix(&q, j, DenseCap::default()).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.hermiticity_residual() < 1e-14);
        let first = rho.partial_trace(&[1]).unwrap();
        for k in 2..=2 * j as usize {
            prop_assert!(rho.partial_trace(&[k]).unwrap().max_abs_diff(&first) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product(a in direction(), b in direction(), la in 0.0f64..=1.0, lb in 0.0f64..=1.0) {
        let qa = MixedQubit::new(la, a).unwrap().density_matrix();
        let qb = MixedQubit::new(lb, b).unwrap().density_matrix();
        let prod: DenseOperator = qa.kron(&qb).kron(&qa);
        prop_assert!(prod.partial_trace(&[2]).unwrap().max_abs_diff(&qb) < 1e-14);
        prop_assert!(prod.partial_trace(&[1, 3]).unwrap().max_abs_diff(&qa.kron(&qa)) < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_is_seed_deterministic(half in 1usize..30, lambda in 0.0f64..=1.0, seed in any::<u64>()) {
        let q = MixedQubit::along_z(lambda).unwrap();
        let a = run_protocol(&q, 2 * half, 2000, seed).unwrap();
        let b = run_protocol(&q, 2 * half, 2000, seed).unwrap();
        prop_assert_eq!(a.histogram.iter().sum::<u64>(), 2000);
        prop_assert_eq!(a, b);
    }
}
