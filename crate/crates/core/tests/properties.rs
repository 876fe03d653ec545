use multiconc::bound::{
    concurrence_pure, cut_terms, purity_table, purity_table_pure, v_expectation, v_expectation_pair,
};
use multiconc::hilbert::{invert_permutation, permute_operator, permute_vector};
use multiconc::measurement::{parity_distribution, purities_from_distribution};
use multiconc::observable::{build_v, expectation_product, expectation_two_copy};
use multiconc::states::{haar_random_pure, random_mixed_ensemble};
use multiconc::{DensityMatrix, HilbertStructure, SubsystemMask};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dims_strategy(max_sites: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 2..=max_sites)
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

fn random_local_unitary(s: &HilbertStructure, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.dims()
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, &d| acc.kronecker(&random_unitary(d, &mut rng)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permutation_preserves_norm_and_inverts(dims in prop::collection::vec(2usize..=3, 1..=4), seed in any::<u64>()) {
        let total: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..dims.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let m = DMatrix::from_fn(total, total, |_, _| Complex64::new(rng.random(), rng.random()));
        let out = permute_operator(&m, &dims, &perm).unwrap();
        // entries are moved, never combined
        let sorted = |x: &DMatrix<Complex64>| {
            let mut v: Vec<(f64, f64)> = x.iter().map(|z| (z.re, z.im)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        prop_assert_eq!(sorted(&out), sorted(&m));
        prop_assert!((out.norm() - m.norm()).abs() <= 1e-12 * m.norm());
        let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        prop_assert_eq!(permute_operator(&out, &out_dims, &invert_permutation(&perm)).unwrap(), m);

        let v = DVector::from_fn(total, |_, _| Complex64::new(rng.random(), 0.0));
        let pv = permute_vector(&v, &dims, &perm).unwrap();
        prop_assert_eq!(permute_vector(&pv, &out_dims, &invert_permutation(&perm)).unwrap(), v);
    }

    #[test]
    fn pure_tightness(dims in dims_strategy(4), seed in any::<u64>()) {
        let s = HilbertStructure::new(dims).unwrap();
        let psi = haar_random_pure(&s, seed);
        let c = concurrence_pure(&psi).unwrap().value();
        let v = v_expectation(&purity_table_pure(&psi).unwrap());
        prop_assert!((v - c * c).abs() <= 1e-9);
        prop_assert!(((v.max(0.0)).sqrt() - c).abs() <= 1e-6);
    }

    #[test]
    fn lattice_matches_brute_force(dims in prop::collection::vec(2usize..=3, 2..=3), seed in any::<u64>(), k in 1usize..6) {
        let s = HilbertStructure::new(dims).unwrap();
        prop_assume!(s.dim() <= 18);
        let (_, rho) = random_mixed_ensemble(&s, k, seed).unwrap();
        let fast = v_expectation(&purity_table(&rho).unwrap());
        let slow = expectation_two_copy(&rho, &build_v(&s).unwrap()).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-10);
    }

    #[test]
    fn product_pair_matches_brute_force(seed in any::<u64>()) {
        let s = HilbertStructure::new(vec![2, 3]).unwrap();
        let psi = haar_random_pure(&s, seed);
        let phi = haar_random_pure(&s, seed.wrapping_add(1));
        let fast = v_expectation_pair(&psi, &phi).unwrap();
        let slow = expectation_product(&psi, &phi, &build_v(&s).unwrap()).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-10);
    }

    #[test]
    fn bipartite_sum_consistency(dims in dims_strategy(4), seed in any::<u64>(), k in 1usize..5) {
        let s = HilbertStructure::new(dims).unwrap();
        let (_, rho) = random_mixed_ensemble(&s, k, seed).unwrap();
        let t = purity_table(&rho).unwrap();
        let n = s.sites() as i32;
        let sum: f64 = cut_terms(&t).unwrap().iter().map(|c| c.v_cut).sum();
        prop_assert!((v_expectation(&t) - 2f64.powi(2 - n) * sum).abs() <= 1e-10);
    }

    #[test]
    fn parity_round_trip(dims in dims_strategy(4), seed in any::<u64>(), k in 1usize..5) {
        let s = HilbertStructure::new(dims).unwrap();
        let (_, rho) = random_mixed_ensemble(&s, k, seed).unwrap();
        let t = purity_table(&rho).unwrap();
        let d = parity_distribution(&t).unwrap();
        prop_assert!(d.probabilities().iter().all(|&p| p >= 0.0));
        prop_assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let back = purities_from_distribution(&d).unwrap();
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn local_unitary_invariance(dims in prop::collection::vec(2usize..=3, 2..=3), seed in any::<u64>()) {
        let s = HilbertStructure::new(dims).unwrap();
        let (_, rho) = random_mixed_ensemble(&s, 3, seed).unwrap();
        let u = random_local_unitary(&s, seed ^ 0x5eed);
        let rotated = DensityMatrix::new(s.clone(), &u * rho.matrix() * u.adjoint()).unwrap();
        let before = v_expectation(&purity_table(&rho).unwrap());
        let after = v_expectation(&purity_table(&rotated).unwrap());
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn maximally_mixed_bound_is_negative(dims in dims_strategy(5)) {
        let s = HilbertStructure::new(dims).unwrap();
        let psi = haar_random_pure(&s, 1);
        let rho = psi.to_density().depolarize(1.0).unwrap();
        prop_assert!(v_expectation(&purity_table(&rho).unwrap()) < 0.0);
    }

    #[test]
    fn partial_trace_composition(seed in any::<u64>(), b in 0u64..8, c in 0u64..8) {
        let s = HilbertStructure::qubits(3).unwrap();
        let (_, rho) = random_mixed_ensemble(&s, 4, seed).unwrap();
        let b = SubsystemMask::new(b, 3).unwrap();
        let c = SubsystemMask::new(c & !b.bits(), 3).unwrap();
        // trace out B, then C from what is left, versus B and C at once
        let keep_after_b = b.complement();
        let keep_final = SubsystemMask::new(keep_after_b.bits() & !c.bits(), 3).unwrap();
        prop_assume!(!keep_after_b.is_empty());
        let stage = rho.partial_trace(keep_after_b).unwrap();
        let kept_sites: Vec<usize> = keep_after_b.sites_iter().collect();
        let inner: Vec<usize> = kept_sites.iter().enumerate().filter(|(_, s)| keep_final.contains(**s)).map(|(i, _)| i).collect();
        let inner_mask = SubsystemMask::from_sites(&inner, kept_sites.len()).unwrap();
        let two_step = stage.reduce(inner_mask);
        let direct = rho.reduce(keep_final);
        prop_assert!((two_step - direct).norm() <= 1e-12);
    }
}
