use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use steerlat::bases::{load_basis_set, mub_set, random_unitary, random_unitary_with, save_basis_set};
use steerlat::bounds::bounds_general;
use steerlat::majorization::{combine, majorizes, CombineOp};
use steerlat::omega::{omega_exact, omega_profile, ur_bound_vector};
use steerlat::states::{witness, DensityMatrix};
use steerlat::thresholds::iso_threshold;
use steerlat::{BasisSet, CVector, ProbVector};

fn random_set(d: usize, n: usize, seed: u64) -> BasisSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BasisSet::new((0..n).map(|_| random_unitary_with(d, &mut rng).unwrap()).collect()).unwrap()
}

fn random_state(d: usize, seed: u64) -> CVector {
    random_unitary(d, seed).unwrap().vector(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn omega_profile_shape(d in 2usize..=4, n in 1usize..=3, seed in any::<u64>()) {
        let bs = random_set(d, n, seed);
        let profile: Vec<f64> = omega_profile(&bs).unwrap().iter().map(|r| r.value).collect();
        prop_assert!((profile[0] - 1.0).abs() < 1e-9);
        prop_assert!((profile[n * d - 1] - n as f64).abs() < 1e-9);
        for (k, w) in profile.windows(2).enumerate() {
            prop_assert!(w[1] >= w[0] - 1e-9 && w[1] <= w[0] + 1.0 + 1e-9, "L={}", k + 2);
        }
        for (k, v) in profile.iter().enumerate() {
            prop_assert!(*v >= (k + 1) as f64 / d as f64 - 1e-9);
        }
    }

    #[test]
    fn omega_is_unitarily_invariant(d in 2usize..=3, n in 2usize..=3, l in 1usize..=5, seed in any::<u64>()) {
        let bs = random_set(d, n, seed);
        let l = l.min(n * d);
        let u = random_unitary(d, seed ^ 0x5eed).unwrap();
        let moved = BasisSet::new(bs.bases().iter().map(|b| b.rotated(u.matrix()).unwrap()).collect()).unwrap();
        let a = omega_exact(&bs, l).unwrap().value;
        let b = omega_exact(&moved, l).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn bounds_dominate_omega(d in 2usize..=4, n in 2usize..=3, seed in any::<u64>()) {
        let bs = random_set(d, n, seed);
        for l in 1..=d * (n - 1) {
            let omega = omega_exact(&bs, l).unwrap().value;
            let b = bounds_general(&bs, l).unwrap();
            prop_assert!(omega <= b.lambda.min(b.gamma) + 1e-9);
        }
    }

    #[test]
    fn ur_bound_majorizes_every_pure_state(d in 2usize..=4, n in 1usize..=3, seed in any::<u64>()) {
        let bs = random_set(d, n, seed);
        let s = ur_bound_vector(&bs).unwrap();
        let psi = random_state(d, seed.wrapping_add(1));
        let mut acc: Option<ProbVector> = None;
        for b in bs.bases() {
            let probs: Vec<f64> = b.vectors().map(|v| v.dotc(&psi).norm_sqr()).collect();
            let p = ProbVector::from_weights(probs).unwrap();
            acc = Some(match acc {
                None => p,
                Some(q) => combine(&q, &p, CombineOp::DirectSum).unwrap(),
            });
        }
        let joint = ProbVector::with_total(acc.unwrap().components().to_vec(), n as f64).unwrap();
        prop_assert!(majorizes(&s, &joint).unwrap());
    }

    #[test]
    fn product_states_are_never_flagged(d in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let bs = mub_set(d, n).unwrap();
        let a = random_state(d, seed);
        let b = random_state(d, seed ^ 1);
        let rho = DensityMatrix::product(&(&a * a.adjoint()), &(&b * b.adjoint())).unwrap();
        prop_assert!(!witness(&rho, &bs, &bs).unwrap().steerable);
    }

    #[test]
    fn isotropic_threshold_is_increasing(d in 2usize..=7, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let lo = 1.0 / d as f64;
        let (a, b) = (lo + (1.0 - lo) * x.min(y), lo + (1.0 - lo) * x.max(y));
        prop_assert!(iso_threshold(d, a).unwrap() <= iso_threshold(d, b).unwrap() + 1e-15);
    }
}

#[test]
fn basis_set_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.json");
    let bs = random_set(3, 3, 11);
    save_basis_set(&bs, &path).unwrap();
    let back = load_basis_set(&path).unwrap();
    for (x, y) in bs.bases().iter().zip(back.bases()) {
        assert!((x.matrix() - y.matrix()).norm() < 1e-15);
    }
    assert_eq!(omega_exact(&bs, 4).unwrap().value, omega_exact(&back, 4).unwrap().value);
}
