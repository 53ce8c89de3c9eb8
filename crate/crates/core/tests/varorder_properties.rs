use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wedgetrace::linalg::{c, fro, norm2, CMat, CVec};
use wedgetrace::varorder::{admissible_decomposition, crossing_field, matrix_power, varorder_norm, BracketMetric, EndomorphismField};

fn random_matrix(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random matrix scaled to spectral norm `r`, so its spectrum lies in the disk of radius `r`.
fn in_disk(n: usize, seed: u64, r: f64) -> CMat {
    let m = random_matrix(n, seed);
    let s = norm2(&m);
    m * c(r / s, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrix_power_is_a_semigroup(seed in any::<u64>(), r in 0.1f64..2.0, l1 in -1.386f64..1.386, l2 in -1.386f64..1.386) {
        let a = in_disk(4, seed, r);
        let (r1, r2) = (l1.exp(), l2.exp());
        let lhs = matrix_power(&a, r1).unwrap() * matrix_power(&a, r2).unwrap();
        let rhs = matrix_power(&a, r1 * r2).unwrap();
        prop_assert!(fro(&(&lhs - &rhs)) <= 1e-10 * fro(&rhs).max(1.0), "{:e}", fro(&(lhs - rhs)));
    }

    #[test]
    fn power_at_one_is_identity(seed in any::<u64>(), r in 0.1f64..2.0) {
        let a = in_disk(4, seed, r);
        let p = matrix_power(&a, 1.0).unwrap();
        prop_assert!(fro(&(p - CMat::identity(4, 4))) <= 1e-10);
    }

    #[test]
    fn projections_hold_throughout_u(y0 in prop::sample::select(vec![0.0, 1.0, std::f64::consts::FRAC_PI_2]), t in 0.0f64..1.0, rho in 0.25f64..100.0) {
        let field = crossing_field();
        let dec = admissible_decomposition(&field, y0, 0.25).unwrap();
        let y = if dec.full_circle { t * std::f64::consts::TAU } else { dec.u.0 + t * (dec.u.1 - dec.u.0) };
        prop_assert!(dec.contains(y));
        let a = field.at(y);
        let ps = dec.projections(y).unwrap();
        let n = a.nrows();
        let sum = ps.iter().fold(CMat::zeros(n, n), |acc, p| acc + p);
        prop_assert!(fro(&(sum - CMat::identity(n, n))) <= 1e-10);
        let pw = matrix_power(&a, rho).unwrap();
        let split = ps.iter().fold(CMat::zeros(n, n), |acc, p| acc + p * &pw * p);
        for p in &ps {
            prop_assert!(fro(&(p * p - p)) <= 1e-10);
            prop_assert!(fro(&(p * &a - &a * p)) <= 1e-10);
        }
        prop_assert!(fro(&(&pw - split)) <= 1e-10 * fro(&pw));
    }

    #[test]
    fn norm_is_monotone_in_s(seed in any::<u64>(), s1 in -1.0f64..1.0, ds in 0.0f64..1.0) {
        // Hermitian field: normal with real spectrum.
        let h = random_matrix(2, seed);
        let field = EndomorphismField::constant((&h + h.adjoint()) * c(0.5, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        // Modes |eta| <= 4 sampled on 32 points, well below the aliasing band.
        let modes: Vec<(f64, CVec)> = (-4..=4)
            .map(|e| (e as f64, CVec::from_fn(2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))))
            .collect();
        let u: Vec<CVec> = (0..32)
            .map(|j| {
                let y = std::f64::consts::TAU * j as f64 / 32.0;
                modes.iter().fold(CVec::zeros(2), |acc, (e, v)| acc + v * c(0.0, e * y).exp())
            })
            .collect();
        let metric = BracketMetric::unit();
        let n1 = varorder_norm(&u, &field, &metric, s1).unwrap();
        let n2 = varorder_norm(&u, &field, &metric, s1 + ds).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-12), "{} > {}", n1, n2);
    }
}
