use proptest::prelude::*;
use wedgetrace::config::Tolerances;
use wedgetrace::contour::argument_count;
use wedgetrace::fixtures::{family_fixture, FamilyFixture};
use wedgetrace::linalg::{vnorm, C64};
use wedgetrace::spectra::{companion_solve, contour_solve, uniform_grid, Spectrum};

const FAMILIES: [&str; 5] = ["classical-m1", "classical-m2", "linebundle-generic", "linebundle-crossing", "linebundle-quartic"];

const NODES: usize = 256;

fn strip_contour_spectrum(fx: &FamilyFixture, y: f64) -> Spectrum {
    let ct = fx.contour.build(NODES).unwrap();
    let mut s = contour_solve(&fx.family, y, &ct, 0, 7, &Tolerances::default()).unwrap();
    s.points.retain(|p| fx.strip.contains(p.sigma));
    s
}

/// Greedy matching distance between two multisets of equal size.
fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn expanded(s: &Spectrum) -> Vec<C64> {
    s.points.iter().flat_map(|p| std::iter::repeat_n(p.sigma, p.alg_mult)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn companion_and_contour_agree(k in 0usize..FAMILIES.len(), y in 0.05f64..3.0) {
        let fx = family_fixture(FAMILIES[k]).unwrap();
        let tol = Tolerances::default();
        let comp = companion_solve(&fx.family, y, &fx.strip, &tol).unwrap();
        let cont = strip_contour_spectrum(&fx, y);
        prop_assert_eq!(comp.total_multiplicity(), cont.total_multiplicity());
        let d = multiset_distance(&expanded(&comp), &expanded(&cont));
        prop_assert!(d <= 1e-8, "{} at y = {}: distance {:e}", fx.name, y, d);
    }

    #[test]
    fn eigenvectors_have_small_residuals(k in 0usize..FAMILIES.len(), y in 0.0f64..std::f64::consts::TAU) {
        let fx = family_fixture(FAMILIES[k]).unwrap();
        let tol = Tolerances::default();
        for s in [companion_solve(&fx.family, y, &fx.strip, &tol).unwrap(), strip_contour_spectrum(&fx, y)] {
            for p in &s.points {
                let m = fx.family.eval(y, p.sigma);
                for v in p.eigvecs.column_iter() {
                    let v = v.into_owned();
                    let r = vnorm(&(&m * &v)) / vnorm(&v);
                    prop_assert!(r <= tol.residual_tol, "{} y = {} sigma = {}: {:e}", fx.name, y, p.sigma, r);
                }
            }
        }
    }
}

#[test]
fn argument_count_is_an_integer_constant_along_the_grid() {
    for name in FAMILIES {
        let fx = family_fixture(name).unwrap();
        let ct = fx.contour.build(NODES).unwrap();
        let counts: Vec<C64> =
            uniform_grid(32).iter().map(|&y| argument_count(&fx.family.at(y), &ct, 1e-9).unwrap()).collect();
        let first = counts[0].re.round();
        for (k, z) in counts.iter().enumerate() {
            assert!((z - C64::new(first, 0.0)).norm() < 1e-6, "{name} point {k}: {z}");
        }
    }
}
