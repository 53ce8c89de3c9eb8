use proptest::prelude::*;
use wedgetrace::config::Cutoff;
use wedgetrace::fixtures::family_fixture;
use wedgetrace::grid::LogGrid;
use wedgetrace::linalg::{c, C64};
use wedgetrace::pairing::{adjoint_fiber_basis, pairing_values};
use wedgetrace::trace::{trace_fiber_data, TraceElement, TraceOptions};

struct Fiber {
    poly: wedgetrace::family::MatrixPoly,
    strip: wedgetrace::contour::Strip,
    us: Vec<TraceElement>,
    vs: Vec<TraceElement>,
}

fn fiber(name: &str, y: f64) -> Fiber {
    let fx = family_fixture(name).unwrap();
    let opts = TraceOptions::default();
    let ct = fx.contour.build(256).unwrap();
    let us = trace_fiber_data(&fx.family.at(y), y, &fx.strip, Some(&ct), &opts).unwrap().elements;
    let vs = adjoint_fiber_basis(&fx.family, y, &fx.strip, Some(&ct), &opts).unwrap();
    Fiber { poly: fx.family.at(y), strip: fx.strip, us, vs }
}

fn pair(f: &Fiber, u: &TraceElement, v: &TraceElement, grid: &LogGrid) -> C64 {
    let cut = Cutoff::default();
    pairing_values(&f.poly, &f.strip, std::slice::from_ref(u), std::slice::from_ref(v), &cut, grid).unwrap()[(0, 0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pairing_is_sesquilinear(y in 0.1f64..3.0, ar in -2.0f64..2.0, ai in -2.0f64..2.0, i in 0usize..4, j in 0usize..4, k in 0usize..4) {
        let f = fiber("linebundle-crossing", y);
        let grid = LogGrid::for_cutoff(0.3, 0.9, 32).unwrap();
        let alpha = c(ar, ai);
        let (u1, u2, v) = (&f.us[i], &f.us[(i + 1) % 4], &f.vs[j]);
        let lhs = pair(&f, &u1.scale(alpha).add(u2), v, &grid);
        let rhs = alpha * pair(&f, u1, v, &grid) + pair(&f, u2, v, &grid);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "linear: {} vs {}", lhs, rhs);
        let (v1, v2) = (&f.vs[k], &f.vs[(k + 1) % 4]);
        let lhs = pair(&f, u1, &v1.scale(alpha).add(v2), &grid);
        let rhs = alpha.conj() * pair(&f, u1, v1, &grid) + pair(&f, u1, v2, &grid);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "conjugate linear: {} vs {}", lhs, rhs);
    }

    #[test]
    fn pairing_does_not_depend_on_grid_refinement(y in 0.0f64..std::f64::consts::TAU, name in prop::sample::select(vec!["linebundle-generic", "classical-m2"])) {
        let f = fiber(name, y);
        let coarse = LogGrid::for_cutoff(0.3, 0.9, 24).unwrap();
        let fine = LogGrid::for_cutoff(0.3, 0.9, 64).unwrap();
        let cut = Cutoff::default();
        let a = pairing_values(&f.poly, &f.strip, &f.us, &f.vs, &cut, &coarse).unwrap();
        let b = pairing_values(&f.poly, &f.strip, &f.us, &f.vs, &cut, &fine).unwrap();
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-10 * scale, "{:e}", d / scale);
    }
}
