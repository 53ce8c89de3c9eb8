use proptest::prelude::*;
use wedgetrace::contour::{contour_integral, resolvent_apply, Contour, Shape};
use wedgetrace::fixtures::family_fixture;
use wedgetrace::linalg::{fro, CMat, C64};
use wedgetrace::spectra::probe_block;

const FAMILIES: [&str; 5] = ["classical-m1", "classical-m2", "linebundle-generic", "linebundle-crossing", "linebundle-quartic"];

/// `(1/(2 pi i)) \oint s^p F(y, s)^{-1} V ds` on `ct`, stacked for `p = 0, 1`.
fn first_moment(name: &str, y: f64, ct: &Contour) -> CMat {
    let fx = family_fixture(name).unwrap();
    let poly = fx.family.at(y);
    let v = probe_block(poly.dim(), poly.dim(), 3);
    contour_integral(ct, |z| {
        let x = resolvent_apply(&poly, z, &v, 1e-9)?;
        let mut out = CMat::zeros(2 * x.nrows(), x.ncols());
        out.rows_mut(0, x.nrows()).copy_from(&x);
        out.rows_mut(x.nrows(), x.nrows()).copy_from(&(x * z));
        Ok(out)
    })
    .unwrap()
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    fro(&(a - b)) / fro(b).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn doubling_nodes_changes_little(k in 0usize..FAMILIES.len(), y in 0.0f64..std::f64::consts::TAU) {
        let fx = family_fixture(FAMILIES[k]).unwrap();
        let ct = fx.contour.build(256).unwrap();
        let a = first_moment(FAMILIES[k], y, &ct);
        let b = first_moment(FAMILIES[k], y, &ct.with_nodes(512));
        prop_assert!(rel(&a, &b) < 1e-10, "{} y = {}: {:e}", FAMILIES[k], y, rel(&a, &b));
    }

    #[test]
    fn ellipse_enclosing_the_same_poles_gives_the_same_integral(y in 0.0f64..std::f64::consts::TAU, squash in 0.9f64..1.0) {
        // Generic fixture: strip roots within 0.9 of the origin, the next ones beyond 1.39.
        let circle = Contour::circle(C64::default(), 1.1, 512).unwrap();
        let ellipse = Contour::new(Shape::Ellipse { center: C64::default(), semi_re: 0.5, semi_im: 1.1 * squash }, 1024).unwrap();
        let a = first_moment("linebundle-generic", y, &circle);
        let b = first_moment("linebundle-generic", y, &ellipse);
        prop_assert!(rel(&a, &b) < 1e-10, "{:e}", rel(&a, &b));
    }
}
