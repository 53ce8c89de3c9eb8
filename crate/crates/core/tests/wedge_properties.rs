use proptest::prelude::*;
use wedgetrace::fixtures::{classical_m1, classical_m2, family_fixture};
use wedgetrace::linalg::{c, C64, I};
use wedgetrace::wedge::{indicial_family, indicial_operator, normal_family, wedge_principal_symbol, FiberBasis};

const FAMILIES: [&str; 5] = ["classical-m1", "classical-m2", "linebundle-generic", "linebundle-crossing", "linebundle-quartic"];

#[test]
fn indicial_family_has_degree_at_most_m() {
    for name in FAMILIES {
        let fx = family_fixture(name).unwrap();
        let op = &fx.operator;
        let (fam, _) = indicial_family(op, &FiberBasis::new(&op.fiber).unwrap()).unwrap();
        assert!(fam.degree() <= op.m as usize, "{name}");
        assert!(fam.coeffs().len() <= op.m as usize + 1, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn classical_symbols_are_the_ordinary_principal_symbols(x in 0.05f64..2.0, y in 0.0f64..std::f64::consts::TAU, xi in -3.0f64..3.0, eta in -3.0f64..3.0) {
        prop_assume!(xi.abs() + eta.abs() > 1e-3);
        // Interior covector (xi, eta) is the wedge covector (x xi, x eta); the symbol carries x^m.
        let m1 = wedge_principal_symbol(&classical_m1().to_wedge_spec(), (x, y, 0.0), (x * xi, x * eta, 0.0)).unwrap();
        let want1 = x * (c(xi, 0.0) + I * eta);
        prop_assert!((m1[(0, 0)] - want1).norm() <= 1e-12 * (1.0 + want1.norm()));
        let m2 = wedge_principal_symbol(&classical_m2().to_wedge_spec(), (x, y, 0.0), (x * xi, x * eta, 0.0)).unwrap();
        let want2 = C64::from(x * x * ((2.0 + y.sin()) * xi * xi + eta * eta));
        prop_assert!((m2[(0, 0)] - want2).norm() <= 1e-12 * (1.0 + want2.norm()));
    }

    #[test]
    fn normal_family_at_zero_is_the_indicial_operator(k in 0usize..FAMILIES.len(), y in 0.0f64..std::f64::consts::TAU) {
        let fx = family_fixture(FAMILIES[k]).unwrap();
        let basis = FiberBasis::new(&fx.operator.fiber).unwrap();
        prop_assert_eq!(normal_family(&fx.operator, &basis, y, 0.0).unwrap(), indicial_operator(&fx.operator, &basis, y).unwrap());
    }
}
