//! The acceptance suite: eleven criteria, each computed from scratch and
//! reported as one pass/fail line.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Cutoff, FieldSpec, RunConfig, Tolerances};
use crate::contour::Strip;
use crate::error::{Error, Result};
use crate::fixtures::{
    classical_m1, disk_norm_witness, family_fixture, linebundle_crossing, linebundle_generic, ClassicalExample, FIXTURE_NAMES,
};
use crate::grid::{gauss_legendre, LogGrid};
use crate::linalg::{c, eigenvalues, fro, CMat, CVec, C64, I};
use crate::pairing::{
    adjoint_contour, adjoint_family, adjoint_poly, cutoff_independence, adjoint_fiber_basis, flat_pairing, pairing_over,
    transition_smoothness,
};
use crate::pipeline::{fixture_outputs, frame_outputs, pairing_outputs, spectrum_outputs, symbol_outputs, varorder_outputs, Artifact};
use crate::spectra::{check_finite_specb, companion_solve, contour_solve, uniform_grid};
use crate::trace::{
    apply_indicial, assembled_frame, frame_continuation, singular_part_poly, to_trace_element, trace_fiber_basis, trace_fiber_data,
    xdx_endomorphism, SingularPart, TraceElement, TraceOptions, TraceTerm,
};
use crate::varorder::{
    admissible_decomposition, crossing_field, matrix_power, matrix_power_exp, symbol_estimate_check, trace_sobolev_norm, varorder_norm,
    BracketMetric, EndomorphismField, SymbolCheckOptions,
};
use crate::wedge::{indicial_operator, normal_family, FiberBasis};

/// Criterion numbers and short names.
pub const CRITERIA: [(u32, &str); 11] = [
    (1, "line-bundle spectrum"),
    (2, "classical traces"),
    (3, "collision frame"),
    (4, "pairing"),
    (5, "matrix powers"),
    (6, "admissible decompositions"),
    (7, "symbol estimates"),
    (8, "variable-order norms"),
    (9, "normal-family identities"),
    (10, "disk witness"),
    (11, "determinism"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] C{:<2} {:<26} {:>7.2}s  {}", self.id, self.name, self.seconds, self.detail)
    }
}

/// Run one criterion; errors count as failures.
pub fn run_criterion(id: u32) -> Result<CriterionResult> {
    let name = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, n)| *n)
        .ok_or_else(|| Error::InvalidInput(format!("no criterion {id}")))?;
    let t0 = Instant::now();
    let out = match id {
        1 => c1_spectrum(),
        2 => c2_classical(),
        3 => c3_collision(),
        4 => c4_pairing(),
        5 => c5_powers(),
        6 => c6_decomposition(),
        7 => c7_symbols(),
        8 => c8_norms(),
        9 => c9_normal_family(),
        10 => c10_disk(),
        _ => c11_determinism(),
    };
    let seconds = t0.elapsed().as_secs_f64();
    let (pass, detail) = match out {
        Ok(Check { pass, detail, limit }) => match limit {
            Some(l) if seconds > l => (false, format!("{detail}; runtime {seconds:.2}s exceeds {l}s")),
            _ => (pass, detail),
        },
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionResult { id, name, pass, detail, seconds })
}

/// All criteria in order.
pub fn run_suite() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id).expect("known criterion")).collect()
}

struct Check {
    pass: bool,
    detail: String,
    /// Runtime limit in seconds.
    limit: Option<f64>,
}

impl Check {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail, limit: None }
    }

    fn within(mut self, seconds: f64) -> Self {
        self.limit = Some(seconds);
        self
    }
}

/// Largest distance under a greedy nearest matching; infinite if the sizes differ.
fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("sizes agree");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn c1_spectrum() -> Result<Check> {
    let fx = family_fixture("linebundle-generic")?;
    let ex = linebundle_generic();
    let tol = Tolerances::default();
    let ct = fx.contour.build(256)?;
    let ys = uniform_grid(64);
    let (mut comp_err, mut cont_err, mut excluded_ok) = (0.0f64, 0.0f64, true);
    for &y in &ys {
        let want = ex.closed_form_spectrum(y)?;
        let comp = companion_solve(&fx.family, y, &fx.strip, &tol)?;
        let mut cont = contour_solve(&fx.family, y, &ct, 0, 7, &tol)?;
        cont.points.retain(|p| fx.strip.contains(p.sigma));
        comp_err = comp_err.max(multiset_distance(&expand(&comp.points), &want));
        cont_err = cont_err.max(multiset_distance(&expand(&cont.points), &want));
        // Mode-1 roots lie at +-2i sqrt(phi_jj), outside the strip.
        let all = crate::spectra::finite_eigenvalues(&fx.family.at(y), tol.rank_tol)?;
        let outside: Vec<C64> = all.iter().copied().filter(|s| !fx.strip.contains(*s)).collect();
        let (p11, p22) = (ex.phi[0][0].eval(y).re, ex.phi[1][1].eval(y).re);
        let mode1: Vec<C64> = [p11, p22].iter().flat_map(|p| [I * 2.0 * p.sqrt(), -I * 2.0 * p.sqrt()]).collect();
        excluded_ok &= want.len() == 4 && multiset_distance(&outside, &mode1) < 1e-8;
    }
    let pass = comp_err <= 1e-8 && cont_err <= 1e-8 && excluded_ok;
    Ok(Check::new(
        pass,
        format!("64 points: companion err {comp_err:.1e}, contour err {cont_err:.1e} (<= 1e-8); mode-1 excluded: {excluded_ok}"),
    )
    .within(10.0))
}

fn expand(points: &[crate::spectra::SpectrumPoint]) -> Vec<C64> {
    points.iter().flat_map(|p| std::iter::repeat_n(p.sigma, p.alg_mult)).collect()
}

fn c2_classical() -> Result<Check> {
    let tol = Tolerances::default();
    let opts = TraceOptions::default();
    let mut worst_resid = 0.0f64;
    let mut worst_spec = 0.0f64;
    let mut worst_xdx = 0.0f64;
    let mut shape_ok = true;
    let cases: [(u32, &[f64]); 4] = [(1, &[1.0]), (2, &[1.0]), (3, &[1.0]), (2, &[1.0, 2.0])];
    for (m, diag) in cases {
        let r = diag.len();
        let ex = ClassicalExample::new(m, FieldSpec::diagonal(diag), vec![], 0.5)?;
        let fam = ex.classical_family();
        let strip = ex.strip();
        for y in [0.0, 2.0] {
            let spec = companion_solve(&fam, y, &strip, &tol)?;
            let want: Vec<C64> = (0..m).flat_map(|j| std::iter::repeat_n(c(0.0, -(j as f64)), r)).collect();
            worst_spec = worst_spec.max(multiset_distance(&expand(&spec.points), &want));
            shape_ok &= spec.points.iter().all(|p| p.alg_mult == r && p.partials == vec![1; r]);
            let basis = trace_fiber_basis(&fam, y, &strip, &opts)?;
            let poly = fam.at(y);
            for e in &basis {
                worst_resid = worst_resid.max(apply_indicial(&poly, m, e).coeff_norm());
                // Each element is a combination of monomials x^j, j < m.
                shape_ok &= e.terms.iter().all(|t| {
                    t.ell == 0 && (t.sigma.re.abs() < 1e-8) && (t.sigma.im + t.sigma.im.round().abs()).abs() < 1e-8 && -t.sigma.im < m as f64 - 0.5
                });
            }
            shape_ok &= basis.len() == m as usize * r;
            let mut ev = eigenvalues(&xdx_endomorphism(&basis, tol.rank_tol)?);
            ev.sort_by(|a, b| a.re.total_cmp(&b.re));
            let want_ev: Vec<C64> = (0..m).flat_map(|j| std::iter::repeat_n(c(j as f64, 0.0), r)).collect();
            worst_xdx = worst_xdx.max(multiset_distance(&ev, &want_ev));
        }
    }
    let pass = worst_resid <= 1e-12 && worst_spec <= 1e-8 && worst_xdx <= 1e-8 && shape_ok;
    Ok(Check::new(
        pass,
        format!(
            "m=1,2,3 (r=1) and m=2 (r=2): spectrum err {worst_spec:.1e}, indicial residual {worst_resid:.1e} (<= 1e-12), x d/dx eigenvalue err {worst_xdx:.1e}, monomial shape {shape_ok}"
        ),
    )
    .within(2.0))
}

/// Distance between singular parts with nearby poles, per pole order.
fn singular_part_distance(a: &SingularPart, b: &SingularPart) -> f64 {
    if a.poles.len() != b.poles.len() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for p in &a.poles {
        let Some(q) = b.poles.iter().min_by(|x, y| (x.sigma - p.sigma).norm().total_cmp(&(y.sigma - p.sigma).norm())) else {
            return f64::INFINITY;
        };
        worst = worst.max((p.sigma - q.sigma).norm());
        let n = p.coeffs.len().max(q.coeffs.len());
        for k in 0..n {
            let zero = CVec::zeros(a.dim);
            let u = p.coeffs.get(k).unwrap_or(&zero);
            let v = q.coeffs.get(k).unwrap_or(&zero);
            worst = worst.max((u - v).norm());
        }
    }
    worst
}

fn c3_collision() -> Result<Check> {
    let fx = family_fixture("linebundle-crossing")?;
    let ex = linebundle_crossing();
    let opts = TraceOptions::default();
    let ct = fx.contour.build(256)?;
    let y0 = 0.0;
    let data = trace_fiber_data(&fx.family.at(y0), y0, &fx.strip, Some(&ct), &opts)?;
    let double_pole = data.singular_parts.iter().any(|sp| sp.max_order() >= 2) && data.elements.iter().any(|e| e.terms.iter().any(|t| t.ell >= 1));

    // Full rank on a grid through the collision, seeded on either side.
    let ys: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.05).collect();
    let fa = frame_continuation(&fx.family, ys[0], &ys, &ct, &fx.strip, &opts)?;
    let fb = frame_continuation(&fx.family, ys[ys.len() - 1], &ys, &ct, &fx.strip, &opts)?;
    let full_rank = (0..ys.len()).all(|i| fa.rank_at(i) == 4 && fb.rank_at(i) == 4);
    let adj = adjoint_family(&fx.family, &fx.strip);
    let fadj = frame_continuation(&adj, y0, &ys, &adjoint_contour(&ct, &fx.strip), &fx.strip, &opts)?;
    let cut = Cutoff::default();
    let grid = LogGrid::for_cutoff(cut.x_a, cut.x_b, 32)?;
    let tf = transition_smoothness(&fx.family, &fx.strip, &fa, &fb, &fadj, &cut, &grid)?;
    let near = |y: f64| (y - y0).abs() < 0.11;
    let mut off: Vec<f64> = tf.report.profile.iter().filter(|(y, _)| !near(*y)).map(|p| p.1).collect();
    off.sort_by(f64::total_cmp);
    let median = off[off.len() / 2];
    let at_collision = tf.report.profile.iter().filter(|(y, _)| near(*y)).map(|p| p.1).fold(0.0, f64::max);
    let smooth = at_collision <= 10.0 * median;

    // Printed forms against the resolvent: reproduce each element as the
    // singular part of F(., y0)^{-1} applied to its own entire part.
    let r = ex.collision_frame_reference(y0)?;
    let poly = fx.family.at(y0);
    let mut printed_err = 0.0f64;
    for (p, o) in r.printed.iter().zip(&r.oracle) {
        let (h, leftover) = p.multiply_entire_part(&poly);
        let sp = singular_part_poly(&poly, y0, &ct, &h, &fx.strip, &opts)?;
        let (e_sp, _) = to_trace_element(&sp).normalized();
        let (e_p, _) = to_trace_element(p).normalized();
        printed_err = printed_err.max(element_distance(&e_sp, &e_p)).max(leftover);
        printed_err = printed_err.max(singular_part_distance(p, o));
    }
    // The reference spans the same space as the computed fiber basis.
    let span = span_residual(&data.elements, &r.printed.iter().map(to_trace_element).collect::<Vec<_>>());
    let pass = double_pole && full_rank && smooth && printed_err <= 1e-6 && span <= 1e-6;
    Ok(Check::new(
        pass,
        format!(
            "double pole at y0: {double_pole}; continued frames full rank on [-0.5, 0.5]: {full_rank}; transition second difference near y0 {at_collision:.1e} vs off-collision median {median:.1e} (<= 10x); printed vs resolvent {printed_err:.1e}; span residual {span:.1e} (<= 1e-6)"
        ),
    ))
}

/// Largest coefficient difference after aligning terms by `(sigma, ell)`.
fn element_distance(a: &TraceElement, b: &TraceElement) -> f64 {
    let key = |t: &TraceTerm, u: &TraceTerm| (t.sigma - u.sigma).norm() < 1e-6 && t.ell == u.ell;
    let mut worst = 0.0f64;
    for t in &a.terms {
        let d = match b.terms.iter().find(|u| key(t, u)) {
            Some(u) => (&t.coeff - &u.coeff).norm(),
            None => t.coeff.norm(),
        };
        worst = worst.max(d);
    }
    for u in &b.terms {
        if !a.terms.iter().any(|t| key(t, u)) {
            worst = worst.max(u.coeff.norm());
        }
    }
    worst
}

/// Relative least-squares residual of `extra` in the span of `basis`, by sampling.
fn span_residual(basis: &[TraceElement], extra: &[TraceElement]) -> f64 {
    let xs: Vec<f64> = (0..24).map(|k| 0.05 + 0.9 * k as f64 / 23.0).collect();
    let a = CMat::from_columns(&basis.iter().map(|e| e.sample_column(&xs)).collect::<Vec<_>>());
    let b = CMat::from_columns(&extra.iter().map(|e| e.sample_column(&xs)).collect::<Vec<_>>());
    let x = crate::linalg::lstsq(&a, &b, 1e-13);
    fro(&(&a * x - &b)) / fro(&b)
}

/// Vector polynomial in `s` with coefficients in ascending order.
#[derive(Clone)]
struct VPoly(Vec<CVec>);

impl VPoly {
    fn eval(&self, s: f64) -> CVec {
        self.0.iter().rev().fold(CVec::zeros(self.0[0].len()), |acc, c| acc * c_re(s) + c)
    }

    fn deriv(&self) -> Self {
        let n = self.0[0].len();
        if self.0.len() == 1 {
            return Self(vec![CVec::zeros(n)]);
        }
        Self(self.0.iter().enumerate().skip(1).map(|(k, c)| c * c_re(k as f64)).collect())
    }

    /// `(1 - s^2)^6 * q(s)`, compactly supported in `[-1, 1]` and `C^5`.
    fn bump(q: Vec<CVec>) -> Self {
        let n = q[0].len();
        let mut b = vec![1.0];
        for _ in 0..6 {
            let mut nb = vec![0.0; b.len() + 2];
            for (k, v) in b.iter().enumerate() {
                nb[k] += v;
                nb[k + 2] -= v;
            }
            b = nb;
        }
        let mut out = vec![CVec::zeros(n); b.len() + q.len() - 1];
        for (i, bi) in b.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                out[i + j] += qj * c_re(*bi);
            }
        }
        Self(out)
    }
}

fn c_re(x: f64) -> C64 {
    c(x, 0.0)
}

/// `|(A phi, psi) - (phi, A* psi)|` for random bumps in `t = ln x`, with
/// `A = x^{-m} P(x D_x)` and the inner product `\int u v^H x^{2 gamma} dx/x`.
fn adjoint_defect(poly: &crate::family::MatrixPoly, strip: &Strip, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let adj = adjoint_poly(poly, strip);
    let r = poly.dim();
    let (t_lo, t_hi) = (0.2f64.ln(), 0.9f64.ln());
    let (mid, half) = (0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo));
    let rand_vec = |rng: &mut ChaCha8Rng| CVec::from_iterator(r, (0..r).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)));
    let phi = VPoly::bump((0..4).map(|_| rand_vec(rng)).collect());
    let psi = VPoly::bump((0..4).map(|_| rand_vec(rng)).collect());
    // Derivatives in t: d/dt = (1/half) d/ds, x D_x = -i d/dt.
    let ders = |p: &VPoly, n: usize| {
        let mut out = vec![p.clone()];
        for _ in 0..n {
            let d = out.last().expect("nonempty").deriv();
            out.push(d);
        }
        out
    };
    let deg = poly.coeffs.len() - 1;
    let dphi = ders(&phi, deg);
    let dpsi = ders(&psi, deg);
    let apply = |coeffs: &[CMat], d: &[VPoly], s: f64| {
        coeffs.iter().enumerate().fold(CVec::zeros(r), |acc, (j, cj)| acc + cj * d[j].eval(s) * ((-I / half).powu(j as u32)))
    };
    let (mut lhs, mut rhs, mut scale) = (C64::default(), C64::default(), 0.0f64);
    for (s, w) in gauss_legendre(96) {
        let t = mid + half * s;
        let weight = w * half * ((2.0 * strip.gamma - strip.order as f64) * t).exp();
        let ap = apply(&poly.coeffs, &dphi, s);
        let bq = apply(&adj.coeffs, &dpsi, s);
        let (p0, q0) = (phi.eval(s), psi.eval(s));
        lhs += q0.dotc(&ap) * weight;
        rhs += bq.dotc(&p0) * weight;
        scale += ap.norm() * q0.norm() * weight.abs();
    }
    ((lhs - rhs).norm(), scale)
}

fn c4_pairing() -> Result<Check> {
    let opts = TraceOptions::default();
    let cut = Cutoff::default();
    let cut2 = Cutoff { x_a: 0.5, x_b: 1.0 };
    let grid = LogGrid::for_cutoff(cut.x_a, cut.x_b, 32)?;
    let ys = uniform_grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut max_cond, mut max_dev, mut max_adj) = (0.0f64, 0.0f64, 0.0f64);
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for name in FIXTURE_NAMES.iter().filter(|n| **n != "disk-witness") {
        let fx = family_fixture(name)?;
        let rep = check_finite_specb(&fx.family, &ys, &fx.strip, 1e-6, 1e-12)?;
        if !rep.ok {
            skipped.push(*name);
            continue;
        }
        used.push(*name);
        let ct = fx.contour.build(256)?;
        let mats = pairing_over(&fx.family, &ys, &fx.strip, Some(&ct), &cut, &grid, &opts)?;
        max_cond = mats.iter().map(|p| p.cond).fold(max_cond, f64::max);
        let y = 0.4;
        let us = trace_fiber_data(&fx.family.at(y), y, &fx.strip, Some(&ct), &opts)?.elements;
        let vs = adjoint_fiber_basis(&fx.family, y, &fx.strip, Some(&ct), &opts)?;
        max_dev = max_dev.max(cutoff_independence(&fx.family, y, &fx.strip, &us, &vs, (&cut, &cut2), 32)?);
        for y in [0.3, 2.1] {
            let (d, _) = adjoint_defect(&fx.family.at(y), &fx.strip, &mut rng);
            max_adj = max_adj.max(d);
        }
    }
    // Hand value [1, 1] = i for A = x^{-1} x D_x.
    let one = TraceElement::new(1, vec![TraceTerm { sigma: C64::default(), ell: 0, coeff: CVec::from_element(1, c(1.0, 0.0)) }]);
    let m1 = classical_m1();
    let p1 = m1.classical_family().at(0.0);
    let hand = (flat_pairing(&p1, &m1.strip(), &one, &one, &cut, &grid)? - I).norm();
    let pass = max_cond <= 1e6 && max_dev <= 1e-6 && hand <= 1e-8 && max_adj <= 1e-8 && !used.is_empty();
    Ok(Check::new(
        pass,
        format!(
            "fixtures {used:?} (skipped {skipped:?}): max cond {max_cond:.2e} (<= 1e6), cutoff deviation {max_dev:.1e} (<= 1e-6), hand value err {hand:.1e} (<= 1e-8), adjoint defect {max_adj:.1e} (<= 1e-8)"
        ),
    ))
}

fn diag(v: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| c_re(x))))
}

fn c5_powers() -> Result<Check> {
    let d = fro(&(matrix_power(&diag(&[0.5, 1.5]), 4.0)? - diag(&[2.0, 8.0])));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut semi, mut oracle) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let a = CMat::from_fn(4, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let r1 = 0.5 + 4.5 * rng.random::<f64>();
        let r2 = 0.5 + 4.5 * rng.random::<f64>();
        let p12 = matrix_power(&a, r1 * r2)?;
        let prod = matrix_power(&a, r1)? * matrix_power(&a, r2)?;
        semi = semi.max(fro(&(&prod - &p12)) / fro(&p12));
        oracle = oracle.max(fro(&(&p12 - matrix_power_exp(&a, r1 * r2))) / fro(&p12));
    }
    let mut jordan = 0.0f64;
    for (lam, rho) in [(0.3f64, 2.0f64), (-0.7, 9.0), (1.2, 0.25)] {
        let a = CMat::from_row_slice(2, 2, &[c_re(lam), c_re(1.0), c_re(0.0), c_re(lam)]);
        let p = rho.powf(lam);
        let want = CMat::from_row_slice(2, 2, &[c_re(p), c_re(p * rho.ln()), c_re(0.0), c_re(p)]);
        jordan = jordan.max(fro(&(matrix_power(&a, rho)? - &want)) / fro(&want));
    }
    let pass = d <= 1e-10 && semi <= 1e-10 && oracle <= 1e-10 && jordan <= 1e-10;
    Ok(Check::new(
        pass,
        format!("diag(2,8) err {d:.1e}; 100 random 4x4: semigroup {semi:.1e}, vs exponential {oracle:.1e}; Jordan block {jordan:.1e} (all <= 1e-10)"),
    ))
}

fn c6_decomposition() -> Result<Check> {
    let field = crossing_field();
    let (mut ident, mut compat) = (0.0f64, 0.0f64);
    let mut spans = Vec::new();
    for y0 in [0.0, 1.0, PI / 2.0, 3.0 * PI / 2.0] {
        let dec = admissible_decomposition(&field, y0, 0.25)?;
        ident = ident.max(dec.identity_defect());
        for rho in [2.0, 10.0, 1e3] {
            compat = compat.max(dec.power_compatibility(rho)?);
        }
        spans.push(format!("{}:{:.2}", dec.disks.len(), dec.u.1 - dec.u.0));
    }
    let pass = ident <= 1e-10 && compat <= 1e-10;
    Ok(Check::new(
        pass,
        format!("crossing field, delta 1/4, 4 base points (disks:|U| {}): projection identities {ident:.1e}, power compatibility {compat:.1e} (<= 1e-10)", spans.join(" ")),
    ))
}

fn c7_symbols() -> Result<Check> {
    let opts = SymbolCheckOptions::default();
    let rows = symbol_estimate_check(&crossing_field(), &BracketMetric::unit(), &opts)?;
    let all = rows.iter().all(|r| r.pass && r.slope <= -(r.beta as f64) + opts.delta * r.alpha as f64 + 0.1);
    let zero = rows.iter().filter(|r| r.alpha == 0).all(|r| r.slope <= -(r.beta as f64) + 0.1);
    let margin = rows
        .iter()
        .map(|r| -(r.beta as f64) + opts.delta * r.alpha as f64 + 0.1 - r.slope)
        .fold(f64::INFINITY, f64::min);
    Ok(Check::new(
        all && zero,
        format!("{} (alpha, beta) pairs with |alpha|,|beta| <= 2: all within bound {all}, alpha = 0 meets delta = 0 {zero}; smallest margin {margin:.3}", rows.len()),
    )
    .within(60.0))
}

/// `(sum_eta <eta>^{2 w} |u^(eta)|^2)^{1/2}` by a direct DFT.
fn weighted_fourier_norm(u: &[C64], w: f64) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for k in 0..n {
        let eta = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        let coef: C64 = u
            .iter()
            .enumerate()
            .map(|(j, v)| v * C64::from_polar(1.0, -eta * 2.0 * PI * j as f64 / n as f64))
            .sum::<C64>()
            / n as f64;
        acc += (1.0 + eta * eta).powf(w) * coef.norm_sqr();
    }
    acc.sqrt()
}

fn random_band_limited(rng: &mut ChaCha8Rng, n: usize, r: usize, band: i32) -> Vec<CVec> {
    let modes: Vec<(i32, CVec)> = (-band..=band)
        .map(|e| (e, CVec::from_iterator(r, (0..r).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))))
        .collect();
    (0..n)
        .map(|j| {
            let y = 2.0 * PI * j as f64 / n as f64;
            modes.iter().fold(CVec::zeros(r), |acc, (e, v)| acc + v * C64::from_polar(1.0, *e as f64 * y))
        })
        .collect()
}

fn c8_norms() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 64;
    let metric = BracketMetric::unit();
    let (a0, a1, s) = (0.3, -0.7, 0.25);
    let u = random_band_limited(&mut rng, n, 2, 12);
    let got = varorder_norm(&u, &EndomorphismField::constant(diag(&[a0, a1])), &metric, s)?;
    let comp = |i: usize, w: f64| weighted_fourier_norm(&u.iter().map(|v| v[i]).collect::<Vec<_>>(), w);
    let want = (comp(0, a0 + s).powi(2) + comp(1, a1 + s).powi(2)).sqrt();
    let diag_err = (got - want).abs() / want;

    // Single mode through the crossing field: exact by construction.
    let eta0 = 5.0;
    let v = CVec::from_column_slice(&[c(0.6, -0.2), c(0.3, 0.5)]);
    let field = crossing_field();
    let single: Vec<CVec> = (0..n).map(|j| &v * C64::from_polar(1.0, eta0 * 2.0 * PI * j as f64 / n as f64)).collect();
    let got1 = varorder_norm(&single, &field, &metric, s)?;
    let bracket = (1.0 + eta0 * eta0).sqrt();
    let want1 = ((0..n)
        .map(|j| {
            let a = field.at(2.0 * PI * j as f64 / n as f64) + CMat::identity(2, 2) * c_re(s);
            (matrix_power_exp(&a, bracket) * &v).norm_squared()
        })
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let single_err = (got1 - want1).abs() / want1;

    // Trace-Sobolev norm of the classical m = 1 frame (constants) against H^{1/2}.
    let m1 = classical_m1();
    let ys = uniform_grid(n);
    let frame = assembled_frame(&m1.classical_family(), &ys, &m1.strip(), &TraceOptions::default())?;
    let coeffs = random_band_limited(&mut rng, n, 1, 12);
    let got2 = trace_sobolev_norm(&frame, &coeffs, &metric, 0.5, 1e-10)?;
    let want2 = weighted_fourier_norm(&coeffs.iter().map(|v| v[0]).collect::<Vec<_>>(), 0.5);
    let trace_err = (got2 - want2).abs() / want2;
    let pass = diag_err <= 1e-12 && single_err <= 1e-12 && trace_err <= 1e-12;
    Ok(Check::new(
        pass,
        format!("constant diagonal {diag_err:.1e}, single mode {single_err:.1e}, classical m=1 trace norm vs H^(1/2) {trace_err:.1e} (relative, <= 1e-12)"),
    ))
}

fn c9_normal_family() -> Result<Check> {
    let mut checked = 0;
    let mut failures = Vec::new();
    for name in FIXTURE_NAMES.iter().filter(|n| **n != "disk-witness") {
        let fx = family_fixture(name)?;
        let basis = FiberBasis::new(&fx.operator.fiber)?;
        for y in [0.0, 1.1, 4.0] {
            checked += 1;
            if normal_family(&fx.operator, &basis, y, 0.0)? != indicial_operator(&fx.operator, &basis, y)? {
                failures.push(format!("{name}: eta=0 at y={y}"));
            }
            for eta in [0.75, -1.5] {
                for rho in [2.0, 4.0, 0.5] {
                    checked += 1;
                    let lhs = normal_family(&fx.operator, &basis, y, rho * eta)?;
                    let rhs = normal_family(&fx.operator, &basis, y, eta)?.conjugate_dilation(rho);
                    if lhs != rhs {
                        failures.push(format!("{name}: kappa at y={y} eta={eta} rho={rho}"));
                    }
                }
            }
        }
    }
    Ok(Check::new(failures.is_empty(), format!("{checked} exact term-list comparisons over 5 fixtures; mismatches: {failures:?}")))
}

fn c10_disk() -> Result<Check> {
    let reports = [8, 16, 32, 64].iter().map(|&n| disk_norm_witness(n)).collect::<Result<Vec<_>>>()?;
    let (l0, u0) = (reports[0].lower, reports[0].upper);
    let drift = reports.iter().map(|r| ((r.lower / l0 - 1.0).abs()).max((r.upper / u0 - 1.0).abs())).fold(0.0, f64::max);
    // Log-log slope of the harmonic graph ratio over 4 <= n <= 64.
    let last = &reports[3];
    let pts: Vec<(f64, f64)> =
        last.modes.iter().filter(|m| m.n >= 4).map(|m| ((m.n as f64).ln(), m.graph_ratio.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let monotone = reports.windows(2).all(|w| w[1].graph_sup > w[0].graph_sup);
    let pass = drift <= 0.2 && slope >= 1.0 && monotone;
    let brackets: Vec<String> = reports.iter().map(|r| format!("N={}:[{:.3},{:.3}]", r.n_max, r.lower, r.upper)).collect();
    Ok(Check::new(
        pass,
        format!("{}; drift {:.1}% (<= 20%); graph ratio log-log slope {slope:.2} (>= 1)", brackets.join(" "), 100.0 * drift),
    )
    .within(30.0))
}

/// Every command's files for a fixed set of small configurations.
pub fn reference_outputs() -> Result<Vec<Artifact>> {
    let cfg = |name: &str, grid: usize| RunConfig { fixture: Some(name.into()), grid, ..RunConfig::default() };
    let mut out = Vec::new();
    let mut add = |prefix: &str, files: Vec<Artifact>| {
        out.extend(files.into_iter().map(|a| Artifact { name: format!("{prefix}/{}", a.name), contents: a.contents }));
    };
    add("spectrum", spectrum_outputs(&cfg("linebundle-generic", 16))?);
    add("frame", frame_outputs(&cfg("linebundle-crossing", 16))?);
    add("pairing", pairing_outputs(&cfg("linebundle-generic", 8))?);
    add("varorder", varorder_outputs(&cfg("linebundle-generic", 8), None)?);
    add("symbol", symbol_outputs(&RunConfig::default())?);
    for name in ["linebundle-crossing", "disk-witness"] {
        add(&format!("fixture-{name}"), fixture_outputs(name, &cfg(name, 16))?);
    }
    Ok(out)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn c11_determinism() -> Result<Check> {
    let many = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let a = in_pool(1, reference_outputs)??;
    let b = in_pool(many, reference_outputs)??;
    let c = in_pool(many, reference_outputs)??;
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .zip(&c)
        .filter(|((x, y), z)| x != y || y != z)
        .map(|((x, _), _)| x.name.as_str())
        .collect();
    let pass = a.len() == b.len() && b.len() == c.len() && differing.is_empty();
    let bytes: usize = a.iter().map(|x| x.contents.len()).sum();
    Ok(Check::new(pass, format!("{} files ({bytes} bytes), 1 vs {many} threads and a repeat run; differing: {differing:?}", a.len())))
}
