//! Formal adjoint of the indicial family and the boundary pairing
//! `[u, v] = (A w u, w v) - (w u, A* w v)` between trace fibers of `A` and
//! of its adjoint, computed by quadrature over the cutoff transition.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Cutoff;
use crate::contour::{Contour, Shape, Strip};
use crate::error::{Error, Result};
use crate::family::{MatrixPoly, MatrixPolyFamily, TrigMatrix};
use crate::grid::LogGrid;
use crate::linalg::{binom, cond, factorial, inverse, CMat, C64, I};
use crate::trace::{trace_fiber_data, TraceElement, TraceFrame, TraceOptions};

/// Relative change under grid refinement above which a pairing is rejected.
pub const REFINE_TOL: f64 = 1e-6;
/// Condition number above which a pairing matrix counts as singular.
pub const PAIRING_COND_LIMIT: f64 = 1e10;

/// Formal adjoint with respect to `(u, v) = \int u v^H x^{2 gamma} dx/x`:
/// `F*(s) = sum_j C_j^H (s + i (m - 2 gamma))^j`.
pub fn adjoint_family(family: &MatrixPolyFamily, strip: &Strip) -> MatrixPolyFamily {
    let shift = I * (strip.order as f64 - 2.0 * strip.gamma);
    let adj: Vec<TrigMatrix> = family.coeffs().iter().map(TrigMatrix::adjoint).collect();
    let n = family.dim();
    let coeffs = (0..adj.len())
        .map(|q| {
            let mut acc = TrigMatrix::zeros(n, n);
            for (j, cj) in adj.iter().enumerate().skip(q) {
                let f = shift.powu((j - q) as u32) * binom(j, q);
                for (&k, m) in &cj.terms {
                    acc.add_term(k, &(m * f));
                }
            }
            acc
        })
        .collect();
    MatrixPolyFamily::new(coeffs).expect("same shape as the input")
}

/// Adjoint of a single polynomial, same convention as [`adjoint_family`].
pub fn adjoint_poly(poly: &MatrixPoly, strip: &Strip) -> MatrixPoly {
    let shift = I * (strip.order as f64 - 2.0 * strip.gamma);
    let d = poly.coeffs.len();
    let coeffs = (0..d)
        .map(|q| {
            (q..d).fold(CMat::zeros(poly.dim(), poly.dim()), |acc, j| {
                acc + poly.coeffs[j].adjoint() * (shift.powu((j - q) as u32) * binom(j, q))
            })
        })
        .collect();
    MatrixPoly { coeffs }
}

/// Contour enclosing the adjoint spectrum `conj(s) - i (m - 2 gamma)` of
/// everything enclosed by `ct`.
pub fn adjoint_contour(ct: &Contour, strip: &Strip) -> Contour {
    let shift = -I * (strip.order as f64 - 2.0 * strip.gamma);
    let map = |z: C64| z.conj() + shift;
    let shape = match ct.shape {
        Shape::Circle { center, radius } => Shape::Circle { center: map(center), radius },
        Shape::Ellipse { center, semi_re, semi_im } => Shape::Ellipse { center: map(center), semi_re, semi_im },
        Shape::Rectangle { center, half_re, half_im } => Shape::Rectangle { center: map(center), half_re, half_im },
    };
    Contour { shape, nodes: ct.nodes }
}

/// Validated cutoff: `w = 1 - S(s)` with the quintic smoothstep
/// `S(s) = 10 s^3 - 15 s^4 + 6 s^5` and `s = ln(x / x_a) / ln(x_b / x_a)`.
pub fn check_cutoff(cut: &Cutoff) -> Result<()> {
    if cut.x_a > 0.0 && cut.x_a < cut.x_b && cut.x_b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("cutoff needs 0 < x_a < x_b, got ({}, {})", cut.x_a, cut.x_b)))
    }
}

/// `(x d/dx)^k w` at `x = e^t` for `k = 0..=kmax`.
pub fn cutoff_derivatives(cut: &Cutoff, t: f64, kmax: usize) -> Vec<f64> {
    let len = (cut.x_b / cut.x_a).ln();
    let s = (t - cut.x_a.ln()) / len;
    let mut out = vec![0.0; kmax + 1];
    if s <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if s >= 1.0 {
        return out;
    }
    // Coefficients of S in ascending powers.
    let mut p = vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
    let horner = |p: &[f64]| p.iter().rev().fold(0.0, |acc, &a| acc * s + a);
    out[0] = 1.0 - horner(&p);
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        p = p.iter().enumerate().skip(1).map(|(d, a)| a * d as f64).collect();
        *slot = -horner(&p) / len.powi(k as i32);
    }
    out
}

/// Leibniz pieces `P^{(k)}(x D_x) u / k!` for `k = 1..=deg`.
fn leibniz_pieces(poly: &MatrixPoly, u: &TraceElement) -> Vec<TraceElement> {
    let mut out = Vec::new();
    let mut d = poly.clone();
    for k in 1..poly.coeffs.len() {
        d = d.derivative();
        out.push(u.apply_poly(&d).scale(C64::new(1.0 / factorial(k), 0.0)));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn pairing_on_grid(
    poly: &MatrixPoly,
    adj: &MatrixPoly,
    weight: f64,
    m: u32,
    us: &[TraceElement],
    vs: &[TraceElement],
    cut: &Cutoff,
    grid: &LogGrid,
) -> CMat {
    let deg = poly.coeffs.len() - 1;
    let up: Vec<Vec<TraceElement>> = us.iter().map(|u| leibniz_pieces(poly, u)).collect();
    let vp: Vec<Vec<TraceElement>> = vs.iter().map(|v| leibniz_pieces(adj, v)).collect();
    let r = poly.dim();
    let mut g = CMat::zeros(us.len(), vs.len());
    for (&t, &wt) in grid.t.iter().zip(&grid.w) {
        let om = cutoff_derivatives(cut, t, deg);
        if om[1..].iter().all(|&d| d == 0.0) {
            continue;
        }
        let x = t.exp();
        let commutator = |pieces: &[TraceElement]| {
            pieces.iter().enumerate().fold(crate::linalg::CVec::zeros(r), |acc, (k, p)| {
                acc + p.eval(x) * ((-I).powu(k as u32 + 1) * om[k + 1])
            })
        };
        let a: Vec<_> = up.iter().map(|p| commutator(p)).collect();
        let b: Vec<_> = vp.iter().map(|p| commutator(p)).collect();
        let uval: Vec<_> = us.iter().map(|u| u.eval(x)).collect();
        let vval: Vec<_> = vs.iter().map(|v| v.eval(x)).collect();
        let f = wt * x.powf(weight - m as f64) * om[0];
        for j in 0..us.len() {
            for l in 0..vs.len() {
                let first = vval[l].dotc(&a[j]);
                let second = b[l].dotc(&uval[j]);
                g[(j, l)] += (first - second) * f;
            }
        }
    }
    g
}

/// Matrix of pairings `[u_j, v_l]` with the refinement check applied.
pub fn pairing_values(
    poly: &MatrixPoly,
    strip: &Strip,
    us: &[TraceElement],
    vs: &[TraceElement],
    cut: &Cutoff,
    grid: &LogGrid,
) -> Result<CMat> {
    check_cutoff(cut)?;
    if grid.x_min() > cut.x_a || grid.x_max() < cut.x_b {
        return Err(Error::InvalidInput("grid does not cover the cutoff transition".into()));
    }
    let adj = adjoint_poly(poly, strip);
    let w = 2.0 * strip.gamma;
    let coarse = pairing_on_grid(poly, &adj, w, strip.order, us, vs, cut, grid);
    let fine = pairing_on_grid(poly, &adj, w, strip.order, us, vs, cut, &grid.refined());
    // Entries that vanish exactly would make a purely relative test
    // meaningless, so element sizes set a floor.
    let size = |es: &[TraceElement]| es.iter().map(TraceElement::coeff_norm).fold(0.0, f64::max);
    let scale = fine.iter().map(|z| z.norm()).fold(size(us) * size(vs), f64::max);
    let change = (&fine - &coarse).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 && change > REFINE_TOL * scale {
        return Err(Error::GridTooCoarse { change: change / scale });
    }
    Ok(fine)
}

/// Single pairing `[u, v]`.
pub fn flat_pairing(
    poly: &MatrixPoly,
    strip: &Strip,
    u: &TraceElement,
    v: &TraceElement,
    cut: &Cutoff,
    grid: &LogGrid,
) -> Result<C64> {
    Ok(pairing_values(poly, strip, std::slice::from_ref(u), std::slice::from_ref(v), cut, grid)?[(0, 0)])
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingMatrix {
    pub y: f64,
    pub matrix: CMat,
    pub cond: f64,
}

/// Pairing matrix at `y`; `SingularPairing` when not invertible.
pub fn pairing_matrix(
    family: &MatrixPolyFamily,
    y: f64,
    strip: &Strip,
    us: &[TraceElement],
    vs: &[TraceElement],
    cut: &Cutoff,
    grid: &LogGrid,
) -> Result<PairingMatrix> {
    let matrix = pairing_values(&family.at(y), strip, us, vs, cut, grid)?;
    let k = if us.len() == vs.len() && !us.is_empty() { cond(&matrix) } else { f64::INFINITY };
    if !(k <= PAIRING_COND_LIMIT) {
        return Err(Error::SingularPairing { y, cond: k });
    }
    Ok(PairingMatrix { y, matrix, cond: k })
}

/// Trace fiber of the adjoint family at `y`. The adjoint lives on the same
/// strip; `omega` is the primal contour and is reflected accordingly.
pub fn adjoint_fiber_basis(
    family: &MatrixPolyFamily,
    y: f64,
    strip: &Strip,
    omega: Option<&Contour>,
    opts: &TraceOptions,
) -> Result<Vec<TraceElement>> {
    let adj = adjoint_family(family, strip).at(y);
    let ct = omega.map(|c| adjoint_contour(c, strip));
    Ok(trace_fiber_data(&adj, y, strip, ct.as_ref(), opts)?.elements)
}

/// Primal and adjoint fiber bases at `y` and their pairing matrix.
pub fn fiber_pairing(
    family: &MatrixPolyFamily,
    y: f64,
    strip: &Strip,
    omega: Option<&Contour>,
    cut: &Cutoff,
    grid: &LogGrid,
    opts: &TraceOptions,
) -> Result<PairingMatrix> {
    let us = trace_fiber_data(&family.at(y), y, strip, omega, opts)?.elements;
    let vs = adjoint_fiber_basis(family, y, strip, omega, opts)?;
    pairing_matrix(family, y, strip, &us, &vs, cut, grid)
}

/// Pairing matrices over a grid in `y`, computed in parallel.
pub fn pairing_over(
    family: &MatrixPolyFamily,
    ys: &[f64],
    strip: &Strip,
    omega: Option<&Contour>,
    cut: &Cutoff,
    grid: &LogGrid,
    opts: &TraceOptions,
) -> Result<Vec<PairingMatrix>> {
    ys.par_iter().map(|&y| fiber_pairing(family, y, strip, omega, cut, grid, opts)).collect()
}

/// `max |G1 - G2| / max |G1|` for two cutoffs.
pub fn cutoff_independence(
    family: &MatrixPolyFamily,
    y: f64,
    strip: &Strip,
    us: &[TraceElement],
    vs: &[TraceElement],
    cuts: (&Cutoff, &Cutoff),
    per_panel: usize,
) -> Result<f64> {
    let poly = family.at(y);
    let g = |cut: &Cutoff| -> Result<CMat> {
        let grid = LogGrid::for_cutoff(cut.x_a, cut.x_b, per_panel)?;
        pairing_values(&poly, strip, us, vs, cut, &grid)
    };
    let (a, b) = (g(cuts.0)?, g(cuts.1)?);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dev = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(if scale > 0.0 { dev / scale } else { dev })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessReport {
    /// Largest Frobenius norm of the second difference of `a` over the grid.
    pub max_second_difference: f64,
    /// The same divided by the squared grid step.
    pub max_second_derivative: f64,
    /// Per interior grid point: `(y, |second difference|)`.
    pub profile: Vec<(f64, f64)>,
    pub max_cond: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionField {
    pub ys: Vec<f64>,
    /// `a(y)` with `tau'_j = sum_k a_{kj} tau_k` modulo the pairing.
    pub a: Vec<CMat>,
    pub report: SmoothnessReport,
}

/// Transition coefficients between two frames, from
/// `[tau'_j, v_l] = sum_k a_{kj} [tau_k, v_l]`, i.e. `a^T = G_B G_A^{-1}`.
pub fn transition_smoothness(
    family: &MatrixPolyFamily,
    strip: &Strip,
    frame_a: &TraceFrame,
    frame_b: &TraceFrame,
    adjoint: &TraceFrame,
    cut: &Cutoff,
    grid: &LogGrid,
) -> Result<TransitionField> {
    if frame_a.ys != frame_b.ys || frame_a.ys != adjoint.ys {
        return Err(Error::InvalidInput("frames must share the y grid".into()));
    }
    let n = frame_a.ys.len();
    let per_y: Vec<(CMat, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = frame_a.ys[i];
            let vs = &adjoint.elements[i];
            let ga = pairing_matrix(family, y, strip, &frame_a.elements[i], vs, cut, grid)?;
            let gb = pairing_values(&family.at(y), strip, &frame_b.elements[i], vs, cut, grid)?;
            let inv = inverse(&ga.matrix).ok_or(Error::SingularPairing { y, cond: ga.cond })?;
            Ok(((gb * inv).transpose(), ga.cond))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_cond = per_y.iter().map(|p| p.1).fold(0.0, f64::max);
    let a: Vec<CMat> = per_y.into_iter().map(|p| p.0).collect();
    let mut profile = Vec::new();
    let (mut d2, mut dd) = (0.0f64, 0.0f64);
    for i in 1..n.saturating_sub(1) {
        let v = crate::linalg::fro(&(&a[i + 1] - &a[i] * C64::new(2.0, 0.0) + &a[i - 1]));
        let h = 0.5 * (frame_a.ys[i + 1] - frame_a.ys[i - 1]);
        profile.push((frame_a.ys[i], v));
        d2 = d2.max(v);
        dd = dd.max(v / (h * h));
    }
    Ok(TransitionField {
        ys: frame_a.ys.clone(),
        a,
        report: SmoothnessReport { max_second_difference: d2, max_second_derivative: dd, profile, max_cond },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CVec};
    use crate::trace::TraceTerm;

    fn scalar(coeffs: &[C64]) -> MatrixPoly {
        MatrixPoly::new(coeffs.iter().map(|&z| CMat::from_element(1, 1, z)).collect()).unwrap()
    }

    fn constant_element() -> TraceElement {
        TraceElement::new(1, vec![TraceTerm { sigma: C64::default(), ell: 0, coeff: CVec::from_element(1, c(1.0, 0.0)) }])
    }

    #[test]
    fn first_order_pairing_is_i() {
        let strip = Strip::new(0.5, 1).unwrap();
        let p = scalar(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let one = constant_element();
        for cut in [Cutoff { x_a: 0.3, x_b: 0.9 }, Cutoff { x_a: 0.5, x_b: 1.0 }] {
            let grid = LogGrid::for_cutoff(cut.x_a, cut.x_b, 32).unwrap();
            let v = flat_pairing(&p, &strip, &one, &one, &cut, &grid).unwrap();
            assert!((v - I).norm() < 1e-12, "{v}");
        }
    }

    #[test]
    fn zero_element_pairs_to_zero() {
        let strip = Strip::new(0.5, 1).unwrap();
        let p = scalar(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let cut = Cutoff::default();
        let grid = LogGrid::for_cutoff(cut.x_a, cut.x_b, 16).unwrap();
        let v = flat_pairing(&p, &strip, &TraceElement::zero(1), &constant_element(), &cut, &grid).unwrap();
        assert_eq!(v, C64::default());
    }

    #[test]
    fn adjoint_of_first_order_and_hermitian() {
        let strip = Strip::new(0.5, 1).unwrap();
        let f = MatrixPolyFamily::constant(&scalar(&[c(0.0, 0.0), c(1.0, 0.0)]));
        let a = adjoint_family(&f, &strip).at(0.0);
        assert!((a.coeffs[0][(0, 0)]).norm() < 1e-15 && (a.coeffs[1][(0, 0)] - 1.0).norm() < 1e-15);
        let q = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]);
        let h = MatrixPolyFamily::constant(&MatrixPoly::new(vec![q.clone()]).unwrap());
        assert_eq!(adjoint_family(&h, &strip).at(0.3).coeffs[0], q);
    }

    #[test]
    fn cutoff_profile() {
        let cut = Cutoff { x_a: 0.3, x_b: 0.9 };
        assert_eq!(cutoff_derivatives(&cut, 0.2f64.ln(), 2), vec![1.0, 0.0, 0.0]);
        assert_eq!(cutoff_derivatives(&cut, 1.0f64.ln(), 2), vec![0.0, 0.0, 0.0]);
        let t = 0.5f64.ln();
        let h = 1e-5;
        let d = cutoff_derivatives(&cut, t, 1);
        let fd = (cutoff_derivatives(&cut, t + h, 0)[0] - cutoff_derivatives(&cut, t - h, 0)[0]) / (2.0 * h);
        assert!((d[1] - fd).abs() < 1e-8);
        assert!(d[0] > 0.0 && d[0] < 1.0);
    }
}
