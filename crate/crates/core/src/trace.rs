//! Singular parts of meromorphic vector functions, trace elements
//! `sum tau_{s,l} x^{i s} log^l x`, trace-fiber bases and frames over `y`.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Tolerances};
use crate::contour::{argument_count, contour_integral, resolvent_apply, Contour, Strip};
use crate::error::{Error, Result};
use crate::family::{MatrixPoly, MatrixPolyFamily, VecPoly};
use crate::grid::LogGrid;
use crate::linalg::{
    binom, c, cluster_points, factorial, fro, lstsq, powers, rank, svd, vnorm, CMat, CVec, C64, I,
};
use crate::spectra::{contour_solve_poly, finite_eigenvalues, separating_contour, Spectrum};

/// Smallest admissible radius of a residue circle.
pub const RHO_MIN: f64 = 1e-3;
/// Nodes on each residue circle.
const SMALL_NODES: usize = 128;
/// Relative size below which trailing Laurent coefficients are dropped.
const TRIM_TOL: f64 = 1e-10;
/// Distance to the strip boundary treated as touching it.
const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub tol: Tolerances,
    pub nodes: usize,
    pub seed: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), nodes: 256, seed: 7 }
    }
}

impl From<&RunConfig> for TraceOptions {
    fn from(cfg: &RunConfig) -> Self {
        Self { tol: cfg.tolerances, nodes: cfg.nodes, seed: cfg.seed }
    }
}

/// Principal part at one pole: `sum_l coeffs[l-1] (s - sigma)^{-l}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleTerm {
    pub sigma: C64,
    pub coeffs: Vec<CVec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPart {
    pub dim: usize,
    pub poles: Vec<PoleTerm>,
}

impl SingularPart {
    pub fn value(&self, s: C64) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for p in &self.poles {
            let inv = 1.0 / (s - p.sigma);
            let mut w = inv;
            for cf in &p.coeffs {
                out += cf * w;
                w *= inv;
            }
        }
        out
    }

    pub fn scale(&self, f: C64) -> Self {
        let poles = self
            .poles
            .iter()
            .map(|p| PoleTerm { sigma: p.sigma, coeffs: p.coeffs.iter().map(|v| v * f).collect() })
            .collect();
        Self { dim: self.dim, poles }
    }

    pub fn max_order(&self) -> usize {
        self.poles.iter().map(|p| p.coeffs.len()).max().unwrap_or(0)
    }

    /// Entire part of `P(s) * self(s)` as a vector polynomial, plus the norm
    /// of the leftover singular part (zero when `self` lies in the kernel class).
    pub fn multiply_entire_part(&self, poly: &MatrixPoly) -> (VecPoly, f64) {
        let d = poly.coeffs.len() - 1;
        let mut coeffs = vec![CVec::zeros(self.dim); d.max(1)];
        let mut leftover = 0.0;
        for p in &self.poles {
            let taylor = poly.taylor(p.sigma);
            let mut sing = vec![CVec::zeros(self.dim); p.coeffs.len()];
            for (k1, cf) in p.coeffs.iter().enumerate() {
                let k = k1 + 1;
                for (t, tm) in taylor.iter().enumerate() {
                    let v = tm * cf;
                    if t >= k {
                        // (s - p)^{t-k} expanded in powers of s.
                        let n = t - k;
                        let pw = powers(-p.sigma, n);
                        for q in 0..=n {
                            coeffs[q] += &v * (pw[n - q] * binom(n, q));
                        }
                    } else {
                        sing[k - t - 1] += v;
                    }
                }
            }
            leftover += sing.iter().map(vnorm).sum::<f64>();
        }
        (VecPoly { coeffs }, leftover)
    }
}

/// Laurent coefficients `(1/(2 pi i)) \oint (z - p)^{l-1} f(z) dz`,
/// `l = 1..=orders`, on the circle `|z - p| = rho`.
pub fn laurent_coefficients<F>(f: F, p: C64, rho: f64, orders: usize, nodes: usize) -> Result<Vec<CMat>>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    let ct = Contour::circle(p, rho, nodes)?;
    let stacked = contour_integral(&ct, |z| {
        let v = f(z)?;
        let (r, cc) = v.shape();
        let pw = powers(z - p, orders);
        let mut out = CMat::zeros(orders * r, cc);
        for (l, w) in pw.iter().take(orders).enumerate() {
            out.view_mut((l * r, 0), (r, cc)).copy_from(&(&v * *w));
        }
        Ok(out)
    })?;
    let r = stacked.nrows() / orders;
    Ok((0..orders).map(|l| stacked.view((l * r, 0), (r, stacked.ncols())).into_owned()).collect())
}

/// Drop trailing coefficients whose contribution on the residue circle is
/// negligible.
fn trim(coeffs: Vec<CVec>, rho: f64) -> Vec<CVec> {
    let size: Vec<f64> = coeffs.iter().enumerate().map(|(l, v)| vnorm(v) * rho.powi(-(l as i32 + 1))).collect();
    let top = size.iter().copied().fold(0.0, f64::max);
    let keep = size.iter().rposition(|&s| s > TRIM_TOL * top).map_or(0, |i| i + 1);
    coeffs.into_iter().take(keep).collect()
}

/// Residue circle radii: half the distance to the nearest other pole, capped,
/// and shrunk until the argument principle counts only the intended pole.
fn residue_radii(poly: &MatrixPoly, spec: &Spectrum, cap: f64, rank_tol: f64) -> Result<Vec<f64>> {
    let pts = spec.sigmas();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if (pts[i] - pts[j]).norm() < 4.0 * RHO_MIN {
                return Err(Error::PoleSeparationFailure { a: pts[i], b: pts[j], min_sep: 4.0 * RHO_MIN });
            }
        }
    }
    spec.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nearest = pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (p.sigma - q).norm())
                .fold(f64::INFINITY, f64::min);
            let mut rho = (0.5 * nearest).min(cap);
            for _ in 0..8 {
                let ct = Contour::circle(p.sigma, rho, SMALL_NODES)?;
                if let Ok(n) = argument_count(poly, &ct, rank_tol) {
                    if (n - c(p.alg_mult as f64, 0.0)).norm() < 1e-6 {
                        return Ok(rho);
                    }
                }
                rho *= 0.5;
                if rho < RHO_MIN {
                    break;
                }
            }
            Err(Error::PoleSeparationFailure { a: p.sigma, b: p.sigma, min_sep: rho })
        })
        .collect()
}

/// Principal parts of `F(s)^{-1} rhs(s)` at the eigenvalues inside `omega`.
pub fn singular_part(
    family: &MatrixPolyFamily,
    y: f64,
    omega: &Contour,
    rhs: &VecPoly,
    strip: &Strip,
    opts: &TraceOptions,
) -> Result<SingularPart> {
    singular_part_poly(&family.at(y), y, omega, rhs, strip, opts)
}

pub fn singular_part_poly(
    poly: &MatrixPoly,
    y: f64,
    omega: &Contour,
    rhs: &VecPoly,
    strip: &Strip,
    opts: &TraceOptions,
) -> Result<SingularPart> {
    let spec = contour_solve_poly(poly, y, omega, 0, opts.seed, &opts.tol)?;
    let radii = residue_radii(poly, &spec, 0.1 * strip.height(), opts.tol.rank_tol)?;
    singular_part_at(poly, &spec, &radii, rhs, opts)
}

fn singular_part_at(poly: &MatrixPoly, spec: &Spectrum, radii: &[f64], rhs: &VecPoly, opts: &TraceOptions) -> Result<SingularPart> {
    let r = poly.dim();
    let mut poles = Vec::new();
    for (p, &rho) in spec.points.iter().zip(radii) {
        let f = |z: C64| {
            let b = CMat::from_column_slice(r, 1, rhs.eval(z).as_slice());
            resolvent_apply(poly, z, &b, opts.tol.rank_tol)
        };
        let lc = laurent_coefficients(f, p.sigma, rho, p.alg_mult, SMALL_NODES)?;
        let coeffs = trim(lc.into_iter().map(|m| m.column(0).into_owned()).collect(), rho);
        if !coeffs.is_empty() {
            poles.push(PoleTerm { sigma: p.sigma, coeffs });
        }
    }
    Ok(SingularPart { dim: r, poles })
}

/// Principal parts of an arbitrary meromorphic function at given poles.
pub fn principal_parts<F>(f: F, poles: &[(C64, usize, f64)], dim: usize) -> Result<SingularPart>
where
    F: Fn(C64) -> CVec + Sync,
{
    let mut out = Vec::new();
    for &(p, orders, rho) in poles {
        let lc = laurent_coefficients(|z| Ok(CMat::from_column_slice(dim, 1, f(z).as_slice())), p, rho, orders, SMALL_NODES)?;
        let coeffs = trim(lc.into_iter().map(|m| m.column(0).into_owned()).collect(), rho);
        if !coeffs.is_empty() {
            out.push(PoleTerm { sigma: p, coeffs });
        }
    }
    Ok(SingularPart { dim, poles: out })
}

/// One term `coeff * x^{i sigma} log^ell x`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTerm {
    pub sigma: C64,
    pub ell: u32,
    pub coeff: CVec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceElement {
    pub dim: usize,
    pub terms: Vec<TraceTerm>,
}

impl TraceElement {
    pub fn new(dim: usize, terms: Vec<TraceTerm>) -> Self {
        let mut e = Self { dim, terms: vec![] };
        for t in terms {
            e.push(t);
        }
        e.sort();
        e
    }

    fn push(&mut self, t: TraceTerm) {
        match self.terms.iter_mut().find(|u| u.sigma == t.sigma && u.ell == t.ell) {
            Some(u) => u.coeff += t.coeff,
            None => self.terms.push(t),
        }
    }

    fn sort(&mut self) {
        self.terms.sort_by(|a, b| {
            b.sigma
                .im
                .total_cmp(&a.sigma.im)
                .then(a.sigma.re.total_cmp(&b.sigma.re))
                .then(a.ell.cmp(&b.ell))
        });
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: vec![] }
    }

    pub fn eval(&self, x: f64) -> CVec {
        let lx = x.ln();
        let mut out = CVec::zeros(self.dim);
        for t in &self.terms {
            out += &t.coeff * ((I * t.sigma * lx).exp() * lx.powi(t.ell as i32));
        }
        out
    }

    pub fn coeff_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, f: C64) -> Self {
        let terms = self.terms.iter().map(|t| TraceTerm { sigma: t.sigma, ell: t.ell, coeff: &t.coeff * f }).collect();
        Self { dim: self.dim, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone());
        }
        out.sort();
        out
    }

    /// `x d/dx`.
    pub fn x_dx(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push(TraceTerm { sigma: t.sigma, ell: t.ell, coeff: &t.coeff * (I * t.sigma) });
            if t.ell > 0 {
                terms.push(TraceTerm { sigma: t.sigma, ell: t.ell - 1, coeff: &t.coeff * c(t.ell as f64, 0.0) });
            }
        }
        Self::new(self.dim, terms)
    }

    /// `x D_x = -i x d/dx`.
    pub fn x_big_dx(&self) -> Self {
        self.x_dx().scale(-I)
    }

    /// `sum_j C_j (x D_x)^j` applied termwise.
    pub fn apply_poly(&self, poly: &MatrixPoly) -> Self {
        let mut acc = Self::zero(poly.dim());
        let mut cur = self.clone();
        for (j, m) in poly.coeffs.iter().enumerate() {
            if j > 0 {
                cur = cur.x_big_dx();
            }
            let terms = cur.terms.iter().map(|t| TraceTerm { sigma: t.sigma, ell: t.ell, coeff: m * &t.coeff }).collect();
            acc = acc.add(&Self::new(poly.dim(), terms));
        }
        acc
    }

    /// Multiplication by `x^{-m}`, i.e. `sigma -> sigma + i m`.
    pub fn times_x_power(&self, p: i32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TraceTerm { sigma: t.sigma - I * p as f64, ell: t.ell, coeff: t.coeff.clone() })
            .collect();
        Self::new(self.dim, terms)
    }

    /// Unit coefficient norm with the largest coefficient real positive.
    /// Returns the element and the applied factor.
    pub fn normalized(&self) -> (Self, C64) {
        let n = self.coeff_norm();
        if n == 0.0 {
            return (self.clone(), c(1.0, 0.0));
        }
        let mut best = C64::default();
        for t in &self.terms {
            for z in t.coeff.iter() {
                if z.norm() > best.norm() * (1.0 + 1e-12) {
                    best = *z;
                }
            }
        }
        let f = best.conj() / (best.norm() * n);
        (self.scale(f), f)
    }

    /// Values at `xs`, stacked into a column of length `xs.len() * dim`.
    pub fn sample_column(&self, xs: &[f64]) -> CVec {
        let mut out = CVec::zeros(xs.len() * self.dim);
        for (k, &x) in xs.iter().enumerate() {
            out.rows_mut(k * self.dim, self.dim).copy_from(&self.eval(x));
        }
        out
    }
}

/// Inverse-Mellin image: `c (s - s0)^{-k}` maps to
/// `-i (i log x)^{k-1} / (k-1)! c x^{i s0}`.
pub fn to_trace_element(sp: &SingularPart) -> TraceElement {
    let mut terms = Vec::new();
    for p in &sp.poles {
        for (k1, cf) in p.coeffs.iter().enumerate() {
            let f = -I * I.powu(k1 as u32) / factorial(k1);
            terms.push(TraceTerm { sigma: p.sigma, ell: k1 as u32, coeff: cf * f });
        }
    }
    TraceElement::new(sp.dim, terms)
}

/// `x^{-m} P(x D_x) tau`.
pub fn apply_indicial(poly: &MatrixPoly, m: u32, tau: &TraceElement) -> TraceElement {
    tau.apply_poly(poly).times_x_power(-(m as i32))
}

/// Per-y trace fiber data: basis elements together with the singular parts
/// they come from (same scaling) and the contour used.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberData {
    pub y: f64,
    pub contour: Option<Contour>,
    pub spectrum: Option<Spectrum>,
    pub singular_parts: Vec<SingularPart>,
    pub elements: Vec<TraceElement>,
}

fn check_boundary(poly: &MatrixPoly, y: f64, strip: &Strip, rank_tol: f64) -> Result<()> {
    for s in finite_eigenvalues(poly, rank_tol)? {
        if strip.boundary_distance(s) <= BOUNDARY_TOL {
            return Err(Error::BoundarySpectrum { y, sigma: s });
        }
    }
    Ok(())
}

/// Trace fiber at `y`: principal parts of `F^{-1} (s - p)^j e_i` at each strip
/// eigenvalue `p`, reduced to a basis of the algebraic multiplicity and
/// mapped to trace elements.
pub fn trace_fiber_data(poly: &MatrixPoly, y: f64, strip: &Strip, omega: Option<&Contour>, opts: &TraceOptions) -> Result<FiberData> {
    check_boundary(poly, y, strip, opts.tol.rank_tol)?;
    let contour = match omega {
        Some(ct) => Some(*ct),
        None => separating_contour(poly, strip, opts.nodes, opts.tol.rank_tol)?,
    };
    let Some(ct) = contour else {
        return Ok(FiberData { y, contour: None, spectrum: None, singular_parts: vec![], elements: vec![] });
    };
    let mut spec = contour_solve_poly(poly, y, &ct, 0, opts.seed, &opts.tol)?;
    spec.points.retain(|p| strip.contains(p.sigma));
    let radii = residue_radii(poly, &spec, 0.1 * strip.height(), opts.tol.rank_tol)?;
    let r = poly.dim();
    let mut singular_parts = Vec::new();
    let mut elements = Vec::new();
    for (p, &rho) in spec.points.iter().zip(&radii) {
        let mu = p.alg_mult;
        let f = |z: C64| resolvent_apply(poly, z, &CMat::identity(r, r), opts.tol.rank_tol);
        let lc = laurent_coefficients(f, p.sigma, rho, mu, SMALL_NODES)?;
        // Columns: principal parts of F^{-1} (s-p)^j e_i, coefficients stacked by order.
        let mut stack = CMat::zeros(r * mu, r * mu);
        for j in 0..mu {
            for i in 0..r {
                for k in 0..mu {
                    if k + j < mu {
                        let v = lc[k + j].column(i);
                        stack.view_mut((k * r, j * r + i), (r, 1)).copy_from(&v);
                    }
                }
            }
        }
        let d = svd(&stack);
        let got = rank(&d.s, 1e3 * opts.tol.rank_tol);
        if got != mu {
            return Err(Error::RankLoss { y, ratio: d.s.get(mu.saturating_sub(1)).copied().unwrap_or(0.0) / d.s[0].max(1e-300) });
        }
        for col in 0..mu {
            let u = d.u.column(col);
            let coeffs: Vec<CVec> = (0..mu).map(|k| u.rows(k * r, r).into_owned()).collect();
            let sp = SingularPart { dim: r, poles: vec![PoleTerm { sigma: p.sigma, coeffs: trim(coeffs, rho) }] };
            let (el, f) = to_trace_element(&sp).normalized();
            let res = apply_indicial(poly, strip.order, &el).coeff_norm();
            if res > opts.tol.residual_tol {
                return Err(Error::NotInKernel { residual: res });
            }
            singular_parts.push(sp.scale(f));
            elements.push(el);
        }
    }
    Ok(FiberData { y, contour: Some(ct), spectrum: Some(spec), singular_parts, elements })
}

/// Normalized basis of the trace fiber at `y`.
pub fn trace_fiber_basis(family: &MatrixPolyFamily, y: f64, strip: &Strip, opts: &TraceOptions) -> Result<Vec<TraceElement>> {
    Ok(trace_fiber_data(&family.at(y), y, strip, None, opts)?.elements)
}

/// Key used to compare coefficients of different trace elements.
fn coefficient_keys(elements: &[TraceElement], tol: f64) -> (Vec<C64>, Vec<usize>) {
    let sig: Vec<C64> = elements.iter().flat_map(|e| e.terms.iter().map(|t| t.sigma)).collect();
    let groups = cluster_points(&sig, tol);
    let centers: Vec<C64> = groups.iter().map(|g| g.iter().map(|&i| sig[i]).sum::<C64>() / g.len() as f64).collect();
    let mut label = vec![0; sig.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &i in g {
            label[i] = gi;
        }
    }
    (centers, label)
}

/// Coefficient matrix of elements: rows indexed by (sigma cluster, ell, component).
pub fn coefficient_matrix(elements: &[TraceElement], extra: &[TraceElement]) -> (CMat, CMat) {
    let all: Vec<TraceElement> = elements.iter().chain(extra).cloned().collect();
    let scale = all.iter().flat_map(|e| e.terms.iter().map(|t| t.sigma.norm())).fold(1.0, f64::max);
    let (centers, label) = coefficient_keys(&all, 1e-9 * scale);
    let dim = all.first().map_or(0, |e| e.dim);
    let max_ell = all.iter().flat_map(|e| e.terms.iter().map(|t| t.ell)).max().unwrap_or(0) as usize;
    let rows = centers.len() * (max_ell + 1) * dim;
    let mut a = CMat::zeros(rows, elements.len());
    let mut b = CMat::zeros(rows, extra.len());
    let mut idx = 0;
    for (col, e) in all.iter().enumerate() {
        for t in &e.terms {
            let base = (label[idx] * (max_ell + 1) + t.ell as usize) * dim;
            for comp in 0..dim {
                if col < elements.len() {
                    a[(base + comp, col)] += t.coeff[comp];
                } else {
                    b[(base + comp, col - elements.len())] += t.coeff[comp];
                }
            }
            idx += 1;
        }
    }
    (a, b)
}

/// Matrix of `x d/dx` on the span of `basis`.
pub fn xdx_endomorphism(basis: &[TraceElement], rank_tol: f64) -> Result<CMat> {
    if basis.is_empty() {
        return Ok(CMat::zeros(0, 0));
    }
    let images: Vec<TraceElement> = basis.iter().map(|e| e.x_dx()).collect();
    let (a, b) = coefficient_matrix(basis, &images);
    let x = lstsq(&a, &b, 1e-13);
    let resid = fro(&(&a * &x - &b));
    let scale = fro(&b).max(fro(&a));
    let rel = resid / scale.max(1e-300);
    if rel > rank_tol.max(1e-10) * 10.0 {
        return Err(Error::NotInvariant { residual: rel });
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Continued { y0: f64 },
    Assembled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceFrame {
    pub ys: Vec<f64>,
    pub elements: Vec<Vec<TraceElement>>,
    pub provenance: Provenance,
}

impl TraceFrame {
    pub fn rank_at(&self, i: usize) -> usize {
        self.elements[i].len()
    }
}

/// Sample points for rank checks by evaluation.
pub fn rank_sample_points(n: usize) -> Vec<f64> {
    let s = (2 * n).max(8);
    (0..s).map(|k| 0.2f64.powf(1.0 - k as f64 / (s - 1) as f64)).collect()
}

fn value_rank_ratio(elements: &[TraceElement]) -> f64 {
    if elements.is_empty() {
        return 1.0;
    }
    let xs = rank_sample_points(elements.len());
    let cols: Vec<CVec> = elements.iter().map(|e| e.sample_column(&xs)).collect();
    let m = CMat::from_columns(&cols);
    let s = svd(&m).s;
    s.last().copied().unwrap_or(0.0) / s[0].max(1e-300)
}

/// Frame over `ys` continued from the fiber basis at `y0`: each element is
/// the singular part in `omega` of `F(., y)^{-1} F(., y0) chi_j(., y0)`.
pub fn frame_continuation(
    family: &MatrixPolyFamily,
    y0: f64,
    ys: &[f64],
    omega: &Contour,
    strip: &Strip,
    opts: &TraceOptions,
) -> Result<TraceFrame> {
    let p0 = family.at(y0);
    let base = trace_fiber_data(&p0, y0, strip, Some(omega), opts)?;
    let rhs: Vec<VecPoly> = base.singular_parts.iter().map(|sp| sp.multiply_entire_part(&p0).0).collect();
    let per_y: Vec<Result<Vec<TraceElement>>> = ys
        .par_iter()
        .map(|&y| {
            let p = family.at(y);
            let mut spec = contour_solve_poly(&p, y, omega, 0, opts.seed, &opts.tol)?;
            spec.points.retain(|q| strip.contains(q.sigma));
            let radii = residue_radii(&p, &spec, 0.1 * strip.height(), opts.tol.rank_tol)?;
            let els = rhs
                .iter()
                .map(|h| Ok(to_trace_element(&singular_part_at(&p, &spec, &radii, h, opts)?)))
                .collect::<Result<Vec<_>>>()?;
            let ratio = value_rank_ratio(&els);
            if els.len() != spec.total_multiplicity() || ratio < opts.tol.rank_tol {
                return Err(Error::RankLoss { y, ratio });
            }
            Ok(els)
        })
        .collect();
    let elements = per_y.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(TraceFrame { ys: ys.to_vec(), elements, provenance: Provenance::Continued { y0 } })
}

/// Frame of per-y normalized fiber bases.
pub fn assembled_frame(family: &MatrixPolyFamily, ys: &[f64], strip: &Strip, opts: &TraceOptions) -> Result<TraceFrame> {
    let elements = ys
        .par_iter()
        .map(|&y| trace_fiber_basis(family, y, strip, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceFrame { ys: ys.to_vec(), elements, provenance: Provenance::Assembled })
}

/// Cutoff Mellin transform `sum_k w_k x_k^{-i s} u_k`, approximating
/// `\int x^{-i s} u(x) dx/x` over the grid range.
pub fn mellin_quadrature(grid: &LogGrid, samples: &[C64], s: C64) -> Result<C64> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidInput("sample count does not match the grid".into()));
    }
    Ok(grid.t.iter().zip(&grid.w).zip(samples).map(|((&t, &w), &u)| (-I * s * t).exp() * u * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(coeffs: &[C64]) -> MatrixPoly {
        MatrixPoly::new(coeffs.iter().map(|&z| CMat::from_element(1, 1, z)).collect()).unwrap()
    }

    fn one() -> VecPoly {
        VecPoly::constant(CVec::from_element(1, c(1.0, 0.0)))
    }

    #[test]
    fn simple_and_double_poles() {
        let strip = Strip::new(0.5, 2).unwrap();
        let opts = TraceOptions::default();
        let unit = Contour::circle(C64::default(), 1.0, 256).unwrap();
        let sp = singular_part_poly(&scalar(&[c(0.0, 0.0), c(1.0, 0.0)]), 0.0, &unit, &one(), &strip, &opts).unwrap();
        assert_eq!(sp.poles.len(), 1);
        assert!((sp.poles[0].coeffs[0][0] - c(1.0, 0.0)).norm() < 1e-12);
        let sp2 = singular_part_poly(&scalar(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]), 0.0, &unit, &one(), &strip, &opts).unwrap();
        assert_eq!(sp2.poles[0].coeffs.len(), 2);
        assert!(sp2.poles[0].coeffs[0][0].norm() < 1e-12);
        assert!((sp2.poles[0].coeffs[1][0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_mellin_constants() {
        let sp = SingularPart { dim: 1, poles: vec![PoleTerm { sigma: C64::default(), coeffs: vec![CVec::zeros(1), CVec::from_element(1, c(1.0, 0.0))] }] };
        let el = to_trace_element(&sp);
        assert_eq!(el.terms.len(), 2);
        let log_term = el.terms.iter().find(|t| t.ell == 1).unwrap();
        // (-i)(i) = 1.
        assert!((log_term.coeff[0] - c(1.0, 0.0)).norm() < 1e-15);
        let simple = SingularPart { dim: 1, poles: vec![PoleTerm { sigma: C64::default(), coeffs: vec![CVec::from_element(1, c(1.0, 0.0))] }] };
        assert!((to_trace_element(&simple).terms[0].coeff[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn log_is_killed_by_square() {
        let tau = TraceElement::new(1, vec![TraceTerm { sigma: C64::default(), ell: 1, coeff: CVec::from_element(1, c(1.0, 0.0)) }]);
        let p = scalar(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(apply_indicial(&p, 2, &tau).coeff_norm(), 0.0);
    }

    #[test]
    fn xdx_of_log_basis_is_nilpotent() {
        let one_el = TraceElement::new(1, vec![TraceTerm { sigma: C64::default(), ell: 0, coeff: CVec::from_element(1, c(1.0, 0.0)) }]);
        let log_el = TraceElement::new(1, vec![TraceTerm { sigma: C64::default(), ell: 1, coeff: CVec::from_element(1, c(1.0, 0.0)) }]);
        let x = xdx_endomorphism(&[one_el, log_el], 1e-9).unwrap();
        assert!((x[(0, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(x[(0, 0)].norm() + x[(1, 0)].norm() + x[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn mellin_of_power() {
        let grid = LogGrid::with_breaks(&[1e-14, 1e-10, 1e-6, 1e-3, 1e-1, 1.0], 48).unwrap();
        let s0 = c(0.3, -0.5);
        let samples: Vec<C64> = grid.x().map(|x| (I * s0 * x.ln()).exp()).collect();
        let s = c(-0.2, 0.7);
        let v = mellin_quadrature(&grid, &samples, s).unwrap();
        assert!((v - 1.0 / (I * (s0 - s))).norm() < 1e-6);
    }
}
