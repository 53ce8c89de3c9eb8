//! Spectra of indicial families: companion linearization, block-Hankel
//! contour solver, eigenvalue curves over `y` and strip checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::contour::{argument_count, check_admissible, contour_integral, resolvent_apply, Contour, Shape, Strip};
use crate::error::{Error, Result};
use crate::family::{MatrixPoly, MatrixPolyFamily};
use crate::linalg::{
    binom, c, cluster_points, cond, eigenvalues, inverse, mean, norm2, min_singular_value, powers, singular_values,
    svd, vnorm, CMat, CVec, C64,
};

/// Condition number above which the leading coefficient is treated as singular.
const LEADING_COND_LIMIT: f64 = 1e6;
/// Relative rank threshold for Jordan structure detection.
const JORDAN_TOL: f64 = 1e-7;
/// Longest Jordan chain resolved explicitly.
const MAX_RESOLVED_CHAIN: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Companion,
    Contour,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Companion => "companion",
            Method::Contour => "contour",
        }
    }
}

/// One (clustered) eigenvalue with its Jordan data.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub sigma: C64,
    pub alg_mult: usize,
    /// Resolved partial multiplicities, descending.
    pub partials: Vec<usize>,
    /// Number of Jordan chains of length at least four.
    pub unresolved_chains: usize,
    /// Eigenvectors as unit columns.
    pub eigvecs: CMat,
    /// `max ||F(sigma) v||` over the eigenvector columns.
    pub residual: f64,
}

impl SpectrumPoint {
    /// Partial multiplicities rendered as `2;1`, with `>=4` for unresolved chains.
    pub fn partials_label(&self) -> String {
        let mut parts: Vec<String> = (0..self.unresolved_chains).map(|_| ">=4".to_string()).collect();
        parts.extend(self.partials.iter().map(|p| p.to_string()));
        parts.join(";")
    }

    pub fn max_partial(&self) -> usize {
        if self.unresolved_chains > 0 {
            self.alg_mult
        } else {
            self.partials.first().copied().unwrap_or(1)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub y: f64,
    pub method: Method,
    pub points: Vec<SpectrumPoint>,
}

impl Spectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.alg_mult).sum()
    }

    pub fn sigmas(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.sigma).collect()
    }
}

/// All finite eigenvalues of `det F(s) = 0`, unclustered.
pub fn finite_eigenvalues(poly: &MatrixPoly, rank_tol: f64) -> Result<Vec<C64>> {
    if poly.is_zero() {
        return Err(Error::DegenerateFamily("all coefficients vanish".into()));
    }
    let d = poly.degree();
    let r = poly.dim();
    if d == 0 {
        if min_singular_value(&poly.coeffs[0]) < rank_tol * poly.scale() {
            return Err(Error::DegenerateFamily("constant singular family".into()));
        }
        return Ok(vec![]);
    }
    let lead = &poly.coeffs[d];
    if cond(lead) <= LEADING_COND_LIMIT {
        let inv = inverse(lead).ok_or_else(|| Error::DegenerateFamily("leading coefficient".into()))?;
        let monic: Vec<CMat> = poly.coeffs[..d].iter().map(|m| &inv * m).collect();
        return Ok(eigenvalues(&block_companion(&monic, r)));
    }
    // Singular leading term: substitute s = s0 + 1/mu, whose reversed
    // polynomial has the invertible leading coefficient F(s0).
    let scale = poly.scale();
    let candidates = (0..12).map(|k| C64::from_polar(0.5 + 0.37 * k as f64, 0.7 + 1.3 * k as f64));
    let (s0, best) = candidates
        .map(|s| (s, min_singular_value(&poly.eval(s))))
        .fold((C64::default(), -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    if best < rank_tol * scale {
        return Err(Error::DegenerateFamily("determinant vanishes identically".into()));
    }
    let pw = powers(s0, d);
    let q: Vec<CMat> = (0..=d)
        .map(|k| {
            let mut m = CMat::zeros(r, r);
            for j in 0..=d {
                if k + j >= d {
                    let e = k + j - d;
                    if e <= j {
                        m += &poly.coeffs[j] * (pw[e] * binom(j, e));
                    }
                }
            }
            m
        })
        .collect();
    let inv = inverse(&q[d]).ok_or_else(|| Error::DegenerateFamily("shifted leading coefficient".into()))?;
    let monic: Vec<CMat> = q[..d].iter().map(|m| &inv * m).collect();
    let mus = eigenvalues(&block_companion(&monic, r));
    let mu_max = mus.iter().map(|m| m.norm()).fold(0.0, f64::max);
    Ok(mus.into_iter().filter(|m| m.norm() > 1e-8 * mu_max.max(1.0)).map(|m| s0 + 1.0 / m).collect())
}

/// Block companion matrix of the monic polynomial `s^d I + sum_j A_j s^j`.
fn block_companion(monic: &[CMat], r: usize) -> CMat {
    let d = monic.len();
    let n = d * r;
    let mut l = CMat::zeros(n, n);
    for i in 0..d.saturating_sub(1) {
        l.view_mut((i * r, (i + 1) * r), (r, r)).fill_with_identity();
    }
    for (j, a) in monic.iter().enumerate() {
        l.view_mut(((d - 1) * r, j * r), (r, r)).copy_from(&(-a));
    }
    l
}

/// Block lower-triangular Toeplitz matrix of Taylor coefficients.
fn taylor_toeplitz(taylor: &[CMat], k: usize) -> CMat {
    let r = taylor[0].nrows();
    let mut t = CMat::zeros(k * r, k * r);
    for i in 0..k {
        for j in 0..=i {
            if let Some(b) = taylor.get(i - j) {
                t.view_mut((i * r, j * r), (r, r)).copy_from(b);
            }
        }
    }
    t
}

/// Jordan chain lengths from kernel dimensions `d_k = sum_i min(kappa_i, k)`.
fn chains_from_kernel_dims(dims: &[usize], alg: usize) -> (Vec<usize>, usize) {
    let kmax = dims.len();
    let n: Vec<usize> = (0..kmax)
        .map(|k| dims[k].saturating_sub(if k == 0 { 0 } else { dims[k - 1] }))
        .collect();
    let mut partials = Vec::new();
    let mut unresolved = 0;
    for k in (1..=kmax).rev() {
        let ge_k = n[k - 1];
        let ge_next = if k < kmax { n[k] } else { 0 };
        let exact = ge_k.saturating_sub(ge_next);
        if k == kmax && kmax > MAX_RESOLVED_CHAIN && alg > MAX_RESOLVED_CHAIN {
            unresolved = ge_k;
        } else {
            partials.extend(std::iter::repeat_n(k, exact));
        }
    }
    (partials, unresolved)
}

/// Partial multiplicities at `s0` from the rank profile of Taylor Toeplitz matrices.
pub fn partial_multiplicities(poly: &MatrixPoly, s0: C64, alg: usize) -> (Vec<usize>, usize) {
    let taylor = poly.taylor(s0);
    let kmax = alg.clamp(1, MAX_RESOLVED_CHAIN + 1);
    // Threshold against the whole Taylor expansion: `F(s0)` alone may be
    // pure rounding noise.
    let scale = taylor.iter().map(norm2).fold(0.0, f64::max);
    let dims: Vec<usize> = (1..=kmax)
        .map(|k| {
            let t = taylor_toeplitz(&taylor, k);
            let s = singular_values(&t);
            let floor = JORDAN_TOL * s.first().copied().unwrap_or(0.0).max(scale);
            s.iter().filter(|&&v| v <= floor).count()
        })
        .collect();
    chains_from_kernel_dims(&dims, alg)
}

fn eigvecs_and_residual(poly: &MatrixPoly, s0: C64, g: usize) -> (CMat, f64) {
    let m = poly.eval(s0);
    let d = svd(&m);
    let n = m.ncols();
    let g = g.clamp(1, n);
    let v = d.v_h.rows(n - g, g).adjoint();
    let res = (0..g).map(|j| vnorm(&(&m * v.column(j)))).fold(0.0, f64::max);
    (v, res)
}

fn sort_points(points: &mut [SpectrumPoint]) {
    points.sort_by(|a, b| b.sigma.im.total_cmp(&a.sigma.im).then(a.sigma.re.total_cmp(&b.sigma.re)));
}

fn cluster_tol(tol: &Tolerances, pts: &[C64]) -> f64 {
    tol.match_tol * pts.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// Clustered eigenvalues of `F(y, .)` in the strip via the companion linearization.
pub fn companion_solve(family: &MatrixPolyFamily, y: f64, strip: &Strip, tol: &Tolerances) -> Result<Spectrum> {
    companion_solve_poly(&family.at(y), y, Some(strip), tol)
}

/// Companion solve for a fixed polynomial; `strip = None` keeps every finite eigenvalue.
pub fn companion_solve_poly(poly: &MatrixPoly, y: f64, strip: Option<&Strip>, tol: &Tolerances) -> Result<Spectrum> {
    let all = finite_eigenvalues(poly, tol.rank_tol)?;
    let inside: Vec<C64> = all.into_iter().filter(|s| strip.is_none_or(|st| st.contains(*s))).collect();
    let groups = cluster_points(&inside, cluster_tol(tol, &inside));
    let mut points: Vec<SpectrumPoint> = groups
        .iter()
        .map(|g| {
            let members: Vec<C64> = g.iter().map(|&i| inside[i]).collect();
            let sigma = mean(&members);
            let alg = members.len();
            let (partials, unresolved_chains) = partial_multiplicities(poly, sigma, alg);
            let geo = partials.len() + unresolved_chains;
            let (eigvecs, residual) = eigvecs_and_residual(poly, sigma, geo);
            SpectrumPoint { sigma, alg_mult: alg, partials, unresolved_chains, eigvecs, residual }
        })
        .collect();
    sort_points(&mut points);
    Ok(Spectrum { y, method: Method::Companion, points })
}

/// Seeded complex probe block with entries uniform in the unit square.
pub fn probe_block(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Eigenvalues inside a contour from block-Hankel moments of `F^{-1} V`.
/// `probe_cols = 0` uses a full-width probe.
pub fn contour_solve(
    family: &MatrixPolyFamily,
    y: f64,
    contour: &Contour,
    probe_cols: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Spectrum> {
    contour_solve_poly(&family.at(y), y, contour, probe_cols, seed, tol)
}

pub fn contour_solve_poly(
    poly: &MatrixPoly,
    y: f64,
    contour: &Contour,
    probe_cols: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Spectrum> {
    if poly.is_zero() {
        return Err(Error::DegenerateFamily("all coefficients vanish".into()));
    }
    check_admissible(poly, contour, tol.rank_tol)?;
    let r = poly.dim();
    let l = if probe_cols == 0 { r } else { probe_cols.min(r) };
    let count = argument_count(poly, contour, tol.rank_tol)?;
    let nu = count.re.round();
    if (count - c(nu, 0.0)).norm() > 0.1 || nu < 0.0 {
        return Err(Error::NodeOnSingularity { node: contour.center(), sigma_min: (count - c(nu, 0.0)).norm() });
    }
    let nu = nu as usize;
    if nu == 0 {
        return Ok(Spectrum { y, method: Method::Contour, points: vec![] });
    }
    let blocks = nu.div_ceil(l) + 1;
    let center = contour.center();
    let radius = contour.outer_radius();
    let v = probe_block(r, l, seed);
    let np = 2 * blocks;
    let stacked = contour_integral(contour, |z| {
        let x = resolvent_apply(poly, z, &v, tol.rank_tol)?;
        let w = (z - center) / radius;
        let pw = powers(w, np - 1);
        let mut out = CMat::zeros(np * r, l);
        for (p, wp) in pw.iter().enumerate() {
            out.view_mut((p * r, 0), (r, l)).copy_from(&(&x * *wp));
        }
        Ok(out)
    })?;
    let moment = |p: usize| stacked.view((p * r, 0), (r, l)).into_owned();
    let mut h0 = CMat::zeros(blocks * r, blocks * l);
    let mut h1 = CMat::zeros(blocks * r, blocks * l);
    for i in 0..blocks {
        for j in 0..blocks {
            h0.view_mut((i * r, j * l), (r, l)).copy_from(&moment(i + j));
            h1.view_mut((i * r, j * l), (r, l)).copy_from(&moment(i + j + 1));
        }
    }
    let d = svd(&h0);
    let top = d.s.first().copied().unwrap_or(0.0);
    let thresh = tol.rank_tol * top;
    if let Some(&amb) = d.s.iter().find(|&&s| s > 1e-2 * thresh && s < 1e2 * thresh) {
        return Err(Error::RankDeficientProbe { value: amb, threshold: thresh });
    }
    let k = d.s.iter().filter(|&&s| s > thresh).count();
    if k < nu {
        return Err(Error::RankDeficientProbe { value: d.s.get(k).copied().unwrap_or(0.0), threshold: thresh });
    }
    let uk = d.u.columns(0, k).into_owned();
    let wk = d.v_h.rows(0, k).adjoint();
    let sinv = CMat::from_diagonal(&CVec::from_iterator(k, d.s[..k].iter().map(|s| c(1.0 / s, 0.0))));
    let b = uk.adjoint() * &h1 * wk * sinv;
    let zs = eigenvalues(&b);
    let sigmas: Vec<(usize, C64)> = zs
        .iter()
        .enumerate()
        .map(|(i, z)| (i, center + z * radius))
        .filter(|(_, s)| contour.contains(*s))
        .collect();
    let pts: Vec<C64> = sigmas.iter().map(|x| x.1).collect();
    let groups = cluster_points(&pts, cluster_tol(tol, &pts));
    let utop = uk.rows(0, r).into_owned();
    let bnorm = crate::linalg::norm2(&b).max(1e-300);
    let mut points: Vec<SpectrumPoint> = groups
        .iter()
        .map(|g| {
            let members: Vec<C64> = g.iter().map(|&i| pts[i]).collect();
            let sigma = mean(&members);
            let alg = members.len();
            let zbar = (sigma - center) / radius;
            let shifted = &b - CMat::identity(k, k) * zbar;
            let kmax = alg.clamp(1, MAX_RESOLVED_CHAIN + 1);
            let mut acc = CMat::identity(k, k);
            let mut dims = Vec::with_capacity(kmax);
            for j in 1..=kmax {
                acc = &acc * &shifted;
                let s = singular_values(&acc);
                let floor = JORDAN_TOL * (2.0 * bnorm).powi(j as i32);
                dims.push(s.iter().filter(|&&v| v <= floor).count());
            }
            let (partials, unresolved_chains) = chains_from_kernel_dims(&dims, alg);
            let geo = (partials.len() + unresolved_chains).max(1);
            let sd = svd(&shifted);
            let mut eigvecs = CMat::zeros(r, geo);
            for (col, row) in ((k - geo)..k).enumerate() {
                let s = sd.v_h.row(row).adjoint();
                let vec = &utop * s;
                let nv = vnorm(&vec).max(1e-300);
                eigvecs.set_column(col, &(vec / c(nv, 0.0)));
            }
            let m = poly.eval(sigma);
            let residual = (0..geo).map(|j| vnorm(&(&m * eigvecs.column(j)))).fold(0.0, f64::max);
            SpectrumPoint { sigma, alg_mult: alg, partials, unresolved_chains, eigvecs, residual }
        })
        .collect();
    sort_points(&mut points);
    Ok(Spectrum { y, method: Method::Contour, points })
}

/// Result of the strip boundary check over a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteSpecReport {
    pub ok: bool,
    /// Smallest distance from any eigenvalue to either boundary line.
    pub min_distance: f64,
    /// Grid points `(y, Re s, Im s)` where the check failed.
    pub violations: Vec<(f64, f64, f64)>,
}

/// Checks that no eigenvalue lies within `tol` of the lines `Im s = gamma`
/// and `Im s = gamma - order`.
pub fn check_finite_specb(family: &MatrixPolyFamily, ys: &[f64], strip: &Strip, tol: f64, rank_tol: f64) -> Result<FiniteSpecReport> {
    let per_y: Vec<Result<Vec<C64>>> = ys.par_iter().map(|&y| finite_eigenvalues(&family.at(y), rank_tol)).collect();
    let mut min_distance = f64::INFINITY;
    let mut violations = Vec::new();
    for (&y, eig) in ys.iter().zip(per_y) {
        for s in eig? {
            let dist = strip.boundary_distance(s);
            min_distance = min_distance.min(dist);
            if dist <= tol {
                violations.push((y, s.re, s.im));
            }
        }
    }
    Ok(FiniteSpecReport { ok: violations.is_empty(), min_distance, violations })
}

/// Uniform grid `2 pi k / n` on the circle.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub y: f64,
    pub sigma: C64,
    /// Index of the spectrum point at this `y`.
    pub point: usize,
    pub collision: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub id: usize,
    pub samples: Vec<CurveSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurves {
    pub spectra: Vec<Spectrum>,
    pub curves: Vec<Curve>,
    /// Grid values of `y` where curves meet or matching was ambiguous.
    pub collisions: Vec<f64>,
    /// Grid values of `y` where the matching was ambiguous.
    pub ambiguous: Vec<f64>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Assignment of predicted positions to slots minimizing the total squared
/// distance. Returns the assignment and whether a distinct assignment comes
/// within a few percent of the optimum.
fn assign(pred: &[C64], slots: &[(usize, C64)]) -> (Vec<usize>, bool) {
    let n = pred.len();
    let cost = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| (pred[i] - slots[j].1).norm_sqr()).sum() };
    if n <= 7 {
        let mut scored: Vec<(f64, Vec<usize>)> = permutations(n).into_iter().map(|p| (cost(&p), p)).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best = scored[0].clone();
        let same_points = |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(&x, &y)| slots[x].0 == slots[y].0);
        let ambiguous = scored
            .iter()
            .skip(1)
            .find(|(_, p)| !same_points(p, &best.1))
            .is_some_and(|(c2, _)| *c2 <= 1.05 * best.0 + 1e-24);
        (best.1, ambiguous)
    } else {
        let mut used = vec![false; n];
        let mut out = vec![0; n];
        for i in 0..n {
            let j = (0..n)
                .filter(|&j| !used[j])
                .min_by(|&a, &b| (pred[i] - slots[a].1).norm().total_cmp(&(pred[i] - slots[b].1).norm()))
                .expect("free slot");
            used[j] = true;
            out[i] = j;
        }
        (out, false)
    }
}

/// Eigenvalue curves over a grid of `y` values, matched by nearest-neighbour
/// continuation with a linear velocity prediction, re-seeded after collisions.
pub fn spectrum_curve(family: &MatrixPolyFamily, ys: &[f64], strip: &Strip, tol: &Tolerances) -> Result<SpectralCurves> {
    let spectra: Vec<Spectrum> = ys
        .par_iter()
        .map(|&y| companion_solve(family, y, strip, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(curves_from_spectra(spectra))
}

/// Matching step of [`spectrum_curve`] on precomputed spectra.
pub fn curves_from_spectra(spectra: Vec<Spectrum>) -> SpectralCurves {
    let slots_of = |s: &Spectrum| -> Vec<(usize, C64)> {
        s.points.iter().enumerate().flat_map(|(i, p)| std::iter::repeat_n((i, p.sigma), p.alg_mult)).collect()
    };
    let n = spectra.first().map(|s| s.total_multiplicity()).unwrap_or(0);
    let mut curves: Vec<Curve> = (0..n).map(|id| Curve { id, samples: vec![] }).collect();
    let mut collisions = Vec::new();
    let mut ambiguous = Vec::new();
    for (k, spec) in spectra.iter().enumerate() {
        let slots = slots_of(spec);
        if slots.len() != n {
            // Strip count changed: restart curve identities at this point.
            ambiguous.push(spec.y);
        }
        let m = slots.len().min(n);
        let pred: Vec<C64> = curves
            .iter()
            .take(m)
            .map(|cv| match cv.samples.len() {
                0 => C64::default(),
                // After a collision the velocity is meaningless: re-seed.
                l if cv.samples[l - 1].collision || l == 1 => cv.samples[l - 1].sigma,
                l => cv.samples[l - 1].sigma * 2.0 - cv.samples[l - 2].sigma,
            })
            .collect();
        let (assignment, amb) = if k == 0 { ((0..m).collect(), false) } else { assign(&pred, &slots[..m]) };
        let mut flagged = amb;
        for (ci, &si) in assignment.iter().enumerate() {
            let (pi, sigma) = slots[si];
            let merged = spec.points[pi].alg_mult > 1;
            flagged |= merged;
            curves[ci].samples.push(CurveSample { y: spec.y, sigma, point: pi, collision: merged || amb });
        }
        if amb {
            ambiguous.push(spec.y);
        }
        if flagged {
            collisions.push(spec.y);
        }
    }
    SpectralCurves { spectra, curves, collisions, ambiguous }
}

/// Circle or ellipse separating the strip eigenvalues of `poly` from all
/// other finite eigenvalues. `None` when the strip spectrum is empty.
pub fn separating_contour(poly: &MatrixPoly, strip: &Strip, nodes: usize, rank_tol: f64) -> Result<Option<Contour>> {
    let all = finite_eigenvalues(poly, rank_tol)?;
    separating_contour_for(&[all], strip, nodes)
}

/// Contour that separates the strip spectrum from the remaining spectrum at
/// every sampled `y` simultaneously.
pub fn common_separating_contour(family: &MatrixPolyFamily, ys: &[f64], strip: &Strip, nodes: usize, rank_tol: f64) -> Result<Option<Contour>> {
    let all = ys
        .par_iter()
        .map(|&y| finite_eigenvalues(&family.at(y), rank_tol))
        .collect::<Result<Vec<_>>>()?;
    separating_contour_for(&all, strip, nodes)
}

fn separating_contour_for(sets: &[Vec<C64>], strip: &Strip, nodes: usize) -> Result<Option<Contour>> {
    let inside: Vec<C64> = sets.iter().flatten().copied().filter(|s| strip.contains(*s)).collect();
    let outside: Vec<C64> = sets.iter().flatten().copied().filter(|s| !strip.contains(*s)).collect();
    if inside.is_empty() {
        return Ok(None);
    }
    let lo = inside.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi = inside.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let center = c(0.5 * (lo + hi), strip.mid());
    // Aspect ratios q: level sets sqrt((dx/q)^2 + dy^2) for wide ellipses,
    // q = 1 is a circle.
    for q in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let metric = |z: C64| {
            let w = z - center;
            ((w.re / q).powi(2) + w.im.powi(2)).sqrt()
        };
        let r_in = inside.iter().map(|&z| metric(z)).fold(0.0, f64::max);
        let r_out = outside.iter().map(|&z| metric(z)).fold(f64::INFINITY, f64::min);
        let ok = r_out > 1.05 * r_in + 1e-9;
        if !ok {
            continue;
        }
        let b = if r_out.is_infinite() {
            r_in + 0.5 * strip.height().clamp(0.25, 1.0)
        } else if r_in < 1e-3 * r_out {
            0.5 * r_out
        } else {
            (r_in * r_out).sqrt()
        };
        let shape = if q == 1.0 {
            Shape::Circle { center, radius: b }
        } else {
            Shape::Ellipse { center, semi_re: q * b, semi_im: b }
        };
        return Contour::new(shape, nodes).map(Some);
    }
    Err(Error::NoSeparatingContour)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_poly(coeffs: &[C64]) -> MatrixPoly {
        MatrixPoly::new(coeffs.iter().map(|&z| CMat::from_element(1, 1, z)).collect()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_quadratic_roots() {
        // s^2 + 1 = 0.
        let p = scalar_poly(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s = companion_solve_poly(&p, 0.0, None, &tol()).unwrap();
        assert_eq!(s.points.len(), 2);
        assert!((s.points[0].sigma - c(0.0, 1.0)).norm() < 1e-14);
        assert!((s.points[1].sigma - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_leading_coefficient_uses_shift() {
        // diag(s - 0.3i, 1 + 0 s) with a singular leading block.
        let c0 = CMat::from_row_slice(2, 2, &[c(0.0, -0.3), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let c1 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p = MatrixPoly::new(vec![c0, c1]).unwrap();
        let s = companion_solve_poly(&p, 0.0, None, &tol()).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0].sigma - c(0.0, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_partials() {
        // [[s, 1], [0, s]] has a single chain of length 2 at 0.
        let c0 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p = MatrixPoly::new(vec![c0, CMat::identity(2, 2)]).unwrap();
        let s = companion_solve_poly(&p, 0.0, None, &tol()).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].alg_mult, 2);
        assert_eq!(s.points[0].partials, vec![2]);
        // s I_2 is semisimple.
        let p2 = MatrixPoly::new(vec![CMat::zeros(2, 2), CMat::identity(2, 2)]).unwrap();
        let s2 = companion_solve_poly(&p2, 0.0, None, &tol()).unwrap();
        assert_eq!(s2.points[0].partials, vec![1, 1]);
    }

    #[test]
    fn chain_bookkeeping() {
        assert_eq!(chains_from_kernel_dims(&[2, 3], 3), (vec![2, 1], 0));
        assert_eq!(chains_from_kernel_dims(&[1, 2, 3, 4], 5), (vec![], 1));
        assert_eq!(chains_from_kernel_dims(&[1], 1), (vec![1], 0));
    }

    #[test]
    fn contour_matches_companion_for_cubic() {
        let p = scalar_poly(&[c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let ct = Contour::circle(C64::default(), 1.2, 128).unwrap();
        let a = companion_solve_poly(&p, 0.0, None, &tol()).unwrap();
        let b = contour_solve_poly(&p, 0.0, &ct, 0, 3, &tol()).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.sigma - y.sigma).norm() < 1e-10);
            assert!(y.residual < 1e-9);
        }
    }

    #[test]
    fn degenerate_family_is_reported() {
        let p = MatrixPoly::new(vec![CMat::zeros(2, 2), CMat::zeros(2, 2)]).unwrap();
        assert!(matches!(finite_eigenvalues(&p, 1e-9), Err(Error::DegenerateFamily(_))));
    }
}
