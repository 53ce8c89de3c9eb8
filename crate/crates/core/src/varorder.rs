//! Matrix powers `rho^a` by resolvent integrals, delta-admissible
//! decompositions, symbol estimates for `<eta>^{a(y)}`, variable-order
//! Sobolev norms on the circle and the trace-Sobolev norm.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{TrigMatrix, TrigPoly};
use crate::linalg::{binom, c, cluster_points, eigenvalues, factorial, fro, inverse, mean, svd, CMat, CVec, C64, I};
use crate::trace::{xdx_endomorphism, TraceFrame};

/// Smooth endomorphism field `a(y)` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct EndomorphismField {
    pub a: TrigMatrix,
}

impl EndomorphismField {
    pub fn new(a: TrigMatrix) -> Result<Self> {
        if a.rows != a.cols || a.rows == 0 {
            return Err(Error::InvalidInput("endomorphism field must be square".into()));
        }
        Ok(Self { a })
    }

    pub fn constant(m: CMat) -> Self {
        Self { a: TrigMatrix::constant(m) }
    }

    pub fn rank(&self) -> usize {
        self.a.rows
    }

    pub fn at(&self, y: f64) -> CMat {
        self.a.eval(y)
    }
}

/// `[[0.5 + 0.2 sin y, 1], [0, 0.5 - 0.2 sin y]]`: eigenvalues meet at `y = 0, pi`.
pub fn crossing_field() -> EndomorphismField {
    let a = TrigMatrix::from_entries(2, 2, |i, j| match (i, j) {
        (0, 0) => TrigPoly::sin_affine(0.5, 0.2),
        (0, 1) => TrigPoly::constant(1.0),
        (1, 1) => TrigPoly::sin_affine(0.5, -0.2),
        _ => TrigPoly::default(),
    });
    EndomorphismField { a }
}

/// Scalar metric `g(y) > 0` and bracket `<eta>_y = (1 + g eta^2)^{1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketMetric {
    pub g: TrigPoly,
}

impl BracketMetric {
    pub fn new(g: TrigPoly) -> Result<Self> {
        let worst = (0..512)
            .map(|k| g.eval(2.0 * PI * k as f64 / 512.0))
            .map(|v| if v.im.abs() > 1e-12 * v.norm().max(1.0) { f64::NEG_INFINITY } else { v.re })
            .fold(f64::INFINITY, f64::min);
        if !(worst > 0.0) {
            return Err(Error::InvalidInput("metric must be real and positive".into()));
        }
        Ok(Self { g })
    }

    pub fn unit() -> Self {
        Self { g: TrigPoly::constant(1.0) }
    }

    pub fn g(&self, y: f64) -> f64 {
        self.g.eval(y).re
    }

    pub fn bracket(&self, y: f64, eta: f64) -> f64 {
        (1.0 + self.g(y) * eta * eta).sqrt()
    }

    /// `d^j/d eta^j ln <eta>` for `j = 1..=n`.
    fn log_bracket_derivatives(&self, y: f64, eta: f64, n: usize) -> Vec<f64> {
        let r = self.g(y).sqrt();
        let (p, q) = (I * r, -I * r);
        (1..=n)
            .map(|j| {
                let f = 0.5 * factorial(j - 1) * if j % 2 == 1 { 1.0 } else { -1.0 };
                let v = p.powu(j as u32) / (1.0 + p * eta).powu(j as u32) + q.powu(j as u32) / (1.0 + q * eta).powu(j as u32);
                f * v.re
            })
            .collect()
    }
}

/// Precomputed quadrature for `rho^a = (1/(2 pi i)) \oint rho^s (s - a)^{-1} ds`
/// on a circle around the spectrum. Valid for `|ln rho| <= log_max`.
#[derive(Clone, Debug)]
pub struct PowerPlan {
    pub center: C64,
    pub radius: f64,
    nodes: Vec<(C64, CMat)>,
}

const PLAN_START: usize = 64;
const PLAN_MAX: usize = 8192;
const PLAN_TOL: f64 = 1e-14;

fn circle_terms(a: &CMat, center: C64, radius: f64, n: usize) -> Result<Vec<(C64, CMat)>> {
    let id = CMat::identity(a.nrows(), a.nrows());
    (0..n)
        .map(|k| {
            let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            let s = center + e * radius;
            let r = inverse(&(id.clone() * s - a)).ok_or(Error::NodeOnSingularity { node: s, sigma_min: 0.0 })?;
            // ds / (2 pi i) = e radius / n.
            Ok((s, r * (e * radius / n as f64)))
        })
        .collect()
}

impl PowerPlan {
    pub fn new(a: &CMat, log_max: f64) -> Result<Self> {
        let ev = eigenvalues(a);
        let center = mean(&ev);
        let spread = ev.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
        let margin = 1.0 / log_max.abs().max(1.0);
        let radius = spread + margin;
        let probes = [log_max.abs().max(1e-3), -log_max.abs().max(1e-3)];
        let mut n = PLAN_START;
        let mut plan = Self { center, radius, nodes: circle_terms(a, center, radius, n)? };
        loop {
            let next = Self { center, radius, nodes: circle_terms(a, center, radius, 2 * n)? };
            let diff = probes
                .iter()
                .map(|&l| {
                    let (p, q) = (plan.apply_log(l), next.apply_log(l));
                    fro(&(&p - &q)) / fro(&q).max(1e-300)
                })
                .fold(0.0, f64::max);
            plan = next;
            n *= 2;
            if diff <= PLAN_TOL || n >= PLAN_MAX {
                return Ok(plan);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `rho^a` with `ln rho = l`.
    pub fn apply_log(&self, l: f64) -> CMat {
        let dim = self.nodes[0].1.nrows();
        self.nodes.iter().fold(CMat::zeros(dim, dim), |acc, (s, m)| acc + m * (s * l).exp())
    }

    pub fn apply(&self, rho: f64) -> CMat {
        self.apply_log(rho.ln())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("rho must be positive, got {rho}")))
    }
}

/// `rho^a` by the resolvent integral on an automatically chosen circle.
pub fn matrix_power(a: &CMat, rho: f64) -> Result<CMat> {
    check_rho(rho)?;
    Ok(PowerPlan::new(a, rho.ln())?.apply(rho))
}

/// `rho^a` on a given circle with `n` nodes. Fails when an eigenvalue sits
/// within two node spacings of the circle.
pub fn matrix_power_on(a: &CMat, rho: f64, center: C64, radius: f64, n: usize) -> Result<CMat> {
    check_rho(rho)?;
    let spacing = 2.0 * PI * radius / n as f64;
    let distance = eigenvalues(a).iter().map(|z| ((z - center).norm() - radius).abs()).fold(f64::INFINITY, f64::min);
    if distance < 2.0 * spacing || eigenvalues(a).iter().any(|z| (z - center).norm() >= radius) {
        return Err(Error::ContourTooTight { distance, spacing });
    }
    let nodes = circle_terms(a, center, radius, n)?;
    Ok(PowerPlan { center, radius, nodes }.apply(rho))
}

/// Reference value `exp(ln(rho) a)`.
pub fn matrix_power_exp(a: &CMat, rho: f64) -> CMat {
    (a * C64::new(rho.ln(), 0.0)).exp()
}

/// One disk `D(center, radius)` of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
    pub multiplicity: usize,
}

/// Fraction of a disk radius inside which the spectrum must stay on `U`.
pub const DISK_MARGIN: f64 = 0.75;
const PROJ_NODES: usize = 256;
const U_STEPS: usize = 256;

#[derive(Clone, Debug)]
pub struct AdmissibleDecomposition {
    pub y0: f64,
    pub delta: f64,
    pub disks: Vec<Disk>,
    /// Validity interval `(lo, hi)` around `y0`.
    pub u: (f64, f64),
    pub full_circle: bool,
    /// Projections tabulated on `U`: `(y, [Pi_l(y)])`.
    pub samples: Vec<(f64, Vec<CMat>)>,
    field: EndomorphismField,
}

/// Riesz projection onto the spectrum of `a` inside a disk.
pub fn riesz_projection(a: &CMat, disk: &Disk) -> Result<CMat> {
    let terms = circle_terms(a, disk.center, disk.radius, PROJ_NODES)?;
    let n = a.nrows();
    Ok(terms.into_iter().fold(CMat::zeros(n, n), |acc, (_, m)| acc + m))
}

fn contained(ev: &[C64], disks: &[Disk]) -> bool {
    let mut counts = vec![0; disks.len()];
    for z in ev {
        match disks.iter().position(|d| (z - d.center).norm() < DISK_MARGIN * d.radius) {
            Some(k) => counts[k] += 1,
            None => return false,
        }
    }
    counts.iter().zip(disks).all(|(n, d)| *n == d.multiplicity)
}

impl AdmissibleDecomposition {
    pub fn projections(&self, y: f64) -> Result<Vec<CMat>> {
        let a = self.field.at(y);
        self.disks.iter().map(|d| riesz_projection(&a, d)).collect()
    }

    /// Largest defect of `Pi^2 = Pi`, `sum Pi = I` and `[Pi, a] = 0` over the samples.
    pub fn identity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (y, ps) in &self.samples {
            let a = self.field.at(*y);
            let n = a.nrows();
            let sum = ps.iter().fold(CMat::zeros(n, n), |acc, p| acc + p);
            worst = worst.max(fro(&(sum - CMat::identity(n, n))));
            for p in ps {
                worst = worst.max(fro(&(p * p - p)));
                worst = worst.max(fro(&(p * &a - &a * p)));
            }
        }
        worst
    }

    /// `max |rho^a - sum Pi rho^a Pi|` over the samples.
    pub fn power_compatibility(&self, rho: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for (y, ps) in &self.samples {
            let pw = matrix_power(&self.field.at(*y), rho)?;
            let n = pw.nrows();
            let split = ps.iter().fold(CMat::zeros(n, n), |acc, p| acc + p * &pw * p);
            worst = worst.max(fro(&(&pw - split)) / fro(&pw));
        }
        Ok(worst)
    }

    /// Frame adapted to the decomposition: columns `Pi_l(y) V_l` with `V_l`
    /// an orthonormal basis of the range of `Pi_l(y0)`.
    pub fn adapted_frame(&self, y: f64) -> Result<CMat> {
        let p0 = self.projections(self.y0)?;
        let py = self.projections(y)?;
        let n = self.field.rank();
        let mut cols = Vec::with_capacity(n);
        for (d, (a, b)) in self.disks.iter().zip(p0.iter().zip(&py)) {
            let u = svd(a).u;
            for k in 0..d.multiplicity {
                cols.push(b * u.column(k));
            }
        }
        Ok(CMat::from_columns(&cols))
    }

    pub fn contains(&self, y: f64) -> bool {
        self.full_circle || (y >= self.u.0 && y <= self.u.1)
    }
}

/// Greedy decomposition of `spec a(y0)` into disks of radius below
/// `delta/2`, extended over the largest interval on which the spectrum
/// stays well inside the disks.
pub fn admissible_decomposition(field: &EndomorphismField, y0: f64, delta: f64) -> Result<AdmissibleDecomposition> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let ev = eigenvalues(&field.at(y0));
    let groups = cluster_points(&ev, 0.25 * delta);
    let centers: Vec<C64> = groups.iter().map(|g| mean(&g.iter().map(|&i| ev[i]).collect::<Vec<_>>())).collect();
    let mut disks = Vec::new();
    for (k, g) in groups.iter().enumerate() {
        let spread = g.iter().map(|&i| (ev[i] - centers[k]).norm()).fold(0.0, f64::max);
        let gap = centers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, z)| (z - centers[k]).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.45 * delta).min(0.45 * gap);
        if spread >= DISK_MARGIN * radius {
            return Err(Error::ClusteringImpossible { delta });
        }
        disks.push(Disk { center: centers[k], radius, multiplicity: g.len() });
    }
    let ok = |y: f64| contained(&eigenvalues(&field.at(y)), &disks);
    let h = 2.0 * PI / U_STEPS as f64;
    let edge = |dir: f64| -> Option<f64> {
        let mut good = 0.0;
        for k in 1..=U_STEPS / 2 {
            let t = k as f64 * h;
            if !ok(y0 + dir * t) {
                let (mut lo, mut hi) = (good, t);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if ok(y0 + dir * mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(lo);
            }
            good = t;
        }
        None
    };
    let (right, left) = (edge(1.0), edge(-1.0));
    let full_circle = right.is_none() && left.is_none();
    let u = if full_circle { (y0 - PI, y0 + PI) } else { (y0 - left.unwrap_or(PI), y0 + right.unwrap_or(PI)) };
    let mut dec = AdmissibleDecomposition { y0, delta, disks, u, full_circle, samples: vec![], field: field.clone() };
    let count = 33;
    dec.samples = (0..count)
        .map(|k| {
            let y = u.0 + (u.1 - u.0) * k as f64 / (count - 1) as f64;
            Ok((y, dec.projections(y)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dec)
}

/// `<eta>_y^{a(y) + s}`.
pub fn bracket_power_symbol(field: &EndomorphismField, metric: &BracketMetric, y: f64, eta: f64, s: f64) -> Result<CMat> {
    let a = shifted(&field.at(y), s);
    matrix_power(&a, metric.bracket(y, eta))
}

/// `|eta|_y^{a(y)}` with `|eta|_y = g(y)^{1/2} |eta|`.
pub fn homogeneous_power_symbol(field: &EndomorphismField, metric: &BracketMetric, y: f64, eta: f64) -> Result<CMat> {
    matrix_power(&field.at(y), metric.g(y).sqrt() * eta.abs())
}

fn shifted(a: &CMat, s: f64) -> CMat {
    a + CMat::identity(a.nrows(), a.nrows()) * c(s, 0.0)
}

/// Complete Bell polynomial `B_n(x_1, ..., x_n)` with commuting matrix arguments.
pub fn bell_polynomial(xs: &[CMat], n: usize) -> CMat {
    let dim = xs.first().map_or(1, |m| m.nrows());
    let mut b = vec![CMat::identity(dim, dim)];
    for k in 0..n {
        let next = (0..=k).fold(CMat::zeros(dim, dim), |acc, j| acc + &b[k - j] * &xs[j] * c(binom(k, j), 0.0));
        b.push(next);
    }
    b.swap_remove(n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub alpha: u32,
    pub beta: u32,
    pub slope: f64,
    pub bound: f64,
    pub constant: f64,
    pub pass: bool,
    /// Richardson disagreement above 10% at some sample.
    pub fd_unstable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolCheckOptions {
    pub delta: f64,
    pub y0: f64,
    pub alpha_max: u32,
    pub beta_max: u32,
    pub eta_range: (f64, f64),
    pub eta_samples: usize,
    pub y_samples: usize,
    pub step: f64,
}

impl Default for SymbolCheckOptions {
    fn default() -> Self {
        Self {
            delta: 0.25,
            y0: PI / 2.0,
            alpha_max: 2,
            beta_max: 2,
            eta_range: (1e2, 1e4),
            eta_samples: 17,
            y_samples: 9,
            step: 1e-4,
        }
    }
}

/// `(d_eta^beta p~)(y, eta)` in the adapted frame `T(y)`, where
/// `p~ = T^{-1} <eta>^{a} T`.
fn eta_derivative(dec: &AdmissibleDecomposition, metric: &BracketMetric, y: f64, etas: &[f64], beta: u32) -> Result<Vec<CMat>> {
    let a = dec.field.at(y);
    let t = dec.adapted_frame(y)?;
    let ti = inverse(&t).ok_or(Error::RankLoss { y, ratio: 0.0 })?;
    let lmax = etas.iter().map(|&e| metric.bracket(y, e).ln()).fold(1.0, f64::max);
    let plan = PowerPlan::new(&a, lmax)?;
    Ok(etas
        .iter()
        .map(|&eta| {
            let p = plan.apply(metric.bracket(y, eta));
            let dl = metric.log_bracket_derivatives(y, eta, beta as usize);
            let xs: Vec<CMat> = dl.iter().map(|&d| &a * c(d, 0.0)).collect();
            let bell = if beta == 0 { CMat::identity(a.nrows(), a.nrows()) } else { bell_polynomial(&xs, beta as usize) };
            &ti * p * bell * &t
        })
        .collect())
}

fn central_difference(f: &[Vec<CMat>; 3], alpha: u32, h: f64) -> Vec<CMat> {
    // f = [values at y - h, y, y + h]
    (0..f[1].len())
        .map(|k| match alpha {
            1 => (&f[2][k] - &f[0][k]) * c(0.0, -1.0 / (2.0 * h)),
            2 => (&f[2][k] - &f[1][k] * c(2.0, 0.0) + &f[0][k]) * c(-1.0 / (h * h), 0.0),
            _ => unreachable!("orders 1 and 2 only"),
        })
        .collect()
}

fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fitted growth of `|(D_y^alpha d_eta^beta p~) p~^{-1}|` in `<eta>` over a
/// compact part of the admissible interval around `y0`.
pub fn symbol_estimate_check(field: &EndomorphismField, metric: &BracketMetric, opts: &SymbolCheckOptions) -> Result<Vec<EstimateRow>> {
    if opts.alpha_max > 2 {
        return Err(Error::InvalidInput("y-derivatives up to order 2 are supported".into()));
    }
    if !(opts.eta_range.0 >= 1.0 && opts.eta_range.1 > opts.eta_range.0) || opts.eta_samples < 2 || opts.y_samples == 0 {
        return Err(Error::InvalidInput("eta range must satisfy 1 <= lo < hi with at least two samples".into()));
    }
    let dec = admissible_decomposition(field, opts.y0, opts.delta)?;
    let (lo, hi) = if dec.full_circle { (opts.y0 - PI, opts.y0 + PI) } else { dec.u };
    let w = 0.25 * (hi - lo);
    let mid = 0.5 * (lo + hi);
    let ys: Vec<f64> = if opts.y_samples == 1 {
        vec![opts.y0]
    } else {
        (0..opts.y_samples).map(|k| mid - w + 2.0 * w * k as f64 / (opts.y_samples - 1) as f64).collect()
    };
    let (e0, e1) = opts.eta_range;
    let etas: Vec<f64> = (0..opts.eta_samples).map(|k| e0 * (e1 / e0).powf(k as f64 / (opts.eta_samples - 1) as f64)).collect();
    let h = opts.step;
    let mut rows = Vec::new();
    for beta in 0..=opts.beta_max {
        for alpha in 0..=opts.alpha_max {
            let per_y: Vec<(Vec<f64>, bool)> = ys
                .par_iter()
                .map(|&y| -> Result<(Vec<f64>, bool)> {
                    let inv: Vec<CMat> = eta_derivative(&dec, metric, y, &etas, 0)?
                        .iter()
                        .map(|p| inverse(p).ok_or(Error::RankLoss { y, ratio: 0.0 }))
                        .collect::<Result<_>>()?;
                    let q = |yy: f64| eta_derivative(&dec, metric, yy, &etas, beta);
                    let (vals, unstable) = if alpha == 0 {
                        (q(y)?, false)
                    } else {
                        let coarse = central_difference(&[q(y - h)?, q(y)?, q(y + h)?], alpha, h);
                        let fine = central_difference(&[q(y - h / 2.0)?, q(y)?, q(y + h / 2.0)?], alpha, h / 2.0);
                        let mut unstable = false;
                        let rich: Vec<CMat> = coarse
                            .iter()
                            .zip(&fine)
                            .map(|(a, b)| {
                                let r = (b * c(4.0, 0.0) - a) * c(1.0 / 3.0, 0.0);
                                if fro(&(&r - b)) > 0.1 * fro(&r) && fro(&r) > 1e-12 {
                                    unstable = true;
                                }
                                r
                            })
                            .collect();
                        (rich, unstable)
                    };
                    let norms = vals.iter().zip(&inv).map(|(v, pi)| crate::linalg::norm2(&(v * pi))).collect();
                    Ok((norms, unstable))
                })
                .collect::<Result<Vec<_>>>()?;
            let unstable = per_y.iter().any(|p| p.1);
            let sup: Vec<f64> = (0..etas.len()).map(|k| per_y.iter().map(|p| p.0[k]).fold(0.0, f64::max)).collect();
            let bound = -(beta as f64) + opts.delta * alpha as f64;
            let pts: Vec<(f64, f64)> = etas
                .iter()
                .zip(&sup)
                .filter(|(_, v)| **v > 1e-300)
                .map(|(&e, &v)| (metric_sup_bracket(metric, &ys, e).ln(), v.ln()))
                .collect();
            let (slope, constant) = if pts.len() < 2 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                let (xs, vs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let (s, b) = fit_line(&xs, &vs);
                (s, b.exp())
            };
            rows.push(EstimateRow { alpha, beta, slope, bound, constant, pass: slope <= bound + 0.1, fd_unstable: unstable });
        }
    }
    Ok(rows)
}

fn metric_sup_bracket(metric: &BracketMetric, ys: &[f64], eta: f64) -> f64 {
    ys.iter().map(|&y| metric.bracket(y, eta)).fold(0.0, f64::max)
}

/// Fraction of `|u|^2` above which the top octave counts as aliased.
pub const ALIAS_TOL: f64 = 1e-16;

fn frequencies(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k < n / 2 { k as f64 } else { k as f64 - n as f64 }).collect()
}

/// Fourier coefficients `u^(eta) = (1/N) sum_j u(y_j) e^{-i y_j eta}`, one
/// row per frequency, plus the fraction of energy with `|eta| > N/4`.
fn fourier_coefficients(u: &[CVec]) -> Result<(Vec<CVec>, f64)> {
    let n = u.len();
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!("grid size must be a power of two >= 4, got {n}")));
    }
    let r = u[0].len();
    if u.iter().any(|v| v.len() != r) {
        return Err(Error::InvalidInput("samples differ in length".into()));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut out = vec![CVec::zeros(r); n];
    for comp in 0..r {
        let mut buf: Vec<C64> = u.iter().map(|v| v[comp]).collect();
        fft.process(&mut buf);
        for (k, z) in buf.into_iter().enumerate() {
            out[k][comp] = z / n as f64;
        }
    }
    let etas = frequencies(n);
    let total: f64 = out.iter().map(|v| v.norm_squared()).sum();
    let top: f64 = out.iter().zip(&etas).filter(|(_, e)| e.abs() > n as f64 / 4.0).map(|(v, _)| v.norm_squared()).sum();
    Ok((out, if total > 0.0 { top / total } else { 0.0 }))
}

/// Variable-order norm with a field tabulated at the grid points
/// `y_j = 2 pi j / N`: `(Lambda u)(y_j) = sum_eta e^{i y_j eta} <eta>_{y_j}^{a_j + s} u^(eta)`,
/// measured in the mean-square norm `((1/N) sum_j |.|^2)^{1/2}`.
pub fn varorder_norm_tabulated(u: &[CVec], field: &[CMat], metric: &BracketMetric, s: f64) -> Result<f64> {
    let n = u.len();
    if field.len() != n {
        return Err(Error::InvalidInput("field must be tabulated on the sample grid".into()));
    }
    let (uh, alias) = fourier_coefficients(u)?;
    if alias > ALIAS_TOL {
        return Err(Error::AliasingError { fraction: alias });
    }
    let etas = frequencies(n);
    let active: Vec<usize> = (0..n).filter(|&k| uh[k].norm_squared() > 0.0).collect();
    let sq: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let y = 2.0 * PI * j as f64 / n as f64;
            let a = shifted(&field[j], s);
            let lmax = active.iter().map(|&k| metric.bracket(y, etas[k]).ln()).fold(1.0, f64::max);
            let plan = PowerPlan::new(&a, lmax)?;
            let mut v = CVec::zeros(u[0].len());
            for &k in &active {
                let p = plan.apply(metric.bracket(y, etas[k]));
                v += (p * &uh[k]) * C64::from_polar(1.0, y * etas[k]);
            }
            Ok(v.norm_squared())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sq.iter().sum::<f64>() / n as f64).sqrt())
}

/// Variable-order norm for a trigonometric endomorphism field.
pub fn varorder_norm(u: &[CVec], field: &EndomorphismField, metric: &BracketMetric, s: f64) -> Result<f64> {
    let n = u.len();
    if field.rank() != u.first().map_or(0, |v| v.len()) {
        return Err(Error::InvalidInput("field rank does not match the samples".into()));
    }
    let tab: Vec<CMat> = (0..n).map(|j| field.at(2.0 * PI * j as f64 / n as f64)).collect();
    varorder_norm_tabulated(u, &tab, metric, s)
}

/// Norm `H^{s - x d/dx}` of the section `sum_j c_j(y) tau_j(y)` of a trace
/// frame given on a uniform grid: the variable-order norm of the coefficient
/// vectors with field `s I - X(y)`, `X` the matrix of `x d/dx` in the frame.
pub fn trace_sobolev_norm(frame: &TraceFrame, coeffs: &[CVec], metric: &BracketMetric, s: f64, rank_tol: f64) -> Result<f64> {
    let n = frame.ys.len();
    if coeffs.len() != n {
        return Err(Error::InvalidInput("one coefficient vector per grid point is required".into()));
    }
    for (j, &y) in frame.ys.iter().enumerate() {
        if (y - 2.0 * PI * j as f64 / n as f64).abs() > 1e-12 {
            return Err(Error::InvalidInput("frame must live on the uniform grid 2 pi j / N".into()));
        }
    }
    let field: Vec<CMat> = frame
        .elements
        .par_iter()
        .map(|els| {
            let x = xdx_endomorphism(els, rank_tol)?;
            Ok(CMat::identity(x.nrows(), x.nrows()) * c(s, 0.0) - x)
        })
        .collect::<Result<Vec<_>>>()?;
    varorder_norm_tabulated(coeffs, &field, metric, 0.0)
}

/// `max |p(y, rho eta) - rho^mu rho^{-b} p(y, eta) rho^a| / |p(y, rho eta)|`
/// over `rho in {2, 4, 8}`, `|eta| in [1, 8]` and the given `ys`.
pub fn twisted_homogeneity_check<P>(p: P, a: &EndomorphismField, b: &EndomorphismField, mu: f64, ys: &[f64]) -> Result<f64>
where
    P: Fn(f64, f64) -> Result<CMat>,
{
    let etas = [1.0, 1.5, 2.0, 3.0, 5.0, 8.0, -1.0, -2.5, -8.0];
    let mut worst = 0.0f64;
    for &y in ys {
        let (ay, by) = (a.at(y), b.at(y));
        for rho in [2.0, 4.0, 8.0] {
            let ra = matrix_power(&ay, rho)?;
            let rb = matrix_power(&(-&by), rho)?;
            for &eta in &etas {
                let lhs = p(y, rho * eta)?;
                let rhs = &rb * p(y, eta)? * &ra * c(rho.powf(mu), 0.0);
                worst = worst.max(fro(&(&lhs - rhs)) / fro(&lhs).max(1e-300));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    #[test]
    fn power_of_zero_and_diagonal() {
        assert!(fro(&(matrix_power(&CMat::zeros(3, 3), 7.0).unwrap() - CMat::identity(3, 3))) < 1e-13);
        let p = matrix_power(&diag(&[0.5, 1.5]), 4.0).unwrap();
        assert!(fro(&(p - diag(&[2.0, 8.0]))) < 1e-12);
    }

    #[test]
    fn jordan_block_power() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        for rho in [0.3, 2.0, 9.0] {
            let want = CMat::from_row_slice(2, 2, &[c(rho, 0.0), c(rho * rho.ln(), 0.0), c(0.0, 0.0), c(rho, 0.0)]);
            assert!(fro(&(matrix_power(&a, rho).unwrap() - &want)) < 1e-10 * rho.max(1.0));
            assert!(fro(&(matrix_power_exp(&a, rho) - want)) < 1e-12 * rho.max(1.0));
        }
    }

    #[test]
    fn tight_contour_rejected() {
        let a = diag(&[0.0, 0.99]);
        assert!(matches!(matrix_power_on(&a, 2.0, C64::default(), 1.0, 64), Err(Error::ContourTooTight { .. })));
        assert!(matrix_power_on(&a, 2.0, C64::default(), 2.0, 64).is_ok());
    }

    #[test]
    fn decomposition_of_diagonal_and_jordan() {
        let d = admissible_decomposition(&EndomorphismField::constant(diag(&[0.0, 1.0])), 0.0, 0.25).unwrap();
        assert_eq!(d.disks.len(), 2);
        assert!(d.full_circle);
        let ps = d.projections(1.0).unwrap();
        assert!(fro(&(&ps[0] - diag(&[1.0, 0.0]))) < 1e-12);
        let j = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
        let d = admissible_decomposition(&EndomorphismField::constant(j), 0.0, 0.25).unwrap();
        assert_eq!(d.disks.len(), 1);
        assert!(fro(&(&d.samples[0].1[0] - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn crossing_interval_is_proper() {
        let d = admissible_decomposition(&crossing_field(), PI / 2.0, 0.25).unwrap();
        assert_eq!(d.disks.len(), 2);
        assert!(!d.full_circle);
        assert!(d.u.0 > 0.0 && d.u.1 < PI);
        assert!(d.identity_defect() < 1e-10);
    }

    #[test]
    fn bell_polynomials_scalar() {
        let x = |v: f64| CMat::from_element(1, 1, c(v, 0.0));
        // B_3 = x1^3 + 3 x1 x2 + x3.
        let b = bell_polynomial(&[x(2.0), x(3.0), x(5.0)], 3);
        assert!((b[(0, 0)] - c(8.0 + 18.0 + 5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn log_bracket_derivatives_match_differences() {
        let m = BracketMetric::new(TrigPoly::constant(2.0)).unwrap();
        let (y, eta, h) = (0.0, 1.7, 1e-4);
        let d = m.log_bracket_derivatives(y, eta, 2);
        let l = |e: f64| m.bracket(y, e).ln();
        assert!((d[0] - (l(eta + h) - l(eta - h)) / (2.0 * h)).abs() < 1e-7);
        assert!((d[1] - (l(eta + h) - 2.0 * l(eta) + l(eta - h)) / (h * h)).abs() < 1e-5);
    }

    #[test]
    fn zero_field_is_l2() {
        let n = 32;
        let u: Vec<CVec> = (0..n)
            .map(|j| {
                let y = 2.0 * PI * j as f64 / n as f64;
                CVec::from_vec(vec![c(y.cos(), 0.0), C64::from_polar(0.5, 3.0 * y)])
            })
            .collect();
        let plain = (u.iter().map(|v| v.norm_squared()).sum::<f64>() / n as f64).sqrt();
        let got = varorder_norm(&u, &EndomorphismField::constant(CMat::zeros(2, 2)), &BracketMetric::unit(), 0.0).unwrap();
        assert!((got - plain).abs() < 1e-13);
    }

    #[test]
    fn aliasing_detected() {
        let n = 16;
        let u: Vec<CVec> = (0..n).map(|j| CVec::from_element(1, C64::from_polar(1.0, 7.0 * 2.0 * PI * j as f64 / n as f64))).collect();
        let r = varorder_norm(&u, &EndomorphismField::constant(CMat::zeros(1, 1)), &BracketMetric::unit(), 0.0);
        assert!(matches!(r, Err(Error::AliasingError { .. })));
    }

    #[test]
    fn homogeneous_symbol_is_twisted_homogeneous() {
        let f = crossing_field();
        let m = BracketMetric::unit();
        let zero = EndomorphismField::constant(CMat::zeros(2, 2));
        let d = twisted_homogeneity_check(|y, e| homogeneous_power_symbol(&f, &m, y, e), &f, &zero, 0.0, &[0.3, 1.0]).unwrap();
        assert!(d < 1e-10, "{d}");
    }
}
