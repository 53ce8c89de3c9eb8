//! Coordinate representation of wedge operators
//! `x^m A = sum a_{k alpha beta}(x, y, z) (x D_x)^k (x D_y)^alpha D_z^beta`
//! with `D = -i d`, the fiber `Z` a circle or a point and `Y` a circle.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{MatrixPolyFamily, TrigMatrix};
use crate::linalg::{binom, c, min_singular_value, CMat, C64, I};

/// `coeff * x^x * e^{i y n_y} * e^{i z n_z}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    #[serde(default)]
    pub x: u32,
    #[serde(default)]
    pub y: i32,
    #[serde(default)]
    pub z: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Monomial {
    pub fn new(x: u32, y: i32, z: i32, v: C64) -> Self {
        Self { x, y, z, re: v.re, im: v.im }
    }

    pub fn coeff(&self) -> C64 {
        c(self.re, self.im)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> C64 {
        self.coeff() * x.powi(self.x as i32) * C64::from_polar(1.0, self.y as f64 * y + self.z as f64 * z)
    }
}

/// Matrix-valued coefficient of one `(k, alpha, beta)` term. The matrix has
/// `rankF` rows and `rankE` columns; each entry is a sum of monomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffTerm {
    pub k: u32,
    #[serde(default)]
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub beta: Vec<u32>,
    pub matrix: Vec<Vec<Vec<Monomial>>>,
}

impl CoeffTerm {
    pub fn alpha_order(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn beta_order(&self) -> u32 {
        self.beta.iter().sum()
    }

    pub fn order(&self) -> u32 {
        self.k + self.alpha_order() + self.beta_order()
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> CMat {
        let rows = self.matrix.len();
        let cols = self.matrix.first().map_or(0, |r| r.len());
        CMat::from_fn(rows, cols, |i, j| self.matrix[i][j].iter().map(|m| m.eval(x, y, z)).sum())
    }

    /// Scalar multiple of the identity with a constant coefficient.
    pub fn identity(k: u32, alpha: u32, beta: u32, rank: usize, v: C64) -> Self {
        Self::diagonal(k, alpha, beta, &vec![vec![Monomial::new(0, 0, 0, v)]; rank])
    }

    pub fn diagonal(k: u32, alpha: u32, beta: u32, diag: &[Vec<Monomial>]) -> Self {
        let n = diag.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { diag[i].clone() } else { vec![] }).collect())
            .collect();
        Self { k, alpha: vec![alpha], beta: vec![beta], matrix }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberKind {
    Circle,
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub kind: FiberKind,
    #[serde(rename = "K")]
    pub modes: usize,
    #[serde(default)]
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeOperatorSpec {
    pub m: u32,
    #[serde(rename = "rankE")]
    pub rank_e: usize,
    #[serde(rename = "rankF")]
    pub rank_f: usize,
    pub gamma: f64,
    pub fiber: FiberSpec,
    pub coeffs: Vec<CoeffTerm>,
}

impl WedgeOperatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("operator: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.rank_e == 0 || self.rank_f == 0 {
            return Err(Error::InvalidInput("order and bundle ranks must be positive".into()));
        }
        if self.fiber.modes == 0 {
            return Err(Error::InvalidInput("fiber mode count must be positive".into()));
        }
        if self.fiber.kind == FiberKind::Point && self.fiber.modes != 1 {
            return Err(Error::InvalidInput("a point fiber has exactly one mode".into()));
        }
        for t in &self.coeffs {
            if t.alpha.len() > 1 {
                return Err(Error::InvalidInput("edge dimension is one: alpha has at most one entry".into()));
            }
            let point = self.fiber.kind == FiberKind::Point;
            if t.beta.len() > 1 || (point && t.beta_order() > 0) {
                return Err(Error::InvalidInput("beta does not match the fiber dimension".into()));
            }
            if t.order() > self.m {
                return Err(Error::InvalidInput(format!("term of order {} exceeds m = {}", t.order(), self.m)));
            }
            if t.matrix.len() != self.rank_f || t.matrix.iter().any(|r| r.len() != self.rank_e) {
                return Err(Error::InvalidInput("coefficient matrix must be rankF x rankE".into()));
            }
            if self.fiber.kind == FiberKind::Point && t.matrix.iter().flatten().flatten().any(|m| m.z != 0) {
                return Err(Error::InvalidInput("a point fiber admits no z dependence".into()));
            }
        }
        Ok(())
    }
}

/// Wedge principal symbol `sum_{k+alpha+beta=m} a ξ^k η^alpha ζ^beta`.
pub fn wedge_principal_symbol(spec: &WedgeOperatorSpec, point: (f64, f64, f64), covector: (f64, f64, f64)) -> Result<CMat> {
    let (xi, eta, zeta) = covector;
    if xi == 0.0 && eta == 0.0 && zeta == 0.0 {
        return Err(Error::InvalidInput("covector must be nonzero".into()));
    }
    let mut out = CMat::zeros(spec.rank_f, spec.rank_e);
    for t in spec.coeffs.iter().filter(|t| t.order() == spec.m) {
        let w = xi.powi(t.k as i32) * eta.powi(t.alpha_order() as i32) * zeta.powi(t.beta_order() as i32);
        out += t.eval(point.0, point.1, point.2) * c(w, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub min_sigma: f64,
    pub worst_point: (f64, f64, f64),
    pub worst_covector: (f64, f64, f64),
    pub elliptic: bool,
    pub samples: usize,
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Samples the principal symbol on `x in [0, 1]`, `y, z` on the circles and
/// unit covectors, and reports the smallest singular value.
pub fn ellipticity_sample_check(spec: &WedgeOperatorSpec, n: usize, tol: f64) -> Result<EllipticityReport> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let with_fiber = spec.fiber.kind == FiberKind::Circle;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut covectors: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            if with_fiber {
                let zc = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - zc * zc).sqrt();
                let th = golden * i as f64;
                (r * th.cos(), r * th.sin(), zc)
            } else {
                let th = 2.0 * PI * i as f64 / n as f64;
                (th.cos(), th.sin(), 0.0)
            }
        })
        .collect();
    // Coordinate great circles so that each covector axis plane is hit.
    let ring = 64;
    for j in 0..ring {
        let th = 2.0 * PI * j as f64 / ring as f64;
        let (a, b) = (th.cos(), th.sin());
        covectors.push((a, b, 0.0));
        if with_fiber {
            covectors.push((a, 0.0, b));
            covectors.push((0.0, a, b));
        }
    }
    let points: Vec<(f64, f64, f64)> = (0..n.max(1))
        .map(|i| {
            let z = if with_fiber { 2.0 * PI * radical_inverse(i, 5) } else { 0.0 };
            (radical_inverse(i, 2), 2.0 * PI * radical_inverse(i, 3), z)
        })
        .collect();
    let mut best = (f64::INFINITY, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0));
    let mut count = 0;
    for (i, cv) in covectors.iter().enumerate() {
        let p = points[i % points.len()];
        for pt in [p, (0.0, p.1, p.2)] {
            let s = min_singular_value(&wedge_principal_symbol(spec, pt, *cv)?);
            count += 1;
            if s < best.0 {
                best = (s, pt, *cv);
            }
        }
    }
    Ok(EllipticityReport { min_sigma: best.0, worst_point: best.1, worst_covector: best.2, elliptic: best.0 > tol, samples: count })
}

/// Truncated eigenbasis of `Q_Z = D_z^2 + c` on the fiber: Fourier modes
/// ordered `0, 1, -1, 2, -2, ...`, or the constant function on a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberBasis {
    pub kind: FiberKind,
    pub modes: Vec<i32>,
    pub lambda_sq: Vec<f64>,
    pub c: f64,
}

impl FiberBasis {
    pub fn new(fiber: &FiberSpec) -> Result<Self> {
        if fiber.modes == 0 || fiber.c < 0.0 {
            return Err(Error::InvalidInput("fiber basis needs K >= 1 and c >= 0".into()));
        }
        let modes: Vec<i32> = match fiber.kind {
            FiberKind::Point => vec![0],
            FiberKind::Circle => (0..fiber.modes as i32).map(|k| if k % 2 == 1 { (k + 1) / 2 } else { -(k / 2) }).collect(),
        };
        let lambda_sq = modes.iter().map(|&n| (n * n) as f64 + fiber.c).collect();
        Ok(Self { kind: fiber.kind, modes, lambda_sq, c: fiber.c })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.lambda_sq.iter().map(|v| v.sqrt()).collect()
    }

    /// `psi_k(z) = e^{i n_k z} / sqrt(2 pi)`, or `1` on a point.
    pub fn psi(&self, k: usize, z: f64) -> C64 {
        match self.kind {
            FiberKind::Point => c(1.0, 0.0),
            FiberKind::Circle => C64::from_polar(1.0 / (2.0 * PI).sqrt(), self.modes[k] as f64 * z),
        }
    }

    fn index_of(&self, n: i32) -> Option<usize> {
        self.modes.iter().position(|&m| m == n)
    }
}

/// Off-span leakage of the truncated fiber operators.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TruncationWarning {
    pub leakage: f64,
}

/// Projection of `sum_beta a(0, y, .) D_z^beta` for one term onto the
/// truncated basis, as a trigonometric matrix in `y`. Also returns the
/// squared coefficient norm leaking out of the span.
fn project_term(t: &CoeffTerm, basis: &FiberBasis, rank_e: usize, rank_f: usize) -> (TrigMatrix, f64) {
    let k = basis.len();
    let (rows, cols) = (k * rank_f, k * rank_e);
    let beta = t.beta_order();
    let mut out = TrigMatrix::zeros(rows, cols);
    let mut leak = 0.0;
    for i in 0..rank_f {
        for j in 0..rank_e {
            for mono in t.matrix[i][j].iter().filter(|m| m.x == 0) {
                for (b, &n) in basis.modes.iter().enumerate() {
                    let v = mono.coeff() * (n as f64).powi(beta as i32);
                    if v == C64::default() {
                        continue;
                    }
                    match basis.index_of(n + mono.z) {
                        Some(a) => {
                            let mut m = CMat::zeros(rows, cols);
                            m[(a * rank_f + i, b * rank_e + j)] = v;
                            out.add_term(mono.y, &m);
                        }
                        None => leak += v.norm_sqr(),
                    }
                }
            }
        }
    }
    (out, leak)
}

/// Indicial family on the truncated fiber span. Rows and columns are ordered
/// mode-major: index `mode * rank + component`.
pub fn indicial_family(spec: &WedgeOperatorSpec, basis: &FiberBasis) -> Result<(MatrixPolyFamily, Option<TruncationWarning>)> {
    spec.validate()?;
    if spec.rank_e != spec.rank_f {
        return Err(Error::InvalidInput("indicial family needs rankE = rankF".into()));
    }
    let n = basis.len() * spec.rank_e;
    let mut coeffs = vec![TrigMatrix::zeros(n, n); spec.m as usize + 1];
    let mut leak = 0.0;
    for t in spec.coeffs.iter().filter(|t| t.alpha_order() == 0) {
        let (m, l) = project_term(t, basis, spec.rank_e, spec.rank_f);
        leak += l;
        for (q, mat) in m.terms {
            coeffs[t.k as usize].add_term(q, &mat);
        }
    }
    let warn = (leak > 0.0).then(|| TruncationWarning { leakage: leak.sqrt() });
    Ok((MatrixPolyFamily::new(coeffs)?, warn))
}

/// `x^{-m} sum_p x^p q_p(x D_x)` with matrix polynomials `q_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLineOperator {
    pub dim: usize,
    pub order: u32,
    pub terms: BTreeMap<u32, Vec<CMat>>,
}

impl HalfLineOperator {
    fn add(&mut self, p: u32, power: usize, m: &CMat) {
        let e = self.terms.entry(p).or_default();
        while e.len() <= power {
            e.push(CMat::zeros(self.dim, self.dim));
        }
        e[power] += m;
    }

    fn prune(&mut self) {
        for q in self.terms.values_mut() {
            while q.len() > 1 && q.last().is_some_and(|m| m.iter().all(|z| *z == C64::default())) {
                q.pop();
            }
        }
        self.terms.retain(|_, q| q.iter().any(|m| m.iter().any(|z| *z != C64::default())));
    }

    /// `rho^m kappa_rho A kappa_rho^{-1}` for the unitary dilation
    /// `kappa_rho u(x) = rho^gamma u(rho x)`: the `x^p` term picks up `rho^p`.
    pub fn conjugate_dilation(&self, rho: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&p, q)| (p, q.iter().map(|m| m * c(rho.powi(p as i32), 0.0)).collect()))
            .collect();
        Self { dim: self.dim, order: self.order, terms }
    }
}

/// Normal family at `(y, eta)` in the truncated fiber span:
/// `(x D_x)^k (x eta)^alpha = x^alpha eta^alpha (x D_x - i alpha)^k`.
pub fn normal_family(spec: &WedgeOperatorSpec, basis: &FiberBasis, y: f64, eta: f64) -> Result<HalfLineOperator> {
    spec.validate()?;
    if spec.rank_e != spec.rank_f {
        return Err(Error::InvalidInput("normal family needs rankE = rankF".into()));
    }
    let dim = basis.len() * spec.rank_e;
    let mut op = HalfLineOperator { dim, order: spec.m, terms: BTreeMap::new() };
    for t in &spec.coeffs {
        let a = t.alpha_order();
        let (m, _) = project_term(t, basis, spec.rank_e, spec.rank_f);
        let fiber = m.eval(y) * c(eta.powi(a as i32), 0.0);
        let shift = -I * a as f64;
        for j in 0..=t.k as usize {
            let coef = shift.powu(t.k - j as u32) * binom(t.k as usize, j);
            op.add(a, j, &(&fiber * coef));
        }
    }
    op.prune();
    Ok(op)
}

/// Indicial operator at `y` written as a half-line operator with a single
/// `x^0` term.
pub fn indicial_operator(spec: &WedgeOperatorSpec, basis: &FiberBasis, y: f64) -> Result<HalfLineOperator> {
    let (fam, _) = indicial_family(spec, basis)?;
    let p = fam.at(y);
    let mut op = HalfLineOperator { dim: fam.dim(), order: spec.m, terms: BTreeMap::new() };
    for (j, m) in p.coeffs.iter().enumerate() {
        op.add(0, j, m);
    }
    op.prune();
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_term(k: u32, a: u32, b: u32, v: f64) -> CoeffTerm {
        CoeffTerm::identity(k, a, b, 1, c(v, 0.0))
    }

    fn laplacian() -> WedgeOperatorSpec {
        WedgeOperatorSpec {
            m: 2,
            rank_e: 1,
            rank_f: 1,
            gamma: 1.0,
            fiber: FiberSpec { kind: FiberKind::Circle, modes: 3, c: 0.0 },
            coeffs: vec![scalar_term(2, 0, 0, 1.0), scalar_term(0, 2, 0, 1.0), scalar_term(0, 0, 2, 1.0)],
        }
    }

    #[test]
    fn laplacian_symbol_is_quadratic_form() {
        let s = wedge_principal_symbol(&laplacian(), (0.3, 1.0, 2.0), (0.5, -1.0, 2.0)).unwrap();
        assert!((s[(0, 0)] - c(5.25, 0.0)).norm() < 1e-15);
        let r = ellipticity_sample_check(&laplacian(), 200, 1e-8).unwrap();
        assert!(r.elliptic);
        assert!((r.min_sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_symbol() {
        let spec = WedgeOperatorSpec {
            m: 1,
            rank_e: 1,
            rank_f: 1,
            gamma: 0.5,
            fiber: FiberSpec { kind: FiberKind::Circle, modes: 1, c: 0.0 },
            coeffs: vec![scalar_term(1, 0, 0, 1.0), scalar_term(0, 1, 0, 2.0), scalar_term(0, 0, 1, 3.0)],
        };
        let s = wedge_principal_symbol(&spec, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0)).unwrap();
        assert!((s[(0, 0)] - c(6.0, 0.0)).norm() < 1e-15);
        let only_xi = WedgeOperatorSpec { coeffs: vec![scalar_term(1, 0, 0, 1.0)], ..spec };
        assert!(!ellipticity_sample_check(&only_xi, 50, 1e-8).unwrap().elliptic);
    }

    #[test]
    fn mode_ordering() {
        let b = FiberBasis::new(&FiberSpec { kind: FiberKind::Circle, modes: 5, c: 0.25 }).unwrap();
        assert_eq!(b.modes, vec![0, 1, -1, 2, -2]);
        assert!(b.lambda_sq.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sigma_identity_family() {
        let spec = WedgeOperatorSpec {
            m: 1,
            rank_e: 1,
            rank_f: 1,
            gamma: 0.5,
            fiber: FiberSpec { kind: FiberKind::Point, modes: 1, c: 0.0 },
            coeffs: vec![scalar_term(1, 0, 0, 1.0)],
        };
        let b = FiberBasis::new(&spec.fiber).unwrap();
        let (f, warn) = indicial_family(&spec, &b).unwrap();
        assert!(warn.is_none());
        let v = f.eval(0.7, c(0.2, 0.3));
        assert!((v[(0, 0)] - c(0.2, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn z_multiplication_leaks() {
        let mut spec = laplacian();
        spec.coeffs.push(CoeffTerm { k: 0, alpha: vec![0], beta: vec![0], matrix: vec![vec![vec![Monomial::new(0, 0, 1, c(1.0, 0.0))]]] });
        let b = FiberBasis::new(&spec.fiber).unwrap();
        let (_, warn) = indicial_family(&spec, &b).unwrap();
        // Mode 1 maps to 2 which is outside {0, 1, -1}.
        assert!((warn.unwrap().leakage - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_family_first_order_example() {
        let spec = WedgeOperatorSpec {
            m: 1,
            rank_e: 1,
            rank_f: 1,
            gamma: 0.5,
            fiber: FiberSpec { kind: FiberKind::Circle, modes: 3, c: 0.0 },
            coeffs: vec![scalar_term(1, 0, 0, 1.0), scalar_term(0, 1, 0, 1.0), scalar_term(0, 0, 1, 1.0)],
        };
        let b = FiberBasis::new(&spec.fiber).unwrap();
        let op = normal_family(&spec, &b, 0.0, 1.5).unwrap();
        let x1 = &op.terms[&1];
        assert_eq!(x1.len(), 1);
        assert_eq!(x1[0], CMat::identity(3, 3) * c(1.5, 0.0));
        let x0 = &op.terms[&0];
        assert_eq!(x0[1], CMat::identity(3, 3));
        assert_eq!(x0[0], CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])));
    }
}
