//! Example families with known answers: a two-component line-bundle model in
//! a fixed local frame, classical operators with `p_m(s) = prod (s + i j)`,
//! and the disk Laplacian norm comparison.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use serde::Serialize;

use crate::config::{ContourSpec, FieldSpec};
use crate::contour::Strip;
use crate::error::{Error, Result};
use crate::family::{MatrixPolyFamily, TrigMatrix, TrigPoly};
use crate::linalg::{c, min_singular_value, CVec, C64, I};
use crate::trace::{to_trace_element, PoleTerm, SingularPart};
use crate::wedge::{CoeffTerm, FiberKind, FiberSpec, Monomial, WedgeOperatorSpec};

/// Coefficients of `prod_{j<k} (s + i j + shift)` in ascending powers.
pub fn shifted_pochhammer(k: u32, shift: C64) -> Vec<C64> {
    let mut p = vec![c(1.0, 0.0)];
    for j in 0..k {
        let root = I * j as f64 + shift;
        let mut next = vec![C64::default(); p.len() + 1];
        for (d, &v) in p.iter().enumerate() {
            next[d + 1] += v;
            next[d] += v * root;
        }
        p = next;
    }
    p
}

fn monomials(p: &TrigPoly, xpow: u32, factor: C64) -> Vec<Monomial> {
    p.terms
        .iter()
        .filter(|(_, v)| **v != C64::default())
        .map(|(&q, &v)| Monomial::new(xpow, q, 0, v * factor))
        .collect()
}

fn monomial_matrix(f: &FieldSpec, xpow: u32, factor: C64) -> Vec<Vec<Vec<Monomial>>> {
    f.entries.iter().map(|row| row.iter().map(|p| monomials(p, xpow, factor)).collect()).collect()
}

/// Two-component model on a trivial rank-2 bundle over the circle fiber:
/// mode `k` of `Q_Z` contributes the block
/// `[[s^2 + l_k^2 p11, p12], [p21, s^2 + l_k^2 p22]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBundleExample {
    pub phi: [[TrigPoly; 2]; 2],
    pub lambdas: Vec<f64>,
    pub gamma: f64,
}

impl LineBundleExample {
    pub fn new(phi: [[TrigPoly; 2]; 2], lambdas: Vec<f64>, gamma: f64) -> Result<Self> {
        let ex = Self { phi, lambdas, gamma };
        ex.validate()?;
        Ok(ex)
    }

    /// Eigenvalues taken from the truncated basis of `D_z^2 + c`.
    pub fn from_fiber(phi: [[TrigPoly; 2]; 2], c_shift: f64, modes: usize, gamma: f64) -> Result<Self> {
        let basis = crate::wedge::FiberBasis::new(&FiberSpec { kind: FiberKind::Circle, modes, c: c_shift })?;
        Self::new(phi, basis.lambdas(), gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || !(self.lambdas[0] > 0.0) {
            return Err(Error::InvalidInput("line-bundle example needs lambda_0 > 0".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("lambda list must be nondecreasing".into()));
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn strip(&self) -> Strip {
        Strip { gamma: self.gamma, order: 2 }
    }

    pub fn is_triangular(&self) -> bool {
        self.phi[1][0].terms.values().all(|v| *v == C64::default())
    }

    pub fn line_bundle_family(&self) -> MatrixPolyFamily {
        let n = 2 * self.modes();
        let c0 = TrigMatrix::from_entries(n, n, |i, j| {
            let (k, a, b) = (i / 2, i % 2, j % 2);
            if k != j / 2 {
                TrigPoly::default()
            } else if a == b {
                self.phi[a][a].scale(c(self.lambdas[k] * self.lambdas[k], 0.0))
            } else {
                self.phi[a][b].clone()
            }
        });
        let c2 = TrigMatrix::constant(crate::linalg::CMat::identity(n, n));
        MatrixPolyFamily::new(vec![c0, TrigMatrix::zeros(n, n), c2]).expect("square blocks")
    }

    /// `(x D_x)^2 + (x D_y)^2 + diag(p11, p22) (D_z^2 + c) + offdiag(p12, p21)`
    /// on the circle fiber. Its indicial family on `K` modes matches
    /// `line_bundle_family` when the lambdas come from `from_fiber`.
    pub fn to_wedge_spec(&self, c_shift: f64) -> WedgeOperatorSpec {
        let one = c(1.0, 0.0);
        let diag = |xs: [&TrigPoly; 2], f: C64| vec![monomials(xs[0], 0, f), monomials(xs[1], 0, f)];
        let p = &self.phi;
        let zeroth = vec![
            vec![monomials(&p[0][0], 0, c(c_shift, 0.0)), monomials(&p[0][1], 0, one)],
            vec![monomials(&p[1][0], 0, one), monomials(&p[1][1], 0, c(c_shift, 0.0))],
        ];
        WedgeOperatorSpec {
            m: 2,
            rank_e: 2,
            rank_f: 2,
            gamma: self.gamma,
            fiber: FiberSpec { kind: FiberKind::Circle, modes: self.modes(), c: c_shift },
            coeffs: vec![
                CoeffTerm::identity(2, 0, 0, 2, one),
                CoeffTerm::identity(0, 2, 0, 2, one),
                CoeffTerm::diagonal(0, 0, 2, &diag([&p[0][0], &p[1][1]], one)),
                CoeffTerm { k: 0, alpha: vec![], beta: vec![], matrix: zeroth },
            ],
        }
    }

    /// `sqrt(p_jj(y))` continued along `[0, y]` from the principal branch at 0.
    fn continued_sqrt(&self, j: usize, y: f64) -> Result<C64> {
        let f = &self.phi[j][j];
        let name = format!("phi{}{}", j + 1, j + 1);
        let steps = 1024;
        let mut winding = 0.0;
        let mut prev = f.eval(0.0);
        for k in 1..=steps {
            let v = f.eval(2.0 * PI * k as f64 / steps as f64);
            if v.norm() < 1e-14 {
                return Err(Error::BranchAmbiguity(name));
            }
            winding += (v / prev).arg();
            prev = v;
        }
        if (winding / (2.0 * PI)).abs() > 0.5 {
            return Err(Error::BranchAmbiguity(name));
        }
        let n = ((y.abs() / (2.0 * PI) * steps as f64).ceil() as usize).max(1);
        let mut r = f.eval(0.0).sqrt();
        for k in 1..=n {
            let cand = f.eval(y * k as f64 / n as f64).sqrt();
            r = if (cand - r).norm() <= (cand + r).norm() { cand } else { -cand };
        }
        Ok(r)
    }

    /// Roots `+- i l_k sqrt(p_jj(y))` inside the strip, Im descending.
    pub fn closed_form_spectrum(&self, y: f64) -> Result<Vec<C64>> {
        if !self.is_triangular() {
            return Err(Error::InvalidInput("closed form needs phi21 = 0".into()));
        }
        let roots = [self.continued_sqrt(0, y)?, self.continued_sqrt(1, y)?];
        let strip = self.strip();
        let mut out: Vec<C64> = self
            .lambdas
            .iter()
            .flat_map(|&l| roots.iter().flat_map(move |&r| [I * l * r, -I * l * r]))
            .filter(|s| strip.contains(*s))
            .collect();
        out.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));
        Ok(out)
    }

    /// Reference singular parts at a collision point `p11(y0) = p22(y0)`,
    /// ordered `chi+_1, chi+_2, chi-_1, chi-_2`.
    pub fn collision_frame_reference(&self, y0: f64) -> Result<CollisionReference> {
        if !self.is_triangular() {
            return Err(Error::InvalidInput("collision reference needs phi21 = 0".into()));
        }
        let (a, d) = (self.phi[0][0].eval(y0), self.phi[1][1].eval(y0));
        if (a - d).norm() > 1e-12 * a.norm().max(1.0) {
            return Err(Error::InvalidInput(format!("no collision at y = {y0}: phi11 - phi22 = {}", a - d)));
        }
        let l0 = self.lambdas[0];
        let root = self.continued_sqrt(0, y0)?;
        let p12 = self.phi[0][1].eval(y0);
        let dim = 2 * self.modes();
        let vec2 = |e1: C64, e2: C64| {
            let mut v = CVec::zeros(dim);
            v[0] = e1;
            v[1] = e2;
            v
        };
        let zero = C64::default();
        let mut printed = Vec::new();
        let mut oracle = Vec::new();
        for s in [I * l0 * root, -I * l0 * root] {
            let pole = |coeffs: Vec<CVec>| normalize(&SingularPart { dim, poles: vec![PoleTerm { sigma: s, coeffs }] });
            let chi1 = pole(vec![vec2(1.0 / (2.0 * s), zero)]);
            printed.push(chi1.clone());
            printed.push(pole(vec![vec2(-1.0 / s, 2.0 * s), vec2(c(1.0, 0.0), zero)]));
            oracle.push(chi1);
            oracle.push(pole(vec![vec2(p12 / (4.0 * s * s * s), 1.0 / (2.0 * s)), vec2(-p12 / (4.0 * s * s), zero)]));
        }
        Ok(CollisionReference { y0, printed, oracle })
    }
}

fn normalize(sp: &SingularPart) -> SingularPart {
    let (_, f) = to_trace_element(sp).normalized();
    sp.scale(f)
}

/// Printed and resolvent-derived singular parts at a collision.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionReference {
    pub y0: f64,
    pub printed: Vec<SingularPart>,
    pub oracle: Vec<SingularPart>,
}

/// One lower-order term `a_{k alpha}(y) D_x^k D_y^alpha` of a classical operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTerm {
    pub k: u32,
    pub alpha: u32,
    pub coeff: FieldSpec,
}

/// Classical operator `sum a_{k alpha}(y) D_x^k D_y^alpha` of order `m`
/// near the boundary `x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalExample {
    pub m: u32,
    pub rank: usize,
    pub leading: FieldSpec,
    pub lower: Vec<ClassicalTerm>,
    pub gamma: f64,
}

impl ClassicalExample {
    pub fn new(m: u32, leading: FieldSpec, lower: Vec<ClassicalTerm>, gamma: f64) -> Result<Self> {
        let rank = leading.entries.len();
        let ex = Self { m, rank, leading, lower, gamma };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInput("classical order must be positive".into()));
        }
        let a = self.leading.to_trig_matrix()?;
        let worst = (0..256).map(|k| min_singular_value(&a.eval(2.0 * PI * k as f64 / 256.0))).fold(f64::INFINITY, f64::min);
        if !(worst > 1e-10) {
            return Err(Error::InvalidInput("leading coefficient is not invertible".into()));
        }
        for t in &self.lower {
            if t.k + t.alpha > self.m || (t.k == self.m && t.alpha == 0) {
                return Err(Error::InvalidInput(format!("term D_x^{} D_y^{} does not fit order {}", t.k, t.alpha, self.m)));
            }
            if t.coeff.to_trig_matrix()?.rows != self.rank {
                return Err(Error::InvalidInput("coefficient rank mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn strip(&self) -> Strip {
        Strip { gamma: self.gamma, order: self.m }
    }

    /// `a_{m0}(0, y) p_m(s)`.
    pub fn classical_family(&self) -> MatrixPolyFamily {
        let a = self.leading.to_trig_matrix().expect("validated");
        let coeffs = shifted_pochhammer(self.m, C64::default()).into_iter().map(|e| a.scale(e)).collect();
        MatrixPolyFamily::new(coeffs).expect("square leading coefficient")
    }

    /// Wedge form: `x^m D_x^k D_y^alpha = x^{m-k-alpha} p_k(x D_x + i alpha) (x D_y)^alpha`.
    pub fn to_wedge_spec(&self) -> WedgeOperatorSpec {
        let mut coeffs = Vec::new();
        let all = std::iter::once((self.m, 0, &self.leading)).chain(self.lower.iter().map(|t| (t.k, t.alpha, &t.coeff)));
        for (k, alpha, f) in all {
            for (j, e) in shifted_pochhammer(k, I * alpha as f64).into_iter().enumerate() {
                if e == C64::default() {
                    continue;
                }
                coeffs.push(CoeffTerm {
                    k: j as u32,
                    alpha: if alpha > 0 { vec![alpha] } else { vec![] },
                    beta: vec![],
                    matrix: monomial_matrix(f, self.m - k - alpha, e),
                });
            }
        }
        WedgeOperatorSpec {
            m: self.m,
            rank_e: self.rank,
            rank_f: self.rank,
            gamma: self.gamma,
            fiber: FiberSpec { kind: FiberKind::Point, modes: 1, c: 0.0 },
            coeffs,
        }
    }
}

fn disk_inner(a: i64, b: i64, p: i64, q: i64) -> f64 {
    if a - b == p - q {
        2.0 * PI / (a + b + p + q + 2) as f64
    } else {
        0.0
    }
}

/// `coef * z^a zbar^b`.
#[derive(Clone, Copy, Debug)]
struct ZMono {
    coef: f64,
    a: i64,
    b: i64,
}

impl ZMono {
    fn dz(self) -> Option<Self> {
        (self.a > 0 && self.coef != 0.0).then(|| Self { coef: self.coef * self.a as f64, a: self.a - 1, b: self.b })
    }

    fn dzbar(self) -> Option<Self> {
        (self.b > 0 && self.coef != 0.0).then(|| Self { coef: self.coef * self.b as f64, a: self.a, b: self.b - 1 })
    }

    fn inner(u: Option<Self>, v: Option<Self>) -> f64 {
        match (u, v) {
            (Some(u), Some(v)) => u.coef * v.coef * disk_inner(u.a, u.b, v.a, v.b),
            _ => 0.0,
        }
    }
}

/// Gram matrices of the angular mode `n` block `{r^|n| e^{i n t}, r^{|n|+2} e^{i n t}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskBlock {
    pub n: i64,
    pub l2: Matrix2<f64>,
    pub trace_norm: Matrix2<f64>,
    pub h2: Matrix2<f64>,
}

impl DiskBlock {
    pub fn new(n: i64) -> Self {
        let basis: Vec<ZMono> = [n.abs(), n.abs() + 2]
            .iter()
            .map(|&p| ZMono { coef: 1.0, a: (p + n) / 2, b: (p - n) / 2 })
            .collect();
        let radial = [n.abs() as f64, (n.abs() + 2) as f64];
        let w = 1.0 + (n * n) as f64;
        let mut l2 = Matrix2::zeros();
        let mut tn = Matrix2::zeros();
        let mut h2 = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let (u, v) = (basis[i], basis[j]);
                let mass = ZMono::inner(Some(u), Some(v));
                let grad = 2.0 * (ZMono::inner(u.dz(), v.dz()) + ZMono::inner(u.dzbar(), v.dzbar()));
                let mixed = |m: ZMono| m.dz().and_then(ZMono::dzbar);
                let hess = 4.0
                    * (ZMono::inner(u.dz().and_then(ZMono::dz), v.dz().and_then(ZMono::dz))
                        + 2.0 * ZMono::inner(mixed(u), mixed(v))
                        + ZMono::inner(u.dzbar().and_then(ZMono::dzbar), v.dzbar().and_then(ZMono::dzbar)));
                // Laplacian = 4 d_z d_zbar.
                let lap = 16.0 * ZMono::inner(mixed(u), mixed(v));
                let gamma0 = 2.0 * PI * w.powf(1.5);
                let gamma1 = 2.0 * PI * w.sqrt() * radial[i] * radial[j];
                l2[(i, j)] = mass;
                tn[(i, j)] = mass + lap + gamma0 + gamma1;
                h2[(i, j)] = mass + grad + hess;
            }
        }
        Self { n, l2, trace_norm: tn, h2 }
    }

    /// `|u|^2_{trace} / |u|^2_{H^2}` for `u = v0 r^|n| e^{int} + v1 r^{|n|+2} e^{int}`.
    pub fn rayleigh(&self, v: [f64; 2]) -> f64 {
        let v = nalgebra::Vector2::new(v[0], v[1]);
        v.dot(&(self.trace_norm * v)) / v.dot(&(self.h2 * v))
    }

    /// Extreme generalized eigenvalues of `(trace_norm, h2)`.
    pub fn bounds(&self) -> (f64, f64) {
        let l = self.h2.cholesky().expect("H2 Gram is positive definite").l();
        let li = l.try_inverse().expect("triangular factor invertible");
        let m = li * self.trace_norm * li.transpose();
        let e = SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues;
        (e.min(), e.max())
    }

    /// `|u|_{H^2} / |u|_{graph}` for the harmonic `r^|n| e^{int}`.
    pub fn harmonic_graph_ratio(&self) -> f64 {
        (self.h2[(0, 0)] / self.l2[(0, 0)]).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiskModeRow {
    pub n: i64,
    pub lower: f64,
    pub upper: f64,
    pub graph_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiskWitnessReport {
    pub n_max: usize,
    /// Smallest Rayleigh ratio `c_N`.
    pub lower: f64,
    /// Largest Rayleigh ratio `C_N`.
    pub upper: f64,
    pub gram_cond: f64,
    /// Supremum of the graph-norm ratio over harmonics `|n| <= N`.
    pub graph_sup: f64,
    pub modes: Vec<DiskModeRow>,
}

/// Largest acceptable condition number of the basis Gram matrix.
pub const GRAM_COND_LIMIT: f64 = 1e12;

/// Norm comparison on `span{r^|n| e^{int}, r^{|n|+2} e^{int} : |n| <= N}`.
/// The basis is orthogonal across modes, so every Gram matrix is block
/// diagonal with 2x2 blocks.
pub fn disk_norm_witness(n_max: usize) -> Result<DiskWitnessReport> {
    if n_max < 2 {
        return Err(Error::InvalidInput("disk witness needs N >= 2".into()));
    }
    let mut modes = Vec::new();
    let (mut lo, mut hi, mut gsup) = (f64::INFINITY, 0.0f64, 0.0f64);
    let (mut emin, mut emax) = (f64::INFINITY, 0.0f64);
    for n in -(n_max as i64)..=n_max as i64 {
        let b = DiskBlock::new(n);
        let e = SymmetricEigen::new(b.l2).eigenvalues;
        emin = emin.min(e.min());
        emax = emax.max(e.max());
        let (l, u) = b.bounds();
        lo = lo.min(l);
        hi = hi.max(u);
        gsup = gsup.max(b.harmonic_graph_ratio());
        modes.push(DiskModeRow { n, lower: l, upper: u, graph_ratio: b.harmonic_graph_ratio() });
    }
    let gram_cond = emax / emin;
    if !(gram_cond <= GRAM_COND_LIMIT) {
        return Err(Error::GramConditioning { cond: gram_cond });
    }
    Ok(DiskWitnessReport { n_max, lower: lo, upper: hi, gram_cond, graph_sup: gsup, modes })
}

/// Full Gram matrices for the witness basis, ordered by mode then radial
/// power. Used to cross-check the block assembly.
pub fn disk_gram_matrices(n_max: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = 2 * (2 * n_max + 1);
    let mut t = DMatrix::zeros(k, k);
    let mut h = DMatrix::zeros(k, k);
    for (idx, n) in (-(n_max as i64)..=n_max as i64).enumerate() {
        let b = DiskBlock::new(n);
        for i in 0..2 {
            for j in 0..2 {
                t[(2 * idx + i, 2 * idx + j)] = b.trace_norm[(i, j)];
                h[(2 * idx + i, 2 * idx + j)] = b.h2[(i, j)];
            }
        }
    }
    (t, h)
}

/// A named family with its strip, an operator realizing it and a contour
/// separating the strip spectrum.
#[derive(Clone, Debug)]
pub struct FamilyFixture {
    pub name: &'static str,
    pub family: MatrixPolyFamily,
    pub strip: Strip,
    pub operator: WedgeOperatorSpec,
    pub contour: ContourSpec,
    /// Points `y` where strip eigenvalues collide.
    pub collisions: Vec<f64>,
    pub line_bundle: Option<LineBundleExample>,
    pub classical: Option<ClassicalExample>,
}

#[derive(Clone, Debug)]
pub enum Fixture {
    Family(Box<FamilyFixture>),
    Disk { n_max: usize },
}

pub const FIXTURE_NAMES: [&str; 6] = [
    "classical-m1",
    "classical-m2",
    "linebundle-generic",
    "linebundle-crossing",
    "linebundle-quartic",
    "disk-witness",
];

fn phi(p11: TrigPoly, p12: f64, p21: f64, p22: TrigPoly) -> [[TrigPoly; 2]; 2] {
    [[p11, TrigPoly::constant(p12)], [if p21 == 0.0 { TrigPoly::default() } else { TrigPoly::constant(p21) }, p22]]
}

/// Off-diagonal coupling 0.3, `p11 = 0.49 + 0.05 sin y`, `p22 = 0.81`, `lambda = 1, 2`.
pub fn linebundle_generic() -> LineBundleExample {
    LineBundleExample::new(phi(TrigPoly::sin_affine(0.49, 0.05), 0.3, 0.0, TrigPoly::constant(0.81)), vec![1.0, 2.0], 1.0)
        .expect("valid")
}

/// `p11 = 0.5 + 0.2 sin y`, `p22 = 0.5 - 0.2 sin y`, coupling `-1`: collisions at `y = 0, pi`.
pub fn linebundle_crossing() -> LineBundleExample {
    LineBundleExample::new(
        phi(TrigPoly::sin_affine(0.5, 0.2), -1.0, 0.0, TrigPoly::sin_affine(0.5, -0.2)),
        vec![1.0, 2.0],
        1.0,
    )
    .expect("valid")
}

/// Constant single-mode example with roots `+-0.7i, +-0.9i`.
pub fn linebundle_quartic() -> LineBundleExample {
    LineBundleExample::new(phi(TrigPoly::constant(0.49), 0.3, 0.0, TrigPoly::constant(0.81)), vec![1.0], 1.0).expect("valid")
}

/// `D_x + i D_y` on a half plane.
pub fn classical_m1() -> ClassicalExample {
    let lower = vec![ClassicalTerm { k: 0, alpha: 1, coeff: FieldSpec::constant_matrix(&crate::linalg::CMat::from_element(1, 1, I)) }];
    ClassicalExample::new(1, FieldSpec::diagonal(&[1.0]), lower, 0.5).expect("valid")
}

/// `(2 + sin y) D_x^2 + D_y^2`.
pub fn classical_m2() -> ClassicalExample {
    let leading = FieldSpec { entries: vec![vec![TrigPoly::sin_affine(2.0, 1.0)]] };
    let lower = vec![ClassicalTerm { k: 0, alpha: 2, coeff: FieldSpec::diagonal(&[1.0]) }];
    ClassicalExample::new(2, leading, lower, 0.5).expect("valid")
}

fn circle(r: f64) -> ContourSpec {
    ContourSpec::Circle { center: [0.0, 0.0], radius: r }
}

fn from_line_bundle(name: &'static str, ex: LineBundleExample, radius: f64, collisions: Vec<f64>) -> FamilyFixture {
    // Operator realized with c = 1; its own lambdas are sqrt(n^2 + 1).
    FamilyFixture {
        name,
        family: ex.line_bundle_family(),
        strip: ex.strip(),
        operator: ex.to_wedge_spec(1.0),
        contour: circle(radius),
        collisions,
        line_bundle: Some(ex),
        classical: None,
    }
}

fn from_classical(name: &'static str, ex: ClassicalExample) -> FamilyFixture {
    let center = -(ex.m as f64 - 1.0) / 2.0;
    FamilyFixture {
        name,
        family: ex.classical_family(),
        strip: ex.strip(),
        operator: ex.to_wedge_spec(),
        contour: circle(ex.m as f64 / 2.0).shifted_im(center),
        collisions: vec![],
        line_bundle: None,
        classical: Some(ex),
    }
}

impl ContourSpec {
    fn shifted_im(self, d: f64) -> Self {
        match self {
            ContourSpec::Circle { center, radius } => ContourSpec::Circle { center: [center[0], center[1] + d], radius },
            other => other,
        }
    }
}

/// Look up a fixture by name.
pub fn fixture(name: &str) -> Result<Fixture> {
    let f = match name {
        "classical-m1" => from_classical("classical-m1", classical_m1()),
        "classical-m2" => from_classical("classical-m2", classical_m2()),
        "linebundle-generic" => from_line_bundle("linebundle-generic", linebundle_generic(), 1.1, vec![]),
        "linebundle-crossing" => from_line_bundle("linebundle-crossing", linebundle_crossing(), 0.96, vec![0.0, PI]),
        "linebundle-quartic" => from_line_bundle("linebundle-quartic", linebundle_quartic(), 1.1, vec![]),
        "disk-witness" => return Ok(Fixture::Disk { n_max: 64 }),
        other => {
            return Err(Error::InvalidInput(format!("unknown fixture '{other}' (known: {})", FIXTURE_NAMES.join(", "))));
        }
    };
    Ok(Fixture::Family(Box::new(f)))
}

/// Family fixture by name; errors for the disk witness.
pub fn family_fixture(name: &str) -> Result<FamilyFixture> {
    match fixture(name)? {
        Fixture::Family(f) => Ok(*f),
        Fixture::Disk { .. } => Err(Error::InvalidInput(format!("fixture '{name}' has no indicial family"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::linalg::fro;
    use crate::spectra::companion_solve;
    use crate::wedge::{indicial_family, FiberBasis};

    #[test]
    fn pochhammer_roots() {
        let p = shifted_pochhammer(3, C64::default());
        for r in [c(0.0, 0.0), c(0.0, -1.0), c(0.0, -2.0)] {
            let v: C64 = p.iter().enumerate().map(|(k, a)| a * r.powu(k as u32)).sum();
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn constant_block_and_triangularity() {
        let ex = linebundle_quartic();
        let f = ex.line_bundle_family();
        let p = f.at(1.3);
        assert_eq!(p.dim(), 2);
        assert!((p.coeffs[0][(0, 0)] - 0.49).norm() < 1e-15);
        assert!((p.coeffs[0][(0, 1)] - 0.3).norm() < 1e-15);
        assert_eq!(p.coeffs[0][(1, 0)], C64::default());
        assert_eq!(fro(&(&p.coeffs[2] - crate::linalg::CMat::identity(2, 2))), 0.0);
    }

    #[test]
    fn scalar_multiple_of_identity() {
        let ex = LineBundleExample::new(phi(TrigPoly::constant(0.3), 0.0, 0.0, TrigPoly::constant(0.3)), vec![1.0, 2.0], 1.0).unwrap();
        let p = ex.line_bundle_family().at(0.0);
        for k in 0..2 {
            let l2 = ex.lambdas[k] * ex.lambdas[k];
            for a in 0..2 {
                for b in 0..2 {
                    let want = if a == b { 0.3 * l2 } else { 0.0 };
                    assert!((p.coeffs[0][(2 * k + a, 2 * k + b)] - want).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn quartic_closed_form() {
        let s = linebundle_quartic().closed_form_spectrum(0.0).unwrap();
        let want = [c(0.0, 0.9), c(0.0, 0.7), c(0.0, -0.7), c(0.0, -0.9)];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
        for r in &s {
            let v = r.powu(4) + (0.49 + 0.81) * r * r + 0.49 * 0.81;
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn higher_modes_leave_the_strip() {
        let ex = LineBundleExample::new(phi(TrigPoly::constant(0.49), 0.3, 0.0, TrigPoly::constant(0.81)), vec![1.0, 2.0], 1.0).unwrap();
        assert_eq!(ex.closed_form_spectrum(0.0).unwrap().len(), 4);
    }

    #[test]
    fn winding_coefficient_rejected() {
        let wind = TrigPoly::from_terms(&[(1, c(1.0, 0.0)), (0, c(0.1, 0.0))]);
        let ex = LineBundleExample::new(phi(wind, 0.0, 0.0, TrigPoly::constant(0.5)), vec![1.0], 1.0).unwrap();
        assert!(matches!(ex.closed_form_spectrum(0.3), Err(Error::BranchAmbiguity(_))));
    }

    #[test]
    fn closed_form_matches_companion() {
        let tol = Tolerances::default();
        for ex in [linebundle_generic(), linebundle_crossing()] {
            let fam = ex.line_bundle_family();
            for k in 0..16 {
                let y = 2.0 * PI * k as f64 / 16.0;
                let sp = companion_solve(&fam, y, &ex.strip(), &tol).unwrap();
                let mut got: Vec<C64> = sp.points.iter().flat_map(|p| std::iter::repeat_n(p.sigma, p.alg_mult)).collect();
                got.sort_by(|a, b| b.im.total_cmp(&a.im));
                let want = ex.closed_form_spectrum(y).unwrap();
                assert_eq!(got.len(), want.len(), "y = {y}");
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-6, "y = {y}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn wedge_realization_matches_family() {
        let ex = LineBundleExample::from_fiber(linebundle_generic().phi, 0.25, 3, 1.0).unwrap();
        let spec = ex.to_wedge_spec(0.25);
        spec.validate().unwrap();
        let basis = FiberBasis::new(&spec.fiber).unwrap();
        let (fam, warn) = indicial_family(&spec, &basis).unwrap();
        assert!(warn.is_none());
        let direct = ex.line_bundle_family();
        for y in [0.0, 0.7, 2.0] {
            for s in [c(0.3, 0.1), c(-1.0, 0.5)] {
                assert!(fro(&(fam.eval(y, s) - direct.eval(y, s))) < 1e-13);
            }
        }
    }

    #[test]
    fn classical_wedge_realization() {
        for ex in [classical_m1(), classical_m2()] {
            let spec = ex.to_wedge_spec();
            spec.validate().unwrap();
            let basis = FiberBasis::new(&spec.fiber).unwrap();
            let (fam, _) = indicial_family(&spec, &basis).unwrap();
            let direct = ex.classical_family();
            for y in [0.0, 1.1] {
                for s in [c(0.2, -0.4), c(1.5, 0.3)] {
                    assert!(fro(&(fam.eval(y, s) - direct.eval(y, s))) < 1e-13);
                }
            }
        }
    }

    #[test]
    fn classical_roots() {
        let ex = ClassicalExample::new(3, FieldSpec::diagonal(&[1.0]), vec![], 0.5).unwrap();
        let sp = companion_solve(&ex.classical_family(), 0.0, &ex.strip(), &Tolerances::default()).unwrap();
        let mut got = sp.sigmas();
        got.sort_by(|a, b| b.im.total_cmp(&a.im));
        for (g, w) in got.iter().zip([0.0, -1.0, -2.0]) {
            assert!((g - c(0.0, w)).norm() < 1e-10);
        }
    }

    #[test]
    fn printed_collision_form_matches_oracle_for_unit_coupling() {
        let r = linebundle_crossing().collision_frame_reference(0.0).unwrap();
        for (p, o) in r.printed.iter().zip(&r.oracle) {
            for (a, b) in p.poles[0].coeffs.iter().zip(&o.poles[0].coeffs) {
                assert!((a - b).norm() < 1e-14);
            }
        }
        assert_eq!(r.printed[1].poles[0].coeffs.len(), 2);
        assert_eq!(r.printed[0].poles[0].coeffs.len(), 1);
    }

    #[test]
    fn disk_constant_ratio_three() {
        let b = DiskBlock::new(0);
        assert!((b.rayleigh([1.0, 0.0]) - 3.0).abs() < 1e-14);
        assert!((b.l2[(0, 0)] - PI).abs() < 1e-14);
    }

    #[test]
    fn disk_harmonic_norms() {
        // r^n e^{int}: |u|^2 = pi/(n+1), |grad u|^2 = 2 pi n, |hess u|^2 = 4 pi n^2 (n-1).
        for n in [1i64, 3, 7] {
            let b = DiskBlock::new(n);
            let nf = n as f64;
            let h2 = PI / (nf + 1.0) + 2.0 * PI * nf + 4.0 * PI * nf * nf * (nf - 1.0);
            assert!((b.h2[(0, 0)] - h2).abs() < 1e-10 * h2);
            let w = 1.0 + nf * nf;
            let tn = PI / (nf + 1.0) + 2.0 * PI * w.powf(1.5) + 2.0 * PI * w.sqrt() * nf * nf;
            assert!((b.trace_norm[(0, 0)] - tn).abs() < 1e-10 * tn);
        }
    }

    #[test]
    fn disk_witness_bounded_but_graph_ratio_diverges() {
        let mut prev = None;
        for n in [8, 16, 32, 64] {
            let r = disk_norm_witness(n).unwrap();
            assert!(r.lower > 0.0);
            if let Some((ratio, graph)) = prev {
                assert!(r.upper / r.lower <= 1.5 * ratio);
                assert!(r.graph_sup > 3.0 * graph);
            }
            prev = Some((r.upper / r.lower, r.graph_sup));
        }
    }

    #[test]
    fn registry_lookup() {
        for name in FIXTURE_NAMES {
            fixture(name).unwrap();
        }
        assert!(fixture("nope").unwrap_err().is_validation());
        assert!(family_fixture("disk-witness").is_err());
    }
}
