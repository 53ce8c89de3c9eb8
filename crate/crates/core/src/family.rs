//! Matrix polynomials in the spectral variable with trigonometric dependence
//! on the edge coordinate `y`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::contour::Strip;
use crate::error::{Error, Result};
use crate::linalg::{binom, c, fro, min_singular_value, powers, CMat, CVec, C64, I};

/// Scalar trigonometric polynomial `sum_q c_q e^{i q y}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: BTreeMap<i32, C64>,
}

impl TrigPoly {
    pub fn constant(v: f64) -> Self {
        Self::from_terms(&[(0, c(v, 0.0))])
    }

    pub fn from_terms(terms: &[(i32, C64)]) -> Self {
        let mut t = BTreeMap::new();
        for &(q, v) in terms {
            *t.entry(q).or_insert(C64::new(0.0, 0.0)) += v;
        }
        Self { terms: t }
    }

    /// `a + b sin y`.
    pub fn sin_affine(a: f64, b: f64) -> Self {
        Self::from_terms(&[(0, c(a, 0.0)), (1, c(0.0, -b / 2.0)), (-1, c(0.0, b / 2.0))])
    }

    /// `a + b cos y`.
    pub fn cos_affine(a: f64, b: f64) -> Self {
        Self::from_terms(&[(0, c(a, 0.0)), (1, c(b / 2.0, 0.0)), (-1, c(b / 2.0, 0.0))])
    }

    pub fn eval(&self, y: f64) -> C64 {
        self.terms.iter().map(|(&q, &v)| v * C64::from_polar(1.0, q as f64 * y)).sum()
    }

    /// Derivative of order `k` in `y`.
    pub fn derivative(&self, k: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&q, &v)| (q, v * (I * q as f64).powu(k)))
            .collect();
        Self { terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { terms: self.terms.iter().map(|(&q, &v)| (q, v * s)).collect() }
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|q| q.unsigned_abs()).max().unwrap_or(0)
    }
}

/// Matrix-valued trigonometric polynomial `sum_q M_q e^{i q y}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMatrix {
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<i32, CMat>,
}

impl TrigMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, terms: BTreeMap::new() }
    }

    pub fn constant(m: CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut terms = BTreeMap::new();
        terms.insert(0, m);
        Self { rows, cols, terms }
    }

    /// Entrywise construction from scalar trigonometric polynomials.
    pub fn from_entries(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> TrigPoly) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                for (&q, &v) in &entry(i, j).terms {
                    out.terms.entry(q).or_insert_with(|| CMat::zeros(rows, cols))[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn add_term(&mut self, q: i32, m: &CMat) {
        let e = self.terms.entry(q).or_insert_with(|| CMat::zeros(m.nrows(), m.ncols()));
        *e += m;
    }

    pub fn eval(&self, y: f64) -> CMat {
        let mut out = CMat::zeros(self.rows, self.cols);
        for (&q, m) in &self.terms {
            out += m * C64::from_polar(1.0, q as f64 * y);
        }
        out
    }

    pub fn derivative(&self, k: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&q, m)| (q, m * (I * q as f64).powu(k)))
            .collect();
        Self { rows: self.rows, cols: self.cols, terms }
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let terms = self.terms.iter().map(|(&q, m)| (-q, m.adjoint())).collect();
        Self { rows: self.cols, cols: self.rows, terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|(&q, m)| (q, m * s)).collect();
        Self { rows: self.rows, cols: self.cols, terms }
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(fro).sum()
    }

    /// Trigonometric interpolation of samples on the uniform grid
    /// `y_k = 2 pi k / N`. The Nyquist mode is split evenly between `+-N/2`.
    pub fn from_samples(samples: &[CMat]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty sample table".into()));
        }
        let (rows, cols) = samples[0].shape();
        if samples.iter().any(|s| s.shape() != (rows, cols)) {
            return Err(Error::InvalidInput("inconsistent sample shapes".into()));
        }
        let mut out = Self::zeros(rows, cols);
        let half = (n / 2) as i32;
        let lo = -((n as i32 - 1) / 2);
        for q in lo..=half {
            let mut m = CMat::zeros(rows, cols);
            for (k, s) in samples.iter().enumerate() {
                let y = 2.0 * PI * k as f64 / n as f64;
                m += s * C64::from_polar(1.0 / n as f64, -(q as f64) * y);
            }
            if n.is_multiple_of(2) && q == half {
                let h = &m * c(0.5, 0.0);
                out.add_term(half, &h);
                out.add_term(-half, &h);
            } else {
                out.add_term(q, &m);
            }
        }
        out.prune(0.0);
        Ok(out)
    }

    /// Drop terms whose Frobenius norm is at most `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, m| fro(m) > tol);
    }
}

/// Matrix polynomial `sum_j C_j s^j` at a fixed `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    pub coeffs: Vec<CMat>,
}

impl MatrixPoly {
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("matrix polynomial needs at least one coefficient".into()));
        }
        let n = coeffs[0].nrows();
        if coeffs.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::InvalidInput("coefficients must be square and of equal size".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Index of the highest nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|m| fro(m) > 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| fro(m) == 0.0)
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(fro).fold(0.0, f64::max)
    }

    pub fn eval(&self, s: C64) -> CMat {
        let n = self.dim();
        let mut acc = CMat::zeros(n, n);
        for m in self.coeffs.iter().rev() {
            acc = acc * s + m;
        }
        acc
    }

    /// Taylor coefficients `F^{(j)}(s0)/j!` for `j = 0..=degree`.
    pub fn taylor(&self, s0: C64) -> Vec<CMat> {
        let d = self.coeffs.len() - 1;
        let pw = powers(s0, d);
        (0..=d)
            .map(|j| {
                let mut m = CMat::zeros(self.dim(), self.dim());
                for i in j..=d {
                    m += &self.coeffs[i] * (pw[i - j] * binom(i, j));
                }
                m
            })
            .collect()
    }

    /// Coefficients of `F(s + shift)` as a polynomial in `s`.
    pub fn shifted(&self, shift: C64) -> Self {
        Self { coeffs: self.taylor(shift) }
    }

    pub fn derivative(&self) -> Self {
        let n = self.dim();
        if self.coeffs.len() == 1 {
            return Self { coeffs: vec![CMat::zeros(n, n)] };
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(j, m)| m * c(j as f64, 0.0)).collect();
        Self { coeffs }
    }

    /// Evaluate at a matrix argument that acts on the right factor,
    /// `sum_j C_j v_j` where `v_j` are supplied vectors.
    pub fn apply_to_columns(&self, cols: &[CVec]) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for (m, v) in self.coeffs.iter().zip(cols) {
            out += m * v;
        }
        out
    }
}

/// Vector polynomial `sum_j v_j s^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct VecPoly {
    pub coeffs: Vec<CVec>,
}

impl VecPoly {
    pub fn constant(v: CVec) -> Self {
        Self { coeffs: vec![v] }
    }

    pub fn eval(&self, s: C64) -> CVec {
        let n = self.coeffs[0].len();
        let mut acc = CVec::zeros(n);
        for v in self.coeffs.iter().rev() {
            acc = acc * s + v;
        }
        acc
    }

    /// Product `M(s) v(s)` with a matrix polynomial.
    pub fn mul_left(m: &MatrixPoly, v: &VecPoly) -> VecPoly {
        let n = m.dim();
        let len = m.coeffs.len() + v.coeffs.len() - 1;
        let mut coeffs = vec![CVec::zeros(n); len];
        for (i, a) in m.coeffs.iter().enumerate() {
            for (j, b) in v.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        VecPoly { coeffs }
    }

    pub fn add(&self, other: &VecPoly) -> VecPoly {
        let n = self.coeffs[0].len();
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                let mut v = CVec::zeros(n);
                if let Some(a) = self.coeffs.get(k) {
                    v += a;
                }
                if let Some(b) = other.coeffs.get(k) {
                    v += b;
                }
                v
            })
            .collect();
        VecPoly { coeffs }
    }
}

/// Indicial family `F(y, s) = sum_j C_j(y) s^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolyFamily {
    dim: usize,
    coeffs: Vec<TrigMatrix>,
}

impl MatrixPolyFamily {
    pub fn new(coeffs: Vec<TrigMatrix>) -> Result<Self> {
        let dim = coeffs
            .first()
            .map(|m| m.rows)
            .ok_or_else(|| Error::InvalidInput("family needs at least one coefficient".into()))?;
        if coeffs.iter().any(|m| m.rows != dim || m.cols != dim) {
            return Err(Error::InvalidInput("family coefficients must be square and of equal size".into()));
        }
        Ok(Self { dim, coeffs })
    }

    /// Family with `y`-independent coefficients.
    pub fn constant(poly: &MatrixPoly) -> Self {
        Self {
            dim: poly.dim(),
            coeffs: poly.coeffs.iter().cloned().map(TrigMatrix::constant).collect(),
        }
    }

    /// Family interpolating tabulated polynomials on a uniform grid over `[0, 2 pi)`.
    pub fn from_samples(samples: &[MatrixPoly]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::InvalidInput("empty table".into()))?;
        let deg = first.coeffs.len();
        if samples.iter().any(|p| p.coeffs.len() != deg || p.dim() != first.dim()) {
            return Err(Error::InvalidInput("tabulated polynomials disagree in shape".into()));
        }
        let coeffs = (0..deg)
            .map(|j| {
                let col: Vec<CMat> = samples.iter().map(|p| p.coeffs[j].clone()).collect();
                TrigMatrix::from_samples(&col)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[TrigMatrix] {
        &self.coeffs
    }

    /// Formal degree in the spectral variable.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn at(&self, y: f64) -> MatrixPoly {
        MatrixPoly { coeffs: self.coeffs.iter().map(|m| m.eval(y)).collect() }
    }

    pub fn eval(&self, y: f64, s: C64) -> CMat {
        self.at(y).eval(s)
    }

    /// Derivative in `y` of every coefficient.
    pub fn y_derivative(&self, k: u32) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|m| m.derivative(k)).collect() }
    }

    /// Smallest singular value of `F(y, s)` on the strip edges
    /// `s = +-R + i t` for the sampled `y`. Large values indicate the
    /// family is invertible for large real part.
    pub fn far_field_min_singular(&self, strip: &Strip, ys: &[f64], radius: f64) -> f64 {
        let mut worst = f64::INFINITY;
        for &y in ys {
            let p = self.at(y);
            for k in 0..=8 {
                let t = strip.lower() + strip.height() * k as f64 / 8.0;
                for sign in [-1.0, 1.0] {
                    let s = c(sign * radius, t);
                    worst = worst.min(min_singular_value(&p.eval(s)) / p.eval(s).norm().max(1.0));
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_poly(y: f64) -> MatrixPoly {
        let a = CMat::from_row_slice(2, 2, &[c(y.sin(), 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0 + y.cos(), 0.0)]);
        MatrixPoly::new(vec![a, CMat::zeros(2, 2), CMat::identity(2, 2)]).unwrap()
    }

    #[test]
    fn dft_table_reproduces_trig_family() {
        let n = 16;
        let table: Vec<MatrixPoly> = (0..n).map(|k| sample_poly(2.0 * PI * k as f64 / n as f64)).collect();
        let fam = MatrixPolyFamily::from_samples(&table).unwrap();
        for y in [0.1, 1.3, 4.0] {
            let d = fro(&(fam.at(y).eval(c(0.3, 0.2)) - sample_poly(y).eval(c(0.3, 0.2))));
            assert!(d < 1e-13, "{d}");
        }
    }

    #[test]
    fn taylor_recenters_exactly() {
        let p = sample_poly(0.4);
        let s0 = c(0.2, -0.7);
        let q = p.shifted(s0);
        let s = c(1.1, 0.3);
        assert!(fro(&(q.eval(s - s0) - p.eval(s))) < 1e-13);
    }

    #[test]
    fn sin_affine_evaluates() {
        let t = TrigPoly::sin_affine(0.5, 0.2);
        assert!((t.eval(1.0) - c(0.5 + 0.2 * 1f64.sin(), 0.0)).norm() < 1e-15);
        assert!((t.derivative(1).eval(1.0) - c(0.2 * 1f64.cos(), 0.0)).norm() < 1e-15);
    }
}
