//! Strips, closed contours and contour quadrature.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{MatrixPoly, MatrixPolyFamily};
use crate::grid::gauss_legendre;
use crate::linalg::{c, min_singular_value, CMat, C64, I};

/// Open strip `gamma - order < Im s < gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub gamma: f64,
    pub order: u32,
}

impl Strip {
    pub fn new(gamma: f64, order: u32) -> Result<Self> {
        if order == 0 || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("bad strip gamma={gamma} order={order}")));
        }
        Ok(Self { gamma, order })
    }

    pub fn upper(&self) -> f64 {
        self.gamma
    }

    pub fn lower(&self) -> f64 {
        self.gamma - self.order as f64
    }

    pub fn height(&self) -> f64 {
        self.order as f64
    }

    pub fn mid(&self) -> f64 {
        self.gamma - 0.5 * self.order as f64
    }

    pub fn contains(&self, s: C64) -> bool {
        s.im > self.lower() && s.im < self.upper()
    }

    /// Distance from `s` to the nearer boundary line.
    pub fn boundary_distance(&self, s: C64) -> f64 {
        (s.im - self.lower()).abs().min((self.upper() - s.im).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Circle { center: C64, radius: f64 },
    /// Axis-aligned ellipse with semi-axes along the real and imaginary directions.
    Ellipse { center: C64, semi_re: f64, semi_im: f64 },
    Rectangle { center: C64, half_re: f64, half_im: f64 },
}

/// Positively oriented closed contour with a node count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contour {
    pub shape: Shape,
    pub nodes: usize,
}

impl Contour {
    pub fn circle(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        Self::new(Shape::Circle { center, radius }, nodes)
    }

    pub fn new(shape: Shape, nodes: usize) -> Result<Self> {
        let ok = match shape {
            Shape::Circle { radius, .. } => radius > 0.0 && radius.is_finite(),
            Shape::Ellipse { semi_re, semi_im, .. } => semi_re > 0.0 && semi_im > 0.0,
            Shape::Rectangle { half_re, half_im, .. } => half_re > 0.0 && half_im > 0.0,
        };
        if !ok || nodes < 8 {
            return Err(Error::InvalidInput(format!("bad contour {shape:?} with {nodes} nodes")));
        }
        Ok(Self { shape, nodes })
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        Self { shape: self.shape, nodes }
    }

    pub fn center(&self) -> C64 {
        match self.shape {
            Shape::Circle { center, .. } | Shape::Ellipse { center, .. } | Shape::Rectangle { center, .. } => center,
        }
    }

    /// Radius of the smallest centered disk containing the contour.
    pub fn outer_radius(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius, .. } => radius,
            Shape::Ellipse { semi_re, semi_im, .. } => semi_re.max(semi_im),
            Shape::Rectangle { half_re, half_im, .. } => half_re.hypot(half_im),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        let w = z - self.center();
        match self.shape {
            Shape::Circle { radius, .. } => w.norm() < radius,
            Shape::Ellipse { semi_re, semi_im, .. } => (w.re / semi_re).powi(2) + (w.im / semi_im).powi(2) < 1.0,
            Shape::Rectangle { half_re, half_im, .. } => w.re.abs() < half_re && w.im.abs() < half_im,
        }
    }

    /// Distance from `z` to the contour, exact for circles and rectangles and
    /// from a dense sampling for ellipses.
    pub fn distance(&self, z: C64) -> f64 {
        let w = z - self.center();
        match self.shape {
            Shape::Circle { radius, .. } => (w.norm() - radius).abs(),
            Shape::Ellipse { semi_re, semi_im, .. } => (0..4096)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 4096.0;
                    (w - c(semi_re * t.cos(), semi_im * t.sin())).norm()
                })
                .fold(f64::INFINITY, f64::min),
            Shape::Rectangle { half_re, half_im, .. } => {
                let dx = w.re.abs() - half_re;
                let dy = w.im.abs() - half_im;
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius, .. } => 2.0 * PI * radius,
            Shape::Ellipse { semi_re: a, semi_im: b, .. } => {
                let h = ((a - b) / (a + b)).powi(2);
                PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
            }
            Shape::Rectangle { half_re, half_im, .. } => 4.0 * (half_re + half_im),
        }
    }

    pub fn node_spacing(&self) -> f64 {
        self.perimeter() / self.nodes as f64
    }

    /// Nodes `z_k` and weights `w_k` with
    /// `(1/(2 pi i)) \oint f dz ~ sum_k w_k f(z_k)`.
    pub fn quadrature(&self) -> Vec<(C64, C64)> {
        let n = self.nodes;
        let two_pi_i = c(0.0, 2.0 * PI);
        match self.shape {
            Shape::Circle { center, radius } => (0..n)
                .map(|k| {
                    let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                    (center + e * radius, e * radius / n as f64)
                })
                .collect(),
            Shape::Ellipse { center, semi_re, semi_im } => (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    let z = center + c(semi_re * t.cos(), semi_im * t.sin());
                    let dz = c(-semi_re * t.sin(), semi_im * t.cos());
                    (z, dz * (2.0 * PI / n as f64) / two_pi_i)
                })
                .collect(),
            Shape::Rectangle { center, half_re, half_im } => {
                let per_side = (n / 4).max(2);
                let gl = gauss_legendre(per_side);
                let corners = [
                    center + c(-half_re, -half_im),
                    center + c(half_re, -half_im),
                    center + c(half_re, half_im),
                    center + c(-half_re, half_im),
                ];
                let mut out = Vec::with_capacity(4 * per_side);
                for side in 0..4 {
                    let a = corners[side];
                    let b = corners[(side + 1) % 4];
                    for &(t, w) in &gl {
                        let z = a + (b - a) * (0.5 * (t + 1.0));
                        out.push((z, (b - a) * (0.5 * w) / two_pi_i));
                    }
                }
                out
            }
        }
    }
}

/// Trapezoid (Gauss on rectangle sides) approximation of
/// `(1/(2 pi i)) \oint f(z) dz` for a matrix-valued integrand. Nodes are
/// evaluated in parallel and summed in node order.
pub fn contour_integral<F>(contour: &Contour, f: F) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    let q = contour.quadrature();
    let vals: Vec<Result<CMat>> = q.par_iter().map(|&(z, _)| f(z)).collect();
    let mut acc: Option<CMat> = None;
    for ((z, w), v) in q.iter().zip(vals) {
        let v = v?;
        if v.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::NodeOnSingularity { node: *z, sigma_min: 0.0 });
        }
        let term = v * *w;
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(acc.expect("contour has nodes"))
}

/// Solve `F(z) X = B` at a contour node, refusing nodes where `F` is
/// numerically singular.
pub fn resolvent_apply(poly: &MatrixPoly, z: C64, rhs: &CMat, rank_tol: f64) -> Result<CMat> {
    let m = poly.eval(z);
    let smin = min_singular_value(&m);
    if smin < rank_tol * poly.scale().max(1.0) {
        return Err(Error::NodeOnSingularity { node: z, sigma_min: smin });
    }
    m.lu().solve(rhs).ok_or(Error::NodeOnSingularity { node: z, sigma_min: smin })
}

/// Smallest singular value of `F(z)` over the contour nodes. Errors when a
/// node is numerically singular.
pub fn check_admissible(poly: &MatrixPoly, contour: &Contour, rank_tol: f64) -> Result<f64> {
    let q = contour.quadrature();
    let vals: Vec<f64> = q.par_iter().map(|&(z, _)| min_singular_value(&poly.eval(z))).collect();
    let thresh = rank_tol * poly.scale().max(1.0);
    let mut worst = f64::INFINITY;
    for ((z, _), v) in q.iter().zip(vals) {
        if v < thresh {
            return Err(Error::NodeOnSingularity { node: *z, sigma_min: v });
        }
        worst = worst.min(v);
    }
    Ok(worst)
}

/// `sigma_min(F(y, s))` for each sample `s`.
pub fn min_singular_value_scan(family: &MatrixPolyFamily, y: f64, samples: &[C64]) -> Vec<f64> {
    let p = family.at(y);
    samples.par_iter().map(|&z| min_singular_value(&p.eval(z))).collect()
}

/// `sigma_min(F(y, z))` at the contour nodes, in node order.
pub fn contour_singular_value_scan(family: &MatrixPolyFamily, y: f64, contour: &Contour) -> Vec<(C64, f64)> {
    let nodes: Vec<C64> = contour.quadrature().into_iter().map(|(z, _)| z).collect();
    let vals = min_singular_value_scan(family, y, &nodes);
    nodes.into_iter().zip(vals).collect()
}

/// Argument principle count `(1/(2 pi i)) \oint tr(F^{-1} F') dz`.
pub fn argument_count(poly: &MatrixPoly, contour: &Contour, rank_tol: f64) -> Result<C64> {
    let dp = poly.derivative();
    let m = contour_integral(contour, |z| {
        let x = resolvent_apply(poly, z, &dp.eval(z), rank_tol)?;
        Ok(CMat::from_element(1, 1, x.trace()))
    })?;
    Ok(m[(0, 0)])
}

/// `e^{i theta}` helper used by several modules.
pub fn cis(theta: f64) -> C64 {
    (I * theta).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(m: C64) -> CMat {
        CMat::from_element(1, 1, m)
    }

    #[test]
    fn cauchy_integral_of_simple_pole() {
        let ct = Contour::circle(c(0.1, 0.0), 1.0, 64).unwrap();
        let v = contour_integral(&ct, |z| Ok(scalar(1.0 / (z - c(0.3, 0.2))))).unwrap();
        assert!((v[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ellipse_and_rectangle_agree_with_circle() {
        let f = |z: C64| Ok(scalar(z.exp() / ((z - c(0.2, 0.1)) * (z + c(0.3, 0.0)))));
        let a = contour_integral(&Contour::circle(C64::default(), 1.0, 128).unwrap(), f).unwrap();
        let e = Contour::new(Shape::Ellipse { center: C64::default(), semi_re: 1.5, semi_im: 0.6 }, 256).unwrap();
        let r = Contour::new(Shape::Rectangle { center: C64::default(), half_re: 1.0, half_im: 0.5 }, 256).unwrap();
        let b = contour_integral(&e, f).unwrap();
        let d = contour_integral(&r, f).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).norm() < 1e-12);
        assert!((a[(0, 0)] - d[(0, 0)]).norm() < 1e-10);
    }

    #[test]
    fn node_on_pole_is_rejected() {
        let p = MatrixPoly::new(vec![scalar(c(-1.0, 0.0)), scalar(c(1.0, 0.0))]).unwrap();
        let ct = Contour::circle(C64::default(), 1.0, 16).unwrap();
        assert!(matches!(check_admissible(&p, &ct, 1e-9), Err(Error::NodeOnSingularity { .. })));
    }

    #[test]
    fn strip_membership_is_strict() {
        let s = Strip::new(1.0, 2).unwrap();
        assert!(s.contains(c(3.0, 0.99)));
        assert!(!s.contains(c(0.0, 1.0)));
        assert!(!s.contains(c(0.0, -1.0)));
        assert!((s.boundary_distance(c(0.0, 0.7)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn singular_value_scan_of_sigma_identity() {
        let p = MatrixPoly::new(vec![CMat::zeros(2, 2), CMat::identity(2, 2)]).unwrap();
        let f = MatrixPolyFamily::constant(&p);
        let v = min_singular_value_scan(&f, 0.0, &[C64::default(), I]);
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_value_scan_vanishes_at_quartic_roots() {
        let fx = crate::fixtures::family_fixture("linebundle-quartic").unwrap();
        let v = min_singular_value_scan(&fx.family, 0.0, &[c(0.0, 0.7), c(0.0, -0.9), c(0.0, 0.8)]);
        assert!(v[0] < 1e-10 && v[1] < 1e-10, "{v:?}");
        assert!(v[2] > 1e-3, "{v:?}");
    }
}
