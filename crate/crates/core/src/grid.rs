//! Gauss-Legendre rules and composite grids in the logarithmic variable.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
    let mut v: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Composite Gauss-Legendre grid in `t = ln x` over panels separated by the
/// given breakpoints. Integrals are `sum_k w_k f(x_k)` approximating
/// `\int f(x) dx/x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogGrid {
    pub breaks: Vec<f64>,
    pub per_panel: usize,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

impl LogGrid {
    /// Grid with panel edges at the given increasing points `x`.
    pub fn with_breaks(breaks: &[f64], per_panel: usize) -> Result<Self> {
        if breaks.len() < 2 || per_panel == 0 {
            return Err(Error::InvalidInput("log grid needs two breakpoints and positive order".into()));
        }
        if breaks.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || breaks.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("log grid breakpoints must be positive and increasing".into()));
        }
        let gl = gauss_legendre(per_panel);
        let mut t = Vec::new();
        let mut w = Vec::new();
        for p in breaks.windows(2) {
            let (a, b) = (p[0].ln(), p[1].ln());
            for &(s, ws) in &gl {
                t.push(0.5 * (a + b) + 0.5 * (b - a) * s);
                w.push(0.5 * (b - a) * ws);
            }
        }
        Ok(Self { breaks: breaks.to_vec(), per_panel, t, w })
    }

    /// Grid adapted to a cutoff transition on `[x_a, x_b]`: panels
    /// `[x_a/2, x_a]`, `[x_a, x_b]`, `[x_b, 2 x_b]`.
    pub fn for_cutoff(x_a: f64, x_b: f64, per_panel: usize) -> Result<Self> {
        Self::with_breaks(&[0.5 * x_a, x_a, x_b, 2.0 * x_b], per_panel)
    }

    pub fn refined(&self) -> Self {
        Self::with_breaks(&self.breaks, 2 * self.per_panel).expect("valid grid")
    }

    pub fn x(&self) -> impl Iterator<Item = f64> + '_ {
        self.t.iter().map(|t| t.exp())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.breaks[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.breaks.last().expect("nonempty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let r = gauss_legendre(5);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn log_grid_measure() {
        let g = LogGrid::with_breaks(&[0.25, 0.5, 1.0], 8).unwrap();
        let s: f64 = g.x().zip(&g.w).map(|(x, w)| w * x).sum();
        assert!((s - 0.75).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_breaks() {
        assert!(LogGrid::with_breaks(&[1.0, 0.5], 4).is_err());
        assert!(LogGrid::with_breaks(&[0.0, 0.5], 4).is_err());
    }
}
