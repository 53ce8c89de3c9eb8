//! Run configuration, read from JSON.

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, Shape, Strip};
use crate::error::{Error, Result};
use crate::family::{TrigMatrix, TrigPoly};
use crate::linalg::{c, CMat};
use crate::wedge::WedgeOperatorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative threshold for numerical rank decisions.
    pub rank_tol: f64,
    /// Bound on eigenvector and kernel residuals.
    pub residual_tol: f64,
    /// Relative distance under which eigenvalues are merged.
    pub match_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_tol: 1e-9, residual_tol: 1e-8, match_tol: 1e-7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ContourSpec {
    Circle { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    Rectangle { center: [f64; 2], half_extents: [f64; 2] },
}

impl ContourSpec {
    pub fn build(&self, nodes: usize) -> Result<Contour> {
        let shape = match *self {
            ContourSpec::Circle { center, radius } => Shape::Circle { center: c(center[0], center[1]), radius },
            ContourSpec::Ellipse { center, semi_axes } => {
                Shape::Ellipse { center: c(center[0], center[1]), semi_re: semi_axes[0], semi_im: semi_axes[1] }
            }
            ContourSpec::Rectangle { center, half_extents } => {
                Shape::Rectangle { center: c(center[0], center[1]), half_re: half_extents[0], half_im: half_extents[1] }
            }
        };
        Contour::new(shape, nodes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoff {
    pub x_a: f64,
    pub x_b: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { x_a: 0.3, x_b: 0.9 }
    }
}

/// Endomorphism field `a(y)` given entrywise as trigonometric polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub entries: Vec<Vec<TrigPoly>>,
}

impl FieldSpec {
    pub fn to_trig_matrix(&self) -> Result<TrigMatrix> {
        let n = self.entries.len();
        if n == 0 || self.entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("field must be a nonempty square table".into()));
        }
        Ok(TrigMatrix::from_entries(n, n, |i, j| self.entries[i][j].clone()))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { TrigPoly::constant(values[i]) } else { TrigPoly::default() }).collect())
            .collect();
        Self { entries }
    }

    pub fn constant_matrix(m: &CMat) -> Self {
        let entries = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| TrigPoly::from_terms(&[(0, m[(i, j)])])).collect())
            .collect();
        Self { entries }
    }
}

/// Variable-order settings: field, bracket metric and Sobolev shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarorderSpec {
    pub field: FieldSpec,
    #[serde(default = "VarorderSpec::unit_metric")]
    pub metric: TrigPoly,
    #[serde(default)]
    pub s: f64,
}

impl VarorderSpec {
    fn unit_metric() -> TrigPoly {
        TrigPoly::constant(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fixture: Option<String>,
    pub operator: Option<WedgeOperatorSpec>,
    pub strip: Option<Strip>,
    pub contour: Option<ContourSpec>,
    pub nodes: usize,
    pub grid: usize,
    pub tolerances: Tolerances,
    pub delta: f64,
    pub cutoff: Cutoff,
    pub probe_columns: usize,
    pub seed: u64,
    pub reference_y: f64,
    pub varorder: Option<VarorderSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fixture: None,
            operator: None,
            strip: None,
            contour: None,
            nodes: 256,
            grid: 64,
            tolerances: Tolerances::default(),
            delta: 0.25,
            cutoff: Cutoff::default(),
            probe_columns: 0,
            seed: 7,
            reference_y: 0.0,
            varorder: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rank_tol", t.rank_tol)?;
        positive("residual_tol", t.residual_tol)?;
        positive("match_tol", t.match_tol)?;
        if self.nodes < 16 {
            return Err(Error::InvalidInput(format!("nodes must be at least 16, got {}", self.nodes)));
        }
        if self.grid < 4 {
            return Err(Error::InvalidInput(format!("grid must be at least 4, got {}", self.grid)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.cutoff.x_a > 0.0 && self.cutoff.x_a < self.cutoff.x_b && self.cutoff.x_b <= 1.0) {
            return Err(Error::InvalidInput("cutoff needs 0 < x_a < x_b <= 1".into()));
        }
        if let Some(s) = &self.strip {
            Strip::new(s.gamma, s.order)?;
        }
        if let Some(ct) = &self.contour {
            ct.build(self.nodes)?;
        }
        if let Some(v) = &self.varorder {
            v.field.to_trig_matrix()?;
        }
        if let Some(op) = &self.operator {
            op.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(RunConfig::from_json(r#"{"nodez": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"delta": 1.5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tolerances": {"rank_tol": -1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"strip": {"gamma": 1, "order": 0}}"#).is_err());
    }

    #[test]
    fn contour_spec_parses() {
        let cfg = RunConfig::from_json(r#"{"contour": {"kind": "circle", "center": [0, 0], "radius": 1.1}}"#).unwrap();
        let ct = cfg.contour.unwrap().build(cfg.nodes).unwrap();
        assert_eq!(ct.nodes, 256);
    }
}
