//! CSV and JSON renderings of computed results.
//!
//! Floats in CSV are written as `{:.15e}`; rows follow grid and index order,
//! so equal inputs give byte-identical files.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fixtures::DiskWitnessReport;
use crate::linalg::{CMat, CVec, C64};
use crate::pairing::{PairingMatrix, SmoothnessReport};
use crate::spectra::SpectralCurves;
use crate::trace::{TraceElement, TraceFrame};
use crate::varorder::EstimateRow;

pub fn fmt_f(x: f64) -> String {
    format!("{x:.15e}")
}

/// Header plus string rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// RFC 4180 text with `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("write to memory");
        for r in &self.rows {
            w.write_record(r).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf8 fields")
    }
}

/// One row per curve sample: `y, re_sigma, im_sigma, mult, partials, residual, method, curve_id, collision_flag`.
pub fn spectrum_table(curves: &SpectralCurves) -> Table {
    let mut t = Table::new(&["y", "re_sigma", "im_sigma", "mult", "partials", "residual", "method", "curve_id", "collision_flag"]);
    for (k, spec) in curves.spectra.iter().enumerate() {
        for cv in &curves.curves {
            let Some(s) = cv.samples.get(k) else { continue };
            let p = &spec.points[s.point];
            t.push(vec![
                fmt_f(spec.y),
                fmt_f(s.sigma.re),
                fmt_f(s.sigma.im),
                p.alg_mult.to_string(),
                p.partials_label(),
                fmt_f(p.residual),
                spec.method.as_str().to_string(),
                cv.id.to_string(),
                u8::from(s.collision).to_string(),
            ]);
        }
    }
    t
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn element_json(e: &TraceElement) -> Value {
    let terms: Vec<Value> = e
        .terms
        .iter()
        .map(|t| json!({ "sigma": cjson(t.sigma), "ell": t.ell, "coeff": t.coeff.iter().map(|&z| cjson(z)).collect::<Vec<_>>() }))
        .collect();
    json!({ "terms": terms })
}

/// Frame export: per `y`, the list of elements and their terms.
pub fn frame_json(frame: &TraceFrame) -> Value {
    let fibers: Vec<Value> = frame
        .ys
        .iter()
        .zip(&frame.elements)
        .map(|(&y, els)| json!({ "y": y, "elements": els.iter().map(element_json).collect::<Vec<_>>() }))
        .collect();
    json!({ "provenance": frame.provenance, "fibers": fibers })
}

/// `y, index, re, im` for each eigenvalue of `x d/dx` on the fiber at `y`.
pub fn xdx_table(ys: &[f64], eigs: &[Vec<C64>]) -> Table {
    let mut t = Table::new(&["y", "index", "re", "im"]);
    for (&y, ev) in ys.iter().zip(eigs) {
        for (i, z) in ev.iter().enumerate() {
            t.push(vec![fmt_f(y), i.to_string(), fmt_f(z.re), fmt_f(z.im)]);
        }
    }
    t
}

/// `y, i, j, re, im, cond` for each pairing matrix entry.
pub fn pairing_table(mats: &[PairingMatrix]) -> Table {
    let mut t = Table::new(&["y", "i", "j", "re", "im", "cond"]);
    for pm in mats {
        for i in 0..pm.matrix.nrows() {
            for j in 0..pm.matrix.ncols() {
                let z = pm.matrix[(i, j)];
                t.push(vec![fmt_f(pm.y), i.to_string(), j.to_string(), fmt_f(z.re), fmt_f(z.im), fmt_f(pm.cond)]);
            }
        }
    }
    t
}

pub fn smoothness_json(r: &SmoothnessReport) -> Value {
    json!({
        "max_second_difference": r.max_second_difference,
        "max_second_derivative": r.max_second_derivative,
        "max_cond": r.max_cond,
        "profile": r.profile.iter().map(|&(y, d)| json!([y, d])).collect::<Vec<_>>(),
    })
}

pub fn estimates_table(rows: &[EstimateRow]) -> Table {
    let mut t = Table::new(&["alpha", "beta", "fitted_slope", "bound", "constant", "pass"]);
    for r in rows {
        t.push(vec![r.alpha.to_string(), r.beta.to_string(), fmt_f(r.slope), fmt_f(r.bound), fmt_f(r.constant), r.pass.to_string()]);
    }
    t
}

/// Per-mode Rayleigh bracket and graph ratio of the disk witness.
pub fn disk_table(r: &DiskWitnessReport) -> Table {
    let mut t = Table::new(&["n", "lower", "upper", "graph_ratio"]);
    for m in &r.modes {
        t.push(vec![m.n.to_string(), fmt_f(m.lower), fmt_f(m.upper), fmt_f(m.graph_ratio)]);
    }
    t
}

/// Complex matrix as nested `[re, im]` rows.
pub fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

/// Grid samples from CSV with columns `y, re_0, im_0, re_1, im_1, ...`.
pub fn read_samples_csv(text: &str) -> Result<(Vec<f64>, Vec<CVec>)> {
    let bad = |msg: String| Error::InvalidInput(format!("samples csv: {msg}"));
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let width = rd.headers().map_err(|e| bad(e.to_string()))?.len();
    if width < 3 || width % 2 == 0 {
        return Err(bad(format!("expected y plus re/im pairs, got {width} columns")));
    }
    let mut ys = Vec::new();
    let mut us = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value".into()));
        }
        ys.push(vals[0]);
        us.push(CVec::from_iterator((width - 1) / 2, vals[1..].chunks(2).map(|p| C64::new(p[0], p[1]))));
    }
    if ys.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok((ys, us))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_scientific_floats_and_quotes_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![fmt_f(0.5), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n5.000000000000000e-1,\"x,y\"\n");
    }

    #[test]
    fn samples_round_trip() {
        let text = "y,re_0,im_0\n0.0,1.0,-2.0\n0.5,3.0,4.0\n";
        let (ys, us) = read_samples_csv(text).unwrap();
        assert_eq!(ys, vec![0.0, 0.5]);
        assert_eq!(us[1][0], C64::new(3.0, 4.0));
        assert!(read_samples_csv("y,re\n0,1\n").is_err());
        assert!(read_samples_csv("y,re,im\n0,1,nan\n").is_err());
    }
}
