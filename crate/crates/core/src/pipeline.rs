//! Problem resolution from a run configuration and the file sets written by
//! each command.

use std::f64::consts::PI;

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::contour::{Contour, Strip};
use crate::error::{Error, Result};
use crate::family::MatrixPolyFamily;
use crate::fixtures::{disk_norm_witness, fixture, Fixture, FamilyFixture};
use crate::grid::LogGrid;
use crate::linalg::{eigenvalues, C64};
use crate::output::{
    disk_table, estimates_table, fmt_f, frame_json, matrix_json, pairing_table, read_samples_csv, smoothness_json, spectrum_table,
    xdx_table, Table,
};
use crate::pairing::{adjoint_contour, adjoint_family, pairing_over, transition_smoothness};
use crate::spectra::{common_separating_contour, companion_solve, contour_solve, curves_from_spectra, uniform_grid, Spectrum};
use crate::trace::{frame_continuation, xdx_endomorphism, TraceFrame, TraceOptions};
use crate::varorder::{
    admissible_decomposition, crossing_field, symbol_estimate_check, varorder_norm, BracketMetric, EndomorphismField, SymbolCheckOptions,
};
use crate::wedge::{indicial_family, FiberBasis, WedgeOperatorSpec};

/// Quadrature nodes per cutoff panel.
const PANEL_NODES: usize = 32;

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn csv(name: &str, t: &Table) -> Self {
        Self { name: name.into(), contents: t.to_csv() }
    }

    fn json(name: &str, v: &Value) -> Self {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        Self { name: name.into(), contents: s }
    }
}

/// Family, strip and separating contour selected by a configuration.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub family: MatrixPolyFamily,
    pub strip: Strip,
    pub contour: Contour,
    pub operator: Option<WedgeOperatorSpec>,
}

/// Resolve the fixture or operator in `cfg`, applying strip and contour overrides.
pub fn resolve(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    let ys = uniform_grid(cfg.grid);
    let (name, family, strip, contour, operator) = match (&cfg.fixture, &cfg.operator) {
        (Some(_), Some(_)) => return Err(Error::InvalidInput("give either a fixture or an operator, not both".into())),
        (None, None) => return Err(Error::InvalidInput("no fixture or operator given".into())),
        (Some(name), None) => {
            let fx: FamilyFixture = match fixture(name)? {
                Fixture::Family(f) => *f,
                Fixture::Disk { .. } => return Err(Error::InvalidInput(format!("fixture '{name}' has no indicial family"))),
            };
            (name.clone(), fx.family, cfg.strip.unwrap_or(fx.strip), Some(cfg.contour.unwrap_or(fx.contour)), Some(fx.operator))
        }
        (None, Some(op)) => {
            let basis = FiberBasis::new(&op.fiber)?;
            let (family, _) = indicial_family(op, &basis)?;
            let strip = match cfg.strip {
                Some(s) => s,
                None => Strip::new(op.gamma, op.m)?,
            };
            ("operator".to_string(), family, strip, cfg.contour, Some(op.clone()))
        }
    };
    let contour = match contour {
        Some(spec) => spec.build(cfg.nodes)?,
        None => common_separating_contour(&family, &ys, &strip, cfg.nodes, cfg.tolerances.rank_tol)?
            .ok_or_else(|| Error::InvalidInput("no contour separates the strip spectrum; give one in the config".into()))?,
    };
    Ok(Problem { name, family, strip, contour, operator })
}

/// `spectrum.csv`: companion and contour curves over the grid.
pub fn spectrum_outputs(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let pb = resolve(cfg)?;
    let ys = uniform_grid(cfg.grid);
    let tol = &cfg.tolerances;
    let run = |f: &(dyn Fn(f64) -> Result<Spectrum> + Sync)| -> Result<Vec<Spectrum>> {
        use rayon::prelude::*;
        ys.par_iter().map(|&y| f(y)).collect()
    };
    let comp = run(&|y| companion_solve(&pb.family, y, &pb.strip, tol))?;
    let cont = run(&|y| {
        let mut s = contour_solve(&pb.family, y, &pb.contour, cfg.probe_columns, cfg.seed, tol)?;
        s.points.retain(|p| pb.strip.contains(p.sigma));
        Ok(s)
    })?;
    let mut t = spectrum_table(&curves_from_spectra(comp));
    t.rows.extend(spectrum_table(&curves_from_spectra(cont)).rows);
    Ok(vec![Artifact::csv("spectrum.csv", &t)])
}

fn continued(pb: &Problem, y0: f64, ys: &[f64], opts: &TraceOptions) -> Result<TraceFrame> {
    frame_continuation(&pb.family, y0, ys, &pb.contour, &pb.strip, opts)
}

fn sorted_eigenvalues(frame: &TraceFrame, rank_tol: f64) -> Result<Vec<Vec<C64>>> {
    frame
        .elements
        .iter()
        .map(|els| {
            let mut ev = eigenvalues(&xdx_endomorphism(els, rank_tol)?);
            ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            Ok(ev)
        })
        .collect()
}

/// `frame.json` (continued from `reference_y`) and `xdx_eigenvalues.csv`.
pub fn frame_outputs(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let pb = resolve(cfg)?;
    let ys = uniform_grid(cfg.grid);
    let opts = TraceOptions::from(cfg);
    let frame = continued(&pb, cfg.reference_y, &ys, &opts)?;
    let ev = sorted_eigenvalues(&frame, cfg.tolerances.rank_tol)?;
    Ok(vec![Artifact::json("frame.json", &frame_json(&frame)), Artifact::csv("xdx_eigenvalues.csv", &xdx_table(&ys, &ev))])
}

/// `pairing.csv` over the grid and `smoothness.json` for the transition
/// between frames continued from two opposite grid points.
pub fn pairing_outputs(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let pb = resolve(cfg)?;
    let ys = uniform_grid(cfg.grid);
    let opts = TraceOptions::from(cfg);
    let grid = LogGrid::for_cutoff(cfg.cutoff.x_a, cfg.cutoff.x_b, PANEL_NODES)?;
    let mats = pairing_over(&pb.family, &ys, &pb.strip, Some(&pb.contour), &cfg.cutoff, &grid, &opts)?;
    let fa = continued(&pb, ys[0], &ys, &opts)?;
    let fb = continued(&pb, ys[ys.len() / 2], &ys, &opts)?;
    let adj = adjoint_family(&pb.family, &pb.strip);
    let fadj = frame_continuation(&adj, cfg.reference_y, &ys, &adjoint_contour(&pb.contour, &pb.strip), &pb.strip, &opts)?;
    let tf = transition_smoothness(&pb.family, &pb.strip, &fa, &fb, &fadj, &cfg.cutoff, &grid)?;
    Ok(vec![Artifact::csv("pairing.csv", &pairing_table(&mats)), Artifact::json("smoothness.json", &smoothness_json(&tf.report))])
}

fn varorder_inputs(cfg: &RunConfig) -> Result<(EndomorphismField, BracketMetric, f64, f64)> {
    match &cfg.varorder {
        Some(v) => Ok((EndomorphismField::new(v.field.to_trig_matrix()?)?, BracketMetric::new(v.metric.clone())?, v.s, cfg.reference_y)),
        None => Ok((crossing_field(), BracketMetric::unit(), 0.0, PI / 2.0)),
    }
}

/// `decomposition.json` at the reference point, plus `norm.json` when
/// samples are supplied.
pub fn varorder_outputs(cfg: &RunConfig, samples_csv: Option<&str>) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    let (field, metric, s, y0) = varorder_inputs(cfg)?;
    let dec = admissible_decomposition(&field, y0, cfg.delta)?;
    let compat = [2.0, 10.0, 100.0]
        .iter()
        .map(|&rho| Ok(json!({ "rho": rho, "defect": dec.power_compatibility(rho)? })))
        .collect::<Result<Vec<_>>>()?;
    let disks: Vec<Value> = dec
        .disks
        .iter()
        .map(|d| json!({ "center": [d.center.re, d.center.im], "radius": d.radius, "multiplicity": d.multiplicity }))
        .collect();
    let projections = dec.projections(y0)?.iter().map(matrix_json).collect::<Vec<_>>();
    let report = json!({
        "y0": y0,
        "delta": cfg.delta,
        "u": [dec.u.0, dec.u.1],
        "full_circle": dec.full_circle,
        "disks": disks,
        "projections_at_y0": projections,
        "identity_defect": dec.identity_defect(),
        "power_compatibility": compat,
    });
    let mut out = vec![Artifact::json("decomposition.json", &report)];
    if let Some(text) = samples_csv {
        let (ys, us) = read_samples_csv(text)?;
        let n = ys.len();
        for (j, &y) in ys.iter().enumerate() {
            if (y - 2.0 * PI * j as f64 / n as f64).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("sample row {j}: y must be 2 pi j / N, got {y}")));
            }
        }
        let norm = varorder_norm(&us, &field, &metric, s)?;
        out.push(Artifact::json("norm.json", &json!({ "s": s, "grid": n, "norm": fmt_f(norm) })));
    }
    Ok(out)
}

/// `estimates.csv` for the symbol estimates of `<eta>^{a(y)}`.
pub fn symbol_outputs(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    cfg.validate()?;
    let (field, metric, _, y0) = varorder_inputs(cfg)?;
    let opts = SymbolCheckOptions { delta: cfg.delta, y0, ..SymbolCheckOptions::default() };
    let rows = symbol_estimate_check(&field, &metric, &opts)?;
    Ok(vec![Artifact::csv("estimates.csv", &estimates_table(&rows))])
}

/// Files describing a named fixture.
pub fn fixture_outputs(name: &str, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match fixture(name)? {
        Fixture::Disk { n_max } => {
            let r = disk_norm_witness(n_max)?;
            let summary = json!({
                "n_max": r.n_max, "lower": r.lower, "upper": r.upper, "gram_cond": r.gram_cond, "graph_sup": r.graph_sup,
            });
            Ok(vec![Artifact::csv("disk_witness.csv", &disk_table(&r)), Artifact::json("disk_witness.json", &summary)])
        }
        Fixture::Family(fx) => {
            let mut out = vec![Artifact::json("operator.json", &serde_json::to_value(&fx.operator).expect("serializable"))];
            if let Some(ex) = &fx.line_bundle {
                let ys = uniform_grid(cfg.grid);
                let mut t = Table::new(&["y", "index", "re_sigma", "im_sigma"]);
                for &y in &ys {
                    for (i, s) in ex.closed_form_spectrum(y)?.iter().enumerate() {
                        t.push(vec![fmt_f(y), i.to_string(), fmt_f(s.re), fmt_f(s.im)]);
                    }
                }
                out.push(Artifact::csv("closed_form_spectrum.csv", &t));
            }
            if let (Some(ex), Some(&y0)) = (&fx.line_bundle, fx.collisions.first()) {
                let r = ex.collision_frame_reference(y0)?;
                let part = |sp: &crate::trace::SingularPart| {
                    let poles: Vec<Value> = sp
                        .poles
                        .iter()
                        .map(|p| {
                            let coeffs: Vec<Value> =
                                p.coeffs.iter().map(|v| Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())).collect();
                            json!({ "sigma": [p.sigma.re, p.sigma.im], "coeffs": coeffs })
                        })
                        .collect();
                    json!({ "poles": poles })
                };
                let v = json!({
                    "y0": r.y0,
                    "printed": r.printed.iter().map(part).collect::<Vec<_>>(),
                    "oracle": r.oracle.iter().map(part).collect::<Vec<_>>(),
                });
                out.push(Artifact::json("collision_reference.json", &v));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: &str, grid: usize) -> RunConfig {
        RunConfig { fixture: Some(name.into()), grid, ..RunConfig::default() }
    }

    #[test]
    fn generic_spectrum_has_four_curves_per_method() {
        let out = spectrum_outputs(&cfg("linebundle-generic", 8)).unwrap();
        let lines: Vec<&str> = out[0].contents.lines().collect();
        assert_eq!(lines[0], "y,re_sigma,im_sigma,mult,partials,residual,method,curve_id,collision_flag");
        assert_eq!(lines.len(), 1 + 2 * 8 * 4);
        assert!(lines.iter().any(|l| l.ends_with(",contour,3,0")));
    }

    #[test]
    fn both_or_neither_source_is_rejected() {
        assert!(resolve(&RunConfig::default()).unwrap_err().is_validation());
        let mut c = cfg("classical-m1", 8);
        c.operator = Some(resolve(&cfg("classical-m1", 8)).unwrap().operator.unwrap());
        assert!(resolve(&c).unwrap_err().is_validation());
        assert!(resolve(&cfg("disk-witness", 8)).unwrap_err().is_validation());
    }

    #[test]
    fn operator_config_matches_fixture_family() {
        let fx = resolve(&cfg("classical-m2", 8)).unwrap();
        let c = RunConfig { operator: fx.operator.clone(), grid: 8, ..RunConfig::default() };
        let pb = resolve(&c).unwrap();
        for y in [0.0, 1.3] {
            for s in [C64::new(0.3, -0.2), C64::new(-1.0, 0.4)] {
                let d = pb.family.eval(y, s) - fx.family.eval(y, s);
                assert!(d.norm() < 1e-12);
            }
        }
    }
}
