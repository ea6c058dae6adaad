//! CSV and TOML artifacts of a run.
//!
//! * `observables_{bubbles,spectral}.csv`: `t, mass, energy` and, for
//!   `d = 2`, `momentum, P1, P2`, followed by one `drift_*` column per
//!   quantity. Drift is `|q(t) − q(0)|/|q(0)|`, or `|q(t) − q(0)|` when
//!   `|q(0)| < 1e-12` (a vanishing `𝒫_j` is roundoff, not a scale), clamped
//!   below at `1e-16`.
//! * `diagnostics.csv`: `t, gram_condition, effective_rank`.
//! * `final_state_grid.csv`: grid coordinates then `re, im` pairs of the
//!   final spectral field and of the final bubble sum sampled on the grid.
//! * `final_state_bubbles.toml`: a configuration file reproducing the run
//!   from the final ensemble.

use std::io::Write;
use std::path::Path;

use crate::bubble::BubbleRecord;
use crate::error::{Error, Result};
use crate::observables::ObservableRecord;
use crate::spectral::GridField;

use super::config::{RunConfig, TestCase};
use super::run::{DiagnosticRecord, RunOutput};

/// Floor applied to drift values.
pub const DRIFT_FLOOR: f64 = 1e-16;

/// Initial values smaller than this give absolute rather than relative drift.
pub const RELATIVE_DRIFT_CUTOFF: f64 = 1e-12;

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Relative drift of `q` from `q0`, clamped at [`DRIFT_FLOOR`].
pub fn drift(q: f64, q0: f64) -> f64 {
    let d = (q - q0).abs();
    let rel = if q0.abs() < RELATIVE_DRIFT_CUTOFF { d } else { d / q0.abs() };
    rel.max(DRIFT_FLOOR)
}

fn quantities(r: &ObservableRecord) -> Vec<f64> {
    let mut q = vec![r.mass, r.energy];
    if let Some(m) = r.momentum {
        q.push(m);
    }
    if let Some(p) = &r.non_radial {
        q.extend_from_slice(p);
    }
    q
}

fn quantity_names(r: &ObservableRecord) -> Vec<String> {
    let mut n = vec!["mass".to_string(), "energy".to_string()];
    if r.momentum.is_some() {
        n.push("momentum".into());
    }
    if let Some(p) = &r.non_radial {
        n.extend((1..=p.len()).map(|j| format!("P{j}")));
    }
    n
}

pub fn write_observables<W: Write>(w: W, records: &[ObservableRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = records.first() else {
        return Ok(());
    };
    let names = quantity_names(first);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    header.extend(names.iter().map(|n| format!("drift_{n}")));
    out.write_record(&header).map_err(csv_error)?;
    let q0 = quantities(first);
    for r in records {
        let q = quantities(r);
        let mut row = vec![fmt(r.t)];
        row.extend(q.iter().map(|&v| fmt(v)));
        row.extend(q.iter().zip(&q0).map(|(&v, &v0)| fmt(drift(v, v0))));
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_diagnostics<W: Write>(w: W, records: &[DiagnosticRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "gram_condition", "effective_rank"])
        .map_err(csv_error)?;
    for r in records {
        out.write_record([fmt(r.t), fmt(r.gram_condition), r.effective_rank.to_string()])
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes fields sharing one grid, as `x[, y], <name>_re, <name>_im, …`.
pub fn write_grid_fields<W: Write>(w: W, fields: &[(&str, &GridField)]) -> Result<()> {
    let Some((_, first)) = fields.first() else {
        return Ok(());
    };
    let grid = &first.grid;
    if let Some((_, f)) = fields.iter().find(|(_, f)| &f.grid != grid) {
        return Err(Error::InvalidGrid(format!(
            "fields on different grids: {:?} vs {:?}",
            grid.shape, f.grid.shape
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["x", "y"][..grid.dim()].iter().map(|s| s.to_string()).collect();
    for (name, _) in fields {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    out.write_record(&header).map_err(csv_error)?;
    for (i, x) in grid.points().iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|&v| fmt(v)).collect();
        for (_, f) in fields {
            row.push(fmt(f.values[i].re));
            row.push(fmt(f.values[i].im));
        }
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Writes every artifact of `out` into `cfg.output`, creating the directory.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir = &cfg.output;
    std::fs::create_dir_all(dir)?;
    if let Some(obs) = &out.bubble_observables {
        write_observables(create(&dir.join("observables_bubbles.csv"))?, obs)?;
        write_diagnostics(create(&dir.join("diagnostics.csv"))?, &out.diagnostics)?;
    }
    if let Some(obs) = &out.spectral_observables {
        write_observables(create(&dir.join("observables_spectral.csv"))?, obs)?;
    }

    let sampled = match (&out.final_bubbles, &out.grid) {
        (Some(e), Some(grid)) => Some(GridField::new(grid.clone(), e.evaluate(&grid.points())?)?),
        _ => None,
    };
    let mut fields: Vec<(&str, &GridField)> = Vec::new();
    if let Some(f) = &out.final_spectral {
        fields.push(("spectral", f));
    }
    if let Some(f) = &sampled {
        fields.push(("bubbles", f));
    }
    if !fields.is_empty() {
        write_grid_fields(create(&dir.join("final_state_grid.csv"))?, &fields)?;
    }

    if let Some(e) = &out.final_bubbles {
        let state = RunConfig {
            testcase: TestCase::Custom,
            bubbles: e.iter().map(BubbleRecord::from_bubble).collect(),
            ..cfg.clone()
        };
        std::fs::write(dir.join("final_state_bubbles.toml"), state.to_toml_string()?)?;
    }
    Ok(())
}
