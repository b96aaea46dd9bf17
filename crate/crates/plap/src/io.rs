//! Report, solution, mesh and trace files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plap_core::pathfollow::TraceRecord;
use plap_core::{Mesh, SolveReport};
use serde::Serialize;

use crate::config::ProblemFile;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub config: ProblemFile,
    pub method: String,
    pub n_interior: usize,
    pub m: usize,
    pub h: f64,
    pub newton_aux: usize,
    pub newton_main: usize,
    pub newton_total: usize,
    pub rejections: usize,
    pub final_energy: f64,
    pub gap_bound: f64,
    pub epsilon: f64,
    pub epsilon_internal: f64,
    pub nu: f64,
    pub radius: f64,
    pub t_final: f64,
    pub predicted_bound: f64,
    pub wall_ms: f64,
    pub nodal_min: f64,
    pub nodal_max: f64,
    pub trace_len: usize,
}

impl ReportJson {
    pub fn new(config: ProblemFile, report: &SolveReport, wall_ms: f64) -> Self {
        let (lo, hi) = report
            .nodal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        ReportJson {
            config,
            method: report.method.name().into(),
            n_interior: report.n_interior,
            m: report.m,
            h: report.h,
            newton_aux: report.newton_aux,
            newton_main: report.newton_main,
            newton_total: report.newton_total,
            rejections: report.rejections,
            final_energy: report.final_energy,
            gap_bound: report.gap_bound,
            epsilon: report.epsilon,
            epsilon_internal: report.epsilon_internal,
            nu: report.nu,
            radius: report.radius,
            t_final: report.t_final,
            predicted_bound: report.predicted_bound,
            wall_ms,
            nodal_min: lo,
            nodal_max: hi,
            trace_len: report.trace.len(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::format(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// One row per vertex: coordinates followed by `u + g`.
pub fn write_solution_csv(path: &Path, mesh: &Mesh, nodal: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let d = mesh.dim();
    let mut header: Vec<String> = ["x", "y", "z"][..d].iter().map(|s| s.to_string()).collect();
    header.push("value".into());
    w.write_record(&header).map_err(|e| CliError::format(path, e))?;
    for (v, &val) in mesh.vertices().iter().zip(nodal) {
        let mut row: Vec<String> = v[..d].iter().map(|c| c.to_string()).collect();
        row.push(val.to_string());
        w.write_record(&row).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct MeshJson {
    d: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    boundary_mask: Vec<bool>,
}

pub fn write_mesh_json(path: &Path, mesh: &Mesh) -> Result<()> {
    let d = mesh.dim();
    let json = MeshJson {
        d,
        vertices: mesh.vertices().iter().map(|v| v[..d].to_vec()).collect(),
        simplices: mesh.simplices().iter().map(|s| s[..=d].to_vec()).collect(),
        boundary_mask: mesh.boundary_mask().to_vec(),
    };
    write_json(path, &json)
}

#[derive(Serialize)]
struct TraceRow<'a> {
    phase: &'a str,
    k: usize,
    t: f64,
    kappa: f64,
    decrement: f64,
    event: &'a str,
    energy: f64,
    gap_bound: f64,
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in trace {
        w.serialize(TraceRow {
            phase: r.phase.name(),
            k: r.k,
            t: r.t,
            kappa: r.kappa,
            decrement: r.decrement,
            event: r.event.name(),
            energy: r.energy,
            gap_bound: r.gap_bound,
        })
        .map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Boundary values from a JSON array or a list of numbers separated by
/// whitespace or commas.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| CliError::format(path, e));
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::format(path, format!("not a number: {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        std::fs::write(&a, "[0, 0.5, 1]").unwrap();
        assert_eq!(read_values(&a).unwrap(), vec![0.0, 0.5, 1.0]);
        let b = dir.path().join("b.txt");
        std::fs::write(&b, "0 0.5,\n1\n").unwrap();
        assert_eq!(read_values(&b).unwrap(), vec![0.0, 0.5, 1.0]);
        std::fs::write(&b, "0 x").unwrap();
        assert!(read_values(&b).is_err());
    }

    #[test]
    fn mesh_and_solution_dumps() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::build_box(&[1.0, 1.0], 2, 2).unwrap();
        let mp = dir.path().join("mesh.json");
        write_mesh_json(&mp, &mesh).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mp).unwrap()).unwrap();
        assert_eq!(v["d"], 2);
        assert_eq!(v["vertices"].as_array().unwrap().len(), 9);
        assert_eq!(v["simplices"].as_array().unwrap().len(), 8);
        assert_eq!(v["simplices"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["boundary_mask"].as_array().unwrap().iter().filter(|b| !b.as_bool().unwrap()).count(), 1);

        let sp = dir.path().join("sol.csv");
        write_solution_csv(&sp, &mesh, &[0.5; 9]).unwrap();
        let text = std::fs::read_to_string(&sp).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len(), 10);
    }
}
