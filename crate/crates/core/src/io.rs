//! CSV and JSON writers for trajectories, kernels and experiment reports.
//!
//! Numbers are written in Rust's shortest round-trip form, so identical
//! runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ExperimentReport, GrowthConstants};
use crate::coefficients::{CoefficientSet, DelayMap};
use crate::delay_solver::Trajectory;
use crate::discretization::{DenseMatrix, SpaceGrid};
use crate::error::Result;
use crate::propagator::PropagatorOptions;

fn num(v: f64) -> String {
    format!("{v}")
}

/// One row per stored node, history first: `t, u_0, …, u_{n−1}`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = traj.grid().node_count();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("u{i}")));
    w.write_record(&header)?;
    for (t, u) in traj.timeline() {
        let row = std::iter::once(num(t)).chain(u.iter().map(|&v| num(v)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dense kernel matrix, one CSV row per matrix row, no header.
pub fn write_matrix_csv<W: Write>(m: &DenseMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..m.rows() {
        w.write_record((0..m.cols()).map(|j| num(m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

/// Report rows as `m, E, bound, pass`.
pub fn write_report_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "E", "bound", "pass"])?;
    for r in &report.rows {
        w.write_record([
            num(r.m),
            num(r.error),
            r.bound.map(num).unwrap_or_default(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar describing how a trajectory was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub solver: String,
    pub coefficients: CoefficientSet,
    pub delay: DelayMap,
    pub grid: SpaceGrid,
    pub options: PropagatorOptions,
    pub start: f64,
    pub end: f64,
    pub growth: Option<GrowthConstants>,
    pub theta0: Option<f64>,
    pub picard_iterations: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

impl TrajectoryMetadata {
    pub fn for_trajectory(traj: &Trajectory, solver: &str) -> Self {
        TrajectoryMetadata {
            solver: solver.into(),
            coefficients: traj.coefficients().clone(),
            delay: traj.delay().clone(),
            grid: traj.grid().clone(),
            options: traj.options(),
            start: traj.start(),
            end: traj.end(),
            growth: None,
            theta0: None,
            picard_iterations: None,
            seed: None,
        }
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Creates parent directories and writes `bytes` to `path`.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}
