//! Phase-space reconstruction of a scalar series: delay embedding, false
//! nearest neighbors, projections, and an occupancy-grid baseline for
//! scoring departures from a reference trajectory.

mod delay;
mod embed;
mod fnn;
pub mod kdtree;
mod occupancy;

use std::io::Write;

use thiserror::Error;

pub use delay::{autocorrelation, first_acf_minimum, default_delay};
pub use embed::{embed, project, DelayVectors};
pub use fnn::{
    estimate_dimension, fnn_curve, fnn_fraction, fnn_verdicts, FnnCurve, FnnEntry, FnnParams,
    NeighborSearch, Verdict,
};
pub use occupancy::{fit_occupancy, novelty_score, OccupancyModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("insufficient data: need at least {needed} {what}, have {available}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("degenerate series: variance is zero")]
    DegenerateSeries,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("projection needs 2 or 3 axes, got {0}")]
    BadAxisCount(usize),
    #[error("point has {got} coordinates, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    ModelFormat(String),
}

/// Writes points one per row with columns `x0,x1,...`.
pub fn write_points_csv<W: Write>(w: W, points: &[Vec<f64>]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = points.first().map_or(0, Vec::len);
    out.write_record((0..dim).map(|i| format!("x{i}")))?;
    for p in points {
        out.write_record(p.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_points_csv<R: std::io::Read>(r: R) -> csv::Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().collect()
}
