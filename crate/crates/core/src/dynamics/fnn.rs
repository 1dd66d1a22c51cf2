use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::embed_values;
use super::kdtree::{brute_force_nearest, KdTree};
use super::DynamicsError;
use crate::series::{std_dev, TimeSeries};

/// Below this many embedded points a linear scan is used under
/// [`NeighborSearch::Auto`].
const KD_TREE_MIN_POINTS: usize = 2000;
const MIN_TESTABLE_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSearch {
    #[default]
    Auto,
    KdTree,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnParams {
    pub delay: usize,
    /// Threshold on the distance growth ratio when adding a coordinate.
    pub r_tol: f64,
    /// Threshold on the lifted distance relative to the series spread.
    pub a_tol: f64,
    /// Neighbors with `|n - m| <= theiler` are skipped; defaults to `delay`.
    pub theiler: Option<usize>,
    pub search: NeighborSearch,
}

impl Default for FnnParams {
    fn default() -> Self {
        FnnParams {
            delay: 1,
            r_tol: 15.0,
            a_tol: 2.0,
            theiler: None,
            search: NeighborSearch::Auto,
        }
    }
}

impl FnnParams {
    pub fn with_delay(delay: usize) -> Self {
        FnnParams {
            delay,
            ..Self::default()
        }
    }

    pub fn theiler_window(&self) -> usize {
        self.theiler.unwrap_or(self.delay)
    }
}

/// Outcome for one reference point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub index: usize,
    pub neighbor: usize,
    /// Neighbor distance in the d-dimensional space.
    pub distance: f64,
    pub false_neighbor: bool,
}

/// Nearest-neighbor verdicts for every point embeddable at `dim + 1`.
///
/// Points whose every candidate falls inside the Theiler window are left out.
pub fn fnn_verdicts(values: &[f64], dim: usize, params: &FnnParams) -> Result<Vec<Verdict>, DynamicsError> {
    if dim == 0 || params.delay == 0 {
        return Err(DynamicsError::InvalidParameter(
            "embedding dimension and delay must be positive".into(),
        ));
    }
    let spread = std_dev(values);
    if spread == 0.0 {
        return Err(DynamicsError::DegenerateSeries);
    }
    let delay = params.delay;
    let lift = dim * delay;
    let count = values.len().saturating_sub(lift);
    if count < MIN_TESTABLE_POINTS {
        return Err(DynamicsError::InsufficientData {
            what: "embeddable points",
            needed: MIN_TESTABLE_POINTS,
            available: count,
        });
    }
    // Embedding only the first `count` vectors keeps every candidate liftable.
    let vectors = embed_values(&values[..count + (dim - 1) * delay], dim, delay)?;
    let flat = vectors.as_flat();
    let theiler = params.theiler_window();
    let use_tree = match params.search {
        NeighborSearch::KdTree => true,
        NeighborSearch::BruteForce => false,
        NeighborSearch::Auto => count > KD_TREE_MIN_POINTS,
    };
    let tree = use_tree.then(|| KdTree::new(flat, dim));

    let verdicts: Vec<Option<Verdict>> = (0..count)
        .into_par_iter()
        .map(|n| {
            let query = vectors.point(n);
            let exclude = |m: usize| m.abs_diff(n) <= theiler;
            let found = match &tree {
                Some(t) => t.nearest(query, exclude),
                None => brute_force_nearest(flat, dim, query, exclude),
            };
            found.map(|(d2, m)| {
                let distance = d2.sqrt();
                let extra = (values[n + lift] - values[m + lift]).abs();
                let growth_false = if distance > 0.0 {
                    extra / distance > params.r_tol
                } else {
                    extra > 0.0
                };
                let lifted = (d2 + extra * extra).sqrt();
                Verdict {
                    index: n,
                    neighbor: m,
                    distance,
                    false_neighbor: growth_false || lifted / spread > params.a_tol,
                }
            })
        })
        .collect();
    Ok(verdicts.into_iter().flatten().collect())
}

fn fnn_counts(values: &[f64], dim: usize, params: &FnnParams) -> Result<(usize, usize), DynamicsError> {
    let verdicts = fnn_verdicts(values, dim, params)?;
    if verdicts.is_empty() {
        return Err(DynamicsError::InsufficientData {
            what: "points with a neighbor outside the Theiler window",
            needed: 1,
            available: 0,
        });
    }
    let false_count = verdicts.iter().filter(|v| v.false_neighbor).count();
    Ok((false_count, verdicts.len()))
}

/// Fraction of tested points whose nearest neighbor at `dim` is false.
pub fn fnn_fraction(series: &TimeSeries, dim: usize, params: &FnnParams) -> Result<f64, DynamicsError> {
    let (f, tested) = fnn_counts(&series.values, dim, params)?;
    Ok(f as f64 / tested as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnEntry {
    pub dim: usize,
    pub fraction: f64,
    /// Number of points that had a neighbor to test.
    pub neighbors: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FnnCurve {
    pub entries: Vec<FnnEntry>,
    pub warnings: Vec<String>,
}

impl FnnCurve {
    pub fn fraction_at(&self, dim: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.dim == dim).map(|e| e.fraction)
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fraction).collect()
    }

    /// Writes `d,fraction,neighbors` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["d", "fraction", "neighbors"])?;
        for e in &self.entries {
            out.write_record([e.dim.to_string(), e.fraction.to_string(), e.neighbors.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// FNN fractions for `d = 1..=d_max`. Dimensions without enough data are
/// skipped and noted in `warnings`; other errors abort.
pub fn fnn_curve(series: &TimeSeries, d_max: usize, params: &FnnParams) -> Result<FnnCurve, DynamicsError> {
    if d_max == 0 {
        return Err(DynamicsError::InvalidParameter("d_max must be at least 1".into()));
    }
    let mut curve = FnnCurve::default();
    for dim in 1..=d_max {
        match fnn_counts(&series.values, dim, params) {
            Ok((f, tested)) => curve.entries.push(FnnEntry {
                dim,
                fraction: f as f64 / tested as f64,
                neighbors: tested,
            }),
            Err(e @ DynamicsError::InsufficientData { .. }) => {
                curve.warnings.push(format!("d={dim} skipped: {e}"))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Smallest dimension whose fraction is at or below `threshold`.
pub fn estimate_dimension(curve: &FnnCurve, threshold: f64) -> Option<usize> {
    curve
        .entries
        .iter()
        .find(|e| e.fraction <= threshold)
        .map(|e| e.dim)
}
