//! Uniformly sampled series s(n) built from parameter samples, plus the boxcar
//! averaging used by multi-window analysis.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ParamSample;

pub const DEFAULT_TAU: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("no samples to bin")]
    EmptyInput,
    #[error("sampling interval must be positive, got {0}")]
    BadTau(f64),
    #[error("boxcar width {width} exceeds series length {len}")]
    WindowTooLarge { width: usize, len: usize },
    #[error("boxcar width must be at least 1")]
    ZeroWidth,
    #[error("unknown {kind} '{value}'")]
    UnknownTag { kind: &'static str, value: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Last,
    Mean,
    Mode,
    Count,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    #[default]
    HoldLast,
    Zero,
}

impl FromStr for Aggregation {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "last" => Ok(Aggregation::Last),
            "mean" => Ok(Aggregation::Mean),
            "mode" => Ok(Aggregation::Mode),
            "count" => Ok(Aggregation::Count),
            _ => Err(SeriesError::UnknownTag {
                kind: "aggregation",
                value: s.to_string(),
            }),
        }
    }
}

impl FromStr for GapPolicy {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hold_last" | "hold-last" => Ok(GapPolicy::HoldLast),
            "zero" => Ok(GapPolicy::Zero),
            _ => Err(SeriesError::UnknownTag {
                kind: "gap policy",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Last => "last",
            Aggregation::Mean => "mean",
            Aggregation::Mode => "mode",
            Aggregation::Count => "count",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start_time: f64,
    pub tau: f64,
    pub values: Vec<f64>,
    pub aggregation: Aggregation,
    pub gap_policy: GapPolicy,
    /// Set when hold-last had nothing to hold for the opening bins, which
    /// were then zero-filled.
    pub leading_gap: bool,
}

impl TimeSeries {
    /// A series with default tags, mostly for synthetic data.
    pub fn from_values(values: Vec<f64>, tau: f64) -> Self {
        TimeSeries {
            start_time: 0.0,
            tau,
            values,
            aggregation: Aggregation::Last,
            gap_policy: GapPolicy::HoldLast,
            leading_gap: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, n: usize) -> f64 {
        self.start_time + n as f64 * self.tau
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        std_dev(&self.values)
    }

    /// Keeps every `factor`-th value starting at index 0.
    pub fn downsample(&self, factor: usize) -> TimeSeries {
        let factor = factor.max(1);
        TimeSeries {
            values: self.values.iter().step_by(factor).copied().collect(),
            tau: self.tau * factor as f64,
            ..self.clone()
        }
    }
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Half-open bin index of `t`: the `n` with `start + n*tau <= t < start + (n+1)*tau`.
pub(crate) fn bin_index(t: f64, start: f64, tau: f64) -> i64 {
    let mut n = ((t - start) / tau).floor() as i64;
    while start + (n + 1) as f64 * tau <= t {
        n += 1;
    }
    while start + n as f64 * tau > t {
        n -= 1;
    }
    n
}

/// Bins samples of one parameter starting at the earliest sample time.
///
/// The series has one value per bin from the first sample through the bin
/// holding the last sample.
pub fn bin_series(
    samples: &[ParamSample],
    tau: f64,
    aggregation: Aggregation,
    gap_policy: GapPolicy,
) -> Result<TimeSeries, SeriesError> {
    let start = samples
        .iter()
        .map(|s| s.time)
        .fold(f64::INFINITY, f64::min);
    bin_series_between(samples, start, None, tau, aggregation, gap_policy)
}

/// Bins samples onto a grid anchored at `start`.
///
/// Samples before `start` are dropped. When `end` is given the series covers
/// every bin up to and including the one holding `end`, even if the last
/// bins are empty; otherwise it stops at the last sample's bin.
pub fn bin_series_between(
    samples: &[ParamSample],
    start: f64,
    end: Option<f64>,
    tau: f64,
    aggregation: Aggregation,
    gap_policy: GapPolicy,
) -> Result<TimeSeries, SeriesError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(SeriesError::BadTau(tau));
    }
    let mut sorted: Vec<&ParamSample> = samples.iter().filter(|s| s.time >= start).collect();
    if sorted.is_empty() && end.is_none() {
        return Err(SeriesError::EmptyInput);
    }
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));

    let last_time = match (sorted.last(), end) {
        (Some(s), Some(e)) => s.time.max(e),
        (Some(s), None) => s.time,
        (None, Some(e)) => e,
        (None, None) => unreachable!(),
    };
    let len = (bin_index(last_time, start, tau) + 1).max(1) as usize;

    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); len];
    for s in sorted {
        let n = bin_index(s.time, start, tau) as usize;
        if n < len {
            bins[n].push(s.value);
        }
    }

    let mut values = Vec::with_capacity(len);
    let mut held: Option<f64> = None;
    let mut leading_gap = false;
    for bin in &bins {
        let v = match aggregate(bin, aggregation) {
            Some(v) => {
                held = Some(v);
                v
            }
            None => match gap_policy {
                GapPolicy::Zero => 0.0,
                GapPolicy::HoldLast => match held {
                    Some(h) => h,
                    None => {
                        leading_gap = true;
                        0.0
                    }
                },
            },
        };
        values.push(v);
    }
    Ok(TimeSeries {
        start_time: start,
        tau,
        values,
        aggregation,
        gap_policy,
        leading_gap,
    })
}

/// Aggregates one bin; `None` marks an empty bin to be gap-filled. Count mode
/// reports 0 for an empty bin, which is a measurement rather than a gap.
fn aggregate(bin: &[f64], aggregation: Aggregation) -> Option<f64> {
    if aggregation == Aggregation::Count {
        return Some(bin.len() as f64);
    }
    if bin.is_empty() {
        return None;
    }
    Some(match aggregation {
        Aggregation::Last => *bin.last().unwrap(),
        Aggregation::Mean => bin.iter().sum::<f64>() / bin.len() as f64,
        Aggregation::Mode => {
            // Ties go to the smallest value.
            let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
            for v in bin {
                *counts.entry(order_key(*v)).or_default() += 1;
            }
            let (key, _) = counts
                .iter()
                .fold((0u64, 0usize), |best, (k, c)| if *c > best.1 { (*k, *c) } else { best });
            from_order_key(key)
        }
        Aggregation::Count => unreachable!(),
    })
}

// Monotone map from f64 to u64 so BTreeMap iterates in numeric order.
fn order_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Valid-region moving average of width `width`, center-aligned in time.
pub fn boxcar_average(series: &TimeSeries, width: usize) -> Result<TimeSeries, SeriesError> {
    if width == 0 {
        return Err(SeriesError::ZeroWidth);
    }
    if width > series.len() {
        return Err(SeriesError::WindowTooLarge {
            width,
            len: series.len(),
        });
    }
    let w = width as f64;
    let values = series
        .values
        .windows(width)
        .map(|win| win.iter().sum::<f64>() / w)
        .collect();
    Ok(TimeSeries {
        start_time: series.start_time + (width - 1) as f64 * series.tau / 2.0,
        values,
        ..series.clone()
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    index: usize,
    time: f64,
    value: f64,
}

/// Writes `index,time,value` rows.
pub fn write_series_csv<W: Write>(w: W, series: &TimeSeries) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "time", "value"])?;
    for (n, v) in series.values.iter().enumerate() {
        out.write_record([n.to_string(), format!("{:.6}", series.time_at(n)), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an `index,time,value` file. Tau is taken from the first two rows
/// (or `fallback_tau` for a single row).
pub fn read_series_csv<R: Read>(r: R, fallback_tau: f64) -> csv::Result<TimeSeries> {
    let rows: Vec<SeriesRow> = csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<_, _>>()?;
    let start_time = rows.first().map(|r| r.time).unwrap_or(0.0);
    let tau = match rows.as_slice() {
        [a, b, ..] if b.time > a.time => b.time - a.time,
        _ => fallback_tau,
    };
    Ok(TimeSeries {
        start_time,
        tau,
        values: rows.into_iter().map(|r| r.value).collect(),
        aggregation: Aggregation::Last,
        gap_policy: GapPolicy::HoldLast,
        leading_gap: false,
    })
}
