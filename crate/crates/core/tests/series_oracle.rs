use std::collections::BTreeMap;

use flowdim_core::params::{ParamId, ParamSample};
use flowdim_core::series::{bin_series, boxcar_average, Aggregation, GapPolicy};
use flowdim_core::TimeSeries;
use proptest::prelude::*;

// Times are multiples of 1/1024 s and tau a multiple of 1/64 s, so every
// boundary is exact in binary floating point and integer division is the
// ground truth.
fn oracle(samples: &[(u32, i32)], tau_units: u32, agg: Aggregation, gap: GapPolicy) -> Vec<f64> {
    let tau = tau_units * 16;
    let start = samples.iter().map(|s| s.0).min().unwrap();
    let end = samples.iter().map(|s| s.0).max().unwrap();
    let len = ((end - start) / tau + 1) as usize;
    let mut bins: Vec<Vec<(u32, usize, f64)>> = vec![Vec::new(); len];
    for (i, &(t, v)) in samples.iter().enumerate() {
        bins[((t - start) / tau) as usize].push((t, i, v as f64));
    }
    let mut out = Vec::new();
    let mut held: Option<f64> = None;
    for bin in bins {
        let v = match agg {
            Aggregation::Count => Some(bin.len() as f64),
            _ if bin.is_empty() => None,
            Aggregation::Last => bin.iter().max_by_key(|b| (b.0, b.1)).map(|b| b.2),
            Aggregation::Mean => Some(bin.iter().map(|b| b.2).sum::<f64>() / bin.len() as f64),
            Aggregation::Mode => {
                let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                for b in &bin {
                    *counts.entry(b.2 as i64).or_default() += 1;
                }
                let top = *counts.values().max().unwrap();
                counts.iter().find(|(_, &c)| c == top).map(|(&k, _)| k as f64)
            }
        };
        let filled = match (v, gap) {
            (Some(x), _) => {
                held = Some(x);
                x
            }
            (None, GapPolicy::Zero) => 0.0,
            (None, GapPolicy::HoldLast) => held.unwrap_or(0.0),
        };
        out.push(filled);
    }
    out
}

fn to_samples(raw: &[(u32, i32)]) -> Vec<ParamSample> {
    raw.iter()
        .map(|&(t, v)| ParamSample {
            time: 1000.0 + t as f64 / 1024.0,
            param: ParamId::IP_LENGTH,
            value: v as f64,
        })
        .collect()
}

proptest! {
    #[test]
    fn binning_matches_oracle(
        raw in prop::collection::vec((0u32..200_000, -5i32..5), 1..120),
        tau_units in 1u32..400,
        agg in prop::sample::select(vec![Aggregation::Last, Aggregation::Mean, Aggregation::Mode, Aggregation::Count]),
        gap in prop::sample::select(vec![GapPolicy::HoldLast, GapPolicy::Zero]),
    ) {
        let tau = tau_units as f64 / 64.0;
        let s = bin_series(&to_samples(&raw), tau, agg, gap).unwrap();
        let want = oracle(&raw, tau_units, agg, gap);
        prop_assert_eq!(s.values.len(), want.len());
        for (a, b) in s.values.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", s.values, want);
        }
        let start = raw.iter().map(|r| r.0).min().unwrap();
        prop_assert_eq!(s.start_time, 1000.0 + start as f64 / 1024.0);
    }

    #[test]
    fn boxcar_matches_direct_sums(values in prop::collection::vec(-1e3f64..1e3, 1..200), w in 1usize..30) {
        let ts = TimeSeries::from_values(values.clone(), 2.0);
        match boxcar_average(&ts, w) {
            Ok(b) => {
                prop_assert_eq!(b.len(), values.len() - w + 1);
                for (n, v) in b.values.iter().enumerate() {
                    let direct: f64 = values[n..n + w].iter().sum::<f64>() / w as f64;
                    prop_assert!((v - direct).abs() < 1e-9);
                }
                prop_assert_eq!(b.start_time, ts.start_time + (w - 1) as f64);
            }
            Err(_) => prop_assert!(w > values.len()),
        }
    }
}

#[test]
fn count_mode_reports_empty_bins_as_zero() {
    let raw = [(0, 1), (10, 1), (5000, 1)];
    let s = bin_series(&to_samples(&raw), 1.0, Aggregation::Count, GapPolicy::HoldLast).unwrap();
    assert_eq!(s.values.len(), 5);
    assert_eq!(s.values, vec![2.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn leading_value_fills_forward() {
    let raw = [(0, 3), (3000, 4)];
    let s = bin_series(&to_samples(&raw), 1.0, Aggregation::Last, GapPolicy::HoldLast).unwrap();
    assert_eq!(s.values, vec![3.0, 3.0, 4.0]);
}
