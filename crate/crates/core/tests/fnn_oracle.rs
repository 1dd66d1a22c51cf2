use flowdim_core::dynamics::{estimate_dimension, fnn_curve, fnn_fraction, fnn_verdicts, FnnParams, NeighborSearch};
use flowdim_core::synth::{lorenz_x, sine, uniform_noise};
use flowdim_core::TimeSeries;
use proptest::prelude::*;

/// Straight transcription of the two false-neighbor tests, O(N^2).
fn oracle(x: &[f64], d: usize, t: usize, r_tol: f64, a_tol: f64, theiler: usize) -> Vec<(usize, usize, bool)> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    let count = x.len() - d * t;
    let mut out = Vec::new();
    for n in 0..count {
        let mut best: Option<(f64, usize)> = None;
        for m in 0..count {
            if n.abs_diff(m) <= theiler {
                continue;
            }
            let r2: f64 = (0..d).map(|k| (x[n + k * t] - x[m + k * t]).powi(2)).sum();
            if best.is_none_or(|(b, _)| r2 < b) {
                best = Some((r2, m));
            }
        }
        if let Some((r2, m)) = best {
            let r = r2.sqrt();
            let extra = (x[n + d * t] - x[m + d * t]).abs();
            let first = if r > 0.0 { extra / r > r_tol } else { extra > 0.0 };
            let second = (r2 + extra * extra).sqrt() / sd > a_tol;
            out.push((n, m, first || second));
        }
    }
    out
}

fn compare(x: &[f64], d: usize, t: usize, search: NeighborSearch) {
    let params = FnnParams {
        search,
        ..FnnParams::with_delay(t)
    };
    let got: Vec<(usize, usize, bool)> = fnn_verdicts(x, d, &params)
        .unwrap()
        .into_iter()
        .map(|v| (v.index, v.neighbor, v.false_neighbor))
        .collect();
    let want = oracle(x, d, t, 15.0, 2.0, t);
    assert_eq!(got, want, "d={d} T={t} {search:?}");
    let frac = fnn_fraction(&TimeSeries::from_values(x.to_vec(), 1.0), d, &params).unwrap();
    let oracle_frac = want.iter().filter(|v| v.2).count() as f64 / want.len() as f64;
    assert!((frac - oracle_frac).abs() < 1e-12);
}

#[test]
fn verdicts_match_oracle_on_noise() {
    let x = uniform_noise(600, 9);
    for d in 1..=4 {
        for t in [1, 3] {
            compare(&x, d, t, NeighborSearch::BruteForce);
            compare(&x, d, t, NeighborSearch::KdTree);
        }
    }
}

#[test]
fn verdicts_match_oracle_on_lorenz() {
    let x = lorenz_x(1500);
    for d in 1..=4 {
        compare(&x, d, 2, NeighborSearch::BruteForce);
        compare(&x, d, 2, NeighborSearch::KdTree);
    }
}

#[test]
fn kdtree_agrees_above_auto_cutoff() {
    let x = lorenz_x(2600);
    compare(&x, 3, 4, NeighborSearch::Auto);
}

#[test]
fn sine_unfolds_at_two() {
    let period = 40.0 * std::f64::consts::SQRT_2;
    let s = TimeSeries::from_values(sine(1000, period, 1.0), 1.0);
    let quarter = (period / 4.0).round() as usize;
    let curve = fnn_curve(&s, 4, &FnnParams::with_delay(quarter)).unwrap();
    assert!(curve.fraction_at(2).unwrap() < 0.05, "{:?}", curve.fractions());
}

// The d=1 fraction of a sine depends on which branch the nearest sample
// lands on and swings between roughly 0.1 and 1.0 with N; checked at the
// length used for dimension recovery.
#[test]
fn smooth_signals_fold_at_one() {
    let period = 40.0 * std::f64::consts::SQRT_2;
    let s = TimeSeries::from_values(sine(10_000, period, 1.0), 1.0);
    let curve = fnn_curve(&s, 2, &FnnParams::with_delay(14)).unwrap();
    assert!(curve.fraction_at(1).unwrap() > 0.3, "{:?}", curve.fractions());
    let l = TimeSeries::from_values(lorenz_x(10_000), 0.1);
    let curve = fnn_curve(&l, 1, &FnnParams::with_delay(6)).unwrap();
    assert!(curve.fraction_at(1).unwrap() > 0.3, "{:?}", curve.fractions());
}

#[test]
fn noise_stays_high_at_five() {
    let s = TimeSeries::from_values(uniform_noise(1000, 42), 1.0);
    let curve = fnn_curve(&s, 8, &FnnParams::with_delay(1)).unwrap();
    assert!(curve.fraction_at(5).unwrap() > 0.2, "{:?}", curve.fractions());
    assert_eq!(estimate_dimension(&curve, 0.05), None);
}

#[test]
fn lorenz_is_three_at_short_delay() {
    let s = TimeSeries::from_values(lorenz_x(5000), 0.1);
    let curve = fnn_curve(&s, 6, &FnnParams::with_delay(2)).unwrap();
    assert_eq!(estimate_dimension(&curve, 0.05), Some(3), "{:?}", curve.fractions());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_leaves_verdicts_unchanged(seed in any::<u64>(), exp in -3i32..4, negate in any::<bool>(), d in 1usize..4) {
        let x = uniform_noise(300, seed);
        let a = if negate { -(2f64.powi(exp)) } else { 2f64.powi(exp) };
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let p = FnnParams::with_delay(1);
        let fx: Vec<bool> = fnn_verdicts(&x, d, &p).unwrap().iter().map(|v| v.false_neighbor).collect();
        let fy: Vec<bool> = fnn_verdicts(&y, d, &p).unwrap().iter().map(|v| v.false_neighbor).collect();
        prop_assert_eq!(fx, fy);
    }

    #[test]
    fn shift_moves_fraction_by_rounding_only(seed in any::<u64>(), b in -1e3f64..1e3) {
        let x = uniform_noise(400, seed);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + b).collect();
        let p = FnnParams::with_delay(1);
        let fx = fnn_fraction(&TimeSeries::from_values(x, 1.0), 3, &p).unwrap();
        let fy = fnn_fraction(&TimeSeries::from_values(y, 1.0), 3, &p).unwrap();
        prop_assert!((fx - fy).abs() <= 0.01, "{} vs {}", fx, fy);
    }
}
