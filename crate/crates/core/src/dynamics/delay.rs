/// Normalized autocorrelation for lags `0..=max_lag` (biased estimator, so
/// lag 0 is exactly 1). Returns an empty vector for zero-variance input.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|c| c * c).sum();
    if var == 0.0 {
        return Vec::new();
    }
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / var
        })
        .collect()
}

/// First lag `l >= 1` where the autocorrelation has a local minimum.
pub fn first_acf_minimum(values: &[f64], max_lag: usize) -> Option<usize> {
    let acf = autocorrelation(values, max_lag + 1);
    (1..acf.len().saturating_sub(1)).find(|&l| acf[l] < acf[l - 1] && acf[l] <= acf[l + 1])
}

/// Delay used when none is configured: the first autocorrelation minimum
/// within a quarter of the series, falling back to 1.
pub fn default_delay(values: &[f64]) -> usize {
    first_acf_minimum(values, (values.len() / 4).max(2)).unwrap_or(1)
}
