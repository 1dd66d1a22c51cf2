use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::dynamics::{FnnParams, NeighborSearch};
use crate::params::ParamId;
use crate::series::{Aggregation, GapPolicy};

/// FNN analysis applied to a window's averaged series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnnSettings {
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    /// Embedding delay in samples; the first autocorrelation minimum when unset.
    pub delay: Option<usize>,
    #[serde(default = "default_r_tol")]
    pub r_tol: f64,
    #[serde(default = "default_a_tol")]
    pub a_tol: f64,
    pub theiler: Option<usize>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_d_max() -> usize {
    8
}
fn default_r_tol() -> f64 {
    15.0
}
fn default_a_tol() -> f64 {
    2.0
}
fn default_threshold() -> f64 {
    0.05
}

impl Default for FnnSettings {
    fn default() -> Self {
        FnnSettings {
            d_max: default_d_max(),
            delay: None,
            r_tol: default_r_tol(),
            a_tol: default_a_tol(),
            theiler: None,
            threshold: default_threshold(),
        }
    }
}

impl FnnSettings {
    pub fn params(&self, delay: usize) -> FnnParams {
        FnnParams {
            delay,
            r_tol: self.r_tol,
            a_tol: self.a_tol,
            theiler: self.theiler,
            search: NeighborSearch::Auto,
        }
    }
}

/// Occupancy baseline used to score a window's averaged series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    pub path: PathBuf,
    /// Parameter whose series is scored; the window's first parameter if unset.
    pub param: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub name: String,
    /// Sampling interval in seconds.
    pub tau: f64,
    /// Parameter ids to track. A derived window inherits its source's when empty.
    #[serde(default)]
    pub params: Vec<u8>,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub gap: GapPolicy,
    /// Boxcar width in samples; 1 leaves the series as binned.
    #[serde(default = "default_boxcar")]
    pub boxcar: usize,
    /// Consume the averaged output of an earlier window instead of raw samples.
    pub source: Option<String>,
    pub fnn: Option<FnnSettings>,
    pub model: Option<ModelRef>,
}

fn default_boxcar() -> usize {
    1
}

impl WindowSpec {
    pub fn new(name: &str, tau: f64, params: &[u8]) -> Self {
        WindowSpec {
            name: name.to_string(),
            tau,
            params: params.to_vec(),
            aggregation: Aggregation::default(),
            gap: GapPolicy::default(),
            boxcar: 1,
            source: None,
            fnn: None,
            model: None,
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.params.iter().filter_map(|&p| ParamId::new(p)).collect()
    }
}

/// Window set for the monitor, read from TOML:
///
/// ```toml
/// [[window]]
/// name = "short"
/// tau = 5.0
/// params = [18, 3]
/// aggregation = "mean"
/// boxcar = 12
///
/// [[window]]
/// name = "long"
/// tau = 60.0
/// source = "short"
/// fnn = { d_max = 6 }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(rename = "window")]
    pub windows: Vec<WindowSpec>,
}

impl MonitorConfig {
    pub fn from_toml(text: &str) -> Result<Self, MonitorError> {
        let cfg: MonitorConfig = toml::from_str(text).map_err(|e| MonitorError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), MonitorError> {
        let bad = |m: String| Err(MonitorError::Config(m));
        if self.windows.is_empty() {
            return bad("at least one [[window]] is required".into());
        }
        let mut seen = HashSet::new();
        let mut prev_tau = 0.0;
        for (i, w) in self.windows.iter().enumerate() {
            if !(w.tau > 0.0 && w.tau.is_finite()) {
                return bad(format!("window '{}': tau must be positive", w.name));
            }
            if w.tau <= prev_tau {
                return bad(format!(
                    "window '{}': scales must be strictly increasing ({} after {})",
                    w.name, w.tau, prev_tau
                ));
            }
            prev_tau = w.tau;
            if !seen.insert(w.name.as_str()) {
                return bad(format!("duplicate window name '{}'", w.name));
            }
            if w.boxcar == 0 {
                return bad(format!("window '{}': boxcar must be at least 1", w.name));
            }
            if let Some(p) = w.params.iter().find(|&&p| ParamId::new(p).is_none()) {
                return bad(format!("window '{}': unknown parameter id {p}", w.name));
            }
            match &w.source {
                None if w.params.is_empty() => {
                    return bad(format!("window '{}': params must not be empty", w.name));
                }
                None => {}
                Some(src) => {
                    let Some(s) = self.windows[..i].iter().find(|s| &s.name == src) else {
                        return bad(format!("window '{}': source '{src}' is not an earlier window", w.name));
                    };
                    let ratio = w.tau / s.tau;
                    if (ratio - ratio.round()).abs() > 1e-9 {
                        return bad(format!(
                            "window '{}': tau {} is not a multiple of source tau {}",
                            w.name, w.tau, s.tau
                        ));
                    }
                    if let Some(p) = w.params.iter().find(|p| !self.params_of(s).contains(p)) {
                        return bad(format!("window '{}': parameter {p} is not tracked by '{src}'", w.name));
                    }
                }
            }
            if let Some(f) = &w.fnn {
                if f.d_max == 0 || f.delay == Some(0) {
                    return bad(format!("window '{}': fnn d_max and delay must be positive", w.name));
                }
            }
            if let Some(m) = &w.model {
                if let Some(p) = m.param {
                    if !self.params_of(w).contains(&p) {
                        return bad(format!("window '{}': model parameter {p} is not tracked", w.name));
                    }
                }
            }
        }
        Ok(())
    }

    /// Effective parameter ids of a window, following `source` links.
    pub fn params_of<'a>(&'a self, w: &'a WindowSpec) -> &'a [u8] {
        if !w.params.is_empty() {
            return &w.params;
        }
        match &w.source {
            Some(src) => self
                .windows
                .iter()
                .find(|s| &s.name == src)
                .map_or(&[][..], |s| self.params_of(s)),
            None => &w.params,
        }
    }
}
