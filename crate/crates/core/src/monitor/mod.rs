//! Multi-window pipeline over a replayed capture.
//!
//! One stage decodes each record once and extracts its parameter samples.
//! Batches fan out to a rule worker and to one worker per raw window; each
//! worker owns its state and sees packets in capture order. Windows fed from
//! another window's output are computed once their source is done.

mod config;
mod replay;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;

use serde::Serialize;

pub use config::{FnnSettings, ModelRef, MonitorConfig, WindowSpec};
pub use replay::{replay, InvalidSpeed, Replay, Speed};

use crate::capture::{decode_packet, CaptureError, DecodedPacket, PcapReader};
use crate::dynamics::{
    default_delay, embed, estimate_dimension, fnn_curve, novelty_score, project, DynamicsError, FnnCurve,
    OccupancyModel,
};
use crate::params::{extract_params, ParamId, ParamSample};
use crate::rules::{Alert, OrderingError, RuleEngine, SignatureRule};
use crate::series::{bin_series_between, boxcar_average, write_series_csv, Aggregation, TimeSeries};

const BATCH: usize = 2048;
const QUEUE_DEPTH: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error("config: {0}")]
    Config(String),
    #[error("capture error at packet {index}: {source}")]
    Capture { index: usize, source: CaptureError },
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("model {path}: {source}")]
    Model { path: PathBuf, source: DynamicsError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub packets_in: u64,
    /// Captured bytes across all records.
    pub bytes_in: u64,
    pub decoded: u64,
    pub decode_errors: u64,
    pub non_ip_skipped: u64,
    pub samples: u64,
    pub alerts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub len: usize,
    pub start_time: f64,
    pub tau: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesSummary {
    fn of(s: &TimeSeries) -> Self {
        SeriesSummary {
            len: s.len(),
            start_time: s.start_time,
            tau: s.tau,
            mean: s.mean(),
            std_dev: s.std_dev(),
            min: s.values.iter().copied().fold(f64::INFINITY, f64::min),
            max: s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FnnReport {
    pub delay: usize,
    pub threshold: f64,
    pub dimension: Option<usize>,
    pub curve: FnnCurve,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoveltyPoint {
    pub time: f64,
    pub score: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoveltyReport {
    pub model: PathBuf,
    pub max_score: u32,
    pub points: Vec<NoveltyPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamReport {
    pub param_id: u8,
    pub parameter: String,
    /// Raw samples received; zero for windows fed by another window.
    pub samples: usize,
    pub series: Option<SeriesSummary>,
    pub averaged: Option<SeriesSummary>,
    pub fnn: Option<FnnReport>,
    pub novelty: Option<NoveltyReport>,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub series_data: Option<TimeSeries>,
    #[serde(skip)]
    pub averaged_data: Option<TimeSeries>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub name: String,
    pub tau: f64,
    pub source: Option<String>,
    pub aggregation: Aggregation,
    pub boxcar: usize,
    pub params: Vec<ParamReport>,
}

impl WindowReport {
    pub fn param(&self, id: ParamId) -> Option<&ParamReport> {
        self.params.iter().find(|p| p.param_id == id.get())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub counters: Counters,
    pub start_time: Option<f64>,
    pub end_time: Option<f64>,
    pub rules: usize,
    pub windows: Vec<WindowReport>,
    pub alerts: Vec<Alert>,
}

impl MonitorReport {
    pub fn window(&self, name: &str) -> Option<&WindowReport> {
        self.windows.iter().find(|w| w.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_alerts<W: Write>(&self, mut w: W) -> io::Result<()> {
        for a in &self.alerts {
            writeln!(w, "{}", a.to_line())?;
        }
        Ok(())
    }

    /// Writes `report.json`, `alerts.tsv` and per-window CSV files.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json() + "\n")?;
        let mut alerts = Vec::new();
        self.write_alerts(&mut alerts)?;
        fs::write(dir.join("alerts.tsv"), alerts)?;
        let csv_err = |e: csv::Error| io::Error::other(e);
        for w in &self.windows {
            let stem = file_stem(&w.name);
            for p in &w.params {
                let base = format!("{stem}_p{}", p.param_id);
                if let Some(s) = &p.series_data {
                    write_series_csv(fs::File::create(dir.join(format!("{base}_series.csv")))?, s).map_err(csv_err)?;
                }
                if let Some(s) = &p.averaged_data {
                    write_series_csv(fs::File::create(dir.join(format!("{base}_averaged.csv")))?, s)
                        .map_err(csv_err)?;
                }
                if let Some(f) = &p.fnn {
                    f.curve
                        .write_csv(fs::File::create(dir.join(format!("{base}_fnn.csv")))?)
                        .map_err(csv_err)?;
                }
                if let Some(n) = &p.novelty {
                    let mut out = String::from("time,score\n");
                    for pt in &n.points {
                        out.push_str(&format!("{:.6},{}\n", pt.time, pt.score));
                    }
                    fs::write(dir.join(format!("{base}_novelty.csv")), out)?;
                }
            }
        }
        Ok(())
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

struct Batch {
    packets: Vec<DecodedPacket>,
    samples: Vec<ParamSample>,
}

enum Msg {
    Batch(Arc<Batch>),
    /// Sample time range of the whole capture, if any samples arrived.
    End(Option<(f64, f64)>),
}

/// Everything a window needs besides its input series.
struct Analysis<'a> {
    spec: &'a WindowSpec,
    model: Option<&'a (PathBuf, OccupancyModel)>,
    /// Parameter scored against the model.
    scored: Option<u8>,
}

impl Analysis<'_> {
    fn finish(&self, param: ParamId, samples: usize, series: Result<TimeSeries, String>) -> ParamReport {
        let mut rep = ParamReport {
            param_id: param.get(),
            parameter: param.name().to_string(),
            samples,
            series: None,
            averaged: None,
            fnn: None,
            novelty: None,
            errors: Vec::new(),
            series_data: None,
            averaged_data: None,
        };
        let series = match series {
            Ok(s) => s,
            Err(e) => {
                rep.errors.push(e);
                return rep;
            }
        };
        rep.series = Some(SeriesSummary::of(&series));
        let averaged = if self.spec.boxcar > 1 {
            boxcar_average(&series, self.spec.boxcar).map_err(|e| format!("boxcar: {e}"))
        } else {
            Ok(series.clone())
        };
        rep.series_data = Some(series);
        let averaged = match averaged {
            Ok(a) => a,
            Err(e) => {
                rep.errors.push(e);
                return rep;
            }
        };
        rep.averaged = Some(SeriesSummary::of(&averaged));

        if let Some(f) = &self.spec.fnn {
            let delay = f.delay.unwrap_or_else(|| default_delay(&averaged.values));
            match fnn_curve(&averaged, f.d_max, &f.params(delay)) {
                Ok(curve) => {
                    rep.errors.extend(curve.warnings.iter().map(|w| format!("fnn: {w}")));
                    rep.fnn = Some(FnnReport {
                        delay,
                        threshold: f.threshold,
                        dimension: estimate_dimension(&curve, f.threshold),
                        curve,
                    });
                }
                Err(e) => rep.errors.push(format!("fnn: {e}")),
            }
        }

        if let Some((path, model)) = self.model.filter(|_| self.scored == Some(param.get())) {
            match novelty(model, &averaged) {
                Ok(points) => {
                    rep.novelty = Some(NoveltyReport {
                        model: path.clone(),
                        max_score: points.iter().map(|p| p.score).max().unwrap_or(0),
                        points,
                    })
                }
                Err(e) => rep.errors.push(format!("novelty: {e}")),
            }
        }
        rep.averaged_data = Some(averaged);
        rep
    }
}

fn novelty(model: &OccupancyModel, series: &TimeSeries) -> Result<Vec<NoveltyPoint>, DynamicsError> {
    let vectors = embed(series, model.embed_dim, model.delay)?;
    let span = (model.embed_dim - 1) * model.delay;
    project(&vectors, &model.axes)?
        .iter()
        .enumerate()
        .map(|(n, p)| {
            Ok(NoveltyPoint {
                time: series.time_at(n + span),
                score: novelty_score(model, p)?,
            })
        })
        .collect()
}

fn raw_window_worker(analysis: Analysis<'_>, rx: Receiver<Msg>) -> WindowReport {
    let spec = analysis.spec;
    let ids = spec.param_ids();
    let mut by_param: Vec<Vec<ParamSample>> = vec![Vec::new(); ids.len()];
    let mut span = None;
    for msg in rx {
        match msg {
            Msg::Batch(b) => {
                for s in &b.samples {
                    if let Some(i) = ids.iter().position(|&p| p == s.param) {
                        by_param[i].push(*s);
                    }
                }
            }
            Msg::End(s) => span = s,
        }
    }
    let params = ids
        .iter()
        .zip(&by_param)
        .map(|(&id, samples)| {
            let series = match span {
                Some((start, end)) => bin_series_between(samples, start, Some(end), spec.tau, spec.aggregation, spec.gap)
                    .map_err(|e| format!("binning: {e}")),
                None => Err("no samples in capture".to_string()),
            };
            analysis.finish(id, samples.len(), series)
        })
        .collect();
    WindowReport {
        name: spec.name.clone(),
        tau: spec.tau,
        source: None,
        aggregation: spec.aggregation,
        boxcar: spec.boxcar,
        params,
    }
}

fn derived_window(analysis: Analysis<'_>, ids: &[ParamId], source: &WindowReport) -> WindowReport {
    let spec = analysis.spec;
    let factor = (spec.tau / source.tau).round() as usize;
    let params = ids
        .iter()
        .map(|&id| {
            let input = source
                .param(id)
                .and_then(|p| p.averaged_data.as_ref())
                .map(|a| {
                    let mut s = a.downsample(factor);
                    s.tau = spec.tau;
                    s
                })
                .ok_or_else(|| format!("source window '{}' has no averaged series", source.name));
            analysis.finish(id, 0, input)
        })
        .collect();
    WindowReport {
        name: spec.name.clone(),
        tau: spec.tau,
        source: Some(source.name.clone()),
        aggregation: spec.aggregation,
        boxcar: spec.boxcar,
        params,
    }
}

fn scored_param(config: &MonitorConfig, spec: &WindowSpec) -> Option<u8> {
    spec.model
        .as_ref()
        .and_then(|m| m.param)
        .or_else(|| config.params_of(spec).first().copied())
}

/// Loads occupancy models named by the config, keyed by window index.
fn load_models(config: &MonitorConfig) -> Result<Vec<Option<(PathBuf, OccupancyModel)>>, MonitorError> {
    config
        .windows
        .iter()
        .map(|w| {
            w.model
                .as_ref()
                .map(|m| {
                    let bytes = fs::read(&m.path)?;
                    OccupancyModel::read_binary(bytes.as_slice())
                        .map(|model| (m.path.clone(), model))
                        .map_err(|source| MonitorError::Model {
                            path: m.path.clone(),
                            source,
                        })
                })
                .transpose()
        })
        .collect()
}

/// Runs rules and every configured window over a pcap stream.
pub fn run_monitor<R: Read>(
    source: R,
    rules: Vec<SignatureRule>,
    config: &MonitorConfig,
    speed: Speed,
) -> Result<MonitorReport, MonitorError> {
    config.validate()?;
    let models = load_models(config)?;
    let reader = PcapReader::new(source).map_err(|source| MonitorError::Capture { index: 0, source })?;
    let link_type = reader.link_type();
    let mut engine = RuleEngine::new(rules);
    let rule_count = engine.rule_count();

    std::thread::scope(|scope| {
        let (rule_tx, rule_rx) = sync_channel::<Arc<Batch>>(QUEUE_DEPTH);
        let rules_worker = scope.spawn(move || {
            let mut alerts = Vec::new();
            for batch in rule_rx {
                for p in &batch.packets {
                    alerts.extend(engine.process(p)?);
                }
            }
            Ok::<_, OrderingError>(alerts)
        });

        let mut window_txs = Vec::new();
        let mut window_workers = Vec::new();
        for (i, spec) in config.windows.iter().enumerate() {
            if spec.source.is_some() {
                continue;
            }
            let (tx, rx) = sync_channel::<Msg>(QUEUE_DEPTH);
            let analysis = Analysis {
                spec,
                model: models[i].as_ref(),
                scored: scored_param(config, spec),
            };
            window_txs.push(tx);
            window_workers.push((i, scope.spawn(move || raw_window_worker(analysis, rx))));
        }

        let mut counters = Counters::default();
        let mut span: Option<(f64, f64)> = None;
        let mut batch = Batch {
            packets: Vec::with_capacity(BATCH),
            samples: Vec::new(),
        };
        let send = |b: Batch| {
            let b = Arc::new(b);
            // A worker that stopped early reports its own error on join.
            let _ = rule_tx.send(Arc::clone(&b));
            for tx in &window_txs {
                let _ = tx.send(Msg::Batch(Arc::clone(&b)));
            }
        };
        let mut capture_error = None;
        for (index, rec) in replay(reader, speed).enumerate() {
            let rec = match rec {
                Ok(r) => r,
                Err(source) => {
                    capture_error = Some(MonitorError::Capture { index, source });
                    break;
                }
            };
            counters.packets_in += 1;
            counters.bytes_in += rec.data.len() as u64;
            match decode_packet(&rec, link_type) {
                Err(_) => counters.decode_errors += 1,
                Ok(p) if p.ip.is_none() => counters.non_ip_skipped += 1,
                Ok(p) => {
                    counters.decoded += 1;
                    let t = p.timestamp.as_secs_f64();
                    span = Some(span.map_or((t, t), |(a, b)| (a.min(t), b.max(t))));
                    batch.samples.extend(extract_params(&p));
                    batch.packets.push(p);
                    if batch.packets.len() == BATCH {
                        counters.samples += batch.samples.len() as u64;
                        send(std::mem::replace(
                            &mut batch,
                            Batch {
                                packets: Vec::with_capacity(BATCH),
                                samples: Vec::new(),
                            },
                        ));
                    }
                }
            }
        }
        counters.samples += batch.samples.len() as u64;
        if !batch.packets.is_empty() {
            send(batch);
        }
        drop(rule_tx);
        for tx in &window_txs {
            let _ = tx.send(Msg::End(span));
        }
        drop(window_txs);

        let alerts = rules_worker.join().expect("rule worker panicked");
        let mut reports: Vec<Option<WindowReport>> = vec![None; config.windows.len()];
        for (i, h) in window_workers {
            reports[i] = Some(h.join().expect("window worker panicked"));
        }
        if let Some(e) = capture_error {
            return Err(e);
        }
        let mut alerts = alerts?;
        alerts.sort_by(Alert::sink_order);
        counters.alerts = alerts.len() as u64;

        for (i, spec) in config.windows.iter().enumerate() {
            let Some(src_name) = &spec.source else { continue };
            let src = config.windows.iter().position(|w| &w.name == src_name).expect("validated");
            let ids: Vec<ParamId> = config.params_of(spec).iter().filter_map(|&p| ParamId::new(p)).collect();
            let analysis = Analysis {
                spec,
                model: models[i].as_ref(),
                scored: scored_param(config, spec),
            };
            let report = derived_window(analysis, &ids, reports[src].as_ref().expect("earlier window"));
            reports[i] = Some(report);
        }

        Ok(MonitorReport {
            counters,
            start_time: span.map(|s| s.0),
            end_time: span.map(|s| s.1),
            rules: rule_count,
            windows: reports.into_iter().map(|r| r.expect("every window ran")).collect(),
            alerts,
        })
    })
}
