use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use flowdim_core::capture::{decode_packet, PcapReader};
use flowdim_core::dynamics::{
    default_delay, embed, estimate_dimension, fit_occupancy, fnn_curve, novelty_score, project, read_points_csv,
    write_points_csv, DelayVectors, FnnParams, NeighborSearch, OccupancyModel,
};
use flowdim_core::monitor::{run_monitor, MonitorConfig, Speed};
use flowdim_core::params::{extract_params, read_samples_csv, write_samples_csv, ParamId};
use flowdim_core::rules::{
    ack_scan_rule, builtin_catalog, param_usage_histogram, parse_rules, RuleEngine, SignatureRule,
};
use flowdim_core::series::{
    bin_series, boxcar_average, read_series_csv, write_series_csv, Aggregation, GapPolicy, DEFAULT_TAU,
};
use flowdim_core::synth::{self, traffic};

#[derive(Parser)]
#[command(name = "flowdim", version, about = "Header-parameter time series, FNN dimension estimates and signature rules for pcap files")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// pcap -> parameter samples CSV (time,param_id,value)
    Extract {
        pcap: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Parameter samples -> uniformly sampled series CSV
    Bin {
        samples: PathBuf,
        #[arg(long)]
        param: u8,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value = "last")]
        agg: Aggregation,
        #[arg(long, default_value = "hold_last")]
        gap: GapPolicy,
        /// Apply a boxcar average of this many samples.
        #[arg(long)]
        boxcar: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Series CSV -> FNN curve CSV; prints the dimension estimate
    Fnn {
        series: PathBuf,
        #[arg(long, default_value_t = 8)]
        d_max: usize,
        /// Delay in samples; first autocorrelation minimum when omitted.
        #[arg(long)]
        delay: Option<usize>,
        #[arg(long, default_value_t = 15.0)]
        r_tol: f64,
        #[arg(long, default_value_t = 2.0)]
        a_tol: f64,
        #[arg(long)]
        theiler: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = Search::Auto)]
        search: Search,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Series CSV -> delay vectors CSV
    Embed {
        series: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        delay: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Delay vectors CSV -> 2-D or 3-D point CSV
    Project {
        vectors: PathBuf,
        /// Comma-separated coordinate indices, e.g. 0,2.
        #[arg(long, value_delimiter = ',', required = true)]
        axes: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Occupancy baseline of normal behavior
    Baseline {
        #[command(subcommand)]
        cmd: BaselineCmd,
    },
    /// pcap + rules -> alert lines
    Scan {
        pcap: PathBuf,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// pcap + rules + window config -> report directory
    Monitor {
        pcap: PathBuf,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Replay speed factor, or "unlimited".
        #[arg(long, default_value = "unlimited")]
        speed: Speed,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// Builtin rule catalog
    Rules {
        #[command(subcommand)]
        cmd: RulesCmd,
    },
    /// Synthetic series and captures
    Synth {
        #[command(subcommand)]
        cmd: SynthCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Search {
    Auto,
    Kdtree,
    Brute,
}

#[derive(Subcommand)]
enum BaselineCmd {
    /// Fit an occupancy grid on a series of normal traffic
    Fit {
        series: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        delay: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        axes: Vec<usize>,
        /// Cells per axis; one value applies to every axis.
        #[arg(long, value_delimiter = ',', default_value = "32")]
        resolution: Vec<usize>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also dump occupied cells as CSV.
        #[arg(long)]
        cells: Option<PathBuf>,
    },
    /// Score a series against a fitted model
    Score {
        model: PathBuf,
        series: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RulesCmd {
    /// Print the builtin catalog in rule syntax
    List,
    /// Count rules referencing each catalog parameter
    Histogram {
        /// Rule file; the builtin catalog when omitted.
        rules: Option<PathBuf>,
    },
    /// Parse a rule file and report problems
    Check { rules: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesKind {
    Sine,
    Noise,
    Lorenz,
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Series CSV of a test signal
    Series {
        #[arg(value_enum)]
        kind: SeriesKind,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 40.0 * std::f64::consts::SQRT_2)]
        period: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Benign LAN capture, optionally with one attack injected
    Capture {
        #[arg(long)]
        attack: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Capture whose rate and protocol mix follow the Lorenz system
    LorenzTraffic {
        #[arg(long, default_value_t = 1860)]
        seconds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct RuleArgs {
    /// Rule files; the builtin catalog plus the ACK-scan rule when omitted.
    #[arg(short, long)]
    rules: Vec<PathBuf>,
    /// Add the builtin catalog to the given rule files.
    #[arg(long)]
    builtin: bool,
}

impl RuleArgs {
    fn load(&self) -> Result<Vec<SignatureRule>> {
        if self.rules.is_empty() {
            let mut r = builtin_catalog();
            r.push(ack_scan_rule());
            return Ok(r);
        }
        let mut out = if self.builtin { builtin_catalog() } else { Vec::new() };
        for path in &self.rules {
            out.extend(load_rules(path)?);
        }
        Ok(out)
    }
}

fn load_rules(path: &Path) -> Result<Vec<SignatureRule>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_rules(&text).with_context(|| format!("{}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_series(path: &Path) -> Result<flowdim_core::TimeSeries> {
    read_series_csv(open(path)?, DEFAULT_TAU).with_context(|| format!("reading series {}", path.display()))
}

/// Alerts fired (exit 1) or not (exit 0).
enum Outcome {
    Clean,
    Alerts,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.cmd {
        Cmd::Extract { pcap, output } => {
            let mut reader = PcapReader::new(open(&pcap)?)?;
            let link = reader.link_type();
            let mut samples = Vec::new();
            let mut errors = 0usize;
            while let Some(rec) = reader.next_record()? {
                match decode_packet(&rec, link) {
                    Ok(p) => samples.extend(extract_params(&p)),
                    Err(_) => errors += 1,
                }
            }
            write_samples_csv(sink(&output)?, &samples)?;
            if errors > 0 {
                eprintln!("{errors} packets could not be decoded");
            }
        }
        Cmd::Bin {
            samples,
            param,
            tau,
            agg,
            gap,
            boxcar,
            output,
        } => {
            let Some(id) = ParamId::new(param) else {
                bail!("unknown parameter id {param}");
            };
            let all = read_samples_csv(open(&samples)?)?;
            let mine: Vec<_> = all.into_iter().filter(|s| s.param == id).collect();
            let mut series = bin_series(&mine, tau, agg, gap)?;
            if series.leading_gap {
                eprintln!("warning: opening bins had no sample and were zero-filled");
            }
            if let Some(w) = boxcar {
                series = boxcar_average(&series, w)?;
            }
            write_series_csv(sink(&output)?, &series)?;
        }
        Cmd::Fnn {
            series,
            d_max,
            delay,
            r_tol,
            a_tol,
            theiler,
            threshold,
            search,
            output,
        } => {
            let s = read_series(&series)?;
            let delay = delay.unwrap_or_else(|| default_delay(&s.values));
            let params = FnnParams {
                delay,
                r_tol,
                a_tol,
                theiler,
                search: match search {
                    Search::Auto => NeighborSearch::Auto,
                    Search::Kdtree => NeighborSearch::KdTree,
                    Search::Brute => NeighborSearch::BruteForce,
                },
            };
            let curve = fnn_curve(&s, d_max, &params)?;
            for w in &curve.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(out) = &output {
                curve.write_csv(File::create(out).with_context(|| format!("creating {}", out.display()))?)?;
            } else {
                curve.write_csv(io::stderr())?;
            }
            match estimate_dimension(&curve, threshold) {
                Some(d) => println!("delay {delay}: dimension {d}"),
                None => println!("delay {delay}: no dimension up to {d_max} reaches fraction {threshold}"),
            }
        }
        Cmd::Embed {
            series,
            dim,
            delay,
            output,
        } => {
            let v = embed(&read_series(&series)?, dim, delay)?;
            write_points_csv(sink(&output)?, &v.to_rows())?;
        }
        Cmd::Project { vectors, axes, output } => {
            let rows = read_points_csv(open(&vectors)?)?;
            let dim = rows.first().map_or(0, Vec::len);
            let v = DelayVectors::from_rows(dim, 1, &rows);
            write_points_csv(sink(&output)?, &project(&v, &axes)?)?;
        }
        Cmd::Baseline { cmd } => baseline(cmd)?,
        Cmd::Scan { pcap, rules } => {
            let mut engine = RuleEngine::new(rules.load()?);
            let mut reader = PcapReader::new(open(&pcap)?)?;
            let link = reader.link_type();
            let mut out = sink(&None)?;
            let mut fired = 0usize;
            while let Some(rec) = reader.next_record()? {
                let Ok(p) = decode_packet(&rec, link) else { continue };
                for a in engine.process(&p)? {
                    writeln!(out, "{}", a.to_line())?;
                    fired += 1;
                }
            }
            out.flush()?;
            if fired > 0 {
                return Ok(Outcome::Alerts);
            }
        }
        Cmd::Monitor {
            pcap,
            config,
            out,
            speed,
            rules,
        } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = MonitorConfig::from_toml(&text).with_context(|| format!("{}", config.display()))?;
            let base = config.parent().unwrap_or(Path::new("."));
            for w in &mut cfg.windows {
                if let Some(m) = &mut w.model {
                    if m.path.is_relative() {
                        m.path = base.join(&m.path);
                    }
                }
            }
            let report = run_monitor(open(&pcap)?, rules.load()?, &cfg, speed)?;
            report.write_dir(&out).with_context(|| format!("writing {}", out.display()))?;
            let c = &report.counters;
            eprintln!(
                "{} packets ({} decoded, {} undecodable, {} non-IP), {} alerts",
                c.packets_in, c.decoded, c.decode_errors, c.non_ip_skipped, c.alerts
            );
            if c.alerts > 0 {
                return Ok(Outcome::Alerts);
            }
        }
        Cmd::Rules { cmd } => match cmd {
            RulesCmd::List => {
                for r in builtin_catalog() {
                    println!("{r}");
                }
            }
            RulesCmd::Histogram { rules } => {
                let rules = match rules {
                    Some(p) => load_rules(&p)?,
                    None => builtin_catalog(),
                };
                for (id, n) in param_usage_histogram(&rules) {
                    println!("{}\t{}\t{}\t{n}", id.get(), id.protocol(), id.name());
                }
            }
            RulesCmd::Check { rules } => {
                let r = load_rules(&rules)?;
                println!("{} rules ok", r.len());
            }
        },
        Cmd::Synth { cmd } => synth_cmd(cmd)?,
    }
    Ok(Outcome::Clean)
}

fn baseline(cmd: BaselineCmd) -> Result<()> {
    match cmd {
        BaselineCmd::Fit {
            series,
            dim,
            delay,
            axes,
            resolution,
            output,
            cells,
        } => {
            let v = embed(&read_series(&series)?, dim, delay)?;
            let res = if resolution.len() == 1 {
                vec![resolution[0]; axes.len()]
            } else {
                resolution
            };
            let model = fit_occupancy(&v, &axes, &res)?;
            let mut w = BufWriter::new(File::create(&output).with_context(|| format!("creating {}", output.display()))?);
            model.write_binary(&mut w)?;
            w.flush()?;
            if let Some(c) = cells {
                model.write_cells_csv(File::create(&c).with_context(|| format!("creating {}", c.display()))?)?;
            }
            eprintln!(
                "{} points, {} of {} cells occupied",
                model.total_count(),
                model.occupied_cells(),
                model.counts.len()
            );
        }
        BaselineCmd::Score { model, series, output } => {
            let m = OccupancyModel::read_binary(open(&model)?)?;
            let s = read_series(&series)?;
            let v = embed(&s, m.embed_dim, m.delay)?;
            let span = (m.embed_dim - 1) * m.delay;
            let mut out = sink(&output)?;
            writeln!(out, "time,score")?;
            for (n, p) in project(&v, &m.axes)?.iter().enumerate() {
                writeln!(out, "{:.6},{}", s.time_at(n + span), novelty_score(&m, p)?)?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn synth_cmd(cmd: SynthCmd) -> Result<()> {
    match cmd {
        SynthCmd::Series {
            kind,
            n,
            period,
            seed,
            output,
        } => {
            let values = match kind {
                SeriesKind::Sine => synth::sine(n, period, 1.0),
                SeriesKind::Noise => synth::uniform_noise(n, seed),
                SeriesKind::Lorenz => synth::lorenz_x(n),
            };
            write_series_csv(sink(&output)?, &flowdim_core::TimeSeries::from_values(values, 1.0))?;
        }
        SynthCmd::Capture { attack, seed, output } => {
            let attack = match attack {
                None => None,
                Some(name) => Some(
                    traffic::Attack::ALL
                        .into_iter()
                        .find(|a| format!("{a:?}").eq_ignore_ascii_case(&name) || a.rule_name() == name)
                        .with_context(|| format!("unknown attack '{name}'"))?,
                ),
            };
            let recs = traffic::crafted_capture(attack, seed);
            std::fs::write(&output, traffic::pcap_bytes(&recs))?;
        }
        SynthCmd::LorenzTraffic { seconds, seed, output } => {
            let recs = traffic::lorenz_traffic(seconds, seed);
            std::fs::write(&output, traffic::pcap_bytes(&recs))?;
            eprintln!("{} packets over {seconds} s", recs.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Alerts) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
