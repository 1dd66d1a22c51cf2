use std::cmp::Ordering;
use std::net::Ipv4Addr;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::ast::{Duration, RuleKind, Severity, SignatureRule};
use super::eval::eval_expr;
use super::windowed::{OrderingError, WindowedRule};
use crate::capture::{DecodedPacket, Timestamp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub time: Timestamp,
    pub rule: String,
    pub severity: Severity,
    pub src: Option<Ipv4Addr>,
    pub dst: Option<Ipv4Addr>,
    /// Summary of the triggering packet.
    pub packet: String,
    /// Windowed rules only: the count that crossed the threshold.
    pub count: Option<u64>,
    pub window: Option<Duration>,
}

impl Alert {
    fn base(rule: &SignatureRule, pkt: &DecodedPacket) -> Alert {
        Alert {
            time: pkt.timestamp,
            rule: rule.name.clone(),
            severity: rule.severity,
            src: pkt.ip.as_ref().map(|ip| ip.src_addr),
            dst: pkt.ip.as_ref().map(|ip| ip.dst_addr),
            packet: pkt.summary(),
            count: None,
            window: None,
        }
    }

    pub fn per_packet(rule: &SignatureRule, pkt: &DecodedPacket) -> Alert {
        Self::base(rule, pkt)
    }

    pub fn windowed(rule: &SignatureRule, pkt: &DecodedPacket, count: u64, window: Duration) -> Alert {
        Alert {
            count: Some(count),
            window: Some(window),
            ..Self::base(rule, pkt)
        }
    }

    pub fn detail(&self) -> String {
        match (self.count, self.window) {
            (Some(c), Some(w)) => format!("{}; count {c} in {w}", self.packet),
            _ => self.packet.clone(),
        }
    }

    /// ISO-8601 UTC time with microseconds.
    pub fn iso_time(&self) -> String {
        DateTime::from_timestamp(self.time.secs as i64, self.time.micros * 1000)
            .map(|d| d.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string())
            .unwrap_or_else(|| self.time.to_string())
    }

    /// Tab-separated: time, rule, severity, src, dst, detail.
    pub fn to_line(&self) -> String {
        let addr = |a: Option<Ipv4Addr>| a.map_or_else(|| "-".to_string(), |a| a.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.iso_time(),
            self.rule,
            self.severity,
            addr(self.src),
            addr(self.dst),
            self.detail()
        )
    }

    /// Sink order: time, then rule name.
    pub fn sink_order(a: &Alert, b: &Alert) -> Ordering {
        a.time.cmp(&b.time).then_with(|| a.rule.cmp(&b.rule))
    }
}

/// Evaluates a rule set packet by packet, keeping windowed state.
#[derive(Clone, Debug)]
pub struct RuleEngine {
    per_packet: Vec<SignatureRule>,
    windowed: Vec<WindowedRule>,
}

impl RuleEngine {
    pub fn new(rules: Vec<SignatureRule>) -> Self {
        let mut per_packet = Vec::new();
        let mut windowed = Vec::new();
        for r in rules {
            match r.kind {
                RuleKind::PerPacket(_) => per_packet.push(r),
                RuleKind::Windowed(_) => windowed.extend(WindowedRule::new(r)),
            }
        }
        RuleEngine { per_packet, windowed }
    }

    pub fn rule_count(&self) -> usize {
        self.per_packet.len() + self.windowed.len()
    }

    /// Alerts raised by this packet, ordered by rule name.
    pub fn process(&mut self, pkt: &DecodedPacket) -> Result<Vec<Alert>, OrderingError> {
        let mut out = Vec::new();
        for r in &self.per_packet {
            if let RuleKind::PerPacket(e) = &r.kind {
                if eval_expr(e, pkt) {
                    out.push(Alert::per_packet(r, pkt));
                }
            }
        }
        for w in &mut self.windowed {
            out.extend(w.process(pkt)?);
        }
        out.sort_by(Alert::sink_order);
        Ok(out)
    }

    pub fn run<'a, I>(&mut self, packets: I) -> Result<Vec<Alert>, OrderingError>
    where
        I: IntoIterator<Item = &'a DecodedPacket>,
    {
        let mut out = Vec::new();
        for p in packets {
            out.extend(self.process(p)?);
        }
        Ok(out)
    }
}
