use std::collections::{HashMap, VecDeque};

use super::ast::{CountExpr, RuleKind, SignatureRule};
use super::engine::Alert;
use super::eval::eval_expr;
use crate::capture::{DecodedPacket, Timestamp};

/// How far behind the newest timestamp a packet may arrive before the
/// stream is rejected.
pub const ORDER_TOLERANCE_MICROS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("packet at {time} arrived {behind_micros} us after a packet at {latest}; streams must be in time order")]
pub struct OrderingError {
    pub time: Timestamp,
    pub latest: Timestamp,
    pub behind_micros: u64,
}

/// Clamps slightly late timestamps to the newest one seen so far.
#[derive(Clone, Debug, Default)]
pub struct StreamClock {
    latest: Option<u64>,
}

impl StreamClock {
    pub fn observe(&mut self, ts: Timestamp) -> Result<u64, OrderingError> {
        let t = ts.total_micros();
        match self.latest {
            Some(latest) if t < latest => {
                let behind = latest - t;
                if behind > ORDER_TOLERANCE_MICROS {
                    return Err(OrderingError {
                        time: ts,
                        latest: Timestamp::new((latest / 1_000_000) as u32, (latest % 1_000_000) as u32),
                        behind_micros: behind,
                    });
                }
                Ok(latest)
            }
            _ => {
                self.latest = Some(t);
                Ok(t)
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
struct KeyState {
    times: VecDeque<u64>,
    disarmed: bool,
}

/// Sliding-window event counter keyed by group value.
///
/// A key's window at time `t` covers `(t - window, t]`. The first event that
/// pushes the count above `threshold` fires; the key stays quiet until its
/// count falls back to `threshold` or below.
#[derive(Clone, Debug)]
pub struct WindowedCounter {
    window_micros: u64,
    threshold: u64,
    keys: HashMap<u64, KeyState>,
}

impl WindowedCounter {
    pub fn new(window_micros: u64, threshold: u64) -> Self {
        WindowedCounter {
            window_micros,
            threshold,
            keys: HashMap::new(),
        }
    }

    pub fn for_count(c: &CountExpr) -> Self {
        Self::new(c.window.as_micros(), c.threshold)
    }

    /// Records an event. Returns the window count if this event fires.
    /// Times must be non-decreasing per key.
    pub fn observe(&mut self, t: u64, key: u64) -> Option<u64> {
        let st = self.keys.entry(key).or_default();
        while st.times.front().is_some_and(|&f| t - f >= self.window_micros) {
            st.times.pop_front();
        }
        st.times.push_back(t);
        let count = st.times.len() as u64;
        if count > self.threshold {
            if !st.disarmed {
                st.disarmed = true;
                return Some(count);
            }
        } else {
            st.disarmed = false;
        }
        None
    }

    pub fn key_count(&self) -> usize {
        self.keys.len()
    }
}

/// Stateful evaluator for one windowed rule.
#[derive(Clone, Debug)]
pub struct WindowedRule {
    rule: SignatureRule,
    clock: StreamClock,
    counter: WindowedCounter,
}

impl WindowedRule {
    /// Returns `None` for per-packet rules.
    pub fn new(rule: SignatureRule) -> Option<Self> {
        let counter = match &rule.kind {
            RuleKind::Windowed(c) => WindowedCounter::for_count(c),
            RuleKind::PerPacket(_) => return None,
        };
        Some(WindowedRule {
            rule,
            clock: StreamClock::default(),
            counter,
        })
    }

    pub fn rule(&self) -> &SignatureRule {
        &self.rule
    }

    fn count_expr(&self) -> &CountExpr {
        match &self.rule.kind {
            RuleKind::Windowed(c) => c,
            RuleKind::PerPacket(_) => unreachable!("constructed from a windowed rule"),
        }
    }

    pub fn process(&mut self, pkt: &DecodedPacket) -> Result<Option<Alert>, OrderingError> {
        let t = self.clock.observe(pkt.timestamp)?;
        let c = self.count_expr();
        if !eval_expr(&c.predicate, pkt) {
            return Ok(None);
        }
        let Some(key) = c.group_by.value(pkt) else {
            return Ok(None);
        };
        let window = c.window;
        Ok(self
            .counter
            .observe(t, key)
            .map(|count| Alert::windowed(&self.rule, pkt, count, window)))
    }
}

/// Runs one windowed rule over a packet stream.
pub fn eval_windowed<'a, I>(rule: &SignatureRule, packets: I) -> Result<Vec<Alert>, OrderingError>
where
    I: IntoIterator<Item = &'a DecodedPacket>,
{
    let Some(mut w) = WindowedRule::new(rule.clone()) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for pkt in packets {
        if let Some(a) = w.process(pkt)? {
            out.push(a);
        }
    }
    Ok(out)
}
