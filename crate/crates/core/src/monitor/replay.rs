use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::capture::{CaptureError, CaptureRecord};

/// Replay pacing relative to capture time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Speed {
    /// As fast as possible, in file order.
    #[default]
    Unlimited,
    /// Inter-arrival gaps divided by this factor.
    Factor(f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid replay speed '{0}': expected a positive number or 'unlimited'")]
pub struct InvalidSpeed(pub String);

impl Speed {
    pub fn factor(f: f64) -> Result<Speed, InvalidSpeed> {
        if f > 0.0 && f.is_finite() {
            Ok(Speed::Factor(f))
        } else {
            Err(InvalidSpeed(f.to_string()))
        }
    }
}

impl FromStr for Speed {
    type Err = InvalidSpeed;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("unlimited") {
            return Ok(Speed::Unlimited);
        }
        let f: f64 = s.trim().parse().map_err(|_| InvalidSpeed(s.to_string()))?;
        Speed::factor(f).map_err(|_| InvalidSpeed(s.to_string()))
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Unlimited => f.write_str("unlimited"),
            Speed::Factor(x) => write!(f, "{x}"),
        }
    }
}

/// Paces a record stream against the wall clock.
pub struct Replay<I> {
    inner: I,
    speed: Speed,
    origin: Option<(u64, Instant)>,
}

impl<I> Iterator for Replay<I>
where
    I: Iterator<Item = Result<CaptureRecord, CaptureError>>,
{
    type Item = Result<CaptureRecord, CaptureError>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.inner.next()?;
        if let (Ok(rec), Speed::Factor(f)) = (&item, self.speed) {
            let t = rec.timestamp.total_micros();
            let (t0, wall0) = *self.origin.get_or_insert((t, Instant::now()));
            let offset = Duration::from_secs_f64(t.saturating_sub(t0) as f64 * 1e-6 / f);
            let due = wall0 + offset;
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        Some(item)
    }
}

pub fn replay<I>(records: I, speed: Speed) -> Replay<I::IntoIter>
where
    I: IntoIterator<Item = Result<CaptureRecord, CaptureError>>,
{
    Replay {
        inner: records.into_iter(),
        speed,
        origin: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Timestamp;

    fn rec(secs: u32, tag: u8) -> Result<CaptureRecord, CaptureError> {
        Ok(CaptureRecord::new(Timestamp::new(secs, 0), 1, vec![tag]))
    }

    #[test]
    fn parse_speed() {
        assert_eq!("unlimited".parse::<Speed>().unwrap(), Speed::Unlimited);
        assert_eq!("2".parse::<Speed>().unwrap(), Speed::Factor(2.0));
        assert!("0".parse::<Speed>().is_err());
        assert!("-1".parse::<Speed>().is_err());
        assert!("fast".parse::<Speed>().is_err());
        assert!(Speed::factor(0.0).is_err());
    }

    #[test]
    fn scaled_gaps() {
        let start = Instant::now();
        let mut r = replay(vec![rec(100, 0), rec(101, 1)], Speed::Factor(2.0));
        r.next().unwrap().unwrap();
        let first = start.elapsed();
        r.next().unwrap().unwrap();
        let gap = start.elapsed() - first;
        assert!(gap >= Duration::from_millis(450) && gap <= Duration::from_millis(550), "{gap:?}");
    }

    #[test]
    fn unlimited_keeps_order() {
        let out: Vec<u8> = replay(vec![rec(5, 0), rec(1, 1), rec(3, 2)], Speed::Unlimited)
            .map(|r| r.unwrap().data[0])
            .collect();
        assert_eq!(out, vec![0, 1, 2]);
    }
}
