//! Packet-capture flow analysis.
//!
//! Captures are decoded into static header parameters, binned into time
//! series, embedded in delay coordinates and tested with false nearest
//! neighbors. A signature rule engine runs alongside, and the monitor ties
//! both together over several averaging windows.

pub mod capture;
pub mod dynamics;
pub mod monitor;
pub mod params;
pub mod rules;
pub mod series;
pub mod synth;

pub use capture::{decode_packet, read_capture, CaptureRecord, DecodedPacket, Timestamp};
pub use params::{extract_params, ParamId, ParamSample};
pub use rules::{builtin_catalog, parse_rules, Alert, RuleEngine, SignatureRule};
pub use series::{bin_series, boxcar_average, Aggregation, TimeSeries};
