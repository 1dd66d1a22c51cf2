//! Static header parameters as timestamped numeric samples.
//!
//! Ids 1 through 17 follow the classic intrusion-signature parameter table;
//! id 18 is the IPv4 protocol-type field. Routing-mutable fields (MAC
//! addresses, TTL, checksums) are deliberately absent.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::capture::{DecodedPacket, Transport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamId(u8);

impl ParamId {
    pub const DST_ADDR: ParamId = ParamId(1);
    pub const SRC_ADDR: ParamId = ParamId(2);
    pub const IP_LENGTH: ParamId = ParamId(3);
    pub const MF_FLAG: ParamId = ParamId(4);
    pub const DF_FLAG: ParamId = ParamId(5);
    pub const IP_OPTIONS: ParamId = ParamId(6);
    pub const TCP_SRC_PORT: ParamId = ParamId(7);
    pub const TCP_DST_PORT: ParamId = ParamId(8);
    pub const URG_FLAG: ParamId = ParamId(9);
    pub const RST_FLAG: ParamId = ParamId(10);
    pub const ACK_FLAG: ParamId = ParamId(11);
    pub const SYN_FLAG: ParamId = ParamId(12);
    pub const FIN_FLAG: ParamId = ParamId(13);
    pub const UDP_DST_PORT: ParamId = ParamId(14);
    pub const UDP_SRC_PORT: ParamId = ParamId(15);
    pub const ICMP_TYPE: ParamId = ParamId(16);
    pub const ICMP_CODE: ParamId = ParamId(17);
    pub const PROTOCOL: ParamId = ParamId(18);

    pub const COUNT: usize = 18;

    pub fn new(id: u8) -> Option<ParamId> {
        (1..=Self::COUNT as u8).contains(&id).then_some(ParamId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ParamId> {
        (1..=Self::COUNT as u8).map(ParamId)
    }

    pub fn protocol(self) -> &'static str {
        CATALOG[self.0 as usize - 1].1
    }

    pub fn name(self) -> &'static str {
        CATALOG[self.0 as usize - 1].2
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const CATALOG: [(u8, &str, &str); ParamId::COUNT] = [
    (1, "IP", "Destination IP Address"),
    (2, "IP", "Source IP Address"),
    (3, "IP", "Length"),
    (4, "IP", "More Fragment Flag"),
    (5, "IP", "Don't Fragment Flag"),
    (6, "IP", "Options"),
    (7, "TCP", "Source Port"),
    (8, "TCP", "Destination Port"),
    (9, "TCP", "Urgent Flag"),
    (10, "TCP", "RST Flag"),
    (11, "TCP", "ACK Flag"),
    (12, "TCP", "SYN Flag"),
    (13, "TCP", "FIN Flag"),
    (14, "UDP", "Destination Port"),
    (15, "UDP", "Source Port"),
    (16, "ICMP", "Type"),
    (17, "ICMP", "Code"),
    (18, "IP", "Protocol type ID"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: ParamId,
    pub protocol: &'static str,
    pub parameter: &'static str,
}

pub fn param_catalog() -> Vec<CatalogEntry> {
    CATALOG
        .iter()
        .map(|&(id, protocol, parameter)| CatalogEntry {
            id: ParamId(id),
            protocol,
            parameter,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSample {
    pub time: f64,
    #[serde(rename = "param_id")]
    pub param: ParamId,
    pub value: f64,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// One sample per parameter the packet carries, in id order.
pub fn extract_params(packet: &DecodedPacket) -> Vec<ParamSample> {
    let Some(ip) = &packet.ip else {
        return Vec::new();
    };
    let time = packet.timestamp.as_secs_f64();
    let mut out = Vec::with_capacity(14);
    let mut push = |param: ParamId, value: f64| out.push(ParamSample { time, param, value });

    push(ParamId::DST_ADDR, u32::from(ip.dst_addr) as f64);
    push(ParamId::SRC_ADDR, u32::from(ip.src_addr) as f64);
    push(ParamId::IP_LENGTH, ip.total_length as f64);
    push(ParamId::MF_FLAG, flag(ip.mf_flag));
    push(ParamId::DF_FLAG, flag(ip.df_flag));
    push(ParamId::IP_OPTIONS, ip.options.len() as f64);
    match &packet.transport {
        Transport::Tcp(t) => {
            push(ParamId::TCP_SRC_PORT, t.src_port as f64);
            push(ParamId::TCP_DST_PORT, t.dst_port as f64);
            push(ParamId::URG_FLAG, flag(t.flags.urg));
            push(ParamId::RST_FLAG, flag(t.flags.rst));
            push(ParamId::ACK_FLAG, flag(t.flags.ack));
            push(ParamId::SYN_FLAG, flag(t.flags.syn));
            push(ParamId::FIN_FLAG, flag(t.flags.fin));
        }
        Transport::Udp(u) => {
            push(ParamId::UDP_DST_PORT, u.dst_port as f64);
            push(ParamId::UDP_SRC_PORT, u.src_port as f64);
        }
        Transport::Icmp(i) => {
            push(ParamId::ICMP_TYPE, i.icmp_type as f64);
            push(ParamId::ICMP_CODE, i.code as f64);
        }
        Transport::None => {}
    }
    push(ParamId::PROTOCOL, ip.protocol_id as f64);
    out
}

/// Writes `time,param_id,value` rows with a header line.
pub fn write_samples_csv<W: Write>(w: W, samples: &[ParamSample]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "param_id", "value"])?;
    for s in samples {
        out.write_record([
            format!("{:.6}", s.time),
            s.param.to_string(),
            s.value.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(r: R) -> csv::Result<Vec<ParamSample>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::traffic::PacketSpec;

    #[test]
    fn catalog_rows() {
        let cat = param_catalog();
        assert_eq!(cat.len(), 18);
        assert_eq!((cat[0].protocol, cat[0].parameter), ("IP", "Destination IP Address"));
        assert_eq!((cat[12].protocol, cat[12].parameter), ("TCP", "FIN Flag"));
        assert_eq!((cat[17].protocol, cat[17].parameter), ("IP", "Protocol type ID"));
        for (i, e) in cat.iter().enumerate() {
            assert_eq!(e.id.get() as usize, i + 1);
        }
    }

    #[test]
    fn catalog_is_static_only() {
        let allowed = [
            "Destination IP Address",
            "Source IP Address",
            "Length",
            "More Fragment Flag",
            "Don't Fragment Flag",
            "Options",
            "Source Port",
            "Destination Port",
            "Urgent Flag",
            "RST Flag",
            "ACK Flag",
            "SYN Flag",
            "FIN Flag",
            "Type",
            "Code",
            "Protocol type ID",
        ];
        for e in param_catalog() {
            assert!(allowed.contains(&e.parameter), "{}", e.parameter);
            let lower = e.parameter.to_lowercase();
            for banned in ["mac", "ttl", "checksum", "sequence"] {
                assert!(!lower.contains(banned));
            }
        }
    }

    fn ids(samples: &[ParamSample]) -> Vec<u8> {
        samples.iter().map(|s| s.param.get()).collect()
    }

    fn value(samples: &[ParamSample], id: ParamId) -> f64 {
        samples.iter().find(|s| s.param == id).unwrap().value
    }

    #[test]
    fn tcp_syn_sample_set() {
        let pkt = PacketSpec::tcp([10, 0, 0, 1], [10, 0, 0, 2], 1234, 80)
            .flags(crate::capture::TcpFlags::SYN)
            .build(0.5);
        let s = extract_params(&pkt);
        assert_eq!(ids(&s), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 18]);
        assert_eq!(value(&s, ParamId::SYN_FLAG), 1.0);
        assert_eq!(value(&s, ParamId::ACK_FLAG), 0.0);
        assert_eq!(value(&s, ParamId::PROTOCOL), 6.0);
        assert_eq!(value(&s, ParamId::DST_ADDR), u32::from_be_bytes([10, 0, 0, 2]) as f64);
        assert!(s.iter().all(|x| x.time == 0.5));
    }

    #[test]
    fn icmp_and_arp() {
        let pkt = PacketSpec::icmp([10, 0, 0, 1], [10, 0, 0, 2], 8, 0).build(0.0);
        let s = extract_params(&pkt);
        assert_eq!(ids(&s), vec![1, 2, 3, 4, 5, 6, 16, 17, 18]);
        assert_eq!(value(&s, ParamId::ICMP_TYPE), 8.0);

        let arp = PacketSpec::arp().build(0.0);
        assert!(extract_params(&arp).is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let pkt = PacketSpec::udp([10, 0, 0, 1], [10, 0, 0, 2], 5353, 53).build(1.25);
        let s = extract_params(&pkt);
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,param_id,value\n1.250000,1,"));
        assert_eq!(read_samples_csv(buf.as_slice()).unwrap(), s);
    }
}
