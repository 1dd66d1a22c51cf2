//! Capture decoding: pcap records into Ethernet/IPv4/TCP/UDP/ICMP views.

mod decode;
mod encode;
pub mod pcap;

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decode::decode_packet;
pub use encode::{encode_frame, encode_headers, internet_checksum};
pub use pcap::{read_capture, PcapReader, PcapWriter, LINKTYPE_ETHERNET};

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_ARP: u16 = 0x0806;
pub const ETHERTYPE_IPV6: u16 = 0x86dd;

pub const PROTO_ICMP: u8 = 1;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("unsupported capture format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated file: {what} of record {record} at byte offset {offset}")]
    Truncated {
        offset: u64,
        record: usize,
        what: &'static str,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unsupported link type {0} (only Ethernet is decoded)")]
    UnsupportedLinkType(u32),
    #[error("frame of {0} bytes is shorter than an Ethernet header")]
    FrameTooShort(usize),
    #[error("malformed {layer} header: {reason}")]
    Malformed {
        layer: &'static str,
        reason: String,
    },
    #[error("{layer} header needs {needed} bytes, {available} captured")]
    Truncated {
        layer: &'static str,
        needed: usize,
        available: usize,
    },
}

/// Capture timestamp at microsecond resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub secs: u32,
    pub micros: u32,
}

impl Timestamp {
    pub fn new(secs: u32, micros: u32) -> Self {
        Timestamp {
            secs: secs + micros / 1_000_000,
            micros: micros % 1_000_000,
        }
    }

    pub fn from_secs_f64(t: f64) -> Self {
        let total = (t * 1e6).round() as u64;
        Timestamp::new((total / 1_000_000) as u32, (total % 1_000_000) as u32)
    }

    pub fn as_secs_f64(&self) -> f64 {
        self.secs as f64 + self.micros as f64 * 1e-6
    }

    pub fn total_micros(&self) -> u64 {
        self.secs as u64 * 1_000_000 + self.micros as u64
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.secs, self.micros)
    }
}

/// One raw record from a capture file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaptureRecord {
    pub timestamp: Timestamp,
    pub original_length: u32,
    pub data: Vec<u8>,
}

impl CaptureRecord {
    pub fn new(timestamp: Timestamp, original_length: u32, data: Vec<u8>) -> Self {
        CaptureRecord {
            timestamp,
            original_length,
            data,
        }
    }

    pub fn captured_length(&self) -> u32 {
        self.data.len() as u32
    }

    /// The record claims more captured bytes than were on the wire.
    pub fn is_length_inconsistent(&self) -> bool {
        self.captured_length() > self.original_length
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacAddr(pub [u8; 6]);

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ipv4Header {
    /// Header length in 32-bit words.
    pub ihl: u8,
    pub tos: u8,
    pub total_length: u16,
    pub identification: u16,
    pub reserved_flag: bool,
    pub df_flag: bool,
    pub mf_flag: bool,
    /// Offset in units of 8 bytes.
    pub fragment_offset: u16,
    pub ttl: u8,
    pub protocol_id: u8,
    pub checksum: u16,
    pub src_addr: Ipv4Addr,
    pub dst_addr: Ipv4Addr,
    pub options: Vec<u8>,
}

impl Ipv4Header {
    pub fn header_len(&self) -> usize {
        self.ihl as usize * 4
    }

    pub fn has_options(&self) -> bool {
        !self.options.is_empty()
    }

    pub fn is_fragment(&self) -> bool {
        self.mf_flag || self.fragment_offset != 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcpFlags {
    pub ns: bool,
    pub cwr: bool,
    pub ece: bool,
    pub urg: bool,
    pub ack: bool,
    pub psh: bool,
    pub rst: bool,
    pub syn: bool,
    pub fin: bool,
}

impl TcpFlags {
    pub const FIN: u16 = 0x01;
    pub const SYN: u16 = 0x02;
    pub const RST: u16 = 0x04;
    pub const PSH: u16 = 0x08;
    pub const ACK: u16 = 0x10;
    pub const URG: u16 = 0x20;
    pub const ECE: u16 = 0x40;
    pub const CWR: u16 = 0x80;
    pub const NS: u16 = 0x100;

    pub fn from_bits(bits: u16) -> Self {
        TcpFlags {
            ns: bits & Self::NS != 0,
            cwr: bits & Self::CWR != 0,
            ece: bits & Self::ECE != 0,
            urg: bits & Self::URG != 0,
            ack: bits & Self::ACK != 0,
            psh: bits & Self::PSH != 0,
            rst: bits & Self::RST != 0,
            syn: bits & Self::SYN != 0,
            fin: bits & Self::FIN != 0,
        }
    }

    pub fn bits(&self) -> u16 {
        let mut b = 0;
        for (set, bit) in [
            (self.ns, Self::NS),
            (self.cwr, Self::CWR),
            (self.ece, Self::ECE),
            (self.urg, Self::URG),
            (self.ack, Self::ACK),
            (self.psh, Self::PSH),
            (self.rst, Self::RST),
            (self.syn, Self::SYN),
            (self.fin, Self::FIN),
        ] {
            if set {
                b |= bit;
            }
        }
        b
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.urg, "U"),
            (self.ack, "A"),
            (self.psh, "P"),
            (self.rst, "R"),
            (self.syn, "S"),
            (self.fin, "F"),
        ];
        let s: String = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if s.is_empty() {
            f.write_str(".")
        } else {
            f.write_str(&s)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub ack_num: u32,
    /// Header length in 32-bit words.
    pub data_offset: u8,
    /// The three reserved bits between the data offset and NS.
    pub reserved: u8,
    pub flags: TcpFlags,
    pub window: u16,
    pub checksum: u16,
    pub urgent_ptr: u16,
    pub options: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UdpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    pub length: u16,
    pub checksum: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IcmpHeader {
    pub icmp_type: u8,
    pub code: u8,
    pub checksum: u16,
    /// Type-specific word (identifier/sequence for echo).
    pub rest: [u8; 4],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transport {
    Tcp(TcpHeader),
    Udp(UdpHeader),
    Icmp(IcmpHeader),
    None,
}

/// A transport header that was cut short by the capture snap length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncatedTransport {
    pub protocol_id: u8,
    pub needed: usize,
    pub available: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedPacket {
    pub timestamp: Timestamp,
    pub dst_mac: MacAddr,
    pub src_mac: MacAddr,
    pub ethertype: u16,
    pub ip: Option<Ipv4Header>,
    pub transport: Transport,
    pub truncated: Option<TruncatedTransport>,
    pub captured_length: u32,
    pub original_length: u32,
}

impl DecodedPacket {
    pub fn tcp(&self) -> Option<&TcpHeader> {
        match &self.transport {
            Transport::Tcp(t) => Some(t),
            _ => None,
        }
    }

    pub fn udp(&self) -> Option<&UdpHeader> {
        match &self.transport {
            Transport::Udp(u) => Some(u),
            _ => None,
        }
    }

    pub fn icmp(&self) -> Option<&IcmpHeader> {
        match &self.transport {
            Transport::Icmp(i) => Some(i),
            _ => None,
        }
    }

    /// Short human-readable form used in alert details.
    pub fn summary(&self) -> String {
        let Some(ip) = &self.ip else {
            return format!("ethertype 0x{:04x}", self.ethertype);
        };
        match &self.transport {
            Transport::Tcp(t) => format!(
                "{}:{} > {}:{} tcp [{}]",
                ip.src_addr, t.src_port, ip.dst_addr, t.dst_port, t.flags
            ),
            Transport::Udp(u) => format!(
                "{}:{} > {}:{} udp len {}",
                ip.src_addr, u.src_port, ip.dst_addr, u.dst_port, u.length
            ),
            Transport::Icmp(i) => format!(
                "{} > {} icmp type {} code {}",
                ip.src_addr, ip.dst_addr, i.icmp_type, i.code
            ),
            Transport::None => {
                let frag = if ip.is_fragment() {
                    format!(
                        " frag off {}{}",
                        ip.fragment_offset,
                        if ip.mf_flag { "+" } else { "" }
                    )
                } else {
                    String::new()
                };
                format!(
                    "{} > {} proto {}{}",
                    ip.src_addr, ip.dst_addr, ip.protocol_id, frag
                )
            }
        }
    }
}
