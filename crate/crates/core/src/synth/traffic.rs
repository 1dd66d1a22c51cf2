//! Packet builders and synthetic captures: benign sessions, crafted attacks
//! and a traffic mix whose rate follows the Lorenz system.

use std::net::Ipv4Addr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lorenz, LorenzConfig};
use crate::capture::{
    decode_packet, internet_checksum, CaptureRecord, DecodedPacket, PcapWriter, TcpFlags, Timestamp,
    ETHERTYPE_ARP, ETHERTYPE_IPV4, LINKTYPE_ETHERNET, PROTO_ICMP, PROTO_TCP, PROTO_UDP,
};

const SRC_MAC: [u8; 6] = [0x02, 0x00, 0x00, 0x00, 0x00, 0x01];
const DST_MAC: [u8; 6] = [0x02, 0x00, 0x00, 0x00, 0x00, 0x02];

#[derive(Clone, Debug, PartialEq)]
enum Layer {
    Tcp {
        sport: u16,
        dport: u16,
        flags: u16,
        seq: u32,
        ack: u32,
        urgent: u16,
    },
    Udp {
        sport: u16,
        dport: u16,
    },
    Icmp {
        icmp_type: u8,
        code: u8,
        rest: [u8; 4],
    },
    /// IP payload without a parsed transport header (non-first fragments).
    Raw { proto: u8 },
    Arp,
}

/// Builder for a single Ethernet/IPv4 frame with valid lengths and
/// checksums. Payload bytes are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketSpec {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    layer: Layer,
    payload: usize,
    ttl: u8,
    id: u16,
    df: bool,
    mf: bool,
    offset: u16,
    options: Vec<u8>,
}

impl PacketSpec {
    fn ip(src: [u8; 4], dst: [u8; 4], layer: Layer) -> Self {
        PacketSpec {
            src: Ipv4Addr::from(src),
            dst: Ipv4Addr::from(dst),
            layer,
            payload: 0,
            ttl: 64,
            id: 0,
            df: false,
            mf: false,
            offset: 0,
            options: Vec::new(),
        }
    }

    pub fn tcp(src: [u8; 4], dst: [u8; 4], sport: u16, dport: u16) -> Self {
        Self::ip(
            src,
            dst,
            Layer::Tcp {
                sport,
                dport,
                flags: 0,
                seq: 0,
                ack: 0,
                urgent: 0,
            },
        )
    }

    pub fn udp(src: [u8; 4], dst: [u8; 4], sport: u16, dport: u16) -> Self {
        Self::ip(src, dst, Layer::Udp { sport, dport })
    }

    pub fn icmp(src: [u8; 4], dst: [u8; 4], icmp_type: u8, code: u8) -> Self {
        Self::ip(
            src,
            dst,
            Layer::Icmp {
                icmp_type,
                code,
                rest: [0; 4],
            },
        )
    }

    /// A fragment body carrying `proto` without its transport header.
    pub fn fragment(src: [u8; 4], dst: [u8; 4], proto: u8, offset: u16) -> Self {
        Self::ip(src, dst, Layer::Raw { proto }).offset(offset)
    }

    pub fn arp() -> Self {
        Self::ip([0; 4], [0; 4], Layer::Arp)
    }

    pub fn flags(mut self, bits: u16) -> Self {
        if let Layer::Tcp { flags, .. } = &mut self.layer {
            *flags = bits;
        }
        self
    }

    pub fn seq(mut self, v: u32) -> Self {
        if let Layer::Tcp { seq, .. } = &mut self.layer {
            *seq = v;
        }
        self
    }

    pub fn ack(mut self, v: u32) -> Self {
        if let Layer::Tcp { ack, .. } = &mut self.layer {
            *ack = v;
        }
        self
    }

    pub fn urgent(mut self, v: u16) -> Self {
        if let Layer::Tcp { urgent, .. } = &mut self.layer {
            *urgent = v;
        }
        self
    }

    /// ICMP identifier and sequence number.
    pub fn echo_id(mut self, ident: u16, seqno: u16) -> Self {
        if let Layer::Icmp { rest, .. } = &mut self.layer {
            rest[..2].copy_from_slice(&ident.to_be_bytes());
            rest[2..].copy_from_slice(&seqno.to_be_bytes());
        }
        self
    }

    pub fn payload(mut self, len: usize) -> Self {
        self.payload = len;
        self
    }

    pub fn ttl(mut self, ttl: u8) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn ident(mut self, id: u16) -> Self {
        self.id = id;
        self
    }

    pub fn df(mut self, on: bool) -> Self {
        self.df = on;
        self
    }

    pub fn mf(mut self, on: bool) -> Self {
        self.mf = on;
        self
    }

    /// Fragment offset in 8-byte units.
    pub fn offset(mut self, units: u16) -> Self {
        self.offset = units;
        self
    }

    /// Raw IP option bytes, zero-padded to a multiple of four.
    pub fn options(mut self, mut bytes: Vec<u8>) -> Self {
        while !bytes.len().is_multiple_of(4) {
            bytes.push(0);
        }
        self.options = bytes;
        self
    }

    fn proto(&self) -> u8 {
        match self.layer {
            Layer::Tcp { .. } => PROTO_TCP,
            Layer::Udp { .. } => PROTO_UDP,
            Layer::Icmp { .. } => PROTO_ICMP,
            Layer::Raw { proto } => proto,
            Layer::Arp => 0,
        }
    }

    fn transport_bytes(&self) -> Vec<u8> {
        let mut seg = Vec::new();
        match self.layer {
            Layer::Tcp {
                sport,
                dport,
                flags,
                seq,
                ack,
                urgent,
            } => {
                seg.extend_from_slice(&sport.to_be_bytes());
                seg.extend_from_slice(&dport.to_be_bytes());
                seg.extend_from_slice(&seq.to_be_bytes());
                seg.extend_from_slice(&ack.to_be_bytes());
                seg.push((5 << 4) | (flags >> 8) as u8);
                seg.push(flags as u8);
                seg.extend_from_slice(&65535u16.to_be_bytes());
                seg.extend_from_slice(&[0, 0]);
                seg.extend_from_slice(&urgent.to_be_bytes());
            }
            Layer::Udp { sport, dport } => {
                seg.extend_from_slice(&sport.to_be_bytes());
                seg.extend_from_slice(&dport.to_be_bytes());
                seg.extend_from_slice(&((8 + self.payload) as u16).to_be_bytes());
                seg.extend_from_slice(&[0, 0]);
            }
            Layer::Icmp { icmp_type, code, rest } => {
                seg.extend_from_slice(&[icmp_type, code, 0, 0]);
                seg.extend_from_slice(&rest);
            }
            Layer::Raw { .. } | Layer::Arp => {}
        }
        seg.resize(seg.len() + self.payload, 0);
        let pseudo = |seg: &[u8]| {
            let mut p = Vec::with_capacity(12 + seg.len());
            p.extend_from_slice(&self.src.octets());
            p.extend_from_slice(&self.dst.octets());
            p.extend_from_slice(&[0, self.proto()]);
            p.extend_from_slice(&(seg.len() as u16).to_be_bytes());
            p.extend_from_slice(seg);
            internet_checksum(&p)
        };
        match self.layer {
            Layer::Tcp { .. } => {
                let c = pseudo(&seg);
                seg[16..18].copy_from_slice(&c.to_be_bytes());
            }
            Layer::Udp { .. } => {
                let c = match pseudo(&seg) {
                    0 => 0xffff,
                    c => c,
                };
                seg[6..8].copy_from_slice(&c.to_be_bytes());
            }
            Layer::Icmp { .. } => {
                let c = internet_checksum(&seg);
                seg[2..4].copy_from_slice(&c.to_be_bytes());
            }
            Layer::Raw { .. } | Layer::Arp => {}
        }
        seg
    }

    /// Wire bytes of the Ethernet frame.
    pub fn frame(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.payload);
        out.extend_from_slice(&DST_MAC);
        out.extend_from_slice(&SRC_MAC);
        if self.layer == Layer::Arp {
            out.extend_from_slice(&ETHERTYPE_ARP.to_be_bytes());
            out.extend_from_slice(&[0, 1, 8, 0, 6, 4, 0, 1]);
            out.extend_from_slice(&SRC_MAC);
            out.extend_from_slice(&[192, 168, 1, 1]);
            out.extend_from_slice(&[0; 6]);
            out.extend_from_slice(&[192, 168, 1, 2]);
            return out;
        }
        out.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        let seg = self.transport_bytes();
        let ihl = 5 + self.options.len() / 4;
        let total = ihl * 4 + seg.len();
        let ip_start = out.len();
        out.push(0x40 | ihl as u8);
        out.push(0);
        out.extend_from_slice(&(total as u16).to_be_bytes());
        out.extend_from_slice(&self.id.to_be_bytes());
        let mut ff = self.offset & 0x1fff;
        if self.df {
            ff |= 0x4000;
        }
        if self.mf {
            ff |= 0x2000;
        }
        out.extend_from_slice(&ff.to_be_bytes());
        out.push(self.ttl);
        out.push(self.proto());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());
        out.extend_from_slice(&self.options);
        let c = internet_checksum(&out[ip_start..]);
        out[ip_start + 10..ip_start + 12].copy_from_slice(&c.to_be_bytes());
        out.extend_from_slice(&seg);
        out
    }

    pub fn record(&self, t: f64) -> CaptureRecord {
        let data = self.frame();
        CaptureRecord::new(Timestamp::from_secs_f64(t), data.len() as u32, data)
    }

    /// The decoded form of [`PacketSpec::record`].
    pub fn build(&self, t: f64) -> DecodedPacket {
        decode_packet(&self.record(t), LINKTYPE_ETHERNET).expect("synthetic frames decode")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedPacket {
    pub time: f64,
    pub spec: PacketSpec,
}

fn at(time: f64, spec: PacketSpec) -> TimedPacket {
    TimedPacket { time, spec }
}

/// Sorts by time (stably) and renders capture records.
pub fn to_records(mut packets: Vec<TimedPacket>) -> Vec<CaptureRecord> {
    packets.sort_by(|a, b| a.time.total_cmp(&b.time));
    packets.iter().map(|p| p.spec.record(p.time)).collect()
}

/// Serializes records as a microsecond Ethernet pcap file.
pub fn pcap_bytes(records: &[CaptureRecord]) -> Vec<u8> {
    let mut w = PcapWriter::ethernet(Vec::new()).expect("write to memory");
    for r in records {
        w.write_record(r).expect("write to memory");
    }
    w.into_inner()
}

/// Epoch second used as the start of generated captures.
pub const BASE_TIME: f64 = 1_700_000_000.0;

pub const SERVERS: [[u8; 4]; 4] = [[10, 0, 0, 10], [10, 0, 0, 11], [10, 0, 0, 12], [10, 0, 0, 13]];
const RESOLVER: [u8; 4] = [192, 168, 1, 1];

fn client(rng: &mut impl Rng) -> [u8; 4] {
    [192, 168, 1, rng.gen_range(10..=60)]
}

fn ephemeral(rng: &mut impl Rng) -> u16 {
    rng.gen_range(49152..=65535)
}

fn tcp_session(t0: f64, rng: &mut impl Rng, out: &mut Vec<TimedPacket>) {
    const ACK: u16 = TcpFlags::ACK;
    let c = client(rng);
    let s = *SERVERS.choose(rng).unwrap();
    let dport = *[80u16, 80, 443, 22].choose(rng).unwrap();
    let sport = ephemeral(rng);
    let rtt = rng.gen_range(0.002..0.040);
    let mut cseq: u32 = rng.gen_range(1..u32::MAX / 2);
    let mut sseq: u32 = rng.gen_range(1..u32::MAX / 2);
    let c2s = |flags: u16, seq: u32, ack: u32| PacketSpec::tcp(c, s, sport, dport).flags(flags).seq(seq).ack(ack);
    let s2c = |flags: u16, seq: u32, ack: u32| PacketSpec::tcp(s, c, dport, sport).flags(flags).seq(seq).ack(ack);

    let mut t = t0;
    out.push(at(t, c2s(TcpFlags::SYN, cseq, 0)));
    cseq += 1;
    t += rtt;
    out.push(at(t, s2c(TcpFlags::SYN | ACK, sseq, cseq)));
    sseq += 1;
    t += rtt;
    out.push(at(t, c2s(ACK, cseq, sseq)));
    let req = rng.gen_range(80..400);
    out.push(at(t + 0.0001, c2s(TcpFlags::PSH | ACK, cseq, sseq).payload(req)));
    cseq += req as u32;
    t += rtt;
    let segments = rng.gen_range(2..10);
    for i in 0..segments {
        let last = i + 1 == segments;
        let len = if last { rng.gen_range(100..1460) } else { 1460 };
        let flags = if last { TcpFlags::PSH | ACK } else { ACK };
        out.push(at(t, s2c(flags, sseq, cseq).payload(len)));
        sseq += len as u32;
        t += 0.0005;
        if i % 2 == 1 || last {
            out.push(at(t + rtt / 2.0, c2s(ACK, cseq, sseq)));
        }
    }
    t += rtt + rng.gen_range(0.05..2.0);
    out.push(at(t, c2s(TcpFlags::FIN | ACK, cseq, sseq)));
    cseq += 1;
    t += rtt;
    out.push(at(t, s2c(TcpFlags::FIN | ACK, sseq, cseq)));
    sseq += 1;
    t += rtt;
    out.push(at(t, c2s(ACK, cseq, sseq)));
}

fn dns_exchange(t: f64, rng: &mut impl Rng, out: &mut Vec<TimedPacket>) {
    let c = client(rng);
    let sport = ephemeral(rng);
    out.push(at(t, PacketSpec::udp(c, RESOLVER, sport, 53).payload(rng.gen_range(28..60))));
    out.push(at(
        t + rng.gen_range(0.001..0.02),
        PacketSpec::udp(RESOLVER, c, 53, sport).payload(rng.gen_range(60..200)),
    ));
}

fn ping(t: f64, rng: &mut impl Rng, out: &mut Vec<TimedPacket>) {
    let c = client(rng);
    let s = *SERVERS.choose(rng).unwrap();
    let (ident, seqno) = (rng.gen(), rng.gen());
    out.push(at(t, PacketSpec::icmp(c, s, 8, 0).echo_id(ident, seqno).payload(56)));
    out.push(at(
        t + rng.gen_range(0.001..0.02),
        PacketSpec::icmp(s, c, 0, 0).echo_id(ident, seqno).payload(56),
    ));
}

fn closed_port(t: f64, rng: &mut impl Rng, out: &mut Vec<TimedPacket>) {
    let c = client(rng);
    let s = *SERVERS.choose(rng).unwrap();
    let sport = ephemeral(rng);
    let isn: u32 = rng.gen_range(1..u32::MAX / 2);
    out.push(at(t, PacketSpec::tcp(c, s, sport, 8080).flags(TcpFlags::SYN).seq(isn)));
    out.push(at(
        t + 0.001,
        PacketSpec::tcp(s, c, 8080, sport).flags(TcpFlags::RST | TcpFlags::ACK).ack(isn + 1),
    ));
}

/// Normal LAN traffic: TCP sessions, DNS lookups, pings and refused
/// connections, starting at `start` and spanning roughly `duration` seconds.
pub fn benign_traffic(start: f64, duration: f64, seed: u64) -> Vec<TimedPacket> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut t = start;
    while t < start + duration {
        match rng.gen_range(0..10) {
            0..=5 => tcp_session(t, &mut rng, &mut out),
            6 | 7 => dns_exchange(t, &mut rng, &mut out),
            8 => ping(t, &mut rng, &mut out),
            _ => closed_port(t, &mut rng, &mut out),
        }
        t += rng.gen_range(0.1..1.5);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attack {
    Land,
    Smurf,
    Fraggle,
    SynFlood,
    FinScan,
    SynFinScan,
    Pingpong,
    OutOfBand,
    BrKill,
    SessionHijack,
    PingOfDeath,
    FragmentOverlap,
    Bonk,
    OobDataBarf,
    UnalignedTimestamp,
    AckScan,
}

impl Attack {
    pub const ALL: [Attack; 16] = [
        Attack::Land,
        Attack::Smurf,
        Attack::Fraggle,
        Attack::SynFlood,
        Attack::FinScan,
        Attack::SynFinScan,
        Attack::Pingpong,
        Attack::OutOfBand,
        Attack::BrKill,
        Attack::SessionHijack,
        Attack::PingOfDeath,
        Attack::FragmentOverlap,
        Attack::Bonk,
        Attack::OobDataBarf,
        Attack::UnalignedTimestamp,
        Attack::AckScan,
    ];

    /// Name of the rule expected to flag this attack.
    pub fn rule_name(self) -> &'static str {
        match self {
            Attack::Land => "land",
            Attack::Smurf => "smurf",
            Attack::Fraggle => "fraggle",
            Attack::SynFlood => "syn-flood",
            Attack::FinScan | Attack::SynFinScan => "vulnerability-scan",
            Attack::Pingpong => "pingpong",
            Attack::OutOfBand => "out-of-band-bug",
            Attack::BrKill => "brkill",
            Attack::SessionHijack => "tcp-session-hijacking",
            Attack::PingOfDeath => "ping-of-death",
            Attack::FragmentOverlap => "ip-fragment-overlap",
            Attack::Bonk => "bonk",
            Attack::OobDataBarf => "oob-data-barf",
            Attack::UnalignedTimestamp => "ip-unaligned-timestamp",
            Attack::AckScan => "ack-scan",
        }
    }

    /// The malicious packets, starting at `t0`.
    pub fn packets(self, t0: f64, seed: u64) -> Vec<TimedPacket> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attacker = [203, 0, 113, 66];
        let victim = SERVERS[0];
        let one = |spec: PacketSpec| vec![at(t0, spec)];
        match self {
            Attack::Land => one(PacketSpec::tcp(victim, victim, 139, 139).flags(TcpFlags::SYN).seq(rng.gen())),
            Attack::Smurf => one(
                PacketSpec::icmp([192, 168, 1, 77], [192, 168, 1, 255], 8, 0)
                    .echo_id(rng.gen(), 1)
                    .payload(56),
            ),
            Attack::Fraggle => one(PacketSpec::udp([192, 168, 1, 77], [255, 255, 255, 255], 4444, 7).payload(64)),
            Attack::SynFlood => (0..150)
                .map(|i| {
                    let src = [198, 51, 100, rng.gen_range(1..255)];
                    let spec = PacketSpec::tcp(src, victim, ephemeral(&mut rng), 80)
                        .flags(TcpFlags::SYN)
                        .seq(rng.gen());
                    at(t0 + i as f64 * 0.01, spec)
                })
                .collect(),
            Attack::FinScan => one(PacketSpec::tcp(attacker, victim, 40001, 111).flags(TcpFlags::FIN).seq(rng.gen())),
            Attack::SynFinScan => one(
                PacketSpec::tcp(attacker, victim, 40002, 111)
                    .flags(TcpFlags::SYN | TcpFlags::FIN)
                    .seq(rng.gen()),
            ),
            Attack::Pingpong => one(PacketSpec::udp(SERVERS[2], SERVERS[3], 7, 19).payload(32)),
            Attack::OutOfBand => one(
                PacketSpec::tcp(attacker, victim, 40003, 139)
                    .flags(TcpFlags::URG | TcpFlags::ACK | TcpFlags::PSH)
                    .seq(rng.gen())
                    .ack(rng.gen_range(1..u32::MAX))
                    .urgent(3)
                    .payload(3),
            ),
            Attack::BrKill => one(
                PacketSpec::tcp([192, 168, 1, 30], victim, 51515, 80)
                    .flags(TcpFlags::RST)
                    .seq(rng.gen()),
            ),
            Attack::SessionHijack => {
                let ack = rng.gen_range(1..u32::MAX);
                let seq: u32 = rng.gen();
                (0..150)
                    .map(|i| {
                        let spec = PacketSpec::tcp([192, 168, 1, 40], victim, 51000, 80)
                            .flags(TcpFlags::ACK)
                            .seq(seq)
                            .ack(ack);
                        at(t0 + i as f64 * 0.005, spec)
                    })
                    .collect()
            }
            Attack::PingOfDeath => {
                const CHUNK: usize = 1480;
                const FRAGMENTS: usize = 45;
                let ident = rng.gen();
                let mut out = vec![at(
                    t0,
                    PacketSpec::icmp(attacker, SERVERS[1], 8, 0)
                        .echo_id(rng.gen(), 1)
                        .payload(CHUNK - 8)
                        .ident(ident)
                        .mf(true),
                )];
                for i in 1..FRAGMENTS {
                    let spec = PacketSpec::fragment(attacker, SERVERS[1], PROTO_ICMP, (i * CHUNK / 8) as u16)
                        .payload(CHUNK)
                        .ident(ident)
                        .mf(i + 1 < FRAGMENTS);
                    out.push(at(t0 + i as f64 * 0.0002, spec));
                }
                out
            }
            Attack::FragmentOverlap => {
                let ident = rng.gen();
                vec![
                    at(
                        t0,
                        PacketSpec::tcp(attacker, victim, 40004, 80)
                            .flags(TcpFlags::PSH | TcpFlags::ACK)
                            .seq(rng.gen())
                            .ack(rng.gen_range(1..u32::MAX))
                            .payload(20)
                            .ident(ident)
                            .mf(true),
                    ),
                    at(
                        t0 + 0.0002,
                        PacketSpec::fragment(attacker, victim, PROTO_TCP, 3)
                            .payload(40)
                            .ident(ident)
                            .mf(true),
                    ),
                ]
            }
            Attack::Bonk => {
                let ident = rng.gen();
                vec![
                    at(
                        t0,
                        PacketSpec::udp(attacker, victim, 40005, 53).payload(24).ident(ident).mf(true),
                    ),
                    at(
                        t0 + 0.0002,
                        PacketSpec::fragment(attacker, victim, PROTO_UDP, 3).payload(4).ident(ident),
                    ),
                ]
            }
            Attack::OobDataBarf => one(
                PacketSpec::fragment(attacker, victim, PROTO_TCP, 50)
                    .payload(64)
                    .ident(rng.gen())
                    .df(true),
            ),
            Attack::UnalignedTimestamp => one(
                PacketSpec::udp(attacker, victim, 40006, 53)
                    .options(vec![68, 4, 5, 0])
                    .payload(32),
            ),
            Attack::AckScan => one(
                PacketSpec::tcp(attacker, victim, 1234, 1234)
                    .flags(TcpFlags::ACK)
                    .seq(rng.gen())
                    .ack(rng.gen_range(1..u32::MAX)),
            ),
        }
    }
}

/// Benign background of two minutes with `attack` injected halfway, or no
/// attack at all.
pub fn crafted_capture(attack: Option<Attack>, seed: u64) -> Vec<CaptureRecord> {
    let mut pkts = benign_traffic(BASE_TIME, 120.0, seed);
    if let Some(a) = attack {
        pkts.extend(a.packets(BASE_TIME + 60.0, seed ^ 0x5eed));
    }
    to_records(pkts)
}

/// Capture whose packet rate and protocol mix follow a Lorenz trajectory,
/// one trajectory sample per second. Rate is about `30 + 1.2 x` packets/s.
pub fn lorenz_traffic(seconds: usize, seed: u64) -> Vec<CaptureRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = lorenz(seconds, &LorenzConfig::default());
    let mut out = Vec::new();
    for (k, &[x, y, z]) in traj.iter().enumerate() {
        let n = (30.0 + 1.2 * x).round().max(1.0) as usize;
        let tcp_share = (z / 50.0).clamp(0.2, 0.9);
        let mut times: Vec<f64> = (0..n).map(|_| BASE_TIME + k as f64 + rng.gen::<f64>()).collect();
        times.sort_by(f64::total_cmp);
        for t in times {
            let c = client(&mut rng);
            let s = *SERVERS.choose(&mut rng).unwrap();
            let u: f64 = rng.gen();
            let size = (600.0 + 25.0 * y).clamp(0.0, 1400.0) as usize;
            let spec = if u < tcp_share {
                let flags = if rng.gen_bool(0.3) {
                    TcpFlags::PSH | TcpFlags::ACK
                } else {
                    TcpFlags::ACK
                };
                let (src, dst, sp, dp) = if rng.gen_bool(0.5) {
                    (c, s, ephemeral(&mut rng), 80)
                } else {
                    (s, c, 80, ephemeral(&mut rng))
                };
                PacketSpec::tcp(src, dst, sp, dp)
                    .flags(flags)
                    .seq(rng.gen())
                    .ack(rng.gen_range(1..u32::MAX))
                    .payload(size)
            } else if u < tcp_share + (1.0 - tcp_share) * 0.8 {
                PacketSpec::udp(c, RESOLVER, ephemeral(&mut rng), 53).payload(size / 8 + 20)
            } else {
                PacketSpec::icmp(c, s, 8, 0).echo_id(rng.gen(), rng.gen()).payload(56)
            };
            out.push(spec.record(t));
        }
    }
    out
}
