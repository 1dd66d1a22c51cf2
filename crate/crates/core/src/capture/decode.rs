use std::net::Ipv4Addr;

use super::pcap::LINKTYPE_ETHERNET;
use super::{
    CaptureRecord, DecodeError, DecodedPacket, IcmpHeader, Ipv4Header, MacAddr, TcpFlags,
    TcpHeader, Transport, TruncatedTransport, UdpHeader, ETHERTYPE_IPV4, PROTO_ICMP, PROTO_TCP,
    PROTO_UDP,
};

const ETH_LEN: usize = 14;
const IPV4_MIN: usize = 20;
const TCP_MIN: usize = 20;
const UDP_LEN: usize = 8;
const ICMP_LEN: usize = 8;

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn be32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes an Ethernet frame.
///
/// IPv4 header problems are errors. A transport header cut short by the snap
/// length leaves `transport` as `None` and records the cut in `truncated`.
/// Transport headers are only parsed from the first fragment of a datagram.
pub fn decode_packet(record: &CaptureRecord, link_type: u32) -> Result<DecodedPacket, DecodeError> {
    if link_type != LINKTYPE_ETHERNET {
        return Err(DecodeError::UnsupportedLinkType(link_type));
    }
    let frame = record.data.as_slice();
    if frame.len() < ETH_LEN {
        return Err(DecodeError::FrameTooShort(frame.len()));
    }
    let mut pkt = DecodedPacket {
        timestamp: record.timestamp,
        dst_mac: MacAddr(frame[0..6].try_into().unwrap()),
        src_mac: MacAddr(frame[6..12].try_into().unwrap()),
        ethertype: be16(frame, 12),
        ip: None,
        transport: Transport::None,
        truncated: None,
        captured_length: record.captured_length(),
        original_length: record.original_length,
    };
    if pkt.ethertype != ETHERTYPE_IPV4 {
        return Ok(pkt);
    }

    let ip_bytes = &frame[ETH_LEN..];
    let ip = decode_ipv4(ip_bytes)?;
    let rest = &ip_bytes[ip.header_len()..];
    if ip.fragment_offset == 0 {
        let needed = match ip.protocol_id {
            PROTO_TCP => Some(TCP_MIN),
            PROTO_UDP => Some(UDP_LEN),
            PROTO_ICMP => Some(ICMP_LEN),
            _ => None,
        };
        if let Some(needed) = needed {
            match decode_transport(ip.protocol_id, rest) {
                Some(t) => pkt.transport = t,
                None => {
                    pkt.truncated = Some(TruncatedTransport {
                        protocol_id: ip.protocol_id,
                        needed: needed.max(tcp_declared_len(ip.protocol_id, rest)),
                        available: rest.len(),
                    })
                }
            }
        }
    }
    pkt.ip = Some(ip);
    Ok(pkt)
}

fn decode_ipv4(b: &[u8]) -> Result<Ipv4Header, DecodeError> {
    if b.len() < IPV4_MIN {
        return Err(DecodeError::Truncated {
            layer: "IPv4",
            needed: IPV4_MIN,
            available: b.len(),
        });
    }
    let version = b[0] >> 4;
    let ihl = b[0] & 0x0f;
    if version != 4 {
        return Err(DecodeError::Malformed {
            layer: "IPv4",
            reason: format!("version {version}"),
        });
    }
    if ihl < 5 {
        return Err(DecodeError::Malformed {
            layer: "IPv4",
            reason: format!("IHL {ihl} below minimum 5"),
        });
    }
    let hlen = ihl as usize * 4;
    if b.len() < hlen {
        return Err(DecodeError::Truncated {
            layer: "IPv4",
            needed: hlen,
            available: b.len(),
        });
    }
    let flags_frag = be16(b, 6);
    Ok(Ipv4Header {
        ihl,
        tos: b[1],
        total_length: be16(b, 2),
        identification: be16(b, 4),
        reserved_flag: flags_frag & 0x8000 != 0,
        df_flag: flags_frag & 0x4000 != 0,
        mf_flag: flags_frag & 0x2000 != 0,
        fragment_offset: flags_frag & 0x1fff,
        ttl: b[8],
        protocol_id: b[9],
        checksum: be16(b, 10),
        src_addr: Ipv4Addr::new(b[12], b[13], b[14], b[15]),
        dst_addr: Ipv4Addr::new(b[16], b[17], b[18], b[19]),
        options: b[IPV4_MIN..hlen].to_vec(),
    })
}

fn tcp_declared_len(proto: u8, b: &[u8]) -> usize {
    if proto == PROTO_TCP && b.len() > 12 {
        (b[12] >> 4) as usize * 4
    } else {
        0
    }
}

fn decode_transport(proto: u8, b: &[u8]) -> Option<Transport> {
    match proto {
        PROTO_TCP => {
            if b.len() < TCP_MIN {
                return None;
            }
            let data_offset = b[12] >> 4;
            let hlen = data_offset as usize * 4;
            // A data offset below 5 cannot hold the fixed header; keep the
            // fixed fields and no options.
            let opt_end = hlen.max(TCP_MIN);
            if b.len() < opt_end {
                return None;
            }
            let flag_bits = (((b[12] & 0x01) as u16) << 8) | b[13] as u16;
            Some(Transport::Tcp(TcpHeader {
                src_port: be16(b, 0),
                dst_port: be16(b, 2),
                seq: be32(b, 4),
                ack_num: be32(b, 8),
                data_offset,
                reserved: (b[12] >> 1) & 0x07,
                flags: TcpFlags::from_bits(flag_bits),
                window: be16(b, 14),
                checksum: be16(b, 16),
                urgent_ptr: be16(b, 18),
                options: b[TCP_MIN..opt_end].to_vec(),
            }))
        }
        PROTO_UDP => {
            if b.len() < UDP_LEN {
                return None;
            }
            Some(Transport::Udp(UdpHeader {
                src_port: be16(b, 0),
                dst_port: be16(b, 2),
                length: be16(b, 4),
                checksum: be16(b, 6),
            }))
        }
        PROTO_ICMP => {
            if b.len() < ICMP_LEN {
                return None;
            }
            Some(Transport::Icmp(IcmpHeader {
                icmp_type: b[0],
                code: b[1],
                checksum: be16(b, 2),
                rest: b[4..8].try_into().unwrap(),
            }))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Timestamp;

    fn eth(ethertype: u16) -> Vec<u8> {
        let mut f = vec![0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb];
        f.extend_from_slice(&ethertype.to_be_bytes());
        f
    }

    fn ipv4(proto: u8, flags_frag: u16, payload_len: u16) -> Vec<u8> {
        let total = 20 + payload_len;
        let mut h = vec![0x45, 0x00];
        h.extend_from_slice(&total.to_be_bytes());
        h.extend_from_slice(&[0x12, 0x34]);
        h.extend_from_slice(&flags_frag.to_be_bytes());
        h.extend_from_slice(&[64, proto, 0, 0]);
        h.extend_from_slice(&[10, 0, 0, 1, 10, 0, 0, 2]);
        h
    }

    fn tcp(flags: u8) -> Vec<u8> {
        let mut t = vec![0x04, 0xd2, 0x00, 0x50];
        t.extend_from_slice(&1u32.to_be_bytes());
        t.extend_from_slice(&2u32.to_be_bytes());
        t.extend_from_slice(&[0x50, flags, 0xff, 0xff, 0, 0, 0, 0]);
        t
    }

    fn record(bytes: Vec<u8>) -> CaptureRecord {
        let len = bytes.len() as u32;
        CaptureRecord::new(Timestamp::new(1, 0), len, bytes)
    }

    #[test]
    fn lone_ack_frame() {
        let mut f = eth(0x0800);
        f.extend(ipv4(6, 0x4000, 20));
        f.extend(tcp(0x10));
        assert_eq!(f.len(), 54);
        let p = decode_packet(&record(f), 1).unwrap();
        let t = p.tcp().expect("tcp view");
        assert_eq!(
            t.flags,
            TcpFlags {
                ack: true,
                ..TcpFlags::default()
            }
        );
        assert_eq!((t.src_port, t.dst_port), (1234, 80));
    }

    #[test]
    fn flag_word_0x4000() {
        let mut f = eth(0x0800);
        f.extend(ipv4(6, 0x4000, 20));
        f.extend(tcp(0x02));
        let ip = decode_packet(&record(f), 1).unwrap().ip.unwrap();
        assert!(ip.df_flag);
        assert!(!ip.mf_flag);
        assert_eq!(ip.fragment_offset, 0);
    }

    #[test]
    fn arp_has_no_ip() {
        let mut f = eth(0x0806);
        f.extend(std::iter::repeat_n(0, 28));
        let p = decode_packet(&record(f), 1).unwrap();
        assert!(p.ip.is_none());
        assert_eq!(p.transport, Transport::None);
    }

    #[test]
    fn short_frame_and_bad_ihl() {
        assert_eq!(
            decode_packet(&record(vec![0; 13]), 1),
            Err(DecodeError::FrameTooShort(13))
        );
        let mut f = eth(0x0800);
        let mut ip = ipv4(6, 0, 0);
        ip[0] = 0x44;
        f.extend(ip);
        assert!(matches!(
            decode_packet(&record(f), 1),
            Err(DecodeError::Malformed { .. })
        ));
    }

    #[test]
    fn rejects_other_link_types() {
        assert_eq!(
            decode_packet(&record(eth(0x0800)), 101),
            Err(DecodeError::UnsupportedLinkType(101))
        );
    }

    #[test]
    fn snapped_tcp_keeps_ip_view() {
        let mut f = eth(0x0800);
        f.extend(ipv4(6, 0, 20));
        f.extend(&tcp(0x10)[..9]);
        let p = decode_packet(&record(f), 1).unwrap();
        assert!(p.ip.is_some());
        assert_eq!(p.transport, Transport::None);
        let cut = p.truncated.unwrap();
        assert_eq!((cut.protocol_id, cut.available), (6, 9));
    }

    #[test]
    fn non_first_fragment_has_no_transport() {
        let mut f = eth(0x0800);
        f.extend(ipv4(1, 0x2000 | 185, 8));
        f.extend([8, 0, 0, 0, 0, 0, 0, 0]);
        let p = decode_packet(&record(f), 1).unwrap();
        assert_eq!(p.ip.as_ref().unwrap().fragment_offset, 185);
        assert_eq!(p.transport, Transport::None);
        assert!(p.truncated.is_none());
    }
}
