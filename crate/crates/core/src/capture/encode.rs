use super::{DecodedPacket, Transport};

/// Serializes the parsed headers of a packet back to wire bytes.
///
/// Fields are written exactly as stored; lengths and checksums are not
/// recomputed.
pub fn encode_headers(pkt: &DecodedPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&pkt.dst_mac.0);
    out.extend_from_slice(&pkt.src_mac.0);
    out.extend_from_slice(&pkt.ethertype.to_be_bytes());
    let Some(ip) = &pkt.ip else {
        return out;
    };
    out.push(0x40 | (ip.ihl & 0x0f));
    out.push(ip.tos);
    out.extend_from_slice(&ip.total_length.to_be_bytes());
    out.extend_from_slice(&ip.identification.to_be_bytes());
    let mut flags_frag = ip.fragment_offset & 0x1fff;
    if ip.reserved_flag {
        flags_frag |= 0x8000;
    }
    if ip.df_flag {
        flags_frag |= 0x4000;
    }
    if ip.mf_flag {
        flags_frag |= 0x2000;
    }
    out.extend_from_slice(&flags_frag.to_be_bytes());
    out.push(ip.ttl);
    out.push(ip.protocol_id);
    out.extend_from_slice(&ip.checksum.to_be_bytes());
    out.extend_from_slice(&ip.src_addr.octets());
    out.extend_from_slice(&ip.dst_addr.octets());
    out.extend_from_slice(&ip.options);

    match &pkt.transport {
        Transport::Tcp(t) => {
            out.extend_from_slice(&t.src_port.to_be_bytes());
            out.extend_from_slice(&t.dst_port.to_be_bytes());
            out.extend_from_slice(&t.seq.to_be_bytes());
            out.extend_from_slice(&t.ack_num.to_be_bytes());
            let bits = t.flags.bits();
            out.push((t.data_offset << 4) | ((t.reserved & 0x07) << 1) | (bits >> 8) as u8);
            out.push(bits as u8);
            out.extend_from_slice(&t.window.to_be_bytes());
            out.extend_from_slice(&t.checksum.to_be_bytes());
            out.extend_from_slice(&t.urgent_ptr.to_be_bytes());
            out.extend_from_slice(&t.options);
        }
        Transport::Udp(u) => {
            out.extend_from_slice(&u.src_port.to_be_bytes());
            out.extend_from_slice(&u.dst_port.to_be_bytes());
            out.extend_from_slice(&u.length.to_be_bytes());
            out.extend_from_slice(&u.checksum.to_be_bytes());
        }
        Transport::Icmp(i) => {
            out.push(i.icmp_type);
            out.push(i.code);
            out.extend_from_slice(&i.checksum.to_be_bytes());
            out.extend_from_slice(&i.rest);
        }
        Transport::None => {}
    }
    out
}

/// Headers followed by `payload`.
pub fn encode_frame(pkt: &DecodedPacket, payload: &[u8]) -> Vec<u8> {
    let mut out = encode_headers(pkt);
    out.extend_from_slice(payload);
    out
}

/// RFC 1071 ones'-complement checksum.
pub fn internet_checksum(bytes: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    let mut chunks = bytes.chunks_exact(2);
    for c in &mut chunks {
        sum += u16::from_be_bytes([c[0], c[1]]) as u32;
    }
    if let [last] = chunks.remainder() {
        sum += (*last as u32) << 8;
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}
