use std::collections::BTreeMap;

use super::ast::SignatureRule;
use super::parse_rules;
use crate::params::ParamId;

/// Builtin signatures. The trailing comment on each rule lists the catalog
/// parameters it reads; fields outside the catalog (fragment offset,
/// sequence/ack numbers, PSH) are not tallied by [`param_usage_histogram`].
pub const BUILTIN_RULES: &str = r#"
# params 12, 2, 1
rule "land" high when tcp.syn and ip.src == ip.dst

# params 16, 17, 1
rule "smurf" high when icmp.type == 8 and icmp.code == 0
    and ip.dst in [255.255.255.255, 192.168.1.255]

# params 14, 1
rule "fraggle" high when udp.dport in [7, 19]
    and ip.dst in [255.255.255.255, 192.168.1.255]

# params 12, 11, 8
rule "syn-flood" high when
    count(tcp.syn and not tcp.ack, group by tcp.dport, window 10s) > 100

# params 13; covers both FIN and SYN+FIN probes, which carry no ACK number
rule "vulnerability-scan" medium when tcp.fin and tcp.ack_num == 0

# params 15, 14
rule "pingpong" medium when udp.sport in [7, 19] and udp.dport in [7, 19]

# params 9
rule "out-of-band-bug" medium when tcp.urg

# params 10; a forged reset guesses no acknowledgment
rule "brkill" high when tcp.rst and tcp.ack_num == 0

# params 11, 7; an ACK storm repeating one acknowledgment number
rule "tcp-session-hijacking" high when
    count(tcp.ack and not tcp.psh and tcp.sport > 1023, group by tcp.ack_num, window 1s) > 100

# params 16, 17, 4, 3; the first fragment of an oversized echo request
rule "ping-of-death" high when icmp.type == 8 and icmp.code == 0
    and ip.mf and ip.len >= 1000

# params 4
rule "ip-fragment-overlap" medium when ip.mf and ip.offset > 0 and ip.offset < 6

# params 18, 5
rule "bonk" medium when ip.proto == 17 and not ip.df and ip.offset > 0 and ip.offset < 6

# params 5
rule "oob-data-barf" medium when ip.df and ip.offset > 0

# params 6; options shorter than a timestamp option's 8-byte minimum
rule "ip-unaligned-timestamp" low when ip.options_len > 0 and ip.options_len < 8
"#;

/// Lone ACK with identical source and destination ports.
pub const ACK_SCAN_RULE: &str = r#"rule "ack-scan" medium when tcp.ack and not tcp.syn and not tcp.fin and not tcp.rst and not tcp.urg and not tcp.psh and tcp.sport == tcp.dport"#;

pub fn builtin_catalog() -> Vec<SignatureRule> {
    parse_rules(BUILTIN_RULES).expect("builtin rules parse")
}

pub fn ack_scan_rule() -> SignatureRule {
    parse_rules(ACK_SCAN_RULE).expect("builtin rule parses").remove(0)
}

/// Number of rules referencing each catalog parameter. Every parameter id
/// is present, including those no rule uses.
pub fn param_usage_histogram(rules: &[SignatureRule]) -> BTreeMap<ParamId, usize> {
    let mut hist: BTreeMap<ParamId, usize> = ParamId::all().map(|p| (p, 0)).collect();
    for r in rules {
        let mut ids: Vec<ParamId> = r.fields().into_iter().filter_map(|f| f.param_id()).collect();
        ids.sort();
        ids.dedup();
        for id in ids {
            *hist.entry(id).or_default() += 1;
        }
    }
    hist
}
