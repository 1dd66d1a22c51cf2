use std::net::Ipv4Addr;

use super::ast::{Cmp, Expr, Field, RuleKind, SignatureRule, Value};
use crate::capture::DecodedPacket;

fn in_network(v: u64, net: Ipv4Addr, prefix: u8) -> bool {
    let mask = if prefix == 0 { 0 } else { u32::MAX << (32 - prefix) };
    (v as u32 & mask) == (u32::from(net) & mask)
}

/// Scalar right-hand side, resolved against the packet.
fn scalar(value: &Value, pkt: &DecodedPacket) -> Option<u64> {
    match value {
        Value::Int(n) => Some(*n),
        Value::Addr(a) => Some(u32::from(*a) as u64),
        Value::Field(f) => f.value(pkt),
        Value::Cidr(..) | Value::List(_) => None,
    }
}

fn matches_item(lhs: u64, item: &Value, pkt: &DecodedPacket) -> bool {
    match item {
        Value::Cidr(a, p) => in_network(lhs, *a, *p),
        Value::List(items) => items.iter().any(|i| matches_item(lhs, i, pkt)),
        v => scalar(v, pkt) == Some(lhs),
    }
}

fn compare(field: Field, cmp: Cmp, value: &Value, pkt: &DecodedPacket) -> bool {
    let Some(lhs) = field.value(pkt) else {
        return false;
    };
    match (cmp, value) {
        (Cmp::In | Cmp::Eq, Value::Cidr(..) | Value::List(_)) => matches_item(lhs, value, pkt),
        (Cmp::Ne, Value::Cidr(..) | Value::List(_)) => !matches_item(lhs, value, pkt),
        (_, v) => {
            let Some(rhs) = scalar(v, pkt) else {
                return false;
            };
            match cmp {
                Cmp::Eq | Cmp::In => lhs == rhs,
                Cmp::Ne => lhs != rhs,
                Cmp::Lt => lhs < rhs,
                Cmp::Le => lhs <= rhs,
                Cmp::Gt => lhs > rhs,
                Cmp::Ge => lhs >= rhs,
            }
        }
    }
}

/// Evaluates a boolean expression against one packet. Comparisons on fields
/// the packet does not carry are false; `count(...)` is never true here.
pub fn eval_expr(expr: &Expr, pkt: &DecodedPacket) -> bool {
    match expr {
        Expr::Or(a, b) => eval_expr(a, pkt) || eval_expr(b, pkt),
        Expr::And(a, b) => eval_expr(a, pkt) && eval_expr(b, pkt),
        Expr::Not(e) => !eval_expr(e, pkt),
        Expr::Flag(f) => f.value(pkt) == Some(1),
        Expr::Compare { field, cmp, value } => compare(*field, *cmp, value, pkt),
        Expr::Count(_) => false,
    }
}

/// Per-packet verdict. For a windowed rule this tests whether the packet is
/// one that would be counted.
pub fn eval_rule(rule: &SignatureRule, pkt: &DecodedPacket) -> bool {
    match &rule.kind {
        RuleKind::PerPacket(e) => eval_expr(e, pkt),
        RuleKind::Windowed(c) => eval_expr(&c.predicate, pkt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;
    use crate::synth::traffic::PacketSpec;

    fn rule(text: &str) -> SignatureRule {
        parse_rules(text).unwrap().remove(0)
    }

    #[test]
    fn land() {
        let r = rule(r#"rule "land" high when ip.src == ip.dst"#);
        let same = PacketSpec::tcp([10, 0, 0, 1], [10, 0, 0, 1], 80, 80).flags(0x02).build(0.0);
        let diff = PacketSpec::tcp([10, 0, 0, 1], [10, 0, 0, 2], 80, 80).flags(0x02).build(0.0);
        assert!(eval_rule(&r, &same));
        assert!(!eval_rule(&r, &diff));
    }

    #[test]
    fn absent_fields_are_false() {
        let udp = PacketSpec::udp([10, 0, 0, 1], [10, 0, 0, 2], 53, 53).build(0.0);
        assert!(!eval_rule(&rule(r#"rule "a" when tcp.sport == tcp.dport"#), &udp));
        assert!(!eval_rule(&rule(r#"rule "a" when tcp.sport != 1"#), &udp));
        assert!(eval_rule(&rule(r#"rule "a" when not tcp.syn"#), &udp));
        let arp = PacketSpec::arp().build(0.0);
        assert!(!eval_rule(&rule(r#"rule "a" when ip.dst in 0.0.0.0/0"#), &arp));
    }

    #[test]
    fn networks_and_lists() {
        let p = PacketSpec::udp([10, 1, 2, 3], [192, 168, 1, 255], 4000, 19).build(0.0);
        assert!(eval_rule(&rule(r#"rule "a" when ip.src in 10.0.0.0/8"#), &p));
        assert!(eval_rule(&rule(r#"rule "a" when ip.src == 10.1.0.0/16"#), &p));
        assert!(!eval_rule(&rule(r#"rule "a" when ip.src != 10.0.0.0/8"#), &p));
        assert!(eval_rule(&rule(r#"rule "a" when ip.src in 0.0.0.0/0"#), &p));
        assert!(eval_rule(&rule(r#"rule "a" when udp.dport in [7, 19]"#), &p));
        assert!(eval_rule(
            &rule(r#"rule "a" when ip.dst in [255.255.255.255, 192.168.1.0/24]"#),
            &p
        ));
        assert!(!eval_rule(&rule(r#"rule "a" when udp.sport in [7, 19]"#), &p));
        assert!(eval_rule(&rule(r#"rule "a" when udp.sport >= 4000 and udp.sport < 4001"#), &p));
    }

    #[test]
    fn flag_equality_forms() {
        let p = PacketSpec::tcp([1, 1, 1, 1], [2, 2, 2, 2], 1, 2).flags(0x12).build(0.0);
        assert!(eval_rule(&rule(r#"rule "a" when tcp.syn == 1 and tcp.fin == 0"#), &p));
        assert!(eval_rule(&rule(r#"rule "a" when tcp.syn == tcp.ack"#), &p));
        assert!(!eval_rule(&rule(r#"rule "a" when tcp.syn != tcp.ack"#), &p));
    }
}
