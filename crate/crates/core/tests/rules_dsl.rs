use std::net::Ipv4Addr;

use flowdim_core::rules::ast::{Cmp, CountExpr, Duration, DurationUnit, Expr, Field, FieldType, RuleKind, Severity, Value};
use flowdim_core::rules::{builtin_catalog, eval_expr, parse_rules, RuleErrorKind, SignatureRule};
use flowdim_core::synth::traffic::PacketSpec;
use flowdim_core::DecodedPacket;
use proptest::prelude::*;

fn fields_of(ft: FieldType) -> Vec<Field> {
    Field::ALL.into_iter().filter(|f| f.field_type() == ft).collect()
}

fn arb_addr() -> impl Strategy<Value = Ipv4Addr> {
    any::<u32>().prop_map(Ipv4Addr::from)
}

fn arb_compare() -> impl Strategy<Value = Expr> {
    let int_fields = fields_of(FieldType::Integer);
    let flag_fields = fields_of(FieldType::Flag);
    let addr_fields = fields_of(FieldType::Address);
    let ordered = prop::sample::select(vec![Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge]);
    let eq = prop::sample::select(vec![Cmp::Eq, Cmp::Ne]);
    let int_value = prop_oneof![
        (0u64..70_000).prop_map(Value::Int),
        prop::sample::select(int_fields.clone()).prop_map(Value::Field),
    ];
    prop_oneof![
        (prop::sample::select(int_fields.clone()), ordered, int_value)
            .prop_map(|(field, cmp, value)| Expr::Compare { field, cmp, value }),
        (prop::sample::select(int_fields), prop::collection::vec(0u64..70_000, 1..4)).prop_map(|(field, v)| {
            Expr::Compare {
                field,
                cmp: Cmp::In,
                value: Value::List(v.into_iter().map(Value::Int).collect()),
            }
        }),
        prop::sample::select(flag_fields.clone()).prop_map(Expr::Flag),
        (prop::sample::select(flag_fields), eq.clone(), 0u64..2)
            .prop_map(|(field, cmp, n)| Expr::Compare { field, cmp, value: Value::Int(n) }),
        (prop::sample::select(addr_fields.clone()), eq, arb_addr())
            .prop_map(|(field, cmp, a)| Expr::Compare { field, cmp, value: Value::Addr(a) }),
        (prop::sample::select(addr_fields), arb_addr(), 0u8..=32).prop_map(|(field, a, p)| Expr::Compare {
            field,
            cmp: Cmp::In,
            value: Value::Cidr(a, p),
        }),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    arb_compare().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|e| Expr::Not(Box::new(e))),
        ]
    })
}

fn arb_rule() -> impl Strategy<Value = SignatureRule> {
    let severity = prop::sample::select(vec![Severity::Low, Severity::Medium, Severity::High]);
    let unit = prop::sample::select(vec![DurationUnit::Seconds, DurationUnit::Minutes, DurationUnit::Hours]);
    let windowed = (arb_expr(), prop::sample::select(Field::ALL.to_vec()), 1u64..100, unit, 0u64..1000).prop_map(
        |(predicate, group_by, amount, unit, threshold)| {
            RuleKind::Windowed(CountExpr {
                predicate,
                group_by,
                window: Duration { amount, unit },
                threshold,
            })
        },
    );
    let kind = prop_oneof![arb_expr().prop_map(RuleKind::PerPacket), windowed];
    ("[a-z][a-z0-9 \"-]{0,12}", severity, kind).prop_map(|(name, severity, kind)| SignatureRule { name, severity, kind })
}

fn arb_packet() -> impl Strategy<Value = DecodedPacket> {
    let addr = prop::sample::select(vec![[10, 0, 0, 1], [10, 0, 0, 2], [192, 168, 1, 255], [255, 255, 255, 255]]);
    (0u8..5, addr.clone(), addr, any::<u16>(), any::<u16>(), any::<u16>(), 0usize..64).prop_map(
        |(kind, src, dst, a, b, bits, len)| {
            let spec = match kind {
                0 => PacketSpec::tcp(src, dst, a, b).flags(bits & 0x3f).seq(a as u32).ack(b as u32),
                1 => PacketSpec::udp(src, dst, a, b),
                2 => PacketSpec::icmp(src, dst, (a % 20) as u8, (b % 4) as u8),
                3 => PacketSpec::fragment(src, dst, 6, a % 200).mf(bits & 1 == 1),
                _ => PacketSpec::arp(),
            };
            spec.payload(len).build(1.0)
        },
    )
}

proptest! {
    #[test]
    fn display_parses_back(rule in arb_rule()) {
        let text = rule.to_string();
        let parsed = parse_rules(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(parsed.len(), 1);
        prop_assert_eq!(&parsed[0], &rule, "{}", text);
    }

    #[test]
    fn connectives_follow_boolean_algebra(a in arb_expr(), b in arb_expr(), pkt in arb_packet()) {
        let ea = eval_expr(&a, &pkt);
        let eb = eval_expr(&b, &pkt);
        prop_assert_eq!(eval_expr(&Expr::Not(Box::new(a.clone())), &pkt), !ea);
        prop_assert_eq!(eval_expr(&Expr::And(Box::new(a.clone()), Box::new(b.clone())), &pkt), ea && eb);
        prop_assert_eq!(eval_expr(&Expr::Or(Box::new(a), Box::new(b)), &pkt), ea || eb);
    }

    #[test]
    fn catalog_evaluates_any_packet(pkt in arb_packet()) {
        for r in builtin_catalog() {
            let _ = eval_expr(r.predicate(), &pkt);
        }
    }

    #[test]
    fn parser_never_panics(text in "[ -~\n]{0,80}") {
        let _ = parse_rules(&text);
    }
}

#[test]
fn absent_layer_compares_false_both_ways() {
    let udp = PacketSpec::udp([10, 0, 0, 1], [10, 0, 0, 2], 53, 53).build(0.0);
    let rules = parse_rules("rule \"a\" when tcp.dport == 80\nrule \"b\" when tcp.dport != 80").unwrap();
    assert!(!eval_expr(rules[0].predicate(), &udp));
    assert!(!eval_expr(rules[1].predicate(), &udp));
}

#[test]
fn catalog_prints_and_reparses() {
    let catalog = builtin_catalog();
    let text: Vec<String> = catalog.iter().map(|r| r.to_string()).collect();
    assert_eq!(parse_rules(&text.join("\n")).unwrap(), catalog);
}

#[test]
fn error_positions() {
    let e = parse_rules("rule \"x\" when\n  ip.source == 1").unwrap_err();
    assert_eq!((e.kind, e.line, e.col), (RuleErrorKind::UnknownField, 2, 3));
    let e = parse_rules("rule \"x\" when tcp.syn and").unwrap_err();
    assert_eq!(e.kind, RuleErrorKind::Syntax);
    let e = parse_rules("rule \"x\" when ip.src > 5").unwrap_err();
    assert_eq!((e.kind, e.line, e.col), (RuleErrorKind::TypeMismatch, 1, 24));
}
