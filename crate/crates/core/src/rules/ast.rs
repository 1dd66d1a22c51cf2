use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::capture::DecodedPacket;
use crate::params::ParamId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Field {
    IpSrc,
    IpDst,
    IpLen,
    IpMf,
    IpDf,
    IpOffset,
    IpOptionsLen,
    IpProto,
    TcpSport,
    TcpDport,
    TcpSeq,
    TcpAckNum,
    TcpUrg,
    TcpAck,
    TcpPsh,
    TcpRst,
    TcpSyn,
    TcpFin,
    UdpSport,
    UdpDport,
    UdpLen,
    IcmpType,
    IcmpCode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldType {
    Address,
    Flag,
    Integer,
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldType::Address => "address",
            FieldType::Flag => "flag",
            FieldType::Integer => "integer",
        })
    }
}

impl Field {
    pub const ALL: [Field; 23] = [
        Field::IpSrc,
        Field::IpDst,
        Field::IpLen,
        Field::IpMf,
        Field::IpDf,
        Field::IpOffset,
        Field::IpOptionsLen,
        Field::IpProto,
        Field::TcpSport,
        Field::TcpDport,
        Field::TcpSeq,
        Field::TcpAckNum,
        Field::TcpUrg,
        Field::TcpAck,
        Field::TcpPsh,
        Field::TcpRst,
        Field::TcpSyn,
        Field::TcpFin,
        Field::UdpSport,
        Field::UdpDport,
        Field::UdpLen,
        Field::IcmpType,
        Field::IcmpCode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::IpSrc => "ip.src",
            Field::IpDst => "ip.dst",
            Field::IpLen => "ip.len",
            Field::IpMf => "ip.mf",
            Field::IpDf => "ip.df",
            Field::IpOffset => "ip.offset",
            Field::IpOptionsLen => "ip.options_len",
            Field::IpProto => "ip.proto",
            Field::TcpSport => "tcp.sport",
            Field::TcpDport => "tcp.dport",
            Field::TcpSeq => "tcp.seq",
            Field::TcpAckNum => "tcp.ack_num",
            Field::TcpUrg => "tcp.urg",
            Field::TcpAck => "tcp.ack",
            Field::TcpPsh => "tcp.psh",
            Field::TcpRst => "tcp.rst",
            Field::TcpSyn => "tcp.syn",
            Field::TcpFin => "tcp.fin",
            Field::UdpSport => "udp.sport",
            Field::UdpDport => "udp.dport",
            Field::UdpLen => "udp.len",
            Field::IcmpType => "icmp.type",
            Field::IcmpCode => "icmp.code",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn field_type(self) -> FieldType {
        match self {
            Field::IpSrc | Field::IpDst => FieldType::Address,
            Field::IpMf
            | Field::IpDf
            | Field::TcpUrg
            | Field::TcpAck
            | Field::TcpPsh
            | Field::TcpRst
            | Field::TcpSyn
            | Field::TcpFin => FieldType::Flag,
            _ => FieldType::Integer,
        }
    }

    /// The catalog parameter this field reads, if it is one.
    pub fn param_id(self) -> Option<ParamId> {
        Some(match self {
            Field::IpDst => ParamId::DST_ADDR,
            Field::IpSrc => ParamId::SRC_ADDR,
            Field::IpLen => ParamId::IP_LENGTH,
            Field::IpMf => ParamId::MF_FLAG,
            Field::IpDf => ParamId::DF_FLAG,
            Field::IpOptionsLen => ParamId::IP_OPTIONS,
            Field::TcpSport => ParamId::TCP_SRC_PORT,
            Field::TcpDport => ParamId::TCP_DST_PORT,
            Field::TcpUrg => ParamId::URG_FLAG,
            Field::TcpRst => ParamId::RST_FLAG,
            Field::TcpAck => ParamId::ACK_FLAG,
            Field::TcpSyn => ParamId::SYN_FLAG,
            Field::TcpFin => ParamId::FIN_FLAG,
            Field::UdpDport => ParamId::UDP_DST_PORT,
            Field::UdpSport => ParamId::UDP_SRC_PORT,
            Field::IcmpType => ParamId::ICMP_TYPE,
            Field::IcmpCode => ParamId::ICMP_CODE,
            Field::IpProto => ParamId::PROTOCOL,
            Field::IpOffset | Field::TcpSeq | Field::TcpAckNum | Field::TcpPsh | Field::UdpLen => {
                return None
            }
        })
    }

    /// Field value for `pkt`, or `None` when the packet lacks that layer.
    pub fn value(self, pkt: &DecodedPacket) -> Option<u64> {
        let ip = pkt.ip.as_ref()?;
        let b = |v: bool| v as u64;
        match self {
            Field::IpSrc => Some(u32::from(ip.src_addr) as u64),
            Field::IpDst => Some(u32::from(ip.dst_addr) as u64),
            Field::IpLen => Some(ip.total_length as u64),
            Field::IpMf => Some(b(ip.mf_flag)),
            Field::IpDf => Some(b(ip.df_flag)),
            Field::IpOffset => Some(ip.fragment_offset as u64),
            Field::IpOptionsLen => Some(ip.options.len() as u64),
            Field::IpProto => Some(ip.protocol_id as u64),
            Field::TcpSport
            | Field::TcpDport
            | Field::TcpSeq
            | Field::TcpAckNum
            | Field::TcpUrg
            | Field::TcpAck
            | Field::TcpPsh
            | Field::TcpRst
            | Field::TcpSyn
            | Field::TcpFin => {
                let t = pkt.tcp()?;
                Some(match self {
                    Field::TcpSport => t.src_port as u64,
                    Field::TcpDport => t.dst_port as u64,
                    Field::TcpSeq => t.seq as u64,
                    Field::TcpAckNum => t.ack_num as u64,
                    Field::TcpUrg => b(t.flags.urg),
                    Field::TcpAck => b(t.flags.ack),
                    Field::TcpPsh => b(t.flags.psh),
                    Field::TcpRst => b(t.flags.rst),
                    Field::TcpSyn => b(t.flags.syn),
                    _ => b(t.flags.fin),
                })
            }
            Field::UdpSport | Field::UdpDport | Field::UdpLen => {
                let u = pkt.udp()?;
                Some(match self {
                    Field::UdpSport => u.src_port as u64,
                    Field::UdpDport => u.dst_port as u64,
                    _ => u.length as u64,
                })
            }
            Field::IcmpType | Field::IcmpCode => {
                let i = pkt.icmp()?;
                Some(if self == Field::IcmpType {
                    i.icmp_type as u64
                } else {
                    i.code as u64
                })
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::In => "in",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    Int(u64),
    Addr(Ipv4Addr),
    Cidr(Ipv4Addr, u8),
    List(Vec<Value>),
    Field(Field),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Addr(a) => write!(f, "{a}"),
            Value::Cidr(a, p) => write!(f, "{a}/{p}"),
            Value::Field(fl) => write!(f, "{fl}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duration {
    pub amount: u64,
    pub unit: DurationUnit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationUnit {
    Seconds,
    Minutes,
    Hours,
}

impl Duration {
    pub fn seconds(amount: u64) -> Self {
        Duration {
            amount,
            unit: DurationUnit::Seconds,
        }
    }

    pub fn as_micros(&self) -> u64 {
        let scale = match self.unit {
            DurationUnit::Seconds => 1,
            DurationUnit::Minutes => 60,
            DurationUnit::Hours => 3600,
        };
        self.amount * scale * 1_000_000
    }

    pub fn as_secs_f64(&self) -> f64 {
        self.as_micros() as f64 * 1e-6
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = match self.unit {
            DurationUnit::Seconds => 's',
            DurationUnit::Minutes => 'm',
            DurationUnit::Hours => 'h',
        };
        write!(f, "{}{}", self.amount, u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    /// Bare flag field, shorthand for `field == 1`.
    Flag(Field),
    Compare { field: Field, cmp: Cmp, value: Value },
    Count(Box<CountExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountExpr {
    pub predicate: Expr,
    pub group_by: Field,
    pub window: Duration,
    /// Alert when the windowed count is strictly greater than this.
    pub threshold: u64,
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            _ => 4,
        }
    }

    pub fn contains_count(&self) -> bool {
        match self {
            Expr::Or(a, b) | Expr::And(a, b) => a.contains_count() || b.contains_count(),
            Expr::Not(e) => e.contains_count(),
            Expr::Count(_) => true,
            _ => false,
        }
    }

    /// Every field the expression mentions, including right-hand fields and
    /// count grouping keys.
    pub fn fields(&self) -> BTreeSet<Field> {
        let mut out = BTreeSet::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields(&self, out: &mut BTreeSet<Field>) {
        match self {
            Expr::Or(a, b) | Expr::And(a, b) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
            Expr::Not(e) => e.collect_fields(out),
            Expr::Flag(f) => {
                out.insert(*f);
            }
            Expr::Compare { field, value, .. } => {
                out.insert(*field);
                if let Value::Field(g) = value {
                    out.insert(*g);
                }
            }
            Expr::Count(c) => {
                c.predicate.collect_fields(out);
                out.insert(c.group_by);
            }
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, child: &Expr, right: bool) -> fmt::Result {
        let p = self.precedence();
        let cp = child.precedence();
        let paren = cp < p || (right && cp == p && cp <= 2);
        if paren {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(a, b) | Expr::And(a, b) => {
                let op = if matches!(self, Expr::Or(..)) { "or" } else { "and" };
                self.fmt_child(f, a, false)?;
                write!(f, " {op} ")?;
                self.fmt_child(f, b, true)
            }
            Expr::Not(e) => {
                f.write_str("not ")?;
                self.fmt_child(f, e, false)
            }
            Expr::Flag(fl) => write!(f, "{fl}"),
            Expr::Compare { field, cmp, value } => write!(f, "{field} {} {value}", cmp.symbol()),
            Expr::Count(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for CountExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "count({}, group by {}, window {}) > {}",
            self.predicate, self.group_by, self.window, self.threshold
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    #[default]
    Medium,
    High,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    PerPacket(Expr),
    Windowed(CountExpr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureRule {
    pub name: String,
    pub severity: Severity,
    pub kind: RuleKind,
}

impl SignatureRule {
    pub fn is_windowed(&self) -> bool {
        matches!(self.kind, RuleKind::Windowed(_))
    }

    /// The per-packet predicate; for a windowed rule, the counted predicate.
    pub fn predicate(&self) -> &Expr {
        match &self.kind {
            RuleKind::PerPacket(e) => e,
            RuleKind::Windowed(c) => &c.predicate,
        }
    }

    pub fn fields(&self) -> BTreeSet<Field> {
        match &self.kind {
            RuleKind::PerPacket(e) => e.fields(),
            RuleKind::Windowed(c) => {
                let mut s = c.predicate.fields();
                s.insert(c.group_by);
                s
            }
        }
    }
}

impl fmt::Display for SignatureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let escaped = self.name.replace('\\', "\\\\").replace('"', "\\\"");
        write!(f, "rule \"{escaped}\" {} when ", self.severity)?;
        match &self.kind {
            RuleKind::PerPacket(e) => write!(f, "{e}"),
            RuleKind::Windowed(c) => write!(f, "{c}"),
        }
    }
}
