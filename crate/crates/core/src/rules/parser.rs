//! Lexer and recursive-descent parser for the rule language.
//!
//! ```text
//! rule      := 'rule' STRING severity? 'when' expr
//! expr      := expr 'or' expr | expr 'and' expr | 'not' expr | '(' expr ')' | atom
//! atom      := FIELD CMP value | FIELD | countexpr
//! countexpr := 'count(' expr ', group by' FIELD ', window' DURATION ')' CMP INT
//! ```
//!
//! `not` binds tighter than `and`, which binds tighter than `or`; both binary
//! operators associate to the left. `#` starts a comment running to the end
//! of the line.

use std::net::Ipv4Addr;

use super::ast::{
    Cmp, CountExpr, Duration, DurationUnit, Expr, Field, FieldType, RuleKind, Severity,
    SignatureRule, Value,
};
use super::{RuleError, RuleErrorKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    Addr(Ipv4Addr),
    Cidr(Ipv4Addr, u8),
    Dur(Duration),
    Cmp(Cmp),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Addr(a) => format!("address {a}"),
            Tok::Cidr(a, p) => format!("network {a}/{p}"),
            Tok::Dur(d) => format!("duration {d}"),
            Tok::Cmp(c) => format!("'{}'", c.symbol()),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(kind: RuleErrorKind, line: usize, col: usize, message: impl Into<String>) -> RuleError {
    RuleError {
        kind,
        line,
        col,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, RuleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' | ')' | '[' | ']' | ',' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    _ => Tok::Comma,
                };
                out.push(Spanned { tok, line: tl, col: tc });
                advance(1, &mut i, &mut col);
            }
            '=' | '!' | '<' | '>' => {
                let next = chars.get(i + 1).copied();
                let (cmp, n) = match (c, next) {
                    ('=', Some('=')) => (Cmp::Eq, 2),
                    ('!', Some('=')) => (Cmp::Ne, 2),
                    ('<', Some('=')) => (Cmp::Le, 2),
                    ('>', Some('=')) => (Cmp::Ge, 2),
                    ('<', _) => (Cmp::Lt, 1),
                    ('>', _) => (Cmp::Gt, 1),
                    _ => {
                        return Err(err(
                            RuleErrorKind::Syntax,
                            tl,
                            tc,
                            format!("unexpected character '{c}'"),
                        ))
                    }
                };
                out.push(Spanned { tok: Tok::Cmp(cmp), line: tl, col: tc });
                advance(n, &mut i, &mut col);
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(err(RuleErrorKind::Syntax, tl, tc, "unterminated string"))
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => {
                                    return Err(err(
                                        RuleErrorKind::Syntax,
                                        tl,
                                        tc + (j - i),
                                        "bad escape in string",
                                    ))
                                }
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line: tl, col: tc });
                advance(j + 1 - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let bad = |msg: String| err(RuleErrorKind::Syntax, tl, tc, msg);
                let tok = if word.contains('.') {
                    let addr: Ipv4Addr = word
                        .parse()
                        .map_err(|_| bad(format!("invalid IPv4 address '{word}'")))?;
                    if chars.get(j) == Some(&'/') {
                        let mut k = j + 1;
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        let prefix: String = chars[j + 1..k].iter().collect();
                        let p: u8 = prefix
                            .parse()
                            .ok()
                            .filter(|p| *p <= 32)
                            .ok_or_else(|| bad(format!("invalid prefix length '/{prefix}'")))?;
                        j = k;
                        Tok::Cidr(addr, p)
                    } else {
                        Tok::Addr(addr)
                    }
                } else {
                    let n: u64 = word
                        .parse()
                        .map_err(|_| bad(format!("integer '{word}' out of range")))?;
                    let unit = match chars.get(j) {
                        Some('s') => Some(DurationUnit::Seconds),
                        Some('m') => Some(DurationUnit::Minutes),
                        Some('h') => Some(DurationUnit::Hours),
                        _ => None,
                    };
                    match unit {
                        Some(unit)
                            if !chars
                                .get(j + 1)
                                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') =>
                        {
                            j += 1;
                            Tok::Dur(Duration { amount: n, unit })
                        }
                        _ => Tok::Int(n),
                    }
                };
                if chars
                    .get(j)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '.')
                {
                    return Err(bad(format!("malformed literal starting '{word}'")));
                }
                out.push(Spanned { tok, line: tl, col: tc });
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '.')
                {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                out.push(Spanned { tok: Tok::Ident(word), line: tl, col: tc });
                advance(j - i, &mut i, &mut col);
            }
            other => {
                return Err(err(
                    RuleErrorKind::Syntax,
                    tl,
                    tc,
                    format!("unexpected character '{other}'"),
                ))
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn syntax(&self, at: &Spanned, msg: impl Into<String>) -> RuleError {
        err(RuleErrorKind::Syntax, at.line, at.col, msg)
    }

    fn expected(&self, what: &str) -> RuleError {
        let t = self.peek();
        self.syntax(t, format!("expected {what}, found {}", t.tok.describe()))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), RuleError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("'{kw}'")))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), RuleError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&tok.describe()))
        }
    }

    fn rules(&mut self) -> Result<Vec<SignatureRule>, RuleError> {
        let mut out = Vec::new();
        while self.peek().tok != Tok::Eof {
            out.push(self.rule()?);
        }
        Ok(out)
    }

    fn rule(&mut self) -> Result<SignatureRule, RuleError> {
        self.expect_keyword("rule")?;
        let name = match self.bump() {
            Spanned { tok: Tok::Str(s), .. } => s,
            t => return Err(self.syntax(&t, format!("expected rule name string, found {}", t.tok.describe()))),
        };
        let severity = match &self.peek().tok {
            Tok::Ident(s) if s == "low" => Some(Severity::Low),
            Tok::Ident(s) if s == "medium" => Some(Severity::Medium),
            Tok::Ident(s) if s == "high" => Some(Severity::High),
            _ => None,
        };
        if severity.is_some() {
            self.bump();
        }
        self.expect_keyword("when")?;
        let start = self.peek().clone();
        let expr = self.expr()?;
        if !(self.at_keyword("rule") || self.peek().tok == Tok::Eof) {
            return Err(self.expected("'and', 'or' or the next rule"));
        }
        let kind = match expr {
            Expr::Count(c) => RuleKind::Windowed(*c),
            e if e.contains_count() => {
                return Err(self.syntax(
                    &start,
                    "count(...) must be the entire predicate of a windowed rule",
                ))
            }
            e => RuleKind::PerPacket(e),
        };
        Ok(SignatureRule {
            name,
            severity: severity.unwrap_or_default(),
            kind,
        })
    }

    fn expr(&mut self) -> Result<Expr, RuleError> {
        let mut lhs = self.and_expr()?;
        while self.at_keyword("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, RuleError> {
        let mut lhs = self.unary()?;
        while self.at_keyword("and") {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, RuleError> {
        if self.at_keyword("not") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        if self.at_keyword("count") {
            return self.count();
        }
        self.atom()
    }

    fn field(&mut self) -> Result<(Field, Spanned), RuleError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(name) => match Field::from_name(name) {
                Some(f) => Ok((f, t)),
                None => Err(err(
                    RuleErrorKind::UnknownField,
                    t.line,
                    t.col,
                    format!("unknown field '{name}'"),
                )),
            },
            other => Err(self.syntax(&t, format!("expected a field name, found {}", other.describe()))),
        }
    }

    fn count(&mut self) -> Result<Expr, RuleError> {
        let at = self.bump();
        self.expect(Tok::LParen)?;
        let predicate = self.expr()?;
        if predicate.contains_count() {
            return Err(self.syntax(&at, "count(...) cannot be nested"));
        }
        self.expect(Tok::Comma)?;
        self.expect_keyword("group")?;
        self.expect_keyword("by")?;
        let (group_by, _) = self.field()?;
        self.expect(Tok::Comma)?;
        self.expect_keyword("window")?;
        let window = match self.bump() {
            Spanned { tok: Tok::Dur(d), .. } if d.amount > 0 => d,
            t => {
                return Err(self.syntax(
                    &t,
                    format!("expected a positive duration such as 10s, found {}", t.tok.describe()),
                ))
            }
        };
        self.expect(Tok::RParen)?;
        let cmp_tok = self.bump();
        let cmp = match cmp_tok.tok {
            Tok::Cmp(c @ (Cmp::Gt | Cmp::Ge)) => c,
            ref t => {
                return Err(self.syntax(
                    &cmp_tok,
                    format!("count(...) must be compared with '>' or '>=', found {}", t.describe()),
                ))
            }
        };
        let n_tok = self.bump();
        let n = match n_tok.tok {
            Tok::Int(n) => n,
            ref t => return Err(self.syntax(&n_tok, format!("expected an integer threshold, found {}", t.describe()))),
        };
        if cmp == Cmp::Ge && n == 0 {
            return Err(self.syntax(&n_tok, "count(...) >= 0 is always true"));
        }
        let threshold = if cmp == Cmp::Ge { n - 1 } else { n };
        Ok(Expr::Count(Box::new(CountExpr {
            predicate,
            group_by,
            window,
            threshold,
        })))
    }

    fn atom(&mut self) -> Result<Expr, RuleError> {
        let (field, ftok) = self.field()?;
        let cmp = match self.peek().tok {
            Tok::Cmp(c) => {
                self.bump();
                c
            }
            Tok::Ident(ref s) if s == "in" => {
                self.bump();
                Cmp::In
            }
            _ => {
                if field.field_type() == FieldType::Flag {
                    return Ok(Expr::Flag(field));
                }
                return Err(err(
                    RuleErrorKind::TypeMismatch,
                    ftok.line,
                    ftok.col,
                    format!("{field} is an {} field and needs a comparison", field.field_type()),
                ));
            }
        };
        let vtok = self.peek().clone();
        let value = self.value()?;
        check_types(field, cmp, &value).map_err(|m| err(RuleErrorKind::TypeMismatch, vtok.line, vtok.col, m))?;
        Ok(Expr::Compare { field, cmp, value })
    }

    fn value(&mut self) -> Result<Value, RuleError> {
        let t = self.bump();
        match t.tok {
            Tok::Int(n) => Ok(Value::Int(n)),
            Tok::Addr(a) => Ok(Value::Addr(a)),
            Tok::Cidr(a, p) => Ok(Value::Cidr(a, p)),
            Tok::Ident(ref name) => match Field::from_name(name) {
                Some(f) => Ok(Value::Field(f)),
                None => Err(err(
                    RuleErrorKind::UnknownField,
                    t.line,
                    t.col,
                    format!("unknown field '{name}'"),
                )),
            },
            Tok::LBracket => {
                let mut items = vec![self.value()?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    items.push(self.value()?);
                }
                self.expect(Tok::RBracket)?;
                if let Some(v) = items.iter().find(|v| matches!(v, Value::List(_) | Value::Field(_))) {
                    return Err(self.syntax(&t, format!("list items must be literals, found {v}")));
                }
                Ok(Value::List(items))
            }
            ref other => Err(self.syntax(&t, format!("expected a value, found {}", other.describe()))),
        }
    }
}

fn check_types(field: Field, cmp: Cmp, value: &Value) -> Result<(), String> {
    let ft = field.field_type();
    let mismatch = |what: &str| Err(format!("cannot compare {ft} field {field} with {what}"));
    match value {
        Value::List(items) => {
            if cmp != Cmp::In {
                return Err(format!("a list needs 'in', not '{}'", cmp.symbol()));
            }
            items.iter().try_for_each(|v| check_types(field, Cmp::Eq, v))
        }
        _ if cmp == Cmp::In && !matches!(value, Value::Cidr(..)) => {
            Err("'in' needs a list or a network".to_string())
        }
        Value::Int(n) => match ft {
            FieldType::Integer => Ok(()),
            FieldType::Flag if matches!(cmp, Cmp::Eq | Cmp::Ne) && *n <= 1 => Ok(()),
            FieldType::Flag => Err(format!("flag {field} can only be compared with 0 or 1 using == or !=")),
            FieldType::Address => mismatch("an integer"),
        },
        Value::Addr(_) => match ft {
            FieldType::Address => Ok(()),
            _ => mismatch("an address"),
        },
        Value::Cidr(..) => match ft {
            FieldType::Address if matches!(cmp, Cmp::Eq | Cmp::Ne | Cmp::In) => Ok(()),
            FieldType::Address => Err(format!("a network only supports ==, != and in, not '{}'", cmp.symbol())),
            _ => mismatch("a network"),
        },
        Value::Field(g) => {
            if g.field_type() != ft {
                return mismatch(&format!("{} field {g}", g.field_type()));
            }
            if ft == FieldType::Flag && !matches!(cmp, Cmp::Eq | Cmp::Ne) {
                return Err("flags can only be compared with == or !=".into());
            }
            Ok(())
        }
    }
}

/// Parses a rule file.
pub fn parse_rules(text: &str) -> Result<Vec<SignatureRule>, RuleError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.rules()
}
