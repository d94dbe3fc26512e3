//! Concrete syntax for formulas of both layers.
//!
//! ```text
//! outer := "true" | task | "!" outer | outer "&&" outer | outer "||" outer
//!        | "F[" int "," int "]" outer | "G[" int "," int "]" outer
//!        | outer "U[" int "," int "]" outer | "(" outer ")"
//! task  := "<" inner "," ident "," int ">"
//! inner := same connectives over atoms
//! atom  := "in(" ident ")" | linexpr (">=" | "<=") number
//!        | "disk(" number "," number "," number ")"
//!        | "outside_disk(" number "," number "," number ")"
//! ```
//!
//! Binding strength, tightest first: prefix operators (`!`, `F`, `G`), `U`,
//! `&&`, `||`. `U` does not associate, so chains need parentheses.
//! `in(label)` is expanded through the region map at parse time, so
//! [`print_formula`] emits the expanded predicates.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ast::{Formula, InnerFormula, Interval, OuterFormula, Predicate, Task};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// Byte offset into the input.
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    Comma,
    Bang,
    AndAnd,
    OrOr,
    Plus,
    Minus,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::AndAnd => f.write_str("`&&`"),
            Tok::OrOr => f.write_str("`||`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut line_start = 0;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let pos = Pos {
            line,
            column: src[line_start..i].chars().count() + 1,
            offset: i,
        };
        let c = bytes[i];
        let two = |a: u8, b: u8| c == a && bytes.get(i + 1) == Some(&b);
        let (tok, len) = match c {
            b'\n' => {
                line += 1;
                line_start = i + 1;
                i += 1;
                continue;
            }
            _ if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            b'(' => (Tok::LParen, 1),
            b')' => (Tok::RParen, 1),
            b'[' => (Tok::LBracket, 1),
            b']' => (Tok::RBracket, 1),
            b',' => (Tok::Comma, 1),
            b'+' => (Tok::Plus, 1),
            b'-' => (Tok::Minus, 1),
            b'*' => (Tok::Star, 1),
            b'!' => (Tok::Bang, 1),
            _ if two(b'<', b'=') => (Tok::Le, 2),
            _ if two(b'>', b'=') => (Tok::Ge, 2),
            _ if two(b'&', b'&') => (Tok::AndAnd, 2),
            _ if two(b'|', b'|') => (Tok::OrOr, 2),
            b'<' => (Tok::Lt, 1),
            b'>' => (Tok::Gt, 1),
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                let len = bytes[i..]
                    .iter()
                    .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_')
                    .count();
                (Tok::Ident(src[i..i + len].to_string()), len)
            }
            _ if c.is_ascii_digit() || c == b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                (Tok::Number(src[i..j].to_string()), j - i)
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(ParseError {
                    line: pos.line,
                    column: pos.column,
                    offset: pos.offset,
                    expected: "a token".into(),
                    found: format!("`{ch}`"),
                });
            }
        };
        out.push((tok, pos));
        i += len;
    }
    let end = Pos {
        line,
        column: src[line_start..].chars().count() + 1,
        offset: src.len(),
    };
    out.push((Tok::Eof, end));
    Ok(out)
}

type PResult<T> = Result<T, ParseError>;

struct Parser<'r> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    regions: &'r BTreeMap<String, InnerFormula>,
}

impl<'r> Parser<'r> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let (tok, pos) = &self.toks[self.at];
        ParseError {
            line: pos.line,
            column: pos.column,
            offset: pos.offset,
            expected: expected.into(),
            found: tok.to_string(),
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(t.to_string()))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> PResult<usize> {
        match self.peek() {
            Tok::Number(s) => match s.parse::<usize>() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => Err(self.error("a nonnegative integer")),
            },
            _ => Err(self.error("a nonnegative integer")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        match self.peek() {
            Tok::Number(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    self.bump();
                    Ok(if neg { -v } else { v })
                }
                _ => Err(self.error("a finite number")),
            },
            _ => Err(self.error("a number")),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn interval(&mut self) -> PResult<Interval> {
        self.expect(Tok::LBracket)?;
        let a = self.integer()?;
        self.expect(Tok::Comma)?;
        let b_at = self.at;
        let b = self.integer()?;
        if b < a {
            self.at = b_at;
            return Err(self.error(format!("an interval end >= {a}")));
        }
        self.expect(Tok::RBracket)?;
        Ok(Interval { a, b })
    }

    fn is_temporal(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name) && *self.peek2() == Tok::LBracket
    }

    fn or<L>(&mut self, atom: fn(&mut Self) -> PResult<Formula<L>>) -> PResult<Formula<L>> {
        let mut parts = vec![self.and(atom)?];
        while self.eat(&Tok::OrOr) {
            parts.push(self.and(atom)?);
        }
        Ok(Formula::or(parts))
    }

    fn and<L>(&mut self, atom: fn(&mut Self) -> PResult<Formula<L>>) -> PResult<Formula<L>> {
        let mut parts = vec![self.until(atom)?];
        while self.eat(&Tok::AndAnd) {
            parts.push(self.until(atom)?);
        }
        Ok(Formula::and(parts))
    }

    fn until<L>(&mut self, atom: fn(&mut Self) -> PResult<Formula<L>>) -> PResult<Formula<L>> {
        let left = self.unary(atom)?;
        if self.is_temporal("U") {
            self.bump();
            let interval = self.interval()?;
            let right = self.unary(atom)?;
            if self.is_temporal("U") {
                return Err(self.error("parentheses around a chained `U`"));
            }
            return Ok(Formula::Until {
                left: Box::new(left),
                right: Box::new(right),
                interval,
            });
        }
        Ok(left)
    }

    fn unary<L>(&mut self, atom: fn(&mut Self) -> PResult<Formula<L>>) -> PResult<Formula<L>> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::Not(Box::new(self.unary(atom)?)));
        }
        for (name, ctor) in [
            ("F", Formula::Eventually as fn(Box<Formula<L>>, Interval) -> Formula<L>),
            ("G", Formula::Always),
        ] {
            if self.is_temporal(name) {
                self.bump();
                let i = self.interval()?;
                return Ok(ctor(Box::new(self.unary(atom)?), i));
            }
        }
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let f = self.or(atom)?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            _ => atom(self),
        }
    }

    fn task(&mut self) -> PResult<OuterFormula> {
        if *self.peek() != Tok::Lt {
            return Err(self.error("`true`, `!`, `(`, `F[`, `G[` or a task `<...>`"));
        }
        self.bump();
        let inner = self.or(Self::inner_atom)?;
        self.expect(Tok::Comma)?;
        let capability = self.ident()?;
        self.expect(Tok::Comma)?;
        let count_at = self.at;
        let count = self.integer()?;
        if count == 0 {
            self.at = count_at;
            return Err(self.error("a positive task count"));
        }
        self.expect(Tok::Gt)?;
        Ok(Formula::Atom(Task {
            inner,
            capability,
            count,
        }))
    }

    fn inner_atom(&mut self) -> PResult<InnerFormula> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "in" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let label_at = self.at;
                let label = self.ident()?;
                let Some(region) = self.regions.get(&label) else {
                    self.at = label_at;
                    return Err(self.error("a known region label"));
                };
                let region = region.clone();
                self.expect(Tok::RParen)?;
                Ok(region)
            }
            Tok::Ident(s) if (s == "disk" || s == "outside_disk") && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let cx = self.number()?;
                self.expect(Tok::Comma)?;
                let cy = self.number()?;
                self.expect(Tok::Comma)?;
                let r_at = self.at;
                let r = self.number()?;
                if r <= 0.0 {
                    self.at = r_at;
                    return Err(self.error("a positive radius"));
                }
                self.expect(Tok::RParen)?;
                Ok(Formula::Atom(Predicate::circle([cx, cy], r, s == "disk")))
            }
            _ => self.linear_atom(),
        }
    }

    /// `linexpr (>=|<=) number`, normalized to `normal · s + offset >= 0`.
    fn linear_atom(&mut self) -> PResult<InnerFormula> {
        let start = self.at;
        let mut coef = [0.0_f64; 2];
        let mut constant = 0.0_f64;
        let mut first = true;
        loop {
            let sign = if first {
                1.0
            } else if self.eat(&Tok::Plus) {
                1.0
            } else if self.eat(&Tok::Minus) {
                -1.0
            } else {
                break;
            };
            first = false;
            let (k, var) = self.term()?;
            match var {
                Some(v) => coef[v] += sign * k,
                None => constant += sign * k,
            }
        }
        let upper = match self.peek() {
            Tok::Ge => false,
            Tok::Le => true,
            _ => return Err(self.error("`>=` or `<=`")),
        };
        self.bump();
        let rhs = self.number()?;
        if coef == [0.0, 0.0] {
            self.at = start;
            return Err(self.error("a linear expression in x and y"));
        }
        let (normal, offset) = if upper {
            ([-coef[0], -coef[1]], rhs - constant)
        } else {
            (coef, constant - rhs)
        };
        Ok(Formula::Atom(Predicate::HalfPlane { normal, offset }))
    }

    /// `[number "*"] var | number`, with an optional leading sign.
    fn term(&mut self) -> PResult<(f64, Option<usize>)> {
        let var_index = |s: &str| match s {
            "x" => Some(0),
            "y" => Some(1),
            _ => None,
        };
        if let Tok::Ident(s) = self.peek() {
            if let Some(v) = var_index(s) {
                self.bump();
                return Ok((1.0, Some(v)));
            }
            return Err(self.error("an atom (`in(..)`, `disk(..)` or a linear constraint over x, y)"));
        }
        let neg = self.eat(&Tok::Minus);
        if let Tok::Ident(s) = self.peek() {
            if let Some(v) = var_index(s) {
                self.bump();
                return Ok((if neg { -1.0 } else { 1.0 }, Some(v)));
            }
        }
        let k = self.number()?;
        let k = if neg { -k } else { k };
        if self.eat(&Tok::Star) {
            match self.peek() {
                Tok::Ident(s) if var_index(s).is_some() => {
                    let v = var_index(s);
                    self.bump();
                    Ok((k, v))
                }
                _ => Err(self.error("`x` or `y`")),
            }
        } else {
            Ok((k, None))
        }
    }
}

/// Parses an outer-layer formula. `region_map` resolves `in(label)` atoms.
pub fn parse_formula(
    text: &str,
    region_map: &BTreeMap<String, InnerFormula>,
) -> Result<OuterFormula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        regions: region_map,
    };
    let f = p.or(Parser::task)?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("`&&`, `||`, `U[` or end of input"));
    }
    Ok(f)
}

/// Parses an inner-layer (single trajectory) formula.
pub fn parse_inner(
    text: &str,
    region_map: &BTreeMap<String, InnerFormula>,
) -> Result<InnerFormula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        regions: region_map,
    };
    let f = p.or(Parser::inner_atom)?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("`&&`, `||`, `U[` or end of input"));
    }
    Ok(f)
}

// Printing levels: 0 `||`, 1 `&&`, 2 `U`, 3 prefix/primary.
fn level<L>(f: &Formula<L>) -> u8 {
    match f {
        Formula::Or(_) => 0,
        Formula::And(_) => 1,
        Formula::Until { .. } => 2,
        _ => 3,
    }
}

fn write_formula<L>(
    out: &mut String,
    f: &Formula<L>,
    min_level: u8,
    atom: &impl Fn(&mut String, &L),
) {
    if level(f) < min_level {
        out.push('(');
        write_formula(out, f, 0, atom);
        out.push(')');
        return;
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::Atom(l) => atom(out, l),
        Formula::Not(c) => {
            out.push('!');
            write_formula(out, c, 3, atom);
        }
        Formula::And(cs) | Formula::Or(cs) => {
            let (sep, child_level) = if matches!(f, Formula::And(_)) {
                (" && ", 2)
            } else {
                (" || ", 1)
            };
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_formula(out, c, child_level, atom);
            }
        }
        Formula::Until {
            left,
            right,
            interval,
        } => {
            write_formula(out, left, 3, atom);
            let _ = write!(out, " U{interval} ");
            write_formula(out, right, 3, atom);
        }
        Formula::Eventually(c, i) | Formula::Always(c, i) => {
            out.push(if matches!(f, Formula::Eventually(..)) { 'F' } else { 'G' });
            let _ = write!(out, "{i} ");
            write_formula(out, c, 3, atom);
        }
    }
}

fn write_predicate(out: &mut String, p: &Predicate) {
    let _ = match *p {
        Predicate::HalfPlane { normal, offset } => {
            write!(out, "{}*x + {}*y >= {}", normal[0], normal[1], -offset)
        }
        Predicate::Circle {
            center,
            radius,
            inside,
        } => write!(
            out,
            "{}({}, {}, {})",
            if inside { "disk" } else { "outside_disk" },
            center[0],
            center[1],
            radius
        ),
    };
}

pub fn print_inner(f: &InnerFormula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, 0, &write_predicate);
    out
}

/// Renders a formula in the syntax accepted by [`parse_formula`].
pub fn print_formula(f: &OuterFormula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, 0, &|out: &mut String, t: &Task| {
        out.push('<');
        write_formula(out, &t.inner, 0, &write_predicate);
        let _ = write!(out, ", {}, {}>", t.capability, t.count);
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{disk, rectangle};

    fn regions() -> BTreeMap<String, InnerFormula> {
        BTreeMap::from([
            ("B".to_string(), rectangle([4.0, 5.0], [6.0, 7.0])),
            ("C".to_string(), rectangle([3.0, 2.0], [7.0, 4.0])),
            ("V".to_string(), disk([2.0, 9.0], 1.0)),
        ])
    }

    #[test]
    fn parses_eventually_task() {
        let f = parse_formula("<F[0,8] in(C), Delivery, 6>", &regions()).unwrap();
        let expected = Formula::Atom(Task::new(
            Formula::eventually(rectangle([3.0, 2.0], [7.0, 4.0]), 0, 8),
            "Delivery",
            6,
        ));
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_until_with_negated_left() {
        let f = parse_formula("!<in(B), Ground, 1> U[0,5] <in(B), Inspection, 2>", &regions()).unwrap();
        let b = rectangle([4.0, 5.0], [6.0, 7.0]);
        let expected = Formula::until(
            Formula::not(Formula::Atom(Task::new(b.clone(), "Ground", 1))),
            Formula::Atom(Task::new(b, "Inspection", 2)),
            0,
            5,
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_true() {
        assert_eq!(parse_formula("true", &regions()).unwrap(), Formula::True);
        assert_eq!(parse_formula("  ( true ) ", &regions()).unwrap(), Formula::True);
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let f = parse_formula("true || true && true", &regions()).unwrap();
        assert_eq!(f, Formula::Or(vec![Formula::True, Formula::And(vec![Formula::True, Formula::True])]));
        let g = parse_formula("F[0,1] true && true", &regions()).unwrap();
        assert_eq!(g, Formula::And(vec![Formula::eventually(Formula::True, 0, 1), Formula::True]));
    }

    #[test]
    fn chained_until_is_rejected() {
        let e = parse_formula("true U[0,1] true U[0,1] true", &regions()).unwrap_err();
        assert!(e.expected.contains("parentheses"));
        assert!(parse_formula("(true U[0,1] true) U[0,1] true", &regions()).is_ok());
    }

    #[test]
    fn linear_atoms_normalize_to_nonnegative_form() {
        let ge = parse_inner("2*x - y >= 3", &regions()).unwrap();
        assert_eq!(ge, Formula::Atom(Predicate::half_plane([2.0, -1.0], -3.0)));
        let le = parse_inner("x + 1 <= 4", &regions()).unwrap();
        assert_eq!(le, Formula::Atom(Predicate::half_plane([-1.0, 0.0], 3.0)));
        let neg = parse_inner("-x >= -2.5", &regions()).unwrap();
        assert_eq!(neg, Formula::Atom(Predicate::half_plane([-1.0, 0.0], 2.5)));
    }

    #[test]
    fn unknown_region_reports_position_of_label() {
        let e = parse_formula("<in(Q), c, 1>", &regions()).unwrap_err();
        assert_eq!((e.line, e.column), (1, 5));
        assert_eq!(e.found, "`Q`");
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = parse_formula("<in(B), c, 1>\n  && <in(B), c,>", &regions()).unwrap_err();
        assert_eq!((e.line, e.column), (2, 16));
        assert!(e.expected.contains("integer"));
        let e = parse_formula("<in(B), c, 0>", &regions()).unwrap_err();
        assert!(e.expected.contains("positive"));
        let e = parse_formula("F[3,1] true", &regions()).unwrap_err();
        assert_eq!(e.column, 5);
    }

    #[test]
    fn stray_character_is_reported_where_it_occurs() {
        let e = parse_formula("<in(B), c, 1> # true", &regions()).unwrap_err();
        assert_eq!(e.column, 15);
        assert_eq!(e.found, "`#`");
    }

    #[test]
    fn round_trip_of_running_example_parts() {
        for text in [
            "<F[0,8] in(C), Delivery, 6>",
            "!<in(B), Ground, 1> U[0,5] <in(B), Inspection, 2>",
            "G[0,25] !<in(B), Ground, 2>",
            "G[0,25] <!in(V), Ground, 4> && (true || <x >= 1, a, 1>)",
            "(<in(V) U[1,2] y <= 3, a, 1> U[0,1] true) || !(true && true)",
        ] {
            let f = parse_formula(text, &regions()).unwrap();
            let printed = print_formula(&f);
            assert_eq!(parse_formula(&printed, &regions()).unwrap(), f, "{printed}");
        }
    }

    #[test]
    fn nested_conjunctions_keep_their_grouping() {
        let f: OuterFormula = Formula::And(vec![
            Formula::And(vec![Formula::True, Formula::True]),
            Formula::True,
        ]);
        let printed = print_formula(&f);
        assert_eq!(printed, "(true && true) && true");
        assert_eq!(parse_formula(&printed, &regions()).unwrap(), f);
    }
}
