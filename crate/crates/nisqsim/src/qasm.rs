//! Parser for the textual program format — a strict subset of OpenQASM 2.0
//! with one extension.
//!
//! Accepted statements, one per `;`:
//!
//! ```text
//! OPENQASM 2.0;                      # optional, ignored
//! include "...";                     # optional, ignored
//! qreg q[n];  creg c[n];             # exactly one of each, before any op
//! u(theta,phi,lambda) q[i];          # angles allow pi-arithmetic: 3*pi/4
//! cx q[i],q[j];
//! measure q[i] -> c[j];
//! reset q[i];
//! if (c[j]==v) <any non-if statement>
//! if (c==v) ...                      # unindexed form, 1-bit creg only
//! wait n;                            # extension: delay n controller cycles
//! ```
//!
//! `//` comments run to end of line. Gate names outside this list are
//! rejected — programs are expected to be compiled down to `u`/`cx` first.

use crate::program::{Instruction, Program, ProgramError};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Parse failure with source position (1-based line and column).
#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown statement `{0}` (supported: u, cx, measure, reset, if, wait)")]
    UnknownStatement(String),
    #[error("register `{0}` is not declared")]
    UndeclaredRegister(String),
    #[error("`{0}` register declared twice")]
    DuplicateRegister(&'static str),
    #[error("instruction appears before both registers are declared")]
    MissingRegisters,
    #[error("unindexed register comparison requires a 1-bit creg")]
    UnindexedCompare,
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Arrow,
    EqEq,
    Plus,
    Minus,
    Star,
    Slash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Str => write!(f, "string"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::EqEq => write!(f, "`==`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn error(&self, msg: String) -> ParseError {
        ParseError { line: self.line, column: self.col, kind: ParseErrorKind::Syntax(msg) }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(b) = self.peek() {
            let (line, col) = (self.line, self.col);
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'/' if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while self.peek().is_some_and(|c| c != b'\n') {
                        self.bump();
                    }
                }
                b'(' => {
                    self.bump();
                    out.push((Tok::LParen, line, col));
                }
                b')' => {
                    self.bump();
                    out.push((Tok::RParen, line, col));
                }
                b'[' => {
                    self.bump();
                    out.push((Tok::LBracket, line, col));
                }
                b']' => {
                    self.bump();
                    out.push((Tok::RBracket, line, col));
                }
                b',' => {
                    self.bump();
                    out.push((Tok::Comma, line, col));
                }
                b';' => {
                    self.bump();
                    out.push((Tok::Semi, line, col));
                }
                b'+' => {
                    self.bump();
                    out.push((Tok::Plus, line, col));
                }
                b'*' => {
                    self.bump();
                    out.push((Tok::Star, line, col));
                }
                b'/' => {
                    self.bump();
                    out.push((Tok::Slash, line, col));
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        out.push((Tok::Arrow, line, col));
                    } else {
                        out.push((Tok::Minus, line, col));
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        out.push((Tok::EqEq, line, col));
                    } else {
                        return Err(self.error("expected `==`".into()));
                    }
                }
                b'"' => {
                    self.bump();
                    while let Some(c) = self.peek() {
                        self.bump();
                        if c == b'"' {
                            break;
                        }
                    }
                    out.push((Tok::Str, line, col));
                }
                b'0'..=b'9' | b'.' => {
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'.') {
                        self.bump();
                    }
                    // Exponent suffix: 1e-3, 2.5E+4.
                    if self.peek().is_some_and(|c| c == b'e' || c == b'E') {
                        let mut ahead = self.pos + 1;
                        if self.src.get(ahead).is_some_and(|&c| c == b'+' || c == b'-') {
                            ahead += 1;
                        }
                        if self.src.get(ahead).is_some_and(|c| c.is_ascii_digit()) {
                            self.bump();
                            while self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'+' || c == b'-')
                            {
                                self.bump();
                                if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                                    break;
                                }
                            }
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let value: f64 = text
                        .parse()
                        .map_err(|_| self.error(format!("bad number `{text}`")))?;
                    out.push((Tok::Number(value), line, col));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = self.pos;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'.')
                    {
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    out.push((Tok::Ident(text.to_string()), line, col));
                }
                other => {
                    return Err(self.error(format!("unexpected character `{}`", other as char)));
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    program: Option<Program>,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    fn fail<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        let (line, column) = self.here();
        Err(ParseError { line, column, kind })
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        self.fail(ParseErrorKind::Syntax(msg.into()))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        match self.toks.get(self.at).cloned() {
            Some((t, _, _)) => {
                self.at += 1;
                Ok(t)
            }
            None => self.syntax("unexpected end of input"),
        }
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        let got = self.next()?;
        if got == *want {
            Ok(())
        } else {
            self.at -= 1;
            self.syntax(format!("expected {want}, found {got}"))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            got => {
                self.at -= 1;
                self.syntax(format!("expected identifier, found {got}"))
            }
        }
    }

    fn expect_index(&mut self) -> Result<usize, ParseError> {
        match self.next()? {
            Tok::Number(n) if n.fract() == 0.0 && n >= 0.0 => Ok(n as usize),
            got => {
                self.at -= 1;
                self.syntax(format!("expected a nonnegative integer, found {got}"))
            }
        }
    }

    /// `name[index]` against a declared register; returns the index.
    fn register_ref(&mut self, decl: &Option<(String, usize)>) -> Result<usize, ParseError> {
        let name = self.expect_ident()?;
        match decl {
            Some((declared, _)) if *declared == name => {}
            _ => {
                self.at -= 1;
                return self.fail(ParseErrorKind::UndeclaredRegister(name));
            }
        }
        self.expect(&Tok::LBracket)?;
        let idx = self.expect_index()?;
        self.expect(&Tok::RBracket)?;
        Ok(idx)
    }

    /// Angle grammar: `expr := term ((+|-) term)*`, `term := factor ((*|/) factor)*`,
    /// `factor := (-|+)* (number | pi | ( expr ))`.
    fn angle_expr(&mut self) -> Result<f64, ParseError> {
        let mut value = self.angle_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    value += self.angle_term()?;
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    value -= self.angle_term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn angle_term(&mut self) -> Result<f64, ParseError> {
        let mut value = self.angle_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    value *= self.angle_factor()?;
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    value /= self.angle_factor()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn angle_factor(&mut self) -> Result<f64, ParseError> {
        match self.next()? {
            Tok::Minus => Ok(-self.angle_factor()?),
            Tok::Plus => self.angle_factor(),
            Tok::Number(n) => Ok(n),
            Tok::Ident(s) if s == "pi" => Ok(PI),
            Tok::LParen => {
                let v = self.angle_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(v)
            }
            got => {
                self.at -= 1;
                self.syntax(format!("expected an angle, found {got}"))
            }
        }
    }

    fn add(&mut self, instr: Instruction) -> Result<(), ParseError> {
        match self.program.as_mut() {
            None => self.fail(ParseErrorKind::MissingRegisters),
            Some(p) => match p.add(instr) {
                Ok(()) => Ok(()),
                Err(e) => self.fail(ParseErrorKind::Program(e)),
            },
        }
    }

    /// One instruction statement, excluding the trailing `;`.
    fn instruction(&mut self, keyword: &str, allow_if: bool) -> Result<Instruction, ParseError> {
        match keyword {
            "u" | "U" => {
                self.expect(&Tok::LParen)?;
                let theta = self.angle_expr()?;
                self.expect(&Tok::Comma)?;
                let phi = self.angle_expr()?;
                self.expect(&Tok::Comma)?;
                let lambda = self.angle_expr()?;
                self.expect(&Tok::RParen)?;
                let qubit = self.register_ref(&self.qreg.clone())?;
                Ok(Instruction::U { theta, phi, lambda, qubit })
            }
            "cx" | "CX" => {
                let control = self.register_ref(&self.qreg.clone())?;
                self.expect(&Tok::Comma)?;
                let target = self.register_ref(&self.qreg.clone())?;
                Ok(Instruction::Cx { control, target })
            }
            "measure" => {
                let qubit = self.register_ref(&self.qreg.clone())?;
                self.expect(&Tok::Arrow)?;
                let cbit = self.register_ref(&self.creg.clone())?;
                Ok(Instruction::Measure { qubit, cbit })
            }
            "reset" => {
                let qubit = self.register_ref(&self.qreg.clone())?;
                Ok(Instruction::Reset { qubit })
            }
            "wait" => {
                let cycles = self.expect_index()?;
                let cycles = u32::try_from(cycles)
                    .map_err(|_| ParseError {
                        line: self.here().0,
                        column: self.here().1,
                        kind: ParseErrorKind::Syntax("wait cycle count too large".into()),
                    })?;
                Ok(Instruction::Wait { cycles })
            }
            "if" => {
                if !allow_if {
                    return self.fail(ParseErrorKind::Program(ProgramError::NestedConditional));
                }
                self.expect(&Tok::LParen)?;
                let name = self.expect_ident()?;
                let creg = self.creg.clone();
                let cbit = match (&creg, self.peek()) {
                    (Some((declared, _)), _) if *declared != name => {
                        self.at -= 1;
                        return self.fail(ParseErrorKind::UndeclaredRegister(name));
                    }
                    (None, _) => {
                        self.at -= 1;
                        return self.fail(ParseErrorKind::UndeclaredRegister(name));
                    }
                    (Some(_), Some(Tok::LBracket)) => {
                        self.expect(&Tok::LBracket)?;
                        let idx = self.expect_index()?;
                        self.expect(&Tok::RBracket)?;
                        idx
                    }
                    (Some((_, size)), _) => {
                        // Whole-register compare is only unambiguous for one bit.
                        if *size != 1 {
                            return self.fail(ParseErrorKind::UnindexedCompare);
                        }
                        0
                    }
                };
                self.expect(&Tok::EqEq)?;
                let value = self.expect_index()?;
                if value > 1 {
                    return self.syntax("comparison value must be 0 or 1");
                }
                self.expect(&Tok::RParen)?;
                let inner_kw = self.expect_ident()?;
                let inner = self.instruction(&inner_kw, false)?;
                Ok(Instruction::If { cbit, value: value as u8, inner: Box::new(inner) })
            }
            other => {
                self.at -= 1;
                self.fail(ParseErrorKind::UnknownStatement(other.to_string()))
            }
        }
    }

    fn run(&mut self) -> Result<Program, ParseError> {
        while self.peek().is_some() {
            let keyword = self.expect_ident()?;
            match keyword.as_str() {
                "OPENQASM" => {
                    self.next()?; // version number
                }
                "include" => {
                    self.next()?; // file name string
                }
                "qreg" | "creg" => {
                    let which = keyword.as_str();
                    let name = self.expect_ident()?;
                    self.expect(&Tok::LBracket)?;
                    let size = self.expect_index()?;
                    self.expect(&Tok::RBracket)?;
                    let slot = if which == "qreg" { &mut self.qreg } else { &mut self.creg };
                    if slot.is_some() {
                        return self.fail(ParseErrorKind::DuplicateRegister(if which == "qreg" {
                            "qreg"
                        } else {
                            "creg"
                        }));
                    }
                    *slot = Some((name, size));
                    if let (Some((qn, qs)), Some((cn, cs))) = (&self.qreg, &self.creg) {
                        match Program::with_register_names(*qs, *cs, qn, cn) {
                            Ok(p) => self.program = Some(p),
                            Err(e) => return self.fail(ParseErrorKind::Program(e)),
                        }
                    }
                }
                _ => {
                    self.at -= 1;
                    let kw = self.expect_ident()?;
                    let instr = self.instruction(&kw, true)?;
                    self.add(instr)?;
                }
            }
            self.expect(&Tok::Semi)?;
        }
        match self.program.take() {
            Some(p) => Ok(p),
            None => self.fail(ParseErrorKind::MissingRegisters),
        }
    }
}

/// Parse a full program from source text.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    Parser { toks, at: 0, qreg: None, creg: None, program: None }.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_a_two_instruction_program() {
        let p = parse_program("qreg q[2]; creg c[2]; u(pi/2,0,pi) q[0]; cx q[0],q[1];").unwrap();
        assert_eq!(p.qubits(), 2);
        assert_eq!(p.cbits(), 2);
        assert_eq!(
            p.instructions(),
            &[
                Instruction::U { theta: PI / 2.0, phi: 0.0, lambda: PI, qubit: 0 },
                Instruction::Cx { control: 0, target: 1 },
            ]
        );
    }

    #[test]
    fn accepts_header_include_and_comments() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n// prep\nqreg q[1];\ncreg c[1];\nu(pi,0,pi) q[0]; // flip\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn angle_arithmetic() {
        let p = parse_program("qreg q[1]; creg c[1]; u(3*pi/4, -pi/4, 0.5) q[0]; u(1e-3, 2.5e2, -(pi+1)/2) q[0];")
            .unwrap();
        match p.instructions()[0] {
            Instruction::U { theta, phi, lambda, .. } => {
                assert_eq!(theta, 3.0 * PI / 4.0);
                assert_eq!(phi, -PI / 4.0);
                assert_eq!(lambda, 0.5);
            }
            _ => panic!("expected u"),
        }
        match p.instructions()[1] {
            Instruction::U { theta, phi, lambda, .. } => {
                assert_eq!(theta, 1e-3);
                assert_eq!(phi, 2.5e2);
                assert_eq!(lambda, -(PI + 1.0) / 2.0);
            }
            _ => panic!("expected u"),
        }
    }

    #[test]
    fn parses_measurement_reset_wait_and_conditionals() {
        let src = "qreg q[1]; creg c[1];\n\
                   measure q[0] -> c[0]; wait 60; if (c==1) u(pi,0,pi) q[0];\n\
                   measure q[0] -> c[0]; wait 60; if (c[0]==1) u(pi,0,pi) q[0];\n\
                   measure q[0] -> c[0]; wait 60; if (c==1) u(pi,0,pi) q[0];\n\
                   reset q[0];";
        let p = parse_program(src).unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(
            p.instructions()[2],
            Instruction::If {
                cbit: 0,
                value: 1,
                inner: Box::new(Instruction::U { theta: PI, phi: 0.0, lambda: PI, qubit: 0 }),
            }
        );
        assert_eq!(p.instructions()[9], Instruction::Reset { qubit: 0 });
    }

    #[test]
    fn print_then_parse_is_identity() {
        let src = "qreg q[3]; creg c[3]; u(pi/2,0,pi) q[0]; cx q[0],q[2]; wait 7;\n\
                   measure q[2] -> c[1]; if (c[1]==0) reset q[0]; u(0.1,-2.3e-4,3*pi) q[1];";
        let p = parse_program(src).unwrap();
        let reparsed = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, reparsed);
    }

    #[test]
    fn rejects_cx_on_one_qubit() {
        let err = parse_program("qreg q[2]; creg c[2]; cx q[0],q[0];").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Program(ProgramError::CxSameQubit(0)));
    }

    #[test]
    fn rejects_nested_if() {
        let err =
            parse_program("qreg q[1]; creg c[1]; if (c[0]==1) if (c[0]==0) reset q[0];").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Program(ProgramError::NestedConditional));
    }

    #[test]
    fn rejects_unknown_gates() {
        let err = parse_program("qreg q[1]; creg c[1]; h q[0];").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownStatement("h".into()));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn rejects_out_of_range_indices() {
        let err = parse_program("qreg q[2]; creg c[2]; u(0,0,0) q[9];").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Program(ProgramError::QubitOutOfRange { index: 9, size: 2 })
        );
    }

    #[test]
    fn rejects_instructions_before_registers() {
        let err = parse_program("u(0,0,0) q[0]; qreg q[1]; creg c[1];").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::UndeclaredRegister(_) | ParseErrorKind::MissingRegisters
        ));
    }

    #[test]
    fn rejects_unindexed_compare_on_wide_creg() {
        let err =
            parse_program("qreg q[1]; creg c[2]; measure q[0] -> c[0]; if (c==1) reset q[0];")
                .unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnindexedCompare);
    }

    #[test]
    fn reports_position_of_errors() {
        let err = parse_program("qreg q[1];\ncreg c[1];\nbogus q[0];").unwrap_err();
        assert_eq!((err.line, err.column), (3, 1));
    }
}
