//! Parser for the flat ground rule format.
//!
//! ```text
//! program   := statement* ;
//! statement := atom ( ":-" literal ("," literal)* )? "." ;
//! literal   := "not" atom | atom ;
//! atom      := lowercase-initial identifier, optional "(...)" with balanced parens ;
//! ```
//!
//! `%` starts a comment running to end of line. `not` is reserved and always
//! introduces a negated literal. Parenthesized argument text is opaque and
//! kept verbatim as part of the atom name.

use crate::program::{Program, ProgramBuilder};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col,
            message: message.into(),
        }
    }

    /// Identifier followed by an optional balanced parenthesized tail.
    fn atom_name(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_lowercase() => {
                self.bump();
            }
            Some(c) => {
                return Err(self.error(format!(
                    "expected atom (lowercase-initial identifier), found '{}'",
                    c as char
                )))
            }
            None => return Err(self.error("expected atom, found end of input")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        if self.peek() == Some(b'(') {
            let mut depth = 0usize;
            loop {
                match self.bump() {
                    Some(b'(') => depth += 1,
                    Some(b')') => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Some(_) => {}
                    None => return Err(self.error("unbalanced '(' in atom arguments")),
                }
            }
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .expect("scanner operates on valid utf-8 boundaries")
            .to_string())
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        for &b in token.as_bytes() {
            if self.peek() == Some(b) {
                self.bump();
            } else {
                return Err(self.error(format!("expected '{token}'")));
            }
        }
        Ok(())
    }
}

/// Parse a program; duplicate rules collapse under set semantics.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut sc = Scanner::new(text);
    let mut builder = ProgramBuilder::default();
    loop {
        sc.skip_trivia();
        if sc.peek().is_none() {
            break;
        }
        parse_statement(&mut sc, &mut builder)?;
    }
    Ok(builder.build())
}

fn parse_statement(sc: &mut Scanner, builder: &mut ProgramBuilder) -> Result<(), ParseError> {
    let head_name = sc.atom_name()?;
    if head_name == "not" {
        return Err(sc.error("'not' is reserved and cannot be used as an atom"));
    }
    let head = builder.atom(&head_name);
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    sc.skip_trivia();
    if sc.peek() == Some(b':') {
        sc.expect(":-")?;
        loop {
            sc.skip_trivia();
            let name = sc.atom_name()?;
            if name == "not" {
                sc.skip_trivia();
                let neg_name = sc.atom_name()?;
                if neg_name == "not" {
                    return Err(sc.error("'not' is reserved and cannot be used as an atom"));
                }
                negative.push(builder.atom(&neg_name));
            } else {
                positive.push(builder.atom(&name));
            }
            sc.skip_trivia();
            match sc.peek() {
                Some(b',') => {
                    sc.bump();
                }
                Some(b'.') => break,
                Some(c) => {
                    return Err(sc.error(format!("expected ',' or '.', found '{}'", c as char)))
                }
                None => return Err(sc.error("expected ',' or '.', found end of input")),
            }
        }
    }
    sc.skip_trivia();
    match sc.peek() {
        Some(b'.') => {
            sc.bump();
        }
        Some(c) => return Err(sc.error(format!("expected '.', found '{}'", c as char))),
        None => return Err(sc.error("expected '.', found end of input")),
    }
    builder.rule(head, &positive, &negative);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::ProgramClass;

    pub const EXAMPLE_1: &str =
        "a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";
    pub const EXAMPLE_2: &str = "a :- b, c. b :- a. b :- not c. c :- not b.";
    pub const EXAMPLE_3: &str = "a :- b, not c. a :- b, not d. b :- not c. c :- not d. d :- not c.";

    #[test]
    fn example_1_counts() {
        let p = parse_program(EXAMPLE_1).unwrap();
        assert_eq!(p.n_atoms(), 6);
        assert_eq!(p.n_bodies(), 7);
        assert_eq!(p.rules().len(), 8);
        assert_eq!(p.class(), ProgramClass::Unary);
    }

    #[test]
    fn empty_input() {
        let p = parse_program("").unwrap();
        assert_eq!(p.n_atoms(), 0);
        assert_eq!(p.rules().len(), 0);
    }

    #[test]
    fn fact_rule() {
        let p = parse_program("p.").unwrap();
        assert_eq!(p.n_atoms(), 1);
        assert_eq!(p.n_bodies(), 1);
        assert!(p.body(crate::program::BodyId(0)).is_empty());
        assert_eq!(p.rules().len(), 1);
    }

    #[test]
    fn comments_and_whitespace() {
        let p = parse_program("% header\n  p :- q ,  not r . % tail\nq.").unwrap();
        assert_eq!(p.n_atoms(), 3);
        assert_eq!(p.rules().len(), 2);
    }

    #[test]
    fn parenthesized_terms_are_opaque() {
        let p = parse_program("reached(v3) :- reached(v1), edge(v1,v3).").unwrap();
        assert_eq!(p.n_atoms(), 3);
        assert_eq!(p.atom_name(crate::program::AtomId(0)), "reached(v3)");
        assert_eq!(p.atom_name(crate::program::AtomId(2)), "edge(v1,v3)");
    }

    #[test]
    fn nested_parens() {
        let p = parse_program("f(g(x),h(i(y))).").unwrap();
        assert_eq!(p.atom_name(crate::program::AtomId(0)), "f(g(x),h(i(y)))");
    }

    #[test]
    fn syntax_error_location() {
        let err = parse_program("p :- q.\nr :- .").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 6);
    }

    #[test]
    fn unbalanced_parens_rejected() {
        assert!(parse_program("p(a.").is_err());
    }

    #[test]
    fn uppercase_initial_rejected() {
        let err = parse_program("P.").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
    }

    #[test]
    fn duplicate_rules_collapse() {
        let p = parse_program("p :- q. p :- q. q.").unwrap();
        assert_eq!(p.rules().len(), 2);
    }

    #[test]
    fn duplicate_body_literals_collapse() {
        let p = parse_program("p :- q, q, not r, not r.").unwrap();
        let b = p.body(p.rules()[0].body);
        assert_eq!(b.positive.len(), 1);
        assert_eq!(b.negative.len(), 1);
    }

    #[test]
    fn overlapping_pos_neg_kept() {
        let p = parse_program("p :- q, not q.").unwrap();
        let b = p.body(p.rules()[0].body);
        assert_eq!(b.positive, b.negative);
    }

    #[test]
    fn not_reserved() {
        assert!(parse_program("not.").is_err());
        assert!(parse_program("p :- not not q.").is_err());
    }

    #[test]
    fn shared_bodies_dedup_globally() {
        // e :- not a and a' :- not a share one body node.
        let p = parse_program("e :- not a. b :- not a.").unwrap();
        assert_eq!(p.n_bodies(), 1);
        assert_eq!(p.heads_of(crate::program::BodyId(0)).len(), 2);
    }

    #[test]
    fn round_trip_is_stable() {
        for src in [EXAMPLE_1, EXAMPLE_2, EXAMPLE_3, "p :- not q, r. q."] {
            let p1 = parse_program(src).unwrap();
            let s1 = p1.to_string();
            let p2 = parse_program(&s1).unwrap();
            assert_eq!(s1, p2.to_string());
            assert_eq!(p1.n_atoms(), p2.n_atoms());
            assert_eq!(p1.n_bodies(), p2.n_bodies());
            assert_eq!(p1.rules().len(), p2.rules().len());
        }
    }
}
