//! Role-free concept expressions with a top-level typicality operator.
//!
//! Concrete syntax:
//!
//! ```text
//! inclusion := "T" "(" concept ")" "<=" concept
//!            | concept "<=" concept
//! concept   := atom { "&" atom }
//! atom      := NAME | "Top" | "Bot" | "(" concept ")"
//! ```
//!
//! `T`, `Top` and `Bot` are reserved. Conjunction chains nest to the right.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semantic::{ElementSet, SemanticModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the parsed text.
    pub position: usize,
    /// 1-based line, when parsing a multi-line file.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(
                f,
                "parse error at line {line}, column {}: {}",
                self.position + 1,
                self.message
            ),
            None => write!(
                f,
                "parse error at column {}: {}",
                self.position + 1,
                self.message
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConceptExpr {
    Top,
    Bot,
    Name(String),
    And(Box<ConceptExpr>, Box<ConceptExpr>),
}

impl ConceptExpr {
    pub fn name(n: impl Into<String>) -> Self {
        Self::Name(n.into())
    }

    pub fn and(a: ConceptExpr, b: ConceptExpr) -> Self {
        Self::And(Box::new(a), Box::new(b))
    }

    /// Right-nested conjunction of `parts`; `Top` when empty.
    pub fn conjunction<I>(parts: I) -> Self
    where
        I: IntoIterator<Item = ConceptExpr>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = parts.into_iter().rev();
        match it.next() {
            None => Self::Top,
            Some(last) => it.fold(last, |acc, c| Self::and(c, acc)),
        }
    }

    /// Concept names occurring in the expression.
    pub fn names(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Self::Name(n) => {
                out.insert(n);
            }
            Self::And(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Self::Top | Self::Bot => {}
        }
    }

    /// Fails on the first name not in `declared`.
    pub fn resolve<'a>(&self, declared: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let declared: BTreeSet<&str> = declared.into_iter().collect();
        match self.names().into_iter().find(|n| !declared.contains(n)) {
            Some(n) => Err(Error::UnknownCategory(n.to_string())),
            None => Ok(()),
        }
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            Self::Name(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Top => f.write_str("Top"),
            Self::Bot => f.write_str("Bot"),
            Self::Name(n) => f.write_str(n),
            Self::And(a, b) => {
                if matches!(**a, Self::And(..)) {
                    write!(f, "({a}) & {b}")
                } else {
                    write!(f, "{a} & {b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InclusionKind {
    Strict,
    Defeasible,
}

impl InclusionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Strict => "strict",
            Self::Defeasible => "defeasible",
        }
    }
}

/// `lhs ⊑ rhs`, or `T(lhs) ⊑ rhs` when defeasible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Inclusion {
    pub kind: InclusionKind,
    pub lhs: ConceptExpr,
    pub rhs: ConceptExpr,
}

impl Inclusion {
    pub fn strict(lhs: ConceptExpr, rhs: ConceptExpr) -> Self {
        Self {
            kind: InclusionKind::Strict,
            lhs,
            rhs,
        }
    }

    pub fn defeasible(lhs: ConceptExpr, rhs: ConceptExpr) -> Self {
        Self {
            kind: InclusionKind::Defeasible,
            lhs,
            rhs,
        }
    }

    /// Left-hand side as written, with the typicality wrapper if any.
    pub fn lhs_text(&self) -> String {
        match self.kind {
            InclusionKind::Strict => self.lhs.to_string(),
            InclusionKind::Defeasible => format!("T({})", self.lhs),
        }
    }
}

impl fmt::Display for Inclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs_text(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Concept(ConceptExpr),
    Inclusion(Inclusion),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Typ,
    Top,
    Bot,
    LParen,
    RParen,
    Amp,
    Le,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "name `{n}`"),
            Tok::Typ => f.write_str("`T`"),
            Tok::Top => f.write_str("`Top`"),
            Tok::Bot => f.write_str("`Bot`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

pub fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// True if `s` can be used as a concept name.
pub fn is_valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_name_char) && !matches!(s, "T" | "Top" | "Bot")
}

fn tokenize(text: &str) -> std::result::Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '(' | ')' | '&' => {
                it.next();
                out.push((
                    pos,
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Amp,
                    },
                ));
            }
            '<' => {
                it.next();
                match it.next() {
                    Some((_, '=')) => out.push((pos, Tok::Le)),
                    _ => {
                        return Err(ParseError {
                            position: pos,
                            line: None,
                            message: "expected `<=`".into(),
                        })
                    }
                }
            }
            c if is_name_char(c) => {
                let mut end = pos;
                while let Some(&(p, c)) = it.peek() {
                    if !is_name_char(c) {
                        break;
                    }
                    end = p + c.len_utf8();
                    it.next();
                }
                let word = &text[pos..end];
                let tok = match word {
                    "T" => Tok::Typ,
                    "Top" => Tok::Top,
                    "Bot" => Tok::Bot,
                    _ => Tok::Name(word.to_string()),
                };
                out.push((pos, tok));
            }
            other => {
                return Err(ParseError {
                    position: pos,
                    line: None,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> std::result::Result<T, ParseError> {
        Err(ParseError {
            position: self.pos(),
            line: None,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> std::result::Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn concept(&mut self) -> std::result::Result<ConceptExpr, ParseError> {
        let first = self.atom()?;
        if *self.peek() == Tok::Amp {
            self.bump();
            Ok(ConceptExpr::and(first, self.concept()?))
        } else {
            Ok(first)
        }
    }

    fn atom(&mut self) -> std::result::Result<ConceptExpr, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.bump();
                Ok(ConceptExpr::Name(n))
            }
            Tok::Top => {
                self.bump();
                Ok(ConceptExpr::Top)
            }
            Tok::Bot => {
                self.bump();
                Ok(ConceptExpr::Bot)
            }
            Tok::LParen => {
                self.bump();
                let c = self.concept()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Typ => self.error(
                "typicality `T(...)` is only allowed around the whole left-hand side of an inclusion",
            ),
            other => self.error(format!("expected a concept, found {other}")),
        }
    }

    fn statement(&mut self) -> std::result::Result<Statement, ParseError> {
        if *self.peek() == Tok::Typ {
            self.bump();
            self.expect(Tok::LParen)?;
            let lhs = self.concept()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Le)?;
            let rhs = self.concept()?;
            self.expect(Tok::End)?;
            return Ok(Statement::Inclusion(Inclusion::defeasible(lhs, rhs)));
        }
        let lhs = self.concept()?;
        match self.bump() {
            Tok::End => Ok(Statement::Concept(lhs)),
            Tok::Le => {
                let rhs = self.concept()?;
                self.expect(Tok::End)?;
                Ok(Statement::Inclusion(Inclusion::strict(lhs, rhs)))
            }
            other => {
                self.at -= 1;
                self.error(format!("expected `&`, `<=` or end of input, found {other}"))
            }
        }
    }
}

/// Parses either a bare concept or an inclusion.
pub fn parse(text: &str) -> std::result::Result<Statement, ParseError> {
    Parser {
        toks: tokenize(text)?,
        at: 0,
    }
    .statement()
}

pub fn parse_concept(text: &str) -> std::result::Result<ConceptExpr, ParseError> {
    match parse(text)? {
        Statement::Concept(c) => Ok(c),
        Statement::Inclusion(_) => Err(ParseError {
            position: 0,
            line: None,
            message: "expected a concept, found an inclusion".into(),
        }),
    }
}

pub fn parse_inclusion(text: &str) -> std::result::Result<Inclusion, ParseError> {
    match parse(text)? {
        Statement::Inclusion(i) => Ok(i),
        Statement::Concept(_) => Err(ParseError {
            position: text.len(),
            line: None,
            message: "expected `<=`".into(),
        }),
    }
}

/// Parses a knowledge-base file: one inclusion per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_kb(text: &str) -> std::result::Result<Vec<Inclusion>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let inc = parse_inclusion(line).map_err(|mut e| {
            e.line = Some(i + 1);
            e
        })?;
        out.push(inc);
    }
    Ok(out)
}

/// `C^I` over the model's domain.
pub fn extension<T: Scalar>(model: &SemanticModel<T>, c: &ConceptExpr) -> Result<ElementSet> {
    Ok(match c {
        ConceptExpr::Top => model.all_elements(),
        ConceptExpr::Bot => ElementSet::new(),
        ConceptExpr::Name(n) => model.extension_of(n)?.clone(),
        ConceptExpr::And(a, b) => {
            let a = extension(model, a)?;
            let b = extension(model, b)?;
            a.intersection(&b).copied().collect()
        }
    })
}
