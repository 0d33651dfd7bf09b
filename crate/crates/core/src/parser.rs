//! Recursive-descent parser for the formula syntax.
//!
//! ```text
//! formula   := implies
//! implies   := or ( "->" implies )?
//! or        := and ( "|" and )*
//! and       := unary ( "&" unary )*
//! unary     := "!" unary
//!            | "[" ( assign ( "," assign )* )? "]" unary
//!            | ( "box" | "dia" | "cbox" | "cdia" ) "(" formula ")"
//!            | "(" formula ")"
//!            | "true" | "false"
//!            | ident ( "@" world )? "=" int
//! assign    := ident "@" world ":=" int
//! ```

use thiserror::Error;

use crate::formula::Formula;
use crate::model::{Intervention, ModelError, Value, VarAt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("nested intervention at byte {offset}: intervention bodies must be events")]
    NestedIntervention { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::NestedIntervention { offset } => *offset,
        }
    }
}

const KEYWORDS: [&str; 6] = ["box", "dia", "cbox", "cdia", "true", "false"];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    /// Identifiers and integers share one token; the grammar position
    /// decides how they are read (world names may start with a digit).
    Word(String),
    Int(Value),
    Eq,
    At,
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Assign,
    Comma,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Eq => "`=`".into(),
        Tok::At => "`@`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrack => "`[`".into(),
        Tok::RBrack => "`]`".into(),
        Tok::Assign => "`:=`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'=' => Tok::Eq,
            b'@' => Tok::At,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b',' => Tok::Comma,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Assign
            }
            b'-' | b'0'..=b'9' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                // digits followed by letters form a word (e.g. a world `0a`)
                if c != b'-' && j < bytes.len() && is_word_byte(bytes[j]) {
                    while j < bytes.len() && is_word_byte(bytes[j]) {
                        j += 1;
                    }
                    out.push((Tok::Word(src[i..j].to_string()), start));
                    i = j;
                    continue;
                }
                let text = &src[i..j];
                let value = text.parse::<Value>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("invalid integer `{text}`"),
                })?;
                out.push((Tok::Int(value), start));
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && is_word_byte(bytes[j]) {
                    j += 1;
                }
                out.push((Tok::Word(src[i..j].to_string()), start));
                i = j;
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'\''
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(&describe(&tok))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LBrack => {
                let intervention = self.intervention()?;
                let body_offset = self.offset();
                let body = self.unary()?;
                Formula::intervene(intervention, body)
                    .map_err(|_| ParseError::NestedIntervention { offset: body_offset })
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Word(w) => {
                self.bump();
                match w.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    "box" | "dia" | "cbox" | "cdia" => {
                        self.expect(Tok::LParen)?;
                        let inner = self.formula()?;
                        self.expect(Tok::RParen)?;
                        Ok(match w.as_str() {
                            "box" => Formula::boxed(inner),
                            "dia" => Formula::dia(inner),
                            "cbox" => Formula::conv_box(inner),
                            _ => Formula::conv_dia(inner),
                        })
                    }
                    _ => self.atom(w, start),
                }
            }
            _ => self.error("a formula"),
        }
    }

    fn variable(&self, w: &str, offset: usize) -> Result<(), ParseError> {
        if crate::model::is_identifier(w) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset,
                message: format!("`{w}` is not a variable name"),
            })
        }
    }

    fn world(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Word(w) => Ok(w),
            Tok::Int(v) if v >= 0 => Ok(v.to_string()),
            _ => {
                self.pos -= 1;
                self.error("a world name")
            }
        }
    }

    fn int(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.error("an integer value"),
        }
    }

    fn atom(&mut self, var: String, offset: usize) -> Result<Formula, ParseError> {
        self.variable(&var, offset)?;
        let world = if *self.peek() == Tok::At {
            self.bump();
            Some(self.world()?)
        } else {
            None
        };
        self.expect(Tok::Eq)?;
        let value = self.int()?;
        Ok(match world {
            Some(world) => Formula::Global { var, world, value },
            None => Formula::Local { var, value },
        })
    }

    fn intervention(&mut self) -> Result<Intervention, ParseError> {
        let start = self.offset();
        self.expect(Tok::LBrack)?;
        let mut assignments = Vec::new();
        if *self.peek() != Tok::RBrack {
            loop {
                assignments.push(self.assignment()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
        }
        self.expect(Tok::RBrack)?;
        Intervention::new(assignments).map_err(|e| match e {
            ModelError::DuplicateTarget(at) => ParseError::Syntax {
                offset: start,
                message: format!("intervention sets {at} more than once"),
            },
            other => ParseError::Syntax {
                offset: start,
                message: other.to_string(),
            },
        })
    }

    fn assignment(&mut self) -> Result<(VarAt, Value), ParseError> {
        let offset = self.offset();
        let var = match self.bump() {
            Tok::Word(w) if !is_keyword(&w) => w,
            _ => {
                self.pos -= 1;
                return self.error("an intervention target `X@w`");
            }
        };
        self.variable(&var, offset)?;
        self.expect(Tok::At)?;
        let world = self.world()?;
        self.expect(Tok::Assign)?;
        let value = self.int()?;
        Ok((VarAt::new(var, world), value))
    }
}

/// Parses a formula (event or causal formula).
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error("end of input");
    }
    Ok(f)
}

/// Parses a conjunction of atoms `X@w=x & ...` (or `X=x`, bound to
/// `default_world`) into a list of assignments, keeping source order.
pub fn parse_conjunction(
    text: &str,
    default_world: Option<&str>,
) -> Result<Vec<(VarAt, Value)>, ParseError> {
    fn collect(
        f: Formula,
        default_world: Option<&str>,
        out: &mut Vec<(VarAt, Value)>,
    ) -> Result<(), String> {
        match f {
            Formula::And(a, b) => {
                collect(*a, default_world, out)?;
                collect(*b, default_world, out)
            }
            Formula::Global { var, world, value } => {
                out.push((VarAt::new(var, world), value));
                Ok(())
            }
            Formula::Local { var, value } => match default_world {
                Some(w) => {
                    out.push((VarAt::new(var, w), value));
                    Ok(())
                }
                None => Err(format!("`{var}={value}` needs a world: write `{var}@w={value}`")),
            },
            other => Err(format!("`{other}` is not an atom")),
        }
    }
    let f = parse(text)?;
    let mut out = Vec::new();
    collect(f, default_world, &mut out).map_err(|message| ParseError::Syntax { offset: 0, message })?;
    let mut seen = std::collections::BTreeSet::new();
    for (at, _) in &out {
        if !seen.insert(at.clone()) {
            return Err(ParseError::Syntax {
                offset: 0,
                message: format!("{at} appears twice"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_box_of_conjunction() {
        assert_eq!(
            parse("box(p=1 & r=1)").unwrap(),
            Formula::boxed(Formula::and(Formula::local("p", 1), Formula::local("r", 1)))
        );
    }

    #[test]
    fn parses_intervention() {
        let f = parse("[p@w3 := 0] !(q=1)").unwrap();
        let expected = Formula::intervene(
            Intervention::new([(VarAt::new("p", "w3"), 0)]).unwrap(),
            Formula::not(Formula::local("q", 1)),
        )
        .unwrap();
        assert_eq!(f, expected);
    }

    #[test]
    fn nested_intervention_is_reported() {
        let err = parse("[x@w := 0][y@w := 1] p=1").unwrap_err();
        assert_eq!(err, ParseError::NestedIntervention { offset: 10 });
    }

    #[test]
    fn precedence_not_and_or_implies() {
        let f = parse("!a=1 & b=1 | c=1 -> d=1").unwrap();
        let expected = Formula::implies(
            Formula::or(
                Formula::and(Formula::not(Formula::local("a", 1)), Formula::local("b", 1)),
                Formula::local("c", 1),
            ),
            Formula::local("d", 1),
        );
        assert_eq!(f, expected);
        // implication associates to the right
        assert_eq!(
            parse("a=1 -> b=1 -> c=1").unwrap(),
            Formula::implies(
                Formula::local("a", 1),
                Formula::implies(Formula::local("b", 1), Formula::local("c", 1))
            )
        );
    }

    #[test]
    fn intervention_binds_like_negation() {
        let f = parse("[x@w := 1] a=1 & b=1").unwrap();
        assert!(matches!(f, Formula::And(..)));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse("p=").unwrap_err().offset(), 2);
        assert_eq!(parse("box p=1").unwrap_err().offset(), 4);
        assert_eq!(parse("p=1 q=1").unwrap_err().offset(), 4);
        assert_eq!(parse("p=1 # x").unwrap_err().offset(), 4);
        assert!(parse("[x@w := 0, x@w := 1] p=1").is_err());
        assert!(parse("box=1").is_err());
    }

    #[test]
    fn negative_values_and_numeric_worlds() {
        assert_eq!(parse("x@0=-2").unwrap(), Formula::global("x", "0", -2));
    }

    #[test]
    fn empty_intervention_parses() {
        let f = parse("[] dia(true)").unwrap();
        assert_eq!(f.to_string(), "[] dia(true)");
    }

    #[test]
    fn conjunction_of_atoms() {
        let c = parse_conjunction("p1@w1=1 & p2@w1=1", None).unwrap();
        assert_eq!(
            c,
            vec![(VarAt::new("p1", "w1"), 1), (VarAt::new("p2", "w1"), 1)]
        );
        assert_eq!(
            parse_conjunction("A=1 & B=1", Some("w")).unwrap(),
            vec![(VarAt::new("A", "w"), 1), (VarAt::new("B", "w"), 1)]
        );
        assert!(parse_conjunction("A=1", None).is_err());
        assert!(parse_conjunction("A@w=1 | B@w=1", None).is_err());
        assert!(parse_conjunction("A@w=1 & A@w=0", None).is_err());
    }
}
