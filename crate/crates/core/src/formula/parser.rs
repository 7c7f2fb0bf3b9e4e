use std::collections::HashMap;

use super::{Atom, Expr, OptFormula, OptKind, VarDecl, VarRef};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Dot,
    Comma,
    Colon,
    And,
    Or,
    Not,
    LParen,
    RParen,
    End,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '@' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        let single = match c {
            '.' => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '!' => Some(Tok::Not),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            it.next();
        } else if c.is_whitespace() {
            it.next();
        } else if is_ident_char(c) {
            let mut s = String::new();
            while let Some(&(_, c)) = it.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                it.next();
            }
            out.push((Tok::Ident(s), pos));
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

const KEYWORDS: [&str; 5] = ["max", "min", "count", "true", "false"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: HashMap<String, VarRef>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn varlist(&mut self, opt: bool) -> Result<Vec<VarDecl>> {
        let mut out = Vec::new();
        loop {
            let name = self.ident("variable name")?;
            if KEYWORDS.contains(&name.as_str()) {
                return self.err(format!("`{name}` is a keyword"));
            }
            if self.vars.contains_key(&name) {
                return Err(Error::DuplicateVariable(name));
            }
            let r = if opt {
                VarRef::Opt(out.len())
            } else {
                VarRef::Count(out.len())
            };
            self.vars.insert(name.clone(), r);
            let domain = if *self.peek() == Tok::Colon {
                self.bump();
                Some(self.ident("domain predicate")?)
            } else {
                None
            };
            out.push(VarDecl { name, domain });
            if *self.peek() != Tok::Comma {
                return Ok(out);
            }
            self.bump();
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(Expr::or(parts))
    }

    fn conj(&mut self) -> Result<Expr> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(Expr::and(parts))
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Expr::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Const(s == "true"))
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect(Tok::LParen, "`(` after predicate name")?;
                let mut args = Vec::new();
                loop {
                    let pos = self.pos();
                    let v = self.ident("variable")?;
                    match self.vars.get(&v) {
                        Some(r) => args.push(*r),
                        None => return Err(Error::UnboundVariable { name: v, pos }),
                    }
                    match self.bump() {
                        Tok::Comma => continue,
                        Tok::RParen => break,
                        _ => {
                            self.at -= 1;
                            return self.err("expected `,` or `)`");
                        }
                    }
                }
                Ok(Expr::Atom(Atom {
                    predicate: name,
                    args,
                }))
            }
            _ => self.err("expected expression"),
        }
    }
}

/// Parses the formula DSL.
pub fn parse_formula(text: &str) -> Result<OptFormula> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        vars: HashMap::new(),
    };
    let kind = match p.peek() {
        Tok::Ident(s) if s == "max" => OptKind::Max,
        Tok::Ident(s) if s == "min" => OptKind::Min,
        _ => return p.err("expected `max` or `min`"),
    };
    p.bump();
    let opt_vars = p.varlist(true)?;
    p.expect(Tok::Dot, "`.`")?;
    p.keyword("count")?;
    let count_vars = p.varlist(false)?;
    p.expect(Tok::Dot, "`.`")?;
    let body = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(OptFormula {
        kind,
        opt_vars,
        count_vars,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sparse_maxip() {
        let f = parse_formula("max x1,x2 . count y . E(x1,y) & E(x2,y)").unwrap();
        assert_eq!(f.kind, OptKind::Max);
        assert_eq!((f.k(), f.l()), (2, 1));
        assert_eq!(
            f.body,
            Expr::And(vec![
                Expr::atom("E", &[VarRef::Opt(0), VarRef::Count(0)]),
                Expr::atom("E", &[VarRef::Opt(1), VarRef::Count(0)]),
            ])
        );
    }

    #[test]
    fn parses_negation() {
        let f = parse_formula("min x . count y . !E(x,y)").unwrap();
        assert_eq!(f.kind, OptKind::Min);
        assert_eq!(
            f.body,
            Expr::not(Expr::atom("E", &[VarRef::Opt(0), VarRef::Count(0)]))
        );
    }

    #[test]
    fn reports_errors() {
        assert_eq!(
            parse_formula("max x . count y . E(x,z)").unwrap_err(),
            Error::UnboundVariable {
                name: "z".into(),
                pos: 22
            }
        );
        assert_eq!(
            parse_formula("max x,x . count y . E(x,y)").unwrap_err(),
            Error::DuplicateVariable("x".into())
        );
        assert_eq!(
            parse_formula("max x . count x . E(x,x)").unwrap_err(),
            Error::DuplicateVariable("x".into())
        );
        assert!(matches!(
            parse_formula("max x . count y . E(x,y) &").unwrap_err(),
            Error::Syntax { pos: 26, .. }
        ));
        assert!(matches!(
            parse_formula("sum x . count y . true").unwrap_err(),
            Error::Syntax { pos: 0, .. }
        ));
        assert!(matches!(
            parse_formula("max x . count y . E(x y)").unwrap_err(),
            Error::Syntax { .. }
        ));
        assert!(matches!(
            parse_formula("max x . count y . E(x,y) $").unwrap_err(),
            Error::Syntax { pos: 25, .. }
        ));
    }
}
