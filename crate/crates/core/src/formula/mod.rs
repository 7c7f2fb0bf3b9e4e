//! Optimization formulas `opt_{x_1..x_k} #{(y_1..y_l) : phi}` and their AST.
//!
//! Concrete syntax:
//!
//! ```text
//! formula := ("max" | "min") varlist "." "count" varlist "." expr
//! varlist := var ("," var)*
//! var     := ident (":" ident)?        -- optional unary domain predicate
//! expr    := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | "(" expr ")" | "true" | "false" | ident "(" ident ("," ident)* ")"
//! ```

mod parser;
mod profile;

use std::fmt;

pub use parser::parse_formula;
pub use profile::{classify, FormulaProfile};

use crate::structure::{ObjectId, RelationalStructure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptKind {
    Max,
    Min,
}

impl OptKind {
    /// True if `a` is strictly preferred over `b`.
    pub fn better(self, a: u64, b: u64) -> bool {
        match self {
            OptKind::Max => a > b,
            OptKind::Min => a < b,
        }
    }

    pub fn pick(self, a: u64, b: u64) -> u64 {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OptKind::Max => "max",
            OptKind::Min => "min",
        }
    }
}

/// Reference to a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Opt(usize),
    Count(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<VarRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(bool),
    Atom(Atom),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn atom(predicate: &str, args: &[VarRef]) -> Self {
        Expr::Atom(Atom {
            predicate: predicate.to_string(),
            args: args.to_vec(),
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    /// Conjunction with nested conjunctions flattened.
    pub fn and(parts: Vec<Expr>) -> Self {
        Self::flat(parts, true)
    }

    /// Disjunction with nested disjunctions flattened.
    pub fn or(parts: Vec<Expr>) -> Self {
        Self::flat(parts, false)
    }

    fn flat(parts: Vec<Expr>, conj: bool) -> Self {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Expr::And(inner) if conj => out.extend(inner),
                Expr::Or(inner) if !conj => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::Const(conj),
            1 => out.pop().unwrap(),
            _ if conj => Expr::And(out),
            _ => Expr::Or(out),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Expr::Const(_) => {}
            Expr::Atom(a) => out.push(a),
            Expr::Not(e) => e.collect_atoms(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_atoms(out)),
        }
    }

    /// Evaluates with atom truth supplied by `truth`.
    pub fn eval_with(&self, truth: &mut impl FnMut(&Atom) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Atom(a) => truth(a),
            Expr::Not(e) => !e.eval_with(truth),
            Expr::And(es) => es.iter().all(|e| e.eval_with(truth)),
            Expr::Or(es) => es.iter().any(|e| e.eval_with(truth)),
        }
    }

    /// Replaces atoms according to `f`; `None` keeps the atom.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Atom(a) => f(a).unwrap_or_else(|| Expr::Atom(a.clone())),
            Expr::Not(e) => Expr::not(e.map_atoms(f)),
            Expr::And(es) => Expr::and(es.iter().map(|e| e.map_atoms(f)).collect()),
            Expr::Or(es) => Expr::or(es.iter().map(|e| e.map_atoms(f)).collect()),
        }
    }

    /// Folds constants.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Atom(_) => self.clone(),
            Expr::Not(e) => match e.simplify() {
                Expr::Const(b) => Expr::Const(!b),
                Expr::Not(inner) => *inner,
                s => Expr::not(s),
            },
            Expr::And(es) => {
                let mut out = Vec::new();
                for e in es {
                    match e.simplify() {
                        Expr::Const(true) => {}
                        Expr::Const(false) => return Expr::Const(false),
                        s => out.push(s),
                    }
                }
                Expr::and(out)
            }
            Expr::Or(es) => {
                let mut out = Vec::new();
                for e in es {
                    match e.simplify() {
                        Expr::Const(false) => {}
                        Expr::Const(true) => return Expr::Const(true),
                        s => out.push(s),
                    }
                }
                Expr::or(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    /// Unary predicate restricting the variable's range.
    pub domain: Option<String>,
}

impl VarDecl {
    pub fn new(name: &str) -> Self {
        VarDecl {
            name: name.to_string(),
            domain: None,
        }
    }

    pub fn with_domain(name: &str, domain: &str) -> Self {
        VarDecl {
            name: name.to_string(),
            domain: Some(domain.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OptFormula {
    pub kind: OptKind,
    pub opt_vars: Vec<VarDecl>,
    pub count_vars: Vec<VarDecl>,
    pub body: Expr,
}

impl OptFormula {
    pub fn new(kind: OptKind, opt: &[&str], count: &[&str], body: Expr) -> Self {
        OptFormula {
            kind,
            opt_vars: opt.iter().map(|n| VarDecl::new(n)).collect(),
            count_vars: count.iter().map(|n| VarDecl::new(n)).collect(),
            body,
        }
    }

    pub fn k(&self) -> usize {
        self.opt_vars.len()
    }

    pub fn l(&self) -> usize {
        self.count_vars.len()
    }

    /// Position of a variable in the combined order `x_1..x_k, y_1..y_l`.
    pub fn var_index(&self, v: VarRef) -> usize {
        match v {
            VarRef::Opt(i) => i,
            VarRef::Count(j) => self.k() + j,
        }
    }

    pub fn var_ref(&self, index: usize) -> VarRef {
        if index < self.k() {
            VarRef::Opt(index)
        } else {
            VarRef::Count(index - self.k())
        }
    }

    pub fn var_decl(&self, v: VarRef) -> &VarDecl {
        match v {
            VarRef::Opt(i) => &self.opt_vars[i],
            VarRef::Count(j) => &self.count_vars[j],
        }
    }

    pub fn with_body(&self, body: Expr) -> Self {
        OptFormula {
            body,
            ..self.clone()
        }
    }

    /// Truth value of the body under `assignment` (objects for
    /// `x_1..x_k, y_1..y_l`). Missing predicates read as empty relations.
    pub fn evaluate_body(&self, structure: &RelationalStructure, assignment: &[ObjectId]) -> bool {
        let mut buf = Vec::new();
        self.body.eval_with(&mut |a: &Atom| {
            buf.clear();
            buf.extend(a.args.iter().map(|v| assignment[self.var_index(*v)]));
            structure
                .relation(&a.predicate)
                .is_some_and(|r| r.arity() == buf.len() && r.contains(&buf))
        })
    }

    fn fmt_expr(&self, e: &Expr, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 0 = or, 1 = and, 2 = unary
        match e {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Atom(a) => {
                write!(f, "{}(", a.predicate)?;
                for (i, v) in a.args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(&self.var_decl(*v).name)?;
                }
                f.write_str(")")
            }
            Expr::Not(inner) => {
                f.write_str("!")?;
                self.fmt_expr(inner, 2, f)
            }
            Expr::And(es) | Expr::Or(es) => {
                let (mine, sep) = if matches!(e, Expr::And(_)) {
                    (1, " & ")
                } else {
                    (0, " | ")
                };
                let paren = prec > mine;
                if paren {
                    f.write_str("(")?;
                }
                for (i, c) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    // a nested node of the same operator needs parentheses to survive re-parsing flat
                    self.fmt_expr(c, mine + 1, f)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

fn fmt_vars(vars: &[VarDecl], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(&v.name)?;
        if let Some(d) = &v.domain {
            write!(f, ":{d}")?;
        }
    }
    Ok(())
}

impl fmt::Display for OptFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.kind.as_str())?;
        fmt_vars(&self.opt_vars, f)?;
        f.write_str(" . count ")?;
        fmt_vars(&self.count_vars, f)?;
        f.write_str(" . ")?;
        self.fmt_expr(&self.body, 0, f)
    }
}
