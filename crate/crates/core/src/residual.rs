//! Compiled formula bodies over projected relations, supporting the
//! "fix one variable, substitute into every predicate" step shared by the
//! brute-force recursions.

use std::collections::HashMap;
use std::sync::Arc;

use crate::formula::{Expr, VarRef};
use crate::problem::Problem;
use crate::structure::{ObjectId, Tuple};

/// Atom over distinct variables in ascending order; `tuples` are the
/// consistent records projected onto `vars`, sorted and unique.
#[derive(Debug)]
pub(crate) struct RAtom {
    pub vars: Vec<usize>,
    pub tuples: Vec<Tuple>,
}

impl RAtom {
    pub fn contains(&self, t: &[ObjectId]) -> bool {
        self.tuples.binary_search_by(|r| r.as_ref().cmp(t)).is_ok()
    }

    /// Tuples whose first coordinate is `o`.
    pub fn with_first(&self, o: ObjectId) -> &[Tuple] {
        let lo = self.tuples.partition_point(|t| t[0] < o);
        let hi = self.tuples.partition_point(|t| t[0] <= o);
        &self.tuples[lo..hi]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Node {
    Const(bool),
    Atom(usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
}

impl Node {
    pub fn eval(&self, truth: &mut impl FnMut(usize) -> bool) -> bool {
        match self {
            Node::Const(b) => *b,
            Node::Atom(i) => truth(*i),
            Node::Not(e) => !e.eval(truth),
            Node::And(es) => es.iter().all(|e| e.eval(truth)),
            Node::Or(es) => es.iter().any(|e| e.eval(truth)),
        }
    }

    /// Rewrites atoms through `f` and folds constants.
    pub fn substitute(&self, f: &impl Fn(usize) -> Node) -> Node {
        match self {
            Node::Const(b) => Node::Const(*b),
            Node::Atom(i) => f(*i),
            Node::Not(e) => match e.substitute(f) {
                Node::Const(b) => Node::Const(!b),
                s => Node::Not(Box::new(s)),
            },
            Node::And(es) => {
                let mut out = Vec::with_capacity(es.len());
                for e in es {
                    match e.substitute(f) {
                        Node::Const(true) => {}
                        Node::Const(false) => return Node::Const(false),
                        s => out.push(s),
                    }
                }
                match out.len() {
                    0 => Node::Const(true),
                    1 => out.pop().unwrap(),
                    _ => Node::And(out),
                }
            }
            Node::Or(es) => {
                let mut out = Vec::with_capacity(es.len());
                for e in es {
                    match e.substitute(f) {
                        Node::Const(false) => {}
                        Node::Const(true) => return Node::Const(true),
                        s => out.push(s),
                    }
                }
                match out.len() {
                    0 => Node::Const(false),
                    1 => out.pop().unwrap(),
                    _ => Node::Or(out),
                }
            }
        }
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            Node::Const(_) => {}
            Node::Atom(i) => out.push(*i),
            Node::Not(e) => e.collect(out),
            Node::And(es) | Node::Or(es) => es.iter().for_each(|e| e.collect(out)),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Residual {
    pub atoms: Vec<Arc<RAtom>>,
    pub body: Node,
    /// Domains indexed by the original variable order.
    pub domains: Vec<Arc<[ObjectId]>>,
    pub n: usize,
}

impl Residual {
    pub fn compile(p: &Problem) -> Residual {
        let nv = p.k() + p.l();
        let n = p.structure.n();
        let member: Vec<Vec<bool>> = (0..nv)
            .map(|v| {
                let mut m = vec![false; n];
                for o in p.domains.get(v) {
                    m[o.index()] = true;
                }
                m
            })
            .collect();
        let mut atoms: Vec<Arc<RAtom>> = Vec::new();
        let mut seen: HashMap<(String, Vec<VarRef>), usize> = HashMap::new();
        let body = compile_expr(&p.formula.body, &mut |pred, args| {
            let key = (pred.to_string(), args.to_vec());
            if let Some(&i) = seen.get(&key) {
                return i;
            }
            let idx: Vec<usize> = args.iter().map(|v| p.formula.var_index(*v)).collect();
            let mut vars = idx.clone();
            vars.sort_unstable();
            vars.dedup();
            let slot: Vec<usize> = idx.iter().map(|v| vars.binary_search(v).unwrap()).collect();
            let mut tuples = Vec::new();
            let mut buf = vec![ObjectId(0); vars.len()];
            if let Some(rel) = p.structure.relation(pred) {
                'rec: for r in rel.records() {
                    let mut set = vec![false; vars.len()];
                    for (pos, o) in r.iter().enumerate() {
                        let s = slot[pos];
                        if set[s] {
                            if buf[s] != *o {
                                continue 'rec;
                            }
                        } else {
                            if !member[vars[s]][o.index()] {
                                continue 'rec;
                            }
                            buf[s] = *o;
                            set[s] = true;
                        }
                    }
                    tuples.push(buf.clone().into_boxed_slice());
                }
            }
            tuples.sort_unstable();
            tuples.dedup();
            atoms.push(Arc::new(RAtom { vars, tuples }));
            seen.insert(key, atoms.len() - 1);
            atoms.len() - 1
        });
        let body = body.substitute(&|i| Node::Atom(i));
        Residual {
            atoms,
            body,
            domains: (0..nv).map(|v| p.domains.shared(v)).collect(),
            n,
        }
    }

    /// Substitutes `var := obj` everywhere.
    pub fn fix(&self, var: usize, obj: ObjectId) -> Residual {
        enum Repl {
            Keep(usize),
            Const(bool),
        }
        let mut atoms: Vec<Arc<RAtom>> = Vec::new();
        let mut repl = Vec::with_capacity(self.atoms.len());
        let used = self.used_atoms();
        for (i, a) in self.atoms.iter().enumerate() {
            if !used[i] {
                repl.push(Repl::Const(false));
                continue;
            }
            let Some(p) = a.vars.iter().position(|&v| v == var) else {
                atoms.push(a.clone());
                repl.push(Repl::Keep(atoms.len() - 1));
                continue;
            };
            if a.vars.len() == 1 {
                repl.push(Repl::Const(a.contains(&[obj])));
                continue;
            }
            let mut vars = a.vars.clone();
            vars.remove(p);
            let strip = |t: &Tuple| -> Tuple {
                let mut v = t.to_vec();
                v.remove(p);
                v.into_boxed_slice()
            };
            let tuples: Vec<Tuple> = if p == 0 {
                a.with_first(obj).iter().map(strip).collect()
            } else {
                let mut ts: Vec<Tuple> = a.tuples.iter().filter(|t| t[p] == obj).map(strip).collect();
                ts.sort_unstable();
                ts
            };
            atoms.push(Arc::new(RAtom { vars, tuples }));
            repl.push(Repl::Keep(atoms.len() - 1));
        }
        let body = self.body.substitute(&|i| match repl[i] {
            Repl::Keep(j) => Node::Atom(j),
            Repl::Const(b) => Node::Const(b),
        });
        Residual {
            atoms,
            body,
            domains: self.domains.clone(),
            n: self.n,
        }
    }

    pub fn used_atoms(&self) -> Vec<bool> {
        let mut ids = Vec::new();
        self.body.collect(&mut ids);
        let mut used = vec![false; self.atoms.len()];
        for i in ids {
            used[i] = true;
        }
        used
    }

    /// Evaluates the body under a full assignment indexed by variable.
    pub fn eval_at(&self, assignment: &[ObjectId]) -> bool {
        let mut buf = Vec::with_capacity(4);
        self.body.eval(&mut |i| {
            let a = &self.atoms[i];
            buf.clear();
            buf.extend(a.vars.iter().map(|&v| assignment[v]));
            a.contains(&buf)
        })
    }

    pub fn domain(&self, var: usize) -> &[ObjectId] {
        &self.domains[var]
    }

    /// Total number of stored tuples over atoms used by the body.
    pub fn size(&self) -> usize {
        let used = self.used_atoms();
        self.atoms
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(a, _)| a.tuples.len())
            .sum()
    }
}

fn compile_expr(e: &Expr, atom: &mut impl FnMut(&str, &[VarRef]) -> usize) -> Node {
    match e {
        Expr::Const(b) => Node::Const(*b),
        Expr::Atom(a) => Node::Atom(atom(&a.predicate, &a.args)),
        Expr::Not(inner) => Node::Not(Box::new(compile_expr(inner, atom))),
        Expr::And(es) => Node::And(es.iter().map(|x| compile_expr(x, atom)).collect()),
        Expr::Or(es) => Node::Or(es.iter().map(|x| compile_expr(x, atom)).collect()),
    }
}
