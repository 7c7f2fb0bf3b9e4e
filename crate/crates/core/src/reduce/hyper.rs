use std::collections::BTreeSet;
use std::sync::Arc;

use super::{extend_structure, fresh_name, normalize};
use crate::error::{Error, Result};
use crate::formula::{Atom, Expr, OptKind, VarRef};
use crate::problem::{Problem, Solution};
use crate::structure::ObjectId;

/// A side problem. Its body equals the source body on tuples with
/// `edge(x_i, x_j)` and is never better than it elsewhere.
#[derive(Clone, Debug)]
pub struct SideProblem {
    pub problem: Problem,
    pub edge: Atom,
}

/// The optimum of the source instance is `combiner` over the main optimum
/// and all side optima.
#[derive(Clone, Debug)]
pub struct DecompositionPlan {
    pub main: Problem,
    pub side_problems: Vec<SideProblem>,
    pub combiner: OptKind,
}

impl DecompositionPlan {
    /// Combines already computed main and side results.
    pub fn combine(&self, main: Option<Solution>, sides: Vec<Option<Solution>>) -> Option<Solution> {
        sides
            .into_iter()
            .fold(main, |acc, s| Solution::merge(self.combiner, acc, s))
    }
}

/// Replaces hyperpredicates by false in the main problem, guarded by a new
/// binary relation `N` holding every object pair that shares a hyper
/// record; tuples hitting `N` go to one side problem per variable pair.
pub fn remove_hyperedges(p: &Problem) -> Result<DecompositionPlan> {
    if p.l() != 1 {
        return Err(Error::Contract(format!("need exactly one count variable, got {}", p.l())));
    }
    let p = normalize(p)?;
    let f = &p.formula;
    let hyper: BTreeSet<String> = f
        .body
        .atoms()
        .into_iter()
        .filter(|a| a.args.len() >= 3)
        .map(|a| a.predicate.clone())
        .collect();
    if hyper.is_empty() {
        return Ok(DecompositionPlan {
            main: p.clone(),
            side_problems: Vec::new(),
            combiner: p.kind(),
        });
    }
    let mut pairs: BTreeSet<(ObjectId, ObjectId)> = BTreeSet::new();
    for name in &hyper {
        for r in p.structure.relation(name).expect("classified").records() {
            for a in 0..r.len() {
                for b in 0..r.len() {
                    if a != b {
                        pairs.insert((r[a], r[b]));
                    }
                }
            }
        }
    }
    let nname = fresh_name("N", |n| p.structure.relation(n).is_some());
    let records = pairs.into_iter().map(|(a, b)| vec![a, b]).collect();
    let structure = Arc::new(extend_structure(&p.structure, vec![(nname.clone(), 2, records)]));

    let k = p.k();
    let n_atom = |i: usize, j: usize| Atom {
        predicate: nname.clone(),
        args: vec![VarRef::Opt(i), VarRef::Opt(j)],
    };
    let stripped = f
        .body
        .map_atoms(&mut |a| (a.args.len() >= 3).then_some(Expr::Const(false)))
        .simplify();
    let mut guard = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            guard.push(Expr::Atom(n_atom(i, j)));
        }
    }
    let main_body = match p.kind() {
        OptKind::Max => {
            let mut parts: Vec<Expr> = guard.iter().cloned().map(Expr::not).collect();
            parts.push(stripped);
            Expr::and(parts)
        }
        OptKind::Min => {
            let mut parts = guard.clone();
            parts.push(stripped);
            Expr::or(parts)
        }
    };
    let main = Problem::with_domains(structure.clone(), f.with_body(main_body.simplify()), p.domains.clone())?;
    let mut side_problems = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let edge = n_atom(i, j);
            let body = match p.kind() {
                OptKind::Max => Expr::and(vec![Expr::Atom(edge.clone()), f.body.clone()]),
                OptKind::Min => Expr::or(vec![Expr::not(Expr::Atom(edge.clone())), f.body.clone()]),
            };
            side_problems.push(SideProblem {
                problem: Problem::with_domains(structure.clone(), f.with_body(body), p.domains.clone())?,
                edge,
            });
        }
    }
    Ok(DecompositionPlan {
        main,
        side_problems,
        combiner: p.kind(),
    })
}
