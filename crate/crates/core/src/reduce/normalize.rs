use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{extend_structure, fresh_name, NewRelation};
use crate::error::Result;
use crate::formula::{Atom, Expr, OptFormula, VarDecl, VarRef};
use crate::problem::Problem;
use crate::structure::ObjectId;

/// Rewrites `p` so that every atom lists distinct variables in ascending
/// order (derived relations `R__<pattern>` absorb repeats and permutations)
/// and count-variable domains become unary conjuncts. Object ids are kept,
/// so values and witnesses carry over unchanged.
pub fn normalize(p: &Problem) -> Result<Problem> {
    let f = &p.formula;
    let s = &p.structure;
    let mut taken: BTreeSet<String> = s.relations().map(|r| r.name().to_string()).collect();
    let mut derived: BTreeMap<(String, Vec<usize>), String> = BTreeMap::new();
    let mut extra: Vec<NewRelation> = Vec::new();

    let mut body = f.body.map_atoms(&mut |a: &Atom| {
        let idx: Vec<usize> = a.args.iter().map(|v| f.var_index(*v)).collect();
        if idx.windows(2).all(|w| w[0] < w[1]) {
            return None;
        }
        let mut vars = idx.clone();
        vars.sort_unstable();
        vars.dedup();
        let pattern: Vec<usize> = idx.iter().map(|v| vars.binary_search(v).unwrap()).collect();
        let key = (a.predicate.clone(), pattern.clone());
        let name = derived
            .entry(key)
            .or_insert_with(|| {
                let base = format!(
                    "{}__{}",
                    a.predicate,
                    pattern.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("_")
                );
                let name = fresh_name(&base, |n| taken.contains(n));
                taken.insert(name.clone());
                let records = project(p, &a.predicate, &pattern, vars.len());
                extra.push((name.clone(), vars.len(), records));
                name
            })
            .clone();
        let args: Vec<VarRef> = vars.iter().map(|&v| f.var_ref(v)).collect();
        Some(Expr::atom(&name, &args))
    });

    let k = f.k();
    let mut domains = p.domains.clone();
    let mut guards = Vec::new();
    for c in 0..f.l() {
        let v = k + c;
        if domains.get(v).len() == s.n() {
            continue;
        }
        let name = fresh_name(&format!("dom__{}", f.count_vars[c].name), |n| taken.contains(n));
        taken.insert(name.clone());
        extra.push((name.clone(), 1, domains.get(v).iter().map(|&o| vec![o]).collect()));
        guards.push(Expr::atom(&name, &[VarRef::Count(c)]));
        domains.set(v, (0..s.n() as u32).map(ObjectId).collect());
    }
    if !guards.is_empty() {
        guards.push(body);
        body = Expr::and(guards);
    }

    let structure = if extra.is_empty() {
        p.structure.clone()
    } else {
        Arc::new(extend_structure(s, extra))
    };
    let formula = OptFormula {
        kind: f.kind,
        opt_vars: f.opt_vars.iter().map(|d| VarDecl::new(&d.name)).collect(),
        count_vars: f.count_vars.iter().map(|d| VarDecl::new(&d.name)).collect(),
        body: body.simplify(),
    };
    Problem::with_domains(structure, formula, domains)
}

/// Records of `pred` consistent with `pattern`, projected onto its slots.
fn project(p: &Problem, pred: &str, pattern: &[usize], width: usize) -> Vec<Vec<ObjectId>> {
    let Some(rel) = p.structure.relation(pred) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    'rec: for r in rel.records() {
        let mut t: Vec<Option<ObjectId>> = vec![None; width];
        for (pos, &o) in r.iter().enumerate() {
            match t[pattern[pos]] {
                Some(prev) if prev != o => continue 'rec,
                _ => t[pattern[pos]] = Some(o),
            }
        }
        out.push(t.into_iter().map(Option::unwrap).collect());
    }
    out
}

/// True if every atom already has distinct ascending variables.
pub fn is_normalized(p: &Problem) -> bool {
    let f = &p.formula;
    f.body.atoms().iter().all(|a| {
        a.args
            .windows(2)
            .all(|w| f.var_index(w[0]) < f.var_index(w[1]))
    }) && (0..f.l()).all(|c| p.domains.get(f.k() + c).len() == p.structure.n())
}
