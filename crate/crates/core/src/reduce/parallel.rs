use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::{fresh_name, normalize};
use crate::error::{Error, Result};
use crate::formula::{Expr, OptFormula, VarDecl, VarRef};
use crate::problem::{Domains, Problem};
use crate::structure::{ObjectId, StructureBuilder};

/// Largest number of `y` copies per object.
pub const MAX_COPIES: usize = 1 << 12;

#[derive(Clone, Debug)]
pub struct ParallelReduction {
    pub problem: Problem,
    /// Source object of every object in the new structure.
    pub origin: Vec<ObjectId>,
    /// The single binary predicate of the new formula.
    pub edge: String,
    /// Copies made of each count-variable object.
    pub copies: usize,
}

/// Replaces the binary predicates between optimization variables and the
/// count variable by a single predicate `E`. Every optimization variable
/// gets its own copy `x@i` of its domain; every `y` gets one copy per color
/// pattern `alpha` (marked by a unary `C_alpha`), linked so that exactly
/// the copy matching the actual colors satisfies the edge pattern.
/// With `prune`, patterns are limited to colors that occur.
pub fn remove_parallel_edges(p: &Problem, cap: usize, prune: bool) -> Result<ParallelReduction> {
    if p.l() != 1 {
        return Err(Error::Contract(format!("need exactly one count variable, got {}", p.l())));
    }
    let p = normalize(p)?;
    let f = &p.formula;
    let k = p.k();
    let y = VarRef::Count(0);
    let profile = p.profile();
    if profile.has_hyper || !profile.cross_atoms.is_empty() {
        return Err(Error::Contract(
            "parallel-edge removal needs a formula without hyper or cross predicates".into(),
        ));
    }
    if profile.r > cap {
        return Err(Error::Unsupported(format!(
            "{} binary predicates link optimization and count variables; the copy blow-up \
             2^(r k) is refused above r = {cap} (raise the cap or merge predicates)",
            profile.r
        )));
    }

    // binary predicates per opt variable, and unary predicates per variable
    let mut linked: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    let mut unary_x: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    let mut unary_y: BTreeSet<String> = BTreeSet::new();
    for a in f.body.atoms() {
        match a.args.as_slice() {
            [VarRef::Opt(i)] => {
                unary_x[*i].insert(a.predicate.clone());
            }
            [VarRef::Count(_)] => {
                unary_y.insert(a.predicate.clone());
            }
            [VarRef::Opt(i), VarRef::Count(_)] => {
                linked[*i].insert(a.predicate.clone());
            }
            _ => unreachable!("normalized atom {a:?}"),
        }
    }
    let linked: Vec<Vec<String>> = linked.into_iter().map(|s| s.into_iter().collect()).collect();

    let dom_y = p.domains.get(k);
    let in_y: Vec<bool> = {
        let mut v = vec![false; p.structure.n()];
        dom_y.iter().for_each(|o| v[o.index()] = true);
        v
    };
    // chi_i(x, y) for every nonzero pair
    let mut chi: Vec<BTreeMap<(ObjectId, ObjectId), u32>> = vec![BTreeMap::new(); k];
    for i in 0..k {
        let in_x: BTreeSet<ObjectId> = p.domains.get(i).iter().copied().collect();
        for (bit, pred) in linked[i].iter().enumerate() {
            for t in p.structure.relation(pred).expect("classified").records() {
                if in_x.contains(&t[0]) && in_y[t[1].index()] {
                    *chi[i].entry((t[0], t[1])).or_default() |= 1 << bit;
                }
            }
        }
    }
    let palettes: Vec<Vec<u32>> = (0..k)
        .map(|i| {
            if prune {
                let set: BTreeSet<u32> = chi[i].values().copied().chain([0]).collect();
                set.into_iter().collect()
            } else {
                (0..1u32 << linked[i].len()).collect()
            }
        })
        .collect();
    let copies = palettes.iter().try_fold(1usize, |acc, pal| acc.checked_mul(pal.len()));
    let copies = match copies {
        Some(c) if c <= MAX_COPIES => c,
        _ => {
            return Err(Error::Resource(format!(
                "color patterns exceed {MAX_COPIES} copies per object"
            )))
        }
    };
    // alpha patterns in lexicographic order, as indices into the palettes
    let mut patterns: Vec<Vec<u32>> = vec![Vec::new()];
    for pal in &palettes {
        patterns = patterns
            .into_iter()
            .flat_map(|pre| {
                pal.iter().map(move |&c| {
                    let mut v = pre.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }

    let mut taken: BTreeSet<String> = unary_x.iter().flatten().chain(&unary_y).cloned().collect();
    let edge = fresh_name("E", |n| taken.contains(n));
    taken.insert(edge.clone());
    let markers: Vec<String> = patterns
        .iter()
        .map(|a| {
            let base = format!("C_{}", a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_"));
            let name = fresh_name(&base, |n| taken.contains(n));
            taken.insert(name.clone());
            name
        })
        .collect();

    let s = &p.structure;
    let mut b = StructureBuilder::new();
    let mut origin = Vec::new();
    let mut xcopy: Vec<HashMap<ObjectId, ObjectId>> = vec![HashMap::new(); k];
    for i in 0..k {
        for &x in p.domains.get(i) {
            let id = b.object(&format!("{}@{}", s.label(x), i + 1));
            origin.push(x);
            xcopy[i].insert(x, id);
        }
    }
    let mut ycopies: HashMap<ObjectId, Vec<ObjectId>> = HashMap::new();
    for &yo in dom_y {
        let ids = patterns
            .iter()
            .map(|a| {
                let tag = a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".");
                let id = b.object(&format!("{}#{tag}", s.label(yo)));
                origin.push(yo);
                id
            })
            .collect();
        ycopies.insert(yo, ids);
    }
    for name in &taken {
        b.declare(name, if *name == edge { 2 } else { 1 })?;
    }
    for i in 0..k {
        for pred in &unary_x[i] {
            for t in s.relation(pred).expect("classified").records() {
                if let Some(&c) = xcopy[i].get(&t[0]) {
                    b.insert(pred, &[c])?;
                }
            }
        }
    }
    for pred in &unary_y {
        for t in s.relation(pred).expect("classified").records() {
            if let Some(cs) = ycopies.get(&t[0]) {
                for &c in cs {
                    b.insert(pred, &[c])?;
                }
            }
        }
    }
    for (a, marker) in markers.iter().enumerate() {
        for cs in ycopies.values() {
            b.insert(marker, &[cs[a]])?;
        }
    }
    for i in 0..k {
        for (&(x, yo), &c) in &chi[i] {
            let xc = xcopy[i][&x];
            let cs = &ycopies[&yo];
            for (a, pat) in patterns.iter().enumerate() {
                if pat[i] == c || pat[i] == 0 {
                    b.insert(&edge, &[xc, cs[a]])?;
                }
            }
        }
    }
    let structure = Arc::new(b.build());

    let mut disjuncts = Vec::new();
    for (pat, marker) in patterns.iter().zip(&markers) {
        let phi = f
            .body
            .map_atoms(&mut |a| match a.args.as_slice() {
                [VarRef::Opt(i), VarRef::Count(_)] => {
                    let bit = linked[*i].iter().position(|q| *q == a.predicate).unwrap();
                    Some(Expr::Const(pat[*i] >> bit & 1 == 1))
                }
                _ => None,
            })
            .simplify();
        if phi == Expr::Const(false) {
            continue;
        }
        let mut parts = vec![Expr::atom(marker, &[y])];
        for (i, &c) in pat.iter().enumerate() {
            let e = Expr::atom(&edge, &[VarRef::Opt(i), y]);
            parts.push(if c != 0 { e } else { Expr::not(e) });
        }
        parts.push(phi);
        disjuncts.push(Expr::and(parts));
    }
    let formula = OptFormula {
        kind: f.kind,
        opt_vars: f.opt_vars.iter().map(|d| VarDecl::new(&d.name)).collect(),
        count_vars: f.count_vars.iter().map(|d| VarDecl::new(&d.name)).collect(),
        body: Expr::or(disjuncts),
    };
    let mut doms: Vec<Vec<ObjectId>> = (0..k)
        .map(|i| {
            let mut v: Vec<ObjectId> = xcopy[i].values().copied().collect();
            v.sort_unstable();
            v
        })
        .collect();
    doms.push(ycopies.values().flatten().copied().collect());
    let problem = Problem::with_domains(structure, formula, Domains::from_vecs(doms))?;
    Ok(ParallelReduction {
        problem,
        origin,
        edge,
        copies,
    })
}
