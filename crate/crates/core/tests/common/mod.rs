//! Independent nested-loop oracle: evaluates the body literally for every
//! assignment, reading relations straight from the structure.
#![allow(dead_code)]

use optsp::gen::{generate, GenProfile, GeneratedInstance};
use optsp::{Expr, ObjectId, OptFormula, OptKind, RelationalStructure, VarRef};

pub fn domain(s: &RelationalStructure, pred: &Option<String>) -> Vec<ObjectId> {
    s.objects()
        .filter(|&o| match pred {
            None => true,
            Some(p) => s.relation(p).unwrap().contains(&[o]),
        })
        .collect()
}

fn eval(e: &Expr, s: &RelationalStructure, f: &OptFormula, xs: &[ObjectId], ys: &[ObjectId]) -> bool {
    match e {
        Expr::Const(b) => *b,
        Expr::Atom(a) => {
            let t: Vec<ObjectId> = a
                .args
                .iter()
                .map(|v| match v {
                    VarRef::Opt(i) => xs[*i],
                    VarRef::Count(j) => ys[*j],
                })
                .collect();
            s.relation(&a.predicate).unwrap().contains(&t)
        }
        Expr::Not(x) => !eval(x, s, f, xs, ys),
        Expr::And(v) => v.iter().all(|x| eval(x, s, f, xs, ys)),
        Expr::Or(v) => v.iter().any(|x| eval(x, s, f, xs, ys)),
    }
}

fn tuples(doms: &[Vec<ObjectId>]) -> Vec<Vec<ObjectId>> {
    let mut out = vec![Vec::new()];
    for d in doms {
        out = out
            .into_iter()
            .flat_map(|p| {
                d.iter().map(move |&o| {
                    let mut v = p.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// Value of every opt tuple in lexicographic order.
pub fn naive_values(s: &RelationalStructure, f: &OptFormula) -> Vec<(Vec<ObjectId>, u64)> {
    let xd: Vec<_> = f.opt_vars.iter().map(|d| domain(s, &d.domain)).collect();
    let yd: Vec<_> = f.count_vars.iter().map(|d| domain(s, &d.domain)).collect();
    let ys = tuples(&yd);
    tuples(&xd)
        .into_iter()
        .map(|xs| {
            let v = ys.iter().filter(|y| eval(&f.body, s, f, &xs, y)).count() as u64;
            (xs, v)
        })
        .collect()
}

/// Optimum with the lexicographically smallest optimal tuple.
pub fn naive_opt(s: &RelationalStructure, f: &OptFormula) -> Option<(u64, Vec<ObjectId>)> {
    let mut best: Option<(u64, Vec<ObjectId>)> = None;
    for (t, v) in naive_values(s, f) {
        let better = match &best {
            None => true,
            Some((b, _)) => match f.kind {
                OptKind::Max => v > *b,
                OptKind::Min => v < *b,
            },
        };
        if better {
            best = Some((v, t));
        }
    }
    best
}

/// Criterion-1 style corpus: k in {2,3}, one count variable, n <= 20,
/// m <= 150, at most three binary and two unary predicates.
pub fn reduction_profile(seed: u64) -> GenProfile {
    let k = 2 + (seed % 2) as usize;
    GenProfile {
        k,
        l: 1,
        n: 6 + (seed % 15) as usize,
        density: [0.15, 0.3, 0.5, 0.8][(seed / 2 % 4) as usize],
        max_records: 150,
        binary: 1 + (seed / 3 % 3) as usize,
        unary: (seed / 5 % 3) as usize,
        ternary: 0,
        max_atoms: 5,
        kind: None,
        odd_atoms: true,
        domains: seed.is_multiple_of(7),
    }
}

pub fn reduction_instance(seed: u64) -> GeneratedInstance {
    generate(seed, &reduction_profile(seed)).unwrap()
}

/// Like `naive_values`, over the explicit domains of a problem.
pub fn naive_problem_values(p: &optsp::Problem) -> Vec<(Vec<ObjectId>, u64)> {
    let k = p.k();
    let xd: Vec<Vec<ObjectId>> = (0..k).map(|i| p.domains.get(i).to_vec()).collect();
    let yd: Vec<Vec<ObjectId>> = (0..p.l()).map(|j| p.domains.get(k + j).to_vec()).collect();
    let ys = tuples(&yd);
    tuples(&xd)
        .into_iter()
        .map(|xs| {
            let v = ys
                .iter()
                .filter(|y| eval(&p.formula.body, &p.structure, &p.formula, &xs, y))
                .count() as u64;
            (xs, v)
        })
        .collect()
}

/// Checks that parallel-edge removal and the hybrid translation keep the
/// value of every tuple of a cross- and hyper-free problem.
pub fn check_parallel_and_hybrid(p: &optsp::Problem) -> Result<usize, String> {
    use optsp::reduce::{remove_parallel_edges, to_hybrid};
    let par = remove_parallel_edges(p, 4, true).map_err(|e| e.to_string())?;
    let parts = to_hybrid(&par.problem, 1 << 16).map_err(|e| e.to_string())?;
    let k = p.k();
    // copy of x in the domain of variable i
    let copy = |i: usize, x: ObjectId| -> ObjectId {
        *par.problem
            .domains
            .get(i)
            .iter()
            .find(|c| par.origin[c.index()] == x)
            .expect("every domain object is copied")
    };
    let new_vals: std::collections::HashMap<Vec<ObjectId>, u64> =
        naive_problem_values(&par.problem).into_iter().collect();
    let mut checked = 0;
    for (xs, v) in naive_problem_values(p) {
        let ct: Vec<ObjectId> = (0..k).map(|i| copy(i, xs[i])).collect();
        if new_vals[&ct] != v {
            return Err(format!("parallel: tuple {xs:?} has {} not {v}", new_vals[&ct]));
        }
        let hits: Vec<_> = parts.iter().filter_map(|h| h.locate(&ct).map(|idx| (h, idx))).collect();
        if hits.len() != 1 {
            return Err(format!("tuple {xs:?} lies in {} hybrid parts", hits.len()));
        }
        let (h, idx) = &hits[0];
        let hv = h.instance.total(idx);
        if hv != v {
            return Err(format!("hybrid: tuple {xs:?} has {hv} not {v}"));
        }
        checked += 1;
    }
    Ok(checked)
}
