use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formula::{Atom, Expr, OptKind, VarRef};
use crate::problem::{Problem, Solution};
use crate::residual::Residual;
use crate::structure::{ObjectId, Tuple};

/// Optimum of a body `E(x_i,x_j) & phi'`: pairs outside `E` have value 0
/// and take part in the optimization.
pub fn solve_positive_cross_edge(p: &Problem, edge: &Atom) -> Result<Option<Solution>> {
    let (i, j) = edge_vars(p, edge)?;
    let top_level = match &p.formula.body {
        Expr::Atom(a) => a == edge,
        Expr::And(parts) => parts.iter().any(|e| matches!(e, Expr::Atom(a) if a == edge)),
        _ => false,
    };
    if !top_level {
        return Err(Error::Contract(format!(
            "body must be a conjunction containing {}({}, {})",
            edge.predicate,
            p.formula.var_decl(VarRef::Opt(i)).name,
            p.formula.var_decl(VarRef::Opt(j)).name
        )));
    }
    let forced = solve_forced_edge(p, edge)?;
    let zero = first_non_edge(p, edge, i, j)?.map(|witness| Solution { value: 0, witness });
    Ok(pick(p.kind(), forced, zero))
}

/// Optimum over the tuples whose `(x_i, x_j)` lies in the edge relation;
/// `None` if there is no such tuple.
pub fn solve_forced_edge(p: &Problem, edge: &Atom) -> Result<Option<Solution>> {
    let (i, j) = edge_vars(p, edge)?;
    let (i, j) = (i.min(j), i.max(j));
    let edges = edge_tuples(p, edge)?;
    let res = Residual::compile(p);
    let k = p.k();
    let others: Vec<usize> = (0..k).filter(|&v| v != i && v != j).collect();
    let mut best: Option<Solution> = None;
    let mut asg = vec![ObjectId(0); k];
    let kind = p.kind();
    walk(&res, &others, &mut asg, &mut |r, asg| {
        pair_values(r, i, j, k, &edges, &mut |a, b, v| {
            asg[i] = a;
            asg[j] = b;
            let cand = Solution {
                value: v,
                witness: asg.clone(),
            };
            best = pick(kind, best.take(), Some(cand));
        });
    });
    Ok(best)
}

fn edge_vars(p: &Problem, edge: &Atom) -> Result<(usize, usize)> {
    if p.l() != 1 {
        return Err(Error::Contract(format!("need exactly one count variable, got {}", p.l())));
    }
    match edge.args.as_slice() {
        [VarRef::Opt(a), VarRef::Opt(b)] if a != b && *a < p.k() && *b < p.k() => Ok((*a, *b)),
        _ => Err(Error::Contract(format!(
            "`{}` must link two distinct optimization variables",
            edge.predicate
        ))),
    }
}

/// Edge records as `(x_lo, x_hi)` pairs inside the variable domains.
fn edge_tuples(p: &Problem, edge: &Atom) -> Result<Vec<Tuple>> {
    let only = p.with_formula(p.formula.with_body(Expr::Atom(edge.clone())))?;
    let res = Residual::compile(&only);
    Ok(res.atoms[0].tuples.clone())
}

/// Better value wins; ties keep the smaller tuple.
fn pick(kind: OptKind, a: Option<Solution>, b: Option<Solution>) -> Option<Solution> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if kind.better(b.value, a.value) || (b.value == a.value && b.witness < a.witness) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Smallest tuple whose `(x_i, x_j)` is not an edge.
fn first_non_edge(p: &Problem, edge: &Atom, i: usize, j: usize) -> Result<Option<Vec<ObjectId>>> {
    let k = p.k();
    if (0..k).any(|v| p.domains.get(v).is_empty()) {
        return Ok(None);
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let edges = edge_tuples(p, edge)?;
    let mut t: Vec<ObjectId> = (0..k).map(|v| p.domains.get(v)[0]).collect();
    let dom_hi = p.domains.get(hi);
    for &a in p.domains.get(lo) {
        let lo_i = edges.partition_point(|e| e[0] < a);
        let hi_i = edges.partition_point(|e| e[0] <= a);
        let nbrs = &edges[lo_i..hi_i];
        if nbrs.len() == dom_hi.len() {
            continue;
        }
        let b = dom_hi
            .iter()
            .copied()
            .find(|b| nbrs.binary_search_by(|e| e[1].cmp(b)).is_err())
            .expect("fewer neighbours than domain objects");
        t[lo] = a;
        t[hi] = b;
        return Ok(Some(t));
    }
    Ok(None)
}

/// Brute-forces the variables in `rest` and hands each residual to `leaf`.
fn walk(
    r: &Residual,
    rest: &[usize],
    asg: &mut Vec<ObjectId>,
    leaf: &mut dyn FnMut(&Residual, &mut Vec<ObjectId>),
) {
    let Some((&v, tail)) = rest.split_first() else {
        leaf(r, asg);
        return;
    };
    for &o in r.domain(v).iter() {
        asg[v] = o;
        walk(&r.fix(v, o), tail, asg, leaf);
    }
}

/// Values of all edge pairs in a residual over `x_i, x_j, y`: heavy
/// endpoints are fixed and counted directly, light-light edges use the
/// candidate/fallback split.
fn pair_values(
    r: &Residual,
    i: usize,
    j: usize,
    y: usize,
    edges: &[Tuple],
    visit: &mut dyn FnMut(ObjectId, ObjectId, u64),
) {
    if edges.is_empty() {
        return;
    }
    let used = r.used_atoms();
    let mut deg_i: HashMap<ObjectId, usize> = HashMap::new();
    let mut deg_j: HashMap<ObjectId, usize> = HashMap::new();
    for (a, u) in r.atoms.iter().zip(&used) {
        if !u {
            continue;
        }
        for (pos, &v) in a.vars.iter().enumerate() {
            let d = if v == i {
                &mut deg_i
            } else if v == j {
                &mut deg_j
            } else {
                continue;
            };
            for t in &a.tuples {
                *d.entry(t[pos]).or_default() += 1;
            }
        }
    }
    for e in edges {
        *deg_i.entry(e[0]).or_default() += 1;
        *deg_j.entry(e[1]).or_default() += 1;
    }
    let m = r.size() + edges.len();
    let heavy = |d: &HashMap<ObjectId, usize>, o: ObjectId| {
        let d = d.get(&o).copied().unwrap_or(0);
        d * d >= m
    };

    // heavy x_i
    let mut s = 0;
    while s < edges.len() {
        let a = edges[s][0];
        let e = s + edges[s..].partition_point(|t| t[0] == a);
        if heavy(&deg_i, a) {
            let ra = r.fix(i, a);
            for t in &edges[s..e] {
                visit(a, t[1], count_unary(&ra.fix(j, t[1]), y));
            }
        }
        s = e;
    }
    // heavy x_j, light x_i
    let mut by_b: Vec<(ObjectId, ObjectId)> = edges
        .iter()
        .filter(|t| !heavy(&deg_i, t[0]) && heavy(&deg_j, t[1]))
        .map(|t| (t[1], t[0]))
        .collect();
    by_b.sort_unstable();
    let mut s = 0;
    while s < by_b.len() {
        let b = by_b[s].0;
        let e = s + by_b[s..].partition_point(|t| t.0 == b);
        let rb = r.fix(j, b);
        for &(_, a) in &by_b[s..e] {
            visit(a, b, count_unary(&rb.fix(i, a), y));
        }
        s = e;
    }
    // light-light
    let light = LightCounter::new(r, i, j, y);
    for t in edges {
        if !heavy(&deg_i, t[0]) && !heavy(&deg_j, t[1]) {
            visit(t[0], t[1], light.value(t[0], t[1]));
        }
    }
}

/// Count over the single free variable `y` by unary color classes.
fn count_unary(r: &Residual, y: usize) -> u64 {
    let used = r.used_atoms();
    let atoms: Vec<usize> = (0..r.atoms.len()).filter(|&i| used[i]).collect();
    let dom = r.domain(y);
    if atoms.len() > 64 {
        return dom.iter().filter(|&&o| r.eval_at(&assign(r, y, o))).count() as u64;
    }
    let mut bit = vec![0u32; r.atoms.len()];
    let mut color: HashMap<ObjectId, u64> = HashMap::new();
    for (b, &i) in atoms.iter().enumerate() {
        debug_assert_eq!(r.atoms[i].vars, vec![y]);
        bit[i] = b as u32;
        for t in &r.atoms[i].tuples {
            *color.entry(t[0]).or_default() |= 1 << b;
        }
    }
    let mut classes: HashMap<u64, u64> = HashMap::new();
    for c in color.values() {
        *classes.entry(*c).or_default() += 1;
    }
    let zero = dom.len() as u64 - color.len() as u64;
    if zero > 0 {
        *classes.entry(0).or_default() += zero;
    }
    classes
        .into_iter()
        .filter(|(c, _)| r.body.eval(&mut |i| c >> bit[i] & 1 == 1))
        .map(|(_, n)| n)
        .sum()
}

fn assign(r: &Residual, v: usize, o: ObjectId) -> Vec<ObjectId> {
    let mut a = vec![ObjectId(0); r.domains.len()];
    a[v] = o;
    a
}

#[derive(Clone, Copy)]
enum Kind {
    YUnary(u32),
    XSide,
    Link,
    Unused,
}

/// For a light edge `(a, b)`: objects `y` sharing a record with `a` or `b`
/// are evaluated directly; all others see every non-unary atom as false and
/// are counted through unary color class sizes.
struct LightCounter<'a> {
    r: &'a Residual,
    i: usize,
    j: usize,
    y: usize,
    kinds: Vec<Kind>,
    color: HashMap<ObjectId, u64>,
    classes: Vec<(u64, u64)>,
    naive: bool,
}

impl<'a> LightCounter<'a> {
    fn new(r: &'a Residual, i: usize, j: usize, y: usize) -> Self {
        let used = r.used_atoms();
        let mut kinds = vec![Kind::Unused; r.atoms.len()];
        let mut nbits = 0u32;
        let mut color: HashMap<ObjectId, u64> = HashMap::new();
        for (idx, a) in r.atoms.iter().enumerate() {
            if !used[idx] {
                continue;
            }
            kinds[idx] = if a.vars == [y] {
                if nbits < 64 {
                    for t in &a.tuples {
                        *color.entry(t[0]).or_default() |= 1 << nbits;
                    }
                }
                nbits += 1;
                Kind::YUnary(nbits - 1)
            } else if a.vars.contains(&y) {
                Kind::Link
            } else {
                Kind::XSide
            };
        }
        let mut classes: HashMap<u64, u64> = HashMap::new();
        for c in color.values() {
            *classes.entry(*c).or_default() += 1;
        }
        let zero = r.domain(y).len() as u64 - color.len() as u64;
        if zero > 0 {
            *classes.entry(0).or_default() += zero;
        }
        let mut classes: Vec<(u64, u64)> = classes.into_iter().collect();
        classes.sort_unstable();
        LightCounter {
            r,
            i,
            j,
            y,
            kinds,
            color,
            classes,
            naive: nbits > 64,
        }
    }

    fn value(&self, a: ObjectId, b: ObjectId) -> u64 {
        let r = self.r;
        let mut asg = vec![ObjectId(0); r.domains.len()];
        asg[self.i] = a;
        asg[self.j] = b;
        if self.naive {
            return r
                .domain(self.y)
                .iter()
                .filter(|&&o| {
                    asg[self.y] = o;
                    r.eval_at(&asg)
                })
                .count() as u64;
        }
        let mut buf = Vec::with_capacity(3);
        let mut holds = |idx: usize, asg: &[ObjectId]| {
            let at = &r.atoms[idx];
            buf.clear();
            buf.extend(at.vars.iter().map(|&v| asg[v]));
            at.contains(&buf)
        };
        let xside: Vec<bool> = (0..r.atoms.len())
            .map(|idx| matches!(self.kinds[idx], Kind::XSide) && holds(idx, &asg))
            .collect();
        let eval = |c: u64, link: &mut dyn FnMut(usize) -> bool| -> bool {
            r.body.eval(&mut |idx| match self.kinds[idx] {
                Kind::YUnary(bit) => c >> bit & 1 == 1,
                Kind::XSide => xside[idx],
                Kind::Link => link(idx),
                Kind::Unused => unreachable!(),
            })
        };
        let mut total: i64 = self
            .classes
            .iter()
            .filter(|(c, _)| eval(*c, &mut |_| false))
            .map(|(_, n)| *n as i64)
            .sum();

        let mut cands: Vec<ObjectId> = Vec::new();
        for (idx, at) in r.atoms.iter().enumerate() {
            if !matches!(self.kinds[idx], Kind::Link) {
                continue;
            }
            match at.vars.as_slice() {
                [v, _] if *v == self.i => cands.extend(at.with_first(a).iter().map(|t| t[1])),
                [v, _] if *v == self.j => cands.extend(at.with_first(b).iter().map(|t| t[1])),
                [_, _, _] => cands.extend(at.with_first(a).iter().filter(|t| t[1] == b).map(|t| t[2])),
                other => unreachable!("link atom over {other:?}"),
            }
        }
        cands.sort_unstable();
        cands.dedup();
        for o in cands {
            asg[self.y] = o;
            let c = self.color.get(&o).copied().unwrap_or(0);
            let full = eval(c, &mut |idx| holds(idx, &asg));
            let fallback = eval(c, &mut |_| false);
            total += full as i64 - fallback as i64;
        }
        debug_assert!(total >= 0);
        total as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::load_structure;

    #[test]
    fn forced_edge_example() {
        let s = load_structure("rel E 2\nrel F 2\nE a b\nF a 1\nF a 2").unwrap();
        let f = parse_formula("max x1,x2 . count y . E(x1,x2) & F(x1,y)").unwrap();
        let p = Problem::from_parts(&s, &f).unwrap();
        let edge = p.formula.body.atoms()[0].clone();
        let sol = solve_positive_cross_edge(&p, &edge).unwrap().unwrap();
        assert_eq!(sol.value, 2);
        assert_eq!(sol.witness, vec![s.object("a").unwrap(), s.object("b").unwrap()]);
    }

    #[test]
    fn shape_is_checked() {
        let s = load_structure("rel E 2\nE a b").unwrap();
        let f = parse_formula("max x1,x2 . count y . !E(x1,x2)").unwrap();
        let p = Problem::from_parts(&s, &f).unwrap();
        let edge = Atom {
            predicate: "E".into(),
            args: vec![VarRef::Opt(0), VarRef::Opt(1)],
        };
        assert!(matches!(solve_positive_cross_edge(&p, &edge), Err(Error::Contract(_))));
    }
}
