//! Reference solver: brute-force the leading variable, substitute it into
//! every predicate, and finish each two-variable residual in linear time
//! with the color decomposition
//! `psi(x) = sum_{a,b} phi(chi(x), a, b) * C(x; a, b)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formula::{OptFormula, OptKind};
use crate::problem::{Problem, Solution};
use crate::residual::Residual;
use crate::structure::{ObjectId, RelationalStructure};

/// Above this many unary predicates on one side the base case is naive.
pub const MAX_COLOR_BITS: usize = 20;

/// `Val(x_1..x_k)` for every tuple over the opt domains, in lexicographic
/// order of object indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueTable {
    k: usize,
    entries: Vec<(Vec<ObjectId>, u64)>,
}

impl ValueTable {
    pub(crate) fn from_entries(k: usize, entries: Vec<(Vec<ObjectId>, u64)>) -> Self {
        ValueTable { k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[ObjectId], u64)> {
        self.entries.iter().map(|(t, v)| (t.as_slice(), *v))
    }

    pub fn get(&self, tuple: &[ObjectId]) -> Option<u64> {
        self.entries
            .binary_search_by(|(t, _)| t.as_slice().cmp(tuple))
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Best entry; ties go to the lexicographically smallest tuple.
    pub fn optimum(&self, kind: OptKind) -> Option<Solution> {
        let mut best: Option<&(Vec<ObjectId>, u64)> = None;
        for e in &self.entries {
            if best.is_none_or(|b| kind.better(e.1, b.1)) {
                best = Some(e);
            }
        }
        best.map(|(t, v)| Solution {
            value: *v,
            witness: t.clone(),
        })
    }

    /// One line `x1 .. xk value` per tuple, using object labels.
    pub fn dump(&self, structure: &RelationalStructure) -> String {
        let mut out = String::new();
        for (t, v) in &self.entries {
            for o in t {
                out.push_str(structure.label(*o));
                out.push(' ');
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

pub fn baseline_values(structure: &RelationalStructure, formula: &OptFormula) -> Result<ValueTable> {
    values(&Problem::from_parts(structure, formula)?)
}

/// Optimum with the lexicographically smallest witness; `None` when some
/// opt variable has an empty domain.
pub fn baseline_opt(structure: &RelationalStructure, formula: &OptFormula) -> Result<Option<Solution>> {
    optimum(&Problem::from_parts(structure, formula)?)
}

pub fn values(p: &Problem) -> Result<ValueTable> {
    check_shape(p)?;
    let mut entries = Vec::new();
    visit_values(p, 2, &base_pair, &mut |t, v| entries.push((t.to_vec(), v)));
    Ok(ValueTable { k: p.k(), entries })
}

pub fn optimum(p: &Problem) -> Result<Option<Solution>> {
    check_shape(p)?;
    Ok(optimum_with(p, 2, &base_pair))
}

fn check_shape(p: &Problem) -> Result<()> {
    if p.k() == 0 || p.l() == 0 {
        return Err(Error::Unsupported(format!(
            "need k >= 1 and l >= 1, got k={} l={}",
            p.k(),
            p.l()
        )));
    }
    Ok(())
}

pub(crate) type BaseCase = dyn Fn(&Residual, usize) -> Vec<u64>;

pub(crate) fn optimum_with(p: &Problem, base_len: usize, base: &BaseCase) -> Option<Solution> {
    let kind = p.kind();
    let mut best: Option<Solution> = None;
    visit_values(p, base_len, base, &mut |t, v| {
        if best.as_ref().is_none_or(|b| kind.better(v, b.value)) {
            best = Some(Solution {
                value: v,
                witness: t.to_vec(),
            });
        }
    });
    best
}

/// Runs the downward self-reduction: opt variables are fixed in order and
/// reported through `visit`, count variables are fixed and summed, and the
/// last `base_len` variables go to `base`, which returns one value per
/// object in the domain of its first variable.
pub(crate) fn visit_values(
    p: &Problem,
    base_len: usize,
    base: &BaseCase,
    visit: &mut dyn FnMut(&[ObjectId], u64),
) {
    let nv = p.k() + p.l();
    assert!(nv >= base_len);
    let res = Residual::compile(p);
    let mut prefix = Vec::with_capacity(p.k());
    opt_level(&res, 0, p.k(), nv, base_len, base, &mut prefix, visit);
}

#[allow(clippy::too_many_arguments)]
fn opt_level(
    res: &Residual,
    d: usize,
    k: usize,
    nv: usize,
    base_len: usize,
    base: &BaseCase,
    prefix: &mut Vec<ObjectId>,
    visit: &mut dyn FnMut(&[ObjectId], u64),
) {
    if nv - d == base_len {
        let vals = base(res, d);
        for (o, v) in res.domain(d).iter().zip(vals) {
            prefix.push(*o);
            visit(prefix, v);
            prefix.pop();
        }
        return;
    }
    for &o in res.domain(d).iter() {
        let r = res.fix(d, o);
        prefix.push(o);
        if d + 1 < k {
            opt_level(&r, d + 1, k, nv, base_len, base, prefix, visit);
        } else {
            let v = count_level(&r, d + 1, nv, base_len, base);
            visit(prefix, v);
        }
        prefix.pop();
    }
}

fn count_level(res: &Residual, d: usize, nv: usize, base_len: usize, base: &BaseCase) -> u64 {
    if nv - d == base_len {
        return base(res, d).iter().sum();
    }
    res.domain(d)
        .iter()
        .map(|&o| count_level(&res.fix(d, o), d + 1, nv, base_len, base))
        .sum()
}

#[derive(Clone, Copy)]
enum Role {
    Outer(u32),
    Inner(u32),
    Edge(u32),
    Unused,
}

/// Two-variable base case over `(a, a + 1)`: `psi(x)` for each x in the
/// domain of `a`, counting objects of `a + 1`.
pub(crate) fn base_pair(res: &Residual, a: usize) -> Vec<u64> {
    let b = a + 1;
    let used = res.used_atoms();
    let mut roles = vec![Role::Unused; res.atoms.len()];
    let (mut ua, mut ub, mut bin) = (Vec::new(), Vec::new(), Vec::new());
    for (i, at) in res.atoms.iter().enumerate() {
        if !used[i] {
            continue;
        }
        match at.vars.as_slice() {
            [v] if *v == a => {
                roles[i] = Role::Outer(ua.len() as u32);
                ua.push(i);
            }
            [v] if *v == b => {
                roles[i] = Role::Inner(ub.len() as u32);
                ub.push(i);
            }
            [_, _] => {
                roles[i] = Role::Edge(bin.len() as u32);
                bin.push(i);
            }
            other => unreachable!("atom over {other:?} in a two-variable residual"),
        }
    }
    if ua.len() > MAX_COLOR_BITS || ub.len() > MAX_COLOR_BITS || bin.len() > 64 {
        return naive_pair(res, a);
    }
    let dom_a = res.domain(a);
    let dom_b = res.domain(b);

    let mut ycolor: HashMap<ObjectId, u64> = HashMap::new();
    for (bit, &i) in ub.iter().enumerate() {
        for t in &res.atoms[i].tuples {
            *ycolor.entry(t[0]).or_default() |= 1 << bit;
        }
    }
    // |Y_alpha|
    let mut ycount: BTreeMap<u64, u64> = BTreeMap::new();
    for c in ycolor.values() {
        *ycount.entry(*c).or_default() += 1;
    }
    let zero = dom_b.len() as u64 - ycolor.len() as u64;
    if zero > 0 {
        ycount.insert(0, zero);
    }
    let mut xcolor: HashMap<ObjectId, u64> = HashMap::new();
    for (bit, &i) in ua.iter().enumerate() {
        for t in &res.atoms[i].tuples {
            *xcolor.entry(t[0]).or_default() |= 1 << bit;
        }
    }

    let mut cache: HashMap<(u64, u64, u64), bool> = HashMap::new();
    let mut phi = |cx: u64, alpha: u64, beta: u64| -> bool {
        *cache.entry((cx, alpha, beta)).or_insert_with(|| {
            res.body.eval(&mut |i| match roles[i] {
                Role::Outer(bit) => cx >> bit & 1 == 1,
                Role::Inner(bit) => alpha >> bit & 1 == 1,
                Role::Edge(bit) => beta >> bit & 1 == 1,
                Role::Unused => unreachable!(),
            })
        })
    };

    let mut out = Vec::with_capacity(dom_a.len());
    let mut nbrs: Vec<(ObjectId, u64)> = Vec::new();
    let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for &x in dom_a.iter() {
        let cx = xcolor.get(&x).copied().unwrap_or(0);
        nbrs.clear();
        for (bit, &i) in bin.iter().enumerate() {
            for t in res.atoms[i].with_first(x) {
                nbrs.push((t[1], 1 << bit));
            }
        }
        nbrs.sort_unstable();
        counts.clear();
        let mut j = 0;
        while j < nbrs.len() {
            let y = nbrs[j].0;
            let mut beta = 0;
            while j < nbrs.len() && nbrs[j].0 == y {
                beta |= nbrs[j].1;
                j += 1;
            }
            let alpha = ycolor.get(&y).copied().unwrap_or(0);
            *counts.entry((alpha, beta)).or_default() += 1;
        }
        let mut psi = 0u64;
        for (&alpha, &size) in &ycount {
            let mut nonzero = 0;
            for (&(_, beta), &c) in counts.range((alpha, 1)..=(alpha, u64::MAX)) {
                nonzero += c;
                if phi(cx, alpha, beta) {
                    psi += c;
                }
            }
            // C(x; alpha, 0) = |Y_alpha| - sum_{beta != 0} C(x; alpha, beta)
            if phi(cx, alpha, 0) {
                psi += size - nonzero;
            }
        }
        out.push(psi);
    }
    out
}

/// Direct double loop; used when colors would not fit in a machine word.
pub(crate) fn naive_pair(res: &Residual, a: usize) -> Vec<u64> {
    let mut asg = vec![ObjectId(0); res.domains.len()];
    res.domain(a)
        .iter()
        .map(|&x| {
            asg[a] = x;
            res.domain(a + 1)
                .iter()
                .filter(|&&y| {
                    asg[a + 1] = y;
                    res.eval_at(&asg)
                })
                .count() as u64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::load_structure;

    fn toy() -> RelationalStructure {
        load_structure("rel E 2\nE a 1\nE a 2\nE b 2").unwrap()
    }

    #[test]
    fn sparse_maxip_values() {
        let s = toy();
        let f = parse_formula("max x1:X,x2:X . count y:Y . E(x1,y) & E(x2,y)").unwrap();
        let s = {
            let mut t = s.to_text();
            t.push_str("rel X 1\nX a\nX b\nrel Y 1\nY 1\nY 2\n");
            load_structure(&t).unwrap()
        };
        let table = baseline_values(&s, &f).unwrap();
        let id = |l| s.object(l).unwrap();
        assert_eq!(table.get(&[id("a"), id("a")]), Some(2));
        assert_eq!(table.get(&[id("a"), id("b")]), Some(1));
        assert_eq!(table.get(&[id("b"), id("b")]), Some(1));
        assert_eq!(table.len(), 4);
        assert_eq!(table.dump(&s), "a a 2\na b 1\nb a 1\nb b 1\n");
        let best = table.optimum(OptKind::Max).unwrap();
        assert_eq!((best.value, best.witness), (2, vec![id("a"), id("a")]));
        let g = OptFormula { kind: OptKind::Min, ..f };
        let best = baseline_opt(&s, &g).unwrap().unwrap();
        assert_eq!((best.value, best.witness), (1, vec![id("a"), id("b")]));
    }

    #[test]
    fn true_body_counts_whole_domain() {
        let s = toy();
        let f = parse_formula("max x . count y . true").unwrap();
        let t = baseline_values(&s, &f).unwrap();
        assert!(t.iter().all(|(_, v)| v == s.n() as u64));
    }

    #[test]
    fn empty_structure_gives_zeros_and_empty_domain_gives_none() {
        let s = load_structure("rel E 2\nobj a b").unwrap();
        let f = parse_formula("max x . count y . E(x,y)").unwrap();
        assert!(baseline_values(&s, &f).unwrap().iter().all(|(_, v)| v == 0));
        let s = load_structure("rel E 2\nrel P 1\nobj a").unwrap();
        let f = parse_formula("max x:P . count y . E(x,y)").unwrap();
        assert_eq!(baseline_opt(&s, &f).unwrap(), None);
    }
}
