use std::collections::HashMap;

use super::{normalize, remove_parallel_edges, solve_forced_edge, to_hybrid, HybridPart};
use crate::baseline;
use crate::error::{Error, Result};
use crate::formula::{Atom, Expr, OptKind, VarRef};
use crate::hybrid::{solve_hybrid, HybridStats, Mode, SolveConfig};
use crate::ip::IpSolver;
use crate::problem::{Domains, Problem, Solution};
use crate::residual::Residual;
use crate::structure::ObjectId;

/// Solver for the cross-free relaxation on one group combination.
#[derive(Clone, Copy)]
pub enum InnerSolver<'a> {
    Baseline,
    /// Parallel-edge removal, hybrid translation and `solve_hybrid`.
    Hybrid(&'a dyn IpSolver),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LiftStats {
    pub cross_sides: usize,
    /// Records relevant to the guarded formula.
    pub m: usize,
    pub threshold: usize,
    pub heavy_vertices: usize,
    pub groups: Vec<usize>,
    pub combos: usize,
    pub top_k: usize,
    /// Upper bound on combinations whose relaxed value is wrong.
    pub fp_bound: u64,
    pub false_positives: Option<usize>,
    pub inner_mismatches: Option<usize>,
    /// Why the hybrid path was replaced by the baseline, if it was.
    pub inner_fallback: Option<String>,
    pub parallel_m: usize,
    pub parallel_n: usize,
    pub hybrid_parts: usize,
    pub hybrid_calls: usize,
    pub max_universe: usize,
    pub max_reduced_universe: usize,
    pub max_t: usize,
    pub max_delta: u64,
    pub max_e_bound: u64,
}

impl LiftStats {
    fn absorb(&mut self, h: &HybridStats) {
        self.hybrid_calls += 1;
        self.max_universe = self.max_universe.max(h.universe);
        self.max_reduced_universe = self.max_reduced_universe.max(h.reduced_universe);
        self.max_t = self.max_t.max(h.t);
        self.max_delta = self.max_delta.max(h.delta);
        self.max_e_bound = self.max_e_bound.max(h.e_bound);
    }
}

/// Per opt variable, consecutive runs of light objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    pub threshold: usize,
    pub groups: Vec<Vec<Vec<ObjectId>>>,
}

impl GroupPartition {
    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// Greedy partition in object order: a group closes as soon as its total
/// degree exceeds `threshold`.
pub fn partition_groups(
    domains: &[Vec<ObjectId>],
    degree: impl Fn(ObjectId) -> usize,
    threshold: usize,
) -> GroupPartition {
    let groups = domains
        .iter()
        .map(|dom| {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            let mut total = 0;
            for &o in dom {
                cur.push(o);
                total += degree(o);
                if total > threshold {
                    out.push(std::mem::take(&mut cur));
                    total = 0;
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
            out
        })
        .collect();
    GroupPartition { threshold, groups }
}

/// The guarded formula `psi0` (exact wherever no cross atom holds, and
/// never better than the truth elsewhere) and its cross-free relaxation
/// `psi1`.
#[derive(Clone, Debug)]
pub struct Relaxations {
    pub psi0: Problem,
    pub psi1: Problem,
    pub cross: Vec<Atom>,
}

pub fn relaxations(p: &Problem) -> Result<Relaxations> {
    let f = &p.formula;
    let is_cross = |a: &Atom| matches!(a.args.as_slice(), [VarRef::Opt(i), VarRef::Opt(j)] if i != j);
    let mut cross: Vec<Atom> = Vec::new();
    for a in f.body.atoms() {
        if is_cross(a) && !cross.contains(a) {
            cross.push(a.clone());
        }
    }
    let phi0 = f
        .body
        .map_atoms(&mut |a| is_cross(a).then_some(Expr::Const(false)))
        .simplify();
    let psi0 = if cross.is_empty() {
        phi0.clone()
    } else {
        match f.kind {
            OptKind::Max => {
                let mut parts: Vec<Expr> = cross.iter().map(|c| Expr::not(Expr::Atom(c.clone()))).collect();
                parts.push(phi0.clone());
                Expr::and(parts)
            }
            OptKind::Min => {
                let mut parts: Vec<Expr> = cross.iter().map(|c| Expr::Atom(c.clone())).collect();
                parts.push(phi0.clone());
                Expr::or(parts)
            }
        }
    };
    Ok(Relaxations {
        psi0: p.with_formula(f.with_body(psi0.simplify()))?,
        psi1: p.with_formula(f.with_body(phi0))?,
        cross,
    })
}

/// Smallest `T >= 1` with `T^(k+1) >= m`.
fn threshold(m: usize, k: usize) -> usize {
    let mut t = 1usize;
    while t.checked_pow(k as u32 + 1).is_some_and(|v| v < m) {
        t += 1;
    }
    t
}

fn domains_with(p: &Problem, opt: Vec<Vec<ObjectId>>) -> Domains {
    let mut v = opt;
    for c in 0..p.l() {
        v.push(p.domains.get(p.k() + c).to_vec());
    }
    Domains::from_vecs(v)
}

/// Splits off cross-predicate side problems (solved exactly), brute-forces
/// heavy objects, partitions the rest into low-degree groups, ranks group
/// combinations by the inner solver's value of the relaxation and re-solves
/// the top `K` exactly under the guarded formula.
pub fn solve_cross_free_lift(
    p: &Problem,
    inner: InnerSolver<'_>,
    cfg: &SolveConfig,
) -> Result<(Option<Solution>, LiftStats)> {
    cfg.validate()?;
    if p.l() != 1 {
        return Err(Error::Contract(format!("need exactly one count variable, got {}", p.l())));
    }
    let p = normalize(p)?;
    if p.profile().has_hyper {
        return Err(Error::Contract("the lift needs a formula without hyperpredicates".into()));
    }
    let kind = p.kind();
    let k = p.k();
    let rel = relaxations(&p)?;
    let mut stats = LiftStats {
        cross_sides: rel.cross.len(),
        false_positives: cfg.audit.then_some(0),
        inner_mismatches: cfg.audit.then_some(0),
        ..Default::default()
    };
    let mut best: Option<Solution> = None;
    for c in &rel.cross {
        best = Solution::merge(kind, best, solve_forced_edge(&p, c)?);
    }

    let res0 = Residual::compile(&rel.psi0);
    let used = res0.used_atoms();
    let mut deg = vec![0usize; p.structure.n()];
    let mut seen = Vec::new();
    for (a, _) in res0.atoms.iter().zip(&used).filter(|(_, u)| **u) {
        stats.m += a.tuples.len();
        for t in &a.tuples {
            seen.clear();
            seen.extend_from_slice(t);
            seen.sort_unstable();
            seen.dedup();
            for o in &seen {
                deg[o.index()] += 1;
            }
        }
    }
    let t = threshold(stats.m, k);
    stats.threshold = t;

    // heavy phase: tuples whose first heavy coordinate is i
    let light: Vec<Vec<ObjectId>> = (0..k)
        .map(|i| p.domains.get(i).iter().copied().filter(|o| deg[o.index()] < t).collect())
        .collect();
    for i in 0..k {
        for &v in p.domains.get(i).iter().filter(|o| deg[o.index()] >= t) {
            stats.heavy_vertices += 1;
            let opt: Vec<Vec<ObjectId>> = (0..k)
                .map(|j| match j.cmp(&i) {
                    std::cmp::Ordering::Less => light[j].clone(),
                    std::cmp::Ordering::Equal => vec![v],
                    std::cmp::Ordering::Greater => p.domains.get(j).to_vec(),
                })
                .collect();
            if opt.iter().any(Vec::is_empty) {
                continue;
            }
            let sub = rel.psi0.with_new_domains(domains_with(&p, opt));
            best = Solution::merge(kind, best, baseline::optimum(&sub)?);
        }
    }
    if light.iter().any(Vec::is_empty) {
        return Ok((best, stats));
    }

    let part = partition_groups(&light, |o| deg[o.index()], t);
    stats.groups = part.counts();
    let combos = enumerate(&stats.groups);
    stats.combos = combos.len();
    let combo_domains = |c: &[usize]| -> Domains {
        domains_with(&p, (0..k).map(|i| part.groups[i][c[i]].clone()).collect())
    };

    let mut oracle = match inner {
        InnerSolver::Baseline => Oracle::Baseline,
        InnerSolver::Hybrid(solver) => match HybridOracle::prepare(&rel.psi1, &light, &part, solver, cfg) {
            Ok(h) => {
                stats.parallel_m = h.parallel_m;
                stats.parallel_n = h.parallel_n;
                stats.hybrid_parts = h.parts.len();
                Oracle::Hybrid(h)
            }
            Err(e @ (Error::Unsupported(_) | Error::Resource(_))) => {
                stats.inner_fallback = Some(e.to_string());
                Oracle::Baseline
            }
            Err(e) => return Err(e),
        },
    };
    let mut inner_vals = Vec::with_capacity(combos.len());
    for c in &combos {
        let v = match &mut oracle {
            Oracle::Baseline => baseline::optimum(&rel.psi1.with_new_domains(combo_domains(c)))?.map(|s| s.value),
            Oracle::Hybrid(h) => h.value(c, &mut stats)?,
        };
        inner_vals.push(v);
    }

    // false positives need a cross record between light objects
    let mut cross_light = 0u64;
    for c in &rel.cross {
        let (VarRef::Opt(i), VarRef::Opt(j)) = (c.args[0], c.args[1]) else {
            unreachable!()
        };
        let (li, lj) = (&light[i], &light[j]);
        if let Some(r) = p.structure.relation(&c.predicate) {
            cross_light += r
                .records()
                .iter()
                .filter(|t| li.binary_search(&t[0]).is_ok() && lj.binary_search(&t[1]).is_ok())
                .count() as u64;
        }
    }
    let n = p.structure.n() as u64;
    stats.fp_bound = cross_light.saturating_mul(n.saturating_pow(k.saturating_sub(2) as u32));
    let top_k = cfg
        .top_k_override
        .unwrap_or_else(|| stats.fp_bound.saturating_add(1).min(combos.len() as u64) as usize)
        .min(combos.len());
    stats.top_k = top_k;

    let mut order: Vec<usize> = (0..combos.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |v: Option<u64>| match (kind, v) {
            (_, None) => (1, 0),
            (OptKind::Max, Some(v)) => (0, u64::MAX - v),
            (OptKind::Min, Some(v)) => (0, v),
        };
        key(inner_vals[a]).cmp(&key(inner_vals[b])).then(a.cmp(&b))
    });
    for &ci in &order[..top_k] {
        let sub = rel.psi0.with_new_domains(combo_domains(&combos[ci]));
        best = Solution::merge(kind, best, baseline::optimum(&sub)?);
    }

    if cfg.audit {
        let mut fps = 0;
        let mut mismatches = 0;
        for (ci, c) in combos.iter().enumerate() {
            let d = combo_domains(c);
            let v0 = baseline::optimum(&rel.psi0.with_new_domains(d.clone()))?.map(|s| s.value);
            let v1 = baseline::optimum(&rel.psi1.with_new_domains(d))?.map(|s| s.value);
            if v0 != v1 {
                fps += 1;
            }
            if !within(cfg, kind, v1, inner_vals[ci]) {
                mismatches += 1;
            }
        }
        stats.false_positives = Some(fps);
        stats.inner_mismatches = Some(mismatches);
    }
    Ok((best, stats))
}

/// Whether an inner answer respects the configured ratio around `truth`.
fn within(cfg: &SolveConfig, kind: OptKind, truth: Option<u64>, got: Option<u64>) -> bool {
    match (truth, got, cfg.mode) {
        (None, None, _) => true,
        (Some(a), Some(b), Mode::Exact) => a == b,
        (Some(opt), Some(v), Mode::Approx { c, eps }) => {
            let (o, v) = (opt as f64, v as f64);
            match kind {
                OptKind::Max => v <= o && v >= o / c - 2.0 * eps - 1e-9,
                OptKind::Min => v >= o && v <= c * o + (c + 1.0) * eps + 1e-9,
            }
        }
        _ => false,
    }
}

/// All index vectors below `sizes`, in lexicographic order.
fn enumerate(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|pre| {
                (0..s).map(move |g| {
                    let mut v = pre.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
    }
    out
}

enum Oracle<'a> {
    Baseline,
    Hybrid(HybridOracle<'a>),
}

/// Hybrid instances built once over all light objects; a combination
/// selects the sets of its groups.
struct HybridOracle<'a> {
    solver: &'a dyn IpSolver,
    cfg: &'a SolveConfig,
    kind: OptKind,
    parts: Vec<HybridPart>,
    /// `select[h][i][g]`: set indices of family `i` of part `h` in group `g`.
    select: Vec<Vec<Vec<Vec<usize>>>>,
    parallel_m: usize,
    parallel_n: usize,
}

impl<'a> HybridOracle<'a> {
    fn prepare(
        psi1: &Problem,
        light: &[Vec<ObjectId>],
        part: &GroupPartition,
        solver: &'a dyn IpSolver,
        cfg: &'a SolveConfig,
    ) -> Result<Self> {
        let sub = psi1.with_new_domains(domains_with(psi1, light.to_vec()));
        let par = remove_parallel_edges(&sub, cfg.max_parallel, true)?;
        let parts = to_hybrid(&par.problem, cfg.max_unary_assignments)?;
        let group_of: Vec<HashMap<ObjectId, usize>> = part
            .groups
            .iter()
            .map(|gs| {
                gs.iter()
                    .enumerate()
                    .flat_map(|(g, objs)| objs.iter().map(move |&o| (o, g)))
                    .collect()
            })
            .collect();
        let select = parts
            .iter()
            .map(|h| {
                h.families
                    .iter()
                    .enumerate()
                    .map(|(i, fam)| {
                        let mut by = vec![Vec::new(); part.groups[i].len()];
                        for (j, o) in fam.iter().enumerate() {
                            by[group_of[i][&par.origin[o.index()]]].push(j);
                        }
                        by
                    })
                    .collect()
            })
            .collect();
        Ok(HybridOracle {
            solver,
            cfg,
            kind: psi1.kind(),
            parallel_m: par.problem.structure.m(),
            parallel_n: par.problem.structure.n(),
            parts,
            select,
        })
    }

    fn value(&mut self, combo: &[usize], stats: &mut LiftStats) -> Result<Option<u64>> {
        let mut best: Option<u64> = None;
        for (h, part) in self.parts.iter().enumerate() {
            let keep: Vec<Vec<usize>> = combo
                .iter()
                .enumerate()
                .map(|(i, &g)| self.select[h][i][g].clone())
                .collect();
            if keep.iter().any(Vec::is_empty) {
                continue;
            }
            let sub = part.instance.select(&keep);
            let (sol, hs) = solve_hybrid(&sub, self.solver, self.cfg)?;
            stats.absorb(&hs);
            if let Some(s) = sol {
                best = Some(match best {
                    None => s.value,
                    Some(b) => self.kind.pick(b, s.value),
                });
            }
        }
        Ok(best)
    }
}
