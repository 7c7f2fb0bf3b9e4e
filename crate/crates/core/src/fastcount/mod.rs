//! Exact solver for formulas with two or more counting variables: brute-force
//! all but three variables, then evaluate `psi(x) = #{(y,z) : phi}` for the
//! residual via hyperedge corrections, unary and edge color classes, and
//! per-vertex triangle counting.

mod basis;
mod triangle;

use std::collections::{BTreeSet, HashMap};

pub use basis::{and_basis_coefficients, truth, BasisDecomposition, TruthTable};
pub use triangle::{
    triangle_counts, triangle_counts_with_stats, triangles_per_x, TriangleStats, TripartiteGraph,
};

use crate::baseline::{self, ValueTable, MAX_COLOR_BITS};
use crate::error::{Error, Result};
use crate::formula::OptFormula;
use crate::problem::{Problem, Solution};
use crate::residual::Residual;
use crate::structure::{ObjectId, RelationalStructure};

pub fn multi_counting_opt(
    structure: &RelationalStructure,
    formula: &OptFormula,
) -> Result<Option<Solution>> {
    multi_counting(&Problem::from_parts(structure, formula)?)
}

pub fn multi_counting(p: &Problem) -> Result<Option<Solution>> {
    check(p)?;
    Ok(baseline::optimum_with(p, 3, &base_triple))
}

pub fn multi_counting_values(p: &Problem) -> Result<ValueTable> {
    check(p)?;
    let mut entries = Vec::new();
    baseline::visit_values(p, 3, &base_triple, &mut |t, v| entries.push((t.to_vec(), v)));
    Ok(ValueTable::from_entries(p.k(), entries))
}

fn check(p: &Problem) -> Result<()> {
    if p.l() < 2 || p.k() == 0 {
        return Err(Error::Unsupported(format!(
            "multi-counting needs k >= 1 and l >= 2, got k={} l={}",
            p.k(),
            p.l()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Slot {
    Unary(usize, u32),
    Pair(usize, u32),
    Hyper,
    Unused,
}

/// Pair index: 0 = (x,y), 1 = (x,z), 2 = (y,z).
fn pair_of(a: usize, u: usize, v: usize) -> usize {
    match (u - a, v - a) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

/// Three-variable base case over `(a, a+1, a+2)`.
fn base_triple(res: &Residual, a: usize) -> Vec<u64> {
    let used = res.used_atoms();
    let mut slots = vec![Slot::Unused; res.atoms.len()];
    let mut unary_bits = [0u32; 3];
    let mut pair_bits = [0u32; 3];
    let mut hyper = Vec::new();
    for (i, at) in res.atoms.iter().enumerate() {
        if !used[i] {
            continue;
        }
        slots[i] = match at.vars.as_slice() {
            [v] => {
                let s = v - a;
                unary_bits[s] += 1;
                Slot::Unary(s, unary_bits[s] - 1)
            }
            [u, v] => {
                let s = pair_of(a, *u, *v);
                pair_bits[s] += 1;
                Slot::Pair(s, pair_bits[s] - 1)
            }
            _ => {
                hyper.push(i);
                Slot::Hyper
            }
        };
    }
    if unary_bits.iter().any(|&b| b as usize > MAX_COLOR_BITS) || pair_bits.iter().any(|&b| b > 20) {
        return naive_triple(res, a);
    }
    let doms = [res.domain(a), res.domain(a + 1), res.domain(a + 2)];

    // unary colors
    let mut ucolor: [HashMap<ObjectId, u64>; 3] = Default::default();
    // edge colors
    let mut ecolor: [HashMap<(ObjectId, ObjectId), u64>; 3] = Default::default();
    for (i, at) in res.atoms.iter().enumerate() {
        match slots[i] {
            Slot::Unary(s, bit) => {
                for t in &at.tuples {
                    *ucolor[s].entry(t[0]).or_default() |= 1 << bit;
                }
            }
            Slot::Pair(s, bit) => {
                for t in &at.tuples {
                    *ecolor[s].entry((t[0], t[1])).or_default() |= 1 << bit;
                }
            }
            _ => {}
        }
    }
    let color = |s: usize, o: ObjectId| ucolor[s].get(&o).copied().unwrap_or(0);

    // Step 1: correction psi - psi_0 on tuples covered by a hyperedge.
    let mut correction: HashMap<ObjectId, i64> = HashMap::new();
    if !hyper.is_empty() {
        let mut triples: BTreeSet<&[ObjectId]> = BTreeSet::new();
        for &i in &hyper {
            triples.extend(res.atoms[i].tuples.iter().map(|t| t.as_ref()));
        }
        let mut asg = vec![ObjectId(0); res.domains.len()];
        for t in triples {
            asg[a..a + 3].copy_from_slice(t);
            let full = res.eval_at(&asg);
            let zeroed = eval_colors(res, &slots, t, &ucolor, &ecolor);
            *correction.entry(t[0]).or_default() += full as i64 - zeroed as i64;
        }
    }

    // Step 2: split every part by unary color.
    let mut groups: [Vec<(u64, Vec<ObjectId>)>; 3] = Default::default();
    for s in 0..3 {
        let mut by: HashMap<u64, Vec<ObjectId>> = HashMap::new();
        for &o in doms[s].iter() {
            by.entry(color(s, o)).or_default().push(o);
        }
        let mut v: Vec<_> = by.into_iter().collect();
        v.sort_unstable();
        groups[s] = v;
    }
    let mut palette: [Vec<u64>; 3] = Default::default();
    for s in 0..3 {
        let set: BTreeSet<u64> = ecolor[s].values().copied().chain([0]).collect();
        palette[s] = set.into_iter().collect();
    }

    let index_of = |objs: &[ObjectId]| -> HashMap<ObjectId, u32> {
        objs.iter().enumerate().map(|(i, o)| (*o, i as u32)).collect()
    };
    let mut psi0: HashMap<ObjectId, u64> = HashMap::new();
    for (cx, xs) in &groups[0] {
        let ix = index_of(xs);
        for (cy, ys) in &groups[1] {
            let iy = index_of(ys);
            for (cz, zs) in &groups[2] {
                let iz = index_of(zs);
                let local = |s: usize, u: ObjectId, v: ObjectId| -> Option<(u32, u32)> {
                    let (mu, mv) = match s {
                        0 => (&ix, &iy),
                        1 => (&ix, &iz),
                        _ => (&iy, &iz),
                    };
                    Some((*mu.get(&u)?, *mv.get(&v)?))
                };
                // edges of each pair inside this color class, with their colors
                let mut edges: [Vec<((u32, u32), u64)>; 3] = Default::default();
                for s in 0..3 {
                    for (&(u, v), &c) in &ecolor[s] {
                        if let Some(e) = local(s, u, v) {
                            edges[s].push((e, c));
                        }
                    }
                }
                let mut covered = vec![0u64; xs.len()];
                // Step 3: one triangle-counting pass per edge color triple.
                for &a1 in &palette[0] {
                    for &a2 in &palette[1] {
                        for &a3 in &palette[2] {
                            let sat = eval_color_triple(res, &slots, [*cx, *cy, *cz], [a1, a2, a3]);
                            if !sat && !cfg!(debug_assertions) {
                                continue;
                            }
                            let pick = |s: usize, want: u64| -> Vec<(u32, u32)> {
                                edges[s]
                                    .iter()
                                    .filter(|(_, c)| if want == 0 { *c != 0 } else { *c == want })
                                    .map(|(e, _)| *e)
                                    .collect()
                            };
                            let g = TripartiteGraph::new(
                                xs.len(),
                                ys.len(),
                                zs.len(),
                                pick(0, a1),
                                pick(1, a2),
                                pick(2, a3),
                            );
                            let bits = [a1 != 0, a2 != 0, a3 != 0];
                            let idx = bits[0] as u8 | (bits[1] as u8) << 1 | (bits[2] as u8) << 2;
                            let counts = triangle_counts(&g, 1 << idx);
                            for (xi, c) in counts.into_iter().enumerate() {
                                covered[xi] += c;
                                if sat {
                                    *psi0.entry(xs[xi]).or_default() += c;
                                }
                            }
                        }
                    }
                }
                if cfg!(debug_assertions) {
                    // color classes partition Y x Z for every x
                    let total = (ys.len() * zs.len()) as u64;
                    assert!(covered.iter().all(|&c| c == total));
                }
            }
        }
    }
    doms[0]
        .iter()
        .map(|x| {
            let v = psi0.get(x).copied().unwrap_or(0) as i64 + correction.get(x).copied().unwrap_or(0);
            debug_assert!(v >= 0);
            v as u64
        })
        .collect()
}

fn eval_color_triple(res: &Residual, slots: &[Slot], unary: [u64; 3], edge: [u64; 3]) -> bool {
    res.body.eval(&mut |i| match slots[i] {
        Slot::Unary(s, bit) => unary[s] >> bit & 1 == 1,
        Slot::Pair(s, bit) => edge[s] >> bit & 1 == 1,
        Slot::Hyper => false,
        Slot::Unused => unreachable!(),
    })
}

/// Body value at a concrete triple with hyperpredicates read as false.
fn eval_colors(
    res: &Residual,
    slots: &[Slot],
    t: &[ObjectId],
    ucolor: &[HashMap<ObjectId, u64>; 3],
    ecolor: &[HashMap<(ObjectId, ObjectId), u64>; 3],
) -> bool {
    let unary = [0, 1, 2].map(|s| ucolor[s].get(&t[s]).copied().unwrap_or(0));
    let pairs = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
    let edge = [0, 1, 2].map(|s| ecolor[s].get(&pairs[s]).copied().unwrap_or(0));
    eval_color_triple(res, slots, unary, edge)
}

fn naive_triple(res: &Residual, a: usize) -> Vec<u64> {
    let mut asg = vec![ObjectId(0); res.domains.len()];
    let mut out = Vec::new();
    for &x in res.domain(a).iter() {
        asg[a] = x;
        let mut c = 0;
        for &y in res.domain(a + 1).iter() {
            asg[a + 1] = y;
            for &z in res.domain(a + 2).iter() {
                asg[a + 2] = z;
                c += res.eval_at(&asg) as u64;
            }
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::load_structure;

    #[test]
    fn ternary_records_per_x() {
        let s = load_structure("rel R 3\nR a 1 2\nR a 2 1\nR b 1 1").unwrap();
        let f = parse_formula("max x . count y1,y2 . R(x,y1,y2)").unwrap();
        let best = multi_counting_opt(&s, &f).unwrap().unwrap();
        assert_eq!(best.value, 2);
        assert_eq!(best.witness, vec![s.object("a").unwrap()]);
    }

    #[test]
    fn false_body_is_zero() {
        let s = load_structure("rel E 2\nE a b").unwrap();
        for k in ["max", "min"] {
            let f = parse_formula(&format!("{k} x . count y,z . false")).unwrap();
            assert_eq!(multi_counting_opt(&s, &f).unwrap().unwrap().value, 0);
        }
    }

    #[test]
    fn rejects_single_count_variable() {
        let s = load_structure("rel E 2\nE a b").unwrap();
        let f = parse_formula("max x . count y . E(x,y)").unwrap();
        assert!(matches!(multi_counting_opt(&s, &f), Err(Error::Unsupported(_))));
    }
}
