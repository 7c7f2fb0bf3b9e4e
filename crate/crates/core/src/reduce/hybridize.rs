use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::formula::VarRef;
use crate::hybrid::HybridInstance;
use crate::problem::Problem;
use crate::structure::ObjectId;

/// One hybrid instance together with the object behind every set.
#[derive(Clone, Debug)]
pub struct HybridPart {
    pub instance: HybridInstance,
    /// `families[i][j]` is the object whose neighbourhood is set `j` of
    /// family `i`.
    pub families: Vec<Vec<ObjectId>>,
    /// Unary color of each optimization variable shared by this part.
    pub colors: Vec<u64>,
}

/// Builds one hybrid instance per combination of unary colors of the
/// optimization variables. The universe holds `(y, tau)` for every `tau`
/// that satisfies the body at `y` when `tau[i]` stands for `E(x_i, y)`;
/// the set of `x` for family `i` holds all `(y, tau)` with `E(x, y)`.
/// Elements that no tuple can realize (`tau[i] = 1` but `y` has no
/// neighbour in family `i`) are dropped.
pub fn to_hybrid(p: &Problem, max_assignments: usize) -> Result<Vec<HybridPart>> {
    let f = &p.formula;
    let k = p.k();
    if p.l() != 1 {
        return Err(Error::Contract(format!("need exactly one count variable, got {}", p.l())));
    }
    let mut edge: Option<String> = None;
    let mut ux: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    let mut uy: BTreeSet<String> = BTreeSet::new();
    for a in f.body.atoms() {
        match a.args.as_slice() {
            [VarRef::Opt(i)] => {
                ux[*i].insert(a.predicate.clone());
            }
            [VarRef::Count(_)] => {
                uy.insert(a.predicate.clone());
            }
            [VarRef::Opt(_), VarRef::Count(_)] if edge.as_ref().is_none_or(|e| *e == a.predicate) => {
                edge = Some(a.predicate.clone());
            }
            _ => {
                return Err(Error::Contract(format!(
                    "hybrid translation needs unary predicates and one binary predicate E(x_i, y); \
                     found {}/{}",
                    a.predicate,
                    a.args.len()
                )))
            }
        }
    }
    let ux: Vec<Vec<String>> = ux.into_iter().map(|s| s.into_iter().collect()).collect();
    let uy: Vec<String> = uy.into_iter().collect();
    if ux.iter().any(|u| u.len() > 63) || uy.len() > 63 {
        return Err(Error::Unsupported("more than 63 unary predicates on one variable".into()));
    }
    let s = &p.structure;
    let unary_color = |preds: &[String], o: ObjectId| -> u64 {
        preds
            .iter()
            .enumerate()
            .filter(|(_, q)| s.relation(q).expect("classified").contains(&[o]))
            .fold(0, |c, (b, _)| c | 1 << b)
    };

    // objects of each opt variable grouped by unary color
    let by_color: Vec<BTreeMap<u64, Vec<ObjectId>>> = (0..k)
        .map(|i| {
            let mut m: BTreeMap<u64, Vec<ObjectId>> = BTreeMap::new();
            for &x in p.domains.get(i) {
                m.entry(unary_color(&ux[i], x)).or_default().push(x);
            }
            m
        })
        .collect();
    let total = by_color
        .iter()
        .try_fold(1usize, |acc, m| acc.checked_mul(m.len()))
        .unwrap_or(usize::MAX);
    if total > max_assignments {
        return Err(Error::Resource(format!(
            "{total} unary assignments exceed the limit {max_assignments}"
        )));
    }

    let dom_y = p.domains.get(k);
    let ycolor: Vec<u64> = dom_y.iter().map(|&o| unary_color(&uy, o)).collect();
    let ypos: HashMap<ObjectId, usize> = dom_y.iter().enumerate().map(|(i, o)| (*o, i)).collect();
    let records: Vec<(ObjectId, ObjectId)> = match &edge {
        Some(e) => s.relation(e).expect("classified").records().iter().map(|t| (t[0], t[1])).collect(),
        None => Vec::new(),
    };
    // neighbours in dom_y for every x
    let mut nbrs: HashMap<ObjectId, Vec<usize>> = HashMap::new();
    for &(x, yo) in &records {
        if let Some(&q) = ypos.get(&yo) {
            nbrs.entry(x).or_default().push(q);
        }
    }

    let mut combos: Vec<Vec<u64>> = vec![Vec::new()];
    for m in &by_color {
        combos = combos
            .into_iter()
            .flat_map(|pre| {
                m.keys().map(move |&c| {
                    let mut v = pre.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    let mut parts = Vec::new();
    for colors in combos {
        let fam_objs: Vec<Vec<ObjectId>> = (0..k).map(|i| by_color[i][&colors[i]].clone()).collect();
        // reach[q] = mask of families with some neighbour of y_q
        let mut reach = vec![0u32; dom_y.len()];
        for (i, objs) in fam_objs.iter().enumerate() {
            for x in objs {
                for &q in nbrs.get(x).map(Vec::as_slice).unwrap_or(&[]) {
                    reach[q] |= 1 << i;
                }
            }
        }
        let mut cache: HashMap<(u64, u32), bool> = HashMap::new();
        let mut phi = |yc: u64, tau: u32| -> bool {
            *cache.entry((yc, tau)).or_insert_with(|| {
                f.body.eval_with(&mut |a| match a.args.as_slice() {
                    [VarRef::Opt(i)] => {
                        let b = ux[*i].iter().position(|q| *q == a.predicate).unwrap();
                        colors[*i] >> b & 1 == 1
                    }
                    [VarRef::Count(_)] => {
                        let b = uy.iter().position(|q| *q == a.predicate).unwrap();
                        yc >> b & 1 == 1
                    }
                    [VarRef::Opt(i), VarRef::Count(_)] => tau >> i & 1 == 1,
                    _ => unreachable!(),
                })
            })
        };
        let mut types = Vec::new();
        // element ids of each y, all types
        let mut elems: Vec<Vec<u32>> = vec![Vec::new(); dom_y.len()];
        for q in 0..dom_y.len() {
            for tau in 0..1u32 << k {
                if tau & !reach[q] != 0 || !phi(ycolor[q], tau) {
                    continue;
                }
                elems[q].push(types.len() as u32);
                types.push(tau);
            }
        }
        let families: Vec<Vec<Vec<u32>>> = fam_objs
            .iter()
            .map(|objs| {
                objs.iter()
                    .map(|x| {
                        nbrs.get(x)
                            .map(Vec::as_slice)
                            .unwrap_or(&[])
                            .iter()
                            .flat_map(|&q| elems[q].iter().copied())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let names = fam_objs
            .iter()
            .map(|objs| objs.iter().map(|&x| s.label(x).to_string()).collect())
            .collect();
        parts.push(HybridPart {
            instance: HybridInstance::with_names(p.kind(), types, families, names)?,
            families: fam_objs,
            colors,
        });
    }
    Ok(parts)
}

impl HybridPart {
    /// Set indices of the objects in `tuple`, if they all belong here.
    pub fn locate(&self, tuple: &[ObjectId]) -> Option<Vec<usize>> {
        tuple
            .iter()
            .zip(&self.families)
            .map(|(o, fam)| fam.binary_search(o).ok())
            .collect()
    }
}
