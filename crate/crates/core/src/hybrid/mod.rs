//! Set-family optimization over a typed universe. Every element carries a
//! type `tau` in `{0,1}^k` (bit `i` of a mask is `tau[i]`); it counts for a
//! tuple `(S_1..S_k)` exactly when it lies in `S_i` iff `tau[i] = 1`.

mod solve;
mod universe;

use std::fmt::Write as _;

pub use solve::{encode_light, solve_hybrid, HybridStats, LightEncoding, Mode, SolveConfig, TRule};
pub use universe::{
    e_bound, hash_element, prime_support, universe_reduce, UniverseReduction,
};

use crate::error::{Error, Result};
use crate::formula::OptKind;

/// Largest supported number of families.
pub const MAX_K: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridInstance {
    k: usize,
    kind: OptKind,
    types: Vec<u32>,
    families: Vec<Vec<Vec<u32>>>,
    names: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridSolution {
    pub value: u64,
    /// Set index per family; absent when the value came from an approximate
    /// solver.
    pub witness: Option<Vec<usize>>,
}

impl HybridSolution {
    pub(crate) fn merge(kind: OptKind, a: Option<Self>, b: Option<Self>) -> Option<Self> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if kind.better(b.value, a.value) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    }
}

impl HybridInstance {
    /// `types[u]` is the type mask of element `u`; sets are lists of element
    /// ids (sorted and deduplicated here).
    pub fn new(kind: OptKind, types: Vec<u32>, families: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        let names = families
            .iter()
            .map(|f| (0..f.len()).map(|j| format!("s{j}")).collect())
            .collect();
        Self::with_names(kind, types, families, names)
    }

    pub fn with_names(
        kind: OptKind,
        types: Vec<u32>,
        mut families: Vec<Vec<Vec<u32>>>,
        names: Vec<Vec<String>>,
    ) -> Result<Self> {
        let k = families.len();
        if k > MAX_K {
            return Err(Error::Unsupported(format!("{k} families (at most {MAX_K})")));
        }
        if let Some(t) = types.iter().find(|&&t| t >> k != 0) {
            return Err(Error::Contract(format!("type mask {t:b} has more than {k} bits")));
        }
        if names.len() != k || names.iter().zip(&families).any(|(n, f)| n.len() != f.len()) {
            return Err(Error::Contract("one name per set required".into()));
        }
        for fam in &mut families {
            for s in fam {
                s.sort_unstable();
                s.dedup();
                if s.last().is_some_and(|&u| u as usize >= types.len()) {
                    return Err(Error::Contract("set element outside the universe".into()));
                }
            }
        }
        Ok(HybridInstance {
            k,
            kind,
            types,
            families,
            names,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> OptKind {
        self.kind
    }

    pub fn universe_len(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[u32] {
        &self.types
    }

    pub fn families(&self) -> &[Vec<Vec<u32>>] {
        &self.families
    }

    pub fn names(&self) -> &[Vec<String>] {
        &self.names
    }

    /// Sparsity: total size of all sets.
    pub fn m_h(&self) -> usize {
        self.families.iter().flatten().map(Vec::len).sum()
    }

    pub fn max_set_size(&self) -> usize {
        self.families.iter().flatten().map(Vec::len).max().unwrap_or(0)
    }

    /// `|U_tau|` for every mask `tau`.
    pub fn part_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; 1 << self.k];
        for &t in &self.types {
            out[t as usize] += 1;
        }
        out
    }

    /// Per-type values and their sum for the tuple choosing set `idx[i]`
    /// from family `i`.
    pub fn val(&self, idx: &[usize]) -> (Vec<u64>, u64) {
        assert_eq!(idx.len(), self.k);
        let mut per = vec![0u64; 1 << self.k];
        let mut mask: Vec<(u32, u32)> = Vec::new();
        for (i, (&j, fam)) in idx.iter().zip(&self.families).enumerate() {
            mask.extend(fam[j].iter().map(|&u| (u, 1u32 << i)));
        }
        mask.sort_unstable();
        let mut touched_zero = 0u64;
        let mut p = 0;
        while p < mask.len() {
            let u = mask[p].0;
            let mut m = 0;
            while p < mask.len() && mask[p].0 == u {
                m |= mask[p].1;
                p += 1;
            }
            let t = self.types[u as usize];
            if t == 0 {
                touched_zero += 1;
            } else if m == t {
                per[t as usize] += 1;
            }
        }
        per[0] = self.types.iter().filter(|&&t| t == 0).count() as u64 - touched_zero;
        let total = per.iter().sum();
        (per, total)
    }

    pub fn total(&self, idx: &[usize]) -> u64 {
        self.val(idx).1
    }

    /// Fixes family `i` to set `j`, giving an instance over the remaining
    /// families with the same value on every completed tuple.
    pub fn fix_family(&self, i: usize, j: usize) -> HybridInstance {
        let chosen = &self.families[i][j];
        let mut remap = vec![u32::MAX; self.types.len()];
        let mut types = Vec::new();
        let low = (1u32 << i) - 1;
        for (u, &t) in self.types.iter().enumerate() {
            let inside = chosen.binary_search(&(u as u32)).is_ok();
            if inside == (t >> i & 1 == 1) {
                remap[u] = types.len() as u32;
                types.push((t & low) | (t >> (i + 1)) << i);
            }
        }
        let families = self
            .families
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != i)
            .map(|(_, fam)| {
                fam.iter()
                    .map(|s| s.iter().map(|&u| remap[u as usize]).filter(|&u| u != u32::MAX).collect())
                    .collect()
            })
            .collect();
        let mut names = self.names.clone();
        names.remove(i);
        HybridInstance {
            k: self.k - 1,
            kind: self.kind,
            types,
            families,
            names,
        }
    }

    /// Keeps only the listed sets of each family.
    pub fn select(&self, keep: &[Vec<usize>]) -> HybridInstance {
        let families = self
            .families
            .iter()
            .zip(keep)
            .map(|(fam, ks)| ks.iter().map(|&j| fam[j].clone()).collect())
            .collect();
        let names = self
            .names
            .iter()
            .zip(keep)
            .map(|(n, ks)| ks.iter().map(|&j| n[j].clone()).collect())
            .collect();
        HybridInstance {
            k: self.k,
            kind: self.kind,
            types: self.types.clone(),
            families,
            names,
        }
    }

    /// Drops elements that no set touches. Untouched elements of type 0
    /// count for every tuple; their number is returned alongside.
    pub fn trim(&self) -> (HybridInstance, u64) {
        let mut used = vec![false; self.types.len()];
        for &u in self.families.iter().flatten().flatten() {
            used[u as usize] = true;
        }
        let mut remap = vec![u32::MAX; self.types.len()];
        let mut types = Vec::new();
        let mut constant = 0;
        for (u, &t) in self.types.iter().enumerate() {
            if used[u] {
                remap[u] = types.len() as u32;
                types.push(t);
            } else if t == 0 {
                constant += 1;
            }
        }
        let families = self
            .families
            .iter()
            .map(|fam| fam.iter().map(|s| s.iter().map(|&u| remap[u as usize]).collect()).collect())
            .collect();
        (
            HybridInstance {
                k: self.k,
                kind: self.kind,
                types,
                families,
                names: self.names.clone(),
            },
            constant,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("kind {}\nk {}\n", self.kind.as_str(), self.k);
        for (u, &t) in self.types.iter().enumerate() {
            let _ = writeln!(out, "universe {u} {}", tau_string(t, self.k));
        }
        for (i, fam) in self.families.iter().enumerate() {
            for (s, name) in fam.iter().zip(&self.names[i]) {
                let _ = write!(out, "set {i} {name}");
                for u in s {
                    let _ = write!(out, " {u}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = OptKind::Max;
        let mut k: Option<usize> = None;
        let mut types: Vec<Option<u32>> = Vec::new();
        let mut families: Vec<Vec<Vec<u32>>> = Vec::new();
        let mut names: Vec<Vec<String>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            let err = |msg: String| Error::Parse { line, msg };
            let num = |t: &str| t.parse::<usize>().map_err(|_| err(format!("expected a number, got `{t}`")));
            match toks.as_slice() {
                [] => {}
                [c, ..] if c.starts_with('#') => {}
                ["kind", "max"] => kind = OptKind::Max,
                ["kind", "min"] => kind = OptKind::Min,
                ["k", v] => k = Some(num(v)?),
                ["universe", id, tau] => {
                    let id = num(id)?;
                    let kk = *k.get_or_insert(tau.len());
                    if tau.len() != kk || !tau.bytes().all(|b| b == b'0' || b == b'1') {
                        return Err(err(format!("bad type `{tau}`")));
                    }
                    let t = tau.bytes().enumerate().fold(0u32, |m, (i, b)| m | ((b == b'1') as u32) << i);
                    if types.len() <= id {
                        types.resize(id + 1, None);
                    }
                    types[id] = Some(t);
                }
                ["set", fam, name, elems @ ..] => {
                    let fam = num(fam)?;
                    if families.len() <= fam {
                        families.resize(fam + 1, Vec::new());
                        names.resize(fam + 1, Vec::new());
                    }
                    families[fam].push(elems.iter().map(|e| num(e).map(|u| u as u32)).collect::<Result<_>>()?);
                    names[fam].push(name.to_string());
                }
                _ => return Err(err(format!("unrecognized line `{}`", raw.trim()))),
            }
        }
        let k = k.unwrap_or(families.len());
        if families.len() > k {
            return Err(Error::Parse {
                line: 0,
                msg: format!("set family {} out of range", families.len() - 1),
            });
        }
        families.resize(k, Vec::new());
        names.resize(k, Vec::new());
        let types = types
            .into_iter()
            .enumerate()
            .map(|(u, t)| {
                t.ok_or(Error::Parse {
                    line: 0,
                    msg: format!("universe element {u} missing"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HybridInstance::with_names(kind, types, families, names)
    }
}

pub(crate) fn tau_string(t: u32, k: usize) -> String {
    (0..k).map(|i| if t >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Single-type instance: the value of a tuple is
/// `|(∩_{tau[i]=1} S_i) \ (∪_{tau[i]=0} S_i)|` over the whole universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicInstance {
    pub tau: u32,
    pub universe: usize,
    pub kind: OptKind,
    pub families: Vec<Vec<Vec<u32>>>,
}

impl BasicInstance {
    pub fn k(&self) -> usize {
        self.families.len()
    }

    pub fn as_hybrid(&self) -> HybridInstance {
        HybridInstance::new(self.kind, vec![self.tau; self.universe], self.families.clone())
            .expect("basic instances are well formed")
    }

    pub fn val(&self, idx: &[usize]) -> u64 {
        self.as_hybrid().total(idx)
    }
}

/// Complements every set on the parts whose type disagrees with `tau` in
/// that coordinate, so all elements count under the single type `tau`.
pub fn hybrid_to_basic(inst: &HybridInstance, tau: u32) -> BasicInstance {
    let n = inst.universe_len();
    let families = inst
        .families
        .iter()
        .enumerate()
        .map(|(i, fam)| {
            let flip: Vec<u32> = (0..n as u32)
                .filter(|&u| (inst.types[u as usize] ^ tau) >> i & 1 == 1)
                .collect();
            fam.iter().map(|s| symmetric_difference(s, &flip)).collect()
        })
        .collect();
    BasicInstance {
        tau,
        universe: n,
        kind: inst.kind,
        families,
    }
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push(*x);
                i += 1;
            }
            (Some(_), Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (Some(x), None) => {
                out.push(*x);
                i += 1;
            }
            (None, Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Exhaustive optimum over all tuples; ties keep the lexicographically
/// smallest tuple. `None` when some family is empty.
pub fn hybrid_baseline(inst: &HybridInstance) -> Option<HybridSolution> {
    let sizes: Vec<usize> = inst.families.iter().map(Vec::len).collect();
    if sizes.contains(&0) {
        return None;
    }
    let mut idx = vec![0usize; inst.k];
    let mut best: Option<HybridSolution> = None;
    loop {
        let v = inst.total(&idx);
        if best.as_ref().is_none_or(|b| inst.kind.better(v, b.value)) {
            best = Some(HybridSolution {
                value: v,
                witness: Some(idx.clone()),
            });
        }
        let mut i = inst.k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < sizes[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn val_examples() {
        let i = HybridInstance::new(OptKind::Max, vec![0b11], vec![vec![vec![0]], vec![vec![0]]]).unwrap();
        assert_eq!(i.val(&[0, 0]).0[0b11], 1);
        assert_eq!(i.total(&[0, 0]), 1);
        let i = HybridInstance::new(OptKind::Max, vec![0b01, 0b01], vec![vec![vec![0]], vec![vec![1]]]).unwrap();
        // type 10 in string form: tau[1]=1, tau[2]=0
        assert_eq!(i.val(&[0, 0]).0[0b01], 1);
    }

    #[test]
    fn basic_complements_other_parts() {
        let i = HybridInstance::new(OptKind::Max, vec![0], vec![vec![vec![]], vec![vec![]]]).unwrap();
        let b = hybrid_to_basic(&i, 0b11);
        assert_eq!(b.families[0][0], vec![0]);
        assert_eq!(b.val(&[0, 0]), 1);
        let same = HybridInstance::new(OptKind::Max, vec![0b11; 2], vec![vec![vec![0]], vec![vec![1]]]).unwrap();
        assert_eq!(hybrid_to_basic(&same, 0b11).families, same.families());
    }

    #[test]
    fn fix_family_preserves_values() {
        let i = HybridInstance::new(
            OptKind::Max,
            vec![0, 1, 2, 3, 1, 0],
            vec![vec![vec![1, 3], vec![0, 4]], vec![vec![2, 3], vec![5]]],
        )
        .unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(i.fix_family(0, a).total(&[b]), i.total(&[a, b]));
                assert_eq!(i.fix_family(1, b).total(&[a]), i.total(&[a, b]));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let i = HybridInstance::new(OptKind::Min, vec![0b01, 0b10, 0], vec![vec![vec![0, 2]], vec![vec![1]]]).unwrap();
        let text = i.to_text();
        assert!(text.contains("universe 0 10"));
        assert_eq!(HybridInstance::parse(&text).unwrap(), i);
    }

    #[test]
    fn baseline_edge_cases() {
        let empty = HybridInstance::new(OptKind::Max, vec![], vec![vec![vec![]]]).unwrap();
        assert_eq!(hybrid_baseline(&empty).unwrap().value, 0);
        let none = HybridInstance::new(OptKind::Max, vec![0], vec![vec![]]).unwrap();
        assert_eq!(hybrid_baseline(&none), None);
    }
}
