//! k-wise inner product instances over sparse 0/1 vectors and the solvers
//! the reduction chain bottoms out in.
//!
//! Text format: `dim <d>`, an optional `k <count>`, then one
//! `vec <family> <coord>...` line per vector (families are 0-based).

mod solver;

use std::fmt::Write as _;

pub use solver::{
    approx_wrapper, brute_force_kmaxip, brute_force_kminip, ApproxWrapper, BruteForceIp, IpSolution,
    IpSolver, DEFAULT_TUPLE_BUDGET,
};

use crate::error::{Error, Result};

/// `k` families of sparse vectors in dimension `d`; each vector is a strictly
/// increasing coordinate list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpInstance {
    d: usize,
    families: Vec<Vec<Vec<u32>>>,
}

impl IpInstance {
    pub fn new(d: usize, families: Vec<Vec<Vec<u32>>>) -> Result<Self> {
        for (i, fam) in families.iter().enumerate() {
            for v in fam {
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Contract(format!(
                        "family {i}: coordinates must be strictly increasing"
                    )));
                }
                if v.last().is_some_and(|&c| c as usize >= d) {
                    return Err(Error::Contract(format!("family {i}: coordinate out of range")));
                }
            }
        }
        Ok(IpInstance { d, families })
    }

    pub fn k(&self) -> usize {
        self.families.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn families(&self) -> &[Vec<Vec<u32>>] {
        &self.families
    }

    /// Total number of one-entries.
    pub fn m_ip(&self) -> usize {
        self.families.iter().flatten().map(Vec::len).sum()
    }

    /// `<x_1, ..., x_k>` for the vectors at `idx` in each family.
    pub fn inner_product(&self, idx: &[usize]) -> u64 {
        let vecs: Vec<&[u32]> = idx
            .iter()
            .zip(&self.families)
            .map(|(&j, f)| f[j].as_slice())
            .collect();
        intersection_size(&vecs)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\nk {}\n", self.d, self.k());
        for (i, fam) in self.families.iter().enumerate() {
            for v in fam {
                let _ = write!(out, "vec {i}");
                for c in v {
                    let _ = write!(out, " {c}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut k = None;
        let mut families: Vec<Vec<Vec<u32>>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() || toks[0].starts_with('#') {
                continue;
            }
            let num = |t: &str| -> Result<usize> {
                t.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("expected a number, got `{t}`"),
                })
            };
            match toks[0] {
                "dim" if toks.len() == 2 => d = Some(num(toks[1])?),
                "k" if toks.len() == 2 => k = Some(num(toks[1])?),
                "vec" if toks.len() >= 2 => {
                    let fam = num(toks[1])?;
                    if k.is_some_and(|k| fam >= k) {
                        return Err(Error::Parse {
                            line,
                            msg: format!("family {fam} out of range"),
                        });
                    }
                    let mut v = toks[2..].iter().map(|t| num(t).map(|c| c as u32)).collect::<Result<Vec<_>>>()?;
                    v.sort_unstable();
                    v.dedup();
                    if families.len() <= fam {
                        families.resize(fam + 1, Vec::new());
                    }
                    families[fam].push(v);
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unrecognized line `{}`", raw.trim()),
                    })
                }
            }
        }
        let d = d.ok_or(Error::Parse {
            line: 0,
            msg: "missing `dim` line".into(),
        })?;
        if let Some(k) = k {
            families.resize(k, Vec::new());
        }
        IpInstance::new(d, families)
    }
}

/// Size of the common intersection of sorted coordinate lists.
pub fn intersection_size(vecs: &[&[u32]]) -> u64 {
    if vecs.is_empty() {
        return 0;
    }
    let Some(shortest) = (0..vecs.len()).min_by_key(|&i| vecs[i].len()) else {
        return 0;
    };
    let mut pos = vec![0usize; vecs.len()];
    let mut count = 0;
    'outer: for &c in vecs[shortest] {
        for (i, v) in vecs.iter().enumerate() {
            if i == shortest {
                continue;
            }
            let p = &mut pos[i];
            while *p < v.len() && v[*p] < c {
                *p += 1;
            }
            if *p == v.len() {
                break 'outer;
            }
            if v[*p] != c {
                continue 'outer;
            }
        }
        count += 1;
    }
    count
}

/// Dense 0/1 representation of an [`IpInstance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseIp {
    pub d: usize,
    pub families: Vec<Vec<Vec<bool>>>,
}

/// Cells allowed in a dense conversion unless overridden.
pub const DEFAULT_DENSE_BUDGET: usize = 1 << 26;

pub fn densify(inst: &IpInstance, budget: usize) -> Result<DenseIp> {
    let vectors: usize = inst.families.iter().map(Vec::len).sum();
    if vectors.saturating_mul(inst.d) > budget {
        return Err(Error::Resource(format!(
            "dense form needs {vectors} x {} cells (budget {budget})",
            inst.d
        )));
    }
    let families = inst
        .families
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|v| {
                    let mut dense = vec![false; inst.d];
                    for &c in v {
                        dense[c as usize] = true;
                    }
                    dense
                })
                .collect()
        })
        .collect();
    Ok(DenseIp { d: inst.d, families })
}

pub fn sparsify(dense: &DenseIp) -> Result<IpInstance> {
    let families = dense
        .families
        .iter()
        .map(|fam| {
            fam.iter()
                .map(|v| {
                    if v.len() != dense.d {
                        return Err(Error::Contract(format!(
                            "dense vector of length {} in dimension {}",
                            v.len(),
                            dense.d
                        )));
                    }
                    Ok(v.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i as u32).collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    IpInstance::new(dense.d, families)
}

impl DenseIp {
    pub fn inner_product(&self, idx: &[usize]) -> u64 {
        (0..self.d)
            .filter(|&c| idx.iter().zip(&self.families).all(|(&j, f)| f[j][c]))
            .count() as u64
    }

    pub fn ones(&self) -> usize {
        self.families.iter().flatten().flatten().filter(|b| **b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let inst = IpInstance::new(4, vec![vec![vec![0, 3], vec![]], vec![vec![1]]]).unwrap();
        let back = IpInstance::parse(&inst.to_text()).unwrap();
        assert_eq!(back, inst);
        assert!(IpInstance::parse("vec 0 1").is_err());
        assert!(IpInstance::parse("dim 2\nvec 0 5").is_err());
    }

    #[test]
    fn zero_vector_sparsifies_empty() {
        let dense = DenseIp {
            d: 3,
            families: vec![vec![vec![false; 3]]],
        };
        assert_eq!(sparsify(&dense).unwrap().families()[0][0], Vec::<u32>::new());
    }

    #[test]
    fn densify_respects_budget() {
        let inst = IpInstance::new(100, vec![vec![vec![1]; 10]]).unwrap();
        assert!(matches!(densify(&inst, 999), Err(Error::Resource(_))));
        let d = densify(&inst, 1000).unwrap();
        assert_eq!(d.ones(), inst.m_ip());
    }

    #[test]
    fn rejects_unsorted() {
        assert!(IpInstance::new(3, vec![vec![vec![2, 1]]]).is_err());
    }
}
