use super::IpInstance;
use crate::error::{Error, Result};
use crate::formula::OptKind;

/// Default cap on the number of vector tuples a brute-force solver visits.
pub const DEFAULT_TUPLE_BUDGET: u64 = 200_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpSolution {
    pub value: u64,
    /// Vector index per family; absent for approximate answers.
    pub witness: Option<Vec<usize>>,
}

/// A (possibly approximate) k-MaxIP / k-MinIP solver with declared ratio
/// `c`: max answers lie in `[OPT/c, OPT]`, min answers in `[OPT, c*OPT]`.
pub trait IpSolver: Send + Sync {
    fn ratio(&self) -> f64;

    /// `None` when some family is empty.
    fn solve(&self, inst: &IpInstance, kind: OptKind) -> Result<Option<IpSolution>>;

    fn describe(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceIp {
    pub budget: u64,
}

impl Default for BruteForceIp {
    fn default() -> Self {
        BruteForceIp {
            budget: DEFAULT_TUPLE_BUDGET,
        }
    }
}

impl IpSolver for BruteForceIp {
    fn ratio(&self) -> f64 {
        1.0
    }

    fn solve(&self, inst: &IpInstance, kind: OptKind) -> Result<Option<IpSolution>> {
        brute_force(inst, kind, self.budget)
    }

    fn describe(&self) -> String {
        "exact".into()
    }
}

pub fn brute_force_kmaxip(inst: &IpInstance) -> Result<Option<IpSolution>> {
    brute_force(inst, OptKind::Max, DEFAULT_TUPLE_BUDGET)
}

pub fn brute_force_kminip(inst: &IpInstance) -> Result<Option<IpSolution>> {
    brute_force(inst, OptKind::Min, DEFAULT_TUPLE_BUDGET)
}

/// Visits all tuples in lexicographic order of vector indices, so ties keep
/// the smallest tuple.
fn brute_force(inst: &IpInstance, kind: OptKind, budget: u64) -> Result<Option<IpSolution>> {
    let sizes: Vec<usize> = inst.families().iter().map(Vec::len).collect();
    if sizes.is_empty() || sizes.contains(&0) {
        return Ok(None);
    }
    let total = sizes
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
        .unwrap_or(u64::MAX);
    if total > budget {
        return Err(Error::Resource(format!(
            "{total} vector tuples exceed the brute-force budget {budget}"
        )));
    }
    let k = sizes.len();
    let mut idx = vec![0usize; k];
    let mut best: Option<IpSolution> = None;
    loop {
        let v = inst.inner_product(&idx);
        if best.as_ref().is_none_or(|b| kind.better(v, b.value)) {
            best = Some(IpSolution {
                value: v,
                witness: Some(idx.clone()),
            });
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
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

/// Degrades an exact solver to the worst answer its ratio allows.
#[derive(Clone, Debug)]
pub struct ApproxWrapper<S> {
    inner: S,
    c: f64,
}

pub fn approx_wrapper<S: IpSolver>(inner: S, c: f64) -> Result<ApproxWrapper<S>> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::Config(format!("approximation ratio must be >= 1, got {c}")));
    }
    Ok(ApproxWrapper { inner, c })
}

impl<S> ApproxWrapper<S> {
    /// `ceil(OPT/c)` for max, `floor(c*OPT)` for min.
    pub fn degrade(&self, opt: u64, kind: OptKind) -> u64 {
        let o = opt as f64;
        match kind {
            OptKind::Max => ((o / self.c).ceil() as u64).clamp(0, opt),
            OptKind::Min => ((o * self.c).floor() as u64).max(opt),
        }
    }
}

impl<S: IpSolver> IpSolver for ApproxWrapper<S> {
    fn ratio(&self) -> f64 {
        self.c * self.inner.ratio()
    }

    fn solve(&self, inst: &IpInstance, kind: OptKind) -> Result<Option<IpSolution>> {
        Ok(self.inner.solve(inst, kind)?.map(|s| IpSolution {
            value: self.degrade(s.value, kind),
            witness: None,
        }))
    }

    fn describe(&self) -> String {
        format!("approx:{} over {}", self.c, self.inner.describe())
    }
}

impl<T: IpSolver + ?Sized> IpSolver for &T {
    fn ratio(&self) -> f64 {
        (**self).ratio()
    }

    fn solve(&self, inst: &IpInstance, kind: OptKind) -> Result<Option<IpSolution>> {
        (**self).solve(inst, kind)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<T: IpSolver + ?Sized> IpSolver for Box<T> {
    fn ratio(&self) -> f64 {
        (**self).ratio()
    }

    fn solve(&self, inst: &IpInstance, kind: OptKind) -> Result<Option<IpSolution>> {
        (**self).solve(inst, kind)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> IpInstance {
        // X1 = {101, 011}, X2 = {110, 011}
        IpInstance::new(3, vec![vec![vec![0, 2], vec![1, 2]], vec![vec![0, 1], vec![1, 2]]]).unwrap()
    }

    #[test]
    fn max_example() {
        let s = brute_force_kmaxip(&pair()).unwrap().unwrap();
        assert_eq!((s.value, s.witness), (2, Some(vec![1, 1])));
    }

    #[test]
    fn all_ones_triple() {
        let ones: Vec<u32> = (0..5).collect();
        let inst = IpInstance::new(5, vec![vec![ones.clone()], vec![ones.clone()], vec![ones]]).unwrap();
        assert_eq!(brute_force_kmaxip(&inst).unwrap().unwrap().value, 5);
    }

    #[test]
    fn min_examples() {
        let inst = IpInstance::new(2, vec![vec![vec![0, 1]], vec![vec![0, 1]]]).unwrap();
        assert_eq!(brute_force_kminip(&inst).unwrap().unwrap().value, 2);
        assert_eq!(brute_force_kminip(&pair()).unwrap().unwrap().value, 1);
        let zeros = IpInstance::new(3, vec![vec![vec![]], vec![vec![0]]]).unwrap();
        assert_eq!(brute_force_kmaxip(&zeros).unwrap().unwrap().value, 0);
    }

    #[test]
    fn empty_family_is_infeasible() {
        let inst = IpInstance::new(2, vec![vec![vec![0]], vec![]]).unwrap();
        assert_eq!(brute_force_kmaxip(&inst).unwrap(), None);
    }

    #[test]
    fn budget_is_enforced() {
        let s = BruteForceIp { budget: 3 };
        assert!(matches!(s.solve(&pair(), OptKind::Max), Err(Error::Resource(_))));
    }

    #[test]
    fn wrapper_arithmetic() {
        let w = approx_wrapper(BruteForceIp::default(), 2.0).unwrap();
        assert_eq!(w.degrade(7, OptKind::Max), 4);
        assert_eq!(w.degrade(7, OptKind::Min), 14);
        assert_eq!(w.degrade(0, OptKind::Max), 0);
        assert_eq!(w.degrade(0, OptKind::Min), 0);
        let id = approx_wrapper(BruteForceIp::default(), 1.0).unwrap();
        for v in 0..20 {
            assert_eq!(id.degrade(v, OptKind::Max), v);
            assert_eq!(id.degrade(v, OptKind::Min), v);
        }
        assert!(approx_wrapper(BruteForceIp::default(), 0.5).is_err());
        assert_eq!(w.ratio(), 2.0);
    }
}
