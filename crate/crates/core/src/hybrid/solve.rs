use super::universe::{e_bound, prime_support, reduced_size, universe_reduce, UniverseReduction};
use super::{hybrid_baseline, hybrid_to_basic, HybridInstance, HybridSolution};
use crate::error::{Error, Result};
use crate::formula::OptKind;
use crate::ip::{IpInstance, IpSolver};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    /// The IP solver has ratio at most `c`; `eps` is the rounding slack.
    Approx { c: f64, eps: f64 },
}

/// How the multiplicity `t` of the universe reduction is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TRule {
    /// Smallest `t` meeting the recovery condition for the actual
    /// instance: `t >= 2E(t)+1` exact, `t >= E(t)/eps` approximate.
    Adaptive,
    /// `E` computed from `s_max` up front, `t = 2E+1` or `ceil(E/eps)`.
    Conservative,
    /// Caller-chosen `t`; recovery is not guaranteed.
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub mode: Mode,
    /// Sets larger than this are handled by brute force.
    pub s_max: usize,
    pub t_rule: TRule,
    /// Largest reduced universe allowed.
    pub universe_budget: usize,
    /// Largest number of distinct binary predicates between opt and count
    /// variables before parallel-edge removal refuses.
    pub max_parallel: usize,
    /// Largest number of unary assignments enumerated when building hybrid
    /// instances; beyond it the lift falls back to the baseline.
    pub max_unary_assignments: usize,
    /// Cross-check lift internals against the baseline.
    pub audit: bool,
    /// Overrides the number of re-solved group combinations. Test only.
    pub top_k_override: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: Mode::Exact,
            s_max: 8,
            t_rule: TRule::Adaptive,
            universe_budget: 1 << 22,
            max_parallel: 4,
            max_unary_assignments: 1 << 16,
            audit: false,
            top_k_override: None,
        }
    }
}

impl SolveConfig {
    pub fn approx(c: f64, eps: f64) -> Self {
        SolveConfig {
            mode: Mode::Approx { c, eps },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Mode::Approx { c, eps } = self.mode {
            if !(c.is_finite() && c >= 1.0) {
                return Err(Error::Config(format!("ratio c must be >= 1, got {c}")));
            }
            if !(eps > 0.0 && eps < 0.5) {
                return Err(Error::Config(format!("eps must lie in (0, 1/2), got {eps}")));
            }
        }
        if self.s_max == 0 {
            return Err(Error::Config("s_max must be positive".into()));
        }
        if self.t_rule == TRule::Fixed(0) {
            return Err(Error::Config("t must be positive".into()));
        }
        Ok(())
    }

    /// Checks the solver's declared ratio against the mode.
    pub fn check_solver(&self, solver: &dyn IpSolver) -> Result<()> {
        self.validate()?;
        let r = solver.ratio();
        let ok = match self.mode {
            Mode::Exact => r == 1.0,
            Mode::Approx { c, .. } => r <= c + 1e-12,
        };
        if !ok {
            return Err(Error::Config(format!(
                "solver ratio {r} does not fit mode {:?}",
                self.mode
            )));
        }
        Ok(())
    }

    /// Declared ratio of the overall answer.
    pub fn ratio(&self) -> f64 {
        match self.mode {
            Mode::Exact => 1.0,
            Mode::Approx { c, .. } => c,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HybridStats {
    pub heavy_sets: usize,
    /// Universe of the light instance after trimming untouched elements.
    pub universe: usize,
    pub reduced_universe: usize,
    pub t: usize,
    pub delta: u64,
    pub e_bound: u64,
    pub hashed_parts: usize,
    pub ip_dim: usize,
    pub ip_ones: usize,
}

fn choose_t(inst: &HybridInstance, cfg: &SolveConfig) -> Result<usize> {
    let parts = inst.part_sizes();
    let (k, u) = (inst.k(), inst.universe_len());
    let meets = |t: usize, e: u64| match cfg.mode {
        Mode::Exact => t as u64 > 2 * e,
        Mode::Approx { eps, .. } => t as f64 >= e as f64 / eps,
    };
    let t = match cfg.t_rule {
        TRule::Fixed(t) => t,
        TRule::Conservative => {
            let e = e_bound(k, cfg.s_max, u, true);
            match cfg.mode {
                Mode::Exact => 2 * e as usize + 1,
                Mode::Approx { eps, .. } => ((e as f64 / eps).ceil() as usize).max(1),
            }
        }
        TRule::Adaptive => {
            let s = inst.max_set_size();
            let mut t = 1;
            loop {
                let psum = prime_support(t).iter().sum();
                let (_, any) = reduced_size(&parts, t, psum);
                if meets(t, e_bound(k, s, u, any)) {
                    break t;
                }
                t += 1;
                if t > cfg.universe_budget {
                    return Err(Error::Resource("no admissible multiplicity within budget".into()));
                }
            }
        }
    };
    let size = parts.iter().map(|&p| p.saturating_mul(t)).sum::<usize>();
    // hashing only shrinks parts, so t|U| is the worst case; check the exact size
    // only when the cheap bound is exceeded
    if size > cfg.universe_budget {
        let psum = prime_support(t).iter().sum();
        let (exact, _) = reduced_size(&parts, t, psum);
        if exact > cfg.universe_budget {
            return Err(Error::Resource(format!(
                "reduced universe of {exact} elements for t={t} exceeds budget {}",
                cfg.universe_budget
            )));
        }
    }
    Ok(t)
}

/// The light part of a hybrid instance as inner products.
#[derive(Clone, Debug)]
pub struct LightEncoding {
    /// Per family, the indices of the kept (light) sets.
    pub keep: Vec<Vec<usize>>,
    /// Count of elements no light set touches that still add to every tuple.
    pub constant: u64,
    /// Universe after trimming.
    pub universe: usize,
    pub t: usize,
    pub reduction: UniverseReduction,
    pub reduced_universe: usize,
    pub ip: IpInstance,
}

/// Drops sets larger than `s_max`, trims untouched elements, reduces the
/// universe and collapses it to the all-ones type. `None` if some family
/// has no light set.
pub fn encode_light(inst: &HybridInstance, cfg: &SolveConfig) -> Result<Option<LightEncoding>> {
    let keep: Vec<Vec<usize>> = inst
        .families()
        .iter()
        .map(|fam| (0..fam.len()).filter(|&j| fam[j].len() <= cfg.s_max).collect())
        .collect();
    if keep.iter().any(Vec::is_empty) {
        return Ok(None);
    }
    let (light, constant) = inst.select(&keep).trim();
    let t = choose_t(&light, cfg)?;
    let (reduced, reduction) = universe_reduce(&light, t);
    let basic = hybrid_to_basic(&reduced, (1u32 << inst.k()) - 1);
    let ip = IpInstance::new(basic.universe, basic.families)?;
    Ok(Some(LightEncoding {
        keep,
        constant,
        universe: light.universe_len(),
        t,
        reduction,
        reduced_universe: reduced.universe_len(),
        ip,
    }))
}

fn recover(v: u64, delta: u64, t: usize, cfg: &SolveConfig, kind: OptKind) -> u64 {
    let num = v + delta;
    let t = t as u64;
    match cfg.mode {
        Mode::Exact => (2 * num + t) / (2 * t),
        Mode::Approx { eps, .. } => {
            let alg = num as f64 / t as f64;
            let r = match kind {
                OptKind::Max => (alg - eps).ceil(),
                OptKind::Min => (alg + eps).floor(),
            };
            r.max(0.0) as u64
        }
    }
}

/// Brute-forces heavy sets, then reduces the universe of the light part,
/// converts it to a single-type instance, encodes it as inner products and
/// recovers the optimum from the solver's answer.
pub fn solve_hybrid(
    inst: &HybridInstance,
    solver: &dyn IpSolver,
    cfg: &SolveConfig,
) -> Result<(Option<HybridSolution>, HybridStats)> {
    cfg.check_solver(solver)?;
    let kind = inst.kind();
    let k = inst.k();
    let mut stats = HybridStats::default();
    if k == 0 {
        let v = inst.total(&[]);
        return Ok((
            Some(HybridSolution {
                value: v,
                witness: Some(vec![]),
            }),
            stats,
        ));
    }
    let mut best: Option<HybridSolution> = None;
    for i in 0..k {
        for (j, s) in inst.families()[i].iter().enumerate() {
            if s.len() <= cfg.s_max {
                continue;
            }
            stats.heavy_sets += 1;
            let sub = inst.fix_family(i, j);
            let sol = hybrid_baseline(&sub).map(|mut h| {
                if let Some(w) = h.witness.as_mut() {
                    w.insert(i, j);
                }
                h
            });
            best = HybridSolution::merge(kind, best, sol);
        }
    }

    let Some(enc) = encode_light(inst, cfg)? else {
        return Ok((best, stats));
    };
    let LightEncoding {
        keep,
        constant,
        t,
        reduction: red,
        ip,
        ..
    } = &enc;
    stats.universe = enc.universe;
    stats.reduced_universe = enc.reduced_universe;
    stats.t = *t;
    stats.delta = red.delta;
    stats.e_bound = red.e_bound;
    stats.hashed_parts = red.hashed.iter().filter(|&&h| h).count();
    stats.ip_dim = ip.d();
    stats.ip_ones = ip.m_ip();

    if let Some(sol) = solver.solve(ip, kind)? {
        let value = recover(sol.value, red.delta, *t, cfg, kind) + constant;
        let witness = sol
            .witness
            .map(|w| w.iter().zip(keep).map(|(&j, ks)| ks[j]).collect::<Vec<_>>())
            .filter(|w| inst.total(w) == value);
        debug_assert!(
            witness.is_some() || cfg.mode != Mode::Exact || matches!(cfg.t_rule, TRule::Fixed(_)),
            "exact recovery produced an inconsistent witness"
        );
        best = HybridSolution::merge(kind, best, Some(HybridSolution { value, witness }));
    }
    Ok((best, stats))
}
