use std::fmt::Write as _;
use std::time::Instant;

use super::{
    normalize, relaxations, remove_hyperedges, remove_parallel_edges, solve_cross_free_lift,
    solve_forced_edge, to_hybrid, InnerSolver, LiftStats,
};
use crate::error::{Error, Result};
use crate::fastcount;
use crate::formula::OptFormula;
use crate::hybrid::{encode_light, SolveConfig};
use crate::ip::IpSolver;
use crate::problem::{Problem, Solution};
use crate::structure::RelationalStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Two or more count variables.
    MultiCount,
    Reduction,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::MultiCount => "multicount",
            Route::Reduction => "reduction",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTrace {
    pub stage: &'static str,
    /// Records and objects of the stage's output structure.
    pub m: usize,
    pub n: usize,
    pub micros: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace {
    pub route: Route,
    pub stages: Vec<StageTrace>,
    pub lift: Option<LiftStats>,
    pub side_problems: usize,
}

pub fn reduce_and_solve(
    s: &RelationalStructure,
    f: &OptFormula,
    solver: &dyn IpSolver,
    cfg: &SolveConfig,
) -> Result<(Option<Solution>, ReductionTrace)> {
    reduce_problem(&Problem::from_parts(s, f)?, solver, cfg)
}

/// Full chain: normalization, hyperedge removal with exactly solved side
/// problems, then the grouped lift whose inner solver runs parallel-edge
/// removal, the hybrid translation and `solver`.
pub fn reduce_problem(
    p: &Problem,
    solver: &dyn IpSolver,
    cfg: &SolveConfig,
) -> Result<(Option<Solution>, ReductionTrace)> {
    cfg.validate()?;
    cfg.check_solver(solver)?;
    if p.k() == 0 || p.l() == 0 {
        return Err(Error::Unsupported(format!(
            "need k >= 1 and l >= 1, got k={} l={}",
            p.k(),
            p.l()
        )));
    }
    let mut stages = Vec::new();
    let mut stage = |name: &'static str, q: &Problem, t0: Instant| {
        stages.push(StageTrace {
            stage: name,
            m: q.structure.m(),
            n: q.structure.n(),
            micros: t0.elapsed().as_micros(),
        })
    };
    if p.l() >= 2 {
        let t0 = Instant::now();
        let sol = fastcount::multi_counting(p)?;
        stage("multicount", p, t0);
        return Ok((
            sol,
            ReductionTrace {
                route: Route::MultiCount,
                stages,
                lift: None,
                side_problems: 0,
            },
        ));
    }

    let t0 = Instant::now();
    let norm = normalize(p)?;
    stage("normalize", &norm, t0);

    let t0 = Instant::now();
    let plan = remove_hyperedges(&norm)?;
    stage("hyperedges", &plan.main, t0);

    let t0 = Instant::now();
    let mut sides = Vec::new();
    for side in &plan.side_problems {
        sides.push(solve_forced_edge(&side.problem, &side.edge)?);
    }
    stage("sides", &plan.main, t0);

    let t0 = Instant::now();
    let (main, lift) = solve_cross_free_lift(&plan.main, InnerSolver::Hybrid(solver), cfg)?;
    stage("lift", &plan.main, t0);

    let sol = plan.combine(main, sides);
    Ok((
        sol,
        ReductionTrace {
            route: Route::Reduction,
            stages,
            lift: Some(lift),
            side_problems: plan.side_problems.len(),
        },
    ))
}

/// A named text dump of an intermediate instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub text: String,
}

/// Structure text followed by the formula and explicit domains as comments.
pub fn problem_text(p: &Problem) -> String {
    let mut out = p.structure.to_text();
    let _ = writeln!(out, "# formula {}", p.formula);
    let names = p.formula.opt_vars.iter().chain(&p.formula.count_vars);
    for (v, d) in names.enumerate() {
        let dom = p.domains.get(v);
        if dom.len() == p.structure.n() {
            continue;
        }
        let labels: Vec<&str> = dom.iter().map(|&o| p.structure.label(o)).collect();
        let _ = writeln!(out, "# domain {}: {}", d.name, labels.join(" "));
    }
    out
}

/// Every intermediate instance of the single-count chain. Stages that do
/// not apply to the input are skipped.
pub fn reduction_artifacts(p: &Problem, cfg: &SolveConfig) -> Result<Vec<Artifact>> {
    if p.l() != 1 {
        return Err(Error::Unsupported(format!(
            "the reduction chain needs exactly one count variable, got {}",
            p.l()
        )));
    }
    let mut out = Vec::new();
    let mut push = |name: String, text: String| out.push(Artifact { name, text });
    let norm = normalize(p)?;
    push("normalized".into(), problem_text(&norm));
    let plan = remove_hyperedges(&norm)?;
    push("hyper-main".into(), problem_text(&plan.main));
    for (i, side) in plan.side_problems.iter().enumerate() {
        push(format!("hyper-side-{i}"), problem_text(&side.problem));
    }
    let rel = relaxations(&plan.main)?;
    push("guarded".into(), problem_text(&rel.psi0));
    push("relaxed".into(), problem_text(&rel.psi1));
    let par = remove_parallel_edges(&rel.psi1, cfg.max_parallel, true)?;
    push("parallel".into(), problem_text(&par.problem));
    let parts = to_hybrid(&par.problem, cfg.max_unary_assignments)?;
    for (i, h) in parts.iter().enumerate() {
        push(format!("hybrid-{i}"), h.instance.to_text());
        if let Some(enc) = encode_light(&h.instance, cfg)? {
            let r = &enc.reduction;
            let mut text = format!(
                "# t {} delta {} e_bound {} universe {} reduced {} constant {}\n",
                enc.t, r.delta, r.e_bound, enc.universe, enc.reduced_universe, enc.constant
            );
            text += &enc.ip.to_text();
            push(format!("ip-{i}"), text);
        }
    }
    Ok(out)
}
