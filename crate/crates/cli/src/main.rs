use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use optsp::baseline;
use optsp::fastcount::multi_counting;
use optsp::gen::{generate, GenProfile};
use optsp::hybrid::SolveConfig;
use optsp::ip::{approx_wrapper, BruteForceIp, IpInstance, IpSolver};
use optsp::reduce::{reduce_problem, reduction_artifacts, ReductionTrace};
use optsp::{load_structure, parse_formula, OptKind, Problem, Solution};

const AFTER_HELP: &str = "\
FORMULA DSL
  formula := kind vars '.' 'count' vars '.' expr
  kind    := 'max' | 'min'
  vars    := var (',' var)*        var := name [':' P]   (P: unary domain predicate)
  expr    := or;  or := and ('|' and)*;  and := not ('&' not)*
  not     := '!' not | '(' expr ')' | 'true' | 'false' | R '(' name (',' name)* ')'
  Example: max x1,x2 . count y . E(x1,y) & !F(x2,y)

STRUCTURE FILE
  # comment
  rel <name> <arity>         declare a relation (before its records)
  obj <label>...             declare objects that occur in no record
  <name> <label>...          add a record

IP FILE
  dim <d>                    coordinate count
  k <families>               optional, for families without vectors
  vec <family> <coord>...    a 0/1 vector by its one-coordinates

HYBRID FILE (written by `reduce`)
  kind max|min, k <families>, universe <id> <type bits>, set <family> <name> <id>...

Reports are `key: value` lines. The exit code is 0 unless a verification
mismatch or an error occurred.";

#[derive(Parser)]
#[command(name = "optsp", version, about = "Exact and approximate optimization over counting formulas")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a structure/formula pair, or an IP instance with --ip-input.
    Solve(SolveArgs),
    /// Dump every intermediate instance of the reduction chain.
    Reduce(ReduceArgs),
    /// Write a seeded random instance.
    Gen(GenArgs),
    /// Compare the selected engine with the baseline on seeded instances.
    Verify(VerifyArgs),
    /// Time the engines on seeded instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Auto,
    Baseline,
    Multicount,
    Reduction,
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "auto")]
    engine: Engine,
    /// `exact` or `approx:<c>`.
    #[arg(long, default_value = "exact")]
    ip: String,
    /// Additive slack of approximate recovery.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Write the report and trace to this file too.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record false-positive and inner-solver audits in the trace.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(required_unless_present = "ip_input")]
    structure: Option<PathBuf>,
    #[arg(required_unless_present = "ip_input")]
    formula: Option<PathBuf>,
    /// Solve this IP file instead.
    #[arg(long, conflicts_with_all = ["structure", "formula"])]
    ip_input: Option<PathBuf>,
    /// Optimization kind for --ip-input.
    #[arg(long, default_value = "max")]
    kind: String,
    /// Also run the baseline and report a verdict.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct ReduceArgs {
    structure: PathBuf,
    formula: PathBuf,
    /// Directory for the dumped instances.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Clone)]
struct ProfileArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    l: usize,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 150)]
    max_records: usize,
    #[arg(long, default_value_t = 2)]
    binary: usize,
    #[arg(long, default_value_t = 1)]
    unary: usize,
    #[arg(long, default_value_t = 0)]
    ternary: usize,
    #[arg(long, default_value_t = 4)]
    atoms: usize,
    /// `max`, `min` or `any`.
    #[arg(long, default_value = "any")]
    kind: String,
}

impl ProfileArgs {
    fn profile(&self) -> Result<GenProfile> {
        let p = GenProfile {
            k: self.k,
            l: self.l,
            n: self.n,
            density: self.density,
            max_records: self.max_records,
            binary: self.binary,
            unary: self.unary,
            ternary: self.ternary,
            max_atoms: self.atoms,
            kind: match self.kind.as_str() {
                "any" => None,
                k => Some(parse_kind(k)?),
            },
            ..GenProfile::default()
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Write `<out>.struct` and `<out>.formula`; print to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of instances, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    engine: EngineArgs,
}

fn parse_kind(s: &str) -> Result<OptKind> {
    match s {
        "max" => Ok(OptKind::Max),
        "min" => Ok(OptKind::Min),
        _ => bail!("kind must be `max` or `min`, got `{s}`"),
    }
}

/// The IP solver and configuration selected by `--ip` and `--eps`.
fn ip_setup(e: &EngineArgs) -> Result<(Box<dyn IpSolver>, SolveConfig)> {
    let mut cfg = if e.ip == "exact" {
        SolveConfig::default()
    } else if let Some(c) = e.ip.strip_prefix("approx:") {
        let c: f64 = c.parse().map_err(|_| anyhow!("invalid ratio in `--ip {}`", e.ip))?;
        SolveConfig::approx(c, e.eps)
    } else {
        bail!("--ip must be `exact` or `approx:<c>`, got `{}`", e.ip)
    };
    cfg.audit = e.audit;
    cfg.validate()?;
    let solver: Box<dyn IpSolver> = match cfg.mode {
        optsp::hybrid::Mode::Exact => Box::new(BruteForceIp::default()),
        optsp::hybrid::Mode::Approx { c, .. } => Box::new(approx_wrapper(BruteForceIp::default(), c)?),
    };
    Ok((solver, cfg))
}

#[derive(Default)]
struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn text(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    fn emit(&self, trace: Option<&Path>) -> Result<()> {
        print!("{}", self.text());
        if let Some(p) = trace {
            fs::write(p, self.text()).with_context(|| format!("writing trace {}", p.display()))?;
        }
        Ok(())
    }
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}

fn load_problem(structure: &Path, formula: &Path) -> Result<Problem> {
    let s = load_structure(&read(structure, "structure")?).context("loading structure")?;
    let f = parse_formula(read(formula, "formula")?.trim()).context("parsing formula")?;
    Problem::from_parts(&s, &f).context("checking formula against structure")
}

/// Outcome of one engine run.
struct Run {
    engine: Engine,
    solution: Option<Solution>,
    trace: Option<ReductionTrace>,
    micros: u128,
}

fn run_engine(p: &Problem, e: &EngineArgs) -> Result<Run> {
    let (solver, cfg) = ip_setup(e)?;
    let engine = match e.engine {
        Engine::Auto if p.l() >= 2 => Engine::Multicount,
        Engine::Auto => Engine::Reduction,
        other => other,
    };
    let t0 = Instant::now();
    let (solution, trace) = match engine {
        Engine::Baseline => (baseline::optimum(p).context("baseline")?, None),
        Engine::Multicount => (multi_counting(p).context("multicount")?, None),
        Engine::Reduction => {
            let (s, t) = reduce_problem(p, solver.as_ref(), &cfg).context("reduction")?;
            (s, Some(t))
        }
        Engine::Auto => unreachable!(),
    };
    Ok(Run {
        engine,
        solution,
        trace,
        micros: t0.elapsed().as_micros(),
    })
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Auto => "auto",
        Engine::Baseline => "baseline",
        Engine::Multicount => "multicount",
        Engine::Reduction => "reduction",
    }
}

/// Whether `got` respects the declared guarantee around the exact `want`.
fn within(kind: OptKind, cfg: &SolveConfig, want: Option<u64>, got: Option<u64>) -> bool {
    match (want, got, cfg.mode) {
        (None, None, _) => true,
        (Some(a), Some(b), optsp::hybrid::Mode::Exact) => a == b,
        (Some(o), Some(v), optsp::hybrid::Mode::Approx { c, eps }) => {
            let (o, v) = (o as f64, v as f64);
            match kind {
                OptKind::Max => v <= o && v >= o / c - 2.0 * eps - 1e-9,
                OptKind::Min => v >= o && v <= c * o + (c + 1.0) * eps + 1e-9,
            }
        }
        _ => false,
    }
}

fn put_trace(r: &mut Report, t: &ReductionTrace) {
    r.put("route", t.route.as_str());
    r.put("side_problems", t.side_problems);
    for s in &t.stages {
        r.put(format!("stage.{}", s.stage), format!("m={} n={} micros={}", s.m, s.n, s.micros));
    }
    if let Some(l) = &t.lift {
        r.put("lift.cross_sides", l.cross_sides);
        r.put("lift.m", l.m);
        r.put("lift.threshold", l.threshold);
        r.put("lift.heavy_vertices", l.heavy_vertices);
        r.put("lift.groups", format!("{:?}", l.groups));
        r.put("lift.combos", l.combos);
        r.put("lift.top_k", l.top_k);
        r.put("lift.fp_bound", l.fp_bound);
        if let Some(fp) = l.false_positives {
            r.put("lift.false_positives", fp);
        }
        if let Some(m) = l.inner_mismatches {
            r.put("lift.inner_mismatches", m);
        }
        if let Some(f) = &l.inner_fallback {
            r.put("lift.inner_fallback", f);
        }
        r.put("parallel.m", l.parallel_m);
        r.put("parallel.n", l.parallel_n);
        r.put("hybrid.parts", l.hybrid_parts);
        r.put("hybrid.calls", l.hybrid_calls);
        r.put("hybrid.universe", l.max_universe);
        r.put("hybrid.reduced_universe", l.max_reduced_universe);
        r.put("hybrid.t", l.max_t);
        r.put("hybrid.delta", l.max_delta);
        r.put("hybrid.e_bound", l.max_e_bound);
    }
}

fn witness_text(p: &Problem, s: &Solution) -> String {
    s.witness.iter().map(|&o| p.structure.label(o)).collect::<Vec<_>>().join(" ")
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let mut r = Report::default();
    r.put("seed", a.engine.seed);
    if let Some(path) = &a.ip_input {
        let inst = IpInstance::parse(&read(path, "IP instance")?).context("parsing IP instance")?;
        let kind = parse_kind(&a.kind)?;
        let (solver, _) = ip_setup(&a.engine)?;
        r.put("engine", "ip");
        r.put("ip", solver.describe());
        r.put("dim", inst.d());
        r.put("families", inst.k());
        let sol = solver.solve(&inst, kind).context("IP solver")?;
        match sol {
            Some(s) => {
                r.put("value", s.value);
                if let Some(w) = s.witness {
                    r.put("witness", w.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "));
                }
            }
            None => r.put("value", "none"),
        }
        r.emit(a.engine.trace.as_deref())?;
        return Ok(true);
    }
    let p = load_problem(a.structure.as_ref().unwrap(), a.formula.as_ref().unwrap())?;
    let run = run_engine(&p, &a.engine)?;
    r.put("engine", engine_name(run.engine));
    r.put("ip", &a.engine.ip);
    r.put("kind", p.kind().as_str());
    r.put("k", p.k());
    r.put("l", p.l());
    r.put("n", p.structure.n());
    r.put("m", p.structure.m());
    match &run.solution {
        Some(s) => {
            r.put("value", s.value);
            r.put("witness", witness_text(&p, s));
        }
        None => r.put("value", "none"),
    }
    r.put("micros", run.micros);
    if let Some(t) = &run.trace {
        put_trace(&mut r, t);
    }
    let mut ok = true;
    if a.verify {
        let (_, cfg) = ip_setup(&a.engine)?;
        let want = baseline::optimum(&p).context("baseline")?.map(|s| s.value);
        let got = run.solution.as_ref().map(|s| s.value);
        ok = run.engine == Engine::Baseline && want == got
            || run.engine == Engine::Multicount && want == got
            || run.engine == Engine::Reduction && within(p.kind(), &cfg, want, got);
        r.put("baseline", want.map_or("none".into(), |v| v.to_string()));
        r.put("verdict", if ok { "ok" } else { "mismatch" });
    }
    r.emit(a.engine.trace.as_deref())?;
    Ok(ok)
}

fn cmd_reduce(a: ReduceArgs) -> Result<bool> {
    let p = load_problem(&a.structure, &a.formula)?;
    let (solver, cfg) = ip_setup(&a.engine)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let arts = reduction_artifacts(&p, &cfg).context("reduction")?;
    let mut r = Report::default();
    r.put("seed", a.engine.seed);
    for art in &arts {
        let ext = if art.name.starts_with("hybrid") {
            "hyb"
        } else if art.name.starts_with("ip") {
            "ip"
        } else {
            "struct"
        };
        let path = a.out.join(format!("{}.{ext}", art.name));
        fs::write(&path, &art.text).with_context(|| format!("writing {}", path.display()))?;
        r.put(format!("artifact.{}", art.name), path.display());
    }
    let (sol, trace) = reduce_problem(&p, solver.as_ref(), &cfg).context("reduction")?;
    r.put("value", sol.map_or("none".into(), |s| s.value.to_string()));
    put_trace(&mut r, &trace);
    r.emit(a.engine.trace.as_deref())?;
    Ok(true)
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let g = generate(a.seed, &a.profile.profile()?)?;
    match &a.out {
        Some(prefix) => {
            let s = prefix.with_extension("struct");
            let f = prefix.with_extension("formula");
            fs::write(&s, g.structure_text()).with_context(|| format!("writing {}", s.display()))?;
            fs::write(&f, g.formula_text()).with_context(|| format!("writing {}", f.display()))?;
            println!("structure: {}\nformula: {}", s.display(), f.display());
        }
        None => print!("{}# formula {}", g.structure_text(), g.formula_text()),
    }
    Ok(true)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let profile = a.profile.profile()?;
    let (_, cfg) = ip_setup(&a.engine)?;
    let mut r = Report::default();
    r.put("seed", a.engine.seed);
    r.put("seeds", a.seeds);
    if a.seeds == 0 {
        eprintln!("warning: no seeds given; nothing was verified");
    }
    let (mut matches, mut mismatches, mut errors) = (0u64, 0u64, 0u64);
    for i in 0..a.seeds {
        let seed = a.engine.seed + i;
        let g = generate(seed, &profile)?;
        let p = Problem::from_parts(&g.structure, &g.formula)?;
        let want = baseline::optimum(&p)?.map(|s| s.value);
        match run_engine(&p, &a.engine) {
            Ok(run) => {
                let got = run.solution.map(|s| s.value);
                if within(p.kind(), &cfg, want, got) {
                    matches += 1;
                } else {
                    mismatches += 1;
                    r.put("mismatch", format!("seed={seed} got={got:?} baseline={want:?}"));
                }
            }
            Err(e) => {
                errors += 1;
                r.put("error", format!("seed={seed} {e:#}"));
            }
        }
    }
    r.put("matches", matches);
    r.put("mismatches", mismatches);
    r.put("errors", errors);
    let ok = mismatches == 0 && errors == 0;
    r.put("verdict", if ok { "pass" } else { "fail" });
    r.emit(a.engine.trace.as_deref())?;
    Ok(ok)
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let profile = a.profile.profile()?;
    let mut r = Report::default();
    r.put("seed", a.engine.seed);
    let engines: &[Engine] = if profile.l >= 2 {
        &[Engine::Baseline, Engine::Multicount]
    } else {
        &[Engine::Baseline, Engine::Reduction]
    };
    println!("{:>8} {:>6} {:>6} {:>12} {:>12}", "seed", "n", "m", engine_name(engines[0]), engine_name(engines[1]));
    let mut totals = [0u128; 2];
    for i in 0..a.seeds {
        let seed = a.engine.seed + i;
        let g = generate(seed, &profile)?;
        let p = Problem::from_parts(&g.structure, &g.formula)?;
        let mut micros = [0u128; 2];
        for (slot, &e) in engines.iter().enumerate() {
            let args = EngineArgs {
                engine: e,
                ..a.engine.clone()
            };
            micros[slot] = run_engine(&p, &args)?.micros;
            totals[slot] += micros[slot];
        }
        println!("{seed:>8} {:>6} {:>6} {:>12} {:>12}", p.structure.n(), p.structure.m(), micros[0], micros[1]);
    }
    for (slot, &e) in engines.iter().enumerate() {
        r.put(format!("total_micros.{}", engine_name(e)), totals[slot]);
    }
    r.emit(a.engine.trace.as_deref())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Reduce(a) => cmd_reduce(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match out {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
