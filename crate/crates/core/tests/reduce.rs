mod common;

use common::{check_parallel_and_hybrid, naive_opt, naive_problem_values, reduction_instance};
use optsp::hybrid::SolveConfig;
use optsp::ip::{approx_wrapper, BruteForceIp};
use optsp::reduce::{
    normalize, partition_groups, reduce_and_solve, reduction_artifacts, relaxations, remove_hyperedges,
    remove_parallel_edges, solve_cross_free_lift, solve_forced_edge, solve_positive_cross_edge, to_hybrid,
    InnerSolver, Route,
};
use optsp::gen::{generate, GenProfile};
use optsp::{baseline, load_structure, parse_formula, Error, ObjectId, OptKind, Problem};

fn audited() -> SolveConfig {
    SolveConfig {
        audit: true,
        ..SolveConfig::default()
    }
}

fn problem(s: &str, f: &str) -> Problem {
    Problem::from_parts(&load_structure(s).unwrap(), &parse_formula(f).unwrap()).unwrap()
}

#[test]
fn exact_chain_matches_oracle() {
    let ip = BruteForceIp::default();
    for seed in 0..150 {
        let g = reduction_instance(seed);
        let want = naive_opt(&g.structure, &g.formula).map(|x| x.0);
        let (got, trace) = reduce_and_solve(&g.structure, &g.formula, &ip, &audited())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", g.formula));
        assert_eq!(got.map(|s| s.value), want, "seed {seed}: {}", g.formula);
        assert_eq!(trace.route, Route::Reduction);
        let lift = trace.lift.unwrap();
        assert_eq!(lift.inner_mismatches, Some(0), "seed {seed}");
        assert!(lift.false_positives.unwrap() as u64 <= lift.fp_bound, "seed {seed}");
    }
}

#[test]
fn approximate_chain_stays_in_window() {
    let ip = approx_wrapper(BruteForceIp::default(), 2.0).unwrap();
    let cfg = SolveConfig {
        audit: true,
        ..SolveConfig::approx(2.0, 0.1)
    };
    for seed in 0..150 {
        let g = reduction_instance(seed);
        let want = naive_opt(&g.structure, &g.formula).map(|x| x.0);
        let (got, trace) = reduce_and_solve(&g.structure, &g.formula, &ip, &cfg).unwrap();
        match (want, got) {
            (None, None) => {}
            (Some(opt), Some(s)) => {
                let (o, v) = (opt as f64, s.value as f64);
                match g.formula.kind {
                    OptKind::Max => assert!(v <= o && v >= o / 2.1, "seed {seed}: {v} vs {o}"),
                    OptKind::Min => assert!(v >= o && v <= 2.1 * o, "seed {seed}: {v} vs {o}"),
                }
            }
            other => panic!("seed {seed}: {other:?}"),
        }
        assert_eq!(trace.lift.unwrap().inner_mismatches, Some(0), "seed {seed}");
    }
}

#[test]
fn exact_chain_rejects_approximate_solver() {
    let ip = approx_wrapper(BruteForceIp::default(), 2.0).unwrap();
    let g = reduction_instance(1);
    let err = reduce_and_solve(&g.structure, &g.formula, &ip, &SolveConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn two_count_variables_take_the_multicount_route() {
    let p = problem(
        "rel E 2\nE a b\nE b c\nE a c",
        "max x . count y,z . E(x,y) & E(y,z)",
    );
    let (sol, trace) = optsp::reduce::reduce_problem(&p, &BruteForceIp::default(), &SolveConfig::default()).unwrap();
    assert_eq!(trace.route, Route::MultiCount);
    assert_eq!(sol.unwrap().value, 1);
}

#[test]
fn no_opt_variables_is_unsupported() {
    let s = load_structure("rel E 2\nE a b").unwrap();
    let f = optsp::OptFormula::new(OptKind::Max, &[], &["y"], parse_formula("max x . count y . E(y,y)").unwrap().body);
    let p = Problem::from_parts(&s, &f).unwrap();
    let err = optsp::reduce::reduce_problem(&p, &BruteForceIp::default(), &SolveConfig::default());
    assert!(matches!(err, Err(Error::Unsupported(_))));
}

#[test]
fn normalize_keeps_every_value() {
    for seed in 0..150 {
        let g = generate(
            seed,
            &GenProfile {
                domains: true,
                ternary: 1,
                k: 2 + seed as usize % 2,
                ..GenProfile::default()
            },
        )
        .unwrap();
        let p = Problem::from_parts(&g.structure, &g.formula).unwrap();
        let n = normalize(&p).unwrap();
        assert!(optsp::reduce::is_normalized(&n), "seed {seed}");
        assert_eq!(naive_problem_values(&p), naive_problem_values(&n), "seed {seed}: {}", g.formula);
    }
}

#[test]
fn hyperedge_plan_combines_to_the_optimum() {
    let profile = GenProfile {
        ternary: 1,
        max_atoms: 5,
        ..GenProfile::default()
    };
    let mut with_sides = 0;
    for seed in 0..150 {
        let g = generate(seed, &GenProfile { k: 2 + seed as usize % 2, ..profile.clone() }).unwrap();
        let p = Problem::from_parts(&g.structure, &g.formula).unwrap();
        let plan = remove_hyperedges(&p).unwrap();
        assert!(!plan.main.profile().has_hyper);
        with_sides += !plan.side_problems.is_empty() as usize;
        let main = baseline::optimum(&plan.main).unwrap();
        let sides = plan
            .side_problems
            .iter()
            .map(|s| baseline::optimum(&s.problem).unwrap())
            .collect();
        let got = plan.combine(main, sides).map(|s| s.value);
        let want = naive_opt(&g.structure, &g.formula).map(|x| x.0);
        assert_eq!(got, want, "seed {seed}: {}", g.formula);
    }
    assert!(with_sides >= 10, "{with_sides}");
}

#[test]
fn hyper_record_links_every_position_pair() {
    let p = problem("rel R 3\nR a b c", "max x1,x2 . count y . R(x1,x2,y)");
    let plan = remove_hyperedges(&p).unwrap();
    assert_eq!(plan.side_problems.len(), 1);
    let n = plan.main.structure.relation("N").unwrap();
    assert_eq!(n.len(), 6);
    let a = plan.main.structure.object("a").unwrap();
    let c = plan.main.structure.object("c").unwrap();
    assert!(n.contains(&[c, a]));
}

#[test]
fn forced_edge_matches_oracle() {
    let mut tried = 0;
    for seed in 0..400 {
        let g = reduction_instance(seed);
        let p = normalize(&Problem::from_parts(&g.structure, &g.formula).unwrap()).unwrap();
        let rel = relaxations(&p).unwrap();
        for edge in &rel.cross {
            tried += 1;
            let got = solve_forced_edge(&p, edge).unwrap();
            // oracle: restrict to tuples with the edge
            let r = p.structure.relation(&edge.predicate).unwrap();
            let (i, j) = match (edge.args[0], edge.args[1]) {
                (optsp::VarRef::Opt(i), optsp::VarRef::Opt(j)) => (i, j),
                _ => unreachable!(),
            };
            let want = naive_problem_values(&p)
                .into_iter()
                .filter(|(t, _)| r.contains(&[t[i], t[j]]))
                .fold(None::<(u64, Vec<ObjectId>)>, |best, (t, v)| match best {
                    Some((b, _)) if !p.kind().better(v, b) => best,
                    _ => Some((v, t)),
                });
            assert_eq!(
                got.map(|s| (s.value, s.witness)),
                want,
                "seed {seed}: {}",
                p.formula
            );
        }
    }
    assert!(tried >= 100, "{tried}");
}

#[test]
fn positive_cross_edge_on_spec_shape() {
    let p = problem(
        "rel E 2\nrel F 2\nE a b\nE b a\nF a y1\nF b y1\nF a y2",
        "max x1,x2 . count y . E(x1,x2) & (F(x1,y) | F(x2,y))",
    );
    let edge = p.formula.body.atoms()[0].clone();
    let s = solve_positive_cross_edge(&p, &edge).unwrap().unwrap();
    assert_eq!(s.value, 2);
}

#[test]
fn parallel_and_hybrid_keep_tuple_values() {
    let mut checked = 0;
    for seed in 0..150 {
        let g = reduction_instance(seed);
        let p = Problem::from_parts(&g.structure, &g.formula).unwrap();
        let plan = remove_hyperedges(&p).unwrap();
        let psi1 = relaxations(&plan.main).unwrap().psi1;
        checked += check_parallel_and_hybrid(&psi1).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
    assert!(checked > 1000);
}

#[test]
fn parallel_copy_counts_follow_the_colors() {
    // r = 1, k = 2, unpruned: 4 copies per y, and 4 edges per nonzero pair
    let p = problem("rel E 2\nE a y\nE b y", "max x1,x2 . count y . E(x1,y) & !E(x2,y)");
    let par = remove_parallel_edges(&p, 4, false).unwrap();
    assert_eq!(par.copies, 4);
    let n = p.structure.n();
    assert_eq!(par.problem.structure.n(), 2 * n + 4 * n);
    // 2 nonzero pairs per opt variable, each gives 2 * 2^(r(k-1)) = 4 edges
    assert_eq!(par.problem.structure.relation(&par.edge).unwrap().len(), 2 * 2 * 4);
}

#[test]
fn parallel_cap_is_enforced() {
    let p = problem(
        "rel E 2\nrel F 2\nE a y\nF a y",
        "max x . count y . E(x,y) & F(x,y)",
    );
    assert!(matches!(remove_parallel_edges(&p, 1, true), Err(Error::Unsupported(_))));
}

#[test]
fn to_hybrid_rejects_leftover_cross_atoms() {
    let p = problem("rel E 2\nE a b", "max x1,x2 . count y . E(x1,x2) & E(x1,y)");
    assert!(matches!(to_hybrid(&p, 16), Err(Error::Contract(_))));
}

#[test]
fn lift_with_baseline_inner_matches_oracle() {
    for seed in 0..150 {
        let g = reduction_instance(seed);
        let p = Problem::from_parts(&g.structure, &g.formula).unwrap();
        let plan = remove_hyperedges(&p).unwrap();
        let (got, stats) = solve_cross_free_lift(&plan.main, InnerSolver::Baseline, &audited()).unwrap();
        let want = baseline::optimum(&plan.main).unwrap().map(|s| s.value);
        assert_eq!(got.map(|s| s.value), want, "seed {seed}");
        assert!(stats.false_positives.unwrap() as u64 <= stats.fp_bound);
    }
}

#[test]
fn heavy_vertex_optimum_is_found() {
    // hub h is adjacent to every y; it carries the optimum and is heavy
    let mut text = String::from("rel E 2\nrel F 2\n");
    for i in 0..12 {
        text += &format!("E h y{i}\n");
    }
    for i in 0..6 {
        text += &format!("E u{i} y{i}\nF u{i} u{}\n", (i + 1) % 6);
    }
    let p = problem(&text, "max x1,x2 . count y . !F(x1,x2) & E(x1,y) & E(x2,y)");
    let (got, stats) = solve_cross_free_lift(&p, InnerSolver::Baseline, &audited()).unwrap();
    assert!(stats.heavy_vertices >= 1);
    let h = p.structure.object("h").unwrap();
    let s = got.unwrap();
    assert_eq!(s.value, 12);
    assert_eq!(s.witness, vec![h, h]);
}

#[test]
fn forcing_k_to_one_is_a_test_only_override() {
    // a ring of light objects joined by cross records, plus a hub that
    // raises the degree threshold
    let mut text = String::from("rel E 2\nrel F 2\n");
    for i in 0..10 {
        text += &format!("E a{i} y{i}\nF a{i} a{}\n", (i + 1) % 10);
    }
    for i in 0..30 {
        text += &format!("E h z{i}\n");
    }
    let p = problem(&text, "max x1,x2 . count y . !F(x1,x2) & (E(x1,y) | E(x2,y))");
    let want = naive_opt(&p.structure, &p.formula).unwrap().0;
    let (got, stats) = solve_cross_free_lift(&p, InnerSolver::Baseline, &audited()).unwrap();
    assert!(stats.false_positives.unwrap() >= 2, "{stats:?}");
    assert!(stats.top_k > 1);
    assert_eq!(got.unwrap().value, want);
    let forced = SolveConfig {
        top_k_override: Some(1),
        ..audited()
    };
    let (_, fs) = solve_cross_free_lift(&p, InnerSolver::Baseline, &forced).unwrap();
    assert_eq!(fs.top_k, 1);
}

#[test]
fn groups_respect_degree_threshold() {
    let dom: Vec<ObjectId> = (0..10).map(ObjectId).collect();
    let deg = |o: ObjectId| (o.0 % 3) as usize;
    let part = partition_groups(std::slice::from_ref(&dom), deg, 2);
    let flat: Vec<ObjectId> = part.groups[0].iter().flatten().copied().collect();
    assert_eq!(flat, dom);
    for g in &part.groups[0] {
        let total: usize = g.iter().map(|&o| deg(o)).sum();
        assert!(total <= 2 * 2);
    }
    assert_eq!(part.counts(), vec![4]);
}

#[test]
fn artifacts_cover_every_stage() {
    let p = problem(
        "rel E 2\nrel F 2\nrel R 3\nE a y\nF b y\nR a b y\nE b a",
        "max x1,x2 . count y . (E(x1,y) | F(x2,y)) & !R(x1,x2,y) & !E(x2,x1)",
    );
    let names: Vec<String> = reduction_artifacts(&p, &SolveConfig::default())
        .unwrap()
        .into_iter()
        .map(|a| a.name)
        .collect();
    for want in ["normalized", "hyper-main", "hyper-side-0", "guarded", "relaxed", "parallel", "hybrid-0"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
}
