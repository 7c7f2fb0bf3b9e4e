//! Simplification chain for single-count-variable formulas: normalization,
//! hyperedge removal, the grouped lift that strips cross predicates,
//! parallel-edge removal and the translation into hybrid set instances.

mod cross_edge;
mod hybridize;
mod hyper;
mod lift;
mod normalize;
mod parallel;
mod pipeline;

pub use cross_edge::{solve_forced_edge, solve_positive_cross_edge};
pub use hybridize::{to_hybrid, HybridPart};
pub use hyper::{remove_hyperedges, DecompositionPlan, SideProblem};
pub use lift::{
    partition_groups, relaxations, solve_cross_free_lift, GroupPartition, InnerSolver, LiftStats,
    Relaxations,
};
pub use normalize::{is_normalized, normalize};
pub use parallel::{remove_parallel_edges, ParallelReduction};
pub use pipeline::{
    problem_text, reduce_and_solve, reduce_problem, reduction_artifacts, Artifact, ReductionTrace,
    Route, StageTrace,
};

use crate::structure::{ObjectId, RelationalStructure, StructureBuilder};

pub(crate) type NewRelation = (String, usize, Vec<Vec<ObjectId>>);

/// Copy of `s` with extra relations; object ids are unchanged.
pub(crate) fn extend_structure(s: &RelationalStructure, extra: Vec<NewRelation>) -> RelationalStructure {
    let mut b = StructureBuilder::new();
    for l in s.labels() {
        b.object(l);
    }
    for r in s.relations() {
        b.declare(r.name(), r.arity()).expect("existing relation");
        for t in r.records() {
            b.insert(r.name(), t).expect("existing record");
        }
    }
    for (name, arity, records) in extra {
        b.declare(&name, arity).expect("fresh relation name");
        for t in records {
            b.insert(&name, &t).expect("arity checked by caller");
        }
    }
    b.build()
}

/// `base`, with underscores appended until `taken` rejects it no more.
pub(crate) fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    let mut name = base.to_string();
    while taken(&name) {
        name.push('_');
    }
    name
}
