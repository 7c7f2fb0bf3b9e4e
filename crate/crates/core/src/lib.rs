//! Exact and approximate evaluation of optimization formulas
//! `opt_{x_1..x_k} #{(y_1..y_l) : phi}` over sparse relational structures.

pub mod baseline;
pub mod error;
pub mod fastcount;
pub mod formula;
pub mod gen;
pub mod hybrid;
pub mod ip;
pub mod problem;
pub mod reduce;
mod residual;
pub mod structure;

pub use error::{Error, Result};
pub use formula::{classify, parse_formula, Atom, Expr, FormulaProfile, OptFormula, OptKind, VarDecl, VarRef};
pub use problem::{Domains, Problem, Solution};
pub use structure::{load_structure, ObjectId, Relation, RelationalStructure, StructureBuilder, UnaryRequirement};
