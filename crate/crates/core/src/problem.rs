//! A formula bound to a structure, with per-variable object domains.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{classify, FormulaProfile, OptFormula, OptKind};
use crate::structure::{ObjectId, RelationalStructure};

/// Sorted object domain of every variable, indexed `x_1..x_k, y_1..y_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domains {
    vars: Vec<Arc<[ObjectId]>>,
}

impl Domains {
    /// Every variable ranges over all objects.
    pub fn full(n: usize, vars: usize) -> Self {
        let all: Arc<[ObjectId]> = (0..n as u32).map(ObjectId).collect();
        Domains {
            vars: vec![all; vars],
        }
    }

    pub fn from_vecs(vars: Vec<Vec<ObjectId>>) -> Self {
        Domains {
            vars: vars
                .into_iter()
                .map(|mut v| {
                    v.sort_unstable();
                    v.dedup();
                    v.into()
                })
                .collect(),
        }
    }

    pub fn get(&self, var: usize) -> &[ObjectId] {
        &self.vars[var]
    }

    pub fn shared(&self, var: usize) -> Arc<[ObjectId]> {
        self.vars[var].clone()
    }

    pub fn set(&mut self, var: usize, mut objects: Vec<ObjectId>) {
        objects.sort_unstable();
        objects.dedup();
        self.vars[var] = objects.into();
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// An optimum and a tuple attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub value: u64,
    pub witness: Vec<ObjectId>,
}

impl Solution {
    /// Keeps the better of two optional solutions; ties keep `a`.
    pub fn merge(kind: OptKind, a: Option<Solution>, b: Option<Solution>) -> Option<Solution> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if kind.better(b.value, a.value) || (b.value == a.value && b.witness < a.witness) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub structure: Arc<RelationalStructure>,
    pub formula: OptFormula,
    pub domains: Domains,
}

impl Problem {
    /// Binds `formula` to `structure`; `x:P` annotations restrict domains.
    pub fn new(structure: Arc<RelationalStructure>, formula: OptFormula) -> Result<Self> {
        classify(&formula, &structure)?;
        let nv = formula.k() + formula.l();
        let mut domains = Domains::full(structure.n(), nv);
        for (i, d) in formula.opt_vars.iter().chain(&formula.count_vars).enumerate() {
            if let Some(p) = &d.domain {
                let rel = structure.relation(p).expect("checked by classify");
                domains.set(i, rel.records().iter().map(|t| t[0]).collect());
            }
        }
        Ok(Problem {
            structure,
            formula,
            domains,
        })
    }

    pub fn from_parts(structure: &RelationalStructure, formula: &OptFormula) -> Result<Self> {
        Self::new(Arc::new(structure.clone()), formula.clone())
    }

    /// Binds with explicit domains (annotations are ignored).
    pub fn with_domains(
        structure: Arc<RelationalStructure>,
        formula: OptFormula,
        domains: Domains,
    ) -> Result<Self> {
        classify(&formula, &structure)?;
        if domains.len() != formula.k() + formula.l() {
            return Err(Error::Contract(format!(
                "expected {} domains, got {}",
                formula.k() + formula.l(),
                domains.len()
            )));
        }
        for v in 0..domains.len() {
            if let Some(o) = domains.get(v).iter().find(|o| o.index() >= structure.n()) {
                return Err(Error::UnknownObject(format!("#{}", o.0)));
            }
        }
        Ok(Problem {
            structure,
            formula,
            domains,
        })
    }

    pub fn k(&self) -> usize {
        self.formula.k()
    }

    pub fn l(&self) -> usize {
        self.formula.l()
    }

    pub fn kind(&self) -> OptKind {
        self.formula.kind
    }

    pub fn profile(&self) -> FormulaProfile {
        classify(&self.formula, &self.structure).expect("validated at construction")
    }

    /// Same structure and domains, different formula over the same variables.
    pub fn with_formula(&self, formula: OptFormula) -> Result<Self> {
        Self::with_domains(self.structure.clone(), formula, self.domains.clone())
    }

    pub fn with_new_domains(&self, domains: Domains) -> Self {
        Problem {
            structure: self.structure.clone(),
            formula: self.formula.clone(),
            domains,
        }
    }

    /// True if some opt variable has an empty domain.
    pub fn infeasible(&self) -> bool {
        (0..self.k()).any(|i| self.domains.get(i).is_empty())
    }
}
