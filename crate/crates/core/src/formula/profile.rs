use std::collections::{BTreeMap, BTreeSet};

use super::{Atom, OptFormula, VarRef};
use crate::error::{Error, Result};
use crate::structure::RelationalStructure;

/// Structural summary used to route a formula through the solvers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaProfile {
    pub k: usize,
    pub l: usize,
    pub predicate_arities: BTreeMap<String, usize>,
    /// Some atom has arity at least 3.
    pub has_hyper: bool,
    /// Atoms whose arguments are all opt variables, at least two distinct.
    pub cross_atoms: Vec<Atom>,
    /// Distinct binary predicates linking an opt variable to a count variable.
    pub r: usize,
    /// Some opt/count variable pair is linked by two or more binary predicates.
    pub has_parallel: bool,
}

/// Computes the profile, checking every atom against the structure.
pub fn classify(formula: &OptFormula, structure: &RelationalStructure) -> Result<FormulaProfile> {
    let mut arities = BTreeMap::new();
    let mut has_hyper = false;
    let mut cross_atoms = Vec::new();
    let mut linking = BTreeSet::new();
    let mut per_pair: BTreeMap<(VarRef, VarRef), BTreeSet<(&str, bool)>> = BTreeMap::new();
    let mut check = |name: &str, used: usize| -> Result<()> {
        let rel = structure
            .relation(name)
            .ok_or_else(|| Error::UnknownPredicate(name.to_string()))?;
        if rel.arity() != used {
            return Err(Error::ArityMismatch {
                name: name.to_string(),
                arity: rel.arity(),
                used,
            });
        }
        arities.insert(name.to_string(), used);
        Ok(())
    };
    for d in formula.opt_vars.iter().chain(&formula.count_vars) {
        if let Some(p) = &d.domain {
            check(p, 1)?;
        }
    }
    for a in formula.body.atoms() {
        check(&a.predicate, a.args.len())?;
        if a.args.len() >= 3 {
            has_hyper = true;
        }
        let distinct: BTreeSet<VarRef> = a.args.iter().copied().collect();
        if a.args.len() == 2 {
            let all_opt = a.args.iter().all(|v| matches!(v, VarRef::Opt(_)));
            if all_opt && distinct.len() == 2 {
                cross_atoms.push(a.clone());
            }
            if let (Some(x), Some(y)) = (
                a.args.iter().find(|v| matches!(v, VarRef::Opt(_))),
                a.args.iter().find(|v| matches!(v, VarRef::Count(_))),
            ) {
                linking.insert(a.predicate.as_str());
                let forward = matches!(a.args[0], VarRef::Opt(_));
                per_pair
                    .entry((*x, *y))
                    .or_default()
                    .insert((a.predicate.as_str(), forward));
            }
        }
    }
    let has_parallel = per_pair.values().any(|s| s.len() >= 2);
    Ok(FormulaProfile {
        k: formula.k(),
        l: formula.l(),
        predicate_arities: arities,
        has_hyper,
        cross_atoms,
        r: linking.len(),
        has_parallel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::structure::load_structure;

    fn s() -> RelationalStructure {
        load_structure("rel E 2\nrel F 2\nrel R 3\nrel P 1\nE a b").unwrap()
    }

    #[test]
    fn sparse_maxip_profile() {
        let f = parse_formula("max x1,x2 . count y . E(x1,y) & E(x2,y)").unwrap();
        let p = classify(&f, &s()).unwrap();
        assert_eq!((p.k, p.l, p.has_hyper, p.r), (2, 1, false, 1));
        assert!(p.cross_atoms.is_empty());
        assert!(!p.has_parallel);
    }

    #[test]
    fn hyper_and_cross() {
        let f = parse_formula("max x1,x2 . count y . R(x1,x2,y)").unwrap();
        assert!(classify(&f, &s()).unwrap().has_hyper);
        let f = parse_formula("max x1,x2 . count y . E(x1,x2) & F(x1,y)").unwrap();
        let p = classify(&f, &s()).unwrap();
        assert_eq!(p.cross_atoms.len(), 1);
        assert_eq!(p.cross_atoms[0].predicate, "E");
        assert_eq!(p.r, 1);
        let f = parse_formula("max x1,x2 . count y . E(x1,y) | F(x1,y) & E(y,x2)").unwrap();
        let p = classify(&f, &s()).unwrap();
        assert!(p.has_parallel);
        assert_eq!(p.r, 2);
    }

    #[test]
    fn rejects_unknown_and_mismatched() {
        let f = parse_formula("max x . count y . G(x,y)").unwrap();
        assert_eq!(classify(&f, &s()).unwrap_err(), Error::UnknownPredicate("G".into()));
        let f = parse_formula("max x . count y . P(x,y)").unwrap();
        assert!(matches!(classify(&f, &s()).unwrap_err(), Error::ArityMismatch { .. }));
        let f = parse_formula("max x:E . count y . P(x)").unwrap();
        assert!(matches!(classify(&f, &s()).unwrap_err(), Error::ArityMismatch { .. }));
    }
}
