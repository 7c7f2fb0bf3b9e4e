//! Seeded random instances for tests, the `gen` and `verify` commands.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formula::{Atom, Expr, OptFormula, OptKind, VarDecl, VarRef};
use crate::structure::{RelationalStructure, StructureBuilder};

pub const MAX_GEN_N: usize = 4096;
pub const MAX_GEN_K: usize = 6;
pub const MAX_GEN_L: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct GenProfile {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    /// Each relation draws `2n` candidate records, each kept with this
    /// probability.
    pub density: f64,
    /// Hard cap on the number of records.
    pub max_records: usize,
    pub binary: usize,
    pub unary: usize,
    pub ternary: usize,
    pub max_atoms: usize,
    /// `None` picks max or min at random.
    pub kind: Option<OptKind>,
    /// Allow atoms like `E(x1,x1)` and reversed argument orders.
    pub odd_atoms: bool,
    /// Allow `x:P` domain annotations.
    pub domains: bool,
}

impl Default for GenProfile {
    fn default() -> Self {
        GenProfile {
            k: 2,
            l: 1,
            n: 12,
            density: 0.3,
            max_records: 150,
            binary: 2,
            unary: 1,
            ternary: 0,
            max_atoms: 4,
            kind: None,
            odd_atoms: true,
            domains: false,
        }
    }
}

impl GenProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 || self.k > MAX_GEN_K {
            return bad(format!("k must be in 1..={MAX_GEN_K}"));
        }
        if self.l == 0 || self.l > MAX_GEN_L {
            return bad(format!("l must be in 1..={MAX_GEN_L}"));
        }
        if self.n == 0 || self.n > MAX_GEN_N {
            return bad(format!("n must be in 1..={MAX_GEN_N}"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must lie in [0, 1]".into());
        }
        if self.binary + self.unary + self.ternary == 0 {
            return bad("need at least one predicate".into());
        }
        if self.binary > 26 || self.unary > 26 || self.ternary > 26 {
            return bad("at most 26 predicates of each arity".into());
        }
        if self.max_atoms == 0 {
            return bad("max_atoms must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub seed: u64,
    pub structure: RelationalStructure,
    pub formula: OptFormula,
}

fn names(prefix: &[&str], count: usize, fallback: char) -> Vec<String> {
    (0..count)
        .map(|i| match prefix.get(i) {
            Some(s) => s.to_string(),
            None => format!("{fallback}{i}"),
        })
        .collect()
}

pub fn generate(seed: u64, profile: &GenProfile) -> Result<GeneratedInstance> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bin = names(&["E", "F", "G"], profile.binary, 'B');
    let un = names(&["P", "Q"], profile.unary, 'U');
    let ter = names(&["T"], profile.ternary, 'T');

    let mut b = StructureBuilder::new();
    let objs: Vec<_> = (0..profile.n).map(|i| b.object(&format!("o{i}"))).collect();
    for (list, arity) in [(&bin, 2), (&un, 1), (&ter, 3)] {
        for name in list.iter() {
            b.declare(name, arity)?;
        }
    }
    // random records, interleaving relations so the cap hits them evenly
    let mut budget = profile.max_records;
    let rels: Vec<(&String, usize)> = bin
        .iter()
        .map(|s| (s, 2))
        .chain(un.iter().map(|s| (s, 1)))
        .chain(ter.iter().map(|s| (s, 3)))
        .collect();
    // skewed choice: a few hub objects take a large share of the records
    let hubs = profile.n.div_ceil(8);
    for _ in 0..2 * profile.n {
        for &(name, arity) in &rels {
            if budget > 0 && rng.random_bool(profile.density) {
                let t: Vec<_> = (0..arity)
                    .map(|_| {
                        if rng.random_bool(0.25) {
                            objs[rng.random_range(0..hubs)]
                        } else {
                            *objs.choose(&mut rng).unwrap()
                        }
                    })
                    .collect();
                b.insert(name, &t)?;
                budget -= 1;
            }
        }
    }
    let structure = b.build();

    let opt: Vec<VarRef> = (0..profile.k).map(VarRef::Opt).collect();
    let cnt: Vec<VarRef> = (0..profile.l).map(VarRef::Count).collect();
    let natoms = rng.random_range(1..=profile.max_atoms);
    let mut atoms = Vec::new();
    for _ in 0..natoms {
        atoms.push(random_atom(&mut rng, profile, &bin, &un, &ter, &opt, &cnt));
    }
    let body = random_expr(&mut rng, atoms);
    let kind = profile
        .kind
        .unwrap_or(if rng.random_bool(0.5) { OptKind::Max } else { OptKind::Min });
    let decl = |name: String, rng: &mut ChaCha8Rng| {
        if profile.domains && !un.is_empty() && rng.random_bool(0.2) {
            VarDecl::with_domain(&name, un.choose(rng).unwrap())
        } else {
            VarDecl::new(&name)
        }
    };
    let opt_vars = (0..profile.k).map(|i| decl(format!("x{}", i + 1), &mut rng)).collect();
    let count_vars = (0..profile.l)
        .map(|i| decl(if profile.l == 1 { "y".into() } else { format!("y{}", i + 1) }, &mut rng))
        .collect();
    let formula = OptFormula {
        kind,
        opt_vars,
        count_vars,
        body,
    };
    Ok(GeneratedInstance {
        seed,
        structure,
        formula,
    })
}

fn random_atom(
    rng: &mut ChaCha8Rng,
    profile: &GenProfile,
    bin: &[String],
    un: &[String],
    ter: &[String],
    opt: &[VarRef],
    cnt: &[VarRef],
) -> Expr {
    let all: Vec<VarRef> = opt.iter().chain(cnt).copied().collect();
    let roll = rng.random_range(0..10);
    if roll < 2 && !un.is_empty() || bin.is_empty() && ter.is_empty() {
        let v = *all.choose(rng).unwrap();
        return Expr::Atom(Atom {
            predicate: un.choose(rng).unwrap().clone(),
            args: vec![v],
        });
    }
    if roll == 2 && !ter.is_empty() || bin.is_empty() {
        let name = ter.choose(rng).unwrap().clone();
        let args = (0..3).map(|_| *all.choose(rng).unwrap()).collect();
        return Expr::Atom(Atom { predicate: name, args });
    }
    let pi = rng.random_range(0..bin.len());
    let odd = profile.odd_atoms && rng.random_bool(0.15);
    let args = if odd && rng.random_bool(0.5) {
        let v = *all.choose(rng).unwrap();
        vec![v, v]
    } else if rng.random_bool(0.25) || cnt.len() > 1 && rng.random_bool(0.3) {
        // between two opt or two count variables
        let pool = if rng.random_bool(0.5) && opt.len() >= 2 { opt } else { &all };
        let a = *pool.choose(rng).unwrap();
        let mut c = *pool.choose(rng).unwrap();
        while c == a && pool.len() > 1 {
            c = *pool.choose(rng).unwrap();
        }
        if matches!((a, c), (VarRef::Count(_), VarRef::Opt(_))) && !(odd && pi == 0) {
            vec![c, a]
        } else {
            vec![a, c]
        }
    } else {
        let x = *opt.choose(rng).unwrap();
        let y = *cnt.choose(rng).unwrap();
        // reversed orders only for the first predicate, which keeps the
        // number of derived relations small
        if odd && pi == 0 {
            vec![y, x]
        } else {
            vec![x, y]
        }
    };
    Expr::Atom(Atom {
        predicate: bin[pi].clone(),
        args,
    })
}

fn random_expr(rng: &mut ChaCha8Rng, mut atoms: Vec<Expr>) -> Expr {
    let e = if atoms.len() == 1 {
        atoms.pop().unwrap()
    } else {
        let cut = rng.random_range(1..atoms.len());
        let right = atoms.split_off(cut);
        let (l, r) = (random_expr(rng, atoms), random_expr(rng, right));
        if rng.random_bool(0.5) {
            Expr::and(vec![l, r])
        } else {
            Expr::or(vec![l, r])
        }
    };
    if rng.random_bool(0.3) {
        Expr::not(e)
    } else {
        e
    }
}

impl GeneratedInstance {
    /// Structure file text; the formula goes in its own file.
    pub fn structure_text(&self) -> String {
        format!("# seed {}\n{}", self.seed, self.structure.to_text())
    }

    pub fn formula_text(&self) -> String {
        format!("{}\n", self.formula)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{classify, parse_formula};
    use crate::structure::load_structure;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenProfile::default();
        let a = generate(7, &p).unwrap();
        let b = generate(7, &p).unwrap();
        assert_eq!(a.structure_text(), b.structure_text());
        assert_eq!(a.formula_text(), b.formula_text());
    }

    #[test]
    fn zero_density_gives_empty_relations() {
        let p = GenProfile {
            density: 0.0,
            ..Default::default()
        };
        assert_eq!(generate(3, &p).unwrap().structure.m(), 0);
    }

    #[test]
    fn output_parses_and_classifies() {
        let p = GenProfile {
            k: 3,
            ternary: 1,
            domains: true,
            ..Default::default()
        };
        for seed in 0..200 {
            let g = generate(seed, &p).unwrap();
            let s = load_structure(&g.structure_text()).unwrap();
            let f = parse_formula(&g.formula_text()).unwrap();
            assert_eq!(f, g.formula);
            classify(&f, &s).unwrap();
            assert!(s.m() <= p.max_records);
        }
    }

    #[test]
    fn bad_profile_is_rejected() {
        let p = GenProfile {
            k: 0,
            ..Default::default()
        };
        assert!(matches!(generate(0, &p), Err(Error::Config(_))));
    }
}
