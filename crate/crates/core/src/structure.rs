//! Sparse relational structures: a global object set plus named relations
//! stored as sorted, duplicate-free record lists.
//!
//! The text format is line based:
//!
//! ```text
//! # comment
//! obj a b c          # optional, declares objects (fixes their indices)
//! rel E 2            # declares relation E of arity 2
//! E a b              # adds the record (a, b) to E
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Dense object index, assigned in first-appearance order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u32);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type Tuple = Box<[ObjectId]>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    arity: usize,
    records: Vec<Tuple>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Records in lexicographic order of object indices.
    pub fn records(&self) -> &[Tuple] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, tuple: &[ObjectId]) -> bool {
        self.records
            .binary_search_by(|r| r.as_ref().cmp(tuple))
            .is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationalStructure {
    labels: Vec<String>,
    index: HashMap<String, ObjectId>,
    relations: BTreeMap<String, Relation>,
    degrees: Vec<usize>,
    m: usize,
    duplicates: usize,
}

impl RelationalStructure {
    /// Number of objects.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Total number of records over all relations.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of duplicate records dropped while building.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn objects(&self) -> impl ExactSizeIterator<Item = ObjectId> + '_ {
        (0..self.labels.len() as u32).map(ObjectId)
    }

    pub fn label(&self, id: ObjectId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn object(&self, label: &str) -> Option<ObjectId> {
        self.index.get(label).copied()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Relations in name order.
    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// Number of records containing `x`, counting each record once.
    pub fn degree(&self, x: ObjectId) -> Result<usize> {
        self.degrees
            .get(x.index())
            .copied()
            .ok_or_else(|| Error::UnknownObject(format!("#{}", x.0)))
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Canonical text form: object line, declarations by name, then records
    /// grouped by relation in tuple order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for chunk in self.labels.chunks(16) {
            out.push_str("obj");
            for l in chunk {
                out.push(' ');
                out.push_str(l);
            }
            out.push('\n');
        }
        for r in self.relations.values() {
            let _ = writeln!(out, "rel {} {}", r.name, r.arity);
        }
        for r in self.relations.values() {
            for t in &r.records {
                out.push_str(&r.name);
                for o in t.iter() {
                    out.push(' ');
                    out.push_str(self.label(*o));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Keeps only objects admitted by `assignment` and the records over them.
    ///
    /// An object is dropped when it lies in the domain of at least one
    /// requirement but satisfies none of the requirements whose domain
    /// contains it. Surviving objects keep their relative order.
    pub fn restrict_by_unary(&self, assignment: &[UnaryRequirement]) -> Result<Self> {
        let n = self.n();
        let mut covered = vec![false; n];
        let mut admitted = vec![false; n];
        for req in assignment {
            let mut preds = Vec::with_capacity(req.require.len());
            for (name, want) in &req.require {
                let rel = self
                    .relation(name)
                    .ok_or_else(|| Error::UnknownPredicate(name.clone()))?;
                if rel.arity() != 1 {
                    return Err(Error::ArityMismatch {
                        name: name.clone(),
                        arity: rel.arity(),
                        used: 1,
                    });
                }
                preds.push((rel, *want));
            }
            let members: Vec<ObjectId> = match &req.domain {
                None => self.objects().collect(),
                Some(labels) => labels.iter().filter_map(|l| self.object(l)).collect(),
            };
            for o in members {
                covered[o.index()] = true;
                if preds.iter().all(|(rel, want)| rel.contains(&[o]) == *want) {
                    admitted[o.index()] = true;
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|i| !covered[i] || admitted[i]).collect();
        let mut b = StructureBuilder::new();
        for o in self.objects() {
            if keep[o.index()] {
                b.object(self.label(o));
            }
        }
        for r in self.relations.values() {
            b.declare(&r.name, r.arity)?;
            for t in &r.records {
                if t.iter().all(|o| keep[o.index()]) {
                    let mapped: Vec<ObjectId> = t.iter().map(|o| b.object(self.label(*o))).collect();
                    b.insert(&r.name, &mapped)?;
                }
            }
        }
        Ok(b.build())
    }
}

/// One opt-variable's restriction: objects in `domain` (all objects when
/// `None`) must satisfy every `(predicate, truth)` pair in `require`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnaryRequirement {
    pub domain: Option<Vec<String>>,
    pub require: Vec<(String, bool)>,
}

/// Incremental construction of a [`RelationalStructure`].
#[derive(Clone, Debug, Default)]
pub struct StructureBuilder {
    labels: Vec<String>,
    index: HashMap<String, ObjectId>,
    relations: BTreeMap<String, (usize, Vec<Tuple>)>,
}

impl StructureBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, creating the object if needed.
    pub fn object(&mut self, label: &str) -> ObjectId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = ObjectId(self.labels.len() as u32);
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn declare(&mut self, name: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::Schema {
                line: 0,
                msg: format!("relation `{name}` must have positive arity"),
            });
        }
        match self.relations.get(name) {
            Some((a, _)) if *a != arity => Err(Error::Schema {
                line: 0,
                msg: format!("relation `{name}` redeclared with arity {arity} (was {a})"),
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(name.to_string(), (arity, Vec::new()));
                Ok(())
            }
        }
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn insert(&mut self, name: &str, tuple: &[ObjectId]) -> Result<()> {
        let (arity, recs) = self.relations.get_mut(name).ok_or_else(|| Error::Schema {
            line: 0,
            msg: format!("relation `{name}` used before declaration"),
        })?;
        if *arity != tuple.len() {
            return Err(Error::ArityMismatch {
                name: name.to_string(),
                arity: *arity,
                used: tuple.len(),
            });
        }
        debug_assert!(tuple.iter().all(|o| o.index() < self.labels.len()));
        recs.push(tuple.into());
        Ok(())
    }

    pub fn build(self) -> RelationalStructure {
        let n = self.labels.len();
        let mut degrees = vec![0usize; n];
        let mut m = 0;
        let mut duplicates = 0;
        let mut relations = BTreeMap::new();
        let mut seen: Vec<ObjectId> = Vec::new();
        for (name, (arity, mut records)) in self.relations {
            let before = records.len();
            records.sort_unstable();
            records.dedup();
            duplicates += before - records.len();
            m += records.len();
            for t in &records {
                seen.clear();
                seen.extend_from_slice(t);
                seen.sort_unstable();
                seen.dedup();
                for o in &seen {
                    degrees[o.index()] += 1;
                }
            }
            relations.insert(
                name.clone(),
                Relation {
                    name,
                    arity,
                    records,
                },
            );
        }
        RelationalStructure {
            labels: self.labels,
            index: self.index,
            relations,
            degrees,
            m,
            duplicates,
        }
    }
}

/// Parses the structure text format.
pub fn load_structure(text: &str) -> Result<RelationalStructure> {
    let mut b = StructureBuilder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "rel" => {
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        msg: "expected `rel <name> <arity>`".into(),
                    });
                }
                let arity: usize = toks[2].parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid arity `{}`", toks[2]),
                })?;
                if arity == 0 {
                    return Err(Error::Parse {
                        line,
                        msg: "arity must be positive".into(),
                    });
                }
                b.declare(toks[1], arity).map_err(|e| at_line(e, line))?;
            }
            "obj" => {
                for t in &toks[1..] {
                    b.object(t);
                }
            }
            name => {
                let Some((arity, _)) = b.relations.get(name) else {
                    return Err(Error::Schema {
                        line,
                        msg: format!("relation `{name}` used before declaration"),
                    });
                };
                if toks.len() - 1 != *arity {
                    return Err(Error::Schema {
                        line,
                        msg: format!(
                            "relation `{name}` has arity {arity} but record has {} fields",
                            toks.len() - 1
                        ),
                    });
                }
                let tuple: Vec<ObjectId> = toks[1..].iter().map(|t| b.object(t)).collect();
                b.insert(name, &tuple).map_err(|e| at_line(e, line))?;
            }
        }
    }
    Ok(b.build())
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Schema { msg, .. } => Error::Schema { line, msg },
        Error::ArityMismatch { name, arity, used } => Error::Schema {
            line,
            msg: format!("relation `{name}` has arity {arity} but record has {used} fields"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_counts_objects_and_records() {
        let s = load_structure("rel E 2\nE a y1\nE b y1").unwrap();
        assert_eq!((s.n(), s.m()), (3, 2));
        assert_eq!(s.label(ObjectId(1)), "y1");
    }

    #[test]
    fn empty_relation_is_kept() {
        let s = load_structure("rel E 2").unwrap();
        assert_eq!(s.m(), 0);
        assert!(s.relation("E").unwrap().is_empty());
    }

    #[test]
    fn duplicates_are_dropped_and_counted() {
        let s = load_structure("rel E 2\nE a b\nE a b\nE b a").unwrap();
        assert_eq!(s.m(), 2);
        assert_eq!(s.duplicates(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            load_structure("rel E 2\n\nE a").unwrap_err(),
            Error::Schema {
                line: 3,
                msg: "relation `E` has arity 2 but record has 1 fields".into()
            }
        );
        assert!(matches!(
            load_structure("rel E two").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            load_structure("E a b").unwrap_err(),
            Error::Schema { line: 1, .. }
        ));
    }

    #[test]
    fn degree_counts_records_once() {
        let s = load_structure("rel E 2\nE a b\nE a c\nE d d\nobj iso").unwrap();
        let id = |l| s.object(l).unwrap();
        assert_eq!(s.degree(id("a")).unwrap(), 2);
        assert_eq!(s.degree(id("b")).unwrap(), 1);
        assert_eq!(s.degree(id("d")).unwrap(), 1);
        assert_eq!(s.degree(id("iso")).unwrap(), 0);
        assert!(s.degree(ObjectId(99)).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = load_structure("rel F 1\nrel E 2\nE b a\nF c\nE a a\nobj z").unwrap();
        let t = s.to_text();
        let s2 = load_structure(&t).unwrap();
        assert_eq!(s, s2);
        assert_eq!(t, s2.to_text());
    }

    #[test]
    fn restrict_keeps_matching_opt_objects() {
        let s = load_structure("rel P 1\nrel E 2\nP a\nE a y\nE b y").unwrap();
        let req = UnaryRequirement {
            domain: Some(vec!["a".into(), "b".into()]),
            require: vec![("P".into(), true)],
        };
        let r = s.restrict_by_unary(std::slice::from_ref(&req)).unwrap();
        assert!(r.object("b").is_none());
        let e = r.relation("E").unwrap();
        assert_eq!(e.len(), 1);
        assert!(e.contains(&[r.object("a").unwrap(), r.object("y").unwrap()]));
        assert_eq!(r.restrict_by_unary(&[req]).unwrap(), r);
    }
}
