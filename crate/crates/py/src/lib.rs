//! Python bindings: structures, formulas, the solvers and the reduction chain.

use std::collections::BTreeMap;
use std::sync::Arc;

use optsp::baseline;
use optsp::fastcount::{self, TripartiteGraph};
use optsp::gen::{generate as gen_instance, GenProfile};
use optsp::hybrid::{self as hyb, SolveConfig};
use optsp::ip::{self as ipm, approx_wrapper, BruteForceIp, IpSolver};
use optsp::reduce;
use optsp::{load_structure, parse_formula, OptKind, Problem, RelationalStructure, Solution};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: optsp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind_of(s: &str) -> PyResult<OptKind> {
    match s {
        "max" => Ok(OptKind::Max),
        "min" => Ok(OptKind::Min),
        _ => Err(PyValueError::new_err(format!("kind must be 'max' or 'min', got {s:?}"))),
    }
}

/// `exact` or `approx:<c>`, as on the command line.
fn ip_setup(ip: &str, eps: f64, audit: bool) -> PyResult<(Box<dyn IpSolver>, SolveConfig)> {
    let (solver, mut cfg): (Box<dyn IpSolver>, SolveConfig) = if ip == "exact" {
        (Box::new(BruteForceIp::default()), SolveConfig::default())
    } else if let Some(c) = ip.strip_prefix("approx:") {
        let c: f64 = c
            .parse()
            .map_err(|_| PyValueError::new_err(format!("invalid ratio in {ip:?}")))?;
        (
            Box::new(approx_wrapper(BruteForceIp::default(), c).map_err(err)?),
            SolveConfig::approx(c, eps),
        )
    } else {
        return Err(PyValueError::new_err(format!("ip must be 'exact' or 'approx:<c>', got {ip:?}")));
    };
    cfg.audit = audit;
    cfg.validate().map_err(err)?;
    Ok((solver, cfg))
}

#[pyclass(frozen, skip_from_py_object, name = "Structure")]
#[derive(Clone)]
struct PyStructure {
    inner: Arc<RelationalStructure>,
}

#[pymethods]
impl PyStructure {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyStructure {
            inner: Arc::new(load_structure(text).map_err(err)?),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn relations(&self) -> BTreeMap<String, usize> {
        self.inner.relations().map(|r| (r.name().to_string(), r.arity())).collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Structure(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Formula")]
#[derive(Clone)]
struct PyFormula {
    inner: optsp::OptFormula,
}

#[pymethods]
impl PyFormula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyFormula {
            inner: parse_formula(text).map_err(err)?,
        })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.inner.to_string())
    }
}

fn problem(s: &PyStructure, f: &PyFormula) -> PyResult<Problem> {
    Problem::new(s.inner.clone(), f.inner.clone()).map_err(err)
}

type PySolution = Option<(u64, Vec<String>)>;

fn labelled(s: &RelationalStructure, sol: Option<Solution>) -> PySolution {
    sol.map(|x| (x.value, x.witness.iter().map(|&o| s.label(o).to_string()).collect()))
}

/// Optimum and lexicographically smallest optimal tuple, or None.
#[pyfunction]
fn baseline_opt(structure: &PyStructure, formula: &PyFormula) -> PyResult<PySolution> {
    let p = problem(structure, formula)?;
    Ok(labelled(&structure.inner, baseline::optimum(&p).map_err(err)?))
}

/// Value of every opt tuple, in lexicographic order.
#[pyfunction]
fn baseline_values(structure: &PyStructure, formula: &PyFormula) -> PyResult<Vec<(Vec<String>, u64)>> {
    let p = problem(structure, formula)?;
    let table = baseline::values(&p).map_err(err)?;
    let s = &structure.inner;
    Ok(table
        .iter()
        .map(|(t, v)| (t.iter().map(|&o| s.label(o).to_string()).collect(), v))
        .collect())
}

#[pyfunction]
fn multi_counting_opt(structure: &PyStructure, formula: &PyFormula) -> PyResult<PySolution> {
    let p = problem(structure, formula)?;
    Ok(labelled(&structure.inner, fastcount::multi_counting(&p).map_err(err)?))
}

/// Runs the reduction chain. Returns a dict with `value`, `witness`,
/// `route` and the trace counters.
#[pyfunction]
#[pyo3(signature = (structure, formula, ip = "exact", eps = 0.1, audit = false))]
fn reduce_and_solve(
    structure: &PyStructure,
    formula: &PyFormula,
    ip: &str,
    eps: f64,
    audit: bool,
) -> PyResult<BTreeMap<String, Py<PyAny>>> {
    let p = problem(structure, formula)?;
    let (solver, cfg) = ip_setup(ip, eps, audit)?;
    let (sol, trace) = reduce::reduce_problem(&p, solver.as_ref(), &cfg).map_err(err)?;
    Python::attach(|py| {
        let mut out: BTreeMap<String, Py<PyAny>> = BTreeMap::new();
        let sol = labelled(&structure.inner, sol);
        out.insert("value".into(), sol.as_ref().map(|s| s.0).into_pyobject(py)?.into_any().unbind());
        out.insert("witness".into(), sol.map(|s| s.1).into_pyobject(py)?.into_any().unbind());
        out.insert("route".into(), trace.route.as_str().into_pyobject(py)?.into_any().unbind());
        let stages: Vec<(&str, usize, usize, u128)> =
            trace.stages.iter().map(|s| (s.stage, s.m, s.n, s.micros)).collect();
        out.insert("stages".into(), stages.into_pyobject(py)?.into_any().unbind());
        if let Some(l) = &trace.lift {
            let nums: BTreeMap<&str, u64> = BTreeMap::from([
                ("cross_sides", l.cross_sides as u64),
                ("threshold", l.threshold as u64),
                ("heavy_vertices", l.heavy_vertices as u64),
                ("combos", l.combos as u64),
                ("top_k", l.top_k as u64),
                ("fp_bound", l.fp_bound),
                ("hybrid_calls", l.hybrid_calls as u64),
                ("universe", l.max_universe as u64),
                ("reduced_universe", l.max_reduced_universe as u64),
                ("t", l.max_t as u64),
                ("delta", l.max_delta),
                ("e_bound", l.max_e_bound),
            ]);
            out.insert("lift".into(), nums.into_pyobject(py)?.into_any().unbind());
            out.insert(
                "false_positives".into(),
                l.false_positives.into_pyobject(py)?.into_any().unbind(),
            );
            out.insert(
                "inner_mismatches".into(),
                l.inner_mismatches.into_pyobject(py)?.into_any().unbind(),
            );
        }
        Ok(out)
    })
}

/// Intermediate instances of the chain as `(name, text)` pairs.
#[pyfunction]
fn reduction_artifacts(structure: &PyStructure, formula: &PyFormula) -> PyResult<Vec<(String, String)>> {
    let p = problem(structure, formula)?;
    let arts = reduce::reduction_artifacts(&p, &SolveConfig::default()).map_err(err)?;
    Ok(arts.into_iter().map(|a| (a.name, a.text)).collect())
}

/// Seeded random instance.
#[pyfunction]
#[pyo3(signature = (seed, k = 2, l = 1, n = 12, density = 0.3, binary = 2, unary = 1, ternary = 0, max_atoms = 4, max_records = 150))]
#[allow(clippy::too_many_arguments)]
fn generate(
    seed: u64,
    k: usize,
    l: usize,
    n: usize,
    density: f64,
    binary: usize,
    unary: usize,
    ternary: usize,
    max_atoms: usize,
    max_records: usize,
) -> PyResult<(PyStructure, PyFormula)> {
    let profile = GenProfile {
        k,
        l,
        n,
        density,
        binary,
        unary,
        ternary,
        max_atoms,
        max_records,
        ..GenProfile::default()
    };
    let g = gen_instance(seed, &profile).map_err(err)?;
    Ok((
        PyStructure {
            inner: Arc::new(g.structure),
        },
        PyFormula { inner: g.formula },
    ))
}

#[pyclass(frozen, skip_from_py_object, name = "IpInstance")]
#[derive(Clone)]
struct PyIpInstance {
    inner: ipm::IpInstance,
}

#[pymethods]
impl PyIpInstance {
    /// `families[i][j]` lists the one-coordinates of vector `j` of family `i`.
    #[new]
    fn new(d: usize, families: Vec<Vec<Vec<u32>>>) -> PyResult<Self> {
        Ok(PyIpInstance {
            inner: ipm::IpInstance::new(d, families).map_err(err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyIpInstance {
            inner: ipm::IpInstance::parse(text).map_err(err)?,
        })
    }

    /// Dense form as nested lists of booleans.
    #[staticmethod]
    fn from_dense(d: usize, families: Vec<Vec<Vec<bool>>>) -> PyResult<Self> {
        Ok(PyIpInstance {
            inner: ipm::sparsify(&ipm::DenseIp { d, families }).map_err(err)?,
        })
    }

    fn to_dense(&self) -> PyResult<Vec<Vec<Vec<bool>>>> {
        Ok(ipm::densify(&self.inner, ipm::DEFAULT_DENSE_BUDGET).map_err(err)?.families)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn families(&self) -> Vec<Vec<Vec<u32>>> {
        self.inner.families().to_vec()
    }

    fn inner_product(&self, idx: Vec<usize>) -> PyResult<u64> {
        if idx.len() != self.inner.k() || idx.iter().zip(self.inner.families()).any(|(&j, f)| j >= f.len()) {
            return Err(PyValueError::new_err("index tuple does not match the families"));
        }
        Ok(self.inner.inner_product(&idx))
    }

    /// `(value, witness)` from the brute-force solver, degraded by `ratio`
    /// if given.
    #[pyo3(signature = (kind = "max", ratio = None))]
    fn solve(&self, kind: &str, ratio: Option<f64>) -> PyResult<Option<(u64, Option<Vec<usize>>)>> {
        let kind = kind_of(kind)?;
        let sol = match ratio {
            None => BruteForceIp::default().solve(&self.inner, kind),
            Some(c) => approx_wrapper(BruteForceIp::default(), c).map_err(err)?.solve(&self.inner, kind),
        }
        .map_err(err)?;
        Ok(sol.map(|s| (s.value, s.witness)))
    }
}

#[pyclass(frozen, skip_from_py_object, name = "HybridInstance")]
#[derive(Clone)]
struct PyHybridInstance {
    inner: hyb::HybridInstance,
}

#[pymethods]
impl PyHybridInstance {
    /// `types[u]` has bit `i` set when element `u` should lie in the set
    /// chosen from family `i`.
    #[new]
    fn new(kind: &str, types: Vec<u32>, families: Vec<Vec<Vec<u32>>>) -> PyResult<Self> {
        Ok(PyHybridInstance {
            inner: hyb::HybridInstance::new(kind_of(kind)?, types, families).map_err(err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyHybridInstance {
            inner: hyb::HybridInstance::parse(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn value(&self, idx: Vec<usize>) -> PyResult<u64> {
        if idx.len() != self.inner.k()
            || idx.iter().zip(self.inner.families()).any(|(&j, f)| j >= f.len())
        {
            return Err(PyValueError::new_err("index tuple does not match the families"));
        }
        Ok(self.inner.total(&idx))
    }

    /// Exhaustive optimum.
    fn baseline(&self) -> Option<(u64, Option<Vec<usize>>)> {
        hyb::hybrid_baseline(&self.inner).map(|s| (s.value, s.witness))
    }

    /// Optimum through universe reduction and the IP solver.
    #[pyo3(signature = (ip = "exact", eps = 0.1))]
    fn solve(&self, ip: &str, eps: f64) -> PyResult<Option<(u64, Option<Vec<usize>>)>> {
        let (solver, cfg) = ip_setup(ip, eps, false)?;
        let (sol, _) = hyb::solve_hybrid(&self.inner, solver.as_ref(), &cfg).map_err(err)?;
        Ok(sol.map(|s| (s.value, s.witness)))
    }

    /// Reduced instance and `(t, delta, e_bound)`.
    fn universe_reduce(&self, t: usize) -> PyResult<(PyHybridInstance, usize, u64, u64)> {
        if t == 0 {
            return Err(PyValueError::new_err("t must be positive"));
        }
        let (red, info) = hyb::universe_reduce(&self.inner, t);
        Ok((PyHybridInstance { inner: red }, info.t, info.delta, info.e_bound))
    }
}

/// `psi(x) = #{(y,z) : phi(E(x,y), E(x,z), E(y,z))}` per x; bit
/// `a | b << 1 | c << 2` of `phi` is its value on `(a, b, c)`.
#[pyfunction]
fn triangle_counts(
    nx: usize,
    ny: usize,
    nz: usize,
    e_xy: Vec<(u32, u32)>,
    e_xz: Vec<(u32, u32)>,
    e_yz: Vec<(u32, u32)>,
    phi: u8,
) -> PyResult<Vec<u64>> {
    let ok = |es: &[(u32, u32)], a: usize, b: usize| es.iter().all(|&(u, v)| (u as usize) < a && (v as usize) < b);
    if !(ok(&e_xy, nx, ny) && ok(&e_xz, nx, nz) && ok(&e_yz, ny, nz)) {
        return Err(PyValueError::new_err("edge endpoint out of range"));
    }
    let g = TripartiteGraph::new(nx, ny, nz, e_xy, e_xz, e_yz);
    Ok(fastcount::triangle_counts(&g, phi))
}

#[pymodule(name = "optsp")]
fn optsp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_class::<PyFormula>()?;
    m.add_class::<PyIpInstance>()?;
    m.add_class::<PyHybridInstance>()?;
    m.add_function(wrap_pyfunction!(baseline_opt, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_values, m)?)?;
    m.add_function(wrap_pyfunction!(multi_counting_opt, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_and_solve, m)?)?;
    m.add_function(wrap_pyfunction!(reduction_artifacts, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_counts, m)?)?;
    Ok(())
}
