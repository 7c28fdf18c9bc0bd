use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dl::experiments::{self, Context, ExperimentConfig, ExperimentParams, PhaseFamily};
use dl::grammar::{parse_range, LatticeSpec, ObjectiveSpec};
use dl::optimize::{minimize2d, GridSpec, Sense};
use dl::potentials::{lj_regime, v_kappa};
use dl::lattice::SHAPE_TOL;
use dl::{classify_shape, json, sums, DefectSpec, Error, Lattice, Param2D, Potential, SumConfig};

fn err(e: Error) -> PyErr {
    match e {
        Error::CapExceeded { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn sum_config(tol: Option<f64>, max_points: Option<usize>) -> SumConfig {
    let mut cfg = SumConfig::default();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(m) = max_points {
        cfg.max_points = m;
    }
    cfg
}

/// A lattice in dimension 1, 2 or 3, stored by its basis columns.
#[pyclass(name = "Lattice", module = "defect_lattice", frozen)]
#[derive(Clone)]
struct PyLattice {
    inner: Lattice,
}

#[pymethods]
impl PyLattice {
    /// `A2`, `Z2`, `basis:1,0;0.5,0.866` or `param:x=0.5,y=0.866`.
    #[new]
    #[pyo3(signature = (spec, volume = None))]
    fn new(spec: &str, volume: Option<f64>) -> PyResult<Self> {
        let inner = spec.parse::<LatticeSpec>().and_then(|s| s.build(volume)).map_err(err)?;
        Ok(PyLattice { inner })
    }

    #[staticmethod]
    fn from_columns(columns: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyLattice {
            inner: Lattice::from_columns(&columns).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (x, y, volume = 1.0))]
    fn from_param(x: f64, y: f64, volume: f64) -> PyResult<Self> {
        let inner = Param2D::new(x, y, volume).and_then(|p| p.to_lattice()).map_err(err)?;
        Ok(PyLattice { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    #[getter]
    fn columns(&self) -> Vec<Vec<f64>> {
        self.inner.columns()
    }

    fn dual(&self) -> Self {
        PyLattice {
            inner: self.inner.dual(),
        }
    }

    fn with_volume(&self, volume: f64) -> PyResult<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(PyValueError::new_err("volume must be positive"));
        }
        Ok(PyLattice {
            inner: self.inner.with_volume(volume),
        })
    }

    /// `(x, y)` of the 2D lattice in the fundamental domain.
    fn param(&self) -> PyResult<(f64, f64)> {
        let p = Param2D::from_lattice(&self.inner).map_err(err)?;
        Ok((p.x, p.y))
    }

    #[pyo3(signature = (tol = SHAPE_TOL))]
    fn shape(&self, tol: f64) -> PyResult<String> {
        Ok(classify_shape(&self.inner, tol).map_err(err)?.to_string())
    }

    fn __repr__(&self) -> String {
        format!("Lattice(columns={:?})", self.inner.columns())
    }
}

/// Interaction potential, written as `ip:s=2`, `lj:c1=1,c2=1,x1=3,x2=6`,
/// `gauss:alpha=0.5` or `yuk:sigma=1,s=2`.
#[pyclass(name = "Potential", module = "defect_lattice", frozen)]
#[derive(Clone)]
struct PyPotential {
    inner: Potential,
}

#[pymethods]
impl PyPotential {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyPotential {
            inner: spec.parse().map_err(err)?,
        })
    }

    /// `f(r)` at squared distance `r`.
    fn __call__(&self, r: f64) -> f64 {
        self.inner.eval(r)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?})", self.inner.to_string())
    }
}

/// Periodic vacancies and substitutional defects.
#[pyclass(name = "DefectSpec", module = "defect_lattice", frozen)]
#[derive(Clone)]
struct PyDefectSpec {
    inner: DefectSpec,
}

#[pymethods]
impl PyDefectSpec {
    /// From `(k, a)` pairs; each removes `a` times the charge on `kL`.
    #[new]
    #[pyo3(signature = (pairs = Vec::new()))]
    fn new(pairs: Vec<(u32, f64)>) -> PyResult<Self> {
        Ok(PyDefectSpec {
            inner: DefectSpec::non_shifted(&pairs).map_err(err)?,
        })
    }

    #[staticmethod]
    fn shifted(k: u32, a: f64, shifts: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(PyDefectSpec {
            inner: DefectSpec::shifted(k, a, shifts).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDefectSpec {
            inner: DefectSpec::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// `Σ_k a_k k^{−s}`.
    fn dirichlet_l(&self, s: f64) -> f64 {
        self.inner.dirichlet_l(s)
    }

    fn __repr__(&self) -> String {
        format!("DefectSpec.from_json({:?})", self.to_json().unwrap_or_default())
    }
}

/// `E_f[L] = Σ_{p≠0} f(|p|²)`, or `E_f^κ[L]` when `defects` is given.
#[pyfunction]
#[pyo3(signature = (lattice, potential, defects = None, tol = None, max_points = None))]
fn energy(
    py: Python<'_>,
    lattice: &PyLattice,
    potential: &PyPotential,
    defects: Option<&PyDefectSpec>,
    tol: Option<f64>,
    max_points: Option<usize>,
) -> PyResult<PyObject> {
    let cfg = sum_config(tol, max_points);
    let v = py
        .allow_threads(|| match defects {
            Some(d) => sums::energy_defect(&lattice.inner, &potential.inner, &d.inner, &cfg),
            None => sums::energy(&lattice.inner, &potential.inner, &cfg),
        })
        .map_err(err)?;
    to_py(py, &v)
}

/// `θ_L(α)`, or the centred / alternating variants.
#[pyfunction]
#[pyo3(signature = (lattice, alpha, center = false, alternating = false, tol = None, max_points = None))]
fn theta(
    py: Python<'_>,
    lattice: &PyLattice,
    alpha: f64,
    center: bool,
    alternating: bool,
    tol: Option<f64>,
    max_points: Option<usize>,
) -> PyResult<PyObject> {
    let cfg = sum_config(tol, max_points);
    let l = &lattice.inner;
    let v = match (center, alternating) {
        (true, true) => return Err(PyValueError::new_err("center and alternating are exclusive")),
        (true, false) => sums::theta_centered(l, alpha, &cfg),
        (false, true) => sums::theta_alternating(l, alpha, &cfg),
        (false, false) => sums::theta(l, alpha, &cfg),
    }
    .map_err(err)?;
    to_py(py, &v)
}

/// `ζ_L(2s) = Σ_{p≠0} |p|^{−2s}`.
#[pyfunction]
#[pyo3(signature = (lattice, s, tol = None, max_points = None))]
fn zeta(py: Python<'_>, lattice: &PyLattice, s: f64, tol: Option<f64>, max_points: Option<usize>) -> PyResult<PyObject> {
    let v = sums::epstein_zeta(&lattice.inner, 2.0 * s, &sum_config(tol, max_points)).map_err(err)?;
    to_py(py, &v)
}

fn objective_spec(objective: &Bound<'_, PyAny>, defects: Option<&PyDefectSpec>) -> PyResult<ObjectiveSpec> {
    if let Ok(p) = objective.downcast::<PyPotential>() {
        return Ok(ObjectiveSpec::Energy {
            potential: p.get().inner.clone(),
            defects: defects.map(|d| d.inner.clone()),
        });
    }
    let s: String = objective.extract()?;
    match (s.parse::<ObjectiveSpec>().map_err(err)?, defects) {
        (ObjectiveSpec::Energy { potential, .. }, d) => Ok(ObjectiveSpec::Energy {
            potential,
            defects: d.map(|d| d.inner.clone()),
        }),
        (_, Some(_)) => Err(PyValueError::new_err("defects only apply to potential energies")),
        (spec, None) => Ok(spec),
    }
}

/// Optimizes over 2D lattices of fixed volume. `objective` is a Potential
/// or a string such as `theta:alpha=1` or `zeta:s=2`.
#[pyfunction]
#[pyo3(signature = (objective, volume = 1.0, defects = None, maximize = false, grid = 64, workers = 0, tol = None))]
#[allow(clippy::too_many_arguments)]
fn minimize(
    py: Python<'_>,
    objective: &Bound<'_, PyAny>,
    volume: f64,
    defects: Option<&PyDefectSpec>,
    maximize: bool,
    grid: usize,
    workers: usize,
    tol: Option<f64>,
) -> PyResult<PyObject> {
    let spec = objective_spec(objective, defects)?;
    let mut g = GridSpec::with_size(grid, grid);
    g.workers = workers;
    g.validate().map_err(err)?;
    let obj = spec.build(sum_config(tol, None));
    let sense = if maximize { Sense::Max } else { Sense::Min };
    let r = py.allow_threads(|| minimize2d(&obj, volume, &g, sense)).map_err(err)?;
    to_py(py, &r)
}

/// Minimizer shape for each `α`; `family` as in `gauss-defect:k=2,a=0.1`,
/// `alphas` a list or `start:stop:count`.
#[pyfunction]
#[pyo3(signature = (family, alphas, volume = 1.0, grid = 64, warm_start = true, workers = 0))]
fn scan(
    py: Python<'_>,
    family: &str,
    alphas: &Bound<'_, PyAny>,
    volume: f64,
    grid: usize,
    warm_start: bool,
    workers: usize,
) -> PyResult<PyObject> {
    let family: PhaseFamily = family.parse().map_err(err)?;
    let alphas: Vec<f64> = match alphas.extract::<String>() {
        Ok(s) => parse_range(&s).map_err(err)?,
        Err(_) => alphas.extract()?,
    };
    let mut g = GridSpec::with_size(grid, grid);
    g.workers = workers;
    g.validate().map_err(err)?;
    let rows = py
        .allow_threads(|| family.scan(&alphas, volume, &g, SumConfig::default(), warm_start))
        .map_err(err)?;
    to_py(py, &rows)
}

/// Runs a named experiment and returns its report. `params` is a JSON
/// string with the experiment parameters; defaults are used otherwise.
#[pyfunction]
#[pyo3(signature = (name, params = None, seed = None, workers = 0))]
fn verify(py: Python<'_>, name: &str, params: Option<&str>, seed: Option<u64>, workers: usize) -> PyResult<PyObject> {
    let params: ExperimentParams = match params {
        Some(text) => {
            let mut v: serde_json::Value =
                serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            if let Some(o) = v.as_object_mut() {
                o.insert("experiment".into(), name.into());
            }
            serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?
        }
        None => ExperimentParams::default_for(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown experiment `{name}`")))?,
    };
    let mut context = Context::default();
    context.grid.workers = workers;
    if let Some(s) = seed {
        context.seed = s;
    }
    let report = py
        .allow_threads(|| experiments::run(&ExperimentConfig { params, context }))
        .map_err(err)?;
    let text = json::to_string_17(&report).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Charged points `(x, y[, z], charge)` within `radius` of the origin.
#[pyfunction]
#[pyo3(signature = (lattice, defects = None, radius = 5.0, max_points = None))]
fn patch(
    lattice: &PyLattice,
    defects: Option<&PyDefectSpec>,
    radius: f64,
    max_points: Option<usize>,
) -> PyResult<Vec<(Vec<f64>, f64)>> {
    let spec = defects.map(|d| d.inner.clone()).unwrap_or_else(DefectSpec::empty);
    let cap = sum_config(None, max_points).max_points;
    let ps = sums::materialize(&lattice.inner, &spec, radius, cap).map_err(err)?;
    Ok(ps.points.iter().map(|p| (p.position.clone(), p.charge)).collect())
}

/// SVG drawing of the charged patch of a 2D lattice.
#[pyfunction]
#[pyo3(signature = (lattice, defects = None, radius = 5.0))]
fn render(lattice: &PyLattice, defects: Option<&PyDefectSpec>, radius: f64) -> PyResult<String> {
    let spec = defects.map(|d| d.inner.clone()).unwrap_or_else(DefectSpec::empty);
    let ps = sums::materialize(&lattice.inner, &spec, radius, SumConfig::default().max_points).map_err(err)?;
    ps.to_svg().map_err(err)
}

/// Regime of a Lennard-Jones potential under `defects`.
#[pyfunction]
fn lennard_jones_regime(potential: &PyPotential, defects: &PyDefectSpec) -> PyResult<String> {
    Ok(format!("{:?}", lj_regime(&potential.inner, &defects.inner).map_err(err)?))
}

/// Volume threshold below which the triangular lattice is optimal (Case 1).
#[pyfunction]
#[pyo3(signature = (potential, defects, dim = 2))]
fn volume_threshold(potential: &PyPotential, defects: &PyDefectSpec, dim: usize) -> PyResult<f64> {
    v_kappa(&potential.inner, &defects.inner, dim).map_err(err)
}

#[pymodule]
fn defect_lattice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyDefectSpec>()?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(patch, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(lennard_jones_regime, m)?)?;
    m.add_function(wrap_pyfunction!(volume_threshold, m)?)?;
    m.add("EXPERIMENTS", ExperimentParams::NAMES.to_vec())?;
    Ok(())
}
