//! Grid search plus Nelder–Mead polish over the 2D fundamental domain and
//! over orthorhombic families, shape classification of the optimizers, and
//! phase scans over a control parameter.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, Param2D, ShapeClass, SHAPE_TOL};
use crate::potentials::{Atom, DefectSpec, Potential};
use crate::sums::{self, EnergyValue, SumConfig};

mod hessian;
mod nelder_mead;
mod render;

pub use hessian::{hessian_check, ring_check, HessianReport, RingReport};
pub use render::{phase_rows_csv, phase_strip_svg};

use nelder_mead::nelder_mead;

type ObjectiveFn = dyn Fn(&Lattice) -> Result<EnergyValue> + Send + Sync;

/// A lattice functional together with a label.
#[derive(Clone)]
pub struct Objective {
    name: String,
    f: Arc<ObjectiveFn>,
    smooth: Option<Arc<ObjectiveFn>>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({})", self.name)
    }
}

impl Objective {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Lattice) -> Result<EnergyValue> + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            f: Arc::new(f),
            smooth: None,
        }
    }

    /// Attach a variant that uses the basis as given instead of reducing it.
    /// Finite differences go through it, so the objective is smooth across
    /// the edges of the fundamental domain.
    pub fn with_smooth<F>(mut self, f: F) -> Self
    where
        F: Fn(&Lattice) -> Result<EnergyValue> + Send + Sync + 'static,
    {
        self.smooth = Some(Arc::new(f));
        self
    }

    pub fn eval_smooth(&self, l: &Lattice) -> Result<EnergyValue> {
        match &self.smooth {
            Some(g) => g(l),
            None => (self.f)(l),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, l: &Lattice) -> Result<EnergyValue> {
        (self.f)(l)
    }

    /// `E_f[L]` up to a volume-dependent constant.
    pub fn energy(f: Potential, cfg: SumConfig) -> Self {
        Objective::new(format!("energy:{f:?}"), move |l| sums::energy_relative(l, &f, &cfg))
    }

    /// `E_f^κ[L]` up to a volume-dependent constant.
    pub fn defect(f: Potential, spec: DefectSpec, cfg: SumConfig) -> Self {
        let (g, gspec, gcfg) = (f.clone(), spec.clone(), cfg);
        Objective::new(format!("defect:{f:?}"), move |l| {
            sums::energy_defect_relative(l, &f, &spec, &cfg)
        })
        .with_smooth(move |l| sums::energy_defect_relative_in_basis(l, &g, &gspec, &gcfg))
    }

    /// `Σ_{p≠0} Σ_j c_j e^{−a_j|p|²}` etc. for an explicit list of atoms.
    pub fn atoms(atoms: Vec<Atom>, cfg: SumConfig) -> Self {
        Objective::new(format!("atoms:{atoms:?}"), move |l| {
            sums::energy_shifted_relative(l, None, &atoms, &cfg)
        })
    }

    /// `θ_L(α) − α^{−d/2}/V`.
    pub fn theta(alpha: f64, cfg: SumConfig) -> Self {
        Objective::new(format!("theta:{alpha}"), move |l| sums::theta_excess(l, alpha, &cfg))
    }

    pub fn theta_alternating(alpha: f64, cfg: SumConfig) -> Self {
        let g_cfg = cfg;
        Objective::new(format!("theta-alt:{alpha}"), move |l| {
            sums::theta_alternating(l, alpha, &cfg)
        })
        .with_smooth(move |l| sums::theta_alternating_in_basis(l, alpha, &g_cfg))
    }

    /// `θ_{L+c_L}(α) − α^{−d/2}/V` with `c_L` the centre of the (reduced) cell.
    pub fn theta_centered(alpha: f64, cfg: SumConfig) -> Self {
        let atoms = vec![Atom::Gauss {
            coef: 1.0,
            a: std::f64::consts::PI * alpha,
        }];
        let (g_atoms, g_cfg) = (atoms.clone(), cfg);
        Objective::new(format!("theta-center:{alpha}"), move |l| {
            let r = l.reduced_if_2d();
            sums::energy_shifted_relative(&r, Some(&r.cell_center()), &atoms, &cfg)
        })
        .with_smooth(move |l| sums::energy_shifted_relative(l, Some(&l.cell_center()), &g_atoms, &g_cfg))
    }

    /// `ζ_L(2s)`.
    pub fn zeta(two_s: f64, cfg: SumConfig) -> Self {
        Objective::new(format!("zeta:{two_s}"), move |l| sums::epstein_zeta(l, two_s, &cfg))
    }

    /// `θ_L(α) + |a|·θ_{L+c_L}(α)` up to a constant.
    pub fn theta_plus_centered(alpha: f64, a: f64, cfg: SumConfig) -> Self {
        let plain = Objective::theta(alpha, cfg);
        let shifted = Objective::theta_centered(alpha, cfg);
        let combine = move |v: Result<EnergyValue>, w: Result<EnergyValue>| {
            let (mut v, w) = (v?, w?);
            v.value += a.abs() * w.value;
            v.tail_bound += a.abs() * w.tail_bound;
            v.points_used += w.points_used;
            Ok(v)
        };
        let (p2, s2) = (plain.clone(), shifted.clone());
        Objective::new(format!("theta+center:{alpha},{a}"), move |l| {
            combine(plain.eval(l), shifted.eval(l))
        })
        .with_smooth(move |l| combine(p2.eval_smooth(l), s2.eval_smooth(l)))
    }

    /// `c·F`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = move |v: Result<EnergyValue>| {
            let mut v = v?;
            v.value *= c;
            v.tail_bound *= c.abs();
            Ok(v)
        };
        let (inner, inner2) = (self.clone(), self.clone());
        Objective::new(format!("{c}*{}", self.name), move |l| scale(inner.eval(l)))
            .with_smooth(move |l| scale(inner2.eval_smooth(l)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        }
    }
}

/// Search grid over the fundamental domain: `n_x` equispaced `x ∈ [0, ½]`
/// and, per column, `n_y` log-spaced `y ∈ [max(y_min, √(1−x²)), y_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub refine: bool,
    pub nm_tol: f64,
    pub max_iter: usize,
    /// Threads for grid evaluation; 0 uses the global pool.
    pub workers: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_x: 64,
            n_y: 64,
            y_min: 0.99 * 3f64.sqrt() / 2.0,
            y_max: 4.0,
            refine: true,
            nm_tol: 1e-8,
            max_iter: 2000,
            workers: 0,
        }
    }
}

impl GridSpec {
    pub fn with_size(n_x: usize, n_y: usize) -> Self {
        GridSpec {
            n_x,
            n_y,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 8 || self.n_y < 8 {
            return Err(invalid("grid", "n_x and n_y must be at least 8"));
        }
        if !(self.y_min > 0.0) || !(self.y_max > 1.0) || !(self.y_max > self.y_min) {
            return Err(invalid("grid", "need 0 < y_min < y_max and y_max > 1"));
        }
        if !(self.nm_tol > 0.0) {
            return Err(invalid("nm_tol", "must be positive"));
        }
        Ok(())
    }

    /// Grid points in `(x, y)`, ordered by `x` then `y`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_x * self.n_y);
        for i in 0..self.n_x {
            let x = 0.5 * i as f64 / (self.n_x - 1) as f64;
            let lo = self.y_min.max((1.0 - x * x).sqrt()).ln();
            let hi = self.y_max.ln();
            for j in 0..self.n_y {
                let y = (lo + (hi - lo) * j as f64 / (self.n_y - 1) as f64).exp();
                out.push((x, y));
            }
        }
        out
    }

    fn run_parallel<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Result<Vec<T>> {
        if self.workers == 0 {
            return Ok((0..n).into_par_iter().map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?;
        Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub best_param: Param2D,
    pub best_value: f64,
    /// Truncation bound of `best_value`.
    pub error_bound: f64,
    pub shape: ShapeClass,
    /// Value gap between the best grid point and the best other grid point.
    pub runner_up_gap: f64,
    /// Refinement converged (or was not requested) and no collapse was seen.
    pub certified: bool,
    /// The optimum runs into the `y` cap with monotone improvement.
    pub unbounded: bool,
    pub grid_best: Param2D,
    pub grid_best_value: f64,
    pub evaluations: usize,
}

fn fail(x: f64, y: f64, e: Error) -> Error {
    match e {
        Error::ObjectiveFailure { .. } => e,
        other => Error::ObjectiveFailure {
            x,
            y,
            reason: other.to_string(),
        },
    }
}

/// Objective at `(x, y)` after folding the point into the domain.
fn eval_at(obj: &Objective, x: f64, y: f64, volume: f64) -> Result<EnergyValue> {
    let l = Param2D::raw(x, y, volume).to_lattice().map_err(|e| fail(x, y, e))?;
    obj.eval(&l).map_err(|e| fail(x, y, e))
}

fn eval_smooth_at(obj: &Objective, x: f64, y: f64, volume: f64) -> Result<EnergyValue> {
    let l = Param2D::raw(x, y, volume).to_lattice().map_err(|e| fail(x, y, e))?;
    obj.eval_smooth(&l).map_err(|e| fail(x, y, e))
}

fn fold(p: &[f64], volume: f64, y_max: f64) -> Vec<f64> {
    let y = p[1].abs().max(1e-6);
    match Param2D::raw(p[0], y, volume).canonical() {
        Ok(c) => vec![c.x, c.y.min(y_max)],
        Err(_) => vec![p[0].clamp(0.0, 0.5), y.min(y_max)],
    }
}

struct GridEval {
    points: Vec<(f64, f64)>,
    values: Vec<EnergyValue>,
    best: usize,
    runner_up_gap: f64,
}

fn grid_eval(obj: &Objective, volume: f64, grid: &GridSpec, sense: Sense) -> Result<GridEval> {
    let points = grid.points();
    let results = grid.run_parallel(points.len(), |i| eval_at(obj, points[i].0, points[i].1, volume))?;
    let values = results.into_iter().collect::<Result<Vec<_>>>()?;
    let s = sense.sign();
    let mut best = 0;
    for i in 1..values.len() {
        if s * values[i].value < s * values[best].value {
            best = i;
        }
    }
    let (bx, by) = points[best];
    let mut second = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        let (x, y) = points[i];
        if i == best || ((x - bx).abs() < 1e-12 && (y - by).abs() < 1e-12) {
            continue;
        }
        second = second.min(s * v.value);
    }
    let gap = (second - s * values[best].value).max(0.0);
    Ok(GridEval {
        points,
        values,
        best,
        runner_up_gap: gap,
    })
}

/// Optimizes `objective` over unit-shape lattices of volume `volume`.
pub fn minimize2d(objective: &Objective, volume: f64, grid: &GridSpec, sense: Sense) -> Result<MinimizeResult> {
    minimize2d_from(objective, volume, grid, sense, None)
}

fn minimize2d_from(
    objective: &Objective,
    volume: f64,
    grid: &GridSpec,
    sense: Sense,
    warm: Option<Param2D>,
) -> Result<MinimizeResult> {
    grid.validate()?;
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(invalid("volume", "must be positive"));
    }
    let s = sense.sign();
    let g = grid_eval(objective, volume, grid, sense)?;
    let (gx, gy) = g.points[g.best];
    let grid_best_value = g.values[g.best].value;
    let mut evaluations = g.points.len();
    let mut best = (gx, gy);
    let mut best_ev = g.values[g.best].clone();
    let mut converged = true;

    if grid.refine {
        let mut start = (gx, gy);
        if let Some(w) = warm {
            let wv = eval_at(objective, w.x, w.y, volume)?;
            evaluations += 1;
            if s * wv.value <= s * grid_best_value {
                start = (w.x, w.y);
            }
        }
        let dx = 0.5 / (grid.n_x - 1) as f64;
        let dy = start.1 * ((grid.y_max / grid.y_min).ln() / (grid.n_y - 1) as f64);
        let out = nelder_mead(
            |p| Ok(s * eval_at(objective, p[0], p[1], volume)?.value),
            |p| fold(p, volume, grid.y_max),
            &[start.0, start.1],
            &[dx, dy],
            grid.nm_tol,
            grid.max_iter,
        )?;
        evaluations += out.evaluations;
        converged = out.converged;
        if s * out.value <= s * best_ev.value {
            best = (out.x[0], out.x[1]);
            best_ev = eval_at(objective, best.0, best.1, volume)?;
            evaluations += 1;
        }
    }

    let unbounded = best.1 >= grid.y_max * (1.0 - 1e-9) && {
        let col: Vec<f64> = g
            .points
            .iter()
            .zip(&g.values)
            .filter(|((x, _), _)| (x - gx).abs() < 1e-12)
            .map(|(_, v)| s * v.value)
            .collect();
        let tail = &col[col.len().saturating_sub(4)..];
        tail.windows(2).all(|w| w[1] < w[0])
    };

    let p = Param2D::raw(best.0, best.1, volume);
    Ok(MinimizeResult {
        best_param: p,
        best_value: best_ev.value,
        error_bound: best_ev.tail_bound,
        shape: p.shape(SHAPE_TOL),
        runner_up_gap: g.runner_up_gap,
        certified: converged && !unbounded,
        unbounded,
        grid_best: Param2D::raw(gx, gy, volume),
        grid_best_value,
        evaluations,
    })
}

/// Value of `objective` at a given shape and volume.
pub fn evaluate_param(objective: &Objective, p: &Param2D) -> Result<EnergyValue> {
    eval_at(objective, p.x, p.y, p.volume)
}

/// Result of an orthorhombic search: `diag(t₁,…,t_d)` with `Π tᵢ = V` and
/// `t₁ ≤ … ≤ t_d`, parametrized by `ln(t_{i+1}/t_i) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoResult {
    pub dim: usize,
    pub log_ratios: Vec<f64>,
    pub sides: Vec<f64>,
    pub best_value: f64,
    pub error_bound: f64,
    pub is_cubic: bool,
    pub runner_up_gap: f64,
    pub certified: bool,
}

/// Orthorhombic lattice with consecutive log side ratios `r` and volume `V`.
pub fn orthorhombic_lattice(ratios: &[f64], volume: f64) -> Result<Lattice> {
    let d = ratios.len() + 1;
    let mut logs = vec![0.0; d];
    for i in 1..d {
        logs[i] = logs[i - 1] + ratios[i - 1];
    }
    let mean = logs.iter().sum::<f64>() / d as f64;
    let base = volume.powf(1.0 / d as f64);
    let mut cols = vec![vec![0.0; d]; d];
    for i in 0..d {
        cols[i][i] = base * (logs[i] - mean).exp();
    }
    Lattice::from_columns(&cols)
}

/// Optimizes over orthorhombic lattices of volume `volume` in `d ∈ {2, 3}`;
/// `n` grid points per log ratio in `[0, ln(max_ratio)]`.
pub fn minimize_orthorhombic(
    objective: &Objective,
    d: usize,
    volume: f64,
    n: usize,
    max_ratio: f64,
    sense: Sense,
) -> Result<OrthoResult> {
    if !(d == 2 || d == 3) {
        return Err(invalid("d", "orthorhombic search supports d = 2 or 3"));
    }
    if n < 8 || !(max_ratio > 1.0) {
        return Err(invalid("grid", "need at least 8 points and max_ratio > 1"));
    }
    let s = sense.sign();
    let hi = max_ratio.ln();
    let m = d - 1;
    let axis: Vec<f64> = (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect();
    let pts: Vec<Vec<f64>> = if m == 1 {
        axis.iter().map(|&a| vec![a]).collect()
    } else {
        axis.iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect()
    };
    let eval = |r: &[f64]| -> Result<EnergyValue> {
        let l = orthorhombic_lattice(r, volume)?;
        objective.eval(&l).map_err(|e| fail(r[0], r.get(1).copied().unwrap_or(0.0), e))
    };
    let vals = pts
        .par_iter()
        .map(|r| eval(r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..vals.len() {
        if s * vals[i].value < s * vals[best].value {
            best = i;
        }
    }
    let second = vals
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, v)| s * v.value)
        .fold(f64::INFINITY, f64::min);
    let gap = (second - s * vals[best].value).max(0.0);
    let step = hi / (n - 1) as f64;
    let out = nelder_mead(
        |r| Ok(s * eval(r)?.value),
        |r| r.iter().map(|v| v.abs().min(hi)).collect(),
        &pts[best],
        &vec![step; m],
        1e-9,
        4000,
    )?;
    let (ratios, ev) = if s * out.value <= s * vals[best].value {
        let ev = eval(&out.x)?;
        (out.x, ev)
    } else {
        (pts[best].clone(), vals[best].clone())
    };
    let l = orthorhombic_lattice(&ratios, volume)?;
    let sides = (0..d).map(|i| l.basis()[(i, i)]).collect();
    Ok(OrthoResult {
        dim: d,
        is_cubic: ratios.iter().all(|r| r.abs() <= SHAPE_TOL),
        log_ratios: ratios,
        sides,
        best_value: ev.value,
        error_bound: ev.tail_bound,
        runner_up_gap: gap,
        certified: out.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanRow {
    pub control: f64,
    pub best_param: Param2D,
    pub shape: ShapeClass,
    pub value: f64,
    pub certified: bool,
    pub error: Option<String>,
}

/// One optimization per control value. With `warm_start`, refinement starts
/// from the previous optimum whenever it is at least as good as the grid
/// optimum. Failed rows are recorded and the scan continues.
pub fn phase_scan<F>(
    family: F,
    controls: &[f64],
    volume: f64,
    grid: &GridSpec,
    sense: Sense,
    warm_start: bool,
) -> Result<Vec<PhaseScanRow>>
where
    F: Fn(f64) -> Objective,
{
    if controls.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("controls", "must be sorted"));
    }
    let mut rows = Vec::with_capacity(controls.len());
    let mut prev: Option<Param2D> = None;
    for &c in controls {
        let obj = family(c);
        match minimize2d_from(&obj, volume, grid, sense, if warm_start { prev } else { None }) {
            Ok(r) => {
                prev = Some(r.best_param);
                rows.push(PhaseScanRow {
                    control: c,
                    best_param: r.best_param,
                    shape: r.shape,
                    value: r.best_value,
                    certified: r.certified,
                    error: None,
                });
            }
            Err(e) => rows.push(PhaseScanRow {
                control: c,
                best_param: Param2D::raw(f64::NAN, f64::NAN, volume),
                shape: ShapeClass::Generic,
                value: f64::NAN,
                certified: false,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(rows)
}

/// Shapes of successive rows with consecutive repeats merged; failed rows
/// are skipped.
pub fn shape_sequence(rows: &[PhaseScanRow]) -> Vec<ShapeClass> {
    let mut out: Vec<ShapeClass> = Vec::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        if out.last() != Some(&r.shape) {
            out.push(r.shape);
        }
    }
    out
}

/// Controls at which the shape changes, as midpoints between rows.
pub fn shape_boundaries(rows: &[PhaseScanRow]) -> Vec<(f64, ShapeClass, ShapeClass)> {
    let ok: Vec<&PhaseScanRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    ok.windows(2)
        .filter(|w| w[0].shape != w[1].shape)
        .map(|w| (0.5 * (w[0].control + w[1].control), w[0].shape, w[1].shape))
        .collect()
}
