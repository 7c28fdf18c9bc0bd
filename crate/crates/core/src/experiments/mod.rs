//! Named, parameterized experiments. Each run produces a report of checks
//! plus CSV tables and SVG figures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{Param2D, ShapeClass};
use crate::optimize::{hessian_check, minimize2d, ring_check, GridSpec, MinimizeResult, Objective, Sense};
use crate::potentials::{DefectSpec, Potential};
use crate::sums::SumConfig;

mod applications;
mod kernels;
pub mod phase;
mod theorems;

pub use applications::{run_ionic, run_kagome};
pub use kernels::{run_jacobi_suite, run_laplace_suite};
pub use phase::{run_phase, PhaseFamily};
pub use theorems::{run_thm0, run_thm02, run_thm2ip, run_thm3lj};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub description: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: serde_json::Value,
    pub checks: Vec<Check>,
    /// Named scalar results.
    pub values: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub runtime_seconds: f64,
    pub passed: bool,
    #[serde(skip)]
    pub tables: BTreeMap<String, String>,
    #[serde(skip)]
    pub figures: BTreeMap<String, String>,
}

impl ExperimentReport {
    fn new(name: &str, parameters: serde_json::Value) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters,
            checks: Vec::new(),
            values: BTreeMap::new(),
            artifacts: Vec::new(),
            runtime_seconds: 0.0,
            passed: true,
            tables: BTreeMap::new(),
            figures: BTreeMap::new(),
        }
    }

    fn check(&mut self, description: impl Into<String>, passed: bool, measured: f64, tolerance: f64) {
        self.checks.push(Check {
            description: description.into(),
            passed,
            measured,
            tolerance,
        });
    }

    fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    fn finish(mut self, start: Instant) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self.runtime_seconds = start.elapsed().as_secs_f64();
        self.artifacts = std::iter::once("report.json".to_string())
            .chain(self.tables.keys().map(|k| format!("{k}.csv")))
            .chain(self.figures.keys().map(|k| format!("{k}.svg")))
            .collect();
        self
    }

    /// Checks and values, without timing; equal for reruns with the same seed.
    pub fn fingerprint(&self) -> serde_json::Value {
        serde_json::json!({
            "checks": self.checks,
            "values": self.values,
            "tables": self.tables,
        })
    }

    /// Writes `report.json`, the tables and the figures into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let path = dir.join("report.json");
        std::fs::write(&path, crate::json::to_string_17(self)?)?;
        out.push(path);
        for (k, v) in &self.tables {
            let p = dir.join(format!("{k}.csv"));
            std::fs::write(&p, v)?;
            out.push(p);
        }
        for (k, v) in &self.figures {
            let p = dir.join(format!("{k}.svg"));
            std::fs::write(&p, v)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Settings shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Context {
    pub seed: u64,
    pub grid: GridSpec,
    pub sums: SumConfig,
}

impl Default for Context {
    fn default() -> Self {
        Context {
            seed: 20240601,
            grid: GridSpec::default(),
            sums: SumConfig::default(),
        }
    }
}

impl Context {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Uniform `(x, y)` in the truncated domain `x ∈ [0, ½]`, `y ∈ [√(1−x²), 4]`.
pub fn random_params(seed: u64, n: usize, volume: f64) -> Vec<Param2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_params(&mut rng, n, volume)
}

fn sample_params(rng: &mut ChaCha8Rng, n: usize, volume: f64) -> Vec<Param2D> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = rng.gen_range(0.0..=0.5);
        let y: f64 = rng.gen_range(0.866..=4.0);
        if x * x + y * y >= 1.0 {
            out.push(Param2D::raw(x, y, volume));
        }
    }
    out
}

/// Every experiment with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentParams {
    Thm0 {
        k: u32,
        a: f64,
        a_negative: f64,
        alphas: Vec<f64>,
    },
    Thm02 {
        k: u32,
        shift: Vec<i64>,
        a: f64,
        n_random: usize,
    },
    Thm2ip {
        spec: DefectSpec,
        s: f64,
        n_random: usize,
    },
    Thm3lj {
        potential: Potential,
        spec: DefectSpec,
        /// Volumes as multiples of `V_κ` (Case 1 and 2) or absolute (Case 3).
        volumes: Vec<f64>,
    },
    Kagome {
        radius: f64,
    },
    Ionic {
        alphas: Vec<f64>,
        two_s: f64,
    },
    Jacobi {
        n_random: usize,
        y_list: Vec<f64>,
    },
    Laplace {
        n_random: usize,
    },
    Phase {
        family: PhaseFamily,
        alphas: Vec<f64>,
    },
}

impl ExperimentParams {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentParams::Thm0 { .. } => "thm0",
            ExperimentParams::Thm02 { .. } => "thm02",
            ExperimentParams::Thm2ip { .. } => "thm2ip",
            ExperimentParams::Thm3lj { .. } => "thm3lj",
            ExperimentParams::Kagome { .. } => "kagome",
            ExperimentParams::Ionic { .. } => "ionic",
            ExperimentParams::Jacobi { .. } => "jacobi",
            ExperimentParams::Laplace { .. } => "laplace",
            ExperimentParams::Phase { .. } => "phase",
        }
    }

    /// Default parameters of a named experiment.
    pub fn default_for(name: &str) -> Option<Self> {
        let lj = Potential::LennardJones {
            c1: 1.0,
            c2: 1.0,
            x1: 3.0,
            x2: 6.0,
        };
        Some(match name {
            "thm0" => ExperimentParams::Thm0 {
                k: 2,
                a: 0.1,
                a_negative: -0.5,
                alphas: vec![0.02, 0.05, 0.1],
            },
            "thm02" => ExperimentParams::Thm02 {
                k: 2,
                shift: vec![1, 1],
                a: 1.0,
                n_random: 50,
            },
            "thm2ip" => ExperimentParams::Thm2ip {
                spec: DefectSpec::non_shifted(&[(2, 1.0), (3, 1.0)]).ok()?,
                s: 2.0,
                n_random: 50,
            },
            "thm3lj" => ExperimentParams::Thm3lj {
                potential: lj,
                spec: DefectSpec::non_shifted(&[(2, 1.0)]).ok()?,
                volumes: vec![0.5, 1.0, 8.0],
            },
            "kagome" => ExperimentParams::Kagome { radius: 30.0 },
            "ionic" => ExperimentParams::Ionic {
                alphas: vec![0.5, 1.0, 2.0],
                two_s: 4.0,
            },
            "jacobi" => ExperimentParams::Jacobi {
                n_random: 50,
                y_list: vec![0.2, 0.3, 1.0, 2.0, 5.0],
            },
            "laplace" => ExperimentParams::Laplace { n_random: 20 },
            "phase" => ExperimentParams::Phase {
                family: PhaseFamily::GaussTwoTerm { a: 0.1, factor: 2.0 },
                alphas: phase::default_alphas(),
            },
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 9] = [
        "thm0", "thm02", "thm2ip", "thm3lj", "kagome", "ionic", "jacobi", "laplace", "phase",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ExperimentParams,
    #[serde(default)]
    pub context: Context,
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = &cfg.context;
    match &cfg.params {
        ExperimentParams::Thm0 { k, a, a_negative, alphas } => run_thm0(*k, *a, *a_negative, alphas, ctx),
        ExperimentParams::Thm02 { k, shift, a, n_random } => run_thm02(*k, shift, *a, *n_random, ctx),
        ExperimentParams::Thm2ip { spec, s, n_random } => run_thm2ip(spec, *s, *n_random, ctx),
        ExperimentParams::Thm3lj {
            potential,
            spec,
            volumes,
        } => run_thm3lj(potential, spec, volumes, ctx),
        ExperimentParams::Kagome { radius } => run_kagome(*radius, ctx),
        ExperimentParams::Ionic { alphas, two_s } => run_ionic(alphas, *two_s, ctx),
        ExperimentParams::Jacobi { n_random, y_list } => run_jacobi_suite(*n_random, y_list, ctx),
        ExperimentParams::Laplace { n_random } => run_laplace_suite(*n_random, ctx),
        ExperimentParams::Phase { family, alphas } => run_phase(family, alphas, ctx),
    }
}

/// Runs `minimize2d` and records whether the optimum has the expected
/// shape, is separated from the runner-up by more than ten times the
/// truncation bounds and, with `hessian`, is a strict local optimum.
fn check_optimum(
    rep: &mut ExperimentReport,
    label: &str,
    obj: &Objective,
    volume: f64,
    ctx: &Context,
    sense: Sense,
    expected: ShapeClass,
    hessian: bool,
) -> Result<MinimizeResult> {
    let r = minimize2d(obj, volume, &ctx.grid, sense)?;
    let target = match expected {
        ShapeClass::Square => Param2D::square(volume),
        _ => Param2D::triangular(volume),
    };
    let dist = ((r.best_param.x - target.x).powi(2) + (r.best_param.y - target.y).powi(2)).sqrt();
    rep.check(
        format!("{label}: optimum is {expected} (got {})", r.shape),
        r.shape == expected,
        dist,
        1e-4,
    );
    let bound = 10.0 * 2.0 * r.error_bound;
    rep.check(
        format!("{label}: runner-up gap exceeds 10x error bounds"),
        r.runner_up_gap > bound,
        r.runner_up_gap,
        bound,
    );
    if hessian {
        let signed = match sense {
            Sense::Min => obj.clone(),
            Sense::Max => obj.scaled(-1.0),
        };
        match hessian_check(&signed, &target, 1e-3) {
            Ok(h) if h.grad[0].hypot(h.grad[1]) > 100.0 * h.grad_noise => {
                let ring = ring_check(&signed, &target, 1e-3, 24)?;
                rep.check(
                    format!("{label}: kink at the optimum, value grows in every direction"),
                    ring.min_increase > 10.0 * ring.error_bound,
                    ring.min_increase,
                    10.0 * ring.error_bound,
                );
            }
            Ok(h) => rep.check(
                format!("{label}: Hessian at the optimum is positive definite"),
                h.positive_definite,
                h.eigenvalues[0],
                h.hess_noise,
            ),
            Err(e) => rep.check(format!("{label}: Hessian failed: {e}"), false, f64::NAN, 0.0),
        }
    }
    Ok(r)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
