//! Shape of the minimizer along a one-parameter family of energies.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::ShapeClass;
use crate::optimize::{
    phase_rows_csv, phase_scan, phase_strip_svg, shape_boundaries, shape_sequence, GridSpec, Objective, PhaseScanRow, Sense,
};
use crate::potentials::{Atom, DefectSpec, Potential};
use crate::sums::SumConfig;

use super::{Context, ExperimentConfig, ExperimentParams, ExperimentReport};

/// Energies indexed by the Gaussian parameter `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseFamily {
    /// `e^{−παr} − a e^{−factor·παr}`
    GaussTwoTerm { a: f64, factor: f64 },
    /// `E_f^κ` for `f = e^{−παr}` and `κ = {(k, a, ∅)}`.
    GaussDefect { k: u32, a: f64 },
    /// `θ_L(α) + |a| θ_{L+c_L}(α)`
    ShiftedTheta { a: f64 },
}

impl PhaseFamily {
    pub fn objective(&self, alpha: f64, cfg: SumConfig) -> Result<Objective> {
        Ok(match *self {
            PhaseFamily::GaussTwoTerm { a, factor } => Objective::atoms(
                vec![
                    Atom::Gauss {
                        coef: 1.0,
                        a: PI * alpha,
                    },
                    Atom::Gauss {
                        coef: -a,
                        a: factor * PI * alpha,
                    },
                ],
                cfg,
            ),
            PhaseFamily::GaussDefect { k, a } => Objective::defect(
                Potential::Gaussian { alpha },
                DefectSpec::non_shifted(&[(k, a)])?,
                cfg,
            ),
            PhaseFamily::ShiftedTheta { a } => Objective::theta_plus_centered(alpha, a, cfg),
        })
    }

    /// Minimizer over unit-shape lattices of volume `volume` for each `α`.
    pub fn scan(&self, alphas: &[f64], volume: f64, grid: &GridSpec, cfg: SumConfig, warm_start: bool) -> Result<Vec<PhaseScanRow>> {
        self.objective(1.0, cfg)?;
        let build = |a: f64| self.objective(a, cfg).expect("validated above");
        phase_scan(build, alphas, volume, grid, Sense::Min, warm_start)
    }

    pub fn label(&self) -> String {
        match self {
            PhaseFamily::GaussTwoTerm { a, factor } => format!("exp(-pi a r) - {a} exp(-{factor} pi a r)"),
            PhaseFamily::GaussDefect { k, a } => format!("Gaussian, kappa = {{({k}, {a})}}"),
            PhaseFamily::ShiftedTheta { a } => format!("theta_L + {} theta_(L+c_L)", a.abs()),
        }
    }
}

/// 64 equispaced values on `[0.1, 4]`.
pub fn default_alphas() -> Vec<f64> {
    (0..64).map(|i| 0.1 + 3.9 * i as f64 / 63.0).collect()
}

pub const EXPECTED_SEQUENCE: [ShapeClass; 4] = [
    ShapeClass::Triangular,
    ShapeClass::Rhombic,
    ShapeClass::Square,
    ShapeClass::Rectangular,
];

/// Phase scan with and without warm starts; checks the ordered shape
/// sequence against triangular, rhombic, square, rectangular.
pub fn run_phase(family: &PhaseFamily, alphas: &[f64], ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "phase",
        serde_json::to_value(ExperimentConfig {
            params: ExperimentParams::Phase {
                family: family.clone(),
                alphas: alphas.to_vec(),
            },
            context: ctx.clone(),
        })
        .unwrap_or(serde_json::Value::Null),
    );
    let warm = family.scan(alphas, 1.0, &ctx.grid, ctx.sums, true)?;
    let cold = family.scan(alphas, 1.0, &ctx.grid, ctx.sums, false)?;
    let seq = shape_sequence(&warm);
    let names: Vec<String> = seq.iter().map(|s| s.to_string()).collect();
    rep.check(
        format!("shape sequence is triangular, rhombic, square, rectangular (got {})", names.join(", ")),
        seq == EXPECTED_SEQUENCE,
        seq.len() as f64,
        EXPECTED_SEQUENCE.len() as f64,
    );
    let same_seq = shape_sequence(&cold) == seq;
    let dv = warm
        .iter()
        .zip(&cold)
        .map(|(a, b)| (a.value - b.value).abs())
        .fold(0.0, f64::max);
    rep.check(
        "warm and cold starts agree (sequence, values within 1e-6)",
        same_seq && dv <= 1e-6,
        dv,
        1e-6,
    );
    for (i, (c, from, to)) in shape_boundaries(&warm).into_iter().enumerate() {
        rep.value(format!("boundary_{}_{}_to_{}", i + 1, from, to), c);
    }
    let failed = warm.iter().filter(|r| r.error.is_some()).count();
    rep.value("failed_rows", failed as f64);
    rep.tables.insert("phase_scan".into(), phase_rows_csv(&warm));
    rep.tables.insert("phase_scan_cold".into(), phase_rows_csv(&cold));
    rep.figures.insert("phase_strip".into(), phase_strip_svg(&warm, &family.label()));
    Ok(rep.finish(start))
}
