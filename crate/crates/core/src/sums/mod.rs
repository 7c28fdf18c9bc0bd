//! Lattice sums with certified truncation bounds: energies, theta functions,
//! Epstein zeta functions and defect energies.

mod ewald;
mod pointset;
pub(crate) mod radial;
mod theta;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::potentials::{Atom, DefectSpec, Potential};

pub use pointset::{energy_pointset, materialize, pointset_tail_bound, ChargedPoint, ChargedPointSet};

use radial::{Majorant, RadialSum, Weight};
use theta::{gauss_sum, GaussKind, Side};

/// How Epstein zeta sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaMode {
    /// Truncated sum plus continuum tail; algebraic convergence.
    Direct,
    /// Incomplete-gamma split; exponential convergence.
    #[default]
    MellinAccelerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SumConfig {
    /// Target absolute truncation error.
    pub tol: f64,
    pub max_points: usize,
    pub zeta_mode: ZetaMode,
}

impl Default for SumConfig {
    fn default() -> Self {
        SumConfig {
            tol: 1e-10,
            max_points: crate::enumerate::DEFAULT_MAX_POINTS,
            zeta_mode: ZetaMode::MellinAccelerated,
        }
    }
}

impl SumConfig {
    pub fn with_tol(tol: f64) -> Self {
        SumConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("tol", "must be positive"));
        }
        if self.max_points < 1000 {
            return Err(invalid("max_points", "must be at least 1000"));
        }
        Ok(())
    }
}

/// A lattice sum together with a certified bound on its truncation error.
/// `θ_{L+c_L}(α)` with `c_L` the centre of the cell of the reduced basis
/// (2D) or of the given basis.
pub fn theta_centered(l: &Lattice, alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    let r = l.reduced_if_2d();
    theta_shifted(&r, &r.cell_center(), alpha, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub tail_bound: f64,
    pub cutoff_radius: f64,
    pub points_used: usize,
}

impl EnergyValue {
    fn zero() -> Self {
        EnergyValue {
            value: 0.0,
            tail_bound: 0.0,
            cutoff_radius: 0.0,
            points_used: 0,
        }
    }

    /// `self + c·other`
    fn add_scaled(&mut self, c: f64, other: &EnergyValue) {
        self.value += c * other.value;
        self.tail_bound += c.abs() * other.tail_bound;
        self.cutoff_radius = self.cutoff_radius.max(other.cutoff_radius);
        self.points_used += other.points_used;
    }
}

fn check_dim(l: &Lattice, v: &[f64]) -> Result<()> {
    if v.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Sum of a list of atoms over `L + c`, origin excluded. With `relative`,
/// Gaussian atoms drop their shape-independent leading dual term
/// `coef·(π/a)^{d/2}/V` and the excluded-origin correction.
fn atoms_sum(
    l: &Lattice,
    center: Option<&[f64]>,
    atoms: &[Atom],
    cfg: &SumConfig,
    relative: bool,
) -> Result<EnergyValue> {
    cfg.validate()?;
    if let Some(c) = center {
        check_dim(l, c)?;
    }
    let origin_in = match center {
        None => true,
        Some(c) => ewald::is_lattice_point(l, c),
    };
    let n = atoms.len().max(1) as f64;
    let mut total = EnergyValue::zero();
    for atom in atoms {
        let coef = atom.coef();
        if coef == 0.0 {
            continue;
        }
        let tol = cfg.tol / n / coef.abs();
        match *atom {
            Atom::Gauss { a, .. } => {
                let kind = GaussKind::Plain(center.map(|c| c.to_vec()));
                let s = gauss_sum(l, &kind, a, tol, cfg.max_points, Side::Auto, relative)?;
                if relative {
                    total.add_scaled(coef, &s.excess);
                } else {
                    let mut v = s.total();
                    if origin_in {
                        v.value -= 1.0;
                    }
                    total.add_scaled(coef, &v);
                }
            }
            Atom::Power { x, .. } => {
                let v = match (center, cfg.zeta_mode) {
                    (None, ZetaMode::Direct) => ewald::power_sum_direct(l, x, tol, cfg.max_points)?,
                    _ => ewald::power_sum_split(l, center, x, tol, cfg.max_points)?,
                };
                total.add_scaled(coef, &v);
            }
            Atom::Yukawa { sigma, s, .. } => {
                let v = RadialSum {
                    lattice: l,
                    center,
                    weight: Weight::One,
                    exclude_origin: true,
                    tol,
                    max_points: cfg.max_points,
                }
                .run(
                    |n2| (-sigma * n2).exp() * n2.powf(-s),
                    |_| {
                        vec![Majorant {
                            coef: 1.0,
                            b: sigma,
                            p: 2.0 * s,
                        }]
                    },
                )?;
                total.add_scaled(coef, &v);
            }
        }
    }
    Ok(total)
}

/// `E_f[L] = Σ_{p∈L∖{0}} f(|p|²)`.
pub fn energy(l: &Lattice, f: &Potential, cfg: &SumConfig) -> Result<EnergyValue> {
    f.validate(l.dim())?;
    atoms_sum(l, None, &f.atoms(), cfg, false)
}

/// `Σ_{p∈L, p+c≠0} f(|p + c|²)` for the potential given as atoms.
pub fn energy_shifted(l: &Lattice, center: &[f64], atoms: &[Atom], cfg: &SumConfig) -> Result<EnergyValue> {
    atoms_sum(l, Some(center), atoms, cfg, false)
}

/// `E_f[L]` up to a term depending only on `f`, `d` and the volume: every
/// Gaussian component `e^{−a r}` contributes `θ_L − (π/a)^{d/2}/V` instead of
/// `θ_L − 1`. Differences between lattices of equal volume are exact and stay
/// resolvable when they are far below the absolute size of `E_f`.
pub fn energy_relative(l: &Lattice, f: &Potential, cfg: &SumConfig) -> Result<EnergyValue> {
    f.validate(l.dim())?;
    atoms_sum(l, None, &f.atoms(), cfg, true)
}

/// [`energy_relative`] for atoms over `L + c`.
pub fn energy_shifted_relative(
    l: &Lattice,
    center: Option<&[f64]>,
    atoms: &[Atom],
    cfg: &SumConfig,
) -> Result<EnergyValue> {
    atoms_sum(l, center, atoms, cfg, true)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha", "must be positive"))
    }
}

/// `θ_L(α) = Σ_{p∈L} e^{−πα|p|²}`, origin included.
pub fn theta(l: &Lattice, alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let a = std::f64::consts::PI * alpha;
    Ok(gauss_sum(l, &GaussKind::Plain(None), a, cfg.tol, cfg.max_points, Side::Auto, false)?.total())
}

/// `θ_L(α)` summed on the given side, without the automatic switch.
pub fn theta_direct(l: &Lattice, alpha: f64, dual_side: bool, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let side = if dual_side { Side::Dual } else { Side::Direct };
    let a = std::f64::consts::PI * alpha;
    Ok(gauss_sum(l, &GaussKind::Plain(None), a, cfg.tol, cfg.max_points, side, false)?.total())
}

/// `θ_L(α) − α^{−d/2}/V`, accurate relative to its own size.
pub fn theta_excess(l: &Lattice, alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let a = std::f64::consts::PI * alpha;
    Ok(gauss_sum(l, &GaussKind::Plain(None), a, cfg.tol, cfg.max_points, Side::Auto, true)?.excess)
}

/// `θ_{L+c}(α) = Σ_{p∈L} e^{−πα|p+c|²}`; a point `p + c = 0` contributes 1.
pub fn theta_shifted(l: &Lattice, center: &[f64], alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    check_dim(l, center)?;
    let a = std::f64::consts::PI * alpha;
    let kind = GaussKind::Plain(Some(center.to_vec()));
    Ok(gauss_sum(l, &kind, a, cfg.tol, cfg.max_points, Side::Auto, false)?.total())
}

/// `θ^±_L(α) = Σ (−1)^{m₁+…+m_d} e^{−πα|p|²}` with `p = Σ m_i u_i`. In 2D
/// the basis is Lagrange–Gauss reduced first; otherwise it is used as given.
pub fn theta_alternating(l: &Lattice, alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    theta_alternating_in_basis(&l.reduced_if_2d(), alpha, cfg)
}

/// [`theta_alternating`] with the signs taken in the basis of `l` as given.
pub fn theta_alternating_in_basis(l: &Lattice, alpha: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let a = std::f64::consts::PI * alpha;
    Ok(gauss_sum(l, &GaussKind::Alternating, a, cfg.tol, cfg.max_points, Side::Auto, false)?.excess)
}

/// `ζ_L(2s) = Σ_{p≠0} |p|^{−2s}`, taking `two_s = 2s > d`.
pub fn epstein_zeta(l: &Lattice, two_s: f64, cfg: &SumConfig) -> Result<EnergyValue> {
    cfg.validate()?;
    if !(two_s > l.dim() as f64) || !two_s.is_finite() {
        return Err(invalid("two_s", format!("must exceed d = {}", l.dim())));
    }
    let x = two_s / 2.0;
    match cfg.zeta_mode {
        ZetaMode::Direct => ewald::power_sum_direct(l, x, cfg.tol, cfg.max_points),
        ZetaMode::MellinAccelerated => ewald::power_sum_split(l, None, x, cfg.tol, cfg.max_points),
    }
}

/// `E_f^κ[L] = E_f[L] − Σ_k Σ_i a_k E_f[p_{i,k} + kL]`, every sum excluding
/// the origin. Shifts are integer coordinates in the reduced basis (2D) or
/// the given basis; an entry without shifts removes `kL` itself.
pub fn energy_defect(l: &Lattice, f: &Potential, spec: &DefectSpec, cfg: &SumConfig) -> Result<EnergyValue> {
    defect_sum(l, f, spec, cfg, false, true)
}

/// [`energy_defect`] up to a volume-dependent constant (see [`energy_relative`]).
pub fn energy_defect_relative(
    l: &Lattice,
    f: &Potential,
    spec: &DefectSpec,
    cfg: &SumConfig,
) -> Result<EnergyValue> {
    defect_sum(l, f, spec, cfg, true, true)
}

/// Like [`energy_defect_relative`] but the shifts are taken in the basis of
/// `l` as given, without reducing it first.
pub fn energy_defect_relative_in_basis(
    l: &Lattice,
    f: &Potential,
    spec: &DefectSpec,
    cfg: &SumConfig,
) -> Result<EnergyValue> {
    defect_sum(l, f, spec, cfg, true, false)
}

fn defect_sum(
    l: &Lattice,
    f: &Potential,
    spec: &DefectSpec,
    cfg: &SumConfig,
    relative: bool,
    reduce: bool,
) -> Result<EnergyValue> {
    f.validate(l.dim())?;
    cfg.validate()?;
    if spec.is_non_shifted() {
        let fk = Potential::defect_modified(f.clone(), spec.clone())?;
        return atoms_sum(l, None, &fk.atoms(), cfg, relative);
    }
    let r = if reduce { l.reduced_if_2d() } else { l.clone() };
    let d = r.dim();
    let atoms = f.atoms();
    let parts = 1 + spec
        .entries()
        .iter()
        .map(|e| e.shifts.len().max(1))
        .sum::<usize>();
    let part_cfg = |scale: f64| SumConfig {
        tol: cfg.tol / parts as f64 / scale.abs().max(1.0),
        ..*cfg
    };
    let mut total = atoms_sum(&r, None, &atoms, &part_cfg(1.0), relative)?;
    for e in spec.entries() {
        let k = e.k as f64;
        let sub = r.scaled(k);
        if e.shifts.is_empty() {
            let v = atoms_sum(&sub, None, &atoms, &part_cfg(e.a), relative)?;
            total.add_scaled(-e.a, &v);
            continue;
        }
        for s in &e.shifts {
            if s.0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.0.len(),
                });
            }
            if s.is_trivial_mod(e.k) {
                return Err(Error::InvalidDefectSpec(format!("shift {:?} is trivial mod {}", s.0, e.k)));
            }
            let p = r.point(&s.0);
            let v = atoms_sum(&sub, Some(&p), &atoms, &part_cfg(e.a), relative)?;
            total.add_scaled(-e.a, &v);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests;
