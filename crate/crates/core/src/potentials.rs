//! Interaction potentials `f(r)` (argument = squared distance), their
//! inverse-Laplace densities, defect specifications and the scalar criteria
//! built on them.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::ShiftVector;
use crate::special::gamma;

/// One entry `(k, a_k, shifts)` of a defect specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectEntry {
    pub k: u32,
    pub a: f64,
    #[serde(default)]
    pub shifts: Vec<ShiftVector>,
}

/// Defect specification `κ = {K, A_K, P_K}`.
///
/// JSON form: `{"entries": [{"k": 2, "a": 1.0, "shifts": [[1, 1]]}]}`, with an
/// optional `"version": 1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DefectSpec {
    entries: Vec<DefectEntry>,
}

pub const DEFECT_SPEC_VERSION: u32 = 1;

impl<'de> Deserialize<'de> for DefectSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            #[serde(default)]
            version: Option<u32>,
            entries: Vec<DefectEntry>,
        }
        let r = Repr::deserialize(d)?;
        if let Some(v) = r.version {
            if v != DEFECT_SPEC_VERSION {
                return Err(serde::de::Error::custom(format!(
                    "unsupported defect spec version {v}"
                )));
            }
        }
        DefectSpec::new(r.entries).map_err(serde::de::Error::custom)
    }
}

impl DefectSpec {
    pub fn new(entries: Vec<DefectEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut dim = None;
        for e in &entries {
            if e.k < 2 {
                return Err(Error::InvalidDefectSpec(format!("k = {} must be at least 2", e.k)));
            }
            if !seen.insert(e.k) {
                return Err(Error::InvalidDefectSpec(format!("duplicate k = {}", e.k)));
            }
            if !(e.a.is_finite() && e.a != 0.0) {
                return Err(Error::InvalidDefectSpec(format!(
                    "a_{} = {} must be finite and nonzero",
                    e.k, e.a
                )));
            }
            for s in &e.shifts {
                if *dim.get_or_insert(s.0.len()) != s.0.len() || s.0.is_empty() {
                    return Err(Error::InvalidDefectSpec(
                        "shift vectors must share one nonzero dimension".into(),
                    ));
                }
                if s.is_trivial_mod(e.k) {
                    return Err(Error::InvalidDefectSpec(format!(
                        "shift {:?} lies in {}L and is trivial",
                        s.0, e.k
                    )));
                }
            }
        }
        Ok(DefectSpec { entries })
    }

    /// The empty specification `κ = ∅`.
    pub fn empty() -> Self {
        DefectSpec::default()
    }

    /// Non-shifted specification from `(k, a_k)` pairs.
    pub fn non_shifted(pairs: &[(u32, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(k, a)| DefectEntry {
                    k,
                    a,
                    shifts: Vec::new(),
                })
                .collect(),
        )
    }

    /// Single entry with shifts.
    pub fn shifted(k: u32, a: f64, shifts: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(vec![DefectEntry {
            k,
            a,
            shifts: shifts.into_iter().map(ShiftVector).collect(),
        }])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidDefectSpec(e.to_string()))
    }

    pub fn entries(&self) -> &[DefectEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True iff no entry carries shifts.
    pub fn is_non_shifted(&self) -> bool {
        self.entries.iter().all(|e| e.shifts.is_empty())
    }

    fn require_non_shifted(&self) -> Result<()> {
        if self.is_non_shifted() {
            Ok(())
        } else {
            Err(Error::InvalidDefectSpec(
                "operation needs a non-shifted specification".into(),
            ))
        }
    }

    /// `𝖫(A_K, s) = Σ a_k k^{−s}`; shifts are ignored.
    pub fn dirichlet_l(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| e.a / (e.k as f64).powf(s))
            .sum()
    }

    pub fn max_k(&self) -> u32 {
        self.entries.iter().map(|e| e.k).max().unwrap_or(1)
    }
}

/// A term of a potential in closed form: `coef·e^{−a r}`, `coef·r^{−x}` or
/// `coef·e^{−σ r} r^{−s}`. Every supported potential is a finite sum of atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atom {
    Gauss { coef: f64, a: f64 },
    Power { coef: f64, x: f64 },
    Yukawa { coef: f64, sigma: f64, s: f64 },
}

impl Atom {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Atom::Gauss { coef, a } => coef * (-a * r).exp(),
            Atom::Power { coef, x } => coef * r.powf(-x),
            Atom::Yukawa { coef, sigma, s } => coef * (-sigma * r).exp() * r.powf(-s),
        }
    }

    /// The atom of `r ↦ f(k² r)`.
    pub fn dilated(&self, k2: f64) -> Atom {
        match *self {
            Atom::Gauss { coef, a } => Atom::Gauss { coef, a: a * k2 },
            Atom::Power { coef, x } => Atom::Power {
                coef: coef * k2.powf(-x),
                x,
            },
            Atom::Yukawa { coef, sigma, s } => Atom::Yukawa {
                coef: coef * k2.powf(-s),
                sigma: sigma * k2,
                s,
            },
        }
    }

    pub fn scaled(&self, c: f64) -> Atom {
        match *self {
            Atom::Gauss { coef, a } => Atom::Gauss { coef: coef * c, a },
            Atom::Power { coef, x } => Atom::Power { coef: coef * c, x },
            Atom::Yukawa { coef, sigma, s } => Atom::Yukawa {
                coef: coef * c,
                sigma,
                s,
            },
        }
    }

    pub fn coef(&self) -> f64 {
        match *self {
            Atom::Gauss { coef, .. } | Atom::Power { coef, .. } | Atom::Yukawa { coef, .. } => coef,
        }
    }
}

/// Interaction potential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Potential {
    /// `e^{−π α r}`
    Gaussian { alpha: f64 },
    /// `r^{−s}`
    InversePower { s: f64 },
    /// `e^{−σ r} r^{−s}`
    YukawaPower { sigma: f64, s: f64 },
    /// `c₂ r^{−x₂} − c₁ r^{−x₁}`
    LennardJones { c1: f64, c2: f64, x1: f64, x2: f64 },
    /// `f_κ(r) = f(r) − Σ a_k f(k² r)` for a non-shifted `κ`.
    DefectModified { base: Box<Potential>, kappa: DefectSpec },
}

impl Potential {
    pub fn defect_modified(base: Potential, kappa: DefectSpec) -> Result<Potential> {
        kappa.require_non_shifted()?;
        Ok(Potential::DefectModified {
            base: Box::new(base),
            kappa,
        })
    }

    /// Checks the parameter constraints and admissible decay in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let half = d as f64 / 2.0;
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be finite"))
            }
        };
        match self {
            Potential::Gaussian { alpha } => {
                finite("alpha", *alpha)?;
                if *alpha <= 0.0 {
                    return Err(invalid("alpha", "must be positive"));
                }
            }
            Potential::InversePower { s } => {
                finite("s", *s)?;
                if *s <= half {
                    return Err(invalid("s", format!("decay needs s > d/2 = {half}")));
                }
            }
            Potential::YukawaPower { sigma, s } => {
                finite("sigma", *sigma)?;
                finite("s", *s)?;
                if *sigma < 0.0 {
                    return Err(invalid("sigma", "must be nonnegative"));
                }
                if *s <= 0.0 {
                    return Err(invalid("s", "must be positive"));
                }
                if *sigma == 0.0 && *s <= half {
                    return Err(invalid("s", format!("with sigma = 0 decay needs s > d/2 = {half}")));
                }
            }
            Potential::LennardJones { c1, c2, x1, x2 } => {
                for (n, v) in [("c1", c1), ("c2", c2), ("x1", x1), ("x2", x2)] {
                    finite(n, *v)?;
                }
                if *c1 <= 0.0 || *c2 <= 0.0 {
                    return Err(invalid("c1/c2", "must be positive"));
                }
                if !(*x2 > *x1 && *x1 > half) {
                    return Err(invalid("x1/x2", format!("need x2 > x1 > d/2 = {half}")));
                }
            }
            Potential::DefectModified { base, kappa } => {
                kappa.require_non_shifted()?;
                base.validate(d)?;
            }
        }
        Ok(())
    }

    /// `f(r)`, with `r` the squared distance.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::Gaussian { alpha } => (-PI * alpha * r).exp(),
            Potential::InversePower { s } => r.powf(-s),
            Potential::YukawaPower { sigma, s } => (-sigma * r).exp() * r.powf(-s),
            Potential::LennardJones { c1, c2, x1, x2 } => c2 * r.powf(-x2) - c1 * r.powf(-x1),
            Potential::DefectModified { base, kappa } => {
                let mut v = base.eval(r);
                for e in kappa.entries() {
                    let k = e.k as f64;
                    v -= e.a * base.eval(k * k * r);
                }
                v
            }
        }
    }

    /// Decomposition into closed-form atoms.
    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            Potential::Gaussian { alpha } => vec![Atom::Gauss {
                coef: 1.0,
                a: PI * alpha,
            }],
            Potential::InversePower { s } => vec![Atom::Power { coef: 1.0, x: *s }],
            Potential::YukawaPower { sigma, s } => {
                if *sigma == 0.0 {
                    vec![Atom::Power { coef: 1.0, x: *s }]
                } else {
                    vec![Atom::Yukawa {
                        coef: 1.0,
                        sigma: *sigma,
                        s: *s,
                    }]
                }
            }
            Potential::LennardJones { c1, c2, x1, x2 } => vec![
                Atom::Power { coef: *c2, x: *x2 },
                Atom::Power { coef: -c1, x: *x1 },
            ],
            Potential::DefectModified { base, kappa } => {
                let b = base.atoms();
                let mut out = b.clone();
                for e in kappa.entries() {
                    let k2 = (e.k as f64).powi(2);
                    out.extend(b.iter().map(|at| at.dilated(k2).scaled(-e.a)));
                }
                out
            }
        }
    }

    /// Atoms of `r ↦ f(k² r)`.
    pub fn dilated_atoms(&self, k: f64) -> Vec<Atom> {
        self.atoms().iter().map(|a| a.dilated(k * k)).collect()
    }

    /// Laplace density (or point masses) of the potential.
    pub fn density(&self) -> Density {
        let mut masses = Vec::new();
        self.point_masses(1.0, 1.0, &mut masses);
        if !masses.is_empty() {
            return Density::PointMasses(masses);
        }
        let mut breakpoints = vec![0.0];
        self.support_breaks(1.0, &mut breakpoints);
        breakpoints.sort_by(|a, b| a.total_cmp(b));
        breakpoints.dedup();
        Density::Continuous(DensityFn {
            potential: self.clone(),
            breakpoints,
        })
    }

    fn point_masses(&self, weight: f64, k2: f64, out: &mut Vec<(f64, f64)>) {
        match self {
            Potential::Gaussian { alpha } => out.push((PI * alpha * k2, weight)),
            Potential::DefectModified { base, kappa } => {
                base.point_masses(weight, k2, out);
                for e in kappa.entries() {
                    let kk = (e.k as f64).powi(2);
                    base.point_masses(-weight * e.a, k2 * kk, out);
                }
            }
            _ => {}
        }
    }

    fn support_breaks(&self, k2: f64, out: &mut Vec<f64>) {
        match self {
            Potential::YukawaPower { sigma, .. } => out.push(sigma * k2),
            Potential::DefectModified { base, kappa } => {
                base.support_breaks(k2, out);
                for e in kappa.entries() {
                    base.support_breaks(k2 * (e.k as f64).powi(2), out);
                }
            }
            _ => {}
        }
    }

    /// `ρ_f(t)`; `NoDensity` for Gaussian components.
    pub fn density_at(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Potential::Gaussian { alpha } => {
                return Err(Error::NoDensity(format!(
                    "Gaussian(alpha = {alpha}) has a point mass at t = π·alpha"
                )))
            }
            Potential::InversePower { s } => {
                if t > 0.0 {
                    t.powf(s - 1.0) / gamma(*s)
                } else {
                    0.0
                }
            }
            Potential::YukawaPower { sigma, s } => {
                if t > *sigma {
                    (t - sigma).powf(s - 1.0) / gamma(*s)
                } else {
                    0.0
                }
            }
            Potential::LennardJones { c1, c2, x1, x2 } => {
                if t > 0.0 {
                    c2 * t.powf(x2 - 1.0) / gamma(*x2) - c1 * t.powf(x1 - 1.0) / gamma(*x1)
                } else {
                    0.0
                }
            }
            Potential::DefectModified { base, kappa } => {
                let mut v = base.density_at(t)?;
                for e in kappa.entries() {
                    let k2 = (e.k as f64).powi(2);
                    v -= e.a / k2 * base.density_at(t / k2)?;
                }
                v
            }
        })
    }
}

/// Laplace measure of a potential.
#[derive(Debug, Clone)]
pub enum Density {
    /// `μ_f = Σ w δ_t`, listed as `(t, w)`.
    PointMasses(Vec<(f64, f64)>),
    Continuous(DensityFn),
}

impl Density {
    /// The closed-form evaluator; `NoDensity` for point masses.
    pub fn evaluator(&self) -> Result<&DensityFn> {
        match self {
            Density::Continuous(f) => Ok(f),
            Density::PointMasses(m) => Err(Error::NoDensity(format!(
                "measure is a sum of {} point masses",
                m.len()
            ))),
        }
    }
}

/// Closed-form density `t ↦ ρ(t)`, supported on `[breakpoints[0], ∞)` and
/// smooth between consecutive breakpoints.
#[derive(Debug, Clone)]
pub struct DensityFn {
    potential: Potential,
    breakpoints: Vec<f64>,
}

impl DensityFn {
    pub fn eval(&self, t: f64) -> f64 {
        self.potential
            .density_at(t)
            .expect("continuous densities have no point masses")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `∫₀^∞ e^{−r t} ρ(t) dt` by piecewise double-exponential quadrature.
    pub fn laplace(&self, r: f64, tol: f64) -> f64 {
        let f = |t: f64| (-r * t).exp() * self.eval(t);
        let b = &self.breakpoints;
        let mut total = 0.0;
        for w in b.windows(2) {
            total += crate::quadrature::integrate(f, w[0], Some(w[1]), tol);
        }
        total + crate::quadrature::integrate(f, *b.last().unwrap(), None, tol)
    }
}

/// Outcome of a grid certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub holds_on_grid: bool,
    /// Smallest sampled value of the certified quantity.
    pub min_value: f64,
    /// Where the minimum was attained.
    pub argmin: f64,
    /// First sample where the inequality fails.
    pub first_violation: Option<f64>,
}

pub const DEFAULT_GRID_SAMPLES: usize = 4096;
pub const DEFAULT_Y_MAX: f64 = 1e3;

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            (a + (b - a) * i as f64 / (n - 1) as f64).exp()
        }
    })
}

fn scan<F: Fn(f64) -> Result<f64>>(points: impl Iterator<Item = f64>, f: F) -> Result<GridCheck> {
    let mut out = GridCheck {
        holds_on_grid: true,
        min_value: f64::INFINITY,
        argmin: f64::NAN,
        first_violation: None,
    };
    for t in points {
        let v = f(t)?;
        if v < out.min_value {
            out.min_value = v;
            out.argmin = t;
        }
        if v < 0.0 && out.first_violation.is_none() {
            out.holds_on_grid = false;
            out.first_violation = Some(t);
        }
    }
    Ok(out)
}

/// Default `T_max = 10³·(max k)²` for [`check_condthm`].
pub fn default_t_max(spec: &DefectSpec) -> f64 {
    1e3 * (spec.max_k() as f64).powi(2)
}

/// Samples `ρ_f(t) − Σ (a_k/k²) ρ_f(t/k²) ≥ 0` on `n` log-spaced points of
/// `[10⁻⁸ T_max, T_max]`.
pub fn check_condthm(f: &Potential, spec: &DefectSpec, t_max: f64, n: usize) -> Result<GridCheck> {
    spec.require_non_shifted()?;
    if !(t_max > 0.0) || n < 2 {
        return Err(invalid("t grid", "need t_max > 0 and at least two samples"));
    }
    let fk = Potential::defect_modified(f.clone(), spec.clone())?;
    fk.density().evaluator()?;
    scan(log_grid(t_max * 1e-8, t_max, n), |t| fk.density_at(t))
}

/// `g_V(y) = ρ_{f_κ}(π y / V^{2/d}) + y^{d/2−2} ρ_{f_κ}(π / (V^{2/d} y))`.
pub fn g_v(f: &Potential, spec: &DefectSpec, d: usize, volume: f64, y: f64) -> Result<f64> {
    spec.require_non_shifted()?;
    let fk = Potential::defect_modified(f.clone(), spec.clone())?;
    g_v_of(&fk, d, volume, y)
}

fn g_v_of(fk: &Potential, d: usize, volume: f64, y: f64) -> Result<f64> {
    let alpha = volume.powf(2.0 / d as f64);
    Ok(fk.density_at(PI * y / alpha)?
        + y.powf(d as f64 / 2.0 - 2.0) * fk.density_at(PI / (alpha * y))?)
}

/// Samples `g_V ≥ 0` on `n` log-spaced points of `[1, y_max]`.
pub fn check_gv(
    f: &Potential,
    spec: &DefectSpec,
    d: usize,
    volume: f64,
    y_max: f64,
    n: usize,
) -> Result<GridCheck> {
    spec.require_non_shifted()?;
    if !(y_max > 1.0) || n < 2 {
        return Err(invalid("y grid", "need y_max > 1 and at least two samples"));
    }
    let fk = Potential::defect_modified(f.clone(), spec.clone())?;
    fk.density().evaluator()?;
    scan(log_grid(1.0, y_max, n), |y| g_v_of(&fk, d, volume, y))
}

/// Regimes of the defect-modified Lennard-Jones energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LjRegime {
    /// `𝖫(2x₂) < 𝖫(2x₁) < 1`
    Case1,
    /// `𝖫(2x₁) > 𝖫(2x₂) > 1`
    Case2,
    /// `𝖫(2x₁) > 1 > 𝖫(2x₂)`
    Case3,
    Degenerate,
}

fn lj_params(f: &Potential) -> Result<(f64, f64, f64, f64)> {
    match *f {
        Potential::LennardJones { c1, c2, x1, x2 } => Ok((c1, c2, x1, x2)),
        _ => Err(invalid("potential", "expected a Lennard-Jones potential")),
    }
}

pub fn lj_regime(f: &Potential, spec: &DefectSpec) -> Result<LjRegime> {
    spec.require_non_shifted()?;
    let (_, _, x1, x2) = lj_params(f)?;
    let l1 = spec.dirichlet_l(2.0 * x1);
    let l2 = spec.dirichlet_l(2.0 * x2);
    // κ = ∅ is the defect-free case of the first regime
    Ok(if (l2 < l1 || spec.is_empty()) && l1 < 1.0 {
        LjRegime::Case1
    } else if l1 > l2 && l2 > 1.0 {
        LjRegime::Case2
    } else if l1 > 1.0 && 1.0 > l2 {
        LjRegime::Case3
    } else {
        LjRegime::Degenerate
    })
}

/// Threshold volume `V_κ`, defined in the first regime only.
pub fn v_kappa(f: &Potential, spec: &DefectSpec, d: usize) -> Result<f64> {
    match lj_regime(f, spec)? {
        LjRegime::Case1 => v_kappa_formula(f, spec, d),
        r => Err(Error::WrongRegime(format!(
            "V_kappa needs L(2x2) < L(2x1) < 1, spec is in {r:?}"
        ))),
    }
}

/// The `V_κ` expression without the regime check; it stays meaningful
/// whenever both effective coefficients `c_i (1 − 𝖫(2x_i))` share a sign.
pub fn v_kappa_formula(f: &Potential, spec: &DefectSpec, d: usize) -> Result<f64> {
    spec.require_non_shifted()?;
    let (c1, c2, x1, x2) = lj_params(f)?;
    let e1 = c1 * (1.0 - spec.dirichlet_l(2.0 * x1));
    let e2 = c2 * (1.0 - spec.dirichlet_l(2.0 * x2));
    let ratio = e2 * gamma(x1) / (e1 * gamma(x2));
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::WrongRegime(format!(
            "effective coefficients {e1} and {e2} do not share a sign"
        )));
    }
    let half = d as f64 / 2.0;
    Ok(PI.powf(half) * ratio.powf(d as f64 / (2.0 * (x2 - x1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ip(s: f64) -> Potential {
        Potential::InversePower { s }
    }

    fn lj() -> Potential {
        Potential::LennardJones {
            c1: 1.0,
            c2: 1.0,
            x1: 3.0,
            x2: 6.0,
        }
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(ip(2.0).eval(4.0), 1.0 / 16.0);
        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        let fk = Potential::defect_modified(ip(3.0), k).unwrap();
        assert_relative_eq!(fk.eval(1.0), 1.0 - 2f64.powf(-6.0), max_relative = 1e-15);
        assert_eq!(Potential::Gaussian { alpha: 1.0 }.eval(1.0), (-PI).exp());
    }

    #[test]
    fn defect_modified_matches_two_term_expression_exactly() {
        let base = Potential::YukawaPower { sigma: 0.7, s: 1.3 };
        let k = DefectSpec::non_shifted(&[(2, 0.4), (3, -1.5)]).unwrap();
        let fk = Potential::defect_modified(base.clone(), k).unwrap();
        for &r in &[0.3, 1.0, 2.5] {
            let want = base.eval(r) - 0.4 * base.eval(4.0 * r) - -1.5 * base.eval(9.0 * r);
            assert_eq!(fk.eval(r), want);
        }
    }

    #[test]
    fn atoms_reproduce_eval() {
        let k = DefectSpec::non_shifted(&[(2, 0.4), (5, 2.0)]).unwrap();
        for base in [
            lj(),
            Potential::Gaussian { alpha: 0.3 },
            Potential::YukawaPower { sigma: 1.0, s: 2.0 },
        ] {
            let fk = Potential::defect_modified(base, k.clone()).unwrap();
            for &r in &[0.5, 1.0, 3.0] {
                let sum: f64 = fk.atoms().iter().map(|a| a.eval(r)).sum();
                assert_relative_eq!(sum, fk.eval(r), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(ip(1.0).validate(2).is_err());
        assert!(ip(1.01).validate(2).is_ok());
        assert!(Potential::YukawaPower { sigma: 0.0, s: 1.0 }.validate(2).is_err());
        assert!(Potential::YukawaPower { sigma: 0.1, s: 0.5 }.validate(2).is_ok());
        let bad = Potential::LennardJones {
            c1: 1.0,
            c2: 1.0,
            x1: 6.0,
            x2: 3.0,
        };
        assert!(bad.validate(2).is_err());
        assert!(Potential::Gaussian { alpha: -1.0 }.validate(2).is_err());
        let shifted = DefectSpec::shifted(2, 1.0, vec![vec![1, 1]]).unwrap();
        assert!(Potential::defect_modified(ip(2.0), shifted).is_err());
    }

    #[test]
    fn densities_in_closed_form() {
        let one = ip(1.0).density();
        let one = one.evaluator().unwrap();
        assert_eq!(one.eval(0.3), 1.0);
        assert_eq!(one.eval(7.0), 1.0);

        let y = Potential::YukawaPower { sigma: 1.0, s: 2.0 }.density();
        let y = y.evaluator().unwrap();
        assert_eq!(y.eval(0.5), 0.0);
        assert_relative_eq!(y.eval(3.0), 2.0, max_relative = 1e-15);

        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        let fk = Potential::defect_modified(ip(2.0), k).unwrap();
        let d = fk.density();
        let d = d.evaluator().unwrap();
        for &t in &[0.1, 1.0, 10.0] {
            assert_relative_eq!(d.eval(t), 15.0 / 16.0 * t, max_relative = 1e-14);
        }
        for &r in &[0.5, 1.0, 2.0] {
            assert_relative_eq!(d.laplace(r, 1e-12), fk.eval(r), max_relative = 1e-8);
        }
    }

    #[test]
    fn gaussian_is_point_mass() {
        let d = Potential::Gaussian { alpha: 2.0 }.density();
        match &d {
            Density::PointMasses(m) => assert_eq!(m, &vec![(2.0 * PI, 1.0)]),
            _ => panic!("expected point mass"),
        }
        assert!(matches!(d.evaluator(), Err(Error::NoDensity(_))));
        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        assert!(matches!(
            check_condthm(&Potential::Gaussian { alpha: 1.0 }, &k, 1e3, 16),
            Err(Error::NoDensity(_))
        ));
    }

    #[test]
    fn laplace_consistency_fixed_radii() {
        let k = DefectSpec::non_shifted(&[(2, 0.3), (3, 0.2)]).unwrap();
        let cases = vec![
            ip(1.7),
            Potential::YukawaPower { sigma: 1.0, s: 2.0 },
            Potential::YukawaPower { sigma: 0.5, s: 1.0 },
            lj(),
            Potential::defect_modified(Potential::YukawaPower { sigma: 1.0, s: 2.5 }, k.clone())
                .unwrap(),
            Potential::defect_modified(lj(), k).unwrap(),
        ];
        for f in cases {
            let d = f.density();
            let d = d.evaluator().unwrap();
            for &r in &[0.5, 1.0, 2.0] {
                // relative to the size of the terms: Lennard-Jones vanishes at r = 1
                let scale: f64 = f.atoms().iter().map(|a| a.eval(r).abs()).sum();
                assert!((d.laplace(r, 1e-12) - f.eval(r)).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn dirichlet_sums() {
        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        assert_eq!(k.dirichlet_l(4.0), 1.0 / 16.0);
        let k = DefectSpec::non_shifted(&[(2, 1.0), (3, 1.0)]).unwrap();
        assert_relative_eq!(k.dirichlet_l(2.0), 13.0 / 36.0, max_relative = 1e-15);
        let all: Vec<(u32, f64)> = (2..=100).map(|k| (k, 1.0)).collect();
        let k = DefectSpec::non_shifted(&all).unwrap();
        let partial: f64 = (2..=100).map(|k| (k as f64).powf(-1.8)).sum();
        assert_relative_eq!(k.dirichlet_l(1.8), partial, max_relative = 1e-14);
        assert!(k.dirichlet_l(1.8) < 1.0);
    }

    #[test]
    fn condthm_examples() {
        let t_max = 4e3;
        let k1 = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        assert!(check_condthm(&ip(2.0), &k1, t_max, 4096).unwrap().holds_on_grid);
        // a = 8: (a/k²) ρ(t/k²) = t/2 < t, still holds.
        let k8 = DefectSpec::non_shifted(&[(2, 8.0)]).unwrap();
        assert!(check_condthm(&ip(2.0), &k8, t_max, 4096).unwrap().holds_on_grid);
        // a = 20: right side 20/16·t exceeds t everywhere.
        let k20 = DefectSpec::non_shifted(&[(2, 20.0)]).unwrap();
        let r = check_condthm(&ip(2.0), &k20, t_max, 4096).unwrap();
        assert!(!r.holds_on_grid);
        assert_relative_eq!(r.first_violation.unwrap(), t_max * 1e-8, max_relative = 1e-12);
        let y = Potential::YukawaPower { sigma: 1.0, s: 2.0 };
        assert!(check_condthm(&y, &k1, t_max, 4096).unwrap().holds_on_grid);
    }

    #[test]
    fn threshold_volume() {
        let v0 = v_kappa(&lj(), &DefectSpec::empty(), 2).unwrap();
        assert_relative_eq!(v0, PI * (2.0f64 / 120.0).cbrt(), max_relative = 1e-13);
        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        assert!(v_kappa(&lj(), &k, 2).unwrap() > v0);
        let big = DefectSpec::non_shifted(&[(2, 100.0)]).unwrap();
        assert!(matches!(v_kappa(&lj(), &big, 2), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn gv_vanishes_at_threshold() {
        let e = DefectSpec::empty();
        let v0 = v_kappa(&lj(), &e, 2).unwrap();
        assert!(g_v(&lj(), &e, 2, v0, 1.0).unwrap().abs() < 1e-12);
        for &y in &[1.0, 2.0, 10.0] {
            assert!(g_v(&lj(), &e, 2, 0.9 * v0, y).unwrap() > 0.0);
        }
        let below = check_gv(&lj(), &e, 2, 0.5 * v0, DEFAULT_Y_MAX, DEFAULT_GRID_SAMPLES).unwrap();
        assert!(below.holds_on_grid && below.min_value > 0.0);
        let above = check_gv(&lj(), &e, 2, 2.0 * v0, DEFAULT_Y_MAX, DEFAULT_GRID_SAMPLES).unwrap();
        assert!(!above.holds_on_grid);
        assert_eq!(above.first_violation, Some(1.0));
        let k = DefectSpec::non_shifted(&[(2, 0.5)]).unwrap();
        let vk = v_kappa(&lj(), &k, 2).unwrap();
        assert!(check_gv(&lj(), &k, 2, 0.5 * vk, DEFAULT_Y_MAX, DEFAULT_GRID_SAMPLES)
            .unwrap()
            .holds_on_grid);
    }

    #[test]
    fn regimes() {
        let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
        assert_eq!(lj_regime(&lj(), &k).unwrap(), LjRegime::Case1);
        let f = |x1: f64, x2: f64| Potential::LennardJones {
            c1: 1.0,
            c2: 1.0,
            x1,
            x2,
        };
        let k5 = DefectSpec::non_shifted(&[(2, 5.0)]).unwrap();
        assert_eq!(lj_regime(&f(1.2, 1.5), &k5).unwrap(), LjRegime::Case1);
        let k6 = DefectSpec::non_shifted(&[(2, 6.0)]).unwrap();
        assert_eq!(lj_regime(&f(1.2, 2.0), &k6).unwrap(), LjRegime::Case3);
        let k10 = DefectSpec::non_shifted(&[(2, 10.0)]).unwrap();
        assert_eq!(lj_regime(&f(1.2, 1.5), &k10).unwrap(), LjRegime::Case2);
        // 𝖫(2x₂) = 1 exactly
        let k8 = DefectSpec::non_shifted(&[(2, 8.0)]).unwrap();
        assert_eq!(lj_regime(&f(1.2, 1.5), &k8).unwrap(), LjRegime::Degenerate);
    }

    #[test]
    fn defect_spec_json() {
        let s = DefectSpec::from_json(r#"{"entries":[{"k":2,"a":1.0,"shifts":[[1,1]]}]}"#).unwrap();
        assert_eq!(s.entries()[0].shifts[0].0, vec![1, 1]);
        let v = DefectSpec::from_json(r#"{"version":1,"entries":[{"k":3,"a":0.5}]}"#).unwrap();
        assert!(v.is_non_shifted());
        for bad in [
            r#"{"entries":[{"k":1,"a":1.0}]}"#,
            r#"{"entries":[{"k":2,"a":0.0}]}"#,
            r#"{"entries":[{"k":2,"a":1.0},{"k":2,"a":3.0}]}"#,
            r#"{"entries":[{"k":2,"a":1.0,"shifts":[[2,0]]}]}"#,
            r#"{"entries":[{"k":2,"a":1.0,"weight":3}]}"#,
            r#"{"version":7,"entries":[]}"#,
        ] {
            assert!(DefectSpec::from_json(bad).is_err(), "{bad}");
        }
        let round: DefectSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(round, s);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn spec_strategy() -> impl Strategy<Value = DefectSpec> {
        prop::collection::vec((2u32..6, 0.0f64..1.0), 0..3).prop_map(|v| {
            let mut seen = std::collections::BTreeMap::new();
            for (k, a) in v {
                seen.insert(k, a);
            }
            let pairs: Vec<(u32, f64)> = seen.into_iter().collect();
            DefectSpec::non_shifted(&pairs).unwrap()
        })
    }

    fn density_potential() -> impl Strategy<Value = Potential> {
        prop_oneof![
            (1.05f64..4.0).prop_map(|s| Potential::InversePower { s }),
            (0.1f64..2.0, 1.0f64..3.5).prop_map(|(sigma, s)| Potential::YukawaPower { sigma, s }),
            (0.5f64..2.0, 0.5f64..2.0, 1.1f64..3.0, 0.5f64..3.0).prop_map(|(c1, c2, x1, dx)| {
                Potential::LennardJones {
                    c1,
                    c2,
                    x1,
                    x2: x1 + dx,
                }
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn laplace_matches_eval(f in density_potential(), spec in spec_strategy(), r in 0.25f64..8.0) {
            for g in [f.clone(), Potential::defect_modified(f.clone(), spec.clone()).unwrap()] {
                let d = g.density();
                let d = d.evaluator().unwrap();
                let scale: f64 = g.atoms().iter().map(|a| a.eval(r).abs()).sum();
                let err = (d.laplace(r, 1e-12) - g.eval(r)).abs();
                prop_assert!(err <= 1e-8 * scale, "{g:?} r = {r}: {err:e}");
            }
        }

        #[test]
        fn increasing_density_and_small_l_gives_condition(
            s in 1.0f64..4.0,
            yukawa in any::<bool>(),
            raw in prop::collection::vec((2u32..8, 0.0f64..1.0), 1..4),
            target in 0.0f64..0.99,
        ) {
            let mut seen = std::collections::BTreeMap::new();
            for (k, a) in raw {
                seen.insert(k, a);
            }
            let pairs: Vec<(u32, f64)> = seen.into_iter().collect();
            let l: f64 = pairs.iter().map(|(k, a)| a / (*k as f64).powi(2)).sum();
            let pairs: Vec<(u32, f64)> = if l > 0.0 {
                pairs.iter().map(|&(k, a)| (k, a * target / l)).collect()
            } else {
                pairs
            };
            let spec = DefectSpec::non_shifted(&pairs).unwrap();
            prop_assert!(spec.dirichlet_l(2.0) <= 1.0);
            let f = if yukawa {
                Potential::YukawaPower { sigma: 0.7, s }
            } else {
                Potential::InversePower { s }
            };
            let r = check_condthm(&f, &spec, default_t_max(&spec), 512).unwrap();
            prop_assert!(r.holds_on_grid, "{f:?} {spec:?} {r:?}");
        }

        #[test]
        fn gv_factorization(
            c1 in 0.5f64..2.0,
            c2 in 0.5f64..2.0,
            x1 in 1.6f64..4.0,
            dx in 0.5f64..4.0,
            d in 2usize..4,
            v in 0.2f64..5.0,
            y in 1.0f64..50.0,
        ) {
            let x2 = x1 + dx;
            let f = Potential::LennardJones { c1, c2, x1, x2 };
            let h = d as f64 / 2.0;
            let alpha = v.powf(2.0 / d as f64) / PI;
            let b1 = c1 / gamma(x1);
            let b2 = c2 / gamma(x2);
            let tilde = b2 * alpha.powf(x1 - x2) * (y.powf(2.0 * x2 - h) + 1.0)
                - b1 * (y.powf(x1 + x2 - h) + y.powf(x2 - x1));
            let lhs = g_v(&f, &DefectSpec::empty(), d, v, y).unwrap() * alpha.powf(x1 - 1.0) * y.powf(x2 + 1.0 - h);
            let scale = b2 * alpha.powf(x1 - x2) * (y.powf(2.0 * x2 - h) + 1.0)
                + b1 * (y.powf(x1 + x2 - h) + y.powf(x2 - x1));
            prop_assert!((lhs - tilde).abs() <= 1e-10 * scale, "{lhs} vs {tilde}");
        }
    }
}
