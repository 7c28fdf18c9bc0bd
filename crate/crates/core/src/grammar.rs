//! Compact string forms: `ip:s=2`, `lj:c1=1,c2=1,x1=3,x2=6`,
//! `gauss:alpha=0.5`, `yuk:sigma=1,s=2`, lattices, objectives, scan families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::PhaseFamily;
use crate::lattice::{Lattice, NamedLattice, Param2D};
use crate::optimize::Objective;
use crate::potentials::{DefectSpec, Potential};
use crate::sums::SumConfig;

/// `name:k=v,k=v` split into the name and its keyword arguments.
pub struct Call {
    pub name: String,
    args: Vec<(String, String)>,
}

impl Call {
    pub fn parse(s: &str) -> Result<Call> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        if name.is_empty() {
            return Err(invalid("spec", format!("missing name in `{s}`")));
        }
        let mut args = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| invalid("spec", format!("expected key=value, got `{part}`")))?;
            let k = k.trim().to_string();
            if args.iter().any(|(a, _): &(String, String)| *a == k) {
                return Err(invalid(&k, "given twice"));
            }
            args.push((k, v.trim().to_string()));
        }
        Ok(Call {
            name: name.trim().to_ascii_lowercase(),
            args,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn num(&self, key: &str) -> Result<f64> {
        let v = self
            .raw(key)
            .ok_or_else(|| invalid(key, format!("missing in `{}`", self.name)))?;
        v.parse::<f64>().map_err(|_| invalid(key, format!("not a number: `{v}`")))
    }

    pub fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(_) => self.num(key),
            None => Ok(default),
        }
    }

    pub fn int(&self, key: &str) -> Result<u32> {
        let v = self
            .raw(key)
            .ok_or_else(|| invalid(key, format!("missing in `{}`", self.name)))?;
        v.parse::<u32>().map_err(|_| invalid(key, format!("not a non-negative integer: `{v}`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.args {
            if !allowed.contains(&k.as_str()) {
                return Err(invalid(k, format!("unknown key for `{}`", self.name)));
            }
        }
        Ok(())
    }
}

impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Potential> {
        let c = Call::parse(s)?;
        let p = match c.name.as_str() {
            "ip" => {
                c.only(&["s"])?;
                Potential::InversePower { s: c.num("s")? }
            }
            "lj" => {
                c.only(&["c1", "c2", "x1", "x2"])?;
                Potential::LennardJones {
                    c1: c.num("c1")?,
                    c2: c.num("c2")?,
                    x1: c.num("x1")?,
                    x2: c.num("x2")?,
                }
            }
            "gauss" => {
                c.only(&["alpha"])?;
                Potential::Gaussian { alpha: c.num("alpha")? }
            }
            "yuk" => {
                c.only(&["sigma", "s"])?;
                Potential::YukawaPower {
                    sigma: c.num("sigma")?,
                    s: c.num("s")?,
                }
            }
            other => return Err(invalid("potential", format!("unknown family `{other}`"))),
        };
        Ok(p)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::InversePower { s } => write!(f, "ip:s={s}"),
            Potential::LennardJones { c1, c2, x1, x2 } => write!(f, "lj:c1={c1},c2={c2},x1={x1},x2={x2}"),
            Potential::Gaussian { alpha } => write!(f, "gauss:alpha={alpha}"),
            Potential::YukawaPower { sigma, s } => write!(f, "yuk:sigma={sigma},s={s}"),
            Potential::DefectModified { base, kappa } => {
                write!(f, "{base} with {}", serde_json::to_string(kappa).map_err(|_| fmt::Error)?)
            }
        }
    }
}

/// A lattice given by name, by basis columns or by its parameter in the
/// fundamental domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    Named { name: NamedLattice },
    Basis { columns: Vec<Vec<f64>> },
    Param { x: f64, y: f64 },
}

impl LatticeSpec {
    /// `volume = None` keeps the natural volume (1 for names and parameters).
    pub fn build(&self, volume: Option<f64>) -> Result<Lattice> {
        let l = match self {
            LatticeSpec::Named { name } => Lattice::named(*name, volume.unwrap_or(1.0))?,
            LatticeSpec::Basis { columns } => Lattice::from_columns(columns)?,
            LatticeSpec::Param { x, y } => Param2D::new(*x, *y, volume.unwrap_or(1.0))?.to_lattice()?,
        };
        match (self, volume) {
            (LatticeSpec::Basis { .. }, Some(v)) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid("volume", "must be positive"));
                }
                Ok(l.with_volume(v))
            }
            _ => Ok(l),
        }
    }
}

/// `A2`, `basis:1,0;0.5,0.8660254` (columns separated by `;`) or
/// `param:x=0.5,y=0.8660254`.
impl FromStr for LatticeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<LatticeSpec> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("basis:") {
            let columns = rest
                .split(';')
                .map(|col| {
                    col.split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| invalid("lattice", format!("not a number: `{v}`")))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(LatticeSpec::Basis { columns });
        }
        if s.starts_with("param:") {
            let c = Call::parse(s)?;
            c.only(&["x", "y"])?;
            return Ok(LatticeSpec::Param {
                x: c.num("x")?,
                y: c.num("y")?,
            });
        }
        Ok(LatticeSpec::Named { name: s.parse()? })
    }
}

/// Functionals that can be handed to the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `θ_L(α)` up to a constant.
    Theta { alpha: f64 },
    /// `θ^±_L(α)`
    ThetaAlternating { alpha: f64 },
    /// `θ_{L+c_L}(α)` up to a constant.
    ThetaCentered { alpha: f64 },
    /// `ζ_L(2s)`
    Zeta { s: f64 },
    /// `E_f[L]`, or `E_f^κ[L]` when defects are given.
    Energy {
        potential: Potential,
        #[serde(default)]
        defects: Option<DefectSpec>,
    },
}

impl ObjectiveSpec {
    pub fn build(&self, cfg: SumConfig) -> Objective {
        match self {
            ObjectiveSpec::Theta { alpha } => Objective::theta(*alpha, cfg),
            ObjectiveSpec::ThetaAlternating { alpha } => Objective::theta_alternating(*alpha, cfg),
            ObjectiveSpec::ThetaCentered { alpha } => Objective::theta_centered(*alpha, cfg),
            ObjectiveSpec::Zeta { s } => Objective::zeta(2.0 * s, cfg),
            ObjectiveSpec::Energy {
                potential,
                defects: Some(spec),
            } if !spec.is_empty() => Objective::defect(potential.clone(), spec.clone(), cfg),
            ObjectiveSpec::Energy { potential, .. } => Objective::energy(potential.clone(), cfg),
        }
    }
}

/// `theta:alpha=1`, `theta-alt:alpha=1`, `theta-center:alpha=1`, `zeta:s=2`,
/// or any potential string for the plain energy.
impl FromStr for ObjectiveSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<ObjectiveSpec> {
        let c = Call::parse(s)?;
        let alpha = || -> Result<f64> {
            c.only(&["alpha"])?;
            c.num("alpha")
        };
        Ok(match c.name.as_str() {
            "theta" => ObjectiveSpec::Theta { alpha: alpha()? },
            "theta-alt" => ObjectiveSpec::ThetaAlternating { alpha: alpha()? },
            "theta-center" => ObjectiveSpec::ThetaCentered { alpha: alpha()? },
            "zeta" => {
                c.only(&["s"])?;
                ObjectiveSpec::Zeta { s: c.num("s")? }
            }
            _ => ObjectiveSpec::Energy {
                potential: s.parse().map_err(|_| invalid("objective", format!("unknown objective `{s}`")))?,
                defects: None,
            },
        })
    }
}

/// `gauss-two-term:a=0.1,factor=2`, `gauss-defect:k=2,a=0.1`,
/// `shifted-theta:a=-0.1`.
impl FromStr for PhaseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<PhaseFamily> {
        let c = Call::parse(s)?;
        Ok(match c.name.as_str() {
            "gauss-two-term" => {
                c.only(&["a", "factor"])?;
                PhaseFamily::GaussTwoTerm {
                    a: c.num("a")?,
                    factor: c.num_or("factor", 2.0)?,
                }
            }
            "gauss-defect" => {
                c.only(&["k", "a"])?;
                PhaseFamily::GaussDefect {
                    k: c.int("k")?,
                    a: c.num("a")?,
                }
            }
            "shifted-theta" => {
                c.only(&["a"])?;
                PhaseFamily::ShiftedTheta { a: c.num("a")? }
            }
            other => return Err(invalid("family", format!("unknown family `{other}`"))),
        })
    }
}

/// `start:stop:count`, endpoints included.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(invalid("range", format!("expected start:stop:count, got `{s}`")));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| invalid("range", format!("not a number: `{v}`")));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| invalid("range", format!("bad count `{n}`")))?;
    match n {
        0 => Err(invalid("range", "count must be positive")),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}
