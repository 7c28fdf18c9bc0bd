//! Finite charged patches of defect structures.

use serde::{Deserialize, Serialize};

use crate::enumerate::visit_ball;
use crate::error::{invalid, Error, Result};
use crate::kahan::sum_sorted;
use crate::lattice::Lattice;
use crate::potentials::{Atom, DefectSpec, Potential};

use super::radial::{tail_bound, Majorant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargedPoint {
    pub position: Vec<f64>,
    pub charge: f64,
}

/// Points of a patch with charges `1 − Σ a_k` over the defect cosets they
/// belong to. Vacancies (charge 0) are dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargedPointSet {
    pub points: Vec<ChargedPoint>,
    pub lattice: Lattice,
    pub spec: DefectSpec,
    pub radius: f64,
}

fn charge_of(m: &[i64], spec: &DefectSpec) -> f64 {
    let mut q = 1.0;
    for e in spec.entries() {
        let k = e.k as i64;
        if e.shifts.is_empty() {
            if m.iter().all(|v| v.rem_euclid(k) == 0) {
                q -= e.a;
            }
        } else {
            for s in &e.shifts {
                if m.iter().zip(&s.0).all(|(v, w)| (v - w).rem_euclid(k) == 0) {
                    q -= e.a;
                }
            }
        }
    }
    q
}

/// Largest `|charge|` over all residue classes.
fn max_abs_charge(spec: &DefectSpec) -> f64 {
    1.0 + spec
        .entries()
        .iter()
        .map(|e| e.a.abs() * e.shifts.len().max(1) as f64)
        .sum::<f64>()
}

/// Charged patch of `L` (reduced in 2D) within `radius` of the origin.
pub fn materialize(l: &Lattice, spec: &DefectSpec, radius: f64, max_points: usize) -> Result<ChargedPointSet> {
    let r = l.reduced_if_2d();
    let d = r.dim();
    for e in spec.entries() {
        for s in &e.shifts {
            if s.0.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.0.len(),
                });
            }
        }
    }
    let mut points = Vec::new();
    visit_ball(&r, &vec![0.0; d], radius, max_points, |m, pos, _| {
        let q = charge_of(m, spec);
        if q.abs() > 1e-12 {
            points.push(ChargedPoint {
                position: pos.to_vec(),
                charge: q,
            });
        }
    })?;
    Ok(ChargedPointSet {
        points,
        lattice: r,
        spec: spec.clone(),
        radius,
    })
}

/// `Σ q(p) f(|p|²)` over the patch, skipping the origin.
pub fn energy_pointset(ps: &ChargedPointSet, f: &Potential) -> f64 {
    let mut samples: Vec<(f64, f64)> = ps
        .points
        .iter()
        .filter_map(|p| {
            let n2: f64 = p.position.iter().map(|v| v * v).sum();
            (n2 > 0.0).then_some((n2, p.charge))
        })
        .collect();
    sum_sorted(&mut samples, |n2| f.eval(n2))
}

/// Bound on the charged sum outside the patch radius.
pub fn pointset_tail_bound(ps: &ChargedPointSet, f: &Potential) -> Result<f64> {
    let l = &ps.lattice;
    let terms: Vec<Majorant> = f
        .atoms()
        .iter()
        .map(|a| match *a {
            Atom::Gauss { coef, a } => Majorant { coef, b: a, p: 0.0 },
            Atom::Power { coef, x } => Majorant { coef, b: 0.0, p: 2.0 * x },
            Atom::Yukawa { coef, sigma, s } => Majorant {
                coef,
                b: sigma,
                p: 2.0 * s,
            },
        })
        .collect();
    let b = tail_bound(l.dim(), l.volume(), l.covering_radius_bound(), ps.radius, &terms);
    if !b.is_finite() {
        return Err(invalid("radius", "patch too small for a tail bound"));
    }
    Ok(max_abs_charge(&ps.spec) * b)
}

impl ChargedPointSet {
    /// `x,y[,z],charge` rows with a header.
    pub fn to_csv(&self) -> String {
        let d = self.lattice.dim();
        let names = ["x", "y", "z"];
        let mut out = names[..d.min(3)].join(",");
        out.push_str(",charge\n");
        for p in &self.points {
            let coords: Vec<String> = p.position.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&format!("{},{:.16e}\n", coords.join(","), p.charge));
        }
        out
    }

    /// Planar drawing: positive charges as filled disks, negative ones as open
    /// circles, radius growing with `|charge|`, origin marked by a cross.
    pub fn to_svg(&self) -> Result<String> {
        if self.lattice.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.lattice.dim(),
            });
        }
        let size = 480.0;
        let scale = size / (2.0 * self.radius * 1.08);
        let unit = self.lattice.gram()[(0, 0)].sqrt() * scale;
        let qmax = self
            .points
            .iter()
            .map(|p| p.charge.abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        let c = size / 2.0;
        for p in &self.points {
            let (x, y) = (c + p.position[0] * scale, c - p.position[1] * scale);
            let r = 0.18 * unit * (0.5 + 0.5 * p.charge.abs() / qmax);
            if p.charge > 0.0 {
                s.push_str(&format!(
                    "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.3}\" fill=\"black\"/>\n"
                ));
            } else {
                s.push_str(&format!(
                    "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r:.3}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>\n"
                ));
            }
        }
        let h = 0.25 * unit;
        s.push_str(&format!(
            "<path d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"blue\" stroke-width=\"2\"/>\n</svg>\n",
            c - h,
            c - h,
            c + h,
            c + h,
            c - h,
            c + h,
            c + h,
            c - h
        ));
        Ok(s)
    }
}
