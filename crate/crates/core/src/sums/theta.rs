//! Gaussian lattice sums, evaluated directly or on the dual side through
//! `Σ_{p∈L} e^{2πi p·h} e^{−a|p+c|²} = (π/a)^{d/2} V⁻¹ Σ_{q∈L*} e^{2πi q·c} e^{−π²|q+h|²/a}`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::lattice::Lattice;

use super::radial::{Majorant, RadialSum, Weight};
use super::EnergyValue;

/// Which Gaussian sum: plain (optionally translated by `c`) or alternating.
#[derive(Debug, Clone)]
pub(crate) enum GaussKind {
    Plain(Option<Vec<f64>>),
    Alternating,
}

/// Side on which the sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Auto,
    Direct,
    Dual,
}

/// Result split into the leading `q = 0` dual term and the rest.
pub(crate) struct GaussSum {
    /// `(π/a)^{d/2}/V` for plain sums, 0 for alternating ones.
    pub leading: f64,
    /// Full sum minus `leading`.
    pub excess: EnergyValue,
}

impl GaussSum {
    pub fn total(&self) -> EnergyValue {
        let mut v = self.excess.clone();
        v.value += self.leading;
        v
    }
}

/// Dual side is used when `a/π < V^{−2/d}`.
pub(crate) fn uses_dual(l: &Lattice, a: f64) -> bool {
    a / PI < l.volume().powf(-2.0 / l.dim() as f64)
}

/// `Σ_{p∈L} w(p) e^{−a |p + c|²}` including every point. With
/// `relative = true` the tolerance is tightened to `1e-12` of the leading
/// nonzero dual term, which keeps the shape-dependent excess accurate even
/// when it is far below the absolute tolerance.
pub(crate) fn gauss_sum(
    l: &Lattice,
    kind: &GaussKind,
    a: f64,
    tol: f64,
    max_points: usize,
    side: Side,
    relative: bool,
) -> Result<GaussSum> {
    let d = l.dim();
    let dual = match side {
        Side::Auto => uses_dual(l, a),
        Side::Direct => false,
        Side::Dual => true,
    };
    if !dual {
        let (center, weight) = match kind {
            GaussKind::Plain(c) => (c.as_deref(), Weight::One),
            GaussKind::Alternating => (None, Weight::Alternating),
        };
        let sum = RadialSum {
            lattice: l,
            center,
            weight,
            exclude_origin: false,
            tol,
            max_points,
        };
        let mut v = sum.run(|n2| (-a * n2).exp(), |_| vec![Majorant { coef: 1.0, b: a, p: 0.0 }])?;
        let leading = match kind {
            GaussKind::Plain(_) => (PI / a).powf(d as f64 / 2.0) / l.volume(),
            GaussKind::Alternating => 0.0,
        };
        v.value -= leading;
        return Ok(GaussSum { leading, excess: v });
    }

    let ld = l.dual();
    let pref = (PI / a).powf(d as f64 / 2.0) / l.volume();
    let b = PI * PI / a;
    let mut dual_tol = tol / pref;
    if relative {
        let g = ld.reduced_if_2d();
        let gmin = (0..d).map(|i| g.gram()[(i, i)]).fold(f64::INFINITY, f64::min);
        // the dual shortest vector (or the shortest shifted one) is at most this long
        let lead = match kind {
            GaussKind::Alternating => {
                let h = ld.cell_center();
                (-b * h.iter().map(|v| v * v).sum::<f64>()).exp()
            }
            GaussKind::Plain(_) => (-b * gmin).exp(),
        };
        dual_tol = dual_tol.min((1e-12 * lead).max(f64::MIN_POSITIVE));
    }
    let (center, weight, leading) = match kind {
        GaussKind::Plain(c) => (
            None,
            match c {
                Some(c) => Weight::Cosine(c.clone()),
                None => Weight::One,
            },
            pref,
        ),
        GaussKind::Alternating => (Some(ld.cell_center()), Weight::One, 0.0),
    };
    let sum = RadialSum {
        lattice: &ld,
        center: center.as_deref(),
        weight,
        exclude_origin: matches!(kind, GaussKind::Plain(_)),
        tol: dual_tol,
        max_points,
    };
    let v = sum.run(|n2| (-b * n2).exp(), |_| vec![Majorant { coef: 1.0, b, p: 0.0 }])?;
    Ok(GaussSum {
        leading,
        excess: EnergyValue {
            value: pref * v.value,
            tail_bound: pref * v.tail_bound,
            cutoff_radius: v.cutoff_radius,
            points_used: v.points_used,
        },
    })
}
