//! Inverse-power sums `Σ' |p + c|^{−2x}`.
//!
//! The accelerated mode splits the Mellin integral at `y = 1` after rescaling
//! to unit volume, `G_a(z) = Γ(a, z) z^{−a}`:
//!
//! `Σ' |p+c|^{−2x} = π^x/Γ(x) [Σ' G_x(π|p+c|²) + Σ_{q≠0} cos(2π q·c) G_{d/2−x}(π|q|²)
//!                   + 1/(x − d/2) − δ/x]`,
//!
//! with `δ = 1` when `c ∈ L`. The direct mode truncates the sum and corrects
//! with the continuum tail, bounding the lattice-point discrepancy.

use std::f64::consts::PI;

use crate::enumerate::visit_ball;
use crate::error::{invalid, Error, Result};
use crate::kahan::sum_sorted;
use crate::lattice::Lattice;
use crate::special::{binomial, gamma, sphere_area, upper_gamma};

use super::radial::{choose_radius, Majorant, RadialSum, Weight};
use super::EnergyValue;

fn g_fn(a: f64, z: f64) -> f64 {
    upper_gamma(a, z) * z.powf(-a)
}

/// True when `c` lies in `L` (up to `1e-9` in basis coordinates).
pub(crate) fn is_lattice_point(l: &Lattice, c: &[f64]) -> bool {
    l.coordinates(c).iter().all(|w| (w - w.round()).abs() < 1e-9)
}

/// `Σ_{p∈L, p+c≠0} |p + c|^{−2x}` by the incomplete-gamma split.
pub(crate) fn power_sum_split(
    l: &Lattice,
    center: Option<&[f64]>,
    x: f64,
    tol: f64,
    max_points: usize,
) -> Result<EnergyValue> {
    let d = l.dim();
    let half = d as f64 / 2.0;
    if !(x > half) {
        return Err(invalid("s", format!("power sums need 2s > d, got 2s = {}", 2.0 * x)));
    }
    let t = l.volume().powf(1.0 / d as f64);
    let l1 = l.scaled(1.0 / t);
    let c1: Option<Vec<f64>> = center.map(|c| c.iter().map(|v| v / t).collect());
    let scale = t.powf(-2.0 * x);
    let tol1 = 0.5 * tol / scale;
    let pref = PI.powf(x) / gamma(x);

    let real = RadialSum {
        lattice: &l1,
        center: c1.as_deref(),
        weight: Weight::One,
        exclude_origin: true,
        tol: tol1,
        max_points,
    }
    .run(
        |n2| pref * g_fn(x, PI * n2),
        |r0| {
            let den = PI * r0 * r0 - (x - 1.0).max(0.0);
            let coef = if den > 0.0 { pref / den } else { f64::INFINITY };
            vec![Majorant { coef, b: PI, p: 0.0 }]
        },
    )?;

    let dual_lattice = l1.dual();
    let recip = RadialSum {
        lattice: &dual_lattice,
        center: None,
        weight: match &c1 {
            Some(c) => Weight::Cosine(c.clone()),
            None => Weight::One,
        },
        exclude_origin: true,
        tol: tol1,
        max_points,
    }
    .run(
        |n2| pref * g_fn(half - x, PI * n2),
        |r0| {
            let den = PI * r0 * r0;
            let coef = if den > 0.0 { pref / den } else { f64::INFINITY };
            vec![Majorant { coef, b: PI, p: 0.0 }]
        },
    )?;

    let delta = match center {
        Some(c) if !is_lattice_point(l, c) => 0.0,
        _ => 1.0,
    };
    let constant = pref * (1.0 / (x - half) - delta / x);
    Ok(EnergyValue {
        value: scale * (real.value + recip.value + constant),
        tail_bound: scale * (real.tail_bound + recip.tail_bound),
        cutoff_radius: real.cutoff_radius.max(recip.cutoff_radius) * t,
        points_used: real.points_used + recip.points_used,
    })
}

/// `Σ_{p≠0} |p|^{−2x}` by truncation at `R` plus the continuum tail
/// `(S_d/V) R^{d−2x}/(2x−d) − R^{−2x}(N(R) − ω R^d/V)`. The remaining error is
/// `∫_R^∞ |g'(r)| |N(r) − ω r^d/V| dr` with `|N(r) − ω r^d/V| ≤ ω((r+μ)^d − r^d)/V`.
pub(crate) fn power_sum_direct(l: &Lattice, x: f64, tol: f64, max_points: usize) -> Result<EnergyValue> {
    let d = l.dim();
    let df = d as f64;
    if !(2.0 * x > df) {
        return Err(invalid("s", format!("power sums need 2s > d, got 2s = {}", 2.0 * x)));
    }
    let v = l.volume();
    let mu = l.covering_radius_bound();
    let omega = sphere_area(d) / df;
    let bound = |r: f64| {
        (0..d)
            .map(|j| {
                omega / v * binomial(d, j) * mu.powi((d - j) as i32) * 2.0 * x * r.powf(j as f64 - 2.0 * x)
                    / (2.0 * x - j as f64)
            })
            .sum::<f64>()
    };
    let radius = choose_radius(v.powf(1.0 / df), tol, bound)?;
    let estimate = omega * (radius + mu).powi(d as i32) / v;
    if estimate > max_points as f64 {
        let capped = (max_points as f64 * v / omega).powf(1.0 / df) - mu;
        let partial = if capped > 0.0 {
            Some(Box::new(direct_at(l, x, capped, max_points, &bound)?))
        } else {
            None
        };
        return Err(Error::CapExceeded {
            cap: max_points,
            partial,
        });
    }
    direct_at(l, x, radius, max_points, &bound)
}

fn direct_at<B: Fn(f64) -> f64>(
    l: &Lattice,
    x: f64,
    radius: f64,
    max_points: usize,
    bound: &B,
) -> Result<EnergyValue> {
    let d = l.dim();
    let df = d as f64;
    let v = l.volume();
    let mut samples = Vec::new();
    let mut count = 0usize;
    visit_ball(l, &vec![0.0; d], radius, max_points, |_, _, n2| {
        count += 1;
        if n2 > 0.0 {
            samples.push((n2, 1.0));
        }
    })?;
    let partial = sum_sorted(&mut samples, |n2| n2.powf(-x));
    let omega = sphere_area(d) / df;
    let continuum = sphere_area(d) / v * radius.powf(df - 2.0 * x) / (2.0 * x - df);
    let discrepancy = radius.powf(-2.0 * x) * (count as f64 - omega * radius.powf(df) / v);
    Ok(EnergyValue {
        value: partial + continuum - discrepancy,
        tail_bound: bound(radius),
        cutoff_radius: radius,
        points_used: count,
    })
}
