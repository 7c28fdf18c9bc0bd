//! Truncated radial sums over a translated lattice with certified tails.
//!
//! For `|p + c| > R` every Voronoi cell lies outside the ball of radius
//! `R − μ` (`μ` bounds the covering radius), so for a decreasing majorant `G`
//! of the summand,
//!
//! `Σ_{|p+c|>R} G(|p+c|) ≤ (S_d / V) ∫_{R−2μ}^∞ (u + μ)^{d−1} G(u) du`.
//!
//! Majorants are finite sums of `coef·e^{−b u²}·u^{−p}`.

use crate::enumerate::visit_ball;
use crate::error::{Error, Result};
use crate::kahan::sum_sorted;
use crate::lattice::Lattice;
use crate::special::{binomial, sphere_area, upper_gamma};

use super::EnergyValue;

/// `coef·e^{−b u²}·u^{−p}` in the radial variable `u = |p|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Majorant {
    pub coef: f64,
    pub b: f64,
    pub p: f64,
}

/// Sign pattern attached to the lattice points.
#[derive(Debug, Clone)]
pub(crate) enum Weight {
    One,
    /// `(−1)^{m₁+…+m_d}` in the integer coordinates of the basis.
    Alternating,
    /// `cos(2π p·c)` for a fixed vector `c`.
    Cosine(Vec<f64>),
}

/// `∫_{r0}^∞ u^j e^{−b u²} du` for `j = 0..=jmax`.
fn gaussian_moments(b: f64, r0: f64, jmax: usize) -> Vec<f64> {
    let e = (-b * r0 * r0).exp();
    let mut m = vec![0.0; jmax + 1];
    // ½ b^{−1/2} Γ(½, b r0²)
    m[0] = 0.5 / b.sqrt() * upper_gamma(0.5, b * r0 * r0);
    if jmax >= 1 {
        m[1] = e / (2.0 * b);
    }
    for j in 2..=jmax {
        m[j] = r0.powi(j as i32 - 1) * e / (2.0 * b) + (j as f64 - 1.0) / (2.0 * b) * m[j - 2];
    }
    m
}

/// Certified bound on `Σ_{|p+c|>r} G(|p+c|)` for the majorant terms.
pub(crate) fn tail_bound(d: usize, volume: f64, mu: f64, r: f64, terms: &[Majorant]) -> f64 {
    let r0 = r - 2.0 * mu;
    if r0 <= 0.0 {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    for t in terms {
        if t.coef == 0.0 {
            continue;
        }
        let moments = (t.b > 0.0).then(|| gaussian_moments(t.b, r0, d - 1));
        let mut acc = 0.0;
        for j in 0..d {
            let mut best = f64::INFINITY;
            if let Some(m) = &moments {
                best = r0.powf(-t.p) * m[j];
            }
            let q = t.p - j as f64 - 1.0;
            if q > 0.0 {
                best = best.min(r0.powf(-q) / q);
            }
            acc += binomial(d - 1, j) * mu.powi((d - 1 - j) as i32) * best;
        }
        total += t.coef.abs() * acc;
    }
    sphere_area(d) / volume * total
}

/// Smallest radius (up to bisection accuracy) whose tail bound is at most `tol`.
pub(crate) fn choose_radius<F: Fn(f64) -> f64>(start: f64, tol: f64, tail: F) -> Result<f64> {
    let mut hi = start.max(1e-300);
    let mut n = 0;
    while !(tail(hi) <= tol) {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(crate::error::invalid("tol", "tail bound never reaches the tolerance"));
        }
    }
    if n == 0 {
        return Ok(hi);
    }
    let mut lo = hi / 2.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Parameters of one radial sum.
pub(crate) struct RadialSum<'a> {
    pub lattice: &'a Lattice,
    pub center: Option<&'a [f64]>,
    pub weight: Weight,
    pub exclude_origin: bool,
    pub tol: f64,
    pub max_points: usize,
}

impl RadialSum<'_> {
    /// `Σ w(p) g(|p+c|²)` over the translated lattice, truncated so that the
    /// majorant tail (a function of the inner radius `R − 2μ`) is below `tol`.
    pub fn run<G, M>(&self, g: G, majorant: M) -> Result<EnergyValue>
    where
        G: Fn(f64) -> f64,
        M: Fn(f64) -> Vec<Majorant>,
    {
        let l = self.lattice;
        let d = l.dim();
        let v = l.volume();
        let mu = l.covering_radius_bound();
        let tail = |r: f64| tail_bound(d, v, mu, r, &majorant(r - 2.0 * mu));
        let scale = v.powf(1.0 / d as f64);
        let radius = choose_radius(2.0 * mu + scale, self.tol, tail)?;

        let omega = sphere_area(d) / d as f64;
        let estimate = omega * (radius + mu).powi(d as i32) / v;
        if estimate > self.max_points as f64 {
            let capped = (self.max_points as f64 * v / omega).powf(1.0 / d as f64) - mu;
            let partial = if capped > 2.0 * mu {
                let mut val = self.sum_ball(capped, &g)?;
                val.tail_bound = tail(capped);
                Some(Box::new(val))
            } else {
                None
            };
            return Err(Error::CapExceeded {
                cap: self.max_points,
                partial,
            });
        }
        let mut val = self.sum_ball(radius, &g)?;
        val.tail_bound = tail(radius);
        Ok(val)
    }

    fn sum_ball<G: Fn(f64) -> f64>(&self, radius: f64, g: &G) -> Result<EnergyValue> {
        let l = self.lattice;
        let d = l.dim();
        let zero = vec![0.0; d];
        let center = self.center.unwrap_or(&zero);
        let origin_eps = {
            let e = 1e-12 * l.gram()[(0, 0)].sqrt();
            e * e
        };
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let n = visit_ball(l, center, radius, self.max_points, |m, pos, n2| {
            if self.exclude_origin && n2 <= origin_eps {
                return;
            }
            let w = match &self.weight {
                Weight::One => 1.0,
                Weight::Alternating => {
                    if m.iter().sum::<i64>().rem_euclid(2) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Weight::Cosine(c) => {
                    let dot: f64 = pos.iter().zip(c).map(|(a, b)| a * b).sum();
                    (2.0 * std::f64::consts::PI * dot).cos()
                }
            };
            samples.push((n2, w));
        })?;
        Ok(EnergyValue {
            value: sum_sorted(&mut samples, g),
            tail_bound: 0.0,
            cutoff_radius: radius,
            points_used: n,
        })
    }
}
