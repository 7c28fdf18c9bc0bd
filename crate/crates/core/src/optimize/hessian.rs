//! Finite-difference gradient and Hessian in the `(x, y)` coordinates.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Param2D;

use super::{eval_smooth_at, Objective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub eigenvalues: [f64; 2],
    pub positive_definite: bool,
    /// One eigenvalue clearly positive and one clearly negative.
    pub saddle: bool,
    /// Estimated error of the gradient entries.
    pub grad_noise: f64,
    /// Estimated error of the Hessian entries.
    pub hess_noise: f64,
}

struct Stencil {
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
    eps: f64,
}

fn stencil(obj: &Objective, p: &Param2D, h: f64) -> Result<Stencil> {
    let mut f = [[0.0; 3]; 3];
    let mut eps: f64 = 0.0;
    for (i, dx) in [-1.0, 0.0, 1.0].iter().enumerate() {
        for (j, dy) in [-1.0, 0.0, 1.0].iter().enumerate() {
            let v = eval_smooth_at(obj, p.x + dx * h, p.y + dy * h, p.volume)?;
            eps = eps.max(v.tail_bound + 4.0 * f64::EPSILON * v.value.abs());
            f[i][j] = v.value;
        }
    }
    let gx = (f[2][1] - f[0][1]) / (2.0 * h);
    let gy = (f[1][2] - f[1][0]) / (2.0 * h);
    let hxx = (f[2][1] - 2.0 * f[1][1] + f[0][1]) / (h * h);
    let hyy = (f[1][2] - 2.0 * f[1][1] + f[1][0]) / (h * h);
    let hxy = (f[2][2] - f[2][0] - f[0][2] + f[0][0]) / (4.0 * h * h);
    Ok(Stencil {
        grad: [gx, gy],
        hess: [[hxx, hxy], [hxy, hyy]],
        eps,
    })
}

/// Central differences at steps `h` and `h/2` combined by Richardson
/// extrapolation. The objective is evaluated on the smooth extension
/// `(x, y) ↦ F(L(x, y))`, so points on the boundary of the domain are fine.
pub fn hessian_check(obj: &Objective, p: &Param2D, h: f64) -> Result<HessianReport> {
    if !(h > 0.0) || !(p.y - h > 0.0) {
        return Err(invalid("h", "need 0 < h < y"));
    }
    let a = stencil(obj, p, h)?;
    let b = stencil(obj, p, h / 2.0)?;
    let rich = |u: f64, v: f64| (4.0 * v - u) / 3.0;
    let grad = [rich(a.grad[0], b.grad[0]), rich(a.grad[1], b.grad[1])];
    let mut hess = [[0.0; 2]; 2];
    let mut disagreement: f64 = 0.0;
    let eps = a.eps.max(b.eps);
    let hess_noise_floor = 16.0 * eps / (h * h);
    let mut hess_noise = hess_noise_floor;
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = rich(a.hess[i][j], b.hess[i][j]);
            let diff = (a.hess[i][j] - b.hess[i][j]).abs();
            hess_noise = hess_noise.max(diff / 3.0);
            if hess[i][j].abs() > 10.0 * hess_noise_floor {
                disagreement = disagreement.max(diff / hess[i][j].abs());
            }
        }
    }
    if disagreement > 0.1 {
        return Err(Error::StepTooLarge { disagreement });
    }
    let grad_noise = (4.0 * eps / h)
        .max((a.grad[0] - b.grad[0]).abs() / 3.0)
        .max((a.grad[1] - b.grad[1]).abs() / 3.0);
    let m = Matrix2::new(hess[0][0], hess[0][1], hess[1][0], hess[1][1]);
    let ev = m.symmetric_eigen().eigenvalues;
    let (lo, hi) = if ev[0] <= ev[1] { (ev[0], ev[1]) } else { (ev[1], ev[0]) };
    let norm = m.norm();
    let thr = (1e-6 * norm).max(hess_noise);
    Ok(HessianReport {
        grad,
        hess,
        eigenvalues: [lo, hi],
        positive_definite: lo > thr,
        saddle: lo < -thr && hi > thr,
        grad_noise,
        hess_noise,
    })
}

/// Smallest increase `F(p + h·u) − F(p)` over `n` unit directions `u`,
/// each point brought back to the fundamental domain before evaluating.
/// Used where the objective has a kink at `p` and the Hessian says nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingReport {
    pub min_increase: f64,
    pub error_bound: f64,
}

pub fn ring_check(obj: &Objective, p: &Param2D, h: f64, n: usize) -> Result<RingReport> {
    if !(h > 0.0) || !(p.y - h > 0.0) || n == 0 {
        return Err(invalid("h", "need 0 < h < y and n > 0"));
    }
    let centre = super::evaluate_param(obj, p)?;
    let mut min_increase = f64::INFINITY;
    let mut error_bound: f64 = 0.0;
    for i in 0..n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        let q = Param2D::raw(p.x + h * t.cos(), p.y + h * t.sin(), p.volume).canonical()?;
        let v = super::evaluate_param(obj, &q)?;
        min_increase = min_increase.min(v.value - centre.value);
        error_bound = error_bound.max(v.tail_bound + centre.tail_bound);
    }
    Ok(RingReport {
        min_increase,
        error_bound,
    })
}
