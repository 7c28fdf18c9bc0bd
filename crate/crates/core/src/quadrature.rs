//! Double-exponential quadrature (tanh-sinh on finite intervals, exp-sinh on
//! half lines). Used to check closed-form densities against their Laplace
//! transforms; endpoint algebraic singularities are handled by the
//! substitution itself.

use std::f64::consts::FRAC_PI_2;

/// `∫_a^b f(t) dt`, or `∫_a^∞ f(t) dt` when `b` is `None`, to relative `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: Option<f64>, tol: f64) -> f64 {
    let mut prev = f64::NAN;
    let mut est = 0.0;
    for level in 2..14 {
        let h = 0.5f64.powi(level);
        est = match b {
            Some(b) => tanh_sinh(&f, a, b, h),
            None => exp_sinh(&f, a, h),
        };
        if level > 3 && (est - prev).abs() <= tol * est.abs() {
            return est;
        }
        prev = est;
    }
    est
}

fn exp_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, h: f64) -> f64 {
    let n = (6.5 / h).ceil() as i64;
    let mut acc = crate::kahan::KahanSum::new();
    for j in -n..=n {
        let u = j as f64 * h;
        let e = (FRAC_PI_2 * u.sinh()).exp();
        if e == 0.0 || !e.is_finite() {
            continue;
        }
        let t = a + e;
        if t == a {
            continue;
        }
        let w = FRAC_PI_2 * u.cosh() * e;
        let v = f(t) * w;
        if v.is_finite() {
            acc.add(v);
        }
    }
    h * acc.value()
}

fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, h: f64) -> f64 {
    let half = 0.5 * (b - a);
    let n = (4.0 / h).ceil() as i64;
    let mut acc = crate::kahan::KahanSum::new();
    for j in -n..=n {
        let u = j as f64 * h;
        let s = FRAC_PI_2 * u.sinh();
        // distance from the nearer endpoint, computed without cancellation
        let delta = 2.0 * half / (1.0 + (2.0 * s.abs()).exp());
        let t = if u < 0.0 { a + delta } else { b - delta };
        if t <= a || t >= b {
            continue;
        }
        let c = s.cosh();
        let w = half * FRAC_PI_2 * u.cosh() / (c * c);
        let v = f(t) * w;
        if v.is_finite() {
            acc.add(v);
        }
    }
    h * acc.value()
}
