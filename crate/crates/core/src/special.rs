//! Special functions: Γ and the upper incomplete gamma function for
//! arbitrary real order (negative orders appear on the dual side of the
//! incomplete-gamma split of Epstein zeta sums).

use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;

/// `Γ(x)`, exact at positive integers.
pub fn gamma(x: f64) -> f64 {
    if x.fract() == 0.0 && (1.0..=171.0).contains(&x) {
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    statrs::function::gamma::gamma(x)
}

/// Upper incomplete gamma `Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt` for real `a` and `x > 0`.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    assert!(x > 0.0, "upper_gamma needs x > 0, got {x}");
    if x >= 1.5_f64.max(a + 1.0) {
        return upper_gamma_cf(a, x);
    }
    if a > 0.0 {
        return gamma(a) - lower_gamma_series(a, x);
    }
    // a ≤ 0 and small x: walk down from a positive order (or from E₁ when a
    // is an integer) with Γ(b−1, x) = (Γ(b, x) − x^{b−1} e^{−x}) / (b − 1).
    let frac = a + (-a).ceil();
    let (mut b, mut val) = if frac == 0.0 {
        (0.0, exp_integral_e1(x))
    } else {
        (frac, gamma(frac) - lower_gamma_series(frac, x))
    };
    while b > a + 0.5 {
        val = (val - x.powf(b - 1.0) * (-x).exp()) / (b - 1.0);
        b -= 1.0;
    }
    val
}

/// `γ(a, x)` by its power series, `a > 0`.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

/// Legendre continued fraction, modified Lentz evaluation.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// Exponential integral `E₁(x) = Γ(0, x)`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x >= 1.5 {
        return upper_gamma_cf(0.0, x);
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..500 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Binomial coefficient as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_one_is_exponential() {
        for &x in &[0.1, 0.9, 1.7, 5.0, 30.0] {
            assert_relative_eq!(upper_gamma(1.0, x), (-x).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn half_order_reference_values() {
        // Γ(½, x) = √π erfc(√x)
        let cases = [
            (0.05, 1.332_583_330_089_450_4),
            (0.7, 0.419_581_604_377_174_25),
            (1.3, 0.189_411_003_162_084_95),
            (4.0, 0.008_291_069_380_672_667),
        ];
        for (x, want) in cases {
            assert_relative_eq!(upper_gamma(0.5, x), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert_relative_eq!(exp_integral_e1(1.0), 0.219_383_934_395_520_3, max_relative = 1e-13);
        assert_relative_eq!(exp_integral_e1(0.5), 0.559_773_594_776_160_8, max_relative = 1e-13);
        assert_relative_eq!(exp_integral_e1(2.0), 0.048_900_510_708_061_12, max_relative = 1e-12);
    }

    #[test]
    fn negative_orders_by_closed_forms() {
        for &x in &[0.3f64, 1.0, 1.4, 2.5, 9.0] {
            // Γ(−1, x) = e^{−x}/x − E₁(x)
            let want = (-x).exp() / x - exp_integral_e1(x);
            assert_relative_eq!(upper_gamma(-1.0, x), want, max_relative = 1e-11);
            // Γ(−½, x) = 2 e^{−x}/√x − 2 Γ(½, x)
            let want = 2.0 * (-x).exp() / x.sqrt() - 2.0 * upper_gamma(0.5, x);
            assert_relative_eq!(upper_gamma(-0.5, x), want, max_relative = 1e-12);
        }
        let reference = [(0.3, 1.150_367_047_355_164_3), (2.5, 0.013_976_317_753_307_06), (9.0, 3.964_429_777_334_015e-6)];
        for (x, want) in reference {
            assert_relative_eq!(upper_gamma(-0.5, x), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn continued_fraction_and_series_agree_at_switch() {
        for &a in &[-2.3, -1.0, -0.4, 0.3, 1.7, 3.0] {
            let x = 1.5f64.max(a + 1.0);
            let below = upper_gamma(a, x * (1.0 - 1e-9));
            let above = upper_gamma(a, x);
            assert_relative_eq!(below, above, max_relative = 1e-7);
        }
    }

    #[test]
    fn gamma_factorials() {
        assert_relative_eq!(gamma(6.0), 120.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(3.0), 2.0, max_relative = 1e-13);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }
}
