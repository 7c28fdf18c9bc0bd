//! Optimality, non-optimality and threshold statements.

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Param2D, ShapeClass, ShiftVector};
use crate::optimize::{evaluate_param, minimize2d, Objective, Sense};
use crate::potentials::{g_v, lj_regime, v_kappa, v_kappa_formula, DefectSpec, LjRegime, Potential};
use crate::sums::{self, SumConfig};

use super::{check_optimum, fmt17, sample_params, Context, ExperimentConfig, ExperimentParams, ExperimentReport};

fn params(p: ExperimentParams, ctx: &Context) -> serde_json::Value {
    serde_json::to_value(ExperimentConfig {
        params: p,
        context: ctx.clone(),
    })
    .unwrap_or(serde_json::Value::Null)
}

fn tight(ctx: &Context) -> SumConfig {
    SumConfig {
        tol: 1e-13,
        ..ctx.sums
    }
}

/// Non-optimality of `A₂` for `f_κ` with a small positive `a_k`, optimality
/// for negative `a_k`, and the limiting ratio driving the argument.
pub fn run_thm0(k: u32, a: f64, a_negative: f64, alphas: &[f64], ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "thm0",
        params(
            ExperimentParams::Thm0 {
                k,
                a,
                a_negative,
                alphas: alphas.to_vec(),
            },
            ctx,
        ),
    );
    let mut alphas = alphas.to_vec();
    alphas.sort_by(|p, q| p.total_cmp(q));
    let spec = DefectSpec::non_shifted(&[(k, a)])?;
    let neg = DefectSpec::non_shifted(&[(k, a_negative)])?;
    let tri = Param2D::triangular(1.0);

    let mut table = String::from("alpha,x,y,shape,best_value,a2_value,margin,bound,non_optimal\n");
    let mut detected = Vec::new();
    for &alpha in &alphas {
        let obj = Objective::defect(Potential::Gaussian { alpha }, spec.clone(), ctx.sums);
        let r = minimize2d(&obj, 1.0, &ctx.grid, Sense::Min)?;
        let t = evaluate_param(&obj, &tri)?;
        let margin = t.value - r.best_value;
        let bound = 10.0 * (t.tail_bound + r.error_bound);
        let nonopt = margin > bound;
        detected.push(nonopt);
        rep.value(format!("margin_alpha_{alpha}"), margin);
        rep.value(format!("bound_alpha_{alpha}"), bound);
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt17(alpha),
            fmt17(r.best_param.x),
            fmt17(r.best_param.y),
            r.shape,
            fmt17(r.best_value),
            fmt17(t.value),
            fmt17(margin),
            fmt17(bound),
            nonopt
        ));
    }
    if let Some(i) = detected.iter().rposition(|&b| b) {
        rep.value("largest_alpha_non_optimal", alphas[i]);
    }
    if let Some(&smallest) = alphas.first() {
        rep.check(
            format!("A2 is beaten at the smallest alpha = {smallest}"),
            detected[0],
            rep.values[&format!("margin_alpha_{smallest}")],
            rep.values[&format!("bound_alpha_{smallest}")],
        );
    }
    rep.tables.insert("thm0_scan".into(), table);

    // (θ_L(α) − θ_A₂(α)) / (θ_L(k²α) − θ_A₂(k²α)) at the grid neighbour of A₂
    let nx = ctx.grid.n_x.max(2) as f64;
    let x = 0.5 - 0.5 / (nx - 1.0);
    let near = Param2D::raw(x, (1.0 - x * x).sqrt(), 1.0).to_lattice()?;
    let a2 = tri.to_lattice()?;
    let k2 = (k as f64).powi(2);
    let mut ratios = Vec::new();
    for &alpha in &alphas {
        let d = |al: f64| -> Result<f64> {
            Ok(sums::theta_excess(&near, al, &ctx.sums)?.value - sums::theta_excess(&a2, al, &ctx.sums)?.value)
        };
        let r = d(alpha)? / d(k2 * alpha)?;
        rep.value(format!("ratio_alpha_{alpha}"), r);
        ratios.push(r.abs());
    }
    if ratios.len() >= 2 {
        let monotone = ratios.windows(2).all(|w| w[0] <= w[1]);
        rep.check(
            "ratio statistic decreases toward 0 as alpha decreases",
            monotone && ratios[0] < ratios[ratios.len() - 1],
            ratios[0],
            ratios[ratios.len() - 1],
        );
    }

    for &alpha in &alphas {
        let obj = Objective::defect(Potential::Gaussian { alpha }, neg.clone(), ctx.sums);
        check_optimum(
            &mut rep,
            &format!("a = {a_negative}, alpha = {alpha}"),
            &obj,
            1.0,
            ctx,
            Sense::Min,
            ShapeClass::Triangular,
            false,
        )?;
    }
    Ok(rep.finish(start))
}

/// `p/k ≡ c_L (mod L)` for every shift, in integer coordinates.
pub fn validate_shift_condition(k: u32, shift: &[i64]) -> Result<()> {
    if !ShiftVector(shift.to_vec()).is_cell_center_mod(k) {
        return Err(Error::ShiftConditionViolated(format!(
            "shift {shift:?} with k = {k} does not satisfy p/k = c_L modulo L"
        )));
    }
    Ok(())
}

/// Decomposition identity and minimality of `A₂` for a shifted spec
/// satisfying the cell-centre condition.
pub fn run_thm02(k: u32, shift: &[i64], a: f64, n_random: usize, ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    validate_shift_condition(k, shift)?;
    let mut rep = ExperimentReport::new(
        "thm02",
        params(
            ExperimentParams::Thm02 {
                k,
                shift: shift.to_vec(),
                a,
                n_random,
            },
            ctx,
        ),
    );
    let spec = DefectSpec::shifted(k, a, vec![shift.to_vec()])?;
    let cfg = tight(ctx);
    let mut rng = ctx.rng();
    let lattices = sample_params(&mut rng, n_random, 1.0);
    let fs = [Potential::Gaussian { alpha: 1.0 }, Potential::InversePower { s: 2.0 }];
    let mut worst: f64 = 0.0;
    let mut table = String::from("x,y,family,lhs,rhs,relative_residual\n");
    for p in &lattices {
        let l = p.to_lattice()?;
        let r = l.reduce2d()?;
        let c = r.cell_center();
        for f in &fs {
            let lhs = sums::energy_defect(&l, f, &spec, &cfg)?;
            let plain = sums::energy(&l, f, &cfg)?;
            let shifted = sums::energy_shifted(&r, &c, &f.dilated_atoms(k as f64), &cfg)?;
            let rhs = plain.value - a * shifted.value;
            let res = (lhs.value - rhs).abs() / plain.value.abs();
            worst = worst.max(res);
            table.push_str(&format!(
                "{},{},{:?},{},{},{}\n",
                fmt17(p.x),
                fmt17(p.y),
                f,
                fmt17(lhs.value),
                fmt17(rhs),
                fmt17(res)
            ));
        }
    }
    rep.value("max_relative_residual", worst);
    rep.check(
        "E^kappa = E_f - a E_{f(k^2 .)}[L + c_L] on random lattices",
        worst <= 1e-11,
        worst,
        1e-11,
    );
    rep.tables.insert("thm02_identity".into(), table.replace('"', ""));

    for f in [
        Potential::Gaussian { alpha: 0.5 },
        Potential::Gaussian { alpha: 1.0 },
        Potential::Gaussian { alpha: 2.0 },
        Potential::InversePower { s: 2.0 },
    ] {
        let label = format!("{f:?}");
        let obj = Objective::defect(f, spec.clone(), ctx.sums);
        check_optimum(&mut rep, &label, &obj, 1.0, ctx, Sense::Min, ShapeClass::Triangular, true)?;
    }
    Ok(rep.finish(start))
}

/// `ζ(x) − 1` by Euler–Maclaurin, `x > 1`.
fn zeta_minus_one(x: f64) -> f64 {
    let n = 50.0f64;
    let mut s = 0.0;
    for k in 2..50 {
        s += (k as f64).powf(-x);
    }
    s + n.powf(1.0 - x) / (x - 1.0) + 0.5 * n.powf(-x) + x / 12.0 * n.powf(-x - 1.0)
        - x * (x + 1.0) * (x + 2.0) / 720.0 * n.powf(-x - 3.0)
}

/// Factorization `E_f^κ = (1 − 𝖫(A_K, 2s)) ζ_L(2s)` for `f = r^{−s}` and
/// the resulting (reversed) optimality of `A₂`.
pub fn run_thm2ip(spec: &DefectSpec, s: f64, n_random: usize, ctx: &Context) -> Result<ExperimentReport> {
    if !spec.is_non_shifted() {
        return Err(Error::InvalidDefectSpec("the factorization needs entries without shifts".into()));
    }
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "thm2ip",
        params(
            ExperimentParams::Thm2ip {
                spec: spec.clone(),
                s,
                n_random,
            },
            ctx,
        ),
    );
    let f = Potential::InversePower { s };
    let lval = spec.dirichlet_l(2.0 * s);
    rep.value("dirichlet_l", lval);
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for p in sample_params(&mut rng, n_random, 1.0) {
        let l = p.to_lattice()?;
        let e = sums::energy_defect(&l, &f, spec, &ctx.sums)?;
        let z = sums::epstein_zeta(&l, 2.0 * s, &ctx.sums)?;
        worst = worst.max((e.value - (1.0 - lval) * z.value).abs() / z.value.abs());
    }
    rep.value("max_relative_residual", worst);
    rep.check("E^kappa = (1 - L) zeta_L(2s) on random lattices", worst <= 1e-10, worst, 1e-10);

    let obj = Objective::defect(f, spec.clone(), ctx.sums);
    if (lval - 1.0).abs() <= 1e-12 {
        let mut worst: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for p in [Param2D::triangular(1.0), Param2D::square(1.0), Param2D::raw(0.2, 2.0, 1.0)] {
            let e = evaluate_param(&obj, &p)?;
            worst = worst.max(e.value.abs());
            bound = bound.max(e.tail_bound + 1e-12);
        }
        rep.check("L = 1: energy vanishes identically", worst <= bound, worst, bound);
    } else if lval > 1.0 {
        check_optimum(&mut rep, "L > 1", &obj, 1.0, ctx, Sense::Max, ShapeClass::Triangular, true)?;
    } else {
        check_optimum(&mut rep, "L < 1", &obj, 1.0, ctx, Sense::Min, ShapeClass::Triangular, true)?;
    }

    if spec.entries().iter().all(|e| e.a == 1.0) && 2.0 * s > 2.0 {
        let z1 = zeta_minus_one(2.0 * s);
        rep.value("zeta_2s_minus_one", z1);
        rep.check("a_k = 1: L <= zeta(2s) - 1 < 1", lval <= z1 && z1 < 1.0, lval, z1);
    }
    Ok(rep.finish(start))
}

/// Regime classification and optimality of `A₂` for defect-modified
/// Lennard-Jones energies.
/// `r*` such that `f_κ(r) < 0` for `r < r*` when `f_κ = b₁r^{−x₁} − b₂r^{−x₂}`
/// with `b₁, b₂ > 0` and `x₂ > x₁`.
fn lj_negative_below(f: &Potential, spec: &DefectSpec) -> Result<f64> {
    let Potential::LennardJones { c1, c2, x1, x2 } = *f else {
        return Err(invalid("potential", "expected lennard_jones"));
    };
    let b1 = c1 * (spec.dirichlet_l(2.0 * x1) - 1.0);
    let b2 = c2 * (spec.dirichlet_l(2.0 * x2) - 1.0);
    if !(b1 > 0.0 && b2 > 0.0 && x2 > x1) {
        return Err(invalid("potential", "not in the collapsing regime"));
    }
    Ok((b2 / b1).powf(1.0 / (x2 - x1)))
}

pub fn run_thm3lj(f: &Potential, spec: &DefectSpec, volumes: &[f64], ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "thm3lj",
        params(
            ExperimentParams::Thm3lj {
                potential: f.clone(),
                spec: spec.clone(),
                volumes: volumes.to_vec(),
            },
            ctx,
        ),
    );
    let regime = lj_regime(f, spec)?;
    rep.value(
        "regime",
        match regime {
            LjRegime::Case1 => 1.0,
            LjRegime::Case2 => 2.0,
            LjRegime::Case3 => 3.0,
            LjRegime::Degenerate => 0.0,
        },
    );
    let obj = Objective::defect(f.clone(), spec.clone(), ctx.sums);
    let mut table = String::from("volume,x,y,shape,best_value,a2_value,unbounded\n");
    let mut row = |rep: &mut ExperimentReport, v: f64, r: &crate::optimize::MinimizeResult| -> Result<f64> {
        let t = evaluate_param(&obj, &Param2D::triangular(v))?;
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt17(v),
            fmt17(r.best_param.x),
            fmt17(r.best_param.y),
            r.shape,
            fmt17(r.best_value),
            fmt17(t.value),
            r.unbounded
        ));
        let margin = t.value - r.best_value;
        rep.value(format!("margin_v_{v}"), margin);
        Ok(margin - 10.0 * (t.tail_bound + r.error_bound))
    };
    match regime {
        LjRegime::Case1 => {
            let vk = v_kappa(f, spec, 2)?;
            let v0 = v_kappa(f, &DefectSpec::empty(), 2)?;
            rep.value("v_kappa", vk);
            rep.value("v_empty", v0);
            if !spec.is_empty() {
                rep.check("V_kappa > V_empty", vk > v0, vk, v0);
            }
            let g = g_v(f, &DefectSpec::empty(), 2, v0, 1.0)?;
            rep.value("g_v_at_threshold", g);
            rep.check("g_V(1) = 0 at V = V_empty", g.abs() <= 1e-12, g.abs(), 1e-12);
            let mut beaten_somewhere = None;
            for &factor in volumes {
                let v = factor * vk;
                if factor <= 1.0 {
                    let r = check_optimum(
                        &mut rep,
                        &format!("V = {factor} V_kappa"),
                        &obj,
                        v,
                        ctx,
                        Sense::Min,
                        ShapeClass::Triangular,
                        true,
                    )?;
                    row(&mut rep, v, &r)?;
                } else {
                    let r = minimize2d(&obj, v, &ctx.grid, Sense::Min)?;
                    let excess = row(&mut rep, v, &r)?;
                    rep.check(
                        format!("V = {factor} V_kappa: a lattice beats A2 (got {})", r.shape),
                        excess > 0.0,
                        excess,
                        0.0,
                    );
                    beaten_somewhere = Some(beaten_somewhere.unwrap_or(false) || excess > 0.0);
                }
            }
            if let Some(b) = beaten_somewhere {
                rep.value("beaten_above_threshold", if b { 1.0 } else { 0.0 });
            }
        }
        LjRegime::Case2 => {
            let vk = v_kappa_formula(f, spec, 2)?;
            rep.value("v_kappa", vk);
            let r_star = lj_negative_below(f, spec)?;
            rep.value("r_star", r_star);
            for &factor in volumes {
                let v = factor * vk;
                let mut grid = ctx.grid.clone();
                grid.y_max = grid.y_max.max(4.0 * v / r_star);
                let r = minimize2d(&obj, v, &grid, Sense::Min)?;
                row(&mut rep, v, &r)?;
                rep.check(
                    format!("V = {factor} V_kappa: no minimizer (collapse reported as unbounded)"),
                    r.unbounded,
                    r.best_param.y,
                    grid.y_max,
                );
                if factor < 1.0 {
                    check_optimum(
                        &mut rep,
                        &format!("V = {factor} V_kappa maximum"),
                        &obj,
                        v,
                        ctx,
                        Sense::Max,
                        ShapeClass::Triangular,
                        false,
                    )?;
                }
            }
        }
        LjRegime::Case3 => {
            for &v in volumes {
                let r = check_optimum(
                    &mut rep,
                    &format!("V = {v}"),
                    &obj,
                    v,
                    ctx,
                    Sense::Min,
                    ShapeClass::Triangular,
                    true,
                )?;
                row(&mut rep, v, &r)?;
            }
        }
        LjRegime::Degenerate => {}
    }
    rep.tables.insert("thm3lj_volumes".into(), table);
    Ok(rep.finish(start))
}
