//! Kagome and ionic structures.

use std::time::Instant;

use crate::error::Result;
use crate::lattice::{Lattice, NamedLattice, Param2D, ShapeClass};
use crate::optimize::{hessian_check, minimize_orthorhombic, Objective, Sense};
use crate::potentials::{v_kappa, DefectSpec, Potential};
use crate::sums::{self, energy_pointset, materialize, pointset_tail_bound};

use super::{check_optimum, Context, ExperimentConfig, ExperimentParams, ExperimentReport};

fn params(p: ExperimentParams, ctx: &Context) -> serde_json::Value {
    serde_json::to_value(ExperimentConfig {
        params: p,
        context: ctx.clone(),
    })
    .unwrap_or(serde_json::Value::Null)
}

/// Number of points in each of the first `n` distance shells of a patch.
fn shell_counts(ps: &sums::ChargedPointSet, n: usize) -> Vec<(f64, usize)> {
    let mut d: Vec<f64> = ps
        .points
        .iter()
        .map(|p| p.position.iter().map(|v| v * v).sum::<f64>().sqrt())
        .filter(|r| *r > 1e-12)
        .collect();
    d.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<(f64, usize)> = Vec::new();
    for r in d {
        match out.last_mut() {
            Some((r0, c)) if (r - *r0).abs() < 1e-9 * r0.max(1.0) => *c += 1,
            _ => {
                if out.len() == n {
                    break;
                }
                out.push((r, 1));
            }
        }
    }
    out
}

/// Optimality of `A₂` for the sparse structures `L ∖ 2L` (Kagome) and the
/// shifted variant, and agreement of finite charged patches with the
/// defect-energy sums.
pub fn run_kagome(radius: f64, ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("kagome", params(ExperimentParams::Kagome { radius }, ctx));
    let plain = DefectSpec::non_shifted(&[(2, 1.0)])?;
    let shifted = DefectSpec::shifted(2, 1.0, vec![vec![1, 1]])?;
    let lj = Potential::LennardJones {
        c1: 1.0,
        c2: 1.0,
        x1: 3.0,
        x2: 6.0,
    };
    let vk = v_kappa(&lj, &plain, 2)?;
    rep.value("lj_v_kappa", vk);
    let cases = vec![
        ("inverse_power", Potential::InversePower { s: 2.0 }, plain.clone(), 1.0),
        ("yukawa", Potential::YukawaPower { sigma: 1.0, s: 2.0 }, plain.clone(), 1.0),
        ("lennard_jones", lj, plain.clone(), 0.5 * vk),
        ("gaussian_shifted", Potential::Gaussian { alpha: 1.0 }, shifted.clone(), 1.0),
    ];
    let mut table = String::from("case,patch_energy,defect_energy,difference,bound\n");
    for (label, f, spec, v) in cases {
        let obj = Objective::defect(f.clone(), spec.clone(), ctx.sums);
        check_optimum(&mut rep, label, &obj, v, ctx, Sense::Min, ShapeClass::Triangular, true)?;

        let l = Param2D::triangular(v).to_lattice()?;
        let r = radius * v.sqrt();
        let ps = materialize(&l, &spec, r, ctx.sums.max_points)?;
        let patch = energy_pointset(&ps, &f);
        let exact = sums::energy_defect(&l, &f, &spec, &ctx.sums)?;
        let bound = pointset_tail_bound(&ps, &f)? + exact.tail_bound;
        let diff = (patch - exact.value).abs();
        rep.check(
            format!("{label}: patch energy matches the defect sum within the tail bound"),
            diff <= bound,
            diff,
            bound,
        );
        table.push_str(&format!(
            "{label},{:.16e},{:.16e},{diff:.16e},{bound:.16e}\n",
            patch, exact.value
        ));
    }
    rep.tables.insert("kagome_patches".into(), table);

    let unit = Lattice::named(NamedLattice::A2, 1.0)?;
    for (name, spec) in [("kagome", &plain), ("kagome_shifted", &shifted)] {
        let ps = materialize(&unit, spec, 5.0, 100_000)?;
        for (i, (r, c)) in shell_counts(&ps, 4).into_iter().enumerate() {
            rep.value(format!("{name}_shell_{}_radius", i + 1), r);
            rep.value(format!("{name}_shell_{}_count", i + 1), c as f64);
        }
        rep.figures.insert(name.into(), ps.to_svg()?);
        rep.tables.insert(format!("{name}_patch"), ps.to_csv());
    }
    Ok(rep.finish(start))
}

/// Alternating and centred thetas, orthorhombic optima and the
/// `ζ_L(2s) − 2ζ_{2L}(2s)` energy.
pub fn run_ionic(alphas: &[f64], two_s: f64, ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "ionic",
        params(
            ExperimentParams::Ionic {
                alphas: alphas.to_vec(),
                two_s,
            },
            ctx,
        ),
    );
    for &alpha in alphas {
        let obj = Objective::theta_alternating(alpha, ctx.sums);
        check_optimum(
            &mut rep,
            &format!("alternating theta, alpha = {alpha}"),
            &obj,
            1.0,
            ctx,
            Sense::Max,
            ShapeClass::Triangular,
            true,
        )?;
    }

    let alt = minimize_orthorhombic(&Objective::theta_alternating(1.0, ctx.sums), 2, 1.0, 64, 4.0, Sense::Max)?;
    rep.check(
        "rectangles: square maximizes the alternating theta",
        alt.is_cubic,
        alt.log_ratios[0],
        1e-4,
    );
    let th = minimize_orthorhombic(&Objective::theta(1.0, ctx.sums), 2, 1.0, 64, 4.0, Sense::Min)?;
    rep.check("rectangles: square minimizes theta", th.is_cubic, th.log_ratios[0], 1e-4);

    let spec = DefectSpec::non_shifted(&[(2, 2.0)])?;
    let obj = Objective::defect(Potential::InversePower { s: two_s / 2.0 }, spec.clone(), ctx.sums);
    check_optimum(&mut rep, "zeta - 2 zeta(2.)", &obj, 1.0, ctx, Sense::Min, ShapeClass::Triangular, true)?;
    match hessian_check(&obj, &Param2D::square(1.0), 1e-3) {
        Ok(h) => {
            rep.value("z2_eigenvalue_min", h.eigenvalues[0]);
            rep.value("z2_eigenvalue_max", h.eigenvalues[1]);
            rep.value("z2_hessian_noise", h.hess_noise);
            let clear = h.eigenvalues[0] < -10.0 * h.hess_noise && h.eigenvalues[1] > 10.0 * h.hess_noise;
            rep.check(
                "Z2 is a saddle point (eigenvalues of both signs, |lambda| > 10x noise)",
                clear,
                h.eigenvalues[0].abs().min(h.eigenvalues[1].abs()),
                10.0 * h.hess_noise,
            );
        }
        Err(e) => rep.check(format!("Z2 Hessian failed: {e}"), false, f64::NAN, 0.0),
    }

    let z2 = Lattice::named(NamedLattice::Z2, 1.0)?;
    let a2 = Lattice::named(NamedLattice::A2, 1.0)?;
    let rock = DefectSpec::shifted(2, 2.0, vec![vec![1, 0], vec![0, 1]])?;
    rep.figures.insert("rock_salt_z2".into(), materialize(&z2, &rock, 5.0, 100_000)?.to_svg()?);
    rep.figures.insert("alternating_a2".into(), materialize(&a2, &rock, 5.0, 100_000)?.to_svg()?);
    rep.figures.insert("sublattice_a2".into(), materialize(&a2, &spec, 5.0, 100_000)?.to_svg()?);
    Ok(rep.finish(start))
}
