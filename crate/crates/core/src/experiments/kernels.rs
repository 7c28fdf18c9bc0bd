//! Kernel identities: Jacobi transformation and Laplace representations.

use std::time::Instant;

use rand::Rng;

use crate::error::Result;
use crate::lattice::{Lattice, NamedLattice};
use crate::potentials::{DefectSpec, Potential};
use crate::sums::{self, SumConfig};

use super::{sample_params, Context, ExperimentConfig, ExperimentParams, ExperimentReport};

fn params(p: ExperimentParams, ctx: &Context) -> serde_json::Value {
    serde_json::to_value(ExperimentConfig {
        params: p,
        context: ctx.clone(),
    })
    .unwrap_or(serde_json::Value::Null)
}

/// `|θ_L(1/y) − y^{d/2} θ_{L*}(y) / V|`, both sides summed directly.
pub fn jacobi_residual(l: &Lattice, y: f64, cfg: &SumConfig) -> Result<f64> {
    let lhs = sums::theta_direct(l, 1.0 / y, false, cfg)?;
    let rhs = sums::theta_direct(&l.dual(), y, false, cfg)?;
    Ok((lhs.value - y.powf(l.dim() as f64 / 2.0) * rhs.value / l.volume()).abs())
}

pub fn run_jacobi_suite(n_random: usize, y_list: &[f64], ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new(
        "jacobi",
        params(
            ExperimentParams::Jacobi {
                n_random,
                y_list: y_list.to_vec(),
            },
            ctx,
        ),
    );
    let cfg = SumConfig {
        tol: 1e-14,
        ..ctx.sums
    };
    let mut rng = ctx.rng();
    let mut lattices: Vec<(String, Lattice)> = Vec::new();
    for (i, p) in sample_params(&mut rng, n_random, 1.0).into_iter().enumerate() {
        let v = rng.gen_range(0.5..2.0);
        let l = Lattice::from_columns(&[
            vec![(v / p.y).sqrt(), 0.0],
            vec![(v / p.y).sqrt() * p.x, (v / p.y).sqrt() * p.y],
        ])?;
        lattices.push((format!("random_{i}"), l));
    }
    lattices.push(("Z3".into(), Lattice::named(NamedLattice::Z3, 1.0)?));
    lattices.push(("D3".into(), Lattice::named(NamedLattice::D3, 1.0)?));
    let mut worst: f64 = 0.0;
    let mut table = String::from("lattice,y,residual\n");
    for (name, l) in &lattices {
        for &y in y_list {
            let r = jacobi_residual(l, y, &cfg)?;
            worst = worst.max(r);
            table.push_str(&format!("{name},{y:.16e},{r:.16e}\n"));
        }
    }
    rep.value("max_residual", worst);
    rep.check("Jacobi identity residual below 1e-11", worst < 1e-11, worst, 1e-11);
    rep.tables.insert("jacobi_residuals".into(), table);
    Ok(rep.finish(start))
}

/// Quadrature of `∫ e^{−rt} ρ_f(t) dt` against `f(r)` for every closed-form
/// density family, plain and defect-modified, on random parameters.
pub fn run_laplace_suite(n_random: usize, ctx: &Context) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("laplace", params(ExperimentParams::Laplace { n_random }, ctx));
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    let mut table = String::from("potential,r,quadrature,eval,relative_error\n");
    for _ in 0..n_random {
        let x1 = rng.gen_range(1.1..3.0);
        let base = [
            Potential::InversePower {
                s: rng.gen_range(1.05..4.0),
            },
            Potential::YukawaPower {
                sigma: rng.gen_range(0.1..2.0),
                s: rng.gen_range(1.0..3.5),
            },
            Potential::LennardJones {
                c1: rng.gen_range(0.5..2.0),
                c2: rng.gen_range(0.5..2.0),
                x1,
                x2: x1 + rng.gen_range(0.5..3.0),
            },
        ];
        let spec = DefectSpec::non_shifted(&[(2, rng.gen_range(0.0..1.0)), (3, rng.gen_range(0.0..1.0))])?;
        let r: f64 = rng.gen_range(0.25..8.0);
        for f in base {
            for g in [f.clone(), Potential::defect_modified(f, spec.clone())?] {
                let dens = g.density();
                let q = dens.evaluator()?.laplace(r, 1e-12);
                let e = g.eval(r);
                let scale: f64 = g.atoms().iter().map(|a| a.eval(r).abs()).sum();
                let rel = (q - e).abs() / scale;
                worst = worst.max(rel);
                table.push_str(&format!("\"{g:?}\",{r:.16e},{q:.16e},{e:.16e},{rel:.16e}\n"));
            }
        }
    }
    rep.value("max_relative_error", worst);
    rep.check("Laplace quadrature matches eval to 1e-8", worst <= 1e-8, worst, 1e-8);
    rep.tables.insert("laplace".into(), table);
    Ok(rep.finish(start))
}
