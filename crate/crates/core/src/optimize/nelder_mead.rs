//! Nelder–Mead simplex search with a projection applied to every trial point.

use crate::error::Result;

pub(crate) struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            let s: f64 = simplex[i]
                .0
                .iter()
                .zip(&simplex[j].0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d = d.max(s.sqrt());
        }
    }
    d
}

/// Minimizes `f` from `start` with initial steps `steps`. Every trial point
/// is first passed through `project`, and the projected point is kept.
pub(crate) fn nelder_mead<F, P>(
    f: F,
    project: P,
    start: &[f64],
    steps: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NmOutcome>
where
    F: Fn(&[f64]) -> Result<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| -> Result<(Vec<f64>, f64)> {
        let p = project(x);
        evals += 1;
        let v = f(&p)?;
        Ok((p, v))
    };
    let mut simplex = vec![eval(start)?];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += steps[i];
        let mut v = eval(&x)?;
        if v.0 == simplex[0].0 {
            x[i] = start[i] - steps[i];
            v = eval(&x)?;
        }
        simplex.push(v);
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.partial_cmp(&b.0).unwrap()))
    };
    let mut converged = false;
    for _ in 0..max_iter {
        order(&mut simplex);
        if diameter(&simplex) < tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let refl = eval(&along(1.0))?;
        if refl.1 < simplex[0].1 {
            let exp = eval(&along(2.0))?;
            simplex[n] = if exp.1 < refl.1 { exp } else { refl };
            continue;
        }
        if refl.1 < simplex[n - 1].1 {
            simplex[n] = refl;
            continue;
        }
        let contr = if refl.1 < worst.1 {
            eval(&along(0.5))?
        } else {
            eval(&along(-0.5))?
        };
        if contr.1 < worst.1.min(refl.1) {
            simplex[n] = contr;
            continue;
        }
        let best = simplex[0].0.clone();
        for i in 1..=n {
            let x: Vec<f64> = best
                .iter()
                .zip(&simplex[i].0)
                .map(|(b, p)| b + 0.5 * (p - b))
                .collect();
            simplex[i] = eval(&x)?;
        }
    }
    order(&mut simplex);
    let (x, value) = simplex.swap_remove(0);
    Ok(NmOutcome {
        x,
        value,
        converged,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = nelder_mead(f, |x| x.to_vec(), &[-1.2, 1.0], &[0.1, 0.1], 1e-10, 10_000).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projection_keeps_points_feasible() {
        let f = |x: &[f64]| Ok((x[0] * x[0] - 0.01).powi(2) + (x[1] - 0.3).powi(2));
        let r = nelder_mead(f, |x| vec![x[0].abs(), x[1]], &[0.02, 0.5], &[0.1, 0.1], 1e-10, 10_000).unwrap();
        assert!(r.x[0] >= 0.0 && (r.x[0] - 0.1).abs() < 1e-6);
        assert!((r.x[1] - 0.3).abs() < 1e-8);
    }
}
