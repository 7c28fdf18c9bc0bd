use std::process::ExitCode;
use std::time::Instant;

use defect_lattice::experiments::phase::PhaseFamily;
use defect_lattice::experiments::{self, Context, ExperimentConfig, ExperimentParams, ExperimentReport};
use defect_lattice::optimize::{minimize2d, GridSpec, Objective, Sense};
use defect_lattice::{DefectSpec, Param2D, Potential, ShapeClass, SumConfig};

const OPTIMUM_TOL: f64 = 1e-4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(params: ExperimentParams, context: Context) -> Result<ExperimentReport, String> {
    experiments::run(&ExperimentConfig { params, context }).map_err(|e| e.to_string())
}

fn summarize(reports: &[ExperimentReport]) -> Outcome {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| format!("{}: {} (measured {:e}, tol {:e})", r.name, c.description, c.measured, c.tolerance))
        })
        .collect();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    if failed.is_empty() {
        Outcome {
            passed: true,
            detail: format!("{total} checks"),
        }
    } else {
        Outcome {
            passed: false,
            detail: format!("{}/{total} checks failed; {}", failed.len(), failed.join("; ")),
        }
    }
}

fn collect(items: Vec<Result<ExperimentReport, String>>) -> Outcome {
    let mut reports = Vec::new();
    for r in items {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => {
                return Outcome {
                    passed: false,
                    detail: format!("error: {e}"),
                }
            }
        }
    }
    summarize(&reports)
}

fn lj(x1: f64, x2: f64) -> Potential {
    Potential::LennardJones { c1: 1.0, c2: 1.0, x1, x2 }
}

fn non_shifted(entries: &[(u32, f64)]) -> DefectSpec {
    DefectSpec::non_shifted(entries).expect("valid spec")
}

fn kernels() -> Outcome {
    let ctx = Context::default();
    collect(vec![
        run(ExperimentParams::Laplace { n_random: 20 }, ctx.clone()),
        run(
            ExperimentParams::Jacobi {
                n_random: 50,
                y_list: vec![0.2, 0.5, 1.0, 2.0, 5.0],
            },
            ctx,
        ),
    ])
}

fn universal_optimality() -> Outcome {
    let cfg = SumConfig::default();
    let grid = GridSpec::default();
    let a2 = Param2D::triangular(1.0);
    let mut objectives: Vec<Objective> = [0.5, 1.0, 2.0].iter().map(|&a| Objective::theta(a, cfg)).collect();
    objectives.extend([1.5, 2.0, 4.0].iter().map(|&s| Objective::zeta(2.0 * s, cfg)));
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for obj in &objectives {
        match minimize2d(obj, 1.0, &grid, Sense::Min) {
            Ok(r) => {
                let dist = (r.best_param.x - a2.x).hypot(r.best_param.y - a2.y);
                worst = worst.max(dist);
                if r.shape != ShapeClass::Triangular || dist > OPTIMUM_TOL {
                    bad.push(format!("{}: {} at distance {dist:e}", obj.name(), r.shape));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", obj.name())),
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("6 objectives, max distance to A2 {worst:e} (tol {OPTIMUM_TOL:e})")
        } else {
            bad.join("; ")
        },
    }
}

fn factorization() -> Outcome {
    let specs = [
        non_shifted(&[(2, 1.0)]),
        non_shifted(&[(2, 1.0), (3, 1.0)]),
        non_shifted(&[(2, 16.0)]),
        non_shifted(&[(2, 32.0)]),
        non_shifted(&[(2, 8.0), (3, 81.0)]),
    ];
    collect(
        specs
            .into_iter()
            .map(|spec| {
                run(
                    ExperimentParams::Thm2ip {
                        spec,
                        s: 2.0,
                        n_random: 50,
                    },
                    Context::default(),
                )
            })
            .collect(),
    )
}

fn small_alpha() -> Outcome {
    collect(vec![run(
        ExperimentParams::Thm0 {
            k: 2,
            a: 0.1,
            a_negative: -0.5,
            alphas: vec![0.02, 0.05, 0.1],
        },
        Context::default(),
    )])
}

fn centred_defects() -> Outcome {
    collect(
        [(2, vec![1, 1]), (4, vec![2, 2])]
            .into_iter()
            .map(|(k, shift)| {
                run(
                    ExperimentParams::Thm02 {
                        k,
                        shift,
                        a: 1.0,
                        n_random: 50,
                    },
                    Context::default(),
                )
            })
            .collect(),
    )
}

fn lj_regimes() -> Outcome {
    collect(vec![
        run(
            ExperimentParams::Thm3lj {
                potential: lj(3.0, 6.0),
                spec: non_shifted(&[(2, 1.0)]),
                volumes: vec![0.5, 1.0, 8.0],
            },
            Context::default(),
        ),
        run(
            ExperimentParams::Thm3lj {
                potential: lj(1.2, 2.0),
                spec: non_shifted(&[(2, 6.0)]),
                volumes: vec![0.5, 5.0, 50.0],
            },
            Context::default(),
        ),
        run(
            ExperimentParams::Thm3lj {
                potential: lj(1.2, 1.5),
                spec: non_shifted(&[(2, 10.0)]),
                volumes: vec![0.5, 1.0, 8.0],
            },
            Context::default(),
        ),
    ])
}

fn phase_transitions() -> Outcome {
    let alphas = experiments::phase::default_alphas();
    let families = [
        PhaseFamily::GaussTwoTerm { a: 0.1, factor: 2.0 },
        PhaseFamily::ShiftedTheta { a: -0.1 },
    ];
    collect(
        families
            .into_iter()
            .map(|family| {
                run(
                    ExperimentParams::Phase {
                        family,
                        alphas: alphas.clone(),
                    },
                    Context::default(),
                )
            })
            .collect(),
    )
}

fn kagome() -> Outcome {
    collect(vec![run(ExperimentParams::Kagome { radius: 30.0 }, Context::default())])
}

fn ionic() -> Outcome {
    collect(vec![run(
        ExperimentParams::Ionic {
            alphas: vec![0.5, 1.0, 2.0],
            two_s: 4.0,
        },
        Context::default(),
    )])
}

fn determinism() -> Outcome {
    let params = [
        ExperimentParams::Thm02 {
            k: 2,
            shift: vec![1, 1],
            a: 1.0,
            n_random: 20,
        },
        ExperimentParams::Ionic {
            alphas: vec![1.0],
            two_s: 4.0,
        },
    ];
    let mut bad = Vec::new();
    for p in params {
        let with = |workers: usize| {
            let mut ctx = Context::default();
            ctx.grid.workers = workers;
            run(p.clone(), ctx).map(|r| r.fingerprint())
        };
        match (with(1), with(4)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => bad.push(format!("{}: fingerprints differ", p.name())),
            (Err(e), _) | (_, Err(e)) => bad.push(format!("{}: {e}", p.name())),
        }
    }
    Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "thm02 and ionic bit-identical with 1 and 4 workers".into()
        } else {
            bad.join("; ")
        },
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("kernel suite (Laplace quadrature, Jacobi identity)", kernels),
        ("universal optimality of A2 for theta and zeta", universal_optimality),
        ("inverse-power factorization and order reversal", factorization),
        ("small-alpha Gaussian defects beat A2", small_alpha),
        ("centred defects decomposition and A2 minimality", centred_defects),
        ("Lennard-Jones regimes", lj_regimes),
        ("phase-transition shape sequence", phase_transitions),
        ("Kagome suite", kagome),
        ("ionic suite", ionic),
        ("determinism across worker counts", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.passed {
            failures += 1;
        }
        println!(
            "{} {:>2} {name} [{:.1}s]: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
