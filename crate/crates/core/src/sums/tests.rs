use super::*;
use crate::lattice::{rotation2d, NamedLattice, Param2D};
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> SumConfig {
    SumConfig::default()
}

fn named(n: NamedLattice) -> Lattice {
    Lattice::named(n, 1.0).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Lattice {
    let x: f64 = rng.gen_range(0.0..0.5);
    let y: f64 = rng.gen_range((1.0 - x * x).sqrt()..2.5);
    Param2D::raw(x, y, 1.0).to_lattice().unwrap()
}

/// Brute-force `Σ w(m) f(|p + c|²)` over a coordinate box.
fn brute(l: &Lattice, c: &[f64], n: i64, alternating: bool, f: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for i in -n..=n {
        for j in -n..=n {
            let p = l.point(&[i, j]);
            let n2 = (p[0] + c[0]).powi(2) + (p[1] + c[1]).powi(2);
            if n2 < 1e-24 {
                continue;
            }
            let w = if alternating && (i + j).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            s += w * f(n2);
        }
    }
    s
}

#[test]
fn theta_of_z2_factorizes() {
    // θ_Z(1) by direct summation over |n| ≤ 10
    let one_d: f64 = (-10i32..=10).map(|n| (-std::f64::consts::PI * (n * n) as f64).exp()).sum();
    assert_relative_eq!(one_d, 1.086_434_811_213_308, max_relative = 1e-15);
    let z2 = named(NamedLattice::Z2);
    let t = theta(&z2, 1.0, &cfg()).unwrap();
    assert!((t.value - one_d * one_d).abs() < 1e-12);
    let e = energy(&z2, &Potential::Gaussian { alpha: 1.0 }, &cfg()).unwrap();
    assert!((e.value - (one_d * one_d - 1.0)).abs() < 1e-12);
    let big = theta(&z2, 50.0, &cfg()).unwrap();
    assert!(big.value - 1.0 < 1e-60);
}

#[test]
fn jacobi_on_z2_and_random() {
    let z2 = named(NamedLattice::Z2);
    let y = 2.0;
    let lhs = theta(&z2, 1.0 / y, &cfg()).unwrap().value;
    let rhs = y * theta(&z2, y, &cfg()).unwrap().value;
    assert!((lhs - rhs).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let l = random_unit(&mut rng);
        for &a in &[0.3, 0.9, 2.7] {
            let direct = theta_direct(&l, a, false, &cfg()).unwrap().value;
            let dual = theta_direct(&l, a, true, &cfg()).unwrap().value;
            assert!((direct - dual).abs() < 1e-11, "{direct} vs {dual}");
        }
    }
}

#[test]
fn theta_excess_is_accurate_at_small_alpha() {
    let a2 = named(NamedLattice::A2);
    let alpha = 0.05;
    let ex = theta_excess(&a2, alpha, &cfg()).unwrap().value;
    // leading dual shell: six vectors of squared norm 2/√3
    let lead = 6.0 / alpha * (-std::f64::consts::PI * 2.0 / 3f64.sqrt() / alpha).exp();
    assert_relative_eq!(ex, lead, max_relative = 1e-6);
    let full = theta(&a2, alpha, &cfg()).unwrap().value;
    assert!((full - 1.0 / alpha - ex).abs() < 1e-12);
}

#[test]
fn zeta_z2_matches_dirichlet_beta_product() {
    let catalan = 0.915_965_594_177_219;
    let want = 4.0 * std::f64::consts::PI.powi(2) / 6.0 * catalan;
    let z2 = named(NamedLattice::Z2);
    let v = epstein_zeta(&z2, 4.0, &cfg()).unwrap();
    assert_relative_eq!(v.value, want, max_relative = 1e-12);
    assert!(v.tail_bound <= 1e-10);
}

#[test]
fn zeta_modes_agree() {
    let a2 = named(NamedLattice::A2);
    let fast = epstein_zeta(&a2, 4.0, &cfg()).unwrap();
    // the direct mode converges algebraically; 1e-9 needs about 10⁷ points
    let slow_cfg = SumConfig {
        tol: 1e-9,
        zeta_mode: ZetaMode::Direct,
        ..cfg()
    };
    let slow = epstein_zeta(&a2, 4.0, &slow_cfg).unwrap();
    assert!(slow.tail_bound <= 1e-9);
    assert!((fast.value - slow.value).abs() < 1e-9, "{} vs {}", fast.value, slow.value);
}

#[test]
fn zeta_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let l = random_unit(&mut rng);
        // s = 4: tail beyond the box is below 1e-9
        let b = brute(&l, &[0.0, 0.0], 400, false, |r| r.powi(-4));
        let v = epstein_zeta(&l, 8.0, &cfg()).unwrap().value;
        assert!((b - v).abs() < 1e-9, "{b} vs {v}");
    }
}

#[test]
fn shifted_power_sum_against_brute_force() {
    let l = Param2D::raw(0.2, 1.3, 1.0).to_lattice().unwrap();
    let c = l.reduce2d().unwrap().cell_center();
    let atoms = Potential::InversePower { s: 4.0 }.atoms();
    let v = energy_shifted(&l, &c, &atoms, &cfg()).unwrap().value;
    let b = brute(&l, &c, 400, false, |r| r.powi(-4));
    assert!((b - v).abs() < 1e-9, "{b} vs {v}");
    // a shift by a lattice vector gives back the unshifted sum
    let u = l.point(&[1, -2]);
    let back = energy_shifted(&l, &u, &atoms, &cfg()).unwrap().value;
    let z = epstein_zeta(&l, 8.0, &cfg()).unwrap().value;
    assert!((back - z).abs() < 1e-10);
}

#[test]
fn zeta_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = random_unit(&mut rng);
    let t: f64 = 1.7;
    let a = epstein_zeta(&l, 5.0, &SumConfig::with_tol(1e-14)).unwrap().value;
    let b = epstein_zeta(&l.scaled(t), 5.0, &SumConfig::with_tol(1e-14)).unwrap().value;
    assert_relative_eq!(b, t.powf(-5.0) * a, max_relative = 1e-12);
}

#[test]
fn shifted_theta() {
    let z2 = named(NamedLattice::Z2);
    let t0 = theta_shifted(&z2, &[0.0, 0.0], 1.3, &cfg()).unwrap().value;
    assert!((t0 - theta(&z2, 1.3, &cfg()).unwrap().value).abs() < 1e-13);
    // θ_{Z²+(½,½)}(α) = (Σ_n e^{−πα(n+½)²})²
    let alpha: f64 = 1.0;
    let half: f64 = (-30i32..30)
        .map(|n| (-std::f64::consts::PI * alpha * (n as f64 + 0.5).powi(2)).exp())
        .sum();
    let c = [0.5, 0.5];
    let tight = SumConfig::with_tol(1e-13);
    let v = theta_shifted(&z2, &c, alpha, &tight).unwrap().value;
    assert!((v - half * half).abs() < 1e-12);
    // small α goes through the dual side
    let v = theta_shifted(&z2, &c, 0.2, &tight).unwrap().value;
    let half: f64 = (-60i32..60)
        .map(|n| (-std::f64::consts::PI * 0.2 * (n as f64 + 0.5).powi(2)).exp())
        .sum();
    assert!((v - half * half).abs() < 1e-12);
}

#[test]
fn alternating_theta_product_structure() {
    let z2 = named(NamedLattice::Z2);
    for &alpha in &[0.3, 1.0, 2.0] {
        let one: f64 = (-40i32..=40)
            .map(|n| {
                let s = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                s * (-std::f64::consts::PI * alpha * (n * n) as f64).exp()
            })
            .sum();
        let v = theta_alternating(&z2, alpha, &SumConfig::with_tol(1e-13)).unwrap().value;
        assert!((v - one * one).abs() < 1e-12, "alpha {alpha}: {v} vs {}", one * one);
    }
}

#[test]
fn alternating_theta_defect_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tight = SumConfig::with_tol(1e-13);
    for _ in 0..5 {
        let l = random_unit(&mut rng).reduce2d().unwrap();
        let alpha = 0.8;
        let u = l.columns();
        let two = l.scaled(2.0);
        let lhs = theta_alternating(&l, alpha, &tight).unwrap().value;
        let rhs = theta(&l, alpha, &tight).unwrap().value
            - 2.0 * theta_shifted(&two, &u[0], alpha, &tight).unwrap().value
            - 2.0 * theta_shifted(&two, &u[1], alpha, &tight).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn defect_energy_identities() {
    let a2 = named(NamedLattice::A2);
    let ip = Potential::InversePower { s: 2.0 };
    let k = DefectSpec::non_shifted(&[(2, 1.0)]).unwrap();
    let e = energy_defect(&a2, &ip, &k, &cfg()).unwrap().value;
    let z = epstein_zeta(&a2, 4.0, &cfg()).unwrap().value;
    assert_relative_eq!(e, (1.0 - 2f64.powi(-4)) * z, max_relative = 1e-12);

    let fk = Potential::defect_modified(ip.clone(), k.clone()).unwrap();
    let direct = energy(&a2, &fk, &cfg()).unwrap().value;
    assert!((direct - e).abs() < 1e-12);

    // rock salt: signed checkerboard sum
    let z2 = named(NamedLattice::Z2);
    let rock = DefectSpec::shifted(2, 2.0, vec![vec![1, 0], vec![0, 1]]).unwrap();
    let g = Potential::Gaussian { alpha: 1.0 };
    let v = energy_defect(&z2, &g, &rock, &cfg()).unwrap().value;
    let b = brute(&z2, &[0.0, 0.0], 20, true, |r| g.eval(r));
    assert!((v - b).abs() < 1e-11);
    let s3 = Potential::InversePower { s: 3.0 };
    let v = energy_defect(&z2, &s3, &rock, &cfg()).unwrap().value;
    // alternating sum converges fast; compare with a large brute-force box
    let b = brute(&z2, &[0.0, 0.0], 300, true, |r| r.powi(-3));
    assert!((v - b).abs() < 1e-9, "{v} vs {b}");
}

#[test]
fn shifted_defect_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = Potential::Gaussian { alpha: 0.7 };
    let spec = DefectSpec::shifted(2, 1.0, vec![vec![1, 1]]).unwrap();
    for _ in 0..5 {
        let l = random_unit(&mut rng);
        let e = energy_defect(&l, &g, &spec, &cfg()).unwrap().value;
        let r = l.reduce2d().unwrap();
        let c = r.cell_center();
        let rhs = energy(&l, &g, &cfg()).unwrap().value
            - energy_shifted(&r, &c, &g.dilated_atoms(2.0), &cfg()).unwrap().value;
        assert!((e - rhs).abs() < 1e-11);
    }
    let trivial = DefectSpec::shifted(2, 1.0, vec![vec![2, 0]]);
    assert!(trivial.is_err());
}

#[test]
fn invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lj = Potential::LennardJones {
        c1: 1.0,
        c2: 1.0,
        x1: 3.0,
        x2: 6.0,
    };
    let y = Potential::YukawaPower { sigma: 1.0, s: 2.0 };
    for _ in 0..4 {
        let l = random_unit(&mut rng);
        let rot = l.transformed(&rotation2d(rng.gen_range(0.0..6.0))).unwrap();
        let uni = l
            .rebased(&nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]))
            .unwrap();
        for f in [&lj, &y, &Potential::Gaussian { alpha: 0.4 }] {
            let a = energy(&l, f, &cfg()).unwrap().value;
            let b = energy(&rot, f, &cfg()).unwrap().value;
            let c = energy(&uni, f, &cfg()).unwrap().value;
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
            assert!((a - c).abs() < 1e-12 * a.abs().max(1.0), "{a} {c}");
        }
    }
}

#[test]
fn certified_error_shrinks_with_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = random_unit(&mut rng);
    let y = Potential::YukawaPower { sigma: 0.5, s: 1.5 };
    for f in [&y, &Potential::InversePower { s: 1.5 }, &Potential::Gaussian { alpha: 0.3 }] {
        let coarse = energy(&l, f, &SumConfig::with_tol(1e-6)).unwrap();
        let fine = energy(&l, f, &SumConfig::with_tol(1e-8)).unwrap();
        assert!(coarse.tail_bound <= 1e-6);
        assert!((coarse.value - fine.value).abs() <= coarse.tail_bound + fine.tail_bound);
    }
}

#[test]
fn cap_exceeded_reports_partial() {
    let a2 = named(NamedLattice::A2);
    let c = SumConfig {
        tol: 1e-10,
        max_points: 1000,
        zeta_mode: ZetaMode::Direct,
    };
    match epstein_zeta(&a2, 4.0, &c) {
        Err(Error::CapExceeded { cap, partial }) => {
            assert_eq!(cap, 1000);
            let p = partial.unwrap();
            assert!(p.tail_bound > 1e-10 && p.points_used <= 1000);
        }
        other => panic!("expected cap error, got {other:?}"),
    }
}

#[test]
fn bit_identical_reruns() {
    let l = Param2D::raw(0.31, 1.7, 1.0).to_lattice().unwrap();
    let f = Potential::LennardJones {
        c1: 1.0,
        c2: 2.0,
        x1: 2.5,
        x2: 4.0,
    };
    let a = energy(&l, &f, &cfg()).unwrap().value;
    let b = energy(&l, &f, &cfg()).unwrap().value;
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn materialized_patches() {
    let a2 = named(NamedLattice::A2);
    let kag = DefectSpec::shifted(2, 1.0, vec![vec![1, 1]]).unwrap();
    let ps = materialize(&a2, &kag, 4.0, 100_000).unwrap();
    assert!(ps.points.iter().all(|p| p.charge == 1.0));
    assert!(ps.points.iter().any(|p| p.position.iter().all(|v| *v == 0.0)));
    let all = crate::enumerate::enumerate(&a2, &[0.0, 0.0], 4.0, 100_000).unwrap();
    assert!(ps.points.len() * 4 < all.len() * 3 + 12);

    let z2 = named(NamedLattice::Z2);
    let rock = DefectSpec::shifted(2, 2.0, vec![vec![1, 0], vec![0, 1]]).unwrap();
    let ps = materialize(&z2, &rock, 3.0, 100_000).unwrap();
    for p in &ps.points {
        let parity = (p.position[0].round() + p.position[1].round()) as i64;
        let want = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        assert_eq!(p.charge, want);
    }
    let plain = materialize(&z2, &DefectSpec::empty(), 3.0, 100_000).unwrap();
    assert_eq!(plain.points.len(), crate::enumerate::enumerate(&z2, &[0.0, 0.0], 3.0, 1000).unwrap().len());

    // patch sum agrees with the defect energy within the patch tail bound
    let g = Potential::Gaussian { alpha: 1.0 };
    let ps = materialize(&a2, &kag, 6.0, 100_000).unwrap();
    let patch = energy_pointset(&ps, &g);
    let full = energy_defect(&a2, &g, &kag, &cfg()).unwrap();
    let bound = pointset_tail_bound(&ps, &g).unwrap();
    assert!((patch - full.value).abs() <= bound + full.tail_bound);
    assert!(ps.to_svg().unwrap().contains("<circle"));
    assert!(ps.to_csv().starts_with("x,y,charge\n"));
}

#[test]
fn pointset_trivial_cases() {
    let z2 = named(NamedLattice::Z2);
    let mut ps = materialize(&z2, &DefectSpec::empty(), 0.5, 1000).unwrap();
    ps.points.clear();
    assert_eq!(energy_pointset(&ps, &Potential::InversePower { s: 2.0 }), 0.0);
    ps.points.push(ChargedPoint {
        position: vec![1.0, 0.0],
        charge: -1.0,
    });
    assert_eq!(energy_pointset(&ps, &Potential::InversePower { s: 2.0 }), -1.0);
}

#[test]
fn centered_theta_ignores_basis() {
    let z2 = Lattice::named(NamedLattice::Z2, 1.0).unwrap();
    let skew = Lattice::from_columns(&[vec![1.0, 0.0], vec![3.0, 1.0]]).unwrap();
    let a = theta_centered(&skew, 0.7, &cfg()).unwrap().value;
    let b = theta_shifted(&z2, &[0.5, 0.5], 0.7, &cfg()).unwrap().value;
    assert!((a - b).abs() < 1e-12);
}
