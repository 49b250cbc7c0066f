//! Frozen values checked against independent computations written here.

use std::f64::consts::{FRAC_2_PI, PI};

use prufer_embed::analysis::{absence_check, default_angles, fit_decay, oscillatory_sums, sum_rule_check, Verdict};
use prufer_embed::constants::{critical_energy, phase_extremum, sharp_a, sharp_b, sine_sum, Extremum, Variant};
use prufer_embed::energy::{classify_k, energy_of_k, k_of_energy, Energy, KClass, Parity};
use prufer_embed::par::Exec;
use prufer_embed::potentials::{sign_type_run, PotentialSequence, WignerVonNeumann};
use prufer_embed::prufer::{prufer_from_solution, solution_from_prufer, BoundaryCondition};
use prufer_embed::solver::{integrate, Stride};
use prufer_embed::verify::wvn_exponents;

/// `(1/q) Σ_j |sin(2π j p/q + φ)|` maximised or minimised over a fine grid of `φ`.
fn brute_extremum(q: u64, max: bool) -> f64 {
    let grid = 200_000;
    let f = |phi: f64| (0..q).map(|j| (2.0 * PI * j as f64 / q as f64 + phi).sin().abs()).sum::<f64>() / q as f64;
    let vals = (0..grid).map(|i| f(2.0 * PI * i as f64 / grid as f64));
    if max {
        vals.fold(f64::MIN, f64::max)
    } else {
        vals.fold(f64::MAX, f64::min)
    }
}

#[test]
fn a4_is_inverse_sqrt2() {
    assert!((sharp_a(4).unwrap() - 0.707_106_78).abs() < 1e-8);
    assert!((sharp_a(4).unwrap() - brute_extremum(4, true)).abs() < 1e-8);
}

#[test]
fn b3_is_inverse_sqrt3() {
    assert!((sharp_b(3).unwrap() - 0.577_350_27).abs() < 1e-8);
    assert!((sharp_b(3).unwrap() - brute_extremum(3, false)).abs() < 1e-8);
}

#[test]
fn small_q_constants_against_grid() {
    for q in 2..=12u64 {
        let a = sharp_a(q).unwrap();
        assert!((a - brute_extremum(q, true)).abs() < 1e-8, "A_{q}");
        assert!(a <= 1.0);
        if q % 2 == 1 {
            let b = sharp_b(q).unwrap();
            assert!((b - brute_extremum(q, false)).abs() < 1e-8, "B_{q}");
            assert!(b > 0.5);
        }
    }
}

#[test]
fn sharp_constant_edge_cases() {
    assert_eq!(sharp_a(2).unwrap(), 1.0);
    assert!((sharp_a(0).unwrap() - FRAC_2_PI).abs() < 1e-16);
    assert!(sharp_a(1).is_err());
    assert!(sharp_b(4).is_err());
    let (m, phi) = phase_extremum(6, Extremum::Max).unwrap();
    assert!((m - sharp_a(6).unwrap()).abs() < 1e-10 && phi >= 0.0);
}

#[test]
fn golden_mean_is_irrational() {
    let k = 0.5 * (5f64.sqrt() - 1.0);
    // exhaustive: nearest numerator for every denominator up to 1000
    let closest = (2..=1000u64)
        .map(|q| {
            let p = (k * q as f64).round();
            (k - p / q as f64).abs()
        })
        .fold(f64::MAX, f64::min);
    assert!(closest > 1e-12, "closest rational within {closest}");
    assert_eq!(classify_k(k, 1000, 1e-12), KClass::Irrational);
}

#[test]
fn classification_examples() {
    assert_eq!(
        classify_k(0.5, 100, 1e-12),
        KClass::Rational { p: 1, q: 2, parity: Parity::Even }
    );
    assert_eq!(
        classify_k(1.0 / 3.0 + 1e-15, 100, 1e-12),
        KClass::Rational { p: 1, q: 3, parity: Parity::Odd }
    );
}

#[test]
fn quasi_momentum_examples() {
    assert_eq!(k_of_energy(0.0).unwrap(), 0.5);
    assert!((k_of_energy(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let k = k_of_energy(-1.2345).unwrap();
    assert!((2.0 * (PI * k).cos() + 1.2345).abs() < 1e-14);
    for e in [-1.99, -0.3, 0.7, 1.5] {
        let back = energy_of_k(k_of_energy(e).unwrap());
        assert!((back - e).abs() <= 4.0 * f64::EPSILON * 2.0);
    }
    assert!(k_of_energy(2.0).is_err());
}

#[test]
fn prufer_reference_pairs() {
    for k in [0.1, 0.23, 0.5, 0.8] {
        let (r, th) = prufer_from_solution(0.0, 1.0, k).unwrap();
        assert!((r * (PI * k).sin() - 1.0).abs() < 1e-14);
        assert!((th.rem_euclid(1.0) - k).abs() < 1e-14);
    }
    // at k = 1/2 the shear is the identity
    let (r, th) = prufer_from_solution(0.6, 0.8, 0.5).unwrap();
    assert!((r - 1.0).abs() < 1e-15);
    assert!(((PI * (th - 0.5)).sin() - 0.6).abs() < 1e-15);
    let (a, b) = solution_from_prufer(1.0 / (PI * 0.23f64).sin(), 0.23, 0.23);
    assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-14);
}

#[test]
fn sine_sum_direct() {
    for (a, x, n) in [(0.3, 1.1, 17u64), (-2.0, 0.0, 5), (1.0, 2.0 * PI, 9), (0.7, 1e-6, 40)] {
        let direct: f64 = (0..n).map(|j| (a + j as f64 * x).sin()).sum();
        assert!((sine_sum(a, x, n) - direct).abs() < 1e-10);
    }
}

#[test]
fn critical_window_for_half_filling() {
    // a = 0.5, q = 2: 2 sqrt(1 - a^2) = sqrt(3)
    assert!((critical_energy(0.5, 2, Variant::A).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    assert!(critical_energy(1.0, 2, Variant::A).is_err());
}

#[test]
fn sum_rule_examples() {
    let r = sum_rule_check(&[], 0.3).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.pass);
    assert!(sum_rule_check(&[1.999_999], 0.01).unwrap().pass);
    assert!(sum_rule_check(&[2.0], 1.0).is_err());
}

#[test]
fn sign_type_example_rate() {
    // (a/sin πk)(2/π) = 2
    let energy = Energy::from_k(0.5 * (5f64.sqrt() - 1.0)).unwrap();
    let a = PI * energy.sin_pk();
    let run = sign_type_run(a, energy, BoundaryCondition::new(1.0).unwrap(), None, 200_000, Stride::default()).unwrap();
    let r = fit_decay(&run.trajectory, 1_000, 200_000).unwrap();
    assert!((r.beta + 2.0).abs() < 0.1, "beta = {}", r.beta);
    assert_eq!(r.verdict, Verdict::Ell2);
}

#[test]
fn frozen_sign_type_potential_only_decays_at_its_angle() {
    let energy = Energy::from_k(0.5 * (5f64.sqrt() - 1.0)).unwrap();
    let a = 1.5 * PI * energy.sin_pk();
    let matched = PI / 8.0;
    let n_max = 200_000;
    let run = sign_type_run(a, energy, BoundaryCondition::new(matched).unwrap(), None, n_max, Stride::default()).unwrap();
    let pot = run.potential;
    let angles = default_angles(8);
    assert!(angles.contains(&matched));
    let report = absence_check(energy, a, &angles, (1_000, n_max), Exec::available(), |bc| {
        integrate(&pot, energy, bc, n_max, Stride::default())
    });
    assert_eq!(report.ell2_angles, vec![matched]);
    assert!(!report.all_not_ell2);
    for r in &report.results {
        if r.theta0 != matched {
            assert_eq!(r.verdict, Some(Verdict::NotEll2), "angle {}", r.theta0);
        }
    }
}

#[test]
fn wvn_subordinate_exponent_within_five_percent() {
    for (k, gamma) in [(0.3, 2.0), (0.42, 1.5)] {
        let (sub, dom) = wvn_exponents(k, gamma, 10_000_000, (1_000, 1_000_000)).unwrap();
        assert!((sub + gamma).abs() <= 0.05 * gamma, "k={k}: subordinate {sub}");
        assert!((dom - gamma).abs() <= 0.05 * gamma, "k={k}: dominant {dom}");
    }
}

#[test]
fn free_oscillatory_sum_cancels() {
    let n_max = 1_000_000;
    let energy = Energy::from_k(0.5 * (5f64.sqrt() - 1.0)).unwrap();
    let t = integrate(&PotentialSequence::new(vec![]), energy, BoundaryCondition::new(0.4).unwrap(), n_max, Stride::Every(1)).unwrap();
    let r = oscillatory_sums(&t, None, n_max).unwrap();
    // direct oracle: θ(t) = θ(1) + (t − 1)k exactly for V = 0
    let th1 = t.samples[0].theta;
    let direct: f64 = (1..=n_max).map(|s| (4.0 * PI * (th1 + (s - 1) as f64 * energy.k)).cos() / (1 + s) as f64).sum();
    assert!((r.s1.last().unwrap().1 - direct).abs() < 1e-6);
    assert!(r.ratio1 < 0.1, "ratio {}", r.ratio1);
}

#[test]
fn oscillatory_sums_on_wvn_background() {
    let n_max = 1_000_000;
    let wave = WignerVonNeumann { c: 1.0, k: 0.3, phi: 0.0, b: -10 };
    let t1 = integrate(&wave, Energy::new(0.5).unwrap(), BoundaryCondition::new(0.4).unwrap(), n_max, Stride::Every(1)).unwrap();
    let t2 = integrate(&wave, Energy::new(-1.1).unwrap(), BoundaryCondition::new(1.3).unwrap(), n_max, Stride::Every(1)).unwrap();
    let r = oscillatory_sums(&t1, Some(&t2), n_max).unwrap();
    assert!(r.ratio1 <= 0.2, "S1 ratio {}", r.ratio1);
    assert!(r.ratio2.unwrap() <= 0.2, "S2 ratio {:?}", r.ratio2);
}

#[test]
fn oscillatory_sum_gates() {
    let n = 1000;
    let pot = PotentialSequence::new(vec![]);
    let mk = |e: f64| integrate(&pot, Energy::new(e).unwrap(), BoundaryCondition::new(0.4).unwrap(), n, Stride::Every(1)).unwrap();
    let (t1, t2) = (mk(0.7), mk(-0.7));
    assert!(oscillatory_sums(&t1, Some(&t2), n).is_err());
    assert!(oscillatory_sums(&mk(0.0), None, n).is_err());
    let sparse = integrate(&pot, Energy::new(0.7).unwrap(), BoundaryCondition::new(0.4).unwrap(), n, Stride::default()).unwrap();
    assert!(oscillatory_sums(&sparse, None, n).is_err());
}
