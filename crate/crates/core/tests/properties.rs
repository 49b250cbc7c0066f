use proptest::prelude::*;
use std::f64::consts::PI;

use prufer_embed::analysis::{fit_decay, sum_rule_check, Verdict};
use prufer_embed::constants::{phase_extremum, sharp_a, sharp_b, Extremum};
use prufer_embed::energy::{classify_k, gcd, Energy, KClass, Parity};
use prufer_embed::potentials::{even_q_permutation, PotentialSequence};
use prufer_embed::prufer::{prufer_from_solution, prufer_step, solution_from_prufer, BoundaryCondition, PruferState};
use prufer_embed::solver::{integrate, Integrator, Sample, Stride, Trajectory, Walker};
use prufer_embed::verify::{prufer_oracle_run, wronskian_drift};

fn synthetic(betas: &[(u64, f64)], energy: Energy) -> Trajectory {
    let samples = betas
        .iter()
        .map(|&(n, y)| Sample {
            n,
            v: 0.0,
            u_prev: 0.0,
            u_cur: 1.0,
            log_r2: y,
            theta: 0.0,
            log_rt2: y,
            log_l2: 0.0,
        })
        .collect();
    Trajectory {
        energy,
        boundary: BoundaryCondition::new(0.3).unwrap(),
        n_range: (1, betas.last().unwrap().0),
        prufer_valid: true,
        samples,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prufer_roundtrip(a in -10.0..10.0f64, b in -10.0..10.0f64, k in 0.01..0.99f64) {
        prop_assume!(a.hypot(b) > 1e-6);
        let (r, th) = prufer_from_solution(a, b, k).unwrap();
        prop_assert!((0.0..2.0).contains(&th));
        let (a2, b2) = solution_from_prufer(r, th, k);
        let scale = a.hypot(b);
        prop_assert!((a2 - a).abs() <= 1e-12 * scale);
        prop_assert!((b2 - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn solution_is_linear_in_r(r in 0.1..10.0f64, c in 0.1..10.0f64, th in 0.0..2.0f64, k in 0.01..0.99f64) {
        let (a, b) = solution_from_prufer(r, th, k);
        let (a2, b2) = solution_from_prufer(c * r, th, k);
        prop_assert!((a2 - c * a).abs() <= 1e-12 * c * r / (PI * k).sin());
        prop_assert!((b2 - c * b).abs() <= 1e-12 * c * r / (PI * k).sin());
    }

    #[test]
    fn angle_step_bound(theta in -5.0..5.0f64, k in 0.02..0.98f64, w in -0.499..0.499f64) {
        let sin_pk = (PI * k).sin();
        let st = PruferState::new(7, 0.3, theta);
        let next = prufer_step(&st, w * sin_pk, k, sin_pk).unwrap();
        let d = next.theta() - st.theta() - k;
        prop_assert!(d.abs() <= w.abs() + 1e-12, "|delta| = {} > |v| = {}", d.abs(), w.abs());
        prop_assert_eq!(next.n, 8);
    }

    #[test]
    fn step_refinement_at_half(theta in 0.05..0.95f64) {
        // first-order drift sin^2(pi theta) V/(pi sin pi k) at k = 1/2
        let v = 1e-4;
        let st = PruferState::new(0, 0.0, theta);
        let next = prufer_step(&st, v, 0.5, 1.0).unwrap();
        let drift = next.theta() - theta - 0.5;
        let first = (PI * theta).sin().powi(2) * v / PI;
        prop_assert!((drift - first).abs() < 1e-7);
    }

    #[test]
    fn free_evolution(k in 0.01..0.99f64, theta0 in 0.0..3.1f64, steps in 1u64..5000) {
        let energy = Energy::from_k(k).unwrap();
        let bc = BoundaryCondition::new(theta0).unwrap();
        let (t, _) = Integrator::new(energy, bc, steps + 1)
            .stride(Stride::Every(1))
            .run(|_, _| Ok(0.0), false)
            .unwrap();
        let first = &t.samples[0];
        let last = t.last();
        let n = steps as f64;
        prop_assert!((last.theta - first.theta - n * energy.k).abs() <= 4.0 * n * f64::EPSILON * (1.0 + last.theta.abs()));
        prop_assert!((last.log_r2 - first.log_r2).abs() <= 1e-10);
    }

    #[test]
    fn classify_recovers_reduced_fractions(q in 2u64..1000, p_raw in 1u64..1000) {
        let p = 1 + p_raw % (q - 1);
        prop_assume!(gcd(p, q) == 1);
        let class = classify_k(p as f64 / q as f64, 1000, 1e-12);
        prop_assert_eq!(class, KClass::Rational { p, q, parity: Parity::of(q) });
    }

    #[test]
    fn fit_is_shift_equivariant(beta in -4.0..1.0f64, c in -50.0..50.0f64, noise_seed in 0u64..1000) {
        let energy = Energy::from_k(0.3).unwrap();
        let sites = Stride::default().sites(100, 100_000);
        let jitter = |n: u64| 0.01 * (((n * 2654435761 + noise_seed) % 1000) as f64 / 1000.0 - 0.5);
        let base: Vec<(u64, f64)> = sites.iter().map(|&n| (n, beta * (n as f64).ln() + jitter(n))).collect();
        let shifted: Vec<(u64, f64)> = base.iter().map(|&(n, y)| (n, y + c)).collect();
        let r1 = fit_decay(&synthetic(&base, energy), 100, 100_000).unwrap();
        let r2 = fit_decay(&synthetic(&shifted, energy), 100, 100_000).unwrap();
        prop_assert!((r1.beta - r2.beta).abs() <= 1e-12);
        prop_assert!((r1.beta - beta).abs() <= 0.01);
        prop_assert!((r2.intercept - r1.intercept - c).abs() <= 1e-9);
    }

    #[test]
    fn sum_rule_is_monotone(es in prop::collection::vec(-1.99..1.99f64, 0..8), extra in -1.99..1.99f64, a in 0.01..5.0f64) {
        let before = sum_rule_check(&es, a).unwrap();
        let mut more = es.clone();
        more.push(extra);
        let after = sum_rule_check(&more, a).unwrap();
        prop_assert!(after.lhs >= before.lhs);
        prop_assert_eq!(after.rhs, before.rhs);
        prop_assert!(before.pass || !after.pass);
    }

    #[test]
    fn permutation_congruences(q_half in 1u64..60, p_raw in 1u64..1000) {
        let q = 2 * q_half;
        let p = 1 + p_raw % (q - 1);
        prop_assume!(gcd(p, q) == 1);
        let (plus, minus) = even_q_permutation(p, q).unwrap();
        for (j, &s) in plus.iter().enumerate() {
            prop_assert_eq!((p * s) % q, j as u64);
        }
        for (j, &s) in minus.iter().enumerate() {
            prop_assert_eq!((p * s) % q, q / 2 + j as u64);
        }
        let mut all: Vec<u64> = plus.iter().chain(&minus).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..q).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prufer_matches_direct_recursion(seed in any::<u64>()) {
        let s = prufer_oracle_run(seed, 10_000, 0.1).unwrap();
        prop_assert!(s.max_rel_r <= 1e-8);
        prop_assert!(s.max_abs_theta <= 1e-8);
        prop_assert_eq!(s.bound_violations, 0);
    }

    #[test]
    fn sharp_constants_match_brute_force(q in 2u64..200) {
        let (amax, _) = phase_extremum(q, Extremum::Max).unwrap();
        prop_assert!((sharp_a(q).unwrap() - amax).abs() <= 1e-8);
        if q % 2 == 1 {
            let (bmin, _) = phase_extremum(q, Extremum::Min).unwrap();
            prop_assert!((sharp_b(q).unwrap() - bmin).abs() <= 1e-8);
        }
    }

    #[test]
    fn renormalization_is_exact(seed in any::<u64>(), e in -1.9..1.9f64, theta0 in 0.0..3.1f64) {
        // 1e3 steps stay far from overflow, so the raw recursion is a valid reference
        let mut x = seed;
        let mut rnd = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 2_000_001) as f64 / 1_000_000.0 - 1.0
        };
        let v: Vec<f64> = (0..=1000).map(|n| 0.3 * rnd() / (1 + n) as f64).collect();
        let bc = BoundaryCondition::new(theta0).unwrap();
        let (mut a, mut b) = bc.initial_pair();
        let mut w = Walker::from_boundary(&bc);
        for n in 1..1000u64 {
            let c = (e - v[n as usize]) * b - a;
            a = b;
            b = c;
            w.step(e, v[n as usize]).unwrap();
            // same ratio u(n)/u(n-1) <=> the pairs are parallel
            let norm = a.hypot(b);
            prop_assert!((b * w.a - a * w.b).abs() / norm <= 1e-12);
            prop_assert!((0.5 * w.log_rt2() - norm.ln()).abs() <= 1e-12 * (1.0 + norm.ln().abs()));
        }
    }

    #[test]
    fn forward_then_backward_recovers_boundary(seed in any::<u64>(), e in -1.9..1.9f64, theta0 in 0.0..3.1f64) {
        let mut x = seed | 1;
        let mut rnd = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 2_000_001) as f64 / 1_000_000.0 - 1.0
        };
        let v: Vec<f64> = (0..=10_000).map(|n| 0.5 * rnd() / (1 + n) as f64).collect();
        let bc = BoundaryCondition::new(theta0).unwrap();
        let mut w = Walker::from_boundary(&bc);
        while w.n < 10_000 {
            w.step(e, v[w.n as usize]).unwrap();
        }
        // u(n-1) = (E - V(n)) u(n) - u(n+1), run on the unit pair
        let (mut lo, mut hi) = (w.a, w.b);
        for n in (2..=10_000u64).rev() {
            let prev = (e - v[(n - 1) as usize]) * lo - hi;
            hi = lo;
            lo = prev;
            let s = lo.hypot(hi);
            lo /= s;
            hi /= s;
        }
        let (u0, u1) = bc.initial_pair();
        let cross = (lo * u1 - hi * u0).abs();
        prop_assert!(cross <= 1e-9, "boundary direction off by {cross}");
    }

    #[test]
    fn wronskian_is_conserved(seed in any::<u64>()) {
        prop_assert!(wronskian_drift(seed, 100_000).unwrap() <= 1e-10);
    }

    #[test]
    fn zero_potential_is_not_ell2(e in -1.9..1.9f64, theta0 in 0.0..3.1f64) {
        let energy = Energy::new(e).unwrap();
        let t = integrate(&PotentialSequence::new(vec![]), energy, BoundaryCondition::new(theta0).unwrap(), 100_000, Stride::default()).unwrap();
        let r = fit_decay(&t, 100, 100_000).unwrap();
        prop_assert!(r.beta.abs() <= 0.05);
        prop_assert_eq!(r.verdict, Verdict::NotEll2);
    }
}
