//! Decay fits, ℓ² verdicts, absence scans, the sum rule and oscillatory sums.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::sharp_a;
use crate::energy::{Energy, KClass};
use crate::error::{Error, Result};
use crate::par::{par_map, Exec};
use crate::prufer::BoundaryCondition;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ell2,
    NotEll2,
    Inconclusive,
}

/// Thresholds turning a fitted slope into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictPolicy {
    /// Slope of `ln R²` against `ln n` separating summable from non-summable.
    pub cutoff: f64,
    /// Number of standard errors the slope must clear the cutoff by.
    pub sigma_guard: f64,
    /// Largest relative growth of `Σ R̃²` over the last decade for an ℓ² verdict.
    pub tail_tol: f64,
    pub min_samples: usize,
}

impl Default for VerdictPolicy {
    fn default() -> Self {
        VerdictPolicy {
            cutoff: -1.0,
            sigma_guard: 2.0,
            tail_tol: 0.01,
            min_samples: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Prufer,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Slope of `ln R²` against `ln n`.
    pub beta: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Slope for `R̃` itself, `β/2`.
    pub beta_rtilde: f64,
    pub fit_range: (u64, u64),
    pub n_samples: usize,
    pub channel: Channel,
    /// `(n, ln Σ_{m≤n} R̃(m)²)` at every sample in the fit range.
    pub l2_partial: Vec<(u64, f64)>,
    /// `(S(n_max) − S(n_max/10))/S(n_max)`.
    pub tail_increment: f64,
    pub verdict: Verdict,
    pub policy: VerdictPolicy,
}

/// Least squares `y = α + βx`: `(β, α, stderr of β)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - alpha - beta * a).powi(2)).sum();
    let stderr = if x.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (beta, alpha, stderr)
}

pub fn fit_decay(t: &Trajectory, n_min: u64, n_max: u64) -> Result<DecayReport> {
    fit_decay_with(t, n_min, n_max, &VerdictPolicy::default())
}

pub fn fit_decay_with(t: &Trajectory, n_min: u64, n_max: u64, policy: &VerdictPolicy) -> Result<DecayReport> {
    if n_min == 0 || n_max < 10 * n_min {
        return Err(Error::domain(format!("fit range [{n_min}, {n_max}] must span a decade")));
    }
    let channel = if t.prufer_valid { Channel::Prufer } else { Channel::Direct };
    let in_range: Vec<_> = t.samples.iter().filter(|s| s.n >= n_min && s.n <= n_max).collect();
    if in_range.len() < policy.min_samples {
        return Err(Error::InsufficientSamples {
            found: in_range.len(),
            required: policy.min_samples,
        });
    }
    let x: Vec<f64> = in_range.iter().map(|s| (s.n as f64).ln()).collect();
    let y: Vec<f64> = in_range
        .iter()
        .map(|s| match channel {
            Channel::Prufer => s.log_r2,
            Channel::Direct => s.log_rt2,
        })
        .collect();
    let (beta, intercept, stderr) = ols(&x, &y);

    let end = *in_range.last().unwrap();
    let tail_increment = match t.at_or_before(end.n / 10) {
        Some(s) => -(s.log_l2 - end.log_l2).exp_m1(),
        None => 1.0,
    };
    let verdict = if beta + policy.sigma_guard * stderr < policy.cutoff && tail_increment < policy.tail_tol {
        Verdict::Ell2
    } else if beta - policy.sigma_guard * stderr > policy.cutoff {
        Verdict::NotEll2
    } else {
        Verdict::Inconclusive
    };
    Ok(DecayReport {
        beta,
        stderr,
        intercept,
        beta_rtilde: 0.5 * beta,
        fit_range: (n_min, n_max),
        n_samples: in_range.len(),
        channel,
        l2_partial: in_range.iter().map(|s| (s.n, s.log_l2)).collect(),
        tail_increment,
        verdict,
        policy: *policy,
    })
}

/// `64` boundary angles `πi/64`.
pub fn default_angles(count: usize) -> Vec<f64> {
    (0..count).map(|i| PI * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleResult {
    pub theta0: f64,
    pub beta: Option<f64>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsenceReport {
    pub e: f64,
    pub a: f64,
    /// Whether `E` lies in the window where coupling `a` is sub-critical.
    pub in_window: bool,
    pub results: Vec<AngleResult>,
    pub all_not_ell2: bool,
    pub worst_beta: f64,
    /// `−a·A_q/sin πk − 0.1`.
    pub beta_floor: f64,
    pub worst_ok: bool,
    /// Angles whose solution was judged ℓ².
    pub ell2_angles: Vec<f64>,
}

/// Run `build` at each boundary angle and fit each trajectory over `fit`.
pub fn absence_check<F>(
    energy: Energy,
    a: f64,
    angles: &[f64],
    fit: (u64, u64),
    exec: Exec,
    build: F,
) -> AbsenceReport
where
    F: Fn(BoundaryCondition) -> Result<Trajectory> + Sync + Send,
{
    let q = match energy.class {
        KClass::Irrational => 0,
        KClass::Rational { q, .. } => q,
    };
    let a_q = sharp_a(q).unwrap_or(f64::NAN);
    let in_window = crate::constants::critical_energy(a, q, crate::constants::Variant::A)
        .map(|ec| energy.e.abs() < ec)
        .unwrap_or(false);
    let results = par_map(exec, angles, |&theta0| {
        let out = BoundaryCondition::new(theta0)
            .and_then(&build)
            .and_then(|t| fit_decay(&t, fit.0, fit.1));
        match out {
            Ok(r) => AngleResult {
                theta0,
                beta: Some(r.beta),
                verdict: Some(r.verdict),
                error: None,
            },
            Err(e) => AngleResult {
                theta0,
                beta: None,
                verdict: None,
                error: Some(e.to_string()),
            },
        }
    });
    let all_not_ell2 = results.iter().all(|r| r.verdict == Some(Verdict::NotEll2));
    let worst_beta = results.iter().filter_map(|r| r.beta).fold(f64::INFINITY, f64::min);
    let beta_floor = -(a * a_q / energy.sin_pk()) - 0.1;
    let ell2_angles = results
        .iter()
        .filter(|r| r.verdict == Some(Verdict::Ell2))
        .map(|r| r.theta0)
        .collect();
    AbsenceReport {
        e: energy.e,
        a,
        in_window,
        worst_ok: worst_beta >= beta_floor,
        results,
        all_not_ell2,
        worst_beta,
        beta_floor,
        ell2_angles,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `Σ(4 − E_i²) ≤ 4a² + 4 min{1, a}`.
pub fn sum_rule_check(energies: &[f64], a: f64) -> Result<SumRule> {
    if let Some(e) = energies.iter().find(|e| !(e.abs() < 2.0)) {
        return Err(Error::domain(format!("energy {e} outside (-2, 2)")));
    }
    let lhs: f64 = energies.iter().map(|e| 4.0 - e * e).sum();
    let rhs = 4.0 * a * a + 4.0 * a.min(1.0);
    Ok(SumRule { lhs, rhs, pass: lhs <= rhs })
}

/// `max |n·V(n)|` over `lo ≤ n ≤ hi`, an estimate of `limsup |nV(n)|`.
pub fn measured_coupling(values: &[f64], lo: u64, hi: u64) -> f64 {
    let hi = hi.min(values.len() as u64 - 1);
    (lo..=hi).map(|n| (n as f64 * values[n as usize]).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryReport {
    /// `(n, S1(n))` at every site.
    pub s1: Vec<(u64, f64)>,
    pub s2: Option<Vec<(u64, f64)>>,
    /// `sup |S(n)|/max(1, ln n)` over `√n_max ≤ n ≤ n_max`.
    pub ratio1: f64,
    pub ratio2: Option<f64>,
}

fn thetas(t: &Trajectory, n_max: u64) -> Result<Vec<f64>> {
    if !t.prufer_valid {
        return Err(Error::domain("oscillatory sums need a valid Prüfer channel"));
    }
    let th: Vec<f64> = t.samples.iter().take_while(|s| s.n <= n_max).map(|s| s.theta).collect();
    let consecutive = t.samples.iter().take(th.len()).enumerate().all(|(i, s)| s.n == i as u64 + 1);
    if !consecutive || th.len() as u64 != n_max {
        return Err(Error::domain("oscillatory sums need every site 1..=n_max recorded"));
    }
    Ok(th)
}

fn diagnostic(s: &[(u64, f64)], n_max: u64) -> f64 {
    let lo = (n_max as f64).sqrt() as u64;
    s.iter()
        .filter(|(n, _)| *n >= lo)
        .map(|(n, v)| v.abs() / (*n as f64).ln().max(1.0))
        .fold(0.0, f64::max)
}

/// `S1(n) = Σ_{t≤n} cos(4πθ(t, E1))/(1 + t)` and, with a second trajectory,
/// `S2(n) = Σ_{t≤n} sin 2πθ(t, E1)·sin 2πθ(t, E2)/(1 + t)`.
pub fn oscillatory_sums(t1: &Trajectory, t2: Option<&Trajectory>, n_max: u64) -> Result<OscillatoryReport> {
    let k1 = t1.energy.k;
    if (2.0 * k1 - 1.0).abs() < 1e-12 {
        return Err(Error::domain("S1 is resonant at k = 1/2"));
    }
    if let Some(t2) = t2 {
        let k2 = t2.energy.k;
        if (k1 - k2).abs() < 1e-12 || (k1 + k2 - 1.0).abs() < 1e-12 {
            return Err(Error::domain(format!("k1 = {k1}, k2 = {k2} violate k1 != k2, k1 + k2 != 1")));
        }
    }
    let th1 = thetas(t1, n_max)?;
    let mut acc = 0.0;
    let s1: Vec<(u64, f64)> = th1
        .iter()
        .enumerate()
        .map(|(i, th)| {
            let n = i as u64 + 1;
            acc += (4.0 * PI * th).cos() / (1 + n) as f64;
            (n, acc)
        })
        .collect();
    let ratio1 = diagnostic(&s1, n_max);
    let (s2, ratio2) = match t2 {
        Some(t2) => {
            let th2 = thetas(t2, n_max)?;
            let mut acc = 0.0;
            let s2: Vec<(u64, f64)> = th1
                .iter()
                .zip(&th2)
                .enumerate()
                .map(|(i, (a, b))| {
                    let n = i as u64 + 1;
                    acc += (2.0 * PI * a).sin() * (2.0 * PI * b).sin() / (1 + n) as f64;
                    (n, acc)
                })
                .collect();
            let r = diagnostic(&s2, n_max);
            (Some(s2), Some(r))
        }
        None => (None, None),
    };
    Ok(OscillatoryReport { s1, s2, ratio1, ratio2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (b, a, s) = ols(&x, &y);
        assert!((b + 3.0).abs() < 1e-12);
        assert!((a - 2.0).abs() < 1e-12);
        assert!(s < 1e-12);
    }

    #[test]
    fn sum_rule_examples() {
        let r = sum_rule_check(&[], 0.3).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);
        assert!(sum_rule_check(&[1.999_999], 1e-3).unwrap().pass);
        assert!(sum_rule_check(&[2.0], 1.0).is_err());
    }

    #[test]
    fn default_angles_uniform() {
        let a = default_angles(64);
        assert_eq!(a.len(), 64);
        assert_eq!(a[0], 0.0);
        assert!((a[32] - PI / 2.0).abs() < 1e-15);
    }
}
