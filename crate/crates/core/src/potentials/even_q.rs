//! Almost sign-type potentials for `k = p/q` with `q` even.
//!
//! Each period of `q` sites starting at `n_abs` carries numerators `±a` placed
//! so the free angle `θ_in + jk` sits in the upper half `(0, 1/2)` where the
//! sign is `+` and in the lower half where it is `−`. One numerator per period
//! is re-solved so the first-order angle drift over the period cancels
//! exactly, which keeps `θ` locked near `1/(2q)` at every period start.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::PotentialSequence;
use crate::energy::{mod_inverse, Energy};
use crate::error::{Error, Result};
use crate::prufer::{self, BoundaryCondition, PruferState};
use crate::solver::{Integrator, LargeStep, Stride, Trajectory};

/// Margin used by the phase setter when none is given.
pub const DEFAULT_SETTER_MARGIN: f64 = 1e-3;
/// How many times `n0` is shifted when the phase setter is singular.
const MAX_SETTER_SHIFTS: u64 = 16;

/// The single value `V` moving `θ_current` to `θ_target` in one step:
/// `V = sin πk·(cot πθ_current − cot(πθ_target − πk))`.
pub fn even_q_phase_setter(theta_current: f64, theta_target: f64, k: f64, margin: f64) -> Result<f64> {
    let s_cur = (PI * theta_current).sin();
    let s_tgt = (PI * (theta_target - k)).sin();
    if s_cur.abs() < margin || s_tgt.abs() < margin {
        return Err(Error::PhaseSetterSingular {
            theta_current,
            theta_target,
        });
    }
    let cot = |x: f64| x.cos() / x.sin();
    Ok((PI * k).sin() * (cot(PI * theta_current) - cot(PI * (theta_target - k))))
}

/// Site offsets `p⁺_j = (j−1)p⁻¹` and `p⁻_j = (q/2 + j − 1)p⁻¹` (mod q), `j = 1..q/2`.
pub fn even_q_permutation(p: u64, q: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if q < 2 || q % 2 != 0 || p == 0 || p >= q {
        return Err(Error::domain(format!("{p}/{q} is not a fraction in (0,1) with even q")));
    }
    let inv = mod_inverse(p, q).ok_or_else(|| Error::domain(format!("gcd({p}, {q}) != 1")))?;
    let half = q / 2;
    let plus = (0..half).map(|j| (j * inv) % q).collect();
    let minus = (0..half).map(|j| ((half + j) * inv) % q).collect();
    Ok((plus, minus))
}

/// One period of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodBlock {
    pub m: u64,
    pub n_abs: u64,
    pub theta_in: f64,
    /// Signed numerators in site order: `V(n_abs + j) = a_coeffs[j]/(1 + n_abs)`.
    pub a_coeffs: Vec<f64>,
    pub theta_out: f64,
    /// `|Σ_j sin²π(θ_in + jk) V(n_abs + j)|`.
    pub residual: f64,
}

impl PeriodBlock {
    /// The re-solved numerator `a⁻_{q/2}`.
    pub fn a_minus(&self, p: u64) -> Result<f64> {
        let q = self.a_coeffs.len() as u64;
        let (_, minus) = even_q_permutation(p, q)?;
        Ok(-self.a_coeffs[*minus.last().unwrap() as usize])
    }
}

fn circular_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Signed numerators for one period, solving the cancellation equation with
/// the actual incoming angle.
fn period_coefficients(a: f64, p: u64, q: u64, m: u64, theta_in: f64) -> Result<(Vec<f64>, f64, f64)> {
    let (plus, minus) = even_q_permutation(p, q)?;
    let k = p as f64 / q as f64;
    let w = |j: u64| (PI * (theta_in + j as f64 * k)).sin().powi(2);
    let half = (q / 2) as usize;
    let last = minus[half - 1];
    let mut rhs = 0.0;
    for &j in &plus {
        rhs += a * w(j);
    }
    for &j in &minus[..half - 1] {
        rhs -= a * w(j);
    }
    let a_minus = rhs / w(last);
    if !(a_minus > 0.0) || (a_minus - a).abs() > 0.5 * a {
        return Err(Error::DegeneratePeriod { m, a_minus, a });
    }
    let mut coeffs = vec![0.0; q as usize];
    for &j in &plus {
        coeffs[j as usize] = a;
    }
    for &j in &minus[..half - 1] {
        coeffs[j as usize] = -a;
    }
    coeffs[last as usize] = -a_minus;
    let residual = (0..q).map(|j| w(j) * coeffs[j as usize]).sum::<f64>().abs();
    Ok((coeffs, residual, a_minus))
}

/// Build one period from the incoming state at `n_abs` and evolve it `q` steps.
pub fn even_q_period(
    a: f64,
    p: u64,
    q: u64,
    m: u64,
    state: &PruferState,
    delta: f64,
) -> Result<(PeriodBlock, PruferState)> {
    let theta_in = state.phase;
    if circular_distance(theta_in, 0.5 / q as f64) >= delta {
        return Err(Error::PhaseLockLost { m, theta: theta_in });
    }
    let (coeffs, residual, _) = period_coefficients(a, p, q, m, theta_in)?;
    let k = p as f64 / q as f64;
    let sin_pk = (PI * k).sin();
    let denom = (1 + state.n) as f64;
    let mut st = *state;
    for &c in &coeffs {
        let v = c / denom;
        assert!(
            v * (2.0 * PI * st.phase).sin() > 0.0,
            "sign alignment lost at n = {}",
            st.n
        );
        st = prufer::prufer_step(&st, v, k, sin_pk)?;
    }
    let block = PeriodBlock {
        m,
        n_abs: state.n,
        theta_in,
        a_coeffs: coeffs,
        theta_out: st.phase,
        residual: residual / denom,
    };
    Ok((block, st))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenQParams {
    pub a: f64,
    pub p: u64,
    pub q: u64,
    pub n0: Option<u64>,
    pub delta: Option<f64>,
}

impl EvenQParams {
    pub fn new(a: f64, p: u64, q: u64) -> Self {
        EvenQParams {
            a,
            p,
            q,
            n0: None,
            delta: None,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(1.0 / (8.0 * self.q as f64))
    }

    pub fn n0(&self) -> u64 {
        self.n0.unwrap_or_else(|| {
            let s = (PI * self.p as f64 / self.q as f64).sin();
            (100 * self.q).max((8.0 * self.a / s).ceil() as u64)
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvenQRun {
    pub trajectory: Trajectory,
    pub potential: PotentialSequence,
    pub blocks: Vec<PeriodBlock>,
    /// Start of the first period after any shifts forced by the phase setter.
    pub n0: u64,
    /// Largest `|a⁻ − a|` over all periods.
    pub delta_tilde: f64,
    /// Largest circular distance of a period-start angle from `1/(2q)`.
    pub max_phase_dev: f64,
    /// Largest residual of the cancellation equation, per site scale.
    pub max_residual: f64,
}

/// The full construction on sites `1..=n_max`: free evolution up to `n0 − 1`,
/// one phase-setting site, then chained periods.
pub fn even_q_build(
    params: &EvenQParams,
    boundary: BoundaryCondition,
    n_max: u64,
    stride: Stride,
) -> Result<EvenQRun> {
    let EvenQParams { a, p, q, .. } = *params;
    let energy = Energy::from_rational(p, q)?;
    if q % 2 != 0 {
        return Err(Error::domain(format!("q = {q} is odd")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("coupling a = {a} must be positive")));
    }
    let k = energy.k;
    let sin_pk = energy.sin_pk();
    let delta = params.delta();
    let target_phase = 0.5 / q as f64;
    let mut n0 = params.n0().max(3);
    if a / (sin_pk * (1 + n0) as f64) >= 0.5 {
        return Err(Error::StepTooLarge {
            n: n0,
            ratio: a / (sin_pk * (1 + n0) as f64),
        });
    }

    // angle at n0 - 1 under free evolution, shifting n0 until the setter is regular
    let (u0, u1) = boundary.initial_pair();
    let mut st = prufer::state_from_solution(1, u0, u1, k)?;
    let mut setter = None;
    for _ in 0..=MAX_SETTER_SHIFTS {
        while st.n < n0 - 1 {
            st = prufer::prufer_step(&st, 0.0, k, sin_pk)?;
        }
        let nominal = st.theta() + k;
        let target = nominal + (target_phase - nominal).rem_euclid(1.0);
        let target = if target - nominal > 0.5 { target - 1.0 } else { target };
        match even_q_phase_setter(st.phase, target - st.turns as f64, k, DEFAULT_SETTER_MARGIN) {
            Ok(v) => {
                setter = Some(v);
                break;
            }
            Err(Error::PhaseSetterSingular { .. }) => n0 += 1,
            Err(e) => return Err(e),
        }
    }
    let v_set = setter.ok_or_else(|| {
        Error::ConstructionFailed(format!("phase setter singular for {} shifts of n0", MAX_SETTER_SHIFTS))
    })?;
    if n0 > n_max {
        return Err(Error::domain(format!("n_max = {n_max} does not reach n0 = {n0}")));
    }

    let mut blocks: Vec<PeriodBlock> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut pos = 0usize;
    let (mut delta_tilde, mut max_dev, mut max_res) = (0.0f64, 0.0f64, 0.0f64);
    let (trajectory, values) = Integrator::new(energy, boundary, n_max)
        .stride(stride)
        .large_step(LargeStep::Continue)
        .run(
            |n, state| {
                if n + 1 < n0 {
                    return Ok(0.0);
                }
                if n + 1 == n0 {
                    return Ok(v_set);
                }
                let st = state.expect("Prüfer channel is kept by the continuation policy");
                if (n - n0) % q == 0 {
                    let m = (n - n0) / q;
                    if let Some(prev) = blocks.last_mut() {
                        prev.theta_out = st.phase;
                    }
                    let dev = circular_distance(st.phase, target_phase);
                    if dev >= delta {
                        return Err(Error::PhaseLockLost { m, theta: st.phase });
                    }
                    let (coeffs, residual, a_minus) = period_coefficients(a, p, q, m, st.phase)?;
                    let denom = (1 + n) as f64;
                    current = coeffs.iter().map(|c| c / denom).collect();
                    pos = 0;
                    delta_tilde = delta_tilde.max((a_minus - a).abs());
                    max_dev = max_dev.max(dev);
                    max_res = max_res.max(residual / denom);
                    blocks.push(PeriodBlock {
                        m,
                        n_abs: n,
                        theta_in: st.phase,
                        a_coeffs: coeffs,
                        theta_out: f64::NAN,
                        residual: residual / denom,
                    });
                }
                let v = current[pos];
                pos += 1;
                if v * (2.0 * PI * st.phase).sin() <= 0.0 {
                    return Err(Error::ConstructionFailed(format!("sign alignment lost at n = {n}")));
                }
                Ok(v)
            },
            true,
        )?;
    Ok(EvenQRun {
        trajectory,
        potential: PotentialSequence::new(values),
        blocks,
        n0,
        delta_tilde,
        max_phase_dev: max_dev,
        max_residual: max_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_small_cases() {
        assert_eq!(even_q_permutation(1, 2).unwrap(), (vec![0], vec![1]));
        assert_eq!(even_q_permutation(1, 4).unwrap(), (vec![0, 1], vec![2, 3]));
        assert_eq!(even_q_permutation(3, 4).unwrap(), (vec![0, 3], vec![2, 1]));
        assert!(even_q_permutation(2, 4).is_err());
        assert!(even_q_permutation(1, 3).is_err());
    }

    #[test]
    fn setter_free_step_is_zero() {
        let v = even_q_phase_setter(0.3, 0.3 + 0.25, 0.25, 1e-3).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn setter_singular_margin() {
        assert!(matches!(
            even_q_phase_setter(1e-5, 0.6, 0.25, 1e-3),
            Err(Error::PhaseSetterSingular { .. })
        ));
    }

    #[test]
    fn nominal_angle_gives_nominal_numerator() {
        for &(p, q) in &[(1u64, 2u64), (1, 4), (3, 4), (1, 6), (5, 8)] {
            let (coeffs, res, _) = period_coefficients(1.7, p, q, 0, 0.5 / q as f64).unwrap();
            assert!(coeffs.iter().all(|c| (c.abs() - 1.7).abs() < 1e-12), "{p}/{q}: {coeffs:?}");
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn half_period_cancels() {
        let st = PruferState::new(100, 0.0, 0.25);
        let (block, _) = even_q_period(2.0, 1, 2, 0, &st, 1.0 / 16.0).unwrap();
        assert_eq!(block.a_coeffs.len(), 2);
        assert!((block.a_coeffs[0] - 2.0).abs() < 1e-15);
        assert!((block.a_coeffs[1] + 2.0).abs() < 1e-12);
        assert!(block.residual < 1e-15);
    }
}
