//! Prüfer variables for the half-line equation `u(n+1) + u(n−1) + V(n)u(n) = E u(n)`.
//!
//! The solution pair `(u(n−1), u(n))` is sheared into
//! `Y = (u(n−1), (u(n) − cos(πk) u(n−1)) / sin(πk))` and written in polar form
//! `Y = R (sin(πθ − πk), cos(πθ − πk))`. Angles are kept in half-turn units:
//! the physical angle is `πθ`, and `θ` is stored unwrapped as an integer number
//! of half-turns plus a phase in `[0, 1)`. The parity of the half-turn count
//! carries the overall sign of the solution.
//!
//! One step of the recursion maps `(R, θ)` to
//!
//! ```text
//! R'²/R² = 1 − v sin 2πθ + v² sin² πθ,       v = V(n)/sin πk
//! cot(πθ' − πk) = cot πθ − v
//! ```
//!
//! The angle update is evaluated as the rotation taking `(sin πθ, cos πθ)` to
//! `(sin πθ, cos πθ − v sin πθ)`, measured with `atan2`, so no cotangent is ever
//! formed.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// State of the Prüfer channel at site `n`, describing the pair `(u(n−1), u(n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruferState {
    pub n: u64,
    /// `ln R(n)²`.
    pub log_r2: f64,
    /// Whole half-turns of `θ`.
    pub turns: i64,
    /// Fractional part of `θ`, in `[0, 1)`.
    pub phase: f64,
}

impl PruferState {
    pub fn new(n: u64, log_r2: f64, theta: f64) -> Self {
        let turns = theta.floor();
        let mut phase = theta - turns;
        let mut turns = turns as i64;
        if phase >= 1.0 {
            phase -= 1.0;
            turns += 1;
        }
        PruferState {
            n,
            log_r2,
            turns,
            phase,
        }
    }

    /// Unwrapped angle in half-turn units.
    pub fn theta(&self) -> f64 {
        self.turns as f64 + self.phase
    }

    /// `θ` reduced modulo 2, i.e. including the sign of the solution.
    pub fn theta_mod2(&self) -> f64 {
        self.turns.rem_euclid(2) as f64 + self.phase
    }

    fn advance(&self, log_r2: f64, shift: f64) -> Self {
        let raw = self.phase + shift;
        let carry = raw.floor();
        let mut phase = raw - carry;
        let mut turns = self.turns + carry as i64;
        if phase >= 1.0 {
            phase -= 1.0;
            turns += 1;
        }
        PruferState {
            n: self.n + 1,
            log_r2,
            turns,
            phase,
        }
    }
}

/// Half-line boundary condition `u(1)/u(0) = tan θ₀`, `θ₀ ∈ [0, π)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub theta0: f64,
}

impl BoundaryCondition {
    pub fn new(theta0: f64) -> Result<Self> {
        if !theta0.is_finite() {
            return Err(Error::domain("boundary angle must be finite"));
        }
        Ok(BoundaryCondition {
            theta0: theta0.rem_euclid(PI),
        })
    }

    /// The pair `(u(0), u(1)) = (cos θ₀, sin θ₀)`.
    pub fn initial_pair(&self) -> (f64, f64) {
        (self.theta0.cos(), self.theta0.sin())
    }

    /// Boundary angle of the solution whose first two values are `(u0, u1)`.
    pub fn from_pair(u0: f64, u1: f64) -> Self {
        BoundaryCondition {
            theta0: u1.atan2(u0).rem_euclid(PI),
        }
    }
}

/// Polar coordinates `(R, θ)` of the solution pair, `θ ∈ [0, 2)`.
///
/// Reducing `θ` modulo 1 gives the projective angle; keeping it modulo 2 makes
/// [`solution_from_prufer`] an exact inverse including the sign.
pub fn prufer_from_solution(u_prev: f64, u_cur: f64, k: f64) -> Result<(f64, f64)> {
    if u_prev == 0.0 && u_cur == 0.0 {
        return Err(Error::domain("zero solution pair has no Prüfer angle"));
    }
    let (s, c) = (PI * k).sin_cos();
    let y0 = u_prev;
    let y1 = (u_cur - c * u_prev) / s;
    let r = y0.hypot(y1);
    let mut theta = k + y0.atan2(y1) / PI;
    theta = theta.rem_euclid(2.0);
    if theta >= 2.0 {
        theta -= 2.0;
    }
    Ok((r, theta))
}

pub fn solution_from_prufer(r: f64, theta: f64, k: f64) -> (f64, f64) {
    let (s, c) = (PI * k).sin_cos();
    let (ys, yc) = (PI * (theta - k)).sin_cos();
    let y0 = r * ys;
    let y1 = r * yc;
    (y0, s * y1 + c * y0)
}

/// Prüfer state at site `n` for the pair `(u_prev, u_cur) = (u(n−1), u(n))`.
pub fn state_from_solution(n: u64, u_prev: f64, u_cur: f64, k: f64) -> Result<PruferState> {
    let (r, theta) = prufer_from_solution(u_prev, u_cur, k)?;
    Ok(PruferState::new(n, 2.0 * r.ln(), theta))
}

/// Angle increment beyond the free rotation and the change of `ln R²` for one step.
#[inline]
fn step_increments(phase: f64, v: f64) -> (f64, f64) {
    let (s, c) = (PI * phase).sin_cos();
    let vs = v * s;
    let delta = (vs * s).atan2(1.0 - vs * c) / PI;
    let dlog = (vs * (vs - 2.0 * c)).ln_1p();
    (delta, dlog)
}

/// One step of the Prüfer recursion under the admissibility condition
/// `|V/sin πk| < 1/2`, which selects the branch `|θ' − k − θ| < 1/2`.
///
/// `sin_pk` must equal `sin(πk)`; it is passed in so callers evolving many
/// steps at one energy do not recompute it.
#[inline]
pub fn prufer_step(state: &PruferState, v_n: f64, k: f64, sin_pk: f64) -> Result<PruferState> {
    let v = v_n / sin_pk;
    if !(v.abs() < 0.5) {
        return Err(Error::StepTooLarge {
            n: state.n,
            ratio: v.abs(),
        });
    }
    let (delta, dlog) = step_increments(state.phase, v);
    assert!(
        delta.abs() <= v.abs(),
        "angle step bound violated at n = {}: |delta| = {} > {}",
        state.n,
        delta.abs(),
        v.abs()
    );
    Ok(state.advance(state.log_r2 + dlog, k + delta))
}

/// One step with no restriction on `V`. The branch is the one reached by
/// deforming the potential continuously from zero, so `|θ' − k − θ| < 1`.
pub fn prufer_step_any(state: &PruferState, v_n: f64, k: f64, sin_pk: f64) -> PruferState {
    let (delta, dlog) = step_increments(state.phase, v_n / sin_pk);
    state.advance(state.log_r2 + dlog, k + delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_pk(k: f64) -> f64 {
        (PI * k).sin()
    }

    #[test]
    fn unit_vertical_pair() {
        for &k in &[0.1, 0.37, 0.5, 0.9] {
            // the shear scales the second component by 1/sin(pi k)
            let (r, theta) = prufer_from_solution(0.0, 1.0, k).unwrap();
            assert!((r * sin_pk(k) - 1.0).abs() < 1e-15);
            assert!((theta - k).abs() < 1e-15, "k = {k}, theta = {theta}");
        }
    }

    #[test]
    fn half_quasi_momentum_is_identity_shear() {
        let (u0, u1) = (0.3, -1.7);
        let (r, theta) = prufer_from_solution(u0, u1, 0.5).unwrap();
        assert!((r - u0.hypot(u1)).abs() < 1e-15);
        let ang = PI * (theta - 0.5);
        assert!((r * ang.sin() - u0).abs() < 1e-14);
        assert!((r * ang.cos() - u1).abs() < 1e-14);
    }

    #[test]
    fn zero_pair_rejected() {
        assert!(prufer_from_solution(0.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn inverse_of_unit_state() {
        let (a, b) = solution_from_prufer(1.0 / sin_pk(0.23), 0.23, 0.23);
        assert!(a.abs() < 1e-15);
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_is_linear_in_r() {
        let (a, b) = solution_from_prufer(1.0, 0.71, 0.3);
        let (c, d) = solution_from_prufer(3.5, 0.71, 0.3);
        assert!((c - 3.5 * a).abs() < 1e-14);
        assert!((d - 3.5 * b).abs() < 1e-14);
    }

    #[test]
    fn free_step_rotates_by_k() {
        let st = PruferState::new(5, 0.7, 3.25);
        let next = prufer_step(&st, 0.0, 0.3, sin_pk(0.3)).unwrap();
        assert_eq!(next.n, 6);
        assert_eq!(next.log_r2, 0.7);
        assert!((next.theta() - 3.55).abs() < 1e-15);
    }

    #[test]
    fn oversized_step_rejected() {
        let st = PruferState::new(17, 0.0, 0.1);
        match prufer_step(&st, 0.6, 0.5, 1.0) {
            Err(Error::StepTooLarge { n, .. }) => assert_eq!(n, 17),
            other => panic!("expected StepTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn refined_step_matches_first_order() {
        let k = 0.5;
        let v = 1e-4;
        for &theta in &[0.2, 0.35, 0.5, 0.7, 0.85] {
            let st = PruferState::new(0, 0.0, theta);
            let next = prufer_step(&st, v, k, sin_pk(k)).unwrap();
            let approx = (PI * theta).sin().powi(2) * v / (PI * sin_pk(k));
            let diff = next.theta() - k - theta - approx;
            assert!(diff.abs() < 1e-7, "theta = {theta}: {diff}");
        }
    }

    #[test]
    fn step_matches_cotangent_relation() {
        let (k, v_n) = (0.27, 0.13);
        let st = PruferState::new(0, 0.0, 0.41);
        let next = prufer_step(&st, v_n, k, sin_pk(k)).unwrap();
        let lhs = 1.0 / (PI * (next.theta() - k)).tan();
        let rhs = 1.0 / (PI * 0.41).tan() - v_n / sin_pk(k);
        assert!((lhs - rhs).abs() < 1e-12);
        let ratio = 1.0 - v_n / sin_pk(k) * (2.0 * PI * 0.41).sin()
            + (v_n / sin_pk(k)).powi(2) * (PI * 0.41).sin().powi(2);
        assert!((next.log_r2 - ratio.ln()).abs() < 1e-14);
    }

    #[test]
    fn step_through_integer_angle_is_regular() {
        // cot is singular at integer theta; the rotation form is not
        let st = PruferState::new(0, 0.0, 2.0);
        let next = prufer_step(&st, 0.2, 0.4, sin_pk(0.4)).unwrap();
        assert!((next.theta() - 2.4).abs() < 1e-15);
    }

    #[test]
    fn boundary_pair_roundtrip() {
        let bc = BoundaryCondition::new(1.1).unwrap();
        let (u0, u1) = bc.initial_pair();
        assert!((BoundaryCondition::from_pair(u0, u1).theta0 - 1.1).abs() < 1e-15);
        let vertical = BoundaryCondition::new(PI / 2.0).unwrap();
        assert!(vertical.initial_pair().0.abs() < 1e-16);
    }
}
