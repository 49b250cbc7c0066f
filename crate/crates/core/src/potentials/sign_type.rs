use std::f64::consts::PI;

use super::PotentialSequence;
use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::prufer::BoundaryCondition;
use crate::solver::{Integrator, LargeStep, Stride, Trajectory};

#[derive(Debug, Clone)]
pub struct SignTypeRun {
    pub trajectory: Trajectory,
    pub potential: PotentialSequence,
    pub n_start: u64,
}

/// Smallest start site keeping every step well inside the admissible range.
pub fn default_n_start(a: f64, sin_pk: f64) -> u64 {
    ((4.0 * a / sin_pk).ceil() as u64).max(10)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Co-evolve `V(n) = a·sgn(sin 2πθ(n))/(1 + n)` for `n ≥ n_start` (zero before)
/// with the solution. Each step's change of `ln R²` is checked against
/// `ln(1 − w|sin 2πθ| + w² sin² πθ)`, `w = a/((1 + n) sin πk)`.
pub fn sign_type_run(
    a: f64,
    energy: Energy,
    boundary: BoundaryCondition,
    n_start: Option<u64>,
    n_max: u64,
    stride: Stride,
) -> Result<SignTypeRun> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("coupling a = {a} must be positive")));
    }
    let sin_pk = energy.sin_pk();
    let n_start = n_start.unwrap_or_else(|| default_n_start(a, sin_pk));
    let ratio = a / (sin_pk * (1 + n_start) as f64);
    if ratio >= 0.5 {
        return Err(Error::StepTooLarge {
            n: n_start,
            ratio,
        });
    }

    let mut expected: Option<f64> = None;
    let (trajectory, values) = Integrator::new(energy, boundary, n_max)
        .stride(stride)
        .large_step(LargeStep::Reject)
        .run(
            |n, state| {
                let Some(st) = state else {
                    return Ok(0.0);
                };
                if let Some(exp) = expected.take() {
                    assert!(
                        (st.log_r2 - exp).abs() <= 1e-12 * (1.0 + exp.abs()),
                        "log R^2 step identity violated at n = {n}"
                    );
                }
                if n < n_start {
                    return Ok(0.0);
                }
                let s2 = (2.0 * PI * st.phase).sin();
                let v = a * sgn(s2) / (1 + n) as f64;
                let w = a / ((1 + n) as f64 * sin_pk);
                let s1 = (PI * st.phase).sin();
                expected = Some(st.log_r2 + (w * (w * s1 * s1 - s2.abs())).ln_1p());
                Ok(v)
            },
            true,
        )?;
    Ok(SignTypeRun {
        trajectory,
        potential: PotentialSequence::new(values),
        n_start,
    })
}
