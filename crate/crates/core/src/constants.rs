//! Sharp transition constants.
//!
//! For a denominator `q ≥ 2` let `f_q(φ) = (1/q) Σ_{j<q} |sin(2πj/q + φ)|`.
//! `A_q` is its maximum and, for odd `q`, `B_q` its minimum. For irrational
//! quasi-momenta the average is over the whole circle and `A_0 = 2/π`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    pub q: u64,
    pub a: f64,
    pub b: Option<f64>,
}

impl SharpConstants {
    pub fn new(q: u64) -> Result<Self> {
        let a = sharp_a(q)?;
        let b = if q % 2 == 1 { Some(sharp_b(q)?) } else { None };
        Ok(SharpConstants { q, a, b })
    }
}

pub fn sharp_a(q: u64) -> Result<f64> {
    match q {
        0 => Ok(FRAC_2_PI),
        1 => Err(Error::domain("q = 1 has no sharp constant")),
        _ => {
            let qf = q as f64;
            let s = (PI / qf).sin();
            if q % 2 == 0 {
                Ok(2.0 / (qf * s))
            } else {
                Ok(2.0 * (PI / (2.0 * qf)).cos() / (qf * s))
            }
        }
    }
}

pub fn sharp_b(q: u64) -> Result<f64> {
    if q < 3 || q % 2 == 0 {
        return Err(Error::domain(format!("B_q is defined for odd q >= 3, got {q}")));
    }
    let qf = q as f64;
    let (s, c) = (PI / qf).sin_cos();
    Ok((1.0 + c) / (qf * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Max,
    Min,
}

/// Grid resolution used by [`phase_extremum`].
pub const EXTREMUM_GRID: usize = 100_000;

/// `f_q(φ)` by direct summation.
pub fn phase_average(q: u64, phi: f64) -> f64 {
    let step = 2.0 * PI / q as f64;
    (0..q).map(|j| (step * j as f64 + phi).sin().abs()).sum::<f64>() / q as f64
}

/// Numerical extremum of `f_q` and a point attaining it.
///
/// `f_q` has period `2π/q` for even `q` and `π/q` for odd `q`, and is smooth
/// inside one period, where all the signs of `sin(2πj/q + φ)` are fixed. On that
/// piece `f_q(φ) = (P_s cos φ + P_c sin φ)/q`, so the grid costs O(1) per point;
/// the bracketing cell is then refined by ternary search on the direct sum.
/// The returned `φ*` lies in `[0, period)`.
pub fn phase_extremum(q: u64, mode: Extremum) -> Result<(f64, f64)> {
    if q < 2 {
        return Err(Error::domain(format!("phase_extremum needs q >= 2, got {q}")));
    }
    let qf = q as f64;
    let period = if q % 2 == 0 { 2.0 * PI / qf } else { PI / qf };
    let mid = 0.5 * period;
    let (mut ps, mut pc) = (0.0, 0.0);
    for j in 0..q {
        let (sj, cj) = (2.0 * PI * j as f64 / qf).sin_cos();
        let sigma = (sj * mid.cos() + cj * mid.sin()).signum();
        ps += sigma * sj;
        pc += sigma * cj;
    }
    let better = |x: f64, y: f64| match mode {
        Extremum::Max => x > y,
        Extremum::Min => x < y,
    };

    let h = period / EXTREMUM_GRID as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NAN;
    for i in 0..=EXTREMUM_GRID {
        let phi = h * i as f64;
        let v = (ps * phi.cos() + pc * phi.sin()) / qf;
        if best_v.is_nan() || better(v, best_v) {
            best_v = v;
            best_i = i;
        }
    }

    // bracket may straddle the period boundary; f is periodic, so that is fine
    let (mut lo, mut hi) = (h * (best_i as f64 - 1.0), h * (best_i as f64 + 1.0));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if better(phase_average(q, m1), phase_average(q, m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut phi = 0.5 * (lo + hi);
    let mut value = phase_average(q, phi);
    // never return worse than the best grid point
    let grid_phi = h * best_i as f64;
    let grid_value = phase_average(q, grid_phi);
    if better(grid_value, value) {
        phi = grid_phi;
        value = grid_value;
    }
    Ok((value, phi.rem_euclid(period)))
}

/// `Σ_{j<n} sin(a + jx)` in closed form, falling back to direct summation
/// when `sin(x/2)` is too small for the quotient to be accurate.
pub fn sine_sum(a: f64, x: f64, n: u64) -> f64 {
    let s = (0.5 * x).sin();
    if s.abs() > 1e-4 {
        ((a - 0.5 * x).cos() - (a + (n as f64 - 0.5) * x).cos()) / (2.0 * s)
    } else {
        (0..n).map(|j| (a + j as f64 * x).sin()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

/// Edge `2√(1 − a²C²)` of the window where coupling `a` is sub-critical,
/// with `C = A_q` or `B_q`.
pub fn critical_energy(a: f64, q: u64, variant: Variant) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("coupling a = {a} must be positive")));
    }
    let c = match variant {
        Variant::A => sharp_a(q)?,
        Variant::B => sharp_b(q)?,
    };
    let ac = a * c;
    if ac >= 1.0 {
        return Err(Error::domain(format!("a*C = {ac} >= 1: no sub-critical window")));
    }
    Ok(2.0 * (1.0 - ac * ac).sqrt())
}
