//! Renormalized integration of `u(n+1) = (E − V(n)) u(n) − u(n−1)` with the
//! Prüfer channel evolved alongside.
//!
//! The working pair `(u(n−1), u(n))` is rescaled to unit norm after every step
//! and the logarithm of the discarded scale is accumulated, so
//! `ln R̃(n)² = 2·log_scale`.

use serde::{Deserialize, Serialize};

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::prufer::{self, BoundaryCondition, PruferState};

/// Which sites are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Stride {
    Every(u64),
    Geometric(f64),
}

impl Default for Stride {
    fn default() -> Self {
        Stride::Geometric(1.05)
    }
}

impl Stride {
    fn next(&self, n: u64) -> u64 {
        match *self {
            Stride::Every(k) => n + k.max(1),
            Stride::Geometric(r) => ((n as f64 * r).ceil() as u64).max(n + 1),
        }
    }

    /// Recorded sites in `[lo, hi]`, always including both ends.
    pub fn sites(&self, lo: u64, hi: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n = lo;
        while n < hi {
            out.push(n);
            n = self.next(n);
        }
        out.push(hi);
        out
    }
}

/// One recorded site. `(u_prev, u_cur)` is the unit-normalized pair
/// `(u(n−1), u(n))`; `v` is `V(n)`, the value used by the step leaving `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub n: u64,
    pub v: f64,
    pub u_prev: f64,
    pub u_cur: f64,
    /// `ln R(n)²`, NaN when the Prüfer channel is invalid.
    pub log_r2: f64,
    /// Unwrapped Prüfer angle, NaN when the channel is invalid.
    pub theta: f64,
    /// `ln(u(n−1)² + u(n)²)`.
    pub log_rt2: f64,
    /// `ln Σ_{m≤n} R̃(m)²`.
    pub log_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub energy: Energy,
    pub boundary: BoundaryCondition,
    pub n_range: (u64, u64),
    pub prufer_valid: bool,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Latest sample with `n ≤ site`.
    pub fn at_or_before(&self, site: u64) -> Option<&Sample> {
        let idx = self.samples.partition_point(|s| s.n <= site);
        idx.checked_sub(1).map(|i| &self.samples[i])
    }
}

/// Handling of steps with `|V/sin πk| ≥ 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LargeStep {
    /// Drop the Prüfer channel for the rest of the run.
    Invalidate,
    /// Fail with `StepTooLarge`.
    Reject,
    /// Take the continuity branch of the Prüfer step.
    Continue,
}

/// Forward integrator over sites `1..=n_max`.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub energy: Energy,
    pub boundary: BoundaryCondition,
    pub n_max: u64,
    pub stride: Stride,
    pub large_step: LargeStep,
}

impl Integrator {
    pub fn new(energy: Energy, boundary: BoundaryCondition, n_max: u64) -> Self {
        Integrator {
            energy,
            boundary,
            n_max,
            stride: Stride::default(),
            large_step: LargeStep::Invalidate,
        }
    }

    pub fn stride(mut self, stride: Stride) -> Self {
        self.stride = stride;
        self
    }

    pub fn large_step(mut self, policy: LargeStep) -> Self {
        self.large_step = policy;
        self
    }

    /// Integrate with `V(n)` supplied by `v_at(n, θ-state)`. The Prüfer state
    /// passed is the one at site `n` (absent once the channel is invalid), so
    /// feedback potentials can be defined jointly with the evolution.
    ///
    /// When `record_potential` is set the values `V(0..=n_max)` are returned.
    pub fn run<F>(&self, mut v_at: F, record_potential: bool) -> Result<(Trajectory, Vec<f64>)>
    where
        F: FnMut(u64, Option<&PruferState>) -> Result<f64>,
    {
        if self.n_max < 2 {
            return Err(Error::domain("n_max must be at least 2"));
        }
        let e = self.energy.e;
        let k = self.energy.k;
        let sin_pk = self.energy.sin_pk();
        let (u0, u1) = self.boundary.initial_pair();
        let mut state = Some(prufer::state_from_solution(1, u0, u1, k)?);
        let mut prufer_valid = true;

        let mut potential = Vec::new();
        if record_potential {
            potential.reserve(self.n_max as usize + 1);
            potential.push(v_at(0, None)?);
        }

        let mut walker = Walker::from_boundary(&self.boundary);
        let mut log_l2 = walker.log_rt2();

        let sites = self.stride.sites(1, self.n_max);
        let mut next_site = 0usize;
        let mut samples = Vec::with_capacity(sites.len());

        let mut n = 1u64;
        loop {
            let v = v_at(n, state.as_ref())?;
            if !v.is_finite() {
                return Err(Error::NumericFailure { n });
            }
            if record_potential {
                potential.push(v);
            }
            if sites[next_site] == n {
                let (log_r2, theta) = match &state {
                    Some(s) => (s.log_r2, s.theta()),
                    None => (f64::NAN, f64::NAN),
                };
                samples.push(Sample {
                    n,
                    v,
                    u_prev: walker.a,
                    u_cur: walker.b,
                    log_r2,
                    theta,
                    log_rt2: walker.log_rt2(),
                    log_l2,
                });
                next_site += 1;
            }
            if n == self.n_max {
                break;
            }

            walker.step(e, v)?;
            log_l2 = log_add(log_l2, walker.log_rt2());

            if let Some(s) = &state {
                state = match prufer::prufer_step(s, v, k, sin_pk) {
                    Ok(next) => Some(next),
                    Err(err) => match self.large_step {
                        LargeStep::Reject => return Err(err),
                        LargeStep::Continue => Some(prufer::prufer_step_any(s, v, k, sin_pk)),
                        LargeStep::Invalidate => {
                            prufer_valid = false;
                            None
                        }
                    },
                };
            }
            n += 1;
        }

        if !prufer_valid {
            for s in &mut samples {
                s.log_r2 = f64::NAN;
                s.theta = f64::NAN;
            }
        }
        Ok((
            Trajectory {
                energy: self.energy,
                boundary: self.boundary,
                n_range: (1, self.n_max),
                prufer_valid,
                samples,
            },
            potential,
        ))
    }
}

/// The renormalized solution pair at site `n`, advanced one site at a time.
///
/// Every forward integration goes through [`Walker::step`], so constructions
/// that track solutions while building a potential reproduce the final
/// integration bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Walker {
    pub n: u64,
    /// `u(n−1)/R̃(n)`.
    pub a: f64,
    /// `u(n)/R̃(n)`.
    pub b: f64,
    /// `ln R̃(n)`.
    pub log_scale: f64,
}

impl Walker {
    /// The pair `(u(0), u(1))` at site 1.
    pub fn from_boundary(boundary: &BoundaryCondition) -> Self {
        let (u0, u1) = boundary.initial_pair();
        let norm = u0.hypot(u1);
        Walker {
            n: 1,
            a: u0 / norm,
            b: u1 / norm,
            log_scale: norm.ln(),
        }
    }

    pub fn log_rt2(&self) -> f64 {
        2.0 * self.log_scale
    }

    /// Advance to site `n + 1` using `V(n) = v`.
    #[inline]
    pub fn step(&mut self, e: f64, v: f64) -> Result<()> {
        let c = self.b.mul_add(e - v, -self.a);
        let norm2 = self.b.mul_add(self.b, c * c);
        if !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::NumericFailure { n: self.n + 1 });
        }
        let inv = norm2.sqrt().recip();
        self.a = self.b * inv;
        self.b = c * inv;
        self.log_scale += 0.5 * norm2.ln();
        self.n += 1;
        Ok(())
    }
}

/// `ln(e^x + e^y)`.
#[inline]
pub(crate) fn log_add(x: f64, y: f64) -> f64 {
    if x >= y {
        x + (y - x).exp().ln_1p()
    } else {
        y + (x - y).exp().ln_1p()
    }
}

/// Integrate a fixed potential forward from the boundary.
pub fn integrate(
    potential: &dyn Potential,
    energy: Energy,
    boundary: BoundaryCondition,
    n_max: u64,
    stride: Stride,
) -> Result<Trajectory> {
    Integrator::new(energy, boundary, n_max)
        .stride(stride)
        .run(|n, _| Ok(potential.value(n)), false)
        .map(|(t, _)| t)
}

/// Integrate backward from the pair `(u(n_end−1), u(n_end))` down to site
/// `n_min ≥ 1` using `u(n−2) = (E − V(n−1)) u(n−1) − u(n)`.
///
/// Solutions decaying forward grow backward, so this recovers the subordinate
/// solution without the contamination forward integration suffers. The Prüfer
/// channel is not evolved; `log_r2` and `theta` are reconstructed from the pair
/// with `θ ∈ [0, 2)` and the trajectory is flagged `prufer_valid = false`.
/// `log_l2` is the tail sum `ln Σ_{m≥n} R̃(m)²`.
pub fn integrate_backward(
    potential: &dyn Potential,
    energy: Energy,
    end_pair: (f64, f64),
    n_end: u64,
    n_min: u64,
    stride: Stride,
) -> Result<Trajectory> {
    if n_min < 1 || n_end <= n_min {
        return Err(Error::domain("backward integration needs 1 <= n_min < n_end"));
    }
    let e = energy.e;
    let (mut a, mut b) = end_pair;
    let norm = a.hypot(b);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::domain("end pair must be finite and nonzero"));
    }
    a /= norm;
    b /= norm;
    let mut log_scale = norm.ln();
    let mut log_l2 = 2.0 * log_scale;

    let sites = stride.sites(n_min, n_end);
    let mut idx = sites.len();
    let mut samples = Vec::with_capacity(sites.len());
    let mut n = n_end;
    loop {
        if idx > 0 && sites[idx - 1] == n {
            let (r, theta) = prufer::prufer_from_solution(a, b, energy.k)?;
            samples.push(Sample {
                n,
                v: potential.value(n),
                u_prev: a,
                u_cur: b,
                log_r2: 2.0 * (log_scale + r.ln()),
                theta,
                log_rt2: 2.0 * log_scale,
                log_l2,
            });
            idx -= 1;
        }
        if n == n_min {
            break;
        }
        // pair (a, b) = (u(n-1), u(n)) -> (u(n-2), u(n-1))
        let c = a.mul_add(e - potential.value(n - 1), -b);
        let norm2 = a.mul_add(a, c * c);
        if !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::NumericFailure { n: n - 1 });
        }
        let inv = norm2.sqrt().recip();
        b = a * inv;
        a = c * inv;
        log_scale += 0.5 * norm2.ln();
        log_l2 = log_add(log_l2, 2.0 * log_scale);
        n -= 1;
    }
    samples.reverse();
    let (u0, u1) = (samples[0].u_prev, samples[0].u_cur);
    Ok(Trajectory {
        energy,
        boundary: BoundaryCondition::from_pair(u0, u1),
        n_range: (n_min, n_end),
        prufer_valid: false,
        samples,
    })
}

/// A fixed, generic end vector used when shooting backward.
pub const GENERIC_END_PAIR: (f64, f64) = (0.540_302_305_868_139_8, 0.841_470_984_807_896_5);

/// Boundary angle of the solution that is subordinate on `[1, n_far]`,
/// found by backward integration from a generic end vector.
pub fn subordinate_boundary(
    potential: &dyn Potential,
    energy: Energy,
    n_far: u64,
) -> Result<BoundaryCondition> {
    let t = integrate_backward(
        potential,
        energy,
        GENERIC_END_PAIR,
        n_far,
        1,
        Stride::Every(n_far),
    )?;
    Ok(t.boundary)
}

/// `ln` of the largest singular value of a 2×2 matrix with `det = d`.
fn log_sigma_max(m: &[f64; 4], log_scale: f64) -> f64 {
    let f = m.iter().map(|x| x * x).sum::<f64>();
    let d = m[0] * m[3] - m[1] * m[2];
    let disc = (f * f - 4.0 * d * d).max(0.0);
    0.5 * (0.5 * (f + disc.sqrt())).ln() + log_scale
}

/// `ln sup_{n_from < n ≤ n_to} ‖T(n_from → n)‖`, where `T` is the product of
/// transfer matrices `[[E − V(m), −1], [1, 0]]` for `m = n_from..n−1`.
pub fn log_transfer_sup(potential: &dyn Potential, e: f64, n_from: u64, n_to: u64) -> f64 {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    let mut log_scale = 0.0;
    let mut best = f64::NEG_INFINITY;
    for n in n_from..n_to {
        let t = e - potential.value(n);
        // [[t, -1], [1, 0]] * m
        m = [t * m[0] - m[2], t * m[1] - m[3], m[0], m[1]];
        let s = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if s > 1e100 {
            m.iter_mut().for_each(|x| *x /= s);
            log_scale += s.ln();
        }
        best = best.max(log_sigma_max(&m, log_scale));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Zero;

    #[test]
    fn geometric_sites_cover_ends() {
        let s = Stride::Geometric(1.05).sites(1, 1000);
        assert_eq!(s[0], 1);
        assert_eq!(*s.last().unwrap(), 1000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Stride::Every(10).sites(1, 25), vec![1, 11, 21, 25]);
    }

    #[test]
    fn free_evolution_is_bounded() {
        let en = Energy::new(0.7).unwrap();
        let bc = BoundaryCondition::new(0.4).unwrap();
        let t = integrate(&Zero, en, bc, 100_000, Stride::default()).unwrap();
        assert!(t.prufer_valid);
        let max = t.samples.iter().map(|s| s.log_rt2).fold(f64::MIN, f64::max);
        let min = t.samples.iter().map(|s| s.log_rt2).fold(f64::MAX, f64::min);
        assert!(max - min < 2.0 * (2.0 / en.sin_pk()).ln() + 1e-9);
        let first = t.samples[0].log_r2;
        assert!(t.samples.iter().all(|s| (s.log_r2 - first).abs() < 1e-12));
    }

    #[test]
    fn log_add_is_symmetric() {
        assert!((log_add(1.0, 2.0) - (1f64.exp() + 2f64.exp()).ln()).abs() < 1e-15);
        assert_eq!(log_add(1.0, 2.0), log_add(2.0, 1.0));
        assert_eq!(log_add(f64::NEG_INFINITY, 0.5), 0.5);
    }

    #[test]
    fn free_transfer_norm_is_bounded() {
        let en = Energy::new(1.0).unwrap();
        let l = log_transfer_sup(&Zero, en.e, 1, 10_000);
        // eigenvalues on the unit circle; norm bounded by the conjugation condition number
        assert!(l < (4.0 / en.sin_pk()).ln());
    }
}
