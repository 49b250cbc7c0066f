//! A single resonant segment: a Wigner–von Neumann wave on `(n0, n1)` whose
//! phase is chosen so a prescribed solution is the decaying one.
//!
//! For `V(n) = c·sin(2πkn + φ)/(n − b)` the two solutions at `E = 2cos πk`
//! behave like `n^{±γ}` with `γ = c/(4 sin πk)`. Which initial direction is
//! the decaying one depends on `φ`, so `φ` is found by shooting: a uniform scan
//! followed by golden-section refinement of `ln R̃(n1)/R̃(n0)`.

use serde::{Deserialize, Serialize};

use super::{segment_value, wave_basis, Potential, SegmentSpec};
use crate::energy::k_of_energy;
use crate::error::{Error, Result};
use crate::par::{par_map_range, Exec};
use crate::solver::{log_transfer_sup, Walker};

/// Strength of the resonant wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Coupling {
    /// Decay exponent `γ` of `R̃`; the amplitude is `c = 4γ sin πk`.
    Exponent(f64),
    /// `V = (M/sin πk)·sin(…)/(n − b)`, decay exponent `M/(4 sin² πk)`.
    M(f64),
}

impl Coupling {
    pub fn amplitude(&self, sin_pk: f64) -> f64 {
        match *self {
            Coupling::Exponent(g) => 4.0 * g * sin_pk,
            Coupling::M(m) => m / sin_pk,
        }
    }

    pub fn exponent(&self, sin_pk: f64) -> f64 {
        self.amplitude(sin_pk) / (4.0 * sin_pk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub coupling: Coupling,
    /// Constant in the contraction, sup and avoid-set bounds.
    pub c_bound: f64,
    /// Number of phases in the initial scan.
    pub grid: usize,
    /// Minimal `n0 − b`; defaults to `⌈4c/sin πk⌉`, which keeps every step admissible.
    pub gate: Option<u64>,
    pub exec: Exec,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            coupling: Coupling::Exponent(3.0),
            c_bound: 10.0,
            grid: 720,
            gate: None,
            exec: Exec::available(),
        }
    }
}

impl SegmentParams {
    /// `M = 400`. The resulting exponents are far beyond what double precision
    /// can follow; kept for completeness.
    pub fn full_scale() -> Self {
        SegmentParams {
            coupling: Coupling::M(400.0),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: SegmentSpec,
    pub k: f64,
    pub exponent: f64,
    /// `ln R̃(n1)/R̃(n0)` for the served solution.
    pub log_contraction: f64,
    /// `ln C − γ ln((n1 − b)/(n0 − b))`.
    pub log_target: f64,
    /// `sup_n ln R̃(n)/R̃(n0)` on the segment for the served solution.
    pub log_sup: f64,
    /// `(Ẽ, ln sup ‖T‖)` for each energy to avoid.
    pub avoid_log_growth: Vec<(f64, f64)>,
    pub contraction_ok: bool,
    pub sup_ok: bool,
    pub avoid_ok: bool,
}

/// The segment's potential as a site function.
pub(crate) struct SegmentWave {
    pub k: f64,
    pub b: i64,
    pub n0: u64,
    pub n1: u64,
    pub amp: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
}

impl Potential for SegmentWave {
    fn value(&self, n: u64) -> f64 {
        if n > self.n0 && n < self.n1 {
            segment_value(self.amp, self.cos_phi, self.sin_phi, wave_basis(self.k, self.b, n))
        } else {
            0.0
        }
    }
}

/// `ln R̃(n1)/R̃(n0)` from the pair at `n0`; `table[i]` is the basis at `n0 + i`.
fn log_growth(table: &[(f64, f64)], e: f64, amp: f64, phi: f64, pair: (f64, f64)) -> f64 {
    let (sin_phi, cos_phi) = phi.sin_cos();
    let norm0 = pair.0.hypot(pair.1);
    let (mut a, mut b) = (pair.0 / norm0, pair.1 / norm0);
    let mut log_scale = 0.0;
    for (i, basis) in table.iter().enumerate() {
        let v = if i == 0 { 0.0 } else { segment_value(amp, cos_phi, sin_phi, *basis) };
        let c = b.mul_add(e - v, -a);
        a = b;
        b = c;
        if b.abs() > 1e100 || b.abs() < 1e-100 {
            let s = a.hypot(b);
            a /= s;
            b /= s;
            log_scale += s.ln();
        }
    }
    log_scale + a.hypot(b).ln()
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        x1
    } else {
        x2
    }
}

pub(crate) fn validate(e: f64, avoid: &[f64]) -> Result<f64> {
    let k = k_of_energy(e)?;
    if e == 0.0 {
        return Err(Error::ConstructionImpossible(
            "E = 0: the wave at k = 1/2 resonates with its own reflection".into(),
        ));
    }
    for &t in avoid {
        if (t - e).abs() <= 1e-12 || (t + e).abs() <= 1e-12 {
            return Err(Error::ConstructionImpossible(format!(
                "avoid-set energy {t} is resonant with {e}"
            )));
        }
    }
    Ok(k)
}

/// Search the phase and evaluate the segment without judging the contraction.
pub(crate) fn search_segment(
    e: f64,
    avoid: &[f64],
    n0: u64,
    n1: u64,
    b: i64,
    pair: (f64, f64),
    params: &SegmentParams,
) -> Result<SegmentReport> {
    let k = validate(e, avoid)?;
    if !(n1 > n0 && n0 as i64 > b) {
        return Err(Error::domain(format!("need n1 > n0 > b, got ({n0}, {n1}, {b})")));
    }
    let sin_pk = (std::f64::consts::PI * k).sin();
    let amp = params.coupling.amplitude(sin_pk);
    let gamma = params.coupling.exponent(sin_pk);
    let gate = params.gate.unwrap_or_else(|| (4.0 * amp / sin_pk).ceil() as u64);
    if ((n0 as i64 - b) as u64) < gate {
        return Err(Error::domain(format!(
            "n0 - b = {} below the gate {gate}",
            n0 as i64 - b
        )));
    }

    let table: Vec<(f64, f64)> = (n0..n1).map(|n| wave_basis(k, b, n)).collect();
    let grid = params.grid.max(3);
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    let scan = par_map_range(params.exec, grid, |i| log_growth(&table, e, amp, h * i as f64, pair));
    let best = scan
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let centre = h * best as f64;
    let phi = golden_min(|p| log_growth(&table, e, amp, p, pair), centre - h, centre + h)
        .rem_euclid(2.0 * std::f64::consts::PI);
    let phi = if log_growth(&table, e, amp, phi, pair) <= scan[best] { phi } else { centre };

    let wave = SegmentWave {
        k,
        b,
        n0,
        n1,
        amp,
        cos_phi: phi.cos(),
        sin_phi: phi.sin(),
    };
    let norm0 = pair.0.hypot(pair.1);
    let mut w = Walker {
        n: n0,
        a: pair.0 / norm0,
        b: pair.1 / norm0,
        log_scale: 0.0,
    };
    let mut log_sup = 0.0f64;
    while w.n < n1 {
        w.step(e, wave.value(w.n))?;
        log_sup = log_sup.max(w.log_scale);
    }
    let log_contraction = w.log_scale;
    let log_c = params.c_bound.ln();
    let log_target = log_c - gamma * ((n1 as i64 - b) as f64 / (n0 as i64 - b) as f64).ln();
    let avoid_log_growth: Vec<(f64, f64)> =
        avoid.iter().map(|&t| (t, log_transfer_sup(&wave, t, n0, n1))).collect();
    let avoid_ok = avoid_log_growth.iter().all(|(_, g)| *g <= log_c);
    Ok(SegmentReport {
        segment: SegmentSpec {
            e,
            theta0: pair.1.atan2(pair.0).rem_euclid(std::f64::consts::PI),
            n0,
            n1,
            b,
            amp,
            phi,
        },
        k,
        exponent: gamma,
        log_contraction,
        log_target,
        log_sup,
        avoid_log_growth,
        contraction_ok: log_contraction <= log_target,
        sup_ok: log_sup <= log_c,
        avoid_ok,
    })
}

/// Resonant segment on `(n0, n1)` for which the solution with
/// `u(n0)/u(n0 − 1) = tan θ₀` decays by at least `C·((n1 − b)/(n0 − b))^{−γ}`.
pub fn twocase_segment(
    e: f64,
    avoid: &[f64],
    n0: u64,
    n1: u64,
    b: i64,
    theta0: f64,
    params: &SegmentParams,
) -> Result<SegmentReport> {
    let report = search_segment(e, avoid, n0, n1, b, (theta0.cos(), theta0.sin()), params)?;
    if !report.contraction_ok {
        return Err(Error::SegmentTooShort {
            n0,
            n1,
            achieved: report.log_contraction.exp(),
            target: report.log_target.exp(),
        });
    }
    Ok(report)
}
