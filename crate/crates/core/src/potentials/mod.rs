//! Potential families: Wigner–von Neumann waves, sign-type feedback
//! potentials, the almost sign-type even-denominator construction, and glued
//! multi-segment potentials.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::prufer::BoundaryCondition;
use crate::solver::Stride;

pub mod even_q;
pub mod glue;
pub mod sign_type;
pub mod twocase;

pub use even_q::{
    even_q_build, even_q_period, even_q_permutation, even_q_phase_setter, EvenQParams, EvenQRun,
    PeriodBlock,
};
pub use glue::{glue_multi, validate_targets, Activation, Checkpoint, GlueParams, GlueResult, Growth, Target};
pub use sign_type::{sign_type_run, SignTypeRun};
pub use twocase::{twocase_segment, Coupling, SegmentParams, SegmentReport};

/// A potential given site by site.
pub trait Potential: Sync {
    fn value(&self, n: u64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Potential for Zero {
    fn value(&self, _n: u64) -> f64 {
        0.0
    }
}

/// Explicit values `V(0), V(1), …`; zero beyond the stored range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialSequence {
    pub values: Vec<f64>,
}

impl PotentialSequence {
    pub fn new(values: Vec<f64>) -> Self {
        PotentialSequence { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_n |V(n)|·(1 + n − b)` over the stored sites with `n ≥ b`.
    pub fn envelope(&self, b: i64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(n, _)| *n as i64 >= b)
            .map(|(n, v)| v.abs() * (1 + n as i64 - b) as f64)
            .fold(0.0, f64::max)
    }
}

impl Potential for PotentialSequence {
    fn value(&self, n: u64) -> f64 {
        self.values.get(n as usize).copied().unwrap_or(0.0)
    }
}

/// `2π·frac(kn)`, the resonant phase, reduced before the trigonometric call.
#[inline]
pub(crate) fn wave_phase(k: f64, n: u64) -> f64 {
    let kn = k * n as f64;
    2.0 * PI * (kn - kn.floor())
}

/// `c·sin(2πkn + φ)/(n − b)`.
pub fn wvn_value(c: f64, k: f64, phi: f64, b: i64, n: u64) -> Result<f64> {
    if n as i64 <= b {
        return Err(Error::domain(format!("site {n} not beyond offset {b}")));
    }
    Ok(c * (wave_phase(k, n) + phi).sin() / (n as i64 - b) as f64)
}

/// Wigner–von Neumann potential, zero at and before the offset `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerVonNeumann {
    pub c: f64,
    pub k: f64,
    pub phi: f64,
    pub b: i64,
}

impl Potential for WignerVonNeumann {
    fn value(&self, n: u64) -> f64 {
        wvn_value(self.c, self.k, self.phi, self.b, n).unwrap_or(0.0)
    }
}

/// One glued segment: `amp·sin(2πkn + φ)/(n − b)` on `n0 < n < n1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub e: f64,
    pub theta0: f64,
    pub n0: u64,
    pub n1: u64,
    pub b: i64,
    pub amp: f64,
    pub phi: f64,
}

/// Basis values `(sin 2πkn, cos 2πkn)/(n − b)`; every segment value is formed as
/// `amp·(s cos φ + c sin φ)` from these, during the phase search and on
/// regeneration alike, so both produce identical bits.
#[inline]
pub(crate) fn wave_basis(k: f64, b: i64, n: u64) -> (f64, f64) {
    let (s, c) = wave_phase(k, n).sin_cos();
    let d = (n as i64 - b) as f64;
    (s / d, c / d)
}

#[inline]
pub(crate) fn segment_value(amp: f64, cos_phi: f64, sin_phi: f64, basis: (f64, f64)) -> f64 {
    amp * basis.0.mul_add(cos_phi, basis.1 * sin_phi)
}

/// Declarative description of a potential, sufficient to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum PotentialSpec {
    Zero,
    WignerVonNeumann {
        c: f64,
        k: f64,
        phi: f64,
        b: i64,
    },
    SignType {
        a: f64,
        k: f64,
        n_start: Option<u64>,
    },
    EvenQ {
        a: f64,
        p: u64,
        q: u64,
        n0: Option<u64>,
        delta: Option<f64>,
    },
    MultiSegment {
        segments: Vec<SegmentSpec>,
    },
}

impl PotentialSpec {
    /// Values `V(0..=n_max)`. Feedback variants depend on the boundary condition.
    pub fn realize(&self, boundary: BoundaryCondition, n_max: u64) -> Result<PotentialSequence> {
        let len = n_max as usize + 1;
        match self {
            PotentialSpec::Zero => Ok(PotentialSequence::new(vec![0.0; len])),
            PotentialSpec::WignerVonNeumann { c, k, phi, b } => {
                let w = WignerVonNeumann {
                    c: *c,
                    k: *k,
                    phi: *phi,
                    b: *b,
                };
                Ok(PotentialSequence::new((0..=n_max).map(|n| w.value(n)).collect()))
            }
            PotentialSpec::SignType { a, k, n_start } => {
                let energy = Energy::from_k(*k)?;
                let run = sign_type_run(*a, energy, boundary, *n_start, n_max, Stride::Every(n_max))?;
                Ok(run.potential)
            }
            PotentialSpec::EvenQ { a, p, q, n0, delta } => {
                let params = EvenQParams {
                    a: *a,
                    p: *p,
                    q: *q,
                    n0: *n0,
                    delta: *delta,
                };
                let run = even_q_build(&params, boundary, n_max, Stride::Every(n_max))?;
                Ok(run.potential)
            }
            PotentialSpec::MultiSegment { segments } => {
                let mut values = vec![0.0; len];
                for seg in segments {
                    let k = crate::energy::k_of_energy(seg.e)?;
                    let (sin_phi, cos_phi) = seg.phi.sin_cos();
                    for n in (seg.n0 + 1)..seg.n1.min(n_max + 1) {
                        values[n as usize] =
                            segment_value(seg.amp, cos_phi, sin_phi, wave_basis(k, seg.b, n));
                    }
                }
                Ok(PotentialSequence::new(values))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wvn_zero_coupling() {
        assert_eq!(wvn_value(0.0, 0.3, 1.0, -1, 10).unwrap(), 0.0);
    }

    #[test]
    fn wvn_half_k_vanishes() {
        for n in 11..40u64 {
            assert!(wvn_value(1.0, 0.5, 0.0, n as i64 - 10, n).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn wvn_rejects_offset_site() {
        assert!(wvn_value(1.0, 0.3, 0.0, 5, 5).is_err());
        assert_eq!(WignerVonNeumann { c: 1.0, k: 0.3, phi: 0.0, b: 5 }.value(3), 0.0);
    }

    #[test]
    fn segment_formula_matches_direct_wave() {
        let (k, b, amp, phi) = (0.37, 4, 2.5, 0.9f64);
        for n in 5..200u64 {
            let v = segment_value(amp, phi.cos(), phi.sin(), wave_basis(k, b, n));
            let w = wvn_value(amp, k, phi, b, n).unwrap();
            assert!((v - w).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = PotentialSpec::EvenQ {
            a: 2.0,
            p: 1,
            q: 4,
            n0: Some(400),
            delta: None,
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"variant\":\"EvenQ\""));
        assert_eq!(serde_json::from_str::<PotentialSpec>(&s).unwrap(), spec);
    }
}
