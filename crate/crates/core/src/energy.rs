//! Energies in the interior of the free spectrum and the arithmetic of
//! their quasi-momenta.
//!
//! Every energy `E ∈ (−2, 2)` is written `E = 2 cos(πk)` with `k ∈ (0, 1)`.
//! Whether `k` is rational, and the parity of its reduced denominator,
//! decides which sharp constant governs the energy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default largest denominator considered when classifying `k`.
pub const DEFAULT_Q_MAX: u64 = 1_000_000;
/// Default distance below which `k` is identified with a rational.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(q: u64) -> Self {
        if q % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Arithmetic type of a quasi-momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KClass {
    Irrational,
    Rational { p: u64, q: u64, parity: Parity },
}

impl KClass {
    /// Denominator used to index the sharp constants; `0` for irrational.
    pub fn q(&self) -> u64 {
        match *self {
            KClass::Irrational => 0,
            KClass::Rational { q, .. } => q,
        }
    }
}

/// An energy strictly inside `(−2, 2)` with its quasi-momentum and class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub e: f64,
    pub k: f64,
    pub class: KClass,
}

impl Energy {
    pub fn new(e: f64) -> Result<Self> {
        Self::with_classification(e, DEFAULT_Q_MAX, DEFAULT_TOL)
    }

    pub fn with_classification(e: f64, q_max: u64, tol: f64) -> Result<Self> {
        let k = k_of_energy(e)?;
        Ok(Energy {
            e,
            k,
            class: classify_k(k, q_max, tol),
        })
    }

    /// Energy with quasi-momentum exactly `p/q` (up to rounding of the quotient).
    pub fn from_rational(p: u64, q: u64) -> Result<Self> {
        if q < 2 || p == 0 || p >= q || gcd(p, q) != 1 {
            return Err(Error::domain(format!("{p}/{q} is not a reduced fraction in (0,1) with q >= 2")));
        }
        let k = p as f64 / q as f64;
        Ok(Energy {
            e: energy_of_k(k),
            k,
            class: KClass::Rational {
                p,
                q,
                parity: Parity::of(q),
            },
        })
    }

    pub fn from_k(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::domain(format!("k = {k} outside (0,1)")));
        }
        Ok(Energy {
            e: energy_of_k(k),
            k,
            class: classify_k(k, DEFAULT_Q_MAX, DEFAULT_TOL),
        })
    }

    pub fn sin_pk(&self) -> f64 {
        (PI * self.k).sin()
    }
}

/// `k = arccos(E/2)/π`.
pub fn k_of_energy(e: f64) -> Result<f64> {
    if !(e > -2.0 && e < 2.0) {
        return Err(Error::domain(format!("energy {e} outside (-2, 2)")));
    }
    Ok((0.5 * e).acos() / PI)
}

pub fn energy_of_k(k: f64) -> f64 {
    2.0 * (PI * k).cos()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Inverse of `a` modulo `m` (requires `gcd(a, m) = 1`).
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

fn within(k: f64, p: u64, q: u64, tol: f64) -> bool {
    // single rounding of k*q - p
    (k.mul_add(q as f64, -(p as f64))).abs() <= tol * q as f64
}

fn rational(p: u64, q: u64) -> KClass {
    KClass::Rational {
        p,
        q,
        parity: Parity::of(q),
    }
}

/// Classify `k` as the reduced fraction `p/q` with the smallest `q ∈ [2, q_max]`
/// lying within `tol`, or as irrational when none exists.
///
/// The smallest-denominator fraction in a neighbourhood of `k` is a convergent
/// or an intermediate fraction of the continued fraction of `k`, so only those
/// are visited, in increasing order of denominator. The expansion itself is
/// exact: `k` is a dyadic rational and is expanded with integer arithmetic.
pub fn classify_k(k: f64, q_max: u64, tol: f64) -> KClass {
    if !(k > 0.0 && k < 1.0) || q_max < 2 || !(tol > 0.0) {
        return KClass::Irrational;
    }
    // Neighbourhoods containing 0/1 or 1/1: the nearest admissible fractions
    // are 1/q and (q-1)/q.
    if k <= tol {
        let q = ((1.0 / (k + tol)).ceil() as u64).max(2);
        return if q <= q_max { rational(1, q) } else { KClass::Irrational };
    }
    if 1.0 - k <= tol {
        let q = ((1.0 / (1.0 - k + tol)).ceil() as u64).max(2);
        return if q <= q_max { rational(q - 1, q) } else { KClass::Irrational };
    }

    let Some((mut num, mut den)) = dyadic(k) else {
        return KClass::Irrational;
    };

    // convergents p_{n-2}/q_{n-2}, p_{n-1}/q_{n-1}; start with 1/0 and a0 = 0 -> 0/1
    let (mut p2, mut q2) = (1u64, 0u64);
    let (mut p1, mut q1) = (0u64, 1u64);
    // consume a0 = 0
    std::mem::swap(&mut num, &mut den);
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num - a * den);
        let a = u64::try_from(a).unwrap_or(u64::MAX);
        // intermediate fractions (p2 + j p1)/(q2 + j q1), j = 1..=a
        let j_cap = if q1 == 0 { a } else { ((q_max.saturating_sub(q2)) / q1).min(a) };
        if j_cap >= 1 {
            let cand = |j: u64| (p2 + j * p1, q2 + j * q1);
            // distance is monotone decreasing in j; find the smallest admissible j
            let (pc, qc) = cand(j_cap);
            if within(k, pc, qc, tol) {
                let (mut lo, mut hi) = (1u64, j_cap);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    let (pm, qm) = cand(mid);
                    if within(k, pm, qm, tol) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                let (mut p, mut q) = cand(lo);
                // q = 1 candidates were excluded above; step past them if hit
                let mut j = lo;
                while q < 2 && j < j_cap {
                    j += 1;
                    (p, q) = cand(j);
                }
                if q >= 2 && q <= q_max && within(k, p, q, tol) {
                    return rational(p, q);
                }
            }
        }
        if a > j_cap {
            return KClass::Irrational;
        }
        let (pn, qn) = (p2 + a * p1, q2 + a * q1);
        (p2, q2, p1, q1) = (p1, q1, pn, qn);
        if q1 > q_max {
            return KClass::Irrational;
        }
    }
    KClass::Irrational
}

/// `k = num/den` exactly, when the denominator fits in 127 bits.
fn dyadic(k: f64) -> Option<(u128, u128)> {
    let bits = k.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e2) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if e2 >= 0 {
        return None;
    }
    let shift = (-e2) as u32;
    let tz = mant.trailing_zeros().min(shift);
    let (mant, shift) = (mant >> tz, shift - tz);
    if shift > 126 {
        return None;
    }
    Some((mant as u128, 1u128 << shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_of_zero_is_half() {
        assert_eq!(k_of_energy(0.0).unwrap(), 0.5);
    }

    #[test]
    fn k_of_one_is_third() {
        let k = k_of_energy(2.0 * (PI / 3.0).cos()).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn k_of_energy_forward_check() {
        let k = k_of_energy(-1.2345).unwrap();
        assert!((2.0 * (PI * k).cos() + 1.2345).abs() < 1e-15);
    }

    #[test]
    fn energy_out_of_range_rejected() {
        assert!(k_of_energy(2.0).is_err());
        assert!(k_of_energy(-2.0).is_err());
        assert!(k_of_energy(f64::NAN).is_err());
    }

    #[test]
    fn classify_half() {
        assert_eq!(
            classify_k(0.5, 100, 1e-12),
            KClass::Rational {
                p: 1,
                q: 2,
                parity: Parity::Even
            }
        );
    }

    #[test]
    fn classify_third_within_tolerance() {
        assert_eq!(
            classify_k(1.0 / 3.0 + 1e-15, 100, 1e-12),
            KClass::Rational {
                p: 1,
                q: 3,
                parity: Parity::Odd
            }
        );
    }

    #[test]
    fn classify_golden_is_irrational() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert_eq!(classify_k(g, 1000, 1e-12), KClass::Irrational);
    }

    #[test]
    fn classify_near_endpoints() {
        assert_eq!(classify_k(1e-4, 1_000_000, 2e-4), rational(1, 3334));
        assert_eq!(classify_k(1.0 - 1e-4, 1_000_000, 2e-4), rational(3333, 3334));
        assert_eq!(classify_k(1e-9, 1_000_000, 1e-10), KClass::Irrational);
        assert_eq!(classify_k(0.25, 1000, 0.3), rational(1, 2));
    }

    #[test]
    fn mod_inverse_small() {
        assert_eq!(mod_inverse(3, 4), Some(3));
        assert_eq!(mod_inverse(1, 2), Some(1));
        assert_eq!(mod_inverse(2, 4), None);
        assert_eq!(mod_inverse(7, 10), Some(3));
    }

    #[test]
    fn from_rational_rejects_unreduced() {
        assert!(Energy::from_rational(2, 4).is_err());
        assert!(Energy::from_rational(1, 1).is_err());
        assert!(Energy::from_rational(1, 2).is_ok());
    }
}
