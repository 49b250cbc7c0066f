//! Gluing resonant segments so several prescribed solutions decay at once.
//!
//! Segments are laid end to end from `n_start`. Each one serves one target in
//! round-robin order and starts at twice its own offset length; it is doubled
//! until the served solution contracts by at least `factor` times the largest
//! growth any other active target sees on it, and falls below its previous
//! checkpoint. The other targets are off resonance there, so their growth is
//! bounded independently of the segment length.

use serde::{Deserialize, Serialize};

use super::twocase::{search_segment, SegmentParams, SegmentReport};
use super::{PotentialSequence, PotentialSpec, SegmentSpec};
use crate::energy::k_of_energy;
use crate::error::{Error, Result};
use crate::prufer::BoundaryCondition;
use crate::solver::Walker;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub e: f64,
    /// Boundary angle of the solution to embed.
    pub theta0: f64,
}

/// Growth function bounding the envelope `|V(n)|(1 + n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Growth {
    Constant { value: f64 },
    /// `ln(offset + n)`.
    Log { offset: f64 },
}

impl Growth {
    pub fn eval(&self, n: u64) -> f64 {
        match *self {
            Growth::Constant { value } => value,
            Growth::Log { offset } => (offset + n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Activation {
    /// Every target is served from `n_start`.
    All,
    /// Targets enter in list order once `h(n0) ≥ c_j (1 + n0)/(n0 − b)`, which keeps
    /// `|V(n)| ≤ h(n)/(1 + n)` for non-decreasing `h`.
    Streamed { h: Growth },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueParams {
    pub segment: SegmentParams,
    pub n_start: u64,
    pub n_max: u64,
    pub b: i64,
    /// Required ratio of served contraction to foreign growth.
    pub factor: f64,
    pub max_segments: usize,
    pub max_doublings: u32,
    pub activation: Activation,
}

impl Default for GlueParams {
    fn default() -> Self {
        GlueParams {
            segment: SegmentParams::default(),
            n_start: 1000,
            n_max: 1_000_000,
            b: 0,
            factor: 2.0,
            max_segments: 200,
            max_doublings: 24,
            activation: Activation::All,
        }
    }
}

/// State of every target at the end of one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub segment: usize,
    pub n: u64,
    pub served: usize,
    /// Whether the segment met both acceptance conditions; only the last
    /// segment, truncated at `n_max`, may fail them.
    pub accepted: bool,
    /// `ln R̃_j(n)`, NaN for targets not yet active.
    pub log_rt: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GlueResult {
    pub spec: PotentialSpec,
    pub potential: PotentialSequence,
    pub reports: Vec<SegmentReport>,
    pub checkpoints: Vec<Checkpoint>,
    /// Site at which each target became active.
    pub activated_at: Vec<Option<u64>>,
    /// `max_n |V(n)|(1 + n)`.
    pub envelope: f64,
    /// `max_n |V(n)|(1 + n)/h(n)` for streamed activation.
    pub h_compliance: Option<f64>,
    /// Final solution pairs, bit-identical to a forward integration of `potential`.
    pub walkers: Vec<Walker>,
}

/// Reject target sets violating `0 ∉ A + A`.
pub fn validate_targets(targets: &[Target]) -> Result<()> {
    for (i, t) in targets.iter().enumerate() {
        k_of_energy(t.e)?;
        for (j, s) in targets.iter().enumerate().skip(i) {
            if (t.e + s.e).abs() <= 1e-12 {
                return Err(Error::domain(format!("targets {i} and {j}: 0 in A + A ({} + {})", t.e, s.e)));
            }
            if i != j && (t.e - s.e).abs() <= 1e-12 {
                return Err(Error::domain(format!("targets {i} and {j} coincide at {}", t.e)));
            }
        }
    }
    Ok(())
}

fn advance(walker: &mut Walker, e: f64, values: &[f64], to: u64) -> Result<()> {
    while walker.n < to {
        let v = values[walker.n as usize];
        walker.step(e, v)?;
    }
    Ok(())
}

pub fn glue_multi(targets: &[Target], params: &GlueParams) -> Result<GlueResult> {
    if targets.is_empty() {
        return Err(Error::domain("no targets"));
    }
    validate_targets(targets)?;
    let b = params.b;
    let n_max = params.n_max;
    if !(params.n_start as i64 > b && params.n_start < n_max) {
        return Err(Error::domain("need b < n_start < n_max"));
    }
    let amps: Vec<f64> = targets
        .iter()
        .map(|t| {
            let k = k_of_energy(t.e).expect("validated");
            params.segment.coupling.amplitude((std::f64::consts::PI * k).sin())
        })
        .collect();

    let mut values = vec![0.0; n_max as usize + 1];
    let mut walkers: Vec<Walker> = targets
        .iter()
        .map(|t| BoundaryCondition::new(t.theta0).map(|bc| Walker::from_boundary(&bc)))
        .collect::<Result<_>>()?;
    let mut active = vec![false; targets.len()];
    let mut activated_at = vec![None; targets.len()];
    let mut last_checkpoint = vec![f64::INFINITY; targets.len()];
    let mut reports = Vec::new();
    let mut checkpoints = Vec::new();
    let mut segments: Vec<SegmentSpec> = Vec::new();
    let mut turn = 0usize;

    let admits = |j: usize, n: u64| match params.activation {
        Activation::All => true,
        Activation::Streamed { h } => h.eval(n) >= amps[j] * (1 + n) as f64 / (n as i64 - b) as f64,
    };

    let mut n0 = params.n_start;
    while n0 < n_max {
        // activation in list order
        let mut next = active.iter().position(|a| !a);
        if active.iter().all(|a| !a) {
            // nothing to serve yet: skip ahead to the first admissible site
            let j = next.expect("some target inactive");
            let mut n = n0;
            while n < n_max && !admits(j, n) {
                n = (n + 1).max((n as f64 * 1.01) as u64);
            }
            if n >= n_max {
                break;
            }
            n0 = n;
        }
        while let Some(j) = next {
            if !admits(j, n0) {
                break;
            }
            active[j] = true;
            activated_at[j] = Some(n0);
            next = active.iter().position(|a| !a);
        }
        for (j, w) in walkers.iter_mut().enumerate() {
            advance(w, targets[j].e, &values, n0)?;
            if active[j] && last_checkpoint[j].is_infinite() {
                last_checkpoint[j] = w.log_scale;
            }
        }

        if segments.len() >= params.max_segments {
            return Err(Error::ConstructionFailed(format!(
                "segment cap {} reached at n = {n0}",
                params.max_segments
            )));
        }
        let served = (0..targets.len())
            .map(|i| (turn + i) % targets.len())
            .find(|&i| active[i])
            .expect("an active target");
        turn = served + 1;
        let others: Vec<usize> = (0..targets.len()).filter(|&i| i != served && active[i]).collect();
        let avoid: Vec<f64> = others.iter().map(|&i| targets[i].e).collect();
        let e = targets[served].e;

        let mut n1 = ((2 * (n0 as i64 - b) + b) as u64).min(n_max);
        let mut doublings = 0u32;
        let (report, accepted) = loop {
            let w = walkers[served];
            let report = search_segment(e, &avoid, n0, n1, b, (w.a, w.b), &params.segment)?;
            let wave = report.segment;
            let (sin_phi, cos_phi) = wave.phi.sin_cos();
            let k = report.k;
            let seg_v = |n: u64| {
                if n > n0 && n < n1 {
                    super::segment_value(wave.amp, cos_phi, sin_phi, super::wave_basis(k, b, n))
                } else {
                    0.0
                }
            };
            // growth of every other active target along the segment
            let mut worst = 0.0f64;
            for &i in &others {
                let mut wi = walkers[i];
                let start = wi.log_scale;
                while wi.n < n1 {
                    wi.step(targets[i].e, seg_v(wi.n))?;
                    worst = worst.max(wi.log_scale - start);
                }
            }
            let mut ws = walkers[served];
            while ws.n < n1 {
                ws.step(e, seg_v(ws.n))?;
            }
            let contraction = walkers[served].log_scale - ws.log_scale;
            let ok = contraction >= params.factor.ln() + worst && ws.log_scale < last_checkpoint[served];
            if ok || n1 == n_max {
                break (report, ok);
            }
            doublings += 1;
            if doublings > params.max_doublings {
                return Err(Error::ConstructionFailed(format!(
                    "segment at n0 = {n0} for target {served} did not converge after {doublings} doublings"
                )));
            }
            n1 = ((2 * (n1 as i64 - b) + b) as u64).min(n_max);
        };

        let wave = report.segment;
        let (sin_phi, cos_phi) = wave.phi.sin_cos();
        for n in (n0 + 1)..n1 {
            values[n as usize] =
                super::segment_value(wave.amp, cos_phi, sin_phi, super::wave_basis(report.k, b, n));
        }
        for (j, w) in walkers.iter_mut().enumerate() {
            advance(w, targets[j].e, &values, n1)?;
        }
        if accepted {
            last_checkpoint[served] = walkers[served].log_scale;
        }
        checkpoints.push(Checkpoint {
            segment: segments.len(),
            n: n1,
            served,
            accepted,
            log_rt: walkers
                .iter()
                .enumerate()
                .map(|(j, w)| if active[j] { w.log_scale } else { f64::NAN })
                .collect(),
        });
        segments.push(wave);
        reports.push(report);
        n0 = n1;
    }
    for (j, w) in walkers.iter_mut().enumerate() {
        advance(w, targets[j].e, &values, n_max)?;
    }

    let envelope = values
        .iter()
        .enumerate()
        .map(|(n, v)| v.abs() * (1 + n) as f64)
        .fold(0.0, f64::max);
    let h_compliance = match params.activation {
        Activation::All => None,
        Activation::Streamed { h } => Some(
            values
                .iter()
                .enumerate()
                .map(|(n, v)| v.abs() * (1 + n) as f64 / h.eval(n as u64))
                .fold(0.0, f64::max),
        ),
    };
    Ok(GlueResult {
        spec: PotentialSpec::MultiSegment { segments },
        potential: PotentialSequence::new(values),
        reports,
        checkpoints,
        activated_at,
        envelope,
        h_compliance,
        walkers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_pairs_rejected() {
        let t = |e| Target { e, theta0: 0.3 };
        assert!(validate_targets(&[t(1.0), t(-1.0)]).is_err());
        assert!(validate_targets(&[t(0.0)]).is_err());
        assert!(validate_targets(&[t(0.5), t(0.5)]).is_err());
        assert!(validate_targets(&[t(1.0), t(-0.6)]).is_ok());
    }

    #[test]
    fn log_growth_function() {
        let h = Growth::Log { offset: 10.0 };
        assert!((h.eval(0) - 10f64.ln()).abs() < 1e-15);
        assert_eq!(Growth::Constant { value: 2.0 }.eval(99), 2.0);
    }
}
