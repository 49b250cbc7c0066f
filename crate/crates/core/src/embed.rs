//! Single-energy embedding: pick the construction that fits the arithmetic
//! type of `k(E)`, run it and compare the verdict with the predicted one.

use serde::{Deserialize, Serialize};

use crate::analysis::{fit_decay_with, DecayReport, Verdict, VerdictPolicy};
use crate::constants::{sharp_a, sharp_b};
use crate::energy::{Energy, KClass, Parity};
use crate::error::Result;
use crate::potentials::{even_q_build, sign_type_run, EvenQParams, PotentialSequence, PotentialSpec};
use crate::prufer::BoundaryCondition;
use crate::solver::{Stride, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    SignType,
    EvenQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedPlan {
    pub energy: Energy,
    pub construction: Construction,
    /// `A_q` for even `q` and irrational `k`, `B_q` for odd `q`.
    pub sharp: f64,
    /// `a > 1/sharp`.
    pub super_critical: bool,
    /// `−a·sharp/sin πk`, the designed slope of `ln R²`.
    pub predicted_beta: f64,
    pub predicted: Verdict,
}

pub fn plan(e: f64, a: f64, q_max: u64, tol: f64) -> Result<EmbedPlan> {
    let energy = Energy::with_classification(e, q_max, tol)?;
    let (construction, sharp) = match energy.class {
        KClass::Irrational => (Construction::SignType, sharp_a(0)?),
        KClass::Rational { q, parity: Parity::Odd, .. } => (Construction::SignType, sharp_b(q)?),
        KClass::Rational { q, parity: Parity::Even, .. } => (Construction::EvenQ, sharp_a(q)?),
    };
    let predicted_beta = -a * sharp / energy.sin_pk();
    Ok(EmbedPlan {
        energy,
        construction,
        sharp,
        super_critical: a * sharp > 1.0,
        predicted_beta,
        predicted: if predicted_beta < -1.0 { Verdict::Ell2 } else { Verdict::NotEll2 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedParams {
    pub e: f64,
    pub a: f64,
    pub theta0: f64,
    pub n_max: u64,
    pub fit_min: u64,
    pub stride: Stride,
    pub q_max: u64,
    pub tol: f64,
    pub policy: VerdictPolicy,
}

#[derive(Debug, Clone)]
pub struct EmbedRun {
    pub plan: EmbedPlan,
    pub spec: PotentialSpec,
    pub potential: PotentialSequence,
    pub trajectory: Trajectory,
    pub report: DecayReport,
}

impl EmbedRun {
    pub fn prediction_met(&self) -> bool {
        self.report.verdict == self.plan.predicted
    }
}

pub fn embed(p: &EmbedParams) -> Result<EmbedRun> {
    let plan = plan(p.e, p.a, p.q_max, p.tol)?;
    let bc = BoundaryCondition::new(p.theta0)?;
    let (spec, potential, trajectory) = match (plan.construction, plan.energy.class) {
        (Construction::EvenQ, KClass::Rational { p: num, q, .. }) => {
            let params = EvenQParams::new(p.a, num, q);
            let run = even_q_build(&params, bc, p.n_max, p.stride)?;
            let spec = PotentialSpec::EvenQ {
                a: p.a,
                p: num,
                q,
                n0: Some(run.n0),
                delta: Some(params.delta()),
            };
            (spec, run.potential, run.trajectory)
        }
        _ => {
            let run = sign_type_run(p.a, plan.energy, bc, None, p.n_max, p.stride)?;
            let spec = PotentialSpec::SignType {
                a: p.a,
                k: plan.energy.k,
                n_start: Some(run.n_start),
            };
            (spec, run.potential, run.trajectory)
        }
    };
    let report = fit_decay_with(&trajectory, p.fit_min, p.n_max, &p.policy)?;
    Ok(EmbedRun {
        plan,
        spec,
        potential,
        trajectory,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{DEFAULT_Q_MAX, DEFAULT_TOL};

    #[test]
    fn dispatch_by_class() {
        let p = plan(0.0, 2.0, DEFAULT_Q_MAX, DEFAULT_TOL).unwrap();
        assert_eq!(p.construction, Construction::EvenQ);
        assert!(p.super_critical);
        let p = plan(1.0, 2.0, DEFAULT_Q_MAX, DEFAULT_TOL).unwrap();
        assert_eq!(p.construction, Construction::SignType);
        assert!((p.sharp - sharp_b(3).unwrap()).abs() < 1e-15);
        let p = plan(0.0, 0.5, DEFAULT_Q_MAX, DEFAULT_TOL).unwrap();
        assert!(!p.super_critical);
        assert_eq!(p.predicted, Verdict::NotEll2);
    }
}
