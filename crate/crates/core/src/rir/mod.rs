//! Exact robust-instability-radius analysis and minimum-norm marginal perturbation synthesis.

mod allpass;
pub mod lemmas;
pub mod pcr;

use std::f64::consts::PI;

use serde::Serialize;

pub use allpass::{allpass_phase_match, first_order_phase, first_order_rate, wrap, AllPassSpec};
pub use lemmas::{
    gain_phase_integral, lemma4_bound_check, lemma5_construct, lemma6_bound_check, resolve_phase_convention,
    BoundCheck, Lemma5Witness, Lemma6Check, PhaseConvention,
};
pub use pcr::{pcr_bound, pcr_max_search, AllPassProduct, PcrSearch};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::nyquist::{marginal_verdict_with, StabilityVerdict};
use crate::transfer::{ClassName, ClassTag, RationalTF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RirStatus {
    ExactSufficient,
    ExactBoundary,
    NotExact,
    StrictlyGreater,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RirVerdict {
    pub class: ClassTag,
    /// Principal phase of g(e^{jω_p}).
    pub theta_p: f64,
    pub theta_rate: f64,
    pub rho_threshold: f64,
    pub status: RirStatus,
    pub lower_bound: f64,
    pub note: Option<String>,
}

/// |sin θ_p| / |sin ω_p| for an interior peak.
pub fn rho_threshold(omega_p: f64, theta_p: f64) -> Result<f64> {
    let s = omega_p.sin();
    if !(omega_p > 0.0 && omega_p < PI) || s.abs() < 1e-15 {
        return Err(Error::InvalidParameter(format!("omega_p {omega_p} not in (0, pi)")));
    }
    Ok((theta_p.sin() / s).abs())
}

fn trichotomy(rate: f64, threshold: f64, tol: f64) -> RirStatus {
    if rate > threshold + tol {
        RirStatus::ExactSufficient
    } else if rate < threshold - tol {
        RirStatus::NotExact
    } else {
        RirStatus::ExactBoundary
    }
}

pub fn exact_rir_analyze(g: &RationalTF) -> Result<RirVerdict> {
    exact_rir_analyze_with(g, &Tolerances::default())
}

pub fn exact_rir_analyze_with(g: &RationalTF, tol: &Tolerances) -> Result<RirVerdict> {
    let class = g.classify_with(tol)?;
    let w = class.peak_omega;
    let theta_p = g.response(w)?.arg();
    let theta_rate = g.phase_rate(w)?;
    let lower_bound = 1.0 / class.peak_gain;
    let interior = !class.peak_at_boundary();
    let mut note = None;
    let (rho, status) = match class.class_name {
        ClassName::G1Boundary => (0.0, trichotomy(theta_rate, 0.0, tol.rate_tol)),
        ClassName::G2Interior => {
            let rho = rho_threshold(w, theta_p)?;
            (rho, trichotomy(theta_rate, rho, tol.rate_tol))
        }
        ClassName::G1Interior => (rho_threshold(w, theta_p)?, RirStatus::StrictlyGreater),
        ClassName::GnOther => {
            let rho = if interior { rho_threshold(w, theta_p)? } else { 0.0 };
            if class.pip && class.peak_unique && interior && class.n_unstable % 2 == 1 {
                note = Some(format!("odd n = {} with a unique interior peak", class.n_unstable));
                (rho, RirStatus::StrictlyGreater)
            } else {
                let why = if !class.pip {
                    "parity interlacing fails: no stable stabilizer exists".to_string()
                } else if !class.peak_unique {
                    "peak gain is not attained at a unique frequency".to_string()
                } else {
                    format!(
                        "n = {} unstable poles with this peak location is outside the decidable classes",
                        class.n_unstable
                    )
                };
                note = Some(why);
                (rho, RirStatus::Inconclusive)
            }
        }
    };
    Ok(RirVerdict { class, theta_p, theta_rate, rho_threshold: rho, status, lower_bound, note })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Synthesis {
    pub spec: AllPassSpec,
    pub f: RationalTF,
    pub verdict: RirVerdict,
    pub f_norm: f64,
    pub loop_at_peak_error: f64,
    pub stability: StabilityVerdict,
}

/// Stable f with ‖f‖ = 1/‖g‖ that places a simple closed-loop mode on the unit circle.
pub fn synth_marginal_perturbation(g: &RationalTF) -> Result<Synthesis> {
    synth_marginal_perturbation_with(g, &Tolerances::default())
}

pub fn synth_marginal_perturbation_with(g: &RationalTF, tol: &Tolerances) -> Result<Synthesis> {
    let verdict = exact_rir_analyze_with(g, tol)?;
    if verdict.status != RirStatus::ExactSufficient {
        return Err(Error::Precondition(format!("synthesis needs status exact_sufficient, got {:?}", verdict.status)));
    }
    let w = verdict.class.peak_omega;
    let scale = verdict.lower_bound;
    let spec = if verdict.class.peak_at_boundary() {
        let v = g.response(w)?;
        AllPassSpec::constant(if v.re < 0.0 { -1 } else { 1 }, scale)
    } else {
        let ap = allpass_phase_match(w, -verdict.theta_p)?;
        AllPassSpec { scale, ..ap }
    };
    let f = spec.to_tf()?;
    let f_norm = (0..=64)
        .map(|k| f.magnitude(PI * k as f64 / 64.0))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if (f_norm - scale).abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::SynthesisVerification(format!("norm of f is {f_norm}, expected {scale}")));
    }
    let l = g.mul(&f);
    let loop_at_peak_error = (l.response(w)? - 1.0).norm();
    if loop_at_peak_error >= 1e-6 {
        return Err(Error::SynthesisVerification(format!("loop value at the peak misses 1 by {loop_at_peak_error:e}")));
    }
    let stability = marginal_verdict_with(&l, w, tol)?;
    if !stability.single_mode {
        return Err(Error::SynthesisVerification(format!(
            "closed loop is not single-mode marginally stable: {:?}",
            stability.boundary_roots
        )));
    }
    Ok(Synthesis { spec, f, verdict, f_norm, loop_at_peak_error, stability })
}
