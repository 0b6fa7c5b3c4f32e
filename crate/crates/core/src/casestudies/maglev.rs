//! Sampled-data magnetic levitation: ZOH model, high-pass compensation and the
//! resulting upper bound on the instability radius.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rir::{exact_rir_analyze, RirStatus};
use crate::transfer::RationalTF;

/// Continuous plant k / ((p² − s²)(τ s + 1)) sampled with period `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaglevParams {
    pub k: f64,
    pub p: f64,
    pub tau: f64,
    pub t: f64,
}

impl Default for MaglevParams {
    fn default() -> Self {
        Self { k: 1.0, p: 1.0, tau: 0.1, t: 0.01 }
    }
}

const DEGENERACY_TOL: f64 = 1e-9;

impl MaglevParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("p", self.p), ("tau", self.tau), ("T", self.t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive and finite")));
            }
        }
        if (self.tau * self.p - 1.0).abs() < DEGENERACY_TOL {
            return Err(Error::InvalidParameter(
                "tau * p = 1 makes the electrical and mechanical poles coincide".into(),
            ));
        }
        Ok(())
    }
}

/// Both forms of the sampled plant: residues over the three discrete poles and
/// the numerator coefficients of the product form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaglevZoh {
    pub params: MaglevParams,
    pub residues: [f64; 3],
    pub poles: [f64; 3],
    /// Numerator coefficients (z², z, 1) before the k/p² factor.
    pub numerator: [f64; 3],
}

impl MaglevZoh {
    pub fn new(params: MaglevParams) -> Result<Self> {
        params.validate()?;
        let MaglevParams { p, tau, t, .. } = params;
        let tp = tau * p;
        let up = (p * t).exp();
        let down = (-p * t).exp();
        let elec = (-t / tau).exp();
        let n1 = -(p * t).exp_m1() / (2.0 * (tp + 1.0));
        let n2 = (-p * t).exp_m1() / (2.0 * (tp - 1.0));
        let n3 = -tp * tp * (-t / tau).exp_m1() / (tp * tp - 1.0);
        let b2 = n1 + n2 + n3;
        let b1 = -(down * (n1 + n3) + up * (n2 + n3) + elec * (n1 + n2));
        let b0 = n1 * (-(p * t + t / tau)).exp() + n2 * (p * t - t / tau).exp() + n3;
        Ok(Self { params, residues: [n1, n2, n3], poles: [up, down, elec], numerator: [b2, b1, b0] })
    }

    fn dc_factor(&self) -> f64 {
        self.params.k / (self.params.p * self.params.p)
    }

    /// Partial-fraction evaluation.
    pub fn eval_partial(&self, z: Complex64) -> Complex64 {
        let s: Complex64 = self.residues.iter().zip(&self.poles).map(|(n, q)| *n / (z - q)).sum();
        s * self.dc_factor()
    }

    /// Σ |residue/(z − pole)|: the rounding scale of `eval_partial`, whose terms
    /// cancel to O(T³) away from z = 1.
    fn partial_scale(&self, z: Complex64) -> f64 {
        let s: f64 = self.residues.iter().zip(&self.poles).map(|(n, q)| (*n / (z - q)).norm()).sum();
        s * self.dc_factor()
    }

    /// Static gain from the partial-fraction form, with each term's pole offset taken
    /// through `expm1` so it stays accurate as T → 0.
    pub fn dc_gain(&self) -> f64 {
        let MaglevParams { p, tau, t, .. } = self.params;
        let offsets = [-(p * t).exp_m1(), -(-p * t).exp_m1(), -(-t / tau).exp_m1()];
        let s: f64 = self.residues.iter().zip(offsets).map(|(n, d)| n / d).sum();
        s * self.dc_factor()
    }

    pub fn tf(&self) -> Result<RationalTF> {
        let num = Polynomial::new(self.numerator.to_vec())?;
        let zeros = num.roots()?.roots;
        let poles: Vec<Complex64> = self.poles.iter().map(|&q| Complex64::new(q, 0.0)).collect();
        RationalTF::from_zpk(self.dc_factor() * num.leading(), zeros, poles)
    }
}

/// ZOH-discretized plant, cross-checked between its partial-fraction and product forms.
pub fn maglev_zoh(params: MaglevParams) -> Result<RationalTF> {
    let zoh = MaglevZoh::new(params)?;
    let g = zoh.tf()?;
    for k in 0..8 {
        let z = Complex64::from_polar(1.0 + 0.25 * k as f64, 0.4 + 0.35 * k as f64);
        let a = zoh.eval_partial(z);
        let b = g.eval_factored(z)?;
        if (a - b).norm() > 1e-10 * zoh.partial_scale(z).max(b.norm()) {
            return Err(Error::NumericalFault(format!(
                "partial-fraction and product forms disagree at {z}: {a} vs {b}"
            )));
        }
    }
    Ok(g)
}

/// ((b+1) z + 1 − b) / ((a+1) z + 1 − a).
pub fn highpass(a: f64, b: f64) -> Result<RationalTF> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("high-pass needs b > a > 0, got a = {a}, b = {b}")));
    }
    // built from the exact zero and pole: for large a they sit closer than root-finding noise
    let f = RationalTF::from_zpk(
        (b + 1.0) / (a + 1.0),
        vec![Complex64::new((b - 1.0) / (b + 1.0), 0.0)],
        vec![Complex64::new((a - 1.0) / (a + 1.0), 0.0)],
    )?;
    debug_assert!(f.is_stable());
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaglevBound {
    pub params: MaglevParams,
    pub eps: f64,
    /// Phase rate of the sampled plant at ω = 0.
    pub plant_rate_at_dc: f64,
    pub p_eps: f64,
    pub abar: f64,
    pub ratio: f64,
    pub highpass_a: f64,
    pub highpass_b: f64,
    pub compensated_max_gain_rate: f64,
    pub compensated_rate_at_dc: f64,
    pub compensated_status: RirStatus,
}

const GAIN_RATE_CEILING: f64 = 1e-9;

fn validation_grid() -> Vec<f64> {
    let mut w: Vec<f64> = (0..=2000).map(|k| 10f64.powf(-8.0 + 7.0 * k as f64 / 2000.0)).collect();
    w.extend((1..=4096).map(|k| PI * k as f64 / 4096.0));
    w.sort_by(f64::total_cmp);
    w
}

/// Largest admissible high-pass corner and the resulting bound ratio b/a.
pub fn maglev_upper_bound(params: MaglevParams, eps: f64) -> Result<MaglevBound> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let zoh = MaglevZoh::new(params)?;
    let g = maglev_zoh(params)?;
    let rate0 = g.phase_rate(0.0)?;
    if rate0 >= 0.0 {
        return Err(Error::Precondition(format!("compensation unnecessary: plant phase rate at 0 is {rate0}")));
    }
    let MaglevParams { p, tau, t, .. } = params;
    let [b2, b1, b0] = zoh.numerator;
    let p_eps = -2.0 * rate0 + eps;
    let elec = (-t / tau).exp();
    let abar = (8.0 / (2.0 * (p * t).cosh() - 2.0)
        + 4.0 * elec / (-t / tau).exp_m1().powi(2)
        + 4.0 * (4.0 * b2 * b0 + b2 * b1 + b1 * b0) / (b2 + b1 + b0).powi(2)
        - p_eps * p_eps)
        / (2.0 * p_eps);
    if abar.is_nan() || abar <= 0.0 {
        return Err(Error::Precondition(format!("no admissible high-pass corner (abar = {abar})")));
    }
    let ratio = 1.0 + p_eps / abar;

    let a = abar * (1.0 - 1e-6);
    let b = a + p_eps;
    let compensated = g.mul(&highpass(a, b)?);
    let max_rate = validation_grid()
        .into_iter()
        .map(|w| compensated.gain_rate(w))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if max_rate > GAIN_RATE_CEILING {
        return Err(Error::SynthesisVerification(format!(
            "compensated gain rate reaches {max_rate:e}, expected non-positive"
        )));
    }
    let comp_rate0 = compensated.phase_rate(0.0)?;
    if comp_rate0 <= 0.0 {
        return Err(Error::SynthesisVerification(format!(
            "compensated phase rate at 0 is {comp_rate0}, expected positive"
        )));
    }
    let status = exact_rir_analyze(&compensated)?.status;
    Ok(MaglevBound {
        params,
        eps,
        plant_rate_at_dc: rate0,
        p_eps,
        abar,
        ratio,
        highpass_a: a,
        highpass_b: b,
        compensated_max_gain_rate: max_rate,
        compensated_rate_at_dc: comp_rate0,
        compensated_status: status,
    })
}

/// Limit of P_ε/ā as τ → 0.
pub fn tau_limit(p: f64, t: f64, eps: f64) -> f64 {
    let kappa = (2.0 - (p * t).exp() - (-p * t).exp()) / 2.0;
    let one = 1.0 + eps;
    2.0 * one * one / (1.0 - 4.0 / kappa - one * one)
}
