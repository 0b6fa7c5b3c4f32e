//! Checkable consequences of the phase-change-rate bounds: real-pole all-pass
//! bound, the complex-to-real section replacement, and the minimum-phase bound
//! via the discrete gain-phase integral.

use std::f64::consts::PI;

use serde::Serialize;

use super::allpass::wrap;
use crate::error::{Error, Result};
use crate::transfer::RationalTF;

const BOUND_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub rate: f64,
    pub bound: f64,
    pub holds: bool,
    pub equality: bool,
}

fn is_unit_modulus(f: &RationalTF) -> Result<bool> {
    for k in 0..16 {
        let w = PI * (k as f64 + 0.37) / 16.0;
        if (f.magnitude(w)? - 1.0).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// θ′_f(ω_p) ≤ −|sin θ_f(ω_p)/sin ω_p| for a stable unit all-pass with real poles.
pub fn lemma4_bound_check(f: &RationalTF, omega_p: f64) -> Result<BoundCheck> {
    if omega_p.sin().abs() < 1e-12 {
        return Err(Error::InvalidParameter("omega_p must avoid 0 and pi".into()));
    }
    if !f.is_stable() || f.poles().iter().any(|p| p.im != 0.0) {
        return Err(Error::Precondition("f must be stable with real poles".into()));
    }
    if !is_unit_modulus(f)? {
        return Err(Error::Precondition("f is not a unit all-pass".into()));
    }
    let v = f.response(omega_p)?;
    let rate = f.phase_rate(omega_p)?;
    let bound = -(v.arg().sin() / omega_p.sin()).abs();
    Ok(BoundCheck { rate, bound, holds: rate <= bound + BOUND_TOL, equality: (rate - bound).abs() <= BOUND_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma5Witness {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub alpha_r: f64,
    pub beta_r: f64,
    pub lambda: f64,
    pub u1: f64,
    pub u2: Option<f64>,
    pub u3: Option<f64>,
    /// β_r² − 4α_r at λ = min{u1, u2, u3}.
    pub endpoint_discriminant: f64,
}

fn second_order(alpha: f64, beta: f64) -> Result<RationalTF> {
    RationalTF::new(vec![alpha, beta, 1.0], vec![1.0, beta, alpha])
}

impl Lemma5Witness {
    pub fn complex_section(&self) -> Result<RationalTF> {
        second_order(self.alpha_c, self.beta_c)
    }

    pub fn real_section(&self) -> Result<RationalTF> {
        second_order(self.alpha_r, self.beta_r)
    }
}

fn real_valid(alpha: f64, beta: f64) -> bool {
    alpha.abs() < 1.0 && beta.abs() < alpha + 1.0 && beta * beta >= 4.0 * alpha
}

/// Replace a complex-pole second-order all-pass by a real-pole one with the
/// same phase at ω_p and a strictly larger phase rate there.
pub fn lemma5_construct(alpha_c: f64, beta_c: f64, omega_p: f64) -> Result<Lemma5Witness> {
    if !(alpha_c > 0.0 && alpha_c < 1.0 && beta_c * beta_c < 4.0 * alpha_c) {
        return Err(Error::InvalidParameter(format!("({alpha_c}, {beta_c}) is not a stable complex-pole section")));
    }
    if omega_p.sin().abs() < 1e-12 {
        return Err(Error::InvalidParameter("omega_p must avoid 0 and pi".into()));
    }
    let cw = 2.0 * omega_p.cos();
    let u1 = 2.0 / (1.0 - alpha_c);
    let u2 = (beta_c + cw > alpha_c - 1.0).then(|| (cw + 2.0) / (beta_c + cw - alpha_c + 1.0));
    let u3 = (beta_c + cw < 1.0 - alpha_c).then(|| (cw - 2.0) / (beta_c + cw + alpha_c - 1.0));
    let lmax = [Some(u1), u2, u3].into_iter().flatten().fold(f64::INFINITY, f64::min);
    let at = |lambda: f64| (1.0 + lambda * (alpha_c - 1.0), -cw + lambda * (beta_c + cw));
    let (ae, be) = at(lmax);
    let endpoint_discriminant = be * be - 4.0 * ae;
    if lmax <= 1.0 {
        return Err(Error::NumericalFault(format!("upper bound {lmax} on lambda is not above 1")));
    }
    // β_r² − 4α_r is a quadratic in λ, negative at λ = 1 and positive at the endpoint,
    // so real poles hold exactly on (λ₊, λ_max] for its larger root λ₊.
    let (b0, b1) = (-cw, beta_c + cw);
    let (qa, qb, qc) = (b1 * b1, 2.0 * b0 * b1 - 4.0 * (alpha_c - 1.0), b0 * b0 - 4.0);
    let lambda_plus = if qa == 0.0 {
        -qc / qb
    } else {
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        if qb >= 0.0 {
            -2.0 * qc / (qb + disc)
        } else {
            (disc - qb) / (2.0 * qa)
        }
    };
    let lo = lambda_plus.max(1.0);
    for s in [0.5, 0.25, 0.75, 0.9, 0.1] {
        let lambda = lo + (lmax - lo) * s;
        let (alpha_r, beta_r) = at(lambda);
        if lambda > 1.0 && lambda < lmax && real_valid(alpha_r, beta_r) {
            return Ok(Lemma5Witness { alpha_c, beta_c, alpha_r, beta_r, lambda, u1, u2, u3, endpoint_discriminant });
        }
    }
    Err(Error::NumericalFault("no lambda in (1, min u) gives real poles".into()))
}

/// Which frequency convention the printed gain-phase integral reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// The integral equals the phase of f(e^{+jω_p}).
    Positive,
    /// The integral equals the phase of f(e^{−jω_p}).
    Negative,
}

fn require_minimum_phase(f: &RationalTF) -> Result<()> {
    if f.is_zero() {
        return Err(Error::Precondition("f is identically zero".into()));
    }
    if f.zeros().len() != f.poles().len() {
        return Err(Error::Precondition("f must be biproper (a zero at infinity is non-minimum-phase)".into()));
    }
    if f.zeros().iter().chain(f.poles()).any(|r| r.norm() >= 1.0) {
        return Err(Error::Precondition("f is not stable and minimum-phase".into()));
    }
    Ok(())
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 22)
}

/// −(sin ω_p/π) ∫₀^π (A(ω) − A(ω_p))/(cos ω − cos ω_p) dω with A = ln|f(e^{jω})|.
///
/// The integrand has a removable singularity at ω_p; it is excluded by a
/// symmetric window whose width is Richardson-extrapolated to zero.
pub fn gain_phase_integral(f: &RationalTF, omega_p: f64) -> Result<f64> {
    require_minimum_phase(f)?;
    if !(omega_p > 0.0 && omega_p < PI) {
        return Err(Error::InvalidParameter(format!("omega_p {omega_p} not in (0, pi)")));
    }
    let a_p = f.magnitude(omega_p)?.ln();
    let cp = omega_p.cos();
    let integrand = |w: f64| (f.magnitude(w).map(f64::ln).unwrap_or(f64::NAN) - a_p) / (w.cos() - cp);
    let windowed = |h: f64| simpson(&integrand, 0.0, omega_p - h, 1e-12) + simpson(&integrand, omega_p + h, PI, 1e-12);
    let h0 = 1e-2f64.min(0.25 * omega_p).min(0.25 * (PI - omega_p));
    let mut prev = 2.0 * windowed(0.5 * h0) - windowed(h0);
    let mut h = 0.5 * h0;
    for _ in 0..8 {
        let next = 2.0 * windowed(0.5 * h) - windowed(h);
        if (next - prev).abs() < 1e-10 {
            prev = next;
            break;
        }
        prev = next;
        h *= 0.5;
    }
    if !prev.is_finite() {
        return Err(Error::NumericalFault("gain-phase integral is not finite".into()));
    }
    Ok(-omega_p.sin() / PI * prev)
}

/// Decide the convention on a known minimum-phase function.
pub fn resolve_phase_convention() -> Result<PhaseConvention> {
    let f = RationalTF::new(vec![1.0, 0.5], vec![1.0, 0.25])?;
    let w = 1.0;
    let integral = gain_phase_integral(&f, w)?;
    let direct = f.response(w)?.arg();
    if (integral - direct).abs() <= (integral + direct).abs() {
        Ok(PhaseConvention::Positive)
    } else {
        Ok(PhaseConvention::Negative)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma6Check {
    pub omega_p: f64,
    pub phase: f64,
    pub rate: f64,
    pub nonpositive: bool,
    /// −|θ_f(ω_p)/sin ω_p|; absent when the peak sits at 0 or π.
    pub interior_bound: Option<f64>,
    pub interior_holds: bool,
    pub holds: bool,
}

/// θ′_f(ω_p) ≤ 0 and, for interior peaks, θ′_f(ω_p) ≤ −|θ_f(ω_p)/sin ω_p|.
pub fn lemma6_bound_check(f: &RationalTF) -> Result<Lemma6Check> {
    require_minimum_phase(f)?;
    let peak = f.linf_norm()?;
    let omega_p = peak.omega;
    // Normalize the DC sign so the continuous phase starts at 0.
    let g = if f.response(0.0)?.re < 0.0 { f.scale(-1.0) } else { f.clone() };
    let phase = g.unwrapped_phase(omega_p)?;
    let rate = g.phase_rate(omega_p)?;
    let nonpositive = rate <= BOUND_TOL;
    let interior = omega_p > 0.0 && omega_p < PI;
    let interior_bound = interior.then(|| -(phase / omega_p.sin()).abs());
    let interior_holds = interior_bound.map(|b| rate <= b + BOUND_TOL).unwrap_or(true);
    Ok(Lemma6Check {
        omega_p,
        phase: wrap(phase),
        rate,
        nonpositive,
        interior_bound,
        interior_holds,
        holds: nonpositive && interior_holds,
    })
}

/// Phase of x(e^{jω}) via direct evaluation, for comparison with the integral.
pub fn direct_phase(f: &RationalTF, omega: f64) -> Result<f64> {
    Ok(f.response(omega)?.arg())
}
