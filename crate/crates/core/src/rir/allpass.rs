use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::RationalTF;

/// Wrap an angle into (−π, π].
pub fn wrap(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// `scale · c · (a z + 1)/(z + a)`, or the constant `scale · c` when `a` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllPassSpec {
    pub c: i8,
    pub a: Option<f64>,
    pub scale: f64,
}

impl AllPassSpec {
    pub fn constant(c: i8, scale: f64) -> Self {
        Self { c, a: None, scale }
    }

    pub fn to_tf(&self) -> Result<RationalTF> {
        let k = self.scale * f64::from(self.c);
        match self.a {
            None => Ok(RationalTF::constant(k)),
            Some(a) if a.abs() < 1.0 => RationalTF::new(vec![k * a, k], vec![1.0, a]),
            Some(a) => Err(Error::InvalidParameter(format!("all-pass parameter {a} not in (-1, 1)"))),
        }
    }

    /// Phase of the unit-scale all-pass at e^{jω}.
    pub fn phase(&self, omega: f64) -> f64 {
        let base = match self.a {
            None => 0.0,
            Some(a) => first_order_phase(a, omega),
        };
        wrap(base + if self.c < 0 { PI } else { 0.0 })
    }

    pub fn phase_rate(&self, omega: f64) -> f64 {
        match self.a {
            None => 0.0,
            Some(a) => first_order_rate(a, omega),
        }
    }
}

/// Phase of (az+1)/(z+a) at e^{jω}: 2·arg(1 + a e^{jω}) − ω.
pub fn first_order_phase(a: f64, omega: f64) -> f64 {
    2.0 * (Complex64::new(1.0, 0.0) + Complex64::from_polar(a, omega)).arg() - omega
}

pub fn first_order_rate(a: f64, omega: f64) -> f64 {
    (a * a - 1.0) / (Complex64::from_polar(1.0, omega) + a).norm_sqr()
}

/// First-order all-pass (unit scale) whose phase at e^{jω_p} equals θ_p.
pub fn allpass_phase_match(omega_p: f64, theta_p: f64) -> Result<AllPassSpec> {
    if !(omega_p > 0.0 && omega_p < PI) {
        return Err(Error::InvalidParameter(format!("omega_p {omega_p} not in (0, pi)")));
    }
    if !theta_p.is_finite() {
        return Err(Error::InvalidParameter("non-finite phase".into()));
    }
    let t = wrap(theta_p);
    if t.abs() < 1e-14 {
        return Ok(AllPassSpec::constant(1, 1.0));
    }
    if PI - t.abs() < 1e-14 {
        return Ok(AllPassSpec::constant(-1, 1.0));
    }
    // c = +1 sweeps (−π, 0) as a goes −1 → 1; c = −1 shifts that branch by π.
    let (c, target) = if t < 0.0 { (1i8, t) } else { (-1i8, t - PI) };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while hi - lo > 1e-16 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if first_order_phase(mid, omega_p) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    let spec = AllPassSpec { c, a: Some(a), scale: 1.0 };
    let err = wrap(spec.phase(omega_p) - t).abs();
    if err > 1e-10 {
        return Err(Error::NumericalFault(format!("phase match residual {err:e}")));
    }
    let s = omega_p.sin();
    let lhs = first_order_phase(a, omega_p).sin();
    let rhs = (a * a - 1.0) * s / (Complex64::from_polar(1.0, omega_p) + a).norm_sqr();
    if (lhs - rhs).abs() > 1e-9 {
        return Err(Error::NumericalFault(format!("sine identity off by {:e}", lhs - rhs)));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delay_is_a_zero() {
        let s = allpass_phase_match(PI / 2.0, -PI / 2.0).unwrap();
        assert_eq!(s.c, 1);
        assert!(s.a.unwrap().abs() < 1e-12);
    }

    #[test]
    fn constants() {
        assert_eq!(allpass_phase_match(1.0, 0.0).unwrap(), AllPassSpec::constant(1, 1.0));
        assert_eq!(allpass_phase_match(1.0, PI).unwrap(), AllPassSpec::constant(-1, 1.0));
        assert_eq!(allpass_phase_match(1.0, -PI).unwrap(), AllPassSpec::constant(-1, 1.0));
    }

    #[test]
    fn negative_branch() {
        let s = allpass_phase_match(PI / 3.0, PI / 2.0).unwrap();
        assert_eq!(s.c, -1);
        let f = s.to_tf().unwrap();
        let got = f.response(PI / 3.0).unwrap().arg();
        assert!((got - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_boundary_frequency() {
        assert!(allpass_phase_match(0.0, 0.3).is_err());
        assert!(allpass_phase_match(PI, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn matches_closed_form(w in 0.05f64..3.09, t in -3.1f64..3.1) {
            prop_assume!(t.abs() > 1e-6);
            let s = allpass_phase_match(w, t).unwrap();
            // half-angle solution of the phase identity
            let base = if t < 0.0 { t } else { t - PI };
            let phi = 0.5 * (base + w);
            let a = phi.sin() / (w - phi).sin();
            prop_assert!((s.a.unwrap() - a).abs() < 1e-7 * (1.0 + a.abs()));
            let v = s.to_tf().unwrap().response(w).unwrap();
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(wrap(v.arg() - t).abs() < 1e-10);
        }
    }
}
