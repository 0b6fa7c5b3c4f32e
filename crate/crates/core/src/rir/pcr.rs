//! Randomized search for the largest phase-change rate among stable all-pass
//! functions with a prescribed phase at one frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::allpass::{allpass_phase_match, wrap};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 6;

/// A stable all-pass product `c · Π (a z + 1)/(z + a) · Π (α z² + β z + 1)/(z² + β z + α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllPassProduct {
    pub c: i8,
    pub first_order: Vec<f64>,
    pub second_order: Vec<(f64, f64)>,
}

impl AllPassProduct {
    pub fn order(&self) -> usize {
        self.first_order.len() + 2 * self.second_order.len()
    }

    fn poles(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.first_order.iter().map(|&a| Complex64::new(-a, 0.0)).collect();
        for &(alpha, beta) in &self.second_order {
            let disc = Complex64::new(beta * beta - 4.0 * alpha, 0.0).sqrt();
            out.push((-beta + disc) * 0.5);
            out.push((-beta - disc) * 0.5);
        }
        out
    }

    /// Value at e^{jω} as a product of Blaschke factors (1 − p̄z)/(z − p).
    pub fn response(&self, omega: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, omega);
        self.poles().iter().fold(Complex64::new(f64::from(self.c), 0.0), |acc, p| {
            acc * (Complex64::new(1.0, 0.0) - p.conj() * z) / (z - p)
        })
    }

    pub fn phase(&self, omega: f64) -> f64 {
        self.response(omega).arg()
    }

    /// Each Blaschke factor contributes −(1 − |p|²)/|e^{jω} − p|².
    pub fn phase_rate(&self, omega: f64) -> f64 {
        let z = Complex64::from_polar(1.0, omega);
        -self.poles().iter().map(|p| (1.0 - p.norm_sqr()) / (z - p).norm_sqr()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcrSearch {
    pub best: f64,
    pub bound: f64,
    pub best_candidate: AllPassProduct,
    /// Phase rate of the matched first-order (or constant) all-pass.
    pub first_order_rate: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Ceiling on θ′_f(ω_p) over stable all-pass f with θ_f(ω_p) = θ_p.
pub fn pcr_bound(omega_p: f64, theta_p: f64) -> f64 {
    let s = omega_p.sin();
    if s.abs() < 1e-15 {
        0.0
    } else {
        -(theta_p.sin() / s).abs()
    }
}

fn at_edge(omega: f64) -> bool {
    omega == 0.0 || omega == PI
}

fn sample_first_order(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.3) {
        let gap = 10f64.powf(-rng.random_range(1.0..6.0));
        if rng.random_bool(0.5) {
            1.0 - gap
        } else {
            gap - 1.0
        }
    } else {
        rng.random_range(-0.999..0.999)
    }
}

fn sample_second_order(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let r: f64 = if rng.random_bool(0.3) {
        1.0 - 10f64.powf(-rng.random_range(1.0..5.0))
    } else {
        rng.random_range(0.02..0.999)
    };
    let ang: f64 = rng.random_range(0.01..(PI - 0.01));
    (r * r, -2.0 * r * ang.cos())
}

pub fn pcr_max_search(omega_p: f64, theta_p: f64, max_order: usize, trials: usize, seed: u64) -> Result<PcrSearch> {
    if !(0.0..=PI).contains(&omega_p) {
        return Err(Error::InvalidParameter(format!("omega_p {omega_p} outside [0, pi]")));
    }
    if max_order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!("max_order {max_order} exceeds {MAX_ORDER}")));
    }
    let target = wrap(theta_p);
    let edge = at_edge(omega_p);
    if edge && target.abs() > 1e-12 && PI - target.abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "phase {theta_p} unreachable by a real all-pass at omega {omega_p}"
        )));
    }
    let bound = pcr_bound(omega_p, target);
    let first_order_rate = if edge { 0.0 } else { allpass_phase_match(omega_p, target)?.phase_rate(omega_p) };

    let mut best: Option<(f64, AllPassProduct)> = None;
    let (mut evaluated, mut skipped) = (0, 0);
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        match candidate(&mut rng, omega_p, target, max_order) {
            Some(cand) => {
                evaluated += 1;
                let rate = cand.phase_rate(omega_p);
                if best.as_ref().map(|b| rate > b.0).unwrap_or(true) {
                    best = Some((rate, cand));
                }
            }
            None => skipped += 1,
        }
    }
    let (best, best_candidate) = best.ok_or_else(|| Error::NoConvergence("every candidate skipped".into()))?;
    Ok(PcrSearch { best, bound, best_candidate, first_order_rate, evaluated, skipped })
}

fn candidate(rng: &mut ChaCha8Rng, omega_p: f64, target: f64, max_order: usize) -> Option<AllPassProduct> {
    let order = rng.random_range(0..=max_order);
    let mut cand = AllPassProduct { c: 1, first_order: vec![], second_order: vec![] };
    let free = order.saturating_sub(1);
    while cand.order() < free {
        if free - cand.order() >= 2 && rng.random_bool(0.5) {
            cand.second_order.push(sample_second_order(rng));
        } else {
            cand.first_order.push(sample_first_order(rng));
        }
    }
    let residual = wrap(target - cand.phase(omega_p));
    if order == 0 || at_edge(omega_p) {
        if order > 0 {
            cand.first_order.push(sample_first_order(rng));
        }
        // Real all-pass phase at 0 or π is 0 or π; the global sign fixes it.
        let off = wrap(target - cand.phase(omega_p)).abs();
        if off < 1e-9 {
            return Some(cand);
        }
        if PI - off < 1e-9 {
            cand.c = -cand.c;
            return Some(cand);
        }
        return None;
    }
    let fix = allpass_phase_match(omega_p, residual).ok()?;
    cand.c = fix.c;
    if let Some(a) = fix.a {
        cand.first_order.push(a);
    }
    let err = wrap(cand.phase(omega_p) - target).abs();
    (err < 1e-8).then_some(cand)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_transfer_function() {
        let cand = AllPassProduct { c: -1, first_order: vec![0.3, -0.7], second_order: vec![(0.49, 0.2)] };
        let tf = crate::transfer::RationalTF::new(vec![-0.3, -1.0], vec![1.0, 0.3])
            .unwrap()
            .mul(&crate::transfer::RationalTF::new(vec![-0.7, 1.0], vec![1.0, -0.7]).unwrap())
            .mul(&crate::transfer::RationalTF::new(vec![0.49, 0.2, 1.0], vec![1.0, 0.2, 0.49]).unwrap());
        for &w in &[0.1, 1.0, 2.5] {
            assert!((cand.response(w) - tf.response(w).unwrap()).norm() < 1e-12);
            assert!((cand.phase_rate(w) - tf.phase_rate(w).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn() {
        let r = pcr_max_search(PI / 2.0, -PI / 2.0, 4, 20000, 7).unwrap();
        assert!(r.best <= -1.0 + 1e-6 && r.best >= -1.0 - 1e-3, "{}", r.best);
        assert!((r.first_order_rate + 1.0).abs() < 1e-9);
    }

    #[test]
    fn nyquist_frequency() {
        let r = pcr_max_search(PI, PI, 4, 20000, 7).unwrap();
        assert!(r.best <= 0.0);
        assert_eq!(r.best, 0.0);
        assert_eq!(r.best_candidate.order(), 0);
        assert_eq!(r.best_candidate.c, -1);
    }

    #[test]
    fn oblique_point() {
        let r = pcr_max_search(PI / 3.0, -PI / 4.0, 4, 20000, 11).unwrap();
        let b = -((PI / 4.0).sin() / (PI / 3.0).sin()).abs();
        assert!(r.best <= b + 1e-6 && r.best >= b - 1e-3, "{} vs {}", r.best, b);
    }

    #[test]
    fn deterministic() {
        let a = pcr_max_search(1.0, 0.4, 4, 500, 3).unwrap();
        let b = pcr_max_search(1.0, 0.4, 4, 500, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn boundary_rates_are_negative() {
        let cand = AllPassProduct { c: 1, first_order: vec![0.4], second_order: vec![(0.3, -0.5)] };
        for s in [
            AllPassProduct { first_order: vec![], ..cand.clone() },
            AllPassProduct { second_order: vec![], ..cand.clone() },
        ] {
            assert!(s.phase_rate(0.0) < 0.0 && s.phase_rate(PI) < 0.0);
        }
    }
}
