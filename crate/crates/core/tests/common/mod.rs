#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rirkit::casestudies::MaglevParams;
use rirkit::RationalTF;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Exact sampled response of k/((p² − s²)(τs + 1)) via the matrix exponential of a
/// controllable-canonical realization.
pub struct ZohOracle {
    ad: DMatrix<f64>,
    bd: DVector<f64>,
    cd: DVector<f64>,
}

impl ZohOracle {
    pub fn new(m: MaglevParams) -> Self {
        let MaglevParams { k, p, tau, t } = m;
        // s³ + s²/τ − p² s − p²/τ, numerator −k/τ
        let mut aug = DMatrix::<f64>::zeros(4, 4);
        aug[(0, 1)] = 1.0;
        aug[(1, 2)] = 1.0;
        aug[(2, 0)] = p * p / tau;
        aug[(2, 1)] = p * p;
        aug[(2, 2)] = -1.0 / tau;
        aug[(2, 3)] = 1.0;
        let e = (aug * t).exp();
        let ad = e.view((0, 0), (3, 3)).into_owned();
        let bd = e.view((0, 3), (3, 1)).column(0).into_owned();
        let cd = DVector::from_vec(vec![-k / tau, 0.0, 0.0]);
        Self { ad, bd, cd }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let n = self.ad.nrows();
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let d = if i == j { z } else { c(0.0, 0.0) };
            d - c(self.ad[(i, j)], 0.0)
        });
        let b = DVector::<Complex64>::from_fn(n, |i, _| c(self.bd[i], 0.0));
        let x = m.lu().solve(&b).expect("z is not an eigenvalue");
        (0..n).map(|i| x[i] * self.cd[i]).sum()
    }
}

/// Stable real-pole all-pass c·Π (a z + 1)/(z + a).
pub fn random_real_allpass(r: &mut ChaCha8Rng, order: usize) -> (RationalTF, Vec<f64>, f64) {
    let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
    let params: Vec<f64> = (0..order).map(|_| r.random_range(-0.98..0.98)).collect();
    let f = params
        .iter()
        .fold(RationalTF::constant(sign), |acc, &a| acc.mul(&RationalTF::new(vec![a, 1.0], vec![1.0, a]).unwrap()));
    (f, params, sign)
}

fn random_root(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(r.random_range(lo..hi), r.random_range(0.05..PI - 0.05))
}

/// Roots closed under conjugation with moduli in [lo, hi).
pub fn random_roots(r: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if count - out.len() >= 2 && r.random_bool(0.5) {
            let z = random_root(r, lo, hi);
            out.push(z);
            out.push(z.conj());
        } else {
            let m = r.random_range(lo..hi);
            out.push(c(if r.random_bool(0.5) { m } else { -m }, 0.0));
        }
    }
    out
}

/// Stable biproper minimum-phase function with an optional lightly damped resonance.
pub fn random_min_phase(r: &mut ChaCha8Rng, resonant: bool) -> RationalTF {
    let order = r.random_range(1..=4);
    let zeros = random_roots(r, order, 0.05, 0.8);
    let mut poles = random_roots(r, order, 0.05, 0.8);
    if resonant && order >= 2 {
        let z = Complex64::from_polar(r.random_range(0.85..0.97), r.random_range(0.3..2.8));
        poles.truncate(order - 2);
        poles.push(z);
        poles.push(z.conj());
    }
    let gain = r.random_range(0.2..5.0);
    RationalTF::from_zpk(gain, zeros, poles).unwrap()
}

/// Strictly proper loop with one real unstable pole or one unstable conjugate pair,
/// plus stable dynamics and a random gain.
pub fn random_unstable_loop(r: &mut ChaCha8Rng) -> (RationalTF, usize) {
    let mut poles = Vec::new();
    let n = if r.random_bool(0.5) {
        let m = r.random_range(1.05..3.0);
        poles.push(c(if r.random_bool(0.5) { m } else { -m }, 0.0));
        1
    } else {
        let z = random_root(r, 1.05, 2.0);
        poles.push(z);
        poles.push(z.conj());
        2
    };
    let stable = r.random_range(0..=2);
    poles.extend(random_roots(r, stable, 0.05, 0.9));
    let nz = r.random_range(0..poles.len());
    let zeros = random_roots(r, nz, 0.05, 2.5);
    let gain = 10f64.powf(r.random_range(-1.0..1.0)) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
    (RationalTF::from_zpk(gain, zeros, poles).unwrap(), n)
}

/// Proper plant with poles and zeros kept away from the unit circle.
pub fn random_generic_tf(r: &mut ChaCha8Rng) -> RationalTF {
    let np = r.random_range(1..=5);
    let nz = r.random_range(0..=np);
    let pick = |r: &mut ChaCha8Rng, k: usize| {
        let mut v = Vec::with_capacity(k);
        while v.len() < k {
            let m = if r.random_bool(0.3) { r.random_range(1.1..2.5) } else { r.random_range(0.1..0.9) };
            if k - v.len() >= 2 && r.random_bool(0.5) {
                let z = Complex64::from_polar(m, r.random_range(0.05..PI - 0.05));
                v.push(z);
                v.push(z.conj());
            } else {
                v.push(c(if r.random_bool(0.5) { m } else { -m }, 0.0));
            }
        }
        v
    };
    let poles = pick(r, np);
    let zeros = pick(r, nz);
    RationalTF::from_zpk(r.random_range(0.5..2.0), zeros, poles).unwrap()
}

/// ln|g| and unwrapped-phase slopes by central differences.
pub fn finite_difference_rates(g: &RationalTF, w: f64, h: f64) -> (f64, f64) {
    let p = g.response(w + h).unwrap();
    let m = g.response(w - h).unwrap();
    let gain = (p.norm().ln() - m.norm().ln()) / (2.0 * h);
    let phase = (p / m).arg() / (2.0 * h);
    (gain, phase)
}

/// Max |x − y| over the best greedy matching of two root lists.
pub fn match_roots(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (i, d) =
            pool.iter().enumerate().map(|(i, y)| (i, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
        worst = worst.max(d);
        pool.remove(i);
    }
    worst
}

/// Eigenvalues of the companion matrix of a descending coefficient list.
pub fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == 0 {
            -coeffs[j + 1] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    m.complex_eigenvalues().iter().copied().collect()
}

/// Roots of den − num of a loop, from the companion matrix.
pub fn loop_roots(l: &RationalTF) -> Vec<Complex64> {
    companion_roots(l.den().sub(l.num()).coeffs())
}
