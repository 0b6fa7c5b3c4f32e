//! Real polynomials in descending powers of z, plus a simultaneous-iteration root finder.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leading coefficients below this fraction of the largest coefficient are dropped.
pub const TRIM_TOL: f64 = 1e-12;
/// Default radius for merging roots into one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Imaginary parts below this (relative) are treated as real.
pub const PAIRING_TOL: f64 = 1e-9;

const MAX_ITER: usize = 500;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
    zero: bool,
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Polynomial::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Vec<f64> {
        p.coeffs
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl Polynomial {
    /// Build from descending coefficients, trimming negligible leading terms.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        if let Some(&bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self::trimmed(coeffs))
    }

    fn trimmed(mut coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Self::zero();
        }
        let cut = coeffs.iter().position(|c| c.abs() > TRIM_TOL * scale).unwrap_or(0);
        coeffs.drain(..cut);
        Self { coeffs, zero: false }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0], zero: true }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Self { coeffs: vec![c], zero: false }
        }
    }

    /// `lead * prod (z - r)`. Imaginary residue from unpaired roots is discarded.
    pub fn from_roots(roots: &[Complex64], lead: f64) -> Self {
        let mut acc = vec![Complex64::new(lead, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::trimmed(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero();
        }
        let c = self.coeffs[..n].iter().enumerate().map(|(i, &c)| c * (n - i) as f64).collect();
        Self::trimmed(c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::trimmed(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        Self::trimmed(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.zero || other.zero {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::trimmed(out)
    }

    pub fn roots(&self) -> Result<RootSet> {
        if self.zero {
            return Err(Error::UndefinedRoots);
        }
        let roots = find_roots(&self.coeffs);
        let residual = roots.iter().map(|&r| self.eval(r).norm()).fold(0.0, f64::max);
        Ok(RootSet { roots, residual })
    }
}

/// Roots of a polynomial, flattened (a double root appears twice).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootCluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.roots.iter()
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Single-linkage grouping of roots closer than `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<RootCluster> {
        let n = self.roots.len();
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if (self.roots[i] - self.roots[j]).norm() <= tol && label[i] != label[j] {
                        let (lo, hi) = (label[i].min(label[j]), label[i].max(label[j]));
                        for l in label.iter_mut() {
                            if *l == hi {
                                *l = lo;
                            }
                        }
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut out = Vec::new();
        for i in 0..n {
            if label[i] != i {
                continue;
            }
            let members: Vec<Complex64> = (0..n).filter(|&j| label[j] == i).map(|j| self.roots[j]).collect();
            let m = members.len();
            let value = members.iter().sum::<Complex64>() / m as f64;
            out.push(RootCluster { value, multiplicity: m });
        }
        out
    }
}

fn find_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let lead = coeffs[0];
    let mut a: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let mut roots = Vec::new();
    while a.len() > 1 && *a.last().unwrap() == 0.0 {
        a.pop();
        roots.push(Complex64::new(0.0, 0.0));
    }
    match a.len() - 1 {
        0 => {}
        1 => roots.push(Complex64::new(-a[1], 0.0)),
        2 => roots.extend(quadratic(a[1], a[2])),
        _ => {
            let approx = aberth(&a).unwrap_or_else(|| deflation(&a));
            roots.extend(approx.into_iter().map(|r| polish(&a, r)));
        }
    }
    pair_conjugates(&mut roots);
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    roots
}

/// Roots of z^2 + b z + c without cancellation.
fn quadratic(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sign = if b >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (b + sign * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(-0.5 * b, im), Complex64::new(-0.5 * b, -im)]
    }
}

fn horner_with_derivative(a: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(a[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &a[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn aberth(a: &[f64]) -> Option<Vec<Complex64>> {
    let n = a.len() - 1;
    let radius =
        a[1..].iter().enumerate().map(|(i, c)| c.abs().powf(1.0 / (i + 1) as f64)).fold(0.0f64, f64::max).max(1e-3);
    let centre = -a[1] / n as f64;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::new(centre, 0.0) + Complex64::from_polar(radius, ang)
        })
        .collect();
    for _ in 0..MAX_ITER {
        let mut worst = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner_with_derivative(a, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                return None;
            }
            z[i] -= w;
            worst = worst.max(w.norm() / z[i].norm().max(1.0));
        }
        if worst <= 4.0 * f64::EPSILON {
            return Some(z);
        }
    }
    // Multiple roots converge only linearly; accept when the residual is tiny.
    let scale: f64 = a.iter().map(|c| c.abs()).sum();
    let ok = z.iter().all(|&r| {
        let (p, _) = horner_with_derivative(a, r);
        p.norm() <= 1e-8 * scale * r.norm().max(1.0).powi(n as i32)
    });
    ok.then_some(z)
}

/// Newton on successively deflated polynomials; the stagnation fallback.
fn deflation(a: &[f64]) -> Vec<Complex64> {
    let mut work: Vec<Complex64> = a.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut out = Vec::new();
    while work.len() > 1 {
        let mut z = Complex64::new(0.4, 0.9);
        for _ in 0..MAX_ITER {
            let mut p = work[0];
            let mut dp = Complex64::new(0.0, 0.0);
            for &c in &work[1..] {
                dp = dp * z + p;
                p = p * z + c;
            }
            if dp.norm() == 0.0 {
                z += Complex64::new(1e-3, 1e-3);
                continue;
            }
            let step = p / dp;
            z -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
                break;
            }
        }
        let mut q = Vec::with_capacity(work.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &work[..work.len() - 1] {
            acc = acc * z + c;
            q.push(acc);
        }
        work = q;
        out.push(z);
    }
    out
}

fn polish(a: &[f64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = horner_with_derivative(a, z);
    for _ in 0..3 {
        let (_, dp) = horner_with_derivative(a, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = horner_with_derivative(a, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

/// Snap near-real roots onto the axis and force exact conjugate symmetry.
fn pair_conjugates(roots: &mut [Complex64]) {
    for r in roots.iter_mut() {
        if r.im.abs() <= PAIRING_TOL * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n)
            .filter(|&j| !used[j] && j != i && roots[j].im < 0.0)
            .min_by(|&x, &y| (roots[x] - target).norm().total_cmp(&(roots[y] - target).norm()));
        match partner {
            Some(j) => {
                let mid = (roots[i] + roots[j].conj()) * 0.5;
                roots[i] = mid;
                roots[j] = mid.conj();
                used[i] = true;
                used[j] = true;
            }
            None => roots[i].im = 0.0,
        }
    }
    for i in 0..n {
        if !used[i] && roots[i].im < 0.0 {
            roots[i].im = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let p = Polynomial::new(vec![1.0, -3.0, 2.0]).unwrap();
        assert_eq!(p.eval(c(1.0, 0.0)), c(0.0, 0.0));
        assert_eq!(Polynomial::constant(1.0).eval(c(0.3, -7.0)), c(1.0, 0.0));
        let q = Polynomial::new(vec![1.0, -2.000985, 1.000994]).unwrap();
        assert!((q.eval(c(1.0, 0.0)).re - 9.0e-6).abs() < 1e-12);
    }

    #[test]
    fn trimming_and_zero() {
        let p = Polynomial::new(vec![1e-20, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        let z = Polynomial::new(vec![0.0, 0.0]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
        assert!(!Polynomial::constant(0.5).is_zero());
        assert!(Polynomial::new(vec![]).is_err());
        assert!(Polynomial::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn simple_roots() {
        let r = Polynomial::new(vec![1.0, -3.0, 2.0]).unwrap().roots().unwrap();
        assert_eq!(r.roots, vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let r = Polynomial::new(vec![1.0, 0.0, 1.0]).unwrap().roots().unwrap();
        assert_eq!(r.roots, vec![c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(Polynomial::zero().roots().is_err());
        assert!(Polynomial::constant(3.0).roots().unwrap().is_empty());
    }

    #[test]
    fn zero_roots_are_exact() {
        let r = Polynomial::new(vec![1.0, -0.5, 0.0, 0.0]).unwrap().roots().unwrap();
        assert_eq!(r.roots, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
    }

    #[test]
    fn degree_eight_product() {
        let truth = [
            c(0.3, 0.0),
            c(-1.7, 0.0),
            c(0.9, 0.4),
            c(0.9, -0.4),
            c(-0.2, 1.1),
            c(-0.2, -1.1),
            c(2.5, 0.0),
            c(-0.05, 0.0),
        ];
        let p = Polynomial::from_roots(&truth, 2.0);
        let got = p.roots().unwrap();
        for t in truth {
            let best = got.iter().map(|r| (r - t).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-7, "{t} missing, nearest {best}");
        }
    }

    #[test]
    fn repeated_roots_cluster() {
        let p = Polynomial::from_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)], 1.0);
        let rs = p.roots().unwrap();
        let cl = rs.clusters(1e-5);
        assert_eq!(cl.len(), 2);
        let dbl = cl.iter().find(|k| k.multiplicity == 2).unwrap();
        assert!((dbl.value - c(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn derivative_examples() {
        let p = Polynomial::new(vec![1.0, -3.0, 2.0]).unwrap();
        assert_eq!(p.derivative().coeffs(), &[2.0, -3.0]);
        assert!(Polynomial::constant(5.0).derivative().is_zero());
        // (z-1)^3 against central differences
        let cube = Polynomial::new(vec![1.0, -3.0, 3.0, -1.0]).unwrap();
        let d = cube.derivative();
        for &x in &[-1.3, 0.2, 0.77, 2.4, 5.0] {
            let h = 1e-6;
            let fd = (cube.eval_real(x + h) - cube.eval_real(x - h)) / (2.0 * h);
            let an = d.eval_real(x);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
            assert!((an - 3.0 * (x - 1.0) * (x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]).unwrap();
        let b = Polynomial::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(a.mul(&b).coeffs(), &[1.0, 0.0, -1.0]);
        assert_eq!(a.sub(&b).coeffs(), &[2.0]);
        assert!(a.sub(&a).is_zero());
    }

    fn root_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.5f64..1.5, 0.05f64..1.5, any::<bool>()), 1..=6).prop_map(|v| {
            let mut out = Vec::new();
            for (re, im, cplx) in v {
                if cplx {
                    out.push(c(re, im));
                    out.push(c(re, -im));
                } else {
                    out.push(c(re + 0.1 * im, 0.0));
                }
            }
            out.truncate(12);
            if out.last().map(|r| r.im > 0.0).unwrap_or(false) {
                out.pop();
            }
            out
        })
    }

    proptest! {
        #[test]
        fn reconstruction(roots in root_strategy(), lead in 0.5f64..3.0) {
            prop_assume!(!roots.is_empty());
            let p = Polynomial::from_roots(&roots, lead);
            let rs = p.roots().unwrap();
            prop_assert_eq!(rs.len(), p.degree());
            let back = Polynomial::from_roots(&rs.roots, p.leading());
            let scale = p.max_abs_coeff();
            for (x, y) in p.coeffs().iter().zip(back.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-6 * scale);
            }
            prop_assert!(rs.residual <= 1e-8 * (1.0 + scale));
        }

        #[test]
        fn conjugate_closed(coeffs in prop::collection::vec(-2.0f64..2.0, 3..10)) {
            let p = Polynomial::new(coeffs).unwrap();
            prop_assume!(!p.is_zero() && p.degree() >= 1);
            let rs = p.roots().unwrap();
            for r in &rs.roots {
                let hit = rs.roots.iter().any(|s| (s - r.conj()).norm() <= 1e-9 * r.norm().max(1.0));
                prop_assert!(hit);
            }
        }

        #[test]
        fn derivative_matches_fd(coeffs in prop::collection::vec(-2.0f64..2.0, 2..10), w in -3.1f64..3.1) {
            let p = Polynomial::new(coeffs).unwrap();
            let z = Complex64::from_polar(1.0, w);
            let h = 1e-6;
            let fd = (p.eval(z + h) - p.eval(z - h)) / (2.0 * h);
            let an = p.derivative().eval(z);
            prop_assert!((fd - an).norm() <= 1e-4 * an.norm().max(1.0));
        }
    }
}
