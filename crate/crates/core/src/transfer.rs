//! Real-rational transfer functions evaluated on the unit circle.
//!
//! Coefficients are kept for Horner evaluation and serialization, but every
//! frequency-domain quantity (gain, phase, log-derivative) is computed from the
//! factored form. Resonances a few 1e-4 away from the unit circle lose most of
//! their significant digits when evaluated from expanded coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Zero/pole pairs closer than this are cancelled on construction.
pub const CANCEL_TOL: f64 = 1e-8;
/// Factors handed over directly (ZPK input, products) are exact, so only coincident roots cancel.
const PRODUCT_CANCEL_TOL: f64 = 1e-13;

const HIT_TOL: f64 = 1e-12;
const MAX_GRID: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
    gain: f64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
}

impl PartialEq for RationalTF {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

#[derive(Serialize, Deserialize)]
struct TfJson {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl Serialize for RationalTF {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TfJson { num: self.num.coeffs().to_vec(), den: self.den.coeffs().to_vec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalTF {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TfJson::deserialize(d)?;
        RationalTF::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}

/// Log-derivative data at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeSample {
    pub omega: f64,
    pub value: Complex64,
    pub gain_log: f64,
    pub phase: f64,
    pub gain_rate: f64,
    pub phase_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakGain {
    pub norm: f64,
    pub omega: f64,
    pub unique: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassName {
    #[serde(rename = "G1_boundary")]
    G1Boundary,
    #[serde(rename = "G2_interior")]
    G2Interior,
    #[serde(rename = "G1_interior")]
    G1Interior,
    #[serde(rename = "Gn_other")]
    GnOther,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassTag {
    pub n_unstable: usize,
    pub pip: bool,
    pub peak_omega: f64,
    pub peak_gain: f64,
    pub peak_unique: bool,
    pub class_name: ClassName,
}

impl ClassTag {
    pub fn peak_at_boundary(&self) -> bool {
        self.peak_omega == 0.0 || self.peak_omega == PI
    }
}

fn cis(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, omega)
}

fn cancel_common(zeros: &mut Vec<Complex64>, poles: &mut Vec<Complex64>, tol: f64) -> bool {
    let mut cancelled = false;
    let mut i = 0;
    while i < zeros.len() {
        let hit = poles
            .iter()
            .enumerate()
            .filter(|(_, p)| (zeros[i] - **p).norm() <= tol * p.norm().max(1.0))
            .min_by(|a, b| (zeros[i] - a.1).norm().total_cmp(&(zeros[i] - b.1).norm()))
            .map(|(j, _)| j);
        match hit {
            Some(j) => {
                zeros.remove(i);
                poles.remove(j);
                cancelled = true;
            }
            None => i += 1,
        }
    }
    cancelled
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::from_polys(Polynomial::new(num)?, Polynomial::new(den)?)
    }

    pub fn from_polys(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if !num.is_zero() && num.degree() > den.degree() {
            return Err(Error::Improper { num: num.degree(), den: den.degree() });
        }
        let lead = den.leading();
        let num = num.scale(1.0 / lead);
        let den = den.scale(1.0 / lead);
        let poles = den.roots()?.roots;
        if num.is_zero() {
            return Ok(Self { num, den, gain: 0.0, zeros: vec![], poles });
        }
        let zeros = num.roots()?.roots;
        let gain = num.leading();
        Ok(Self::assemble(num, den, gain, zeros, poles, CANCEL_TOL))
    }

    /// Build from gain, zeros and poles. Complex entries must come in conjugate pairs.
    pub fn from_zpk(gain: f64, zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self> {
        if !gain.is_finite() {
            return Err(Error::NonFinite(gain));
        }
        if gain != 0.0 && zeros.len() > poles.len() {
            return Err(Error::Improper { num: zeros.len(), den: poles.len() });
        }
        let den = Polynomial::from_roots(&poles, 1.0);
        if gain == 0.0 {
            return Ok(Self { num: Polynomial::zero(), den, gain: 0.0, zeros: vec![], poles });
        }
        let num = Polynomial::from_roots(&zeros, gain);
        Ok(Self::assemble(num, den, gain, zeros, poles, PRODUCT_CANCEL_TOL))
    }

    fn assemble(
        num: Polynomial,
        den: Polynomial,
        gain: f64,
        mut zeros: Vec<Complex64>,
        mut poles: Vec<Complex64>,
        tol: f64,
    ) -> Self {
        if cancel_common(&mut zeros, &mut poles, tol) {
            let num = Polynomial::from_roots(&zeros, gain);
            let den = Polynomial::from_roots(&poles, 1.0);
            Self { num, den, gain, zeros, poles }
        } else {
            Self { num, den, gain, zeros, poles }
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_zpk(c, vec![], vec![]).expect("finite constant")
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.gain == 0.0
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.zeros.len() < self.poles.len()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            let poles = [self.poles.clone(), other.poles.clone()].concat();
            return Self::from_zpk(0.0, vec![], poles).expect("zero product");
        }
        let zeros = [self.zeros.clone(), other.zeros.clone()].concat();
        let poles = [self.poles.clone(), other.poles.clone()].concat();
        Self::assemble(
            self.num.mul(&other.num),
            self.den.mul(&other.den),
            self.gain * other.gain,
            zeros,
            poles,
            PRODUCT_CANCEL_TOL,
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 || self.is_zero() {
            return Self::from_zpk(0.0, vec![], self.poles.clone()).expect("zero scale");
        }
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
            gain: self.gain * k,
            zeros: self.zeros.clone(),
            poles: self.poles.clone(),
        }
    }

    fn check_hit(&self, z: Complex64) -> Result<()> {
        if self.poles.iter().any(|p| (z - p).norm() <= HIT_TOL * p.norm().max(1.0)) {
            return Err(Error::PoleHit { re: z.re, im: z.im });
        }
        Ok(())
    }

    /// Horner evaluation of num(z)/den(z).
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        self.check_hit(z)?;
        let d = self.den.eval(z);
        if d.norm() == 0.0 {
            return Err(Error::PoleHit { re: z.re, im: z.im });
        }
        Ok(self.num.eval(z) / d)
    }

    /// Evaluation through the factored form; accurate near clustered roots.
    pub fn eval_factored(&self, z: Complex64) -> Result<Complex64> {
        self.check_hit(z)?;
        let mut v = Complex64::new(self.gain, 0.0);
        let (nz, np) = (self.zeros.len(), self.poles.len());
        for k in 0..nz.max(np) {
            if k < nz {
                v *= z - self.zeros[k];
            }
            if k < np {
                v /= z - self.poles[k];
            }
        }
        Ok(v)
    }

    /// g(e^{jω}).
    pub fn response(&self, omega: f64) -> Result<Complex64> {
        self.eval_factored(cis(omega))
    }

    pub fn magnitude(&self, omega: f64) -> Result<f64> {
        Ok(self.response(omega)?.norm())
    }

    /// q = d/dω log g(e^{jω}); Re q is the gain rate, Im q the phase rate.
    pub fn log_rate(&self, omega: f64) -> Result<Complex64> {
        let z = cis(omega);
        let mut s = Complex64::new(0.0, 0.0);
        for r in &self.zeros {
            let d = z - r;
            if d.norm() <= HIT_TOL {
                return Err(Error::SingularFrequency(omega));
            }
            s += d.inv();
        }
        for p in &self.poles {
            let d = z - p;
            if d.norm() <= HIT_TOL {
                return Err(Error::SingularFrequency(omega));
            }
            s -= d.inv();
        }
        Ok(Complex64::i() * z * s)
    }

    pub fn gain_rate(&self, omega: f64) -> Result<f64> {
        Ok(self.log_rate(omega)?.re)
    }

    pub fn phase_rate(&self, omega: f64) -> Result<f64> {
        Ok(self.log_rate(omega)?.im)
    }

    fn nearest_circle_distance(&self) -> f64 {
        self.zeros
            .iter()
            .chain(self.poles.iter())
            .map(|r| (r.norm() - 1.0).abs())
            .filter(|&d| d > 1e-9)
            .fold(f64::INFINITY, f64::min)
    }

    /// Continuous phase of g(e^{jω}), anchored at the principal value at ω = 0.
    pub fn unwrapped_phase(&self, omega: f64) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::SingularFrequency(omega));
        }
        let mut v = self.response(0.0)?;
        if v.norm() == 0.0 {
            return Err(Error::SingularFrequency(0.0));
        }
        let mut theta = v.arg();
        let max_step = (0.5 * self.nearest_circle_distance()).clamp(1e-6, 1e-2);
        let dir = omega.signum();
        let mut step = max_step;
        let mut w = 0.0f64;
        while (omega - w).abs() > 0.0 {
            let next = if (omega - w).abs() <= step { omega } else { w + dir * step };
            let vn = self.response(next)?;
            if vn.norm() == 0.0 {
                return Err(Error::SingularFrequency(next));
            }
            let d = (vn / v).arg();
            if d.abs() > PI / 2.0 && step > 1e-13 {
                step *= 0.5;
                continue;
            }
            theta += d;
            w = next;
            v = vn;
            step = (step * 2.0).min(max_step);
        }
        Ok(theta)
    }

    pub fn logderiv(&self, omega: f64) -> Result<DerivativeSample> {
        let q = self.log_rate(omega)?;
        let value = self.response(omega)?;
        if value.norm() == 0.0 {
            return Err(Error::SingularFrequency(omega));
        }
        Ok(DerivativeSample {
            omega,
            value,
            gain_log: value.norm().ln(),
            phase: self.unwrapped_phase(omega)?,
            gain_rate: q.re,
            phase_rate: q.im,
        })
    }

    pub fn check_rl_inf(&self, tol: f64) -> Result<()> {
        match self.poles.iter().find(|p| (p.norm() - 1.0).abs() <= tol) {
            Some(p) => Err(Error::NotInRLInf { re: p.re, im: p.im }),
            None => Ok(()),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.norm() < 1.0)
    }

    pub fn unstable_poles(&self) -> Result<Vec<Complex64>> {
        self.check_rl_inf(Tolerances::default().unit_circle_tol)?;
        Ok(self.poles.iter().copied().filter(|p| p.norm() > 1.0).collect())
    }

    pub fn unstable_pole_count(&self) -> Result<usize> {
        Ok(self.unstable_poles()?.len())
    }

    /// Parity interlacing: every gap between adjacent real unstable zeros
    /// (infinity included for strictly proper g) holds an even number of real unstable poles.
    pub fn pip_check(&self) -> Result<bool> {
        self.check_rl_inf(Tolerances::default().unit_circle_tol)?;
        // t = 1/x maps the real set |x| > 1 (through infinity) onto the interval (-1, 1).
        let real_outside = |v: &[Complex64]| -> Vec<f64> {
            v.iter().filter(|r| r.im == 0.0 && r.re.abs() > 1.0).map(|r| 1.0 / r.re).collect()
        };
        let mut zeros = real_outside(&self.zeros);
        if self.is_strictly_proper() {
            zeros.push(0.0);
        }
        zeros.sort_by(f64::total_cmp);
        let poles = real_outside(&self.poles);
        Ok(zeros.windows(2).all(|w| poles.iter().filter(|&&t| t > w[0] && t < w[1]).count() % 2 == 0))
    }

    pub fn linf_norm(&self) -> Result<PeakGain> {
        self.linf_norm_with(&Tolerances::default())
    }

    pub fn linf_norm_with(&self, tol: &Tolerances) -> Result<PeakGain> {
        self.check_rl_inf(tol.unit_circle_tol)?;
        let d = self.poles.iter().map(|p| (p.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
        let mut n = tol.grid.max(16);
        if d < tol.densify_below {
            n = n.max(tol.dense_grid).max(((8.0 * PI / d).ceil() as usize).min(MAX_GRID));
        }
        let mut omegas: Vec<f64> = (0..=n).map(|k| PI * k as f64 / n as f64).collect();
        omegas.extend(self.poles.iter().filter(|p| p.im >= 0.0).map(|p| p.arg().abs()));
        omegas.sort_by(f64::total_cmp);
        omegas.dedup();
        let mags = omegas.iter().map(|&w| self.magnitude(w)).collect::<Result<Vec<_>>>()?;
        let m = omegas.len();
        let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));

        let mut locals: Vec<usize> = (0..m)
            .filter(|&i| {
                let left = i == 0 || mags[i] > mags[i - 1];
                let right = i + 1 == m || mags[i] >= mags[i + 1];
                left && right
            })
            .collect();
        locals.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));

        let mut refined: Vec<(f64, f64)> = locals
            .iter()
            .take(3)
            .map(|&i| {
                let a = omegas[i.saturating_sub(1)];
                let b = omegas[(i + 1).min(m - 1)];
                self.refine_peak(omegas[i], mags[i], a, b, tol.unit_circle_tol)
            })
            .collect::<Result<Vec<_>>>()?;
        refined.extend(locals.iter().skip(3).map(|&i| (omegas[i], mags[i])));
        let best = refined.iter().copied().fold((0.0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        let (omega, norm) = best;
        let flat = hi - lo <= tol.peak_margin * norm;
        let rival = refined.iter().any(|&(w, g)| w != omega && g >= (1.0 - tol.peak_margin) * norm);
        Ok(PeakGain { norm, omega, unique: !flat && !rival })
    }

    /// Polish a grid maximum at `w0` inside the bracket [a, b].
    fn refine_peak(&self, w0: f64, g0: f64, a: f64, b: f64, edge: f64) -> Result<(f64, f64)> {
        let (mut best_w, mut best_g) = (w0, g0);
        let (mut lo, mut hi) = (a, b);
        if w0 == 0.0 || w0 == PI {
            // Gain rate vanishes at the endpoints by symmetry; look for a hidden interior bump.
            let (w, g) = self.golden_max(a.min(b), a.max(b))?;
            if g <= g0 * (1.0 + 1e-15) {
                return Ok((w0, g0));
            }
            best_w = w;
            best_g = g;
            lo = a.min(b);
            hi = a.max(b);
        }
        let rate_lo = self.gain_rate(lo)?;
        let rate_hi = self.gain_rate(hi)?;
        let (w, g) = if rate_lo > 0.0 && rate_hi < 0.0 {
            let (mut l, mut h) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (l + h);
                if mid <= l || mid >= h {
                    break;
                }
                let r = self.gain_rate(mid)?;
                if r.abs() < 1e-10 {
                    l = mid;
                    h = mid;
                    break;
                }
                if r > 0.0 {
                    l = mid;
                } else {
                    h = mid;
                }
            }
            let w = 0.5 * (l + h);
            (w, self.magnitude(w)?)
        } else {
            self.golden_max(lo, hi)?
        };
        if g > best_g {
            best_w = w;
            best_g = g;
        }
        if best_w < edge {
            best_w = 0.0;
            best_g = self.magnitude(0.0)?;
        } else if best_w > PI - edge {
            best_w = PI;
            best_g = self.magnitude(PI)?;
        }
        Ok((best_w, best_g))
    }

    fn golden_max(&self, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = self.magnitude(c)?;
        let mut fd = self.magnitude(d)?;
        for _ in 0..200 {
            if (b - a).abs() <= 1e-15 * b.abs().max(1e-3) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = self.magnitude(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = self.magnitude(d)?;
            }
        }
        let w = 0.5 * (a + b);
        Ok((w, self.magnitude(w)?))
    }

    pub fn classify(&self) -> Result<ClassTag> {
        self.classify_with(&Tolerances::default())
    }

    pub fn classify_with(&self, tol: &Tolerances) -> Result<ClassTag> {
        self.check_rl_inf(tol.unit_circle_tol)?;
        let n_unstable = self.poles.iter().filter(|p| p.norm() > 1.0).count();
        if n_unstable == 0 {
            return Err(Error::NotInG);
        }
        let pip = self.pip_check()?;
        let peak = self.linf_norm_with(tol)?;
        let boundary = peak.omega == 0.0 || peak.omega == PI;
        let class_name = if !pip || !peak.unique {
            ClassName::GnOther
        } else {
            match (n_unstable, boundary) {
                (1, true) => ClassName::G1Boundary,
                (1, false) => ClassName::G1Interior,
                (2, false) => ClassName::G2Interior,
                _ => ClassName::GnOther,
            }
        };
        Ok(ClassTag {
            n_unstable,
            pip,
            peak_omega: peak.omega,
            peak_gain: peak.norm,
            peak_unique: peak.unique,
            class_name,
        })
    }
}
