//! Crossing counts, encirclements and marginal-stability verdicts for positive-feedback loops.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::poly::RootSet;
use crate::transfer::RationalTF;

/// Crossings whose real part is within this of 1 are touches, not ray crossings.
const TOUCH_TOL: f64 = 1e-6;
const OMEGA_RES: f64 = 1e-10;
const MIN_WIDTH: f64 = 1e-11;
const MAX_ANGLE: f64 = PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourMap {
    /// ω ↦ L(z⁻¹) with z = (1−ε)e^{jω}.
    Inverse,
    /// ω ↦ L(z) with z = (1+ε)e^{jω}.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub epsilon: f64,
    pub samples: usize,
    pub map: ContourMap,
}

impl ContourSpec {
    pub fn inverse(epsilon: f64) -> Self {
        Self { epsilon, samples: 4096, map: ContourMap::Inverse }
    }

    pub fn direct(epsilon: f64) -> Self {
        Self { epsilon, samples: 4096, map: ContourMap::Direct }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {} outside [0, 1)", self.epsilon)));
        }
        if self.samples < 1024 {
            return Err(Error::InvalidParameter(format!("samples {} below 1024", self.samples)));
        }
        Ok(())
    }

    fn radius(&self) -> f64 {
        match self.map {
            ContourMap::Inverse => 1.0 / (1.0 - self.epsilon),
            ContourMap::Direct => 1.0 + self.epsilon,
        }
    }

    fn point(&self, omega: f64) -> Complex64 {
        match self.map {
            ContourMap::Inverse => Complex64::from_polar(self.radius(), -omega),
            ContourMap::Direct => Complex64::from_polar(self.radius(), omega),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub omega: f64,
    pub re: f64,
    /// +1 for negative-to-positive imaginary part, −1 for the reverse.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub epsilon: f64,
    pub nu_plus: i64,
    pub nu_minus: i64,
    pub nu_o: i64,
    pub encirclements_cw: i64,
    /// Independent winding count; `None` when the plot passes through 1.
    pub winding_ccw: Option<i64>,
    pub crossings: Vec<Crossing>,
    pub touches: Vec<f64>,
    pub warnings: Vec<String>,
}

fn eval_on(l: &RationalTF, spec: &ContourSpec, omega: f64) -> Result<Complex64> {
    let mut v = l.eval_factored(spec.point(omega))?;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::DegenerateCrossing(omega));
    }
    // Real coefficients: the plot sits exactly on the real axis at ω = 0 and ω = ±π.
    if omega == 0.0 || omega.abs() == PI {
        v.im = 0.0;
    }
    Ok(v)
}

fn subtended(a: Complex64, b: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    ((b - one) / (a - one)).arg().abs()
}

fn shifted_spec(l: &RationalTF, spec: &ContourSpec, warnings: &mut Vec<String>) -> ContourSpec {
    let mut s = *spec;
    for _ in 0..8 {
        let r = s.radius();
        if l.poles().iter().all(|p| (p.norm() - r).abs() > 1e-9) {
            break;
        }
        s.epsilon += 1e-6;
        warnings.push(format!("pole on contour; epsilon shifted to {:e}", s.epsilon));
    }
    s
}

/// Adaptive samples of the plot over ω ∈ [−π, π].
pub fn contour_samples(l: &RationalTF, spec: &ContourSpec) -> Result<Vec<(f64, Complex64)>> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let spec = shifted_spec(l, spec, &mut warnings);
    sample(l, &spec)
}

fn sample(l: &RationalTF, spec: &ContourSpec) -> Result<Vec<(f64, Complex64)>> {
    let n = spec.samples;
    let base: Vec<f64> = (0..=n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();
    let mut out = vec![(base[0], eval_on(l, spec, base[0])?)];
    for w in base.windows(2) {
        let b = (w[1], eval_on(l, spec, w[1])?);
        refine_interval(l, spec, *out.last().unwrap(), b, &mut out)?;
    }
    Ok(out)
}

fn refine_interval(
    l: &RationalTF,
    spec: &ContourSpec,
    a: (f64, Complex64),
    b: (f64, Complex64),
    out: &mut Vec<(f64, Complex64)>,
) -> Result<()> {
    let mut stack = vec![b];
    let mut left = a;
    while let Some(right) = stack.pop() {
        let width = right.0 - left.0;
        let needs = width > MIN_WIDTH && {
            let mid_w = 0.5 * (left.0 + right.0);
            let mid = eval_on(l, spec, mid_w)?;
            let sign_flip = (mid.im > 0.0) != (left.1.im > 0.0) && (mid.im > 0.0) != (right.1.im > 0.0);
            if subtended(left.1, right.1) > MAX_ANGLE || sign_flip || subtended(left.1, mid) > MAX_ANGLE {
                stack.push(right);
                stack.push((mid_w, mid));
                true
            } else {
                false
            }
        };
        if !needs {
            out.push(right);
            left = right;
        }
    }
    Ok(())
}

pub fn crossing_counts(l: &RationalTF, spec: &ContourSpec) -> Result<CrossingReport> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let spec = shifted_spec(l, spec, &mut warnings);
    let mut pts = sample(l, &spec)?;
    // ω = π repeats ω = −π; walk the samples as a closed loop.
    pts.pop();
    let m = pts.len();
    let one = Complex64::new(1.0, 0.0);

    let mut crossings = Vec::new();
    let mut touches = Vec::new();
    let mut through_one = false;
    let mut winding = 0.0;
    for i in 0..m {
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        if (a.1 - one).norm() <= TOUCH_TOL || (b.1 - one).norm() <= TOUCH_TOL {
            through_one = true;
        } else {
            winding += ((b.1 - one) / (a.1 - one)).arg();
        }
        // Samples exactly on the axis are classified below by their neighbours.
        if a.1.im == 0.0 || b.1.im == 0.0 {
            continue;
        }
        let up = a.1.im < 0.0 && b.1.im > 0.0;
        let down = a.1.im > 0.0 && b.1.im < 0.0;
        if !(up || down) {
            continue;
        }
        let (omega, v) = bisect_imag(l, &spec, a, b)?;
        if (v.re - 1.0).abs() <= TOUCH_TOL {
            touches.push(omega);
            through_one = true;
        } else if v.re > 1.0 {
            crossings.push(Crossing { omega, re: v.re, direction: if up { 1 } else { -1 } });
        }
    }
    for i in 0..m {
        let (omega, v) = pts[i];
        if v.im != 0.0 || v.re <= 1.0 + TOUCH_TOL || pts[(i + m - 1) % m].1.im == 0.0 {
            continue;
        }
        let before = (1..m).map(|k| pts[(i + m - k) % m].1.im).find(|&y| y != 0.0);
        let after = (1..m).map(|k| pts[(i + k) % m].1.im).find(|&y| y != 0.0);
        match (before, after) {
            (Some(l0), Some(r0)) if l0 < 0.0 && r0 > 0.0 => crossings.push(Crossing { omega, re: v.re, direction: 1 }),
            (Some(l0), Some(r0)) if l0 > 0.0 && r0 < 0.0 => crossings.push(Crossing { omega, re: v.re, direction: -1 }),
            _ => {}
        }
    }
    crossings.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    crossings.dedup_by(|a, b| (a.omega - b.omega).abs() <= OMEGA_RES);

    let nu_plus = crossings.iter().filter(|c| c.direction > 0).count() as i64;
    let nu_minus = crossings.iter().filter(|c| c.direction < 0).count() as i64;
    let nu_o = nu_plus - nu_minus;
    let winding_ccw = (!through_one).then(|| (winding / (2.0 * PI)).round() as i64);
    if let Some(wc) = winding_ccw {
        if wc != nu_o {
            warnings.push(format!("winding {wc} disagrees with crossing count {nu_o}"));
        }
    }
    Ok(CrossingReport {
        epsilon: spec.epsilon,
        nu_plus,
        nu_minus,
        nu_o,
        encirclements_cw: -nu_o,
        winding_ccw,
        crossings,
        touches,
        warnings,
    })
}

fn bisect_imag(
    l: &RationalTF,
    spec: &ContourSpec,
    mut a: (f64, Complex64),
    mut b: (f64, Complex64),
) -> Result<(f64, Complex64)> {
    while b.0 - a.0 > OMEGA_RES {
        let m = 0.5 * (a.0 + b.0);
        if m <= a.0 || m >= b.0 {
            break;
        }
        let v = eval_on(l, spec, m)?;
        if v.im == 0.0 {
            return Ok((m, v));
        }
        if (v.im > 0.0) == (a.1.im > 0.0) {
            a = (m, v);
        } else {
            b = (m, v);
        }
    }
    let m = 0.5 * (a.0 + b.0);
    Ok((m, eval_on(l, spec, m)?))
}

/// Roots of den − num: the poles of L/(1 − L).
pub fn closed_loop_poles(l: &RationalTF) -> Result<RootSet> {
    let ch = l.den().sub(l.num());
    if ch.is_zero() {
        return Err(Error::IllPosedLoop("is identically zero"));
    }
    if ch.degree() < l.den().degree() {
        return Err(Error::IllPosedLoop("drops degree (L(inf) = 1)"));
    }
    ch.roots()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub holds: bool,
    pub nyquist_holds: bool,
    pub roots_hold: bool,
    pub nu_o: i64,
    pub sweep: Vec<(f64, i64)>,
    pub max_root_modulus: f64,
    pub diagnostic: Option<String>,
}

/// Encirclement test for "all closed-loop poles in the closed disk", swept over ε.
const SWEEP_FLOOR: f64 = 1e-10;

pub fn lemma1_check(l: &RationalTF, n: usize) -> Result<Lemma1Report> {
    // A decade below the smallest unstable-pole margin so every sweep radius sees all unstable poles.
    let gap = l.poles().iter().filter(|p| p.norm() > 1.0).map(|p| 1.0 - 1.0 / p.norm()).fold(f64::INFINITY, f64::min);
    let e1 = (gap / 10.0).min(1e-2);
    // Closed-loop roots just outside the circle shift the count at coarse radii, so keep
    // shrinking until three consecutive radii agree.
    let mut sweep: Vec<(f64, i64)> = Vec::new();
    let mut e = e1;
    loop {
        let rep = crossing_counts(l, &ContourSpec::inverse(e))?;
        sweep.push((rep.epsilon, rep.nu_o));
        if let [.., a, b, c] = sweep.as_slice() {
            if a.1 == b.1 && b.1 == c.1 {
                break;
            }
        }
        e /= 10.0;
        if e < SWEEP_FLOOR {
            return Err(Error::EpsilonSweep(sweep));
        }
    }
    let nu_o = sweep[sweep.len() - 1].1;
    let nyquist_holds = nu_o == -(n as i64);
    let roots = closed_loop_poles(l)?;
    let max_root_modulus = roots.max_modulus();
    let roots_hold = max_root_modulus <= 1.0 + 1e-9;
    let diagnostic = (nyquist_holds != roots_hold).then(|| {
        format!(
            "contour count nu_o = {nu_o} (n = {n}) disagrees with max closed-loop root modulus {max_root_modulus}; roots taken as ground truth"
        )
    });
    Ok(Lemma1Report { holds: roots_hold, nyquist_holds, roots_hold, nu_o, sweep, max_root_modulus, diagnostic })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    #[serde(rename = "conjugate_pair")]
    ConjugatePair,
    #[serde(rename = "pole_at_+1")]
    PoleAtPlusOne,
    #[serde(rename = "pole_at_-1")]
    PoleAtMinusOne,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRoot {
    pub location: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub all_in_closed_disk: bool,
    pub boundary_roots: Vec<BoundaryRoot>,
    pub marginal: bool,
    pub single_mode: bool,
    pub mode: Mode,
    pub condition_i: bool,
    pub condition_ii_a: bool,
    pub condition_ii_b: bool,
    pub nu_o_0: i64,
    pub phase_rate: f64,
    pub certificate: bool,
    pub diagnostic: Option<String>,
}

pub fn marginal_verdict(l: &RationalTF, omega_c: f64) -> Result<StabilityVerdict> {
    marginal_verdict_with(l, omega_c, &Tolerances::default())
}

pub fn marginal_verdict_with(l: &RationalTF, omega_c: f64, tol: &Tolerances) -> Result<StabilityVerdict> {
    if !(0.0..=PI).contains(&omega_c) {
        return Err(Error::InvalidParameter(format!("omega_c {omega_c} outside [0, pi]")));
    }
    let q = l.log_rate(omega_c)?;
    if q.re.abs() >= 1e-8 {
        return Err(Error::Precondition(format!("gain rate {} at omega_c is not zero", q.re)));
    }
    let n = l.unstable_pole_count()?;
    let edge = omega_c == 0.0 || omega_c == PI;

    let z = Complex64::from_polar(1.0, omega_c);
    let v = l.response(omega_c)?;
    let dldz = q / (Complex64::i() * z) * v;
    let elsewhere = min_distance_to_one(l, omega_c, tol)?;
    let condition_i = (v - 1.0).norm() < 1e-6 && dldz.norm() > 1e-9 && elsewhere >= 1e-6;

    let nyq = crossing_counts(l, &ContourSpec::direct(0.0))?;
    let nu_o_0 = nyq.nu_o;
    let rate = q.im;
    let target_a = if edge { n as i64 - 1 } else { n as i64 - 2 };
    let condition_ii_a = nu_o_0 == target_a && rate > 0.0;
    let condition_ii_b = nu_o_0 == n as i64 && rate < 0.0;
    let certificate = condition_i && (condition_ii_a || condition_ii_b);

    let roots = closed_loop_poles(l)?;
    let all_in_closed_disk = roots.max_modulus() <= 1.0 + tol.boundary_tol;
    let near: Vec<Complex64> =
        roots.roots.iter().copied().filter(|r| (r.norm() - 1.0).abs() <= tol.boundary_tol).collect();
    for (i, a) in near.iter().enumerate() {
        for b in &near[i + 1..] {
            let d = (a - b).norm();
            if d > tol.cluster_tol && d < 1e-5 {
                return Err(Error::Precondition(format!(
                    "boundary-root multiplicity ambiguous: roots {a} and {b} are {d:e} apart"
                )));
            }
        }
    }
    let boundary = RootSet { roots: near, residual: 0.0 }.clusters(tol.cluster_tol);
    let boundary_roots: Vec<BoundaryRoot> =
        boundary.iter().map(|c| BoundaryRoot { location: c.value, multiplicity: c.multiplicity }).collect();
    let simple = boundary_roots.iter().all(|b| b.multiplicity == 1);
    let marginal = all_in_closed_disk && !boundary_roots.is_empty() && simple;
    let mode = if !marginal {
        Mode::None
    } else {
        match boundary_roots.as_slice() {
            [one] if (one.location - 1.0).norm() <= tol.boundary_tol => Mode::PoleAtPlusOne,
            [one] if (one.location + 1.0).norm() <= tol.boundary_tol => Mode::PoleAtMinusOne,
            [a, b]
                if (a.location - b.location.conj()).norm() <= tol.boundary_tol
                    && a.location.im.abs() > tol.boundary_tol =>
            {
                Mode::ConjugatePair
            }
            _ => Mode::None,
        }
    };
    let single_mode = mode != Mode::None;
    let diagnostic = (certificate != single_mode).then(|| {
        format!(
            "frequency-domain certificate says {certificate}, closed-loop roots say {single_mode}; roots taken as ground truth"
        )
    });
    Ok(StabilityVerdict {
        all_in_closed_disk,
        boundary_roots,
        marginal,
        single_mode,
        mode,
        condition_i,
        condition_ii_a,
        condition_ii_b,
        nu_o_0,
        phase_rate: rate,
        certificate,
        diagnostic,
    })
}

/// min |L(e^{jω}) − 1| over [0, π] outside a 1e-4 window around ω_c.
fn min_distance_to_one(l: &RationalTF, omega_c: f64, tol: &Tolerances) -> Result<f64> {
    let d = l.poles().iter().map(|p| (p.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let mut n = tol.grid.max(16);
    if d < tol.densify_below {
        n = n.max(tol.dense_grid).max(((8.0 * PI / d).ceil() as usize).min(1 << 22));
    }
    let window = 1e-4;
    let ws: Vec<f64> = (0..=n).map(|k| PI * k as f64 / n as f64).filter(|w| (w - omega_c).abs() >= window).collect();
    let dist = |w: f64| -> Result<f64> { Ok((l.response(w)? - 1.0).norm()) };
    let vals = ws.iter().map(|&w| dist(w)).collect::<Result<Vec<_>>>()?;
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    for i in 0..ws.len() {
        let lmin = i == 0 || vals[i] <= vals[i - 1];
        let rmin = i + 1 == ws.len() || vals[i] <= vals[i + 1];
        if !(lmin && rmin) || vals[i] > 1e-2 {
            continue;
        }
        let mut a = ws[i.saturating_sub(1)];
        let mut b = ws[(i + 1).min(ws.len() - 1)];
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if dist(m1)? < dist(m2)? {
                b = m2;
            } else {
                a = m1;
            }
        }
        let m = 0.5 * (a + b);
        if (m - omega_c).abs() >= window {
            best = best.min(dist(m)?);
        }
    }
    Ok(best)
}
