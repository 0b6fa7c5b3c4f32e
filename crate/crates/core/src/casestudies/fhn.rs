//! Discrete FitzHugh–Nagumo map under a multiplicative LTI perturbation on the
//! recovery variable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nyquist::closed_loop_poles;
use crate::rir::{exact_rir_analyze, synth_marginal_perturbation, AllPassSpec, RirStatus, RirVerdict};
use crate::transfer::RationalTF;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnModel {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub d: f64,
    pub current: f64,
}

impl Default for FhnModel {
    fn default() -> Self {
        Self { c: 1.0, alpha: 0.7, beta: 0.8, tau: 0.01, d: 10.0, current: 0.4 }
    }
}

impl FhnModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c, self.alpha, self.beta, self.tau, self.d, self.current];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite FHN parameter".into()));
        }
        if self.c <= 0.0 || self.beta <= 0.0 || self.tau <= 0.0 || self.d <= 0.0 {
            return Err(Error::InvalidParameter("c, beta, tau and d must be positive".into()));
        }
        Ok(())
    }

    /// e^{τ/c}
    pub fn x_gain(&self) -> f64 {
        (self.tau / self.c).exp()
    }

    /// e^{−βτ/d}
    pub fn y_decay(&self) -> f64 {
        (-self.beta * self.tau / self.d).exp()
    }

    /// 1/β
    pub fn recovery_gain(&self) -> f64 {
        1.0 / self.beta
    }

    /// One step of the map; `u` is the perturbation signal added to y in the x-update.
    pub fn step(&self, x: f64, y: f64, u: f64) -> (f64, f64) {
        let a = self.x_gain();
        let b = self.y_decay();
        let dd = self.recovery_gain();
        let xn = (a * x + (1.0 - a) * (y + u - self.current)) / (1.0 + (a - 1.0) / 3.0 * x * x);
        let yn = b * y + dd * (1.0 - b) * (x + self.alpha);
        (xn, yn)
    }

    /// Residual of the scalar fixed-point equation in x̄ with DC perturbation gain e.
    fn fixed_point_residual(&self, x: f64, e: f64) -> (f64, f64) {
        let dd = self.recovery_gain();
        let r = x - x * x * x / 3.0 - (1.0 + e) * dd * (x + self.alpha) + self.current;
        let dr = 1.0 - x * x - (1.0 + e) * dd;
        (r, dr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub xbar: f64,
    pub ybar: f64,
    pub e: f64,
}

const FIXED_POINT_TOL: f64 = 1e-12;

pub fn fhn_fixed_point(model: &FhnModel, e: f64) -> Result<FixedPoint> {
    model.validate()?;
    if !e.is_finite() {
        return Err(Error::InvalidParameter("non-finite DC gain".into()));
    }
    for start in [-2.0, -1.0, 0.0, 1.0] {
        let mut x: f64 = start;
        for _ in 0..100 {
            let (r, dr) = model.fixed_point_residual(x, e);
            if dr == 0.0 || !dr.is_finite() {
                break;
            }
            let next = x - r / dr;
            let done = (next - x).abs() <= 1e-15 * (1.0 + x.abs());
            x = next;
            if done {
                break;
            }
        }
        if x.is_finite() && model.fixed_point_residual(x, e).0.abs() < FIXED_POINT_TOL {
            return Ok(FixedPoint { xbar: x, ybar: model.recovery_gain() * (x + model.alpha), e });
        }
    }
    Err(Error::NoConvergence(format!("no FHN fixed point found for e = {e}")))
}

/// Jacobian of the map at a fixed point, plus the input column of the perturbation signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearization {
    pub fixed_point: FixedPoint,
    pub jacobian: [[f64; 2]; 2],
    pub input: f64,
    pub tf: RationalTF,
}

fn jacobian(model: &FhnModel, fp: &FixedPoint) -> ([[f64; 2]; 2], f64) {
    let a = model.x_gain();
    let x2 = fp.xbar * fp.xbar;
    let s = 1.0 + (a - 1.0) * x2 / 3.0;
    let a11 = (a - 2.0 * (a - 1.0) * x2 / 3.0) / s;
    let a12 = (1.0 - a) / s;
    let a21 = model.recovery_gain() * (1.0 - model.y_decay());
    ([[a11, a12], [a21, model.y_decay()]], a12)
}

fn finite_difference_jacobian(model: &FhnModel, fp: &FixedPoint) -> ([[f64; 2]; 2], f64) {
    let h = 1e-6;
    let u0 = fp.e * fp.ybar;
    let diff = |dx: f64, dy: f64, du: f64| {
        let p = model.step(fp.xbar + dx, fp.ybar + dy, u0 + du);
        let m = model.step(fp.xbar - dx, fp.ybar - dy, u0 - du);
        ((p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h))
    };
    let (j11, j21) = diff(h, 0.0, 0.0);
    let (j12, j22) = diff(0.0, h, 0.0);
    let (b1, _) = diff(0.0, 0.0, h);
    ([[j11, j12], [j21, j22]], b1)
}

pub fn fhn_linearization(model: &FhnModel, e: f64) -> Result<Linearization> {
    let fp = fhn_fixed_point(model, e)?;
    let (j, input) = jacobian(model, &fp);
    let (fd, fd_input) = finite_difference_jacobian(model, &fp);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-3);
    let agree = (0..2).all(|r| (0..2).all(|c| close(j[r][c], fd[r][c]))) && close(input, fd_input);
    if !agree {
        return Err(Error::NumericalFault(format!("analytic Jacobian {j:?} disagrees with finite differences {fd:?}")));
    }
    // transfer from the injected signal to y: a21·b / det(zI − J)
    let num = j[1][0] * input;
    if num == 0.0 {
        return Err(Error::Precondition("perturbation does not reach the recovery variable".into()));
    }
    let den = vec![1.0, -(j[0][0] + j[1][1]), j[0][0] * j[1][1] - j[0][1] * j[1][0]];
    let tf = RationalTF::new(vec![num], den)?;
    Ok(Linearization { fixed_point: fp, jacobian: j, input, tf })
}

/// SISO transfer seen by the perturbation block at the fixed point for DC gain e.
pub fn fhn_linearize(model: &FhnModel, e: f64) -> Result<RationalTF> {
    Ok(fhn_linearization(model, e)?.tf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub e: f64,
    pub inv_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EoSearch {
    pub e_o: f64,
    pub g: RationalTF,
    pub fixed_point: FixedPoint,
    pub verdict: RirVerdict,
    pub sweep: Vec<SweepPoint>,
}

const SWEEP_LIMIT: f64 = 0.5;
const SWEEP_STEP: f64 = 0.01;
const BISECT_TOL: f64 = 1e-5;

fn inv_norm(model: &FhnModel, e: f64) -> Result<f64> {
    Ok(1.0 / fhn_linearize(model, e)?.linf_norm()?.norm)
}

/// 1/‖g_e‖ over a uniform grid of e; points where the norm is undefined are skipped.
pub fn fhn_sweep(model: &FhnModel, lo: f64, hi: f64, count: usize) -> Vec<SweepPoint> {
    let es: Vec<f64> =
        (0..count).map(|k| if count == 1 { lo } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 }).collect();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(es.len().max(1));
    let chunk = es.len().div_ceil(workers.max(1)).max(1);
    let mut out: Vec<Option<SweepPoint>> = Vec::with_capacity(es.len());
    std::thread::scope(|s| {
        let handles: Vec<_> = es
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&e| inv_norm(model, e).ok().map(|inv_norm| SweepPoint { e, inv_norm }))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked"));
        }
    });
    out.into_iter().flatten().collect()
}

/// Solve |e| = 1/‖g_e‖ nearest to e = 0 and confirm the exact radius is attained there.
pub fn fhn_search_eo(model: &FhnModel) -> Result<EoSearch> {
    let h = |e: f64| inv_norm(model, e).map(|v| e.abs() - v);
    let h0 = h(0.0)?;
    // |e| grows away from zero, so a sign change needs h(0) < 0; try the negative side first
    let dirs: [f64; 2] = if h0 < 0.0 { [-1.0, 1.0] } else { [1.0, -1.0] };
    let steps = (SWEEP_LIMIT / SWEEP_STEP).round() as usize;
    let mut bracket = None;
    'outer: for dir in dirs {
        let (mut prev_e, mut prev_h) = (0.0, h0);
        for k in 1..=steps {
            let e = dir * SWEEP_STEP * k as f64;
            let Ok(v) = h(e) else { continue };
            if v.signum() != prev_h.signum() {
                bracket = Some((prev_e, prev_h, e));
                break 'outer;
            }
            (prev_e, prev_h) = (e, v);
        }
    }
    let (mut lo, lo_h, mut hi) = bracket.ok_or_else(|| {
        Error::NoConvergence(format!("no sign change of |e| - 1/|g_e| in [-{SWEEP_LIMIT}, {SWEEP_LIMIT}]"))
    })?;
    while (hi - lo).abs() > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid)?.signum() == lo_h.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let e_o = 0.5 * (lo + hi);
    let lin = fhn_linearization(model, e_o)?;
    let verdict = exact_rir_analyze(&lin.tf)?;
    if verdict.status != RirStatus::ExactSufficient {
        return Err(Error::Precondition(format!(
            "sufficient exact-radius condition fails at e_o = {e_o}: {:?}",
            verdict.status
        )));
    }
    let sweep = fhn_sweep(model, -SWEEP_LIMIT, SWEEP_LIMIT, 2 * steps + 1);
    Ok(EoSearch { e_o, g: lin.tf, fixed_point: lin.fixed_point, verdict, sweep })
}

/// h(z) = 1 + μ (z² − 2 cos ω_p z + 1)/(z − r)², with h(1) = 1/(1+ε) and h(e^{jω_p}) = 1.
pub fn h_shaper(eps: f64, omega_p: f64, r: f64) -> Result<RationalTF> {
    if !eps.is_finite() || (1.0 + eps).abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!("eps = {eps} must differ from -1")));
    }
    if r.is_nan() || r.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!("shaper pole {r} not in (-1, 1)")));
    }
    // 2 − 2cos ω, without cancellation
    let gap = 4.0 * (0.5 * omega_p).sin().powi(2);
    if !(omega_p > 0.0 && omega_p < PI) || gap < 1e-300 {
        return Err(Error::InvalidParameter(format!("omega_p = {omega_p} must lie in (0, pi)")));
    }
    let mu = -eps / (1.0 + eps) * (1.0 - r).powi(2) / gap;
    let c = omega_p.cos();
    let num = vec![1.0 + mu, -2.0 * r - 2.0 * c * mu, r * r + mu];
    RationalTF::new(num, vec![1.0, -2.0 * r, r * r])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub spec: AllPassSpec,
    pub delta_f: RationalTF,
    pub delta: RationalTF,
    pub eps: f64,
    pub omega_p: f64,
}

pub fn fhn_perturbation(e_o: f64, g_eo: &RationalTF, eps: f64, r: f64) -> Result<Perturbation> {
    let syn = synth_marginal_perturbation(g_eo)?;
    let delta_f = syn.f.clone();
    let dc = delta_f.evaluate(num_complex::Complex64::new(1.0, 0.0))?.re;
    if dc.signum() != e_o.signum() {
        return Err(Error::SynthesisVerification(format!(
            "synthesized DC gain {dc} has the opposite sign to e_o = {e_o}"
        )));
    }
    let omega_p = syn.verdict.class.peak_omega;
    let delta = if eps == 0.0 { delta_f.clone() } else { delta_f.mul(&h_shaper(eps, omega_p, r)?).scale(1.0 + eps) };
    let dc_eps = delta.evaluate(num_complex::Complex64::new(1.0, 0.0))?.re;
    // h has coefficients of order ε(1−r)²/ω_p², so its DC value carries that much rounding
    if (dc_eps - dc).abs() > 1e-8 * dc.abs() {
        return Err(Error::SynthesisVerification(format!("DC gain drifted from {dc} to {dc_eps}")));
    }
    Ok(Perturbation { spec: syn.spec, delta_f, delta, eps, omega_p })
}

/// Largest closed-loop pole modulus of the linearization with `delta` in the loop.
pub fn linear_spectral_radius(g: &RationalTF, delta: &RationalTF) -> Result<f64> {
    Ok(closed_loop_poles(&g.mul(delta))?.max_modulus())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// (n, x_n, y_n)
    pub points: Vec<(usize, f64, f64)>,
    pub state_dim: usize,
    /// Perturbation state after each step, `state_dim` values per step.
    pub states: Vec<f64>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.state_dim..(n + 1) * self.state_dim]
    }
}

const DIVERGENCE: f64 = 1e6;

/// Controllable canonical recursion: v_n = y_n − Σ a_k v_{n−k}, u_n = Σ b_k v_{n−k}.
struct CanonicalFilter {
    num: Vec<f64>,
    den: Vec<f64>,
    w: Vec<f64>,
}

impl CanonicalFilter {
    fn new(tf: &RationalTF) -> Self {
        let den = tf.den().coeffs().to_vec();
        let m = den.len() - 1;
        let coeffs = if tf.is_zero() { &[][..] } else { tf.num().coeffs() };
        let mut num = vec![0.0; m + 1 - coeffs.len().min(m + 1)];
        num.extend_from_slice(coeffs);
        Self { num, den, w: vec![0.0; m] }
    }

    /// Put every delay at the value that holds for a constant input.
    fn settle(&mut self, input: f64) {
        let v = input / self.den.iter().sum::<f64>();
        self.w.iter_mut().for_each(|s| *s = v);
    }

    fn step(&mut self, y: f64) -> f64 {
        let m = self.w.len();
        let v = y - (1..=m).map(|k| self.den[k] * self.w[k - 1]).sum::<f64>();
        let u = self.num[0] * v + (1..=m).map(|k| self.num[k] * self.w[k - 1]).sum::<f64>();
        if m > 0 {
            self.w.rotate_right(1);
            self.w[0] = v;
        }
        u
    }
}

/// Iterate the map with `delta` acting on y. `delta` is realized in controllable
/// canonical form, started at its DC equilibrium for the fixed point of δ(1).
pub fn fhn_simulate(model: &FhnModel, delta: &RationalTF, steps: usize, init: (f64, f64)) -> Result<Trajectory> {
    model.validate()?;
    if !delta.is_stable() {
        return Err(Error::Precondition("perturbation must be stable".into()));
    }
    let e = delta.evaluate(num_complex::Complex64::new(1.0, 0.0))?.re;
    let fp = fhn_fixed_point(model, e)?;
    let mut filter = CanonicalFilter::new(delta);
    filter.settle(fp.ybar);
    let m = filter.w.len();

    let (mut x, mut y) = init;
    let mut points = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps * m);
    let mut diverged = false;
    for n in 0..steps {
        if !(x.is_finite() && y.is_finite()) || x.abs() > DIVERGENCE {
            diverged = true;
            break;
        }
        points.push((n, x, y));
        let u = filter.step(y);
        states.extend_from_slice(&filter.w);
        (x, y) = model.step(x, y, u);
    }
    Ok(Trajectory { points, state_dim: m, states, diverged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Oscillation {
    Oscillating,
    Converged,
    /// Amplitude between the thresholds; run longer.
    Indeterminate,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationThresholds {
    pub oscillating: f64,
    pub converged: f64,
}

impl Default for OscillationThresholds {
    fn default() -> Self {
        Self { oscillating: 0.1, converged: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationReport {
    pub amplitude: f64,
    pub verdict: Oscillation,
}

/// Peak-to-peak amplitude of x over the last quarter of the trajectory.
pub fn oscillation_report(traj: &Trajectory, th: OscillationThresholds) -> OscillationReport {
    let n = traj.points.len();
    let tail = &traj.points[n - n / 4..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let amplitude = if tail.is_empty() { f64::NAN } else { hi - lo };
    let verdict = if traj.diverged {
        Oscillation::Diverged
    } else if amplitude > th.oscillating {
        Oscillation::Oscillating
    } else if amplitude < th.converged {
        Oscillation::Converged
    } else {
        Oscillation::Indeterminate
    };
    OscillationReport { amplitude, verdict }
}
