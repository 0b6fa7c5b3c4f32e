mod common;

use std::f64::consts::PI;

use common::{c, loop_roots, random_unstable_loop, rng};
use num_complex::Complex64;
use rirkit::nyquist::{closed_loop_poles, crossing_counts, lemma1_check, marginal_verdict, ContourSpec, Mode};
use rirkit::rir::{exact_rir_analyze, synth_marginal_perturbation, RirStatus};
use rirkit::RationalTF;

const BAND: f64 = 1e-6;

fn near_circle(roots: &[Complex64]) -> bool {
    roots.iter().any(|r| (r.norm() - 1.0).abs() < BAND)
}

/// Closed-loop roots say single-mode marginal: simple roots on the circle forming
/// one conjugate pair or one real root at ±1, everything else strictly inside.
fn oracle_single_mode(roots: &[Complex64]) -> bool {
    let on: Vec<&Complex64> = roots.iter().filter(|r| (r.norm() - 1.0).abs() <= 1e-6).collect();
    if roots.iter().any(|r| r.norm() > 1.0 + 1e-6) {
        return false;
    }
    match on.as_slice() {
        [one] => (*one - 1.0).norm() < 1e-6 || (*one + 1.0).norm() < 1e-6,
        [a, b] => (*a - b.conj()).norm() < 1e-6 && a.im.abs() > 1e-6 && (*a - *b).norm() > 1e-5,
        _ => false,
    }
}

fn inverse_point(eps: f64, omega: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (1.0 - eps), -omega)
}

#[test]
fn crossing_identities_and_dense_oracle() {
    let mut r = rng(31);
    for _ in 0..20 {
        let (l, _) = random_unstable_loop(&mut r);
        for eps in [1e-2, 1e-3] {
            let rep = crossing_counts(&l, &ContourSpec::inverse(eps)).unwrap();
            assert_eq!(rep.nu_o, rep.nu_plus - rep.nu_minus);
            assert_eq!(rep.encirclements_cw, -rep.nu_o);
            if let Some(w) = rep.winding_ccw {
                assert_eq!(w, rep.nu_o);
            }
        }
        let eps = 1e-2;
        let rep = crossing_counts(&l, &ContourSpec::inverse(eps)).unwrap();
        // half-step offset keeps samples off the real points; the loop closes on itself
        let n = 200_000;
        let at = |k: usize| l.eval_factored(inverse_point(eps, -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64)).unwrap();
        let (mut up, mut down) = (0, 0);
        let mut prev = at(n - 1);
        for k in 0..n {
            let v = at(k);
            let t = prev.im / (prev.im - v.im);
            let re = prev.re + t * (v.re - prev.re);
            if prev.im < 0.0 && v.im >= 0.0 && re > 1.0 {
                up += 1;
            }
            if prev.im > 0.0 && v.im <= 0.0 && re > 1.0 {
                down += 1;
            }
            prev = v;
        }
        assert_eq!((rep.nu_plus, rep.nu_minus), (up, down), "{l:?}");
    }
}

#[test]
fn constant_and_simple_loops() {
    let half = crossing_counts(&RationalTF::constant(0.5), &ContourSpec::inverse(1e-2)).unwrap();
    assert_eq!((half.nu_plus, half.nu_minus, half.encirclements_cw), (0, 0, 0));
    let cl = closed_loop_poles(&RationalTF::new(vec![0.5], vec![1.0, -2.0]).unwrap()).unwrap();
    assert!((cl.roots[0] - c(2.5, 0.0)).norm() < 1e-14);
    let rep = lemma1_check(&RationalTF::new(vec![2.0], vec![1.0, -2.0]).unwrap(), 1).unwrap();
    assert!(!rep.holds);
}

#[test]
fn small_gain_loops_have_stable_roots() {
    let mut r = rng(4);
    for _ in 0..50 {
        let g = common::random_min_phase(&mut r, true);
        let peak = g.linf_norm().unwrap().norm;
        let l = g.scale(0.9 / peak);
        assert!(closed_loop_poles(&l).unwrap().max_modulus() < 1.0);
    }
}

#[test]
fn encirclement_check_agrees_with_roots_on_random_loops() {
    let mut r = rng(47);
    let (mut checked, mut stable) = (0, 0);
    while checked < 100 {
        let (l, n) = random_unstable_loop(&mut r);
        let roots = loop_roots(&l);
        if near_circle(&roots) {
            continue;
        }
        let rep = lemma1_check(&l, n).unwrap();
        let oracle = roots.iter().all(|z| z.norm() <= 1.0 + 1e-9);
        assert_eq!(rep.nyquist_holds, oracle, "{l:?}: {rep:?}");
        assert_eq!(rep.roots_hold, oracle);
        assert!(rep.diagnostic.is_none());
        checked += 1;
        stable += usize::from(oracle);
    }
    assert!(stable > 5 && stable < 95, "{stable} stable loops");
}

fn synthesized_loops(seed: u64, count: usize) -> Vec<(RationalTF, f64)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < 5000 {
        tries += 1;
        let (g, _) = random_unstable_loop(&mut r);
        let Ok(v) = exact_rir_analyze(&g) else { continue };
        if v.status != RirStatus::ExactSufficient {
            continue;
        }
        let s = synth_marginal_perturbation(&g).unwrap();
        out.push((g.mul(&s.f), v.class.peak_omega));
    }
    assert_eq!(out.len(), count);
    out
}

#[test]
fn synthesized_loops_are_single_mode() {
    for (l, w) in synthesized_loops(9, 30) {
        let v = marginal_verdict(&l, w).unwrap();
        let roots = loop_roots(&l);
        assert!(v.single_mode && oracle_single_mode(&roots), "{l:?}: {v:?}");
        assert!(v.certificate, "{v:?}");
        assert!(v.condition_i && v.condition_ii_a);
        let expected = if w == 0.0 {
            Mode::PoleAtPlusOne
        } else if w == PI {
            Mode::PoleAtMinusOne
        } else {
            Mode::ConjugatePair
        };
        assert_eq!(v.mode, expected);
    }
}

#[test]
fn scaled_loops_leave_the_circle() {
    for (l, w) in synthesized_loops(13, 20) {
        for k in [0.97, 1.03] {
            let scaled = l.scale(k);
            let v = marginal_verdict(&scaled, w).unwrap();
            let roots = loop_roots(&scaled);
            assert_eq!(v.single_mode, oracle_single_mode(&roots));
            assert!(!v.single_mode);
            assert!(!v.condition_i);
        }
    }
}

#[test]
fn repeated_boundary_root_is_not_single_mode() {
    let den = [1.0, 0.0, 0.0, 0.0];
    let ch = [1.0, -2.5, 2.0, -0.5];
    let num: Vec<f64> = den.iter().zip(ch.iter()).map(|(d, c)| d - c).collect();
    let l = RationalTF::new(num, den.to_vec()).unwrap();
    if let Ok(v) = marginal_verdict(&l, 0.0) {
        assert!(!v.marginal && !v.single_mode);
    }
}
