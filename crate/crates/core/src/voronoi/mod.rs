//! Truncated Voronoi expansion of a smoothed divisor sum at `alpha = h/k + eta`:
//!
//! ```text
//! sum d(n) e(alpha n) w(n) = k^{-1} int (log x + 2 gamma - 2 log k) w(x) e(eta x) dx
//!   + k^{-1} sum_n d(n) int (-2 pi e(-n h_bar/k) Y0(4 pi sqrt(n x)/k)
//!                            + 4 e(n h_bar/k) K0(4 pi sqrt(n x)/k)) w(x) e(eta x) dx
//! ```

pub mod bessel;

pub use bessel::{bessel_k0, bessel_k0_scaled, bessel_y0, y0_asymptotic, Y0Expansion};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{cis_turns, divisor_sieve, AlphaSplit};
use crate::error::{Error, Result};
use crate::expsum::{dual_length_scale, main_term_integral, SmoothingSpec, SumSpec, WeightFunction};
use crate::oscint::e_turns;
use crate::oscint::quad::{integrate, QuadOptions};
use crate::summation::ordered_sum;

/// One term of the dual series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoronoiTerm {
    pub n: u64,
    pub d: u32,
    /// `int Y0(4 pi sqrt(n x)/k) w(x) e(eta x) dx`.
    pub y_integral: Complex64,
    /// `int K0(4 pi sqrt(n x)/k) w(x) e(eta x) dx`.
    pub k_integral: Complex64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoronoiExpansion {
    pub main_integral: Complex64,
    pub main_converged: bool,
    pub y_sum: Complex64,
    pub k_sum: Complex64,
    /// Extrapolated size of the omitted terms `n > n_trunc`.
    pub tail_estimate: f64,
    /// Whether the last two octaves of terms were shrinking.
    pub tail_decaying: bool,
    pub n_trunc: u64,
    /// Terms whose quadrature missed its tolerance.
    pub flagged_terms: usize,
    #[serde(skip)]
    pub terms: Vec<VoronoiTerm>,
}

impl VoronoiExpansion {
    pub fn total(&self) -> Complex64 {
        self.main_integral + self.y_sum + self.k_sum
    }
}

/// `ceil(50 k^2 eta^2 m) + 100`.
pub fn default_truncation(split: &AlphaSplit, m: f64) -> u64 {
    (50.0 * dual_length_scale(split, m)).ceil() as u64 + 100
}

/// `e(t / k)` for an integer numerator.
fn rational_phase(num: u64, k: u64) -> Complex64 {
    let t = (num % k) as f64 / k as f64;
    cis_turns(t - t.round())
}

struct TermIntegrator<'a> {
    weight: &'a WeightFunction,
    breaks: Vec<f64>,
    k: f64,
    eta: f64,
    x_ref: f64,
    base: Complex64,
    opts: QuadOptions,
}

impl<'a> TermIntegrator<'a> {
    fn new(weight: &'a WeightFunction, k: u64, eta: f64) -> Self {
        let x_ref = weight.support.0.round();
        let t = eta * x_ref;
        TermIntegrator {
            weight,
            breaks: weight.breakpoints(),
            k: k as f64,
            eta,
            x_ref,
            base: cis_turns(t - t.round()),
            opts: QuadOptions::default(),
        }
    }

    /// `(int Y0 w e(eta x), int K0 w e(eta x), converged)` for dual index `n`.
    fn integrals(&self, n: u64) -> (Complex64, Complex64, bool) {
        let scale = 4.0 * PI * (n as f64).sqrt() / self.k;
        let lo = self.weight.support.0;
        let freq = self.eta.abs() + (n as f64).sqrt() / (self.k * lo.sqrt());
        let carrier = |x: f64| e_turns(self.eta * (x - self.x_ref));
        let y = integrate(
            |x| {
                let w = self.weight.eval(x);
                if w == 0.0 {
                    return Complex64::default();
                }
                let z = scale * x.sqrt();
                carrier(x) * (bessel_y0(z).unwrap_or(0.0) * w)
            },
            &self.breaks,
            freq,
            &self.opts,
        );
        let kk = integrate(
            |x| {
                let w = self.weight.eval(x);
                if w == 0.0 {
                    return Complex64::default();
                }
                let z = scale * x.sqrt();
                carrier(x) * (bessel_k0(z).unwrap_or(0.0) * w)
            },
            &self.breaks,
            self.eta.abs(),
            &self.opts,
        );
        (y.value * self.base, kk.value * self.base, y.converged && kk.converged)
    }
}

/// Octave-based tail extrapolation: with `s1`, `s2` the summed magnitudes
/// over `(N/4, N/2]` and `(N/2, N]`, the ratio `r = s2/s1` predicts the next
/// octaves as a geometric series; the estimate is doubled for safety.
fn tail_from_magnitudes(mags: &[f64]) -> (f64, bool) {
    let n = mags.len();
    if n < 4 {
        return (mags.iter().sum::<f64>(), false);
    }
    let s1: f64 = mags[n / 4..n / 2].iter().sum();
    let s2: f64 = mags[n / 2..].iter().sum();
    if s2 == 0.0 {
        return (0.0, true);
    }
    if s1 == 0.0 || s2 >= s1 {
        return (s2 * n as f64, false);
    }
    let r = s2 / s1;
    (2.0 * s2 * r / (1.0 - r), true)
}

/// Main term plus the first `n_trunc` Y0 and K0 terms of the dual series for
/// the weighted sum described by `spec` (or, without a weight, by the
/// smoothing's box average).
pub fn voronoi_rhs(spec: &SumSpec, smoothing: &SmoothingSpec, n_trunc: u64) -> Result<VoronoiExpansion> {
    if n_trunc == 0 {
        return Err(Error::InvalidInput("truncation must be at least 1".into()));
    }
    let weight = match &spec.weight {
        Some(w) => w.clone(),
        None => smoothing.weight()?,
    };
    if !(weight.support.0 > 0.0) {
        return Err(Error::Domain("weight support must be positive".into()));
    }
    let split = &spec.split;
    let k = split.k();
    let eta = split.eta;
    let h_bar = split.h_bar;
    let main = main_term_integral(k, eta, &weight)?;
    let table = divisor_sieve(1, n_trunc)?;
    let integrator = TermIntegrator::new(&weight, k, eta);
    let terms: Vec<VoronoiTerm> = (1..=n_trunc)
        .into_par_iter()
        .map(|n| {
            let (y, kk, converged) = integrator.integrals(n);
            VoronoiTerm {
                n,
                d: table.get(n),
                y_integral: y,
                k_integral: kk,
                converged,
            }
        })
        .collect();

    let inv_k = 1.0 / k as f64;
    let nh = |n: u64| (n % k) as u128 * h_bar as u128 % k as u128;
    let y_parts: Vec<Complex64> = terms
        .iter()
        .map(|t| {
            let r = nh(t.n) as u64;
            let twist = rational_phase(if r == 0 { 0 } else { k - r }, k);
            twist * t.y_integral * (-2.0 * PI * f64::from(t.d) * inv_k)
        })
        .collect();
    let k_parts: Vec<Complex64> = terms
        .iter()
        .map(|t| rational_phase(nh(t.n) as u64, k) * t.k_integral * (4.0 * f64::from(t.d) * inv_k))
        .collect();
    let mags: Vec<f64> = y_parts.iter().zip(&k_parts).map(|(a, b)| a.norm() + b.norm()).collect();
    let (tail_estimate, tail_decaying) = tail_from_magnitudes(&mags);
    Ok(VoronoiExpansion {
        main_integral: main.value,
        main_converged: main.converged,
        y_sum: ordered_sum(&y_parts),
        k_sum: ordered_sum(&k_parts),
        tail_estimate,
        tail_decaying,
        n_trunc,
        flagged_terms: terms.iter().filter(|t| !t.converged).count(),
        terms,
    })
}

/// Partial sum of `|Y0 term|` over `n` in `[c3 F, 4 c3 F]`, `F = k^2 eta^2 m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProbe {
    pub value: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub below_unit: bool,
}

pub fn tail_probe(split: &AlphaSplit, smoothing: &SmoothingSpec, c3: f64) -> Result<TailProbe> {
    if !(c3 >= 2.0) {
        return Err(Error::InvalidInput(format!("c3 must be at least 2, got {c3}")));
    }
    let weight = smoothing.weight()?;
    let f = dual_length_scale(split, smoothing.m);
    let n_lo = (c3 * f).ceil().max(1.0) as u64;
    let n_hi = (4.0 * c3 * f).floor().max(n_lo as f64) as u64;
    let table = divisor_sieve(n_lo, n_hi)?;
    let k = split.k();
    let integrator = TermIntegrator::new(&weight, k, split.eta);
    let mags: Vec<f64> = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            let (y, _, _) = integrator.integrals(n);
            2.0 * PI * f64::from(table.get(n)) / k as f64 * y.norm()
        })
        .collect();
    let value: f64 = mags.iter().sum();
    Ok(TailProbe {
        value,
        n_lo,
        n_hi,
        below_unit: value <= 1.0,
    })
}
