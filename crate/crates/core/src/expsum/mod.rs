//! Divisor exponential sums `sum d(n) e(alpha n) w(n)`, their smoothing
//! weights, the logarithmic main-term integral and the mean-square identity.

mod weight;

pub use weight::{
    build_eta_j, build_partition, build_partition_with, Partition, WeightFunction, WeightKind, DEFAULT_BUMP_ORDER,
    MAX_AVERAGING_ORDER, MAX_BUMP_ORDER,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{cis_turns, divisor_sieve, AlphaSplit, DivisorTable, Slope};
use crate::error::{Error, Result};
use crate::oscint::quad::{integrate, QuadOptions, QuadResult};
use crate::summation::{chunked_sum, ordered_sum};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A sum over `[m1, m2]` at frequency `split`, optionally weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct SumSpec {
    pub m1: u64,
    pub m2: u64,
    pub split: AlphaSplit,
    pub weight: Option<WeightFunction>,
}

impl SumSpec {
    pub fn new(m1: u64, m2: u64, split: AlphaSplit) -> Self {
        SumSpec {
            m1,
            m2,
            split,
            weight: None,
        }
    }

    pub fn with_weight(mut self, weight: WeightFunction) -> Self {
        self.weight = Some(weight);
        self
    }
}

/// Value of a finite sum with its term count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumValue {
    pub value: Complex64,
    pub terms: u64,
    /// Set when the summation range held no integers.
    pub empty: bool,
}

impl SumValue {
    fn empty() -> Self {
        SumValue {
            value: Complex64::default(),
            terms: 0,
            empty: true,
        }
    }
}

/// Smoothing parameters: averaging length `u`, order `j`, edge length `v`
/// (equal to `u`), and the extended ends `m - j u`, `m + delta + j u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingSpec {
    pub m: f64,
    pub delta: f64,
    pub u: f64,
    pub j: u32,
    pub v: f64,
    pub m_minus1: f64,
    pub m2_ext: f64,
}

impl SmoothingSpec {
    pub fn new(m: f64, delta: f64, u: f64, j: u32) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "averaging length must be positive, got {u}"
            )));
        }
        let m_minus1 = m - f64::from(j) * u;
        if !(m_minus1 > 0.0) {
            return Err(Error::Domain(format!("extended lower end {m_minus1} is not positive")));
        }
        Ok(SmoothingSpec {
            m,
            delta,
            u,
            j,
            v: u,
            m_minus1,
            m2_ext: m + delta + f64::from(j) * u,
        })
    }

    /// Averaging length `sqrt(m) |eta|^{-1/2} (k^2 eta^2 m)^d`.
    pub fn from_split(m: f64, delta: f64, split: &AlphaSplit, d: f64, j: u32) -> Result<Self> {
        if split.eta == 0.0 {
            return Err(Error::Domain("averaging length needs eta != 0".into()));
        }
        let u = m.sqrt() * split.eta.abs().powf(-0.5) * dual_length_scale(split, m).powf(d);
        Self::new(m, delta, u, j)
    }

    /// Whether `u <= m^{7/8} (k^2 eta^2 m)^d` for the given `split` and `d`,
    /// the scale condition under which the smoothing is negligible.
    pub fn is_short(&self, split: &AlphaSplit, d: f64) -> bool {
        self.u <= self.m.powf(0.875) * dual_length_scale(split, self.m).powf(d)
    }

    pub fn weight(&self) -> Result<WeightFunction> {
        build_eta_j(self.m, self.delta, self.u, self.j)
    }
}

/// `k^2 eta^2 m`.
pub fn dual_length_scale(split: &AlphaSplit, m: f64) -> f64 {
    let k = split.k() as f64;
    k * k * split.eta * split.eta * m
}

/// Integers of `[lo, hi]` that are at least 1, as an inclusive range.
pub fn integer_range(lo: f64, hi: f64) -> Option<(u64, u64)> {
    let a = lo.ceil().max(1.0);
    let b = hi.floor();
    if !(a <= b) || !b.is_finite() {
        return None;
    }
    Some((a as u64, b as u64))
}

/// `sum d(n) e(n slope)` over `n in [m1, m2]`, with `d` read from `table`.
pub fn raw_sum_in(table: &DivisorTable, m1: u64, m2: u64, slope: &Slope) -> Result<SumValue> {
    let m1 = m1.max(1);
    if m1 > m2 {
        return Ok(SumValue::empty());
    }
    if !(table.contains(m1) && table.contains(m2)) {
        return Err(Error::InvalidInput(format!(
            "divisor table [{}, {}] does not cover [{m1}, {m2}]",
            table.start,
            table.end()
        )));
    }
    let d = table.slice(m1, m2);
    let value = chunked_sum(d.len(), |i| {
        let n = m1 + i as u64;
        slope.phase(n) * f64::from(d[i])
    });
    Ok(SumValue {
        value,
        terms: d.len() as u64,
        empty: false,
    })
}

/// `D(m1, m2; alpha) = sum_{m1 <= n <= m2} d(n) e(alpha n)`.
pub fn raw_sum(spec: &SumSpec) -> Result<SumValue> {
    let m1 = spec.m1.max(1);
    if m1 > spec.m2 {
        return Ok(SumValue::empty());
    }
    let table = divisor_sieve(m1, spec.m2)?;
    raw_sum_in(&table, m1, spec.m2, &spec.split.slope())
}

/// `sum d(n) e(n slope) w(n)` over the integers of the weight's support.
pub fn smoothed_sum_in(table: &DivisorTable, weight: &WeightFunction, slope: &Slope) -> Result<SumValue> {
    let Some((a, b)) = integer_range(weight.support.0, weight.support.1) else {
        return Ok(SumValue::empty());
    };
    if !(table.contains(a) && table.contains(b)) {
        return Err(Error::InvalidInput(format!(
            "divisor table [{}, {}] does not cover weight support [{a}, {b}]",
            table.start,
            table.end()
        )));
    }
    let d = table.slice(a, b);
    let value = chunked_sum(d.len(), |i| {
        let n = a + i as u64;
        let w = weight.eval(n as f64);
        if w == 0.0 {
            Complex64::default()
        } else {
            slope.phase(n) * (f64::from(d[i]) * w)
        }
    });
    Ok(SumValue {
        value,
        terms: d.len() as u64,
        empty: false,
    })
}

/// Weighted sum over the support of `spec.weight`.
pub fn smoothed_sum(spec: &SumSpec) -> Result<SumValue> {
    let weight = spec.weight.as_ref().ok_or(Error::WeightMissing)?;
    let Some((a, b)) = integer_range(weight.support.0, weight.support.1) else {
        return Ok(SumValue::empty());
    };
    let table = divisor_sieve(a, b)?;
    smoothed_sum_in(&table, weight, &spec.split.slope())
}

/// `k^{-1} int (log x + 2 gamma - 2 log k) e(eta x) w(x) dx` over the
/// weight's support.
pub fn main_term_integral(k: u64, eta: f64, weight: &WeightFunction) -> Result<QuadResult> {
    main_term_integral_with(k, eta, weight, &QuadOptions::default())
}

pub fn main_term_integral_with(k: u64, eta: f64, weight: &WeightFunction, opts: &QuadOptions) -> Result<QuadResult> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if !(weight.support.0 > 0.0) {
        return Err(Error::Domain("main-term integrand needs a positive support".into()));
    }
    if !eta.is_finite() {
        return Err(Error::NonFinite(eta));
    }
    let shift = 2.0 * EULER_GAMMA - 2.0 * (k as f64).ln();
    let inv_k = 1.0 / k as f64;
    // Reference point keeps the phase argument small.
    let x_ref = weight.support.0.round();
    let base = cis_turns({
        let t = eta * x_ref;
        t - t.round()
    });
    let f = |x: f64| {
        let w = weight.eval(x);
        if w == 0.0 {
            return Complex64::default();
        }
        let t = eta * (x - x_ref);
        cis_turns(t - t.round()) * ((x.ln() + shift) * w * inv_k)
    };
    let mut r = integrate(f, &weight.breakpoints(), eta.abs(), opts);
    r.value *= base;
    Ok(r)
}

/// Both sides of `int_0^1 |sum_{n <= m} d(n) e(n alpha)|^2 d alpha = sum d(n)^2`.
///
/// The integral is evaluated on a uniform grid of `2m + 1` points, which is
/// exact for trigonometric polynomials of degree `m`.
pub fn mean_square(m: u64) -> Result<(f64, f64)> {
    if m == 0 {
        return Ok((0.0, 0.0));
    }
    if m > 10_000 {
        return Err(Error::InvalidInput(format!(
            "mean square limited to m <= 10000, got {m}"
        )));
    }
    let table = divisor_sieve(1, m)?;
    let d = table.slice(1, m);
    let n_grid = 2 * m + 1;
    let roots: Vec<Complex64> = (0..n_grid)
        .map(|r| {
            let t = r as f64 / n_grid as f64;
            cis_turns(t - t.round())
        })
        .collect();
    let squares: Vec<Complex64> = (0..n_grid)
        .into_par_iter()
        .map(|j| {
            let inner: Vec<Complex64> = d
                .iter()
                .enumerate()
                .map(|(i, &dn)| roots[((i as u64 + 1) * j % n_grid) as usize] * f64::from(dn))
                .collect();
            Complex64::new(ordered_sum(&inner).norm_sqr(), 0.0)
        })
        .collect();
    let integral = ordered_sum(&squares).re / n_grid as f64;
    let coefficients = d.iter().map(|&x| f64::from(x) * f64::from(x)).sum();
    Ok((integral, coefficients))
}
