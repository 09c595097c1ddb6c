//! Exact integer arithmetic, divisor sieving and precision-safe phases.
//!
//! The phase `e(n * alpha)` is never formed as `n * alpha` in plain `f64`.
//! A slope is carried as an exact rational part `h/k` plus a double-double
//! offset, so `n*h mod k` is computed in integers and only `n * eta` needs
//! extended precision before the reduction mod 1.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Segment length used by [`divisor_sieve`].
pub const SIEVE_SEGMENT: usize = 1 << 20;

/// Largest range [`divisor_sieve`] will materialise in one table.
pub const MAX_TABLE_LEN: u64 = 1 << 30;

/// Largest supported upper end of a sieve range (2^62); keeps the base-prime
/// table below 2^31 entries.
pub const MAX_SIEVE_END: u64 = 1 << 62;

/// A reduced fraction `h/k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyFraction {
    pub h: i64,
    pub k: u64,
}

impl FareyFraction {
    pub fn new(h: i64, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("denominator must be positive".into()));
        }
        if gcd(h.unsigned_abs(), k) != 1 {
            return Err(Error::InvalidInput(format!("{h}/{k} is not reduced")));
        }
        Ok(FareyFraction { h, k })
    }

    pub fn value(&self) -> f64 {
        self.h as f64 / self.k as f64
    }

    pub fn as_dd(&self) -> Dd {
        Dd::ratio(self.h as i128, self.k as i128)
    }
}

/// `alpha = h/k + eta`, with `eta` stored as a double-double (`eta + eta_tail`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSplit {
    pub frac: FareyFraction,
    pub eta: f64,
    /// Low-order part of the offset; zero when the split was built from an `f64` eta.
    pub eta_tail: f64,
    /// Farey order `Q` of the approximation: `|eta| <= 1/(k Q)`.
    pub order: u64,
    /// Inverse of `h` modulo `k`, in `[0, k)`.
    pub h_bar: u64,
    /// Set when the input had to be reduced mod 1 into `[0, 1]` first.
    pub reduced_mod_one: bool,
}

impl AlphaSplit {
    /// Split from explicit parts. The order is the largest `Q` compatible with
    /// `|eta| <= 1/(kQ)` (at least 1, capped at 2^53 for `eta = 0`).
    pub fn from_parts(h: i64, k: u64, eta: f64) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::NonFinite(eta));
        }
        let frac = FareyFraction::new(h, k)?;
        let h_bar = mod_inverse(h, k)?;
        let order = if eta == 0.0 {
            1u64 << 53
        } else {
            (1.0 / (k as f64 * eta.abs()))
                .floor()
                .clamp(1.0, 9.007_199_254_740_992e15) as u64
        };
        Ok(AlphaSplit {
            frac,
            eta,
            eta_tail: 0.0,
            order,
            h_bar,
            reduced_mod_one: false,
        })
    }

    pub fn h(&self) -> i64 {
        self.frac.h
    }

    pub fn k(&self) -> u64 {
        self.frac.k
    }

    pub fn eta_dd(&self) -> Dd {
        Dd::new(self.eta, self.eta_tail)
    }

    /// `alpha` rounded to `f64`.
    pub fn alpha(&self) -> f64 {
        (self.frac.as_dd() + self.eta_dd()).to_f64()
    }

    pub fn slope(&self) -> Slope {
        Slope::new(self.frac.h, self.frac.k, self.eta_dd())
    }

    /// Split representing `-alpha`: `h -> -h`, `eta -> -eta`, `h_bar -> -h_bar`.
    pub fn negated(&self) -> Self {
        let k = self.frac.k;
        let h = if k == 1 {
            0
        } else {
            (k as i64 - self.frac.h.rem_euclid(k as i64)) % k as i64
        };
        AlphaSplit {
            frac: FareyFraction { h, k },
            eta: -self.eta,
            eta_tail: -self.eta_tail,
            order: self.order,
            h_bar: if k == 1 { 0 } else { (k - self.h_bar) % k },
            reduced_mod_one: self.reduced_mod_one,
        }
    }
}

/// A phase slope `h/k + offset` with exact rational part and double-double offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    h_mod_k: u64,
    k: u64,
    offset: Dd,
}

impl Slope {
    pub fn new(h: i64, k: u64, offset: Dd) -> Self {
        Slope {
            h_mod_k: h.rem_euclid(k as i64) as u64,
            k,
            offset,
        }
    }

    /// Pure offset slope, used for a dual frequency held entirely in double-double.
    pub fn from_dd(offset: Dd) -> Self {
        Slope {
            h_mod_k: 0,
            k: 1,
            offset,
        }
    }

    /// `n * slope mod 1` in `[-1/2, 1/2]`. Exact up to double-double rounding
    /// for `n <= 2^53`.
    #[inline]
    pub fn turns(&self, n: u64) -> f64 {
        let r = if self.k == 1 {
            Dd::ZERO
        } else {
            let num = (n % self.k) as u128 * self.h_mod_k as u128 % self.k as u128;
            Dd::ratio(num as i128, self.k as i128)
        };
        let off = self.offset.mul_f64(n as f64).frac_centered();
        (r + off).frac_centered().to_f64()
    }

    #[inline]
    pub fn phase(&self, n: u64) -> Complex64 {
        cis_turns(self.turns(n))
    }
}

/// `e^{2 pi i t}` for `t` already reduced to about `[-1/2, 1/2]`.
///
/// Quadrant splitting makes multiples of 1/4 come out exact.
#[inline]
pub fn cis_turns(t: f64) -> Complex64 {
    let q4 = 4.0 * t;
    let q = q4.round();
    let f = q4 - q;
    let (s, c) = (f * FRAC_PI_2).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// `e(x) = e^{2 pi i x}`, reducing `x` mod 1 before exponentiation.
pub fn e_phase(x: f64) -> Result<Complex64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(cis_turns(x - x.round()))
}

/// `e(n (h/k + eta))` with the exact-rational / reduced-offset split.
pub fn term_phase(n: u64, split: &AlphaSplit) -> Complex64 {
    split.slope().phase(n)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `h` modulo `k` in `[0, k)`; `k = 1` gives 0.
pub fn mod_inverse(h: i64, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if k == 1 {
        return Ok(0);
    }
    let m = k as i128;
    let a = (h as i128).rem_euclid(m);
    let (mut old_r, mut r) = (a, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { h, k });
    }
    Ok(old_s.rem_euclid(m) as u64)
}

/// Divisor counts `d(n)` for `n` in `[start, start + values.len())`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTable {
    pub start: u64,
    pub values: Vec<u32>,
}

impl DivisorTable {
    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.start && n - self.start < self.values.len() as u64
    }

    /// `d(n)`; panics if `n` is outside the table.
    pub fn get(&self, n: u64) -> u32 {
        self.values[(n - self.start) as usize]
    }

    /// Restrict to `[lo, hi]`, which must lie inside the table.
    pub fn slice(&self, lo: u64, hi: u64) -> &[u32] {
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        &self.values[a..=b]
    }
}

fn base_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn sieve_segment(lo: u64, hi: u64, primes: &[u64]) -> Vec<u32> {
    let len = (hi - lo + 1) as usize;
    let mut rem: Vec<u64> = (lo..=hi).collect();
    let mut d = vec![1u32; len];
    for &p in primes {
        if p * p > hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut m = first;
        while m <= hi {
            let i = (m - lo) as usize;
            let mut e = 0u32;
            let mut r = rem[i];
            while r.is_multiple_of(p) {
                r /= p;
                e += 1;
            }
            rem[i] = r;
            d[i] *= e + 1;
            m += p;
        }
    }
    for (di, &r) in d.iter_mut().zip(&rem) {
        if r > 1 {
            *di *= 2;
        }
    }
    d
}

/// Exact `d(n)` for every `n` in `[m1, m2]` by a segmented sieve.
///
/// Segments of [`SIEVE_SEGMENT`] entries are sieved in parallel against the
/// primes up to `sqrt(m2)`; output order is fixed.
pub fn divisor_sieve(m1: u64, m2: u64) -> Result<DivisorTable> {
    if m1 < 1 {
        return Err(Error::RangeOverflow("range must start at n >= 1".into()));
    }
    if m2 < m1 {
        return Err(Error::RangeOverflow(format!("empty range [{m1}, {m2}]")));
    }
    if m2 > MAX_SIEVE_END {
        return Err(Error::RangeOverflow(format!(
            "upper end {m2} exceeds the supported limit {MAX_SIEVE_END}"
        )));
    }
    if m2 - m1 >= MAX_TABLE_LEN {
        return Err(Error::RangeOverflow(format!(
            "range length {} exceeds the table budget {MAX_TABLE_LEN}",
            m2 - m1 + 1
        )));
    }
    let primes = base_primes(isqrt(m2));
    let seg = SIEVE_SEGMENT as u64;
    let nseg = (m2 - m1) / seg + 1;
    let parts: Vec<Vec<u32>> = (0..nseg)
        .into_par_iter()
        .map(|s| {
            let lo = m1 + s * seg;
            let hi = (lo + seg - 1).min(m2);
            sieve_segment(lo, hi, &primes)
        })
        .collect();
    Ok(DivisorTable {
        start: m1,
        values: parts.concat(),
    })
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}
