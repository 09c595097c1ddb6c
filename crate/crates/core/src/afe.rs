//! Both sides of the approximate functional equation
//!
//! `D(M1, M2; h/k + eta) ~ (k |eta|)^{-1} D(k^2 eta^2 M1, k^2 eta^2 M2; -h_bar/k - 1/(k^2 eta))`,
//! the normalised error, the dual-frequency conditions, and fits of the
//! error decay against `F = k^2 eta^2 M`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{divisor_sieve, gcd, AlphaSplit, DivisorTable, Slope};
use crate::error::{Error, Result};
use crate::expsum::{dual_length_scale, raw_sum_in, SumValue};
use crate::farey::{beta_ladder, dual_frequency, AFEParams, ConditionReport};

/// Relative distance within which a dual endpoint is snapped to an integer.
///
/// `k^2 eta^2 M` is formed in floating point; when the exact value is an
/// integer (as in the sharpness family) rounding must not move it across.
pub const ENDPOINT_SNAP: f64 = 1e-12;

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= ENDPOINT_SNAP * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Integer endpoints of `[k^2 eta^2 m1, k^2 eta^2 m2]`, if any integer lies inside.
pub fn dual_interval(m1: u64, m2: u64, split: &AlphaSplit) -> Option<(u64, u64)> {
    let lo = snap(dual_length_scale(split, m1 as f64));
    let hi = snap(dual_length_scale(split, m2 as f64));
    let a = lo.ceil().max(1.0);
    let b = hi.floor();
    (a <= b).then_some((a as u64, b as u64))
}

/// `(k |eta|)^{-1} D(k^2 eta^2 m1, k^2 eta^2 m2; beta)` with `beta` reduced
/// mod 1 in double-double before any phase is formed.
pub fn afe_rhs(m1: u64, m2: u64, split: &AlphaSplit) -> Result<SumValue> {
    if split.eta == 0.0 {
        return Err(Error::InvalidInput("eta must be non-zero".into()));
    }
    let scale = 1.0 / (split.k() as f64 * split.eta.abs());
    let Some((a, b)) = dual_interval(m1, m2, split) else {
        return Ok(SumValue {
            value: Complex64::default(),
            terms: 0,
            empty: true,
        });
    };
    let beta = Slope::from_dd(dual_frequency(split)?);
    let table = divisor_sieve(a, b)?;
    let mut s = raw_sum_in(&table, a, b, &beta)?;
    s.value *= scale;
    Ok(s)
}

/// Classical hypotheses on `k`, `eta` and the interval, checked rather than enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HypothesisFlags {
    /// `1 <= k <= sqrt(M)`.
    pub k_in_range: bool,
    /// `0 < |eta| <= k^{-2}`.
    pub eta_in_range: bool,
    /// `M <= M1 < M2 <= 2M`.
    pub interval_in_range: bool,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.k_in_range && self.eta_in_range && self.interval_in_range
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AFEReport {
    pub m1: u64,
    pub m2: u64,
    pub h: i64,
    pub k: u64,
    pub eta: f64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub err: f64,
    /// `err / (sqrt(M) log M)` with `M = M1`.
    pub norm_classic: f64,
    /// `(a, err / (sqrt(M) F^{-a}))` for each candidate exponent.
    pub norm_improved: Vec<(f64, f64)>,
    /// `F = k^2 eta^2 M`.
    pub f: f64,
    pub dual_terms: u64,
    pub hypotheses: HypothesisFlags,
    /// `None` when the dual frequency conditions are undefined (`F < 1`).
    pub conditions: Option<ConditionReport>,
}

impl AFEReport {
    pub fn conditions_passed(&self) -> bool {
        self.conditions.as_ref().is_some_and(|c| c.passed)
    }
}

/// Full report for `alpha = h/k + eta` on `[m1, m2]`, taking `M = m1`.
pub fn afe_check(m1: u64, m2: u64, h: i64, k: u64, eta: f64, params: &AFEParams) -> Result<AFEReport> {
    if m1 == 0 || m1 >= m2 {
        return Err(Error::InvalidInput(format!("need 1 <= m1 < m2, got [{m1}, {m2}]")));
    }
    let table = divisor_sieve(m1, m2)?;
    afe_check_in(&table, m1, m2, h, k, eta, params)
}

/// [`afe_check`] reading `d(n)` on the long side from a precomputed table.
pub fn afe_check_in(
    table: &DivisorTable,
    m1: u64,
    m2: u64,
    h: i64,
    k: u64,
    eta: f64,
    params: &AFEParams,
) -> Result<AFEReport> {
    params.validate()?;
    if eta == 0.0 {
        return Err(Error::InvalidInput("eta = 0 leaves the dual side undefined".into()));
    }
    if m1 == 0 || m1 >= m2 {
        return Err(Error::InvalidInput(format!("need 1 <= m1 < m2, got [{m1}, {m2}]")));
    }
    let split = AlphaSplit::from_parts(h, k, eta)?;
    let m = m1 as f64;
    let kf = k as f64;
    let lhs = raw_sum_in(table, m1, m2, &split.slope())?.value;
    let dual = afe_rhs(m1, m2, &split)?;
    let err = (lhs - dual.value).norm();
    let f = dual_length_scale(&split, m);
    let root = m.sqrt();
    let hypotheses = HypothesisFlags {
        k_in_range: kf <= root,
        eta_in_range: eta.abs() <= 1.0 / (kf * kf),
        interval_in_range: m2 <= 2 * m1,
    };
    let conditions = match beta_ladder(&split, m1, params) {
        Ok(c) => Some(c),
        Err(Error::OutsideHypotheses(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(AFEReport {
        m1,
        m2,
        h,
        k,
        eta,
        lhs,
        rhs: dual.value,
        err,
        norm_classic: err / (root * m.ln()),
        norm_improved: params
            .a_candidates
            .iter()
            .map(|&a| (a, err / (root * f.powf(-a))))
            .collect(),
        f,
        dual_terms: dual.terms,
        hypotheses,
        conditions,
    })
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub m1: u64,
    pub m2: u64,
    pub h: i64,
    pub k: u64,
    pub eta: f64,
}

impl SweepPoint {
    /// The point with `eta = +-sqrt(F/M)/k`, so that `k^2 eta^2 M1 = F`.
    pub fn at_scale(m1: u64, m2: u64, h: i64, k: u64, f: f64, negative: bool) -> Self {
        let eta = (f / m1 as f64).sqrt() / k as f64;
        SweepPoint {
            m1,
            m2,
            h,
            k,
            eta: if negative { -eta } else { eta },
        }
    }
}

/// `count` seeded points on `[m, 2m]` inside the classical hypotheses.
///
/// `F` is log-uniform on `[f_lo, f_hi]`, `k` uniform on `[1, sqrt(m/F)]`
/// (which keeps `k <= sqrt(m)` and `|eta| <= k^{-2}`), `h` uniform among
/// residues prime to `k`, and the sign of `eta` is a fair coin.
pub fn random_sweep_points(m: u64, count: usize, f_lo: f64, f_hi: f64, seed: u64) -> Result<Vec<SweepPoint>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("sweep needs M >= 2, got {m}")));
    }
    if !(f_lo >= 1.0 && f_hi >= f_lo && f_hi <= m as f64) {
        return Err(Error::InvalidInput(format!(
            "need 1 <= f_lo <= f_hi <= M, got [{f_lo}, {f_hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ln_lo, ln_hi) = (f_lo.ln(), f_hi.ln());
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let f = (ln_lo + (ln_hi - ln_lo) * rng.random::<f64>()).exp();
        let k_max = ((m as f64 / f).sqrt().floor() as u64).max(1);
        let k = rng.random_range(1..=k_max);
        let h = loop {
            let h = rng.random_range(0..k);
            if gcd(h, k) == 1 {
                break h as i64;
            }
        };
        points.push(SweepPoint::at_scale(m, 2 * m, h, k, f, rng.random()));
    }
    Ok(points)
}

/// Reports for every point, in input order, sharing one divisor table.
pub fn afe_sweep(points: &[SweepPoint], params: &AFEParams) -> Result<Vec<AFEReport>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let lo = points.iter().map(|p| p.m1).min().unwrap_or(1);
    let hi = points.iter().map(|p| p.m2).max().unwrap_or(1);
    let table = divisor_sieve(lo.max(1), hi)?;
    points
        .par_iter()
        .map(|p| afe_check_in(&table, p.m1, p.m2, p.h, p.k, p.eta, params))
        .collect()
}

/// Decay exponent `a` from a least-squares fit of `log(err / sqrt(M))`
/// against `log F` over the reports whose conditions passed; the fitted
/// slope is `-a`.
pub fn fit_exponent(reports: &[AFEReport]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.conditions_passed() && r.err > 0.0 && r.f > 0.0)
        .map(|r| (r.f.ln(), (r.err / (r.m1 as f64).sqrt()).ln()))
        .collect();
    fit_slope(&pts).map(|s| -s)
}

fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 10 {
        return Err(Error::InsufficientSpread(format!(
            "{} usable reports, at least 10 needed",
            pts.len()
        )));
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if hi - lo < 2.0 * std::f64::consts::LN_10 {
        return Err(Error::InsufficientSpread(format!(
            "F spans {:.2} decades, at least 2 needed",
            (hi - lo) / std::f64::consts::LN_10
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Size of `D(x1, x; alpha)` on a short interval relative to `sqrt(M)`,
/// with `M = x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortSumReport {
    pub value: Complex64,
    /// `|D(x1, x; alpha)| / sqrt(M)`.
    pub ratio: f64,
    pub f: f64,
    /// `(M k^2 eta^2)^b`, to be compared with `log M`.
    pub scale_indicator: f64,
    pub log_m: f64,
    /// `(x - x1) / (|eta|^{-1/2} M^{1/2 + b})`.
    pub length_ratio: f64,
    /// `k <= M^{1/4}`, `|eta| <= k^{-1} M^{-1/4}` and `(M k^2 eta^2)^b >= log M`.
    pub hypotheses_ok: bool,
}

/// Sum over `x1 < n <= x` with the hypotheses of the short-interval bound.
pub fn painoton_check(x1: f64, x: f64, split: &AlphaSplit, b: f64) -> Result<ShortSumReport> {
    if !(x1.is_finite() && x.is_finite() && x1 >= 0.0 && x >= x1) {
        return Err(Error::InvalidInput(format!("need 0 <= x1 <= x, got {x1}, {x}")));
    }
    if split.eta == 0.0 {
        return Err(Error::InvalidInput("eta must be non-zero".into()));
    }
    let m = x.max(2.0);
    let k = split.k() as f64;
    let eta = split.eta.abs();
    let lo = x1.floor() as u64 + 1;
    let hi = x.floor() as u64;
    let value = if lo > hi {
        Complex64::default()
    } else {
        let table = divisor_sieve(lo, hi)?;
        raw_sum_in(&table, lo, hi, &split.slope())?.value
    };
    let f = dual_length_scale(split, m);
    let scale_indicator = f.powf(b);
    let log_m = m.ln();
    let hypotheses_ok = k <= m.powf(0.25) && eta <= m.powf(-0.25) / k && scale_indicator >= log_m;
    Ok(ShortSumReport {
        value,
        ratio: value.norm() / m.sqrt(),
        f,
        scale_indicator,
        log_m,
        length_ratio: (x - x1) / (eta.powf(-0.5) * m.powf(0.5 + b)),
        hypotheses_ok,
    })
}
