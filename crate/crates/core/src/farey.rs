//! Farey sequences, Farey approximation and the dual-frequency condition ladder.
//!
//! [`farey_approx`] walks the Stern–Brocot tree with batched steps, so the
//! cost is `O(log^2 Q)` comparisons and the order-`Q` Farey sequence is never
//! materialised. Every comparison of the input with a fraction `p/q` is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::arithmetic::{mod_inverse, AlphaSplit, FareyFraction};
use crate::dd::{two_prod, Dd};
use crate::error::{Error, Result};

/// Enumeration guard for [`farey_sequence`].
pub const MAX_FAREY_ORDER: u64 = 100_000;

/// Samples drawn from one generator stream in [`exceptional_measure`].
pub const MEASURE_STREAM_LEN: usize = 4096;

/// Free constants of the improved approximate functional equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AFEParams {
    pub c: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Exponent `A` in the scale hypothesis `k^2 eta^2 M >= c (log M)^A`.
    pub big_a: f64,
    pub a_candidates: Vec<f64>,
    /// Smoothing exponent `d` in `U = sqrt(M) |eta|^{-1/2} (k^2 eta^2 M)^d`.
    pub d: f64,
    /// Smoothing order `J`.
    pub j: u32,
    /// Tail cutoff constant `c3`.
    pub c3: f64,
}

impl Default for AFEParams {
    fn default() -> Self {
        AFEParams {
            c: 1.0,
            epsilon: 0.05,
            epsilon_prime: 0.05,
            big_a: 1.0,
            a_candidates: vec![0.05, 0.1, 0.2],
            d: 0.01,
            j: 4,
            c3: 4.0,
        }
    }
}

impl AFEParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("epsilon", self.epsilon),
            ("epsilon_prime", self.epsilon_prime),
            ("d", self.d),
            ("c3", self.c3),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.big_a >= 1.0) {
            return Err(Error::InvalidInput("A must be >= 1".into()));
        }
        if self.j < 2 {
            return Err(Error::InvalidInput("J must be >= 2".into()));
        }
        if self.a_candidates.is_empty() || self.a_candidates.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidInput(
                "a_candidates must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

/// All reduced fractions in `[0, 1]` with denominator at most `q`, ascending.
pub fn farey_sequence(q: u64) -> Result<Vec<FareyFraction>> {
    if q == 0 {
        return Err(Error::InvalidInput("Farey order must be positive".into()));
    }
    if q > MAX_FAREY_ORDER {
        return Err(Error::OrderTooLarge {
            order: q,
            max: MAX_FAREY_ORDER,
        });
    }
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, q);
    let mut out = vec![FareyFraction { h: 0, k: 1 }];
    while c <= q {
        out.push(FareyFraction { h: c as i64, k: d });
        let t = (q + b) / d;
        (a, b, c, d) = (c, d, t * c - a, t * d - b);
    }
    Ok(out)
}

/// Exact sign of `x - p/q` for finite `x` and `q < 2^53`.
fn cmp_to_fraction(x: f64, p: u64, q: u64) -> Ordering {
    let (hi, lo) = two_prod(x, q as f64);
    let diff = hi - p as f64;
    let s = diff + lo;
    if s > 0.0 {
        Ordering::Greater
    } else if s < 0.0 {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Consecutive order-`q` Farey fractions `left <= x <= right`, for `x` in `[0, 1]`.
/// Both bounds coincide when `x` is itself in the sequence.
pub fn farey_neighbors(x: f64, q: u64) -> (FareyFraction, FareyFraction) {
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, 1u64);
    if x <= 0.0 {
        return (FareyFraction { h: 0, k: 1 }, FareyFraction { h: 0, k: 1 });
    }
    if x >= 1.0 {
        return (FareyFraction { h: 1, k: 1 }, FareyFraction { h: 1, k: 1 });
    }
    loop {
        if b + d > q {
            break;
        }
        let (mn, md) = (a + c, b + d);
        match cmp_to_fraction(x, mn, md) {
            Ordering::Equal => {
                let f = FareyFraction { h: mn as i64, k: md };
                return (f, f);
            }
            Ordering::Less => {
                // Pull `right` toward `left`: largest t with x < (t a + c)/(t b + d).
                let cap = (q - d) / b;
                let t = largest_true(cap, |t| cmp_to_fraction(x, t * a + c, t * b + d) == Ordering::Less);
                if t == 0 {
                    break;
                }
                (c, d) = (t * a + c, t * b + d);
            }
            Ordering::Greater => {
                let cap = (q - b) / d;
                let t = largest_true(cap, |t| cmp_to_fraction(x, a + t * c, b + t * d) == Ordering::Greater);
                if t == 0 {
                    break;
                }
                (a, b) = (a + t * c, b + t * d);
            }
        }
    }
    // The loop exits with left < x < right; catch exact hits on the bounds.
    let left = FareyFraction { h: a as i64, k: b };
    let right = FareyFraction { h: c as i64, k: d };
    if cmp_to_fraction(x, a, b) == Ordering::Equal {
        return (left, left);
    }
    if cmp_to_fraction(x, c, d) == Ordering::Equal {
        return (right, right);
    }
    (left, right)
}

/// Largest `t` in `[1, cap]` with `pred(t)`, or 0. `pred` must be monotone (true then false).
fn largest_true(cap: u64, pred: impl Fn(u64) -> bool) -> u64 {
    if cap == 0 || !pred(1) {
        return 0;
    }
    let (mut lo, mut hi) = (1u64, cap);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn offset_from(x: f64, f: FareyFraction) -> Dd {
    Dd::from_f64(x) - f.as_dd()
}

fn admissible(eta: Dd, f: FareyFraction, q: u64) -> bool {
    // |eta| * k * Q <= 1
    let scaled = eta.mul_f64(f.k as f64).mul_f64(q as f64);
    scaled.hi.abs() < 1.0 || (scaled.hi.abs() == 1.0 && scaled.lo * scaled.hi.signum() <= 0.0)
}

/// Order-`q` Farey approximation `alpha = h/k + eta` with `|eta| <= 1/(kq)`.
///
/// Of the two Farey neighbours of `alpha`, the nearer admissible one is
/// returned; equidistant candidates resolve to the smaller denominator.
/// Inputs outside `[0, 1]` are reduced mod 1 and flagged.
pub fn farey_approx(alpha: f64, q: u64) -> Result<AlphaSplit> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite(alpha));
    }
    if q == 0 {
        return Err(Error::InvalidInput("Farey order must be positive".into()));
    }
    if q >= 1 << 52 {
        return Err(Error::InvalidInput(format!("Farey order {q} exceeds 2^52")));
    }
    let mut x = alpha;
    let mut reduced = false;
    if !(0.0..=1.0).contains(&x) {
        x -= x.floor();
        reduced = true;
    }
    let (left, right) = farey_neighbors(x, q);
    let el = offset_from(x, left);
    let er = offset_from(x, right);
    let pick_left = match (admissible(el, left, q), admissible(er, right, q)) {
        (true, false) => true,
        (false, true) => false,
        // Both (or, through rounding, neither) admissible: nearest wins.
        _ => match el.abs().cmp_value(er.abs()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => left.k <= right.k,
        },
    };
    let (frac, eta) = if pick_left { (left, el) } else { (right, er) };
    Ok(AlphaSplit {
        frac,
        eta: eta.hi,
        eta_tail: eta.lo,
        order: q,
        h_bar: mod_inverse(frac.h, frac.k)?,
        reduced_mod_one: reduced,
    })
}

/// The dual frequency `beta = -h_bar/k - 1/(k^2 eta)` reduced to `[0, 1)`.
pub fn dual_frequency(split: &AlphaSplit) -> Result<Dd> {
    if split.eta == 0.0 {
        return Err(Error::InvalidInput("eta must be non-zero".into()));
    }
    let k = split.k() as f64;
    let k2eta = split.eta_dd().mul_f64(k).mul_f64(k);
    let beta = -Dd::ratio(split.h_bar as i128, split.k() as i128) - k2eta.recip();
    Ok(beta.frac_unit())
}

/// One step `j` of the condition ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub j: u32,
    pub delta: f64,
    pub order: u64,
    pub h_j: i64,
    pub k_j: u64,
    pub eta_j: f64,
    /// `|beta - h_j/k_j| >= c Delta_j^{eps - 1}`
    pub far_from_fraction: bool,
    /// `k_j >= c Delta_j^{5/6} F^{-1/3}`
    pub large_denominator: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub beta: f64,
    pub ladder: Vec<LadderRow>,
    pub ell: u32,
    pub passed: bool,
    /// `Delta_1 < 1`: the ladder is empty and `passed` holds vacuously.
    pub degenerate_ladder: bool,
    /// `k^2 eta^2 M < c (log M)^A`.
    pub below_scale: bool,
    /// The threshold `c^{-1} (k^2 |eta|^3 M)^{2/5}` that `Delta_ell` must reach.
    pub threshold: f64,
}

/// Evaluate the Farey-ladder conditions on the dual frequency of `split`.
pub fn beta_ladder(split: &AlphaSplit, m: u64, params: &AFEParams) -> Result<ConditionReport> {
    params.validate()?;
    if split.eta == 0.0 {
        return Err(Error::OutsideHypotheses("eta = 0".into()));
    }
    let mf = m as f64;
    let k = split.k() as f64;
    let eta = split.eta.abs();
    let f = k * k * eta * eta * mf;
    if !(f >= 1.0) {
        return Err(Error::OutsideHypotheses(format!("k^2 eta^2 M = {f} < 1")));
    }
    let beta = dual_frequency(split)?.to_f64();
    let below_scale = f < params.c * mf.ln().powf(params.big_a);
    let threshold = (k * k * eta.powi(3) * mf).powf(0.4) / params.c;
    let delta1 = k * k * eta.powf(1.5) * mf.sqrt() * f.powf(params.epsilon) * 0.5;

    if delta1 < 1.0 {
        return Ok(ConditionReport {
            beta,
            ladder: Vec::new(),
            ell: 0,
            passed: true,
            degenerate_ladder: true,
            below_scale,
            threshold,
        });
    }

    let mut ladder = Vec::new();
    let mut j = 1u32;
    loop {
        let delta = delta1 * 0.5f64.powi(j as i32 - 1);
        let order = (delta.powf(0.5 - params.epsilon_prime).floor() as u64).max(1);
        let approx = farey_approx(beta, order)?;
        let far = approx.eta.abs() >= params.c * delta.powf(params.epsilon - 1.0);
        let large = approx.k() as f64 >= params.c * delta.powf(5.0 / 6.0) * f.powf(-1.0 / 3.0);
        ladder.push(LadderRow {
            j,
            delta,
            order,
            h_j: approx.h(),
            k_j: approx.k(),
            eta_j: approx.eta,
            far_from_fraction: far,
            large_denominator: large,
            verdict: far || large,
        });
        if delta <= threshold {
            break;
        }
        j += 1;
    }
    let passed = ladder.iter().all(|r| r.verdict);
    Ok(ConditionReport {
        beta,
        ell: j,
        ladder,
        passed,
        degenerate_ladder: false,
        below_scale,
        threshold,
    })
}

/// Monte-Carlo estimate of the measure of `alpha` failing the short-sum conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub failures: u64,
    pub samples: u64,
    pub sigma: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `alpha = h/k + eta` (order `Delta^{1/2 - eps}`) fails when both
/// `|eta| < c Delta^{eps - 1}` and `k < c Delta^{5/6} M^{-1/3}`.
pub fn fails_short_sum_conditions(alpha: f64, m: f64, delta: f64, c: f64, epsilon: f64) -> Result<bool> {
    let order = (delta.powf(0.5 - epsilon).floor() as u64).max(1);
    let split = farey_approx(alpha, order)?;
    let small_eta = split.eta.abs() < c * delta.powf(epsilon - 1.0);
    let small_k = (split.k() as f64) < c * delta.powf(5.0 / 6.0) * m.powf(-1.0 / 3.0);
    Ok(small_eta && small_k)
}

pub fn exceptional_measure(m: u64, delta: f64, sample_count: u64, seed: u64) -> Result<MeasureEstimate> {
    let p = AFEParams::default();
    exceptional_measure_with(m, delta, sample_count, seed, p.c, p.epsilon)
}

/// Draws are taken from ChaCha8 stream `s` for samples
/// `[s * MEASURE_STREAM_LEN, (s + 1) * MEASURE_STREAM_LEN)`, so the estimate is
/// a function of `(seed, sample_count)` alone.
pub fn exceptional_measure_with(
    m: u64,
    delta: f64,
    sample_count: u64,
    seed: u64,
    c: f64,
    epsilon: f64,
) -> Result<MeasureEstimate> {
    if sample_count < 1000 {
        return Err(Error::InvalidInput(format!("sample_count {sample_count} < 1000")));
    }
    if !(delta >= 1.0) || m < 2 {
        return Err(Error::InvalidInput("need Delta >= 1 and M >= 2".into()));
    }
    let stream_len = MEASURE_STREAM_LEN as u64;
    let streams = sample_count.div_ceil(stream_len);
    let mf = m as f64;
    let counts: Vec<Result<u64>> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let n = stream_len.min(sample_count - s * stream_len);
            let mut fails = 0u64;
            for _ in 0..n {
                let alpha: f64 = rng.random();
                if fails_short_sum_conditions(alpha, mf, delta, c, epsilon)? {
                    fails += 1;
                }
            }
            Ok(fails)
        })
        .collect();
    let mut failures = 0u64;
    for c in counts {
        failures += c?;
    }
    let n = sample_count as f64;
    let p = failures as f64 / n;
    let z = 1.959_963_984_540_054;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    Ok(MeasureEstimate {
        estimate: p,
        failures,
        samples: sample_count,
        sigma: (p * (1.0 - p) / n).sqrt(),
        ci_low: (centre - half).max(0.0),
        ci_high: (centre + half).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(h: i64, k: u64) -> FareyFraction {
        FareyFraction { h, k }
    }

    #[test]
    fn small_sequences() {
        assert_eq!(farey_sequence(1).unwrap(), vec![frac(0, 1), frac(1, 1)]);
        assert_eq!(
            farey_sequence(3).unwrap(),
            vec![frac(0, 1), frac(1, 3), frac(1, 2), frac(2, 3), frac(1, 1)]
        );
    }

    #[test]
    fn length_of_order_100() {
        // Oracle: 1 + sum of Euler phi(q) for q <= 100, phi by brute-force gcd count.
        let phi_sum: u64 = (1..=100u64)
            .map(|q| (1..=q).filter(|&a| crate::arithmetic::gcd(a, q) == 1).count() as u64)
            .sum();
        assert_eq!(phi_sum + 1, 3045);
        assert_eq!(farey_sequence(100).unwrap().len(), 3045);
    }

    #[test]
    fn neighbours_are_unimodular() {
        for q in [1, 2, 7, 50, 313] {
            let seq = farey_sequence(q).unwrap();
            for w in seq.windows(2) {
                let (l, r) = (w[0], w[1]);
                assert_eq!(l.k as i64 * r.h - l.h * r.k as i64, 1);
            }
        }
    }

    #[test]
    fn order_guard() {
        assert!(matches!(farey_sequence(100_001), Err(Error::OrderTooLarge { .. })));
        assert!(farey_sequence(0).is_err());
    }

    #[test]
    fn approx_examples() {
        let s = farey_approx(0.5, 10).unwrap();
        assert_eq!((s.h(), s.k(), s.eta), (1, 2, 0.0));

        let s = farey_approx(0.3, 5).unwrap();
        assert_eq!((s.h(), s.k()), (1, 3));
        assert!((s.eta + 1.0 / 30.0).abs() < 1e-16);
        assert!(s.eta.abs() <= 1.0 / 15.0);
        assert_eq!(s.h_bar, 1);

        let s = farey_approx(1.3, 5).unwrap();
        assert!(s.reduced_mod_one);
        assert_eq!((s.h(), s.k()), (1, 3));

        let s = farey_approx(1.0, 7).unwrap();
        assert_eq!((s.h(), s.k(), s.eta), (1, 1, 0.0));
    }

    #[test]
    fn approx_pi_fraction_matches_enumeration() {
        let x = std::f64::consts::PI - 3.0;
        let q = 1000;
        let s = farey_approx(x, q).unwrap();
        let best = farey_sequence(q)
            .unwrap()
            .into_iter()
            .filter(|f| (x - f.value()).abs() <= 1.0 / (f.k as f64 * q as f64))
            .min_by(|a, b| (x - a.value()).abs().partial_cmp(&(x - b.value()).abs()).unwrap())
            .unwrap();
        assert_eq!((s.h(), s.k()), (best.h, best.k));
        assert_eq!((s.h(), s.k()), (16, 113));
    }

    #[test]
    fn large_order_is_cheap() {
        let s = farey_approx(0.123_456_789_012_345, 1_000_000_000_000).unwrap();
        assert!(s.k() <= 1_000_000_000_000);
        assert!(s.eta.abs() * s.k() as f64 * 1e12 <= 1.0 + 1e-9);
    }

    #[test]
    fn ladder_degenerate_and_errors() {
        let p = AFEParams::default();
        let tiny = AlphaSplit::from_parts(1, 1, 1e-5).unwrap();
        assert!(matches!(
            beta_ladder(&tiny, 1_000_000, &p),
            Err(Error::OutsideHypotheses(_))
        ));
        // F = 100 k^2 eta^2 M with k = 1: Delta_1 = eta^{3/2} M^{1/2} F^eps / 2 < 1.
        let s = AlphaSplit::from_parts(0, 1, 0.01).unwrap();
        let r = beta_ladder(&s, 1_000_000, &p).unwrap();
        assert!(r.degenerate_ladder && r.passed && r.ladder.is_empty());
    }

    #[test]
    fn ladder_rows_follow_halving() {
        let p = AFEParams::default();
        let s = AlphaSplit::from_parts(1, 100, 1e-4).unwrap();
        let m = 100_000_000u64;
        let r = beta_ladder(&s, m, &p).unwrap();
        assert!(r.ladder.len() > 2);
        assert_eq!(r.ell as usize, r.ladder.len());
        let d1 = r.ladder[0].delta;
        for row in &r.ladder {
            assert_eq!(row.delta, d1 * 0.5f64.powi(row.j as i32 - 1));
        }
        let last = r.ladder.last().unwrap().delta;
        assert!(last <= r.threshold);
        if r.ell > 1 {
            assert!(r.ladder[r.ladder.len() - 2].delta > r.threshold);
        }
        assert_eq!(r.passed, r.ladder.iter().all(|row| row.verdict));
    }

    #[test]
    fn measure_is_zero_without_admissible_denominators() {
        // Delta^{5/6} M^{-1/3} < 1 for Delta = 10, M = 10^6.
        let e = exceptional_measure(1_000_000, 10.0, 2000, 3).unwrap();
        assert_eq!(e.failures, 0);
    }

    #[test]
    fn measure_is_deterministic() {
        let a = exceptional_measure(10_000, 300.0, 5000, 11).unwrap();
        let b = exceptional_measure(10_000, 300.0, 5000, 11).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| exceptional_measure(10_000, 300.0, 5000, 11).unwrap());
        assert_eq!(a, c);
        assert!(exceptional_measure(10_000, 300.0, 999, 11).is_err());
    }
}
