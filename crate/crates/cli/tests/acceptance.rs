//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::LN_10;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use divsum::afe::{afe_check, afe_sweep, fit_exponent, random_sweep_points};
use divsum::arithmetic::{e_phase, gcd, AlphaSplit};
use divsum::expsum::{
    build_eta_j, build_partition, dual_length_scale, mean_square, smoothed_sum, SmoothingSpec, SumSpec,
};
use divsum::farey::{exceptional_measure, farey_approx};
use divsum::oscint::quad::{integrate, QuadOptions};
use divsum::oscint::{saddle_compare, AmplitudeSpec, PhaseSpec};
use divsum::voronoi::{default_truncation, voronoi_rhs};
use divsum::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: divsum::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Single-term sharpness family `M = q^2`, `k = q`, `h = 1`, `eta = 1/M`.
fn sharpness() -> Outcome {
    let mut worst_rel = 0.0f64;
    let mut ratios = Vec::new();
    for q in [100u64, 300, 1000] {
        let m = q * q;
        let r = lib(afe_check(m, m + q / 2, 1, q, 1.0 / m as f64, &Default::default()))?;
        let root = q as f64;
        let closed = lib(e_phase(-1.0 / root - 1.0))? * root;
        let rel = (r.rhs - closed).norm() / closed.norm();
        worst_rel = worst_rel.max(rel);
        ensure(rel <= 1e-10, || format!("M={m}: rhs off the closed form by {rel:.2e}"))?;
        let ratio = r.lhs.norm() / (root * (m as f64).ln());
        ensure((0.01..=10.0).contains(&ratio), || {
            format!("M={m}: |lhs|/(sqrt M log M) = {ratio:.3}")
        })?;
        ratios.push(ratio);
    }
    Ok(format!(
        "worst rhs rel err {worst_rel:.1e}, |lhs|/(sqrt M log M) = {ratios:.3?}"
    ))
}

/// Nearest admissible Farey fraction by exhaustive exact search; ties keep
/// the first (smallest denominator) candidate.
struct FareyOracle {
    q: u64,
    /// `(h, k, h 2^SHIFT)`.
    fractions: Vec<(i64, u64, i128)>,
}

const SHIFT: u32 = 70;

impl FareyOracle {
    fn new(q: u64) -> Self {
        let mut fractions = Vec::new();
        for k in 1..=q {
            for h in 0..=k {
                if gcd(h, k) == 1 {
                    fractions.push((h as i64, k, (h as i128) << SHIFT));
                }
            }
        }
        FareyOracle { q, fractions }
    }

    /// `alpha` must be a multiple of `2^-SHIFT` in `[0, 1]`.
    fn scaled(alpha: f64) -> i128 {
        (alpha * 2f64.powi(SHIFT as i32)) as i128
    }

    fn distance(a: i128, h: i64, k: u64) -> i128 {
        (a * k as i128 - ((h as i128) << SHIFT)).abs()
    }

    fn admissible(&self, a: i128, h: i64, k: u64) -> bool {
        Self::distance(a, h, k) * self.q as i128 <= 1i128 << SHIFT
    }

    /// `d1/k1` against `d2/k2`.
    fn closer(d1: i128, k1: u64, d2: i128, k2: u64) -> std::cmp::Ordering {
        (d1 * k2 as i128).cmp(&(d2 * k1 as i128))
    }

    fn nearest(&self, a: i128) -> Option<(i64, u64, i128)> {
        let mut best: Option<(i64, u64, i128)> = None;
        for &(h, k, hs) in &self.fractions {
            let d = (a * k as i128 - hs).abs();
            if d * self.q as i128 > 1i128 << SHIFT {
                continue;
            }
            if best.is_none_or(|(_, bk, bd)| Self::closer(d, k, bd, bk).is_lt()) {
                best = Some((h, k, d));
            }
        }
        best
    }
}

fn farey_oracle() -> Outcome {
    let grid: Vec<f64> = (0..10_000).map(|i| f64::from(i) / 9999.0).collect();
    let mut ties = 0usize;
    for q in 1..=100u64 {
        let oracle = FareyOracle::new(q);
        for &alpha in &grid {
            let s = lib(farey_approx(alpha, q))?;
            let (h, k) = (s.h(), s.k());
            let a = FareyOracle::scaled(alpha);
            ensure(oracle.admissible(a, h, k), || {
                format!("Q={q} alpha={alpha}: {h}/{k} not admissible")
            })?;
            let exact_eta = alpha - h as f64 / k as f64;
            ensure((s.eta - exact_eta).abs() <= f64::EPSILON, || {
                format!("Q={q} alpha={alpha}: eta {} off", s.eta)
            })?;
            let (oh, ok, od) = oracle
                .nearest(a)
                .ok_or_else(|| format!("Q={q} alpha={alpha}: oracle found nothing"))?;
            if (oh, ok) != (h, k) {
                let d = FareyOracle::distance(a, h, k);
                ensure(FareyOracle::closer(d, k, od, ok).is_eq(), || {
                    format!("Q={q} alpha={alpha}: got {h}/{k}, oracle {oh}/{ok}")
                })?;
                ties += 1;
            }
        }
    }
    Ok(format!(
        "100 orders x {} points agree ({ties} admissible ties)",
        grid.len()
    ))
}

fn parseval() -> Outcome {
    let mut worst = 0.0f64;
    let mut last_ratio = 0.0;
    for m in [1u64, 16, 64, 512] {
        let (integral, coefficients) = lib(mean_square(m))?;
        let rel = (integral - coefficients).abs() / coefficients;
        worst = worst.max(rel);
        ensure(rel <= 1e-10, || format!("M={m}: sides differ by {rel:.2e}"))?;
        let mf = m as f64;
        if m >= 2 {
            last_ratio = coefficients / (mf * mf.ln().powi(3));
        }
    }
    ensure((0.01..=100.0).contains(&last_ratio), || {
        format!("ratio {last_ratio:.3} at M=512")
    })?;
    Ok(format!(
        "worst rel err {worst:.1e}, sum d^2/(M log^3 M) = {last_ratio:.3} at M=512"
    ))
}

fn voronoi_consistency() -> Outcome {
    // (M, Delta, h, k, F)
    let sets: [(f64, f64, i64, u64, f64); 5] = [
        (1e4, 1000.0, 0, 1, 10.0),
        (2e4, 1000.0, 1, 3, 30.0),
        (5e4, 2000.0, 2, 5, 60.0),
        (1e4, 1000.0, 3, 7, 120.0),
        (1e4, 1000.0, 5, 7, 200.0),
    ];
    let mut rels = Vec::new();
    for (m, delta, h, k, f) in sets {
        let eta = (f / m).sqrt() / k as f64;
        let split = lib(AlphaSplit::from_parts(h, k, eta))?;
        let smoothing = lib(SmoothingSpec::from_split(m, delta, &split, 0.01, 4))?;
        let weight = lib(smoothing.weight())?;
        let (lo, hi) = weight.support;
        let spec = SumSpec::new(lo.ceil() as u64, hi.floor() as u64, split).with_weight(weight);
        let lhs = lib(smoothed_sum(&spec))?.value;
        let n_trunc = default_truncation(&split, m);
        let scale = dual_length_scale(&split, m);
        ensure((scale - f).abs() <= 1e-9 * f, || format!("F = {scale}, wanted {f}"))?;
        // 50 F may land a rounding error above an integer.
        ensure((n_trunc as f64 - (50.0 * f + 100.0)).abs() <= 1.0, || {
            format!("N = {n_trunc} for F = {f}")
        })?;
        let rhs = lib(voronoi_rhs(&spec, &smoothing, n_trunc))?;
        let rel = (rhs.total() - lhs).norm() / lhs.norm();
        ensure(rel <= 1e-3, || format!("M={m} k={k} F={f}: rel diff {rel:.2e}"))?;
        let k_bound = 10.0 * m.powf(-0.375);
        ensure(rhs.k_sum.norm() <= k_bound, || {
            format!("M={m} k={k} F={f}: |K-sum| {:.2e} > {k_bound:.2e}", rhs.k_sum.norm())
        })?;
        rels.push(rel);
    }
    let worst = rels.iter().copied().fold(0.0, f64::max);
    Ok(format!("5 sets, worst rel diff {worst:.1e}, K-sums below 10 M^(-3/8)"))
}

fn saddle_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (f_lo, f_hi) = (1e3f64, 3e4f64);
    let j = 4;
    let mut top = Vec::new();
    let mut worst_margin = 0.0f64;
    for draw in 0..20 {
        let m: f64 = rng.random_range(1e5..1e6);
        let delta = m;
        let u = m / 16.0;
        let smoothing = lib(SmoothingSpec::new(m, delta, u, j))?;
        let k: u64 = rng.random_range(1..=7);
        let f_target = (f_lo.ln() + (f_hi / f_lo).ln() * rng.random::<f64>()).exp();
        let n = ((f_target * k as f64).powi(2) / (4.0 * m)).round().max(1.0);
        let x0 = m + delta * rng.random_range(0.1..0.9);
        let b = -2.0 * n.sqrt() / k as f64;
        let phase = PhaseSpec::new(-b / (2.0 * x0.sqrt()), b);
        let f = phase.f_scale(m);
        ensure(f >= f_lo * 0.99, || format!("draw {draw}: F = {f:.0} below 1e3"))?;
        let g = AmplitudeSpec::new(
            |x: f64| Complex64::new(x.powf(-0.25), 0.0),
            smoothing.m_minus1.powf(-0.25),
        );
        let r = lib(saddle_compare(&g, &phase, &smoothing))?;
        ensure(
            r.x0.is_some_and(|x| (x - x0).abs() <= 1e-6 * x0) && !r.in_edge_zone,
            || format!("draw {draw}: saddle {:?} not at the plateau point {x0:.1}", r.x0),
        )?;
        let reference = r.quadrature_reference.unwrap_or_default();
        let diff = (r.main_term - reference).norm();
        let bound = 3.0 * (r.error_first + r.error_edge);
        ensure(diff <= bound, || {
            format!("draw {draw} (F={f:.0}): |diff| {diff:.3e} > {bound:.3e}")
        })?;
        worst_margin = worst_margin.max(diff / bound);
        if f >= f_hi / 10.0 {
            top.push((f, r.main_term.norm() / reference.norm()));
        }
    }
    ensure(!top.is_empty(), || "no draw in the top F decade".into())?;
    for &(f, ratio) in &top {
        ensure((ratio - 1.0).abs() <= 0.1, || {
            format!("F={f:.0}: modulus ratio {ratio:.4}")
        })?;
    }
    let worst_ratio = top.iter().map(|t| (t.1 - 1.0).abs()).fold(0.0, f64::max);
    Ok(format!(
        "20 draws, worst |diff|/bound {worst_margin:.2e}, {} top-decade draws with modulus ratio within {worst_ratio:.1e} of 1",
        top.len()
    ))
}

fn afe_decay() -> Outcome {
    let m = 1_000_000u64;
    let points = lib(random_sweep_points(m, 200, 10.0, 1e4, 7))?;
    let reports = lib(afe_sweep(&points, &Default::default()))?;
    ensure(reports.iter().all(|r| r.hypotheses.all()), || {
        "a configuration violates the hypotheses".into()
    })?;
    let mut decades = [Vec::new(), Vec::new(), Vec::new()];
    for r in &reports {
        let d = ((r.f.ln() / LN_10).floor() as usize).clamp(1, 3) - 1;
        decades[d].push(r.norm_classic);
    }
    let medians: Vec<f64> = decades.iter().map(|d| median(d.clone())).collect();
    ensure(medians.windows(2).all(|w| w[1] <= w[0]), || {
        format!("decade medians {medians:.4?} increase")
    })?;
    let passed = reports.iter().filter(|r| r.conditions_passed()).count();
    let a = lib(fit_exponent(&reports))?;
    ensure(a > 0.0, || format!("fitted exponent a = {a:.4}"))?;
    Ok(format!(
        "decade medians {medians:.4?}, a = {a:.4} over {passed} conditions-passed configurations"
    ))
}

fn weights() -> Outcome {
    let (m, delta, u) = (1e6f64, 1e4f64, 500.0f64);
    for j in [1u32, 2, 4, 8] {
        let w = lib(build_eta_j(m, delta, u, j))?;
        let (lo, hi) = w.support;
        for i in 0..1000 {
            let x = lo - 100.0 + (hi - lo + 200.0) * f64::from(i) / 999.0;
            let v = w.eval(x);
            ensure((0.0..=1.0).contains(&v), || format!("J={j}: w({x}) = {v}"))?;
            if (m..=m + delta).contains(&x) {
                ensure(v == 1.0, || format!("J={j}: plateau value {v} at {x}"))?;
            }
            if x <= lo || x >= hi {
                ensure(v == 0.0, || format!("J={j}: value {v} outside the support at {x}"))?;
            }
            let mut factorial = 1.0;
            for order in 1..=j {
                factorial *= f64::from(order);
                let dv = w.derivative(x, order);
                let bound = 10.0 * factorial * u.powi(-(order as i32));
                ensure(dv.abs() <= bound, || {
                    format!("J={j}: |w^({order})({x})| = {dv:.3e} > {bound:.3e}")
                })?;
                // Finite-difference check where the derivative is continuous.
                let step = 1e-3 * u;
                let near_kink = w.breakpoints().iter().any(|b| (x - b).abs() < 3.0 * step);
                if order < j && !near_kink {
                    let fd = (w.derivative(x + step, order - 1) - w.derivative(x - step, order - 1)) / (2.0 * step);
                    let scale = u.powi(-(order as i32));
                    ensure((fd - dv).abs() <= 1e-4 * scale, || {
                        format!("J={j}: w^({order})({x}) = {dv:.6e} but differences give {fd:.6e}")
                    })?;
                }
            }
        }
    }

    // Closed-form transform against quadrature for J = 3.
    let w = lib(build_eta_j(m, delta, u, 3))?;
    let opts = QuadOptions {
        rel_tol: 1e-11,
        ..QuadOptions::default()
    };
    let mut worst_ft = 0.0f64;
    for i in 0..100 {
        let lambda = 1e-5 * 1e4f64.powf(f64::from(i) / 99.0);
        let closed = lib(w.fourier(lambda))?;
        let shift = m;
        let q = integrate(
            |x| w.eval(x) * Complex64::from_polar(1.0, -lambda * (x - shift)),
            &w.breakpoints(),
            lambda / std::f64::consts::TAU,
            &opts,
        );
        let direct = q.value * Complex64::from_polar(1.0, -lambda * shift);
        let err = (closed - direct).norm() / (delta + 3.0 * u);
        worst_ft = worst_ft.max(err);
        ensure(err <= 1e-8, || {
            format!("transform at lambda={lambda:.3e} off by {err:.2e}")
        })?;
    }

    // Partition of unity at M = 10^6 with Delta = M^(5/8).
    let delta = m.powf(0.625);
    let depth = match build_partition(m, delta, 1, 0.0) {
        Err(Error::PartitionTooShallow { required, .. }) => required as u32,
        Err(e) => return Err(e.to_string()),
        Ok(_) => 1,
    };
    let part = lib(build_partition(m, delta, depth, 0.0))?;
    let (c_lo, c_hi) = part.covered;
    let mut worst_sum = 0.0f64;
    for i in 0..1000 {
        let x = c_lo + (c_hi - c_lo) * (f64::from(i) + 0.5) / 1000.0;
        worst_sum = worst_sum.max((part.sum_at(x) - 1.0).abs());
    }
    ensure(worst_sum <= 1e-12, || {
        format!("partition sums deviate from 1 by {worst_sum:.2e}")
    })?;
    let tail_limit = 4.0 * m.powf(0.4);
    ensure(part.tail <= tail_limit, || {
        format!("tail {:.1} > {tail_limit:.1}", part.tail)
    })?;
    Ok(format!(
        "J in {{1,2,4,8}} invariants hold, transform err {worst_ft:.1e}, partition depth {depth} sums to 1 within {worst_sum:.1e}, tail {:.1} <= {tail_limit:.1}",
        part.tail
    ))
}

fn exceptional_set() -> Outcome {
    let mut estimates = Vec::new();
    for m in [10_000u64, 1_000_000, 100_000_000] {
        let mf = m as f64;
        let e = lib(exceptional_measure(m, mf.powf(0.625), 100_000, 11))?;
        let bound = 100.0 * mf.powf(-0.25);
        ensure(e.estimate <= bound, || {
            format!("M={m}: estimate {} > {bound}", e.estimate)
        })?;
        estimates.push(e.estimate);
    }
    ensure(estimates.windows(2).all(|w| w[1] < w[0]), || {
        format!("estimates {estimates:?} not decreasing")
    })?;
    Ok(format!("estimates {estimates:.4?} at M = 1e4, 1e6, 1e8"))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_divsum");
    let commands: &[&[&str]] = &[
        &["sum", "--m1", "1", "--m2", "100000", "--alpha", "0.3183098861837907"],
        &[
            "sum", "--m1", "1000", "--m2", "5000", "--h", "2", "--k", "7", "--eta", "-1e-4", "--u", "50", "--j", "3",
        ],
        &["farey", "--alpha", "0.3", "--order", "5"],
        &["afe", "--sharpness", "--m", "10000"],
        &[
            "afe", "--m1", "100000", "--m2", "200000", "--h", "1", "--k", "3", "--eta", "2e-3",
        ],
        &[
            "voronoi", "--m", "10000", "--delta", "500", "--h", "1", "--k", "2", "--eta", "0.01", "--j", "3",
        ],
        &[
            "saddle", "--m", "100000", "--delta", "100000", "--u", "6000", "--j", "4", "--n", "50", "--k", "3",
            "--eta", "0.006",
        ],
        &["measure", "--m", "1000000", "--samples", "20000"],
        &["sweep", "--m", "100000", "--random", "12", "--f-max", "1000"],
        &["sweep", "--m", "100000", "--k", "1,2,3", "--f-targets", "10,100"],
        &["meansq", "--m", "64"],
    ];
    let run = |args: &[&str], threads: &str, format: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(bin)
            .args(args)
            .args(["--output", format, "--seed", "5", "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        Ok(out.stdout)
    };
    let mut runs = 0;
    for args in commands {
        for format in ["json", "csv"] {
            let reference = run(args, "1", format)?;
            for threads in ["1", "2", "4"] {
                let again = run(args, threads, format)?;
                runs += 1;
                ensure(again == reference, || {
                    format!("{args:?} --output {format} differs at {threads} threads")
                })?;
            }
        }
    }
    Ok(format!(
        "{} commands x 2 formats, {runs} re-runs byte-identical at 1, 2 and 4 threads",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("sharpness family", sharpness),
        ("Farey oracle equivalence", farey_oracle),
        ("mean-square identity", parseval),
        ("Voronoi self-consistency", voronoi_consistency),
        ("saddle-point accuracy", saddle_accuracy),
        ("error decay in F", afe_decay),
        ("weight machinery", weights),
        ("exceptional-set measure", exceptional_set),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed: Duration = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {name}: {tag} [{:.1} s] {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
