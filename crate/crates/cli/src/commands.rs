//! One handler per subcommand; each returns the rendered result and whether
//! a numeric budget was exhausted along the way.

use clap::{Args, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use divsum::afe::{afe_check, afe_sweep, fit_exponent, random_sweep_points, AFEReport, SweepPoint};
use divsum::arithmetic::{e_phase, gcd, isqrt, AlphaSplit};
use divsum::expsum::{build_eta_j, mean_square, raw_sum, smoothed_sum, SmoothingSpec, SumSpec};
use divsum::farey::{exceptional_measure, farey_approx, AFEParams, MeasureEstimate, MAX_FAREY_ORDER};
use divsum::oscint::{saddle_compare, AmplitudeSpec, PhaseSpec, SaddleResult};
use divsum::voronoi::{default_truncation, voronoi_rhs};
use divsum::{Error, Result};

use crate::output::{Rendered, Row, Table};

fn finite(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::InvalidInput(format!("serialization failed: {e}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponential sum of d(n) over [m1, m2], optionally smoothed.
    Sum(SumArgs),
    /// Farey approximation alpha = h/k + eta.
    Farey(FareyArgs),
    /// Both sides of the approximate functional equation.
    Afe(AfeArgs),
    /// Smoothed sum against its truncated Voronoi expansion.
    Voronoi(VoronoiArgs),
    /// Saddle-point value of one Voronoi-term integral against quadrature.
    Saddle(SaddleArgs),
    /// Monte-Carlo measure of frequencies failing the short-sum conditions.
    Measure(MeasureArgs),
    /// Approximate functional equation reports over a grid of configurations.
    Sweep(SweepArgs),
    /// Mean square of the sum over alpha in [0, 1] against sum d(n)^2.
    Meansq(MeansqArgs),
}

/// `alpha` given either directly or as `h/k + eta`.
#[derive(Debug, Args)]
pub struct FrequencyArgs {
    #[arg(long, value_parser = finite, conflicts_with_all = ["h", "k", "eta"])]
    pub alpha: Option<f64>,
    /// Farey order used to split --alpha (default: floor(sqrt(m2))).
    #[arg(long, requires = "alpha")]
    pub order: Option<u64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["k", "eta"])]
    pub h: Option<i64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub eta: Option<f64>,
}

impl FrequencyArgs {
    fn split(&self, default_order: u64) -> Result<AlphaSplit> {
        match (self.alpha, self.h, self.k, self.eta) {
            (Some(alpha), ..) => farey_approx(alpha, self.order.unwrap_or(default_order)),
            (None, Some(h), Some(k), Some(eta)) => AlphaSplit::from_parts(h, k, eta),
            _ => Err(Error::InvalidInput("give --alpha or all of --h, --k, --eta".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct SumArgs {
    #[arg(long)]
    pub m1: u64,
    #[arg(long)]
    pub m2: u64,
    #[command(flatten)]
    pub freq: FrequencyArgs,
    /// Averaging window of an eta_J weight with plateau [m1, m2].
    #[arg(long, value_parser = finite, requires = "j")]
    pub u: Option<f64>,
    /// Order of the eta_J weight.
    #[arg(long, requires = "u")]
    pub j: Option<u32>,
}

#[derive(Serialize)]
struct SumOutput {
    m1: u64,
    m2: u64,
    h: i64,
    k: u64,
    eta: f64,
    weighted: bool,
    re: f64,
    im: f64,
    terms: u64,
}

pub fn sum(a: &SumArgs) -> Result<(Rendered, bool)> {
    if a.m1 == 0 || a.m1 > a.m2 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= m1 <= m2, got [{}, {}]",
            a.m1, a.m2
        )));
    }
    let order = isqrt(a.m2).clamp(1, MAX_FAREY_ORDER);
    let split = a.freq.split(order)?;
    let spec = SumSpec::new(a.m1, a.m2, split);
    let value = match (a.u, a.j) {
        (Some(u), Some(j)) => {
            let w = build_eta_j(a.m1 as f64, (a.m2 - a.m1) as f64, u, j)?;
            smoothed_sum(&spec.with_weight(w))?
        }
        _ => raw_sum(&spec)?,
    };
    let out = SumOutput {
        m1: a.m1,
        m2: a.m2,
        h: split.h(),
        k: split.k(),
        eta: split.eta,
        weighted: a.u.is_some(),
        re: value.value.re,
        im: value.value.im,
        terms: value.terms,
    };
    let mut table = Table::new(["m1", "m2", "h", "k", "eta", "weighted", "re", "im", "terms"]);
    table.push(
        Row::new()
            .int(out.m1)
            .int(out.m2)
            .int(out.h)
            .int(out.k)
            .real(out.eta)
            .flag(out.weighted)
            .complex(value.value)
            .int(out.terms),
    );
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}

#[derive(Debug, Args)]
pub struct FareyArgs {
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long)]
    pub order: u64,
}

#[derive(Serialize)]
struct FareyOutput {
    h: i64,
    k: u64,
    eta: f64,
    eta_tail: f64,
    h_bar: u64,
    order: u64,
}

pub fn farey(a: &FareyArgs) -> Result<(Rendered, bool)> {
    let s = farey_approx(a.alpha, a.order)?;
    let out = FareyOutput {
        h: s.h(),
        k: s.k(),
        eta: s.eta,
        eta_tail: s.eta_tail,
        h_bar: s.h_bar,
        order: s.order,
    };
    let mut table = Table::new(["h", "k", "eta", "eta_tail", "h_bar", "order"]);
    table.push(
        Row::new()
            .int(out.h)
            .int(out.k)
            .real(out.eta)
            .real(out.eta_tail)
            .int(out.h_bar)
            .int(out.order),
    );
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}

/// Free constants of the improved functional equation.
#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, value_parser = finite, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_parser = finite, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long = "big-a", value_parser = finite, default_value_t = 1.0)]
    pub big_a: f64,
    /// Candidate decay exponents for the improved normalisation.
    #[arg(long, value_parser = finite, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    pub a_candidates: Vec<f64>,
}

impl ParamArgs {
    fn params(&self) -> AFEParams {
        AFEParams {
            c: self.c,
            epsilon: self.epsilon,
            big_a: self.big_a,
            a_candidates: self.a_candidates.clone(),
            ..AFEParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct AfeArgs {
    /// Single-term family M = q^2, k = q, h = 1, eta = 1/M on [M, M + q/2].
    #[arg(long, requires = "m", conflicts_with_all = ["m1", "m2", "h", "k", "eta"])]
    pub sharpness: bool,
    /// Square M for --sharpness.
    #[arg(long, requires = "sharpness")]
    pub m: Option<u64>,
    #[arg(long, required_unless_present = "sharpness")]
    pub m1: Option<u64>,
    #[arg(long, required_unless_present = "sharpness")]
    pub m2: Option<u64>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "sharpness")]
    pub h: Option<i64>,
    #[arg(long, required_unless_present = "sharpness")]
    pub k: Option<u64>,
    #[arg(long, value_parser = finite, allow_hyphen_values = true, required_unless_present = "sharpness")]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// Columns shared by `afe` and `sweep`.
fn report_table(params: &AFEParams) -> Table {
    let mut header: Vec<String> = [
        "m1",
        "m2",
        "h",
        "k",
        "eta",
        "f",
        "lhs_re",
        "lhs_im",
        "rhs_re",
        "rhs_im",
        "err",
        "norm_classic",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    header.extend(params.a_candidates.iter().map(|a| format!("norm_improved_{a}")));
    header.extend(["dual_terms", "hypotheses_ok", "conditions_passed"].map(String::from));
    Table::new(header)
}

fn report_row(r: &AFEReport) -> Row {
    let mut row = Row::new()
        .int(r.m1)
        .int(r.m2)
        .int(r.h)
        .int(r.k)
        .real(r.eta)
        .real(r.f)
        .complex(r.lhs)
        .complex(r.rhs)
        .real(r.err)
        .real(r.norm_classic);
    for &(_, v) in &r.norm_improved {
        row = row.real(v);
    }
    row.int(r.dual_terms)
        .flag(r.hypotheses.all())
        .flag(r.conditions_passed())
}

#[derive(Serialize)]
struct AfeOutput<'a> {
    #[serde(flatten)]
    report: &'a AFEReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_rel_err: Option<f64>,
}

pub fn afe(a: &AfeArgs) -> Result<(Rendered, bool)> {
    let params = a.params.params();
    let (report, closed_form) = if a.sharpness {
        let m = a.m.unwrap_or(0);
        let q = isqrt(m);
        if q < 2 || q * q != m {
            return Err(Error::InvalidInput(format!("--m must be a square >= 4, got {m}")));
        }
        let report = afe_check(m, m + q / 2, 1, q, 1.0 / m as f64, &params)?;
        let root = q as f64;
        (report, Some(e_phase(-1.0 / root - 1.0)? * root))
    } else {
        let missing = || Error::InvalidInput("--m1, --m2, --h, --k and --eta are required".into());
        let report = afe_check(
            a.m1.ok_or_else(missing)?,
            a.m2.ok_or_else(missing)?,
            a.h.ok_or_else(missing)?,
            a.k.ok_or_else(missing)?,
            a.eta.ok_or_else(missing)?,
            &params,
        )?;
        (report, None)
    };
    let mut table = report_table(&params);
    table.push(report_row(&report));
    let out = AfeOutput {
        report: &report,
        closed_form,
        closed_form_rel_err: closed_form.map(|c| (report.rhs - c).norm() / c.norm()),
    };
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}

/// Smoothing `eta_J` with plateau `[m, m + delta]`.
#[derive(Debug, Args)]
pub struct SmoothingArgs {
    #[arg(long, value_parser = finite)]
    pub m: f64,
    #[arg(long, value_parser = finite)]
    pub delta: f64,
    #[arg(long, default_value_t = 4)]
    pub j: u32,
    /// Averaging window; by default sqrt(m) |eta|^{-1/2} F^d.
    #[arg(long, value_parser = finite)]
    pub u: Option<f64>,
    #[arg(long, value_parser = finite, default_value_t = 0.01)]
    pub d: f64,
}

impl SmoothingArgs {
    fn smoothing(&self, split: &AlphaSplit) -> Result<SmoothingSpec> {
        match self.u {
            Some(u) => SmoothingSpec::new(self.m, self.delta, u, self.j),
            None => SmoothingSpec::from_split(self.m, self.delta, split, self.d, self.j),
        }
    }
}

#[derive(Debug, Args)]
pub struct VoronoiArgs {
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub h: i64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub eta: f64,
    /// Number of dual terms (default ceil(50 F) + 100).
    #[arg(long)]
    pub n_trunc: Option<u64>,
}

#[derive(Serialize)]
struct VoronoiOutput {
    m: f64,
    delta: f64,
    u: f64,
    j: u32,
    h: i64,
    k: u64,
    eta: f64,
    f: f64,
    n_trunc: u64,
    lhs: Complex64,
    main_integral: Complex64,
    y_sum: Complex64,
    k_sum: Complex64,
    total: Complex64,
    rel_diff: f64,
    tail_estimate: f64,
    tail_decaying: bool,
    flagged_terms: usize,
    main_converged: bool,
}

/// The JSON form is a summary; the CSV form lists every dual term.
pub fn voronoi(a: &VoronoiArgs) -> Result<(Rendered, bool)> {
    let split = AlphaSplit::from_parts(a.h, a.k, a.eta)?;
    let smoothing = a.smoothing.smoothing(&split)?;
    let weight = smoothing.weight()?;
    let (lo, hi) = weight.support;
    let spec = SumSpec::new(lo.ceil().max(1.0) as u64, hi.floor() as u64, split).with_weight(weight);
    let lhs = smoothed_sum(&spec)?.value;
    let n_trunc = a.n_trunc.unwrap_or_else(|| default_truncation(&split, smoothing.m));
    let rhs = voronoi_rhs(&spec, &smoothing, n_trunc)?;
    let total = rhs.total();
    let out = VoronoiOutput {
        m: smoothing.m,
        delta: smoothing.delta,
        u: smoothing.u,
        j: smoothing.j,
        h: split.h(),
        k: split.k(),
        eta: split.eta,
        f: divsum::expsum::dual_length_scale(&split, smoothing.m),
        n_trunc,
        lhs,
        main_integral: rhs.main_integral,
        y_sum: rhs.y_sum,
        k_sum: rhs.k_sum,
        total,
        rel_diff: (total - lhs).norm() / lhs.norm(),
        tail_estimate: rhs.tail_estimate,
        tail_decaying: rhs.tail_decaying,
        flagged_terms: rhs.flagged_terms,
        main_converged: rhs.main_converged,
    };
    let mut table = Table::new(["n", "d", "y_re", "y_im", "k_re", "k_im", "converged"]);
    for t in &rhs.terms {
        table.push(
            Row::new()
                .int(t.n)
                .int(t.d)
                .complex(t.y_integral)
                .complex(t.k_integral)
                .flag(t.converged),
        );
    }
    let exhausted = rhs.flagged_terms > 0 || !rhs.main_converged;
    Ok((Rendered::new(&out, table).map_err(json_error)?, exhausted))
}

#[derive(Debug, Args)]
pub struct SaddleArgs {
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    /// Dual index: the phase is eta x - 2 sqrt(n x)/k.
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, value_parser = finite)]
    pub eta: f64,
    /// Amplitude g(x) = x^p.
    #[arg(long, value_parser = finite, allow_hyphen_values = true, default_value_t = -0.25)]
    pub power: f64,
}

#[derive(Serialize)]
struct SaddleOutput {
    #[serde(flatten)]
    result: SaddleResult,
    abs_diff: Option<f64>,
    bound: f64,
}

pub fn saddle(a: &SaddleArgs) -> Result<(Rendered, bool)> {
    if a.n == 0 || a.k == 0 {
        return Err(Error::InvalidInput("--n and --k must be positive".into()));
    }
    if a.eta <= 0.0 {
        return Err(Error::InvalidInput(
            "--eta must be positive for a stationary point".into(),
        ));
    }
    let split = AlphaSplit::from_parts(0, 1, a.eta)?;
    let smoothing = a.smoothing.smoothing(&split)?;
    let phase = PhaseSpec::new(a.eta, -2.0 * (a.n as f64).sqrt() / a.k as f64);
    let p = a.power;
    let big_g = if p <= 0.0 {
        smoothing.m_minus1.powf(p)
    } else {
        smoothing.m2_ext.powf(p)
    };
    let g = AmplitudeSpec::new(move |x| Complex64::new(x.powf(p), 0.0), big_g);
    let (result, exhausted) = match saddle_compare(&g, &phase, &smoothing) {
        Ok(r) => (r, false),
        Err(Error::BudgetExhausted(msg)) => {
            eprintln!("warning: {msg}");
            (divsum::oscint::saddle_eval(&g, &phase, &smoothing)?, true)
        }
        Err(e) => return Err(e),
    };
    let out = SaddleOutput {
        abs_diff: result.quadrature_reference.map(|q| (q - result.main_term).norm()),
        bound: result.error_first + result.error_edge,
        result,
    };
    let reference = result.quadrature_reference.unwrap_or_default();
    let mut table = Table::new([
        "x0",
        "main_re",
        "main_im",
        "quad_re",
        "quad_im",
        "error_first",
        "error_edge",
        "f_scale",
        "in_edge_zone",
    ]);
    table.push(
        Row::new()
            .real(result.x0.unwrap_or(f64::NAN))
            .complex(result.main_term)
            .complex(reference)
            .real(result.error_first)
            .real(result.error_edge)
            .real(result.f_scale)
            .flag(result.in_edge_zone),
    );
    Ok((Rendered::new(&out, table).map_err(json_error)?, exhausted))
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub m: u64,
    /// Interval length (default M^{5/8}).
    #[arg(long, value_parser = finite)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Serialize)]
struct MeasureOutput {
    m: u64,
    delta: f64,
    #[serde(flatten)]
    estimate: MeasureEstimate,
}

pub fn measure(a: &MeasureArgs, seed: u64) -> Result<(Rendered, bool)> {
    let delta = a.delta.unwrap_or_else(|| (a.m as f64).powf(0.625));
    let estimate = exceptional_measure(a.m, delta, a.samples, seed)?;
    let mut table = Table::new([
        "m", "delta", "estimate", "failures", "samples", "sigma", "ci_low", "ci_high",
    ]);
    table.push(
        Row::new()
            .int(a.m)
            .real(delta)
            .real(estimate.estimate)
            .int(estimate.failures)
            .int(estimate.samples)
            .real(estimate.sigma)
            .real(estimate.ci_low)
            .real(estimate.ci_high),
    );
    let out = MeasureOutput {
        m: a.m,
        delta,
        estimate,
    };
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub m: u64,
    /// Upper end of every interval (default 2M).
    #[arg(long)]
    pub m2: Option<u64>,
    /// Denominators of the grid.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Numerator shared by the grid; must be prime to every k.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub h: i64,
    /// Explicit offsets eta (grid over k x eta).
    #[arg(long, value_parser = finite, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "f_targets")]
    pub eta: Vec<f64>,
    /// Scales F = k^2 eta^2 M (grid over k x F with eta > 0).
    #[arg(long, value_parser = finite, value_delimiter = ',')]
    pub f_targets: Vec<f64>,
    /// Draw this many seeded configurations instead of a grid.
    #[arg(long, conflicts_with_all = ["k", "eta", "f_targets"])]
    pub random: Option<usize>,
    #[arg(long, value_parser = finite, default_value_t = 10.0)]
    pub f_min: f64,
    #[arg(long, value_parser = finite, default_value_t = 1e4)]
    pub f_max: f64,
    #[command(flatten)]
    pub params: ParamArgs,
}

impl SweepArgs {
    fn points(&self, seed: u64) -> Result<Vec<SweepPoint>> {
        if let Some(count) = self.random {
            return random_sweep_points(self.m, count, self.f_min, self.f_max, seed);
        }
        let m2 = self.m2.unwrap_or(2 * self.m);
        let mut points = Vec::new();
        for &k in &self.k {
            if k == 0 || gcd(self.h.unsigned_abs(), k) != 1 {
                return Err(Error::NotInvertible { h: self.h, k });
            }
            for &eta in &self.eta {
                points.push(SweepPoint {
                    m1: self.m,
                    m2,
                    h: self.h,
                    k,
                    eta,
                });
            }
            for &f in &self.f_targets {
                points.push(SweepPoint::at_scale(self.m, m2, self.h, k, f, false));
            }
        }
        Ok(points)
    }
}

#[derive(Serialize)]
struct SweepOutput {
    reports: Vec<AFEReport>,
    fit_exponent: Option<f64>,
}

pub fn sweep(a: &SweepArgs, seed: u64) -> Result<(Rendered, bool)> {
    let params = a.params.params();
    let points = a.points(seed)?;
    if points.is_empty() {
        return Err(Error::InvalidInput("the sweep grid is empty".into()));
    }
    let reports = afe_sweep(&points, &params)?;
    let fit = match fit_exponent(&reports) {
        Ok(v) => Some(v),
        Err(e) => {
            eprintln!("note: no decay fit: {e}");
            None
        }
    };
    let mut table = report_table(&params);
    for r in &reports {
        table.push(report_row(r));
    }
    let out = SweepOutput {
        reports,
        fit_exponent: fit,
    };
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}

#[derive(Debug, Args)]
pub struct MeansqArgs {
    #[arg(long)]
    pub m: u64,
}

#[derive(Serialize)]
struct MeansqOutput {
    m: u64,
    integral: f64,
    coefficient_sum: f64,
    rel_diff: f64,
    /// `sum d(n)^2 / (M log^3 M)`, absent for `M = 1`.
    ratio_m_log3: Option<f64>,
}

pub fn meansq(a: &MeansqArgs) -> Result<(Rendered, bool)> {
    let (integral, coefficient_sum) = mean_square(a.m)?;
    let m = a.m as f64;
    let out = MeansqOutput {
        m: a.m,
        integral,
        coefficient_sum,
        rel_diff: if coefficient_sum > 0.0 {
            (integral - coefficient_sum).abs() / coefficient_sum
        } else {
            0.0
        },
        ratio_m_log3: (a.m >= 2).then(|| coefficient_sum / (m * m.ln().powi(3))),
    };
    let mut table = Table::new(["m", "integral", "coefficient_sum", "rel_diff", "ratio_m_log3"]);
    table.push(
        Row::new()
            .int(out.m)
            .real(out.integral)
            .real(out.coefficient_sum)
            .real(out.rel_diff)
            .real(out.ratio_m_log3.unwrap_or(f64::NAN)),
    );
    Ok((Rendered::new(&out, table).map_err(json_error)?, false))
}
