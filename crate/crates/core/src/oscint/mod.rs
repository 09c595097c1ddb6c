//! Oscillatory integrals `int g(x) e(B sqrt(x) + iota x) dx`: a reference
//! quadrature, the first-order saddle-point approximation with its error
//! terms, and a probe of the repeated-integration-by-parts decay bound.

pub mod quad;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::arithmetic::cis_turns;
use crate::error::{Error, Result};
use crate::expsum::{SmoothingSpec, WeightFunction};
use quad::{integrate, QuadOptions, QuadResult};

/// Saddles closer than this fraction of the interval to an endpoint are
/// reported as edge saddles.
pub const EDGE_TOLERANCE: f64 = 1e-6;

/// `e(t)` for a phase of moderate size, reduced mod 1 first.
#[inline]
pub(crate) fn e_turns(t: f64) -> Complex64 {
    cis_turns(t - t.round())
}

/// Phase `B sqrt(x) + iota x`, measured in turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpec {
    /// Linear coefficient `iota`.
    pub linear: f64,
    /// Coefficient `B` of `sqrt(x)`.
    pub sqrt_coeff: f64,
}

impl PhaseSpec {
    pub fn new(linear: f64, sqrt_coeff: f64) -> Self {
        PhaseSpec { linear, sqrt_coeff }
    }

    /// Total phase `B sqrt(x) + iota x`.
    pub fn total(&self, x: f64) -> f64 {
        self.sqrt_coeff * x.sqrt() + self.linear * x
    }

    /// Derivative of the total phase.
    pub fn slope(&self, x: f64) -> f64 {
        0.5 * self.sqrt_coeff / x.sqrt() + self.linear
    }

    /// Second derivative `-B / (4 x^{3/2})`.
    pub fn curvature(&self, x: f64) -> f64 {
        -0.25 * self.sqrt_coeff / (x * x.sqrt())
    }

    /// Oscillation scale `|B| sqrt(m)`.
    pub fn f_scale(&self, m: f64) -> f64 {
        self.sqrt_coeff.abs() * m.sqrt()
    }

    fn conjugate(&self) -> Self {
        PhaseSpec::new(-self.linear, -self.sqrt_coeff)
    }

    /// Largest `|slope|` on `[a, b]`; the slope is monotone there.
    fn max_slope(&self, a: f64, b: f64) -> f64 {
        self.slope(a).abs().max(self.slope(b).abs())
    }
}

pub type Amplitude = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Amplitude `g` with the scale bounds used by the error estimates.
#[derive(Clone)]
pub struct AmplitudeSpec {
    pub g: Amplitude,
    /// Bound `|g| <= G` on the interval.
    pub big_g: f64,
    /// `|g^(nu)| <= A0 A1^{-nu}`.
    pub a0: f64,
    pub a1: f64,
    /// Analyticity margin of the phase.
    pub rho: f64,
    /// Smoothness order.
    pub p: u32,
    /// Points where `g` is not smooth.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for AmplitudeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmplitudeSpec")
            .field("big_g", &self.big_g)
            .field("a0", &self.a0)
            .field("a1", &self.a1)
            .field("rho", &self.rho)
            .field("p", &self.p)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl AmplitudeSpec {
    pub fn new<F>(g: F, big_g: f64) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        AmplitudeSpec {
            g: Arc::new(g),
            big_g,
            a0: big_g,
            a1: 1.0,
            rho: f64::INFINITY,
            p: 0,
            breakpoints: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.g)(x)
    }

    /// The amplitude multiplied by `weight`, inheriting its breakpoints and
    /// derivative scale.
    pub fn weighted(&self, weight: &WeightFunction) -> Self {
        let g = self.g.clone();
        let w = weight.clone();
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(weight.breakpoints());
        AmplitudeSpec {
            g: Arc::new(move |x| g(x) * w.eval(x)),
            breakpoints,
            ..self.clone()
        }
    }

    fn conjugate(&self) -> Self {
        let g = self.g.clone();
        AmplitudeSpec {
            g: Arc::new(move |x| g(x).conj()),
            ..self.clone()
        }
    }
}

fn breaks_within(a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(extra.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `int_a^b g(x) e(B sqrt(x) + iota x) dx` by adaptive Gauss–Kronrod panels
/// no longer than one local period.
pub fn osc_quadrature(g: &AmplitudeSpec, phase: &PhaseSpec, a: f64, b: f64) -> Result<QuadResult> {
    osc_quadrature_with(g, phase, a, b, &QuadOptions::default())
}

pub fn osc_quadrature_with(
    g: &AmplitudeSpec,
    phase: &PhaseSpec,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("need a < b, got [{a}, {b}]")));
    }
    if phase.sqrt_coeff != 0.0 && !(a > 0.0) {
        return Err(Error::Domain("sqrt phase needs a positive interval".into()));
    }
    let mut extra = g.breakpoints.clone();
    if let Some(s) = saddle_locate(phase, a, b) {
        extra.push(s.x0);
    }
    let breaks = breaks_within(a, b, &extra);
    // Reference point keeps the phase argument small near the interval.
    let x_ref = a;
    let phase_ref = phase.total(x_ref);
    let f = |x: f64| {
        let v = g.eval(x);
        if v == Complex64::default() {
            return v;
        }
        v * e_turns(phase.total(x) - phase_ref)
    };
    let mut r = integrate(f, &breaks, phase.max_slope(a, b), opts);
    r.value *= e_turns(phase_ref);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleLocation {
    pub x0: f64,
    /// Within [`EDGE_TOLERANCE`] of an endpoint.
    pub edge: bool,
}

/// Zero of `B / (2 sqrt(x)) + iota` in `[a, b]`, if any.
///
/// For this phase family the root is `x0 = B^2 / (4 iota^2)` whenever `B`
/// and `iota` have opposite signs; it is polished by Newton steps on the
/// slope and snapped to an endpoint when it lies within the edge tolerance.
pub fn saddle_locate(phase: &PhaseSpec, a: f64, b: f64) -> Option<SaddleLocation> {
    let (bc, iota) = (phase.sqrt_coeff, phase.linear);
    if bc == 0.0 || iota == 0.0 || bc.signum() == iota.signum() {
        return None;
    }
    let r = -bc / (2.0 * iota);
    let mut x0 = r * r;
    for _ in 0..2 {
        let c = phase.curvature(x0);
        if c == 0.0 {
            break;
        }
        let step = phase.slope(x0) / c;
        if !step.is_finite() {
            break;
        }
        x0 -= step;
    }
    let tol = EDGE_TOLERANCE * (b - a);
    if x0 < a - tol || x0 > b + tol {
        return None;
    }
    if (x0 - a).abs() <= tol {
        return Some(SaddleLocation { x0: a, edge: true });
    }
    if (x0 - b).abs() <= tol {
        return Some(SaddleLocation { x0: b, edge: true });
    }
    Some(SaddleLocation { x0, edge: false })
}

/// First-order saddle-point value of `int eta_J g e(f + iota x)` with the
/// explicit first-order and edge error terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleResult {
    pub x0: Option<f64>,
    pub edge_saddle: bool,
    /// Saddle lies in one of the two averaging zones at the ends.
    pub in_edge_zone: bool,
    pub main_term: Complex64,
    pub error_first: f64,
    pub error_edge: f64,
    pub f_scale: f64,
    pub quadrature_reference: Option<Complex64>,
}

/// Cut-off profile: 1 on the plateau, linear across the averaging zones.
fn cutoff(x: f64, s: &SmoothingSpec) -> f64 {
    let zone = f64::from(s.j) * s.v;
    if zone <= 0.0 {
        return 1.0;
    }
    let left = (x - s.m_minus1) / zone;
    let right = (s.m2_ext - x) / zone;
    left.min(right).clamp(0.0, 1.0)
}

/// Saddle-point approximation over `[M_{-1}, M_2]` of the smoothing.
///
/// Phases with `f'' < 0` are handled by conjugating phase and amplitude,
/// evaluating, and conjugating back. The edge error is doubled to absorb
/// the freedom in the cut-off profile.
pub fn saddle_eval(g: &AmplitudeSpec, phase: &PhaseSpec, smoothing: &SmoothingSpec) -> Result<SaddleResult> {
    let (a, b) = (smoothing.m_minus1, smoothing.m2_ext);
    if !(a > 0.0 && a < b) {
        return Err(Error::Domain(format!("bad saddle interval [{a}, {b}]")));
    }
    if phase.sqrt_coeff == 0.0 {
        return Err(Error::Domain("saddle-point evaluation needs B != 0".into()));
    }
    if phase.curvature(a) < 0.0 {
        let mut r = saddle_eval(&g.conjugate(), &phase.conjugate(), smoothing)?;
        r.main_term = r.main_term.conj();
        return Ok(r);
    }
    let f_scale = phase.f_scale(smoothing.m);
    let big_g = g.big_g;
    let location = saddle_locate(phase, a, b);
    let zone = f64::from(smoothing.j) * smoothing.v;
    let in_edge_zone = location.is_some_and(|s| s.x0 < a + zone || s.x0 > b - zone);
    let delta = if in_edge_zone { 1.0 } else { 0.0 };
    let error_first = big_g * a * f_scale.powf(-1.5) * (1.0 + delta * f_scale.sqrt());

    let floor = f_scale.sqrt() / a;
    let e_j = |x: f64| big_g / (phase.slope(x).abs() + floor).powi(smoothing.j as i32 + 1);
    let mut edge_sum = 0.0;
    for i in 0..=smoothing.j {
        let off = f64::from(i) * smoothing.v;
        edge_sum += e_j(a + off) + e_j(b - off);
    }
    let error_edge = 2.0 * smoothing.v.powi(-(smoothing.j as i32)) * edge_sum;

    let main_term = match location {
        Some(s) => {
            let x0 = s.x0;
            let amplitude = cutoff(x0, smoothing) * phase.curvature(x0).powf(-0.5);
            g.eval(x0) * amplitude * e_turns(phase.total(x0) + 0.125)
        }
        None => Complex64::default(),
    };
    Ok(SaddleResult {
        x0: location.map(|s| s.x0),
        edge_saddle: location.is_some_and(|s| s.edge),
        in_edge_zone,
        main_term,
        error_first,
        error_edge,
        f_scale,
        quadrature_reference: None,
    })
}

/// [`saddle_eval`] with the reference quadrature of `eta_J g e(...)` filled in.
pub fn saddle_compare(g: &AmplitudeSpec, phase: &PhaseSpec, smoothing: &SmoothingSpec) -> Result<SaddleResult> {
    let mut r = saddle_eval(g, phase, smoothing)?;
    let weighted = g.weighted(&smoothing.weight()?);
    let q = osc_quadrature(&weighted, phase, smoothing.m_minus1, smoothing.m2_ext)?;
    if !q.converged {
        return Err(Error::BudgetExhausted("reference quadrature did not converge".into()));
    }
    r.quadrature_reference = Some(q.value);
    Ok(r)
}

/// Measured `|int_a^b g e(phase)|` against the integration-by-parts bound
/// `A0 (A1 B1)^{-P} (1 + A1/rho)^P (b - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayProbe {
    pub measured: f64,
    pub bound: f64,
    /// Smallest `|phase'|` on the interval.
    pub b1: f64,
    pub converged: bool,
}

pub fn jm_decay_probe(g: &AmplitudeSpec, phase: &PhaseSpec, a: f64, b: f64, p: u32) -> Result<DecayProbe> {
    let (sa, sb) = (phase.slope(a), phase.slope(b));
    if sa == 0.0 || sb == 0.0 || sa.signum() != sb.signum() {
        return Err(Error::SaddleInside { a, b });
    }
    let b1 = sa.abs().min(sb.abs());
    let q = osc_quadrature(g, phase, a, b)?;
    let pf = f64::from(p);
    let bound = g.a0 * (g.a1 * b1).powf(-pf) * (1.0 + g.a1 / g.rho).powf(pf) * (b - a);
    Ok(DecayProbe {
        measured: q.value.norm(),
        bound,
        b1,
        converged: q.converged,
    })
}
