//! Smoothing weights: interval indicators, the J-fold box average of an
//! indicator, and the smoothstep bumps of a dyadic partition of unity.
//!
//! Every weight is an exact piecewise polynomial. The box average of order
//! `J` has edges given by the Irwin–Hall distribution function of order `J`;
//! bumps use the smoothstep `S_P(t) = t^{P+1} sum_i C(P+i, i) (1-t)^i`, which
//! satisfies `S_P(t) + S_P(1-t) = 1`, so neighbouring bumps sum to one on
//! their overlap.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest averaging order accepted by [`build_eta_j`].
pub const MAX_AVERAGING_ORDER: u32 = 30;

/// Largest smoothstep order accepted for partition bumps.
pub const MAX_BUMP_ORDER: u32 = 12;

/// Smoothstep order used by [`build_partition`].
pub const DEFAULT_BUMP_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Indicator,
    EtaJ,
    Bump,
}

/// A compactly supported weight with a unit plateau.
///
/// The rising edge occupies `[support.0, plateau.0]` and the falling edge
/// `[plateau.1, support.1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFunction {
    pub kind: WeightKind,
    pub support: (f64, f64),
    pub plateau: (f64, f64),
    /// `J` for box averages, `P` for bumps, 0 for indicators.
    pub order: u32,
    /// Averaging length for box averages; narrowest edge width for bumps.
    pub scale: f64,
    #[serde(skip)]
    ramp: Vec<f64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut c: i128 = 1;
    for i in 0..k as i128 {
        c = c * (n as i128 - i) / (i + 1);
    }
    c as f64
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `j`-th derivative of the Irwin–Hall distribution function of order `order`.
fn irwin_hall(order: u32, j: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let big = f64::from(order);
    if t >= big {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    // Reflect to the lower half where the alternating sum is short.
    if t > 0.5 * big {
        let mirrored = irwin_hall(order, j, big - t);
        return match j {
            0 => 1.0 - mirrored,
            _ if j % 2 == 1 => mirrored,
            _ => -mirrored,
        };
    }
    if j > order {
        return 0.0;
    }
    let power = order - j;
    let mut sum = 0.0;
    let top = t.floor() as u32;
    for i in 0..=top.min(order) {
        let term = binomial(order, i) * (t - f64::from(i)).powi(power as i32);
        sum += if i % 2 == 0 { term } else { -term };
    }
    sum / factorial(power)
}

/// Monomial coefficients of the smoothstep `S_P`.
fn smoothstep_coefficients(p: u32) -> Vec<f64> {
    let degree = 2 * p + 1;
    let mut coeffs = vec![0i128; degree as usize + 1];
    // t^{P+1} C(P+i, i) (1-t)^i expanded binomially.
    for i in 0..=p {
        let c = binomial(p + i, i) as i128;
        for m in 0..=i {
            let b = binomial(i, m) as i128;
            let sign = if m % 2 == 0 { 1 } else { -1 };
            coeffs[(p + 1 + m) as usize] += sign * c * b;
        }
    }
    coeffs.into_iter().map(|c| c as f64).collect()
}

fn smoothstep(p: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    if t > 0.5 {
        return 1.0 - smoothstep(p, 1.0 - t);
    }
    let s = 1.0 - t;
    let mut acc = 0.0;
    for i in (0..=p).rev() {
        acc = acc * s + binomial(p + i, i);
    }
    acc * t.powi(p as i32 + 1)
}

fn poly_derivative(coeffs: &[f64], j: u32, t: f64) -> f64 {
    let mut acc = 0.0;
    for (m, &c) in coeffs.iter().enumerate().rev() {
        let m = m as u32;
        if m < j {
            break;
        }
        let falling: f64 = (0..j).map(|i| f64::from(m - i)).product();
        acc = acc * t + c * falling;
    }
    acc
}

impl WeightFunction {
    /// Indicator of the closed interval `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!("bad indicator interval [{lo}, {hi}]")));
        }
        Ok(WeightFunction {
            kind: WeightKind::Indicator,
            support: (lo, hi),
            plateau: (lo, hi),
            order: 0,
            scale: hi - lo,
            ramp: Vec::new(),
        })
    }

    /// Smoothstep bump on `support` with the given edge widths.
    pub fn bump(support: (f64, f64), rise: f64, fall: f64, p: u32) -> Result<Self> {
        if p > MAX_BUMP_ORDER {
            return Err(Error::OrderTooLarge {
                order: u64::from(p),
                max: u64::from(MAX_BUMP_ORDER),
            });
        }
        let (lo, hi) = support;
        if !(rise > 0.0 && fall > 0.0 && lo + rise <= hi - fall) {
            return Err(Error::InvalidInput(format!(
                "edges {rise}, {fall} do not fit in [{lo}, {hi}]"
            )));
        }
        Ok(WeightFunction {
            kind: WeightKind::Bump,
            support,
            plateau: (lo + rise, hi - fall),
            order: p,
            scale: rise.min(fall),
            ramp: smoothstep_coefficients(p),
        })
    }

    pub fn rise(&self) -> f64 {
        self.plateau.0 - self.support.0
    }

    pub fn fall(&self) -> f64 {
        self.support.1 - self.plateau.1
    }

    /// Weight reflected through `centre`: `x -> w(2 centre - x)`.
    pub fn mirrored(&self, centre: f64) -> Self {
        let c2 = 2.0 * centre;
        WeightFunction {
            support: (c2 - self.support.1, c2 - self.support.0),
            plateau: (c2 - self.plateau.1, c2 - self.plateau.0),
            ..self.clone()
        }
    }

    fn box_order(&self) -> u32 {
        match self.kind {
            WeightKind::EtaJ => self.order,
            _ => 0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        match self.kind {
            WeightKind::Indicator => 1.0,
            WeightKind::EtaJ => {
                if self.order == 0 {
                    return 1.0;
                }
                let t = (x - lo).min(hi - x) / self.scale;
                irwin_hall(self.order, 0, t)
            }
            WeightKind::Bump => {
                if x < self.plateau.0 {
                    smoothstep(self.order, (x - lo) / self.rise())
                } else if x > self.plateau.1 {
                    smoothstep(self.order, (hi - x) / self.fall())
                } else {
                    1.0
                }
            }
        }
    }

    /// `j`-th derivative; the indicator's jumps are ignored.
    pub fn derivative(&self, x: f64, j: u32) -> f64 {
        if j == 0 {
            return self.eval(x);
        }
        let (lo, hi) = self.support;
        if !(x > lo && x < hi) {
            return 0.0;
        }
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        match self.kind {
            WeightKind::Indicator => 0.0,
            WeightKind::EtaJ => {
                if self.order == 0 {
                    return 0.0;
                }
                let u = self.scale;
                let scale = u.powi(-(j as i32));
                if x - lo <= hi - x {
                    scale * irwin_hall(self.order, j, (x - lo) / u)
                } else {
                    sign * scale * irwin_hall(self.order, j, (hi - x) / u)
                }
            }
            WeightKind::Bump => {
                if x < self.plateau.0 {
                    let r = self.rise();
                    poly_derivative(&self.ramp, j, (x - lo) / r) * r.powi(-(j as i32))
                } else if x > self.plateau.1 {
                    let r = self.fall();
                    sign * poly_derivative(&self.ramp, j, (hi - x) / r) * r.powi(-(j as i32))
                } else {
                    0.0
                }
            }
        }
    }

    /// Points where some derivative may jump, ascending and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support;
        let mut pts = vec![lo, self.plateau.0, self.plateau.1, hi];
        for i in 1..self.box_order() {
            let off = f64::from(i) * self.scale;
            pts.push(lo + off);
            pts.push(hi - off);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Upper bound for `sup |w^(j)|`, from a dense scan of the edge profile
    /// with a 1% margin. Infinite where the derivative does not exist.
    pub fn derivative_bound(&self, j: u32) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let (profile_max, width) = match self.kind {
            WeightKind::Indicator => return f64::INFINITY,
            WeightKind::EtaJ => {
                let order = self.order;
                if j >= order {
                    return f64::INFINITY;
                }
                let n = 4000 * order as usize;
                let big = f64::from(order);
                let m = (0..=n)
                    .map(|i| irwin_hall(order, j, big * i as f64 / n as f64).abs())
                    .fold(0.0, f64::max);
                (m, self.scale)
            }
            WeightKind::Bump => {
                if j > self.order {
                    return f64::INFINITY;
                }
                let n = 4000;
                let m = (0..=n)
                    .map(|i| poly_derivative(&self.ramp, j, i as f64 / n as f64).abs())
                    .fold(0.0, f64::max);
                (m, self.scale)
            }
        };
        1.01 * profile_max * width.powi(-(j as i32))
    }

    /// `int w(x) e^{-i lambda x} dx` in closed form for box averages and
    /// indicators.
    ///
    /// The box average of order `J` is the indicator of
    /// `[support.0, support.1 - J V]` convolved with `J` uniform densities on
    /// `[0, V]`, so its transform factors into elementary pieces.
    pub fn fourier(&self, lambda: f64) -> Result<Complex64> {
        let j = self.box_order();
        if self.kind == WeightKind::Bump {
            return Err(Error::InvalidInput("no closed-form transform for bumps".into()));
        }
        let (lo, hi) = self.support;
        let v = self.scale;
        let top = hi - f64::from(j) * if j > 0 { v } else { 0.0 };
        if lambda == 0.0 {
            return Ok(Complex64::new(top - lo, 0.0));
        }
        let il = Complex64::new(0.0, lambda);
        let cis = |x: f64| Complex64::from_polar(1.0, -lambda * x);
        let mut out = (cis(lo) - cis(top)) / il;
        if j > 0 {
            let factor = (Complex64::new(1.0, 0.0) - cis(v)) / (il * v);
            out *= factor.powu(j);
        }
        Ok(out)
    }
}

/// The box-average weight of order `j`: unit on `[m, m + delta]`, zero
/// outside `[m - j u, m + delta + j u]`, `j - 1` times differentiable.
///
/// `j = 0` gives the indicator of `[m, m + delta]`.
pub fn build_eta_j(m: f64, delta: f64, u: f64, j: u32) -> Result<WeightFunction> {
    if j > MAX_AVERAGING_ORDER {
        return Err(Error::OrderTooLarge {
            order: u64::from(j),
            max: u64::from(MAX_AVERAGING_ORDER),
        });
    }
    if !(m.is_finite() && delta.is_finite() && u.is_finite()) {
        return Err(Error::NonFinite(m + delta + u));
    }
    let jf = f64::from(j);
    let lo = m - jf * u;
    let hi = m + delta + jf * u;
    if j > 0 && !(u > 0.0 && delta > 0.0 && u < (hi - lo) / (2.0 * jf)) {
        return Err(Error::AveragingWindowTooWide {
            u,
            limit: (hi - lo) / (2.0 * jf),
        });
    }
    if j == 0 && delta < 0.0 {
        return Err(Error::InvalidInput("negative interval length".into()));
    }
    Ok(WeightFunction {
        kind: WeightKind::EtaJ,
        support: (lo, hi),
        plateau: (m, m + delta),
        order: j,
        scale: if j == 0 { delta } else { u },
        ramp: Vec::new(),
    })
}

/// Dyadic partition of unity for `[m, m + delta]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// `(index, weight)` for indices `-depth..=depth`, ascending.
    pub pieces: Vec<(i32, WeightFunction)>,
    /// Region where the weights sum to one.
    pub covered: (f64, f64),
    /// Length left uncovered at each end of `[m, m + delta]`.
    pub tail: f64,
    /// Width of the outermost pieces.
    pub finest_width: f64,
}

impl Partition {
    pub fn sum_at(&self, x: f64) -> f64 {
        self.pieces.iter().map(|(_, w)| w.eval(x)).sum()
    }
}

/// Width of piece `l >= 0`: `2 delta / 5`, then `delta / 4` halving onwards.
fn piece_width(delta: f64, l: u32) -> f64 {
    if l == 0 {
        0.4 * delta
    } else {
        0.25 * delta * 0.5f64.powi(l as i32 - 1)
    }
}

/// Smallest depth whose outermost pieces are no wider than `limit`.
fn required_depth(delta: f64, limit: f64) -> u32 {
    let mut l = 0;
    while piece_width(delta, l) > limit && l < 200 {
        l += 1;
    }
    l
}

/// Partition `[m, m + delta]` into bumps `w_l`, `l = -depth..=depth`.
///
/// The central piece sits on `[m + 0.3 delta, m + 0.7 delta]`; pieces to the
/// right start at `m + 0.6 delta` and then each begins at 80% of the previous
/// one's width, halving in width, so consecutive pieces overlap in a ramp
/// where one is the complement of the other. Left pieces are mirror images.
/// The outermost width must not exceed `m^{2/5 + epsilon}`.
pub fn build_partition(m: f64, delta: f64, depth: u32, epsilon: f64) -> Result<Partition> {
    build_partition_with(m, delta, depth, epsilon, DEFAULT_BUMP_ORDER)
}

pub fn build_partition_with(m: f64, delta: f64, depth: u32, epsilon: f64, p: u32) -> Result<Partition> {
    if !(m > 1.0 && delta > 0.0 && m.is_finite() && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need m > 1 and delta > 0, got {m}, {delta}"
        )));
    }
    if delta > m.powf(0.625) * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("delta {delta} exceeds m^(5/8)")));
    }
    let limit = m.powf(0.4 + epsilon);
    let required = required_depth(delta, limit);
    if depth < required {
        return Err(Error::PartitionTooShallow {
            given: depth as usize,
            required: required as usize,
        });
    }
    if depth > 60 {
        return Err(Error::InvalidInput(format!("depth {depth} exceeds 60")));
    }
    // Left ends of pieces 0..=depth+1 (the last one only marks a ramp start).
    let mut starts = vec![m + 0.3 * delta, m + 0.6 * delta];
    for l in 1..=depth {
        let prev = starts[l as usize];
        starts.push(prev + 0.8 * piece_width(delta, l));
    }
    let centre = m + 0.5 * delta;
    let mut right = Vec::with_capacity(depth as usize + 1);
    let mut rise = 0.1 * delta;
    for l in 0..=depth {
        let a = starts[l as usize];
        let b = a + piece_width(delta, l);
        let fall = b - starts[l as usize + 1];
        right.push(WeightFunction::bump((a, b), rise, fall, p)?);
        rise = fall;
    }
    let mut pieces: Vec<(i32, WeightFunction)> = right
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .map(|(l, w)| (-(l as i32), w.mirrored(centre)))
        .collect();
    pieces.extend(right.into_iter().enumerate().map(|(l, w)| (l as i32, w)));
    let edge = starts[depth as usize + 1];
    Ok(Partition {
        pieces,
        covered: (2.0 * centre - edge, edge),
        tail: m + delta - edge,
        finest_width: piece_width(delta, depth),
    })
}
