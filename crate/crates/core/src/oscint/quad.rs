//! Adaptive Gauss–Kronrod (7, 15) quadrature for complex oscillatory integrands.
//!
//! The interval is first cut at the caller's breakpoints and then into
//! panels spanning at most `cycles_per_panel` periods of the largest local
//! frequency, so every period sees at least 15 / `cycles_per_panel` nodes.
//! Panels are then bisected worst-first until the error target is met.

// The node tables keep the published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::summation::ComplexAccumulator;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub cycles_per_panel: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_evals: 1_000_000,
            cycles_per_panel: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    /// Integral of `|f|` as seen by the Kronrod rule.
    pub l1: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    l1: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, l1: f64, asc: f64) -> f64 {
    let mut e = err;
    if asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / asc).powf(1.5);
        e = if scale < 1.0 { asc * scale } else { asc };
    }
    if l1 > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * l1);
    }
    e
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    let mut vals = [(Complex64::default(), Complex64::default()); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        vals[j] = (f1, f2);
        kron += (f1 + f2) * WGK[j];
        l1 += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for j in 0..7 {
        asc += ((vals[j].0 - mean).norm() + (vals[j].1 - mean).norm()) * WGK[j];
    }
    let ah = h.abs();
    let err = ((kron - gauss) * h).norm();
    let l1 = l1 * ah;
    Panel {
        a,
        b,
        value: kron * h,
        error: rescale_error(err, l1, asc * ah),
        l1,
    }
}

/// Integrate `f` over `[breaks[0], breaks[last]]`.
///
/// `breaks` must be ascending; interior entries mark points where `f` is not
/// smooth. `max_freq` bounds the local oscillation frequency in cycles per
/// unit length (0 for non-oscillatory integrands).
pub fn integrate<F>(f: F, breaks: &[f64], max_freq: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> Complex64,
{
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        let cycles = (hi - lo) * max_freq.abs() / opts.cycles_per_panel;
        let n = if cycles.is_finite() {
            cycles.ceil().max(1.0) as usize
        } else {
            1
        };
        let width = (hi - lo) / n as f64;
        for i in 0..n {
            let a = lo + width * i as f64;
            let b = if i + 1 == n { hi } else { lo + width * (i + 1) as f64 };
            heap.push(gk15(&f, a, b));
            evaluations += 15;
        }
    }
    if heap.is_empty() {
        return QuadResult {
            value: Complex64::default(),
            error: 0.0,
            l1: 0.0,
            evaluations: 0,
            converged: true,
        };
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        let mut acc = ComplexAccumulator::default();
        let (mut err, mut l1) = (0.0, 0.0);
        for p in heap.iter() {
            acc.add(p.value);
            err += p.error;
            l1 += p.l1;
        }
        (acc.value(), err, l1)
    };

    let (mut value, mut error, mut l1) = totals(&heap);
    let target = |v: Complex64, l1: f64| {
        (opts.abs_tol)
            .max(opts.rel_tol * v.norm())
            .max(100.0 * f64::EPSILON * l1)
    };
    let mut iterations = 0usize;
    while error > target(value, l1) && evaluations + 30 <= opts.max_evals {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        evaluations += 30;
        error += left.error + right.error - worst.error;
        value += left.value + right.value - worst.value;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
        iterations += 1;
        // Refresh running totals now and then to shed drift.
        if iterations.is_multiple_of(64) {
            (value, error, l1) = totals(&heap);
        }
    }

    // Final value summed in panel order.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut acc = ComplexAccumulator::default();
    let (mut err, mut l1) = (0.0, 0.0);
    for p in &panels {
        acc.add(p.value);
        err += p.error;
        l1 += p.l1;
    }
    let value = acc.value();
    QuadResult {
        value,
        error: err,
        l1,
        evaluations,
        converged: err <= target(value, l1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn real<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> Complex64 {
        move |x| Complex64::new(f(x), 0.0)
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(real(|x| x * x * x - 2.0 * x), &[0.0, 3.0], 0.0, &QuadOptions::default());
        assert!((r.value.re - (81.0 / 4.0 - 9.0)).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn full_periods_vanish() {
        let f = |x: f64| Complex64::from_polar(1.0, 2.0 * PI * 7.0 * x);
        let r = integrate(f, &[0.0, 1.0], 7.0, &QuadOptions::default());
        assert!(r.value.norm() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let r = integrate(real(|x: f64| x.sqrt()), &[0.0, 1.0], 0.0, &QuadOptions::default());
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let opts = QuadOptions {
            max_evals: 45,
            ..QuadOptions::default()
        };
        let r = integrate(real(|x: f64| (1.0 / x).sin()), &[1e-6, 1.0], 0.0, &opts);
        assert!(!r.converged);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let r = integrate(real(|x: f64| x.abs()), &[-1.0, 0.0, 2.0], 0.0, &QuadOptions::default());
        assert!((r.value.re - 2.5).abs() < 1e-14);
        assert_eq!(r.evaluations, 30);
    }
}
