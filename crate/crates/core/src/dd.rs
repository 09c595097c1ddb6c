//! Minimal double-double arithmetic.
//!
//! A [`Dd`] holds an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits of significand. Only the handful of operations
//! needed for phase reduction are provided: the products `n * eta` and
//! quotients `1 / (k^2 eta)` that feed `e(x)` must survive reduction mod 1
//! after the integer part has grown to 10^8 or more.

use std::ops::{Add, Mul, Neg, Sub};

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for |x| < 2^106, which covers every `i128` we feed it in practice.
    pub fn from_i128(x: i128) -> Self {
        let hi = x as f64;
        let rest = x - hi as i128;
        Dd::new(hi, rest as f64)
    }

    /// `num / den` correctly rounded to double-double precision.
    pub fn ratio(num: i128, den: i128) -> Self {
        Dd::from_i128(num) / Dd::from_i128(den)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact ordering of two normalised values; NaN compares equal.
    pub fn cmp_value(self, other: Self) -> std::cmp::Ordering {
        let by = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal);
        by(self.hi, other.hi).then(by(self.lo, other.lo))
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        Dd::new(p, e)
    }

    pub fn recip(self) -> Self {
        Dd::from_f64(1.0) / self
    }

    /// Representative of `self mod 1` in `[-1/2, 1/2]`.
    pub fn frac_centered(self) -> Self {
        let n = self.hi.round();
        // hi - n is exact: both lie within a factor of two or n is 0.
        let r = Dd::new(self.hi - n, self.lo);
        let m = r.hi.round();
        if m != 0.0 {
            Dd::new(r.hi - m, r.lo)
        } else {
            r
        }
    }

    /// Representative of `self mod 1` in `[0, 1)`.
    pub fn frac_unit(self) -> Self {
        let mut r = self.frac_centered();
        if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
            r = r + Dd::from_f64(1.0);
        }
        if r.hi >= 1.0 {
            r = r - Dd::from_f64(1.0);
        }
        r
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        Dd::new(p, e)
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::new(q1, q2) + Dd::from_f64(q3)
    }
}
