//! Deterministic compensated summation.
//!
//! Sums are split into fixed chunks of [`CHUNK`] terms. Each chunk is reduced
//! with Neumaier compensation and the chunk totals are combined left to right,
//! again compensated. Because chunk boundaries depend only on the term index,
//! the result is bit-identical whatever the rayon pool size.

use num_complex::Complex64;
use rayon::prelude::*;

pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAccumulator {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexAccumulator {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sum `term(i)` for `i in 0..len` with the chunked discipline above.
pub fn chunked_sum<F>(len: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexAccumulator::default();
            let end = ((c + 1) * CHUNK).min(len);
            for i in c * CHUNK..end {
                acc.add(term(i));
            }
            acc.value()
        })
        .collect();
    let mut total = ComplexAccumulator::default();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// Ordered compensated sum of an already materialised slice.
pub fn ordered_sum(values: &[Complex64]) -> Complex64 {
    let mut acc = ComplexAccumulator::default();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}
