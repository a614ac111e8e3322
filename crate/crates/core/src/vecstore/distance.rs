//! Euclidean distance kernels.
//!
//! Vectors are stored as `f32`; every kernel accumulates in `f64`. All
//! comparisons inside the library use the squared distance, the square root
//! is only taken where an actual distance value is reported.

use std::cell::Cell;

use crate::error::{Error, Result};

thread_local! {
    static EVALUATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`l2_squared`] calls made on the current thread so far.
/// Single-worker runs can diff this to audit reported NDC.
pub fn distance_evaluations() -> u64 {
    EVALUATIONS.with(Cell::get)
}

/// Plain one-term-at-a-time squared distance. Reference for the unrolled kernel.
pub fn l2_squared_scalar(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = f64::from(*x) - f64::from(*y);
        acc += d * d;
    }
    acc as f32
}

/// Squared Euclidean distance, four independent accumulators so the loop
/// vectorizes. Slices must have equal length (checked in debug builds only).
#[inline]
pub fn l2_squared(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    EVALUATIONS.with(|c| c.set(c.get() + 1));
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for lane in 0..4 {
            let d = f64::from(x[lane]) - f64::from(y[lane]);
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = f64::from(*x) - f64::from(*y);
        tail += d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail) as f32
}

/// Euclidean distance with a dimension check.
pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(l2_squared(a, b).sqrt())
}
