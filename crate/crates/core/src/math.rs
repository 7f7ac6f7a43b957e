//! Float helpers that `core` does not provide.

pub(crate) use libm::{ceil, cos, erfc, exp, expm1, fabs as abs, floor, lgamma, log, log1p, pow, round, sqrt};

pub(crate) const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// `inf { x in (lo, hi] : pred(x) }` for a predicate that is false at `lo`
/// and true at `hi` and switches once in between.
///
/// Stops once the bracket is a few ulps wide. If a point of `snap` falls in
/// the final bracket the smallest such point is returned, so jumps located at
/// atoms are reported exactly.
pub(crate) fn bisect<P: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, snap: &[f64], mut pred: P) -> f64 {
    for _ in 0..200 {
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * (1.0 + abs(lo).max(abs(hi))) {
            break;
        }
        let mid = lo + 0.5 * width;
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // `snap` is sorted.
    let start = snap.partition_point(|&s| s <= lo);
    match snap.get(start) {
        Some(&s) if s <= hi => s,
        _ => hi,
    }
}

/// Maximise a unimodal continuous function on `[lo, hi]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + abs(lo).max(abs(hi))) {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
