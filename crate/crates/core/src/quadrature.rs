//! One-dimensional quadrature for piecewise smooth integrands.

use alloc::vec::Vec;

use crate::math::abs;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    // Start from a few panels so narrow features are not missed.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let fl = f(lo);
        let fh = f(hi);
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        let whole = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh);
        total += refine(f, lo, hi, fl, fm, fh, whole, tol / PANELS as f64, MAX_DEPTH);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || abs(delta) <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrate over `[lo, hi]` split at every point of `breaks` inside it.
///
/// Each piece gets tolerance `tol`; integrands should be smooth between
/// breaks.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    cuts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol)).sum()
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Eight-point Gauss-Legendre on each of `panels` equal panels of `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    gauss_legendre_nodes(a, b, panels).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// `(node, weight)` pairs of [`gauss_legendre`].
pub fn gauss_legendre_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(16 * panels);
    if !(b > a) || panels == 0 {
        return out;
    }
    let h = (b - a) / panels as f64;
    let r = 0.5 * h;
    for i in 0..panels {
        let c = a + (i as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            out.push((c - r * x, r * w));
            out.push((c + r * x, r * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simpson_polynomials_and_exp() {
        assert!((adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12) - 4.0).abs() < 1e-12);
        let e = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 30.0, 1e-12);
        assert!((e - (1.0 - (-30.0f64).exp())).abs() < 1e-11);
        assert_eq!(adaptive_simpson(&|_| 1.0, 1.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn pieces_handle_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.5 * 0.3 * 0.3 + 0.5 * 0.7 * 0.7;
        assert!((integrate_pieces(&f, 0.0, 1.0, &[0.3, 7.0], 1e-13) - exact).abs() < 1e-13);
        let step = |x: f64| if x < 0.25 { 1.0 } else { 3.0 };
        assert!((integrate_pieces(&step, 0.0, 1.0, &[0.25], 1e-13) - 2.5).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exact_for_degree_15() {
        let v = gauss_legendre(|x| x.powi(15) + x.powi(4), -1.0, 2.0, 1);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn simpson_matches_closed_form_gaussian_bump(m in -1.0f64..1.0, s in 0.05f64..2.0) {
            let f = |x: f64| (-(x - m) * (x - m) / (2.0 * s * s)).exp();
            let exact = s * (2.0 * core::f64::consts::PI).sqrt();
            let v = adaptive_simpson(&f, m - 40.0 * s, m + 40.0 * s, 1e-12);
            prop_assert!((v - exact).abs() < 1e-10);
        }
    }
}
