//! Reference couplings that the AMR coupling is compared against.

use crate::coupling::{Component, CoupleSample, Decomposition};
use crate::error::{Error, Result};
use crate::measures::{Distribution1D, Law};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Common uniform: `Y = G^{-1}(U)`.
    Synchronous,
    Independent,
    /// Antithetic uniform `Y = G^{-1}(1 - U)`; symmetric laws only.
    Reflection,
    /// Maximal coupling with independent residuals.
    Basic,
}

/// Symmetry tolerance used when admitting the reflection coupling.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// One draw of the baseline coupling of `F` and `G` from two uniforms.
///
/// `Basic` needs `F >= G` with connected super-level sets, as for the AMR
/// coupling.
pub fn baseline_sample(kind: BaselineKind, f: &Distribution1D, g: &Distribution1D, u1: f64, u2: f64) -> Result<CoupleSample> {
    let s = match kind {
        BaselineKind::Synchronous => pair(f.sample(u1), g.sample(u1)),
        BaselineKind::Independent => pair(f.sample(u1), g.sample(u2)),
        BaselineKind::Reflection => {
            if f.symmetry_center(SYMMETRY_TOL).is_none() || g.symmetry_center(SYMMETRY_TOL).is_none() {
                return Err(Error::AsymmetricLaw);
            }
            pair(f.sample(u1), g.sample(1.0 - u1))
        }
        BaselineKind::Basic => basic_sample(&Decomposition::new(f, g)?, u1, u2),
    };
    Ok(s)
}

/// Basic coupling on a precomputed decomposition: coupled with probability
/// `1 - p`, otherwise independent draws from the two residuals.
pub fn basic_sample(dec: &Decomposition, u1: f64, u2: f64) -> CoupleSample {
    let p = dec.p();
    if u1 >= p {
        let x = dec.raw_inverse(Component::Common, (u1 - p).max(f64::MIN_POSITIVE), true);
        CoupleSample { x, y: x, coupled: true }
    } else {
        let x = dec.raw_inverse(Component::Left, u1, true);
        let y = dec.nu2().inverse_plus(u2.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
        pair(x, y)
    }
}

fn pair(x: f64, y: f64) -> CoupleSample {
    CoupleSample { x, y, coupled: x == y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{open01, stream};
    use crate::stats::{ks_one_sample, mean_se};

    fn draws(kind: BaselineKind, f: &Distribution1D, g: &Distribution1D, n: usize, seed: u64) -> Vec<CoupleSample> {
        let mut r = stream(seed, 0, 0);
        (0..n).map(|_| baseline_sample(kind, f, g, open01(&mut r), open01(&mut r)).unwrap()).collect()
    }

    #[test]
    fn synchronous_keeps_distance() {
        let f = Distribution1D::laplace(0.0, 1.0).unwrap();
        let g = f.shift(0.7);
        for s in draws(BaselineKind::Synchronous, &f, &g, 1000, 1) {
            assert!(((s.y - s.x) - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn independent_uniform_band() {
        let u = Distribution1D::uniform(0.0, 1.0).unwrap();
        let pay: Vec<f64> =
            draws(BaselineKind::Independent, &u, &u, 100_000, 2).iter().map(|s| (1.0 - (s.x - s.y).abs()).max(0.0)).collect();
        let (m, se) = mean_se(&pay);
        assert!((m - 2.0 / 3.0).abs() < 3.0 * se);
    }

    #[test]
    fn basic_with_equal_laws_always_couples() {
        let f = Distribution1D::laplace(0.0, 1.0).unwrap();
        assert!(draws(BaselineKind::Basic, &f, &f, 500, 3).iter().all(|s| s.coupled && s.x == s.y));
    }

    #[test]
    fn reflection_rejects_asymmetric() {
        let e = Distribution1D::exponential(1.0).unwrap();
        assert_eq!(baseline_sample(BaselineKind::Reflection, &e, &e.shift(1.0), 0.3, 0.5), Err(Error::AsymmetricLaw));
        let l = Distribution1D::laplace(0.0, 1.0).unwrap();
        let s = baseline_sample(BaselineKind::Reflection, &l, &l.shift(1.0), 0.3, 0.5).unwrap();
        assert!((s.x + s.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn marginals_for_every_kind() {
        let f = Distribution1D::laplace(0.0, 1.0).unwrap();
        let g = f.shift(1.0);
        for kind in [BaselineKind::Synchronous, BaselineKind::Independent, BaselineKind::Reflection, BaselineKind::Basic] {
            let s = draws(kind, &f, &g, 100_000, 4);
            let xs: Vec<f64> = s.iter().map(|s| s.x).collect();
            let ys: Vec<f64> = s.iter().map(|s| s.y).collect();
            let kx = ks_one_sample(&xs, |x| f.cdf(x), |x| f.cdf_left(x));
            let ky = ks_one_sample(&ys, |x| g.cdf(x), |x| g.cdf_left(x));
            assert!(kx.statistic < 0.01 && ky.statistic < 0.01, "{kind:?}: {kx:?} {ky:?}");
        }
    }
}
