//! Concave increasing costs `phi(|x - y|)` and their convex payoffs.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, cos, exp, expm1, pow};
use crate::measures::Distribution1D;

/// One term `weight * (knot - d)^+` of a band payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub weight: f64,
    pub knot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConcaveCost {
    /// `d^p`, `0 < p < 1`.
    Power { p: f64 },
    /// `min(d, c)`.
    Capped { c: f64 },
    /// `1 - e^{-d}`.
    BoundedExp,
    /// `sum weight * min(d, knot)`, whose payoff is `sum weight * (knot - d)^+`.
    Bands(Vec<Band>),
}

/// Result of [`ConcaveCost::band_approximation`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandApproximation {
    pub bands: Vec<Band>,
    /// Largest gap to the target payoff on a 10^4-point grid of `[0, d_max]`.
    pub sup_error: f64,
}

impl BandApproximation {
    pub fn payoff(&self, d: f64) -> f64 {
        band_sum(&self.bands, d)
    }
}

fn band_sum(bands: &[Band], d: f64) -> f64 {
    bands.iter().map(|b| b.weight * (b.knot - d).max(0.0)).sum()
}

impl ConcaveCost {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ConcaveCost::Power { p } => *p > 0.0 && *p < 1.0,
            ConcaveCost::Capped { c } => *c > 0.0 && c.is_finite(),
            ConcaveCost::BoundedExp => true,
            ConcaveCost::Bands(bands) => {
                !bands.is_empty() && bands.iter().all(|b| b.weight > 0.0 && b.knot > 0.0 && b.weight.is_finite() && b.knot.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid cost {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConcaveCost::Power { .. } => "power",
            ConcaveCost::Capped { .. } => "capped",
            ConcaveCost::BoundedExp => "bounded_exp",
            ConcaveCost::Bands(_) => "bands",
        }
    }

    pub fn evaluate(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Domain(format!("distance {d} must be >= 0")));
        }
        Ok(self.eval(d))
    }

    /// `evaluate` without the sign check; `d` is taken as `|d|`.
    pub fn eval(&self, d: f64) -> f64 {
        let d = abs(d);
        match self {
            ConcaveCost::Power { p } => {
                if d == 0.0 {
                    0.0
                } else {
                    pow(d, *p)
                }
            }
            ConcaveCost::Capped { c } => d.min(*c),
            ConcaveCost::BoundedExp => -expm1(-d),
            ConcaveCost::Bands(bands) => bands.iter().map(|b| b.weight * d.min(b.knot)).sum(),
        }
    }

    /// `sup phi`, or `None` for unbounded costs.
    pub fn bound(&self) -> Option<f64> {
        match self {
            ConcaveCost::Power { .. } => None,
            ConcaveCost::Capped { c } => Some(*c),
            ConcaveCost::BoundedExp => Some(1.0),
            ConcaveCost::Bands(bands) => Some(bands.iter().map(|b| b.weight * b.knot).sum()),
        }
    }

    /// Dual payoff `bound - phi(d)`, convex and nonincreasing.
    pub fn payoff(&self, d: f64) -> Result<f64> {
        let b = self.bound().ok_or_else(|| Error::UnboundedCost(format!("{} has no finite bound", self.name())))?;
        Ok(b - self.evaluate(d)?)
    }

    /// Right derivative of `phi`.
    pub fn derivative(&self, d: f64) -> f64 {
        match self {
            ConcaveCost::Power { p } => {
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    p * pow(d, p - 1.0)
                }
            }
            ConcaveCost::Capped { c } => {
                if d < *c {
                    1.0
                } else {
                    0.0
                }
            }
            ConcaveCost::BoundedExp => exp(-d),
            ConcaveCost::Bands(bands) => bands.iter().filter(|b| d < b.knot).map(|b| b.weight).sum(),
        }
    }

    /// Lower approximation of the payoff `phi(d_max) - phi(min(d, d_max))`
    /// by at most `n` bands.
    ///
    /// The approximation is the upper envelope of zero and the tangents of
    /// the payoff at `t_k = d_max (1 - cos(k pi / n)) / 2`, `k < n`. These
    /// points are nested under doubling, so the error never grows with `n`.
    pub fn band_approximation(&self, n: usize, d_max: f64) -> Result<BandApproximation> {
        if !(d_max > 0.0) || n == 0 {
            return Err(Error::Domain(format!("need n >= 1 and d_max > 0, got {n} and {d_max}")));
        }
        if !d_max.is_finite() {
            return Err(Error::UnboundedCost("band approximation needs a finite d_max".into()));
        }
        let top = self.eval(d_max);
        let target = |d: f64| top - self.eval(d.min(d_max));
        // Lines y = value + slope * (d - t); slope is the payoff derivative.
        let mut lines: Vec<(f64, f64)> = Vec::with_capacity(n + 1);
        for k in 0..n {
            let t = 0.5 * d_max * (1.0 - cos(k as f64 * core::f64::consts::PI / n as f64));
            let slope = -self.derivative(t);
            if slope.is_finite() {
                lines.push((slope, target(t) - slope * t));
            }
        }
        lines.push((0.0, 0.0));
        let bands = envelope_bands(lines);
        let sup_error = (0..=10_000)
            .map(|i| {
                let d = d_max * i as f64 / 10_000.0;
                abs(target(d) - band_sum(&bands, d))
            })
            .fold(0.0, f64::max);
        Ok(BandApproximation { bands, sup_error })
    }

    /// Numeric proxy for `E[phi(|X|)]` on the truncated support of `law`.
    pub fn moment_proxy(&self, law: &Distribution1D) -> Result<f64> {
        let atoms: f64 = law.atoms().iter().map(|a| a.p * self.eval(a.x)).sum();
        let dens = match law.density() {
            None => 0.0,
            Some(_) => {
                let (lo, hi) = law.effective_support(crate::measures::TAIL_CUT);
                let mut breaks = law.breakpoints();
                breaks.push(0.0);
                crate::quadrature::integrate_pieces(&|x| self.eval(x) * law.pdf(x), lo, hi, &breaks, 1e-10)
            }
        };
        let v = atoms + dens;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::UnboundedCost(format!("E[{}(|X|)] is not finite", self.name())))
        }
    }
}

/// Upper envelope of lines `(slope, intercept)` as bands. Slopes are <= 0.
fn envelope_bands(mut lines: Vec<(f64, f64)>) -> Vec<Band> {
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    lines.dedup_by(|b, a| a.0 == b.0);
    // For d >= 0 the envelope starts on the line that is highest at 0 and
    // then moves to larger slopes.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for line in lines {
        while let Some(&last) = hull.last() {
            if last.1 <= line.1 {
                // Dominated on d >= 0.
                hull.pop();
                continue;
            }
            if hull.len() >= 2 {
                let prev = hull[hull.len() - 2];
                if crossing(prev, line) <= crossing(prev, last) {
                    hull.pop();
                    continue;
                }
            }
            break;
        }
        hull.push(line);
    }
    // Each change of slope at a crossing is one band; the final line is 0.
    let mut bands = Vec::new();
    for w in hull.windows(2) {
        let weight = w[1].0 - w[0].0;
        let knot = crossing(w[0], w[1]);
        if weight > 0.0 && knot > 0.0 {
            bands.push(Band { weight, knot });
        }
    }
    bands
}

fn crossing(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (a.0 - b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(ConcaveCost::Power { p: 0.5 }.evaluate(4.0).unwrap(), 2.0);
        assert_eq!(ConcaveCost::Capped { c: 1.0 }.evaluate(3.0).unwrap(), 1.0);
        let one = ConcaveCost::Bands(vec![Band { weight: 1.0, knot: 1.0 }]);
        assert_eq!(one.payoff(0.25).unwrap(), 0.75);
        assert!(matches!(ConcaveCost::BoundedExp.evaluate(-1.0), Err(Error::Domain(_))));
        assert!(matches!(ConcaveCost::Power { p: 0.5 }.payoff(1.0), Err(Error::UnboundedCost(_))));
        for c in [ConcaveCost::Power { p: 0.3 }, ConcaveCost::Capped { c: 2.0 }, ConcaveCost::BoundedExp, one] {
            assert_eq!(c.evaluate(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn capped_is_one_band() {
        let a = ConcaveCost::Capped { c: 1.0 }.band_approximation(1, 1.0).unwrap();
        assert_eq!(a.bands, vec![Band { weight: 1.0, knot: 1.0 }]);
        assert_eq!(a.sup_error, 0.0);
    }

    #[test]
    fn bounded_exp_64_bands() {
        let a = ConcaveCost::BoundedExp.band_approximation(64, 10.0).unwrap();
        assert!(a.bands.len() <= 64);
        // Independent check on a dense grid against the explicit dual.
        let worst = (0..=10_000)
            .map(|i| {
                let d = i as f64 * 1e-3;
                ((-d).exp() - (-10.0f64).exp() - a.payoff(d)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
        assert!((worst - a.sup_error).abs() < 1e-12);
    }

    #[test]
    fn approximation_error_nonincreasing() {
        for cost in [ConcaveCost::BoundedExp, ConcaveCost::Power { p: 0.5 }, ConcaveCost::Capped { c: 0.7 }] {
            let errs: Vec<f64> = [4, 8, 16, 32].iter().map(|&n| cost.band_approximation(n, 3.0).unwrap().sup_error).collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{cost:?}: {errs:?}");
        }
        assert!(ConcaveCost::BoundedExp.band_approximation(4, f64::INFINITY).is_err());
    }

    #[test]
    fn approximation_stays_below() {
        let a = ConcaveCost::Power { p: 0.5 }.band_approximation(16, 4.0).unwrap();
        for i in 0..=400 {
            let d = i as f64 * 0.01;
            assert!(a.payoff(d) <= 2.0 - d.sqrt() + 1e-12);
        }
    }

    #[test]
    fn moment_proxy_laplace() {
        let l = Distribution1D::laplace(0.0, 1.0).unwrap();
        // E|X|^{1/2} = Gamma(3/2) for a standard Laplace.
        let v = ConcaveCost::Power { p: 0.5 }.moment_proxy(&l).unwrap();
        assert!((v - 0.886_226_925_452_758).abs() < 1e-8);
    }

    fn costs() -> Vec<ConcaveCost> {
        vec![
            ConcaveCost::Power { p: 0.5 },
            ConcaveCost::Power { p: 0.1 },
            ConcaveCost::Capped { c: 0.4 },
            ConcaveCost::BoundedExp,
            ConcaveCost::Bands(vec![Band { weight: 0.5, knot: 0.2 }, Band { weight: 2.0, knot: 1.5 }]),
        ]
    }

    proptest! {
        #[test]
        fn concave_nondecreasing(idx in 0usize..5, d1 in 0.0f64..5.0, gap in 0.0f64..5.0) {
            let c = &costs()[idx];
            let d2 = d1 + gap;
            let (a, b) = (c.evaluate(d1).unwrap(), c.evaluate(d2).unwrap());
            prop_assert!(a <= b + 1e-15);
            prop_assert!(c.evaluate(0.5 * (d1 + d2)).unwrap() >= 0.5 * (a + b) - 1e-12);
        }

        #[test]
        fn band_payoff_convex_nonincreasing(d1 in 0.0f64..3.0, gap in 0.0f64..3.0) {
            let c = &costs()[4];
            let d2 = d1 + gap;
            let (a, b) = (c.payoff(d1).unwrap(), c.payoff(d2).unwrap());
            prop_assert!(b <= a + 1e-15);
            prop_assert!(c.payoff(0.5 * (d1 + d2)).unwrap() <= 0.5 * (a + b) + 1e-12);
        }
    }
}
