//! Step-by-step AMR coupling of two random walks with the same unimodal
//! jump law, and the value functions it optimises.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::costs::ConcaveCost;
use crate::coupling::{band_payoff, shift_mode, Component, CoupleSample, Decomposition};
use crate::error::{Error, Result};
use crate::math::{abs, pow, sqrt};
use crate::measures::{Distribution1D, TAIL_CUT};
use crate::quadrature::gauss_legendre_nodes;
use crate::rng::open01;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub jump_law: Distribution1D,
    pub x0: f64,
    pub y0: f64,
    pub steps: usize,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::Domain("chain start points must be finite".into()));
        }
        admissible(&self.jump_law)
    }
}

/// Jump laws for which the shift coupling is defined: unimodal at 0 in the
/// density sense, or a lattice law whose mass function peaks at 0.
pub fn admissible(law: &Distribution1D) -> Result<()> {
    let report = law.check_unimodal(crate::coupling::LEVEL_TOL);
    if report.is_unimodal_at_zero || law.is_lattice_unimodal_at_zero() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "jump law is not unimodal at 0 (density breach {:.3e}, atom off 0: {})",
            report.max_violation, report.atom_violation
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub coalesced_at: Option<usize>,
}

/// AMR coupling of `law + lo` with `law + hi` for varying separations.
///
/// Decompositions of purely atomic laws are cached by the exact bit
/// pattern of the separation. Density laws take the fast shift path, which
/// is cheap enough to recompute.
#[derive(Debug, Clone)]
pub struct ShiftCoupler {
    law: Distribution1D,
    mode: Option<f64>,
    cache: BTreeMap<u64, Decomposition>,
}

impl ShiftCoupler {
    pub fn new(law: Distribution1D) -> Self {
        let mode = shift_mode(&law);
        ShiftCoupler { law, mode, cache: BTreeMap::new() }
    }

    pub fn law(&self) -> &Distribution1D {
        &self.law
    }

    /// Decomposition of `law` against `law(. - a)`, `a >= 0`.
    pub fn decomposition(&mut self, a: f64) -> Result<Decomposition> {
        if let Some(m) = self.mode {
            if a >= 0.0 {
                return Ok(Decomposition::of_shift_unimodal(&self.law, m, a));
            }
        }
        if !self.law.is_atomic() {
            return Decomposition::of_shift(&self.law, a);
        }
        let key = a.to_bits();
        if let Some(d) = self.cache.get(&key) {
            return Ok(d.clone());
        }
        let d = Decomposition::of_shift(&self.law, a)?;
        self.cache.insert(key, d.clone());
        Ok(d)
    }

    /// Jumps `(dx, dy)` for walkers at `x` and `y` driven by one uniform.
    ///
    /// The lower walker takes the `F` role. Equal positions receive equal
    /// jumps.
    pub fn step(&mut self, x: f64, y: f64, u: f64) -> Result<(f64, f64)> {
        let (dx, dy, _) = self.advance(y - x, u)?;
        Ok((dx, dy))
    }

    /// One step from gap `y - x`: returns `(dx, dy, new gap)`. The new gap
    /// is exactly zero on the coupled branch.
    pub fn advance(&mut self, gap: f64, u: f64) -> Result<(f64, f64, f64)> {
        self.advance_by(gap, u, |d| d.sample(u))
    }

    /// As [`ShiftCoupler::advance`] with the basic coupling: residuals drawn
    /// independently from `u1` and `u2`.
    pub fn advance_basic(&mut self, gap: f64, u1: f64, u2: f64) -> Result<(f64, f64, f64)> {
        self.advance_by(gap, u1, |d| crate::baselines::basic_sample(d, u1, u2))
    }

    fn advance_by(&mut self, gap: f64, u: f64, draw: impl FnOnce(&Decomposition) -> CoupleSample) -> Result<(f64, f64, f64)> {
        if gap == 0.0 {
            let j = self.law.sample(u);
            return Ok((j, j, 0.0));
        }
        let a = abs(gap);
        let s = if self.mode.is_none() && self.law.is_atomic() {
            let key = a.to_bits();
            if !self.cache.contains_key(&key) {
                let d = Decomposition::of_shift(&self.law, a)?;
                self.cache.insert(key, d);
            }
            draw(&self.cache[&key])
        } else {
            draw(&self.decomposition(a)?)
        };
        // The lower walker jumps by s.x and the upper one lands at lower + s.y.
        let (d_lo, d_hi, spread) = if s.coupled { (s.x, s.x - a, 0.0) } else { (s.x, s.y - a, s.y - s.x) };
        Ok(if gap > 0.0 { (d_lo, d_hi, spread) } else { (d_hi, d_lo, -spread) })
    }
}

pub fn simulate_amr_chain<R: RngCore + ?Sized>(spec: &ChainSpec, rng: &mut R) -> Result<ChainPath> {
    spec.validate()?;
    let mut coupler = ShiftCoupler::new(spec.jump_law.clone());
    simulate_with(&mut coupler, spec, rng)
}

/// As [`simulate_amr_chain`] with a reusable coupler.
pub fn simulate_with<R: RngCore + ?Sized>(coupler: &mut ShiftCoupler, spec: &ChainSpec, rng: &mut R) -> Result<ChainPath> {
    let mut xs = Vec::with_capacity(spec.steps + 1);
    let mut ys = Vec::with_capacity(spec.steps + 1);
    let (mut x, mut y) = (spec.x0, spec.y0);
    let mut gap = y - x;
    xs.push(x);
    ys.push(y);
    let mut coalesced_at = (gap == 0.0).then_some(0);
    for k in 1..=spec.steps {
        let (dx, dy, g) = coupler.advance(gap, open01(rng))?;
        x += dx;
        y = if g == 0.0 { x } else { y + dy };
        gap = g;
        if coalesced_at.is_none() && gap == 0.0 {
            coalesced_at = Some(k);
        }
        xs.push(x);
        ys.push(y);
    }
    Ok(ChainPath { xs, ys, coalesced_at })
}

/// `psi(a, c) = sup E[(c - |X - Y|)^+]` over couplings of `F` and `F(. - a)`.
pub fn psi(f: &Distribution1D, a: f64, c: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("separation {a} must be >= 0")));
    }
    band_payoff(f, &f.shift(a), c)
}

/// Terminal payoff used for chain values: `bound - phi` for bounded costs
/// and `-phi` otherwise. Both are convex and nonincreasing.
pub fn terminal_payoff(cost: &ConcaveCost) -> impl Fn(f64) -> f64 + '_ {
    let bound = cost.bound().unwrap_or(0.0);
    move |d| bound - cost.eval(d)
}

/// Optimal `n`-step expected payoff from separation `a`.
pub fn psi_n(f: &Distribution1D, a: f64, cost: &ConcaveCost, n: usize) -> Result<f64> {
    chain_value(f, a, n, terminal_payoff(cost))
}

/// Expected `terminal(|X_n - Y_n|)` under the step-wise AMR coupling from
/// separation `a`. Exact for atomic laws, value iteration otherwise.
pub fn chain_value<T: Fn(f64) -> f64>(f: &Distribution1D, a: f64, n: usize, terminal: T) -> Result<f64> {
    Ok(chain_values(f, a, n, terminal)?[n])
}

/// [`chain_value`] for every horizon `0..=n_max`.
pub fn chain_values<T: Fn(f64) -> f64>(f: &Distribution1D, a: f64, n_max: usize, terminal: T) -> Result<Vec<f64>> {
    admissible(f)?;
    let a = abs(a);
    if f.is_atomic() {
        let mut coupler = ShiftCoupler::new(f.clone());
        let mut memo = BTreeMap::new();
        return (0..=n_max).map(|n| atomic_value(&mut coupler, a, n, &terminal, &mut memo)).collect();
    }
    let grid = DifferenceGrid::build(f, a, n_max)?;
    Ok(grid.value_sequence(n_max, &terminal).iter().map(|v| v.eval(a)).collect())
}

fn atomic_value<T: Fn(f64) -> f64>(
    coupler: &mut ShiftCoupler,
    a: f64,
    n: usize,
    terminal: &T,
    memo: &mut BTreeMap<(u64, usize), f64>,
) -> Result<f64> {
    if n == 0 || a == 0.0 {
        return Ok(terminal(a));
    }
    if let Some(v) = memo.get(&(a.to_bits(), n)) {
        return Ok(*v);
    }
    let joint = coupler.decomposition(a)?.joint_atomic()?;
    let mut v = 0.0;
    for (x, y, m) in joint {
        v += m * atomic_value(coupler, abs(y - x), n - 1, terminal, memo)?;
    }
    memo.insert((a.to_bits(), n), v);
    Ok(v)
}

/// Separation grid with one-step AMR transition nodes for value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceGrid {
    points: Vec<f64>,
    /// Per grid point: coupled mass and `(weight, next separation)` nodes of
    /// the uncoupled branch.
    steps: Vec<(f64, Vec<(f64, f64)>)>,
}

/// Grid values of a value function.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridValues {
    /// Linear interpolation, constant beyond the last point.
    pub fn eval(&self, d: f64) -> f64 {
        interpolate(&self.points, &self.values, d)
    }
}

fn interpolate(points: &[f64], values: &[f64], d: f64) -> f64 {
    let n = points.len();
    if d <= points[0] {
        return values[0];
    }
    if d >= points[n - 1] {
        return values[n - 1];
    }
    let i = points.partition_point(|&p| p <= d) - 1;
    let t = (d - points[i]) / (points[i + 1] - points[i]);
    values[i] + t * (values[i + 1] - values[i])
}

const GRID_HALF: usize = 256;
const PANELS: usize = 4;

impl DifferenceGrid {
    /// Grid on `[0, a_max]`, `a_max = a + sqrt(n) * spread`; 256 linear plus
    /// 256 geometric points, and `a` itself.
    pub fn build(f: &Distribution1D, a: f64, n: usize) -> Result<Self> {
        let (lo, hi) = f.effective_support(TAIL_CUT.max(1e-10));
        let a_max = (a + sqrt(n.max(1) as f64) * (hi - lo)).max(1e-9);
        let mut points: Vec<f64> = (0..GRID_HALF).map(|i| a_max * i as f64 / (GRID_HALF - 1) as f64).collect();
        let ratio = pow(1e6, 1.0 / (GRID_HALF - 1) as f64);
        let mut g = a_max * 1e-6;
        for _ in 0..GRID_HALF {
            points.push(g.min(a_max));
            g *= ratio;
        }
        points.push(a);
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut coupler = ShiftCoupler::new(f.clone());
        let mut steps = Vec::with_capacity(points.len());
        for &d in &points {
            steps.push(transition_nodes(&mut coupler, d)?);
        }
        Ok(DifferenceGrid { points, steps })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `psi_0 = terminal`, `psi_k(d) = E[psi_{k-1}(next separation)]`.
    /// The first backward step evaluates `terminal` exactly.
    pub fn value_iteration<T: Fn(f64) -> f64>(&self, n: usize, terminal: &T) -> GridValues {
        self.value_sequence(n, terminal).pop().expect("sequence has n + 1 entries")
    }

    /// Value functions `psi_0, ..., psi_n`.
    pub fn value_sequence<T: Fn(f64) -> f64>(&self, n: usize, terminal: &T) -> Vec<GridValues> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(GridValues { points: self.points.clone(), values: self.points.iter().map(|&d| terminal(d)).collect() });
        for k in 1..=n {
            let prev = &out[k - 1].values;
            let phi = |d: f64| if k == 1 { terminal(d) } else { interpolate(&self.points, prev, d) };
            let values = self
                .steps
                .iter()
                .zip(&self.points)
                .map(
                    |((coupled, nodes), &d)| {
                        if d == 0.0 {
                            terminal(0.0)
                        } else {
                            coupled * phi(0.0) + nodes.iter().map(|(w, d)| w * phi(*d)).sum::<f64>()
                        }
                    },
                )
                .collect();
            out.push(GridValues { points: self.points.clone(), values });
        }
        out
    }
}

/// Coupled mass and quadrature nodes of the uncoupled branch for the AMR
/// step from separation `a`.
fn transition_nodes(coupler: &mut ShiftCoupler, a: f64) -> Result<(f64, Vec<(f64, f64)>)> {
    if a == 0.0 {
        return Ok((1.0, Vec::new()));
    }
    let dec = coupler.decomposition(a)?;
    let p = dec.p();
    // The separation u -> R2^{-1}(p - u) - R1^{-1}(u) is smooth between
    // the levels where either inverse sits on an atom.
    let mut cuts = alloc::vec![0.0, p];
    for atom in dec.f().atoms() {
        cuts.push(dec.raw_cdf(Component::Left, atom.x, true));
        cuts.push(dec.raw_cdf(Component::Left, atom.x, false));
    }
    for atom in dec.g().atoms() {
        cuts.push(p - dec.raw_cdf(Component::Right, atom.x, true));
        cuts.push(p - dec.raw_cdf(Component::Right, atom.x, false));
    }
    cuts.retain(|c| *c >= 0.0 && *c <= p);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        for (u, wt) in gauss_legendre_nodes(w[0], w[1], PANELS) {
            let x = dec.raw_inverse(Component::Left, u, true);
            let y = dec.raw_inverse(Component::Right, p - u, true);
            nodes.push((wt, abs(y - x)));
        }
    }
    Ok((1.0 - p, nodes))
}
