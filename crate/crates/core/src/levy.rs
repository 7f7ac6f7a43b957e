//! Compound Poisson pairs simulated on a shared clock of doubled rate with
//! the extended jump law `1/2 delta_0 + 1/2 jump_law`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::baselines::SYMMETRY_TOL;
use crate::chains::{admissible, chain_values, ShiftCoupler};
use crate::costs::ConcaveCost;
use crate::error::{Error, Result};
use crate::math::{abs, exp, round};
use crate::measures::Distribution1D;
use crate::rng::{open01, stream};
use crate::stats::poisson_pmf;

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonSpec {
    /// Total jump intensity.
    pub rate: f64,
    /// Normalised jump law.
    pub jump_law: Distribution1D,
    pub x0: f64,
    pub y0: f64,
    pub horizon: f64,
}

impl CompoundPoissonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Domain(format!("rate {} must be positive", self.rate)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::Domain("start points must be finite".into()));
        }
        Ok(())
    }

    pub fn separation(&self) -> f64 {
        abs(self.y0 - self.x0)
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        CompoundPoissonSpec { horizon, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CouplingKind {
    Amr,
    Synchronous,
    Independent,
    Reflection,
    Basic,
}

impl CouplingKind {
    pub const ALL: [CouplingKind; 5] =
        [CouplingKind::Amr, CouplingKind::Synchronous, CouplingKind::Independent, CouplingKind::Reflection, CouplingKind::Basic];

    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::Amr => "amr",
            CouplingKind::Synchronous => "synchronous",
            CouplingKind::Independent => "independent",
            CouplingKind::Reflection => "reflection",
            CouplingKind::Basic => "basic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CouplingKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub x0: f64,
    pub y0: f64,
    pub tick_times: Vec<f64>,
    /// Extended jumps `(dz1, dz2)` at each tick.
    pub jumps: Vec<(f64, f64)>,
    /// `y - x` after each tick; exactly zero once coalesced.
    pub gaps: Vec<f64>,
    pub x_end: f64,
    pub y_end: f64,
    pub coalesced_at: Option<f64>,
}

impl CoupledPath {
    /// Positions `(t, x, y)` on the given times, right-continuous.
    pub fn on_grid(&self, times: &[f64]) -> Vec<(f64, f64, f64)> {
        let (mut x, mut y) = (self.x0, self.y0);
        let mut k = 0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            while k < self.tick_times.len() && self.tick_times[k] <= t {
                x += self.jumps[k].0;
                y = if self.gaps[k] == 0.0 { x } else { y + self.jumps[k].1 };
                k += 1;
            }
            out.push((t, x, y));
        }
        out
    }

    /// `y - x` at the horizon.
    pub fn final_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(self.y0 - self.x0)
    }

    /// Whether the pair has met by time `t`.
    pub fn coalesced_by(&self, t: f64) -> bool {
        self.coalesced_at.is_some_and(|c| c <= t)
    }
}

/// Clock rate `2 * rate` and the extended jump law.
pub fn uniformize(spec: &CompoundPoissonSpec) -> Result<(f64, Distribution1D)> {
    spec.validate()?;
    Ok((2.0 * spec.rate, spec.jump_law.mix_with_dirac(0.5)?))
}

/// Poisson draw by inversion, split into blocks of mean at most 32.
pub fn sample_poisson<R: RngCore + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let mut left = mean;
    let mut total = 0;
    while left > 0.0 {
        let m = left.min(32.0);
        left -= m;
        let u = open01(rng);
        let mut k = 0u64;
        let mut p = exp(-m);
        let mut cdf = p;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= m / k as f64;
            cdf += p;
        }
        total += k;
    }
    total
}

/// Sorted tick times of a rate-`rate` Poisson clock on `(0, horizon]`.
pub fn sample_clock<R: RngCore + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let n = sample_poisson(rate * horizon, rng);
    let mut t: Vec<f64> = (0..n).map(|_| horizon * open01(rng)).collect();
    t.sort_by(f64::total_cmp);
    t
}

/// Reusable simulator for one spec and coupling.
#[derive(Debug, Clone)]
pub struct PairSimulator {
    spec: CompoundPoissonSpec,
    kind: CouplingKind,
    clock_rate: f64,
    coupler: ShiftCoupler,
}

impl PairSimulator {
    pub fn new(spec: &CompoundPoissonSpec, kind: CouplingKind) -> Result<Self> {
        let (clock_rate, ext) = uniformize(spec)?;
        match kind {
            CouplingKind::Amr | CouplingKind::Basic => admissible(&ext)?,
            CouplingKind::Reflection if spec.jump_law.symmetry_center(SYMMETRY_TOL).is_none_or(|c| abs(c) > SYMMETRY_TOL) => {
                return Err(Error::AsymmetricLaw);
            }
            _ => {}
        }
        Ok(PairSimulator { spec: spec.clone(), kind, clock_rate, coupler: ShiftCoupler::new(ext) })
    }

    pub fn spec(&self) -> &CompoundPoissonSpec {
        &self.spec
    }

    pub fn extended_law(&self) -> &Distribution1D {
        self.coupler.law()
    }

    /// One replica on the stream `(seed, cell, replica)`.
    pub fn replica(&mut self, seed: u64, cell: u64, replica: u64) -> Result<CoupledPath> {
        self.run(&mut stream(seed, cell, replica))
    }

    pub fn run<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<CoupledPath> {
        let tick_times = sample_clock(self.clock_rate, self.spec.horizon, rng);
        let (mut x, mut y) = (self.spec.x0, self.spec.y0);
        let mut gap = y - x;
        let mut coalesced_at = (gap == 0.0).then_some(0.0);
        // Reflection switches to common jumps once the order of x and y flips.
        let start_sign = gap > 0.0;
        let mut crossed = false;
        let mut jumps = Vec::with_capacity(tick_times.len());
        let mut gaps = Vec::with_capacity(tick_times.len());
        for &t in &tick_times {
            let u1 = open01(rng);
            let u2 = open01(rng);
            let ext = self.coupler.law();
            let common = |j: f64| (j, j, gap);
            let (dx, dy, g) = if gap == 0.0 {
                common(ext.sample(u1))
            } else {
                match self.kind {
                    CouplingKind::Amr => self.coupler.advance(gap, u1)?,
                    CouplingKind::Basic => self.coupler.advance_basic(gap, u1, u2)?,
                    CouplingKind::Synchronous => common(ext.sample(u1)),
                    CouplingKind::Reflection if crossed => common(ext.sample(u1)),
                    CouplingKind::Independent => free(gap, ext.sample(u1), ext.sample(u2)),
                    CouplingKind::Reflection => free(gap, ext.sample(u1), ext.sample(1.0 - u1)),
                }
            };
            x += dx;
            // Snap on meeting so the two positions agree bit for bit.
            y = if g == 0.0 { x } else { y + dy };
            gap = g;
            jumps.push((dx, dy));
            gaps.push(gap);
            if gap == 0.0 && coalesced_at.is_none() {
                coalesced_at = Some(t);
            }
            if (gap > 0.0) != start_sign {
                crossed = true;
            }
        }
        Ok(CoupledPath { x0: self.spec.x0, y0: self.spec.y0, tick_times, jumps, gaps, x_end: x, y_end: y, coalesced_at })
    }
}

fn free(gap: f64, dx: f64, dy: f64) -> (f64, f64, f64) {
    (dx, dy, gap + (dy - dx))
}

pub fn simulate_pair<R: RngCore + ?Sized>(spec: &CompoundPoissonSpec, kind: CouplingKind, rng: &mut R) -> Result<CoupledPath> {
    PairSimulator::new(spec, kind)?.run(rng)
}

/// Increment `X_t - X_0` of one uncoupled process at its own rate.
pub fn simulate_plain<R: RngCore + ?Sized>(spec: &CompoundPoissonSpec, rng: &mut R) -> f64 {
    let n = sample_poisson(spec.rate * spec.horizon, rng);
    (0..n).map(|_| spec.jump_law.sample(open01(rng))).sum()
}

/// Serial Monte Carlo mean and standard error of `phi(|X_t - Y_t|)`.
pub fn estimate_cost(spec: &CompoundPoissonSpec, kind: CouplingKind, cost: &ConcaveCost, replicas: u64, seed: u64) -> Result<(f64, f64)> {
    if replicas == 0 {
        return Err(Error::Domain("replicas must be >= 1".into()));
    }
    cost.validate()?;
    if cost.bound().is_none() {
        let proxy = cost.moment_proxy(&spec.jump_law)?;
        if !proxy.is_finite() {
            return Err(Error::UnboundedCost(format!("{} has no finite moment under the jump law", cost.name())));
        }
    }
    let mut sim = PairSimulator::new(spec, kind)?;
    let mut values = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let p = sim.replica(seed, 0, r)?;
        values.push(cost.eval(p.final_gap()));
    }
    Ok(crate::stats::mean_se(&values))
}

/// Conditional AMR values `E[phi | N_t = n]` for `n = 0..=n_max`, computed
/// as chain values on the extended law.
pub fn conditional_values(spec: &CompoundPoissonSpec, cost: &ConcaveCost, n_max: usize) -> Result<Vec<f64>> {
    let (_, ext) = uniformize(spec)?;
    chain_values(&ext, spec.separation(), n_max, |d| cost.eval(d))
}

/// Smallest `n` with Poisson upper tail `P[N > n]` below `tail`, using the
/// geometric bound `pmf(n + 1) / (1 - mean / (n + 2))` once `n + 2 > mean`.
pub fn poisson_truncation(mean: f64, tail: f64) -> usize {
    let mut n = 0u64;
    loop {
        let k = n as f64;
        if k + 2.0 > 2.0 * mean && poisson_pmf(mean, n + 1) / (1.0 - mean / (k + 2.0)) < tail {
            return n as usize;
        }
        n += 1;
    }
}

/// `sum_n Poisson(2 rate t; n) E[phi | N_t = n]`, truncated where the
/// Poisson tail drops below `1e-8`.
pub fn poissonized_cost(spec: &CompoundPoissonSpec, cost: &ConcaveCost) -> Result<f64> {
    let mean = 2.0 * spec.rate * spec.horizon;
    let n_max = poisson_truncation(mean, 1e-8);
    let vals = conditional_values(spec, cost, n_max)?;
    Ok(vals.iter().enumerate().map(|(n, v)| poisson_pmf(mean, n as u64) * v).sum())
}

const KEY_QUANTUM: f64 = 1e-9;

fn key(x: f64) -> i64 {
    round(x / KEY_QUANTUM) as i64
}

/// Exact law of `X_t - X_0` for an atomic jump law, keyed by position in
/// units of `1e-9`. Poisson terms beyond a tail of `1e-14` are dropped.
pub fn lattice_increment_pmf(spec: &CompoundPoissonSpec, t: f64) -> Result<BTreeMap<i64, f64>> {
    if spec.jump_law.lattice_spacing().is_none() {
        return Err(Error::NonLattice);
    }
    let mean = spec.rate * t;
    let n_max = poisson_truncation(mean, 1e-14);
    let jumps: Vec<(i64, f64)> = spec.jump_law.atoms().iter().map(|a| (key(a.x), a.p)).collect();
    let mut out = BTreeMap::new();
    let mut conv: BTreeMap<i64, f64> = BTreeMap::new();
    conv.insert(0, 1.0);
    for n in 0..=n_max {
        let w = poisson_pmf(mean, n as u64);
        for (&k, &p) in &conv {
            *out.entry(k).or_insert(0.0) += w * p;
        }
        let mut next = BTreeMap::new();
        for (&k, &p) in &conv {
            for &(j, q) in &jumps {
                *next.entry(k + j).or_insert(0.0) += p * q;
            }
        }
        conv = next;
    }
    Ok(out)
}

/// Exact total variation distance between the time-`t` marginals started
/// at `x0` and `y0`.
pub fn exact_tv(spec: &CompoundPoissonSpec, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(if spec.x0 == spec.y0 { 0.0 } else { 1.0 });
    }
    let pmf = lattice_increment_pmf(spec, t)?;
    let mut diff: BTreeMap<i64, f64> = BTreeMap::new();
    let (kx, ky) = (key(spec.x0), key(spec.y0));
    for (&k, &p) in &pmf {
        *diff.entry(k + kx).or_insert(0.0) += p;
        *diff.entry(k + ky).or_insert(0.0) -= p;
    }
    Ok(0.5 * diff.values().map(|v| abs(*v)).sum::<f64>())
}

/// Hazard of the thinning construction in the two explicit cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thinning {
    /// No shared jumps: each tick moves exactly one process.
    Disjoint,
    /// Every jump is shared: a tick moves both or neither.
    Shared,
}

/// One tick of the uniformised representation of the independent
/// (`Disjoint`) or synchronous (`Shared`) compound Poisson coupling.
pub fn thinned_tick(kind: Thinning, jump_law: &Distribution1D, mark: f64, u1: f64, u2: f64) -> (f64, f64) {
    match kind {
        Thinning::Disjoint if mark < 0.5 => (jump_law.sample(u1), 0.0),
        Thinning::Disjoint => (0.0, jump_law.sample(u2)),
        Thinning::Shared if mark < 0.5 => {
            let j = jump_law.sample(u1);
            (j, j)
        }
        Thinning::Shared => (0.0, 0.0),
    }
}
