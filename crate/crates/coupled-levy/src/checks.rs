//! Parallel Monte Carlo estimators and statistical checks for coupled
//! compound Poisson processes and one-shot couplings.

use coupled_levy_core::baselines::{baseline_sample, BaselineKind};
use coupled_levy_core::levy::{
    conditional_values, exact_tv, poisson_truncation, poissonized_cost, simulate_plain, CompoundPoissonSpec, CoupledPath, CouplingKind,
    PairSimulator,
};
use coupled_levy_core::rng::{open01, stream};
use coupled_levy_core::stats::{
    binomial_test, chi_square_gof, correlation, ks_one_sample, ks_two_sample, mean_se, poisson_pmf, TestResult,
};
use coupled_levy_core::{ConcaveCost, CoupleSample, Decomposition, Distribution1D, Error, Law, Result};
use serde::Serialize;

use crate::parallel::{map_replicas, try_map_replicas};

/// Significance level of the statistical checks.
pub const LEVEL: f64 = 1e-3;

/// Stream cell reserved for plain (uncoupled) reference simulations.
const PLAIN_CELL: u64 = u64::MAX;

pub fn simulate_paths(spec: &CompoundPoissonSpec, kind: CouplingKind, replicas: u64, seed: u64, cell: u64) -> Result<Vec<CoupledPath>> {
    let sim = PairSimulator::new(spec, kind)?;
    try_map_replicas(replicas, || sim.clone(), |s, r| s.replica(seed, cell, r))
}

/// Mean and standard error of `phi(|X_t - Y_t|)` over `replicas` paths.
pub fn estimate_cost(
    spec: &CompoundPoissonSpec,
    kind: CouplingKind,
    cost: &ConcaveCost,
    replicas: u64,
    seed: u64,
    cell: u64,
) -> Result<(f64, f64)> {
    if replicas == 0 {
        return Err(Error::Domain("replicas must be >= 1".into()));
    }
    cost.validate()?;
    if cost.bound().is_none() && !cost.moment_proxy(&spec.jump_law)?.is_finite() {
        return Err(Error::UnboundedCost(format!("{} has no finite moment under the jump law", cost.name())));
    }
    let sim = PairSimulator::new(spec, kind)?;
    let v = try_map_replicas(replicas, || sim.clone(), |s, r| s.replica(seed, cell, r).map(|p| cost.eval(p.final_gap())))?;
    Ok(mean_se(&v))
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalReport {
    pub coupling: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

/// Two-sample KS of `Y_t - Y_0` under the coupling against an uncoupled
/// simulation of the same process.
pub fn marginal_law_check(spec: &CompoundPoissonSpec, kind: CouplingKind, replicas: u64, seed: u64) -> Result<MarginalReport> {
    let coupled: Vec<f64> = simulate_paths(spec, kind, replicas, seed, 0)?.iter().map(|p| p.y_end - p.y0).collect();
    let plain = map_replicas(replicas, || (), |_, r| simulate_plain(spec, &mut stream(seed, PLAIN_CELL, r)));
    let ks = ks_two_sample(&coupled, &plain);
    Ok(MarginalReport { coupling: kind.name(), statistic: ks.statistic, p_value: ks.p_value, passed: ks.passes(LEVEL) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Test {
    pub statistic: f64,
    pub p_value: f64,
}

impl From<TestResult> for Test {
    fn from(t: TestResult) -> Self {
        Test { statistic: t.statistic, p_value: t.p_value }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformizationReport {
    pub ticks: u64,
    pub atom_frequency: f64,
    pub atom_test: Test,
    pub jump_ks: Test,
    pub clock_chi_square: Test,
    pub count_jump_correlation: f64,
    pub correlation_bound: f64,
    pub passed: bool,
}

/// Atom frequency of the extended jumps, their continuous part against the
/// jump law, Poisson tick counts, and independence of jumps from the clock.
/// `atom_frequency` pools both coordinates.
pub fn uniformization_check(spec: &CompoundPoissonSpec, kind: CouplingKind, replicas: u64, seed: u64) -> Result<UniformizationReport> {
    let paths = simulate_paths(spec, kind, replicas, seed, 0)?;
    let mut zeros = 0u64;
    let mut ticks = 0u64;
    let mut continuous = Vec::new();
    let mut counts = Vec::with_capacity(paths.len());
    let mut sizes = Vec::new();
    let mut counts_nonempty = Vec::new();
    for p in &paths {
        counts.push(p.jumps.len() as u64);
        for &(dx, dy) in &p.jumps {
            for d in [dx, dy] {
                ticks += 1;
                if d == 0.0 {
                    zeros += 1;
                }
            }
            // The two coordinates of a tick are dependent; only the first
            // enters the i.i.d. tests.
            if dx != 0.0 {
                continuous.push(dx);
            }
        }
        if !p.jumps.is_empty() {
            counts_nonempty.push(p.jumps.len() as f64);
            sizes.push(p.jumps.iter().map(|j| j.0.abs()).sum::<f64>() / p.jumps.len() as f64);
        }
    }
    let dz1_zeros = paths.iter().flat_map(|p| &p.jumps).filter(|j| j.0 == 0.0).count() as u64;
    let dz1_ticks = paths.iter().map(|p| p.jumps.len() as u64).sum::<u64>();
    let atom_test = binomial_test(dz1_zeros, dz1_ticks, 0.5);
    let law = &spec.jump_law;
    let jump_ks = ks_one_sample(&continuous, |x| law.cdf(x), |x| law.cdf_left(x));
    let mean = 2.0 * spec.rate * spec.horizon;
    let top = poisson_truncation(mean, 1e-12) + 1;
    let mut observed = vec![0u64; top + 1];
    for c in counts {
        observed[(c as usize).min(top)] += 1;
    }
    let mut probs: Vec<f64> = (0..top).map(|k| poisson_pmf(mean, k as u64)).collect();
    probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
    let clock_chi_square = chi_square_gof(&observed, &probs);
    let rho = correlation(&counts_nonempty, &sizes);
    let bound = 3.0 / (counts_nonempty.len().max(1) as f64).sqrt();
    let passed = atom_test.passes(LEVEL) && jump_ks.passes(LEVEL) && clock_chi_square.passes(LEVEL) && rho.abs() < bound;
    Ok(UniformizationReport {
        ticks,
        atom_frequency: zeros as f64 / ticks.max(1) as f64,
        atom_test: atom_test.into(),
        jump_ks: jump_ks.into(),
        clock_chi_square: clock_chi_square.into(),
        count_jump_correlation: rho,
        correlation_bound: bound,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalTerm {
    pub n: usize,
    pub paths: usize,
    pub mc_mean: f64,
    pub std_error: f64,
    pub chain_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalReport {
    pub terms: Vec<ConditionalTerm>,
    pub mc_total: f64,
    pub mc_std_error: f64,
    pub poissonized: f64,
    pub passed: bool,
}

/// Cost conditioned on the tick count against the chain values of the
/// extended law, and the Poisson mixture of those values against the total.
pub fn conditional_count_check(spec: &CompoundPoissonSpec, cost: &ConcaveCost, replicas: u64, seed: u64) -> Result<ConditionalReport> {
    let paths = simulate_paths(spec, CouplingKind::Amr, replicas, seed, 0)?;
    let values = conditional_values(spec, cost, 3)?;
    // Value-iteration grids carry an interpolation error well below this.
    const GRID_TOL: f64 = 2e-3;
    let mut terms = Vec::new();
    for (n, &chain_value) in values.iter().enumerate() {
        let c: Vec<f64> = paths.iter().filter(|p| p.jumps.len() == n).map(|p| cost.eval(p.final_gap())).collect();
        let (m, se) = if c.is_empty() { (f64::NAN, f64::NAN) } else { mean_se(&c) };
        let passed = c.is_empty() || (m - chain_value).abs() <= 3.0 * se + GRID_TOL;
        terms.push(ConditionalTerm { n, paths: c.len(), mc_mean: m, std_error: se, chain_value, passed });
    }
    let all: Vec<f64> = paths.iter().map(|p| cost.eval(p.final_gap())).collect();
    let (mc_total, mc_std_error) = mean_se(&all);
    let poissonized = poissonized_cost(spec, cost)?;
    let passed = terms.iter().all(|t| t.passed) && (mc_total - poissonized).abs() <= 3.0 * mc_std_error + GRID_TOL;
    Ok(ConditionalReport { terms, mc_total, mc_std_error, poissonized, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalPoint {
    pub t: f64,
    pub survival: f64,
    pub std_error: f64,
    pub tv: f64,
    pub passed: bool,
}

/// MC probability of not having met by `t` against the exact total
/// variation distance of the two marginals, for lattice jump laws.
pub fn coalescence_vs_tv(spec: &CompoundPoissonSpec, times: &[f64], replicas: u64, seed: u64) -> Result<Vec<SurvivalPoint>> {
    if spec.jump_law.lattice_spacing().is_none() {
        return Err(Error::NonLattice);
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let paths = if t_max > 0.0 { simulate_paths(&spec.with_horizon(t_max), CouplingKind::Amr, replicas, seed, 0)? } else { Vec::new() };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let tv = exact_tv(spec, t)?;
        let (survival, se) = if t == 0.0 {
            (if spec.x0 == spec.y0 { 0.0 } else { 1.0 }, 0.0)
        } else {
            let alive = paths.iter().filter(|p| !p.coalesced_by(t)).count() as f64 / paths.len() as f64;
            (alive, (alive * (1.0 - alive) / paths.len() as f64).sqrt())
        };
        // Equality within 3 SE; a degenerate SE needs exact agreement.
        let passed = (survival - tv).abs() <= (3.0 * se).max(1e-12);
        out.push(SurvivalPoint { t, survival, std_error: se, tv, passed });
    }
    Ok(out)
}

/// Coupling of two laws in a one-shot experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCoupling {
    Amr,
    Baseline(BaselineKind),
}

impl PairCoupling {
    pub const ALL: [PairCoupling; 5] = [
        PairCoupling::Amr,
        PairCoupling::Baseline(BaselineKind::Synchronous),
        PairCoupling::Baseline(BaselineKind::Independent),
        PairCoupling::Baseline(BaselineKind::Reflection),
        PairCoupling::Baseline(BaselineKind::Basic),
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairCoupling::Amr => "amr",
            PairCoupling::Baseline(BaselineKind::Synchronous) => "synchronous",
            PairCoupling::Baseline(BaselineKind::Independent) => "independent",
            PairCoupling::Baseline(BaselineKind::Reflection) => "reflection",
            PairCoupling::Baseline(BaselineKind::Basic) => "basic",
        }
    }
}

/// `replicas` draws of a one-shot coupling of `F` and `G`, one stream per
/// replica.
pub fn pair_samples(
    f: &Distribution1D,
    g: &Distribution1D,
    coupling: PairCoupling,
    replicas: u64,
    seed: u64,
    cell: u64,
) -> Result<Vec<CoupleSample>> {
    match coupling {
        PairCoupling::Amr => {
            let dec = Decomposition::new(f, g)?;
            Ok(map_replicas(replicas, || (), |_, r| dec.sample(open01(&mut stream(seed, cell, r)))))
        }
        PairCoupling::Baseline(BaselineKind::Basic) => {
            let dec = Decomposition::new(f, g)?;
            Ok(map_replicas(
                replicas,
                || (),
                |_, r| {
                    let mut rng = stream(seed, cell, r);
                    coupled_levy_core::baselines::basic_sample(&dec, open01(&mut rng), open01(&mut rng))
                },
            ))
        }
        PairCoupling::Baseline(kind) => {
            // Surface precondition errors once, before the parallel loop.
            baseline_sample(kind, f, g, 0.5, 0.5)?;
            try_map_replicas(
                replicas,
                || (),
                |_, r| {
                    let mut rng = stream(seed, cell, r);
                    baseline_sample(kind, f, g, open01(&mut rng), open01(&mut rng))
                },
            )
        }
    }
}

/// MC mean and standard error of the band payoff `(c - |X - Y|)^+`.
pub fn band_payoff_mc(
    f: &Distribution1D,
    g: &Distribution1D,
    coupling: PairCoupling,
    c: f64,
    replicas: u64,
    seed: u64,
    cell: u64,
) -> Result<(f64, f64)> {
    let s = pair_samples(f, g, coupling, replicas, seed, cell)?;
    let v: Vec<f64> = s.iter().map(|s| (c - (s.x - s.y).abs()).max(0.0)).collect();
    Ok(mean_se(&v))
}
