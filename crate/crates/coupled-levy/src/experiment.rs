//! Grid experiments over distributions, couplings, costs, separations and
//! horizons, plus plot-ready series extracted from their results.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use coupled_levy_core::levy::{CompoundPoissonSpec, CouplingKind};
use coupled_levy_core::oracle::two_point_f;
use coupled_levy_core::{ConcaveCost, Distribution1D};
use serde::Serialize;

use crate::checks::{estimate_cost, SurvivalPoint};
use crate::error::{Failure, Outcome};
use crate::formats::{parse_coupling, ExperimentConfig, ResultRow};
use crate::parallel::map_jobs;

struct Cell<'a> {
    index: u64,
    distribution: &'a str,
    law: &'a Distribution1D,
    coupling: CouplingKind,
    cost: &'a ConcaveCost,
    cost_label: String,
    a: f64,
    t: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One row per cell, in cell-index order.
    pub rows: Vec<ResultRow>,
    /// Wall time per cell, same order.
    pub wall_times: Vec<Duration>,
}

/// Runs every cell of the grid. Cell `i` draws replica `r` from
/// `stream(seed, i, r)`, so results do not depend on scheduling.
pub fn run(config: &ExperimentConfig) -> Outcome<RunOutput> {
    config.validate().map_err(Failure::Config)?;
    let laws = config
        .distributions
        .iter()
        .map(|d| d.law.build().with_context(|| format!("distribution `{}`", d.name)))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(Failure::Config)?;
    let costs = config.costs.iter().map(|c| c.build()).collect::<Result<Vec<_>, _>>().map_err(|e| Failure::Config(e.into()))?;
    let couplings = config.couplings.iter().map(|c| parse_coupling(c)).collect::<anyhow::Result<Vec<_>>>().map_err(Failure::Config)?;

    let mut cells = Vec::new();
    for (d, law) in config.distributions.iter().zip(&laws) {
        for &coupling in &couplings {
            for (spec, cost) in config.costs.iter().zip(&costs) {
                for &a in &config.separations {
                    for &t in &config.horizons {
                        cells.push(Cell {
                            index: cells.len() as u64,
                            distribution: &d.name,
                            law,
                            coupling,
                            cost,
                            cost_label: spec.label(),
                            a,
                            t,
                        });
                    }
                }
            }
        }
    }

    let results = map_jobs(&cells, |c| {
        let start = Instant::now();
        let spec = CompoundPoissonSpec { rate: config.rate, jump_law: c.law.clone(), x0: 0.0, y0: c.a, horizon: c.t };
        let est = estimate_cost(&spec, c.coupling, c.cost, config.replicas, config.seed, c.index);
        (est, start.elapsed())
    });

    let mut rows = Vec::with_capacity(cells.len());
    let mut wall_times = Vec::with_capacity(cells.len());
    for (c, (est, wall)) in cells.iter().zip(results) {
        let (mean, std_error) = est.map_err(Failure::Precondition)?;
        rows.push(ResultRow {
            distribution: c.distribution.to_string(),
            coupling: c.coupling.name().to_string(),
            cost_form: c.cost_label.clone(),
            t: c.t,
            a: c.a,
            mean,
            std_error,
            replicas: config.replicas,
            seed: config.seed,
        });
        wall_times.push(wall);
    }
    Ok(RunOutput { rows, wall_times })
}

/// Result rows for a survival-versus-TV comparison: one `amr` row with the
/// MC survival and one `exact` row with the total variation, per time.
pub fn survival_rows(distribution: &str, a: f64, points: &[SurvivalPoint], replicas: u64, seed: u64) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(2 * points.len());
    for p in points {
        for (coupling, mean, std_error) in [("amr", p.survival, p.std_error), ("exact", p.tv, 0.0)] {
            rows.push(ResultRow {
                distribution: distribution.to_string(),
                coupling: coupling.to_string(),
                cost_form: "survival".to_string(),
                t: p.t,
                a,
                mean,
                std_error,
                replicas,
                seed,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    CostVsT,
    SurvivalVsTv,
    FAlpha,
}

impl FromStr for PlotKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "cost_vs_t" => Ok(PlotKind::CostVsT),
            "survival_vs_tv" => Ok(PlotKind::SurvivalVsTv),
            "f_alpha" => Ok(PlotKind::FAlpha),
            _ => Err(anyhow!("unknown plot kind `{s}` (expected cost_vs_t, survival_vs_tv or f_alpha)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Vec<f64>,
}

impl Series {
    fn new(name: String) -> Self {
        Series { name, x: Vec::new(), y: Vec::new(), y_err: Vec::new() }
    }

    fn push(&mut self, x: f64, y: f64, e: f64) {
        self.x.push(x);
        self.y.push(y);
        self.y_err.push(e);
    }
}

pub const F_ALPHA_GAMMAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const F_ALPHA_POINTS: usize = 200;

/// Series keyed by everything except `t`, with `t` on the x axis.
/// `f_alpha` ignores `rows` and tabulates the two-point example instead.
pub fn emit_plot_data(rows: &[ResultRow], kind: PlotKind) -> Vec<Series> {
    match kind {
        PlotKind::FAlpha => F_ALPHA_GAMMAS
            .iter()
            .map(|&g| {
                let mut s = Series::new(format!("gamma={g}"));
                for i in 1..=F_ALPHA_POINTS {
                    let alpha = 2.0 * i as f64 / F_ALPHA_POINTS as f64;
                    s.push(alpha, two_point_f(g, alpha), 0.0);
                }
                s
            })
            .collect(),
        PlotKind::CostVsT | PlotKind::SurvivalVsTv => {
            let want_survival = kind == PlotKind::SurvivalVsTv;
            let mut groups: BTreeMap<(String, String, String, u64), Vec<&ResultRow>> = BTreeMap::new();
            let mut order = Vec::new();
            for r in rows.iter().filter(|r| (r.cost_form == "survival") == want_survival) {
                let key = (r.distribution.clone(), r.coupling.clone(), r.cost_form.clone(), r.a.to_bits());
                let g = groups.entry(key.clone()).or_default();
                if g.is_empty() {
                    order.push(key);
                }
                g.push(r);
            }
            order
                .into_iter()
                .map(|key| {
                    let mut g = groups.remove(&key).unwrap_or_default();
                    g.sort_by(|x, y| x.t.total_cmp(&y.t));
                    let (d, c, cost, a) = key;
                    let name = if want_survival {
                        format!("{d}/{c}/a={}", f64::from_bits(a))
                    } else {
                        format!("{d}/{c}/{cost}/a={}", f64::from_bits(a))
                    };
                    let mut s = Series::new(name);
                    for r in g {
                        s.push(r.t, r.mean, r.std_error);
                    }
                    s
                })
                .collect()
        }
    }
}
