//! JSON file formats for laws, costs, process specs and experiment configs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use coupled_levy_core::costs::Band;
use coupled_levy_core::levy::{CompoundPoissonSpec, CouplingKind};
use coupled_levy_core::{Atom, ConcaveCost, Decomposition, Distribution1D};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Triangular {
        lo: f64,
        mode: f64,
        hi: f64,
    },
    Laplace {
        loc: f64,
        scale: f64,
    },
    Exponential {
        rate: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Dirac {
        x: f64,
    },
    /// `[x, p]` pairs.
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
    /// `weight * delta_0 + (1 - weight) * base`.
    WithDirac {
        base: Box<DistSpec>,
        weight: f64,
    },
    Shifted {
        base: Box<DistSpec>,
        by: f64,
    },
}

impl DistSpec {
    pub fn build(&self) -> coupled_levy_core::Result<Distribution1D> {
        Ok(match self {
            DistSpec::Uniform { lo, hi } => Distribution1D::uniform(*lo, *hi)?,
            DistSpec::Triangular { lo, mode, hi } => Distribution1D::triangular(*lo, *mode, *hi)?,
            DistSpec::Laplace { loc, scale } => Distribution1D::laplace(*loc, *scale)?,
            DistSpec::Exponential { rate } => Distribution1D::exponential(*rate)?,
            DistSpec::Gaussian { mean, sd } => Distribution1D::gaussian(*mean, *sd)?,
            DistSpec::Dirac { x } => Distribution1D::dirac(*x),
            DistSpec::Discrete { atoms } => Distribution1D::discrete(atoms.iter().map(|&(x, p)| Atom { x, p }).collect())?,
            DistSpec::Tabulated { grid, values } => Distribution1D::tabulated(grid.clone(), values.clone())?,
            DistSpec::WithDirac { base, weight } => base.build()?.mix_with_dirac(*weight)?,
            DistSpec::Shifted { base, by } => base.build()?.shift(*by),
        })
    }

    /// Short label used in result tables.
    pub fn label(&self) -> String {
        match self {
            DistSpec::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            DistSpec::Triangular { lo, mode, hi } => format!("triangular({lo},{mode},{hi})"),
            DistSpec::Laplace { loc, scale } => format!("laplace({loc},{scale})"),
            DistSpec::Exponential { rate } => format!("exponential({rate})"),
            DistSpec::Gaussian { mean, sd } => format!("gaussian({mean},{sd})"),
            DistSpec::Dirac { x } => format!("dirac({x})"),
            DistSpec::Discrete { atoms } => format!("discrete[{}]", atoms.len()),
            DistSpec::Tabulated { grid, .. } => format!("tabulated[{}]", grid.len()),
            DistSpec::WithDirac { base, weight } => format!("{weight}*dirac(0)+{}", base.label()),
            DistSpec::Shifted { base, by } => format!("{}+{by}", base.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Power {
        p: f64,
    },
    Capped {
        c: f64,
    },
    BoundedExp,
    /// `[weight, knot]` pairs.
    Bands {
        bands: Vec<(f64, f64)>,
    },
}

impl CostSpec {
    pub fn build(&self) -> coupled_levy_core::Result<ConcaveCost> {
        let cost = match self {
            CostSpec::Power { p } => ConcaveCost::Power { p: *p },
            CostSpec::Capped { c } => ConcaveCost::Capped { c: *c },
            CostSpec::BoundedExp => ConcaveCost::BoundedExp,
            CostSpec::Bands { bands } => ConcaveCost::Bands(bands.iter().map(|&(weight, knot)| Band { weight, knot }).collect()),
        };
        cost.validate()?;
        Ok(cost)
    }

    pub fn label(&self) -> String {
        match self {
            CostSpec::Power { p } => format!("power({p})"),
            CostSpec::Capped { c } => format!("capped({c})"),
            CostSpec::BoundedExp => "bounded_exp".into(),
            CostSpec::Bands { bands } => format!("bands[{}]", bands.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpecFile {
    pub rate: f64,
    pub jump_law: DistSpec,
    #[serde(default)]
    pub x0: f64,
    pub y0: f64,
    #[serde(default = "one")]
    pub horizon: f64,
}

fn one() -> f64 {
    1.0
}

impl LevySpecFile {
    pub fn build(&self) -> coupled_levy_core::Result<CompoundPoissonSpec> {
        let spec =
            CompoundPoissonSpec { rate: self.rate, jump_law: self.jump_law.build()?, x0: self.x0, y0: self.y0, horizon: self.horizon };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub p: f64,
    pub zeta: f64,
    pub meet_mass: f64,
    pub atom_at_zeta: f64,
}

impl From<&Decomposition> for DecompositionSummary {
    fn from(d: &Decomposition) -> Self {
        DecompositionSummary { p: d.p(), zeta: d.zeta(), meet_mass: d.meet_mass(), atom_at_zeta: d.atom_at_zeta() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDist {
    pub name: String,
    pub law: DistSpec,
}

/// A grid of Monte Carlo cells: every distribution, coupling, cost,
/// separation and horizon combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distributions: Vec<NamedDist>,
    pub couplings: Vec<String>,
    pub costs: Vec<CostSpec>,
    pub separations: Vec<f64>,
    pub horizons: Vec<f64>,
    #[serde(default = "one")]
    pub rate: f64,
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Structural checks that do not need the math core.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.replicas == 0 {
            bail!("replicas must be at least 1");
        }
        if self.distributions.is_empty() || self.couplings.is_empty() || self.costs.is_empty() {
            bail!("distributions, couplings and costs must be non-empty");
        }
        if let Some(a) = self.separations.iter().find(|a| !(**a > 0.0)) {
            bail!("separation {a} must be positive");
        }
        if let Some(t) = self.horizons.iter().find(|t| !(**t > 0.0)) {
            bail!("horizon {t} must be positive");
        }
        if self.separations.is_empty() || self.horizons.is_empty() {
            bail!("separations and horizons must be non-empty");
        }
        if !(self.rate > 0.0) {
            bail!("rate must be positive");
        }
        for c in &self.couplings {
            parse_coupling(c)?;
        }
        Ok(())
    }
}

pub fn parse_coupling(s: &str) -> anyhow::Result<CouplingKind> {
    CouplingKind::parse(s).with_context(|| format!("unknown coupling `{s}` (expected amr, synchronous, independent, reflection or basic)"))
}

/// One Monte Carlo cell of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub distribution: String,
    pub coupling: String,
    pub cost_form: String,
    pub t: f64,
    pub a: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

/// One cell of a single-spec process run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub coupling: String,
    pub cost_form: String,
    pub t: f64,
    pub a: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl From<ResultRow> for CellRow {
    fn from(r: ResultRow) -> Self {
        CellRow {
            coupling: r.coupling,
            cost_form: r.cost_form,
            t: r.t,
            a: r.a,
            mean: r.mean,
            std_error: r.std_error,
            replicas: r.replicas,
            seed: r.seed,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_rows<T: Serialize, W: std::io::Write>(rows: &[T], format: OutputFormat, out: W) -> anyhow::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn read_rows(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    if path.extension().is_some_and(|e| e == "json") {
        return read_json(path);
    }
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().collect::<Result<Vec<ResultRow>, _>>().with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use coupled_levy_core::Law;

    #[test]
    fn dist_round_trip() {
        let specs = vec![
            DistSpec::Laplace { loc: 0.0, scale: 1.0 },
            DistSpec::Discrete { atoms: vec![(-1.0, 0.5), (1.0, 0.5)] },
            DistSpec::WithDirac { base: Box::new(DistSpec::Exponential { rate: 1.0 }), weight: 0.5 },
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<DistSpec>(&text).unwrap(), s);
            s.build().unwrap();
        }
        let d: DistSpec =
            serde_json::from_str(r#"{"kind":"with_dirac","base":{"kind":"laplace","loc":0,"scale":1},"weight":0.5}"#).unwrap();
        assert_eq!(d.build().unwrap().atom_mass_at(0.0), 0.5);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(serde_json::from_str::<DistSpec>(r#"{"kind":"cauchy"}"#).is_err());
        assert!(serde_json::from_str::<DistSpec>(r#"{"kind":"uniform","lo":0,"hi":1,"extra":2}"#).is_err());
        assert!(DistSpec::Uniform { lo: 1.0, hi: 0.0 }.build().is_err());
        assert!(CostSpec::Power { p: 1.5 }.build().is_err());
        assert!(parse_coupling("mirror").is_err());
    }

    #[test]
    fn cost_parsing() {
        let c: CostSpec = serde_json::from_str(r#"{"kind":"bounded_exp"}"#).unwrap();
        assert_eq!(c.build().unwrap(), ConcaveCost::BoundedExp);
        let c: CostSpec = serde_json::from_str(r#"{"kind":"bands","bands":[[0.5,1.0],[0.5,2.0]]}"#).unwrap();
        assert!((c.build().unwrap().eval(3.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn levy_spec_defaults() {
        let s: LevySpecFile = serde_json::from_str(r#"{"rate":2,"jump_law":{"kind":"laplace","loc":0,"scale":1},"y0":1}"#).unwrap();
        let spec = s.build().unwrap();
        assert_eq!((spec.x0, spec.y0, spec.horizon), (0.0, 1.0, 1.0));
        assert!((spec.jump_law.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rows_round_trip_csv() {
        let rows = vec![ResultRow {
            distribution: "laplace(0,1)".into(),
            coupling: "amr".into(),
            cost_form: "power(0.5)".into(),
            t: 1.0,
            a: 1.0,
            mean: 0.25,
            std_error: 0.01,
            replicas: 10,
            seed: 7,
        }];
        let mut buf = Vec::new();
        write_rows(&rows, OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("distribution,coupling,cost_form,t,a,mean,std_error,replicas,seed\n"));
        let back: Vec<ResultRow> = csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(back, rows);
    }
}
