use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use coupled_levy::acceptance::{run_all, run_criterion, N_CRITERIA};
use coupled_levy::checks::{
    band_payoff_mc, coalescence_vs_tv, conditional_count_check, estimate_cost, marginal_law_check, pair_samples, simulate_paths,
    uniformization_check, PairCoupling,
};
use coupled_levy::error::{Failure, Outcome};
use coupled_levy::experiment::{emit_plot_data, run, survival_rows, PlotKind};
use coupled_levy::formats::{
    parse_coupling, read_json, read_rows, write_rows, CellRow, CostSpec, DecompositionSummary, DistSpec, ExperimentConfig, LevySpecFile,
    OutputFormat,
};
use coupled_levy::parallel::try_map_replicas;
use coupled_levy_core::chains::{psi, simulate_amr_chain, ChainSpec};
use coupled_levy_core::coupling::band_payoff;
use coupled_levy_core::levy::{CompoundPoissonSpec, CouplingKind};
use coupled_levy_core::oracle::{
    two_point_example, two_point_limit_root, two_point_lp, two_point_lp_switch, two_point_root, verify_amr_optimal,
};
use coupled_levy_core::rng::stream;
use coupled_levy_core::{ConcaveCost, Decomposition, Distribution1D};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "coupled-levy", version, about = "Optimal couplings of shifted laws, random walks and compound Poisson processes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo replicas.
    #[arg(long, global = true, default_value_t = 10_000)]
    replicas: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a law.
    Dist {
        #[command(subcommand)]
        cmd: DistCmd,
    },
    /// One-shot couplings of two laws.
    Couple {
        #[command(subcommand)]
        cmd: CoupleCmd,
    },
    /// Coupled random walks.
    Chain {
        #[command(subcommand)]
        cmd: ChainCmd,
    },
    /// Coupled compound Poisson processes.
    Levy {
        #[command(subcommand)]
        cmd: LevyCmd,
    },
    /// Exact transport comparisons.
    Oracle {
        #[command(subcommand)]
        cmd: OracleCmd,
    },
    /// Run the acceptance suite.
    Verify {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<usize>,
    },
    /// Run an experiment grid from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Turn result tables into plot series.
    Plot {
        /// cost_vs_t, survival_vs_tv or f_alpha.
        #[arg(long)]
        kind: String,
        /// Result table (CSV, or JSON with a .json extension).
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

/// A law given as inline JSON or a path to a JSON file.
#[derive(Args, Clone)]
struct LawArg {
    #[arg(long)]
    law: String,
}

#[derive(Subcommand)]
enum DistCmd {
    /// Unimodality at zero, lattice structure and symmetry.
    Check(LawArg),
}

#[derive(Args, Clone)]
struct PairArgs {
    /// First law.
    #[arg(long)]
    f: String,
    /// Second law; defaults to the first shifted by `--shift`.
    #[arg(long, conflicts_with = "shift")]
    g: Option<String>,
    #[arg(long)]
    shift: Option<f64>,
}

#[derive(Subcommand)]
enum CoupleCmd {
    /// Draw pairs from a coupling.
    Sample {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value = "amr")]
        coupling: String,
    },
    /// Band payoff E[(c - |X - Y|)^+]: exact AMR value and MC per coupling.
    Band {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        c: f64,
    },
    /// Sup of the band payoff over couplings of F and F shifted by a.
    Psi {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        c: f64,
    },
}

#[derive(Subcommand)]
enum ChainCmd {
    /// Simulate AMR-coupled walks from 0 and a.
    Simulate {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        steps: usize,
    },
}

#[derive(Args, Clone)]
struct SpecArg {
    /// Process spec: inline JSON or path.
    #[arg(long)]
    spec: String,
}

#[derive(Subcommand)]
enum LevyCmd {
    /// One coupled path, sampled on a uniform time grid.
    Simulate {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value = "amr")]
        coupling: String,
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Expected terminal cost per coupling.
    Compare {
        #[command(flatten)]
        spec: SpecArg,
        /// Cost as inline JSON or path; repeatable.
        #[arg(long, required = true)]
        cost: Vec<String>,
        /// Couplings to compare; defaults to all that apply.
        #[arg(long)]
        coupling: Vec<String>,
    },
    /// Statistical self-checks of the simulator.
    Check {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = ["marginals", "uniformization", "conditional", "coalescence"])]
        kind: String,
        #[arg(long, default_value = "amr")]
        coupling: String,
        /// Cost for the conditional check.
        #[arg(long)]
        cost: Option<String>,
        /// Times for the coalescence check.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
        times: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// AMR cost against the LP optimum on a discretisation.
    Verify {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        cost: String,
        #[arg(long, default_value_t = 32)]
        atoms: usize,
    },
    /// Two-point example with cost d^gamma.
    TwoPoint {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) if closed_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// A reader such as `head` hung up on stdout.
fn closed_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = c
            .downcast_ref::<io::Error>()
            .map(io::Error::kind)
            .or_else(|| c.downcast_ref::<serde_json::Error>().and_then(|j| j.io_error_kind()))
            .or_else(|| match c.downcast_ref::<csv::Error>().map(csv::Error::kind) {
                Some(csv::ErrorKind::Io(io)) => Some(io.kind()),
                _ => None,
            });
        kind == Some(io::ErrorKind::BrokenPipe)
    })
}

fn config<T>(r: anyhow::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Config)
}

fn json_or_file<T: serde::de::DeserializeOwned>(s: &str) -> anyhow::Result<T> {
    if s.trim_start().starts_with('{') {
        serde_json::from_str(s).with_context(|| format!("parsing `{s}`"))
    } else {
        read_json(Path::new(s))
    }
}

fn law(s: &str) -> Outcome<Distribution1D> {
    let spec: DistSpec = config(json_or_file(s))?;
    config(spec.build().context("invalid law"))
}

fn cost(s: &str) -> Outcome<(String, ConcaveCost)> {
    let spec: CostSpec = config(json_or_file(s))?;
    Ok((spec.label(), config(spec.build().context("invalid cost"))?))
}

fn levy_spec(s: &str) -> Outcome<CompoundPoissonSpec> {
    let spec: LevySpecFile = config(json_or_file(s))?;
    config(spec.build().context("invalid process spec"))
}

fn pair(p: &PairArgs) -> Outcome<(Distribution1D, Distribution1D)> {
    let f = law(&p.f)?;
    let g = match (&p.g, p.shift) {
        (Some(g), _) => law(g)?,
        (None, Some(a)) => f.shift(a),
        (None, None) => return Err(Failure::Config(anyhow::anyhow!("give --g or --shift"))),
    };
    Ok((f, g))
}

fn pair_coupling(s: &str) -> Outcome<PairCoupling> {
    PairCoupling::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Failure::Config(anyhow::anyhow!("unknown coupling `{s}`")))
}

fn sink(out: &Option<PathBuf>) -> Outcome<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(config(File::create(p).with_context(|| format!("creating {}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize + ?Sized>(value: &T, out: &Option<PathBuf>) -> Outcome<()> {
    let mut w = sink(out)?;
    config(serde_json::to_writer_pretty(&mut w, value).map_err(Into::into))?;
    config(writeln!(w).and_then(|_| w.flush()).map_err(Into::into))
}

fn emit_rows<T: Serialize>(rows: &[T], common: &Common) -> Outcome<()> {
    let mut w = sink(&common.out)?;
    config(write_rows(rows, common.format, &mut w))?;
    config(w.flush().map_err(Into::into))
}

fn replicas(common: &Common) -> Outcome<u64> {
    if common.replicas == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--replicas must be at least 1")));
    }
    Ok(common.replicas)
}

fn dispatch(cli: Cli) -> Outcome<u8> {
    let common = cli.common;
    match cli.command {
        Command::Dist { cmd: DistCmd::Check(l) } => {
            let f = law(&l.law)?;
            let u = f.check_unimodal(1e-9);
            #[derive(Serialize)]
            struct Report {
                unimodal_at_zero: bool,
                max_violation: f64,
                atom_violation: bool,
                lattice_unimodal_at_zero: bool,
                lattice_spacing: Option<f64>,
                symmetry_center: Option<f64>,
                effective_support: (f64, f64),
                atomic_mass: f64,
            }
            emit_json(
                &Report {
                    unimodal_at_zero: u.is_unimodal_at_zero,
                    max_violation: u.max_violation,
                    atom_violation: u.atom_violation,
                    lattice_unimodal_at_zero: f.is_lattice_unimodal_at_zero(),
                    lattice_spacing: f.lattice_spacing(),
                    symmetry_center: f.symmetry_center(1e-9),
                    effective_support: f.effective_support(1e-9),
                    atomic_mass: 1.0 - f.density_mass(),
                },
                &common.out,
            )?;
        }
        Command::Couple { cmd } => couple(cmd, &common)?,
        Command::Chain { cmd: ChainCmd::Simulate { law: l, a, steps } } => {
            let f = law(&l.law)?;
            let spec = ChainSpec { jump_law: f, x0: 0.0, y0: a, steps };
            spec.validate()?;
            #[derive(Serialize)]
            struct Row {
                replica: u64,
                coalesced_at: Option<usize>,
                x_end: f64,
                y_end: f64,
            }
            let rows = try_map_replicas(
                replicas(&common)?,
                || (),
                |_, r| {
                    simulate_amr_chain(&spec, &mut stream(common.seed, 0, r)).map(|p| Row {
                        replica: r,
                        coalesced_at: p.coalesced_at,
                        x_end: *p.xs.last().unwrap_or(&spec.x0),
                        y_end: *p.ys.last().unwrap_or(&spec.y0),
                    })
                },
            )?;
            emit_rows(&rows, &common)?;
        }
        Command::Levy { cmd } => levy(cmd, &common)?,
        Command::Oracle { cmd } => oracle(cmd, &common)?,
        Command::Verify { only } => {
            let results = match only {
                Some(id) if (1..=N_CRITERIA).contains(&id) => vec![run_criterion(id, common.seed)],
                Some(id) => return Err(Failure::Config(anyhow::anyhow!("criterion {id} not in 1..={N_CRITERIA}"))),
                None => run_all(common.seed),
            };
            for r in &results {
                println!("{}", r.line());
            }
            let passed = results.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", results.len());
            if common.out.is_some() {
                emit_json(&results, &common.out)?;
            }
            return Ok(if passed == results.len() { 0 } else { 1 });
        }
        Command::Run { config: path } => {
            let mut cfg: ExperimentConfig = config(read_json(&path))?;
            if common.out.is_some() {
                cfg.output = common.out.clone();
                cfg.format = common.format;
            }
            let out = run(&cfg)?;
            let total: f64 = out.wall_times.iter().map(|d| d.as_secs_f64()).sum();
            for (row, wall) in out.rows.iter().zip(&out.wall_times) {
                eprintln!("{}/{}/{} a={} t={}: {:.3}s", row.distribution, row.coupling, row.cost_form, row.a, row.t, wall.as_secs_f64());
            }
            eprintln!("{} cells, {:.3}s cell time", out.rows.len(), total);
            emit_rows(&out.rows, &Common { out: cfg.output.clone(), format: cfg.format, ..common })?;
        }
        Command::Plot { kind, results } => {
            let kind: PlotKind = config(kind.parse())?;
            let rows = match &results {
                Some(p) => config(read_rows(p))?,
                None if kind == PlotKind::FAlpha => Vec::new(),
                None => return Err(Failure::Config(anyhow::anyhow!("--results is required for this kind"))),
            };
            emit_json(&emit_plot_data(&rows, kind), &common.out)?;
        }
    }
    Ok(0)
}

fn couple(cmd: CoupleCmd, common: &Common) -> Outcome<()> {
    match cmd {
        CoupleCmd::Sample { pair: p, coupling } => {
            let (f, g) = pair(&p)?;
            let c = pair_coupling(&coupling)?;
            #[derive(Serialize)]
            struct Row {
                x: f64,
                y: f64,
            }
            let rows: Vec<Row> =
                pair_samples(&f, &g, c, replicas(common)?, common.seed, 0)?.into_iter().map(|s| Row { x: s.x, y: s.y }).collect();
            emit_rows(&rows, common)
        }
        CoupleCmd::Band { pair: p, c } => {
            let (f, g) = pair(&p)?;
            let exact = band_payoff(&f, &g, c)?;
            #[derive(Serialize)]
            struct Row {
                coupling: &'static str,
                exact: f64,
                mean: f64,
                std_error: f64,
                replicas: u64,
                seed: u64,
            }
            let n = replicas(common)?;
            let mut rows = Vec::new();
            for (cell, coupling) in PairCoupling::ALL.into_iter().enumerate() {
                match band_payoff_mc(&f, &g, coupling, c, n, common.seed, cell as u64) {
                    Ok((mean, std_error)) => {
                        rows.push(Row { coupling: coupling.name(), exact, mean, std_error, replicas: n, seed: common.seed })
                    }
                    Err(e) => eprintln!("skipping {}: {e}", coupling.name()),
                }
            }
            let dec = Decomposition::new(&f, &g)?;
            eprintln!("decomposition: {}", serde_json::to_string(&DecompositionSummary::from(&dec)).unwrap_or_default());
            emit_rows(&rows, common)
        }
        CoupleCmd::Psi { law: l, a, c } => {
            let f = law(&l.law)?;
            #[derive(Serialize)]
            struct Out {
                a: f64,
                c: f64,
                psi: f64,
            }
            emit_json(&Out { a, c, psi: psi(&f, a, c)? }, &common.out)
        }
    }
}

fn levy(cmd: LevyCmd, common: &Common) -> Outcome<()> {
    match cmd {
        LevyCmd::Simulate { spec, coupling, grid } => {
            let spec = levy_spec(&spec.spec)?;
            let kind = config(parse_coupling(&coupling))?;
            if grid == 0 {
                return Err(Failure::Config(anyhow::anyhow!("--grid must be at least 1")));
            }
            let path = simulate_paths(&spec, kind, 1, common.seed, 0)?.remove(0);
            let times: Vec<f64> = (0..=grid).map(|i| spec.horizon * i as f64 / grid as f64).collect();
            #[derive(Serialize)]
            struct Row {
                t: f64,
                x: f64,
                y: f64,
            }
            let rows: Vec<Row> = path.on_grid(&times).into_iter().map(|(t, x, y)| Row { t, x, y }).collect();
            if let Some(c) = path.coalesced_at {
                eprintln!("coalesced at t={c}");
            }
            emit_rows(&rows, common)
        }
        LevyCmd::Compare { spec, cost: costs, coupling } => {
            let spec = levy_spec(&spec.spec)?;
            let explicit = !coupling.is_empty();
            let kinds = if explicit {
                coupling.iter().map(|c| config(parse_coupling(c))).collect::<Outcome<Vec<_>>>()?
            } else {
                CouplingKind::ALL.to_vec()
            };
            let costs = costs.iter().map(|c| cost(c)).collect::<Outcome<Vec<_>>>()?;
            let n = replicas(common)?;
            let mut rows = Vec::new();
            let mut cell = 0;
            for (label, c) in &costs {
                for &kind in &kinds {
                    let est = estimate_cost(&spec, kind, c, n, common.seed, cell);
                    cell += 1;
                    let (mean, std_error) = match est {
                        Ok(v) => v,
                        Err(e) if !explicit && kind == CouplingKind::Reflection => {
                            eprintln!("skipping reflection: {e}");
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    rows.push(CellRow {
                        coupling: kind.name().into(),
                        cost_form: label.clone(),
                        t: spec.horizon,
                        a: spec.separation(),
                        mean,
                        std_error,
                        replicas: n,
                        seed: common.seed,
                    });
                }
            }
            emit_rows(&rows, common)
        }
        LevyCmd::Check { spec, kind, coupling, cost: c, times } => {
            let spec = levy_spec(&spec.spec)?;
            let coupling = config(parse_coupling(&coupling))?;
            let n = replicas(common)?;
            match kind.as_str() {
                "marginals" => emit_json(&marginal_law_check(&spec, coupling, n, common.seed)?, &common.out),
                "uniformization" => emit_json(&uniformization_check(&spec, coupling, n, common.seed)?, &common.out),
                "conditional" => {
                    let (_, c) = cost(c.as_deref().unwrap_or(r#"{"kind":"bounded_exp"}"#))?;
                    emit_json(&conditional_count_check(&spec, &c, n, common.seed)?, &common.out)
                }
                "coalescence" => {
                    let pts = coalescence_vs_tv(&spec, &times, n, common.seed)?;
                    for p in &pts {
                        eprintln!("t={}: survival {:.4} +- {:.4}, tv {:.4}", p.t, p.survival, p.std_error, p.tv);
                    }
                    let rows = survival_rows(&spec.jump_law_label(), spec.separation(), &pts, n, common.seed);
                    emit_rows(&rows, common)
                }
                other => Err(Failure::Config(anyhow::anyhow!("unknown check `{other}`"))),
            }
        }
    }
}

trait Label {
    fn jump_law_label(&self) -> String;
}

impl Label for CompoundPoissonSpec {
    fn jump_law_label(&self) -> String {
        match self.jump_law.lattice_spacing() {
            Some(h) => format!("lattice(h={h},rate={})", self.rate),
            None => format!("rate={}", self.rate),
        }
    }
}

fn oracle(cmd: OracleCmd, common: &Common) -> Outcome<()> {
    match cmd {
        OracleCmd::Verify { law: l, a, cost: c, atoms } => {
            let f = law(&l.law)?;
            let (label, c) = cost(&c)?;
            let r = verify_amr_optimal(&f, a, &c, atoms)?;
            #[derive(Serialize)]
            struct Out {
                cost: String,
                a: f64,
                n_atoms: usize,
                lp_value: f64,
                amr_value: f64,
                relative_gap: f64,
                min_reduced_cost: f64,
            }
            emit_json(
                &Out {
                    cost: label,
                    a,
                    n_atoms: r.n_atoms,
                    lp_value: r.lp_value,
                    amr_value: r.amr_value,
                    relative_gap: r.relative_gap,
                    min_reduced_cost: r.min_reduced_cost,
                },
                &common.out,
            )
        }
        OracleCmd::TwoPoint { gamma, alpha } => {
            #[derive(Serialize)]
            struct Point {
                gamma: f64,
                alpha: f64,
                f: f64,
                preferred: String,
                lp_plan: String,
                lp_value: f64,
            }
            #[derive(Serialize)]
            struct Root {
                gamma: f64,
                root: f64,
                lp_switch: f64,
            }
            #[derive(Serialize)]
            struct Table {
                roots: Vec<Root>,
                infimum: f64,
                limit: f64,
            }
            match (gamma, alpha) {
                (Some(g), Some(a)) => {
                    let (f, plan) = two_point_example(g, a)?;
                    let (lp, lp_plan) = two_point_lp(g, a)?;
                    emit_json(
                        &Point {
                            gamma: g,
                            alpha: a,
                            f,
                            preferred: format!("{plan:?}"),
                            lp_plan: format!("{lp_plan:?}"),
                            lp_value: lp.value,
                        },
                        &common.out,
                    )
                }
                (Some(g), None) => emit_json(&Root { gamma: g, root: two_point_root(g)?, lp_switch: two_point_lp_switch(g)? }, &common.out),
                (None, Some(_)) => Err(Failure::Config(anyhow::anyhow!("--alpha needs --gamma"))),
                (None, None) => {
                    let roots = (1..=99)
                        .map(|k| {
                            let gamma = k as f64 / 100.0;
                            Ok(Root { gamma, root: two_point_root(gamma)?, lp_switch: two_point_lp_switch(gamma)? })
                        })
                        .collect::<Outcome<Vec<_>>>()?;
                    let infimum = roots.iter().map(|r| r.root).fold(f64::INFINITY, f64::min);
                    emit_json(&Table { roots, infimum, limit: two_point_limit_root() }, &common.out)
                }
            }
        }
    }
}
