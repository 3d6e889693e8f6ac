use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use log::{info, warn};
use serde::Serialize;

use scpw_core::dynamics::{integrate, IntegratorOptions};
use scpw_core::equilibrium::{equilibrium_method, equilibrium_methods};
use scpw_core::moments::DegreeMoments;
use scpw_core::netsim::{
    derive_seed, gillespie_sis, run_ensemble, sample_configuration_model, EnsembleConfig, InitialInfected,
    RunRecord, DEFAULT_BURN_IN,
};
use scpw_core::sensitivity::{
    evaluate_cell, sensitivity_grid, sensitivity_regime, sensitivity_regimes, GridSpec, DEFAULT_FAR_DELTA,
    DEFAULT_SLICES,
};
use scpw_core::sweep::{bifurcation_sweep, write_sweep_csv};
use scpw_core::threshold::{epidemic_threshold, threshold_report, CRITICAL_BAND};
use scpw_core::{derive_params, solve_endemic, NState, ScpwError};

use crate::source::{parse_triple, DeltaArgs, MomentsSource, Triple};

/// `path` or stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn input(msg: String) -> anyhow::Error {
    ScpwError::InvalidParameter(msg).into()
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    source: MomentsSource,
    /// δ values at which to report DFE eigenvalues.
    #[command(flatten)]
    deltas: DeltaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn threshold(a: &ThresholdArgs) -> Result<()> {
    let m = a.source.moments()?;
    let report = threshold_report(&m, &a.deltas.values()?)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    write_json(&report, a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    source: MomentsSource,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Initial prevalence, spread over pairs as for a random seeding.
    #[arg(long, default_value_t = 1e-3)]
    init: f64,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    #[arg(long, default_value_t = IntegratorOptions::default().rel_tol)]
    rel_tol: f64,
    #[arg(long, default_value_t = IntegratorOptions::default().abs_tol)]
    abs_tol: f64,
    /// Trajectory CSV (T,v,w,x,y,z); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let p = derive_params(&a.source.moments()?, a.delta)?;
    let init = NState::seeded(a.init)?;
    let tr = integrate(&p, &init, a.t_end, a.rel_tol, a.abs_tol)?;
    info!(
        "{} accepted steps, terminal reason {:?}, w(T) = {}",
        tr.times.len(),
        tr.terminal_reason,
        tr.last().w
    );
    let mut out = output(a.out.as_deref())?;
    tr.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    source: MomentsSource,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// One of newton, ode, near, far.
    #[arg(long, default_value = "newton")]
    method: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn equilibrium(a: &EquilibriumArgs) -> Result<()> {
    let method = equilibrium_method(&a.method).map_err(|e| {
        let known: Vec<_> = equilibrium_methods().iter().map(|m| m.name()).collect();
        anyhow::Error::from(e).context(format!("available methods: {}", known.join(", ")))
    })?;
    let p = derive_params(&a.source.moments()?, a.delta)?;
    info!("solving with {}: {}", method.name(), method.describe());
    let sol = method.solve(&p)?;
    write_json(&sol, a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct BifurcationArgs {
    #[command(flatten)]
    source: MomentsSource,
    #[command(flatten)]
    deltas: DeltaArgs,
    /// CSV path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn bifurcation(a: &BifurcationArgs) -> Result<()> {
    let m = a.source.moments()?;
    let mut deltas = a.deltas.values()?;
    if deltas.is_empty() {
        return Err(input("bifurcation needs --delta or --delta-min/--delta-max".into()));
    }
    deltas.sort_by(f64::total_cmp);
    let rows = bifurcation_sweep(&m, &deltas)?;
    let mut out = output(a.out.as_deref())?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// near, far or all.
    #[arg(long, default_value = "all")]
    regime: String,
    /// ⟨k³⟩ slices for the heatmaps.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SLICES)]
    slices: Vec<f64>,
    /// Cells per axis.
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    /// δ for the far regime.
    #[arg(long, default_value_t = DEFAULT_FAR_DELTA, allow_hyphen_values = true)]
    delta: f64,
    /// Query a single cell instead of writing grids.
    #[arg(long, value_name = "K1,K2,K3", value_parser = parse_triple)]
    at: Option<Triple>,
    /// Output directory for grids, or JSON path for `--at`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CellReport {
    k1: f64,
    k2: f64,
    k3: f64,
    regime: String,
    delta: Option<f64>,
    feasible: bool,
    interior: bool,
    d_k1: Option<f64>,
    d_k2: Option<f64>,
    d_k3: Option<f64>,
}

pub fn sensitivity(a: &SensitivityArgs) -> Result<()> {
    let regimes = if a.regime == "all" {
        sensitivity_regimes()
    } else {
        vec![sensitivity_regime(&a.regime)?]
    };
    if let Some(Triple([k1, k2, k3])) = a.at {
        let cells: Vec<CellReport> = regimes
            .iter()
            .map(|r| {
                let c = evaluate_cell(r.as_ref(), k1, k2, k3, a.delta);
                CellReport {
                    k1,
                    k2,
                    k3,
                    regime: r.name().to_string(),
                    delta: r.uses_delta().then_some(a.delta),
                    feasible: c.feasible,
                    interior: c.interior,
                    d_k1: c.d_k1,
                    d_k2: c.d_k2,
                    d_k3: c.d_k3,
                }
            })
            .collect();
        return match cells.as_slice() {
            [one] => write_json(one, a.out.as_deref()),
            all => write_json(&all, a.out.as_deref()),
        };
    }
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for r in &regimes {
        for &k3 in &a.slices {
            let grid = sensitivity_grid(r.as_ref(), k3, &GridSpec::covering(k3, a.resolution), a.delta)?;
            let path = dir.join(format!("sensitivity_{}_k3_{}.csv", r.name(), k3));
            let mut out = output(Some(&path))?;
            grid.write_csv(&mut out)?;
            out.flush()?;
            info!("wrote {}", path.display());
            println!("{}", path.display());
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct NetsimArgs {
    #[command(flatten)]
    source: MomentsSource,
    /// Node count for --poisson.
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
    /// Transmission rate per S-I edge; recovery rate is 1.
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    /// Initially infected fraction (at least one node).
    #[arg(long, default_value_t = 0.01)]
    initial: f64,
    /// Write the sampled network as an edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Write the prevalence time series (t,prevalence).
    #[arg(long)]
    series: Option<PathBuf>,
    /// Summary JSON; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct NetsimReport {
    n: usize,
    edges: usize,
    realized_moments: DegreeMoments,
    delta: f64,
    seed: u64,
    network_seed: u64,
    sim_seed: u64,
    events: usize,
    extinct: bool,
    t_extinct: Option<f64>,
    quasi_steady_mean: Option<f64>,
    quasi_steady_sd: Option<f64>,
}

pub fn netsim(a: &NetsimArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.initial) {
        return Err(input(format!("initial fraction {} outside [0, 1]", a.initial)));
    }
    // Same seed split as run 0 of an ensemble with this master seed.
    let network_seed = derive_seed(a.seed, 0);
    let sim_seed = derive_seed(a.seed, 1);
    let seq = a.source.degree_source(a.nodes)?.sequence(network_seed)?;
    let net = sample_configuration_model(&seq, network_seed)?;
    if let Some(p) = &a.edges {
        let mut out = output(Some(p))?;
        net.write_edge_list(&mut out)?;
        out.flush()?;
    }
    let k = ((a.initial * net.n as f64).round() as usize).clamp(1, net.n.max(1));
    let sim = gillespie_sis(&net, a.delta, 1.0, &InitialInfected::Count(k), a.t_max, sim_seed)?;
    if let Some(p) = &a.series {
        let mut out = output(Some(p))?;
        sim.write_csv(&mut out)?;
        out.flush()?;
    }
    let report = NetsimReport {
        n: net.n,
        edges: net.edge_count(),
        realized_moments: net.realized_moments()?,
        delta: a.delta,
        seed: a.seed,
        network_seed,
        sim_seed,
        events: sim.times.len() - 1,
        extinct: sim.extinct,
        t_extinct: sim.t_extinct,
        quasi_steady_mean: sim.quasi_steady_mean,
        quasi_steady_sd: sim.quasi_steady_sd,
    };
    write_json(&report, a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    source: MomentsSource,
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
    #[arg(long, conflicts_with = "delta_factor", required_unless_present = "delta_factor", allow_hyphen_values = true)]
    delta: Option<f64>,
    /// δ as a multiple of the model threshold.
    #[arg(long, allow_hyphen_values = true)]
    delta_factor: Option<f64>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: f64,
    #[arg(long, default_value_t = 0.01)]
    initial: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidateReport {
    moments: DegreeMoments,
    delta: f64,
    delta_c: f64,
    /// Model prevalence; 0 at and below threshold.
    w_star: f64,
    runs: usize,
    ensemble_mean: Option<f64>,
    ensemble_sd: Option<f64>,
    /// ensemble_mean − w_star.
    gap: Option<f64>,
    extinct_count: usize,
    extinct_fraction: f64,
    t_max: f64,
    master_seed: u64,
    records: Vec<RunRecord>,
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let m = a.source.moments()?;
    let delta_c = epidemic_threshold(&m)?;
    let delta = match (a.delta, a.delta_factor) {
        (Some(d), _) => d,
        (None, Some(f)) => f * delta_c,
        (None, None) => unreachable!("clap requires --delta or --delta-factor"),
    };
    let p = derive_params(&m, delta)?;
    let w_star = if delta <= delta_c + CRITICAL_BAND {
        0.0
    } else {
        solve_endemic(&p)?.w_star
    };
    let cfg = EnsembleConfig {
        t_max: a.t_max,
        burn_in_fraction: a.burn_in,
        initial_fraction: a.initial,
        ..EnsembleConfig::new(a.source.degree_source(a.nodes)?, delta, a.runs, a.seed)
    };
    let s = run_ensemble(&cfg)?;
    let gap = s.mean.map(|mean| mean - w_star);
    match gap {
        Some(g) => info!("ensemble {:?} vs model {w_star}: gap {g}", s.mean),
        None => info!("all {} runs died out before burn-in", s.runs),
    }
    let report = ValidateReport {
        moments: m,
        delta,
        delta_c,
        w_star,
        runs: s.runs,
        ensemble_mean: s.mean,
        ensemble_sd: s.sd,
        gap,
        extinct_count: s.extinct_count,
        extinct_fraction: s.extinct_count as f64 / s.runs as f64,
        t_max: a.t_max,
        master_seed: a.seed,
        records: s.records,
    };
    write_json(&report, a.out.as_deref())
}
