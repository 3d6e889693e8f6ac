use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gillespie::{run_sis, QuasiSteady};
use super::{bimodal_degree_sequence, poisson_degree_sequence, sample_configuration_model, InitialInfected};
use crate::error::{Result, ScpwError};

/// Independent seed for item `index` of a run family: the first word of
/// ChaCha8 stream `index` under key `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Where each run's degree sequence comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeSource {
    /// Fresh i.i.d. Poisson degrees per run.
    Poisson { n: usize, mean: f64 },
    Bimodal { k_a: usize, n_a: usize, k_b: usize, n_b: usize },
    Sequence(Vec<usize>),
}

impl DegreeSource {
    /// The degree sequence for one run. Only `Poisson` uses the seed.
    pub fn sequence(&self, seed: u64) -> Result<Vec<usize>> {
        match self {
            DegreeSource::Poisson { n, mean } => poisson_degree_sequence(*n, *mean, seed),
            DegreeSource::Bimodal { k_a, n_a, k_b, n_b } => Ok(bimodal_degree_sequence(*k_a, *n_a, *k_b, *n_b)),
            DegreeSource::Sequence(s) => Ok(s.clone()),
        }
    }
}

/// Ensemble of SIS runs with γ = 1 and τ = δ, so time is in units of 1/γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub source: DegreeSource,
    pub delta: f64,
    pub runs: usize,
    pub master_seed: u64,
    pub t_max: f64,
    pub burn_in_fraction: f64,
    /// Fraction of nodes infected at t = 0 (at least one node).
    pub initial_fraction: f64,
}

impl EnsembleConfig {
    pub fn new(source: DegreeSource, delta: f64, runs: usize, master_seed: u64) -> Self {
        Self {
            source,
            delta,
            runs,
            master_seed,
            t_max: 200.0,
            burn_in_fraction: super::DEFAULT_BURN_IN,
            initial_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub network_seed: u64,
    pub sim_seed: u64,
    pub extinct: bool,
    pub t_extinct: Option<f64>,
    /// `None` when the run died out before the burn-in ended.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub delta: f64,
    pub runs: usize,
    /// Mean of per-run quasi-steady prevalences over surviving runs.
    pub mean: Option<f64>,
    /// Sample standard deviation of those per-run means.
    pub sd: Option<f64>,
    pub extinct_count: usize,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

fn one_run(cfg: &EnsembleConfig, index: usize) -> Result<RunRecord> {
    let network_seed = derive_seed(cfg.master_seed, 2 * index as u64);
    let sim_seed = derive_seed(cfg.master_seed, 2 * index as u64 + 1);
    let seq = cfg.source.sequence(network_seed)?;
    let net = sample_configuration_model(&seq, network_seed)?;
    let seeds = ((cfg.initial_fraction * net.n as f64).round() as usize).clamp(1, net.n);
    let t_burn = cfg.burn_in_fraction * cfg.t_max;
    let nf = net.n as f64;
    let mut acc = QuasiSteady::new(t_burn, cfg.t_max, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(sim_seed);
    let t_extinct = run_sis(
        &net,
        cfg.delta,
        1.0,
        &InitialInfected::Count(seeds),
        cfg.t_max,
        &mut rng,
        |t, i| acc.push(t, i as f64 / nf),
    )?;
    let survived_burn_in = t_extinct.is_none_or(|te| te > t_burn);
    let (mean, sd) = if survived_burn_in {
        let (m, s) = acc.finish();
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    Ok(RunRecord {
        index,
        network_seed,
        sim_seed,
        extinct: t_extinct.is_some(),
        t_extinct,
        mean,
        sd,
    })
}

/// Runs the ensemble in parallel; the result is independent of thread count.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    if cfg.runs == 0 {
        return Err(ScpwError::InvalidParameter("ensemble needs at least one run".into()));
    }
    if !(cfg.delta >= 0.0) {
        return Err(ScpwError::InvalidParameter(format!("delta must be nonnegative, got {}", cfg.delta)));
    }
    if !(0.0..1.0).contains(&cfg.burn_in_fraction) {
        return Err(ScpwError::InvalidParameter(format!(
            "burn-in fraction {} outside [0, 1)",
            cfg.burn_in_fraction
        )));
    }
    let records: Vec<RunRecord> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| one_run(cfg, i))
        .collect::<Result<_>>()?;
    let extinct_count = records.iter().filter(|r| r.extinct).count();
    let means: Vec<f64> = records.iter().filter_map(|r| r.mean).collect();
    let (mean, sd) = match means.len() {
        0 => (None, None),
        k => {
            let m = means.iter().sum::<f64>() / k as f64;
            let sd = if k > 1 {
                (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            (Some(m), Some(sd))
        }
    };
    Ok(EnsembleSummary {
        delta: cfg.delta,
        runs: cfg.runs,
        mean,
        sd,
        extinct_count,
        records,
    })
}
