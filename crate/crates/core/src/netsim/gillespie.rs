use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::fenwick::Fenwick;
use super::Network;
use crate::error::{Result, ScpwError};

/// Fraction of `t_max` discarded before averaging.
pub const DEFAULT_BURN_IN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialInfected {
    /// This many distinct nodes chosen uniformly with the run's RNG.
    Count(usize),
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Event times, starting with 0.
    pub times: Vec<f64>,
    /// Infected fraction after each event.
    pub prevalence: Vec<f64>,
    pub t_max: f64,
    /// Over the default burn-in window; `None` if extinct before it.
    pub quasi_steady_mean: Option<f64>,
    pub quasi_steady_sd: Option<f64>,
    pub seed: u64,
    pub extinct: bool,
    pub t_extinct: Option<f64>,
}

impl SimOutcome {
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "t,prevalence")?;
        for (t, p) in self.times.iter().zip(&self.prevalence) {
            writeln!(out, "{t},{p}")?;
        }
        Ok(())
    }
}

/// Time-weighted mean and variance of a piecewise-constant signal on
/// `[t_burn, t_max]`.
#[derive(Debug, Clone)]
pub(crate) struct QuasiSteady {
    t_burn: f64,
    t_max: f64,
    last_t: f64,
    last_p: f64,
    w: f64,
    s1: f64,
    s2: f64,
}

impl QuasiSteady {
    pub fn new(t_burn: f64, t_max: f64, p0: f64) -> Self {
        Self {
            t_burn,
            t_max,
            last_t: 0.0,
            last_p: p0,
            w: 0.0,
            s1: 0.0,
            s2: 0.0,
        }
    }

    fn accumulate_to(&mut self, t: f64) {
        let a = self.last_t.max(self.t_burn);
        let b = t.min(self.t_max);
        if b > a {
            let dt = b - a;
            self.w += dt;
            self.s1 += dt * self.last_p;
            self.s2 += dt * self.last_p * self.last_p;
        }
    }

    pub fn push(&mut self, t: f64, p: f64) {
        self.accumulate_to(t);
        self.last_t = t;
        self.last_p = p;
    }

    pub fn finish(mut self) -> (f64, f64) {
        self.accumulate_to(self.t_max);
        if self.w <= 0.0 {
            return (self.last_p, 0.0);
        }
        let mean = self.s1 / self.w;
        let var = (self.s2 / self.w - mean * mean).max(0.0);
        (mean, var.sqrt())
    }
}

/// Runs the exact SIS chain, calling `observe(t, infected)` after every
/// event. Returns the extinction time, if any.
pub(crate) fn run_sis(
    net: &Network,
    tau: f64,
    gamma: f64,
    initial: &InitialInfected,
    t_max: f64,
    rng: &mut ChaCha8Rng,
    mut observe: impl FnMut(f64, usize),
) -> Result<Option<f64>> {
    if !(tau >= 0.0 && gamma >= 0.0 && tau.is_finite() && gamma.is_finite()) {
        return Err(ScpwError::InvalidParameter(format!(
            "rates must be finite and nonnegative, got tau = {tau}, gamma = {gamma}"
        )));
    }
    if !(t_max > 0.0) {
        return Err(ScpwError::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    let n = net.n;
    let seeds: Vec<usize> = match initial {
        InitialInfected::Count(c) => {
            if *c > n {
                return Err(ScpwError::InvalidParameter(format!("{c} initial infected exceeds n = {n}")));
            }
            sample(rng, n, *c).into_vec()
        }
        InitialInfected::Nodes(v) => {
            if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                return Err(ScpwError::InvalidParameter(format!("initial node {bad} outside 0..{n}")));
            }
            let mut v = v.clone();
            v.sort_unstable();
            v.dedup();
            v
        }
    };

    let mut infected = vec![false; n];
    // Number of infected neighbours of every node.
    let mut pressure = vec![0i64; n];
    // Infection weights: `pressure` for susceptible nodes, 0 for infected ones.
    let mut si = Fenwick::new(n);
    let mut inf_list: Vec<u32> = Vec::with_capacity(n);

    let infect = |i: usize,
                  infected: &mut Vec<bool>,
                  pressure: &mut Vec<i64>,
                  si: &mut Fenwick,
                  inf_list: &mut Vec<u32>| {
        infected[i] = true;
        si.add(i, -pressure[i]);
        inf_list.push(i as u32);
        for &j in &net.adjacency[i] {
            let j = j as usize;
            pressure[j] += 1;
            if !infected[j] {
                si.add(j, 1);
            }
        }
    };

    for &i in &seeds {
        infect(i, &mut infected, &mut pressure, &mut si, &mut inf_list);
    }

    let mut t = 0.0;
    observe(t, inf_list.len());
    if inf_list.is_empty() {
        return Ok(Some(0.0));
    }
    loop {
        let r_inf = tau * si.total() as f64;
        let r_rec = gamma * inf_list.len() as f64;
        let total = r_inf + r_rec;
        if total <= 0.0 {
            // Absorbing: nothing can change before t_max.
            return Ok(None);
        }
        let dt = Exp::new(total).expect("positive rate").sample(rng);
        t += dt;
        if t > t_max {
            return Ok(None);
        }
        if rng.random::<f64>() * total < r_inf {
            let target = rng.random_range(0..si.total());
            let i = si.find(target);
            infect(i, &mut infected, &mut pressure, &mut si, &mut inf_list);
        } else {
            let k = rng.random_range(0..inf_list.len());
            let i = inf_list[k] as usize;
            inf_list.swap_remove(k);
            infected[i] = false;
            for &j in &net.adjacency[i] {
                let j = j as usize;
                pressure[j] -= 1;
                if !infected[j] {
                    si.add(j, -1);
                }
            }
            si.add(i, pressure[i]);
        }
        observe(t, inf_list.len());
        if inf_list.is_empty() {
            return Ok(Some(t));
        }
    }
}

/// Gillespie direct method for SIS on `net`: each S–I edge transmits at
/// rate `tau`, each infected node recovers at rate `gamma`.
pub fn gillespie_sis(
    net: &Network,
    tau: f64,
    gamma: f64,
    initial: &InitialInfected,
    t_max: f64,
    seed: u64,
) -> Result<SimOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = net.n.max(1) as f64;
    let mut times = Vec::new();
    let mut prevalence = Vec::new();
    let t_extinct = run_sis(net, tau, gamma, initial, t_max, &mut rng, |t, i| {
        times.push(t);
        prevalence.push(i as f64 / nf);
    })?;
    let mut out = SimOutcome {
        times,
        prevalence,
        t_max,
        quasi_steady_mean: None,
        quasi_steady_sd: None,
        seed,
        extinct: t_extinct.is_some(),
        t_extinct,
    };
    if let Ok((m, s)) = quasi_steady_prevalence(&out, DEFAULT_BURN_IN) {
        out.quasi_steady_mean = Some(m);
        out.quasi_steady_sd = Some(s);
    }
    Ok(out)
}

/// Time-weighted mean and standard deviation of prevalence over
/// `[burn_in_fraction · t_max, t_max]`.
pub fn quasi_steady_prevalence(out: &SimOutcome, burn_in_fraction: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(ScpwError::InvalidParameter(format!(
            "burn-in fraction {burn_in_fraction} outside [0, 1)"
        )));
    }
    let t_burn = burn_in_fraction * out.t_max;
    if let Some(te) = out.t_extinct {
        if te <= t_burn {
            return Err(ScpwError::ExtinctBeforeBurnIn {
                t_extinct: te,
                t_burn,
            });
        }
    }
    let p0 = out.prevalence.first().copied().unwrap_or(0.0);
    let mut acc = QuasiSteady::new(t_burn, out.t_max, p0);
    for (&t, &p) in out.times.iter().zip(&out.prevalence) {
        acc.push(t, p);
    }
    Ok(acc.finish())
}
