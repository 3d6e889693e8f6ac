//! Stochastic oracle: configuration-model networks and exact SIS simulation.

mod ensemble;
mod fenwick;
mod gillespie;

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScpwError};
use crate::moments::{moments_from_sequence, DegreeMoments};

pub use ensemble::{derive_seed, run_ensemble, DegreeSource, EnsembleConfig, EnsembleSummary, RunRecord};
pub use gillespie::{gillespie_sis, quasi_steady_prevalence, InitialInfected, SimOutcome, DEFAULT_BURN_IN};

/// Simple undirected graph with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub n: usize,
    pub adjacency: Vec<Vec<u32>>,
    pub degree_sequence: Vec<usize>,
}

impl Network {
    /// Builds a simple graph from an edge list, dropping self-loops and
    /// repeated edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(ScpwError::InvalidParameter(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a != b {
                adjacency[a].push(b as u32);
                adjacency[b].push(a as u32);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let degree_sequence = adjacency.iter().map(Vec::len).collect();
        Ok(Self {
            n,
            adjacency,
            degree_sequence,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.degree_sequence.iter().sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().map(move |&b| (a, b as usize)).filter(|(a, b)| a < b))
    }

    pub fn realized_moments(&self) -> Result<DegreeMoments> {
        let seq: Vec<u64> = self.degree_sequence.iter().map(|&d| d as u64).collect();
        moments_from_sequence(&seq)
    }

    /// One edge per line, `a b`.
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    /// Reads an edge list. Node count is one past the largest index unless
    /// `n` is given.
    pub fn read_edge_list(reader: impl BufRead, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut it = t.split_whitespace();
            let mut next = || -> Result<usize> {
                let tok = it.next().ok_or_else(|| ScpwError::Parse {
                    line: i + 1,
                    message: "expected two node indices".into(),
                })?;
                tok.parse().map_err(|_| ScpwError::Parse {
                    line: i + 1,
                    message: format!("'{tok}' is not a node index"),
                })
            };
            let a = next()?;
            let b = next()?;
            edges.push((a, b));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
        Self::from_edges(n, edges)
    }

    pub fn read_edge_file(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_edge_list(std::io::BufReader::new(f), n)
    }
}

/// Erased configuration model: stubs are shuffled and paired, then
/// self-loops and repeated edges are deleted.
pub fn sample_configuration_model(degree_seq: &[usize], seed: u64) -> Result<Network> {
    let n = degree_seq.len();
    let stubs_total: u64 = degree_seq.iter().map(|&d| d as u64).sum();
    if stubs_total % 2 == 1 {
        return Err(ScpwError::OddStubSum(stubs_total));
    }
    if let Some((node, &degree)) = degree_seq.iter().enumerate().find(|(_, &d)| d >= n) {
        return Err(ScpwError::DegreeTooLarge { node, degree, n });
    }
    let mut stubs: Vec<u32> = Vec::with_capacity(stubs_total as usize);
    for (i, &d) in degree_seq.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(i as u32, d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stubs.shuffle(&mut rng);
    let mut seen = HashSet::with_capacity(stubs.len() / 2);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    let mut erased = 0usize;
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a == b || !seen.insert((a, b)) {
            erased += 1;
            continue;
        }
        edges.push((a as usize, b as usize));
    }
    log::debug!("configuration model: {} edges kept, {erased} erased", edges.len());
    Network::from_edges(n, edges)
}

/// i.i.d. Poisson degrees, conditioned on an even sum and max degree < n by
/// redrawing single nodes.
pub fn poisson_degree_sequence(n: usize, mean: f64, seed: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(ScpwError::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    let dist = Poisson::new(mean)
        .map_err(|e| ScpwError::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let d = dist.sample(rng) as usize;
        if d < n {
            break d;
        }
    };
    let mut seq: Vec<usize> = (0..n).map(|_| draw(&mut rng)).collect();
    while seq.iter().sum::<usize>() % 2 == 1 {
        let i = rng.random_range(0..n);
        seq[i] = draw(&mut rng);
    }
    Ok(seq)
}

/// `n_a` nodes of degree `k_a` followed by `n_b` of degree `k_b`.
pub fn bimodal_degree_sequence(k_a: usize, n_a: usize, k_b: usize, n_b: usize) -> Vec<usize> {
    let mut seq = vec![k_a; n_a];
    seq.extend(std::iter::repeat_n(k_b, n_b));
    seq
}
