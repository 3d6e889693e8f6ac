//! Argument groups shared by several subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use scpw_core::moments::{
    moments_from_bimodal, moments_from_poisson, moments_from_sequence, read_degree_file, DegreeMoments,
};
use scpw_core::netsim::DegreeSource;
use scpw_core::sweep::{delta_grid, Spacing};
use scpw_core::{Result, ScpwError};

fn parse_list<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple(pub [f64; 3]);

pub fn parse_triple(s: &str) -> std::result::Result<Triple, String> {
    parse_list::<3>(s).map(Triple)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bimodal(pub [u64; 4]);

fn parse_bimodal(s: &str) -> std::result::Result<Bimodal, String> {
    let v = parse_list::<4>(s)?;
    let mut out = [0u64; 4];
    for (o, x) in out.iter_mut().zip(v) {
        if x < 0.0 || x.fract() != 0.0 {
            return Err(format!("bimodal entries must be nonnegative integers, got {x}"));
        }
        *o = x as u64;
    }
    Ok(Bimodal(out))
}

/// Exactly one way of specifying the degree distribution.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct MomentsSource {
    /// Raw moments <k>,<k^2>,<k^3>.
    #[arg(long, value_name = "K1,K2,K3", value_parser = parse_triple, allow_hyphen_values = true)]
    pub moments: Option<Triple>,
    /// Degree sequence file, one degree per line.
    #[arg(long, value_name = "FILE")]
    pub degrees: Option<PathBuf>,
    /// Poisson degree distribution with this mean.
    #[arg(long, value_name = "MEAN", allow_hyphen_values = true)]
    pub poisson: Option<f64>,
    /// nA nodes of degree kA and nB of degree kB.
    #[arg(long, value_name = "KA,NA,KB,NB", value_parser = parse_bimodal)]
    pub bimodal: Option<Bimodal>,
}

fn read_degrees(path: &Path) -> Result<Vec<u64>> {
    read_degree_file(path).map_err(|e| match e {
        ScpwError::Io(msg) => ScpwError::InvalidParameter(format!("cannot read {}: {msg}", path.display())),
        other => other,
    })
}

impl MomentsSource {
    pub fn moments(&self) -> Result<DegreeMoments> {
        if let Some(Triple([a, b, c])) = self.moments {
            return DegreeMoments::new(a, b, c);
        }
        if let Some(path) = &self.degrees {
            return moments_from_sequence(&read_degrees(path)?);
        }
        if let Some(mean) = self.poisson {
            return moments_from_poisson(mean);
        }
        if let Some(Bimodal([ka, na, kb, nb])) = self.bimodal {
            return moments_from_bimodal(ka, na, kb, nb);
        }
        unreachable!("clap requires one moments source")
    }

    /// Degree sequences for the network simulator. Inline moments do not
    /// determine one.
    pub fn degree_source(&self, nodes: usize) -> Result<DegreeSource> {
        if self.moments.is_some() {
            return Err(ScpwError::InvalidParameter(
                "a network needs --degrees, --poisson or --bimodal; --moments fixes no degree sequence".into(),
            ));
        }
        if let Some(path) = &self.degrees {
            let seq = read_degrees(path)?;
            return Ok(DegreeSource::Sequence(seq.into_iter().map(|d| d as usize).collect()));
        }
        if let Some(mean) = self.poisson {
            // Validates the mean before any network is drawn.
            moments_from_poisson(mean)?;
            return Ok(DegreeSource::Poisson { n: nodes, mean });
        }
        if let Some(Bimodal([ka, na, kb, nb])) = self.bimodal {
            return Ok(DegreeSource::Bimodal {
                k_a: ka as usize,
                n_a: na as usize,
                k_b: kb as usize,
                n_b: nb as usize,
            });
        }
        unreachable!("clap requires one moments source")
    }
}

/// Either explicit δ values or an evenly spaced sweep.
#[derive(Debug, Clone, Args)]
pub struct DeltaArgs {
    /// Explicit δ values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["delta_min", "delta_max"], allow_hyphen_values = true)]
    pub delta: Vec<f64>,
    #[arg(long, requires = "delta_max", allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    #[arg(long, requires = "delta_min", allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long, default_value_t = 96)]
    pub steps: usize,
    #[arg(long, default_value = "linear")]
    pub spacing: Spacing,
}

impl DeltaArgs {
    /// The requested δ values, possibly empty.
    pub fn values(&self) -> Result<Vec<f64>> {
        match (self.delta_min, self.delta_max) {
            (Some(lo), Some(hi)) => delta_grid(lo, hi, self.steps, self.spacing),
            _ => {
                if let Some(&d) = self.delta.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
                    return Err(ScpwError::InvalidParameter(format!("delta must be positive, got {d}")));
                }
                Ok(self.delta.clone())
            }
        }
    }
}
