//! Prevalence against δ: ODE limit, polynomial root and both expansions.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{far_prevalence, near_prevalence, solve_by_ode, solve_endemic};
use crate::error::{Result, ScpwError};
use crate::model::derive_params;
use crate::moments::DegreeMoments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl std::str::FromStr for Spacing {
    type Err = ScpwError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(ScpwError::UnknownStrategy {
                kind: "spacing",
                name: other.to_string(),
            }),
        }
    }
}

pub fn delta_grid(min: f64, max: f64, steps: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && min.is_finite() && max.is_finite()) {
        return Err(ScpwError::InvalidParameter(format!(
            "sweep needs 0 < delta-min < delta-max, got [{min}, {max}]"
        )));
    }
    if steps < 2 {
        return Err(ScpwError::InvalidParameter(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let f = i as f64 / last;
            match spacing {
                Spacing::Linear => min + (max - min) * f,
                Spacing::Log => (min.ln() + (max.ln() - min.ln()) * f).exp(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub eta: f64,
    pub eps: f64,
    pub w_ode: f64,
    pub w_poly: f64,
    /// Absent at and below threshold.
    pub w_near: Option<f64>,
    pub w_far: Option<f64>,
}

pub fn sweep_row(m: &DegreeMoments, delta: f64) -> Result<SweepRow> {
    let p = derive_params(m, delta)?;
    let base = SweepRow {
        delta,
        eta: p.eta(),
        eps: p.eps(),
        w_ode: 0.0,
        w_poly: 0.0,
        w_near: None,
        w_far: None,
    };
    if delta <= p.delta_c + crate::threshold::CRITICAL_BAND {
        return Ok(base);
    }
    let poly = solve_endemic(&p)?;
    let ode = solve_by_ode(&p)?;
    Ok(SweepRow {
        w_ode: ode.w_star,
        w_poly: poly.w_star,
        w_near: near_prevalence(&p).ok(),
        w_far: far_prevalence(&p).ok(),
        ..base
    })
}

/// Rows in the order of `deltas`, computed in parallel.
pub fn bifurcation_sweep(m: &DegreeMoments, deltas: &[f64]) -> Result<Vec<SweepRow>> {
    deltas.par_iter().map(|&d| sweep_row(m, d)).collect()
}

pub const CSV_HEADER: &str = "delta,eta,eps,w_ode,w_poly,w_near,w_far";

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.delta,
            r.eta,
            r.eps,
            r.w_ode,
            r.w_poly,
            opt(r.w_near),
            opt(r.w_far)
        )?;
    }
    Ok(())
}
