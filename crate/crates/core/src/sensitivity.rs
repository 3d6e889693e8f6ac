//! Sensitivity of the asymptotic prevalence to the three degree moments,
//! in closed form, plus heatmap grids over a ⟨k³⟩ slice of the feasible wedge.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{far_prevalence, near_prevalence};
use crate::error::{Result, ScpwError};
use crate::model::derive_params;
use crate::moments::{check_feasibility, DegreeMoments};
use crate::threshold::epidemic_threshold;

/// Default ⟨k³⟩ slices for heatmaps.
pub const DEFAULT_SLICES: [f64; 3] = [20.0, 100.0, 400.0];
/// Default δ for the far regime.
pub const DEFAULT_FAR_DELTA: f64 = 1.5;
/// Relative margin a cell must clear on both inequalities to count as interior.
pub const INTERIOR_MARGIN: f64 = 1e-6;

pub type Partials = [f64; 3];

/// Near threshold (δ → δ_c⁺): (−⟨k²⟩/D, ⟨k⟩/D, 0) with D = ⟨k⟩ − 2⟨k²⟩ + ⟨k³⟩.
pub fn near_partials(m: &DegreeMoments) -> Result<Partials> {
    let d = m.k1 - 2.0 * m.k2 + m.k3;
    if d == 0.0 {
        return Err(ScpwError::ZeroDenominator {
            what: "k1 - 2 k2 + k3",
            value: d,
        });
    }
    Ok([-m.k2 / d, m.k1 / d, 0.0])
}

/// Far from threshold, each partial carries an explicit 1/δ.
pub fn far_partials(m: &DegreeMoments, delta: f64) -> Result<Partials> {
    if !(delta > 0.0) {
        return Err(ScpwError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let (k1, k2, k3) = (m.k1, m.k2, m.k3);
    let g = k2 * k2 - k3 * k1;
    let den = g * g * delta;
    if den == 0.0 {
        return Err(ScpwError::ZeroDenominator {
            what: "(k2^2 - k3 k1)^2",
            value: g * g,
        });
    }
    let n1 = k3 * k3 + 3.0 * k1 * k1 * k2 * k2 - 2.0 * (k1 * k1 * k1 * k3 + k2 * k2 * k2);
    let n2 = -2.0 * (k1 * k1 - k2) * (k1 * k2 - k3);
    let n3 = (k1 * k1 - k2).powi(2);
    Ok([n1 / den, n2 / den, n3 / den])
}

/// A regime of the asymptotic analysis: its closed-form partials and the
/// prevalence formula they differentiate.
pub trait SensitivityRegime: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether `delta` enters the partials.
    fn uses_delta(&self) -> bool;
    fn partials(&self, m: &DegreeMoments, delta: f64) -> Result<Partials>;
    /// The asymptotic w* as a function of the moments at fixed δ.
    fn prevalence(&self, m: &DegreeMoments, delta: f64) -> Result<f64>;
    /// δ at which the partials are meant to be compared with differences of
    /// [`SensitivityRegime::prevalence`] around `m`.
    fn reference_delta(&self, m: &DegreeMoments, delta: f64) -> Result<f64>;
}

struct Near;
struct Far;

impl SensitivityRegime for Near {
    fn name(&self) -> &'static str {
        "near"
    }
    fn uses_delta(&self) -> bool {
        false
    }
    fn partials(&self, m: &DegreeMoments, _delta: f64) -> Result<Partials> {
        near_partials(m)
    }
    fn prevalence(&self, m: &DegreeMoments, delta: f64) -> Result<f64> {
        near_prevalence(&derive_params(m, delta)?)
    }
    /// The partials hold at δ = δ_c, where w* itself vanishes.
    fn reference_delta(&self, m: &DegreeMoments, _delta: f64) -> Result<f64> {
        epidemic_threshold(m)
    }
}

impl SensitivityRegime for Far {
    fn name(&self) -> &'static str {
        "far"
    }
    fn uses_delta(&self) -> bool {
        true
    }
    fn partials(&self, m: &DegreeMoments, delta: f64) -> Result<Partials> {
        far_partials(m, delta)
    }
    fn prevalence(&self, m: &DegreeMoments, delta: f64) -> Result<f64> {
        far_prevalence(&derive_params(m, delta)?)
    }
    fn reference_delta(&self, _m: &DegreeMoments, delta: f64) -> Result<f64> {
        Ok(delta)
    }
}

pub fn sensitivity_regimes() -> Vec<Box<dyn SensitivityRegime>> {
    vec![Box::new(Near), Box::new(Far)]
}

pub fn sensitivity_regime(name: &str) -> Result<Box<dyn SensitivityRegime>> {
    sensitivity_regimes()
        .into_iter()
        .find(|r| r.name() == name)
        .ok_or_else(|| ScpwError::UnknownStrategy {
            kind: "sensitivity regime",
            name: name.to_string(),
        })
}

/// Central differences of the regime's prevalence formula, step `rel_h`
/// times each moment.
pub fn finite_difference_partials(
    regime: &dyn SensitivityRegime,
    m: &DegreeMoments,
    delta: f64,
    rel_h: f64,
) -> Result<Partials> {
    let d = regime.reference_delta(m, delta)?;
    let base = [m.k1, m.k2, m.k3];
    let mut out = [0.0; 3];
    for i in 0..3 {
        let h = rel_h * base[i];
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        let fp = regime.prevalence(&DegreeMoments::new(plus[0], plus[1], plus[2])?, d)?;
        let fm = regime.prevalence(&DegreeMoments::new(minus[0], minus[1], minus[2])?, d)?;
        out[i] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub k1: f64,
    pub k2: f64,
    pub feasible: bool,
    /// Strictly inside both inequalities by [`INTERIOR_MARGIN`].
    pub interior: bool,
    pub d_k1: Option<f64>,
    pub d_k2: Option<f64>,
    pub d_k3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub regime: String,
    pub k3_slice: f64,
    pub delta: Option<f64>,
    pub cells: Vec<GridCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub resolution: usize,
}

impl GridSpec {
    /// Ranges that enclose the whole feasible wedge of the slice:
    /// k1 ≤ k3^{1/3} and k2 ≤ k3^{2/3} there.
    pub fn covering(k3: f64, resolution: usize) -> Self {
        Self {
            k1_range: (1.0, k3.cbrt()),
            k2_range: (1.0, k3.cbrt().powi(2)),
            resolution,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluates one cell; partials only on the feasible set.
pub fn evaluate_cell(regime: &dyn SensitivityRegime, k1: f64, k2: f64, k3: f64, delta: f64) -> GridCell {
    let empty = GridCell {
        k1,
        k2,
        feasible: false,
        interior: false,
        d_k1: None,
        d_k2: None,
        d_k3: None,
    };
    let Ok(m) = DegreeMoments::new(k1, k2, k3) else {
        return empty;
    };
    let report = check_feasibility(&m);
    if !report.ok() {
        return empty;
    }
    let interior = report.strictly_inside(&m, INTERIOR_MARGIN);
    match regime.partials(&m, delta) {
        Ok([a, b, c]) => GridCell {
            feasible: true,
            interior,
            d_k1: Some(a),
            d_k2: Some(b),
            d_k3: Some(c),
            ..empty
        },
        Err(e) => {
            log::debug!("no partials at ({k1}, {k2}, {k3}): {e}");
            GridCell {
                feasible: true,
                interior,
                ..empty
            }
        }
    }
}

/// Row-major grid: k2 varies slowest, k1 fastest.
pub fn sensitivity_grid(
    regime: &dyn SensitivityRegime,
    k3_slice: f64,
    spec: &GridSpec,
    delta: f64,
) -> Result<SensitivityGrid> {
    let (a, b) = spec.k1_range;
    let (c, d) = spec.k2_range;
    if !(a > 0.0 && b >= a && c > 0.0 && d >= c && k3_slice > 0.0) || spec.resolution == 0 {
        return Err(ScpwError::InvalidParameter(
            "grid ranges and k3 must be positive and ordered, resolution at least 1".into(),
        ));
    }
    if regime.uses_delta() && !(delta > 0.0) {
        return Err(ScpwError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let k1s = linspace(a, b, spec.resolution);
    let k2s = linspace(c, d, spec.resolution);
    let points: Vec<(f64, f64)> = k2s.iter().flat_map(|&k2| k1s.iter().map(move |&k1| (k1, k2))).collect();
    let cells = points
        .par_iter()
        .map(|&(k1, k2)| evaluate_cell(regime, k1, k2, k3_slice, delta))
        .collect();
    Ok(SensitivityGrid {
        regime: regime.name().to_string(),
        k3_slice,
        delta: regime.uses_delta().then_some(delta),
        cells,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: &str = "k1,k2,k3,regime,delta,feasible,d_k1,d_k2,d_k3";

impl SensitivityGrid {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for c in &self.cells {
            write_row(&mut out, c, self.k3_slice, &self.regime, self.delta)?;
        }
        Ok(())
    }
}

pub fn write_row(out: &mut impl Write, c: &GridCell, k3: f64, regime: &str, delta: Option<f64>) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        c.k1,
        c.k2,
        k3,
        regime,
        opt(delta),
        c.feasible,
        opt(c.d_k1),
        opt(c.d_k2),
        opt(c.d_k3)
    )?;
    Ok(())
}
