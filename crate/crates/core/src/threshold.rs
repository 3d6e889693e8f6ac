//! Linear stability of the disease-free equilibrium, the epidemic threshold
//! and the transcritical bifurcation coefficients.
//!
//! The reduced system uses coordinates `(w, x, z)`, all zero at the DFE.
//! Its Jacobian there is block upper-triangular: `-1` on the `w` row and a
//! 2×2 block `B` on `(x, z)` whose determinant changes sign at δ_c.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScpwError};
use crate::model::{closure_constants, ScpwParams};
use crate::moments::{check_feasibility, DegreeMoments};

/// Half-width of the band around δ_c classified as critical.
pub const CRITICAL_BAND: f64 = 1e-12;

pub type Mat3 = [[f64; 3]; 3];

/// δ_c = ⟨k⟩ / (⟨k²⟩ − ⟨k⟩). Needs no closure constants, so regular networks work too.
pub fn epidemic_threshold(m: &DegreeMoments) -> Result<f64> {
    let gap = m.k2 - m.k1;
    if !(gap > 0.0) {
        return Err(ScpwError::InvalidMoments(format!(
            "k2 = {} must exceed k1 = {} for a finite threshold",
            m.k2, m.k1
        )));
    }
    Ok(m.k1 / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfeLinearization {
    pub delta: f64,
    pub jacobian: Mat3,
    /// Sorted descending.
    pub eigenvalues: [f64; 3],
    pub trace_b: f64,
    pub det_b: f64,
    pub discriminant_b: f64,
}

impl DfeLinearization {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Linearization from (⟨k⟩, k̄, δ) alone. The (x, x) entry uses α/⟨k⟩ + β = k̄.
fn linearize(k1: f64, kbar: f64, delta: f64) -> DfeLinearization {
    let b11 = kbar * delta - (delta + 1.0);
    let jacobian = [
        [-1.0, k1 * delta, 0.0],
        [0.0, b11, 1.0],
        [0.0, 2.0 * delta, -2.0],
    ];
    let trace_b = delta * (kbar - 1.0) - 3.0;
    let det_b = 2.0 * (1.0 - delta * kbar);
    let u = delta * (kbar - 1.0) + 1.0;
    let discriminant_b = u * u + 8.0 * delta;

    // Cancellation-free quadratic roots.
    let sq = discriminant_b.sqrt();
    let q = 0.5 * (trace_b + trace_b.signum() * sq);
    let (r1, r2) = if q != 0.0 { (q, det_b / q) } else { (0.5 * sq, -0.5 * sq) };
    let mut eigenvalues = [-1.0, r1, r2];
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    DfeLinearization {
        delta,
        jacobian,
        eigenvalues,
        trace_b,
        det_b,
        discriminant_b,
    }
}

pub fn dfe_linearization(p: &ScpwParams) -> DfeLinearization {
    linearize(p.k1, p.kbar, p.delta)
}

/// DFE linearization straight from moments; usable for regular networks.
pub fn dfe_linearization_from_moments(m: &DegreeMoments, delta: f64) -> DfeLinearization {
    linearize(m.k1, (m.k2 - m.k1) / m.k1, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    StableDfe,
    Critical,
    UnstableDfe,
}

pub fn stability(p: &ScpwParams) -> Stability {
    classify(p.delta, p.delta_c)
}

pub fn classify(delta: f64, delta_c: f64) -> Stability {
    let gap = delta - delta_c;
    if gap.abs() <= CRITICAL_BAND {
        Stability::Critical
    } else if gap < 0.0 {
        Stability::StableDfe
    } else {
        Stability::UnstableDfe
    }
}

/// Transcritical bifurcation coefficients at δ = δ_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCoefficients {
    /// Σ v_k w_i w_j ∂²F_k/∂x_i∂x_j at the DFE.
    pub a: f64,
    /// Σ v_k w_i ∂²F_k/∂x_i∂δ at the DFE.
    pub b: f64,
    /// Left null vector of the threshold Jacobian.
    pub left_vec: [f64; 3],
    /// Right null vector of the threshold Jacobian.
    pub right_vec: [f64; 3],
}

impl BifurcationCoefficients {
    /// Forward (supercritical) transcritical bifurcation: a stable endemic
    /// branch emerges as δ passes δ_c.
    pub fn is_forward(&self) -> bool {
        self.a < 0.0 && self.b > 0.0
    }
}

/// Jacobian of the reduced system at the DFE with δ = δ_c.
pub fn threshold_jacobian(k1: f64, delta_c: f64) -> Mat3 {
    [
        [-1.0, k1 * delta_c, 0.0],
        [0.0, -delta_c, 1.0],
        [0.0, 2.0 * delta_c, -2.0],
    ]
}

/// Null vectors of [`threshold_jacobian`]: `(left, right)`.
pub fn threshold_null_vectors(k1: f64, delta_c: f64) -> ([f64; 3], [f64; 3]) {
    ([0.0, 2.0, 1.0], [k1, 1.0 / delta_c, 1.0])
}

/// Hessians at the DFE of the x- and z-equations of the reduced system,
/// in (w, x, z) coordinates, for a given δ. The w-equation is linear.
pub fn dfe_hessians(k1: f64, alpha: f64, beta: f64, delta: f64) -> (Mat3, Mat3) {
    let c = alpha * delta / k1;
    let h2 = [
        [0.0, -c, 0.0],
        [-c, -2.0 * c - 4.0 * beta * delta, c],
        [0.0, c, 0.0],
    ];
    let h3 = [
        [0.0, 0.0, 0.0],
        [0.0, 4.0 * c + 4.0 * beta * delta, 0.0],
        [0.0, 0.0, 0.0],
    ];
    (h2, h3)
}

/// ∂J/∂δ at the DFE (independent of δ).
pub fn jacobian_delta_derivative(k1: f64, kbar: f64) -> Mat3 {
    [[0.0, k1, 0.0], [0.0, kbar - 1.0, 0.0], [0.0, 2.0, 0.0]]
}

fn quad_form(u: &[f64; 3], m: &Mat3, w: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += u[i] * m[i][j] * w[j];
        }
    }
    s
}

/// `a` in closed form from moments: −4(⟨k⟩ − 2⟨k²⟩ + ⟨k³⟩)/⟨k⟩.
pub fn a_closed_form(m: &DegreeMoments) -> f64 {
    -4.0 * (m.k1 - 2.0 * m.k2 + m.k3) / m.k1
}

/// `b` in closed form: 2/δ_c².
pub fn b_closed_form(m: &DegreeMoments) -> Result<f64> {
    let dc = epidemic_threshold(m)?;
    Ok(2.0 / (dc * dc))
}

/// Coefficients by contracting the null vectors with the Hessians and with
/// ∂J/∂δ, cross-checked against the closed forms.
pub fn bifurcation_coefficients(m: &DegreeMoments) -> Result<BifurcationCoefficients> {
    check_feasibility(m).into_result()?;
    let (alpha, beta) = closure_constants(m)?;
    let dc = epidemic_threshold(m)?;
    let kbar = (m.k2 - m.k1) / m.k1;
    let (left, right) = threshold_null_vectors(m.k1, dc);
    let (h2, h3) = dfe_hessians(m.k1, alpha, beta, dc);
    let a = left[1] * quad_form(&right, &h2, &right) + left[2] * quad_form(&right, &h3, &right);
    let b = quad_form(&left, &jacobian_delta_derivative(m.k1, kbar), &right);

    let a_cf = a_closed_form(m);
    if (a - a_cf).abs() > 1e-10 * a_cf.abs().max(1.0) {
        log::warn!("bifurcation coefficient a: contraction {a} vs closed form {a_cf}");
    }
    Ok(BifurcationCoefficients {
        a,
        b,
        left_vec: left,
        right_vec: right,
    })
}

/// Locates δ_c as the sign change of the largest DFE eigenvalue by bisection.
pub fn threshold_by_bisection(m: &DegreeMoments, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let f = |d: f64| dfe_linearization_from_moments(m, d).max_eigenvalue();
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(ScpwError::InvalidParameter(format!(
            "bracket [{lo}, {hi}] does not straddle the threshold"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvaluesAt {
    pub delta: f64,
    pub eigs: [f64; 3],
}

/// Threshold report. `a` and `b` are `None` only when they cannot be formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub delta_c: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub eigenvalues_at: Vec<EigenvaluesAt>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Builds the threshold report. Degenerate (regular) distributions get the
/// closed-form coefficients and a warning instead of an error.
pub fn threshold_report(m: &DegreeMoments, deltas: &[f64]) -> Result<ThresholdReport> {
    check_feasibility(m).into_result()?;
    let delta_c = epidemic_threshold(m)?;
    let mut warnings = Vec::new();
    let (a, b) = match bifurcation_coefficients(m) {
        Ok(c) => (c.a, c.b),
        Err(ScpwError::DegenerateVariance { variance, .. }) => {
            warnings.push(format!(
                "degenerate degree variance {variance:e}: closure constants alpha, beta undefined; \
                 coefficients from moment closed forms"
            ));
            (a_closed_form(m), b_closed_form(m)?)
        }
        Err(e) => return Err(e),
    };
    let eigenvalues_at = deltas
        .iter()
        .map(|&d| EigenvaluesAt {
            delta: d,
            eigs: dfe_linearization_from_moments(m, d).eigenvalues,
        })
        .collect();
    Ok(ThresholdReport {
        delta_c,
        a: Some(a),
        b: Some(b),
        eigenvalues_at,
        warnings,
    })
}
