//! SCPW parameter bundle, state types and right-hand sides.
//!
//! The nondimensional state is `(v, w, x, y, z)`: susceptible and infected
//! node fractions, and SI, SS, II edge counts divided by ⟨k⟩N. Time is
//! measured in units of the recovery time and `delta = tau / gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScpwError};
use crate::moments::{check_feasibility, DegreeMoments};

/// Variance floor relative to ⟨k⟩²; below it α and β are singular.
pub const VARIANCE_FLOOR_REL: f64 = 1e-9;
/// Smallest x + y at which the closure terms are evaluated.
pub const CLOSURE_FLOOR: f64 = 1e-12;
/// Components in `[-CLAMP_TOL, 0)` are clamped to zero at construction.
pub const CLAMP_TOL: f64 = 1e-12;
/// Largest conservation violation accepted (and then renormalized) at construction.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Derived nondimensional parameters for one moment triple and one `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpwParams {
    pub delta: f64,
    pub k1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_c: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub kbar: f64,
}

/// Closure constants α and β of the rewritten Q, checking the variance floor.
pub fn closure_constants(m: &DegreeMoments) -> Result<(f64, f64)> {
    let variance = m.variance();
    let floor = VARIANCE_FLOOR_REL * m.k1 * m.k1;
    if variance <= floor {
        return Err(ScpwError::DegenerateVariance { variance, floor });
    }
    let alpha = (m.k2 * m.k2 - m.k1 * m.k3) / variance;
    let beta = (m.k3 - m.k2 * m.k1) / variance - 1.0;
    Ok((alpha, beta))
}

pub fn derive_params(m: &DegreeMoments, delta: f64) -> Result<ScpwParams> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(ScpwError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    check_feasibility(m).into_result()?;
    let (alpha, beta) = closure_constants(m)?;
    let delta_c = crate::threshold::epidemic_threshold(m)?;
    Ok(ScpwParams {
        delta,
        k1: m.k1,
        alpha,
        beta,
        delta_c,
        sigma: m.k1 * delta_c,
        lambda: alpha * delta_c / m.k1,
        mu: beta * delta_c,
        kbar: (m.k2 - m.k1) / m.k1,
    })
}

impl ScpwParams {
    /// Same network, different transmission–recovery ratio.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(ScpwError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self { delta, ..*self })
    }

    /// δ_c / δ
    pub fn eps(&self) -> f64 {
        self.delta_c / self.delta
    }

    /// 1 − δ_c / δ
    pub fn eta(&self) -> f64 {
        1.0 - self.delta_c / self.delta
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }
}

/// Nondimensional state. Components are nonnegative and satisfy
/// `v + w = 1` and `2x + y + z = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NState {
    pub v: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl NState {
    /// Validates and normalizes a state: tiny negative components are
    /// clamped, conservation sums are rescaled to one.
    pub fn new(v: f64, w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let mut c = [v, w, x, y, z];
        for (name, val) in ["v", "w", "x", "y", "z"].iter().zip(c.iter_mut()) {
            if !val.is_finite() {
                return Err(ScpwError::InvalidState(format!("{name} = {val} is not finite")));
            }
            if *val < 0.0 {
                if *val >= -CLAMP_TOL {
                    *val = 0.0;
                } else {
                    return Err(ScpwError::InvalidState(format!("{name} = {val} is negative")));
                }
            }
            if *val > 1.0 + CONSERVATION_TOL {
                return Err(ScpwError::InvalidState(format!("{name} = {val} exceeds 1")));
            }
        }
        let [v, w, x, y, z] = c;
        let nodes = v + w;
        let edges = 2.0 * x + y + z;
        if (nodes - 1.0).abs() > CONSERVATION_TOL {
            return Err(ScpwError::InvalidState(format!("v + w = {nodes}, expected 1")));
        }
        if (edges - 1.0).abs() > CONSERVATION_TOL {
            return Err(ScpwError::InvalidState(format!("2x + y + z = {edges}, expected 1")));
        }
        Ok(Self::renormalized([v, w, x, y, z]))
    }

    pub(crate) fn renormalized(c: [f64; 5]) -> Self {
        let nodes = c[0] + c[1];
        let edges = 2.0 * c[2] + c[3] + c[4];
        Self {
            v: c[0] / nodes,
            w: c[1] / nodes,
            x: c[2] / edges,
            y: c[3] / edges,
            z: c[4] / edges,
        }
    }

    /// The disease-free state: every node and edge susceptible.
    pub fn dfe() -> Self {
        Self { v: 1.0, w: 0.0, x: 0.0, y: 1.0, z: 0.0 }
    }

    /// Disease-free state with a small seed of infection: a fraction `seed`
    /// of nodes infected and a fraction `seed` of edge ends in SI pairs.
    pub fn seeded(seed: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&seed) {
            return Err(ScpwError::InvalidState(format!("seed {seed} outside [0, 0.5)")));
        }
        Self::new(1.0 - seed, seed, seed, 1.0 - 2.0 * seed, 0.0)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.v, self.w, self.x, self.y, self.z]
    }

    /// |v + w − 1| and |2x + y + z − 1|.
    pub fn conservation_error(&self) -> (f64, f64) {
        (
            (self.v + self.w - 1.0).abs(),
            (2.0 * self.x + self.y + self.z - 1.0).abs(),
        )
    }
}

/// Expected counts of nodes and edges by disease state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimState {
    pub s: f64,
    pub i: f64,
    pub si: f64,
    pub ss: f64,
    pub ii: f64,
    pub n: f64,
    pub k1: f64,
}

impl DimState {
    pub fn new(s: f64, i: f64, si: f64, ss: f64, ii: f64, n: f64, k1: f64) -> Result<Self> {
        if [s, i, si, ss, ii].iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(ScpwError::InvalidState("counts must be finite and nonnegative".into()));
        }
        if n <= 0.0 || k1 <= 0.0 {
            return Err(ScpwError::InvalidState("N and k1 must be positive".into()));
        }
        let tol = CONSERVATION_TOL;
        if ((s + i) - n).abs() > tol * n {
            return Err(ScpwError::InvalidState(format!("S + I = {} differs from N = {n}", s + i)));
        }
        if ((2.0 * si + ss + ii) - k1 * n).abs() > tol * k1 * n {
            return Err(ScpwError::InvalidState("2SI + SS + II differs from k1 N".into()));
        }
        Ok(Self { s, i, si, ss, ii, n, k1 })
    }
}

pub fn nondimensionalize(s: &DimState) -> Result<NState> {
    let edges = s.k1 * s.n;
    NState::new(s.s / s.n, s.i / s.n, s.si / edges, s.ss / edges, s.ii / edges)
}

pub fn dimensionalize(s: &NState, n: f64, k1: f64) -> Result<DimState> {
    let edges = k1 * n;
    DimState::new(s.v * n, s.w * n, s.x * edges, s.y * edges, s.z * edges, n, k1)
}

/// Right-hand side on a raw component array; the integrator evaluates stage
/// states through this without constructing an [`NState`].
pub fn rhs_raw(s: &[f64; 5], p: &ScpwParams) -> Result<[f64; 5]> {
    let [v, w, x, y, z] = *s;
    let xy = x + y;
    if !(xy >= CLOSURE_FLOOR) {
        return Err(ScpwError::ClosureDenominator(xy));
    }
    let d = p.delta;
    // Shared closure factor: αδ/⟨k⟩ · v x/(x+y)² + βδ · x/(x+y).
    let g = p.alpha * d / p.k1 * v * x / (xy * xy) + p.beta * d * x / xy;
    let infection = p.k1 * d * x;
    Ok([
        w - infection,
        infection - w,
        z - (d + 1.0) * x + (y - x) * g,
        2.0 * x - 2.0 * y * g,
        -2.0 * z + 2.0 * d * x + 2.0 * x * g,
    ])
}

pub fn rhs_nondim(s: &NState, p: &ScpwParams) -> Result<[f64; 5]> {
    rhs_raw(&s.as_array(), p)
}

/// Q in the rewritten form αS/(SI+SS)² + β/(SI+SS).
pub fn q_closure(s: &DimState, alpha: f64, beta: f64) -> Result<f64> {
    let sus = s.si + s.ss;
    if !(sus > 0.0) {
        return Err(ScpwError::ClosureDenominator(sus));
    }
    Ok(alpha * s.s / (sus * sus) + beta / sus)
}

/// Q in its original form through the mean susceptible degree n_S = (SI+SS)/S.
pub fn q_closure_original(s: &DimState, m: &DegreeMoments) -> Result<f64> {
    if !(s.s > 0.0) || !(s.si + s.ss > 0.0) {
        return Err(ScpwError::ClosureDenominator(s.si + s.ss));
    }
    let ns = (s.si + s.ss) / s.s;
    let inner = (m.k2 * (m.k2 - m.k1 * ns) + m.k3 * (ns - m.k1)) / (ns * m.variance());
    Ok((inner - 1.0) / (ns * s.s))
}

/// Dimensional right-hand side (d[S]/dt, d[I]/dt, d[SI]/dt, d[SS]/dt, d[II]/dt).
pub fn rhs_dim(s: &DimState, tau: f64, gamma: f64, m: &DegreeMoments) -> Result<[f64; 5]> {
    if !(tau >= 0.0) || !(gamma >= 0.0) {
        return Err(ScpwError::InvalidParameter("rates must be nonnegative".into()));
    }
    let (alpha, beta) = crate::model::closure_constants(m)?;
    let q = q_closure(s, alpha, beta)?;
    let si = s.si;
    Ok([
        gamma * s.i - tau * si,
        tau * si - gamma * s.i,
        gamma * (s.ii - si) - tau * si + tau * si * (s.ss - si) * q,
        2.0 * gamma * si - 2.0 * tau * si * s.ss * q,
        -2.0 * gamma * s.ii + 2.0 * tau * si + 2.0 * tau * si * si * q,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moments_from_poisson, DegreeMoments};
    use approx::assert_relative_eq;

    fn bimodal() -> DegreeMoments {
        DegreeMoments::new(4.0, 17.0, 76.0).unwrap()
    }

    #[test]
    fn bimodal_params() {
        let p = derive_params(&bimodal(), 0.7).unwrap();
        assert_relative_eq!(p.alpha, -15.0, max_relative = 1e-14);
        assert_relative_eq!(p.beta, 7.0, max_relative = 1e-14);
        assert_relative_eq!(p.delta_c, 4.0 / 13.0, max_relative = 1e-14);
        assert_relative_eq!(p.kbar, 13.0 / 4.0, max_relative = 1e-14);
        assert_relative_eq!(p.sigma, 16.0 / 13.0, max_relative = 1e-14);
        assert_relative_eq!(p.lambda, -15.0 / 13.0, max_relative = 1e-14);
        assert_relative_eq!(p.mu, 28.0 / 13.0, max_relative = 1e-14);
    }

    #[test]
    fn poisson_params() {
        let p = derive_params(&moments_from_poisson(10.0).unwrap(), 0.3).unwrap();
        assert_relative_eq!(p.alpha, -100.0, max_relative = 1e-13);
        assert_relative_eq!(p.beta, 20.0, max_relative = 1e-13);
        assert_relative_eq!(p.delta_c, 0.1, max_relative = 1e-14);
        assert_relative_eq!(p.kbar, 10.0, max_relative = 1e-14);
    }

    #[test]
    fn regular_network_is_refused() {
        let m = DegreeMoments::new(4.0, 16.0, 64.0).unwrap();
        assert!(matches!(
            derive_params(&m, 0.5),
            Err(ScpwError::DegenerateVariance { .. })
        ));
        assert!(derive_params(&bimodal(), 0.0).is_err());
        let infeasible = DegreeMoments::new(2.0, 3.0, 100.0).unwrap();
        assert!(matches!(derive_params(&infeasible, 0.5), Err(ScpwError::Infeasible(_))));
    }

    #[test]
    fn rhs_vanishes_at_dfe() {
        let p = derive_params(&bimodal(), 0.5).unwrap();
        let r = rhs_nondim(&NState::dfe(), &p).unwrap();
        assert_eq!(r, [0.0; 5]);
        // With x = w = 0 but II edges present, only recovery of II pairs acts.
        let s = NState::new(1.0, 0.0, 0.0, 0.6, 0.4).unwrap();
        let r = rhs_nondim(&s, &p).unwrap();
        assert_eq!(r, [0.0, 0.0, 0.4, 0.0, -0.8]);
    }

    #[test]
    fn rhs_matches_frozen_high_precision_value() {
        // 50-digit evaluation of the nondimensional system.
        let expected = [-0.1, 0.1, 0.054296875, -0.043359375, -0.065234375];
        let p = derive_params(&bimodal(), 0.5).unwrap();
        let s = NState::new(0.9, 0.1, 0.1, 0.7, 0.1).unwrap();
        let r = rhs_nondim(&s, &p).unwrap();
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn rhs_without_transmission() {
        let mut p = derive_params(&bimodal(), 0.5).unwrap();
        p.delta = 0.0;
        let s = NState::new(0.7, 0.3, 0.2, 0.4, 0.2).unwrap();
        let r = rhs_nondim(&s, &p).unwrap();
        let expected = [s.w, -s.w, s.z - s.x, 2.0 * s.x, -2.0 * s.z];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_closure_floor() {
        let p = derive_params(&bimodal(), 0.5).unwrap();
        let s = NState::new(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(rhs_nondim(&s, &p), Err(ScpwError::ClosureDenominator(_))));
    }

    #[test]
    fn state_construction() {
        let s = NState::new(1.0 + 1e-13, -5e-13, 0.1, 0.8, 0.0).unwrap();
        assert_eq!(s.w, 0.0);
        assert_eq!(s.conservation_error().0, 0.0);
        assert!(NState::new(1.0, -1e-6, 0.1, 0.8, 0.0).is_err());
        assert!(NState::new(0.5, 0.4, 0.1, 0.8, 0.0).is_err());
        assert!(NState::new(1.0, 0.0, 0.1, 0.9, 0.0).is_err());
    }

    #[test]
    fn nondimensionalize_example() {
        let d = DimState::new(9000.0, 1000.0, 4000.0, 30000.0, 2000.0, 1e4, 4.0).unwrap();
        let s = nondimensionalize(&d).unwrap();
        assert_relative_eq!(s.v, 0.9, max_relative = 1e-15);
        assert_relative_eq!(s.w, 0.1, max_relative = 1e-15);
        assert_relative_eq!(s.x, 0.1, max_relative = 1e-15);
        assert_relative_eq!(s.y, 0.75, max_relative = 1e-15);
        assert_relative_eq!(s.z, 0.05, max_relative = 1e-15);

        let dfe = DimState::new(50.0, 0.0, 0.0, 200.0, 0.0, 50.0, 4.0).unwrap();
        assert_eq!(nondimensionalize(&dfe).unwrap(), NState::dfe());
        let back = dimensionalize(&NState::dfe(), 50.0, 4.0).unwrap();
        assert_eq!(back, dfe);
    }

    #[test]
    fn dimensional_rhs_at_dfe() {
        let d = DimState::new(100.0, 0.0, 0.0, 400.0, 0.0, 100.0, 4.0).unwrap();
        assert_eq!(rhs_dim(&d, 0.3, 1.0, &bimodal()).unwrap(), [0.0; 5]);
    }

    #[test]
    fn dimensional_rhs_scales_to_nondimensional() {
        let m = bimodal();
        let (n, tau, gamma) = (10_000.0, 0.15, 1.0);
        let s = NState::new(0.9, 0.1, 0.1, 0.7, 0.1).unwrap();
        let d = dimensionalize(&s, n, m.k1).unwrap();
        let dim = rhs_dim(&d, tau, gamma, &m).unwrap();
        let p = derive_params(&m, tau / gamma).unwrap();
        let nd = rhs_nondim(&s, &p).unwrap();
        let scale = [n, n, m.k1 * n, m.k1 * n, m.k1 * n];
        for k in 0..5 {
            assert_relative_eq!(dim[k], gamma * scale[k] * nd[k], max_relative = 1e-10);
        }
    }
}
