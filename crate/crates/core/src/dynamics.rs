//! Time integration of the nondimensional system.
//!
//! Dormand–Prince 5(4) with an RMS error norm. After every accepted step the
//! state is projected back onto `v + w = 1`, `2x + y + z = 1` by rescaling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScpwError};
use crate::model::{rhs_raw, NState, ScpwParams, CLAMP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_max: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    TEnd,
    Steady,
    RhsFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<NState>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub fn last(&self) -> &NState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "T,v,w,x,y,z")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(out, "{t},{},{},{},{},{}", s.v, s.w, s.x, s.y, s.z)?;
        }
        Ok(())
    }
}

// Dormand–Prince tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MIN_STEP: f64 = 1e-14;
const STABILITY_LIMIT: f64 = 2.0;
/// Relative step below which a positivity rejection is treated as the field
/// leaving the nonnegative orthant.
const POSITIVITY_FLOOR: f64 = 1e-9;
const NAMES: [&str; 5] = ["v", "w", "x", "y", "z"];

fn check_tolerances(t_end: f64, rel: f64, abs: f64) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(ScpwError::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    for (name, tol) in [("rel_tol", rel), ("abs_tol", abs)] {
        if !(tol > 0.0 && tol <= 1e-2) {
            return Err(ScpwError::InvalidParameter(format!("{name} = {tol} outside (0, 1e-2]")));
        }
    }
    Ok(())
}

pub fn max_norm(f: &[f64; 5]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One Dormand–Prince step: fifth-order solution and the embedded error estimate.
/// Also returns a local estimate of the dominant Jacobian magnitude from the
/// last two stages, which share nearly the same abscissa.
fn dp_step(p: &ScpwParams, y: &[f64; 5], f0: &[f64; 5], h: f64) -> Result<([f64; 5], [f64; 5], f64)> {
    let mut k = [[0.0; 5]; 7];
    let mut stage = [[0.0; 5]; 7];
    k[0] = *f0;
    stage[0] = *y;
    for s in 1..7 {
        let mut ys = *y;
        for j in 0..s {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..5 {
                    ys[i] += h * a * k[j][i];
                }
            }
        }
        k[s] = rhs_raw(&ys, p)?;
        stage[s] = ys;
    }
    let mut y5 = *y;
    let mut err = [0.0; 5];
    for s in 0..7 {
        for i in 0..5 {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    let num: f64 = (0..5).map(|i| (k[6][i] - k[5][i]).powi(2)).sum();
    let den: f64 = (0..5).map(|i| (stage[6][i] - stage[5][i]).powi(2)).sum();
    let rho = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok((y5, err, rho))
}

fn error_norm(y: &[f64; 5], y_new: &[f64; 5], err: &[f64; 5], rel: f64, abs: f64) -> f64 {
    let sum: f64 = (0..5)
        .map(|i| {
            let sc = abs + rel * y[i].abs().max(y_new[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / 5.0).sqrt()
}

/// Adaptive driver. `visit` sees every accepted `(t, state, rhs)` including
/// the initial one and returns `true` to stop early.
fn drive(
    p: &ScpwParams,
    init: &NState,
    t_end: f64,
    rel: f64,
    abs: f64,
    mut visit: impl FnMut(f64, &NState, &[f64; 5]) -> bool,
) -> Result<(f64, NState, TerminalReason)> {
    check_tolerances(t_end, rel, abs)?;
    let mut t = 0.0;
    let mut state = *init;
    let mut f = rhs_raw(&state.as_array(), p)?;
    if visit(t, &state, &f) {
        return Ok((t, state, TerminalReason::Steady));
    }
    let mut h = (1e-3f64).min(t_end);
    loop {
        if t >= t_end {
            return Ok((t, state, TerminalReason::TEnd));
        }
        let h_try = h.min(t_end - t);
        if h_try < MIN_STEP * t.max(1.0) {
            return Err(ScpwError::StepUnderflow { t });
        }
        let y = state.as_array();
        let (y_new, err, rho) = match dp_step(p, &y, &f, h_try) {
            Ok(r) => r,
            Err(ScpwError::ClosureDenominator(_)) => {
                h = h_try * MIN_FACTOR;
                continue;
            }
            Err(e) => return Err(e),
        };
        let en = error_norm(&y, &y_new, &err, rel, abs);
        if !en.is_finite() || en > 1.0 {
            let factor = if en.is_finite() {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h = h_try * factor;
            continue;
        }
        if let Some(i) = y_new.iter().position(|c| *c < -CLAMP_TOL) {
            if h_try < POSITIVITY_FLOOR * t.max(1.0) {
                // Halving further would only crawl along the boundary.
                log::warn!(
                    "closure drives {} negative at T = {t} ({} = {:e}, rate {:e})",
                    NAMES[i],
                    NAMES[i],
                    y[i],
                    f[i]
                );
                return Err(ScpwError::StepUnderflow { t });
            }
            h = h_try * 0.5;
            continue;
        }
        let clamped = y_new.map(|c| c.max(0.0));
        state = NState::renormalized(clamped);
        t += h_try;
        f = match rhs_raw(&state.as_array(), p) {
            Ok(f) => f,
            Err(ScpwError::ClosureDenominator(_)) => {
                visit(t, &state, &[f64::NAN; 5]);
                return Ok((t, state, TerminalReason::RhsFailure));
            }
            Err(e) => return Err(e),
        };
        if visit(t, &state, &f) {
            return Ok((t, state, TerminalReason::Steady));
        }
        let factor = if en == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        h = h_try * factor;
        // Keep hρ well inside the stability region so that perturbations
        // around an attracting steady state decay instead of persisting at
        // the tolerance level.
        if rho > 0.0 {
            h = h.min(STABILITY_LIMIT / rho);
        }
    }
}

/// Integrates from `T = 0` to `t_end`, recording every accepted step.
pub fn integrate(p: &ScpwParams, init: &NState, t_end: f64, rel_tol: f64, abs_tol: f64) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, _, reason) = drive(p, init, t_end, rel_tol, abs_tol, |t, s, _| {
        times.push(t);
        states.push(*s);
        false
    })?;
    let terminal_reason = match reason {
        TerminalReason::Steady => TerminalReason::TEnd,
        r => r,
    };
    Ok(Trajectory {
        times,
        states,
        terminal_reason,
    })
}

/// Integrates until the max-norm of the right-hand side drops below
/// `rhs_norm_tol`. Returns the last state and whether that happened before `t_max`.
pub fn steady_state(p: &ScpwParams, init: &NState, rhs_norm_tol: f64, t_max: f64) -> Result<(NState, bool)> {
    let o = IntegratorOptions::default();
    steady_state_with(p, init, rhs_norm_tol, t_max, o.rel_tol, o.abs_tol)
}

pub fn steady_state_with(
    p: &ScpwParams,
    init: &NState,
    rhs_norm_tol: f64,
    t_max: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(NState, bool)> {
    if !(rhs_norm_tol > 0.0) {
        return Err(ScpwError::InvalidParameter(format!(
            "rhs_norm_tol must be positive, got {rhs_norm_tol}"
        )));
    }
    let (_, state, reason) = drive(p, init, t_max, rel_tol, abs_tol, |_, _, f| max_norm(f) < rhs_norm_tol)?;
    Ok((state, reason == TerminalReason::Steady))
}
