use crate::error::{Result, ScpwError};
use crate::model::ScpwParams;

use super::{residuals, RESIDUAL_TOL};

const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub q: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Analytic Jacobian [[∂P/∂x, ∂P/∂y], [∂Q/∂x, ∂Q/∂y]].
pub fn residual_jacobian(x: f64, y: f64, p: &ScpwParams) -> [[f64; 2]; 2] {
    let e = p.eps();
    let s = x + y;
    let r = 1.0 - y - 2.0 * x;
    let (lam, mu, sig, dc) = (p.lambda, p.mu, p.sigma, p.delta_c);
    let pdx = e * e * (-2.0 * s * s + 2.0 * r * s)
        - e * (dc * (s * s + 2.0 * x * s) + 2.0 * lam * x + mu * (2.0 * x * s + x * x))
        + 3.0 * lam * sig * x * x;
    let pdy = e * e * (-s * s + 2.0 * r * s) - e * (2.0 * dc * x * s + mu * x * x);
    let qdx = 2.0 * e * e * s - e * mu * y + lam * sig * y;
    let qdy = 2.0 * e * e * s - e * (lam + mu * (s + y)) + lam * sig * x;
    [[pdx, pdy], [qdx, qdy]]
}

/// Damped Newton on (P, Q). Steps are halved until neither |P| nor |Q|
/// grows. Iterates to round-off; `converged` reports residuals below
/// the acceptance tolerance.
pub fn newton_solve(p: &ScpwParams, x0: f64, y0: f64) -> Result<NewtonOutcome> {
    let (mut x, mut y) = (x0, y0);
    let (mut rp, mut rq) = residuals(x, y, p);
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let [[a, b], [c, d]] = residual_jacobian(x, y, p);
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            return Err(ScpwError::NewtonFailed(format!("singular Jacobian at ({x}, {y})")));
        }
        let dx = -(d * rp - b * rq) / det;
        let dy = -(-c * rp + a * rq) / det;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let (nx, ny) = (x + t * dx, y + t * dy);
            let (np, nq) = residuals(nx, ny, p);
            if np.abs() <= rp.abs() && nq.abs() <= rq.abs() {
                accepted = Some((nx, ny, np, nq));
                break;
            }
            t *= 0.5;
        }
        let Some((nx, ny, np, nq)) = accepted else {
            break;
        };
        let moved = (nx - x).abs() + (ny - y).abs();
        (x, y, rp, rq) = (nx, ny, np, nq);
        if moved <= 4.0 * f64::EPSILON * (x.abs() + y.abs()) || (rp == 0.0 && rq == 0.0) {
            break;
        }
    }
    Ok(NewtonOutcome {
        x,
        y,
        p: rp,
        q: rq,
        iterations,
        converged: rp.abs() < RESIDUAL_TOL && rq.abs() < RESIDUAL_TOL,
    })
}
