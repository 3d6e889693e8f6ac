use crate::error::{Result, ScpwError};
use crate::model::ScpwParams;

use super::{far_threshold_approx, near_threshold_approx, solve_by_ode, solve_endemic, EquilibriumSolution};

/// A way of producing the endemic equilibrium for one parameter set.
pub trait EquilibriumMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn solve(&self, p: &ScpwParams) -> Result<EquilibriumSolution>;
}

struct Newton;
struct OdeLimit;
struct Near;
struct Far;

impl EquilibriumMethod for Newton {
    fn name(&self) -> &'static str {
        "newton"
    }
    fn describe(&self) -> &'static str {
        "damped Newton on the polynomial system, ODE fallback"
    }
    fn solve(&self, p: &ScpwParams) -> Result<EquilibriumSolution> {
        solve_endemic(p)
    }
}

impl EquilibriumMethod for OdeLimit {
    fn name(&self) -> &'static str {
        "ode"
    }
    fn describe(&self) -> &'static str {
        "long-time limit of the integrated dynamics"
    }
    fn solve(&self, p: &ScpwParams) -> Result<EquilibriumSolution> {
        solve_by_ode(p)
    }
}

impl EquilibriumMethod for Near {
    fn name(&self) -> &'static str {
        "near"
    }
    fn describe(&self) -> &'static str {
        "first-order expansion in eta = 1 - delta_c/delta"
    }
    fn solve(&self, p: &ScpwParams) -> Result<EquilibriumSolution> {
        near_threshold_approx(p)
    }
}

impl EquilibriumMethod for Far {
    fn name(&self) -> &'static str {
        "far"
    }
    fn describe(&self) -> &'static str {
        "first-order expansion in eps = delta_c/delta"
    }
    fn solve(&self, p: &ScpwParams) -> Result<EquilibriumSolution> {
        far_threshold_approx(p)
    }
}

/// All registered methods in a stable order.
pub fn equilibrium_methods() -> Vec<Box<dyn EquilibriumMethod>> {
    vec![Box::new(Newton), Box::new(OdeLimit), Box::new(Near), Box::new(Far)]
}

pub fn equilibrium_method(name: &str) -> Result<Box<dyn EquilibriumMethod>> {
    equilibrium_methods()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| ScpwError::UnknownStrategy {
            kind: "equilibrium method",
            name: name.to_string(),
        })
}
