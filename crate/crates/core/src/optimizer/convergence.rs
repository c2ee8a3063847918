use crate::error::{Error, Result};

/// Iteration limits and tolerances of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLimits {
    pub iter_min_step: usize,
    pub iter_max_step: usize,
    pub iter_max: usize,
    pub chi_tol: f64,
    pub lambda_tol: f64,
    pub vol_tol: f64,
    /// Extra gate on `|C|` for the augmented Lagrangian update.
    pub constraint_tol: f64,
}

impl Default for ConvergenceLimits {
    fn default() -> Self {
        Self {
            iter_min_step: 4,
            iter_max_step: 20,
            iter_max: 500,
            chi_tol: 0.1,
            lambda_tol: 0.1,
            vol_tol: 1e-4,
            constraint_tol: 1e-3,
        }
    }
}

/// Measures of one completed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationMetrics {
    pub iter_step: usize,
    pub global_iter: usize,
    /// `||chi - chi_prev||_2 / ||chi_prev||_2` over elements.
    pub delta_chi: f64,
    /// `|lambda - lambda_prev| / |lambda_prev|`.
    pub delta_lambda: f64,
    pub vol_error: f64,
    /// Augmented Lagrangian constraint value, if that update is in use.
    pub constraint: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    StepLimit,
    GlobalLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Converged,
    Iterate,
    Abort(AbortReason),
}

/// Relative change of lambda; infinite when the previous value is zero.
pub fn relative_change(lambda: f64, lambda_prev: f64) -> f64 {
    let d = (lambda - lambda_prev).abs();
    if d == 0.0 {
        0.0
    } else {
        d / lambda_prev.abs()
    }
}

pub fn check_convergence(m: &IterationMetrics, limits: &ConvergenceLimits) -> ConvergenceStatus {
    let vol_ok = match m.constraint {
        Some(c) => c.abs() <= limits.constraint_tol,
        None => m.vol_error.abs() <= limits.vol_tol,
    };
    let converged = (limits.iter_min_step..=limits.iter_max_step).contains(&m.iter_step)
        && m.delta_chi < limits.chi_tol
        && m.delta_lambda < limits.lambda_tol
        && vol_ok;
    if converged {
        ConvergenceStatus::Converged
    } else if m.global_iter > limits.iter_max {
        ConvergenceStatus::Abort(AbortReason::GlobalLimit)
    } else if m.iter_step > limits.iter_max_step {
        ConvergenceStatus::Abort(AbortReason::StepLimit)
    } else {
        ConvergenceStatus::Iterate
    }
}

/// Multiplier and penalty update of the augmented Lagrangian scheme.
pub fn augmented_update(lambda: f64, rho: f64, c: f64, c_prev: Option<f64>, rho0: f64) -> (f64, f64) {
    let lambda = lambda + rho * c;
    let rho = match c_prev {
        Some(cp) if (c - cp).abs() < 1e-3 => (1.02 * rho).min(100.0 * rho0),
        _ => rho,
    };
    (lambda, rho)
}

/// Energy shift and scale, fixed at the first iteration of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub shift: f64,
    pub norm: f64,
}

pub fn shift_normalize(xi0: &[f64]) -> Result<Normalization> {
    if xi0.is_empty() {
        return Err(Error::DegenerateField("empty energy field".into()));
    }
    let min = xi0.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xi0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = (max - min).max(max);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateField(format!(
            "energy field range [{min}, {max}] cannot be normalized"
        )));
    }
    Ok(Normalization {
        shift: min.min(0.0),
        norm,
    })
}
