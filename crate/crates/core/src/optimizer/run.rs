use log::{info, warn};

use super::convergence::{
    augmented_update, check_convergence, relative_change, shift_normalize, AbortReason, ConvergenceLimits,
    ConvergenceStatus, IterationMetrics, Normalization,
};
use super::lambda::{find_lambda, LambdaSolution, RootMethod, Thresholding};
use super::schedule::{time_steps, TimeSchedule};
use super::volume::{NodeConstraints, VolumeField, VolumeIntegrator};
use crate::error::{invalid, Error, Result};
use crate::fem::{element_kit, solve_linear, SolverStrategy, SparseSystem, StiffnessAssembler};
use crate::filter::build_laplacian;
use crate::problems::{cost, sensitivity, ProblemDefinition};

/// How the volume constraint is enforced at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintMethod {
    /// Root-find the threshold so the target volume is met exactly.
    Threshold,
    /// Multiplier update with penalty `rho0` growing up to `100 rho0`.
    AugmentedLagrangian { rho0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tau: f64,
    pub solver: SolverStrategy,
    pub root_method: RootMethod,
    pub constraint: ConstraintMethod,
    pub limits: ConvergenceLimits,
    /// Magnitude of `psi` imposed on active and passive nodes.
    pub alpha0: f64,
    /// Constant factor on the pseudo-energy; 2 reproduces the analytic
    /// derivative, 1 the reference implementation. The topology does not
    /// depend on it.
    pub energy_factor: f64,
    pub keep_snapshots: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tau: 0.5,
            solver: SolverStrategy::Direct,
            root_method: RootMethod::Bisection,
            constraint: ConstraintMethod::Threshold,
            limits: ConvergenceLimits::default(),
            alpha0: 1e-3,
            energy_factor: 1.0,
            keep_snapshots: true,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based time-step index.
    pub step: usize,
    /// 1-based iteration within the step.
    pub iter: usize,
    pub global_iter: usize,
    pub t_ref: f64,
    pub cost: f64,
    /// Cost over the first-iteration reference (plus the penalty terms for
    /// the augmented Lagrangian update).
    pub j_norm: f64,
    /// Void fraction of the updated topology.
    pub vol: f64,
    pub lambda: f64,
    pub delta_chi: f64,
    pub delta_lambda: f64,
    pub root_evaluations: usize,
    pub converged: bool,
}

/// Fields at the end of a time-step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSnapshot {
    pub step: usize,
    pub t_ref: f64,
    pub converged: bool,
    pub psi: Vec<f64>,
    pub chi: Vec<f64>,
    pub cut: Vec<bool>,
    pub vol: f64,
    pub lambda: f64,
    /// Solutions of the last equilibrium solve of the step.
    pub solutions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<StepSnapshot>,
    pub warnings: Vec<String>,
    pub normalization: Option<Normalization>,
    pub j_ref: Option<f64>,
    pub n_steps: usize,
}

impl RunHistory {
    pub fn total_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn root_evaluations(&self) -> usize {
        self.records.iter().map(|r| r.root_evaluations).sum()
    }

    /// True when the last time-step was reached and converged.
    pub fn final_step_converged(&self) -> bool {
        self.records
            .last()
            .is_some_and(|r| r.step == self.n_steps && r.converged)
    }

    /// Records of converged iterations, one per converged step.
    pub fn converged_records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(|r| r.converged)
    }
}

/// `||chi - chi_prev||_2 / ||chi_prev||_2`.
fn relative_chi_change(chi: &[f64], prev: &[f64]) -> f64 {
    let diff = chi
        .iter()
        .zip(prev)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let base = prev.iter().map(|x| x * x).sum::<f64>().sqrt();
    if diff == 0.0 {
        0.0
    } else {
        diff / base
    }
}

/// Runs the full pseudo-time optimization of `problem`.
pub fn run(problem: &ProblemDefinition, schedule: &TimeSchedule, opts: &RunOptions) -> Result<RunHistory> {
    problem.validate()?;
    if !(opts.alpha0 > 0.0) || !(opts.energy_factor > 0.0) {
        return invalid("alpha0 and the energy factor must be positive");
    }
    if let ConstraintMethod::AugmentedLagrangian { rho0 } = opts.constraint {
        if !(rho0 > 0.0) {
            return invalid(format!("rho0 must be positive, got {rho0}"));
        }
    }
    let targets = time_steps(schedule)?;
    let grid = problem.grid()?;
    let dofs = crate::grid::dof_table(&grid, problem.n_unkn())?;
    let kit = element_kit(&problem.constitutive()?, problem.n_unkn())?;
    let filter = build_laplacian(&grid, opts.tau, &kit, opts.solver)?;
    let assembler = StiffnessAssembler::new(&dofs, kit.clone())?;
    let integrator = VolumeIntegrator::for_grid(&grid);
    let constraints = NodeConstraints::new(&problem.active_nodes, &problem.passive_nodes, grid.n_nodes())?;
    let th = Thresholding {
        integrator: &integrator,
        constraints: &constraints,
        alpha0: opts.alpha0,
    };

    let mut psi = vec![opts.alpha0; grid.n_nodes()];
    constraints.apply(&mut psi, opts.alpha0);
    let mut field: VolumeField = integrator.integrate(&psi)?;
    let mut lambda = 0.0;
    let mut have_lambda = false;
    let (mut rho, mut c_prev) = (0.0, None);
    if let ConstraintMethod::AugmentedLagrangian { rho0 } = opts.constraint {
        rho = rho0;
    }

    let mut history = RunHistory {
        n_steps: targets.len(),
        ..Default::default()
    };
    let mut global_iter = 0;
    'steps: for (si, &t_ref) in targets.iter().enumerate() {
        let step = si + 1;
        let mut iter_step = 0;
        let mut gap_warned = false;
        loop {
            iter_step += 1;
            global_iter += 1;
            let k = assembler.assemble(&field.chi, &field.cut, &problem.law, &problem.springs)?;
            let system = SparseSystem {
                matrix: &k,
                rhs: &problem.loads,
                fixed: &problem.fixed_dofs,
                prescribed: &[],
            };
            let solutions = solve_linear(&system, opts.solver)?;
            let j = cost(problem, &solutions)?;
            let j_ref = match history.j_ref {
                Some(r) => r,
                None if j != 0.0 && j.is_finite() => *history.j_ref.insert(j.abs()),
                None => return Err(Error::DegenerateField(format!("initial cost is {j}"))),
            };
            let mut energy = sensitivity(problem, &solutions, &dofs, &kit, &field.chi, &field.cut)?;
            if opts.energy_factor != 1.0 {
                for v in energy.iter_mut().flatten() {
                    *v *= opts.energy_factor;
                }
            }
            let norm = match history.normalization {
                Some(n) => n,
                None => {
                    let flat: Vec<f64> = energy.iter().flatten().copied().collect();
                    *history.normalization.insert(shift_normalize(&flat)?)
                }
            };
            let xi = filter.smooth(&energy, &field.chi, norm.shift, norm.norm)?;

            let (new_lambda, new_psi, new_field, j_norm, constraint, evaluations) = match opts.constraint {
                ConstraintMethod::Threshold => {
                    let prev = have_lambda.then_some(lambda);
                    let s = match find_lambda(&xi, t_ref, prev, opts.root_method, &th) {
                        Err(Error::VolumeGap {
                            target,
                            below,
                            above,
                            lambda_below,
                            lambda_above,
                            evaluations,
                        }) => {
                            // Keep the attainable volume closest to the target.
                            let l = if target - below <= above - target {
                                lambda_below
                            } else {
                                lambda_above
                            };
                            let (psi, field) = th.topology(&xi, l)?;
                            if !gap_warned {
                                gap_warned = true;
                                let msg = format!(
                                    "step {step}: void fraction {t_ref} falls in a gap ({below} to {above}); using {}",
                                    field.vol
                                );
                                warn!("{msg}");
                                history.warnings.push(msg);
                            }
                            LambdaSolution {
                                lambda: l,
                                psi,
                                field,
                                evaluations: evaluations + 1,
                            }
                        }
                        other => other?,
                    };
                    (s.lambda, s.psi, s.field, j / j_ref, None, s.evaluations)
                }
                ConstraintMethod::AugmentedLagrangian { rho0 } => {
                    let c = t_ref - field.vol;
                    let j_norm = j / j_ref + lambda * c + 0.5 * rho * c * c;
                    let (l, r) = augmented_update(lambda, rho, c, c_prev, rho0);
                    rho = r;
                    c_prev = Some(c);
                    let (p, f) = th.topology(&xi, l)?;
                    let c_new = t_ref - f.vol;
                    (l, p, f, j_norm, Some(c_new), 1)
                }
            };
            let delta_chi = relative_chi_change(&new_field.chi, &field.chi);
            let delta_lambda = relative_change(new_lambda, lambda);
            let metrics = IterationMetrics {
                iter_step,
                global_iter,
                delta_chi,
                delta_lambda,
                vol_error: new_field.vol - t_ref,
                constraint,
            };
            let status = check_convergence(&metrics, &opts.limits);
            lambda = new_lambda;
            have_lambda = true;
            psi = new_psi;
            field = new_field;
            let converged = status == ConvergenceStatus::Converged;
            history.records.push(IterationRecord {
                step,
                iter: iter_step,
                global_iter,
                t_ref,
                cost: j,
                j_norm,
                vol: field.vol,
                lambda,
                delta_chi,
                delta_lambda,
                root_evaluations: evaluations,
                converged,
            });
            let snapshot = |converged: bool| StepSnapshot {
                step,
                t_ref,
                converged,
                psi: psi.clone(),
                chi: field.chi.clone(),
                cut: field.cut.clone(),
                vol: field.vol,
                lambda,
                solutions: solutions.clone(),
            };
            match status {
                ConvergenceStatus::Iterate => continue,
                ConvergenceStatus::Converged => {
                    info!(
                        "step {step}/{}: t_ref = {t_ref:.4}, vol = {:.6}, J/J0 = {j_norm:.6} after {iter_step} iterations",
                        targets.len(),
                        field.vol
                    );
                    if opts.keep_snapshots {
                        history.snapshots.push(snapshot(true));
                    }
                    break;
                }
                ConvergenceStatus::Abort(AbortReason::StepLimit) => {
                    let msg = format!(
                        "step {step} (t_ref = {t_ref}) did not converge in {} iterations",
                        opts.limits.iter_max_step
                    );
                    warn!("{msg}");
                    history.warnings.push(msg);
                    if opts.keep_snapshots {
                        history.snapshots.push(snapshot(false));
                    }
                    break;
                }
                ConvergenceStatus::Abort(AbortReason::GlobalLimit) => {
                    let msg = format!(
                        "iteration limit {} reached during step {step}; run stopped",
                        opts.limits.iter_max
                    );
                    warn!("{msg}");
                    history.warnings.push(msg);
                    if opts.keep_snapshots {
                        history.snapshots.push(snapshot(false));
                    }
                    break 'steps;
                }
            }
        }
    }
    Ok(history)
}
