use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fem::{CsrMatrix, ElementKit, SolverStrategy, SparsityPattern, SpdSolver};
use crate::grid::{dof_table, StructuredGrid};

/// Weight times Jacobian of each 2x2 Gauss point on a unit element.
const GP_WEIGHT: f64 = 0.25;

/// Helmholtz-type smoothing operator `(M + (tau h)^2 K) x = rhs`, factorized once per mesh.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    tau: f64,
    solver: SpdSolver,
    connect: Vec<[usize; 4]>,
    n_t: DMatrix<f64>,
}

pub fn build_laplacian(
    grid: &StructuredGrid,
    tau: f64,
    kit: &ElementKit,
    strategy: SolverStrategy,
) -> Result<LaplacianOperator> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return invalid(format!("tau must be a finite value >= 0, got {tau}"));
    }
    let nodes = dof_table(grid, 1)?;
    let th = tau * StructuredGrid::H_E;
    let local = &kit.me_lap + &kit.ke_lap * (th * th);
    let lhs = SparsityPattern::from_dofs(&nodes).assemble(&vec![1.0; grid.n_elements()], |_| &local);
    Ok(LaplacianOperator {
        tau,
        solver: SpdSolver::prepare(lhs, strategy)?,
        connect: grid.connect().to_vec(),
        n_t: kit.n_t.clone(),
    })
}

impl LaplacianOperator {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lhs(&self) -> &CsrMatrix {
        self.solver.matrix()
    }

    pub fn n_nodes(&self) -> usize {
        self.lhs().n()
    }

    /// Nodal load `sum_e int N^T (energy - shift chi_e) / norm`.
    pub fn rhs(&self, energy_gp: &[[f64; 4]], chi: &[f64], shift: f64, norm: f64) -> Result<Vec<f64>> {
        let nel = self.connect.len();
        if energy_gp.len() != nel || chi.len() != nel {
            return invalid("energy and chi must have one entry per element");
        }
        if !(norm > 0.0) {
            return invalid(format!("normalization must be positive, got {norm}"));
        }
        let local: Vec<[f64; 4]> = energy_gp
            .par_iter()
            .zip(chi.par_iter())
            .map(|(gp, &c)| {
                let mut r = [0.0; 4];
                for (i, &g) in gp.iter().enumerate() {
                    let v = GP_WEIGHT * (g - shift * c) / norm;
                    for (a, ra) in r.iter_mut().enumerate() {
                        *ra += self.n_t[(a, i)] * v;
                    }
                }
                r
            })
            .collect();
        let mut rhs = vec![0.0; self.n_nodes()];
        for (nodes, r) in self.connect.iter().zip(&local) {
            for (&n, &v) in nodes.iter().zip(r) {
                rhs[n] += v;
            }
        }
        Ok(rhs)
    }

    /// Smooth nodal field of the shifted, normalized energy density.
    pub fn smooth(&self, energy_gp: &[[f64; 4]], chi: &[f64], shift: f64, norm: f64) -> Result<Vec<f64>> {
        let rhs = self.rhs(energy_gp, chi, shift, norm)?;
        self.solver.solve(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::element_kit;
    use crate::grid::build_grid;
    use crate::material::{constitutive, Isotropic2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kit() -> ElementKit {
        element_kit(&constitutive(&Isotropic2D::plane_stress(1.0, 0.3)).unwrap(), 2).unwrap()
    }

    fn random_input(nel: usize, seed: u64) -> (Vec<[f64; 4]>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = (0..nel)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            .collect();
        let c = (0..nel).map(|_| rng.gen_range(0.0..1.0)).collect();
        (e, c)
    }

    fn h1(grid: &StructuredGrid, x: &[f64]) -> f64 {
        let k = kit();
        grid.connect()
            .iter()
            .map(|nodes| {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s += x[nodes[a]] * k.ke_lap[(a, b)] * x[nodes[b]];
                    }
                }
                s
            })
            .sum()
    }

    #[test]
    fn single_element_lhs_is_hand_sum() {
        let g = build_grid(1, 1).unwrap();
        let k = kit();
        let op = build_laplacian(&g, 0.5, &k, SolverStrategy::Direct).unwrap();
        let lhs = op.lhs().to_dense();
        let expect = &k.me_lap + &k.ke_lap * 0.25;
        // Element-local order is connect order.
        let nodes = g.connect()[0];
        for a in 0..4 {
            for b in 0..4 {
                assert!((lhs[nodes[a]][nodes[b]] - expect[(a, b)]).abs() < 1e-15);
            }
        }
        // Hand sum of the two printed matrices: diagonal 4/36 + 0.25 * 4/6.
        assert!((expect[(0, 0)] - (4.0 / 36.0 + 1.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn row_sums_equal_mass_row_sums() {
        let g = build_grid(4, 3).unwrap();
        let k = kit();
        let m = build_laplacian(&g, 0.0, &k, SolverStrategy::Direct).unwrap();
        let l = build_laplacian(&g, 0.7, &k, SolverStrategy::Direct).unwrap();
        let ones = vec![1.0; m.n_nodes()];
        let (mm, ll) = (m.lhs().mul_vec(&ones), l.lhs().mul_vec(&ones));
        for (a, b) in mm.iter().zip(&ll) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((mm.iter().sum::<f64>() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_fixed_point() {
        let g = build_grid(6, 4).unwrap();
        for strategy in [SolverStrategy::Direct, SolverStrategy::Iterative] {
            let op = build_laplacian(&g, 0.5, &kit(), strategy).unwrap();
            let x = op.smooth(&vec![[2.5; 4]; 24], &[0.3; 24], 0.0, 1.0).unwrap();
            for v in x {
                assert!((v - 2.5).abs() < 1e-8 * 2.5);
            }
        }
    }

    #[test]
    fn shift_cancels_solid_energy() {
        let g = build_grid(3, 3).unwrap();
        let op = build_laplacian(&g, 0.5, &kit(), SolverStrategy::Direct).unwrap();
        let x = op.smooth(&vec![[0.7; 4]; 9], &[1.0; 9], 0.7, 2.0).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mean_is_preserved() {
        let g = build_grid(8, 5).unwrap();
        let k = kit();
        let mass = build_laplacian(&g, 0.0, &k, SolverStrategy::Direct).unwrap();
        let op = build_laplacian(&g, 0.8, &k, SolverStrategy::Direct).unwrap();
        let (e, c) = random_input(40, 3);
        let rhs = op.rhs(&e, &c, 0.1, 1.3).unwrap();
        let x = op.smooth(&e, &c, 0.1, 1.3).unwrap();
        let lhs_sum: f64 = mass.lhs().mul_vec(&x).iter().sum();
        let rhs_sum: f64 = rhs.iter().sum();
        assert!((lhs_sum - rhs_sum).abs() <= 1e-10 * rhs.iter().map(|v| v.abs()).sum::<f64>());
    }

    #[test]
    fn smoothing_is_linear() {
        let g = build_grid(5, 4).unwrap();
        let op = build_laplacian(&g, 0.5, &kit(), SolverStrategy::Direct).unwrap();
        let (f, c) = random_input(20, 1);
        let (h, _) = random_input(20, 2);
        let mix: Vec<[f64; 4]> = f
            .iter()
            .zip(&h)
            .map(|(a, b)| std::array::from_fn(|i| 2.0 * a[i] - 0.5 * b[i]))
            .collect();
        let xf = op.smooth(&f, &c, 0.0, 1.0).unwrap();
        let xh = op.smooth(&h, &c, 0.0, 1.0).unwrap();
        let xm = op.smooth(&mix, &c, 0.0, 1.0).unwrap();
        for i in 0..xm.len() {
            assert!((xm[i] - (2.0 * xf[i] - 0.5 * xh[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn output_is_bounded_by_input() {
        let g = build_grid(12, 8).unwrap();
        let op = build_laplacian(&g, 0.5, &kit(), SolverStrategy::Direct).unwrap();
        for seed in 0..10 {
            let (e, c) = random_input(96, seed);
            let x = op.smooth(&e, &c, 0.0, 1.0).unwrap();
            let max_in = e.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_out = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max_out <= 1.01 * max_in, "{max_out} > 1.01 * {max_in}");
        }
    }

    #[test]
    fn larger_tau_is_smoother() {
        let g = build_grid(10, 10).unwrap();
        let (e, c) = random_input(100, 7);
        let mut last = f64::INFINITY;
        for tau in [0.25, 0.5, 1.0] {
            let op = build_laplacian(&g, tau, &kit(), SolverStrategy::Direct).unwrap();
            let x = op.smooth(&e, &c, 0.0, 1.0).unwrap();
            let s = h1(&g, &x);
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = build_grid(2, 2).unwrap();
        assert!(build_laplacian(&g, -1.0, &kit(), SolverStrategy::Direct).is_err());
        let op = build_laplacian(&g, 0.5, &kit(), SolverStrategy::Direct).unwrap();
        assert!(op.smooth(&[[1.0; 4]; 4], &[1.0; 4], 0.0, 0.0).is_err());
        assert!(op.smooth(&[[1.0; 4]; 3], &[1.0; 4], 0.0, 1.0).is_err());
    }
}
