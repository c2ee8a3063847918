use nalgebra::DMatrix;

use super::quadrature::{gauss_rule, QuadratureRule};
use crate::error::{invalid, Result};

/// Parent coordinates of the element nodes, anticlockwise from left-bottom.
const NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Bilinear shape functions at a parent point.
pub fn shape_values(p: [f64; 2]) -> [f64; 4] {
    NODES.map(|[a, b]| 0.25 * (1.0 + a * p[0]) * (1.0 + b * p[1]))
}

/// Cartesian shape-function gradients `[dN/dx, dN/dy]` and `det J` on a
/// unit square element (the parent-to-physical map is `x = (xi + 1) / 2`).
fn cartesian_gradients(p: [f64; 2]) -> ([[f64; 2]; 4], f64) {
    // Jacobian is diag(1/2, 1/2), so d/dx = 2 d/dxi.
    let grads = NODES.map(|[a, b]| {
        [
            2.0 * 0.25 * a * (1.0 + b * p[1]),
            2.0 * 0.25 * b * (1.0 + a * p[0]),
        ]
    });
    (grads, 0.25)
}

/// Strain-displacement matrix (3 x 8, engineering strains) and `det J`.
pub fn strain_displacement(p: [f64; 2]) -> (DMatrix<f64>, f64) {
    let (g, det) = cartesian_gradients(p);
    let mut b = DMatrix::zeros(3, 8);
    for (a, [dx, dy]) in g.into_iter().enumerate() {
        b[(0, 2 * a)] = dx;
        b[(1, 2 * a + 1)] = dy;
        b[(2, 2 * a)] = dy;
        b[(2, 2 * a + 1)] = dx;
    }
    (b, det)
}

/// Gradient matrix (2 x 4) for scalar fields and `det J`.
fn gradient_matrix(p: [f64; 2]) -> (DMatrix<f64>, f64) {
    let (g, det) = cartesian_gradients(p);
    let b = DMatrix::from_fn(2, 4, |i, a| g[a][i]);
    (b, det)
}

fn b_matrix(p: [f64; 2], n_unkn: usize) -> (DMatrix<f64>, f64) {
    if n_unkn == 2 {
        strain_displacement(p)
    } else {
        gradient_matrix(p)
    }
}

/// Precomputed element matrices shared by every element of the grid.
#[derive(Debug, Clone)]
pub struct ElementKit {
    n_unkn: usize,
    /// 4-point rule used for full integration.
    pub rule: QuadratureRule,
    /// `w_i |J_i| B_i^T C B_i` per Gauss point.
    pub ke_gp: Vec<DMatrix<f64>>,
    /// Fully integrated element stiffness (sum of `ke_gp`).
    pub ke: DMatrix<f64>,
    /// Single central point stiffness for elements cut by the interface.
    pub ke_cut: DMatrix<f64>,
    /// Unweighted point products `B_i^T C B_i`; `u^T D_i u` is twice the
    /// nominal energy density at Gauss point `i`.
    pub density_gp: Vec<DMatrix<f64>>,
    /// Unweighted product at the element centre.
    pub density_cut: DMatrix<f64>,
    /// Laplacian stiffness `int grad N^T grad N`.
    pub ke_lap: DMatrix<f64>,
    /// Mass matrix `int N^T N`.
    pub me_lap: DMatrix<f64>,
    /// Shape values at the 4-point rule, nodes x points.
    pub n_t: DMatrix<f64>,
}

impl ElementKit {
    pub fn n_unkn(&self) -> usize {
        self.n_unkn
    }

    /// DOFs per element.
    pub fn n_dofs(&self) -> usize {
        4 * self.n_unkn
    }
}

fn symmetric_part(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Build the element matrices for a symmetric constitutive matrix `c`
/// (3x3 elastic with `n_unkn = 2`, 2x2 conductivity with `n_unkn = 1`).
pub fn element_kit(c: &DMatrix<f64>, n_unkn: usize) -> Result<ElementKit> {
    let expected = match n_unkn {
        2 => 3,
        1 => 2,
        _ => return invalid(format!("n_unkn must be 1 or 2, got {n_unkn}")),
    };
    if c.nrows() != expected || c.ncols() != expected {
        return invalid(format!(
            "constitutive matrix must be {expected}x{expected} for n_unkn = {n_unkn}"
        ));
    }
    if c != &c.transpose() {
        return invalid("constitutive matrix must be symmetric");
    }

    let rule = gauss_rule(4)?;
    let mut ke_gp = Vec::with_capacity(4);
    let mut density_gp = Vec::with_capacity(4);
    for (p, w) in rule.iter() {
        let (b, det) = b_matrix(p, n_unkn);
        let d = symmetric_part(b.transpose() * c * &b);
        ke_gp.push(&d * (w * det));
        density_gp.push(d);
    }
    let ke = ke_gp
        .iter()
        .fold(DMatrix::zeros(4 * n_unkn, 4 * n_unkn), |acc, k| acc + k);

    let centre = gauss_rule(1)?;
    let (p, w) = (centre.points[0], centre.weights[0]);
    let (b, det) = b_matrix(p, n_unkn);
    let density_cut = symmetric_part(b.transpose() * c * &b);
    let ke_cut = &density_cut * (w * det);

    let ke_lap = DMatrix::from_row_slice(
        4,
        4,
        &[
            4.0, -1.0, -2.0, -1.0, //
            -1.0, 4.0, -1.0, -2.0, //
            -2.0, -1.0, 4.0, -1.0, //
            -1.0, -2.0, -1.0, 4.0,
        ],
    ) / 6.0;
    let me_lap = DMatrix::from_row_slice(
        4,
        4,
        &[
            4.0, 2.0, 1.0, 2.0, //
            2.0, 4.0, 2.0, 1.0, //
            1.0, 2.0, 4.0, 2.0, //
            2.0, 1.0, 2.0, 4.0,
        ],
    ) / 36.0;
    let n_t = DMatrix::from_fn(4, rule.len(), |a, i| shape_values(rule.points[i])[a]);

    Ok(ElementKit {
        n_unkn,
        rule,
        ke_gp,
        ke,
        ke_cut,
        density_gp,
        density_cut,
        ke_lap,
        me_lap,
        n_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{constitutive, Isotropic2D};

    fn elastic_kit() -> ElementKit {
        let c = constitutive(&Isotropic2D::plane_stress(1.0, 0.3)).unwrap();
        element_kit(&c, 2).unwrap()
    }

    #[test]
    fn shape_values_basic() {
        assert_eq!(shape_values([0.0, 0.0]), [0.25; 4]);
        assert_eq!(shape_values([-1.0, -1.0]), [1.0, 0.0, 0.0, 0.0]);
        let g = 1.0 / 3f64.sqrt();
        let n = shape_values([g, -g]);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(n.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rigid_translation_has_no_strain() {
        let u = nalgebra::DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        for p in gauss_rule(4).unwrap().points {
            let (b, det) = strain_displacement(p);
            assert!((&b * &u).norm() < 1e-15);
            assert_eq!(det, 0.25);
        }
    }

    #[test]
    fn uniform_stretch_is_reproduced() {
        // x-coordinates of the unit square nodes interleaved with zero.
        let u = nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        for p in gauss_rule(4).unwrap().points {
            let (b, _) = strain_displacement(p);
            let eps = &b * &u;
            assert!((eps[0] - 1.0).abs() < 1e-15 && eps[1].abs() < 1e-15 && eps[2].abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_matrices_exact() {
        let kit = elastic_kit();
        let k = [
            [4.0, -1.0, -2.0, -1.0],
            [-1.0, 4.0, -1.0, -2.0],
            [-2.0, -1.0, 4.0, -1.0],
            [-1.0, -2.0, -1.0, 4.0],
        ];
        let m = [
            [4.0, 2.0, 1.0, 2.0],
            [2.0, 4.0, 2.0, 1.0],
            [1.0, 2.0, 4.0, 2.0],
            [2.0, 1.0, 2.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(kit.ke_lap[(i, j)], k[i][j] / 6.0);
                assert_eq!(kit.me_lap[(i, j)], m[i][j] / 36.0);
            }
        }
    }

    #[test]
    fn laplacian_matrices_match_quadrature() {
        let kit = elastic_kit();
        let rule = gauss_rule(36).unwrap();
        let mut k = DMatrix::<f64>::zeros(4, 4);
        let mut m = DMatrix::<f64>::zeros(4, 4);
        for (p, w) in rule.iter() {
            let (b, det) = gradient_matrix(p);
            k += b.transpose() * &b * (w * det);
            let n = nalgebra::DVector::from_row_slice(&shape_values(p));
            m += &n * n.transpose() * (w * det);
        }
        assert!((k - &kit.ke_lap).amax() < 1e-14);
        assert!((m - &kit.me_lap).amax() < 1e-14);
    }

    #[test]
    fn elastic_stiffness_properties() {
        let kit = elastic_kit();
        for k in [&kit.ke, &kit.ke_cut] {
            assert!((k - k.transpose()).amax() < 1e-15);
            let eig = k.clone().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&l| l > -1e-12));
        }
        let eig = kit.ke.clone().symmetric_eigen().eigenvalues;
        let zero = eig.iter().filter(|l| l.abs() < 1e-12).count();
        assert_eq!(zero, 3, "rank 5 expected, eigenvalues {eig}");

        // Rigid rotation about the element centre: u = (-(y - 1/2), x - 1/2).
        let xy = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let rot: Vec<f64> = xy.iter().flat_map(|[x, y]| [-(y - 0.5), x - 0.5]).collect();
        let u = nalgebra::DVector::from_vec(rot);
        assert!((&kit.ke * u).norm() < 1e-14);
    }

    #[test]
    fn stiffness_matches_high_order_oracle() {
        let c = constitutive(&Isotropic2D::plane_stress(1.0, 0.3)).unwrap();
        let kit = element_kit(&c, 2).unwrap();
        let mut oracle = DMatrix::<f64>::zeros(8, 8);
        for (p, w) in gauss_rule(36).unwrap().iter() {
            let (b, det) = strain_displacement(p);
            oracle += b.transpose() * &c * &b * (w * det);
        }
        assert!((kit.ke[(0, 0)] - oracle[(0, 0)]).abs() < 1e-12);
        assert!((&kit.ke - oracle).amax() < 1e-12);
    }

    #[test]
    fn thermal_kit_null_space_is_constant() {
        let c = DMatrix::identity(2, 2);
        let kit = element_kit(&c, 1).unwrap();
        assert_eq!(kit.ke.nrows(), 4);
        let ones = nalgebra::DVector::from_element(4, 1.0);
        assert!((&kit.ke * ones).norm() < 1e-15);
        // Isotropic unit conductivity reproduces the Laplacian matrix.
        assert!((&kit.ke - &kit.ke_lap).amax() < 1e-15);
    }

    #[test]
    fn rejects_bad_constitutive() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 0.5]);
        assert!(element_kit(&c, 2).is_err());
        assert!(element_kit(&DMatrix::identity(2, 2), 2).is_err());
        assert!(element_kit(&DMatrix::identity(2, 2), 3).is_err());
    }
}
