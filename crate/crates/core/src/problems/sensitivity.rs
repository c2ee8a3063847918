use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{ProblemDefinition, ProblemKind};
use crate::error::{invalid, Result};
use crate::fem::ElementKit;
use crate::grid::DofTable;
use crate::material::InterpolationLaw;

/// Pseudo-energy at the four Gauss points of every element.
pub type SensitivityField = Vec<[f64; 4]>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bilinear(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += m[(i, j)] * b[j];
        }
        s += a[i] * r;
    }
    s
}

/// `factor * gamma(chi_e) * a_e^T D_i b_e`, with the centre-point product
/// replicated on cut elements.
#[allow(clippy::too_many_arguments)]
fn pseudo_energy(
    a: &[f64],
    b: &[f64],
    factor: f64,
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
    law: &InterpolationLaw,
) -> Result<SensitivityField> {
    let ne = dofs.n_rows();
    if chi.len() != ne || cut.len() != ne {
        return invalid("chi and cut flags must have one entry per element");
    }
    if a.len() != dofs.n_dofs() || b.len() != dofs.n_dofs() {
        return invalid("solution length does not match the DOF table");
    }
    if kit.n_unkn() != dofs.n_unkn() {
        return invalid("element kit and DOF table disagree on unknowns per node");
    }
    (0..ne)
        .into_par_iter()
        .map(|e| {
            let row = dofs.row(e);
            let ae: Vec<f64> = row.iter().map(|&d| a[d]).collect();
            let be: Vec<f64> = row.iter().map(|&d| b[d]).collect();
            let gamma = factor * law.sensitivity(chi[e]);
            if cut[e] {
                Ok([gamma * bilinear(&kit.density_cut, &ae, &be); 4])
            } else {
                Ok(std::array::from_fn(|i| {
                    gamma * bilinear(&kit.density_gp[i], &ae, &be)
                }))
            }
        })
        .collect()
}

pub fn sensitivity_compliance(
    u: &[f64],
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
    law: &InterpolationLaw,
) -> Result<SensitivityField> {
    pseudo_energy(u, u, 1.0, dofs, kit, chi, cut, law)
}

/// Sum of the compliance sensitivities of every loading state.
pub fn sensitivity_multiload(
    us: &[Vec<f64>],
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
    law: &InterpolationLaw,
) -> Result<SensitivityField> {
    let (first, rest) = match us.split_first() {
        Some(x) => x,
        None => return invalid("multiload sensitivity needs at least one state"),
    };
    let mut total = sensitivity_compliance(first, dofs, kit, chi, cut, law)?;
    for u in rest {
        let s = sensitivity_compliance(u, dofs, kit, chi, cut, law)?;
        for (t, v) in total.iter_mut().zip(&s) {
            for i in 0..4 {
                t[i] += v[i];
            }
        }
    }
    Ok(total)
}

/// `-gamma u2^T D u1`: `u1` answers the input load, `u2` the dummy output load.
pub fn sensitivity_mechanism(
    u1: &[f64],
    u2: &[f64],
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
    law: &InterpolationLaw,
) -> Result<SensitivityField> {
    pseudo_energy(u2, u1, -1.0, dofs, kit, chi, cut, law)
}

/// Same form as compliance, on temperatures with the conductivity kit.
pub fn sensitivity_thermal(
    theta: &[f64],
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
    law: &InterpolationLaw,
) -> Result<SensitivityField> {
    if kit.n_unkn() != 1 {
        return invalid("thermal sensitivity needs a scalar (one unknown per node) kit");
    }
    pseudo_energy(theta, theta, 1.0, dofs, kit, chi, cut, law)
}

/// Dispatch on the problem kind.
pub fn sensitivity(
    problem: &ProblemDefinition,
    solutions: &[Vec<f64>],
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    cut: &[bool],
) -> Result<SensitivityField> {
    let law = &problem.law;
    if solutions.len() != problem.loads.len() {
        return invalid("one solution per load column is required");
    }
    match problem.kind {
        ProblemKind::Compliance => sensitivity_compliance(&solutions[0], dofs, kit, chi, cut, law),
        ProblemKind::Multiload => sensitivity_multiload(solutions, dofs, kit, chi, cut, law),
        ProblemKind::Mechanism => {
            sensitivity_mechanism(&solutions[0], &solutions[1], dofs, kit, chi, cut, law)
        }
        ProblemKind::Thermal => sensitivity_thermal(&solutions[0], dofs, kit, chi, cut, law),
    }
}

/// Objective value for the solved states.
pub fn cost(problem: &ProblemDefinition, solutions: &[Vec<f64>]) -> Result<f64> {
    let f = &problem.loads;
    if solutions.len() != f.len() || solutions.iter().zip(f).any(|(u, f)| u.len() != f.len()) {
        return invalid("solutions do not match the load columns");
    }
    Ok(match problem.kind {
        ProblemKind::Compliance | ProblemKind::Multiload => {
            f.iter().zip(solutions).map(|(f, u)| dot(f, u)).sum()
        }
        ProblemKind::Mechanism => -dot(&f[1], &solutions[0]),
        ProblemKind::Thermal => 0.5 * dot(&f[0], &solutions[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{element_kit, gauss_rule, strain_displacement};
    use crate::grid::{build_grid, dof_table};
    use crate::material::{conductivity, constitutive, Isotropic2D, ThermalMaterial};
    use crate::problems::{Material, ProblemDefinition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn elastic(nelx: usize, nely: usize) -> (DofTable, ElementKit) {
        let g = build_grid(nelx, nely).unwrap();
        let c = constitutive(&Isotropic2D::plane_stress(1.0, 0.3)).unwrap();
        (dof_table(&g, 2).unwrap(), element_kit(&c, 2).unwrap())
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_and_rigid_fields_give_zero() {
        let (d, kit) = elastic(2, 2);
        let law = InterpolationLaw::compliance();
        let (chi, cut) = (vec![1.0; 4], vec![false; 4]);
        let s = sensitivity_compliance(&[0.0; 18], &d, &kit, &chi, &cut, &law).unwrap();
        assert!(s.iter().flatten().all(|&v| v == 0.0));
        let rigid: Vec<f64> = (0..18).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }).collect();
        let s = sensitivity_compliance(&rigid, &d, &kit, &chi, &cut, &law).unwrap();
        assert!(s.iter().flatten().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn uniform_stretch_matches_hand_energy() {
        let g = build_grid(1, 1).unwrap();
        let (d, kit) = elastic(1, 1);
        let c = constitutive(&Isotropic2D::plane_stress(1.0, 0.3)).unwrap();
        // u_x = x: strain (1, 0, 0), energy density form eps^T C eps = C11.
        let mut u = vec![0.0; 8];
        for (n, &[x, _]) in g.coords().iter().enumerate() {
            u[2 * n] = x as f64;
        }
        let law = InterpolationLaw::compliance();
        let s = sensitivity_compliance(&u, &d, &kit, &[0.7], &[false], &law).unwrap();
        // Oracle: B^T C B at each point from the 36-point rule evaluated
        // independently, then compared through the strain.
        let rule = gauss_rule(36).unwrap();
        for p in rule.points.iter() {
            let (b, _) = strain_displacement(*p);
            let ue = nalgebra::DVector::from_iterator(8, d.row(0).iter().map(|&k| u[k]));
            let eps = &b * &ue;
            assert!((eps[0] - 1.0).abs() < 1e-12 && eps[1].abs() < 1e-12);
        }
        let expect = law.sensitivity(0.7) * c[(0, 0)];
        for v in s[0] {
            assert!((v - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn cut_elements_replicate_centre_value() {
        let (d, kit) = elastic(2, 1);
        let u = random(12, 4);
        let law = InterpolationLaw::compliance();
        let s = sensitivity_compliance(&u, &d, &kit, &[0.4, 1.0], &[true, false], &law).unwrap();
        assert!(s[0].iter().all(|&v| v == s[0][0]));
        assert!(s.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn multiload_identities() {
        let (d, kit) = elastic(2, 2);
        let law = InterpolationLaw::compliance();
        let (chi, cut) = (vec![1.0, 0.3, 0.8, 0.0], vec![false, true, false, false]);
        let (u1, u2) = (random(18, 1), random(18, 2));
        let single = sensitivity_compliance(&u1, &d, &kit, &chi, &cut, &law).unwrap();
        let one = sensitivity_multiload(std::slice::from_ref(&u1), &d, &kit, &chi, &cut, &law).unwrap();
        assert_eq!(one, single);
        let twice = sensitivity_multiload(&[u1.clone(), u1.clone()], &d, &kit, &chi, &cut, &law).unwrap();
        for (a, b) in twice.iter().flatten().zip(single.iter().flatten()) {
            assert_eq!(*a, 2.0 * b);
        }
        let second = sensitivity_compliance(&u2, &d, &kit, &chi, &cut, &law).unwrap();
        let both = sensitivity_multiload(&[u1, u2], &d, &kit, &chi, &cut, &law).unwrap();
        for ((a, b), c) in both
            .iter()
            .flatten()
            .zip(single.iter().flatten())
            .zip(second.iter().flatten())
        {
            assert!((a - b - c).abs() < 1e-12);
        }
        assert!(sensitivity_multiload(&[], &d, &kit, &chi, &cut, &law).is_err());
    }

    #[test]
    fn mechanism_identities() {
        let (d, kit) = elastic(2, 2);
        let law = InterpolationLaw::mechanism();
        let (chi, cut) = (vec![1.0, 0.5, 0.2, 1.0], vec![false, true, false, false]);
        let (u1, u2) = (random(18, 7), random(18, 8));
        let zero = sensitivity_mechanism(&u1, &[0.0; 18], &d, &kit, &chi, &cut, &law).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
        let same = sensitivity_mechanism(&u1, &u1, &d, &kit, &chi, &cut, &law).unwrap();
        let comp = sensitivity_compliance(&u1, &d, &kit, &chi, &cut, &law).unwrap();
        for (a, b) in same.iter().flatten().zip(comp.iter().flatten()) {
            assert!((a + b).abs() < 1e-14);
        }
        let ab = sensitivity_mechanism(&u1, &u2, &d, &kit, &chi, &cut, &law).unwrap();
        let ba = sensitivity_mechanism(&u2, &u1, &d, &kit, &chi, &cut, &law).unwrap();
        for (a, b) in ab.iter().flatten().zip(ba.iter().flatten()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn thermal_sensitivity() {
        let g = build_grid(1, 1).unwrap();
        let d = dof_table(&g, 1).unwrap();
        let law = InterpolationLaw::compliance();
        let kit1 = element_kit(&conductivity(&ThermalMaterial::isotropic(1.0)).unwrap(), 1).unwrap();
        let kit2 = element_kit(&conductivity(&ThermalMaterial::isotropic(2.0)).unwrap(), 1).unwrap();
        let s = sensitivity_thermal(&[3.0; 4], &d, &kit1, &[1.0], &[false], &law).unwrap();
        assert!(s[0].iter().all(|v| v.abs() < 1e-14));
        // theta = x: |grad|^2 = 1 so the point value is kappa * gamma.
        let theta: Vec<f64> = g.coords().iter().map(|&[x, _]| x as f64).collect();
        let s1 = sensitivity_thermal(&theta, &d, &kit1, &[1.0], &[false], &law).unwrap();
        let s2 = sensitivity_thermal(&theta, &d, &kit2, &[1.0], &[false], &law).unwrap();
        for i in 0..4 {
            assert!((s1[0][i] - law.sensitivity(1.0)).abs() < 1e-12);
            assert!((s2[0][i] - 2.0 * s1[0][i]).abs() < 1e-12);
        }
    }

    fn scalar_problem(kind: ProblemKind, loads: Vec<Vec<f64>>) -> ProblemDefinition {
        ProblemDefinition {
            name: "toy".into(),
            kind,
            nelx: 1,
            nely: 1,
            loads,
            fixed_dofs: vec![0],
            active_nodes: vec![],
            passive_nodes: vec![],
            springs: vec![],
            material: Material::Elastic(Isotropic2D::plane_stress(1.0, 0.3)),
            law: InterpolationLaw::compliance(),
        }
    }

    #[test]
    fn costs() {
        let p = scalar_problem(ProblemKind::Compliance, vec![vec![0.0; 8]]);
        assert_eq!(cost(&p, &[vec![1.0; 8]]).unwrap(), 0.0);
        // Scalar system K = 2, f = 1: u = 0.5 and J = 0.5.
        let mut f = vec![0.0; 8];
        f[3] = 1.0;
        let mut u = vec![0.0; 8];
        u[3] = 0.5;
        let p = scalar_problem(ProblemKind::Compliance, vec![f.clone()]);
        assert_eq!(cost(&p, &[u.clone()]).unwrap(), 0.5);
        let p = scalar_problem(ProblemKind::Multiload, vec![f.clone(), f.clone()]);
        assert_eq!(cost(&p, &[u.clone(), u.clone()]).unwrap(), 1.0);
        assert!(cost(&p, &[u.clone()]).is_err());
    }

    #[test]
    fn mechanism_cost_sign() {
        // Output port DOF 5 with dummy load pointing +; input response moves it.
        let mut dummy = vec![0.0; 8];
        dummy[5] = 1.0;
        let p = scalar_problem(ProblemKind::Mechanism, vec![vec![0.0; 8], dummy]);
        let mut along = vec![0.0; 8];
        along[5] = 0.2;
        let against: Vec<f64> = along.iter().map(|v| -v).collect();
        assert!(cost(&p, &[along, vec![0.0; 8]]).unwrap() < 0.0);
        assert!(cost(&p, &[against, vec![0.0; 8]]).unwrap() > 0.0);
    }
}
