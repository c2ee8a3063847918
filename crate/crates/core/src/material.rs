//! Constitutive matrices and the relaxed characteristic-function law.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneModel {
    PlaneStress,
    PlaneStrain,
}

/// Isotropic linear elastic solid in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isotropic2D {
    pub e: f64,
    pub nu: f64,
    pub model: PlaneModel,
}

impl Isotropic2D {
    pub fn plane_stress(e: f64, nu: f64) -> Self {
        Self {
            e,
            nu,
            model: PlaneModel::PlaneStress,
        }
    }

    pub fn plane_strain(e: f64, nu: f64) -> Self {
        Self {
            e,
            nu,
            model: PlaneModel::PlaneStrain,
        }
    }
}

/// Voigt-ordered `(xx, yy, xy)` elasticity matrix with engineering shear.
pub fn constitutive(mat: &Isotropic2D) -> Result<DMatrix<f64>> {
    let Isotropic2D { e, nu, model } = *mat;
    if !(e > 0.0) || !e.is_finite() {
        return invalid(format!("Young's modulus must be positive, got {e}"));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return invalid(format!("Poisson ratio must lie in (-1, 0.5), got {nu}"));
    }
    let d = match model {
        PlaneModel::PlaneStress => {
            let f = e / (1.0 - nu * nu);
            DMatrix::from_row_slice(
                3,
                3,
                &[f, f * nu, 0.0, f * nu, f, 0.0, 0.0, 0.0, f * (1.0 - nu) / 2.0],
            )
        }
        PlaneModel::PlaneStrain => {
            let f = e / ((1.0 - nu) * (1.0 - 2.0 * nu));
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    f * (1.0 - nu),
                    f * nu,
                    0.0,
                    f * nu,
                    f * (1.0 - nu),
                    0.0,
                    0.0,
                    0.0,
                    f * (1.0 - 2.0 * nu) / 2.0,
                ],
            )
        }
    };
    Ok(d)
}

/// Fourier conductor: `kappa * anisotropy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalMaterial {
    pub kappa: f64,
    pub anisotropy: [[f64; 2]; 2],
}

impl ThermalMaterial {
    pub fn isotropic(kappa: f64) -> Self {
        Self {
            kappa,
            anisotropy: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}

pub fn conductivity(mat: &ThermalMaterial) -> Result<DMatrix<f64>> {
    let a = mat.anisotropy;
    let k = DMatrix::from_fn(2, 2, |i, j| mat.kappa * a[i][j]);
    if k[(0, 1)] != k[(1, 0)] {
        return invalid("conductivity tensor must be symmetric");
    }
    let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
    if !(k[(0, 0)] > 0.0 && det > 0.0) {
        return invalid("conductivity tensor must be positive definite");
    }
    Ok(k)
}

/// Power law on the relaxed characteristic function
/// `chi_beta = chi + (1 - chi) * beta` with `beta = alpha^(1/m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationLaw {
    m: f64,
    alpha: f64,
    beta: f64,
}

impl InterpolationLaw {
    pub fn new(m: f64, alpha: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return invalid(format!("exponent m must exceed 1, got {m}"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("contrast factor must lie in (0, 1), got {alpha}"));
        }
        Ok(Self {
            m,
            alpha,
            beta: alpha.powf(1.0 / m),
        })
    }

    /// Compliance-type problems.
    pub fn compliance() -> Self {
        Self::new(5.0, 1e-5).expect("valid defaults")
    }

    /// Compliant mechanisms use a softer penalisation for convergence.
    pub fn mechanism() -> Self {
        Self::new(3.0, 1e-2).expect("valid defaults")
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    fn relaxed(&self, chi: f64) -> f64 {
        chi + (1.0 - chi) * self.beta
    }

    /// Stiffness multiplier `chi_beta^m`.
    #[inline]
    pub fn stiffness(&self, chi: f64) -> f64 {
        self.relaxed(chi).powf(self.m)
    }

    /// Sensitivity multiplier `m chi_beta^(m-1) (1 - beta)`.
    #[inline]
    pub fn sensitivity(&self, chi: f64) -> f64 {
        self.m * self.relaxed(chi).powf(self.m - 1.0) * (1.0 - self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyMode {
    Stiffness,
    Sensitivity,
}

pub fn interp_property(chi: f64, law: &InterpolationLaw, mode: PropertyMode) -> Result<f64> {
    if !(0.0..=1.0).contains(&chi) {
        return invalid(format!("chi must lie in [0, 1], got {chi}"));
    }
    Ok(match mode {
        PropertyMode::Stiffness => law.stiffness(chi),
        PropertyMode::Sensitivity => law.sensitivity(chi),
    })
}
