use rayon::prelude::*;

use super::element::ElementKit;
use super::sparse::{CsrMatrix, SparsityPattern};
use crate::error::{invalid, Result};
use crate::grid::{DofTable, StructuredGrid};
use crate::material::InterpolationLaw;

/// Lumped spring to ground on a single DOF (mechanism ports).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub dof: usize,
    pub stiffness: f64,
}

/// Reusable global stiffness assembler for a fixed grid and element kit.
#[derive(Debug, Clone)]
pub struct StiffnessAssembler {
    pattern: SparsityPattern,
    kit: ElementKit,
    n_elements: usize,
}

impl StiffnessAssembler {
    pub fn new(dofs: &DofTable, kit: ElementKit) -> Result<Self> {
        if dofs.n_unkn() != kit.n_unkn() {
            return invalid("DOF table and element kit disagree on unknowns per node");
        }
        Ok(Self {
            pattern: SparsityPattern::from_dofs(dofs),
            kit,
            n_elements: dofs.n_rows(),
        })
    }

    pub fn kit(&self) -> &ElementKit {
        &self.kit
    }

    pub fn n_dofs(&self) -> usize {
        self.pattern.n()
    }

    /// `K = sum_e chi_beta(chi_e)^m K_e + springs`, where `K_e` is the
    /// sub-integrated matrix on cut elements.
    pub fn assemble(
        &self,
        chi: &[f64],
        cut: &[bool],
        law: &InterpolationLaw,
        springs: &[Spring],
    ) -> Result<CsrMatrix> {
        if chi.len() != self.n_elements || cut.len() != self.n_elements {
            return invalid("chi and cut flags must have one entry per element");
        }
        if let Some(c) = chi.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return invalid(format!("chi must lie in [0, 1], got {c}"));
        }
        let n = self.n_dofs();
        if let Some(s) = springs.iter().find(|s| s.dof >= n) {
            return invalid(format!("spring on DOF {} outside 0..{n}", s.dof));
        }
        let coeffs: Vec<f64> = chi.par_iter().map(|&c| law.stiffness(c)).collect();
        let kit = &self.kit;
        let mut k = self
            .pattern
            .assemble(&coeffs, |e| if cut[e] { &kit.ke_cut } else { &kit.ke });
        for s in springs {
            let p = k.position(s.dof, s.dof).expect("diagonal always present");
            k.values_mut()[p] += s.stiffness;
        }
        Ok(k)
    }
}

/// One-shot assembly of the global stiffness matrix.
pub fn assemble_stiffness(
    grid: &StructuredGrid,
    dofs: &DofTable,
    kit: &ElementKit,
    chi: &[f64],
    law: &InterpolationLaw,
    cut: &[bool],
    springs: &[Spring],
) -> Result<CsrMatrix> {
    if dofs.n_rows() != grid.n_elements() {
        return invalid("DOF table does not match the grid");
    }
    StiffnessAssembler::new(dofs, kit.clone())?.assemble(chi, cut, law, springs)
}
