//! Problem definitions, costs, sensitivities and the example library.

mod library;
mod sensitivity;

use nalgebra::DMatrix;

pub use library::{default_example, example_info, example_library, ExampleInfo, EXAMPLES};
pub use sensitivity::{
    cost, sensitivity, sensitivity_compliance, sensitivity_mechanism, sensitivity_multiload,
    sensitivity_thermal, SensitivityField,
};

use crate::error::{invalid, Result};
use crate::fem::Spring;
use crate::grid::{build_grid, StructuredGrid};
use crate::material::{conductivity, constitutive, InterpolationLaw, Isotropic2D, ThermalMaterial};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Compliance,
    Multiload,
    Mechanism,
    Thermal,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Compliance => "compliance",
            Self::Multiload => "multiload",
            Self::Mechanism => "mechanism",
            Self::Thermal => "thermal",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "compliance" => Ok(Self::Compliance),
            "multiload" => Ok(Self::Multiload),
            "mechanism" => Ok(Self::Mechanism),
            "thermal" => Ok(Self::Thermal),
            _ => Err(format!(
                "unknown problem kind `{s}` (expected compliance, multiload, mechanism or thermal)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Elastic(Isotropic2D),
    Thermal(ThermalMaterial),
}

/// A fully specified optimization problem on a structured grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefinition {
    pub name: String,
    pub kind: ProblemKind,
    pub nelx: usize,
    pub nely: usize,
    /// One column per loading state. Mechanisms carry the input load first
    /// and the dummy output load second.
    pub loads: Vec<Vec<f64>>,
    pub fixed_dofs: Vec<usize>,
    pub active_nodes: Vec<usize>,
    pub passive_nodes: Vec<usize>,
    pub springs: Vec<Spring>,
    pub material: Material,
    pub law: InterpolationLaw,
}

impl ProblemDefinition {
    pub fn n_unkn(&self) -> usize {
        match self.material {
            Material::Elastic(_) => 2,
            Material::Thermal(_) => 1,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_unkn() * (self.nelx + 1) * (self.nely + 1)
    }

    pub fn grid(&self) -> Result<StructuredGrid> {
        build_grid(self.nelx, self.nely)
    }

    pub fn constitutive(&self) -> Result<DMatrix<f64>> {
        match &self.material {
            Material::Elastic(m) => constitutive(m),
            Material::Thermal(m) => conductivity(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dofs();
        let n_nodes = (self.nelx + 1) * (self.nely + 1);
        let columns = self.loads.len();
        match (self.kind, &self.material) {
            (ProblemKind::Thermal, Material::Thermal(_)) => {}
            (ProblemKind::Thermal, _) | (_, Material::Thermal(_)) => {
                return invalid("thermal problems need a thermal material and vice versa");
            }
            _ => {}
        }
        match self.kind {
            ProblemKind::Compliance | ProblemKind::Thermal if columns != 1 => {
                return invalid(format!("{} problems take one load column", self.kind.name()));
            }
            ProblemKind::Multiload if columns == 0 => {
                return invalid("multiload problems need at least one load column");
            }
            ProblemKind::Mechanism if columns != 2 => {
                return invalid("mechanism problems take an input and a dummy output load");
            }
            ProblemKind::Mechanism if self.springs.is_empty() => {
                return invalid("mechanism problems need springs at the ports");
            }
            _ => {}
        }
        if let Some(c) = self.loads.iter().find(|c| c.len() != n) {
            return invalid(format!("load column has {} entries, expected {n}", c.len()));
        }
        if let Some(&d) = self.fixed_dofs.iter().find(|&&d| d >= n) {
            return invalid(format!("fixed DOF {d} outside 0..{n}"));
        }
        if self.fixed_dofs.is_empty() {
            return invalid("no fixed DOFs: the system is singular");
        }
        for &d in &self.fixed_dofs {
            if self.loads.iter().any(|c| c[d] != 0.0) {
                return invalid(format!("load applied on fixed DOF {d}"));
            }
        }
        if let Some(s) = self.springs.iter().find(|s| s.dof >= n || !(s.stiffness >= 0.0)) {
            return invalid(format!("invalid spring on DOF {}", s.dof));
        }
        crate::optimizer::NodeConstraints::new(&self.active_nodes, &self.passive_nodes, n_nodes)?;
        Ok(())
    }
}

/// DOF numbers of `nodes` for component `c` (0 = x, 1 = y).
pub(crate) fn node_dofs(nodes: &[usize], n_unkn: usize, c: usize) -> impl Iterator<Item = usize> + '_ {
    nodes.iter().map(move |&n| n_unkn * n + c)
}
