use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fem::{gauss_rule, shape_values, QuadratureRule};
use crate::grid::StructuredGrid;

/// Heaviside with `H(0) = 1`: a zero level counts as material.
#[inline]
fn heaviside(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Result of integrating the characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    /// Void fraction `1 - sum(chi) / n_elements`.
    pub vol: f64,
    pub chi: Vec<f64>,
    /// Elements crossed by the zero level set.
    pub cut: Vec<bool>,
}

/// Element volume integrator with precomputed shape values.
#[derive(Debug, Clone)]
pub struct VolumeIntegrator {
    connect: Vec<[usize; 4]>,
    n_nodes: usize,
    weights: Vec<f64>,
    shapes: Vec<[f64; 4]>,
}

impl VolumeIntegrator {
    pub fn new(grid: &StructuredGrid, rule: &QuadratureRule) -> Self {
        Self {
            connect: grid.connect().to_vec(),
            n_nodes: grid.n_nodes(),
            // detJ = 1/4 on unit elements.
            weights: rule.weights.iter().map(|w| 0.25 * w).collect(),
            shapes: rule.points.iter().map(|&p| shape_values(p)).collect(),
        }
    }

    /// Default 36-point integrator.
    pub fn for_grid(grid: &StructuredGrid) -> Self {
        Self::new(grid, &gauss_rule(36).expect("36-point rule is supported"))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn integrate(&self, psi: &[f64]) -> Result<VolumeField> {
        if psi.len() != self.n_nodes {
            return invalid(format!("psi has {} values, expected {}", psi.len(), self.n_nodes));
        }
        let per_element: Vec<(f64, bool)> = self
            .connect
            .par_iter()
            .map(|nodes| {
                let p = nodes.map(|n| psi[n]);
                let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo >= 0.0 {
                    (1.0, false)
                } else if hi < 0.0 {
                    (0.0, false)
                } else {
                    let chi = self
                        .shapes
                        .iter()
                        .zip(&self.weights)
                        .map(|(n, w)| {
                            let v = n[0] * p[0] + n[1] * p[1] + n[2] * p[2] + n[3] * p[3];
                            w * heaviside(v)
                        })
                        .sum();
                    (chi, true)
                }
            })
            .collect();
        let (chi, cut): (Vec<f64>, Vec<bool>) = per_element.into_iter().unzip();
        let solid: f64 = chi.iter().sum();
        Ok(VolumeField {
            vol: 1.0 - solid / chi.len() as f64,
            chi,
            cut,
        })
    }
}

/// Void fraction, element fractions and cut flags of a nodal level-set field.
pub fn compute_volume(grid: &StructuredGrid, psi: &[f64], rule: &QuadratureRule) -> Result<VolumeField> {
    VolumeIntegrator::new(grid, rule).integrate(psi)
}

/// Validated active (solid) and passive (void) node sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeConstraints {
    active: Vec<usize>,
    passive: Vec<usize>,
}

impl NodeConstraints {
    pub fn new(active: &[usize], passive: &[usize], n_nodes: usize) -> Result<Self> {
        let mut tag = vec![0u8; n_nodes];
        for (set, bit) in [(active, 1u8), (passive, 2u8)] {
            for &n in set {
                if n >= n_nodes {
                    return invalid(format!("constrained node {n} outside 0..{n_nodes}"));
                }
                tag[n] |= bit;
            }
        }
        if let Some(n) = tag.iter().position(|&t| t == 3) {
            return invalid(format!("node {n} is both active and passive"));
        }
        Ok(Self {
            active: active.to_vec(),
            passive: passive.to_vec(),
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn passive(&self) -> &[usize] {
        &self.passive
    }

    pub fn apply(&self, psi: &mut [f64], alpha0: f64) {
        for &n in &self.active {
            psi[n] = alpha0;
        }
        for &n in &self.passive {
            psi[n] = -alpha0;
        }
    }
}

/// Force `+alpha0` on active nodes and `-alpha0` on passive nodes.
pub fn apply_node_constraints(
    psi: &mut [f64],
    active: &[usize],
    passive: &[usize],
    alpha0: f64,
) -> Result<()> {
    NodeConstraints::new(active, passive, psi.len())?.apply(psi, alpha0);
    Ok(())
}
