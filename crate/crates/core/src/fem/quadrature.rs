use crate::error::{invalid, Result};

/// Tensor-product Gauss-Legendre rule on the parent square `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn gauss_legendre_1d(n: usize) -> (&'static [f64], &'static [f64]) {
    const X1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    const X2: [f64; 2] = [-G, G];
    const W2: [f64; 2] = [1.0, 1.0];
    const X6: [f64; 6] = [
        -0.932_469_514_203_152,
        -0.661_209_386_466_264_5,
        -0.238_619_186_083_196_9,
        0.238_619_186_083_196_9,
        0.661_209_386_466_264_5,
        0.932_469_514_203_152,
    ];
    const W6: [f64; 6] = [
        0.171_324_492_379_170_3,
        0.360_761_573_048_138_6,
        0.467_913_934_572_691,
        0.467_913_934_572_691,
        0.360_761_573_048_138_6,
        0.171_324_492_379_170_3,
    ];
    match n {
        1 => (&X1, &W1),
        2 => (&X2, &W2),
        _ => (&X6, &W6),
    }
}

/// Rule with `n` points in total: 1 (1x1), 4 (2x2) or 36 (6x6).
///
/// Points are ordered with `xi` varying fastest.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    let per_dir = match n {
        1 => 1,
        4 => 2,
        36 => 6,
        _ => return invalid(format!("unsupported quadrature size {n} (expected 1, 4 or 36)")),
    };
    let (x, w) = gauss_legendre_1d(per_dir);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..per_dir {
        for i in 0..per_dir {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}
