use log::debug;

use super::sparse::CsrMatrix;
use crate::error::{invalid, Error, Result};

/// Linear solver family used for both the equilibrium and filter systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverStrategy {
    #[default]
    Direct,
    Iterative,
}

const PIVOT_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const MINRES_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 3;

/// Variable-band (skyline) Cholesky factor `A = L L^T`, stored by rows.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let mut first = vec![0; n];
        let mut start = vec![0; n + 1];
        for i in 0..n {
            let (cols, _) = a.row(i);
            first[i] = cols.first().map_or(i, |&j| j.min(i));
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let aii = data[start[i] + i - fi];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = data.split_at_mut(start[i]);
                let row_j = &head[start[j]..start[j + 1]];
                let row_i = &mut tail[..=i - fi];
                let dot: f64 = (k0..j).map(|k| row_i[k - fi] * row_j[k - fj]).sum();
                row_i[j - fi] = (row_i[j - fi] - dot) / row_j[j - fj];
            }
            let row_i = &data[start[i]..start[i] + i - fi];
            let d = aii - row_i.iter().map(|x| x * x).sum::<f64>();
            if !(d > PIVOT_TOL * aii.abs()) || !d.is_finite() {
                return Err(Error::SolveFailure(format!(
                    "matrix not positive definite at equation {i} (pivot {d:e}); \
                     the model is probably under-constrained"
                )));
            }
            data[start[i] + i - fi] = d.sqrt();
        }
        Ok(Self {
            n,
            first,
            start,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = (fi..i).map(|k| row[k - fi] * x[k]).sum();
            x[i] = (x[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
    }
}

/// Threshold incomplete Cholesky `A + c·diag(A) ≈ L L^T`.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    /// Columns of `L`, each starting with its diagonal entry.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    /// An entry `L_ij` is dropped when it is smaller than `droptol` times the
    /// 1-norm of column `j` of the lower triangle of `A`.
    pub fn factor(a: &CsrMatrix, droptol: f64, diagcomp: f64) -> Result<Self> {
        let n = a.n();
        // Lower triangle of A by columns = upper triangle by rows (A symmetric).
        let mut col_norm = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    col_norm[j] += v.abs();
                }
            }
        }
        let mut col_ptr = vec![0];
        let mut row_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        // For each column k: position of the next entry still to be used.
        let mut next: Vec<usize> = Vec::with_capacity(n);
        // rows_of[j]: columns k < j with L_jk stored.
        let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut work = vec![0.0; n];
        let mut mark = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();
        for j in 0..n {
            let (cols, vals) = a.row(j);
            for (&i, &v) in cols.iter().zip(vals) {
                if i >= j {
                    let v = if i == j { v * (1.0 + diagcomp) } else { v };
                    work[i] += v;
                    if !mark[i] {
                        mark[i] = true;
                        pattern.push(i);
                    }
                }
            }
            if !mark[j] {
                mark[j] = true;
                pattern.push(j);
            }
            for &k in &rows_of[j] {
                let p0 = next[k];
                let ljk = values[p0];
                debug_assert_eq!(row_idx[p0], j);
                for p in p0..col_ptr[k + 1] {
                    let i = row_idx[p];
                    work[i] -= values[p] * ljk;
                    if !mark[i] {
                        mark[i] = true;
                        pattern.push(i);
                    }
                }
                next[k] = p0 + 1;
            }
            let d = work[j];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SolveFailure(format!(
                    "incomplete Cholesky breakdown at column {j} (pivot {d:e})"
                )));
            }
            let d = d.sqrt();
            pattern.sort_unstable();
            let thresh = droptol * col_norm[j];
            row_idx.push(j);
            values.push(d);
            for &i in &pattern {
                if i > j {
                    let l = work[i] / d;
                    if l.abs() >= thresh {
                        row_idx.push(i);
                        values.push(l);
                        rows_of[i].push(j);
                    }
                }
                work[i] = 0.0;
                mark[i] = false;
            }
            pattern.clear();
            next.push(col_ptr[j] + 1);
            col_ptr.push(row_idx.len());
            rows_of[j] = Vec::new();
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `z = (L L^T)^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for j in 0..self.n {
            let p = self.col_ptr[j];
            z[j] /= self.values[p];
            let zj = z[j];
            for q in p + 1..self.col_ptr[j + 1] {
                z[self.row_idx[q]] -= self.values[q] * zj;
            }
        }
        for j in (0..self.n).rev() {
            let p = self.col_ptr[j];
            let s: f64 = (p + 1..self.col_ptr[j + 1])
                .map(|q| self.values[q] * z[self.row_idx[q]])
                .sum();
            z[j] = (z[j] - s) / self.values[p];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Preconditioned MINRES (Paige & Saunders). Updates `x` in place and
/// returns the number of iterations used. Stops when the preconditioned
/// residual estimate drops below `tol` relative to its initial value.
fn minres(
    a: &CsrMatrix,
    prec: &IncompleteCholesky,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = a.n();
    let mut r1 = residual(a, x, b);
    let mut y = vec![0.0; n];
    prec.apply(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(Error::SolveFailure(
            "preconditioner is not positive definite".into(),
        ));
    }
    if beta1 == 0.0 {
        return Ok(0);
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.mul_vec_into(&v, &mut y);
        if itn >= 2 {
            let c = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        prec.apply(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::SolveFailure(
                "preconditioner is not positive definite".into(),
            ));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            return Ok(itn);
        }
    }
    Ok(max_iter)
}

/// A prepared SPD solver: a complete factorization or an incomplete one
/// driving MINRES.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Direct {
        matrix: CsrMatrix,
        factor: SkylineCholesky,
    },
    Iterative {
        matrix: CsrMatrix,
        prec: IncompleteCholesky,
    },
}

impl SpdSolver {
    pub const ICT_DROPTOL: f64 = 1e-3;
    pub const ICT_DIAGCOMP: f64 = 0.1;

    pub fn prepare(matrix: CsrMatrix, strategy: SolverStrategy) -> Result<Self> {
        Ok(match strategy {
            SolverStrategy::Direct => {
                let factor = SkylineCholesky::factor(&matrix)?;
                Self::Direct { matrix, factor }
            }
            SolverStrategy::Iterative => {
                let prec = IncompleteCholesky::factor(&matrix, Self::ICT_DROPTOL, Self::ICT_DIAGCOMP)?;
                Self::Iterative { matrix, prec }
            }
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        match self {
            Self::Direct { matrix, .. } | Self::Iterative { matrix, .. } => matrix,
        }
    }

    /// Solves `A x = b`, then checks the relative residual.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let a = self.matrix();
        let n = a.n();
        if b.len() != n {
            return invalid(format!("right-hand side has length {}, expected {n}", b.len()));
        }
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = vec![0.0; n];
        match self {
            Self::Direct { factor, .. } => {
                x.copy_from_slice(b);
                factor.solve_in_place(&mut x);
                let mut rel = norm(&residual(a, &x, b)) / bnorm;
                let mut steps = 0;
                while rel > RESIDUAL_TOL && steps < REFINE_STEPS {
                    let dx = factor.solve(&residual(a, &x, b));
                    for (xi, di) in x.iter_mut().zip(&dx) {
                        *xi += di;
                    }
                    rel = norm(&residual(a, &x, b)) / bnorm;
                    steps += 1;
                }
                if !(rel <= RESIDUAL_TOL) {
                    return Err(Error::SolveFailure(format!(
                        "direct solve residual {rel:e} exceeds {RESIDUAL_TOL:e}"
                    )));
                }
            }
            Self::Iterative { prec, .. } => {
                let cap = 10 * n.max(1);
                let mut used = 0;
                loop {
                    used += minres(a, prec, b, &mut x, MINRES_TOL, cap - used)?;
                    let rel = norm(&residual(a, &x, b)) / bnorm;
                    if rel <= RESIDUAL_TOL {
                        debug!("MINRES converged in {used} iterations (residual {rel:e})");
                        break;
                    }
                    if !rel.is_finite() || used >= cap {
                        return Err(Error::SolveFailure(format!(
                            "MINRES did not converge in {used} iterations (residual {rel:e})"
                        )));
                    }
                }
            }
        }
        Ok(x)
    }
}

/// A global system with Dirichlet conditions: `K u = f` with `u[fixed] = prescribed`.
#[derive(Debug, Clone, Copy)]
pub struct SparseSystem<'a> {
    pub matrix: &'a CsrMatrix,
    /// One or more load columns, each of length `n`.
    pub rhs: &'a [Vec<f64>],
    pub fixed: &'a [usize],
    /// Values of the fixed DOFs; zero when empty.
    pub prescribed: &'a [f64],
}

/// Solves every load column on the free-free block.
pub fn solve_linear(system: &SparseSystem<'_>, strategy: SolverStrategy) -> Result<Vec<Vec<f64>>> {
    let k = system.matrix;
    let n = k.n();
    if system.rhs.iter().any(|f| f.len() != n) {
        return invalid("load column length does not match the matrix");
    }
    if !system.prescribed.is_empty() && system.prescribed.len() != system.fixed.len() {
        return invalid("prescribed values must match the fixed DOFs");
    }
    let mut is_fixed = vec![false; n];
    let mut u_c = vec![0.0; n];
    for (idx, &d) in system.fixed.iter().enumerate() {
        if d >= n {
            return invalid(format!("fixed DOF {d} outside 0..{n}"));
        }
        is_fixed[d] = true;
        u_c[d] = system.prescribed.get(idx).copied().unwrap_or(0.0);
    }
    let free: Vec<usize> = (0..n).filter(|&d| !is_fixed[d]).collect();
    if free.is_empty() {
        return Ok(vec![u_c; system.rhs.len()]);
    }
    let has_prescribed = u_c.iter().any(|&v| v != 0.0);
    let k_uc = if has_prescribed {
        k.mul_vec(&u_c)
    } else {
        vec![0.0; n]
    };
    let solver = SpdSolver::prepare(k.submatrix(&free), strategy)?;
    system
        .rhs
        .iter()
        .map(|f| {
            let rhs_f: Vec<f64> = free.iter().map(|&d| f[d] - k_uc[d]).collect();
            let x = solver.solve(&rhs_f)?;
            let mut u = u_c.clone();
            for (&d, xi) in free.iter().zip(x) {
                u[d] = xi;
            }
            Ok(u)
        })
        .collect()
}
