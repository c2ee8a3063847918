use crate::grid::DofTable;

/// Compressed sparse row matrix. Symmetric matrices are stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut t = triplets.to_vec();
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of `(i, j)` in the value array.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// Principal submatrix on `keep` (ascending indices).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            let (cols, vals) = self.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

/// Sparsity pattern of a finite element matrix together with the position
/// of every element-local entry in the value array. Computed once per grid;
/// only the values change between assemblies.
#[derive(Debug, Clone)]
pub struct SparsityPattern {
    template: CsrMatrix,
    /// `scatter[e * nd * nd + a * nd + b]` is the value slot of `(dof_a, dof_b)`.
    scatter: Vec<usize>,
    nd: usize,
}

impl SparsityPattern {
    pub fn from_dofs(dofs: &DofTable) -> Self {
        let nd = dofs.row_len();
        let mut triplets = Vec::with_capacity(dofs.n_rows() * nd * nd);
        for row in dofs.rows() {
            for &i in row {
                for &j in row {
                    triplets.push((i, j, 0.0));
                }
            }
        }
        let template = CsrMatrix::from_triplets(dofs.n_dofs(), &triplets);
        let scatter = dofs
            .rows()
            .flat_map(|row| {
                let t = &template;
                row.iter()
                    .flat_map(move |&i| row.iter().map(move |&j| t.position(i, j).unwrap()))
            })
            .collect();
        Self {
            template,
            scatter,
            nd,
        }
    }

    pub fn n(&self) -> usize {
        self.template.n
    }

    /// Sum `coeff[e] * local(e)` over elements into a fresh matrix.
    pub fn assemble<'a, F>(&self, coeffs: &[f64], local: F) -> CsrMatrix
    where
        F: Fn(usize) -> &'a nalgebra::DMatrix<f64>,
    {
        let nd = self.nd;
        let mut m = self.template.clone();
        let vals = m.values_mut();
        for (e, &c) in coeffs.iter().enumerate() {
            let ke = local(e);
            let slots = &self.scatter[e * nd * nd..(e + 1) * nd * nd];
            for a in 0..nd {
                for b in 0..nd {
                    vals[slots[a * nd + b]] += c * ke[(a, b)];
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 2.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![6.0, 2.0]);
    }

    #[test]
    fn submatrix_keeps_order() {
        let m = CsrMatrix::from_triplets(
            3,
            &[(0, 0, 1.0), (0, 2, 5.0), (1, 1, 2.0), (2, 0, 5.0), (2, 2, 3.0)],
        );
        let s = m.submatrix(&[0, 2]);
        assert_eq!(s.to_dense(), vec![vec![1.0, 5.0], vec![5.0, 3.0]]);
    }
}
