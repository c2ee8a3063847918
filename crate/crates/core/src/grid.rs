//! Structured grid of unit square bilinear quadrilaterals.
//!
//! Nodes are numbered column by column, top to bottom, left to right; the
//! origin sits at the left-bottom corner. Element nodes are listed
//! anticlockwise starting at the left-bottom node. All indices are 0-based.

use crate::error::{invalid, Result};

/// Rectangular design domain meshed with `nelx` x `nely` unit squares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredGrid {
    nelx: usize,
    nely: usize,
    coords: Vec<[usize; 2]>,
    connect: Vec<[usize; 4]>,
}

impl StructuredGrid {
    /// Element edge length. Every element is a unit square.
    pub const H_E: f64 = 1.0;

    pub fn nelx(&self) -> usize {
        self.nelx
    }

    pub fn nely(&self) -> usize {
        self.nely
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connect.len()
    }

    /// Lattice coordinates `(x, y)` of every node.
    pub fn coords(&self) -> &[[usize; 2]] {
        &self.coords
    }

    /// Node indices of every element, anticlockwise from the left-bottom node.
    pub fn connect(&self) -> &[[usize; 4]] {
        &self.connect
    }

    /// Node index of the lattice point `(x, y)`.
    pub fn node_at(&self, x: usize, y: usize) -> usize {
        debug_assert!(x <= self.nelx && y <= self.nely);
        x * (self.nely + 1) + (self.nely - y)
    }

    /// Element whose left-bottom corner is the lattice point `(x, y)`.
    pub fn element_at(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nelx && y < self.nely);
        x * self.nely + (self.nely - 1 - y)
    }

    /// Lattice coordinates of the left-bottom corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [usize; 2] {
        self.coords[self.connect[e][0]]
    }

    /// Nodes whose coordinates satisfy `predicate(x, y)`, in ascending order.
    pub fn select_nodes<P>(&self, predicate: P) -> Vec<usize>
    where
        P: Fn(f64, f64) -> bool,
    {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, c)| predicate(c[0] as f64, c[1] as f64))
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn build_grid(nelx: usize, nely: usize) -> Result<StructuredGrid> {
    if nelx == 0 || nely == 0 {
        return invalid(format!("grid dimensions must be positive, got {nelx}x{nely}"));
    }
    let rows = nely + 1;
    let coords = (0..(nelx + 1) * rows)
        .map(|k| [k / rows, nely - k % rows])
        .collect();
    // Left-bottom node of each element, then the anticlockwise offsets
    // (0, rows, rows - 1, -1) around it.
    let connect = (0..nelx)
        .flat_map(|ex| (0..nely).map(move |r| ex * rows + r + 1))
        .map(|lb| [lb, lb + rows, lb + rows - 1, lb - 1])
        .collect();
    Ok(StructuredGrid {
        nelx,
        nely,
        coords,
        connect,
    })
}

/// Global DOF indices of every element, node-major with the unknowns of a
/// node interleaved (`n_unkn * node + component`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofTable {
    n_unkn: usize,
    n_dofs: usize,
    rows: Vec<usize>,
}

impl DofTable {
    pub fn n_unkn(&self) -> usize {
        self.n_unkn
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    /// DOFs per element (`4 * n_unkn`).
    pub fn row_len(&self) -> usize {
        4 * self.n_unkn
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len() / self.row_len()
    }

    pub fn row(&self, e: usize) -> &[usize] {
        let len = self.row_len();
        &self.rows[e * len..(e + 1) * len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.rows.chunks_exact(self.row_len())
    }
}

pub fn dof_table(grid: &StructuredGrid, n_unkn: usize) -> Result<DofTable> {
    if !(1..=2).contains(&n_unkn) {
        return invalid(format!("n_unkn must be 1 or 2, got {n_unkn}"));
    }
    let rows = grid
        .connect()
        .iter()
        .flat_map(|nodes| {
            nodes
                .iter()
                .flat_map(move |&n| (0..n_unkn).map(move |c| n_unkn * n + c))
        })
        .collect();
    Ok(DofTable {
        n_unkn,
        n_dofs: n_unkn * grid.n_nodes(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(v: &[usize]) -> Vec<usize> {
        v.iter().map(|i| i + 1).collect()
    }

    #[test]
    fn coords_follow_column_wise_numbering() {
        let g = build_grid(4, 2).unwrap();
        assert_eq!(g.n_nodes(), 15);
        assert_eq!(g.n_elements(), 8);
        let xs: Vec<usize> = g.coords().iter().map(|c| c[0]).collect();
        let ys: Vec<usize> = g.coords().iter().map(|c| c[1]).collect();
        assert_eq!(xs, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]);
        assert_eq!(ys, vec![2, 1, 0, 2, 1, 0, 2, 1, 0, 2, 1, 0, 2, 1, 0]);
    }

    #[test]
    fn left_bottom_nodes_match_node_vec() {
        let g = build_grid(4, 2).unwrap();
        let lb: Vec<usize> = g.connect().iter().map(|c| c[0] + 1).collect();
        assert_eq!(lb, vec![2, 3, 5, 6, 8, 9, 11, 12]);
    }

    #[test]
    fn connectivity_rows() {
        let g = build_grid(4, 2).unwrap();
        let c = g.connect();
        assert_eq!(one_based(&c[0]), vec![2, 5, 4, 1]);
        assert_eq!(one_based(&c[1]), vec![3, 6, 5, 2]);
        assert_eq!(one_based(&c[6]), vec![11, 14, 13, 10]);
        assert_eq!(one_based(&c[7]), vec![12, 15, 14, 11]);

        let g = build_grid(1, 1).unwrap();
        assert_eq!(g.n_nodes(), 4);
        assert_eq!(one_based(&g.connect()[0]), vec![2, 4, 3, 1]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(build_grid(0, 3).is_err());
        assert!(build_grid(3, 0).is_err());
    }

    #[test]
    fn edof_rows() {
        let g = build_grid(4, 2).unwrap();
        let d = dof_table(&g, 2).unwrap();
        assert_eq!(one_based(d.row(0)), vec![3, 4, 9, 10, 7, 8, 1, 2]);
        assert_eq!(one_based(d.row(1)), vec![5, 6, 11, 12, 9, 10, 3, 4]);
        assert_eq!(one_based(d.row(7)), vec![23, 24, 29, 30, 27, 28, 21, 22]);
    }

    #[test]
    fn scalar_dofs_equal_connectivity() {
        let g = build_grid(1, 1).unwrap();
        let d = dof_table(&g, 1).unwrap();
        assert_eq!(d.row(0), &g.connect()[0][..]);
        assert!(dof_table(&g, 3).is_err());
        assert!(dof_table(&g, 0).is_err());
    }

    #[test]
    fn interior_dofs_shared_by_four_elements() {
        // 3x3 nodes: the centre node (index 4) is the only interior one.
        let g = build_grid(2, 2).unwrap();
        let d = dof_table(&g, 2).unwrap();
        let mut count = vec![0usize; d.n_dofs()];
        for row in d.rows() {
            for &dof in row {
                assert!(dof < 18);
                count[dof] += 1;
            }
        }
        assert_eq!(count[8], 4);
        assert_eq!(count[9], 4);
        // Corners belong to a single element.
        assert_eq!(count[0], 1);
    }

    #[test]
    fn elements_are_unit_squares() {
        let g = build_grid(5, 3).unwrap();
        for (e, nodes) in g.connect().iter().enumerate() {
            let [cx, cy] = g.coords()[nodes[0]];
            let expect = [[cx, cy], [cx + 1, cy], [cx + 1, cy + 1], [cx, cy + 1]];
            for (a, &n) in nodes.iter().enumerate() {
                assert_eq!(g.coords()[n], expect[a]);
            }
            assert_eq!(g.element_at(cx, cy), e);
        }
    }

    #[test]
    fn vector_dofs_pair_with_nodes() {
        let g = build_grid(3, 4).unwrap();
        let d = dof_table(&g, 2).unwrap();
        for (row, nodes) in d.rows().zip(g.connect()) {
            for a in 0..4 {
                assert_eq!(row[2 * a] / 2, nodes[a]);
                assert_eq!(row[2 * a + 1] / 2, nodes[a]);
                assert_eq!(row[2 * a] % 2, 0);
            }
        }
    }

    #[test]
    fn node_selection() {
        let g = build_grid(4, 2).unwrap();
        assert_eq!(one_based(&g.select_nodes(|x, _| x == 0.0)), vec![1, 2, 3]);
        assert_eq!(one_based(&g.select_nodes(|x, y| x == 4.0 && y == 0.0)), vec![15]);
        let g = build_grid(100, 50).unwrap();
        let nely = 50.0_f64;
        let sel = g.select_nodes(|x, y| y == (0.5 * nely).round() && x == 100.0);
        assert_eq!(sel, vec![g.node_at(100, 25)]);
    }

    #[test]
    fn construction_is_deterministic() {
        assert_eq!(build_grid(7, 5).unwrap(), build_grid(7, 5).unwrap());
    }
}
