//! History CSV, field snapshots and PGM images.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use unvartop::grid::StructuredGrid;
use unvartop::optimizer::{RunHistory, StepSnapshot};

use crate::error::CliError;

pub const HISTORY_HEADER: &str = "step,iter,t_ref,J_norm,vol,lambda,converged";

/// Scientific notation with 17 significant digits, enough to round-trip.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// CSV text of the iteration history.
pub fn history_csv(history: &RunHistory) -> String {
    let mut s = String::with_capacity(96 * (history.records.len() + 1));
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for r in &history.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.step,
            r.iter,
            float(r.t_ref),
            float(r.j_norm),
            float(r.vol),
            float(r.lambda),
            u8::from(r.converged)
        );
    }
    s
}

pub fn write_history(history: &RunHistory, path: &Path) -> Result<(), CliError> {
    write_file(path, history_csv(history).as_bytes())
}

fn matrix_text(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::with_capacity(rows * cols * 24);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                s.push(' ');
            }
            s.push_str(&float(at(r, c)));
        }
        s.push('\n');
    }
    s
}

/// Nodal field as `(nely + 1) x (nelx + 1)` text, first row at the top.
pub fn nodal_text(grid: &StructuredGrid, psi: &[f64]) -> String {
    let nely = grid.nely();
    matrix_text(nely + 1, grid.nelx() + 1, |r, c| psi[grid.node_at(c, nely - r)])
}

/// Element field as `nely x nelx` text, first row at the top.
pub fn element_text(grid: &StructuredGrid, chi: &[f64]) -> String {
    let nely = grid.nely();
    matrix_text(nely, grid.nelx(), |r, c| chi[grid.element_at(c, nely - 1 - r)])
}

/// Binary greyscale image of `chi`, one pixel per element, top row first.
pub fn chi_pgm(grid: &StructuredGrid, chi: &[f64]) -> Vec<u8> {
    let (nelx, nely) = (grid.nelx(), grid.nely());
    let mut out = format!("P5\n{nelx} {nely}\n255\n").into_bytes();
    out.reserve(nelx * nely);
    for r in 0..nely {
        for c in 0..nelx {
            let v = chi[grid.element_at(c, nely - 1 - r)].clamp(0.0, 1.0);
            out.push((255.0 * v).round() as u8);
        }
    }
    out
}

/// Solution columns, one row per DOF.
pub fn solution_text(solutions: &[Vec<f64>]) -> String {
    let n = solutions.first().map_or(0, Vec::len);
    matrix_text(n, solutions.len(), |r, c| solutions[c][r])
}

/// Paths written for one step.
pub fn snapshot_paths(dir: &Path, step: usize) -> [PathBuf; 4] {
    ["psi.txt", "chi.txt", "chi.pgm", "u.txt"].map(|suffix| dir.join(format!("step_{step}_{suffix}")))
}

pub fn write_snapshot(grid: &StructuredGrid, snap: &StepSnapshot, dir: &Path) -> Result<(), CliError> {
    let [psi, chi, pgm, u] = snapshot_paths(dir, snap.step);
    write_file(&psi, nodal_text(grid, &snap.psi).as_bytes())?;
    write_file(&chi, element_text(grid, &snap.chi).as_bytes())?;
    write_file(&pgm, &chi_pgm(grid, &snap.chi))?;
    write_file(&u, solution_text(&snap.solutions).as_bytes())
}

/// Reads a nodal text file back into node order.
pub fn parse_nodal_text(grid: &StructuredGrid, text: &str) -> Result<Vec<f64>, String> {
    let nely = grid.nely();
    let mut psi = vec![0.0; grid.n_nodes()];
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != nely + 1 {
        return Err(format!("expected {} rows, found {}", nely + 1, lines.len()));
    }
    for (r, line) in lines.iter().enumerate() {
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != grid.nelx() + 1 {
            return Err(format!("row {}: expected {} values", r + 1, grid.nelx() + 1));
        }
        for (c, v) in vals.iter().enumerate() {
            psi[grid.node_at(c, nely - r)] = v.parse().map_err(|e| format!("row {}: {e}", r + 1))?;
        }
    }
    Ok(psi)
}
