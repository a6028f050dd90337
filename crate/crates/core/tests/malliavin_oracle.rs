//! Independent closed-form oracle for the covariance pipeline on the
//! hypoelliptic Grushin preset.
//!
//! With `A₁ = (1, x⁰)`, zero drift and `x₀ = 0`, the lattice first-variation
//! recursion from base `r` preserves the form `ξ(r, ·) = [[1, 0], [S, 1]]`
//! where `S` is the rectangle sum of the driving increments over `[r, ·]`
//! (only the second row is ever updated, and it is fed by the constant first
//! row). The first solution component is the sheet itself. Hence
//!
//! ```text
//! ⟨e₂, ξ(r,z) A₁(r, X_r)⟩ = W([r,z]) + W(r)
//! ```
//!
//! and `e₂ᵀ C_z e₂ = Σ_cells (W([r,z]) + W(r))²·ΔsΔt` is computable from the
//! sheet increments alone, with no solver, variation kernel, or field
//! evaluation involved.

use sheetlab_core::field::presets;
use sheetlab_core::grid::GridSpec;
use sheetlab_core::malliavin::{malliavin_matrix, quadratic_form, CovarianceStrategy};
use sheetlab_core::sheet::sample_sheet_trial;
use sheetlab_core::solver::solve_path;

#[test]
fn grushin_degenerate_direction_matches_sheet_only_formula() {
    let fs = presets::grushin();
    let grid = GridSpec::new(1.0, 1.0, 12, 12).unwrap();
    let (n, area) = (12usize, grid.cell_area());
    for trial in 0..10u64 {
        let sheet = sample_sheet_trial::<f64>(&grid, 1, 555, trial).unwrap();
        let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
        let c = malliavin_matrix(&fs, &grid, &sheet, &path, (n, n), CovarianceStrategy::Exact)
            .unwrap();
        let via_pipeline = quadratic_form(&c, &[0.0, 1.0]).unwrap();

        // sheet-only recomputation
        let w = sheet.cumulative();
        let stride = n + 1;
        let node = |i: usize, j: usize| w[i * stride + j];
        let mut direct = 0.0;
        for a in 0..n {
            for b in 0..n {
                let rect = node(n, n) - node(a, n) - node(n, b) + node(a, b);
                let y = rect + node(a, b);
                direct += y * y * area;
            }
        }
        assert!(
            (via_pipeline - direct).abs() < 1e-10,
            "trial {trial}: pipeline {via_pipeline} vs sheet-only {direct}"
        );
    }
}

#[test]
fn grushin_full_matrix_entries_match_sheet_only_formulas() {
    // all three distinct entries of C follow from ξ A₁ = (1, W([r,z]) + W(r)):
    // C₁₁ = Σ area, C₁₂ = Σ y·area, C₂₂ = Σ y²·area
    let fs = presets::grushin();
    let grid = GridSpec::new(1.0, 1.0, 8, 8).unwrap();
    let n = 8usize;
    let area = grid.cell_area();
    let sheet = sample_sheet_trial::<f64>(&grid, 1, 556, 3).unwrap();
    let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
    let c = malliavin_matrix(&fs, &grid, &sheet, &path, (n, n), CovarianceStrategy::Exact)
        .unwrap();

    let w = sheet.cumulative();
    let stride = n + 1;
    let node = |i: usize, j: usize| w[i * stride + j];
    let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let rect = node(n, n) - node(a, n) - node(n, b) + node(a, b);
            let y = rect + node(a, b);
            c11 += area;
            c12 += y * area;
            c22 += y * y * area;
        }
    }
    assert!((c.matrix().get(0, 0) - c11).abs() < 1e-10);
    assert!((c.matrix().get(0, 1) - c12).abs() < 1e-10);
    assert!((c.matrix().get(1, 0) - c12).abs() < 1e-10);
    assert!((c.matrix().get(1, 1) - c22).abs() < 1e-10);
}
