//! Lattice integration of the two-parameter Itô equation and of its
//! first-variation (linearized) kernel.
//!
//! The scheme is the explicit rectangle recursion
//!
//! ```text
//! X(i,j) = X(i-1,j) + X(i,j-1) - X(i-1,j-1)
//!        + Σ_l A_l(r, X(i-1,j-1))·ΔW^l(i-1,j-1) + A_0(r, X(i-1,j-1))·ΔsΔt
//! ```
//!
//! with `r` the lower-left node of the cell — the adapted evaluation point of
//! the planar Itô integral. Axis nodes carry the initial value exactly. Any
//! sweep respecting the lattice partial order yields the same result; we use
//! row-major order.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::GridSpec;
use crate::linalg::SquareMat;
use crate::scalar::Lift;
use crate::sheet::{sample_sheet_trial, SheetSample};

/// Solution values on every node of a grid.
#[derive(Debug, Clone)]
pub struct PathLattice<S> {
    grid: GridSpec,
    m: usize,
    /// Node-major storage: `(i·(n_t+1) + j)·m + c`.
    values: Vec<S>,
    x0: Vec<S>,
    seed: u64,
    trial: u64,
}

impl<S: Lift> PathLattice<S> {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn x0(&self) -> &[S] {
        &self.x0
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn trial(&self) -> u64 {
        self.trial
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> &[S] {
        let idx = (i * (self.grid.n_t() + 1) + j) * self.m;
        &self.values[idx..idx + self.m]
    }

    /// CSV dump with columns `i, j, s, t, x_1..x_m`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "i,j,s,t")?;
        for c in 1..=self.m {
            write!(w, ",x_{c}")?;
        }
        writeln!(w)?;
        for i in 0..=self.grid.n_s() {
            for j in 0..=self.grid.n_t() {
                let (s, t) = self.grid.node(i, j);
                write!(w, "{i},{j},{s},{t}")?;
                for c in 0..self.m {
                    write!(w, ",{}", self.value(i, j)[c].as_f64())?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn check_dims<S: Lift>(fs: &FieldSet, sheet: &SheetSample<S>, x0: &[S]) -> Result<()> {
    if sheet.d() != fs.d() {
        return Err(Error::Dimension { expected: fs.d(), got: sheet.d() });
    }
    if x0.len() != fs.m() {
        return Err(Error::Dimension { expected: fs.m(), got: x0.len() });
    }
    Ok(())
}

/// Integrates the equation over the whole grid.
pub fn solve_path<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    sheet: &SheetSample<S>,
    x0: &[S],
) -> Result<PathLattice<S>> {
    check_dims(fs, sheet, x0)?;
    let (n_s, n_t, m, d) = (grid.n_s(), grid.n_t(), fs.m(), fs.d());
    let stride = (n_t + 1) * m;
    let mut values = vec![S::zero(); (n_s + 1) * stride];
    for i in 0..=n_s {
        for j in 0..=n_t {
            if i == 0 || j == 0 {
                values[(i * (n_t + 1) + j) * m..][..m].copy_from_slice(x0);
            }
        }
    }

    let area = S::of(grid.cell_area());
    let taus: Vec<S> = (0..n_t).map(|j| S::of(grid.node(0, j).1)).collect();
    let mut coeff = vec![S::zero(); m];
    let mut xnew = vec![S::zero(); m];
    for i in 1..=n_s {
        let theta = S::of(grid.node(i - 1, 0).0);
        for j in 1..=n_t {
            let base = (i - 1) * stride + (j - 1) * m;
            let tau = taus[j - 1];
            {
                let corner = &values[base..base + m];
                let up = &values[base + m..base + 2 * m];
                let right = &values[base + stride..base + stride + m];
                for c in 0..m {
                    xnew[c] = right[c] + up[c] - corner[c];
                }
                for l in 0..=d {
                    fs.eval_into(l, theta, tau, corner, &mut coeff);
                    let w = if l == 0 {
                        area
                    } else {
                        sheet.increment(l - 1, i - 1, j - 1)
                    };
                    for c in 0..m {
                        xnew[c] = xnew[c] + coeff[c] * w;
                    }
                }
            }
            let dst = i * stride + j * m;
            for c in 0..m {
                if !xnew[c].is_finite() {
                    return Err(Error::Divergence { i, j });
                }
                values[dst + c] = xnew[c];
            }
        }
    }

    Ok(PathLattice {
        grid: *grid,
        m,
        values,
        x0: x0.to_vec(),
        seed: sheet.seed(),
        trial: sheet.trial(),
    })
}

/// Integrates only the rectangle `[0, node]` and returns the value at `node`,
/// keeping two rolling rows instead of the full lattice.
pub fn solve_endpoint<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    sheet: &SheetSample<S>,
    x0: &[S],
    node: (usize, usize),
) -> Result<Vec<S>> {
    check_dims(fs, sheet, x0)?;
    grid.check_node(node.0, node.1)?;
    let (iz, jz) = node;
    let (m, d) = (fs.m(), fs.d());
    if iz == 0 || jz == 0 {
        return Ok(x0.to_vec());
    }

    let area = S::of(grid.cell_area());
    let taus: Vec<S> = (0..jz).map(|j| S::of(grid.node(0, j).1)).collect();
    let mut prev: Vec<S> = (0..=jz).flat_map(|_| x0.iter().copied()).collect();
    let mut cur = vec![S::zero(); (jz + 1) * m];
    let mut coeff = vec![S::zero(); m];
    for i in 1..=iz {
        let theta = S::of(grid.node(i - 1, 0).0);
        cur[..m].copy_from_slice(x0);
        for j in 1..=jz {
            let corner = &prev[(j - 1) * m..j * m];
            for c in 0..m {
                let up = prev[j * m + c];
                let left = cur[(j - 1) * m + c];
                cur[j * m + c] = up + left - corner[c];
            }
            for l in 0..=d {
                fs.eval_into(l, theta, taus[j - 1], corner, &mut coeff);
                let w = if l == 0 {
                    area
                } else {
                    sheet.increment(l - 1, i - 1, j - 1)
                };
                for c in 0..m {
                    cur[j * m + c] = cur[j * m + c] + coeff[c] * w;
                }
            }
            for c in 0..m {
                if !cur[j * m + c].is_finite() {
                    return Err(Error::Divergence { i, j });
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[jz * m..(jz + 1) * m].to_vec())
}

/// Per-cell linearization data: the matrix that multiplies the running
/// first-variation state when the recursion crosses one cell,
/// `U(r) = Σ_l ∂ₓA_l(r, X_r)·ΔW^l(r) + ∂ₓA_0(r, X_r)·ΔsΔt`.
#[derive(Debug, Clone)]
pub struct UpdateField<S> {
    n_s: usize,
    n_t: usize,
    m: usize,
    mats: Vec<S>,
}

impl<S: Lift> UpdateField<S> {
    #[inline]
    fn mat(&self, i: usize, j: usize) -> &[S] {
        debug_assert!(i < self.n_s && j < self.n_t);
        let mm = self.m * self.m;
        &self.mats[(i * self.n_t + j) * mm..(i * self.n_t + j + 1) * mm]
    }
}

/// Precomputes the per-cell update matrices of the linearized equation; they
/// do not depend on the variation base point, so one pass serves every base.
pub fn update_field<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    sheet: &SheetSample<S>,
    path: &PathLattice<S>,
) -> Result<UpdateField<S>> {
    check_dims(fs, sheet, path.x0())?;
    let (n_s, n_t, m, d) = (grid.n_s(), grid.n_t(), fs.m(), fs.d());
    let area = S::of(grid.cell_area());
    let mm = m * m;
    let mut mats = vec![S::zero(); n_s * n_t * mm];
    let mut jac = SquareMat::zeros(m);
    for i in 0..n_s {
        let theta = S::of(grid.node(i, 0).0);
        for j in 0..n_t {
            let tau = S::of(grid.node(0, j).1);
            let x = path.value(i, j);
            let dst = &mut mats[(i * n_t + j) * mm..(i * n_t + j + 1) * mm];
            for l in 0..=d {
                fs.jacobian_into(l, theta, tau, x, &mut jac);
                let w = if l == 0 { area } else { sheet.increment(l - 1, i, j) };
                for (k, &entry) in jac.data().iter().enumerate() {
                    dst[k] = dst[k] + entry * w;
                }
            }
        }
    }
    Ok(UpdateField { n_s, n_t, m, mats })
}

/// First-variation kernel from one base node: matrices `ξ(r; i, j)` on the
/// subgrid `i ≥ i₀, j ≥ j₀`, identity along its two boundary edges.
#[derive(Debug, Clone)]
pub struct VariationKernel<S> {
    base: (usize, usize),
    n_s: usize,
    n_t: usize,
    m: usize,
    mats: Vec<S>,
}

impl<S: Lift> VariationKernel<S> {
    pub fn base(&self) -> (usize, usize) {
        self.base
    }

    /// Matrix `ξ(r; i, j)` for `i ≥ i₀, j ≥ j₀`.
    pub fn matrix(&self, i: usize, j: usize) -> SquareMat<S> {
        let (i0, j0) = self.base;
        assert!(i >= i0 && i <= self.n_s && j >= j0 && j <= self.n_t);
        let cols = self.n_t - j0 + 1;
        let mm = self.m * self.m;
        let src = ((i - i0) * cols + (j - j0)) * mm;
        let mut out = SquareMat::zeros(self.m);
        for r in 0..self.m {
            for c in 0..self.m {
                out.set(r, c, self.mats[src + r * self.m + c]);
            }
        }
        out
    }
}

/// Rectangle recursion for one variation matrix step.
#[inline]
fn variation_cell<S: Lift>(
    m: usize,
    corner: &[S],
    right: &[S],
    up: &[S],
    update: &[S],
    out: &mut [S],
) {
    // out = right + up − corner + U·corner
    for r in 0..m {
        for c in 0..m {
            let k = r * m + c;
            let mut acc = right[k] + up[k] - corner[k];
            for q in 0..m {
                acc = acc + update[r * m + q] * corner[q * m + c];
            }
            out[k] = acc;
        }
    }
}

/// Solves the linearized equation on `[r, (n_s, n_t)]`, storing every matrix.
pub fn solve_variation<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    sheet: &SheetSample<S>,
    path: &PathLattice<S>,
    base: (usize, usize),
) -> Result<VariationKernel<S>> {
    grid.check_node(base.0, base.1)?;
    let update = update_field(fs, grid, sheet, path)?;
    Ok(solve_variation_with(&update, grid, base))
}

/// Same recursion against precomputed update matrices.
pub fn solve_variation_with<S: Lift>(
    update: &UpdateField<S>,
    grid: &GridSpec,
    base: (usize, usize),
) -> VariationKernel<S> {
    let (i0, j0) = base;
    let (n_s, n_t, m) = (grid.n_s(), grid.n_t(), update.m);
    let rows = n_s - i0 + 1;
    let cols = n_t - j0 + 1;
    let mm = m * m;
    let mut mats = vec![S::zero(); rows * cols * mm];
    let ident: Vec<S> = identity_flat(m);
    for row in 0..rows {
        mats[row * cols * mm..row * cols * mm + mm].copy_from_slice(&ident);
    }
    for col in 0..cols {
        mats[col * mm..(col + 1) * mm].copy_from_slice(&ident);
    }
    let mut out = vec![S::zero(); mm];
    for row in 1..rows {
        for col in 1..cols {
            let corner = (row - 1) * cols + (col - 1);
            let up = corner + 1;
            let right = corner + cols;
            let dst = right + 1;
            variation_cell(
                m,
                &mats[corner * mm..corner * mm + mm],
                &mats[right * mm..right * mm + mm],
                &mats[up * mm..up * mm + mm],
                update.mat(i0 + row - 1, j0 + col - 1),
                &mut out,
            );
            mats[dst * mm..dst * mm + mm].copy_from_slice(&out);
        }
    }
    VariationKernel { base, n_s, n_t, m, mats }
}

/// Endpoint-only variation solve `ξ(r; z)` with rolling rows; this is the
/// inner loop of the covariance assembly.
pub fn variation_endpoint<S: Lift>(
    update: &UpdateField<S>,
    base: (usize, usize),
    target: (usize, usize),
) -> Vec<S> {
    let (i0, j0) = base;
    let (iz, jz) = target;
    debug_assert!(i0 <= iz && j0 <= jz);
    let m = update.m;
    let mm = m * m;
    let cols = jz - j0 + 1;
    let ident = identity_flat(m);
    let mut prev: Vec<S> = Vec::with_capacity(cols * mm);
    for _ in 0..cols {
        prev.extend_from_slice(&ident);
    }
    if i0 == iz {
        return prev[(cols - 1) * mm..].to_vec();
    }
    let mut cur = vec![S::zero(); cols * mm];
    for row in 1..=(iz - i0) {
        cur[..mm].copy_from_slice(&ident);
        for col in 1..cols {
            let (head, tail) = cur.split_at_mut(col * mm);
            variation_cell(
                m,
                &prev[(col - 1) * mm..col * mm],
                &head[(col - 1) * mm..],
                &prev[col * mm..(col + 1) * mm],
                update.mat(i0 + row - 1, j0 + col - 1),
                &mut tail[..mm],
            );
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[(cols - 1) * mm..].to_vec()
}

fn identity_flat<S: Lift>(m: usize) -> Vec<S> {
    let mut ident = vec![S::zero(); m * m];
    for k in 0..m {
        ident[k * m + k] = S::one();
    }
    ident
}

/// Endpoint statistics across a refinement ladder sharing one Brownian sheet.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceTable {
    pub base: usize,
    pub levels: usize,
    pub trials: u64,
    /// Grid sizes per level.
    pub grid_sizes: Vec<usize>,
    /// Mean endpoint per level.
    pub endpoint_means: Vec<Vec<f64>>,
    /// `E[|X^(k) − X^(k+1)|²]^{1/2}` between consecutive levels.
    pub l2_diffs: Vec<f64>,
    /// Ratios `l2_diffs[k] / l2_diffs[k+1]`.
    pub ratios: Vec<f64>,
}

/// Solves the endpoint at `z = (s, t)` on grids `base·2^k × base·2^k` over
/// `[0,s]×[0,t]`; each trial samples the finest sheet once and aggregates
/// blocks downward so all levels share one realization.
pub fn refine_convergence(
    fs: &FieldSet,
    x0: &[f64],
    z: (f64, f64),
    seed: u64,
    base: usize,
    levels: usize,
    trials: u64,
) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(Error::Config("refinement needs at least two levels".into()));
    }
    if base == 0 {
        return Err(Error::Config("refinement base must be positive".into()));
    }
    let grids: Vec<GridSpec> = (0..levels)
        .map(|k| GridSpec::new(z.0, z.1, base << k, base << k))
        .collect::<Result<_>>()?;
    let finest = grids[levels - 1];

    let mut sum_sq_diff = vec![0.0; levels - 1];
    let mut mean_acc = vec![vec![0.0; fs.m()]; levels];
    for trial in 0..trials {
        let fine_sheet = sample_sheet_trial::<f64>(&finest, fs.d(), seed, trial)?;
        let mut endpoints: Vec<Vec<f64>> = Vec::with_capacity(levels);
        let mut sheet = fine_sheet;
        // walk from finest to coarsest, aggregating 2x2 blocks each step
        for k in (0..levels).rev() {
            let grid = &grids[k];
            let corner = (grid.n_s(), grid.n_t());
            let x = solve_endpoint(fs, grid, &sheet, x0, corner)?;
            endpoints.push(x);
            if k > 0 {
                sheet = sheet.aggregate_blocks(2)?;
            }
        }
        endpoints.reverse(); // coarsest first
        for k in 0..levels {
            for c in 0..fs.m() {
                mean_acc[k][c] += endpoints[k][c] / trials as f64;
            }
            if k + 1 < levels {
                let d2: f64 = endpoints[k]
                    .iter()
                    .zip(&endpoints[k + 1])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                sum_sq_diff[k] += d2;
            }
        }
    }
    let l2_diffs: Vec<f64> = sum_sq_diff
        .iter()
        .map(|&s| (s / trials as f64).sqrt())
        .collect();
    let ratios = l2_diffs
        .windows(2)
        .map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY })
        .collect();
    Ok(ConvergenceTable {
        base,
        levels,
        trials,
        grid_sizes: grids.iter().map(|g| g.n_s()).collect(),
        endpoint_means: mean_acc,
        l2_diffs,
        ratios,
    })
}
