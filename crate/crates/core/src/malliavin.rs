//! Malliavin covariance matrices and nondegeneracy probes.
//!
//! The quadratic form of the covariance matrix at a node `z` is assembled
//! from the first-variation kernel and the noise fields:
//!
//! ```text
//! C_z = Σ_{cells r ≺ z} Σ_l (ξ(r,z)·A_l(r, X_r)) (ξ(r,z)·A_l(r, X_r))ᵀ · ΔsΔt
//! ```
//!
//! so `vᵀC_z v` integrates `⟨v, ξ(r,z)A_l(r,X_r)⟩²` over the rectangle. The
//! exact strategy solves `ξ(r,z)` for every cell (quadratic in the cell
//! count); above a size threshold a uniformly subsampled, inverse-inclusion
//! weighted estimator takes over, and the report always names the strategy
//! that ran.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::GridSpec;
use crate::linalg::{det_lu, sym_eigen, SquareMat};
use crate::rng::{standard_normal, standard_uniform, substream};
use crate::scalar::Lift;
use crate::sheet::{sample_sheet_trial, SheetSample};
use crate::solver::{solve_path, update_field, variation_endpoint};
use crate::stats::{fit_log_slope_with_min, wilson_ci, SlopeFit, Z95};

/// Cell-count threshold up to which the exact strategy is the default.
pub const EXACT_CELL_LIMIT: usize = 4096;

/// Determinants below this floor count as singular in moment estimates.
pub const DET_FLOOR: f64 = 1e-30;

/// How the cell sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CovarianceStrategy {
    /// Exact `ξ` solve for every cell below `z`.
    Exact,
    /// Uniform subsample of at most this many cells, inverse-inclusion
    /// weighted (unbiased under the sampling design).
    Subsample { max_cells: usize },
    /// Exact up to [`EXACT_CELL_LIMIT`] cells, else subsample that many.
    Auto,
}

impl CovarianceStrategy {
    fn resolve(self, cells: usize) -> (bool, usize) {
        match self {
            CovarianceStrategy::Exact => (true, cells),
            CovarianceStrategy::Subsample { max_cells } => {
                (max_cells >= cells, max_cells.min(cells))
            }
            CovarianceStrategy::Auto => {
                if cells <= EXACT_CELL_LIMIT {
                    (true, cells)
                } else {
                    (false, EXACT_CELL_LIMIT)
                }
            }
        }
    }
}

/// Covariance matrix of one trial at one node.
#[derive(Debug, Clone)]
pub struct MalliavinMatrix<S> {
    matrix: SquareMat<S>,
    z: (usize, usize),
    seed: u64,
    trial: u64,
    exact: bool,
    cells_used: usize,
    cells_total: usize,
}

impl<S: Lift> MalliavinMatrix<S> {
    pub fn matrix(&self) -> &SquareMat<S> {
        &self.matrix
    }
    pub fn z(&self) -> (usize, usize) {
        self.z
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn trial(&self) -> u64 {
        self.trial
    }
    pub fn exact(&self) -> bool {
        self.exact
    }
    pub fn cells_used(&self) -> usize {
        self.cells_used
    }
    pub fn cells_total(&self) -> usize {
        self.cells_total
    }

    /// Determinant (LU route).
    pub fn det(&self) -> S {
        det_lu(&self.matrix)
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> S {
        sym_eigen(&self.matrix).values[0]
    }
}

/// Quadratic form `vᵀ C v` for a unit direction.
pub fn quadratic_form<S: Lift>(c: &MalliavinMatrix<S>, v: &[S]) -> Result<S> {
    let norm2 = v.iter().fold(S::zero(), |acc, &x| acc + x * x);
    let norm = norm2.sqrt().as_f64();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm });
    }
    Ok(c.matrix.quad_form(v))
}

/// Assembles the covariance matrix of one trial at node `z`.
pub fn malliavin_matrix<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    sheet: &SheetSample<S>,
    path: &crate::solver::PathLattice<S>,
    z: (usize, usize),
    strategy: CovarianceStrategy,
) -> Result<MalliavinMatrix<S>> {
    grid.check_node(z.0, z.1)?;
    if z.0 == 0 || z.1 == 0 {
        return Err(Error::DegenerateRectangle);
    }
    let (iz, jz) = z;
    let m = fs.m();
    let cells_total = iz * jz;
    let (exact, cells_used) = strategy.resolve(cells_total);

    let update = update_field(fs, grid, sheet, path)?;
    let area = S::of(grid.cell_area());
    let mut matrix = SquareMat::zeros(m);
    let mut coeff = vec![S::zero(); m];
    let mut y = vec![S::zero(); m];

    let add_cell = |matrix: &mut SquareMat<S>,
                        coeff: &mut Vec<S>,
                        y: &mut Vec<S>,
                        a: usize,
                        b: usize,
                        weight: S| {
        let xi = variation_endpoint(&update, (a, b), z);
        let (theta, tau) = grid.node(a, b);
        let x = path.value(a, b);
        for l in 1..=fs.d() {
            fs.eval_into(l, S::of(theta), S::of(tau), x, coeff);
            for r in 0..m {
                let mut acc = S::zero();
                for q in 0..m {
                    acc = acc + xi[r * m + q] * coeff[q];
                }
                y[r] = acc;
            }
            for r in 0..m {
                for c in 0..m {
                    matrix.add_assign_at(r, c, y[r] * y[c] * weight);
                }
            }
        }
    };

    if exact {
        for a in 0..iz {
            for b in 0..jz {
                add_cell(&mut matrix, &mut coeff, &mut y, a, b, area);
            }
        }
    } else {
        // uniform sample without replacement, seeded per trial; equal cell
        // areas make uniform inclusion the area-weighted design
        let key = substream(sheet.seed(), 0x5542_5341_4d50_4c45); // "SUBSAMPLE" tag
        let mut indices: Vec<usize> = (0..cells_total).collect();
        for k in 0..cells_used {
            let u = standard_uniform(key, sheet.trial(), k as u64);
            let pick = k + ((u * (cells_total - k) as f64) as usize).min(cells_total - k - 1);
            indices.swap(k, pick);
        }
        let weight = area * S::of(cells_total as f64 / cells_used as f64);
        let mut chosen: Vec<usize> = indices[..cells_used].to_vec();
        chosen.sort_unstable(); // fixed order keeps the sum deterministic
        for idx in chosen {
            add_cell(&mut matrix, &mut coeff, &mut y, idx / jz, idx % jz, weight);
        }
    }

    Ok(MalliavinMatrix {
        matrix,
        z,
        seed: sheet.seed(),
        trial: sheet.trial(),
        exact,
        cells_used,
        cells_total,
    })
}

/// Inverse-determinant moment estimate over a batch of matrices.
#[derive(Debug, Clone, Serialize)]
pub struct DetMomentReport {
    pub p: f64,
    /// Trimmed mean of `det(C)^{-p}` over samples above the floor.
    pub estimate: f64,
    pub ci: (f64, f64),
    pub samples: usize,
    pub kept: usize,
    /// Samples whose determinant fell below [`DET_FLOOR`].
    pub floored: usize,
    pub det_floor: f64,
    /// Histogram of `log10 det C` over all samples: `(bucket_low, count)`.
    pub log10_det_histogram: Vec<(f64, usize)>,
}

pub fn det_inverse_moments<S: Lift>(
    samples: &[MalliavinMatrix<S>],
    p: f64,
) -> Result<DetMomentReport> {
    if samples.is_empty() {
        return Err(Error::Estimation("no covariance samples".into()));
    }
    if p < 1.0 {
        return Err(Error::Config(format!("moment order must be ≥ 1, got {p}")));
    }
    let dets: Vec<f64> = samples.iter().map(|c| c.det().as_f64()).collect();
    let kept: Vec<f64> = dets.iter().copied().filter(|&d| d >= DET_FLOOR).collect();
    let floored = dets.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Estimation(
            "all covariance samples singular below the determinant floor".into(),
        ));
    }
    let values: Vec<f64> = kept.iter().map(|&d| d.powf(-p)).collect();
    let (mean, var) = crate::stats::mean_var(&values);
    let se = (var / values.len() as f64).sqrt();

    let logs: Vec<f64> = dets
        .iter()
        .map(|&d| d.max(f64::MIN_POSITIVE).log10())
        .collect();
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
    let buckets = 16usize;
    let width = ((hi - lo) / buckets as f64).max(1e-12);
    let mut histogram = vec![0usize; buckets];
    for &x in &logs {
        let k = (((x - lo) / width) as usize).min(buckets - 1);
        histogram[k] += 1;
    }
    let log10_det_histogram = histogram
        .into_iter()
        .enumerate()
        .map(|(k, count)| (lo + k as f64 * width, count))
        .collect();

    Ok(DetMomentReport {
        p,
        estimate: mean,
        ci: (mean - Z95 * se, mean + Z95 * se),
        samples: samples.len(),
        kept: kept.len(),
        floored,
        det_floor: DET_FLOOR,
        log10_det_histogram,
    })
}

/// Small-ball probability estimates for the covariance quadratic form.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub z: (usize, usize),
    pub z_time: (f64, f64),
    /// ε grid sorted descending.
    pub eps: Vec<f64>,
    pub trials: u64,
    /// Pinned directions first, then uniformly sampled ones.
    pub directions: Vec<Vec<f64>>,
    pub pinned: usize,
    /// Event counts `[direction][eps]` of `vᵀCv ≤ ε`.
    pub counts: Vec<Vec<u64>>,
    pub p_hat: Vec<Vec<f64>>,
    pub ci: Vec<Vec<(f64, f64)>>,
    /// Per-direction decay fits.
    pub fits: Vec<SlopeFit>,
    /// `sup_v p̂` per ε with the attaining direction.
    pub worst: Vec<(f64, f64, usize)>,
    /// Monotonicity violations beyond CI overlap, empty when clean.
    pub flags: Vec<String>,
    /// Zero-count cells stand for probabilities below this bound.
    pub zero_count_bound: f64,
    pub exact_strategy: bool,
    pub seed: u64,
}

/// Runs independent trials and estimates `P{vᵀC_z v ≤ ε}` per direction and ε.
#[allow(clippy::too_many_arguments)]
pub fn nondegeneracy_probe(
    fs: &FieldSet,
    grid: &GridSpec,
    x0: &[f64],
    z: (usize, usize),
    random_directions: usize,
    pinned: &[Vec<f64>],
    eps: &[f64],
    trials: u64,
    seed: u64,
    strategy: CovarianceStrategy,
) -> Result<ProbeReport> {
    let m = fs.m();
    if eps.len() < 3 || eps.iter().any(|&e| !(0.0 < e && e < 1.0)) {
        return Err(Error::Config(
            "need at least three ε values inside (0,1)".into(),
        ));
    }
    if trials < 1000 {
        return Err(Error::Config("probe needs at least 1000 trials".into()));
    }
    let mut eps = eps.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(pinned.len() + random_directions);
    for v in pinned {
        if v.len() != m {
            return Err(Error::Dimension { expected: m, got: v.len() });
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitDirection { norm });
        }
        directions.push(v.clone());
    }
    let dir_key = substream(seed, 0x4449_5245_4354_494f); // "DIRECTIO" tag
    for k in 0..random_directions {
        let mut v: Vec<f64> = (0..m)
            .map(|c| standard_normal(dir_key, k as u64, c as u64))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        directions.push(v);
    }

    let x0s: Vec<f64> = x0.to_vec();
    let quad_per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<f64>> {
            let sheet = sample_sheet_trial::<f64>(grid, fs.d(), seed, trial)?;
            let path = solve_path(fs, grid, &sheet, &x0s)?;
            let c = malliavin_matrix(fs, grid, &sheet, &path, z, strategy)?;
            Ok(directions.iter().map(|v| c.matrix().quad_form(v)).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let exact_strategy = strategy.resolve(z.0 * z.1).0;
    let mut counts = vec![vec![0u64; eps.len()]; directions.len()];
    for quads in &quad_per_trial {
        for (di, &q) in quads.iter().enumerate() {
            for (ei, &e) in eps.iter().enumerate() {
                if q <= e {
                    counts[di][ei] += 1;
                }
            }
        }
    }

    let p_hat: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / trials as f64).collect())
        .collect();
    let ci: Vec<Vec<(f64, f64)>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| wilson_ci(c, trials, Z95)).collect())
        .collect();
    // two qualifying points already define a probe slope; the deeper
    // three-point rule belongs to the semimartingale decay verdicts
    let fits: Vec<SlopeFit> = counts
        .iter()
        .map(|row| fit_log_slope_with_min(&eps, row, trials, 2))
        .collect();

    let mut worst = Vec::with_capacity(eps.len());
    for ei in 0..eps.len() {
        let (mut best_p, mut best_d) = (0.0, 0);
        for di in 0..directions.len() {
            if p_hat[di][ei] > best_p {
                best_p = p_hat[di][ei];
                best_d = di;
            }
        }
        worst.push((eps[ei], best_p, best_d));
    }

    let mut flags = Vec::new();
    for di in 0..directions.len() {
        for ei in 1..eps.len() {
            // smaller ε must not have a significantly larger estimate
            if ci[di][ei].0 > ci[di][ei - 1].1 {
                flags.push(format!(
                    "direction {di}: estimate at ε={} significantly exceeds ε={}",
                    eps[ei],
                    eps[ei - 1]
                ));
            }
        }
    }

    Ok(ProbeReport {
        z,
        z_time: grid.node(z.0, z.1),
        eps,
        trials,
        directions,
        pinned: pinned.len(),
        counts,
        p_hat,
        ci,
        fits,
        worst,
        flags,
        zero_count_bound: 1.0 / trials as f64,
        exact_strategy,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::presets;
    use crate::sheet::sample_sheet;

    fn additive_setup(
        n: usize,
        seed: u64,
    ) -> (FieldSet, GridSpec, SheetSample<f64>, crate::solver::PathLattice<f64>) {
        let fs = presets::additive(2);
        let grid = GridSpec::new(1.0, 1.0, n, n).unwrap();
        let sheet = sample_sheet::<f64>(&grid, 2, seed).unwrap();
        let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
        (fs, grid, sheet, path)
    }

    #[test]
    fn additive_covariance_is_identity_scaled_by_area() {
        let (fs, grid, sheet, path) = additive_setup(8, 3);
        // z = (1,1): C = 1·I exactly in every trial
        let c = malliavin_matrix(&fs, &grid, &sheet, &path, (8, 8), CovarianceStrategy::Exact)
            .unwrap();
        for r in 0..2 {
            for q in 0..2 {
                let want = if r == q { 1.0 } else { 0.0 };
                assert!((c.matrix().get(r, q) - want).abs() < 1e-10);
            }
        }
        // z = (0.5, 1): node (4, 8) → C = 0.5·I
        let c = malliavin_matrix(&fs, &grid, &sheet, &path, (4, 8), CovarianceStrategy::Exact)
            .unwrap();
        for r in 0..2 {
            for q in 0..2 {
                let want = if r == q { 0.5 } else { 0.0 };
                assert!((c.matrix().get(r, q) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_noise_gives_zero_matrix() {
        let fs = presets::bessel_drift();
        let grid = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let sheet = sample_sheet::<f64>(&grid, 1, 5).unwrap();
        let path = solve_path(&fs, &grid, &sheet, &[1.0]).unwrap();
        let c =
            malliavin_matrix(&fs, &grid, &sheet, &path, (4, 4), CovarianceStrategy::Exact).unwrap();
        assert_eq!(c.matrix().get(0, 0), 0.0);
    }

    #[test]
    fn axis_node_rejected() {
        let (fs, grid, sheet, path) = additive_setup(4, 1);
        let r = malliavin_matrix(&fs, &grid, &sheet, &path, (0, 3), CovarianceStrategy::Exact);
        assert!(matches!(r, Err(Error::DegenerateRectangle)));
    }

    #[test]
    fn quadratic_form_unit_check_and_values() {
        let (fs, grid, sheet, path) = additive_setup(6, 9);
        let c = malliavin_matrix(&fs, &grid, &sheet, &path, (6, 6), CovarianceStrategy::Exact)
            .unwrap();
        assert!(quadratic_form(&c, &[1.0, 1.0]).is_err());
        let q = quadratic_form(&c, &[1.0, 0.0]).unwrap();
        assert!((q - 1.0).abs() < 1e-10);
        // Rayleigh bound over random-ish unit vectors
        let min_eig = c.min_eigenvalue();
        for k in 0..100 {
            let phi = k as f64 * 0.0628;
            let q = quadratic_form(&c, &[phi.cos(), phi.sin()]).unwrap();
            assert!(q >= min_eig - 1e-9);
        }
    }

    #[test]
    fn grushin_covariance_psd_and_seed_stable() {
        let fs = presets::grushin();
        let grid = GridSpec::new(1.0, 1.0, 8, 8).unwrap();
        for trial in 0..20 {
            let sheet = sample_sheet_trial::<f64>(&grid, 1, 77, trial).unwrap();
            let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
            let c = malliavin_matrix(&fs, &grid, &sheet, &path, (8, 8), CovarianceStrategy::Exact)
                .unwrap();
            assert!(c.matrix().asymmetry() < 1e-12);
            assert!(c.min_eigenvalue() > -1e-10, "PSD within tolerance");
        }
    }

    #[test]
    fn subsample_agrees_with_exact_on_average() {
        // 16x16 grid: the subsampled estimator (64 cells) must agree with the
        // exact one within 3 combined standard errors across trials
        let fs = presets::grushin();
        let grid = GridSpec::new(1.0, 1.0, 16, 16).unwrap();
        let trials = 600u64;
        let mut diag_exact = Vec::new();
        let mut diag_sub = Vec::new();
        for trial in 0..trials {
            let sheet = sample_sheet_trial::<f64>(&grid, 1, 31, trial).unwrap();
            let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
            let e = malliavin_matrix(&fs, &grid, &sheet, &path, (16, 16), CovarianceStrategy::Exact)
                .unwrap();
            let s = malliavin_matrix(
                &fs,
                &grid,
                &sheet,
                &path,
                (16, 16),
                CovarianceStrategy::Subsample { max_cells: 64 },
            )
            .unwrap();
            assert!(e.exact());
            assert!(!s.exact());
            assert_eq!(s.cells_used(), 64);
            diag_exact.push(e.matrix().get(1, 1));
            diag_sub.push(s.matrix().get(1, 1));
        }
        let (me, ve) = crate::stats::mean_var(&diag_exact);
        let (ms, vs) = crate::stats::mean_var(&diag_sub);
        let se = ((ve + vs) / trials as f64).sqrt();
        assert!((me - ms).abs() < 3.0 * se, "exact {me} vs subsampled {ms} (se {se})");
    }

    #[test]
    fn det_moments_additive_deterministic() {
        let fs = presets::additive(2);
        let grid = GridSpec::new(1.0, 1.0, 6, 6).unwrap();
        let mut samples = Vec::new();
        for trial in 0..10 {
            let sheet = sample_sheet_trial::<f64>(&grid, 2, 4, trial).unwrap();
            let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
            samples.push(
                malliavin_matrix(&fs, &grid, &sheet, &path, (6, 6), CovarianceStrategy::Exact)
                    .unwrap(),
            );
        }
        let report = det_inverse_moments(&samples, 2.0).unwrap();
        assert!((report.estimate - 1.0).abs() < 1e-9);
        assert_eq!(report.floored, 0);
        assert_eq!(report.kept, 10);
    }

    #[test]
    fn det_moments_all_singular_errors() {
        let fs = presets::bessel_drift();
        let grid = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let sheet = sample_sheet::<f64>(&grid, 1, 5).unwrap();
        let path = solve_path(&fs, &grid, &sheet, &[1.0]).unwrap();
        let c =
            malliavin_matrix(&fs, &grid, &sheet, &path, (4, 4), CovarianceStrategy::Exact).unwrap();
        assert!(matches!(
            det_inverse_moments(&[c], 2.0),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn cell_sum_reorder_invariance() {
        // summing cells forward vs reversed must agree to 1e-10
        let (fs, grid, sheet, path) = additive_setup(6, 13);
        let update = update_field(&fs, &grid, &sheet, &path).unwrap();
        let z = (6usize, 6usize);
        let area = grid.cell_area();
        let mut fwd = SquareMat::<f64>::zeros(2);
        let mut rev = SquareMat::<f64>::zeros(2);
        let mut cells: Vec<(usize, usize)> =
            (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).collect();
        for order in 0..2 {
            let target = if order == 0 { &mut fwd } else { &mut rev };
            for &(a, b) in cells.iter() {
                let xi = variation_endpoint(&update, (a, b), z);
                let (theta, tau) = grid.node(a, b);
                let x = path.value(a, b);
                for l in 1..=fs.d() {
                    let coeff = fs.coefficient(l).eval(theta, tau, x).unwrap();
                    let y: Vec<f64> = (0..2)
                        .map(|r| (0..2).map(|q| xi[r * 2 + q] * coeff[q]).sum())
                        .collect();
                    for r in 0..2 {
                        for c in 0..2 {
                            target.add_assign_at(r, c, y[r] * y[c] * area);
                        }
                    }
                }
            }
            cells.reverse();
        }
        for r in 0..2 {
            for c in 0..2 {
                assert!((fwd.get(r, c) - rev.get(r, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn probe_additive_zero_probability_below_area() {
        let fs = presets::additive(2);
        let grid = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let report = nondegeneracy_probe(
            &fs,
            &grid,
            &[0.0, 0.0],
            (4, 4),
            2,
            &[vec![1.0, 0.0]],
            &[0.5, 0.25, 0.125],
            1000,
            11,
            CovarianceStrategy::Exact,
        )
        .unwrap();
        // vᵀCv = 1 deterministically; every ε < 1 sees zero events
        for row in &report.counts {
            assert!(row.iter().all(|&c| c == 0));
        }
        assert!(report.flags.is_empty());
    }

    #[test]
    fn zero_noise_probe_probability_one() {
        // C = 0, so vᵀCv = 0 ≤ ε for every ε > 0: probability one everywhere
        let fs = presets::bessel_drift();
        let grid = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let report = nondegeneracy_probe(
            &fs,
            &grid,
            &[1.0],
            (4, 4),
            2,
            &[vec![1.0]],
            &[0.5, 0.25, 0.125],
            1000,
            3,
            CovarianceStrategy::Exact,
        )
        .unwrap();
        for row in &report.counts {
            assert!(row.iter().all(|&c| c == report.trials));
        }
        for ph in &report.p_hat {
            assert!(ph.iter().all(|&p| p == 1.0));
        }
    }

    #[test]
    fn grushin_det_moments_stable_across_seed_batches() {
        let fs = presets::grushin();
        let grid = GridSpec::new(1.0, 1.0, 8, 8).unwrap();
        let mut reports = Vec::new();
        for seed in [101u64, 202] {
            let mut samples = Vec::new();
            for trial in 0..400 {
                let sheet = sample_sheet_trial::<f64>(&grid, 1, seed, trial).unwrap();
                let path = solve_path(&fs, &grid, &sheet, &[0.0, 0.0]).unwrap();
                samples.push(
                    malliavin_matrix(&fs, &grid, &sheet, &path, (8, 8), CovarianceStrategy::Exact)
                        .unwrap(),
                );
            }
            reports.push(det_inverse_moments(&samples, 2.0).unwrap());
        }
        for r in &reports {
            assert!(r.estimate.is_finite() && r.estimate > 0.0);
        }
        let (a, b) = (&reports[0], &reports[1]);
        assert!(
            a.ci.0 <= b.ci.1 && b.ci.0 <= a.ci.1,
            "disjoint batch intervals: {:?} vs {:?}",
            a.ci,
            b.ci
        );
    }

    #[test]
    fn probe_validates_inputs() {
        let fs = presets::additive(2);
        let grid = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let r = nondegeneracy_probe(
            &fs,
            &grid,
            &[0.0, 0.0],
            (4, 4),
            1,
            &[],
            &[0.5, 0.25],
            1000,
            1,
            CovarianceStrategy::Auto,
        );
        assert!(r.is_err(), "needs three ε values");
        let r = nondegeneracy_probe(
            &fs,
            &grid,
            &[0.0, 0.0],
            (4, 4),
            1,
            &[],
            &[0.5, 0.25, 0.1],
            10,
            1,
            CovarianceStrategy::Auto,
        );
        assert!(r.is_err(), "needs 1000 trials");
    }
}
