//! Endpoint-law sampling and kernel density estimation.
//!
//! Smoothness of the endpoint density is not numerically certifiable; these
//! estimates are diagnostics with closed-form Gaussian references available
//! in the additive case.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldSet;
use crate::grid::GridSpec;
use crate::linalg::{sym_eigen, SquareMat};
use crate::scalar::{Lift, Scalar};
use crate::sheet::sample_sheet_trial;
use crate::solver::solve_endpoint;

/// Endpoint values `X_z` across independent trials.
#[derive(Debug, Clone)]
pub struct EndpointSample<S> {
    m: usize,
    trials: u64,
    /// Row-major trials × m.
    values: Vec<S>,
    grid: GridSpec,
    z: (usize, usize),
    x0: Vec<f64>,
    seed: u64,
}

impl<S: Scalar> EndpointSample<S> {
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn trials(&self) -> u64 {
        self.trials
    }
    pub fn z(&self) -> (usize, usize) {
        self.z
    }
    pub fn z_time(&self) -> (f64, f64) {
        self.grid.node(self.z.0, self.z.1)
    }
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, trial: usize) -> &[S] {
        &self.values[trial * self.m..(trial + 1) * self.m]
    }

    pub fn component(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.trials as usize).map(move |t| self.row(t)[c].as_f64())
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.m];
        for t in 0..self.trials as usize {
            for c in 0..self.m {
                mean[c] += self.row(t)[c].as_f64();
            }
        }
        mean.iter_mut().for_each(|x| *x /= self.trials as f64);
        mean
    }

    /// Sample covariance (unbiased).
    pub fn covariance(&self) -> SquareMat<f64> {
        let mean = self.mean();
        let mut cov = SquareMat::zeros(self.m);
        for t in 0..self.trials as usize {
            let row = self.row(t);
            for a in 0..self.m {
                for b in 0..self.m {
                    cov.add_assign_at(
                        a,
                        b,
                        (row[a].as_f64() - mean[a]) * (row[b].as_f64() - mean[b]),
                    );
                }
            }
        }
        let denom = (self.trials as f64 - 1.0).max(1.0);
        let mut out = SquareMat::zeros(self.m);
        for a in 0..self.m {
            for b in 0..self.m {
                out.set(a, b, cov.get(a, b) / denom);
            }
        }
        out
    }
}

/// Runs independent trials of the lattice solve and extracts `X_z`.
/// `z` must lie off both axes.
pub fn sample_endpoint<S: Lift>(
    fs: &FieldSet,
    grid: &GridSpec,
    x0: &[f64],
    z: (usize, usize),
    trials: u64,
    seed: u64,
) -> Result<EndpointSample<S>> {
    grid.check_node(z.0, z.1)?;
    if z.0 == 0 || z.1 == 0 {
        return Err(Error::DegenerateRectangle);
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let x0_s: Vec<S> = x0.iter().map(|&x| S::of(x)).collect();
    let rows: Vec<Vec<S>> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<S>> {
            let sheet = sample_sheet_trial::<S>(grid, fs.d(), seed, trial)?;
            solve_endpoint(fs, grid, &sheet, &x0_s, z)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(trials as usize * fs.m());
    for row in rows {
        values.extend(row);
    }
    Ok(EndpointSample {
        m: fs.m(),
        trials,
        values,
        grid: *grid,
        z,
        x0: x0.to_vec(),
        seed,
    })
}

/// Bandwidth selection for the product-Gaussian kernel.
#[derive(Debug, Clone)]
pub enum BandwidthRule {
    /// `h_k = σ̂_k · n^{−1/(m+4)}` per axis.
    Scott,
    /// Explicit per-axis bandwidths.
    Fixed(Vec<f64>),
}

/// Floor applied when the sample spread degenerates.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Density values on a rectangular evaluation lattice (cell centers).
#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    /// Points per axis.
    pub resolution: usize,
    /// Row-major over the evaluation lattice.
    pub values: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub kernel: String,
    pub bandwidth_rule: String,
    /// True when the bandwidth floor kicked in on some axis.
    pub floored: bool,
    pub trials: u64,
}

impl DensityEstimate {
    fn dim(&self) -> usize {
        self.box_lo.len()
    }

    /// Coordinates of lattice point `idx` (mixed-radix over axes).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let m = self.dim();
        let mut coords = vec![0.0; m];
        for a in (0..m).rev() {
            let k = idx % self.resolution;
            idx /= self.resolution;
            let spacing = (self.box_hi[a] - self.box_lo[a]) / self.resolution as f64;
            coords[a] = self.box_lo[a] + (k as f64 + 0.5) * spacing;
        }
        coords
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Midpoint-rule mass over the box.
    pub fn mass(&self) -> f64 {
        let m = self.dim();
        let volume: f64 = (0..m)
            .map(|a| (self.box_hi[a] - self.box_lo[a]) / self.resolution as f64)
            .product();
        self.values.iter().sum::<f64>() * volume
    }
}

/// Product-Gaussian kernel density estimate of the endpoint sample on a
/// lattice of `resolution^m` cell centers over `box_override` (default: the
/// sample mean ± 6 standard deviations per axis).
pub fn kde<S: Scalar>(
    samples: &EndpointSample<S>,
    rule: BandwidthRule,
    box_override: Option<(Vec<f64>, Vec<f64>)>,
    resolution: usize,
) -> Result<DensityEstimate> {
    let m = samples.m();
    let n = samples.trials() as usize;
    if n < 100 {
        return Err(Error::Config(format!("kde needs at least 100 samples, got {n}")));
    }
    if resolution < 2 {
        return Err(Error::Config("kde needs a resolution of at least 2".into()));
    }

    let mean = samples.mean();
    let mut sd = vec![0.0; m];
    for c in 0..m {
        let var = samples
            .component(c)
            .map(|x| (x - mean[c]) * (x - mean[c]))
            .sum::<f64>()
            / (n as f64 - 1.0);
        sd[c] = var.sqrt();
    }

    let mut floored = false;
    let (bandwidth, bandwidth_rule) = match rule {
        BandwidthRule::Fixed(h) => {
            if h.len() != m {
                return Err(Error::Dimension { expected: m, got: h.len() });
            }
            (h, "fixed".to_string())
        }
        BandwidthRule::Scott => {
            let factor = (n as f64).powf(-1.0 / (m as f64 + 4.0));
            let h: Vec<f64> = sd.iter().map(|&s| s * factor).collect();
            (h, "scott".to_string())
        }
    };
    let bandwidth: Vec<f64> = bandwidth
        .into_iter()
        .map(|h| {
            if h < BANDWIDTH_FLOOR {
                floored = true;
                BANDWIDTH_FLOOR
            } else {
                h
            }
        })
        .collect();

    let (box_lo, box_hi) = match box_override {
        Some((lo, hi)) => {
            if lo.len() != m || hi.len() != m {
                return Err(Error::Dimension { expected: m, got: lo.len().min(hi.len()) });
            }
            if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                return Err(Error::Config("evaluation box must have positive extent".into()));
            }
            (lo, hi)
        }
        None => {
            let lo = (0..m).map(|c| mean[c] - 6.0 * sd[c].max(BANDWIDTH_FLOOR)).collect();
            let hi = (0..m).map(|c| mean[c] + 6.0 * sd[c].max(BANDWIDTH_FLOOR)).collect();
            (lo, hi)
        }
    };

    let data: Vec<f64> = (0..n)
        .flat_map(|t| samples.row(t).iter().map(|x| x.as_f64()).collect::<Vec<_>>())
        .collect();
    let norm = {
        let mut prod = n as f64;
        for &h in &bandwidth {
            prod *= h * (2.0 * std::f64::consts::PI).sqrt();
        }
        1.0 / prod
    };

    let total = resolution.pow(m as u32);
    let proto = DensityEstimate {
        box_lo: box_lo.clone(),
        box_hi: box_hi.clone(),
        resolution,
        values: Vec::new(),
        bandwidth: bandwidth.clone(),
        kernel: "gaussian-product".to_string(),
        bandwidth_rule,
        floored,
        trials: samples.trials(),
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let point = proto.point(idx);
            let mut acc = 0.0;
            for t in 0..n {
                let mut q = 0.0;
                for c in 0..m {
                    let u = (point[c] - data[t * m + c]) / bandwidth[c];
                    q += u * u;
                }
                acc += (-0.5 * q).exp();
            }
            acc * norm
        })
        .collect();

    Ok(DensityEstimate { values, ..proto })
}

/// Closed-form Gaussian endpoint density for constant noise fields and zero
/// drift: `N(x₀, s·t·Σ_l A_l A_lᵀ)`.
#[derive(Debug, Clone)]
pub struct GaussianReference {
    pub mean: Vec<f64>,
    pub covariance: SquareMat<f64>,
    det: f64,
    inverse: Option<SquareMat<f64>>,
    pub singular: bool,
}

impl GaussianReference {
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        let inv = self.inverse.as_ref()?;
        let m = self.mean.len();
        let diff: Vec<f64> = (0..m).map(|c| x[c] - self.mean[c]).collect();
        let q = inv.quad_form(&diff);
        let norm = (2.0 * std::f64::consts::PI).powf(m as f64 / 2.0) * self.det.sqrt();
        Some((-0.5 * q).exp() / norm)
    }
}

/// Builds the additive-case Gaussian reference, verifying the noise fields
/// are actually constant and the drift vanishes.
pub fn gaussian_reference(fs: &FieldSet, x0: &[f64], z_time: (f64, f64)) -> Result<GaussianReference> {
    let m = fs.m();
    // spot-check constancy at scattered probe points
    let probes = [
        (0.0, 0.0, vec![0.0; m]),
        (0.3, 0.7, vec![0.5; m]),
        (0.9, 0.2, vec![-1.0; m]),
    ];
    let mut base: Vec<Vec<f64>> = Vec::with_capacity(fs.d());
    for l in 1..=fs.d() {
        let v0: Vec<f64> = fs.coefficient(l).eval(probes[0].0, probes[0].1, &probes[0].2)?;
        for (th, ta, x) in probes.iter().skip(1) {
            let v = fs.coefficient(l).eval(*th, *ta, x)?;
            if v.iter().zip(&v0).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Error::Config(
                    "gaussian reference needs constant noise fields".into(),
                ));
            }
        }
        base.push(v0);
    }
    for (th, ta, x) in probes.iter() {
        let drift = fs.coefficient(0).eval(*th, *ta, x)?;
        if drift.iter().any(|&a| a.abs() > 1e-12) {
            return Err(Error::Config("gaussian reference needs zero drift".into()));
        }
    }

    let area = z_time.0 * z_time.1;
    let mut covariance = SquareMat::zeros(m);
    for a in &base {
        for i in 0..m {
            for j in 0..m {
                covariance.add_assign_at(i, j, area * a[i] * a[j]);
            }
        }
    }

    let eig = sym_eigen(&covariance);
    let max_eig = eig.values.last().copied().unwrap_or(0.0);
    let singular = eig.values[0] <= 1e-12 * max_eig.max(1e-300);
    let (det, inverse) = if singular {
        (0.0, None)
    } else {
        let det = eig.values.iter().product();
        let mut inv = SquareMat::zeros(m);
        for k in 0..m {
            let w = 1.0 / eig.values[k];
            for i in 0..m {
                for j in 0..m {
                    inv.add_assign_at(i, j, w * eig.vectors.get(i, k) * eig.vectors.get(j, k));
                }
            }
        }
        (det, Some(inv))
    };

    Ok(GaussianReference { mean: x0.to_vec(), covariance, det, inverse, singular })
}
