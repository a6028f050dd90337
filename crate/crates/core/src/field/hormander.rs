//! Restricted Hörmander rank diagnostics.
//!
//! At a point `(0, t, x₀)` the bracket hierarchy spans ℝ^m or it does not;
//! the quantitative version is the smallest eigenvalue of the cumulative
//! Gram matrix `G = Σ_V V Vᵀ` — since `Σ_V ⟨v,V⟩² = vᵀGv`, its minimum over
//! the unit sphere is exactly that eigenvalue.

use serde::Serialize;

use super::bracket::bracket_sets;
use super::FieldSet;
use crate::error::Result;
use crate::linalg::{gram, rank_from_gram, sym_eigen, SquareMat};
use crate::stats::halton;

/// Singular values below this fraction of the largest one count as zero when
/// ranking vector families.
pub const RANK_SV_TOL: f64 = 1e-9;

/// Where to probe the spanning constant around the base point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NeighborhoodSpec {
    /// θ ranges over `[0, s0]`.
    pub s0: f64,
    /// Spatial points range over the ball `B(x0, radius)`.
    pub radius: f64,
    /// Number of low-discrepancy sample points.
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRank {
    pub level: usize,
    /// Rank of all fields up to this level, evaluated at the base point.
    pub cumulative_rank: usize,
    /// Smallest eigenvalue of the cumulative Gram matrix at this level.
    pub min_gram_eigenvalue: f64,
    /// Fields at this level after de-duplication.
    pub fields: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanningField {
    pub level: usize,
    pub index: usize,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HormanderReport {
    pub t: f64,
    pub x0: Vec<f64>,
    pub depth: usize,
    pub levels: Vec<LevelRank>,
    /// Smallest Gram eigenvalue over all levels up to `depth` at the base
    /// point; positive exactly when the hierarchy spans ℝ^m there.
    pub c_estimate: f64,
    pub full_rank: bool,
    /// Minimum of the same eigenvalue over the sampled neighborhood.
    pub neighborhood_min: Option<f64>,
    /// A greedily chosen subset of fields that already realizes the final rank.
    pub spanning: Vec<SpanningField>,
    pub sv_tolerance: f64,
}

/// Evaluates the bracket hierarchy at `(0, t, x0)` and reports per-level
/// cumulative ranks plus the spanning-constant estimate.
pub fn hormander_report(
    fs: &FieldSet,
    t: f64,
    x0: &[f64],
    depth: usize,
    neighborhood: Option<NeighborhoodSpec>,
) -> Result<HormanderReport> {
    let m = fs.m();
    let bs = bracket_sets(fs, depth)?;

    let eval_all_at = |theta: f64, tau: f64, x: &[f64]| -> Result<Vec<Vec<Vec<f64>>>> {
        let mut by_level = Vec::with_capacity(depth + 1);
        for level in bs.levels() {
            let mut vals = Vec::with_capacity(level.len());
            for v in level {
                vals.push(v.eval(theta, tau, x)?);
            }
            by_level.push(vals);
        }
        Ok(by_level)
    };

    let base = eval_all_at(0.0, t, x0)?;
    let mut levels = Vec::with_capacity(depth + 1);
    let mut cumulative: Vec<Vec<f64>> = Vec::new();
    for (k, vals) in base.iter().enumerate() {
        cumulative.extend(vals.iter().cloned());
        let g = gram(&cumulative, m);
        let rank = rank_from_gram(&g, RANK_SV_TOL);
        let min_eig = min_eigenvalue(&g);
        levels.push(LevelRank {
            level: k,
            cumulative_rank: rank,
            min_gram_eigenvalue: min_eig,
            fields: vals.len(),
        });
    }
    let final_rank = levels.last().map(|l| l.cumulative_rank).unwrap_or(0);
    let c_estimate = levels.last().map(|l| l.min_gram_eigenvalue).unwrap_or(0.0);

    // greedy spanning subset: keep fields that raise the rank
    let mut spanning = Vec::new();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut rank_so_far = 0;
    'outer: for (k, vals) in base.iter().enumerate() {
        for (idx, v) in vals.iter().enumerate() {
            kept.push(v.clone());
            let r = rank_from_gram(&gram(&kept, m), RANK_SV_TOL);
            if r > rank_so_far {
                rank_so_far = r;
                spanning.push(SpanningField {
                    level: k,
                    index: idx,
                    expr: bs.level(k)[idx].to_string(),
                });
            } else {
                kept.pop();
            }
            if rank_so_far == final_rank && final_rank == m {
                break 'outer;
            }
        }
    }

    let neighborhood_min = match neighborhood {
        None => None,
        Some(spec) => {
            let mut min_c = f64::INFINITY;
            let mut accepted = 0usize;
            let mut index = 0u64;
            while accepted < spec.samples.max(1) {
                let u = halton(index, 1 + m);
                index += 1;
                let y: Vec<f64> = (0..m)
                    .map(|i| x0[i] + (2.0 * u[1 + i] - 1.0) * spec.radius)
                    .collect();
                let dist2: f64 = y
                    .iter()
                    .zip(x0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if dist2 > spec.radius * spec.radius {
                    continue; // cube point outside the ball
                }
                accepted += 1;
                let theta = u[0] * spec.s0;
                let vals = eval_all_at(theta, t, &y)?;
                let flat: Vec<Vec<f64>> = vals.into_iter().flatten().collect();
                min_c = min_c.min(min_eigenvalue(&gram(&flat, m)));
            }
            Some(min_c)
        }
    };

    Ok(HormanderReport {
        t,
        x0: x0.to_vec(),
        depth,
        levels,
        c_estimate,
        full_rank: final_rank == m,
        neighborhood_min,
        spanning,
        sv_tolerance: RANK_SV_TOL,
    })
}

fn min_eigenvalue(g: &SquareMat<f64>) -> f64 {
    sym_eigen(g).values[0].max(0.0)
}
