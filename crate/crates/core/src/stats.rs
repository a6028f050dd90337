//! Statistical helpers: confidence intervals, slope fits, moments, and a
//! deterministic low-discrepancy sequence for probe-point placement.

use serde::Serialize;

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(count: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "Wilson interval needs at least one trial");
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Standard 95% z-score used for every reported interval.
pub const Z95: f64 = 1.959963984540054;

/// Ordinary least squares `y ≈ a + b·x`; returns `(slope, intercept)`.
/// Panics on fewer than two points.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "OLS needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Van der Corput radical inverse in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut x = 0.0;
    while index > 0 {
        x += (index % base) as f64 * inv;
        index /= base;
        inv /= b;
    }
    x
}

const HALTON_BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Point `index` of the Halton sequence in `dim` dimensions (dim ≤ 8).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= HALTON_BASES.len(), "halton supports up to 8 dimensions");
    (0..dim)
        .map(|k| radical_inverse(index + 1, HALTON_BASES[k]))
        .collect()
}

/// Minimum event count for an ε point to participate in a least-squares
/// decay fit; below that the log-probability is noise.
pub const MIN_FIT_EVENTS: u64 = 5;

/// Log-log decay fit of estimated probabilities against ε.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    /// OLS slope of `log p̂` vs `log ε` over the qualifying points, absent
    /// when fewer than three ε points have enough events.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Number of ε points that met the event threshold.
    pub points_used: usize,
    /// Slopes between consecutive ε points (ε sorted descending). Zero
    /// counts enter through their `1/trials` upper bound and are flagged.
    pub local_slopes: Vec<f64>,
    /// True where a local slope had to fall back to an upper bound.
    pub local_upper_bound: Vec<bool>,
}

/// Fits decay exponents from per-ε event counts with the three-point
/// minimum used by the semimartingale reports.
pub fn fit_log_slope(eps: &[f64], counts: &[u64], trials: u64) -> SlopeFit {
    fit_log_slope_with_min(eps, counts, trials, 3)
}

/// Same fit with an explicit minimum number of qualifying ε points. `eps`
/// must be sorted in strictly descending order.
pub fn fit_log_slope_with_min(
    eps: &[f64],
    counts: &[u64],
    trials: u64,
    min_points: usize,
) -> SlopeFit {
    assert_eq!(eps.len(), counts.len());
    let p_or_bound = |c: u64| {
        if c == 0 {
            1.0 / trials as f64
        } else {
            c as f64 / trials as f64
        }
    };
    let mut local_slopes = Vec::new();
    let mut local_upper_bound = Vec::new();
    for k in 0..eps.len().saturating_sub(1) {
        let (p0, p1) = (p_or_bound(counts[k]), p_or_bound(counts[k + 1]));
        local_slopes.push((p0.ln() - p1.ln()) / (eps[k].ln() - eps[k + 1].ln()));
        local_upper_bound.push(counts[k] == 0 || counts[k + 1] == 0);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c >= MIN_FIT_EVENTS {
            xs.push(eps[k].ln());
            ys.push((c as f64 / trials as f64).ln());
        }
    }
    let (slope, intercept) = if xs.len() >= min_points.max(2) {
        let (s, i) = ols(&xs, &ys);
        (Some(s), Some(i))
    } else {
        (None, None)
    };
    SlopeFit { slope, intercept, points_used: xs.len(), local_slopes, local_upper_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basic_properties() {
        let (lo, hi) = wilson_ci(10, 100, Z95);
        assert!(lo > 0.0 && hi < 1.0 && lo < 0.1 && hi > 0.1);
        // zero counts keep a positive upper bound, lower bound sits at 0
        let (lo0, hi0) = wilson_ci(0, 100, Z95);
        assert!(lo0.abs() < 1e-15);
        assert!(hi0 > 0.0 && hi0 < 0.06);
        // interval tightens with more trials
        let (_, hi_small) = wilson_ci(10, 100, Z95);
        let (_, hi_big) = wilson_ci(1000, 10_000, Z95);
        assert!(hi_big - 0.1 < hi_small - 0.1);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (slope, intercept) = ols(&xs, &ys);
        assert!((slope - 2.5).abs() < 1e-12);
        assert!((intercept + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_exact_power_law() {
        // synthetic counts p = ε² on {0.4, 0.2, 0.1} → slope exactly 2
        let eps = [0.4, 0.2, 0.1];
        let trials = 100_000u64;
        let counts: Vec<u64> = eps.iter().map(|e| (e * e * trials as f64) as u64).collect();
        let fit = fit_log_slope(&eps, &counts, trials);
        assert_eq!(fit.points_used, 3);
        assert!((fit.slope.unwrap() - 2.0).abs() < 1e-3);
        for s in &fit.local_slopes {
            assert!((s - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn slope_fit_zero_counts_indeterminate() {
        let fit = fit_log_slope(&[0.4, 0.2, 0.1], &[0, 0, 0], 1000);
        assert!(fit.slope.is_none());
        assert_eq!(fit.points_used, 0);
        assert!(fit.local_upper_bound.iter().all(|&b| b));
        // upper-bound probabilities are flat → local slopes 0
        assert!(fit.local_slopes.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn halton_is_low_discrepancy_ish() {
        // all points in the cube, deterministic, and no duplicates early on
        let pts: Vec<Vec<f64>> = (0..64).map(|i| halton(i, 3)).collect();
        for p in &pts {
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        assert_eq!(pts, (0..64).map(|i| halton(i, 3)).collect::<Vec<_>>());
        // first base-2 coordinates: 1/2, 1/4, 3/4, ...
        assert_eq!(pts[0][0], 0.5);
        assert_eq!(pts[1][0], 0.25);
        assert_eq!(pts[2][0], 0.75);
    }
}
