//! Bracket hierarchy of the noise fields under covariant differentiation.
//!
//! Level 0 holds the noise fields `A_1..A_d` (the drift is excluded); level
//! `k+1` holds `A_l^∇ V` for every `l` and every `V` at level `k`, with
//! structural duplicates removed. No semantic simplification is attempted:
//! duplicate removal is purely syntactic, which can over-count fields but
//! never changes the spanned space.

use super::expr::FieldExpr;
use super::FieldSet;
use crate::error::{Error, Result};
use crate::scalar::MAX_LIFT_DEPTH;

/// Levels `Σ_0..Σ_N` of the bracket hierarchy.
#[derive(Debug, Clone)]
pub struct BracketSet {
    levels: Vec<Vec<FieldExpr>>,
    raw_counts: Vec<usize>,
}

impl BracketSet {
    pub fn levels(&self) -> &[Vec<FieldExpr>] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &[FieldExpr] {
        &self.levels[k]
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Size of each level before structural de-duplication.
    pub fn raw_counts(&self) -> &[usize] {
        &self.raw_counts
    }

    /// All fields up to and including level `k`.
    pub fn cumulative(&self, k: usize) -> impl Iterator<Item = &FieldExpr> {
        self.levels[..=k].iter().flatten()
    }
}

/// Builds `Σ_0..Σ_depth` by repeated covariant differentiation along the
/// noise fields.
pub fn bracket_sets(fs: &FieldSet, depth: usize) -> Result<BracketSet> {
    // level-k members nest k covariant derivatives; evaluating them at
    // order 0 already costs k dual levels
    if depth > MAX_LIFT_DEPTH {
        return Err(Error::DepthExceeded { needed: depth, cap: MAX_LIFT_DEPTH });
    }
    let base: Vec<FieldExpr> = (1..=fs.d()).map(|l| fs.noise(l).clone()).collect();
    let mut levels = vec![base];
    let mut raw_counts = vec![fs.d()];
    for _ in 0..depth {
        let prev = levels.last().unwrap();
        let mut next: Vec<FieldExpr> = Vec::with_capacity(fs.d() * prev.len());
        raw_counts.push(fs.d() * prev.len());
        for v in prev {
            for l in 1..=fs.d() {
                let derived = FieldExpr::cov_deriv(fs.noise(l), v)?;
                if !next.contains(&derived) {
                    next.push(derived);
                }
            }
        }
        levels.push(next);
    }
    Ok(BracketSet { levels, raw_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::presets;

    #[test]
    fn constant_fields_bracket_to_zero() {
        let fs = presets::additive(2);
        let bs = bracket_sets(&fs, 2).unwrap();
        assert_eq!(bs.level(0).len(), 2);
        for k in 1..=2 {
            for v in bs.level(k) {
                let val = v.eval(0.0, 0.3, &[0.5, -0.2]).unwrap();
                assert!(val.iter().all(|&x| x == 0.0), "level {k}");
            }
        }
    }

    #[test]
    fn raw_count_is_d_times_previous() {
        let fs = presets::additive(2);
        let bs = bracket_sets(&fs, 1).unwrap();
        assert_eq!(bs.raw_counts(), &[2, 4]);
    }

    #[test]
    fn grushin_first_level() {
        let fs = presets::grushin();
        let bs = bracket_sets(&fs, 1).unwrap();
        assert_eq!(bs.level(0).len(), 1);
        assert_eq!(bs.level(1).len(), 1);
        let v0 = bs.level(0)[0].eval(0.0, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(v0, vec![1.0, 0.0]);
        let v1 = bs.level(1)[0].eval(0.0, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(v1, vec![0.0, 1.0]);
    }

    #[test]
    fn structural_duplicates_removed() {
        // two identical noise fields give structurally equal brackets
        let fs = FieldSet::new(
            2,
            FieldExpr::zero(2),
            vec![presets::grushin_field(), presets::grushin_field()],
            crate::field::Regime::Smooth,
            crate::field::DeclaredBounds::smooth(1.0),
        )
        .unwrap();
        let bs = bracket_sets(&fs, 1).unwrap();
        assert_eq!(bs.raw_counts()[1], 4);
        assert_eq!(bs.level(1).len(), 1);
    }
}
