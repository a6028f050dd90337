//! Coefficient fields of the two-parameter equation: the drift `A_0` and the
//! noise fields `A_1..A_d`, with their declared regularity regime and bounds.

pub mod bracket;
pub mod expr;
pub mod holder;
pub mod hormander;
pub mod presets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SquareMat;
use crate::scalar::Lift;

pub use bracket::{bracket_sets, BracketSet};
pub use expr::{parse_field, FieldExpr, ScalarExpr};
pub use holder::{holder_certificate, holder_certificate_with, HolderCertificate, HolderOptions};
pub use hormander::{hormander_report, HormanderReport, NeighborhoodSpec};

/// Regularity regime of a coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Elliptic,
    Smooth,
    Factorable,
    RegularHolder,
    IrregularHolder,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Elliptic => "elliptic",
            Regime::Smooth => "smooth",
            Regime::Factorable => "factorable",
            Regime::RegularHolder => "regular-holder",
            Regime::IrregularHolder => "irregular-holder",
        }
    }
}

/// Declared bounds: the sup bound on spatial derivatives, the t-Hölder pair
/// `(γ, K_γ)`, and — in the Hölder regimes — the s-Hölder pair `(β, K_β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredBounds {
    pub k_sup: f64,
    pub gamma: f64,
    pub k_gamma: f64,
    pub beta: Option<f64>,
    pub k_beta: Option<f64>,
}

impl DeclaredBounds {
    pub fn smooth(k_sup: f64) -> Self {
        DeclaredBounds { k_sup, gamma: 0.5, k_gamma: k_sup, beta: None, k_beta: None }
    }
}

/// A complete coefficient family: drift plus `d` noise fields on ℝ^m.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    m: usize,
    d: usize,
    drift: FieldExpr,
    diffusion: Vec<FieldExpr>,
    regime: Regime,
    bounds: DeclaredBounds,
}

impl FieldSet {
    pub fn new(
        m: usize,
        drift: FieldExpr,
        diffusion: Vec<FieldExpr>,
        regime: Regime,
        bounds: DeclaredBounds,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("state dimension must be at least 1".into()));
        }
        if diffusion.is_empty() {
            return Err(Error::Config("need at least one noise field".into()));
        }
        // two extra derivative orders must stay available: the Hörmander and
        // semimartingale machinery differentiates coefficients twice
        drift.validate(m, 2)?;
        for a in &diffusion {
            a.validate(m, 2)?;
        }
        if !(bounds.gamma > 0.0 && bounds.gamma < 1.0) {
            return Err(Error::Config(format!(
                "t-Hölder exponent must lie in (0,1), got {}",
                bounds.gamma
            )));
        }
        match regime {
            Regime::RegularHolder => {
                let beta = bounds.beta.ok_or_else(|| {
                    Error::Config("regular-holder regime needs a declared s-Hölder exponent".into())
                })?;
                if !(beta > 0.5 && beta < 1.0) {
                    return Err(Error::Config(format!(
                        "regular-holder regime needs β in (1/2,1), got {beta}"
                    )));
                }
            }
            Regime::IrregularHolder => {
                let beta = bounds.beta.ok_or_else(|| {
                    Error::Config("irregular-holder regime needs a declared s-Hölder exponent".into())
                })?;
                if !(beta > 0.0 && beta <= 0.5) {
                    return Err(Error::Config(format!(
                        "irregular-holder regime needs β in (0,1/2], got {beta}"
                    )));
                }
            }
            _ => {}
        }
        let d = diffusion.len();
        Ok(FieldSet { m, d, drift, diffusion, regime, bounds })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn bounds(&self) -> &DeclaredBounds {
        &self.bounds
    }
    pub fn drift(&self) -> &FieldExpr {
        &self.drift
    }

    /// Noise field `A_l`, `1 ≤ l ≤ d`.
    pub fn noise(&self, l: usize) -> &FieldExpr {
        &self.diffusion[l - 1]
    }

    /// Coefficient by index with the drift at `0` and noise at `1..=d`.
    pub fn coefficient(&self, l: usize) -> &FieldExpr {
        if l == 0 {
            &self.drift
        } else {
            &self.diffusion[l - 1]
        }
    }

    /// Unchecked fast-path evaluation (expressions were validated on
    /// construction).
    #[inline]
    pub fn eval_into<S: Lift>(&self, l: usize, theta: S, tau: S, x: &[S], out: &mut [S]) {
        self.coefficient(l).eval_into(theta, tau, x, out);
    }

    /// Unchecked fast-path Jacobian.
    #[inline]
    pub fn jacobian_into<S: Lift>(
        &self,
        l: usize,
        theta: S,
        tau: S,
        x: &[S],
        out: &mut SquareMat<S>,
    ) {
        self.coefficient(l).jacobian_into(theta, tau, x, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_exponent_consistency() {
        let mk = |regime, beta| {
            FieldSet::new(
                1,
                FieldExpr::zero(1),
                vec![FieldExpr::basis(1, 0)],
                regime,
                DeclaredBounds { k_sup: 1.0, gamma: 0.5, k_gamma: 1.0, beta, k_beta: Some(1.0) },
            )
        };
        assert!(mk(Regime::RegularHolder, Some(0.75)).is_ok());
        assert!(mk(Regime::RegularHolder, Some(0.5)).is_err());
        assert!(mk(Regime::IrregularHolder, Some(0.5)).is_ok());
        assert!(mk(Regime::IrregularHolder, Some(0.75)).is_err());
        assert!(mk(Regime::RegularHolder, None).is_err());
    }

    #[test]
    fn gamma_range_checked() {
        let r = FieldSet::new(
            1,
            FieldExpr::zero(1),
            vec![FieldExpr::basis(1, 0)],
            Regime::Smooth,
            DeclaredBounds { k_sup: 1.0, gamma: 1.5, k_gamma: 1.0, beta: None, k_beta: None },
        );
        assert!(r.is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let r = FieldSet::new(
            2,
            FieldExpr::zero(2),
            vec![FieldExpr::basis(3, 0)],
            Regime::Smooth,
            DeclaredBounds::smooth(1.0),
        );
        assert!(r.is_err());
    }
}
