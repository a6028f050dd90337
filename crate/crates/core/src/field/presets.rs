//! Named coefficient catalogs covering the regularity regimes exercised by
//! the test batteries and the command-line experiments.

use super::expr::{FieldExpr, ScalarExpr};
use super::{DeclaredBounds, FieldSet, Regime};
use crate::error::{Error, Result};

fn sx(e: ScalarExpr) -> Box<ScalarExpr> {
    Box::new(e)
}

/// `A_l = e_l` for `l = 1..=m`, zero drift: additive Gaussian noise.
pub fn additive(m: usize) -> FieldSet {
    let diffusion = (0..m).map(|k| FieldExpr::basis(m, k)).collect();
    FieldSet::new(
        m,
        FieldExpr::zero(m),
        diffusion,
        Regime::Elliptic,
        DeclaredBounds { k_sup: 1.0, gamma: 0.5, k_gamma: 1.0, beta: None, k_beta: None },
    )
    .expect("additive preset is well-formed")
}

/// The Grushin noise field `(1, x⁰)`.
pub fn grushin_field() -> FieldExpr {
    FieldExpr::Components(vec![ScalarExpr::Const(1.0), ScalarExpr::Coord(0)])
}

/// Hypoelliptic two-dimensional preset with one noise field `(1, x⁰)`:
/// rank-deficient at the origin, full rank after one bracket level.
pub fn grushin() -> FieldSet {
    FieldSet::new(
        2,
        FieldExpr::zero(2),
        vec![grushin_field()],
        Regime::Smooth,
        DeclaredBounds { k_sup: 2.0, gamma: 0.5, k_gamma: 2.0, beta: None, k_beta: None },
    )
    .expect("grushin preset is well-formed")
}

/// Constant rank-deficient preset: one noise field `e_1` in ℝ²; every
/// bracket vanishes, so the rank stays 1 forever.
pub fn degenerate_constant() -> FieldSet {
    FieldSet::new(
        2,
        FieldExpr::zero(2),
        vec![FieldExpr::basis(2, 0)],
        Regime::Smooth,
        DeclaredBounds::smooth(1.0),
    )
    .expect("degenerate preset is well-formed")
}

/// Noiseless linear drift `A_0(x) = x` in one dimension. The endpoint solves
/// the deterministic Goursat problem whose exact value at `(s, t)` is
/// `Σ_n (st)^n/(n!)²`.
pub fn bessel_drift() -> FieldSet {
    FieldSet::new(
        1,
        FieldExpr::linear_identity(1),
        vec![FieldExpr::zero(1)],
        Regime::Smooth,
        DeclaredBounds::smooth(1.0),
    )
    .expect("bessel preset is well-formed")
}

/// Smooth nonlinear two-dimensional preset with bounded fields and bounded
/// derivatives of every order; used for sensitivity and coupling checks.
pub fn smooth_nonlinear() -> FieldSet {
    use ScalarExpr::*;
    let a1 = FieldExpr::Components(vec![
        Add(sx(Const(1.0)), sx(Mul(sx(Const(0.3)), sx(Sin(sx(Coord(1))))))),
        Mul(sx(Const(0.5)), sx(Cos(sx(Coord(0))))),
    ]);
    let a2 = FieldExpr::Components(vec![
        Mul(sx(Const(0.4)), sx(Cos(sx(Coord(1))))),
        Add(sx(Const(1.0)), sx(Mul(sx(Const(0.3)), sx(Sin(sx(Coord(0))))))),
    ]);
    let a0 = FieldExpr::Components(vec![
        Mul(sx(Const(0.1)), sx(Cos(sx(Coord(1))))),
        Mul(sx(Const(0.1)), sx(Sin(sx(Coord(0))))),
    ]);
    FieldSet::new(
        2,
        a0,
        vec![a1, a2],
        Regime::Smooth,
        DeclaredBounds::smooth(2.0),
    )
    .expect("smooth preset is well-formed")
}

/// Factorable preset `A_l(θ, τ, x) = (2 + sin θ)·e_l`: the time factor is
/// pinched between 1 and 3.
pub fn factorable() -> FieldSet {
    use ScalarExpr::*;
    let f = |k: usize| {
        let mut comps = vec![Const(0.0), Const(0.0)];
        comps[k] = Add(sx(Const(2.0)), sx(Sin(sx(Theta))));
        FieldExpr::Components(comps)
    };
    FieldSet::new(
        2,
        FieldExpr::zero(2),
        vec![f(0), f(1)],
        Regime::Factorable,
        DeclaredBounds { k_sup: 3.0, gamma: 0.5, k_gamma: 3.0, beta: None, k_beta: None },
    )
    .expect("factorable preset is well-formed")
}

/// Regular Hölder preset: `A_l = (1 + 0.5·θ^{3/4})·e_l` with s-exponent 3/4.
pub fn regular_holder() -> FieldSet {
    use ScalarExpr::*;
    let f = |k: usize| {
        let mut comps = vec![Const(0.0), Const(0.0)];
        comps[k] = Add(
            sx(Const(1.0)),
            sx(Mul(sx(Const(0.5)), sx(Powf(sx(Theta), 0.75)))),
        );
        FieldExpr::Components(comps)
    };
    FieldSet::new(
        2,
        FieldExpr::zero(2),
        vec![f(0), f(1)],
        Regime::RegularHolder,
        DeclaredBounds { k_sup: 1.5, gamma: 0.5, k_gamma: 1.5, beta: Some(0.75), k_beta: Some(2.0) },
    )
    .expect("regular-holder preset is well-formed")
}

/// Irregular Hölder preset: one-dimensional noise `A_1(θ) = √θ`, exactly
/// 1/2-Hölder in θ with constant 1 and nothing better.
pub fn irregular_sqrt() -> FieldSet {
    FieldSet::new(
        1,
        FieldExpr::zero(1),
        vec![FieldExpr::Components(vec![ScalarExpr::Sqrt(sx(ScalarExpr::Theta))])],
        Regime::IrregularHolder,
        DeclaredBounds { k_sup: 1.0, gamma: 0.5, k_gamma: 1.0, beta: Some(0.5), k_beta: Some(1.0) },
    )
    .expect("irregular preset is well-formed")
}

pub const PRESET_NAMES: &[&str] = &[
    "additive",
    "grushin",
    "degenerate",
    "bessel-drift",
    "smooth",
    "factorable",
    "regular-holder",
    "irregular-sqrt",
];

/// Looks up a preset by name. `m` is honored by the additive preset and
/// checked against the intrinsic dimension of the others.
pub fn by_name(name: &str, m: Option<usize>) -> Result<FieldSet> {
    let fs = match name {
        "additive" => additive(m.unwrap_or(2)),
        "grushin" => grushin(),
        "degenerate" => degenerate_constant(),
        "bessel-drift" => bessel_drift(),
        "smooth" => smooth_nonlinear(),
        "factorable" => factorable(),
        "regular-holder" => regular_holder(),
        "irregular-sqrt" => irregular_sqrt(),
        other => {
            return Err(Error::Config(format!(
                "unknown field preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if let Some(m) = m {
        if m != fs.m() {
            return Err(Error::Config(format!(
                "preset '{name}' has state dimension {}, but m = {m} was requested",
                fs.m()
            )));
        }
    }
    Ok(fs)
}
