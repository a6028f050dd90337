//! Closed expression trees for time-dependent vector fields on ℝ^m.
//!
//! A [`FieldExpr`] evaluates to a vector given `(θ, τ, x)`. Spatial
//! derivatives come from forward-mode dual numbers: evaluating the same tree
//! one [`Lift`] level up with a seeded coordinate yields one Jacobian column
//! exactly. The two time arguments are always lifted as constants — fields
//! may be rough in time, so nothing ever differentiates θ or τ.
//!
//! Covariant-derivative application `(a^∇b)^i = Σ_k a^k ∂_k b^i` is itself an
//! expression node, so bracket hierarchies stay first-class expressions with
//! decidable structural equality.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SquareMat;
use crate::scalar::{Lift, Scalar, MAX_LIFT_DEPTH};

/// Scalar-valued expression over `(θ, τ, x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Theta,
    Tau,
    /// Coordinate `x^k` (zero-based).
    Coord(usize),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    Sin(Box<ScalarExpr>),
    Cos(Box<ScalarExpr>),
    Exp(Box<ScalarExpr>),
    Sqrt(Box<ScalarExpr>),
    /// Integer power.
    Powi(Box<ScalarExpr>, i32),
    /// Fixed real power (used for Hölder-rough time profiles like θ^β).
    Powf(Box<ScalarExpr>, f64),
}

impl ScalarExpr {
    pub fn eval<S: Scalar>(&self, theta: S, tau: S, x: &[S]) -> S {
        match self {
            ScalarExpr::Const(c) => S::of(*c),
            ScalarExpr::Theta => theta,
            ScalarExpr::Tau => tau,
            ScalarExpr::Coord(k) => x[*k],
            ScalarExpr::Add(a, b) => a.eval(theta, tau, x) + b.eval(theta, tau, x),
            ScalarExpr::Sub(a, b) => a.eval(theta, tau, x) - b.eval(theta, tau, x),
            ScalarExpr::Mul(a, b) => a.eval(theta, tau, x) * b.eval(theta, tau, x),
            ScalarExpr::Neg(a) => -a.eval(theta, tau, x),
            ScalarExpr::Sin(a) => a.eval(theta, tau, x).sin(),
            ScalarExpr::Cos(a) => a.eval(theta, tau, x).cos(),
            ScalarExpr::Exp(a) => a.eval(theta, tau, x).exp(),
            ScalarExpr::Sqrt(a) => a.eval(theta, tau, x).sqrt(),
            ScalarExpr::Powi(a, n) => a.eval(theta, tau, x).powi(*n),
            ScalarExpr::Powf(a, p) => a.eval(theta, tau, x).powf(S::of(*p)),
        }
    }

    /// Largest coordinate index mentioned, if any.
    fn max_coord(&self) -> Option<usize> {
        match self {
            ScalarExpr::Const(_) | ScalarExpr::Theta | ScalarExpr::Tau => None,
            ScalarExpr::Coord(k) => Some(*k),
            ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) | ScalarExpr::Mul(a, b) => {
                match (a.max_coord(), b.max_coord()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            ScalarExpr::Neg(a)
            | ScalarExpr::Sin(a)
            | ScalarExpr::Cos(a)
            | ScalarExpr::Exp(a)
            | ScalarExpr::Sqrt(a)
            | ScalarExpr::Powi(a, _)
            | ScalarExpr::Powf(a, _) => a.max_coord(),
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Const(c) => write!(f, "{c}"),
            ScalarExpr::Theta => write!(f, "theta"),
            ScalarExpr::Tau => write!(f, "tau"),
            ScalarExpr::Coord(k) => write!(f, "x{k}"),
            ScalarExpr::Add(a, b) => write!(f, "(+ {a} {b})"),
            ScalarExpr::Sub(a, b) => write!(f, "(- {a} {b})"),
            ScalarExpr::Mul(a, b) => write!(f, "(* {a} {b})"),
            ScalarExpr::Neg(a) => write!(f, "(neg {a})"),
            ScalarExpr::Sin(a) => write!(f, "(sin {a})"),
            ScalarExpr::Cos(a) => write!(f, "(cos {a})"),
            ScalarExpr::Exp(a) => write!(f, "(exp {a})"),
            ScalarExpr::Sqrt(a) => write!(f, "(sqrt {a})"),
            ScalarExpr::Powi(a, n) => write!(f, "(powi {n} {a})"),
            ScalarExpr::Powf(a, p) => write!(f, "(powf {p} {a})"),
        }
    }
}

/// Vector-field expression on ℝ^m.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    /// Componentwise definition.
    Components(Vec<ScalarExpr>),
    /// `a^∇ b`: derivative of `b` along `a` in the flat connection.
    CovDeriv(Arc<FieldExpr>, Arc<FieldExpr>),
}

impl FieldExpr {
    /// Constant vector field.
    pub fn constant(v: &[f64]) -> Self {
        FieldExpr::Components(v.iter().map(|&c| ScalarExpr::Const(c)).collect())
    }

    /// Basis field `e_k` in dimension `m`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        Self::constant(&v)
    }

    /// Identically zero field.
    pub fn zero(m: usize) -> Self {
        Self::constant(&vec![0.0; m])
    }

    /// Identity field `x ↦ x`.
    pub fn linear_identity(m: usize) -> Self {
        FieldExpr::Components((0..m).map(ScalarExpr::Coord).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldExpr::Components(cs) => cs.len(),
            FieldExpr::CovDeriv(_, b) => b.dim(),
        }
    }

    /// Nesting depth of covariant-derivative nodes. Each level consumes one
    /// dual-tower level on evaluation.
    pub fn cov_depth(&self) -> usize {
        match self {
            FieldExpr::Components(_) => 0,
            FieldExpr::CovDeriv(a, b) => a.cov_depth().max(b.cov_depth() + 1),
        }
    }

    /// Covariant derivative of `b` along `a`; both fields must share m.
    pub fn cov_deriv(a: &FieldExpr, b: &FieldExpr) -> Result<FieldExpr> {
        if a.dim() != b.dim() {
            return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
        }
        Ok(FieldExpr::CovDeriv(Arc::new(a.clone()), Arc::new(b.clone())))
    }

    /// Checks coordinates and derivative depth against dimension `m` and the
    /// extra derivative orders the caller intends to request.
    pub fn validate(&self, m: usize, extra_orders: usize) -> Result<()> {
        if self.dim() != m {
            return Err(Error::Dimension { expected: m, got: self.dim() });
        }
        let needed = self.cov_depth() + extra_orders;
        if needed > MAX_LIFT_DEPTH {
            return Err(Error::DepthExceeded { needed, cap: MAX_LIFT_DEPTH });
        }
        match self {
            FieldExpr::Components(cs) => {
                for c in cs {
                    if let Some(k) = c.max_coord() {
                        if k >= m {
                            return Err(Error::Dimension { expected: m, got: k + 1 });
                        }
                    }
                }
                Ok(())
            }
            FieldExpr::CovDeriv(a, b) => {
                a.validate(m, 0)?;
                b.validate(m, 0)
            }
        }
    }

    /// Evaluates into `out` (length m). Callers must have validated the
    /// expression; this is the allocation-light path used by inner loops.
    pub fn eval_into<S: Lift>(&self, theta: S, tau: S, x: &[S], out: &mut [S]) {
        match self {
            FieldExpr::Components(cs) => {
                for (o, c) in out.iter_mut().zip(cs) {
                    *o = c.eval(theta, tau, x);
                }
            }
            FieldExpr::CovDeriv(a, b) => {
                let m = out.len();
                assert!(
                    S::DEPTH_LEFT > 0,
                    "dual tower exhausted evaluating a covariant derivative"
                );
                let mut direction = vec![S::zero(); m];
                a.eval_into(theta, tau, x, &mut direction);
                let th = theta.lift();
                let ta = tau.lift();
                let mut x_up: Vec<S::Up> = x.iter().map(|&xi| xi.lift()).collect();
                let mut col = vec![<S::Up as num_traits::Zero>::zero(); m];
                for o in out.iter_mut() {
                    *o = S::zero();
                }
                for k in 0..m {
                    x_up[k] = x[k].lift_seeded();
                    b.eval_into(th, ta, &x_up, &mut col);
                    x_up[k] = x[k].lift();
                    for i in 0..m {
                        out[i] = out[i] + direction[k] * S::tangent_of(col[i]);
                    }
                }
            }
        }
    }

    /// Checked evaluation: verifies dimensions and tower depth.
    pub fn eval<S: Lift>(&self, theta: S, tau: S, x: &[S]) -> Result<Vec<S>> {
        self.validate(x.len(), 0)?;
        let mut out = vec![S::zero(); x.len()];
        self.eval_into(theta, tau, x, &mut out);
        Ok(out)
    }

    /// Spatial Jacobian into a matrix with entry `(i, k) = ∂_k f^i`.
    pub fn jacobian_into<S: Lift>(&self, theta: S, tau: S, x: &[S], out: &mut SquareMat<S>) {
        let m = x.len();
        let th = theta.lift();
        let ta = tau.lift();
        let mut x_up: Vec<S::Up> = x.iter().map(|&xi| xi.lift()).collect();
        let mut col = vec![<S::Up as num_traits::Zero>::zero(); m];
        for k in 0..m {
            x_up[k] = x[k].lift_seeded();
            self.eval_into(th, ta, &x_up, &mut col);
            x_up[k] = x[k].lift();
            for i in 0..m {
                out.set(i, k, S::tangent_of(col[i]));
            }
        }
    }

    /// Checked Jacobian.
    pub fn jacobian<S: Lift>(&self, theta: S, tau: S, x: &[S]) -> Result<SquareMat<S>> {
        self.validate(x.len(), 1)?;
        let mut out = SquareMat::zeros(x.len());
        self.jacobian_into(theta, tau, x, &mut out);
        Ok(out)
    }

    /// Hessian of the scalar `⟨v, f⟩`: entry `(j, k) = Σ_i v_i ∂_j ∂_k f^i`.
    pub fn vhessian<S: Lift>(
        &self,
        v: &[S],
        theta: S,
        tau: S,
        x: &[S],
    ) -> Result<SquareMat<S>>
    where
        S::Up: Lift,
    {
        self.validate(x.len(), 2)?;
        let m = x.len();
        let th2 = theta.lift().lift();
        let ta2 = tau.lift().lift();
        let mut out = SquareMat::zeros(m);
        let mut x2: Vec<<S::Up as Lift>::Up> =
            x.iter().map(|&xi| xi.lift().lift()).collect();
        let mut val = vec![<<S::Up as Lift>::Up as num_traits::Zero>::zero(); m];
        for j in 0..m {
            for k in j..m {
                // seed x_j at the inner dual level and x_k at the outer one;
                // on the diagonal both seeds land on the same coordinate
                x2[j] = x[j].lift_seeded().lift();
                x2[k] = if j == k {
                    x[k].lift_seeded().lift() + x[k].lift().lift_seeded() - x[k].lift().lift()
                } else {
                    x[k].lift().lift_seeded()
                };
                self.eval_into(th2, ta2, &x2, &mut val);
                let mut acc = S::zero();
                for i in 0..m {
                    acc = acc + v[i] * S::tangent_of(S::Up::tangent_of(val[i]));
                }
                out.set(j, k, acc);
                out.set(k, j, acc);
                x2[j] = x[j].lift().lift();
                x2[k] = x[k].lift().lift();
            }
        }
        Ok(out)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Components(cs) => {
                write!(f, "(")?;
                for (k, c) in cs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            FieldExpr::CovDeriv(a, b) => write!(f, "[{a} ∇ {b}]"),
        }
    }
}

/// Parses the prefix expression syntax for one vector field.
///
/// Components are comma-separated; each component is a prefix expression over
/// the tokens `theta`, `tau`, `x0..x9`, numeric literals, binary `+ - *`,
/// unary `neg sin cos exp sqrt`, and `powi N <expr>` / `powf P <expr>`.
/// Parentheses are cosmetic. Example: `1, (* 0.5 (sin x0))`.
pub fn parse_field(text: &str) -> Result<FieldExpr> {
    let mut components = Vec::new();
    for part in text.split(',') {
        let cleaned = part.replace(['(', ')'], " ");
        let tokens: Vec<&str> = cleaned.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(Error::Config(format!("empty field component in '{text}'")));
        }
        let mut pos = 0;
        let expr = parse_prefix(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Config(format!(
                "trailing tokens after component expression: '{}'",
                tokens[pos..].join(" ")
            )));
        }
        components.push(expr);
    }
    Ok(FieldExpr::Components(components))
}

fn parse_prefix(tokens: &[&str], pos: &mut usize) -> Result<ScalarExpr> {
    let tok = *tokens
        .get(*pos)
        .ok_or_else(|| Error::Config("field expression ended early".into()))?;
    *pos += 1;
    let unary = |f: fn(Box<ScalarExpr>) -> ScalarExpr, pos: &mut usize| {
        parse_prefix(tokens, pos).map(|e| f(Box::new(e)))
    };
    match tok {
        "theta" => Ok(ScalarExpr::Theta),
        "tau" => Ok(ScalarExpr::Tau),
        "+" => Ok(ScalarExpr::Add(
            Box::new(parse_prefix(tokens, pos)?),
            Box::new(parse_prefix(tokens, pos)?),
        )),
        "-" => Ok(ScalarExpr::Sub(
            Box::new(parse_prefix(tokens, pos)?),
            Box::new(parse_prefix(tokens, pos)?),
        )),
        "*" => Ok(ScalarExpr::Mul(
            Box::new(parse_prefix(tokens, pos)?),
            Box::new(parse_prefix(tokens, pos)?),
        )),
        "neg" => unary(ScalarExpr::Neg, pos),
        "sin" => unary(ScalarExpr::Sin, pos),
        "cos" => unary(ScalarExpr::Cos, pos),
        "exp" => unary(ScalarExpr::Exp, pos),
        "sqrt" => unary(ScalarExpr::Sqrt, pos),
        "powi" => {
            let n = next_literal(tokens, pos)?;
            if n.fract() != 0.0 {
                return Err(Error::Config(format!("powi needs an integer exponent, got {n}")));
            }
            Ok(ScalarExpr::Powi(Box::new(parse_prefix(tokens, pos)?), n as i32))
        }
        "powf" => {
            let p = next_literal(tokens, pos)?;
            Ok(ScalarExpr::Powf(Box::new(parse_prefix(tokens, pos)?), p))
        }
        t if t.starts_with('x') && t[1..].chars().all(|c| c.is_ascii_digit()) && t.len() > 1 => {
            Ok(ScalarExpr::Coord(t[1..].parse().unwrap()))
        }
        t => t
            .parse::<f64>()
            .map(ScalarExpr::Const)
            .map_err(|_| Error::Config(format!("unknown token '{t}' in field expression"))),
    }
}

fn next_literal(tokens: &[&str], pos: &mut usize) -> Result<f64> {
    let tok = *tokens
        .get(*pos)
        .ok_or_else(|| Error::Config("expected a numeric literal".into()))?;
    *pos += 1;
    tok.parse::<f64>()
        .map_err(|_| Error::Config(format!("expected a numeric literal, got '{tok}'")))
}
