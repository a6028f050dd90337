//! Empirical Hölder certificates for coefficient families.
//!
//! Report-only diagnostics: probe the declared time-regularity exponents and
//! derivative bounds on a deterministic point set and flag violations. A
//! passing certificate is evidence, not proof; a failing one pins the probe
//! pair that broke the declared constant.

use serde::Serialize;

use super::FieldSet;
use crate::error::{Error, Result};
use crate::stats::halton;

#[derive(Debug, Clone, Copy)]
pub struct HolderOptions {
    /// θ probes range over `[0, s_max]`.
    pub s_max: f64,
    /// t probes range over `[0, t_max]`.
    pub t_max: f64,
    /// Spatial probes range over the cube of this radius around the origin.
    pub x_radius: f64,
    /// Override for the t-exponent (defaults to the declared γ).
    pub gamma: Option<f64>,
    /// Override for the s-exponent (defaults to the declared β, else 1).
    pub beta: Option<f64>,
}

impl Default for HolderOptions {
    fn default() -> Self {
        HolderOptions { s_max: 1.0, t_max: 1.0, x_radius: 1.0, gamma: None, beta: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientHolder {
    pub label: String,
    /// Max of `|A(θ,t,x)−A(θ,t',x)|_∞ / |t−t'|^γ` over probe pairs.
    pub t_holder_constant: f64,
    /// Max of `|A(θ,t,x)−A(θ',t,x)|_∞ / |θ−θ'|^β` over probe pairs.
    pub s_holder_constant: f64,
    /// Largest `|A|_∞` seen.
    pub sup_value: f64,
    /// Smallest Euclidean norm of the field value seen.
    pub min_value_norm: f64,
    /// Largest spatial-Jacobian entry seen.
    pub sup_jacobian: f64,
    /// Largest second spatial derivative seen.
    pub sup_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderCertificate {
    /// Exponent used for the t-direction ratios.
    pub gamma: f64,
    /// Exponent used for the s-direction ratios.
    pub beta: f64,
    pub probes: usize,
    pub per_coefficient: Vec<CoefficientHolder>,
    /// Violations of the declared bounds, empty when everything passes.
    pub flags: Vec<String>,
}

impl HolderCertificate {
    pub fn passes(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Certificate at the declared exponents over the unit time box.
pub fn holder_certificate(fs: &FieldSet, probes: usize) -> Result<HolderCertificate> {
    holder_certificate_with(fs, probes, HolderOptions::default())
}

/// Certificate with explicit domain and exponent overrides.
pub fn holder_certificate_with(
    fs: &FieldSet,
    probes: usize,
    opts: HolderOptions,
) -> Result<HolderCertificate> {
    if probes < 2 {
        return Err(Error::Config("need at least two probe points".into()));
    }
    let m = fs.m();
    let bounds = fs.bounds();
    let gamma = opts.gamma.unwrap_or(bounds.gamma);
    let beta = opts.beta.or(bounds.beta).unwrap_or(1.0);

    // probe tuples (θ, θ', t, t', x); the geometric θ-ladder against 0 makes
    // exponent violations at the time origin visible
    let mut tuples: Vec<(f64, f64, f64, f64, Vec<f64>)> = Vec::new();
    for p in 0..probes {
        let u = halton(p as u64, 4 + m.min(4));
        let x: Vec<f64> = (0..m)
            .map(|i| (2.0 * u[4 + i.min(3)] - 1.0) * opts.x_radius)
            .collect();
        tuples.push((
            u[0] * opts.s_max,
            u[1] * opts.s_max,
            u[2] * opts.t_max,
            u[3] * opts.t_max,
            x,
        ));
    }
    for k in 0..=20 {
        let theta = opts.s_max * 0.25_f64.powi(k);
        tuples.push((0.0, theta, 0.0, opts.t_max * 0.5_f64.powi(k), vec![0.1; m]));
    }

    let mut per_coefficient = Vec::with_capacity(fs.d() + 1);
    let mut flags = Vec::new();
    for l in 0..=fs.d() {
        let field = fs.coefficient(l);
        let label = format!("A{l}");
        let mut cert = CoefficientHolder {
            label: label.clone(),
            t_holder_constant: 0.0,
            s_holder_constant: 0.0,
            sup_value: 0.0,
            min_value_norm: f64::INFINITY,
            sup_jacobian: 0.0,
            sup_second: 0.0,
        };
        for (th, th2, t, t2, x) in &tuples {
            let base = field.eval(*th, *t, x)?;
            let sup = base.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            cert.sup_value = cert.sup_value.max(sup);
            let norm = base.iter().map(|&b| b * b).sum::<f64>().sqrt();
            cert.min_value_norm = cert.min_value_norm.min(norm);

            if (t - t2).abs() > 1e-14 {
                let other = field.eval(*th, *t2, x)?;
                let diff = sup_diff(&base, &other);
                cert.t_holder_constant =
                    cert.t_holder_constant.max(diff / (t - t2).abs().powf(gamma));
            }
            if (th - th2).abs() > 1e-14 {
                let other = field.eval(*th2, *t, x)?;
                let diff = sup_diff(&base, &other);
                cert.s_holder_constant =
                    cert.s_holder_constant.max(diff / (th - th2).abs().powf(beta));
            }

            let jac = field.jacobian(*th, *t, x)?;
            cert.sup_jacobian = cert.sup_jacobian.max(jac.max_abs());
            for i in 0..m {
                let mut v = vec![0.0; m];
                v[i] = 1.0;
                let hess = field.vhessian(&v, *th, *t, x)?;
                cert.sup_second = cert.sup_second.max(hess.max_abs());
            }
        }

        let tol = 1e-9;
        if cert.t_holder_constant > bounds.k_gamma + tol {
            flags.push(format!(
                "{label}: empirical t-Hölder constant {:.6} exceeds declared K_γ = {}",
                cert.t_holder_constant, bounds.k_gamma
            ));
        }
        if let Some(k_beta) = bounds.k_beta {
            if cert.s_holder_constant > k_beta + tol {
                flags.push(format!(
                    "{label}: empirical s-Hölder constant {:.6} exceeds declared K_β = {k_beta}",
                    cert.s_holder_constant
                ));
            }
        }
        let deriv_sup = cert.sup_jacobian.max(cert.sup_second);
        if deriv_sup > bounds.k_sup + tol {
            flags.push(format!(
                "{label}: empirical derivative bound {deriv_sup:.6} exceeds declared K = {}",
                bounds.k_sup
            ));
        }
        per_coefficient.push(cert);
    }

    Ok(HolderCertificate { gamma, beta, probes, per_coefficient, flags })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::presets;

    #[test]
    fn constant_fields_have_zero_holder_constants() {
        let fs = presets::additive(2);
        let cert = holder_certificate(&fs, 64).unwrap();
        for c in &cert.per_coefficient {
            assert_eq!(c.t_holder_constant, 0.0);
            assert_eq!(c.s_holder_constant, 0.0);
        }
        assert!(cert.passes());
    }

    #[test]
    fn factorable_lipschitz_and_lower_bound() {
        // factor 2+sin(θ): s-Lipschitz constant ≤ 1, field norm pinched ≥ 1
        let fs = presets::factorable();
        let cert = holder_certificate_with(
            &fs,
            256,
            HolderOptions { beta: Some(1.0), ..HolderOptions::default() },
        )
        .unwrap();
        for l in 1..=2 {
            let c = &cert.per_coefficient[l];
            assert!(c.s_holder_constant <= 1.0 + 1e-9, "{}", c.s_holder_constant);
            assert!(c.s_holder_constant > 0.5, "{}", c.s_holder_constant);
            assert!(c.min_value_norm >= 1.0 - 1e-12);
            assert!(c.sup_value <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn sqrt_theta_passes_at_half_fails_at_0_6() {
        let fs = presets::irregular_sqrt();
        let at_half = holder_certificate_with(
            &fs,
            256,
            HolderOptions { beta: Some(0.5), ..HolderOptions::default() },
        )
        .unwrap();
        let c = &at_half.per_coefficient[1];
        assert!(c.s_holder_constant <= 1.0 + 1e-9);
        assert!(at_half.passes(), "{:?}", at_half.flags);

        let at_06 = holder_certificate_with(
            &fs,
            256,
            HolderOptions { beta: Some(0.6), ..HolderOptions::default() },
        )
        .unwrap();
        let c = &at_06.per_coefficient[1];
        // |√θ − 0| / θ^0.6 = θ^{-0.1} → blows past the declared constant 1
        // on the geometric ladder toward θ = 0
        assert!(c.s_holder_constant > 1.0 + 0.5, "{}", c.s_holder_constant);
        assert!(!at_06.passes());
    }

    #[test]
    fn probe_count_precondition() {
        let fs = presets::additive(1);
        assert!(holder_certificate(&fs, 1).is_err());
    }
}
