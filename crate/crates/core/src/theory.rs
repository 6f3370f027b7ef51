//! Closed-form quantities: Neyman target allocation, the lower-bound error
//! exponent, the IPW exponent, the normalized score and the exact error of
//! the known-variance oracle.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::model::{gap, BanditInstance};

fn check_sigmas(sigma1: f64, sigma2: f64) -> Result<()> {
    if sigma1 > 0.0 && sigma2 > 0.0 && sigma1.is_finite() && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma1, sigma2))
    }
}

/// Neyman allocation `(sigma1, sigma2) / (sigma1 + sigma2)`.
pub fn target_allocation(sigma1: f64, sigma2: f64) -> Result<(f64, f64)> {
    check_sigmas(sigma1, sigma2)?;
    let w1 = sigma1 / (sigma1 + sigma2);
    Ok((w1, 1.0 - w1))
}

/// Asymptotic variance of the AIPW mean difference under the target
/// allocation, `(sigma1 + sigma2)^2`.
pub fn aipw_variance(sigma1: f64, sigma2: f64) -> Result<f64> {
    check_sigmas(sigma1, sigma2)?;
    Ok((sigma1 + sigma2).powi(2))
}

/// `delta^2 / (2 (sigma1 + sigma2)^2)`.
pub fn lower_bound_rate(delta: f64, sigma1: f64, sigma2: f64) -> Result<f64> {
    Ok(delta * delta / (2.0 * aipw_variance(sigma1, sigma2)?))
}

/// Second moment `mu^2 + sigma^2` of an arm's reward.
pub fn second_moment(mu: f64, sigma: f64) -> f64 {
    mu * mu + sigma * sigma
}

/// Exponent of the IPW strategy,
/// `delta^2 / (2 (sigma1 + sigma2) (zeta1/sigma1 + zeta2/sigma2))`.
pub fn ipw_rate(delta: f64, mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<f64> {
    check_sigmas(sigma1, sigma2)?;
    let z1 = second_moment(mu1, sigma1);
    let z2 = second_moment(mu2, sigma2);
    Ok(delta * delta / (2.0 * (sigma1 + sigma2) * (z1 / sigma1 + z2 / sigma2)))
}

/// `(psi1 - psi2 - delta) / sqrt(v)`.
pub fn normalized_score(psi1: f64, psi2: f64, delta: f64, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok((psi1 - psi2 - delta) / v.sqrt())
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `ln Phi(x)`, finite far into the lower tail where `Phi` underflows.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return std_normal_cdf(x).ln();
    }
    // Mills ratio expansion: Phi(x) ~ phi(x)/|x| (1 - 1/x^2 + 3/x^4 - 15/x^6)
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - (-x * (2.0 * PI).sqrt()).ln() + series.ln()
}

fn oracle_z(delta: f64, sigma1: f64, sigma2: f64, horizon: u64) -> Result<f64> {
    check_sigmas(sigma1, sigma2)?;
    Ok(-delta.abs() * (horizon as f64).sqrt() / (sigma1 + sigma2))
}

/// Exact misidentification probability of sampling each arm exactly
/// `w*_a T` times and comparing sample means, `Phi(-|delta| sqrt(T) / (sigma1 + sigma2))`.
///
/// Rounding of the counts to integers is ignored.
pub fn oracle_exact_error(delta: f64, sigma1: f64, sigma2: f64, horizon: u64) -> Result<f64> {
    Ok(std_normal_cdf(oracle_z(delta, sigma1, sigma2, horizon)?))
}

/// `ln` of [`oracle_exact_error`], accurate in the far tail.
pub fn ln_oracle_exact_error(delta: f64, sigma1: f64, sigma2: f64, horizon: u64) -> Result<f64> {
    Ok(ln_std_normal_cdf(oracle_z(delta, sigma1, sigma2, horizon)?))
}

/// Everything the theory says about one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub delta: f64,
    pub w_star: (f64, f64),
    pub v_aipw: f64,
    pub rate_lower_bound: f64,
    pub rate_ipw: f64,
    pub zeta: (f64, f64),
}

impl RateReport {
    pub fn for_instance(instance: &BanditInstance) -> Result<Self> {
        let (s1, s2) = instance.sigmas();
        let delta = gap(instance);
        Ok(RateReport {
            delta,
            w_star: target_allocation(s1, s2)?,
            v_aipw: aipw_variance(s1, s2)?,
            rate_lower_bound: lower_bound_rate(delta, s1, s2)?,
            rate_ipw: ipw_rate(delta, instance.mu1, instance.mu2, s1, s2)?,
            zeta: (
                second_moment(instance.mu1, s1),
                second_moment(instance.mu2, s2),
            ),
        })
    }
}
