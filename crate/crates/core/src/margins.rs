//! Marginal tail machinery: generalised Pareto tails above a threshold,
//! quantiles and return levels, the asymmetric quantile loss, and the
//! Gumbel/Fréchet margin transforms used by the multivariate pipelines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shapes with magnitude below this use the exponential (ξ = 0) limit.
pub const XI_ZERO_TOL: f64 = 1e-8;

/// A peaks-over-threshold fit: GPD scale and shape for excesses of `u`,
/// plus the probability `zeta_u` of exceeding `u` at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub sigma: f64,
    pub xi: f64,
    pub u: f64,
    pub zeta_u: f64,
}

impl GpdParams {
    pub fn new(sigma: f64, xi: f64, u: f64, zeta_u: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("GPD scale must be positive, got {sigma}")));
        }
        if !xi.is_finite() || !u.is_finite() {
            return Err(Error::Domain("GPD shape and threshold must be finite".into()));
        }
        if !(zeta_u > 0.0 && zeta_u <= 1.0) {
            return Err(Error::Domain(format!(
                "exceedance probability must lie in (0, 1], got {zeta_u}"
            )));
        }
        Ok(Self { sigma, xi, u, zeta_u })
    }

    /// Finite upper endpoint `u - sigma/xi` when the shape is negative.
    pub fn upper_endpoint(&self) -> Option<f64> {
        (self.xi < -XI_ZERO_TOL).then(|| self.u - self.sigma / self.xi)
    }
}

/// `P(Y > y)` for `y >= u` under the fitted tail.
pub fn gpd_survival(y: f64, params: &GpdParams) -> Result<f64> {
    if y < params.u {
        return Err(Error::Domain(format!(
            "survival is only modelled above the threshold ({y} < {})",
            params.u
        )));
    }
    let z = (y - params.u) / params.sigma;
    if params.xi.abs() < XI_ZERO_TOL {
        return Ok(params.zeta_u * (-z).exp());
    }
    let base = 1.0 + params.xi * z;
    if base <= 0.0 {
        return Ok(0.0);
    }
    Ok(params.zeta_u * (-(base.ln()) / params.xi).exp())
}

/// Level exceeded with probability `p`, for `0 < p <= zeta_u`.
pub fn gpd_quantile(p: f64, params: &GpdParams) -> Result<f64> {
    if !(p > 0.0 && p <= params.zeta_u) {
        return Err(Error::Domain(format!(
            "exceedance probability {p} must lie in (0, zeta_u = {}]",
            params.zeta_u
        )));
    }
    let log_ratio = (params.zeta_u / p).ln();
    if params.xi.abs() < XI_ZERO_TOL {
        return Ok(params.u + params.sigma * log_ratio);
    }
    // (p/zeta)^(-xi) - 1 == expm1(xi * log(zeta/p)), accurate for small xi
    Ok(params.u + params.sigma / params.xi * (params.xi * log_ratio).exp_m1())
}

/// Level exceeded on average once every `years` years given
/// `per_year` observations per year.
///
/// Identical to `gpd_quantile(1 / (years * per_year))`.
pub fn return_level(years: f64, per_year: f64, params: &GpdParams) -> Result<f64> {
    if !(years > 0.0) || !(per_year >= 1.0) {
        return Err(Error::Domain(format!(
            "return period needs years > 0 and per_year >= 1 (got {years}, {per_year})"
        )));
    }
    let expected_exceedances = years * per_year * params.zeta_u;
    if expected_exceedances <= 1.0 {
        return Err(Error::Domain(format!(
            "threshold is exceeded only {expected_exceedances:.4} times in {years} years"
        )));
    }
    gpd_quantile(1.0 / (years * per_year), params)
}

/// Empirical probability of exceeding `u`: the fraction of `data` strictly above it.
pub fn exceedance_prob(data: &[f64], u: f64) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter().filter(|&&x| x > u).count() as f64 / data.len() as f64
}

/// Which form of the under-estimation branch the loss uses.
///
/// `AsPrinted` takes the under-estimation value as `0.9(0.9q - q̂)` while
/// conditioning on `0.99q > q̂`, so that branch goes negative for
/// `q̂ ∈ (0.9q, 0.99q)`. `Corrected` uses `0.99q` in both places.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossVariant {
    #[default]
    AsPrinted,
    Corrected,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossSpec {
    pub variant: LossVariant,
}

/// Asymmetric quantile loss: zero within 1% of the truth, slope 0.9 below
/// and 0.1 above.
pub fn challenge_loss(q_true: f64, q_hat: f64, spec: LossSpec) -> Result<f64> {
    if !(q_true > 0.0) {
        return Err(Error::Domain(format!("true quantile must be positive, got {q_true}")));
    }
    let loss = if 0.99 * q_true > q_hat {
        match spec.variant {
            LossVariant::AsPrinted => 0.9 * (0.9 * q_true - q_hat),
            LossVariant::Corrected => 0.9 * (0.99 * q_true - q_hat),
        }
    } else if (q_true - q_hat).abs() <= 0.01 * q_true {
        0.0
    } else {
        0.1 * (q_hat - 1.01 * q_true)
    };
    Ok(loss)
}

/// Maps a standard Gumbel variate to a Fréchet(`alpha`) variate: `exp(y / alpha)`.
pub fn gumbel_to_frechet(y: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    (y / alpha).exp()
}

/// Standard Gumbel distribution function `exp(-exp(-y))`.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y).exp()).exp()
}

/// Fréchet(`alpha`) distribution function `exp(-x^-alpha)`.
pub fn frechet_cdf(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-x.powf(-alpha)).exp()
    }
}

fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// Standard Gumbel quantile `-log(-log p)`.
pub fn gumbel_quantile(p: f64) -> Result<f64> {
    check_open_unit(p)?;
    Ok(-(-p.ln()).ln())
}

/// Fréchet(`alpha`) quantile `(-log p)^(-1/alpha)`.
pub fn frechet_quantile(p: f64, alpha: f64) -> Result<f64> {
    check_open_unit(p)?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("tail index must be positive, got {alpha}")));
    }
    Ok((-p.ln()).powf(-1.0 / alpha))
}
