//! Problem parameters, the closed-form stationary solutions and the
//! double-exponential weight of the energy space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural-log magnitude above which `weight_rho` refuses to exponentiate.
pub const LOG_WEIGHT_CAP: f64 = 500.0;

/// Exponent `p > 1` of the absorption term and optional source strength `alpha > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p: f64,
    alpha: Option<f64>,
}

impl ModelParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        let params = Self::singular(p)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        Ok(Self {
            alpha: Some(alpha),
            ..params
        })
    }

    /// Parameters for the infinite-source problem, where only `p` matters.
    pub fn singular(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must be > 1, got {p}")));
        }
        Ok(Self { p, alpha: None })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn require_alpha(&self) -> Result<f64> {
        self.alpha.ok_or(Error::MissingAlpha)
    }

    /// `(p+3)/(p-1)`, the constant part of the drift in the profile equation.
    pub fn drift_constant(&self) -> f64 {
        (self.p + 3.0) / (self.p - 1.0)
    }

    /// `2(p+1)/(p-1)^2`, the reaction coefficient of the profile equation.
    pub fn reaction_coefficient(&self) -> f64 {
        2.0 * (self.p + 1.0) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// `2(p+1)/(p-1)`, the decay rate of `1 - phi` as zeta goes to minus infinity.
    pub fn left_rate(&self) -> f64 {
        2.0 * (self.p + 1.0) / (self.p - 1.0)
    }

    /// `(5-p)/(p-1)`, the algebraic correction in the right tail of `phi`.
    pub fn right_exponent(&self) -> f64 {
        (5.0 - self.p) / (self.p - 1.0)
    }

    /// `2/(p-1)`
    pub fn decay_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// `(2(p+1)/(p-1)^2)^(1/(p-1))`, shared by the regular and singular stationary states.
    pub fn amplitude(&self) -> f64 {
        (self.reaction_coefficient().ln() / (self.p - 1.0)).exp()
    }
}

/// `base^exponent` for a non-negative base. Zero maps to zero for positive exponents.
pub fn pos_pow(base: f64, exponent: f64) -> Result<f64> {
    if base < 0.0 || base.is_nan() {
        return Err(Error::NegativeBase { base, exponent });
    }
    if base == 0.0 {
        return Ok(if exponent > 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(base.powf(exponent))
}

/// The regular stationary state `v(x) = amplitude * (a + x)^(-2/(p-1))`
/// with the offset `a` fixed by the flux condition `v'(0) = -alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormStationary {
    pub p: f64,
    pub alpha: f64,
    pub amplitude: f64,
    pub offset_a: f64,
    pub decay_exponent: f64,
}

impl ClosedFormStationary {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let alpha = params.require_alpha()?;
        let p = params.p();
        let offset_a = (2f64.powf(p / (p + 1.0)) * (p + 1.0).powf(1.0 / (p + 1.0)) / (p - 1.0))
            * alpha.powf(-(p - 1.0) / (p + 1.0));
        Ok(Self {
            p,
            alpha,
            amplitude: params.amplitude(),
            offset_a,
            decay_exponent: params.decay_exponent(),
        })
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidParameter(format!("x must be >= 0, got {x}")));
        }
        Ok(self.value_unchecked(x))
    }

    /// Evaluates the closed form for any `x > -a`; used for ghost nodes and derivatives.
    pub fn value_unchecked(&self, x: f64) -> f64 {
        (self.amplitude.ln() - self.decay_exponent * (self.offset_a + x).ln()).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -self.decay_exponent * self.value_unchecked(x) / (self.offset_a + x)
    }
}

pub fn stationary_profile(params: &ModelParams, x: f64) -> Result<f64> {
    ClosedFormStationary::new(params)?.value(x)
}

/// `v_inf(x) = amplitude * x^(-2/(p-1))`, the limit of `v` as alpha grows without bound.
pub fn singular_stationary(params: &ModelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("x must be > 0, got {x}")));
    }
    Ok((params.amplitude().ln() - params.decay_exponent() * x.ln()).exp())
}

pub fn log_weight_rho(params: &ModelParams, zeta: f64) -> f64 {
    (2.0 * zeta).exp() / 4.0 - params.drift_constant() * zeta
}

/// `rho(zeta) = exp(e^(2 zeta)/4 - (p+3)/(p-1) zeta)`.
pub fn weight_rho(params: &ModelParams, zeta: f64) -> Result<f64> {
    weight_rho_capped(params, zeta, LOG_WEIGHT_CAP)
}

pub fn weight_rho_capped(params: &ModelParams, zeta: f64, log_cap: f64) -> Result<f64> {
    let log_value = log_weight_rho(params, zeta);
    if log_value > log_cap {
        return Err(Error::WeightOverflow {
            log_value,
            cap: log_cap,
        });
    }
    Ok(log_value.exp())
}

/// Location of the unique minimum of the weight, where `e^(2 zeta)/2 = (p+3)/(p-1)`.
pub fn weight_argmin(params: &ModelParams) -> f64 {
    (2.0 * params.drift_constant()).ln() / 2.0
}
