//! Self-decomposable marginal families for the log of the mother process.
//!
//! Each family is described by its log moment generating function `psi`,
//! the Lévy density of the marginal and the Lévy density of the background
//! driving process (BDLP) that makes it the stationary law of an OU process.

mod levy;
mod sample;

pub use levy::{bdlp_density, bdlp_triplet, levy_density_x, levy_triplet_x, LevyTriplet, Support};
pub use sample::{sample_marginal, MarginalSampler, SamplerKind};
pub(crate) use levy::Which;
pub(crate) use sample::{poisson, JumpLaw};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};
use std::f64::consts::PI;

use crate::error::{domain, invalid, Result};
use crate::quad;

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Gamma,
    TemperedStable,
    NormalTemperedStable,
    VarianceGamma,
    EulerGamma,
    GeneralizedZ,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Gaussian,
        Family::Gamma,
        Family::TemperedStable,
        Family::NormalTemperedStable,
        Family::VarianceGamma,
        Family::EulerGamma,
        Family::GeneralizedZ,
    ];
}

/// Marginal law of `X`. Parameter names follow the usual conventions:
/// gamma `alpha` is the rate and `beta` the shape; `EulerGamma::gamma` is
/// the scale applied to the log of a gamma variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Gaussian { sigma2: f64 },
    Gamma { alpha: f64, beta: f64 },
    TemperedStable { kappa: f64, delta: f64, gamma: f64 },
    NormalTemperedStable { kappa: f64, gamma: f64, beta: f64, mu: f64, delta: f64 },
    VarianceGamma { kappa: f64, alpha: f64, beta: f64, mu: f64 },
    EulerGamma { gamma: f64, alpha: f64, beta: f64, delta: f64 },
    GeneralizedZ { alpha: f64, beta1: f64, beta2: f64, delta: f64, mu: f64 },
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} > 0 required, got {v}"))
    }
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        invalid(format!("0 < {name} < 1 required, got {v}"))
    }
}

/// Integral of `f` over `(0, inf)` for integrands that decay exponentially.
fn half_line(f: impl Fn(f64) -> f64) -> f64 {
    let head = quad::integrate_log_split(&f, 0.0, 1.0, 1e-15, 1e-13).value;
    head + quad::integrate_to_inf(&f, 1.0, 1e-15, 1e-13).value
}

/// `-expm1(-x) = 1 - e^{-x}` without cancellation.
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

impl MarginalSpec {
    pub fn family(&self) -> Family {
        match self {
            MarginalSpec::Gaussian { .. } => Family::Gaussian,
            MarginalSpec::Gamma { .. } => Family::Gamma,
            MarginalSpec::TemperedStable { .. } => Family::TemperedStable,
            MarginalSpec::NormalTemperedStable { .. } => Family::NormalTemperedStable,
            MarginalSpec::VarianceGamma { .. } => Family::VarianceGamma,
            MarginalSpec::EulerGamma { .. } => Family::EulerGamma,
            MarginalSpec::GeneralizedZ { .. } => Family::GeneralizedZ,
        }
    }

    /// Checks every parameter constraint. `sigma2 = 0` is accepted and gives
    /// the degenerate law at zero, i.e. a constant mother process.
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginalSpec::Gaussian { sigma2 } => {
                if sigma2.is_finite() && sigma2 >= 0.0 {
                    Ok(())
                } else {
                    invalid(format!("sigma2 >= 0 required, got {sigma2}"))
                }
            }
            MarginalSpec::Gamma { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            MarginalSpec::TemperedStable { kappa, delta, gamma } => {
                unit_open("kappa", kappa)?;
                positive("delta", delta)?;
                positive("gamma", gamma)
            }
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                unit_open("kappa", kappa)?;
                positive("gamma", gamma)?;
                positive("delta", delta)?;
                finite("beta", beta)?;
                finite("mu", mu)
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => {
                positive("kappa", kappa)?;
                finite("beta", beta)?;
                finite("mu", mu)?;
                if alpha.is_finite() && alpha > beta.abs() {
                    Ok(())
                } else {
                    invalid(format!("alpha > |beta| required, got alpha={alpha}, beta={beta}"))
                }
            }
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                if !(gamma.is_finite() && gamma != 0.0) {
                    return invalid(format!("gamma != 0 required, got {gamma}"));
                }
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                positive("delta", delta)
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                positive("alpha", alpha)?;
                positive("beta1", beta1)?;
                positive("beta2", beta2)?;
                positive("delta", delta)?;
                finite("mu", mu)
            }
        }
    }

    /// Open interval on which `psi` is finite.
    pub fn psi_domain(&self) -> Interval {
        let all = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
        match *self {
            MarginalSpec::Gaussian { .. } => all,
            MarginalSpec::Gamma { alpha, .. } => Interval { lo: f64::NEG_INFINITY, hi: alpha },
            MarginalSpec::TemperedStable { kappa, gamma, .. } => {
                Interval { lo: f64::NEG_INFINITY, hi: 0.5 * gamma.powf(1.0 / kappa) }
            }
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, .. } => {
                let a = nts_alpha(kappa, gamma, beta);
                Interval { lo: -a - beta, hi: a - beta }
            }
            MarginalSpec::VarianceGamma { alpha, beta, .. } => Interval { lo: -alpha - beta, hi: alpha - beta },
            MarginalSpec::EulerGamma { gamma, beta, .. } => {
                // beta + gamma * z > 0
                if gamma < 0.0 {
                    Interval { lo: f64::NEG_INFINITY, hi: -beta / gamma }
                } else {
                    Interval { lo: -beta / gamma, hi: f64::INFINITY }
                }
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, .. } => {
                Interval { lo: -2.0 * PI * beta1 / alpha, hi: 2.0 * PI * beta2 / alpha }
            }
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        let d = self.psi_domain();
        if d.contains(z) {
            Ok(())
        } else {
            domain(format!("argument {z} outside the moment domain ({}, {}) of {:?}", d.lo, d.hi, self.family()))
        }
    }

    /// Log moment generating function `ln E exp(z X)`.
    pub fn psi(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match *self {
            MarginalSpec::Gaussian { sigma2 } => 0.5 * sigma2 * z * z,
            MarginalSpec::Gamma { alpha, beta } => -beta * (-z / alpha).ln_1p(),
            MarginalSpec::TemperedStable { kappa, delta, gamma } => {
                delta * gamma - delta * (gamma.powf(1.0 / kappa) - 2.0 * z).powf(kappa)
            }
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                let a2 = beta * beta + gamma.powf(1.0 / kappa);
                mu * z + delta * gamma - delta * (a2 - (beta + z) * (beta + z)).powf(kappa)
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => {
                let g2 = alpha * alpha - beta * beta;
                mu * z + kappa * (g2 / (alpha * alpha - (beta + z) * (beta + z))).ln()
            }
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                delta * (ln_gamma(beta + gamma * z) - ln_gamma(beta) - gamma * z * alpha.ln())
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                let s = alpha * z / (2.0 * PI);
                2.0 * delta * (ln_gamma(beta1 + s) + ln_gamma(beta2 - s) - ln_gamma(beta1) - ln_gamma(beta2)) + mu * z
            }
        })
    }

    /// Derivative of `psi`.
    pub fn dpsi(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match *self {
            MarginalSpec::Gaussian { sigma2 } => sigma2 * z,
            MarginalSpec::Gamma { alpha, beta } => beta / (alpha - z),
            MarginalSpec::TemperedStable { kappa, delta, gamma } => {
                2.0 * delta * kappa * (gamma.powf(1.0 / kappa) - 2.0 * z).powf(kappa - 1.0)
            }
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                let a2 = beta * beta + gamma.powf(1.0 / kappa);
                mu + 2.0 * delta * kappa * (beta + z) * (a2 - (beta + z) * (beta + z)).powf(kappa - 1.0)
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => {
                mu + 2.0 * kappa * (beta + z) / (alpha * alpha - (beta + z) * (beta + z))
            }
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                delta * gamma * (digamma(beta + gamma * z) - alpha.ln())
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                let s = alpha * z / (2.0 * PI);
                2.0 * delta * alpha / (2.0 * PI) * (digamma(beta1 + s) - digamma(beta2 - s)) + mu
            }
        })
    }

    /// `E exp(z X)`.
    pub fn mgf(&self, z: f64) -> Result<f64> {
        Ok(self.psi(z)?.exp())
    }

    /// `c_X = psi(1)`, the normalizing constant of the mother process.
    pub fn c_x(&self) -> Result<f64> {
        self.psi(1.0)
    }

    /// Mean and variance of `X`.
    pub fn mean_var(&self) -> (f64, f64) {
        match *self {
            MarginalSpec::Gaussian { sigma2 } => (0.0, sigma2),
            MarginalSpec::Gamma { alpha, beta } => (beta / alpha, beta / (alpha * alpha)),
            MarginalSpec::TemperedStable { kappa, delta, gamma } => (
                2.0 * kappa * delta * gamma.powf((kappa - 1.0) / kappa),
                4.0 * kappa * (1.0 - kappa) * delta * gamma.powf((kappa - 2.0) / kappa),
            ),
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                let ey = 2.0 * kappa * delta * gamma.powf((kappa - 1.0) / kappa);
                let vy = 4.0 * kappa * (1.0 - kappa) * delta * gamma.powf((kappa - 2.0) / kappa);
                (mu + beta * ey, ey + beta * beta * vy)
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => {
                let g2 = alpha * alpha - beta * beta;
                (mu + 2.0 * beta * kappa / g2, 2.0 * kappa / g2 * (1.0 + 2.0 * beta * beta / g2))
            }
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                // digamma and trigamma through their integral representations
                let dg = half_line(|x| {
                    if x == 0.0 {
                        return beta - 1.5;
                    }
                    (-x).exp() / x - (-beta * x).exp() / one_minus_exp_neg(x)
                });
                let tg = half_line(|x| {
                    if x == 0.0 {
                        return 1.0;
                    }
                    x * (-beta * x).exp() / one_minus_exp_neg(x)
                });
                (delta * gamma * (dg - alpha.ln()), delta * gamma * gamma * tg)
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                let m = half_line(|x| {
                    if x == 0.0 {
                        return beta1 - beta2;
                    }
                    ((-beta2 * x).exp() - (-beta1 * x).exp()) / one_minus_exp_neg(x)
                });
                let v = half_line(|x| {
                    if x == 0.0 {
                        return 2.0;
                    }
                    x * ((-beta2 * x).exp() + (-beta1 * x).exp()) / one_minus_exp_neg(x)
                });
                (alpha * delta / PI * m + mu, 2.0 * alpha * alpha * delta / (4.0 * PI * PI) * v)
            }
        }
    }

    /// Law whose log moment generating function is `d * psi`.
    pub fn convolution_power(&self, d: f64) -> MarginalSpec {
        match *self {
            MarginalSpec::Gaussian { sigma2 } => MarginalSpec::Gaussian { sigma2: sigma2 * d },
            MarginalSpec::Gamma { alpha, beta } => MarginalSpec::Gamma { alpha, beta: beta * d },
            MarginalSpec::TemperedStable { kappa, delta, gamma } => {
                MarginalSpec::TemperedStable { kappa, delta: delta * d, gamma }
            }
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu: mu * d, delta: delta * d }
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => {
                MarginalSpec::VarianceGamma { kappa: kappa * d, alpha, beta, mu: mu * d }
            }
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                MarginalSpec::EulerGamma { gamma, alpha, beta, delta: delta * d }
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta: delta * d, mu: mu * d }
            }
        }
    }

    /// True when the law is a point mass.
    pub fn is_degenerate(&self) -> bool {
        matches!(*self, MarginalSpec::Gaussian { sigma2 } if sigma2 == 0.0)
    }
}

pub(crate) fn nts_alpha(kappa: f64, gamma: f64, beta: f64) -> f64 {
    (beta * beta + gamma.powf(1.0 / kappa)).sqrt()
}
