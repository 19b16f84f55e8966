use statrs::function::gamma::gamma as gamma_fn;
use std::f64::consts::PI;

use super::{nts_alpha, one_minus_exp_neg, MarginalSpec};
use crate::error::{Error, Result};
use crate::quad::{self, bessel_k_scaled, Quad};

/// Where a Lévy density lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// No jumps at all.
    Empty,
    Positive,
    Negative,
    Both,
}

impl Support {
    pub fn contains(&self, u: f64) -> bool {
        match self {
            Support::Empty => false,
            Support::Positive => u > 0.0,
            Support::Negative => u < 0.0,
            Support::Both => u != 0.0,
        }
    }
    pub fn has_positive(&self) -> bool {
        matches!(self, Support::Positive | Support::Both)
    }
    pub fn has_negative(&self) -> bool {
        matches!(self, Support::Negative | Support::Both)
    }
}

pub(crate) fn jump_support(spec: &MarginalSpec) -> Support {
    match *spec {
        MarginalSpec::Gaussian { .. } => Support::Empty,
        MarginalSpec::Gamma { .. } | MarginalSpec::TemperedStable { .. } => Support::Positive,
        MarginalSpec::EulerGamma { gamma, .. } => {
            if gamma < 0.0 {
                Support::Positive
            } else {
                Support::Negative
            }
        }
        _ => Support::Both,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Which {
    X,
    Bdlp,
}

fn ts_const(kappa: f64, delta: f64) -> f64 {
    2f64.powf(kappa) * delta * kappa / gamma_fn(1.0 - kappa)
}

/// Side density of a scaled log-gamma law, `mult * e^{-beta w} / (v (1 - e^{-w}))`
/// with `w = v / s`, and its BDLP counterpart `-(d/dv)(v * density)`.
fn log_gamma_side(which: Which, mult: f64, s: f64, beta: f64, v: f64) -> f64 {
    let w = v / s;
    let e = (-w).exp();
    let om = one_minus_exp_neg(w);
    match which {
        Which::X => mult * (-beta * w).exp() / (v * om),
        Which::Bdlp => mult / s * (-beta * w).exp() * (beta * om + e) / (om * om),
    }
}

pub(crate) fn density(spec: &MarginalSpec, which: Which, u: f64) -> Result<f64> {
    let sup = jump_support(spec);
    if !sup.contains(u) {
        return if sup == Support::Empty && u != 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Support(format!("{u} is outside the jump support {sup:?}")))
        };
    }
    let v = u.abs();
    Ok(match (*spec, which) {
        (MarginalSpec::Gaussian { .. }, _) => 0.0,
        (MarginalSpec::Gamma { alpha, beta }, Which::X) => beta * (-alpha * u).exp() / u,
        (MarginalSpec::Gamma { alpha, beta }, Which::Bdlp) => alpha * beta * (-alpha * u).exp(),
        (MarginalSpec::TemperedStable { kappa, delta, gamma }, w) => {
            let c = 0.5 * gamma.powf(1.0 / kappa);
            let a = ts_const(kappa, delta);
            match w {
                Which::X => a * u.powf(-1.0 - kappa) * (-c * u).exp(),
                Which::Bdlp => a * (kappa / u + c) * u.powf(-kappa) * (-c * u).exp(),
            }
        }
        (MarginalSpec::NormalTemperedStable { kappa, gamma, beta, delta, .. }, w) => {
            let al = nts_alpha(kappa, gamma, beta);
            let nu = kappa + 0.5;
            let c = delta / (2.0 * PI).sqrt() * al.powf(nu) * kappa * 2f64.powf(kappa + 1.0) / gamma_fn(1.0 - kappa);
            let z = al * v;
            // exponent of the Bessel scaling folded into the tilt
            let tilt = (beta * u - z).exp() * v.powf(-nu);
            match w {
                Which::X => c * tilt * bessel_k_scaled(nu, z),
                Which::Bdlp => {
                    let k = bessel_k_scaled(nu, z);
                    let km = bessel_k_scaled(nu - 1.0, z);
                    c * tilt * (2.0 * kappa * k + z * km - beta * u * k)
                }
            }
        }
        (MarginalSpec::VarianceGamma { kappa, alpha, beta, .. }, Which::X) => kappa / v * (beta * u - alpha * v).exp(),
        (MarginalSpec::VarianceGamma { kappa, alpha, beta, .. }, Which::Bdlp) => {
            if u > 0.0 {
                kappa * (alpha - beta) * (-(alpha - beta) * u).exp()
            } else {
                kappa * (alpha + beta) * ((alpha + beta) * u).exp()
            }
        }
        (MarginalSpec::EulerGamma { gamma, beta, delta, .. }, w) => log_gamma_side(w, delta, gamma.abs(), beta, v),
        (MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, .. }, w) => {
            let s = alpha / (2.0 * PI);
            let b = if u > 0.0 { beta2 } else { beta1 };
            log_gamma_side(w, 2.0 * delta, s, b, v)
        }
    })
}

/// Lévy density of the marginal law at `u != 0`. Zero for the Gaussian family.
pub fn levy_density_x(spec: &MarginalSpec, u: f64) -> Result<f64> {
    density(spec, Which::X, u)
}

/// Lévy density of the BDLP at `u`, without the OU rate factor.
pub fn bdlp_density(spec: &MarginalSpec, u: f64) -> Result<f64> {
    density(spec, Which::Bdlp, u)
}

/// Integral of `g(u) * density(u)` over one side, `sign = +1` or `-1`,
/// restricted to `|u|` in `(lo, hi)`.
pub(crate) fn side_integral(
    spec: &MarginalSpec,
    which: Which,
    sign: f64,
    lo: f64,
    hi: f64,
    g: impl Fn(f64) -> f64,
) -> Quad {
    let f = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let u = sign * v;
        let d = density(spec, which, u).unwrap_or(0.0);
        if d == 0.0 {
            0.0
        } else {
            g(u) * d
        }
    };
    let tol = 1e-14;
    let split = 1.0f64.max(lo).min(hi);
    let mut out = Quad { value: 0.0, abs_err: 0.0, converged: true };
    if lo < split {
        let q = if lo == 0.0 {
            quad::integrate_log_split(&f, 0.0, split, tol, 1e-12)
        } else {
            quad::integrate(&f, lo, split, tol, 1e-12)
        };
        out.value += q.value;
        out.abs_err += q.abs_err;
        out.converged &= q.converged;
    }
    if split < hi {
        let q = if hi.is_finite() {
            quad::integrate(&f, split, hi, tol, 1e-12)
        } else {
            quad::integrate_to_inf(&f, split, tol, 1e-12)
        };
        out.value += q.value;
        out.abs_err += q.abs_err;
        out.converged &= q.converged;
    }
    out
}

fn both_sides(spec: &MarginalSpec, which: Which, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> Quad {
    let sup = jump_support(spec);
    let mut out = Quad { value: 0.0, abs_err: 0.0, converged: true };
    for (sign, present) in [(1.0, sup.has_positive()), (-1.0, sup.has_negative())] {
        if present {
            let q = side_integral(spec, which, sign, lo, hi, &g);
            out.value += q.value;
            out.abs_err += q.abs_err;
            out.converged &= q.converged;
        }
    }
    out
}

/// Lévy-Khintchine triplet with truncation function `1{|u| <= 1}`.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    pub drift: f64,
    pub gaussian_var: f64,
    pub support: Support,
    spec: MarginalSpec,
    which: Which,
}

impl LevyTriplet {
    pub fn density(&self, u: f64) -> Result<f64> {
        density(&self.spec, self.which, u)
    }

    /// `int min(1, u^2) nu(du)`; finite for every valid spec.
    pub fn integrability(&self) -> Quad {
        both_sides(&self.spec, self.which, 0.0, f64::INFINITY, |u| (u * u).min(1.0))
    }

    /// `int g(u) nu(du)` over `lo < |u| < hi`.
    pub fn integral(&self, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> Quad {
        both_sides(&self.spec, self.which, lo, hi, g)
    }

    /// Log moment generating function rebuilt from the triplet.
    pub fn cumulant(&self, z: f64) -> f64 {
        let jumps = self.integral(0.0, f64::INFINITY, |u| {
            let small = if u.abs() <= 1.0 { z * u } else { 0.0 };
            (z * u).exp_m1() - small
        });
        self.drift * z + 0.5 * self.gaussian_var * z * z + jumps.value
    }
}

fn triplet(spec: &MarginalSpec, which: Which) -> LevyTriplet {
    let (mean, _) = spec.mean_var();
    let support = jump_support(spec);
    let big = both_sides(spec, which, 1.0, f64::INFINITY, |u| u).value;
    let gaussian_var = match (*spec, which) {
        (MarginalSpec::Gaussian { sigma2 }, Which::X) => sigma2,
        (MarginalSpec::Gaussian { sigma2 }, Which::Bdlp) => 2.0 * sigma2,
        _ => 0.0,
    };
    // E Z(1) = psi'(0) = E X for the BDLP
    LevyTriplet { drift: mean - big, gaussian_var, support, spec: *spec, which }
}

/// Triplet of the marginal law.
pub fn levy_triplet_x(spec: &MarginalSpec) -> LevyTriplet {
    triplet(spec, Which::X)
}

/// Triplet of the BDLP at unit time, without the OU rate factor.
pub fn bdlp_triplet(spec: &MarginalSpec) -> LevyTriplet {
    triplet(spec, Which::Bdlp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump_examples() -> Vec<MarginalSpec> {
        vec![
            MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 },
            MarginalSpec::TemperedStable { kappa: 0.5, delta: 1.0, gamma: 3.0 },
            MarginalSpec::TemperedStable { kappa: 0.3, delta: 0.7, gamma: 2.0 },
            MarginalSpec::NormalTemperedStable { kappa: 0.5, gamma: 4.0, beta: 0.5, mu: -0.2, delta: 1.0 },
            MarginalSpec::VarianceGamma { kappa: 1.0, alpha: 3.0, beta: 0.5, mu: 0.1 },
            MarginalSpec::EulerGamma { gamma: -0.5, alpha: 1.0, beta: 2.0, delta: 1.0 },
            MarginalSpec::EulerGamma { gamma: 0.8, alpha: 1.5, beta: 1.0, delta: 2.0 },
            MarginalSpec::GeneralizedZ { alpha: 1.0, beta1: 1.2, beta2: 1.5, delta: 0.5, mu: 0.3 },
        ]
    }

    #[test]
    fn triplet_reproduces_psi() {
        for s in jump_examples() {
            let t = levy_triplet_x(&s);
            for &z in &[-0.8, 0.5, 1.0] {
                if !s.psi_domain().contains(z) {
                    continue;
                }
                let got = t.cumulant(z);
                let want = s.psi(z).unwrap();
                assert!((got - want).abs() < 1e-8 * (1.0 + want.abs()), "{s:?} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn bdlp_cumulant_is_z_times_dpsi() {
        for s in jump_examples() {
            let t = bdlp_triplet(&s);
            for &z in &[-0.4, 0.7] {
                if !s.psi_domain().contains(z) {
                    continue;
                }
                let got = t.cumulant(z);
                let want = z * s.dpsi(z).unwrap();
                assert!((got - want).abs() < 1e-7 * (1.0 + want.abs()), "{s:?} z={z}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn densities_positive_and_integrable() {
        for s in jump_examples() {
            let t = levy_triplet_x(&s);
            let q = t.integrability();
            assert!(q.converged && q.value.is_finite() && q.value > 0.0, "{s:?}");
            for &u in &[-3.0, -0.2, -1e-3, 1e-3, 0.2, 3.0] {
                if t.support.contains(u) {
                    assert!(levy_density_x(&s, u).unwrap() > 0.0);
                    assert!(bdlp_density(&s, u).unwrap() > 0.0, "{s:?} at {u}");
                } else {
                    assert!(matches!(levy_density_x(&s, u), Err(Error::Support(_))));
                }
            }
        }
    }

    #[test]
    fn gaussian_has_no_jumps() {
        let s = MarginalSpec::Gaussian { sigma2: 1.0 };
        assert_eq!(levy_density_x(&s, 0.5).unwrap(), 0.0);
        let t = levy_triplet_x(&s);
        assert_eq!(t.gaussian_var, 1.0);
        assert_eq!(t.drift, 0.0);
    }

    #[test]
    fn gamma_density_frozen() {
        let s = MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 };
        assert!((levy_density_x(&s, 0.5).unwrap() - 2.0 * (-1.5f64).exp()).abs() < 1e-15);
        assert!((bdlp_density(&s, 0.5).unwrap() - 3.0 * (-1.5f64).exp()).abs() < 1e-15);
    }
}
