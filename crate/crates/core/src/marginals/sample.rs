//! Marginal samplers and inverse-CDF tables for Lévy jump sizes.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, InverseGaussian, Normal, Poisson, StandardNormal};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use super::levy::{density, jump_support, side_integral, Which};
use super::MarginalSpec;
use crate::error::{Error, Result};
use crate::quad;

/// Whether a sampler draws from the exact law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerKind {
    Exact,
    /// Small jumps are replaced by their mean; `residual_var` is the variance
    /// that this discards.
    Approximate { residual_var: f64 },
}

/// Inverse-CDF table for the jump sizes on one side of a Lévy density,
/// restricted to `|u| > eps`.
#[derive(Debug, Clone)]
pub(crate) struct JumpTable {
    sign: f64,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    /// Total mass of `|u| > eps` on this side.
    pub mass: f64,
    /// `int_{|u| > eps} u nu(du)` on this side.
    pub first_moment: f64,
    /// `int_{|u| <= eps} u^2 nu(du)` on this side.
    pub small_second_moment: f64,
}

const TABLE_NODES: usize = 1 << 12;

impl JumpTable {
    pub fn build(spec: &MarginalSpec, which: Which, sign: f64, eps: f64) -> Result<JumpTable> {
        let d = |v: f64| density(spec, which, sign * v).unwrap_or(0.0);
        // total mass beyond eps, scanning doubling cells until the tail is negligible
        let mut cells = Vec::new();
        let mut lo = eps;
        let mut total = 0.0;
        loop {
            let hi = lo * 2.0;
            let m = quad::integrate(&d, lo, hi, 0.0, 1e-12).value;
            total += m;
            cells.push((lo, hi, m));
            lo = hi;
            if (m <= 1e-17 * total && d(hi) * hi <= 1e-17 * total) || lo > 1e300 {
                break;
            }
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::UnsupportedParameter(format!("jump mass beyond {eps} is {total}")));
        }
        // upper end: the 1 - 1e-12 quantile of the jump-size law
        let target = total * (1.0 - 1e-12);
        let mut acc = 0.0;
        let mut upper = cells.last().map(|c| c.1).unwrap_or(1.0);
        for &(_, hi, m) in &cells {
            acc += m;
            if acc >= target {
                upper = hi;
                break;
            }
        }
        let ratio = (upper / eps).ln();
        let nodes: Vec<f64> = (0..=TABLE_NODES)
            .map(|i| if i == TABLE_NODES { upper } else { eps * (ratio * i as f64 / TABLE_NODES as f64).exp() })
            .collect();
        let mut cum = Vec::with_capacity(nodes.len());
        cum.push(0.0);
        let mut first = 0.0;
        for w in nodes.windows(2) {
            let [(mut m, em), (mut m1, e1)] = quad::gk15_moments(&d, w[0], w[1]);
            // cells are narrow, so one pass nearly always suffices
            if em > 1e-11 * m.abs() || e1 > 1e-11 * m1.abs() {
                m = quad::integrate(&d, w[0], w[1], 0.0, 1e-11).value;
                m1 = quad::integrate(|v| v * d(v), w[0], w[1], 0.0, 1e-11).value;
            }
            first += m1;
            let last = *cum.last().unwrap();
            cum.push(last + m);
        }
        let small = side_integral(spec, which, sign, 0.0, eps, |u| u * u).value;
        let mass = *cum.last().unwrap();
        Ok(JumpTable { sign, nodes, cum, mass, first_moment: sign * first, small_second_moment: small })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = rng.random::<f64>() * self.mass;
        let i = match self.cum.binary_search_by(|c| c.partial_cmp(&v).unwrap()) {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.nodes.len() - 2),
        };
        let (c0, c1) = (self.cum[i], self.cum[i + 1]);
        let frac = if c1 > c0 { ((v - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        let x = self.nodes[i] * (self.nodes[i + 1] / self.nodes[i]).powf(frac);
        self.sign * x
    }
}

/// Pair of tables covering both signs of a Lévy density.
#[derive(Debug, Clone)]
pub(crate) struct JumpLaw {
    pub pos: Option<JumpTable>,
    pub neg: Option<JumpTable>,
}

impl JumpLaw {
    pub fn build(spec: &MarginalSpec, which: Which, eps: f64) -> Result<JumpLaw> {
        let sup = jump_support(spec);
        let pos = if sup.has_positive() { Some(JumpTable::build(spec, which, 1.0, eps)?) } else { None };
        let neg = if sup.has_negative() { Some(JumpTable::build(spec, which, -1.0, eps)?) } else { None };
        Ok(JumpLaw { pos, neg })
    }
    pub fn mass(&self) -> f64 {
        self.pos.as_ref().map_or(0.0, |t| t.mass) + self.neg.as_ref().map_or(0.0, |t| t.mass)
    }
    pub fn first_moment(&self) -> f64 {
        self.pos.as_ref().map_or(0.0, |t| t.first_moment) + self.neg.as_ref().map_or(0.0, |t| t.first_moment)
    }
    pub fn small_second_moment(&self) -> f64 {
        self.pos.as_ref().map_or(0.0, |t| t.small_second_moment)
            + self.neg.as_ref().map_or(0.0, |t| t.small_second_moment)
    }
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pm = self.pos.as_ref().map_or(0.0, |t| t.mass);
        let total = self.mass();
        if rng.random::<f64>() * total < pm {
            self.pos.as_ref().unwrap().sample(rng)
        } else {
            self.neg.as_ref().unwrap().sample(rng)
        }
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        0
    } else {
        Poisson::new(rate).expect("finite Poisson rate").sample(rng) as u64
    }
}

/// Compound Poisson approximation of an infinitely divisible law from its
/// Lévy density, with jumps below `eps` replaced by their mean.
#[derive(Debug, Clone)]
struct CompoundPoisson {
    law: JumpLaw,
    drift: f64,
}

impl CompoundPoisson {
    fn new(spec: &MarginalSpec, rel_residual: f64) -> Result<CompoundPoisson> {
        let (mean, var) = spec.mean_var();
        // pick eps so that the discarded variance is a small fraction of the total
        let mut eps: f64 = 1e-1;
        loop {
            let small = side_integral(spec, Which::X, 1.0, 0.0, eps, |u| u * u).value
                + side_integral(spec, Which::X, -1.0, 0.0, eps, |u| u * u).value;
            if small <= rel_residual * var || eps < 1e-8 {
                break;
            }
            eps *= 0.5;
        }
        let law = JumpLaw::build(spec, Which::X, eps)?;
        Ok(CompoundPoisson { drift: mean - law.first_moment(), law })
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = poisson(self.law.mass(), rng);
        let mut x = self.drift;
        for _ in 0..n {
            x += self.law.sample(rng);
        }
        x
    }
}

#[derive(Debug)]
enum Plan {
    Constant(f64),
    Normal(Normal<f64>),
    Gamma(Gamma<f64>),
    InvGauss(InverseGaussian<f64>),
    /// Exponentially tilted positive stable law by rejection, split into
    /// `pieces` independent summands.
    TiltedStable { kappa: f64, pieces: u32, scale: f64, tilt: f64 },
    Nts { y: Box<Plan>, beta: f64, mu: f64 },
    Vg { up: Gamma<f64>, down: Gamma<f64>, mu: f64 },
    /// `shift + sum_i scale * (ln G1_i - ln G2_i)` over `copies` terms, where
    /// the second factor is absent when `g2` is `None`; a compound Poisson
    /// remainder covers fractional convolution powers.
    LogGamma { g1: Gamma<f64>, g2: Option<Gamma<f64>>, scale: f64, shift: f64, copies: u32, rest: Option<CompoundPoisson> },
}

/// Prepared sampler for one marginal law.
#[derive(Debug)]
pub struct MarginalSampler {
    spec: MarginalSpec,
    plan: Plan,
    kind: SamplerKind,
    proposals: AtomicU64,
    accepted: AtomicU64,
}

const MIN_ACCEPTANCE: f64 = 1e-3;
const APPROX_RESIDUAL: f64 = 1e-3;

fn gamma_dist(shape: f64, scale: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, scale).map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {scale}): {e}")))
}

fn tilted_stable_plan(kappa: f64, delta: f64, gamma: f64) -> Result<Plan> {
    if (kappa - 0.5).abs() < 1e-15 {
        let ig = InverseGaussian::new(delta / gamma, delta * delta)
            .map_err(|e| Error::InvalidParameter(format!("inverse Gaussian: {e}")))?;
        return Ok(Plan::InvGauss(ig));
    }
    // acceptance per piece is exp(-delta * gamma / pieces)
    let pieces = ((delta * gamma / 2.0).ceil() as u32).max(1);
    if (-delta * gamma / pieces as f64).exp() < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance { rate: (-delta * gamma / pieces as f64).exp() });
    }
    let dp = delta / pieces as f64;
    Ok(Plan::TiltedStable { kappa, pieces, scale: 2.0 * dp.powf(1.0 / kappa), tilt: 0.5 * gamma.powf(1.0 / kappa) })
}

/// Kanter's representation of the one-sided stable law with
/// Laplace transform `exp(-s^kappa)`.
fn positive_stable<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    let la = (kappa * (kappa * u).sin().ln() + (1.0 - kappa) * ((1.0 - kappa) * u).sin().ln() - u.sin().ln())
        / (1.0 - kappa);
    ((la - e.ln()) * (1.0 - kappa) / kappa).exp()
}

impl MarginalSampler {
    pub fn new(spec: &MarginalSpec) -> Result<MarginalSampler> {
        spec.validate()?;
        let mut kind = SamplerKind::Exact;
        let plan = match *spec {
            MarginalSpec::Gaussian { sigma2 } => {
                if sigma2 == 0.0 {
                    Plan::Constant(0.0)
                } else {
                    Plan::Normal(Normal::new(0.0, sigma2.sqrt()).unwrap())
                }
            }
            MarginalSpec::Gamma { alpha, beta } => Plan::Gamma(gamma_dist(beta, 1.0 / alpha)?),
            MarginalSpec::TemperedStable { kappa, delta, gamma } => tilted_stable_plan(kappa, delta, gamma)?,
            MarginalSpec::NormalTemperedStable { kappa, gamma, beta, mu, delta } => {
                Plan::Nts { y: Box::new(tilted_stable_plan(kappa, delta, gamma)?), beta, mu }
            }
            MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } => Plan::Vg {
                up: gamma_dist(kappa, 1.0 / (alpha - beta))?,
                down: gamma_dist(kappa, 1.0 / (alpha + beta))?,
                mu,
            },
            MarginalSpec::EulerGamma { gamma, alpha, beta, delta } => {
                let copies = delta.floor() as u32;
                let frac = delta - copies as f64;
                let rest = if frac > 1e-12 {
                    let cp = CompoundPoisson::new(&MarginalSpec::EulerGamma { gamma, alpha, beta, delta: frac }, APPROX_RESIDUAL)?;
                    kind = SamplerKind::Approximate { residual_var: cp.law.small_second_moment() };
                    Some(cp)
                } else {
                    None
                };
                // gamma * ln(Y) with Y ~ Gamma(beta, rate alpha) equals gamma * (ln G - ln alpha)
                Plan::LogGamma { g1: gamma_dist(beta, 1.0)?, g2: None, scale: gamma, shift: -gamma * alpha.ln() * copies as f64, copies, rest }
            }
            MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta, mu } => {
                let twice = 2.0 * delta;
                let copies = twice.floor() as u32;
                let frac = twice - copies as f64;
                let rest = if frac > 1e-12 {
                    let part = MarginalSpec::GeneralizedZ { alpha, beta1, beta2, delta: 0.5 * frac, mu: 0.0 };
                    let cp = CompoundPoisson::new(&part, APPROX_RESIDUAL)?;
                    kind = SamplerKind::Approximate { residual_var: cp.law.small_second_moment() };
                    Some(cp)
                } else {
                    None
                };
                Plan::LogGamma {
                    g1: gamma_dist(beta1, 1.0)?,
                    g2: Some(gamma_dist(beta2, 1.0)?),
                    scale: alpha / (2.0 * PI),
                    shift: mu,
                    copies,
                    rest,
                }
            }
        };
        Ok(MarginalSampler { spec: *spec, plan, kind, proposals: AtomicU64::new(0), accepted: AtomicU64::new(0) })
    }

    pub fn spec(&self) -> &MarginalSpec {
        &self.spec
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// Observed acceptance rate of the rejection step, if there is one.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let p = self.proposals.load(Ordering::Relaxed);
        if p == 0 {
            None
        } else {
            Some(self.accepted.load(Ordering::Relaxed) as f64 / p as f64)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, plan: &Plan, rng: &mut R) -> f64 {
        match plan {
            Plan::Constant(c) => *c,
            Plan::Normal(n) => n.sample(rng),
            Plan::Gamma(g) => g.sample(rng),
            Plan::InvGauss(ig) => ig.sample(rng),
            Plan::TiltedStable { kappa, pieces, scale, tilt } => {
                let mut total = 0.0;
                let mut tries = 0u64;
                for _ in 0..*pieces {
                    loop {
                        tries += 1;
                        let s = scale * positive_stable(*kappa, rng);
                        if rng.random::<f64>() < (-tilt * s).exp() {
                            total += s;
                            break;
                        }
                    }
                }
                self.proposals.fetch_add(tries, Ordering::Relaxed);
                self.accepted.fetch_add(u64::from(*pieces), Ordering::Relaxed);
                total
            }
            Plan::Nts { y, beta, mu } => {
                let y = self.draw(y, rng);
                let z: f64 = StandardNormal.sample(rng);
                mu + beta * y + y.sqrt() * z
            }
            Plan::Vg { up, down, mu } => mu + up.sample(rng) - down.sample(rng),
            Plan::LogGamma { g1, g2, scale, shift, copies, rest } => {
                let mut x = *shift;
                for _ in 0..*copies {
                    let mut l = g1.sample(rng).ln();
                    if let Some(g2) = g2 {
                        l -= g2.sample(rng).ln();
                    }
                    x += scale * l;
                }
                if let Some(cp) = rest {
                    x += cp.sample(rng);
                }
                x
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(&self.plan, rng)
    }
}

/// One draw from the marginal law. Builds a fresh sampler; prefer
/// [`MarginalSampler`] for repeated draws.
pub fn sample_marginal<R: Rng + ?Sized>(spec: &MarginalSpec, rng: &mut R) -> Result<f64> {
    Ok(MarginalSampler::new(spec)?.sample(rng))
}
