//! Discretized paths of stationary OU-type processes on a uniform grid.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::marginals::{poisson, Family, JumpLaw, MarginalSampler, MarginalSpec, Which};
use crate::rng::{substream, StreamRng};

/// Correlation function for a stationary Gaussian mother process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrFn {
    /// `(1 + tau^2)^(-alpha / 2)`.
    PowerLaw { alpha: f64 },
    /// `exp(-lambda tau)`.
    Exponential { lambda: f64 },
}

impl CorrFn {
    pub fn eval(&self, tau: f64) -> f64 {
        let t = tau.abs();
        match *self {
            CorrFn::PowerLaw { alpha } => (1.0 + t * t).powf(-0.5 * alpha),
            CorrFn::Exponential { lambda } => (-lambda * t).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CorrFn::PowerLaw { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                invalid(format!("correlation alpha > 0 required, got {alpha}"))
            }
            CorrFn::Exponential { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                invalid(format!("lambda > 0 required, got {lambda}"))
            }
            _ => Ok(()),
        }
    }
}

/// Dependence structure of the log mother process `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceSpec {
    /// OU-type process with autocorrelation `exp(-lambda tau)`.
    Exponential { lambda: f64 },
    /// Gaussian process with an arbitrary correlation function.
    GaussianGeneral { corr: CorrFn },
    /// Sum of independent OU-type processes; component `j` has log moment
    /// generating function `weights[j] * psi` and rate `rates[j]`.
    Superposition { weights: Vec<f64>, rates: Vec<f64> },
    /// Superposition with `weights[j] = j^-(3 - 2h)` and `rates[j] = lambda / j`,
    /// truncated after `components` terms. When `components` is absent the
    /// truncation keeps the discarded variance below 0.5% of the total.
    SuperpositionH { h: f64, lambda: f64, components: Option<usize> },
}

fn positive_rate(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} > 0 required, got {v}"))
    }
}

/// Number of terms of the `h`-parameterized superposition whose tail
/// variance, bounded by `int_J^inf x^-s dx`, stays below `frac` of the kept part.
pub fn h_truncation(h: f64, frac: f64) -> usize {
    let s = 3.0 - 2.0 * h;
    let mut kept = 0.0;
    let mut j = 0usize;
    loop {
        j += 1;
        kept += (j as f64).powf(-s);
        let tail = (j as f64).powf(1.0 - s) / (s - 1.0);
        if tail < frac * kept || j >= 1 << 24 {
            return j;
        }
    }
}

impl DependenceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DependenceSpec::Exponential { lambda } => positive_rate("lambda", *lambda),
            DependenceSpec::GaussianGeneral { corr } => corr.validate(),
            DependenceSpec::Superposition { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return invalid("superposition needs equally many weights and rates, at least one");
                }
                if weights.len() >= 1 << 16 {
                    return invalid("at most 65535 superposition components");
                }
                for (&d, &l) in weights.iter().zip(rates) {
                    positive_rate("superposition weight", d)?;
                    positive_rate("superposition rate", l)?;
                }
                Ok(())
            }
            DependenceSpec::SuperpositionH { h, lambda, components } => {
                if !(*h > 0.0 && *h < 1.0) {
                    return invalid(format!("0 < h < 1 required, got {h}"));
                }
                positive_rate("lambda", *lambda)?;
                match components {
                    Some(0) => invalid("components >= 1 required"),
                    Some(j) if *j >= 1 << 16 => invalid("at most 65535 superposition components"),
                    None if h_truncation(*h, 0.005) >= 1 << 16 => {
                        invalid("the 0.5% truncation rule needs more than 65535 components")
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// `(weight, rate)` pairs for superpositions.
    pub fn components(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            DependenceSpec::Superposition { weights, rates } => {
                Some(weights.iter().copied().zip(rates.iter().copied()).collect())
            }
            DependenceSpec::SuperpositionH { h, lambda, components } => {
                let j = components.unwrap_or_else(|| h_truncation(*h, 0.005));
                let s = 3.0 - 2.0 * h;
                Some((1..=j).map(|k| ((k as f64).powf(-s), lambda / k as f64)).collect())
            }
            _ => None,
        }
    }

    /// Marginal law of `X` given the base law of the components.
    pub fn effective_marginal(&self, base: &MarginalSpec) -> MarginalSpec {
        match self.components() {
            Some(c) => base.convolution_power(c.iter().map(|x| x.0).sum()),
            None => *base,
        }
    }

    /// Autocovariance of `X` at lag `tau`.
    pub fn autocovariance(&self, base: &MarginalSpec, tau: f64) -> f64 {
        let (_, var) = base.mean_var();
        let t = tau.abs();
        match self {
            DependenceSpec::Exponential { lambda } => var * (-lambda * t).exp(),
            DependenceSpec::GaussianGeneral { corr } => var * corr.eval(t),
            _ => self.components().unwrap().iter().map(|&(d, l)| d * var * (-l * t).exp()).sum(),
        }
    }
}

/// Values of a process on `n + 1` equally spaced points `0, dt, ..., n dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathGrid {
    pub values: Vec<f64>,
    pub dt: f64,
    pub seed: Option<u64>,
    pub replica_id: Option<u64>,
    pub diagnostics: PathDiagnostics,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PathDiagnostics {
    /// Stationary variance lost by replacing small BDLP jumps by their mean.
    pub small_jump_var: f64,
    /// Set when `small_jump_var` exceeds 1% of the marginal variance.
    pub truncation_warning: bool,
    /// Circulant eigenvalues in `[-1e-6, -1e-9)` clamped to zero; smaller
    /// negative rounding is clamped silently.
    pub clamped_eigenvalues: usize,
}

impl PathGrid {
    fn new(values: Vec<f64>, dt: f64) -> PathGrid {
        PathGrid { values, dt, seed: None, replica_id: None, diagnostics: PathDiagnostics::default() }
    }
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }
}

fn check_grid(n_steps: usize, dt: f64) -> Result<()> {
    if n_steps == 0 || !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("need n_steps >= 1 and dt > 0, got {n_steps}, {dt}"));
    }
    Ok(())
}

/// Exact AR(1) recursion of the stationary Gaussian OU process.
pub fn sample_gaussian_ar1<R: Rng + ?Sized>(sigma2: f64, lambda: f64, n_steps: usize, dt: f64, rng: &mut R) -> Result<PathGrid> {
    check_grid(n_steps, dt)?;
    positive_rate("lambda", lambda)?;
    if !(sigma2 >= 0.0) {
        return invalid(format!("sigma2 >= 0 required, got {sigma2}"));
    }
    let phi = (-lambda * dt).exp();
    let innov = (sigma2 * (1.0 - phi * phi)).sqrt();
    let mut v = Vec::with_capacity(n_steps + 1);
    let mut x = sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal);
    v.push(x);
    for _ in 0..n_steps {
        x = phi * x + innov * rng.sample::<f64, _>(StandardNormal);
        v.push(x);
    }
    Ok(PathGrid::new(v, dt))
}

/// Exact stationary Gaussian sampler through circulant embedding of the
/// covariance on the grid.
#[derive(Clone)]
pub struct CirculantSampler {
    n_points: usize,
    dt: f64,
    sqrt_eig: Vec<f64>,
    clamped: usize,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n_points", &self.n_points)
            .field("dt", &self.dt)
            .field("clamped", &self.clamped)
            .finish()
    }
}

const MAX_EMBEDDING_DOUBLINGS: u32 = 6;

impl CirculantSampler {
    /// The embedding starts at twice the path length and doubles, up to
    /// `MAX_EMBEDDING_DOUBLINGS` times, until no eigenvalue is below -1e-6.
    pub fn new(cov: impl Fn(f64) -> f64, n_steps: usize, dt: f64) -> Result<CirculantSampler> {
        check_grid(n_steps, dt)?;
        let mut m = 2 * n_steps;
        let mut doublings = 0;
        loop {
            let mut row: Vec<Complex<f64>> = (0..m)
                .map(|k| {
                    let lag = k.min(m - k);
                    Complex::new(cov(lag as f64 * dt), 0.0)
                })
                .collect();
            let fft = FftPlanner::new().plan_fft_forward(m);
            fft.process(&mut row);
            let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
            if min < -1e-6 {
                if doublings < MAX_EMBEDDING_DOUBLINGS {
                    m *= 2;
                    doublings += 1;
                    continue;
                }
                return Err(Error::Embedding(format!("circulant eigenvalue {min:.3e} < -1e-6 at embedding size {m}")));
            }
            let clamped = row.iter().filter(|c| c.re < -1e-9).count();
            let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
            return Ok(CirculantSampler { n_points: n_steps + 1, dt, sqrt_eig, clamped, fft });
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathGrid {
        let mut w: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut w);
        let mut p = PathGrid::new(w[..self.n_points].iter().map(|c| c.re).collect(), self.dt);
        p.diagnostics.clamped_eigenvalues = self.clamped;
        p
    }
}

/// Stationary Gaussian path with covariance `sigma2 * corr(tau)`.
pub fn sample_gaussian_circulant<R: Rng + ?Sized>(sigma2: f64, corr: &CorrFn, n_steps: usize, dt: f64, rng: &mut R) -> Result<PathGrid> {
    corr.validate()?;
    Ok(CirculantSampler::new(|t| sigma2 * corr.eval(t), n_steps, dt)?.sample(rng))
}

fn gamma_ou_into<R: Rng + ?Sized>(alpha: f64, beta: f64, lambda: f64, n_steps: usize, dt: f64, rng: &mut R, out: &mut Vec<f64>) {
    let phi = (-lambda * dt).exp();
    let jump = Exp::new(alpha).unwrap();
    let mut x = if beta > 0.0 { rand_distr::Gamma::new(beta, 1.0 / alpha).unwrap().sample(rng) } else { 0.0 };
    out.push(x);
    for _ in 0..n_steps {
        x *= phi;
        for _ in 0..poisson(beta * lambda * dt, rng) {
            let s: f64 = rng.random();
            x += (-lambda * dt * s).exp() * jump.sample(rng);
        }
        out.push(x);
    }
}

/// Exact Gamma-OU path: Poisson arrivals with exponential jumps, each
/// discounted from its arrival time to the end of the step.
pub fn sample_gamma_ou_exact<R: Rng + ?Sized>(alpha: f64, beta: f64, lambda: f64, n_steps: usize, dt: f64, rng: &mut R) -> Result<PathGrid> {
    check_grid(n_steps, dt)?;
    positive_rate("lambda", lambda)?;
    positive_rate("alpha", alpha)?;
    if !(beta >= 0.0) {
        return invalid(format!("beta >= 0 required, got {beta}"));
    }
    let mut v = Vec::with_capacity(n_steps + 1);
    gamma_ou_into(alpha, beta, lambda, n_steps, dt, rng, &mut v);
    Ok(PathGrid::new(v, dt))
}

/// Exact variance-gamma OU path as the difference of two Gamma-OU paths.
pub fn sample_vg_ou_exact<R: Rng + ?Sized>(spec: &MarginalSpec, lambda: f64, n_steps: usize, dt: f64, rng: &mut R) -> Result<PathGrid> {
    let MarginalSpec::VarianceGamma { kappa, alpha, beta, mu } = *spec else {
        return invalid("variance-gamma marginal required");
    };
    let up = sample_gamma_ou_exact(alpha - beta, kappa, lambda, n_steps, dt, rng)?;
    let down = sample_gamma_ou_exact(alpha + beta, kappa, lambda, n_steps, dt, rng)?;
    let v = up.values.iter().zip(&down.values).map(|(a, b)| mu + a - b).collect();
    Ok(PathGrid::new(v, dt))
}

/// OU-type path driven by a compound Poisson approximation of the BDLP:
/// jumps with `|u| > eps` are kept, smaller ones replaced by their mean.
#[derive(Debug)]
pub struct TruncatedOu {
    lambda: f64,
    law: JumpLaw,
    drift: f64,
    init: MarginalSampler,
    small_jump_var: f64,
    total_var: f64,
}

impl TruncatedOu {
    pub fn new(spec: &MarginalSpec, lambda: f64, eps: f64) -> Result<TruncatedOu> {
        spec.validate()?;
        positive_rate("lambda", lambda)?;
        positive_rate("eps_jump", eps)?;
        if spec.family() == Family::Gaussian {
            return Err(Error::UnsupportedParameter("the Gaussian BDLP has no jumps".into()));
        }
        let law = JumpLaw::build(spec, Which::Bdlp, eps)?;
        let (mean, var) = spec.mean_var();
        Ok(TruncatedOu {
            lambda,
            drift: mean - law.first_moment(),
            small_jump_var: 0.5 * law.small_second_moment(),
            law,
            init: MarginalSampler::new(spec)?,
            total_var: var,
        })
    }

    /// Stationary variance discarded with the small jumps.
    pub fn small_jump_var(&self) -> f64 {
        self.small_jump_var
    }

    /// Expected number of kept jumps per unit time.
    pub fn jump_rate(&self) -> f64 {
        self.lambda * self.law.mass()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n_steps: usize, dt: f64, rng: &mut R) -> Result<PathGrid> {
        check_grid(n_steps, dt)?;
        let phi = (-self.lambda * dt).exp();
        let drift = self.drift * (1.0 - phi);
        let rate = self.lambda * dt * self.law.mass();
        let mut x = self.init.sample(rng);
        let mut v = Vec::with_capacity(n_steps + 1);
        v.push(x);
        for _ in 0..n_steps {
            x = phi * x + drift;
            for _ in 0..poisson(rate, rng) {
                let s: f64 = rng.random();
                x += (-self.lambda * dt * s).exp() * self.law.sample(rng);
            }
            v.push(x);
        }
        let mut p = PathGrid::new(v, dt);
        p.diagnostics.small_jump_var = self.small_jump_var;
        p.diagnostics.truncation_warning = self.small_jump_var > 0.01 * self.total_var;
        Ok(p)
    }
}

/// Spec-level entry point for the truncated scheme.
pub fn sample_ou_bdlp_truncated<R: Rng + ?Sized>(
    spec: &MarginalSpec,
    lambda: f64,
    n_steps: usize,
    dt: f64,
    eps: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    TruncatedOu::new(spec, lambda, eps)?.sample(n_steps, dt, rng)
}

/// Sum of independent component paths, one random stream per component.
pub fn sample_superposition(
    base: &MarginalSpec,
    components: &[(f64, f64)],
    n_steps: usize,
    dt: f64,
    opts: &PathOptions,
    streams: impl Fn(u32) -> StreamRng,
) -> Result<PathGrid> {
    let dep = DependenceSpec::Superposition {
        weights: components.iter().map(|c| c.0).collect(),
        rates: components.iter().map(|c| c.1).collect(),
    };
    MotherSampler::new(base, &dep, n_steps, dt, opts)?.sample_with(streams)
}

/// Options shared by the path samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathOptions {
    /// Jump-size cutoff of the truncated BDLP scheme.
    pub eps_jump: f64,
    /// Use the truncated BDLP scheme even where an exact one exists.
    pub force_truncated: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions { eps_jump: 1e-4, force_truncated: false }
    }
}

#[derive(Debug, Clone)]
enum Scheme {
    Constant,
    Ar1 { sigma2: f64, lambda: f64 },
    Circulant(CirculantSampler),
    GammaExact { alpha: f64, beta: f64, lambda: f64 },
    VgExact { spec: MarginalSpec, lambda: f64 },
    Truncated(Arc<TruncatedOu>),
}

fn single_scheme(spec: &MarginalSpec, lambda: f64, opts: &PathOptions) -> Result<Scheme> {
    if spec.is_degenerate() {
        return Ok(Scheme::Constant);
    }
    Ok(match (*spec, opts.force_truncated) {
        (MarginalSpec::Gaussian { sigma2 }, _) => Scheme::Ar1 { sigma2, lambda },
        (MarginalSpec::Gamma { alpha, beta }, false) => Scheme::GammaExact { alpha, beta, lambda },
        (MarginalSpec::VarianceGamma { .. }, false) => Scheme::VgExact { spec: *spec, lambda },
        _ => Scheme::Truncated(Arc::new(TruncatedOu::new(spec, lambda, opts.eps_jump)?)),
    })
}

/// Prepared sampler for the log mother process `X` on a fixed grid.
#[derive(Debug)]
pub struct MotherSampler {
    n_steps: usize,
    dt: f64,
    parts: Vec<Scheme>,
}

impl MotherSampler {
    pub fn new(base: &MarginalSpec, dep: &DependenceSpec, n_steps: usize, dt: f64, opts: &PathOptions) -> Result<MotherSampler> {
        base.validate()?;
        dep.validate()?;
        check_grid(n_steps, dt)?;
        let gaussian = base.family() == Family::Gaussian;
        let parts = match dep {
            DependenceSpec::Exponential { lambda } => vec![single_scheme(base, *lambda, opts)?],
            DependenceSpec::GaussianGeneral { corr } => {
                let MarginalSpec::Gaussian { sigma2 } = *base else {
                    return invalid("a general correlation function needs the Gaussian family");
                };
                if sigma2 == 0.0 {
                    vec![Scheme::Constant]
                } else {
                    vec![Scheme::Circulant(CirculantSampler::new(|t| sigma2 * corr.eval(t), n_steps, dt)?)]
                }
            }
            DependenceSpec::Superposition { .. } | DependenceSpec::SuperpositionH { .. } => {
                let comps = dep.components().unwrap();
                if gaussian {
                    // a sum of independent Gaussian OU processes is Gaussian
                    let (_, var) = base.mean_var();
                    if var == 0.0 {
                        vec![Scheme::Constant]
                    } else {
                        let cov = |t: f64| comps.iter().map(|&(d, l)| d * var * (-l * t).exp()).sum::<f64>();
                        vec![Scheme::Circulant(CirculantSampler::new(cov, n_steps, dt)?)]
                    }
                } else {
                    comps
                        .iter()
                        .map(|&(d, l)| single_scheme(&base.convolution_power(d), l, opts))
                        .collect::<Result<Vec<_>>>()?
                }
            }
        };
        Ok(MotherSampler { n_steps, dt, parts })
    }

    /// Samplers for several step sizes. Jump tables do not depend on the
    /// step and are built once; circulant embeddings are rebuilt per step.
    pub fn for_steps(
        base: &MarginalSpec,
        dep: &DependenceSpec,
        n_steps: usize,
        dts: &[f64],
        opts: &PathOptions,
    ) -> Result<Vec<MotherSampler>> {
        let Some(&first) = dts.first() else { return Ok(Vec::new()) };
        let proto = MotherSampler::new(base, dep, n_steps, first, opts)?;
        let circulant = proto.parts.iter().any(|p| matches!(p, Scheme::Circulant(_)));
        let mut out = Vec::with_capacity(dts.len());
        for &dt in &dts[1..] {
            if circulant {
                out.push(MotherSampler::new(base, dep, n_steps, dt, opts)?);
            } else {
                check_grid(n_steps, dt)?;
                out.push(MotherSampler { n_steps, dt, parts: proto.parts.clone() });
            }
        }
        out.insert(0, proto);
        Ok(out)
    }

    pub fn n_components(&self) -> usize {
        self.parts.len()
    }

    /// Draws a path; component `j` consumes the stream `streams(j)`.
    pub fn sample_with(&self, streams: impl Fn(u32) -> StreamRng) -> Result<PathGrid> {
        let mut total = vec![0.0; self.n_steps + 1];
        let mut diag = PathDiagnostics::default();
        for (j, part) in self.parts.iter().enumerate() {
            let mut rng = streams(j as u32);
            let p = match part {
                Scheme::Constant => continue,
                Scheme::Ar1 { sigma2, lambda } => sample_gaussian_ar1(*sigma2, *lambda, self.n_steps, self.dt, &mut rng)?,
                Scheme::Circulant(c) => c.sample(&mut rng),
                Scheme::GammaExact { alpha, beta, lambda } => {
                    sample_gamma_ou_exact(*alpha, *beta, *lambda, self.n_steps, self.dt, &mut rng)?
                }
                Scheme::VgExact { spec, lambda } => sample_vg_ou_exact(spec, *lambda, self.n_steps, self.dt, &mut rng)?,
                Scheme::Truncated(t) => t.sample(self.n_steps, self.dt, &mut rng)?,
            };
            for (a, b) in total.iter_mut().zip(&p.values) {
                *a += b;
            }
            diag.small_jump_var += p.diagnostics.small_jump_var;
            diag.truncation_warning |= p.diagnostics.truncation_warning;
            diag.clamped_eigenvalues += p.diagnostics.clamped_eigenvalues;
        }
        let mut p = PathGrid::new(total, self.dt);
        p.diagnostics = diag;
        Ok(p)
    }

    /// Draws the path for a cascade position from its dedicated substreams.
    pub fn sample(&self, master: u64, replica: u64, layer: u32) -> Result<PathGrid> {
        let mut p = self.sample_with(|j| substream(master, replica, layer, j))?;
        p.seed = Some(master);
        p.replica_id = Some(replica);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_stream;

    fn lag_corr(paths: &[Vec<f64>], lag: usize, mean: f64, var: f64) -> (f64, f64) {
        let per: Vec<f64> = paths
            .iter()
            .map(|p| {
                let n = p.len() - lag;
                (0..n).map(|k| (p[k] - mean) * (p[k + lag] - mean)).sum::<f64>() / (n as f64 * var)
            })
            .collect();
        let r = per.len() as f64;
        let m = per.iter().sum::<f64>() / r;
        let sd = (per.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1.0)).sqrt();
        (m, sd / r.sqrt())
    }

    #[test]
    fn ar1_phi_and_innovation() {
        // deterministic part of the recursion: with sigma2 = 0 the path is zero
        let mut rng = aux_stream(1, 0);
        let p = sample_gaussian_ar1(0.0, 1.0, 8, 0.1, &mut rng).unwrap();
        assert!(p.values.iter().all(|&x| x == 0.0));
        assert_eq!(p.values.len(), 9);
    }

    #[test]
    fn circulant_matches_exponential_covariance() {
        let mut rng = aux_stream(2, 0);
        let n = 256;
        let dt = 1.0 / n as f64;
        let c = CirculantSampler::new(|t| (-t).exp(), n, dt).unwrap();
        let paths: Vec<Vec<f64>> = (0..600).map(|_| c.sample(&mut rng).values).collect();
        let (m, se) = lag_corr(&paths, 128, 0.0, 1.0);
        assert!((m - (-0.5f64).exp()).abs() < 4.0 * se, "{m} +- {se}");
    }

    #[test]
    fn circulant_rejects_invalid_covariance() {
        // a hard cutoff at lag dt is not positive definite on the circle
        let r = CirculantSampler::new(|t| if t < 0.15 { 1.0 } else { -0.6 }, 16, 0.1);
        assert!(matches!(r, Err(Error::Embedding(_))));
    }

    #[test]
    fn gamma_ou_mean_and_positivity() {
        let mut rng = aux_stream(3, 0);
        let mut acc = 0.0;
        let reps = 400;
        for _ in 0..reps {
            let p = sample_gamma_ou_exact(3.0, 1.0, 1.0, 64, 1.0 / 64.0, &mut rng).unwrap();
            assert!(p.values.iter().all(|&x| x > 0.0));
            acc += p.values.iter().sum::<f64>() / p.values.len() as f64;
        }
        let m = acc / reps as f64;
        assert!((m - 1.0 / 3.0).abs() < 0.05, "{m}");
    }

    #[test]
    fn truncated_scheme_reports_lost_variance() {
        let spec = MarginalSpec::TemperedStable { kappa: 0.5, delta: 1.0, gamma: 3.0 };
        let a = TruncatedOu::new(&spec, 1.0, 1e-3).unwrap().small_jump_var();
        let b = TruncatedOu::new(&spec, 1.0, 5e-4).unwrap().small_jump_var();
        assert!(b < a && a > 0.0);
        let mut rng = aux_stream(4, 0);
        let p = TruncatedOu::new(&spec, 1.0, 0.5).unwrap().sample(16, 0.1, &mut rng).unwrap();
        assert!(p.diagnostics.truncation_warning);
    }

    #[test]
    fn truncated_gamma_agrees_with_exact() {
        let spec = MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 };
        let t = TruncatedOu::new(&spec, 1.0, 1e-4).unwrap();
        let mut rng = aux_stream(5, 0);
        let n = 64;
        let paths: Vec<Vec<f64>> = (0..800).map(|_| t.sample(n, 1.0 / n as f64, &mut rng).unwrap().values).collect();
        let (m, se) = lag_corr(&paths, 32, 1.0 / 3.0, 1.0 / 9.0);
        assert!((m - (-0.5f64).exp()).abs() < 4.0 * se, "{m} +- {se}");
    }

    #[test]
    fn h_rule_truncation() {
        let j = h_truncation(0.75, 0.005);
        let s = 1.5f64;
        let kept: f64 = (1..=j).map(|k| (k as f64).powf(-s)).sum();
        assert!((j as f64).powf(1.0 - s) / (s - 1.0) < 0.005 * kept);
        let jm = j - 1;
        let kept_m: f64 = (1..=jm).map(|k| (k as f64).powf(-s)).sum();
        assert!((jm as f64).powf(1.0 - s) / (s - 1.0) >= 0.005 * kept_m);
    }

    #[test]
    fn superposition_components_and_marginal() {
        let dep = DependenceSpec::Superposition { weights: vec![1.0, 0.5], rates: vec![1.0, 0.2] };
        let base = MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 };
        assert_eq!(dep.effective_marginal(&base), MarginalSpec::Gamma { alpha: 3.0, beta: 1.5 });
        let c0 = dep.autocovariance(&base, 0.0);
        assert!((c0 - 1.5 / 9.0).abs() < 1e-15);
    }
}
