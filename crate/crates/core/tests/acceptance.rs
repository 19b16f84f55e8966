//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion does. Reference formulas are written out independently
//! of the library.

use std::f64::consts::{LN_2, PI};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mfcascade::cascade::CascadeConfig;
use mfcascade::estimate::{convergence_study, moment_scaling_estimate, partition_estimate};
use mfcascade::marginals::{bdlp_density, levy_density_x, levy_triplet_x, MarginalSampler, MarginalSpec};
use mfcascade::ou_paths::{
    h_truncation, sample_gamma_ou_exact, sample_gaussian_ar1, DependenceSpec, MotherSampler, PathOptions,
};
use mfcascade::renyi::{analytic_curve, legendre, t_analytic, ScenarioSpec};
use mfcascade::rng::substream;
use statrs::function::gamma::ln_gamma;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn line(text: &str) {
    // Written to the raw handle so the line survives test output capture.
    let _ = writeln!(std::io::stderr(), "{text}");
}

fn criterion(n: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        }
    };
    if let Some(b) = budget {
        if took > b {
            pass = false;
            detail = format!("{detail}; exceeded budget of {:.0}s", b.as_secs_f64());
        }
    }
    let tag = if pass { "PASS" } else { "FAIL" };
    line(&format!("criterion {n:>2} {tag}  {name}: {detail} [{:.2}s]", took.as_secs_f64()));
    pass
}

fn scenario(marginal: MarginalSpec, b: f64, q_star: u32) -> ScenarioSpec {
    ScenarioSpec { marginal, dependence: DependenceSpec::Exponential { lambda: 1.0 }, b, q_star }
}

fn defaults() -> Vec<MarginalSpec> {
    vec![
        MarginalSpec::Gaussian { sigma2: 0.25 },
        MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 },
        MarginalSpec::TemperedStable { kappa: 0.5, delta: 1.0, gamma: 4.0 },
        MarginalSpec::NormalTemperedStable { kappa: 0.5, gamma: 4.0, beta: 0.5, mu: 0.0, delta: 1.0 },
        MarginalSpec::VarianceGamma { kappa: 1.0, alpha: 4.0, beta: 0.5, mu: 0.0 },
        MarginalSpec::EulerGamma { gamma: -0.5, alpha: 2.0, beta: 2.0, delta: 1.0 },
        MarginalSpec::GeneralizedZ { alpha: 1.0, beta1: 0.5, beta2: 2.0, delta: 1.0, mu: 0.0 },
    ]
}

/// Ten valid parameter sets per family, each with 2 inside the moment domain.
fn sweep() -> Vec<MarginalSpec> {
    let mut v = Vec::new();
    for k in 0..10 {
        let x = k as f64;
        let kappa = 0.2 + 0.06 * x;
        v.push(MarginalSpec::Gaussian { sigma2: 0.05 + 0.1 * x });
        v.push(MarginalSpec::Gamma { alpha: 2.5 + 0.5 * x, beta: 0.5 + 0.3 * x });
        v.push(MarginalSpec::TemperedStable { kappa, delta: 0.5 + 0.2 * x, gamma: 1.5 * 4f64.powf(kappa) });
        v.push(MarginalSpec::NormalTemperedStable {
            kappa,
            gamma: 2.0 + 0.5 * x,
            beta: -0.3 + 0.1 * x,
            mu: 0.1,
            delta: 0.5 + 0.15 * x,
        });
        v.push(MarginalSpec::VarianceGamma { kappa: 0.5 + 0.2 * x, alpha: 3.0 + 0.3 * x, beta: -0.5 + 0.1 * x, mu: 0.05 * x });
        v.push(MarginalSpec::EulerGamma {
            gamma: -(0.2 + 0.05 * x),
            alpha: 1.0 + 0.2 * x,
            beta: 1.0 + 0.2 * x,
            delta: 1.0 + (k % 3) as f64,
        });
        v.push(MarginalSpec::GeneralizedZ {
            alpha: 0.5 + 0.2 * x,
            beta1: 0.3 + 0.1 * x,
            beta2: 1.0 + 0.2 * x,
            delta: 0.5 + 0.1 * x,
            mu: 0.0,
        });
    }
    v
}

fn c1_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in defaults() {
        let s = scenario(m, 2.0, 2);
        worst = worst.max(t_analytic(&s, 1.0).unwrap().abs());
        worst = worst.max((t_analytic(&s, 0.0).unwrap() + 1.0).abs());
    }
    outcome(worst <= 1e-12, format!("7 families, max |T(1)|, |T(0)+1| = {worst:.1e}"))
}

/// Printed Rényi functions, one per theorem.
mod printed {
    use super::*;

    pub fn lognormal(sigma2: f64, b: f64, q: f64) -> f64 {
        let a = sigma2 / (2.0 * b.ln());
        -a * q * q + (a + 1.0) * q - 1.0
    }

    pub fn tempered_stable(kappa: f64, delta: f64, gamma: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        let g = gamma.powf(1.0 / kappa);
        q * (1.0 + delta * gamma / lb - delta / lb * (g - 2.0).powf(kappa)) + delta / lb * (g - 2.0 * q).powf(kappa)
            - delta * gamma / lb
            - 1.0
    }

    pub fn log_inverse_gaussian(delta: f64, gamma: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        q * (1.0 + delta * (gamma - (gamma * gamma - 2.0).sqrt()) / lb) + delta / lb * (gamma * gamma - 2.0 * q).sqrt()
            - gamma * delta / lb
            - 1.0
    }

    pub fn normal_tempered_stable(kappa: f64, gamma: f64, beta: f64, delta: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        let g = gamma.powf(1.0 / kappa);
        let p = |z: f64| (beta * beta + g - (beta + z) * (beta + z)).powf(kappa);
        (1.0 - (delta * p(1.0) - gamma) / lb) * q + delta / lb * p(q) - delta * gamma / lb - 1.0
    }

    pub fn log_nig(gamma: f64, beta: f64, delta: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        let p = |z: f64| (beta * beta + gamma * gamma - (beta + z) * (beta + z)).sqrt();
        (1.0 - (delta * p(1.0) - gamma) / lb) * q + delta / lb * p(q) - delta * gamma / lb - 1.0
    }

    pub fn gamma(alpha: f64, beta: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        q * (1.0 + (1.0 / (1.0 - 1.0 / alpha).powf(beta)).ln() / lb) + beta / lb * (1.0 - q / alpha).ln() - 1.0
    }

    pub fn variance_gamma(kappa: f64, alpha: f64, beta: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        let gamma = (alpha * alpha - beta * beta).sqrt();
        q * (1.0 + 2.0 * kappa / lb * (gamma / (alpha * alpha - (beta + 1.0).powi(2)).sqrt()).ln())
            + 2.0 * kappa / lb * (alpha * alpha - (beta + q).powi(2)).sqrt().ln()
            - 2.0 * kappa / lb * gamma.ln()
            - 1.0
    }

    pub fn z(alpha: f64, beta1: f64, beta2: f64, delta: f64, b: f64, q: f64) -> f64 {
        let lb = b.ln();
        let s = alpha / (2.0 * PI);
        let ratio = ln_gamma(beta1) - ln_gamma(beta2);
        q * (1.0 + 2.0 * delta * (ln_gamma(beta1 + s) + ln_gamma(beta2 - s) - ratio) / lb)
            - 2.0 * delta / lb * (ln_gamma(beta1 + q * s) + ln_gamma(beta2 - q * s))
            + 2.0 * delta * ratio / lb
            - 1.0
    }
}

fn c2_specializations() -> Outcome {
    type Printed = Box<dyn Fn(f64) -> f64>;
    // The printed normal tempered stable forms carry gamma where delta*gamma
    // belongs and agree only at delta = 1; the printed z form has the sign of
    // log Gamma(beta2) flipped and agrees only where Gamma(beta2) = 1.
    let b = 2.0;
    let cases: Vec<(&str, MarginalSpec, u32, Printed)> = vec![
        ("lognormal", MarginalSpec::Gaussian { sigma2: 0.25 }, 2, Box::new(move |q| printed::lognormal(0.25, b, q))),
        ("lognormal", MarginalSpec::Gaussian { sigma2: 0.6 }, 3, Box::new(move |q| printed::lognormal(0.6, b, q))),
        (
            "tempered stable",
            MarginalSpec::TemperedStable { kappa: 0.3, delta: 0.7, gamma: 2.5 },
            3,
            Box::new(move |q| printed::tempered_stable(0.3, 0.7, 2.5, b, q)),
        ),
        (
            "log-inverse Gaussian",
            MarginalSpec::TemperedStable { kappa: 0.5, delta: 1.3, gamma: 3.0 },
            3,
            Box::new(move |q| printed::log_inverse_gaussian(1.3, 3.0, b, q)),
        ),
        (
            "normal tempered stable",
            MarginalSpec::NormalTemperedStable { kappa: 0.3, gamma: 2.0, beta: 0.4, mu: 0.2, delta: 1.0 },
            2,
            Box::new(move |q| printed::normal_tempered_stable(0.3, 2.0, 0.4, 1.0, b, q)),
        ),
        (
            "log-NIG",
            MarginalSpec::NormalTemperedStable { kappa: 0.5, gamma: 4.0, beta: 0.5, mu: -0.1, delta: 1.0 },
            3,
            Box::new(move |q| printed::log_nig(4.0, 0.5, 1.0, b, q)),
        ),
        ("gamma", MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 }, 2, Box::new(move |q| printed::gamma(3.0, 1.0, b, q))),
        ("gamma", MarginalSpec::Gamma { alpha: 5.5, beta: 2.5 }, 4, Box::new(move |q| printed::gamma(5.5, 2.5, b, q))),
        (
            "variance gamma",
            MarginalSpec::VarianceGamma { kappa: 0.8, alpha: 4.0, beta: -0.5, mu: 0.3 },
            3,
            Box::new(move |q| printed::variance_gamma(0.8, 4.0, -0.5, b, q)),
        ),
        (
            "z",
            MarginalSpec::GeneralizedZ { alpha: 1.0, beta1: 0.5, beta2: 2.0, delta: 0.7, mu: 0.1 },
            3,
            Box::new(move |q| printed::z(1.0, 0.5, 2.0, 0.7, b, q)),
        ),
        (
            "z",
            MarginalSpec::GeneralizedZ { alpha: 2.0, beta1: 1.5, beta2: 1.0, delta: 1.5, mu: 0.0 },
            2,
            Box::new(move |q| printed::z(2.0, 1.5, 1.0, 1.5, b, q)),
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    for (name, m, q_star, f) in &cases {
        let s = scenario(*m, b, *q_star);
        let hi = (*q_star as f64).min(m.psi_domain().hi);
        for i in 0..50 {
            let q = hi * (i as f64 + 0.5) / 50.0;
            let d = (t_analytic(&s, q).unwrap() - f(q)).abs();
            if d > worst {
                worst = d;
                where_ = format!("{name} at q = {q:.3}");
            }
        }
    }
    outcome(worst <= 1e-10, format!("{} parameter sets x 50 q, max diff {worst:.1e} ({where_})", cases.len()))
}

fn c3_bdlp_identity() -> Outcome {
    let specs = [
        MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 },
        MarginalSpec::TemperedStable { kappa: 0.5, delta: 1.0, gamma: 1.0 },
        MarginalSpec::TemperedStable { kappa: 0.3, delta: 0.7, gamma: 2.5 },
        MarginalSpec::VarianceGamma { kappa: 0.8, alpha: 4.0, beta: -0.5, mu: 0.3 },
        MarginalSpec::EulerGamma { gamma: -0.5, alpha: 2.0, beta: 2.0, delta: 1.0 },
        MarginalSpec::GeneralizedZ { alpha: 1.0, beta1: 0.5, beta2: 2.0, delta: 0.7, mu: 0.1 },
    ];
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for m in &specs {
        let support = levy_triplet_x(m).support;
        for i in 0..40 {
            let mag = 10f64.powf(-2.0 + 3.3 * i as f64 / 39.0);
            for u in [mag, -mag] {
                if !support.contains(u) {
                    continue;
                }
                let p = |x: f64| levy_density_x(m, x).unwrap();
                let h = 1e-6 * u.abs().max(1.0);
                let dp = (p(u + h) - p(u - h)) / (2.0 * h);
                let numeric = -p(u) - u * dp;
                let closed = bdlp_density(m, u).unwrap();
                worst = worst.max(((closed - numeric) / closed).abs());
                n += 1;
            }
        }
    }
    outcome(worst <= 1e-5, format!("{n} points on |u| in [1e-2, 20], max relative error {worst:.1e}"))
}

fn c4_inequalities() -> Outcome {
    let mut worst_eq309 = f64::NEG_INFINITY;
    let mut worst_kar = f64::NEG_INFINITY;
    let specs = sweep();
    for m in &specs {
        m.validate().unwrap();
        let psi = |z: f64| m.psi(z).unwrap();
        let mean = m.dpsi(0.0).unwrap();
        let base = m.mgf(2.0).unwrap() / (m.mgf(1.0).unwrap() * mean.exp());
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            let lhs = (psi(1.0 + s) - psi(1.0) - psi(s)).exp();
            worst_eq309 = worst_eq309.max(lhs - base.powf(s));
        }
        let hi = m.psi_domain().hi;
        let q_max = if hi.is_finite() { ((hi.ceil() - 1.0) as u32).min(6) } else { 6 };
        let g = |x: f64| psi(x) - x * psi(1.0);
        for q in 2..=q_max {
            for i in 1..q {
                let (i, q) = (i as f64, q as f64);
                worst_kar = worst_kar.max(g(i) + g(q - i) - g(q - 1.0) - g(1.0));
            }
        }
    }
    let pass = worst_eq309 <= 1e-12 && worst_kar <= 1e-12;
    outcome(pass, format!("{} parameter sets, max excess: eq309 {worst_eq309:.1e}, chain {worst_kar:.1e}", specs.len()))
}

/// Replica mean and standard error of the time-averaged normalized lag product.
fn autocorrelation(paths: &[Vec<f64>], mean: f64, var: f64, lag: usize) -> (f64, f64) {
    let per: Vec<f64> = paths
        .iter()
        .map(|x| {
            let n = x.len() - lag;
            (0..n).map(|k| (x[k] - mean) * (x[k + lag] - mean)).sum::<f64>() / n as f64 / var
        })
        .collect();
    mean_se(&per)
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let r = v.len() as f64;
    let m = v.iter().sum::<f64>() / r;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1.0);
    (m, (var / r).sqrt())
}

fn c5_ou_correlation() -> Outcome {
    let (n, dt, reps) = (1usize << 12, 1.0 / 256.0, 1000u64);
    let ar1: Vec<Vec<f64>> =
        (0..reps).map(|r| sample_gaussian_ar1(1.0, 1.0, n, dt, &mut substream(SEED, r, 50, 0)).unwrap().values).collect();
    let gam: Vec<Vec<f64>> = (0..reps)
        .map(|r| sample_gamma_ou_exact(3.0, 1.0, 1.0, n, dt, &mut substream(SEED, r, 51, 0)).unwrap().values)
        .collect();
    let mut worst: f64 = 0.0;
    for (paths, mean, var) in [(&ar1, 0.0, 1.0), (&gam, 1.0 / 3.0, 1.0 / 9.0)] {
        for tau in [0.25, 0.5, 1.0] {
            let lag = (tau / dt) as usize;
            let (m, se) = autocorrelation(paths, mean, var, lag);
            worst = worst.max((m - (-tau as f64).exp()).abs() / se);
        }
    }
    outcome(worst <= 4.0, format!("AR(1) and Gamma-OU at tau in {{0.25, 0.5, 1}}, worst |z| = {worst:.2}"))
}

fn c6_mother_normalization() -> Outcome {
    // Lambda(0) needs only the stationary draw; the transition is checked
    // over one short step, which keeps the truncated jump schemes cheap.
    let (draws, steps, dt) = (100_000u64, 20_000u64, 1.0 / 64.0);
    let (mut worst_start, mut worst_step): (f64, f64) = (0.0, 0.0);
    for m in defaults() {
        let s = scenario(m, 2.0, 2);
        let c = s.c_x().unwrap();
        let init = MarginalSampler::new(&m).unwrap();
        let mut rng = substream(SEED, 0, 60, 0);
        let start: Vec<f64> = (0..draws).map(|_| (init.sample(&mut rng) - c).exp()).collect();
        let (mean, se) = mean_se(&start);
        worst_start = worst_start.max((mean - 1.0).abs() / se);
        let sampler = MotherSampler::new(&m, &s.dependence, 1, dt, &PathOptions::default()).unwrap();
        let end: Vec<f64> = (0..steps).map(|r| (sampler.sample(SEED, r, 61).unwrap().values[1] - c).exp()).collect();
        let (mean, se) = mean_se(&end);
        worst_step = worst_step.max((mean - 1.0).abs() / se);
    }
    outcome(
        worst_start <= 3.0 && worst_step <= 3.0,
        format!("7 families, worst |z|: Lambda(0) {worst_start:.2} over {draws} draws, Lambda(dt) {worst_step:.2} over {steps}"),
    )
}

fn c7_flat_estimator() -> Outcome {
    let cfg = CascadeConfig {
        scenario: scenario(MarginalSpec::Gaussian { sigma2: 0.0 }, 2.0, 3),
        n_layers: 4,
        m_grid: 10,
        replicas: 4,
        master_seed: SEED,
        paths: PathOptions::default(),
    };
    let q = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
    let part = partition_estimate(&cfg, &q, (2, 8)).unwrap();
    let mom = moment_scaling_estimate(&cfg, &q, (2, 8)).unwrap();
    let mut worst: f64 = 0.0;
    for (r, target) in part.rows.iter().map(|r| (r, r.q - 1.0)).chain(mom.rows.iter().map(|r| (r, r.q))) {
        worst = worst.max((r.estimate - target).abs());
        worst = worst.max(r.fit.residuals.iter().fold(0.0, |a: f64, x| a.max(x.abs())));
    }
    outcome(worst <= 1e-12, format!("T = q - 1 and K = q on {} q values, max deviation or residual {worst:.1e}", q.len()))
}

fn cascade_config(marginal: MarginalSpec, b: f64, n_layers: u32, m_grid: u32, replicas: u32) -> CascadeConfig {
    CascadeConfig {
        scenario: scenario(marginal, b, 2),
        n_layers,
        m_grid,
        replicas,
        master_seed: SEED,
        paths: PathOptions::default(),
    }
}

fn c8_lognormal_scaling() -> Outcome {
    let cfg = cascade_config(MarginalSpec::Gaussian { sigma2: 0.25 }, 2.0, 12, 14, 256);
    let a = 0.180337;
    let rep = partition_estimate(&cfg, &[0.5, 1.0, 2.0], (4, 10)).unwrap();
    let diffs: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("q={}: {:+.4}", r.q, r.estimate - (-a * r.q * r.q + (a + 1.0) * r.q - 1.0)))
        .collect();
    let worst = rep.rows.iter().map(|r| (r.estimate - (-a * r.q * r.q + (a + 1.0) * r.q - 1.0)).abs()).fold(0.0, f64::max);
    outcome(worst <= 0.1, format!("T_hat - T: {}", diffs.join(", ")))
}

fn c9_log_gamma_scaling() -> Outcome {
    let cfg = cascade_config(MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 }, 2.0, 12, 14, 256);
    let rep = partition_estimate(&cfg, &[2.0], (4, 10)).unwrap();
    let t = rep.rows[0].estimate;
    let d = t - 0.584963;
    outcome(d.abs() <= 0.15, format!("T_hat(2) = {t:.4} (se {:.4}), diff {d:+.4}", rep.rows[0].stderr))
}

fn c10_threshold_probe() -> Outcome {
    let gamma = MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 };
    let layers: Vec<u32> = (2..=12).collect();
    let above = convergence_study(&cascade_config(gamma, 2.0, 12, 12, 4000), 2.0, &layers).unwrap();
    let below = convergence_study(&cascade_config(gamma, 1.25, 12, 10, 32000), 2.0, &layers).unwrap();
    let ends = |s: &mfcascade::estimate::ConvergenceStudy| {
        let (f, l) = (&s.rows[0], s.rows.last().unwrap());
        format!("{:.3} -> {:.3}", f.mean, l.mean)
    };
    let pass = above.flattens && !above.grows && below.grows;
    outcome(
        pass,
        format!(
            "b=2: E A^2 {} flattens={} grows={}; b=1.25: {} flattens={} grows={}",
            ends(&above),
            above.flattens,
            above.grows,
            ends(&below),
            below.flattens,
            below.grows
        ),
    )
}

fn autocovariance_z(dep: &DependenceSpec, base: MarginalSpec, mean: f64, cov: impl Fn(f64) -> f64, layer: u32) -> f64 {
    let (n, dt, reps) = (1usize << 12, 1.0 / 256.0, 1000u64);
    let sampler = MotherSampler::new(&base, dep, n, dt, &PathOptions::default()).unwrap();
    let paths: Vec<Vec<f64>> = (0..reps).map(|r| sampler.sample(SEED, r, layer).unwrap().values).collect();
    let mut worst: f64 = 0.0;
    for tau in [0.1, 0.5, 1.0] {
        let lag = (tau / dt).round() as usize;
        let (m, se) = autocorrelation(&paths, mean, 1.0, lag);
        worst = worst.max((m - cov(lag as f64 * dt)).abs() / se);
    }
    worst
}

fn c11_superposition() -> Outcome {
    let gamma = MarginalSpec::Gamma { alpha: 3.0, beta: 1.0 };
    let (w, l) = ([1.0, 0.5], [1.0, 0.2]);
    let c2 = 1.0 / 9.0;
    let two = DependenceSpec::Superposition { weights: w.to_vec(), rates: l.to_vec() };
    let z_two = autocovariance_z(&two, gamma, 1.5 / 3.0, |t| (0..2).map(|j| w[j] * c2 * (-l[j] * t).exp()).sum(), 110);

    let (h, s) = (0.75, 3.0 - 2.0 * 0.75);
    let mut kept = 0.0;
    let mut j_rule = 0usize;
    for j in 1usize.. {
        kept += (j as f64).powf(-s);
        if (j as f64).powf(1.0 - s) / (s - 1.0) < 0.005 * kept {
            j_rule = j;
            break;
        }
    }
    let j_lib = h_truncation(h, 0.005);
    let hdep = DependenceSpec::SuperpositionH { h, lambda: 1.0, components: None };
    let cov = |t: f64| (1..=j_rule).map(|j| (j as f64).powf(-s) * (-t / j as f64).exp()).sum::<f64>();
    let z_h = autocovariance_z(&hdep, MarginalSpec::Gaussian { sigma2: 1.0 }, 0.0, cov, 111);
    let pass = z_two <= 4.0 && z_h <= 4.0 && j_rule == j_lib;
    outcome(pass, format!("two-component worst |z| = {z_two:.2}; H = 0.75 with J = {j_rule} (library {j_lib}) worst |z| = {z_h:.2}"))
}

fn c12_legendre() -> Outcome {
    let s = scenario(MarginalSpec::Gaussian { sigma2: 0.25 }, 2.0, 2);
    let a = 0.25 / (2.0 * LN_2);
    let q: Vec<f64> = (0..=2000).map(|i| i as f64 / 1000.0).collect();
    let curve = analytic_curve(&s, &q).unwrap();
    let (lo, hi) = (a + 1.0 - 4.0 * a, a + 1.0);
    let alpha: Vec<f64> = (0..20).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 20.0).collect();
    let pts = legendre(&curve, &alpha).unwrap();
    let worst = pts
        .iter()
        .map(|p| (p.value - (1.0 - (p.alpha - (a + 1.0)).powi(2) / (4.0 * a))).abs())
        .fold(0.0, f64::max);
    let edge = pts.iter().any(|p| p.at_grid_edge);
    outcome(worst <= 1e-3 && !edge, format!("20 alpha in ({lo:.3}, {hi:.3}), max error {worst:.1e}"))
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "normalization anchors", Some(secs(1)), c1_normalization),
        criterion(2, "specialization equality", None, c2_specializations),
        criterion(3, "BDLP transform identity", Some(secs(10)), c3_bdlp_identity),
        criterion(4, "eq309 and Karamata chain", None, c4_inequalities),
        criterion(5, "OU correlation", Some(secs(60)), c5_ou_correlation),
        criterion(6, "mother normalization", None, c6_mother_normalization),
        criterion(7, "deterministic estimator exactness", None, c7_flat_estimator),
        criterion(8, "log-normal scaling", Some(secs(600)), c8_lognormal_scaling),
        criterion(9, "log-gamma scaling", Some(secs(600)), c9_log_gamma_scaling),
        criterion(10, "threshold sharpness probe", None, c10_threshold_probe),
        criterion(11, "superposition covariance", None, c11_superposition),
        criterion(12, "Legendre self-consistency", None, c12_legendre),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
