//! Scaling-exponent estimators on simulated cascades.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{dyadic_measure, Cascade, CascadeConfig};
use crate::error::{invalid, Error, Result};
use crate::renyi::{k_analytic, t_analytic};
use crate::rng::{substream, BOOTSTRAP_LAYER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `T(q)` from the decay of dyadic partition sums `sum_k mu(I_k)^q`.
    Partition,
    /// `K(q)` from the scaling of `E[(A(t + delta) - A(t))^q]` in `delta`.
    MomentScaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateOptions {
    /// Bootstrap resamples of the replicas for standard errors.
    pub bootstrap: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { bootstrap: 200 }
    }
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LineFit { slope, intercept, r2, residuals }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub q: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Closed-form value when `q` is admissible for the scenario.
    pub analytic: Option<f64>,
    pub discrepancy: Option<f64>,
    pub fit: LineFit,
}

impl ScalingRow {
    /// Nominal 95% interval from the bootstrap standard error.
    pub fn interval(&self) -> (f64, f64) {
        (self.estimate - 1.96 * self.stderr, self.estimate + 1.96 * self.stderr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub method: Method,
    /// Dyadic levels `n`, boxes of width `2^-n`.
    pub levels: Vec<u32>,
    pub replicas: u32,
    pub bootstrap: usize,
    pub rows: Vec<ScalingRow>,
    pub warnings: Vec<String>,
}

/// Per-replica partition sums `sum_k mu(I_k)^q`, indexed `[level][q]`.
fn partition_sums(cascade: &Cascade, levels: &[u32], q: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let r = cascade.config().replicas as u64;
    (0..r)
        .into_par_iter()
        .map(|rep| {
            let a = cascade.cumulative_path(rep)?;
            levels
                .iter()
                .map(|&n| {
                    let m = dyadic_measure(&a, n)?;
                    Ok(q.iter().map(|&qq| m.iter().map(|x| x.powf(qq)).sum()).collect())
                })
                .collect()
        })
        .collect()
}

fn check_levels(config: &CascadeConfig, range: (u32, u32)) -> Result<Vec<u32>> {
    let (lo, hi) = range;
    if lo >= hi || hi > config.m_grid {
        return invalid(format!("need n_min < n_max <= m_grid = {}, got ({lo}, {hi})", config.m_grid));
    }
    Ok((lo..=hi).collect())
}

fn fit_all(
    sums: &[Vec<Vec<f64>>],
    levels: &[u32],
    q: &[f64],
    weights: &[usize],
    method: Method,
) -> Result<Vec<LineFit>> {
    let total: f64 = weights.iter().sum::<usize>() as f64;
    (0..q.len())
        .map(|j| {
            let mut xs = Vec::with_capacity(levels.len());
            let mut ys = Vec::with_capacity(levels.len());
            for (l, &n) in levels.iter().enumerate() {
                let mean: f64 = sums.iter().zip(weights).map(|(s, &w)| w as f64 * s[l][j]).sum::<f64>() / total;
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::DegenerateData(format!("mean partition sum {mean} at level {n}, q = {}", q[j])));
                }
                match method {
                    Method::Partition => {
                        xs.push(n as f64);
                        ys.push(mean.log2());
                    }
                    Method::MomentScaling => {
                        // average over the 2^n windows of width 2^-n
                        xs.push(-(n as f64));
                        ys.push(mean.log2() - n as f64);
                    }
                }
            }
            Ok(ols(&xs, &ys))
        })
        .collect()
}

fn estimate_from_fit(method: Method, fit: &LineFit) -> f64 {
    match method {
        Method::Partition => -fit.slope,
        Method::MomentScaling => fit.slope,
    }
}

fn run(config: &CascadeConfig, q: &[f64], range: (u32, u32), opts: &EstimateOptions, method: Method) -> Result<ScalingReport> {
    if q.is_empty() || q.iter().any(|x| !x.is_finite()) {
        return invalid("q grid must be nonempty and finite");
    }
    let levels = check_levels(config, range)?;
    let cascade = Cascade::new(config)?;
    let sums = partition_sums(&cascade, &levels, q)?;
    let r = sums.len();
    let ones = vec![1usize; r];
    let fits = fit_all(&sums, &levels, q, &ones, method)?;

    // bootstrap over replicas with multiplicity weights
    let mut rng = substream(config.master_seed, 0, BOOTSTRAP_LAYER, 0);
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.bootstrap); q.len()];
    for _ in 0..opts.bootstrap {
        let mut w = vec![0usize; r];
        for _ in 0..r {
            w[rng.random_range(0..r)] += 1;
        }
        if let Ok(f) = fit_all(&sums, &levels, q, &w, method) {
            for (j, fit) in f.iter().enumerate() {
                boot[j].push(estimate_from_fit(method, fit));
            }
        }
    }

    let rows = q
        .iter()
        .zip(fits)
        .zip(&boot)
        .map(|((&qq, fit), b)| {
            let est = estimate_from_fit(method, &fit);
            let stderr = if b.len() > 1 {
                let m = b.iter().sum::<f64>() / b.len() as f64;
                (b.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b.len() - 1) as f64).sqrt()
            } else {
                f64::NAN
            };
            let analytic = match method {
                Method::Partition => t_analytic(&config.scenario, qq).ok(),
                Method::MomentScaling => k_analytic(&config.scenario, qq).ok(),
            };
            ScalingRow { q: qq, estimate: est, stderr, analytic, discrepancy: analytic.map(|a| est - a), fit }
        })
        .collect();
    let mut warnings = config.warnings();
    let finest = config.n_layers as f64 * config.scenario.b.log2();
    if range.1 as f64 > finest + 1e-9 {
        warnings.push(format!(
            "box level {} is finer than the finest layer (2^-{:.2}); the measure is smooth there",
            range.1, finest
        ));
    }
    Ok(ScalingReport {
        method,
        levels,
        replicas: config.replicas,
        bootstrap: opts.bootstrap,
        rows,
        warnings,
    })
}

/// Partition-function estimate of `T(q)` over dyadic levels `n_box_range`.
pub fn partition_estimate(config: &CascadeConfig, q: &[f64], n_box_range: (u32, u32)) -> Result<ScalingReport> {
    partition_estimate_with(config, q, n_box_range, &EstimateOptions::default())
}

pub fn partition_estimate_with(
    config: &CascadeConfig,
    q: &[f64],
    n_box_range: (u32, u32),
    opts: &EstimateOptions,
) -> Result<ScalingReport> {
    run(config, q, n_box_range, opts, Method::Partition)
}

/// Moment-scaling estimate of `K(q)` from increments over `delta = 2^-n`,
/// `n` in `delta_range`; `T = K - 1`.
pub fn moment_scaling_estimate(config: &CascadeConfig, q: &[f64], delta_range: (u32, u32)) -> Result<ScalingReport> {
    moment_scaling_estimate_with(config, q, delta_range, &EstimateOptions::default())
}

pub fn moment_scaling_estimate_with(
    config: &CascadeConfig,
    q: &[f64],
    delta_range: (u32, u32),
    opts: &EstimateOptions,
) -> Result<ScalingReport> {
    run(config, q, delta_range, opts, Method::MomentScaling)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_layers: u32,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub q: f64,
    pub rows: Vec<ConvergenceRow>,
    /// The mean changes by at most 3 paired standard errors over the second
    /// half of the layer counts.
    pub flattens: bool,
    /// Means never decrease and the last exceeds the first by more than 5
    /// paired standard errors.
    pub grows: bool,
}

/// `E A_n(1)^q` for each `n` in `layers`, paired across `n` by reusing the
/// layer draws of each replica.
pub fn convergence_study(config: &CascadeConfig, q: f64, layers: &[u32]) -> Result<ConvergenceStudy> {
    if layers.len() < 2 {
        return invalid("at least two layer counts required");
    }
    if layers.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("layer counts must increase");
    }
    let mut cfg = config.clone();
    cfg.n_layers = *layers.last().unwrap();
    let cascade = Cascade::new(&cfg)?;
    let per: Vec<Vec<f64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| Ok(cascade.total_masses(rep, layers)?.into_iter().map(|a| a.powf(q)).collect()))
        .collect::<Result<_>>()?;
    let r = per.len() as f64;
    let rows: Vec<ConvergenceRow> = layers
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let m = per.iter().map(|v| v[k]).sum::<f64>() / r;
            let var = per.iter().map(|v| (v[k] - m) * (v[k] - m)).sum::<f64>() / (r - 1.0).max(1.0);
            ConvergenceRow { n_layers: n, mean: m, stderr: (var / r).sqrt() }
        })
        .collect();
    // Rows share replicas, so differences are judged by their paired standard error.
    let diff = |i: usize, j: usize| {
        let d: Vec<f64> = per.iter().map(|v| v[j] - v[i]).collect();
        let m = d.iter().sum::<f64>() / r;
        let var = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1.0).max(1.0);
        (m, (var / r).sqrt())
    };
    let last = rows.len() - 1;
    let (late, late_se) = diff(last / 2, last);
    let flattens = late.abs() <= 3.0 * late_se;
    let (total, total_se) = diff(0, last);
    let grows = rows.windows(2).all(|w| w[1].mean >= w[0].mean) && total > 5.0 * total_se;
    Ok(ConvergenceStudy { q, rows, flattens, grows })
}
