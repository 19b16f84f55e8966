//! Finite products of rescaled mother processes and their integrals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ou_paths::{MotherSampler, PathGrid, PathOptions};
use crate::renyi::ScenarioSpec;
use crate::rng::{StreamRng, AUX_LAYER, BOOTSTRAP_LAYER};

/// Simulation settings: layers `0..=n_layers`, `2^m_grid` steps on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    pub scenario: ScenarioSpec,
    pub n_layers: u32,
    pub m_grid: u32,
    pub replicas: u32,
    pub master_seed: u64,
    #[serde(default)]
    pub paths: PathOptions,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.m_grid == 0 || self.m_grid > 26 {
            return invalid(format!("1 <= m_grid <= 26 required, got {}", self.m_grid));
        }
        if self.n_layers >= AUX_LAYER.min(BOOTSTRAP_LAYER) {
            return invalid("n_layers too large");
        }
        if self.replicas == 0 {
            return invalid("replicas >= 1 required");
        }
        if !(self.paths.eps_jump > 0.0) {
            return invalid("eps_jump > 0 required");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        1usize << self.m_grid
    }

    /// Grid spacing of the driving process of layer `i`.
    pub fn layer_dt(&self, i: u32) -> f64 {
        self.scenario.b.powi(i as i32) / self.n_steps() as f64
    }

    /// Resolution warnings; empty when the grid resolves every layer.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let finest = self.scenario.b.powi(self.n_layers as i32);
        if (self.n_steps() as f64) < finest {
            w.push(format!(
                "grid of 2^{} points is coarser than the finest layer scale b^-{} = {:.3e}",
                self.m_grid,
                self.n_layers,
                1.0 / finest
            ));
        }
        if let Some(rate) = self.fastest_rate() {
            let white: Vec<u32> = (0..=self.n_layers).filter(|&i| rate * self.layer_dt(i) > 5.0).collect();
            if white.len() == (self.n_layers + 1) as usize {
                w.push("every layer is decorrelated between grid points (white noise)".to_string());
            } else if !white.is_empty() {
                w.push(format!("layers {:?} are decorrelated between grid points", white));
            }
        }
        w
    }

    fn fastest_rate(&self) -> Option<f64> {
        use crate::ou_paths::{CorrFn, DependenceSpec};
        match &self.scenario.dependence {
            DependenceSpec::Exponential { lambda } => Some(*lambda),
            DependenceSpec::GaussianGeneral { corr: CorrFn::Exponential { lambda } } => Some(*lambda),
            DependenceSpec::GaussianGeneral { .. } => None,
            dep => dep.components().map(|c| c.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max)),
        }
    }
}

/// Prepared samplers for every layer of a cascade.
#[derive(Debug)]
pub struct Cascade {
    config: CascadeConfig,
    layers: Vec<MotherSampler>,
    c_x: f64,
}

/// `Lambda(t) = exp(X(t) - c_X)` for one layer, sampled at the points
/// `k b^i 2^-m`, i.e. on the unit grid after the time change `t -> t b^i`.
fn exponentiate(mut p: PathGrid, c_x: f64) -> PathGrid {
    for v in p.values.iter_mut() {
        *v = (*v - c_x).exp();
    }
    p
}

impl Cascade {
    pub fn new(config: &CascadeConfig) -> Result<Cascade> {
        config.validate()?;
        let s = &config.scenario;
        let dts: Vec<f64> = (0..=config.n_layers).map(|i| config.layer_dt(i)).collect();
        let layers = MotherSampler::for_steps(&s.marginal, &s.dependence, config.n_steps(), &dts, &config.paths)?;
        Ok(Cascade { config: config.clone(), layers, c_x: s.c_x()? })
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    /// Log mother process of layer `i` for a replica, on the unit grid.
    pub fn log_mother(&self, i: u32, replica: u64) -> Result<PathGrid> {
        let mut p = self.layers[i as usize].sample(self.config.master_seed, replica, i)?;
        p.dt = 1.0 / self.config.n_steps() as f64;
        Ok(p)
    }

    /// `Lambda^(i)(t b^i)` for `t` on the unit grid.
    pub fn mother_path(&self, i: u32, replica: u64) -> Result<PathGrid> {
        Ok(exponentiate(self.log_mother(i, replica)?, self.c_x))
    }

    /// Running log-product; calls `visit(n, log Lambda_n)` after each layer `n`.
    pub fn visit_log_products(&self, replica: u64, mut visit: impl FnMut(u32, &[f64]) -> Result<()>) -> Result<()> {
        let mut log = vec![0.0; self.config.n_steps() + 1];
        for i in 0..=self.config.n_layers {
            let p = self.log_mother(i, replica)?;
            for (a, x) in log.iter_mut().zip(&p.values) {
                *a += x - self.c_x;
            }
            visit(i, &log)?;
        }
        Ok(())
    }

    /// `Lambda_n(t)` on the unit grid, `n = n_layers`.
    pub fn product_path(&self, replica: u64) -> Result<PathGrid> {
        let mut out = None;
        let n = self.config.n_layers;
        self.visit_log_products(replica, |i, log| {
            if i == n {
                out = Some(exp_checked(log)?);
            }
            Ok(())
        })?;
        Ok(PathGrid {
            values: out.unwrap(),
            dt: 1.0 / self.config.n_steps() as f64,
            seed: Some(self.config.master_seed),
            replica_id: Some(replica),
            diagnostics: Default::default(),
        })
    }

    /// `A_n(t) = int_0^t Lambda_n(s) ds` by the trapezoidal rule.
    pub fn cumulative_path(&self, replica: u64) -> Result<PathGrid> {
        Ok(cumulative(&self.product_path(replica)?))
    }

    /// `A_n(1)` for every `n` in `layers`, from one set of layer draws.
    pub fn total_masses(&self, replica: u64, layers: &[u32]) -> Result<Vec<f64>> {
        let dt = 1.0 / self.config.n_steps() as f64;
        let mut out = vec![f64::NAN; layers.len()];
        self.visit_log_products(replica, |i, log| {
            for (k, &n) in layers.iter().enumerate() {
                if n == i {
                    let lam = exp_checked(log)?;
                    out[k] = trapezoid_total(&lam, dt);
                }
            }
            Ok(())
        })?;
        Ok(out)
    }
}

fn exp_checked(log: &[f64]) -> Result<Vec<f64>> {
    log.iter()
        .map(|&l| {
            if l > 709.0 {
                Err(Error::Overflow(format!("log of the product reached {l:.1}")))
            } else {
                Ok(l.exp())
            }
        })
        .collect()
}

fn trapezoid_total(v: &[f64], dt: f64) -> f64 {
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

/// Running trapezoidal integral; `A(0) = 0`.
pub fn cumulative(path: &PathGrid) -> PathGrid {
    let mut a = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    a.push(0.0);
    for w in path.values.windows(2) {
        acc += 0.5 * path.dt * (w[0] + w[1]);
        a.push(acc);
    }
    PathGrid { values: a, ..path.clone() }
}

/// Masses of the `2^n_box` dyadic intervals of `[0, 1]` from a cumulative path.
pub fn dyadic_measure(a: &PathGrid, n_box: u32) -> Result<Vec<f64>> {
    let steps = a.values.len() - 1;
    if !steps.is_power_of_two() || (1usize << n_box) > steps {
        return invalid(format!("2^{n_box} boxes do not fit a grid of {steps} steps"));
    }
    let w = steps >> n_box;
    Ok((0..1usize << n_box).map(|k| a.values[(k + 1) * w] - a.values[k * w]).collect())
}

/// One-shot variant of [`Cascade::mother_path`] drawing from `rng`.
pub fn mother_path(s: &ScenarioSpec, i: u32, m: u32, rng: &mut StreamRng) -> Result<PathGrid> {
    use rand::{Rng, SeedableRng};
    let n = 1usize << m;
    let sampler = MotherSampler::new(&s.marginal, &s.dependence, n, s.b.powi(i as i32) / n as f64, &PathOptions::default())?;
    let seeds: Vec<u64> = (0..sampler.n_components()).map(|_| rng.random()).collect();
    let mut p = sampler.sample_with(|j| StreamRng::seed_from_u64(seeds[j as usize]))?;
    p.dt = 1.0 / n as f64;
    Ok(exponentiate(p, s.c_x()?))
}

/// `Lambda_n` for one replica of a configuration.
pub fn product_path(config: &CascadeConfig, replica: u64) -> Result<PathGrid> {
    Cascade::new(config)?.product_path(replica)
}
