//! Closed-form Rényi functions, correlation products and the sufficient
//! conditions for a non-degenerate limit of the cascade.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{domain, invalid, Result};
use crate::marginals::{Family, Interval, MarginalSpec};
use crate::ou_paths::{CorrFn, DependenceSpec};
use crate::quad;

/// Everything the analytic side needs: marginal, dependence, scale factor
/// `b > 1` and the largest moment order `q_star` of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub marginal: MarginalSpec,
    pub dependence: DependenceSpec,
    pub b: f64,
    pub q_star: u32,
}

/// Marginal and rate of one independent OU component (a single one unless
/// the dependence is a superposition).
#[derive(Debug, Clone, Copy)]
struct Component {
    marginal: MarginalSpec,
    lambda: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.marginal.validate()?;
        self.dependence.validate()?;
        if !(self.b > 1.0 && self.b.is_finite()) {
            return invalid(format!("b > 1 required, got {}", self.b));
        }
        if self.q_star < 1 {
            return invalid("q_star >= 1 required");
        }
        if matches!(self.dependence, DependenceSpec::GaussianGeneral { .. }) && self.marginal.family() != Family::Gaussian {
            return invalid("a general correlation function needs the Gaussian family");
        }
        let x = self.effective_marginal();
        if !x.psi_domain().contains(1.0) {
            return invalid("E exp(X) must be finite: 1 must lie in the moment domain");
        }
        Ok(())
    }

    /// Marginal law of the log mother process.
    pub fn effective_marginal(&self) -> MarginalSpec {
        self.dependence.effective_marginal(&self.marginal)
    }

    /// `c_X = psi(1)`.
    pub fn c_x(&self) -> Result<f64> {
        self.effective_marginal().c_x()
    }

    fn components(&self) -> Option<Vec<Component>> {
        match &self.dependence {
            DependenceSpec::Exponential { lambda } => Some(vec![Component { marginal: self.marginal, lambda: *lambda }]),
            DependenceSpec::GaussianGeneral { .. } => None,
            dep => Some(
                dep.components()
                    .unwrap()
                    .into_iter()
                    .map(|(d, l)| Component { marginal: self.marginal.convolution_power(d), lambda: l })
                    .collect(),
            ),
        }
    }

    fn gaussian_general(&self) -> Option<(f64, CorrFn)> {
        match (&self.dependence, self.marginal) {
            (DependenceSpec::GaussianGeneral { corr }, MarginalSpec::Gaussian { sigma2 }) => Some((sigma2, *corr)),
            _ => None,
        }
    }

    /// `E Lambda^q = exp(psi(q) - q psi(1))`.
    pub fn lambda_moment(&self, q: f64) -> Result<f64> {
        let x = self.effective_marginal();
        Ok((x.psi(q)? - q * x.psi(1.0)?).exp())
    }
}

/// Admissible moment orders together with the family-specific parameter
/// conditions evaluated for the scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRange {
    pub interval: Interval,
    pub flags: BTreeMap<String, bool>,
}

/// `(0, q_star)` intersected with the moment domain of `X`.
pub fn q_range(s: &ScenarioSpec) -> Result<QRange> {
    s.validate()?;
    let x = s.effective_marginal();
    let d = x.psi_domain();
    let q = s.q_star as f64;
    let mut flags = BTreeMap::new();
    let mut flag = |k: &str, v: bool| {
        flags.insert(k.to_string(), v);
    };
    flag("q_star_in_moment_domain", d.contains(q));
    match x {
        MarginalSpec::Gaussian { .. } => {}
        MarginalSpec::Gamma { alpha, .. } => {
            flag("alpha_gt_2", alpha > 2.0);
            flag("q_star_lt_alpha", q < alpha);
        }
        MarginalSpec::TemperedStable { kappa, gamma, .. } => {
            flag("gamma_ge_max_2qstar_4_pow_kappa", gamma >= (2.0 * q).max(4.0).powf(kappa));
        }
        MarginalSpec::NormalTemperedStable { kappa, gamma, beta, .. } => {
            flag("beta_lt_half_gamma_pow_inv_kappa_minus_1", beta < 0.5 * (gamma.powf(1.0 / kappa) - 1.0));
            flag("q_star_lt_alpha_minus_beta", q < d.hi);
        }
        MarginalSpec::VarianceGamma { alpha, beta, .. } => {
            flag("abs_beta_plus_1_lt_alpha", (beta + 1.0).abs() < alpha);
            flag("q_star_lt_alpha_minus_beta", q < alpha - beta);
        }
        MarginalSpec::EulerGamma { gamma, beta, .. } => {
            flag("gamma_negative", gamma < 0.0);
            flag("beta_gt_minus_gamma", beta > -gamma);
            flag("q_star_lt_minus_beta_over_gamma", gamma < 0.0 && q < -beta / gamma);
        }
        MarginalSpec::GeneralizedZ { alpha, beta1, beta2, .. } => {
            let s2 = alpha / (2.0 * std::f64::consts::PI);
            flag("beta2_gt_alpha_over_2pi", beta2 > s2);
            flag("q_star_lt_2pi_beta2_over_alpha", q < beta2 / s2);
            flag("beta1_lt_beta2", beta1 < beta2);
        }
    }
    Ok(QRange { interval: Interval { lo: 0.0, hi: q.min(d.hi) }, flags })
}

fn check_q(s: &ScenarioSpec, q: f64) -> Result<()> {
    let r = q_range(s)?;
    let upper_ok = q < r.interval.hi || (q == r.interval.hi && s.effective_marginal().psi_domain().contains(q));
    if q.is_nan() || q < 0.0 || !upper_ok {
        return domain(format!("q = {q} outside [0, {}]", r.interval.hi));
    }
    Ok(())
}

/// `T(q) = q (1 + psi(1) / ln b) - psi(q) / ln b - 1` for a marginal and `b`,
/// with no restriction on `q` beyond the moment domain.
pub fn renyi_exponent(x: &MarginalSpec, b: f64, q: f64) -> Result<f64> {
    let lb = b.ln();
    Ok(q * (1.0 + x.psi(1.0)? / lb) - x.psi(q)? / lb - 1.0)
}

/// Rényi function `T(q)` of the limit measure for `q` in the closure of the
/// admissible range.
pub fn t_analytic(s: &ScenarioSpec, q: f64) -> Result<f64> {
    check_q(s, q)?;
    renyi_exponent(&s.effective_marginal(), s.b, q)
}

/// Moment scaling exponent `K(q) = T(q) + 1`.
pub fn k_analytic(s: &ScenarioSpec, q: f64) -> Result<f64> {
    Ok(t_analytic(s, q)? + 1.0)
}

/// Smallest `b` with `b^{q* - 1} > E Lambda^{q*}`.
pub fn b_threshold(s: &ScenarioSpec) -> Result<f64> {
    s.validate()?;
    let q = s.q_star as f64;
    if s.q_star == 1 {
        return domain("the threshold needs q_star >= 2");
    }
    let x = s.effective_marginal();
    Ok(((x.psi(q)? - q * x.psi(1.0)?) / (q - 1.0)).exp())
}

/// `E prod_i Lambda(t_i)` for points separated by the consecutive gaps `u`.
pub fn rho_product(s: &ScenarioSpec, u: &[f64]) -> Result<f64> {
    s.validate()?;
    if u.iter().any(|&g| !(g >= 0.0)) {
        return invalid("gaps must be nonnegative");
    }
    if let Some((sigma2, corr)) = s.gaussian_general() {
        // exp of the covariance summed over all pairs of points
        let mut cov = 0.0;
        for i in 0..u.len() {
            let mut gap = 0.0;
            for &g in &u[i..] {
                gap += g;
                cov += sigma2 * corr.eval(gap);
            }
        }
        return Ok(cov.exp());
    }
    let mut log = 0.0;
    for c in s.components().unwrap() {
        let x = c.marginal;
        let p1 = x.psi(1.0)?;
        for j in 0..u.len() {
            let mut acc = 0.0;
            let mut sj = 0.0;
            for &g in &u[j..] {
                acc += g;
                sj += (-c.lambda * acc).exp();
            }
            log += x.psi(1.0 + sj)? - p1 - x.psi(sj)?;
        }
    }
    Ok(log.exp())
}

/// `E Lambda(0) Lambda(tau)`.
pub fn bivariate_mgf(s: &ScenarioSpec, tau: f64) -> Result<f64> {
    rho_product(s, &[tau.abs()])
}

/// `E[Lambda(0)^{q-1} Lambda(s)] / E Lambda^q - 1`.
pub fn rho_q(s: &ScenarioSpec, q: f64, lag: f64) -> Result<f64> {
    s.validate()?;
    if let Some((sigma2, corr)) = s.gaussian_general() {
        return Ok((sigma2 * (q - 1.0) * (corr.eval(lag) - 1.0)).exp_m1());
    }
    let mut log = 0.0;
    for c in s.components().unwrap() {
        let x = c.marginal;
        let e = (-c.lambda * lag.abs()).exp();
        log += x.psi(q - 1.0 + e)? - x.psi(q)? + x.psi(1.0)? - x.psi(e)?;
    }
    Ok(log.exp_m1())
}

/// Lower bound `2 t int_0^t (1 - tau / t)(M(tau) - 1) dtau` on the variance
/// of the integrated limit over `[0, t]`.
pub fn variance_lower_bound(s: &ScenarioSpec, t: f64) -> Result<f64> {
    s.validate()?;
    if !(t > 0.0) {
        return invalid("t > 0 required");
    }
    let f = |tau: f64| (1.0 - tau / t) * (bivariate_mgf(s, tau).unwrap_or(f64::NAN) - 1.0);
    let q = quad::integrate(f, 0.0, t, 1e-12, 1e-12);
    Ok(2.0 * t * q.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub conditions: BTreeMap<String, Verdict>,
}

impl ConditionReport {
    pub fn overall(&self) -> Status {
        let st: Vec<Status> = self.conditions.values().map(|v| v.status).collect();
        if st.contains(&Status::Fail) {
            Status::Fail
        } else if st.contains(&Status::Undetermined) {
            Status::Undetermined
        } else {
            Status::Pass
        }
    }
}

fn verdict(status: Status, margin: f64, detail: impl Into<String>) -> Verdict {
    Verdict { status, margin, detail: detail.into() }
}

fn pass_if(ok: bool, margin: f64, detail: impl Into<String>) -> Verdict {
    verdict(if ok { Status::Pass } else { Status::Fail }, margin, detail)
}

/// Decay verdict for a positive sequence: `Pass` when it falls below `floor`
/// with eventually decreasing terms, `Undetermined` when it decreases too
/// slowly to tell, `Fail` when it does not decrease.
fn decay_verdict(terms: &[f64], floor: f64, what: &str) -> Verdict {
    let last = *terms.last().unwrap();
    let tail = &terms[terms.len().saturating_sub(4)..];
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    if last.abs() <= floor {
        verdict(Status::Pass, floor - last.abs(), format!("{what} reaches {last:.3e}"))
    } else if decreasing {
        verdict(Status::Undetermined, floor - last.abs(), format!("{what} still {last:.3e}"))
    } else {
        verdict(Status::Fail, floor - last.abs(), format!("{what} does not decay, last {last:.3e}"))
    }
}

/// Evaluates the sufficient conditions for a non-degenerate, `L^q`-bounded
/// limit with the Rényi function of [`t_analytic`].
pub fn check_conditions(s: &ScenarioSpec) -> Result<ConditionReport> {
    s.validate()?;
    let x = s.effective_marginal();
    let d = x.psi_domain();
    let qs = s.q_star as f64;
    let mut c = BTreeMap::new();

    let in_dom = d.contains(qs);
    c.insert(
        "moment_finite_at_q_star".to_string(),
        pass_if(in_dom, d.hi - qs, format!("moment domain upper end {}", d.hi)),
    );

    let v = if in_dom {
        let m = s.lambda_moment(qs)?;
        let lhs = s.b.powf(qs - 1.0);
        pass_if(lhs > m, lhs - m, format!("b^(q*-1) = {lhs:.6} vs E Lambda^q* = {m:.6}"))
    } else {
        verdict(Status::Fail, f64::NEG_INFINITY, "E Lambda^q* is infinite")
    };
    c.insert("b_exceeds_moment".to_string(), v);

    let v = if d.contains(2.0) {
        let m2 = s.lambda_moment(2.0)?;
        pass_if(s.b > m2, s.b - m2, format!("b = {} vs E Lambda^2 = {m2:.6}", s.b))
    } else {
        verdict(Status::Fail, f64::NEG_INFINITY, "E Lambda^2 is infinite")
    };
    c.insert("b_exceeds_second_moment".to_string(), v);

    // positive tail integrability of x e^{q* x} against the Lévy measure
    let v = if x.family() == Family::Gaussian {
        verdict(Status::Pass, f64::INFINITY, "no jump part")
    } else if in_dom {
        let t = crate::marginals::levy_triplet_x(&x);
        let q = t.integral(1.0, f64::INFINITY, |u| if u > 0.0 { u * (qs * u).exp() } else { 0.0 });
        pass_if(q.converged && q.value.is_finite(), d.hi - qs, format!("integral {:.6e}", q.value))
    } else {
        verdict(Status::Fail, d.hi - qs, "q* outside the moment domain")
    };
    c.insert("moment_integral_finite".to_string(), v);

    let npts = s.q_star.max(2) as usize;
    if d.contains(npts as f64) {
        // monotonicity of the correlation product in every gap
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut state = 0x2545_F491_4F6C_DD1Du64;
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..64 {
            let u: Vec<f64> = (0..npts - 1).map(|_| 3.0 * unit()).collect();
            let base = rho_product(s, &u)?;
            for k in 0..u.len() {
                let mut w = u.clone();
                w[k] += 0.05;
                worst = worst.max(rho_product(s, &w)? - base);
            }
        }
        c.insert(
            "rho_monotone".to_string(),
            pass_if(worst <= 1e-12, -worst, format!("largest increase {worst:.3e}")),
        );

        // sum over n of rho(b^n, ..., b^n) - 1
        let mut terms = Vec::new();
        let mut sum = 0.0;
        for n in 0..400 {
            let g = s.b.powi(n);
            if !g.is_finite() {
                break;
            }
            let t = rho_product(s, &vec![g; npts - 1])? - 1.0;
            sum += t;
            terms.push(t);
            if t.abs() < 1e-300 {
                break;
            }
        }
        let mut v = decay_verdict(&terms, 1e-12, "summand");
        v.detail = format!("partial sum {sum:.6e}; {}", v.detail);
        c.insert("rho_sum_finite".to_string(), v);

        // mixing: points pushed apart factorize
        let terms: Vec<f64> = (3..=12)
            .map(|k| rho_product(s, &vec![10f64.powi(k); npts - 1]).map(|r| (r - 1.0).abs()))
            .collect::<Result<_>>()?;
        c.insert("mixing".to_string(), decay_verdict(&terms, 1e-6, "|rho - 1| at separation 1e12"));
    } else {
        for k in ["rho_monotone", "rho_sum_finite", "mixing"] {
            c.insert(k.to_string(), verdict(Status::Fail, f64::NEG_INFINITY, "correlation product undefined"));
        }
    }

    if let Some((_, corr)) = s.gaussian_general() {
        // local regularity of the correlation at zero and decay at infinity
        let h1 = 1e-3;
        let h2 = 1e-4;
        let a = ((1.0 - corr.eval(h1)).ln() - (1.0 - corr.eval(h2)).ln()) / (h1.ln() - h2.ln());
        c.insert("corr_holder_at_zero".to_string(), pass_if(a > 0.0, a, format!("exponent {a:.4}")));
        let t1 = 1e6;
        let t2 = 1e8;
        let decay = -(corr.eval(t2).ln() - corr.eval(t1).ln()) / (t2.ln() - t1.ln());
        c.insert("corr_power_decay".to_string(), pass_if(decay > 0.0, decay, format!("exponent {decay:.4}")));
    } else {
        // |rho_q(s)| <= lambda s (psi'(q) - psi(1)) makes the scaling sum converge
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for comp in s.components().unwrap() {
            match comp.marginal.dpsi(qs.min(d.hi * (1.0 - 1e-12))) {
                Ok(dp) => {
                    let bound = comp.lambda * (dp - comp.marginal.psi(1.0)?).abs() / (s.b - 1.0);
                    worst = worst.max(bound);
                }
                Err(_) => ok = false,
            }
        }
        let v = if ok {
            verdict(Status::Pass, f64::INFINITY, format!("sum bound {worst:.6e}"))
        } else {
            verdict(Status::Fail, f64::NEG_INFINITY, "derivative of psi undefined")
        };
        c.insert("scaling_sum_finite".to_string(), v);
    }
    Ok(ConditionReport { conditions: c })
}

/// Values of a Rényi-type curve on a grid of `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenyiCurve {
    pub q: Vec<f64>,
    pub t: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

/// `T(q)` on a grid of admissible `q`.
pub fn analytic_curve(s: &ScenarioSpec, q_grid: &[f64]) -> Result<RenyiCurve> {
    let t = q_grid.iter().map(|&q| t_analytic(s, q)).collect::<Result<Vec<_>>>()?;
    Ok(RenyiCurve { q: q_grid.to_vec(), t, stderr: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendrePoint {
    pub alpha: f64,
    pub value: f64,
    pub argmin_q: f64,
    /// The minimum sits on the first or last grid point, so the true
    /// infimum may lie outside the sampled range.
    pub at_grid_edge: bool,
}

/// Discrete Legendre transform `T*(alpha) = min_q (q alpha - T(q))`.
pub fn legendre(curve: &RenyiCurve, alpha: &[f64]) -> Result<Vec<LegendrePoint>> {
    if curve.q.is_empty() || curve.q.len() != curve.t.len() {
        return invalid("curve needs matching, nonempty q and T columns");
    }
    Ok(alpha
        .iter()
        .map(|&a| {
            let (i, v) = curve
                .q
                .iter()
                .zip(&curve.t)
                .map(|(q, t)| q * a - t)
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            LegendrePoint { alpha: a, value: v, argmin_q: curve.q[i], at_grid_edge: i == 0 || i + 1 == curve.q.len() }
        })
        .collect())
}
