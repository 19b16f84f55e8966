//! Adaptive Gauss-Kronrod quadrature and the few special functions built on it.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// One Gauss-Kronrod pass returning `int f` and `int u f` over `[a, b]`
/// with their error estimates, evaluating `f` once per node.
pub fn gk15_moments<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> [(f64, f64); 2] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let (mut k0, mut g0) = (fc * WGK[7], fc * WG[3]);
    let (mut k1, mut g1) = (c * fc * WGK[7], c * fc * WG[3]);
    for j in 0..7 {
        let dx = h * XGK[j];
        let (fl, fr) = (f(c - dx), f(c + dx));
        let s0 = fl + fr;
        let s1 = (c - dx) * fl + (c + dx) * fr;
        k0 += WGK[j] * s0;
        k1 += WGK[j] * s1;
        if j % 2 == 1 {
            g0 += WG[j / 2] * s0;
            g1 += WG[j / 2] * s1;
        }
    }
    [(k0 * h, ((k0 - g0) * h).abs()), (k1 * h, ((k1 - g1) * h).abs())]
}

/// Integrates `f` over the finite interval `[a, b]` until the error estimate
/// falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    if a == b {
        return Quad { value: 0.0, abs_err: 0.0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&f, lo, hi);
    segs.push((lo, hi, v, e));
    let mut total = v;
    let mut err = e;
    let max_segs = 4000;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if segs.len() >= max_segs {
            return Quad { value: sign * total, abs_err: err, converged: false };
        }
        // bisect the worst segment
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (sa, sb, sv, se) = segs.swap_remove(idx);
        let m = 0.5 * (sa + sb);
        if m <= sa || m >= sb {
            segs.push((sa, sb, sv, se));
            return Quad { value: sign * total, abs_err: err, converged: false };
        }
        let (v1, e1) = gk15(&f, sa, m);
        let (v2, e2) = gk15(&f, m, sb);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
        if !total.is_finite() {
            return Quad { value: total, abs_err: f64::INFINITY, converged: false };
        }
    }
    // recompute the sums to shed accumulated cancellation
    let value: f64 = segs.iter().map(|s| s.2).sum();
    let abs_err: f64 = segs.iter().map(|s| s.3).sum();
    Quad { value: sign * value, abs_err, converged: true }
}

/// Integrates over `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, abs_tol, rel_tol)
}

/// Integral over `[a, b]` split at geometrically spaced points, which suits
/// integrands with a singularity or a sharp peak near `a`.
pub fn integrate_log_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    let mut value = 0.0;
    let mut abs_err = 0.0;
    let mut converged = true;
    let mut lo = a;
    for k in (0..=14).rev() {
        let hi = if k == 0 { b } else { a + (b - a) * 10f64.powi(-k) };
        let q = integrate(&f, lo, hi, abs_tol / 15.0, rel_tol);
        value += q.value;
        abs_err += q.abs_err;
        converged &= q.converged;
        lo = hi;
    }
    Quad { value, abs_err, converged }
}

/// `exp(z) K_nu(z)` for `z > 0` from `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`.
pub fn bessel_k_scaled(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "bessel_k_scaled needs z > 0");
    let nu = nu.abs();
    let g = |t: f64| {
        let e = -z * (t.cosh() - 1.0) + nu * t;
        if e < -745.0 {
            0.0
        } else {
            0.5 * (e.exp() + (-z * (t.cosh() - 1.0) - nu * t).exp())
        }
    };
    let expo = |t: f64| -z * (t.cosh() - 1.0) + nu * t;
    let peak = if nu > 0.0 { (nu / z).asinh() } else { 0.0 };
    // beyond `t_max` the integrand is below exp(-60) of the peak
    let floor = expo(peak) - 60.0;
    let mut t_max = peak + 1.0;
    while expo(t_max) > floor {
        t_max *= 1.5;
    }
    let a = integrate(g, 0.0, peak.min(t_max), 0.0, 1e-14);
    let b = integrate(g, peak.min(t_max), t_max, 0.0, 1e-14);
    a.value + b.value
}

/// Modified Bessel function of the second kind.
pub fn bessel_k(nu: f64, z: f64) -> f64 {
    bessel_k_scaled(nu, z) * (-z).exp()
}

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
