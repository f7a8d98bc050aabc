//! Mixed-kernel dual evaluation, normalization and Chapman-Kolmogorov checks,
//! and sample-based fits of the kernel bound constants.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::eval::{accept, Kernel};
use crate::datum::ball_volume;
use crate::error::{Error, Result};
use crate::quadrature::{uniform_breakpoints, Quadrature};

/// Relative tolerance for agreement between the two mixed-kernel routes.
pub const ROUTE_TOLERANCE: f64 = 1e-6;

/// Gaussian half-window, in units of `sqrt(t)`, for the convolution route.
const GAUSS_WINDOW: f64 = 13.0;

pub fn fractional_kernel(s: f64, t: f64, r: f64, dim: usize) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
    }
    Kernel::fractional(s, t)?.value(r, dim)
}

/// Both evaluations of the mixed kernel at one radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixedValue {
    /// Gaussian convolved with the fractional kernel.
    pub route_a: f64,
    /// Direct Fourier integral of the mixed symbol.
    pub route_b: f64,
    pub relative: f64,
}

impl MixedValue {
    pub fn value(&self) -> f64 {
        self.route_b
    }
}

fn euclid(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `p_t(z)` by the Gaussian-convolution route.
pub fn mixed_kernel_convolution(s: f64, t: f64, r: f64, dim: usize) -> Result<f64> {
    let h = Kernel::fractional(s, t)?.with_rel_tol(1e-12);
    let sq = t.sqrt();
    let quad = Quadrature::new(1e-300, 1e-11);
    let mut failure = None;
    let mut guard = |v: Result<f64>| match v {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let value = match dim {
        1 => {
            let mut pts: Vec<f64> = (-13..=13).map(|k| r + k as f64 * sq).collect();
            let lo = r - GAUSS_WINDOW * sq;
            let hi = r + GAUSS_WINDOW * sq;
            if lo < 0.0 && hi > 0.0 {
                pts.push(0.0);
            }
            pts.sort_by(f64::total_cmp);
            let res = quad.integrate_breakpoints(
                |xi| {
                    let g = (-(r - xi).powi(2) / (4.0 * t)).exp();
                    g * guard(h.value_1d(xi))
                },
                &pts,
            );
            accept(res, 1e-300, "mixed kernel convolution")? / (4.0 * PI * t).sqrt()
        }
        2 => {
            let lo = (r - GAUSS_WINDOW * sq).max(0.0);
            let hi = r + GAUSS_WINDOW * sq;
            let mut pts = uniform_breakpoints(lo, hi, sq, 100);
            if lo == 0.0 && hi > h.width() {
                pts.push(h.width());
                pts.sort_by(f64::total_cmp);
            }
            let res = quad.integrate_breakpoints(
                |rho| {
                    let g = (-(r - rho).powi(2) / (4.0 * t)).exp();
                    g * crate::bessel::i0e(r * rho / (2.0 * t)) * rho * guard(h.value_2d(rho))
                },
                &pts,
            );
            accept(res, 1e-300, "mixed kernel convolution")? / (2.0 * t)
        }
        _ => return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}"))),
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value)
}

/// `p_t(z)` by both routes; disagreement beyond `ROUTE_TOLERANCE` is an error.
pub fn mixed_kernel_routes(s: f64, t: f64, z: &[f64], dim: usize) -> Result<MixedValue> {
    if z.len() != dim {
        return Err(Error::ShapeMismatch(format!("offset has {} components, expected {dim}", z.len())));
    }
    let r = euclid(z);
    let route_b = Kernel::mixed(s, t)?.value(r, dim)?;
    let route_a = mixed_kernel_convolution(s, t, r, dim)?;
    let relative = ((route_a - route_b) / route_b).abs();
    if !(relative <= ROUTE_TOLERANCE) {
        return Err(Error::Consistency {
            route_a,
            route_b,
            relative,
        });
    }
    Ok(MixedValue {
        route_a,
        route_b,
        relative,
    })
}

/// `p_t(z)`, cross-checked by the convolution route.
pub fn mixed_kernel(s: f64, t: f64, z: &[f64], dim: usize) -> Result<f64> {
    Ok(mixed_kernel_routes(s, t, z, dim)?.value())
}

/// Sampled kernel values; radial, so symmetric by construction when `points`
/// contain both signs.
#[derive(Debug, Clone, Serialize)]
pub struct KernelProbe {
    pub s: f64,
    pub t: f64,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl KernelProbe {
    pub fn mixed(s: f64, t: f64, points: &[f64], dim: usize) -> Result<Self> {
        let k = Kernel::mixed(s, t)?;
        let values = points
            .par_iter()
            .map(|&z| k.value(z, dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            s,
            t,
            points: points.to_vec(),
            values,
        })
    }

    pub fn all_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

/// Largest `|p_t(z) - p_t(-z)|` over the probes, each side evaluated from the
/// full-line Fourier integral without using evenness of the symbol.
pub fn symmetry_defect(s: f64, t: f64, probes: &[f64]) -> Result<f64> {
    let k = Kernel::mixed(s, t)?;
    probes
        .par_iter()
        .map(|&z| Ok((k.full_line_1d(z)? - k.full_line_1d(-z)?).abs()))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalizationReport {
    /// Truncated integral plus tail estimate.
    pub integral: f64,
    /// Power-law tail estimate beyond the truncation radius.
    pub tail: f64,
    pub truncation_radius: f64,
    /// Set when the tail estimate exceeds `1e-7`.
    pub inconclusive: bool,
}

impl NormalizationReport {
    pub fn error(&self) -> f64 {
        (self.integral - 1.0).abs()
    }
}

fn sphere_weight(dim: usize, r: f64) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * PI * r
    }
}

/// Radial integral of a kernel: linear near the core, logarithmic beyond,
/// plus the power-law tail `sigma_N p(X) X^N / (2s)`.
fn radial_mass(k: &Kernel, dim: usize) -> Result<NormalizationReport> {
    let w = k.width();
    let near = 8.0 * w;
    let quad = Quadrature::new(1e-300, 1e-11);
    let mut failure = None;
    let pts = uniform_breakpoints(0.0, near, 0.5 * w, 64);
    let res = quad.integrate_breakpoints(
        |r| match k.value(r, dim) {
            Ok(v) => v * sphere_weight(dim, r),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &pts,
    );
    let head = accept(res, 1e-300, "normalization core")?;
    if let Some(e) = failure {
        return Err(e);
    }
    let tail_of = |x: f64| -> Result<f64> {
        Ok(sphere_weight(dim, x) * x * k.value(x, dim)? / (2.0 * k.s()))
    };
    let mut far = near * 1e3;
    let mut tail = tail_of(far)?;
    while tail > 1e-10 && far < 1e40 {
        far *= 100.0;
        tail = tail_of(far)?;
    }
    let (a, b) = (near.ln(), far.ln());
    let pts = uniform_breakpoints(a, b, 1.0, 400);
    let mut failure = None;
    let res = quad.integrate_breakpoints(
        |u| {
            let r = u.exp();
            match k.value(r, dim) {
                Ok(v) => v * sphere_weight(dim, r) * r,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &pts,
    );
    let body = accept(res, 1e-300, "normalization tail region")?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(NormalizationReport {
        integral: head + body + tail,
        tail,
        truncation_radius: far,
        inconclusive: tail > 1e-7,
    })
}

/// `int p_t` over R^N.
pub fn check_normalization(s: f64, t: f64, dim: usize) -> Result<NormalizationReport> {
    radial_mass(&Kernel::mixed(s, t)?, dim)
}

/// `int_{-inf}^{inf} f(y) dy` for a heavy-tailed integrand concentrated on
/// `[lo, hi]`, with logarithmic outer regions and a power tail of exponent `decay`.
fn line_integral<F: Fn(f64) -> Result<f64> + Sync>(
    f: F,
    lo: f64,
    hi: f64,
    step: f64,
    decay: f64,
) -> Result<f64> {
    let quad = Quadrature::new(1e-300, 1e-11);
    let failure = std::sync::Mutex::new(None);
    let g = |y: f64| match f(y) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            0.0
        }
    };
    let pts = uniform_breakpoints(lo, hi, step, 400);
    let mid = accept(quad.integrate_breakpoints(&g, &pts), 1e-300, "convolution core")?;
    let mut outer = 0.0;
    for sign in [1.0, -1.0] {
        let start = if sign > 0.0 { hi } else { -lo };
        // y = sign * (start + e^u - 1)
        let map = |u: f64| sign * (start + u.exp_m1());
        let mut far = 1e3 * (hi - lo);
        let tail_of = |x: f64| g(sign * (start + x)).abs() * (start + x) / (decay - 1.0);
        while tail_of(far) > 1e-14 && far < 1e40 {
            far *= 100.0;
        }
        let b = far.ln_1p();
        let pts = uniform_breakpoints(0.0, b, 1.0, 400);
        let res = quad.integrate_breakpoints(|u| g(map(u)) * u.exp(), &pts);
        outer += accept(res, 1e-300, "convolution outer region")? + tail_of(far);
    }
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(mid + outer)
}

/// `max |(p_t * p_tau)(x) - p_{t+tau}(x)|` over probe points (N = 1).
pub fn check_chapman_kolmogorov(s: f64, t: f64, tau: f64, probes: &[f64]) -> Result<f64> {
    let kt = Kernel::mixed(s, t)?;
    let ktau = Kernel::mixed(s, tau)?;
    let ksum = Kernel::mixed(s, t + tau)?;
    let errs = probes
        .par_iter()
        .map(|&x| {
            let w = kt.width().min(ktau.width());
            let pad = 8.0 * kt.width().max(ktau.width());
            let lo = x.min(0.0) - pad;
            let hi = x.max(0.0) + pad;
            let conv = line_integral(
                |y| Ok(kt.value_1d(x - y)? * ktau.value_1d(y)?),
                lo,
                hi,
                0.5 * w,
                2.0 + 4.0 * s,
            )?;
            Ok((conv - ksum.value_1d(x)?).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Logarithmic lattice with `per_decade` points per factor of ten, endpoints included.
pub fn log_lattice(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    crate::quadrature::geometric_breakpoints(lo, hi, per_decade)
}

/// Linear lattice with `n + 1` points on `[lo, hi]`.
pub fn linear_lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Two-sided envelope fit for the fractional kernel.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    /// Smallest `C0 >= 1` with `C0^{-1} env <= h <= C0 env` at every sample.
    pub c0: f64,
    /// The same fit on the coarser lattice.
    pub c0_coarse: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Coarse and fine fits within 10% of each other.
    pub stable: bool,
    pub samples: usize,
}

/// `min{t^{-N/(2s)}, t / r^{N+2s}}`.
pub fn fractional_envelope(s: f64, t: f64, r: f64, dim: usize) -> f64 {
    let n = dim as f64;
    let core = t.powf(-n / (2.0 * s));
    if r == 0.0 {
        core
    } else {
        core.min(t / r.powf(n + 2.0 * s))
    }
}

fn envelope_ratios(s: f64, ts: &[f64], rs: &[f64], dim: usize) -> Result<(f64, f64)> {
    let pairs: Vec<(f64, f64)> = ts.iter().flat_map(|&t| rs.iter().map(move |&r| (t, r))).collect();
    let ratios = pairs
        .par_iter()
        .map(|&(t, r)| Ok(fractional_kernel(s, t, r, dim)? / fractional_envelope(s, t, r, dim)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| (lo.min(q), hi.max(q))))
}

pub fn fit_fractional_bounds(
    s: f64,
    t_range: (f64, f64),
    r_range: (f64, f64),
    dim: usize,
) -> Result<EnvelopeFit> {
    if !(t_range.0 > 0.0 && t_range.1 > t_range.0 && r_range.0 >= 0.0 && r_range.1 > r_range.0) {
        return Err(Error::InvalidArgument("bound fit needs nonempty sampling ranges".into()));
    }
    let fit = |per_decade: usize, n_r: usize| -> Result<(f64, f64, f64)> {
        let ts = log_lattice(t_range.0, t_range.1, per_decade);
        let rs = linear_lattice(r_range.0, r_range.1, n_r);
        let (lo, hi) = envelope_ratios(s, &ts, &rs, dim)?;
        Ok((hi.max(1.0 / lo).max(1.0), lo, hi))
    };
    let (c0_coarse, _, _) = fit(4, 100)?;
    let (c0, min_ratio, max_ratio) = fit(8, 200)?;
    Ok(EnvelopeFit {
        c0,
        c0_coarse,
        min_ratio,
        max_ratio,
        stable: (c0 / c0_coarse - 1.0).abs() <= 0.1,
        samples: log_lattice(t_range.0, t_range.1, 8).len() * 201,
    })
}

/// Sup of `p_t(z) t^{N/(2s)}` over samples.
#[derive(Debug, Clone, Serialize)]
pub struct UpperFit {
    pub c_upper: f64,
    pub c_upper_coarse: f64,
    pub stable: bool,
    /// For every sampled `t` the scan in `|z|` peaks at the origin.
    pub peak_at_origin: bool,
    /// `p_{0.01}(0) 0.01^{N/(2s)}`.
    pub small_t_product: f64,
    pub small_t_ok: bool,
}

fn upper_scan(s: f64, ts: &[f64], n_z: usize, dim: usize) -> Result<(f64, bool)> {
    let rows = ts
        .par_iter()
        .map(|&t| {
            let k = Kernel::mixed(s, t)?;
            let zs = linear_lattice(0.0, 5.0 * k.width(), n_z);
            let vals = zs.iter().map(|&z| k.value(z, dim)).collect::<Result<Vec<f64>>>()?;
            let scale = t.powf(dim as f64 / (2.0 * s));
            let peak = vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
            Ok((vals[0] * scale, vals.iter().fold(0.0f64, |m, v| m.max(*v)) * scale, peak))
        })
        .collect::<Result<Vec<(f64, f64, bool)>>>()?;
    let c = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    Ok((c, rows.iter().all(|r| r.2)))
}

pub fn verify_upper_bound(s: f64, t_range: (f64, f64), dim: usize) -> Result<UpperFit> {
    if !(t_range.0 > 0.0 && t_range.1 > t_range.0) {
        return Err(Error::InvalidArgument("upper-bound fit needs 0 < t_lo < t_hi".into()));
    }
    let (c_upper_coarse, _) = upper_scan(s, &log_lattice(t_range.0, t_range.1, 4), 20, dim)?;
    let (c_upper, peak_at_origin) = upper_scan(s, &log_lattice(t_range.0, t_range.1, 8), 40, dim)?;
    let small = 0.01f64;
    let small_t_product = Kernel::mixed(s, small)?.value(0.0, dim)? * small.powf(dim as f64 / (2.0 * s));
    Ok(UpperFit {
        c_upper,
        c_upper_coarse,
        stable: (c_upper / c_upper_coarse - 1.0).abs() <= 0.1,
        peak_at_origin,
        small_t_product,
        small_t_ok: small_t_product <= 1.05 * c_upper,
    })
}

/// Volume of the unit ball, `omega_1 = 2`, `omega_2 = pi`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    ball_volume(dim, 1.0)
}

/// `C0^{-1} e^{-1} omega_N (4 pi)^{-N/2}`.
pub fn constructive_lower_constant(c0: f64, dim: usize) -> f64 {
    unit_ball_volume(dim) / (c0 * E * (4.0 * PI).powf(dim as f64 / 2.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerFit {
    /// `min p_t(z) t^{N/(2s)}` over `t in (1, t_hi]`, `|z| <= sqrt(t)`.
    pub c_star: f64,
    pub constructive: f64,
    pub chain_holds: bool,
    /// Minimum over the boundary probes `|z| = sqrt(t)` alone.
    pub boundary_min: f64,
    pub samples: usize,
}

pub fn verify_lower_bound(s: f64, dim: usize, t_hi: f64, c0: f64) -> Result<LowerFit> {
    if !(t_hi > 1.0) {
        return Err(Error::InvalidArgument("lower-bound fit needs t_hi > 1".into()));
    }
    let ts: Vec<f64> = log_lattice(1.0, t_hi, 8).into_iter().skip(1).collect();
    let rows = ts
        .par_iter()
        .map(|&t| {
            let k = Kernel::mixed(s, t)?;
            let scale = t.powf(dim as f64 / (2.0 * s));
            let zs = linear_lattice(0.0, t.sqrt(), 10);
            let vals = zs.iter().map(|&z| Ok(k.value(z, dim)? * scale)).collect::<Result<Vec<f64>>>()?;
            Ok((vals.iter().fold(f64::INFINITY, |m, v| m.min(*v)), *vals.last().unwrap()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let c_star = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.0));
    let boundary_min = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.1));
    let constructive = constructive_lower_constant(c0, dim);
    Ok(LowerFit {
        c_star,
        constructive,
        chain_holds: c_star >= constructive,
        boundary_min,
        samples: ts.len() * 11,
    })
}

/// Fitted kernel constants with per-bound pass flags.
#[derive(Debug, Clone, Serialize)]
pub struct BoundFit {
    pub c0_fit: f64,
    pub c_upper: f64,
    pub c_star: f64,
    pub constructive_c_star: f64,
    pub envelope_t_range: (f64, f64),
    pub envelope_r_range: (f64, f64),
    pub upper_t_range: (f64, f64),
    pub lower_t_range: (f64, f64),
    pub pass_envelope: bool,
    pub pass_upper: bool,
    pub pass_lower: bool,
}

/// Fits all three constants over the default sampling ranges.
pub fn certify_bounds(s: f64, dim: usize) -> Result<BoundFit> {
    let env_t = (0.1, 100.0);
    let env_r = (0.0, 100.0);
    let up_t = (0.1, 100.0);
    let lo_t = (1.0, 100.0);
    let env = fit_fractional_bounds(s, env_t, env_r, dim)?;
    let up = verify_upper_bound(s, up_t, dim)?;
    let lo = verify_lower_bound(s, dim, lo_t.1, env.c0)?;
    Ok(BoundFit {
        c0_fit: env.c0,
        c_upper: up.c_upper,
        c_star: lo.c_star,
        constructive_c_star: lo.constructive,
        envelope_t_range: env_t,
        envelope_r_range: env_r,
        upper_t_range: up_t,
        lower_t_range: lo_t,
        pass_envelope: env.c0.is_finite() && env.stable,
        pass_upper: up.c_upper.is_finite() && up.stable && up.small_t_ok,
        pass_lower: lo.c_star > 0.0 && lo.chain_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_kernel_examples() {
        assert!((fractional_kernel(0.5, 1.0, 0.0, 1).unwrap() - 1.0 / PI).abs() < 1e-12);
        let v = fractional_kernel(0.5, 2.0, 2.0, 1).unwrap();
        assert!((v - 2.0 / (PI * 8.0)).abs() < 1e-12);
        for s in [0.3, 0.7] {
            let c = fractional_kernel(s, 1.0, 0.0, 1).unwrap();
            for t in [2.0f64, 4.0] {
                let v = fractional_kernel(s, t, 0.0, 1).unwrap();
                assert!((v / (c * t.powf(-1.0 / (2.0 * s))) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn dual_routes_agree_one_dimension() {
        for (s, t) in [(0.5, 1.0), (0.3, 0.5), (0.7, 2.0)] {
            for z in [0.0, 0.7, 3.0, 25.0] {
                let v = mixed_kernel_routes(s, t, &[z], 1).unwrap();
                assert!(v.relative < 1e-8, "s={s} t={t} z={z}: {v:?}");
                assert!(v.value() > 0.0);
            }
        }
    }

    #[test]
    fn dual_routes_agree_two_dimensions() {
        for z in [[0.0, 0.0], [0.6, 0.8], [3.0, 4.0]] {
            let v = mixed_kernel_routes(0.7, 0.5, &z, 2).unwrap();
            assert!(v.relative < 1e-8, "{z:?}: {v:?}");
        }
    }

    #[test]
    fn symmetry_and_positivity() {
        assert!(symmetry_defect(0.5, 1.0, &[0.5, 2.0, 9.0]).unwrap() <= 1e-10);
        let probe = KernelProbe::mixed(0.3, 2.0, &[-50.0, -1.0, 0.0, 1.0, 50.0, 1e4], 1).unwrap();
        assert!(probe.all_positive());
        assert_eq!(probe.values[0], probe.values[4]);
    }

    #[test]
    fn normalization_examples() {
        for (s, t, dim) in [(0.5, 1.0, 1), (0.3, 2.0, 1), (0.7, 0.5, 2)] {
            let rep = check_normalization(s, t, dim).unwrap();
            assert!(rep.error() <= 1e-6, "({s}, {t}, {dim}): {rep:?}");
            assert!(!rep.inconclusive);
        }
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        assert!(check_chapman_kolmogorov(0.5, 0.5, 0.5, &[0.0]).unwrap() <= 1e-6);
        assert!(check_chapman_kolmogorov(0.3, 1.0, 2.0, &[1.0]).unwrap() <= 1e-6);
    }

    #[test]
    fn convolution_with_narrow_gaussian_recovers_kernel() {
        let k = Kernel::mixed(0.5, 1.0).unwrap();
        let eps: f64 = 1e-4;
        let x = 0.8;
        let v = line_integral(
            |y| Ok(k.value_1d(x - y)? * (-(y * y) / (4.0 * eps)).exp() / (4.0 * PI * eps).sqrt()),
            -0.2,
            0.2,
            0.01,
            4.0,
        )
        .unwrap();
        let want = k.value_1d(x).unwrap();
        assert!((v - want).abs() < 1e-4 * want);
    }

    #[test]
    fn poisson_envelope_constant_is_two_pi() {
        // h / env depends on r / t only; the extremes are 1/pi at r = 0 and 1/(2 pi) at r = t.
        let fit = fit_fractional_bounds(0.5, (0.1, 100.0), (0.0, 100.0), 1).unwrap();
        assert!((fit.c0 - 2.0 * PI).abs() < 1e-6, "{fit:?}");
        assert!(fit.stable);
        assert!(fit.min_ratio >= 1.0 / fit.c0 && fit.max_ratio <= fit.c0);
    }

    #[test]
    fn far_field_and_core_regimes() {
        let s = 0.4;
        let t = 1.5;
        let far: Vec<f64> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&r: &f64| fractional_kernel(s, t, r, 1).unwrap() * r.powf(1.0 + 2.0 * s) / t)
            .collect();
        assert!((far[2] / far[0] - 1.0).abs() < 0.05);
        let core: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&t: &f64| fractional_kernel(s, t, 0.0, 1).unwrap() * t.powf(1.0 / (2.0 * s)))
            .collect();
        assert!((core[2] / core[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn upper_bound_fit() {
        let up = verify_upper_bound(0.5, (1.0, 100.0), 1).unwrap();
        assert!(up.c_upper.is_finite() && up.stable && up.peak_at_origin && up.small_t_ok, "{up:?}");
        // large-t limit of p_t(0) t is the Poisson value 1/pi
        assert!(up.c_upper < 1.0 / PI * 1.0001);
    }

    #[test]
    fn lower_bound_and_constructive_chain() {
        let lo = verify_lower_bound(0.5, 1, 100.0, 2.0 * PI).unwrap();
        assert!(lo.c_star > 0.0 && lo.chain_holds, "{lo:?}");
        assert!(lo.boundary_min >= lo.c_star);
        let want = 2.0 / (2.0 * PI * E * (4.0 * PI).sqrt());
        assert!((lo.constructive - want).abs() < 1e-15);
        assert_eq!(unit_ball_volume(2), PI);
    }
}
