//! Radial inverse Fourier integrals of `exp(-t m(|xi|))`.
//!
//! Two symbols are handled: the pure fractional one `|xi|^{2s}` (kernel `h_t`)
//! and the mixed one `|xi|^2 + |xi|^{2s}` (kernel `p_t`). In one dimension the
//! integral is taken along the real axis for `|x|` up to the kernel width and
//! along a rotated ray `xi = w e^{i theta} / x` beyond it, where the real-axis
//! integrand oscillates too fast for its (algebraically small) result. In two
//! dimensions the Hankel integral covers small radii and the inverse Abel
//! transform of the one-dimensional derivative covers the rest.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::bessel::j0;
use crate::error::{Error, Result};
use crate::quadrature::{geometric_breakpoints, uniform_breakpoints, QuadResult, Quadrature};

/// `-ln` of the relative size at which integrands are truncated.
const TRUNCATION: f64 = 46.0;

const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// `|xi|^{2s}`.
    Fractional,
    /// `|xi|^2 + |xi|^{2s}`.
    Mixed,
}

/// Heat kernel of one symbol at one time.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    s: f64,
    t: f64,
    kind: SymbolKind,
    quad: Quadrature,
}

fn expm1c(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        let mut k = 1.0;
        while term.norm() > 1e-18 * sum.norm() {
            k += 1.0;
            term = term * z / k;
            sum += term;
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// Accept a quadrature result or report its achieved accuracy.
pub(crate) fn accept<T: crate::quadrature::QuadValue>(
    r: QuadResult<T>,
    requested: f64,
    context: &str,
) -> Result<T> {
    let scale = r.value.magnitude();
    if r.converged || r.abs_error <= requested.max(1e-7 * scale) {
        Ok(r.value)
    } else {
        Err(Error::Quadrature {
            achieved: r.abs_error,
            requested,
            context: context.to_string(),
        })
    }
}

fn merge(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

impl Kernel {
    pub fn new(kind: SymbolKind, s: f64, t: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("kernel order s must lie in (0, 1), got {s}")));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("kernel time must be > 0, got {t}")));
        }
        Ok(Self {
            s,
            t,
            kind,
            quad: Quadrature::new(1e-300, 1e-11).with_max_intervals(6000),
        })
    }

    pub fn fractional(s: f64, t: f64) -> Result<Self> {
        Self::new(SymbolKind::Fractional, s, t)
    }

    pub fn mixed(s: f64, t: f64) -> Result<Self> {
        Self::new(SymbolKind::Mixed, s, t)
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn with_rel_tol(mut self, rel: f64) -> Self {
        self.quad.rel_tol = rel;
        self
    }

    /// `m(xi)` for `xi >= 0`.
    pub fn symbol(&self, xi: f64) -> f64 {
        let frac = xi.powf(2.0 * self.s);
        match self.kind {
            SymbolKind::Fractional => frac,
            SymbolKind::Mixed => xi * xi + frac,
        }
    }

    /// Spatial scale of the kernel core.
    pub fn width(&self) -> f64 {
        let frac = self.t.powf(0.5 / self.s);
        match self.kind {
            SymbolKind::Fractional => frac,
            SymbolKind::Mixed => frac.max(self.t.sqrt()),
        }
    }

    /// Frequency `R` with `t m(R) = 46`.
    pub fn cutoff(&self) -> f64 {
        let target = TRUNCATION / self.t;
        let mut hi = 1.0;
        while self.symbol(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.symbol(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        hi
    }

    fn decay(&self, xi: f64) -> f64 {
        (-self.t * self.symbol(xi)).exp()
    }

    fn frequency_breakpoints(&self, r: f64) -> Vec<f64> {
        let big_r = self.cutoff();
        let mut pts = vec![0.0];
        pts.extend(geometric_breakpoints(big_r * 1e-8, big_r, 3));
        if r > 0.0 {
            pts.extend(uniform_breakpoints(0.0, big_r, PI / r, MAX_PANELS));
        }
        merge(pts)
    }

    /// `(1/pi) int_0^R cos(x xi) e^{-t m} d xi`.
    pub fn real_axis_1d(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        let pts = self.frequency_breakpoints(x);
        let r = self.quad.integrate_breakpoints(|xi| (x * xi).cos() * self.decay(xi), &pts);
        Ok(accept(r, 1e-9, "one-dimensional real-axis kernel")? / PI)
    }

    fn ray_angle(&self) -> f64 {
        match self.kind {
            SymbolKind::Mixed => FRAC_PI_4,
            SymbolKind::Fractional => (PI / (4.0 * self.s)).min(FRAC_PI_2),
        }
    }

    /// `e^{-t m(w e^{i theta} / x)} - 1`.
    fn ray_factor(&self, w: f64, x: f64, theta: f64) -> Complex64 {
        let y = w / x;
        let frac = Complex64::from_polar(y.powf(2.0 * self.s), 2.0 * self.s * theta);
        let m = match self.kind {
            SymbolKind::Fractional => frac,
            SymbolKind::Mixed => frac + Complex64::from_polar(y * y, 2.0 * theta),
        };
        expm1c(-self.t * m)
    }

    fn ray_integral(&self, x: f64, moment: i32) -> Result<Complex64> {
        let theta = self.ray_angle();
        let e = Complex64::from_polar(1.0, theta);
        let upper = TRUNCATION / theta.sin() - 2.0;
        let mut pts = vec![0.0];
        pts.extend(geometric_breakpoints(1e-10, 1.0, 1));
        pts.extend([2.0, 4.0, 8.0, 16.0, 32.0].into_iter().filter(|&p| p < upper));
        pts.push(upper);
        let pts = merge(pts);
        let r = self.quad.integrate_breakpoints(
            |w| {
                let osc = (Complex64::i() * w * e).exp();
                osc * self.ray_factor(w, x, theta) * w.powi(moment)
            },
            &pts,
        );
        accept(r, 1e-300, "rotated-ray kernel")
    }

    /// `(1/(pi x)) Re[e^{i theta} int_0^inf e^{i w e^{i theta}} (e^{-t m} - 1) dw]`, `x > 0`.
    pub fn rotated_1d(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        if x == 0.0 {
            return self.real_axis_1d(0.0);
        }
        let e = Complex64::from_polar(1.0, self.ray_angle());
        Ok((e * self.ray_integral(x, 0)?).re / (PI * x))
    }

    /// One-dimensional kernel.
    pub fn value_1d(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        if x <= self.width() {
            self.real_axis_1d(x)
        } else {
            self.rotated_1d(x)
        }
    }

    /// Derivative of the one-dimensional kernel, `x > 0`, via the rotated ray.
    pub fn derivative_1d(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument("kernel derivative needs x > 0".into()));
        }
        let e2 = Complex64::from_polar(1.0, 2.0 * self.ray_angle());
        Ok((Complex64::i() * e2 * self.ray_integral(x, 1)?).re / (PI * x * x))
    }

    /// `(1/2pi) int_0^R J0(r xi) e^{-t m} xi d xi`.
    pub fn hankel_2d(&self, r: f64) -> Result<f64> {
        let pts = self.frequency_breakpoints(r);
        let res = self.quad.integrate_breakpoints(|xi| j0(r * xi) * self.decay(xi) * xi, &pts);
        Ok(accept(res, 1e-9, "Hankel kernel")? / (2.0 * PI))
    }

    /// `-(1/pi) int_0^V K1'(r cosh v) dv` with `K1` the one-dimensional kernel.
    pub fn abel_2d(&self, r: f64) -> Result<f64> {
        let upper = 40.0 / (2.0 + 2.0 * self.s);
        let pts = merge(vec![0.0, 0.5, 1.0, 2.0, 4.0, upper]);
        let mut failure = None;
        let res = Quadrature::new(1e-300, 1e-10).integrate_breakpoints(
            |v| match self.derivative_1d(r * v.cosh()) {
                Ok(d) => d,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &pts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(-accept(res, 1e-300, "inverse Abel kernel")? / PI)
    }

    /// Two-dimensional radial kernel.
    pub fn value_2d(&self, r: f64) -> Result<f64> {
        let r = r.abs();
        if r <= self.width() {
            self.hankel_2d(r)
        } else {
            self.abel_2d(r)
        }
    }

    pub fn value(&self, r: f64, dim: usize) -> Result<f64> {
        match dim {
            1 => self.value_1d(r),
            2 => self.value_2d(r),
            _ => Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}"))),
        }
    }

    /// Value on the full line from the complex integral `(1/2pi) int e^{i z xi} e^{-t m} d xi`
    /// over `[-R, R]`; independent of the even-symmetry reduction used elsewhere.
    pub fn full_line_1d(&self, z: f64) -> Result<f64> {
        let big_r = self.cutoff();
        let half = self.frequency_breakpoints(z.abs());
        let mut pts: Vec<f64> = half.iter().map(|p| -p).collect();
        pts.extend(half);
        let pts = merge(pts);
        let res = self.quad.integrate_breakpoints(
            |xi| Complex64::from_polar(self.decay(xi.abs()), z * xi),
            &pts,
        );
        debug_assert!(pts[0] <= -big_r * 0.999);
        Ok(accept(res, 1e-9, "full-line kernel")?.re / (2.0 * PI))
    }
}
