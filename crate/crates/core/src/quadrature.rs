//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! The integrator accepts an initial list of breakpoints, so oscillatory
//! integrands can be split at (approximate) zeros before adaptation starts.
//! Values may be real or complex; the error estimate follows QUADPACK's
//! `qk21` scaling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_199,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Scalar types the integrator can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single 21-point Kronrod panel with its embedded 10-point Gauss estimate.
pub fn gauss_kronrod_21<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::default();
    let mut res_abs = fc.magnitude() * WGK[10];
    let mut fv1 = [T::default(); 10];
    let mut fv2 = [T::default(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod = kronrod + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((kronrod - gauss) * half).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrate over `[a, b]`.
    pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(&self, f: F, a: f64, b: f64) -> QuadResult<T> {
        self.integrate_breakpoints(f, &[a, b])
    }

    /// Integrate over `[points[0], points[last]]`, starting from the panels
    /// delimited by `points` (must be sorted).
    pub fn integrate_breakpoints<T: QuadValue, F: FnMut(f64) -> T>(
        &self,
        mut f: F,
        points: &[f64],
    ) -> QuadResult<T> {
        let mut heap = BinaryHeap::with_capacity(points.len() * 2);
        let mut total = T::default();
        let mut total_err = 0.0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (v, e) = gauss_kronrod_21(&mut f, w[0], w[1]);
            total = total + v;
            total_err += e;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
        let initial = heap.len();
        loop {
            let target = self.abs_tol.max(self.rel_tol * total.magnitude());
            if total_err <= target {
                return QuadResult {
                    value: total,
                    abs_error: total_err,
                    intervals: heap.len(),
                    converged: true,
                };
            }
            if heap.len() >= self.max_intervals.max(initial + 1) {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine resolution
                heap.push(worst);
                break;
            }
            let (v1, e1) = gauss_kronrod_21(&mut f, worst.a, mid);
            let (v2, e2) = gauss_kronrod_21(&mut f, mid, worst.b);
            total = total - worst.value + v1 + v2;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        // re-sum to shed accumulated cancellation in the running totals
        let mut value = T::default();
        let mut err = 0.0;
        for s in heap.iter() {
            value = value + s.value;
            err += s.error;
        }
        let target = self.abs_tol.max(self.rel_tol * value.magnitude());
        QuadResult {
            value,
            abs_error: err,
            intervals: heap.len(),
            converged: err <= target,
        }
    }
}

/// Breakpoints `a, a+step, ...` up to `b` (inclusive), capped at `max_panels` panels.
pub fn uniform_breakpoints(a: f64, b: f64, step: f64, max_panels: usize) -> Vec<f64> {
    let n = (((b - a) / step).ceil() as usize).clamp(1, max_panels.max(1));
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

/// Geometric breakpoints between `a > 0` and `b`, roughly `per_decade` per factor of ten.
pub fn geometric_breakpoints(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10().max(0.0);
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut pts: Vec<f64> = (0..=n).map(|k| a * ratio.powi(k as i32)).collect();
    pts[n] = b;
    pts
}

/// Ten-point Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_10(a: f64, b: f64) -> [(f64, f64); 10] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 10];
    for (j, w) in WG.iter().enumerate() {
        let x = XGK[2 * j + 1];
        out[2 * j] = (c - h * x, h * w);
        out[2 * j + 1] = (c + h * x, h * w);
    }
    out
}

/// Composite ten-point Gauss–Legendre rule over consecutive breakpoints.
pub fn composite_gauss(breakpoints: &[f64]) -> Vec<(f64, f64)> {
    breakpoints
        .windows(2)
        .flat_map(|w| gauss_legendre_10(w[0], w[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_degree_19() {
        for deg in 0..=19 {
            let v: f64 = gauss_legendre_10(0.0, 2.0).iter().map(|(x, w)| w * x.powi(deg)).sum();
            let exact = 2f64.powi(deg + 1) / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-13 * exact, "degree {deg}");
        }
    }

    #[test]
    fn kronrod_rule_is_exact_for_degree_31() {
        for deg in 0..=31 {
            let mut f = |x: f64| x.powi(deg);
            let (v, _) = gauss_kronrod_21(&mut f, -1.0, 1.0);
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-14, "degree {deg}: {v} vs {exact}");
        }
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let s: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((k - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = Quadrature::new(1e-12, 1e-12);
        let r = q.integrate(|x: f64| x.powf(-0.5), 0.0, 1.0);
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn complex_integrand() {
        let q = Quadrature::default();
        let r = q.integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI);
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn breakpoints_cover_oscillation() {
        let q = Quadrature::default();
        let pts = uniform_breakpoints(0.0, 100.0 * std::f64::consts::PI, std::f64::consts::PI, 1000);
        let r = q.integrate_breakpoints(|x: f64| x.sin().powi(2), &pts);
        assert!((r.value - 50.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn geometric_breakpoints_end_exactly() {
        let p = geometric_breakpoints(1e-3, 1e5, 3);
        assert_eq!(*p.last().unwrap(), 1e5);
        assert_eq!(p[0], 1e-3);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}
