//! Periodic-box discretisation of R^N (N = 1, 2) and exact application of the
//! semigroup `exp(-t L)`, `L = -Laplacian + (-Laplacian)^s`, through its
//! Fourier symbol `m(xi) = |xi|^2 + |xi|^{2s}`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid on `[-L, L)^N` with `M` points per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConfig(format!("grid.dim must be 1 or 2, got {dim}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid.half_width must be positive, got {half_width}"
            )));
        }
        if points_per_dim < 64 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "grid.points must be a power of two >= 64, got {points_per_dim}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points: points_per_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn points_per_dim(&self) -> usize {
        self.points
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Cell volume `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
    /// Box volume `(2L)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Node coordinate along one axis: `-L + i dx`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Wavenumber of FFT index `j` along one axis: `pi k / L`, `k` in `[-M/2, M/2)`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = self.points as i64;
        let k = if (j as i64) < m / 2 { j as i64 } else { j as i64 - m };
        std::f64::consts::PI * k as f64 / self.half_width
    }

    /// Integer mode index of FFT index `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let m = self.points as i64;
        if (j as i64) < m / 2 {
            j as i64
        } else {
            j as i64 - m
        }
    }

    /// Coordinates of flat index `idx` (row-major; first axis slowest).
    pub fn node(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coordinate(idx), 0.0],
            _ => [self.coordinate(idx / self.points), self.coordinate(idx % self.points)],
        }
    }

    /// Euclidean radius of node `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.node(idx);
        (x * x + y * y).sqrt()
    }

    /// `|xi|^2` at flat spectral index `idx`.
    pub fn wavenumber_sq(&self, idx: usize) -> f64 {
        match self.dim {
            1 => self.wavenumber(idx).powi(2),
            _ => {
                let a = self.wavenumber(idx / self.points);
                let b = self.wavenumber(idx % self.points);
                a * a + b * b
            }
        }
    }

    /// Sample a function of the node coordinates.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> RealField {
        let values = (0..self.len()).map(|i| f(self.node(i))).collect();
        RealField { grid: *self, values }
    }
}

/// Convenience constructor mirroring the grid validation rules.
pub fn build_grid(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Grid> {
    Grid::new(dim, half_width, points_per_dim)
}

/// Real-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid,
        }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(self)
    }
    pub fn l1_norm(&self) -> f64 {
        l1_norm(self)
    }
    /// `dx^N * sum(values)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }
    /// Box average of the field.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index and value of the largest entry.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Fraction of the (absolute) mass located within `L/4` of the box boundary.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let cut = 0.75 * self.grid.half_width;
        let near: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let [x, y] = self.grid.node(*i);
                x.abs() >= cut || (self.grid.dim == 2 && y.abs() >= cut)
            })
            .map(|(_, v)| v.abs())
            .sum();
        near / total
    }

    /// Clamp negative entries to zero; returns the largest clamped magnitude.
    pub fn clamp_nonnegative(&mut self) -> f64 {
        let mut worst = 0.0f64;
        for v in self.values.iter_mut() {
            if *v < 0.0 {
                worst = worst.max(-*v);
                *v = 0.0;
            }
        }
        worst
    }
}

/// `max |u|`.
pub fn sup_norm(u: &RealField) -> f64 {
    u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `dx^N * sum |u|`.
pub fn l1_norm(u: &RealField) -> f64 {
    u.grid.cell_volume() * u.values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Discrete Fourier coefficients (unnormalised forward transform).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }
    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }
}

/// Fractional order `s` with the symbol sampled on the grid frequencies.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    s: f64,
    grid: Grid,
    symbol: Arc<Vec<f64>>,
}

impl OperatorSpec {
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    /// `s = 1` collapses the symbol to `2 |xi|^2`; used only as a closed-form check.
    pub fn is_oracle_mode(&self) -> bool {
        self.s == 1.0
    }
    /// Symbol values in FFT index order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }
}

/// `m(xi) = |xi|^2 + |xi|^{2s}` for a scalar frequency magnitude.
pub fn symbol_value(s: f64, xi_abs: f64) -> f64 {
    xi_abs * xi_abs + xi_abs.powf(2.0 * s)
}

pub fn operator_symbol(grid: &Grid, s: f64) -> Result<OperatorSpec> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidConfig(format!("operator.s must lie in (0, 1], got {s}")));
    }
    let symbol = (0..grid.len())
        .map(|i| {
            let k2 = grid.wavenumber_sq(i);
            k2 + k2.powf(s)
        })
        .collect();
    Ok(OperatorSpec {
        s,
        grid: *grid,
        symbol: Arc::new(symbol),
    })
}

/// FFT plans for one grid. Cheap to clone (plans are shared).
#[derive(Clone)]
pub struct FftEngine {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftEngine").field("grid", &self.grid).finish()
    }
}

impl FftEngine {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let m = grid.points_per_dim();
        Self {
            grid: *grid,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let m = self.grid.points_per_dim();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        match self.grid.dim() {
            1 => plan.process_with_scratch(buf, &mut scratch),
            _ => {
                // rows
                plan.process_with_scratch(buf, &mut scratch);
                // columns via transpose
                let mut col = vec![Complex64::default(); m];
                for j in 0..m {
                    for i in 0..m {
                        col[i] = buf[i * m + j];
                    }
                    plan.process_with_scratch(&mut col, &mut scratch);
                    for i in 0..m {
                        buf[i * m + j] = col[i];
                    }
                }
            }
        }
    }

    /// Forward transform of real data into a complex buffer.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.process(&mut buf, false);
        buf
    }

    /// In-place forward transform.
    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        self.process(buf, false);
    }

    /// Inverse transform including the `1/M^N` normalisation, in place.
    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        self.process(buf, true);
        let scale = 1.0 / buf.len() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Multiply the spectrum of `values` by a real even multiplier and return
    /// the real part of the inverse transform.
    pub fn apply_multiplier(&self, values: &[f64], multiplier: &[f64]) -> Vec<f64> {
        let mut buf = self.forward_real(values);
        for (c, m) in buf.iter_mut().zip(multiplier) {
            *c *= *m;
        }
        self.inverse_inplace(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Apply two real even multipliers to two real fields with one complex
    /// transform pair (the fields ride in the real and imaginary parts).
    pub fn apply_multiplier_pair(
        &self,
        a: &[f64],
        b: &[f64],
        multiplier: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.process(&mut buf, false);
        for (c, m) in buf.iter_mut().zip(multiplier) {
            *c *= *m;
        }
        self.inverse_inplace(&mut buf);
        (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
    }
}

/// Forward transform.
pub fn transform(u: &RealField) -> SpectralField {
    let engine = FftEngine::new(&u.grid);
    SpectralField {
        grid: u.grid,
        coefficients: engine.forward_real(&u.values),
    }
}

/// Inverse transform (real part).
pub fn inverse_transform(u_hat: &SpectralField) -> RealField {
    let engine = FftEngine::new(&u_hat.grid);
    let mut buf = u_hat.coefficients.clone();
    engine.inverse_inplace(&mut buf);
    RealField {
        grid: u_hat.grid,
        values: buf.iter().map(|c| c.re).collect(),
    }
}

/// Output of one semigroup application.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub field: RealField,
    /// Largest negative value removed by the nonnegativity clamp.
    pub clamped: f64,
}

/// Semigroup application with a reusable engine.
#[derive(Debug, Clone)]
pub struct Semigroup {
    op: OperatorSpec,
    engine: FftEngine,
}

impl Semigroup {
    pub fn new(op: &OperatorSpec) -> Self {
        Self {
            engine: FftEngine::new(op.grid()),
            op: op.clone(),
        }
    }

    pub fn op(&self) -> &OperatorSpec {
        &self.op
    }
    pub fn engine(&self) -> &FftEngine {
        &self.engine
    }

    /// `exp(-t m(xi))` on the grid.
    pub fn multiplier(&self, t: f64) -> Vec<f64> {
        self.op.symbol.iter().map(|m| (-t * m).exp()).collect()
    }

    fn check(&self, u: &RealField, t: f64) -> Result<()> {
        if u.grid != self.op.grid {
            return Err(Error::ShapeMismatch("field and operator live on different grids".into()));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("semigroup time must be >= 0, got {t}")));
        }
        Ok(())
    }

    /// Unclamped `exp(-t L) u`.
    pub fn apply_raw(&self, u: &RealField, t: f64) -> Result<RealField> {
        self.check(u, t)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let values = self.engine.apply_multiplier(&u.values, &self.multiplier(t));
        Ok(RealField::from_raw(u.grid, values))
    }

    /// `exp(-t L) u` clamped at zero from below.
    pub fn apply(&self, u: &RealField, t: f64) -> Result<Evolved> {
        let mut field = self.apply_raw(u, t)?;
        let clamped = if t == 0.0 { 0.0 } else { field.clamp_nonnegative() };
        Ok(Evolved { field, clamped })
    }
}

/// `exp(-t L) u` (clamped, clamp magnitude reported).
pub fn apply_semigroup(u: &RealField, t: f64, op: &OperatorSpec) -> Result<Evolved> {
    Semigroup::new(op).apply(u, t)
}

/// Sup-norm decay of the torus semigroup with the plateau guard applied.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    /// `(t, sup_norm)`.
    pub points: Vec<(f64, f64)>,
    /// `true` where the sup-norm is at least ten times the box mean.
    pub valid: Vec<bool>,
    /// Log-log slope over the valid points (None with fewer than two).
    pub slope: Option<f64>,
    /// Set when any requested time failed the plateau guard.
    pub plateau_warning: bool,
}

pub const PLATEAU_FACTOR: f64 = 10.0;

pub fn linear_decay_curve(u0: &RealField, op: &OperatorSpec, times: &[f64]) -> Result<DecayCurve> {
    if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("times must be positive and increasing".into()));
    }
    let sg = Semigroup::new(op);
    let mean = u0.mean().abs();
    let mut points = Vec::with_capacity(times.len());
    let mut valid = Vec::with_capacity(times.len());
    for &t in times {
        let sup = sg.apply(u0, t)?.field.sup_norm();
        points.push((t, sup));
        valid.push(sup > 0.0 && sup >= PLATEAU_FACTOR * mean);
    }
    let fit: Vec<(f64, f64)> = points
        .iter()
        .zip(&valid)
        .filter(|(_, ok)| **ok)
        .map(|(p, _)| *p)
        .collect();
    let slope = loglog_slope(&fit);
    let all_zero = points.iter().all(|p| p.1 == 0.0);
    Ok(DecayCurve {
        plateau_warning: !all_zero && valid.iter().any(|v| !v),
        points,
        valid,
        slope,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// 2/3-rule mask: keeps modes with `|k_d| <= M/3` in every direction.
pub fn dealias_mask(grid: &Grid) -> Vec<f64> {
    let cutoff = grid.points_per_dim() as i64 / 3;
    let m = grid.points_per_dim();
    (0..grid.len())
        .map(|idx| {
            let keep = match grid.dim() {
                1 => grid.mode(idx).abs() <= cutoff,
                _ => grid.mode(idx / m).abs() <= cutoff && grid.mode(idx % m).abs() <= cutoff,
            };
            if keep {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}
