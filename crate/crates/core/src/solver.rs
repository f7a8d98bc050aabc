//! Mild-solution integrator for `u_t + L u = h(t) f(u)` with blow-up detection.
//!
//! One step is the exponential trapezoid rule
//! `u+ = E u + (dt/2) [E (h(t) N(u)) + h(t+dt) N(u+)]`, `E = exp(-dt L)`,
//! started from the exponential Euler predictor and closed by a fixed number
//! of Picard sweeps. `N` is the pointwise source, 2/3-rule filtered when
//! dealiasing is on.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::kernel::LinearFlow;
use crate::nonlinearity::{osgood_tail, Family, OsgoodKind, SourceTerm, TimeWeight};
use crate::spectral::{dealias_mask, loglog_slope, FftEngine, Grid, OperatorSpec, RealField, PLATEAU_FACTOR};

pub const DEFAULT_BLOW_THRESHOLD: f64 = 1e8;
pub const DEFAULT_PICARD_TOL: f64 = 1e-6;
/// Clean steps before `dt` is doubled.
const CLEAN_STEPS: usize = 10;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid,
    pub op: OperatorSpec,
    pub term: SourceTerm,
    pub weight: TimeWeight,
    pub initial: InitialDatum,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub t_max: f64,
    pub blow_threshold: f64,
    pub picard_sweeps: usize,
    pub dealias: bool,
    /// Relative sup-difference of the last two Picard iterates above which a step is retried.
    pub picard_tol: f64,
    /// Keep every k-th accepted field (plus the first and last) for residual checks.
    pub store_every: Option<usize>,
}

impl SolverConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        op: OperatorSpec,
        term: SourceTerm,
        weight: TimeWeight,
        initial: InitialDatum,
        dt_initial: f64,
        dt_min: f64,
        t_max: f64,
    ) -> Self {
        Self {
            grid: *op.grid(),
            op,
            term,
            weight,
            initial,
            dt_initial,
            dt_min,
            t_max,
            blow_threshold: DEFAULT_BLOW_THRESHOLD,
            picard_sweeps: 2,
            dealias: true,
            picard_tol: DEFAULT_PICARD_TOL,
            store_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid != *self.op.grid() {
            return Err(Error::InvalidConfig("operator built on a different grid".into()));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_initial && self.dt_initial < self.t_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < solver.dt_min < solver.dt_initial < solver.t_max, got {} / {} / {}",
                self.dt_min, self.dt_initial, self.t_max
            )));
        }
        if self.picard_sweeps < 2 {
            return Err(Error::InvalidConfig(format!(
                "solver.picard_sweeps must be >= 2, got {}",
                self.picard_sweeps
            )));
        }
        if !(self.blow_threshold > self.initial.sup()) {
            return Err(Error::InvalidConfig(format!(
                "solver.blow_threshold {} must exceed sup of the initial datum {}",
                self.blow_threshold,
                self.initial.sup()
            )));
        }
        Ok(())
    }
}

/// Index of the mode `-k` for flat spectral index `idx`.
fn negated(grid: &Grid, idx: usize) -> usize {
    let m = grid.points_per_dim();
    let neg = |j: usize| (m - j) % m;
    match grid.dim() {
        1 => neg(idx),
        _ => neg(idx / m) * m + neg(idx % m),
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub field: RealField,
    /// Relative sup-difference of the last two Picard iterates.
    pub residual: f64,
    /// Largest negative value removed by the clamp.
    pub clamped: f64,
}

/// Reusable state for stepping one configuration.
pub struct Stepper {
    cfg: SolverConfig,
    engine: FftEngine,
    mask: Option<Vec<f64>>,
    mirror: Vec<usize>,
    propagators: HashMap<u64, Arc<Vec<f64>>>,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig) -> Self {
        let grid = cfg.grid;
        Self {
            engine: FftEngine::new(&grid),
            mask: cfg.dealias.then(|| dealias_mask(&grid)),
            mirror: (0..grid.len()).map(|i| negated(&grid, i)).collect(),
            propagators: HashMap::new(),
            cfg: cfg.clone(),
        }
    }

    fn propagator(&mut self, dt: f64) -> Arc<Vec<f64>> {
        let op = &self.cfg.op;
        self.propagators
            .entry(dt.to_bits())
            .or_insert_with(|| Arc::new(op.symbol().iter().map(|m| (-dt * m).exp()).collect()))
            .clone()
    }

    fn source(&self, u: &[f64]) -> Vec<f64> {
        let term = self.cfg.term;
        let f: Vec<f64> = u.iter().map(|&v| term.f(v.max(0.0))).collect();
        match &self.mask {
            Some(mask) => self.engine.apply_multiplier(&f, mask),
            None => f,
        }
    }

    /// One exponential-trapezoid step from `(t, u)` to `t + dt`.
    pub fn step(&mut self, u: &RealField, t: f64, dt: f64) -> Result<StepResult> {
        if u.grid() != &self.cfg.grid {
            return Err(Error::ShapeMismatch("field and solver grid differ".into()));
        }
        let grid = self.cfg.grid;
        let h0 = self.cfg.weight.h(t);
        let h1 = self.cfg.weight.h(t + dt);
        let term = self.cfg.term;
        let prop = self.propagator(dt);
        let uv = u.values();

        // spectra of u and f(u) from one transform of u + i f(u)
        let mut buf: Vec<Complex64> = uv
            .iter()
            .map(|&v| Complex64::new(v, term.f(v.max(0.0))))
            .collect();
        self.engine.forward_inplace(&mut buf);
        let packed = buf.clone();
        for (k, out) in buf.iter_mut().enumerate() {
            let a = packed[k];
            let b = packed[self.mirror[k]].conj();
            let uk = 0.5 * (a + b);
            let mut fk = Complex64::new(0.0, -0.5) * (a - b);
            if let Some(mask) = &self.mask {
                fk *= mask[k];
            }
            let base = prop[k] * (uk + 0.5 * dt * h0 * fk);
            let pred = prop[k] * (uk + dt * h0 * fk);
            // both inverse transforms are real: pack them as re + i im
            *out = base + Complex64::i() * pred;
        }
        self.engine.inverse_inplace(&mut buf);
        let base: Vec<f64> = buf.iter().map(|c| c.re).collect();
        let mut cur: Vec<f64> = buf.iter().map(|c| c.im).collect();
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { t: t + dt });
        }

        let mut residual = f64::INFINITY;
        for _ in 0..self.cfg.picard_sweeps {
            let n = self.source(&cur);
            let next: Vec<f64> = base.iter().zip(&n).map(|(b, nv)| b + 0.5 * dt * h1 * nv).collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { t: t + dt });
            }
            let diff = next.iter().zip(&cur).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            residual = if scale > 0.0 { diff / scale } else { 0.0 };
            cur = next;
        }
        let mut field = RealField::new(grid, cur).map_err(|_| Error::Overflow { t: t + dt })?;
        let clamped = field.clamp_nonnegative();
        Ok(StepResult {
            field,
            residual,
            clamped,
        })
    }
}

/// Stateless single step.
pub fn step(u: &RealField, t: f64, dt: f64, cfg: &SolverConfig) -> Result<RealField> {
    Ok(Stepper::new(cfg).step(u, t, dt)?.field)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub boundary_mass_fraction: f64,
    pub dt: f64,
    /// Box average of `u`.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunStatus {
    /// No blow-up by `t_max` and a nonincreasing sup-norm over the last half.
    Global { decay_slope: Option<f64>, window: (f64, f64) },
    BlowUp { t_burst: f64 },
    Inconclusive { reason: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Global { .. } => "Global",
            RunStatus::BlowUp { .. } => "BlowUp",
            RunStatus::Inconclusive { .. } => "Inconclusive",
        }
    }
    pub fn is_global(&self) -> bool {
        matches!(self, RunStatus::Global { .. })
    }
    pub fn is_blow_up(&self) -> bool {
        matches!(self, RunStatus::BlowUp { .. })
    }
    pub fn t_burst(&self) -> Option<f64> {
        match self {
            RunStatus::BlowUp { t_burst } => Some(*t_burst),
            _ => None,
        }
    }
    pub fn decay_slope(&self) -> Option<f64> {
        match self {
            RunStatus::Global { decay_slope, .. } => *decay_slope,
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub trace: Vec<TracePoint>,
    /// Prop-type margin `1 - H(tau) / tail(||e^{-tau L} u0||)` along the trace, when computed.
    pub monitor: Option<MarginSeries>,
    /// Largest clamp magnitude relative to the sup-norm at that step.
    pub max_relative_clamp: f64,
    /// Stored `(t, u(t))` snapshots (see `SolverConfig::store_every`).
    pub snapshots: Vec<(f64, RealField)>,
    pub final_field: RealField,
    pub steps: usize,
    pub rejected_steps: usize,
}

fn trace_point(u: &RealField, t: f64, dt: f64) -> TracePoint {
    TracePoint {
        t,
        sup_norm: u.sup_norm(),
        l1_norm: u.l1_norm(),
        boundary_mass_fraction: u.boundary_mass_fraction(),
        dt,
        mean: u.mean(),
    }
}

fn classify_end(trace: &[TracePoint], t_max: f64) -> RunStatus {
    let half = 0.5 * t_max;
    let tail: Vec<&TracePoint> = trace.iter().filter(|p| p.t >= half).collect();
    if trace.iter().all(|p| p.sup_norm == 0.0) {
        return RunStatus::Global {
            decay_slope: None,
            window: (half, t_max),
        };
    }
    let monotone = tail.windows(2).all(|w| w[1].sup_norm <= w[0].sup_norm * (1.0 + 1e-12));
    if !monotone {
        return RunStatus::Inconclusive {
            reason: "sup-norm not monotone decreasing over the last half of the run".into(),
        };
    }
    let fit: Vec<(f64, f64)> = tail
        .iter()
        .filter(|p| p.t > 0.0 && p.sup_norm >= PLATEAU_FACTOR * p.mean.abs())
        .map(|p| (p.t, p.sup_norm))
        .collect();
    let window = match (fit.first(), fit.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (half, t_max),
    };
    RunStatus::Global {
        decay_slope: loglog_slope(&fit),
        window,
    }
}

pub fn run(cfg: &SolverConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut stepper = Stepper::new(cfg);
    let mut u = cfg.initial.sample(&cfg.grid);
    let mut t = 0.0;
    let mut dt = cfg.dt_initial;
    let mut clean = 0usize;
    let mut trace = vec![trace_point(&u, 0.0, dt)];
    let mut snapshots = Vec::new();
    if cfg.store_every.is_some() {
        snapshots.push((0.0, u.clone()));
    }
    let mut max_clamp = 0.0f64;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let end_tol = 1e-12 * cfg.t_max;

    let status = loop {
        if t >= cfg.t_max - end_tol {
            break classify_end(&trace, cfg.t_max);
        }
        let h = dt.min(cfg.t_max - t);
        let attempt = match stepper.step(&u, t, h) {
            Ok(r) if r.residual <= cfg.picard_tol => Some(r),
            Ok(_) | Err(Error::Overflow { .. }) => None,
            Err(e) => return Err(e),
        };
        let Some(res) = attempt else {
            rejected += 1;
            dt *= 0.5;
            clean = 0;
            if dt < cfg.dt_min {
                break RunStatus::BlowUp { t_burst: t };
            }
            continue;
        };
        u = res.field;
        t += h;
        steps += 1;
        let point = trace_point(&u, t, h);
        if point.sup_norm > 0.0 {
            max_clamp = max_clamp.max(res.clamped / point.sup_norm);
        }
        trace.push(point);
        if let Some(k) = cfg.store_every {
            if steps % k == 0 || t >= cfg.t_max - end_tol {
                snapshots.push((t, u.clone()));
            }
        }
        if point.sup_norm >= cfg.blow_threshold {
            break RunStatus::BlowUp { t_burst: t };
        }
        clean += 1;
        if clean >= CLEAN_STEPS && dt < cfg.dt_initial {
            dt = (2.0 * dt).min(cfg.dt_initial);
            clean = 0;
        }
    };
    if let Some(k) = cfg.store_every {
        if snapshots.last().map(|s| s.0) != Some(t) && steps % k != 0 {
            snapshots.push((t, u.clone()));
        }
    }
    Ok(RunOutcome {
        status,
        trace,
        monitor: None,
        max_relative_clamp: max_clamp,
        snapshots,
        final_field: u,
        steps,
        rejected_steps: rejected,
    })
}

/// Piecewise-quadratic (composite nonuniform Simpson) weights on sorted nodes.
fn quadratic_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        let h = x[1] - x[0];
        return vec![0.5 * h, 0.5 * h];
    }
    // integrate the quadratic through (a, b, c) over [lo, hi] within [a, c]
    let add = |w: &mut Vec<f64>, i: usize, lo: f64, hi: f64| {
        let (a, b, c) = (x[i], x[i + 1], x[i + 2]);
        // antiderivatives of the Lagrange basis polynomials
        let prim = |y: f64, p: f64, q: f64, denom: f64| {
            (y * y * y / 3.0 - 0.5 * (p + q) * y * y + p * q * y) / denom
        };
        let la = |y: f64| prim(y, b, c, (a - b) * (a - c));
        let lb = |y: f64| prim(y, a, c, (b - a) * (b - c));
        let lc = |y: f64| prim(y, a, b, (c - a) * (c - b));
        w[i] += la(hi) - la(lo);
        w[i + 1] += lb(hi) - lb(lo);
        w[i + 2] += lc(hi) - lc(lo);
    };
    let mut i = 0;
    while i + 2 < n {
        add(&mut w, i, x[i], x[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // one interval left: quadratic through the last three nodes
        add(&mut w, n - 3, x[n - 2], x[n - 1]);
    }
    w
}

/// Max relative residual of the Duhamel identity at stored checkpoints.
pub fn verify_mild_residual(outcome: &RunOutcome, cfg: &SolverConfig, checkpoints: &[f64]) -> Result<f64> {
    if outcome.snapshots.len() < 3 {
        return Err(Error::InvalidArgument(
            "trace too sparse: store at least three field snapshots (SolverConfig::store_every)".into(),
        ));
    }
    let stepper = Stepper::new(cfg);
    let engine = &stepper.engine;
    let times: Vec<f64> = outcome.snapshots.iter().map(|s| s.0).collect();
    let u0 = &outcome.snapshots[0].1;
    let u0_hat = engine.forward_real(u0.values());
    let n_hat: Vec<Vec<Complex64>> = outcome
        .snapshots
        .iter()
        .map(|(t, u)| {
            let h = cfg.weight.h(*t);
            let n: Vec<f64> = stepper.source(u.values()).iter().map(|v| h * v).collect();
            engine.forward_real(&n)
        })
        .collect();
    let symbol = cfg.op.symbol();
    let mut worst = 0.0f64;
    for &tc in checkpoints {
        let j = times
            .iter()
            .position(|&t| (t - tc).abs() <= 1e-9 * tc.max(1.0))
            .ok_or_else(|| Error::InvalidArgument(format!("checkpoint {tc} is not a stored snapshot time")))?;
        if j < 2 {
            return Err(Error::InvalidArgument(format!("checkpoint {tc} has too few snapshots before it")));
        }
        let w = quadratic_weights(&times[..=j]);
        let mut acc: Vec<Complex64> = u0_hat.iter().zip(symbol).map(|(c, m)| c * (-tc * m).exp()).collect();
        for (i, wi) in w.iter().enumerate() {
            let lag = tc - times[i];
            for ((a, c), m) in acc.iter_mut().zip(&n_hat[i]).zip(symbol) {
                *a += c * (wi * (-lag * m).exp());
            }
        }
        engine.inverse_inplace(&mut acc);
        let stored = &outcome.snapshots[j].1;
        let scale = stored.sup_norm();
        let diff = acc
            .iter()
            .zip(stored.values())
            .fold(0.0f64, |m, (a, b)| m.max((a.re - b).abs()));
        worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
    }
    Ok(worst)
}

/// Margin `1 - H(tau) / tail(||e^{-tau L} u0||_inf)` along a set of times.
#[derive(Debug, Clone, Serialize)]
pub struct MarginSeries {
    pub times: Vec<f64>,
    pub margins: Vec<f64>,
    /// Reason the monitor was not evaluated.
    pub skipped: Option<String>,
}

impl MarginSeries {
    /// First time the margin becomes negative (linear interpolation), if any.
    pub fn crossing_time(&self) -> Option<f64> {
        for i in 0..self.margins.len() {
            if self.margins[i] < 0.0 {
                if i == 0 {
                    return Some(self.times[0]);
                }
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (m0, m1) = (self.margins[i - 1], self.margins[i]);
                return Some(t0 + (t1 - t0) * m0 / (m0 - m1));
            }
        }
        None
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn margin_at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&x| x == t).map(|i| self.margins[i])
    }
}

/// `||e^{-tau L} u0||_inf` tabulated on a log grid and interpolated by local
/// cubics in log-log coordinates.
pub struct SupTable {
    log_t: Vec<f64>,
    log_v: Vec<f64>,
    sup0: f64,
}

impl SupTable {
    pub fn new(flow: &LinearFlow, t_lo: f64, t_hi: f64, points: usize) -> Result<Self> {
        let ts = if t_hi > t_lo * 1.0001 {
            let n = points.max(4);
            (0..n)
                .map(|k| t_lo * (t_hi / t_lo).powf(k as f64 / (n - 1) as f64))
                .collect::<Vec<f64>>()
        } else {
            vec![t_lo]
        };
        let vals = ts.iter().map(|&t| flow.sup(t)).collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            log_t: ts.iter().map(|t| t.ln()).collect(),
            log_v: vals.iter().map(|v| v.ln()).collect(),
            sup0: flow.sup(0.0)?,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.sup0;
        }
        let n = self.log_t.len();
        if n == 1 {
            return self.log_v[0].exp();
        }
        let x = t.ln();
        let i = match self.log_t.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.log_v[i].exp(),
            Err(i) => i,
        };
        let start = i.saturating_sub(2).min(n.saturating_sub(4));
        let idx: Vec<usize> = (start..(start + 4).min(n)).collect();
        let mut y = 0.0;
        for &a in &idx {
            let mut l = 1.0;
            for &b in &idx {
                if a != b {
                    l *= (x - self.log_t[b]) / (self.log_t[a] - self.log_t[b]);
                }
            }
            y += l * self.log_v[a];
        }
        y.exp()
    }
}

/// Margin series at the trace times from the whole-space linear flow.
pub fn monitor_prop1(trace: &[TracePoint], term: &SourceTerm, weight: &TimeWeight, flow: &LinearFlow) -> Result<MarginSeries> {
    let times: Vec<f64> = trace.iter().map(|p| p.t).collect();
    if term.family == Family::LogConcave {
        return Ok(MarginSeries {
            margins: vec![f64::NAN; times.len()],
            times,
            skipped: Some("Jensen hypothesis not certified for the log-concave family".into()),
        });
    }
    if flow.datum().is_zero() {
        return Err(Error::InvalidArgument("margin monitor needs u0 != 0".into()));
    }
    let positive: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let table = match (positive.first(), positive.last()) {
        (Some(&lo), Some(&hi)) => Some(SupTable::new(flow, lo, hi, 200)?),
        _ => None,
    };
    let margins = times
        .iter()
        .map(|&tau| {
            let sup = match &table {
                Some(tab) if tau > 0.0 => tab.eval(tau),
                _ => flow.sup(0.0)?,
            };
            let product = match osgood_tail(term, sup)?.kind {
                OsgoodKind::Finite(tail) => weight.integral(tau) / tail,
                OsgoodKind::Divergent => 0.0,
            };
            Ok(1.0 - product)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MarginSeries {
        times,
        margins,
        skipped: None,
    })
}

/// `run` followed by the margin monitor for convex families.
pub fn run_with_monitor(cfg: &SolverConfig) -> Result<RunOutcome> {
    let mut out = run(cfg)?;
    if !cfg.initial.is_zero() && cfg.term.family != Family::Zero {
        let flow = LinearFlow::new(cfg.op.s(), cfg.grid.dim(), cfg.initial)?;
        out.monitor = Some(monitor_prop1(&out.trace, &cfg.term, &cfg.weight, &flow)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{operator_symbol, Semigroup};

    fn cfg(grid: Grid, s: f64, term: SourceTerm, datum: InitialDatum, dt: f64, t_max: f64) -> SolverConfig {
        let op = operator_symbol(&grid, s).unwrap();
        SolverConfig::new(op, term, TimeWeight::constant(1.0).unwrap(), datum, dt, 1e-6, t_max)
    }

    #[test]
    fn zero_source_step_is_the_semigroup() {
        let g = Grid::new(1, 40.0, 512).unwrap();
        let c = cfg(g, 0.5, SourceTerm::zero(), InitialDatum::gaussian(1.0, 1.0).unwrap(), 0.5, 10.0);
        let u = c.initial.sample(&g);
        let a = step(&u, 0.0, 0.5, &c).unwrap();
        let b = Semigroup::new(&c.op).apply(&u, 0.5).unwrap().field;
        let d = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(d < 1e-14);
    }

    fn ode_exact(c: f64, p: f64, t: f64) -> f64 {
        (c.powf(1.0 - p) - (p - 1.0) * t).powf(-1.0 / (p - 1.0))
    }

    #[test]
    fn constant_field_matches_scalar_ode_with_third_order_local_error() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let p = 2.0;
        let c0 = 0.5;
        let mk = |dt: f64| {
            let c = cfg(g, 0.5, SourceTerm::power(p).unwrap(), InitialDatum::gaussian(1.0, 1.0).unwrap(), dt, 10.0);
            let mut st = Stepper::new(&SolverConfig { picard_sweeps: 6, ..c });
            let u = RealField::constant(g, c0);
            let v = st.step(&u, 0.0, dt).unwrap().field.values()[0];
            (v - ode_exact(c0, p, dt)).abs()
        };
        let e1 = mk(0.1);
        let e2 = mk(0.05);
        let ratio = e1 / e2;
        assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn zero_datum_is_global_with_zero_trace() {
        let g = Grid::new(1, 40.0, 256).unwrap();
        let c = cfg(g, 0.5, SourceTerm::power(2.0).unwrap(), InitialDatum::gaussian(0.0, 1.0).unwrap(), 0.5, 5.0);
        let out = run(&c).unwrap();
        assert_eq!(out.status, RunStatus::Global { decay_slope: None, window: (2.5, 5.0) });
        assert!(out.trace.iter().all(|p| p.sup_norm == 0.0));
        assert!(out.trace.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn config_validation() {
        let g = Grid::new(1, 40.0, 256).unwrap();
        let mut c = cfg(g, 0.5, SourceTerm::power(2.0).unwrap(), InitialDatum::gaussian(1.0, 1.0).unwrap(), 0.5, 5.0);
        assert!(c.validate().is_ok());
        c.dt_min = 1.0;
        assert!(c.validate().is_err());
        c.dt_min = 1e-6;
        c.picard_sweeps = 1;
        assert!(c.validate().is_err());
        c.picard_sweeps = 2;
        c.blow_threshold = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn large_data_blow_up_and_threshold_insensitivity() {
        let g = Grid::new(1, 64.0, 1024).unwrap();
        let mut c = cfg(g, 0.5, SourceTerm::power(2.0).unwrap(), InitialDatum::gaussian(2.0, 1.0).unwrap(), 0.05, 20.0);
        let a = run(&c).unwrap();
        let ta = a.status.t_burst().expect("blow-up");
        c.blow_threshold = 1e10;
        let tb = run(&c).unwrap().status.t_burst().expect("blow-up");
        assert!(((tb - ta) / ta).abs() < 0.05, "{ta} vs {tb}");
        let last = a.trace.last().unwrap();
        assert!(last.sup_norm >= 1e8 || a.rejected_steps > 0);
    }

    #[test]
    fn determinism_and_comparison() {
        let g = Grid::new(1, 64.0, 512).unwrap();
        let small = cfg(g, 0.5, SourceTerm::power(3.0).unwrap(), InitialDatum::gaussian(0.3, 1.0).unwrap(), 0.25, 10.0);
        let big = SolverConfig {
            initial: InitialDatum::gaussian(0.4, 1.0).unwrap(),
            ..small.clone()
        };
        let a = run(&small).unwrap();
        let b = run(&small).unwrap();
        assert_eq!(a.final_field, b.final_field);
        let c = run(&big).unwrap();
        let scale = c.final_field.sup_norm();
        for (x, y) in a.final_field.values().iter().zip(c.final_field.values()) {
            assert!(*x <= y + 1e-8 * scale);
        }
    }

    #[test]
    fn quadratic_weights_are_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.3, 0.35, 0.7, 1.0];
        for n in 3..=x.len() {
            let w = quadratic_weights(&x[..n]);
            let b = x[n - 1];
            let got: f64 = w.iter().zip(&x[..n]).map(|(w, x)| w * (1.0 + x + x * x)).sum();
            let want = b + b * b / 2.0 + b * b * b / 3.0;
            assert!((got - want).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn mild_residual_linear_probe_and_power() {
        let g = Grid::new(1, 32.0, 256).unwrap();
        let mut lin = cfg(g, 0.5, SourceTerm::zero(), InitialDatum::gaussian(0.5, 1.0).unwrap(), 0.05, 2.0);
        lin.store_every = Some(1);
        let out = run(&lin).unwrap();
        let r = verify_mild_residual(&out, &lin, &[1.0, 2.0]).unwrap();
        assert!(r <= 1e-10, "{r}");

        let mut pw = cfg(g, 0.5, SourceTerm::power(3.0).unwrap(), InitialDatum::gaussian(0.5, 1.0).unwrap(), 0.02, 4.0);
        pw.store_every = Some(1);
        let out = run(&pw).unwrap();
        assert!(out.status.is_global(), "{:?}", out.status);
        let r = verify_mild_residual(&out, &pw, &[1.0, 2.0, 4.0]).unwrap();
        assert!(r <= 1e-4, "{r}");
    }

    #[test]
    fn margin_monitor_trivial_and_refused_cases() {
        let trace: Vec<TracePoint> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| TracePoint { t, sup_norm: 1.0, l1_norm: 1.0, boundary_mass_fraction: 0.0, dt: 1.0, mean: 0.0 })
            .collect();
        let flow = LinearFlow::new(0.5, 1, InitialDatum::gaussian(1.0, 1.0).unwrap()).unwrap();
        let w = TimeWeight::constant(1.0).unwrap();
        let m = monitor_prop1(&trace, &SourceTerm::zero(), &w, &flow).unwrap();
        assert!(m.margins.iter().all(|&v| v == 1.0));
        let m = monitor_prop1(&trace, &SourceTerm::log_concave(2.0).unwrap(), &w, &flow).unwrap();
        assert!(m.skipped.is_some());
    }

    #[test]
    fn subcritical_power_blows_up() {
        let g = Grid::new(1, 512.0, 4096).unwrap();
        let c = cfg(g, 0.5, SourceTerm::power(1.5).unwrap(), InitialDatum::gaussian(0.5, 1.0).unwrap(), 0.5, 200.0);
        let out = run(&c).unwrap();
        assert!(out.status.is_blow_up(), "{:?}", out.status);
        assert!(out.trace.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn supercritical_small_data_decay_like_linear_flow() {
        let g = Grid::new(1, 8192.0, 32768).unwrap();
        let c = cfg(g, 0.5, SourceTerm::power(3.0).unwrap(), InitialDatum::gaussian(0.05, 1.0).unwrap(), 2.0, 500.0);
        let out = run(&c).unwrap();
        let slope = out.status.decay_slope().expect("global with a fit");
        assert!((slope + 1.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn halving_dt_changes_trace_at_second_order() {
        let g = Grid::new(1, 64.0, 512).unwrap();
        let base = cfg(g, 0.5, SourceTerm::power(2.0).unwrap(), InitialDatum::gaussian(0.3, 1.0).unwrap(), 0.4, 4.0);
        let sup_at_end = |dt: f64| {
            let c = SolverConfig { dt_initial: dt, picard_sweeps: 8, ..base.clone() };
            let out = run(&c).unwrap();
            assert_eq!(out.rejected_steps, 0);
            out.trace.last().unwrap().sup_norm
        };
        let (a, b, c) = (sup_at_end(0.4), sup_at_end(0.2), sup_at_end(0.1));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.6, "{ratio}");
    }

    #[test]
    fn sup_table_interpolates_smoothly() {
        let flow = LinearFlow::new(0.5, 1, InitialDatum::gaussian(1.0, 1.0).unwrap()).unwrap();
        let tab = SupTable::new(&flow, 0.1, 100.0, 60).unwrap();
        for t in [0.37, 3.3, 47.0] {
            let want = flow.sup(t).unwrap();
            assert!(((tab.eval(t) - want) / want).abs() < 1e-5);
        }
    }
}
