//! Certificates for the global/nonglobal dichotomy: the global-existence
//! integral with constructive `(beta, delta)`, the supersolution check on the
//! torus, and the nonglobal witness `kappa`.
//!
//! Sup-norms of the linear flow come from the whole-space kernel route
//! (`LinearFlow`), never from the torus.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{fractional_kernel, log_lattice, LinearFlow};
use crate::nonlinearity::{osgood_tail, Family, SourceTerm, TimeWeight};
use crate::quadrature::{composite_gauss, geometric_breakpoints};
use crate::spectral::{OperatorSpec, RealField, Semigroup};

/// `1 + 2 s (rho + 1) / N`.
pub fn critical_exponent(s: f64, dim: usize, rho: f64) -> f64 {
    1.0 + 2.0 * s * (rho + 1.0) / dim as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailMethod {
    Numeric,
    Asymptotic,
}

impl TailMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMethod::Numeric => "numeric",
            TailMethod::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlobalValue {
    pub head: f64,
    pub tail: f64,
    pub value: f64,
    pub tail_method: TailMethod,
}

/// `sigma -> ||e^{-sigma L} v0||_inf` tabulated at the head quadrature nodes,
/// so the integral can be re-evaluated for any multiple `lambda v0` (the sup
/// scales linearly).
#[derive(Debug, Clone)]
pub struct GlobalIntegral {
    nodes: Vec<(f64, f64)>,
    sups: Vec<f64>,
    weight: TimeWeight,
    t_split: f64,
    dim: usize,
    s: f64,
    mass: f64,
    sup0: f64,
    envelope: f64,
}

impl GlobalIntegral {
    pub fn new(flow: &LinearFlow, weight: &TimeWeight, t_split: f64) -> Result<Self> {
        Self::with_density(flow, weight, t_split, 6)
    }

    pub fn with_density(flow: &LinearFlow, weight: &TimeWeight, t_split: f64, per_decade: usize) -> Result<Self> {
        if !(t_split > 0.0 && t_split.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_split must be positive, got {t_split}")));
        }
        if flow.datum().is_zero() {
            return Err(Error::InvalidArgument("global integral needs v0 != 0".into()));
        }
        let mut edges = vec![0.0];
        edges.extend(geometric_breakpoints(t_split * 1e-7, t_split, per_decade));
        let nodes = composite_gauss(&edges);
        let sups = nodes.iter().map(|&(x, _)| flow.sup(x)).collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            nodes,
            sups,
            weight: *weight,
            t_split,
            dim: flow.dim(),
            s: flow.s(),
            mass: flow.datum().mass(flow.dim()),
            sup0: flow.datum().sup(),
            // p_t(0) <= h_t(0) = t^{-N/(2s)} h_1(0) since m(xi) >= |xi|^{2s}
            envelope: fractional_kernel(flow.s(), 1.0, 0.0, flow.dim())?,
        })
    }

    pub fn t_split(&self) -> f64 {
        self.t_split
    }

    /// Sup-norm of the datum the table was built for.
    pub fn datum_sup(&self) -> f64 {
        self.sup0
    }

    /// Value of the global-existence integral for `lambda v0`.
    pub fn value(&self, term: &SourceTerm, lambda: f64) -> Result<GlobalValue> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {lambda}")));
        }
        if lambda * self.sup0 > term.monotone_interval_m {
            return Err(Error::Hypothesis(format!(
                "sup of the datum {} exceeds the monotone interval m = {}",
                lambda * self.sup0,
                term.monotone_interval_m
            )));
        }
        let head: f64 = self
            .nodes
            .iter()
            .zip(&self.sups)
            .map(|(&(x, w), &v)| w * self.weight.h(x) * term.ratio(lambda * v))
            .sum();
        let rho = self.weight.rho();
        let a_exp = |p: f64| self.dim as f64 * (p - 1.0) / (2.0 * self.s);
        let env_at_split = self.envelope * lambda * self.mass * self.t_split.powf(-(self.dim as f64) / (2.0 * self.s));
        let (tail, method) = match term.family {
            Family::Zero => (0.0, TailMethod::Numeric),
            Family::Linear => (f64::INFINITY, TailMethod::Asymptotic),
            Family::Power | Family::LogConvex | Family::LogConcave => {
                // ratio(u) <= K u^{p-1} on the range of the envelope beyond t_split
                let k = match term.family {
                    Family::LogConvex => 1.0 + env_at_split,
                    _ => 1.0,
                };
                let a = a_exp(term.p);
                if a <= rho + 1.0 {
                    (f64::INFINITY, TailMethod::Asymptotic)
                } else {
                    let c0 = self.envelope * lambda * self.mass;
                    let tail = self.weight.c() * k * c0.powf(term.p - 1.0) * self.t_split.powf(rho + 1.0 - a) / (a - rho - 1.0);
                    (tail, TailMethod::Asymptotic)
                }
            }
        };
        Ok(GlobalValue {
            head,
            tail,
            value: head + tail,
            tail_method: method,
        })
    }
}

/// Head quadrature plus analytic tail bound of `int_0^inf h f(S)/S`, `S = ||e^{-sigma L} v0||_inf`.
pub fn global_condition_value(flow: &LinearFlow, term: &SourceTerm, weight: &TimeWeight, t_split: f64) -> Result<GlobalValue> {
    GlobalIntegral::new(flow, weight, t_split)?.value(term, 1.0)
}

pub const BETA_STEP: f64 = 0.01;

/// Smallest lattice `beta` with `value < beta / (beta + 1)`, and the matching `delta`.
pub fn constructive_constants(value: f64, v0_sup: f64, term: &SourceTerm) -> Result<(f64, f64)> {
    if !(value >= 0.0 && value < 1.0) {
        return Err(Error::Hypothesis(format!("no constants: global integral value {value} is not below 1")));
    }
    let ok = |k: u64| {
        let beta = k as f64 * BETA_STEP;
        value < beta / (beta + 1.0)
    };
    let mut k = ((value / (1.0 - value)) / BETA_STEP).floor().max(1.0) as u64;
    while k > 1 && ok(k - 1) {
        k -= 1;
    }
    while !ok(k) {
        k += 1;
    }
    let beta = k as f64 * BETA_STEP;
    let mut delta = 1.0 / (beta + 1.0);
    if v0_sup > 0.0 {
        delta = delta.min(term.monotone_interval_m / ((beta + 1.0) * v0_sup));
    }
    Ok((beta, delta))
}

/// Smallest `beta` on a log lattice for which `v0 = (1 + beta) u0` satisfies
/// `value(v0) < beta / (beta + 1)`; then `delta = 1/(1+beta)` returns `u0` itself.
pub fn certify_datum(table: &GlobalIntegral, term: &SourceTerm) -> Result<Option<f64>> {
    for beta in log_lattice(1e-2, 1e2, 20) {
        let lambda = 1.0 + beta;
        if lambda * table.datum_sup() > term.monotone_interval_m {
            break;
        }
        let v = table.value(term, lambda)?.value;
        if v < beta / (beta + 1.0) {
            return Ok(Some(beta));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionReport {
    pub times: Vec<f64>,
    /// `max (F[w](t) - w(t))` at each time.
    pub violations: Vec<f64>,
    /// `sup w(t)` at each time.
    pub scales: Vec<f64>,
    pub max_relative_violation: f64,
    pub passes: bool,
}

pub const SUPERSOLUTION_TOL: f64 = 1e-8;

/// Checks `F[w] <= w` for `w(t) = (1 + beta) e^{-tL} (delta v0)` on the torus.
pub fn supersolution_check(
    v0: &RealField,
    beta: f64,
    delta: f64,
    op: &OperatorSpec,
    term: &SourceTerm,
    weight: &TimeWeight,
    sample_times: &[f64],
) -> Result<SupersolutionReport> {
    if !(beta > 0.0 && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("need beta > 0 and delta in (0, 1], got {beta}, {delta}")));
    }
    if sample_times.iter().any(|&t| !(t > 0.0)) || sample_times.is_empty() {
        return Err(Error::InvalidArgument("sample times must be positive".into()));
    }
    let sg = Semigroup::new(op);
    let engine = sg.engine();
    let symbol = op.symbol();
    let lift = 1.0 + beta;
    let u0_hat = engine.forward_real(v0.scaled(delta).values());
    let t_end = sample_times.iter().copied().fold(0.0, f64::max);

    let mut edges = vec![0.0];
    edges.extend(geometric_breakpoints(t_end * 1e-6, t_end, 6));
    edges.extend_from_slice(sample_times);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_end);

    // acc_i = e^{-t_i L} u0_hat + sum_j w_j e^{-(t_i - sigma_j) L} (h f(w))^hat(sigma_j)
    let mut acc: Vec<Vec<Complex64>> = sample_times
        .iter()
        .map(|&t| u0_hat.iter().zip(symbol).map(|(c, m)| c * (-t * m).exp()).collect())
        .collect();
    for panel in edges.windows(2) {
        for (sigma, w) in crate::quadrature::gauss_legendre_10(panel[0], panel[1]) {
            let mut buf: Vec<Complex64> = u0_hat.iter().zip(symbol).map(|(c, m)| c * (-sigma * m).exp()).collect();
            engine.inverse_inplace(&mut buf);
            let h = weight.h(sigma);
            let g: Vec<f64> = buf.iter().map(|c| h * term.f((lift * c.re).max(0.0))).collect();
            let g_hat = engine.forward_real(&g);
            for (a, &t) in acc.iter_mut().zip(sample_times) {
                if sigma < t {
                    for ((x, c), m) in a.iter_mut().zip(&g_hat).zip(symbol) {
                        *x += c * (w * (-(t - sigma) * m).exp());
                    }
                }
            }
        }
    }

    let mut violations = Vec::new();
    let mut scales = Vec::new();
    let mut worst = 0.0f64;
    for (mut a, &t) in acc.into_iter().zip(sample_times) {
        engine.inverse_inplace(&mut a);
        let mut wbar: Vec<Complex64> = u0_hat.iter().zip(symbol).map(|(c, m)| c * (lift * (-t * m).exp())).collect();
        engine.inverse_inplace(&mut wbar);
        let viol = a.iter().zip(&wbar).fold(f64::NEG_INFINITY, |m, (f, w)| m.max(f.re - w.re));
        let scale = wbar.iter().fold(0.0f64, |m, w| m.max(w.re.abs()));
        if scale > 0.0 {
            worst = worst.max(viol / scale);
        } else {
            worst = worst.max(viol.max(0.0));
        }
        violations.push(viol);
        scales.push(scale);
    }
    Ok(SupersolutionReport {
        times: sample_times.to_vec(),
        violations,
        scales,
        max_relative_violation: worst,
        passes: worst <= SUPERSOLUTION_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonglobalReport {
    pub kappa: Option<f64>,
    /// Set when the hypotheses are not certified and the scan was not run.
    pub refused: Option<String>,
    /// Scanned `kappa > 1` at which the lower bound `C* kappa^{-N/(2s)} int_{|y|<sqrt(kappa)/2} u0` was compared.
    pub lower_bound_checks: usize,
    pub lower_bound_violations: usize,
}

pub const KAPPA_RANGE: (f64, f64) = (1e-2, 1e6);
pub const KAPPA_POINTS: usize = 200;

pub fn kappa_grid() -> Vec<f64> {
    let (lo, hi) = KAPPA_RANGE;
    (0..KAPPA_POINTS)
        .map(|k| lo * (hi / lo).powf(k as f64 / (KAPPA_POINTS - 1) as f64))
        .collect()
}

/// First `kappa` with `int_{||e^{-kappa L} u0||}^inf 1/f <= int_0^kappa h`.
pub fn nonglobal_condition(
    flow: &LinearFlow,
    term: &SourceTerm,
    weight: &TimeWeight,
    kappa_grid: &[f64],
    c_star: Option<f64>,
) -> Result<NonglobalReport> {
    let refuse = |why: &str| NonglobalReport {
        kappa: None,
        refused: Some(why.to_string()),
        lower_bound_checks: 0,
        lower_bound_violations: 0,
    };
    match term.family {
        Family::LogConcave => return Ok(refuse("Jensen hypothesis not certified")),
        Family::Zero | Family::Linear => return Ok(refuse("Osgood integral diverges")),
        Family::Power | Family::LogConvex => {}
    }
    if flow.datum().is_zero() {
        return Err(Error::InvalidArgument("nonglobal condition needs u0 != 0".into()));
    }
    let exponent = flow.dim() as f64 / (2.0 * flow.s());
    let mut checks = 0;
    let mut bad = 0;
    let gap = |kappa: f64, checks: &mut usize, bad: &mut usize| -> Result<f64> {
        let sup = flow.sup(kappa)?;
        if let (Some(c), true) = (c_star, kappa > 1.0) {
            let lower = c * kappa.powf(-exponent) * flow.mass_in_ball(0.5 * kappa.sqrt())?;
            *checks += 1;
            if sup < lower * (1.0 - 1e-9) {
                *bad += 1;
            }
        }
        let lhs = osgood_tail(term, sup)?.value().unwrap_or(f64::INFINITY);
        Ok(lhs - weight.integral(kappa))
    };
    let mut prev: Option<f64> = None;
    let mut kappa = None;
    for &k in kappa_grid {
        if gap(k, &mut checks, &mut bad)? <= 0.0 {
            let Some(lo0) = prev else {
                kappa = Some(k);
                break;
            };
            let (mut lo, mut hi) = (lo0.ln(), k.ln());
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if gap(mid.exp(), &mut 0, &mut 0)? <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            kappa = Some(hi.exp());
            break;
        }
        prev = Some(k);
    }
    Ok(NonglobalReport {
        kappa,
        refused: None,
        lower_bound_checks: checks,
        lower_bound_violations: bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    PredictGlobal,
    PredictNonglobal,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::PredictGlobal => "PredictGlobal",
            Verdict::PredictNonglobal => "PredictNonglobal",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CriteriaOptions {
    pub t_split: f64,
    /// Lower-bound constant used to cross-check the kappa scan.
    pub c_star: Option<f64>,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self {
            t_split: 100.0,
            c_star: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    pub global_integral_value: f64,
    pub head: f64,
    pub tail: f64,
    pub tail_method: TailMethod,
    /// Constants certifying `delta u0` (from the value of `u0` itself).
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    /// `beta` for which `(1 + beta) u0` passes, certifying `u0` itself.
    pub datum_beta: Option<f64>,
    pub kappa_witness: Option<f64>,
    pub verdict: Verdict,
    pub critical_exponent: f64,
    pub notes: Vec<String>,
}

impl CriteriaReport {
    pub const CSV_HEADER: &'static str =
        "global_integral_value,head,tail,tail_method,beta,delta,datum_beta,kappa_witness,verdict,critical_exponent,notes";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.10e}"));
        format!(
            "{:.10e},{:.10e},{:.10e},{},{},{},{},{},{},{},\"{}\"",
            self.global_integral_value,
            self.head,
            self.tail,
            self.tail_method.as_str(),
            opt(self.beta),
            opt(self.delta),
            opt(self.datum_beta),
            opt(self.kappa_witness),
            self.verdict.as_str(),
            self.critical_exponent,
            self.notes.join("; ").replace('"', "'")
        )
    }
}

impl fmt::Display for CriteriaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.6}"));
        writeln!(f, "verdict:               {}", self.verdict.as_str())?;
        writeln!(f, "critical exponent:     {:.6}", self.critical_exponent)?;
        writeln!(
            f,
            "global integral:       {:.6e} (head {:.6e}, tail {:.6e}, {})",
            self.global_integral_value,
            self.head,
            self.tail,
            self.tail_method.as_str()
        )?;
        writeln!(f, "beta, delta:           {}, {}", opt(self.beta), opt(self.delta))?;
        writeln!(f, "datum certified with:  beta = {}", opt(self.datum_beta))?;
        writeln!(f, "kappa witness:         {}", opt(self.kappa_witness))?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Both certificates for the datum of `flow`.
pub fn evaluate_criteria(flow: &LinearFlow, term: &SourceTerm, weight: &TimeWeight, opts: &CriteriaOptions) -> Result<CriteriaReport> {
    let p_c = critical_exponent(flow.s(), flow.dim(), weight.rho());
    let mut notes = Vec::new();
    let mut report = CriteriaReport {
        global_integral_value: f64::NAN,
        head: f64::NAN,
        tail: f64::NAN,
        tail_method: TailMethod::Asymptotic,
        beta: None,
        delta: None,
        datum_beta: None,
        kappa_witness: None,
        verdict: Verdict::Indeterminate,
        critical_exponent: p_c,
        notes: Vec::new(),
    };
    if flow.datum().is_zero() {
        report.notes.push("zero datum: the zero function is the global solution".into());
        return Ok(report);
    }
    let power_like = matches!(term.family, Family::Power | Family::LogConvex);
    if power_like && (term.p - p_c).abs() <= 1e-12 {
        if weight.rho() > 0.0 {
            report.notes.push("p equals the critical exponent with rho > 0: not covered by strict inequalities".into());
            return Ok(report);
        }
        notes.push("p equals the critical exponent; blow-up for h = const is known from an external result".into());
    }

    let table = GlobalIntegral::new(flow, weight, opts.t_split)?;
    match table.value(term, 1.0) {
        Ok(g) => {
            report.global_integral_value = g.value;
            report.head = g.head;
            report.tail = g.tail;
            report.tail_method = g.tail_method;
            if g.value < 1.0 {
                let (b, d) = constructive_constants(g.value, table.datum_sup(), term)?;
                report.beta = Some(b);
                report.delta = Some(d);
                report.datum_beta = certify_datum(&table, term)?;
                if report.datum_beta.is_none() {
                    notes.push("integral below 1 but the datum itself is not certified; delta u0 is".into());
                }
            }
        }
        Err(Error::Hypothesis(why)) => notes.push(why),
        Err(e) => return Err(e),
    }

    let ng = nonglobal_condition(flow, term, weight, &kappa_grid(), opts.c_star)?;
    if let Some(why) = &ng.refused {
        notes.push(format!("nonglobal branch refused: {why}"));
    }
    if ng.lower_bound_violations > 0 {
        notes.push(format!(
            "kernel lower bound violated at {} of {} scanned kappa",
            ng.lower_bound_violations, ng.lower_bound_checks
        ));
    }
    report.kappa_witness = ng.kappa;
    report.verdict = match (report.datum_beta.is_some(), report.kappa_witness.is_some()) {
        (true, false) => Verdict::PredictGlobal,
        (false, true) => Verdict::PredictNonglobal,
        (true, true) => {
            notes.push("both certificates issued; reported as indeterminate".into());
            Verdict::Indeterminate
        }
        (false, false) => Verdict::Indeterminate,
    };
    report.notes = notes;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::InitialDatum;
    use crate::quadrature::Quadrature;
    use crate::spectral::{operator_symbol, Grid};

    fn flow(datum: InitialDatum) -> LinearFlow {
        LinearFlow::new(0.5, 1, datum).unwrap()
    }

    #[test]
    fn critical_exponent_examples() {
        assert_eq!(critical_exponent(0.5, 1, 0.0), 2.0);
        assert_eq!(critical_exponent(0.5, 1, 1.0), 3.0);
        assert_eq!(critical_exponent(0.75, 2, 1.0), 2.5);
    }

    #[test]
    fn constructive_constants_examples() {
        let inf = SourceTerm::power(2.0).unwrap();
        let (b, _) = constructive_constants(0.5, 1.0, &inf).unwrap();
        assert!((b - 1.01).abs() < 1e-12);
        let (b, _) = constructive_constants(0.0, 1.0, &inf).unwrap();
        assert!((b - BETA_STEP).abs() < 1e-15);
        let (b, d) = constructive_constants(0.9, 1.0, &inf).unwrap();
        assert!((b - 9.01).abs() < 1e-12);
        assert!((d - 1.0 / 10.01).abs() < 1e-12);
        assert!(constructive_constants(1.0, 1.0, &inf).is_err());
    }

    #[test]
    fn subcritical_tail_diverges() {
        let g = global_condition_value(
            &flow(InitialDatum::gaussian(1e-3, 1.0).unwrap()),
            &SourceTerm::power(1.5).unwrap(),
            &TimeWeight::constant(1.0).unwrap(),
            100.0,
        )
        .unwrap();
        assert_eq!(g.value, f64::INFINITY);
    }

    #[test]
    fn supercritical_small_data_value_below_one_and_scaling() {
        let term = SourceTerm::power(3.0).unwrap();
        let w = TimeWeight::constant(1.0).unwrap();
        let table = GlobalIntegral::new(&flow(InitialDatum::gaussian(0.05, 1.0).unwrap()), &w, 100.0).unwrap();
        let v1 = table.value(&term, 1.0).unwrap().value;
        assert!(v1 < 1.0, "{v1}");
        let v01 = table.value(&term, 0.1).unwrap().value;
        let v001 = table.value(&term, 0.01).unwrap().value;
        // f(s)/s = s^2: exact quadratic scaling
        assert!((v01 / v1 - 1e-2).abs() < 1e-12 && (v001 / v1 - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn head_quadrature_matches_adaptive_reference() {
        let term = SourceTerm::power(3.0).unwrap();
        let w = TimeWeight::constant(1.0).unwrap();
        let fl = flow(InitialDatum::gaussian(0.5, 1.0).unwrap());
        let head = GlobalIntegral::new(&fl, &w, 10.0).unwrap().value(&term, 1.0).unwrap().head;
        let q = Quadrature::new(1e-12, 1e-10);
        let r = q.integrate_breakpoints(
            |x: f64| term.ratio(fl.sup(x).unwrap()),
            &[0.0, 0.01, 0.1, 1.0, 10.0],
        );
        assert!(((head - r.value) / r.value).abs() < 1e-8, "{head} vs {}", r.value);
    }

    #[test]
    fn tail_bound_dominates_the_true_tail() {
        let term = SourceTerm::power(3.0).unwrap();
        let w = TimeWeight::constant(1.0).unwrap();
        let fl = flow(InitialDatum::gaussian(0.5, 1.0).unwrap());
        let short = GlobalIntegral::new(&fl, &w, 10.0).unwrap().value(&term, 1.0).unwrap();
        let long = GlobalIntegral::new(&fl, &w, 1000.0).unwrap().value(&term, 1.0).unwrap();
        assert!(short.value >= long.value * (1.0 - 1e-9));
        assert!((short.value - long.value) / long.value < 0.05);
    }

    #[test]
    fn monotone_in_amplitude() {
        let w = TimeWeight::constant(1.0).unwrap();
        for term in [SourceTerm::power(3.0).unwrap(), SourceTerm::log_convex(3.0).unwrap()] {
            let table = GlobalIntegral::new(&flow(InitialDatum::gaussian(0.1, 1.0).unwrap()), &w, 100.0).unwrap();
            let vals: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&l| table.value(&term, l).unwrap().value).collect();
            assert!(vals.windows(2).all(|p| p[1] >= p[0]));
        }
    }

    fn torus_setup() -> (Grid, OperatorSpec) {
        let g = Grid::new(1, 1024.0, 4096).unwrap();
        (g, operator_symbol(&g, 0.5).unwrap())
    }

    #[test]
    fn supersolution_trivial_cases() {
        let (g, op) = torus_setup();
        let w = TimeWeight::constant(1.0).unwrap();
        let zero = RealField::zeros(g);
        let r = supersolution_check(&zero, 0.5, 0.5, &op, &SourceTerm::power(3.0).unwrap(), &w, &[1.0]).unwrap();
        assert_eq!(r.violations[0], 0.0);
        let v0 = InitialDatum::gaussian(1.0, 1.0).unwrap().sample(&g);
        let r = supersolution_check(&v0, 0.5, 1.0, &op, &SourceTerm::zero(), &w, &[0.1, 1.0, 10.0]).unwrap();
        assert!(r.passes);
        // F[w] = w / (1 + beta) exactly, so the largest difference is at the far field
        for (v, s) in r.violations.iter().zip(&r.scales) {
            assert!(*v <= 1e-15 * s);
        }
    }

    #[test]
    fn certified_power_constants_give_a_supersolution() {
        let (g, op) = torus_setup();
        let term = SourceTerm::power(3.0).unwrap();
        let w = TimeWeight::constant(1.0).unwrap();
        let datum = InitialDatum::gaussian(0.5, 1.0).unwrap();
        let value = global_condition_value(&flow(datum), &term, &w, 100.0).unwrap().value;
        let (beta, delta) = constructive_constants(value, datum.sup(), &term).unwrap();
        let r = supersolution_check(&datum.sample(&g), beta, delta, &op, &term, &w, &[0.1, 1.0, 10.0, 100.0]).unwrap();
        assert!(r.passes, "{:?}", r.violations);
    }

    #[test]
    fn kappa_examples() {
        let term = SourceTerm::power(1.5).unwrap();
        let ind = flow(InitialDatum::indicator(1.0, 1.0).unwrap());
        let grid = kappa_grid();
        let a = nonglobal_condition(&ind, &term, &TimeWeight::constant(1.0).unwrap(), &grid, None).unwrap();
        let b = nonglobal_condition(&ind, &term, &TimeWeight::power_law(1.0, 1.0).unwrap(), &grid, None).unwrap();
        let (ka, kb) = (a.kappa.unwrap(), b.kappa.unwrap());
        assert!(kb < ka, "{kb} vs {ka}");

        let tiny = flow(InitialDatum::gaussian(1e-3, 1.0).unwrap());
        let c = nonglobal_condition(&tiny, &SourceTerm::power(3.0).unwrap(), &TimeWeight::constant(1.0).unwrap(), &grid, None).unwrap();
        assert_eq!(c.kappa, None);

        let d = nonglobal_condition(&tiny, &SourceTerm::log_concave(2.0).unwrap(), &TimeWeight::constant(1.0).unwrap(), &grid, None).unwrap();
        assert_eq!(d.refused.as_deref(), Some("Jensen hypothesis not certified"));
    }

    #[test]
    fn verdicts() {
        let w = TimeWeight::constant(1.0).unwrap();
        let opts = CriteriaOptions::default();
        let small = flow(InitialDatum::gaussian(0.05, 1.0).unwrap());
        let r = evaluate_criteria(&small, &SourceTerm::power(3.0).unwrap(), &w, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::PredictGlobal, "{r}");
        assert!(r.beta.is_some() && r.delta.is_some());
        let r = evaluate_criteria(&small, &SourceTerm::power(1.5).unwrap(), &w, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::PredictNonglobal, "{r}");
        let r = evaluate_criteria(&small, &SourceTerm::log_concave(2.0).unwrap(), &w, &opts).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("Jensen hypothesis not certified")));
        assert_ne!(r.verdict, Verdict::PredictNonglobal);
        let r = evaluate_criteria(&small, &SourceTerm::power(3.0).unwrap(), &TimeWeight::power_law(1.0, 1.0).unwrap(), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
    }
}
