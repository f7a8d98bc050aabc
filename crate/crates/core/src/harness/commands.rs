//! Drivers behind the `simulate`, `kernel` and `criteria` subcommands.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{num, opt_num, timestamp, Table};
use crate::criteria::{evaluate_criteria, supersolution_check, CriteriaOptions, CriteriaReport, SupersolutionReport, Verdict};
use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::kernel::{
    certify_bounds, check_chapman_kolmogorov, check_normalization, kernel_decay_slope, log_lattice, mixed_kernel_routes,
    symmetry_defect, LinearFlow, ROUTE_TOLERANCE,
};
use crate::nonlinearity::{SourceTerm, TimeWeight};
use crate::solver::{run_with_monitor, RunOutcome, RunStatus};
use crate::spectral::OperatorSpec;

/// Boundary-layer mass fraction above which a run is flagged as feeling the box.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
pub const SUPERSOLUTION_TIMES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

fn status_fields(status: &RunStatus) -> (String, String) {
    match status {
        RunStatus::Global { decay_slope, window } => (
            format!("decay_slope={}", opt_num(*decay_slope)),
            format!("window={}..{}", num(window.0), num(window.1)),
        ),
        RunStatus::BlowUp { t_burst } => (format!("t_burst={}", num(*t_burst)), String::new()),
        RunStatus::Inconclusive { reason } => (format!("reason={reason}"), String::new()),
    }
}

pub fn trace_table(cfg: &ExperimentConfig, out: &RunOutcome) -> Result<Table> {
    let mut t = Table::new(&["t", "sup_norm", "l1_norm", "boundary_mass_fraction", "dt", "prop1_margin"], 1);
    t.meta("generated_at", timestamp());
    t.meta("outcome", out.status.label());
    let (a, b) = status_fields(&out.status);
    t.meta("status", format!("{a} {b}").trim());
    t.meta("steps", out.steps);
    t.meta("rejected_steps", out.rejected_steps);
    t.meta("max_relative_clamp", num(out.max_relative_clamp));
    let bmf = out.trace.iter().map(|p| p.boundary_mass_fraction).fold(0.0, f64::max);
    t.meta("max_boundary_mass_fraction", num(bmf));
    t.meta("boundary_mass_within_limit", bmf <= BOUNDARY_MASS_LIMIT);
    if let Some(m) = &out.monitor {
        t.meta("prop1_crossing_time", opt_num(m.crossing_time()));
        if let Some(why) = &m.skipped {
            t.meta("prop1_skipped", why);
        }
    }
    t.meta("s", cfg.s()?);
    t.meta("dim", cfg.dim()?);
    for (i, p) in out.trace.iter().enumerate() {
        let margin = out.monitor.as_ref().map_or(f64::NAN, |m| m.margins[i]);
        t.push(vec![
            num(p.t),
            num(p.sup_norm),
            num(p.l1_norm),
            num(p.boundary_mass_fraction),
            num(p.dt),
            num(margin),
        ]);
    }
    Ok(t)
}

/// Runs the solver for the configured problem and writes `trace.csv`.
pub fn simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let solver = cfg.solver_config()?;
    let out = run_with_monitor(&solver)?;
    trace_table(cfg, &out)?.write(out_dir, "trace")?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub check: String,
    pub t: f64,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub s: f64,
    pub dim: usize,
    pub checks: Vec<KernelCheck>,
    pub seconds: f64,
}

impl KernelReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs the kernel checks for `(s, N)`.
pub fn kernel_checks(s: f64, dim: usize) -> Result<KernelReport> {
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut record = |check: &str, t: f64, value: f64, tolerance: f64, pass: bool, since: Instant| {
        checks.push(KernelCheck {
            check: check.to_string(),
            t,
            value,
            tolerance,
            pass,
            seconds: since.elapsed().as_secs_f64(),
        });
    };
    let probes = [0.0, 0.5, 1.0, 3.0, 10.0];
    for t in [0.5, 1.0, 2.0] {
        let now = Instant::now();
        let n = check_normalization(s, t, dim)?;
        record("normalization", t, n.error(), 1e-6, !n.inconclusive && n.error() <= 1e-6, now);

        let now = Instant::now();
        let mut worst = 0.0f64;
        for &z in &probes {
            let point = if dim == 1 { vec![z] } else { vec![z, 0.0] };
            worst = worst.max(mixed_kernel_routes(s, t, &point, dim)?.relative);
        }
        record("dual_route", t, worst, ROUTE_TOLERANCE, worst <= ROUTE_TOLERANCE, now);

        if dim == 1 {
            let now = Instant::now();
            let d = symmetry_defect(s, t, &probes[1..])?;
            record("symmetry", t, d, 1e-10, d <= 1e-10, now);
            let now = Instant::now();
            let ck = check_chapman_kolmogorov(s, t, t, &probes[..4])?;
            record("chapman_kolmogorov", t, ck, 1e-6, ck <= 1e-6, now);
        }
    }
    let now = Instant::now();
    let fit = certify_bounds(s, dim)?;
    record("envelope_c0", f64::NAN, fit.c0_fit, f64::NAN, fit.pass_envelope, now);
    record("upper_c", f64::NAN, fit.c_upper, f64::NAN, fit.pass_upper, now);
    record("lower_c_star", f64::NAN, fit.c_star, fit.constructive_c_star, fit.pass_lower, now);

    let now = Instant::now();
    let flow = LinearFlow::new(s, dim, InitialDatum::gaussian(1.0, 1.0)?)?;
    let (_, slope) = kernel_decay_slope(&flow, &log_lattice(20.0, 200.0, 10))?;
    let target = -(dim as f64) / (2.0 * s);
    let slope = slope.unwrap_or(f64::NAN);
    record("decay_slope", f64::NAN, slope, target, ((slope - target) / target).abs() <= 0.1, now);
    Ok(KernelReport {
        s,
        dim,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Kernel certification for the configured `(operator.s, grid.dim)`; writes `kernel.csv`.
pub fn kernel(cfg: &ExperimentConfig, out_dir: &Path) -> Result<KernelReport> {
    let report = kernel_checks(cfg.s()?, cfg.dim()?)?;
    let mut t = Table::new(&["check", "t", "value", "tolerance", "pass", "seconds"], 2);
    t.meta("generated_at", timestamp());
    t.meta("s", report.s);
    t.meta("dim", report.dim);
    t.meta("all_pass", report.all_pass());
    t.meta("total_seconds", format!("{:.3}", report.seconds));
    for c in &report.checks {
        t.push(vec![
            c.check.clone(),
            num(c.t),
            num(c.value),
            num(c.tolerance),
            c.pass.to_string(),
            format!("{:.3}", c.seconds),
        ]);
    }
    t.write(out_dir, "kernel")?;
    Ok(report)
}

/// `w = (1 + beta) e^{-tL} u0` checked for the datum itself (`v0 = (1 + beta) u0`, `delta = 1/(1 + beta)`).
pub fn datum_supersolution(
    op: &OperatorSpec,
    datum: &InitialDatum,
    beta: f64,
    term: &SourceTerm,
    weight: &TimeWeight,
) -> Result<SupersolutionReport> {
    let v0 = datum.scaled(1.0 + beta).sample(op.grid());
    supersolution_check(&v0, beta, 1.0 / (1.0 + beta), op, term, weight, &SUPERSOLUTION_TIMES)
}

#[derive(Debug, Clone)]
pub struct CriteriaRun {
    pub report: CriteriaReport,
    pub supersolution: Option<SupersolutionReport>,
    pub c_star: f64,
}

/// Criteria for the configured datum; writes `criteria.csv` and `criteria.txt`.
pub fn criteria(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CriteriaRun> {
    let s = cfg.s()?;
    let dim = cfg.dim()?;
    let term = cfg.source_term()?;
    let weight = cfg.weight()?;
    let datum = cfg.initial()?;
    let flow = LinearFlow::new(s, dim, datum)?;
    let fit = certify_bounds(s, dim)?;
    let opts = CriteriaOptions {
        c_star: Some(fit.c_star),
        ..Default::default()
    };
    let report = evaluate_criteria(&flow, &term, &weight, &opts)?;
    let supersolution = match (report.verdict, report.datum_beta, cfg.grid.is_some()) {
        (Verdict::PredictGlobal, Some(beta), true) => {
            let grid = cfg.grid()?;
            Some(datum_supersolution(&cfg.operator(&grid)?, &datum, beta, &term, &weight)?)
        }
        _ => None,
    };

    let mut t = Table::new(
        &[
            "verdict",
            "global_integral_value",
            "head",
            "tail",
            "tail_method",
            "beta",
            "delta",
            "datum_beta",
            "kappa_witness",
            "critical_exponent",
            "supersolution_max_relative_violation",
            "supersolution_pass",
        ],
        1,
    );
    t.meta("generated_at", timestamp());
    t.meta("s", s);
    t.meta("dim", dim);
    t.meta("family", term.family.as_str());
    t.meta("p", term.p);
    t.meta("weight", weight.family_str());
    t.meta("rho", weight.rho());
    t.meta("c_star", num(fit.c_star));
    for n in &report.notes {
        t.meta("note", n);
    }
    t.push(vec![
        report.verdict.as_str().into(),
        num(report.global_integral_value),
        num(report.head),
        num(report.tail),
        report.tail_method.as_str().into(),
        opt_num(report.beta),
        opt_num(report.delta),
        opt_num(report.datum_beta),
        opt_num(report.kappa_witness),
        num(report.critical_exponent),
        opt_num(supersolution.as_ref().map(|r| r.max_relative_violation)),
        supersolution.as_ref().map_or(String::new(), |r| r.passes.to_string()),
    ]);
    t.write(out_dir, "criteria")?;
    let mut text = report.to_string();
    if let Some(r) = &supersolution {
        text.push_str(&format!(
            "supersolution check:   max relative violation {:.3e} ({})\n",
            r.max_relative_violation,
            if r.passes { "pass" } else { "fail" }
        ));
    }
    std::fs::write(out_dir.join("criteria.txt"), &text).map_err(|e| Error::Io(e.to_string()))?;
    Ok(CriteriaRun {
        report,
        supersolution,
        c_star: fit.c_star,
    })
}
