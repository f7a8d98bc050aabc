//! The `(p, amplitude)` sweep: criteria and simulation per row, cross-tabulated
//! into an empirical critical exponent.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::commands::{datum_supersolution, BOUNDARY_MASS_LIMIT};
use super::config::ExperimentConfig;
use super::output::{num, opt_num, timestamp, Table};
use crate::criteria::{critical_exponent, evaluate_criteria, CriteriaOptions, Verdict};
use crate::error::{Error, Result};
use crate::kernel::{certify_bounds, LinearFlow};
use crate::solver::{run_with_monitor, RunStatus};

/// Subcritical rows with `p_c - NEAR_CRITICAL_BAND <= p < p_c` run with amplitudes
/// multiplied by `NEAR_CRITICAL_FACTOR`; small-data blow-up there is far beyond any horizon.
pub const NEAR_CRITICAL_BAND: f64 = 0.15;
pub const NEAR_CRITICAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: f64,
    /// Amplitude as listed in the config.
    pub amplitude: f64,
    /// Amplitude actually simulated.
    pub amplitude_used: f64,
    pub outcome: String,
    pub t_burst: Option<f64>,
    pub decay_slope: Option<f64>,
    pub verdict: Option<Verdict>,
    pub kappa_witness: Option<f64>,
    pub datum_beta: Option<f64>,
    pub supersolution_violation: Option<f64>,
    pub supersolution_pass: Option<bool>,
    pub prop1_crossing_time: Option<f64>,
    pub prop1_min_margin: Option<f64>,
    pub max_relative_clamp: Option<f64>,
    pub max_boundary_mass_fraction: Option<f64>,
    pub concordant: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(p: f64, amplitude: f64, amplitude_used: f64) -> Self {
        Self {
            p,
            amplitude,
            amplitude_used,
            outcome: "Error".into(),
            t_burst: None,
            decay_slope: None,
            verdict: None,
            kappa_witness: None,
            datum_beta: None,
            supersolution_violation: None,
            supersolution_pass: None,
            prop1_crossing_time: None,
            prop1_min_margin: None,
            max_relative_clamp: None,
            max_boundary_mass_fraction: None,
            concordant: true,
            error: None,
        }
    }

    pub fn is_blow_up(&self) -> bool {
        self.outcome == "BlowUp"
    }
    pub fn is_global(&self) -> bool {
        self.outcome == "Global"
    }

    /// `t_burst` for blow-up rows, the decay slope for global rows.
    pub fn t_burst_or_decay_slope(&self) -> Option<f64> {
        self.t_burst.or(self.decay_slope)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub critical_exponent: f64,
    /// Largest `p` blowing up and smallest `p` global, both at the smallest amplitude.
    pub bracket: (Option<f64>, Option<f64>),
    pub p_hat: Option<f64>,
    pub p_hat_in_range: bool,
    pub c_star: f64,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl SweepReport {
    pub fn discordant_rows(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| !r.concordant).collect()
    }
}

fn run_row(cfg: &ExperimentConfig, p: f64, amplitude: f64, p_c: f64, c_star: f64) -> SweepRow {
    let used = if p >= p_c - NEAR_CRITICAL_BAND && p < p_c {
        amplitude * NEAR_CRITICAL_FACTOR
    } else {
        amplitude
    };
    let mut row = SweepRow::empty(p, amplitude, used);
    if let Err(e) = fill_row(cfg, &mut row, c_star) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(cfg: &ExperimentConfig, row: &mut SweepRow, c_star: f64) -> Result<()> {
    let term = cfg.source_term_with(row.p)?;
    let datum = cfg.initial_with(row.amplitude_used)?;
    let weight = cfg.weight()?;
    let solver = cfg.solver_config_with(term, datum)?;

    let flow = LinearFlow::new(cfg.s()?, cfg.dim()?, datum)?;
    let opts = CriteriaOptions {
        c_star: Some(c_star),
        ..Default::default()
    };
    let crit = evaluate_criteria(&flow, &term, &weight, &opts)?;
    row.verdict = Some(crit.verdict);
    row.kappa_witness = crit.kappa_witness;
    row.datum_beta = crit.datum_beta;
    if let (Verdict::PredictGlobal, Some(beta)) = (crit.verdict, crit.datum_beta) {
        let sup = datum_supersolution(&solver.op, &datum, beta, &term, &weight)?;
        row.supersolution_violation = Some(sup.max_relative_violation);
        row.supersolution_pass = Some(sup.passes);
    }

    let out = run_with_monitor(&solver)?;
    row.outcome = out.status.label().to_string();
    match &out.status {
        RunStatus::BlowUp { t_burst } => row.t_burst = Some(*t_burst),
        RunStatus::Global { decay_slope, .. } => row.decay_slope = *decay_slope,
        RunStatus::Inconclusive { .. } => {}
    }
    if let Some(m) = &out.monitor {
        if m.skipped.is_none() {
            row.prop1_crossing_time = m.crossing_time();
            row.prop1_min_margin = Some(m.min_margin());
        }
    }
    row.max_relative_clamp = Some(out.max_relative_clamp);
    row.max_boundary_mass_fraction = Some(out.trace.iter().map(|p| p.boundary_mass_fraction).fold(0.0, f64::max));

    let global_cert = crit.verdict == Verdict::PredictGlobal;
    row.concordant = !(global_cert && out.status.is_blow_up())
        && !(crit.kappa_witness.is_some() && out.status.is_global())
        && row.supersolution_pass != Some(false);
    Ok(())
}

/// Runs every `(p, amplitude)` row on a pool of `workers` threads.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepReport> {
    let start = Instant::now();
    let plan = cfg.sweep_plan()?;
    // validate everything a row needs before spawning work
    cfg.solver_config_with(cfg.source_term_with(plan.ps[0])?, cfg.initial_with(plan.amplitudes[0])?)?;
    let s = cfg.s()?;
    let dim = cfg.dim()?;
    let p_c = critical_exponent(s, dim, cfg.weight()?.rho());
    let c_star = certify_bounds(s, dim)?.c_star;

    let jobs: Vec<(f64, f64)> = plan
        .ps
        .iter()
        .flat_map(|&p| plan.amplitudes.iter().map(move |&a| (p, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| jobs.par_iter().map(|&(p, a)| run_row(cfg, p, a, p_c, c_star)).collect());
    rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.amplitude.total_cmp(&b.amplitude)));

    let smallest = plan.amplitudes[0];
    let at_small = rows.iter().filter(|r| r.amplitude == smallest);
    let lo = at_small.clone().filter(|r| r.is_blow_up()).map(|r| r.p).fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
    let hi = at_small.filter(|r| r.is_global()).map(|r| r.p).fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.min(p))));
    let mut notes = Vec::new();
    let p_hat = match (lo, hi) {
        (Some(a), Some(b)) if a < b => Some(0.5 * (a + b)),
        (Some(a), Some(b)) => {
            notes.push(format!("blow-up at p = {a} above a global run at p = {b}: no bracket"));
            None
        }
        _ => {
            notes.push("no blow-up/global pair at the smallest amplitude: no bracket".into());
            None
        }
    };
    let p_min = plan.ps[0];
    let p_max = *plan.ps.last().unwrap();
    let in_range = p_hat.is_some_and(|p| p >= p_min && p <= p_max);
    if p_hat.is_some() && !in_range {
        notes.push("p_hat outside [p_min, p_max]".into());
    }
    if rows.iter().any(|r| r.amplitude_used != r.amplitude) {
        notes.push(format!(
            "rows with {} <= p < {} ran with amplitudes x{}",
            p_c - NEAR_CRITICAL_BAND,
            p_c,
            NEAR_CRITICAL_FACTOR
        ));
    }
    if rows.iter().any(|r| r.max_boundary_mass_fraction.is_some_and(|b| b > BOUNDARY_MASS_LIMIT)) {
        notes.push(format!("boundary mass fraction above {BOUNDARY_MASS_LIMIT:e} in some rows (heavy-tailed kernel)"));
    }
    Ok(SweepReport {
        rows,
        critical_exponent: p_c,
        bracket: (lo, hi),
        p_hat,
        p_hat_in_range: in_range,
        c_star,
        notes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn sweep_table(cfg: &ExperimentConfig, report: &SweepReport) -> Result<Table> {
    let mut t = Table::new(
        &[
            "p",
            "amplitude",
            "amplitude_used",
            "outcome",
            "t_burst_or_decay_slope",
            "criteria_verdict",
            "kappa_witness",
            "datum_beta",
            "supersolution_max_relative_violation",
            "prop1_crossing_time",
            "prop1_min_margin",
            "max_relative_clamp",
            "max_boundary_mass_fraction",
            "concordant",
            "error",
        ],
        2,
    );
    t.meta("generated_at", format!("{} elapsed_s={:.1}", timestamp(), report.seconds));
    t.meta("s", cfg.s()?);
    t.meta("dim", cfg.dim()?);
    t.meta("family", cfg.family()?.as_str());
    t.meta("rho", cfg.weight()?.rho());
    t.meta("critical_exponent", num(report.critical_exponent));
    t.meta("bracket_lo", opt_num(report.bracket.0));
    t.meta("bracket_hi", opt_num(report.bracket.1));
    t.meta("p_hat", opt_num(report.p_hat));
    t.meta("p_hat_in_range", report.p_hat_in_range);
    t.meta("c_star", num(report.c_star));
    for n in &report.notes {
        t.meta("note", n);
    }
    for r in &report.rows {
        t.push(vec![
            num(r.p),
            num(r.amplitude),
            num(r.amplitude_used),
            r.outcome.clone(),
            opt_num(r.t_burst_or_decay_slope()),
            r.verdict.map_or(String::new(), |v| v.as_str().to_string()),
            opt_num(r.kappa_witness),
            opt_num(r.datum_beta),
            opt_num(r.supersolution_violation),
            opt_num(r.prop1_crossing_time),
            opt_num(r.prop1_min_margin),
            opt_num(r.max_relative_clamp),
            opt_num(r.max_boundary_mass_fraction),
            r.concordant.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    Ok(t)
}

/// Runs the sweep and writes `sweep.csv` and `sweep_long.csv`.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<SweepReport> {
    let report = run_sweep(cfg, workers)?;
    sweep_table(cfg, &report)?.write(out_dir, "sweep")?;
    Ok(report)
}
