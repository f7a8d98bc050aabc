//! Source terms `f`, time weights `h`, the Osgood tail `int_{z0}^inf dsigma / f`,
//! and lattice checks of the monotonicity hypotheses on `f` and `f(u)/u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{uniform_breakpoints, Quadrature};
use crate::spectral::{OperatorSpec, RealField, Semigroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Family {
    /// `u^p`.
    Power,
    /// `(1+u) [ln(1+u)]^p`.
    LogConvex,
    /// `[ln(1+u)]^p / (1+u)`.
    LogConcave,
    /// `f = 0`; calibration probe.
    Zero,
    /// `f = u`; calibration probe.
    Linear,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::LogConvex => "log_convex",
            Family::LogConcave => "log_concave",
            Family::Zero => "zero",
            Family::Linear => "linear",
        }
    }

    /// Families accepted from configuration files.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(Family::Power),
            "log_convex" => Ok(Family::LogConvex),
            "log_concave" => Ok(Family::LogConcave),
            other => Err(Error::InvalidConfig(format!(
                "source.family must be power, log_convex or log_concave, got {other:?}"
            ))),
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Family::Power | Family::LogConvex | Family::Linear | Family::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceTerm {
    pub family: Family,
    pub p: f64,
    /// Right end of the interval `(0, m]` on which `f` and `f(u)/u` are nondecreasing.
    pub monotone_interval_m: f64,
}

impl SourceTerm {
    pub fn new(family: Family, p: f64) -> Result<Self> {
        if matches!(family, Family::Power | Family::LogConvex | Family::LogConcave) && !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidConfig(format!("source.p must be > 1, got {p}")));
        }
        let mut term = Self {
            family,
            p,
            monotone_interval_m: f64::INFINITY,
        };
        if family == Family::LogConcave {
            term.monotone_interval_m = check_structural_hypotheses(&term).m;
        }
        Ok(term)
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(Family::Power, p)
    }
    pub fn log_convex(p: f64) -> Result<Self> {
        Self::new(Family::LogConvex, p)
    }
    pub fn log_concave(p: f64) -> Result<Self> {
        Self::new(Family::LogConcave, p)
    }
    pub fn zero() -> Self {
        Self {
            family: Family::Zero,
            p: 1.0,
            monotone_interval_m: f64::INFINITY,
        }
    }
    pub fn linear() -> Self {
        Self {
            family: Family::Linear,
            p: 1.0,
            monotone_interval_m: f64::INFINITY,
        }
    }

    /// `f(u)` for `u >= 0` (no argument check).
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match self.family {
            Family::Power => u.powf(self.p),
            Family::LogConvex => (1.0 + u) * u.ln_1p().powf(self.p),
            Family::LogConcave => u.ln_1p().powf(self.p) / (1.0 + u),
            Family::Zero => 0.0,
            Family::Linear => u,
        }
    }

    /// `f'(u)`.
    pub fn df(&self, u: f64) -> f64 {
        let p = self.p;
        let l = u.ln_1p();
        match self.family {
            Family::Power => p * u.powf(p - 1.0),
            Family::LogConvex => l.powf(p) + p * l.powf(p - 1.0),
            Family::LogConcave => (p * l.powf(p - 1.0) - l.powf(p)) / (1.0 + u).powi(2),
            Family::Zero => 0.0,
            Family::Linear => 1.0,
        }
    }

    /// `f(u) / u`, continuous at the origin.
    pub fn ratio(&self, u: f64) -> f64 {
        if u == 0.0 {
            return match self.family {
                Family::Linear => 1.0,
                _ => 0.0,
            };
        }
        self.f(u) / u
    }

    /// Sign-carrying numerator of `(f(u)/u)'`; positive where the ratio increases.
    pub fn ratio_slope_sign(&self, u: f64) -> f64 {
        let p = self.p;
        let l = u.ln_1p();
        match self.family {
            Family::Power => p - 1.0,
            Family::LogConvex => l.powf(p - 1.0) * (p * u - l),
            Family::LogConcave => l.powf(p - 1.0) * (p * u - l * (1.0 + 2.0 * u)),
            Family::Zero | Family::Linear => 0.0,
        }
    }
}

pub fn eval_f(term: &SourceTerm, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidArgument(format!("f is defined on [0, inf), got u = {u}")));
    }
    Ok(term.f(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TimeWeight {
    Const { c: f64 },
    PowerLaw { c: f64, rho: f64 },
}

impl TimeWeight {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight.c must be > 0, got {c}")));
        }
        Ok(TimeWeight::Const { c })
    }

    pub fn power_law(c: f64, rho: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight.c must be > 0, got {c}")));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight.rho must be >= 0, got {rho}")));
        }
        Ok(TimeWeight::PowerLaw { c, rho })
    }

    pub fn c(&self) -> f64 {
        match *self {
            TimeWeight::Const { c } | TimeWeight::PowerLaw { c, .. } => c,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            TimeWeight::Const { .. } => 0.0,
            TimeWeight::PowerLaw { rho, .. } => rho,
        }
    }

    pub fn family_str(&self) -> &'static str {
        match self {
            TimeWeight::Const { .. } => "const",
            TimeWeight::PowerLaw { .. } => "power_law",
        }
    }

    #[inline]
    pub fn h(&self, t: f64) -> f64 {
        match *self {
            TimeWeight::Const { c } => c,
            TimeWeight::PowerLaw { c, rho } => {
                if rho == 0.0 {
                    c
                } else {
                    c * t.powf(rho)
                }
            }
        }
    }

    /// `int_0^t h`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            TimeWeight::Const { c } => c * t,
            TimeWeight::PowerLaw { c, rho } => c * t.powf(rho + 1.0) / (rho + 1.0),
        }
    }
}

pub fn eval_h(weight: &TimeWeight, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("h is defined on [0, inf), got t = {t}")));
    }
    Ok(weight.h(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OsgoodKind {
    Finite(f64),
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OsgoodResult {
    pub kind: OsgoodKind,
    pub z0: f64,
}

impl OsgoodResult {
    pub fn value(&self) -> Option<f64> {
        match self.kind {
            OsgoodKind::Finite(v) => Some(v),
            OsgoodKind::Divergent => None,
        }
    }
}

/// `int_{z0}^inf dsigma / f(sigma)` in closed form.
pub fn osgood_tail(term: &SourceTerm, z0: f64) -> Result<OsgoodResult> {
    if !(z0 > 0.0) {
        return Err(Error::InvalidArgument(format!("Osgood tail needs z0 > 0, got {z0}")));
    }
    let p = term.p;
    let kind = match term.family {
        Family::Power => OsgoodKind::Finite(z0.powf(1.0 - p) / (p - 1.0)),
        Family::LogConvex => OsgoodKind::Finite(z0.ln_1p().powf(1.0 - p) / (p - 1.0)),
        Family::LogConcave | Family::Zero | Family::Linear => OsgoodKind::Divergent,
    };
    Ok(OsgoodResult { kind, z0 })
}

/// Independent quadrature route: `sigma = z0 e^v`, integrated to a finite `V`
/// plus the remainder of the integrand's asymptotic form.
pub fn osgood_tail_quadrature(term: &SourceTerm, z0: f64) -> Result<OsgoodResult> {
    if !(z0 > 0.0) {
        return Err(Error::InvalidArgument(format!("Osgood tail needs z0 > 0, got {z0}")));
    }
    let p = term.p;
    let quad = Quadrature::new(1e-300, 1e-13);
    let (upper, remainder) = match term.family {
        Family::Power => {
            let v = 37.0 / (p - 1.0);
            (v, z0.powf(1.0 - p) * ((1.0 - p) * v).exp() / (p - 1.0))
        }
        Family::LogConvex => {
            let v = 50.0 + (-z0.ln()).max(0.0);
            // ln(1 + z0 e^v) = v + ln z0 + O(e^{-v} / z0)
            (v, (v + z0.ln()).powf(1.0 - p) / (p - 1.0))
        }
        _ => return Ok(OsgoodResult { kind: OsgoodKind::Divergent, z0 }),
    };
    let pts = uniform_breakpoints(0.0, upper, 1.0, 2000);
    let res = quad.integrate_breakpoints(
        |v| {
            let sigma = z0 * v.exp();
            sigma / term.f(sigma)
        },
        &pts,
    );
    if !res.converged && res.abs_error > 1e-12 * res.value.abs() {
        return Err(Error::Quadrature {
            achieved: res.abs_error,
            requested: 1e-12 * res.value.abs(),
            context: "Osgood tail".into(),
        });
    }
    Ok(OsgoodResult {
        kind: OsgoodKind::Finite(res.value + remainder),
        z0,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StructuralReport {
    /// Largest lattice point up to which `f` is nondecreasing (`inf` if never violated).
    pub f_monotone_to: f64,
    /// Same for `f(u)/u`.
    pub ratio_monotone_to: f64,
    /// `min` of the two: the certified `m`.
    pub m: f64,
    /// `f > 0` at every lattice point.
    pub positive: bool,
    /// Analytic derivative signs agree with the lattice verdict at every lattice point.
    pub derivative_signs_agree: bool,
    pub lattice_points: usize,
}

/// Step `1e-4` on `(0, 20]`, then ratio `1.001` up to `1e8`.
pub fn structural_lattice() -> Vec<f64> {
    let mut pts: Vec<f64> = (1..=200_000).map(|k| k as f64 * 1e-4).collect();
    let mut u = 20.0;
    while u < 1e8 {
        u *= 1.001;
        pts.push(u);
    }
    pts
}

pub fn check_structural_hypotheses(term: &SourceTerm) -> StructuralReport {
    let lattice = structural_lattice();
    let fs: Vec<f64> = lattice.iter().map(|&u| term.f(u)).collect();
    let rs: Vec<f64> = lattice.iter().map(|&u| term.ratio(u)).collect();
    let turn = |v: &[f64]| (1..v.len()).find(|&i| v[i] < v[i - 1]).map(|i| i - 1);
    let f_turn = turn(&fs);
    let r_turn = turn(&rs);
    // Analytic slopes are nonnegative before the lattice turning point (the last
    // cell may hold the root) and negative just after it.
    let signs_agree = |turn: Option<usize>, slope: &dyn Fn(f64) -> f64| match turn {
        None => lattice.iter().all(|&u| slope(u) >= 0.0),
        Some(i) => lattice[..i.saturating_sub(1)].iter().all(|&u| slope(u) >= 0.0) && slope(lattice[i + 1]) < 0.0,
    };
    let agree = signs_agree(f_turn, &|u| term.df(u)) && signs_agree(r_turn, &|u| term.ratio_slope_sign(u));
    let at = |i: Option<usize>| i.map_or(f64::INFINITY, |i| lattice[i]);
    StructuralReport {
        f_monotone_to: at(f_turn),
        ratio_monotone_to: at(r_turn),
        m: at(f_turn).min(at(r_turn)),
        positive: fs.iter().all(|&f| f > 0.0),
        derivative_signs_agree: agree,
        lattice_points: lattice.len(),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JensenReport {
    pub t: f64,
    /// `max (f(e^{-tL} w0) - e^{-tL} f(w0))`, positive when the inequality fails.
    pub max_violation: f64,
    /// Grid coordinates of the largest violation.
    pub location: [f64; 2],
    /// `sup e^{-tL} f(w0)`.
    pub scale: f64,
    pub passes: bool,
}

/// Pointwise comparison of `f(e^{-tL} w0)` with `e^{-tL} f(w0)` on the grid.
pub fn jensen_check(term: &SourceTerm, w0: &RealField, t: f64, op: &OperatorSpec) -> Result<JensenReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("Jensen check needs t > 0, got {t}")));
    }
    if w0.min() < 0.0 {
        return Err(Error::InvalidArgument("Jensen check needs w0 >= 0".into()));
    }
    let sg = Semigroup::new(op);
    let lhs = sg.apply(w0, t)?.field.map(|v| term.f(v));
    let rhs = sg.apply(&w0.map(|v| term.f(v)), t)?.field;
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for (i, (a, b)) in lhs.values().iter().zip(rhs.values()).enumerate() {
        let d = a - b;
        if d > worst.0 {
            worst = (d, i);
        }
    }
    let scale = rhs.sup_norm().max(lhs.sup_norm());
    Ok(JensenReport {
        t,
        max_violation: worst.0,
        location: w0.grid().node(worst.1),
        scale,
        passes: worst.0 <= 1e-9 * scale.max(f64::MIN_POSITIVE),
    })
}

/// Jensen check over several times.
pub fn jensen_search(term: &SourceTerm, w0: &RealField, times: &[f64], op: &OperatorSpec) -> Result<Vec<JensenReport>> {
    times.iter().map(|&t| jensen_check(term, w0, t, op)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::InitialDatum;
    use crate::spectral::{operator_symbol, Grid};
    use std::f64::consts::E;

    #[test]
    fn eval_f_examples() {
        assert_eq!(eval_f(&SourceTerm::power(2.0).unwrap(), 3.0).unwrap(), 9.0);
        let v = eval_f(&SourceTerm::log_convex(1.0 + 1e-12).unwrap(), E - 1.0).unwrap();
        assert!((v - E).abs() < 1e-10);
        let v = eval_f(&SourceTerm::log_concave(2.0).unwrap(), E - 1.0).unwrap();
        assert!((v - 1.0 / E).abs() < 1e-15);
        assert!(eval_f(&SourceTerm::power(2.0).unwrap(), -1.0).is_err());
        for t in [
            SourceTerm::power(1.5).unwrap(),
            SourceTerm::log_convex(2.0).unwrap(),
            SourceTerm::log_concave(2.0).unwrap(),
            SourceTerm::zero(),
            SourceTerm::linear(),
        ] {
            assert_eq!(t.f(0.0), 0.0);
        }
        assert!(SourceTerm::power(1.0).is_err());
    }

    #[test]
    fn eval_h_examples() {
        assert_eq!(eval_h(&TimeWeight::constant(1.0).unwrap(), 7.0).unwrap(), 1.0);
        assert_eq!(eval_h(&TimeWeight::power_law(1.0, 1.0).unwrap(), 3.0).unwrap(), 3.0);
        assert_eq!(eval_h(&TimeWeight::power_law(2.0, 0.5).unwrap(), 4.0).unwrap(), 4.0);
        assert!(TimeWeight::power_law(1.0, -0.5).is_err());
        assert_eq!(TimeWeight::power_law(1.0, 1.0).unwrap().integral(2.0), 2.0);
    }

    #[test]
    fn osgood_examples() {
        let r = osgood_tail(&SourceTerm::power(2.0).unwrap(), 1.0).unwrap();
        assert_eq!(r.value(), Some(1.0));
        let r = osgood_tail(&SourceTerm::log_convex(2.0).unwrap(), E - 1.0).unwrap();
        assert!((r.value().unwrap() - 1.0).abs() < 1e-15);
        for z0 in [1e-3, 1.0, 50.0] {
            assert_eq!(osgood_tail(&SourceTerm::log_concave(2.0).unwrap(), z0).unwrap().kind, OsgoodKind::Divergent);
        }
        assert!(osgood_tail(&SourceTerm::power(2.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for term in [
            SourceTerm::power(1.5).unwrap(),
            SourceTerm::power(3.0).unwrap(),
            SourceTerm::log_convex(1.5).unwrap(),
            SourceTerm::log_convex(3.0).unwrap(),
        ] {
            for z0 in [1e-4, 0.05, 1.0, 30.0, 1e5] {
                let a = osgood_tail(&term, z0).unwrap().value().unwrap();
                let b = osgood_tail_quadrature(&term, z0).unwrap().value().unwrap();
                assert!(((a - b) / a).abs() < 1e-10, "{term:?} z0={z0}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn osgood_tail_is_nonincreasing() {
        let t = SourceTerm::log_convex(2.5).unwrap();
        let vals: Vec<f64> = [0.1, 1.0, 10.0, 100.0].iter().map(|&z| osgood_tail(&t, z).unwrap().value().unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn structural_hypotheses() {
        let pw = check_structural_hypotheses(&SourceTerm::power(2.0).unwrap());
        assert!(pw.m.is_infinite() && pw.positive && pw.derivative_signs_agree);
        let lc = check_structural_hypotheses(&SourceTerm::log_convex(2.0).unwrap());
        assert!(lc.m.is_infinite() && lc.positive && lc.derivative_signs_agree);
        let cc = SourceTerm::log_concave(2.0).unwrap();
        let rep = check_structural_hypotheses(&cc);
        assert!(rep.m.is_finite() && rep.positive && rep.derivative_signs_agree, "{rep:?}");
        // f peaks at ln(1+u) = p
        assert!((rep.f_monotone_to - (2f64.exp() - 1.0)).abs() < 2e-4);
        assert!(rep.ratio_monotone_to < rep.f_monotone_to);
        assert_eq!(cc.monotone_interval_m, rep.m);
    }

    fn bump(grid: &Grid) -> RealField {
        InitialDatum::gaussian(1.0, 1.0).unwrap().sample(grid)
    }

    #[test]
    fn jensen_linear_probe_is_equality() {
        let g = Grid::new(1, 50.0, 1024).unwrap();
        let op = operator_symbol(&g, 0.5).unwrap();
        let rep = jensen_check(&SourceTerm::linear(), &bump(&g), 1.0, &op).unwrap();
        assert!(rep.max_violation.abs() <= 1e-12);
    }

    #[test]
    fn jensen_convex_families_pass() {
        let g = Grid::new(1, 50.0, 1024).unwrap();
        let op = operator_symbol(&g, 0.5).unwrap();
        for term in [SourceTerm::power(2.0).unwrap(), SourceTerm::log_convex(2.0).unwrap()] {
            for t in [0.1, 1.0, 10.0] {
                let rep = jensen_check(&term, &bump(&g), t, &op).unwrap();
                assert!(rep.passes, "{term:?} t={t}: {rep:?}");
            }
        }
    }

    #[test]
    fn jensen_log_concave_search_records_findings() {
        let g = Grid::new(1, 50.0, 1024).unwrap();
        let op = operator_symbol(&g, 0.5).unwrap();
        let w0 = InitialDatum::two_bump(20.0, 1.0).unwrap().sample(&g);
        let reps = jensen_search(&SourceTerm::log_concave(2.0).unwrap(), &w0, &[0.1, 1.0, 10.0], &op).unwrap();
        assert_eq!(reps.len(), 3);
        // large data sit beyond the concave turning point, where the inequality fails
        assert!(reps.iter().any(|r| !r.passes));
    }
}
