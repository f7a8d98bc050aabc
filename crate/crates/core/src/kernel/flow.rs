//! The linear flow `e^{-sigma L} v0` on the whole space for analytic data,
//! free of the periodic-box plateau.
//!
//! Gaussian bumps are propagated through the Fourier integral of
//! `v0_hat(xi) e^{-sigma m(xi)}` (no oscillation at the peak, where the sup is
//! read off); indicators are integrated directly against the mixed kernel.

use std::f64::consts::PI;

use super::eval::{accept, Kernel};
use crate::bessel::j0;
use crate::datum::{InitialDatum, Shape};
use crate::error::{Error, Result};
use crate::quadrature::{geometric_breakpoints, uniform_breakpoints, Quadrature};

#[derive(Debug, Clone, Copy)]
pub struct LinearFlow {
    s: f64,
    dim: usize,
    datum: InitialDatum,
}

impl LinearFlow {
    pub fn new(s: f64, dim: usize, datum: InitialDatum) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("s must lie in (0, 1), got {s}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self { s, dim, datum })
    }

    pub fn datum(&self) -> &InitialDatum {
        &self.datum
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Single Gaussian bump of the datum evolved to time `sigma`, at distance `r` from its centre.
    fn gaussian_bump(&self, sigma: f64, r: f64) -> Result<f64> {
        let a = self.datum.amplitude;
        let w = self.datum.width;
        let k = Kernel::mixed(self.s, sigma.max(1e-300))?;
        // e^{-w^2 xi^2 / 2 - sigma m(xi)} <= e^{-46}
        let mut big = (2.0f64 * 46.0).sqrt() / w;
        if sigma > 0.0 {
            big = big.min(k.cutoff());
        }
        let decay = |xi: f64| {
            let m = if sigma > 0.0 { sigma * k.symbol(xi) } else { 0.0 };
            (-0.5 * w * w * xi * xi - m).exp()
        };
        let mut pts = vec![0.0];
        pts.extend(geometric_breakpoints(big * 1e-8, big, 3));
        if r > 0.0 {
            pts.extend(uniform_breakpoints(0.0, big, PI / r, 20_000));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let quad = Quadrature::new(1e-300, 1e-11);
        if self.dim == 1 {
            let res = quad.integrate_breakpoints(|xi| (r * xi).cos() * decay(xi), &pts);
            Ok(a * w * (2.0 * PI).sqrt() / PI * accept(res, 1e-300, "Gaussian flow")?)
        } else {
            let res = quad.integrate_breakpoints(|xi| j0(r * xi) * decay(xi) * xi, &pts);
            Ok(a * w * w * accept(res, 1e-300, "Gaussian flow")?)
        }
    }

    /// `A int_{|y| <= R} p_sigma(x - y) dy` for the indicator, `x` on the first axis.
    fn indicator(&self, sigma: f64, x: f64) -> Result<f64> {
        let a = self.datum.amplitude;
        let rad = self.datum.width;
        if sigma == 0.0 {
            return Ok(self.datum.value([x, 0.0], self.dim));
        }
        let k = Kernel::mixed(self.s, sigma)?;
        let quad = Quadrature::new(1e-300, 1e-11);
        let mut failure = None;
        let mut eval = |r: f64| match k.value(r, self.dim) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let value = match (self.dim, x == 0.0) {
            (1, _) => {
                // y - x over [-rad - x, rad - x]
                let lo = -rad - x;
                let hi = rad - x;
                let mut pts = vec![lo, hi];
                let cw = k.width();
                for p in geometric_breakpoints(cw * 1e-3, (hi - lo).abs().max(cw), 4) {
                    pts.push(p);
                    pts.push(-p);
                }
                pts.push(0.0);
                pts.retain(|p| *p >= lo && *p <= hi);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let res = quad.integrate_breakpoints(&mut eval, &pts);
                a * accept(res, 1e-300, "indicator flow")?
            }
            (2, true) => {
                let cw = k.width();
                let mut pts = vec![0.0, rad];
                pts.extend(geometric_breakpoints(cw * 1e-3, rad.max(cw * 1e-3 * 1.01), 4));
                pts.retain(|p| *p <= rad);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let res = quad.integrate_breakpoints(|r| eval(r) * 2.0 * PI * r, &pts);
                a * accept(res, 1e-300, "indicator flow")?
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "two-dimensional indicator flow is available at the centre only".into(),
                ))
            }
        };
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(value)
    }

    /// `(e^{-sigma L} v0)(x)` at `x = (x1, 0)`.
    pub fn value_at(&self, sigma: f64, x: f64) -> Result<f64> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("flow time must be >= 0, got {sigma}")));
        }
        if self.datum.is_zero() {
            return Ok(0.0);
        }
        match self.datum.shape {
            Shape::Gaussian => self.gaussian_bump(sigma, x.abs()),
            Shape::Indicator => self.indicator(sigma, x),
            Shape::TwoBump => {
                let [c1, c2] = self.datum.centres();
                Ok(self.gaussian_bump(sigma, (x - c1).abs())? + self.gaussian_bump(sigma, (x - c2).abs())?)
            }
        }
    }

    /// `||e^{-sigma L} v0||_inf`.
    pub fn sup(&self, sigma: f64) -> Result<f64> {
        if self.datum.is_zero() {
            return Ok(0.0);
        }
        if sigma == 0.0 {
            return Ok(self.datum.sup());
        }
        match self.datum.shape {
            // symmetric decreasing data stay symmetric decreasing
            Shape::Gaussian | Shape::Indicator => self.value_at(sigma, 0.0),
            Shape::TwoBump => self.two_bump_sup(sigma),
        }
    }

    // The maximum lies on the segment between the centres, and by symmetry in [0, 2w].
    fn two_bump_sup(&self, sigma: f64) -> Result<f64> {
        let hi = 2.0 * self.datum.width;
        let n = 40;
        let xs: Vec<f64> = (0..=n).map(|k| hi * k as f64 / n as f64).collect();
        let vals = xs.iter().map(|&x| self.value_at(sigma, x)).collect::<Result<Vec<f64>>>()?;
        let (best, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let mut a = xs[best.saturating_sub(1)];
        let mut b = xs[(best + 1).min(n)];
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = self.value_at(sigma, c)?;
        let mut fd = self.value_at(sigma, d)?;
        for _ in 0..60 {
            if (b - a) <= 1e-10 * hi {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.value_at(sigma, c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.value_at(sigma, d)?;
            }
        }
        Ok(vals[best].max(fc).max(fd))
    }

    /// `int_{|y| <= radius} v0(y) dy`.
    pub fn mass_in_ball(&self, radius: f64) -> Result<f64> {
        let d = &self.datum;
        let (a, w) = (d.amplitude, d.width);
        match (d.shape, self.dim) {
            (Shape::Indicator, _) => Ok(a * crate::datum::ball_volume(self.dim, w.min(radius))),
            (Shape::Gaussian, 2) => Ok(a * 2.0 * PI * w * w * (1.0 - (-radius * radius / (2.0 * w * w)).exp())),
            (_, 1) => {
                let pts = uniform_breakpoints(-radius, radius, w, 1000);
                let res = Quadrature::new(1e-300, 1e-13).integrate_breakpoints(|y| d.value([y, 0.0], 1), &pts);
                accept(res, 1e-300, "datum mass")
            }
            _ => Err(Error::InvalidArgument("ball mass of a two-dimensional two-bump datum".into())),
        }
    }
}

/// Outcome of one Lemma-type mass lower-bound probe.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MassProbe {
    pub t: f64,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `[e^{-tL} u0](x) >= C* t^{-N/(2s)} int_{|y| <= sqrt(t)/2} u0` at `(t, x)` probes,
/// each with `t > 1` and `|x| < sqrt(t)/2`.
pub fn verify_mass_lower_bound(flow: &LinearFlow, c_star: f64, probes: &[(f64, f64)]) -> Result<Vec<MassProbe>> {
    use rayon::prelude::*;
    probes
        .par_iter()
        .map(|&(t, x)| {
            if !(t > 1.0 && x.abs() < 0.5 * t.sqrt()) {
                return Err(Error::InvalidArgument(format!(
                    "probe (t = {t}, x = {x}) outside t > 1, |x| < sqrt(t)/2"
                )));
            }
            let lhs = flow.value_at(t, x)?;
            let rhs = c_star * t.powf(-(flow.dim() as f64) / (2.0 * flow.s())) * flow.mass_in_ball(0.5 * t.sqrt())?;
            Ok(MassProbe {
                t,
                x,
                lhs,
                rhs,
                holds: lhs >= rhs,
            })
        })
        .collect()
}

/// Log-log least-squares slope of `sup` over the supplied times.
pub fn kernel_decay_slope(flow: &LinearFlow, times: &[f64]) -> Result<(Vec<(f64, f64)>, Option<f64>)> {
    let pts = times
        .iter()
        .map(|&t| Ok((t, flow.sup(t)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let slope = crate::spectral::loglog_slope(&pts);
    Ok((pts, slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_conv_direct(s: f64, sigma: f64, w: f64, x: f64) -> f64 {
        // int p_sigma(x - y) v0(y) dy with the kernel evaluated pointwise
        let k = Kernel::mixed(s, sigma).unwrap();
        let pts = uniform_breakpoints(-14.0 * w, 14.0 * w, 0.25 * w, 1000);
        Quadrature::new(1e-300, 1e-11)
            .integrate_breakpoints(|y| k.value_1d(x - y).unwrap() * (-(y * y) / (2.0 * w * w)).exp(), &pts)
            .value
    }

    #[test]
    fn gaussian_flow_matches_kernel_convolution() {
        let flow = LinearFlow::new(0.5, 1, InitialDatum::gaussian(1.0, 0.7).unwrap()).unwrap();
        for (sigma, x) in [(0.3, 0.0), (2.0, 0.0), (2.0, 1.3)] {
            let a = flow.value_at(sigma, x).unwrap();
            let b = gauss_conv_direct(0.5, sigma, 0.7, x);
            assert!(((a - b) / b).abs() < 1e-8, "sigma={sigma} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_time_and_zero_datum() {
        let d = InitialDatum::gaussian(0.8, 1.0).unwrap();
        let flow = LinearFlow::new(0.5, 1, d).unwrap();
        assert!((flow.value_at(0.0, 0.3).unwrap() - d.value([0.3, 0.0], 1)).abs() < 1e-12);
        let z = LinearFlow::new(0.5, 1, d.scaled(0.0)).unwrap();
        assert_eq!(z.sup(5.0).unwrap(), 0.0);
    }

    #[test]
    fn indicator_mass_is_conserved_in_the_limit() {
        // as sigma -> 0 the centre value tends to A
        let flow = LinearFlow::new(0.5, 1, InitialDatum::indicator(1.0, 1.0).unwrap()).unwrap();
        let v = flow.sup(1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-3);
        let two = LinearFlow::new(0.7, 2, InitialDatum::indicator(1.0, 1.0).unwrap()).unwrap();
        assert!(two.sup(0.5).unwrap() < 1.0);
    }

    #[test]
    fn two_dimensional_gaussian_matches_closed_form_heat_part() {
        // s-independent check at tiny sigma: value near the datum
        let flow = LinearFlow::new(0.5, 2, InitialDatum::gaussian(1.0, 1.0).unwrap()).unwrap();
        assert!((flow.value_at(0.0, 0.5).unwrap() - (-0.125f64).exp()).abs() < 1e-10);
        assert!(flow.sup(1.0).unwrap() < 1.0);
    }

    #[test]
    fn two_bump_sup_is_between_bumps_late() {
        let flow = LinearFlow::new(0.5, 1, InitialDatum::two_bump(1.0, 1.0).unwrap()).unwrap();
        let early = flow.sup(0.01).unwrap();
        assert!(early > 0.9 && early <= 1.0 + 1e-9);
        let late = flow.sup(50.0).unwrap();
        assert!((late - flow.value_at(50.0, 0.0).unwrap()).abs() < 1e-10 * late);
    }

    #[test]
    fn late_decay_slope_matches_fractional_rate() {
        // for large times the fractional part dominates: slope -> -N/(2s)
        let flow = LinearFlow::new(0.5, 1, InitialDatum::gaussian(1.0, 0.2).unwrap()).unwrap();
        let (_, slope) = kernel_decay_slope(&flow, &[5.0, 10.0, 20.0, 50.0]).unwrap();
        let slope = slope.unwrap();
        assert!((slope + 1.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn mass_lower_bound_examples() {
        let flow = LinearFlow::new(0.5, 1, InitialDatum::indicator(1.0, 1.0).unwrap()).unwrap();
        let c_star = crate::kernel::verify_lower_bound(0.5, 1, 100.0, 2.0 * PI).unwrap().c_star;
        let probes = verify_mass_lower_bound(&flow, c_star, &[(4.0, 0.0), (100.0, 4.0)]).unwrap();
        assert!(probes.iter().all(|p| p.holds), "{probes:?}");
        assert!((probes[0].rhs - c_star * 0.25 * 2.0).abs() < 1e-14);
        let zero = LinearFlow::new(0.5, 1, InitialDatum::indicator(1.0, 0.0).unwrap()).unwrap();
        let z = verify_mass_lower_bound(&zero, c_star, &[(4.0, 0.0)]).unwrap();
        assert!(z[0].holds && z[0].lhs == 0.0 && z[0].rhs == 0.0);
        assert!(verify_mass_lower_bound(&flow, c_star, &[(0.5, 0.0)]).is_err());
    }
}
