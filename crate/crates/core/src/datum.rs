//! Analytic nonnegative initial data. The same description is sampled on the
//! torus grid by the solver and integrated exactly on R^N by the kernel flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `A exp(-|x|^2 / (2 w^2))`.
    Gaussian,
    /// `A` on the ball of radius `w`.
    Indicator,
    /// Two Gaussians of width `w` centred at `(+-2w, 0)`.
    TwoBump,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::Gaussian => "gaussian",
            Shape::Indicator => "indicator",
            Shape::TwoBump => "two_bump",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Shape::Gaussian),
            "indicator" => Ok(Shape::Indicator),
            "two_bump" => Ok(Shape::TwoBump),
            other => Err(Error::InvalidConfig(format!(
                "initial.shape must be gaussian, indicator or two_bump, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDatum {
    pub shape: Shape,
    pub amplitude: f64,
    pub width: f64,
}

impl InitialDatum {
    /// Amplitude zero is admitted (the trivial solution); negative or
    /// non-finite parameters are not.
    pub fn new(shape: Shape, amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "initial.amplitude must be >= 0, got {amplitude}"
            )));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidConfig(format!("initial.width must be > 0, got {width}")));
        }
        Ok(Self {
            shape,
            amplitude,
            width,
        })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(Shape::Gaussian, amplitude, width)
    }
    pub fn indicator(radius: f64, amplitude: f64) -> Result<Self> {
        Self::new(Shape::Indicator, amplitude, radius)
    }
    pub fn two_bump(amplitude: f64, width: f64) -> Result<Self> {
        Self::new(Shape::TwoBump, amplitude, width)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            amplitude: self.amplitude * c,
            ..*self
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Bump centres for `TwoBump` (first coordinate).
    pub fn centres(&self) -> [f64; 2] {
        [-2.0 * self.width, 2.0 * self.width]
    }

    /// Pointwise value at `x = (x1, x2)`; `x2` is ignored for N = 1.
    pub fn value(&self, x: [f64; 2], dim: usize) -> f64 {
        let y2 = if dim == 2 { x[1] * x[1] } else { 0.0 };
        let w2 = self.width * self.width;
        match self.shape {
            Shape::Gaussian => self.amplitude * (-(x[0] * x[0] + y2) / (2.0 * w2)).exp(),
            Shape::Indicator => {
                if (x[0] * x[0] + y2).sqrt() <= self.width {
                    self.amplitude
                } else {
                    0.0
                }
            }
            Shape::TwoBump => self
                .centres()
                .iter()
                .map(|c| self.amplitude * (-((x[0] - c).powi(2) + y2) / (2.0 * w2)).exp())
                .sum(),
        }
    }

    /// `sup v0` in closed form.
    pub fn sup(&self) -> f64 {
        match self.shape {
            Shape::Gaussian | Shape::Indicator => self.amplitude,
            // attained at the bump centres; the other bump contributes exp(-8)
            Shape::TwoBump => self.amplitude * (1.0 + (-8.0f64).exp()),
        }
    }

    /// `int v0` over R^N in closed form.
    pub fn mass(&self, dim: usize) -> f64 {
        let w = self.width;
        let a = self.amplitude;
        let gauss = if dim == 1 {
            a * w * (2.0 * std::f64::consts::PI).sqrt()
        } else {
            a * 2.0 * std::f64::consts::PI * w * w
        };
        match self.shape {
            Shape::Gaussian => gauss,
            Shape::TwoBump => 2.0 * gauss,
            Shape::Indicator => a * ball_volume(dim, w),
        }
    }

    pub fn sample(&self, grid: &Grid) -> RealField {
        let dim = grid.dim();
        grid.sample(|x| self.value(x, dim))
    }

    /// Data that are functions of `|x|` alone.
    pub fn is_radial(&self) -> bool {
        !matches!(self.shape, Shape::TwoBump)
    }
}

/// Volume of the ball of radius `r` in R^N, N = 1 or 2 (`omega_1 = 2`, `omega_2 = pi`).
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    if dim == 1 {
        2.0 * r
    } else {
        std::f64::consts::PI * r * r
    }
}
