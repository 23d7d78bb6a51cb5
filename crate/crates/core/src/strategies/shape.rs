//! Named state shapes, used for initial data and terminal targets.
//! Physical profiles g(x) on [0, π] are projected onto the orthonormal
//! basis √(2/π) sin(nx).

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, Tolerance};
use crate::registry::{expect_args, Descriptor, Registry};

pub trait StateShape: Debug + Send + Sync {
    /// Coefficients on modes 1..=n_modes.
    fn coefficients(&self, n_modes: usize) -> Result<Vec<f64>>;
    fn descriptor(&self) -> Descriptor;
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroShape;

impl StateShape for ZeroShape {
    fn coefficients(&self, n_modes: usize) -> Result<Vec<f64>> {
        Ok(vec![0.0; n_modes])
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::bare("zero")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SingleMode {
    mode: usize,
    amplitude: f64,
}

impl SingleMode {
    pub fn new(mode: f64, amplitude: f64) -> Result<Self> {
        if mode < 1.0 || mode.fract() != 0.0 {
            return Err(Error::BadDescriptor(format!("single_mode: mode {mode} must be a positive integer")));
        }
        Ok(Self {
            mode: mode as usize,
            amplitude,
        })
    }
}

impl StateShape for SingleMode {
    fn coefficients(&self, n_modes: usize) -> Result<Vec<f64>> {
        if self.mode > n_modes {
            return Err(Error::IndexOutOfRange {
                what: "mode",
                index: self.mode,
                count: n_modes,
            });
        }
        let mut c = vec![0.0; n_modes];
        c[self.mode - 1] = self.amplitude;
        Ok(c)
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("single_mode", vec![self.mode as f64, self.amplitude])
    }
}

/// g(x) = exp(-(x - center)² / (2 width²)).
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    center: f64,
    width: f64,
}

impl GaussianBump {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&center) {
            return Err(Error::BadDescriptor(format!("gaussian_bump: center {center} outside [0, pi]")));
        }
        if !(width > 0.0) {
            return Err(Error::BadDescriptor(format!("gaussian_bump: width {width} must be positive")));
        }
        Ok(Self { center, width })
    }

    pub fn profile(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-0.5 * z * z).exp()
    }
}

impl StateShape for GaussianBump {
    fn coefficients(&self, n_modes: usize) -> Result<Vec<f64>> {
        let norm = (2.0 / PI).sqrt();
        let breaks: Vec<f64> = (0..=16).map(|k| PI * k as f64 / 16.0).collect();
        (1..=n_modes)
            .map(|n| {
                let nf = n as f64;
                let r = integrate_with_breaks(
                    |x| self.profile(x) * (nf * x).sin(),
                    &breaks,
                    Tolerance::new(1e-14, 1e-12),
                )?;
                Ok(norm * r.value)
            })
            .collect()
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("gaussian_bump", vec![self.center, self.width])
    }
}

/// Explicit coefficients, zero-padded up to the truncation.
#[derive(Debug, Clone)]
pub struct Coefficients {
    values: Vec<f64>,
}

impl Coefficients {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl StateShape for Coefficients {
    fn coefficients(&self, n_modes: usize) -> Result<Vec<f64>> {
        if self.values.len() > n_modes {
            return Err(Error::TruncationMismatch {
                left: self.values.len(),
                right: n_modes,
            });
        }
        let mut c = self.values.clone();
        c.resize(n_modes, 0.0);
        Ok(c)
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("coefficients", self.values.clone())
    }
}

pub fn registry() -> Registry<dyn StateShape> {
    let mut r = Registry::new("shape");
    r.register("zero", "zero state", |a| {
        expect_args("zero", a, 0, 0)?;
        Ok(Arc::new(ZeroShape) as Arc<dyn StateShape>)
    })
    .register("single_mode", "amplitude on one sine mode", |a| {
        expect_args("single_mode", a, 2, 2)?;
        Ok(Arc::new(SingleMode::new(a[0], a[1])?))
    })
    .register("gaussian_bump", "projected exp(-(x-center)^2/(2 width^2))", |a| {
        expect_args("gaussian_bump", a, 2, 2)?;
        Ok(Arc::new(GaussianBump::new(a[0], a[1])?))
    })
    .register("coefficients", "explicit sine coefficients", |a| {
        expect_args("coefficients", a, 1, usize::MAX)?;
        Ok(Arc::new(Coefficients::new(a.to_vec())))
    });
    r
}
