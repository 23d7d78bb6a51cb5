//! Nonlinearities F(t, W_δ) acting on the delayed state channels
//! W_δ = (A_1 u(δ_1(t)), …, A_p u(δ_p(t))).

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::registry::{expect_args, Descriptor, Registry};

pub trait Nonlinearity: Debug + Send + Sync {
    /// Writes F(t, W) into `out`; `channels[i]` holds the coefficients of
    /// A_i u(δ_i(t)).
    fn eval(&self, t: f64, channels: &[Vec<f64>], out: &mut [f64]);

    /// Bound constants N_{δ_i}, one per state channel, with
    /// ‖F(t, W)‖ ≤ Σ_i N_{δ_i} for every argument.
    fn bounds(&self, n_channels: usize, n_modes: usize) -> Vec<f64>;

    fn descriptor(&self) -> Descriptor;

    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Nonlinearity for Zero {
    fn eval(&self, _t: f64, _channels: &[Vec<f64>], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn bounds(&self, n_channels: usize, _n_modes: usize) -> Vec<f64> {
        vec![0.0; n_channels]
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::bare("zero")
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// F_n = κ tanh((1/p) Σ_i W_{i,n}).
#[derive(Debug, Clone, Copy)]
pub struct BoundedTanh {
    kappa: f64,
}

impl BoundedTanh {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::BadDescriptor(format!("bounded_tanh: kappa = {kappa} must be non-negative")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Nonlinearity for BoundedTanh {
    fn eval(&self, _t: f64, channels: &[Vec<f64>], out: &mut [f64]) {
        out.fill(0.0);
        if channels.is_empty() {
            return;
        }
        let inv = 1.0 / channels.len() as f64;
        for (n, o) in out.iter_mut().enumerate() {
            let avg: f64 = channels.iter().map(|c| c[n]).sum::<f64>() * inv;
            *o = self.kappa * avg.tanh();
        }
    }

    // sup ‖F‖ = κ √N, split evenly over the channels
    fn bounds(&self, n_channels: usize, n_modes: usize) -> Vec<f64> {
        if n_channels == 0 {
            return Vec::new();
        }
        vec![self.kappa * (n_modes as f64).sqrt() / n_channels as f64; n_channels]
    }

    fn descriptor(&self) -> Descriptor {
        Descriptor::new("bounded_tanh", vec![self.kappa])
    }

    fn is_zero(&self) -> bool {
        self.kappa == 0.0
    }
}

pub fn registry() -> Registry<dyn Nonlinearity> {
    let mut r = Registry::new("nonlinearity");
    r.register("zero", "F = 0", |a| {
        expect_args("zero", a, 0, 0)?;
        Ok(Arc::new(Zero) as Arc<dyn Nonlinearity>)
    })
    .register("bounded_tanh", "kappa tanh of the channel average, per mode", |a| {
        expect_args("bounded_tanh", a, 1, 1)?;
        Ok(Arc::new(BoundedTanh::new(a[0])?))
    });
    r
}
