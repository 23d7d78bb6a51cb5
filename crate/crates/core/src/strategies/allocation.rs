//! How the steering signal B_j* T_α(a-t) R(β, Γ) p is distributed over the
//! q control channels.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::Result;
use crate::registry::{expect_args, Descriptor, Registry};

pub trait ControlAllocation: Debug + Send + Sync {
    /// Realized control on `channel` (0-based, of `n_channels`), given the
    /// steering signal `steer` for that channel. Writes into `out`.
    fn allocate(&self, channel: usize, n_channels: usize, steer: &[f64], out: &mut [f64]);
    fn descriptor(&self) -> Descriptor;
}

/// Every channel carries its own steering signal.
#[derive(Debug, Clone, Copy)]
pub struct AllChannels;

impl ControlAllocation for AllChannels {
    fn allocate(&self, _channel: usize, _n_channels: usize, steer: &[f64], out: &mut [f64]) {
        out.copy_from_slice(steer);
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::bare("all_channels")
    }
}

/// Only the last channel steers; the others hold the constant `fill` on
/// every mode.
#[derive(Debug, Clone, Copy)]
pub struct LastChannel {
    fill: f64,
}

impl LastChannel {
    pub fn new(fill: f64) -> Self {
        Self { fill }
    }
}

impl ControlAllocation for LastChannel {
    fn allocate(&self, channel: usize, n_channels: usize, steer: &[f64], out: &mut [f64]) {
        if channel + 1 == n_channels {
            out.copy_from_slice(steer);
        } else {
            out.fill(self.fill);
        }
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("last_channel", vec![self.fill])
    }
}

pub fn registry() -> Registry<dyn ControlAllocation> {
    let mut r = Registry::new("allocation");
    r.register("all_channels", "each channel carries B_j* T(a-t) R p", |a| {
        expect_args("all_channels", a, 0, 0)?;
        Ok(Arc::new(AllChannels) as Arc<dyn ControlAllocation>)
    })
    .register("last_channel", "channel q steers, the others hold a constant", |a| {
        expect_args("last_channel", a, 0, 1)?;
        Ok(Arc::new(LastChannel::new(a.first().copied().unwrap_or(0.0))))
    });
    r
}

pub fn default_allocation() -> Result<Arc<dyn ControlAllocation>> {
    Ok(Arc::new(AllChannels))
}
