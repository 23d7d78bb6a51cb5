//! Per-mode multiplier profiles for the state operators A_i and the control
//! operators B_j. Everything here is diagonal in the sine basis.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::registry::{expect_args, Descriptor, Registry};

pub trait MultiplierProfile: Debug + Send + Sync {
    /// Factors for modes 1..=n_modes.
    fn factors(&self, n_modes: usize) -> Result<Vec<f64>>;
    fn descriptor(&self) -> Descriptor;
}

#[derive(Debug, Clone, Copy)]
pub struct Constant {
    value: f64,
    name: &'static str,
}

impl Constant {
    pub fn new(value: f64) -> Self {
        Self { value, name: "constant" }
    }

    pub fn identity() -> Self {
        Self { value: 1.0, name: "identity" }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, name: "zero" }
    }
}

impl MultiplierProfile for Constant {
    fn factors(&self, n_modes: usize) -> Result<Vec<f64>> {
        Ok(vec![self.value; n_modes])
    }
    fn descriptor(&self) -> Descriptor {
        match self.name {
            "constant" => Descriptor::new("constant", vec![self.value]),
            other => Descriptor::bare(other),
        }
    }
}

/// ∂_x^k on sin(nx) for even k: (-1)^{k/2} n^k.
#[derive(Debug, Clone, Copy)]
pub struct Derivative {
    order: u32,
}

impl Derivative {
    pub fn new(order: f64) -> Result<Self> {
        if order < 0.0 || order.fract() != 0.0 || order > 16.0 {
            return Err(Error::BadDescriptor(format!(
                "derivative: order {order} must be an integer in 0..=16"
            )));
        }
        let order = order as u32;
        if order % 2 == 1 {
            return Err(Error::BadDescriptor(format!(
                "derivative: odd order {order} maps sines to cosines and leaves the sine basis"
            )));
        }
        Ok(Self { order })
    }
}

impl MultiplierProfile for Derivative {
    fn factors(&self, n_modes: usize) -> Result<Vec<f64>> {
        let sign = if (self.order / 2) % 2 == 0 { 1.0 } else { -1.0 };
        Ok((1..=n_modes)
            .map(|n| sign * (n as f64).powi(self.order as i32))
            .collect())
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("derivative", vec![self.order as f64])
    }
}

/// Explicit per-mode list; its length must equal the truncation.
#[derive(Debug, Clone)]
pub struct ModeList {
    values: Vec<f64>,
}

impl ModeList {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::BadDescriptor("modes: needs at least one value".into()));
        }
        Ok(Self { values })
    }
}

impl MultiplierProfile for ModeList {
    fn factors(&self, n_modes: usize) -> Result<Vec<f64>> {
        if self.values.len() != n_modes {
            return Err(Error::TruncationMismatch {
                left: self.values.len(),
                right: n_modes,
            });
        }
        Ok(self.values.clone())
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("modes", self.values.clone())
    }
}

pub fn registry() -> Registry<dyn MultiplierProfile> {
    let mut r = Registry::new("multiplier");
    r.register("identity", "1 on every mode", |a| {
        expect_args("identity", a, 0, 0)?;
        Ok(Arc::new(Constant::identity()) as Arc<dyn MultiplierProfile>)
    })
    .register("zero", "0 on every mode", |a| {
        expect_args("zero", a, 0, 0)?;
        Ok(Arc::new(Constant::zero()))
    })
    .register("constant", "c on every mode", |a| {
        expect_args("constant", a, 1, 1)?;
        Ok(Arc::new(Constant::new(a[0])))
    })
    .register("derivative", "even-order spatial derivative, (-1)^(k/2) n^k", |a| {
        expect_args("derivative", a, 1, 1)?;
        Ok(Arc::new(Derivative::new(a[0])?))
    })
    .register("modes", "explicit per-mode factors", |a| {
        expect_args("modes", a, 1, usize::MAX)?;
        Ok(Arc::new(ModeList::new(a.to_vec())?))
    });
    r
}
