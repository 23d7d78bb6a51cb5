//! Delay functions δ_i, σ_j : [0, a] → [0, a] with δ(t) ≤ t.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::registry::{expect_args, Descriptor, Registry};

pub trait DelayFunction: Debug + Send + Sync {
    fn eval(&self, t: f64) -> f64;
    fn descriptor(&self) -> Descriptor;
    /// True when δ(t) = t, so the delayed value is the current state.
    fn is_identity(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl DelayFunction for Identity {
    fn eval(&self, t: f64) -> f64 {
        t
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::bare("identity")
    }
    fn is_identity(&self) -> bool {
        true
    }
}

/// t ↦ sin(t/τ).
#[derive(Debug, Clone, Copy)]
pub struct ScaledSine {
    tau: f64,
}

impl ScaledSine {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::BadDescriptor(format!("scaled_sine: tau = {tau} must be positive")));
        }
        Ok(Self { tau })
    }
}

impl DelayFunction for ScaledSine {
    fn eval(&self, t: f64) -> f64 {
        (t / self.tau).sin()
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("scaled_sine", vec![self.tau])
    }
}

/// t ↦ max(t - ℓ, 0).
#[derive(Debug, Clone, Copy)]
pub struct ConstantLag {
    lag: f64,
}

impl ConstantLag {
    pub fn new(lag: f64) -> Result<Self> {
        if !(lag >= 0.0) {
            return Err(Error::BadDescriptor(format!("constant_lag: lag = {lag} must be non-negative")));
        }
        Ok(Self { lag })
    }
}

impl DelayFunction for ConstantLag {
    fn eval(&self, t: f64) -> f64 {
        (t - self.lag).max(0.0)
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("constant_lag", vec![self.lag])
    }
    fn is_identity(&self) -> bool {
        self.lag == 0.0
    }
}

/// t ↦ k t. Only 0 ≤ k ≤ 1 passes model validation.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    k: f64,
}

impl Linear {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::BadDescriptor(format!("linear: slope {k} must be finite")));
        }
        Ok(Self { k })
    }
}

impl DelayFunction for Linear {
    fn eval(&self, t: f64) -> f64 {
        self.k * t
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::new("linear", vec![self.k])
    }
    fn is_identity(&self) -> bool {
        self.k == 1.0
    }
}

pub fn registry() -> Registry<dyn DelayFunction> {
    let mut r = Registry::new("delay");
    r.register("identity", "t", |a| {
        expect_args("identity", a, 0, 0)?;
        Ok(Arc::new(Identity) as Arc<dyn DelayFunction>)
    })
    .register("scaled_sine", "sin(t/tau)", |a| {
        expect_args("scaled_sine", a, 1, 1)?;
        Ok(Arc::new(ScaledSine::new(a[0])?))
    })
    .register("constant_lag", "max(t - lag, 0)", |a| {
        expect_args("constant_lag", a, 1, 1)?;
        Ok(Arc::new(ConstantLag::new(a[0])?))
    })
    .register("linear", "k t", |a| {
        expect_args("linear", a, 1, 1)?;
        Ok(Arc::new(Linear::new(a[0])?))
    });
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let r = registry();
        assert_eq!(r.create_str("identity").unwrap().eval(0.7), 0.7);
        let s = r.create_str("scaled_sine(2)").unwrap();
        assert!((s.eval(1.0) - 0.5_f64.sin()).abs() < 1e-16);
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(r.create_str("constant_lag(0.25)").unwrap().eval(0.1), 0.0);
        assert_eq!(r.create_str("constant_lag(0.25)").unwrap().eval(1.0), 0.75);
        assert_eq!(r.create_str("linear(2)").unwrap().eval(0.5), 1.0);
    }

    #[test]
    fn argument_checks() {
        let r = registry();
        assert!(r.create_str("scaled_sine").is_err());
        assert!(r.create_str("scaled_sine(0)").is_err());
        assert!(r.create_str("identity(1)").is_err());
        assert!(r.create_str("constant_lag(-1)").is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let r = registry();
        for s in ["identity", "scaled_sine(1.5)", "constant_lag(0.25)", "linear(0.5)"] {
            assert_eq!(r.create_str(s).unwrap().descriptor().to_string(), s);
        }
    }
}
