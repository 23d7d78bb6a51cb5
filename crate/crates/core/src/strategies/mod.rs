//! Interchangeable model ingredients. Each family is a trait; the built-in
//! implementations are registered by name in [`crate::registry`].

pub mod allocation;
pub mod delay;
pub mod multiplier;
pub mod nonlinearity;
pub mod shape;

pub use allocation::{AllChannels, ControlAllocation, LastChannel};
pub use delay::{ConstantLag, DelayFunction, Identity, Linear, ScaledSine};
pub use multiplier::{Constant, Derivative, ModeList, MultiplierProfile};
pub use nonlinearity::{BoundedTanh, Nonlinearity, Zero};
pub use shape::{Coefficients, GaussianBump, SingleMode, StateShape, ZeroShape};
