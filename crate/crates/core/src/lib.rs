//! Linear stochastic systems with short memory of their own past deviations
//! from the mean.
//!
//! * [`coeffs`]: drift and impulse-volatility curves
//! * [`kernel`]: memory weight functions and their integrals
//! * [`effvol`]: effective volatility of the memory-augmented process
//! * [`process`]: path simulation, moments and Monte Carlo statistics
//! * [`pricing`]: asset dynamics, Monte Carlo and Crank–Nicolson pricing

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod effvol;
pub mod error;
pub mod kernel;
pub mod parallel;
pub mod pricing;
pub mod process;
pub mod quad;
pub mod rng;
pub mod special;

pub use coeffs::{CoefficientCurve, CurveRole, Integrand};
pub use effvol::{EffVolCurve, EffVolMethod, EffVolRequest, QuadOptions};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, MemoryKernel};
pub use process::{ProcessSpec, SamplePath, TimeGrid};
pub use rng::StreamKey;
