//! Memory weight functions `f(u, τ)` of the lag `u = t - s`.
//!
//! Every kernel here satisfies `f(0, τ) = 1`, decays to zero at large lag and
//! vanishes for any positive lag as `τ → 0⁺`. Kernels are also nonnegative,
//! bounded by one and nonincreasing in the lag. `τ = 0` is the degenerate
//! kernel: one at zero lag, zero elsewhere.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::special::erf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `exp(-u²/τ²)`
    Gaussian,
    /// `exp(-u/τ)`
    Exponential,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Exponential => "exponential",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Self::Gaussian),
            "exponential" => Ok(Self::Exponential),
            other => Err(invalid(
                "kernel",
                format!("unknown kernel family `{other}` (expected gaussian|exponential)"),
            )),
        }
    }
}

/// A memory kernel: family plus memory depth `τ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryKernel {
    family: KernelFamily,
    tau: f64,
}

impl MemoryKernel {
    pub fn new(family: KernelFamily, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(invalid(
                "tau",
                format!("memory depth must be finite and >= 0, got {tau}"),
            ));
        }
        Ok(Self { family, tau })
    }

    pub fn gaussian(tau: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, tau)
    }

    pub fn exponential(tau: f64) -> Result<Self> {
        Self::new(KernelFamily::Exponential, tau)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// True for `τ = 0`, where memory vanishes.
    pub fn is_degenerate(&self) -> bool {
        self.tau == 0.0
    }

    /// Same family with a different depth.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.family, tau)
    }

    /// `f(u, τ)` for a nonnegative lag `u`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::NegativeLag(u));
        }
        Ok(self.at(u))
    }

    // Unchecked hot-path evaluation, u >= 0.
    #[inline]
    pub(crate) fn at(&self, u: f64) -> f64 {
        if self.tau == 0.0 {
            return if u == 0.0 { 1.0 } else { 0.0 };
        }
        let x = u / self.tau;
        match self.family {
            KernelFamily::Gaussian => (-x * x).exp(),
            KernelFamily::Exponential => (-x).exp(),
        }
    }

    /// `F(s, t) = ∫ₛᵗ f(t - x, τ) dx`, in closed form.
    pub fn integral(&self, s: f64, t: f64) -> Result<f64> {
        if s > t {
            return Err(Error::ReversedInterval { s, t });
        }
        Ok(self.integral_over_lag(t - s))
    }

    /// `∫₀ᴸ f(u, τ) du` for a lag span `L ≥ 0`.
    #[inline]
    pub(crate) fn integral_over_lag(&self, lag: f64) -> f64 {
        if self.tau == 0.0 || lag == 0.0 {
            return 0.0;
        }
        let tau = self.tau;
        let v = match self.family {
            KernelFamily::Gaussian => 0.5 * tau * PI.sqrt() * erf(lag / tau),
            KernelFamily::Exponential => -tau * (-lag / tau).exp_m1(),
        };
        // Guard the [0, lag] range against the last ulp.
        v.min(lag)
    }
}

impl fmt::Display for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(tau={})", self.family, self.tau)
    }
}
