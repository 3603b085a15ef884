//! Effective volatility `B̃(t)` of the short-memory log-price process.
//!
//! With window `W = t - t0` and `F(s, t) = ∫ₛᵗ f(t - x, τ) dx`:
//!
//! ```text
//! exact:       B̃ = b(t) + (1/W) ∫ b(s) [ f(t - s, τ) - F(s, t) / W ] ds
//! asymptotic:  B̃ = b(t) + (1/W) ∫ b(s) f(t - s, τ) ds
//! gaussian:    exact with f = exp(-u²/τ²) and F = (τ√π/2) erf((t - s)/τ)
//! ```
//!
//! All outer integrals run over `s ∈ [t0, t]`. The exact form evaluates the
//! inner integral `F` by nested quadrature of the kernel, so it works for any
//! kernel family and is independent of the erf closed form used by the
//! gaussian method. The bracket is the time derivative of the memory weight
//! `1 + F(s, t)/W`, so the asymptotic form drops its second term and is an
//! upper bound of the exact one for nonnegative kernels.

use std::fmt;
use std::str::FromStr;

use crate::coeffs::CoefficientCurve;
use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelFamily, MemoryKernel};
use crate::quad;
use crate::special::erf;

/// Windows shorter than this are rejected.
pub const MIN_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffVolMethod {
    Exact,
    Asymptotic,
    GaussianClosed,
}

impl fmt::Display for EffVolMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Asymptotic => "asymptotic",
            Self::GaussianClosed => "gaussian",
        })
    }
}

impl FromStr for EffVolMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Self::Exact),
            "asymptotic" => Ok(Self::Asymptotic),
            "gaussian" | "gaussian-closed" => Ok(Self::GaussianClosed),
            other => Err(invalid(
                "method",
                format!("unknown method `{other}` (expected exact|asymptotic|gaussian)"),
            )),
        }
    }
}

/// Point request: impulse volatility, kernel, window start and evaluation
/// time.
#[derive(Debug, Clone, Copy)]
pub struct EffVolRequest<'a> {
    pub b: &'a CoefficientCurve,
    pub kernel: MemoryKernel,
    pub t0: f64,
    pub t: f64,
}

impl<'a> EffVolRequest<'a> {
    pub fn new(b: &'a CoefficientCurve, kernel: MemoryKernel, t0: f64, t: f64) -> Self {
        Self { b, kernel, t0, t }
    }

    fn window(&self) -> Result<f64> {
        let w = self.t - self.t0;
        if !(w >= MIN_WINDOW) {
            return Err(Error::DegenerateWindow(w));
        }
        self.b.eval(self.t0)?;
        Ok(w)
    }

    // Knots of b plus a few points near s = t where the kernel varies.
    fn breakpoints(&self) -> Vec<f64> {
        let mut cuts = self.b.breakpoints(self.t0, self.t);
        let tau = self.kernel.tau();
        cuts.extend([1.0, 4.0, 10.0].iter().map(|c| self.t - c * tau));
        cuts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute tolerance of the outer integral over `s`.
    pub tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: quad::DEFAULT_TOL,
        }
    }
}

/// Memory excess integral `∫ b(s) g(s) ds / W`, shared by all methods.
fn excess<G: Fn(f64) -> f64>(req: &EffVolRequest<'_>, w: f64, tol: f64, g: G) -> f64 {
    let b = req.b;
    // Curve evaluation inside [t0, t] cannot fail once both ends are checked.
    let integrand = |s: f64| b.eval(s).unwrap_or(f64::NAN) * g(s);
    quad::integrate_split(integrand, req.t0, req.t, &req.breakpoints(), tol * w) / w
}

/// Effective volatility with the inner integral done by quadrature.
pub fn effective_vol_exact(req: &EffVolRequest<'_>, opts: QuadOptions) -> Result<f64> {
    let w = req.window()?;
    let bt = req.b.eval(req.t)?;
    if req.kernel.is_degenerate() {
        return Ok(bt);
    }
    let k = req.kernel;
    let t = req.t;
    let inner_tol = opts.tol * 1e-2;
    let g = |s: f64| {
        let inner = quad::integrate(
            |x| k.at(t - x),
            s,
            t,
            inner_tol * (t - s).max(MIN_WINDOW) / w,
        );
        k.at(t - s) - inner / w
    };
    Ok(bt + excess(req, w, opts.tol, g))
}

/// Small-τ form: drops the inner-integral term of the exact bracket.
pub fn effective_vol_asymptotic(req: &EffVolRequest<'_>, opts: QuadOptions) -> Result<f64> {
    let w = req.window()?;
    let bt = req.b.eval(req.t)?;
    if req.kernel.is_degenerate() {
        return Ok(bt);
    }
    let k = req.kernel;
    let t = req.t;
    Ok(bt + excess(req, w, opts.tol, |s| k.at(t - s)))
}

/// Gaussian-kernel form with the analytic inner integral.
pub fn effective_vol_gaussian(req: &EffVolRequest<'_>, opts: QuadOptions) -> Result<f64> {
    if req.kernel.family() != KernelFamily::Gaussian {
        return Err(Error::WrongKernelFamily);
    }
    let w = req.window()?;
    let bt = req.b.eval(req.t)?;
    if req.kernel.is_degenerate() {
        return Ok(bt);
    }
    let tau = req.kernel.tau();
    let t = req.t;
    let c = tau * std::f64::consts::PI.sqrt() / (2.0 * w);
    let g = |s: f64| {
        let x = (t - s) / tau;
        (-x * x).exp() - c * erf(x)
    };
    Ok(bt + excess(req, w, opts.tol, g))
}

pub fn effective_vol(
    req: &EffVolRequest<'_>,
    method: EffVolMethod,
    opts: QuadOptions,
) -> Result<f64> {
    match method {
        EffVolMethod::Exact => effective_vol_exact(req, opts),
        EffVolMethod::Asymptotic => effective_vol_asymptotic(req, opts),
        EffVolMethod::GaussianClosed => effective_vol_gaussian(req, opts),
    }
}

/// `B̃` tabulated on a caller-supplied grid in `(t0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffVolCurve {
    t0: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    method: Option<EffVolMethod>,
}

impl EffVolCurve {
    /// Builds a curve from explicit values, e.g. a flat volatility.
    pub fn from_values(t0: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid(
                "effvol",
                "times and values must be nonempty and equally long",
            ));
        }
        if !(times[0] > t0) {
            return Err(invalid(
                "effvol",
                format!("grid must start after t0 = {t0}"),
            ));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTime {
                index: i + 1,
                prev: times[i],
                next: times[i + 1],
            });
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid(
                "effvol",
                format!("bad volatility {} at index {i}", values[i]),
            ));
        }
        Ok(Self {
            t0,
            times,
            values,
            method: None,
        })
    }

    /// Flat volatility `value` on `times`.
    pub fn flat(t0: f64, times: Vec<f64>, value: f64) -> Result<Self> {
        let values = vec![value; times.len()];
        Self::from_values(t0, times, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> Option<EffVolMethod> {
        self.method
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Linear interpolation; flat on `[t0, times[0]]` where `B̃` itself is
    /// undefined at `t0`.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        if t < self.t0 || t > self.end() {
            return Err(Error::OutOfDomain {
                t,
                min: self.t0,
                max: self.end(),
            });
        }
        let idx = self.times.partition_point(|&x| x < t);
        if idx == 0 {
            return Ok(self.values[0]);
        }
        if idx == self.times.len() {
            return Ok(self.values[idx - 1]);
        }
        let (ta, tb) = (self.times[idx - 1], self.times[idx]);
        let (va, vb) = (self.values[idx - 1], self.values[idx]);
        Ok(va + (vb - va) * (t - ta) / (tb - ta))
    }

    /// `∫_{t0}^{t} B̃² dt` with `B̃` piecewise constant: the value at
    /// `times[i]` holds on `(times[i-1], times[i]]`, matching the step
    /// convention of the asset simulator.
    pub fn integrated_variance(&self, t: f64) -> Result<f64> {
        if t < self.t0 || t > self.end() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::OutOfDomain {
                t,
                min: self.t0,
                max: self.end(),
            });
        }
        let mut total = 0.0;
        let mut prev = self.t0;
        for (&ti, &v) in self.times.iter().zip(&self.values) {
            let hi = ti.min(t);
            if hi > prev {
                total += v * v * (hi - prev);
            }
            if ti >= t {
                break;
            }
            prev = ti;
        }
        Ok(total)
    }

    /// Root-mean-square volatility over `[t0, t]`.
    pub fn rms(&self, t: f64) -> Result<f64> {
        let w = t - self.t0;
        if !(w > 0.0) {
            return Err(Error::DegenerateWindow(w));
        }
        Ok((self.integrated_variance(t)? / w).sqrt())
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = Self::from_values(
            self.t0,
            self.times.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )?;
        out.method = self.method;
        Ok(out)
    }
}

/// Evaluates `method` at every grid time.
///
/// Points are independent, so they are computed in parallel when the
/// `parallel` feature is on; the result does not depend on scheduling.
pub fn tabulate_effvol(
    b: &CoefficientCurve,
    kernel: MemoryKernel,
    t0: f64,
    grid: &[f64],
    method: EffVolMethod,
    opts: QuadOptions,
) -> Result<EffVolCurve> {
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneTime {
            index: i + 1,
            prev: grid[i],
            next: grid[i + 1],
        });
    }
    let point = |(index, &t): (usize, &f64)| {
        effective_vol(&EffVolRequest::new(b, kernel, t0, t), method, opts).map_err(|e| {
            Error::AtGridPoint {
                index,
                source: Box::new(e),
            }
        })
    };
    #[cfg(feature = "parallel")]
    let values: Result<Vec<f64>> = {
        use rayon::prelude::*;
        grid.par_iter().enumerate().map(point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Result<Vec<f64>> = grid.iter().enumerate().map(point).collect();
    let mut curve = EffVolCurve::from_values(t0, grid.to_vec(), values?)?;
    curve.method = Some(method);
    Ok(curve)
}
