//! Simulation and moments of the base process and its short-memory variants.
//!
//! All constructions share one Wiener draw per `(seed, path)`:
//!
//! * base: `ξ(t) = ∫ a ds + ∫ b dW`, left-point sums on the grid;
//! * short memory: `ξ(t) = ∫ a ds + ∫ b(s) w(s, t) dW(s)` with the memory
//!   weight `w(s, t) = 1 + F(s, t)/(t - t0)`. The weight depends on the
//!   evaluation time, so each evaluation time is a separate construction
//!   rather than one adapted path;
//! * full memory: the fixed point of
//!   `ξ(tᵢ) = base(tᵢ) + (1/(tᵢ - t0)) Σ_{j<i} f(tᵢ - s_j) (ξ(s_j) - mean(s_j)) Δ`
//!   found by Picard iteration. The first iterate is the first-order
//!   (second-order memory dropped) construction.
//!
//! The mean used for deviations is the grid's own left-point drift sum, the
//! discrete counterpart of `∫ a ds`, so that the memory term has exactly
//! zero mean on the grid.
//!
//! Since Wiener increments are independent, the variance of the short-memory
//! value at `t` is `∫ b(s)² w(s, t)² ds`; see [`short_memory_variance`].

mod impulse;
mod stats;

pub use impulse::{simulate_impulse_sum, Impulse, ImpulseModel};
pub use stats::{mc_statistics, McStats};

use crate::coeffs::{CoefficientCurve, CurveRole, Integrand};
use crate::error::{invalid, Error, Result};
use crate::kernel::MemoryKernel;
use crate::quad;
use crate::rng::StreamKey;

/// Default Picard stopping tolerance (max-norm change between iterates).
pub const PICARD_TOL: f64 = 1e-10;
/// Default Picard iteration cap.
pub const PICARD_MAX_ITER: usize = 50;

/// Drift, impulse volatility, memory kernel and window start.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub a: CoefficientCurve,
    pub b: CoefficientCurve,
    pub kernel: MemoryKernel,
    pub t0: f64,
}

impl ProcessSpec {
    pub fn new(
        a: CoefficientCurve,
        b: CoefficientCurve,
        kernel: MemoryKernel,
        t0: f64,
    ) -> Result<Self> {
        let a = a.validated(CurveRole::Drift)?;
        let b = b.validated(CurveRole::Volatility)?;
        if !t0.is_finite() {
            return Err(invalid("t0", format!("must be finite, got {t0}")));
        }
        a.eval(t0)?;
        b.eval(t0)?;
        Ok(Self { a, b, kernel, t0 })
    }

    /// Same spec with another kernel depth.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Ok(Self {
            kernel: self.kernel.with_tau(tau)?,
            ..self.clone()
        })
    }

    fn check_window(&self, t: f64) -> Result<f64> {
        let w = t - self.t0;
        if !(w >= crate::effvol::MIN_WINDOW) {
            return Err(Error::DegenerateWindow(w));
        }
        Ok(w)
    }
}

/// Uniform time grid `t0 + iΔ`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be >= 1"));
        }
        if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(invalid(
                "grid",
                format!("need finite t0 < T, got [{t0}, {t_end}]"),
            ));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point equal to `t` (up to rounding).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt();
        let i = x.round();
        let scale = self.t_end.abs().max(self.t0.abs()).max(1.0);
        if i < 0.0 || i > self.n_steps as f64 || (self.time(i as usize) - t).abs() > 1e-9 * scale {
            return Err(Error::GridMismatch(format!("t = {t} is not a grid point")));
        }
        Ok(i as usize)
    }

    /// Same span with half as many steps.
    pub fn coarsened(&self) -> Result<Self> {
        if !self.n_steps.is_multiple_of(2) {
            return Err(invalid("n_steps", "coarsening needs an even step count"));
        }
        Self::new(self.t0, self.t_end, self.n_steps / 2)
    }
}

/// Wiener increments `dW_j ~ N(0, Δ)` for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrements {
    pub grid: TimeGrid,
    pub key: StreamKey,
    pub dw: Vec<f64>,
}

impl WienerIncrements {
    pub fn generate(grid: TimeGrid, key: impl Into<StreamKey>) -> Self {
        let key = key.into();
        let sd = grid.dt().sqrt();
        let mut dw = key.normals(grid.n_steps());
        dw.iter_mut().for_each(|z| *z *= sd);
        Self { grid, key, dw }
    }

    /// Pairwise sums: the same Brownian path on a grid with half the steps.
    pub fn coarsened(&self) -> Result<Self> {
        let grid = self.grid.coarsened()?;
        let dw = self.dw.chunks_exact(2).map(|p| p[0] + p[1]).collect();
        Ok(Self {
            grid,
            key: self.key,
            dw,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathKind {
    Base,
    /// Short-memory construction evaluated at every grid time.
    ShortMemory,
    /// One Picard iterate: the memory recursion without second-order terms.
    FirstOrder,
    FullMemory,
    /// Adapted SDE stepping (asset or log-price paths).
    Sde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: TimeGrid,
    pub key: StreamKey,
    pub dw: Vec<f64>,
    /// `values[0] = 0` at `t0`; `n_steps + 1` entries.
    pub values: Vec<f64>,
    pub kind: PathKind,
}

impl SamplePath {
    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Full-memory path plus the number of Picard iterations used.
#[derive(Debug, Clone, PartialEq)]
pub struct FullMemoryPath {
    pub path: SamplePath,
    pub iterations: usize,
}

/// Per-grid precomputation shared by every path of a batch.
#[derive(Debug, Clone)]
pub struct ProcessSimulator {
    spec: ProcessSpec,
    grid: TimeGrid,
    times: Vec<f64>,
    /// `b(s_j)` at left points.
    b_left: Vec<f64>,
    /// Left-point drift sums `Σ_{j<i} a(s_j) Δ`, `n + 1` entries.
    drift: Vec<f64>,
    /// Kernel at lags `n·Δ, (n-1)·Δ, ..., 0` (reversed for contiguous dots).
    lag_rev: Vec<f64>,
    /// Number of lags with a nonzero kernel value.
    support: usize,
    /// Integrated kernel `F` at lags `k·Δ`, `n + 1` entries.
    lag_integral: Vec<f64>,
    /// Memory weights `w(s_j, T)` for the terminal time.
    terminal_weights: Vec<f64>,
}

impl ProcessSimulator {
    pub fn new(spec: &ProcessSpec, grid: TimeGrid) -> Result<Self> {
        if grid.t0() != spec.t0 {
            return Err(Error::GridMismatch(format!(
                "grid starts at {} but the process starts at t0 = {}",
                grid.t0(),
                spec.t0
            )));
        }
        let n = grid.n_steps();
        let dt = grid.dt();
        let times = grid.times();
        spec.a.eval(grid.t_end())?;
        spec.b.eval(grid.t_end())?;
        let mut b_left = Vec::with_capacity(n);
        let mut drift = Vec::with_capacity(n + 1);
        drift.push(0.0);
        let mut acc = 0.0;
        for &s in &times[..n] {
            b_left.push(spec.b.eval(s)?);
            acc += spec.a.eval(s)? * dt;
            drift.push(acc);
        }
        let lags: Vec<f64> = (0..=n).map(|k| spec.kernel.at(k as f64 * dt)).collect();
        let support = lags.iter().rposition(|&f| f != 0.0).map_or(0, |k| k + 1);
        let lag_rev = lags.into_iter().rev().collect();
        let lag_integral = (0..=n)
            .map(|k| spec.kernel.integral_over_lag(k as f64 * dt))
            .collect();
        let mut sim = Self {
            spec: spec.clone(),
            grid,
            times,
            b_left,
            drift,
            lag_rev,
            support,
            lag_integral,
            terminal_weights: Vec::new(),
        };
        sim.terminal_weights = sim.weights_at(n);
        Ok(sim)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    /// Grid drift sums, the discrete mean of every construction.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    fn weights_at(&self, m: usize) -> Vec<f64> {
        let w = self.times[m] - self.spec.t0;
        self.lag_integral[1..=m]
            .iter()
            .rev()
            .map(|&g| 1.0 + g / w)
            .collect()
    }

    fn check(&self, inc: &WienerIncrements) -> Result<()> {
        if inc.grid != self.grid {
            return Err(Error::GridMismatch(
                "increments were drawn on another grid".into(),
            ));
        }
        Ok(())
    }

    pub fn increments(&self, key: impl Into<StreamKey>) -> WienerIncrements {
        WienerIncrements::generate(self.grid, key)
    }

    pub fn base(&self, inc: &WienerIncrements) -> Result<Vec<f64>> {
        self.check(inc)?;
        let mut values = Vec::with_capacity(self.drift.len());
        values.push(0.0);
        let mut noise = 0.0;
        for (j, (&b, &dw)) in self.b_left.iter().zip(&inc.dw).enumerate() {
            noise += b * dw;
            values.push(self.drift[j + 1] + noise);
        }
        Ok(values)
    }

    fn short_memory_with(&self, inc: &WienerIncrements, m: usize, weights: &[f64]) -> f64 {
        let mut noise = 0.0;
        for ((&b, &w), &dw) in self.b_left[..m].iter().zip(weights).zip(&inc.dw[..m]) {
            noise += b * w * dw;
        }
        self.drift[m] + noise
    }

    /// Short-memory value at grid index `m`.
    pub fn short_memory_at(&self, inc: &WienerIncrements, m: usize) -> Result<f64> {
        self.check(inc)?;
        if m == 0 || m > self.grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "evaluation index {m} outside 1..=n_steps"
            )));
        }
        if m == self.grid.n_steps() {
            return Ok(self.short_memory_with(inc, m, &self.terminal_weights));
        }
        Ok(self.short_memory_with(inc, m, &self.weights_at(m)))
    }

    /// Short-memory construction evaluated at every grid time, `O(n²)`.
    pub fn short_memory_path(&self, inc: &WienerIncrements) -> Result<Vec<f64>> {
        self.check(inc)?;
        let n = self.grid.n_steps();
        let mut values = vec![0.0; n + 1];
        for (m, v) in values.iter_mut().enumerate().skip(1) {
            *v = self.short_memory_at(inc, m)?;
        }
        Ok(values)
    }

    /// One Picard update: `base + (Δ/(tᵢ - t0)) Σ_{j<i} f(tᵢ - s_j) (prev_j - drift_j)`.
    pub fn picard_step(&self, base: &[f64], prev: &[f64]) -> Vec<f64> {
        let n = self.grid.n_steps();
        let dt = self.grid.dt();
        let dev: Vec<f64> = prev.iter().zip(&self.drift).map(|(x, m)| x - m).collect();
        let mut next = Vec::with_capacity(n + 1);
        next.push(base[0]);
        for i in 1..=n {
            let lo = i.saturating_sub(self.support);
            // f(tᵢ - s_j) = lag_rev[n - i + j]
            let f = &self.lag_rev[n - i + lo..n];
            let acc = dot(&dev[lo..i], f);
            next.push(base[i] + acc * dt / (self.times[i] - self.spec.t0));
        }
        next
    }

    /// First-order memory construction (one Picard iterate from the base
    /// path).
    pub fn first_order(&self, inc: &WienerIncrements) -> Result<Vec<f64>> {
        let base = self.base(inc)?;
        Ok(self.picard_step(&base, &base))
    }

    /// Picard iteration to the full-memory fixed point.
    pub fn full_memory(
        &self,
        inc: &WienerIncrements,
        max_iter: usize,
        tol: f64,
    ) -> Result<(Vec<f64>, usize)> {
        if max_iter == 0 {
            return Err(invalid("max_iter", "must be >= 1"));
        }
        if !(tol > 0.0) {
            return Err(invalid("tol", format!("must be > 0, got {tol}")));
        }
        let base = self.base(inc)?;
        let mut current = base.clone();
        let mut change = f64::INFINITY;
        for iteration in 1..=max_iter {
            let next = self.picard_step(&base, &current);
            change = next
                .iter()
                .zip(&current)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            current = next;
            if change <= tol {
                return Ok((current, iteration));
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            change,
        })
    }

    fn path(&self, inc: WienerIncrements, values: Vec<f64>, kind: PathKind) -> SamplePath {
        SamplePath {
            grid: self.grid,
            key: inc.key,
            dw: inc.dw,
            values,
            kind,
        }
    }
}

// Four-way unrolled dot product; fixed association order for a given length.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let tail: f64 = xc
        .remainder()
        .iter()
        .zip(yc.remainder())
        .map(|(a, b)| a * b)
        .sum();
    for (a, b) in xc.zip(yc) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `(∫ a ds, ∫ b² ds)` over `[t0, t]`.
pub fn base_moments(spec: &ProcessSpec, t: f64) -> Result<(f64, f64)> {
    if t < spec.t0 {
        return Err(Error::ReversedInterval { s: spec.t0, t });
    }
    Ok((
        spec.a.integrate(spec.t0, t, Integrand::Value)?,
        spec.b.integrate(spec.t0, t, Integrand::Squared)?,
    ))
}

pub fn simulate_base_path(
    spec: &ProcessSpec,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
) -> Result<SamplePath> {
    let sim = ProcessSimulator::new(spec, grid)?;
    let inc = sim.increments(key);
    let values = sim.base(&inc)?;
    Ok(sim.path(inc, values, PathKind::Base))
}

/// `w(s, t) = 1 + F(s, t)/(t - t0)`.
pub fn memory_weight(spec: &ProcessSpec, s: f64, t: f64) -> Result<f64> {
    let w = spec.check_window(t)?;
    if s < spec.t0 {
        return Err(Error::ReversedInterval { s: spec.t0, t: s });
    }
    Ok(1.0 + spec.kernel.integral(s, t)? / w)
}

/// Short-memory value at the grid time `t_eval`, using the same increments
/// as [`simulate_base_path`] for the same key.
pub fn simulate_short_memory(
    spec: &ProcessSpec,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
    t_eval: f64,
) -> Result<f64> {
    let m = grid.index_of(t_eval)?;
    spec.check_window(t_eval)?;
    let sim = ProcessSimulator::new(spec, grid)?;
    let inc = sim.increments(key);
    sim.short_memory_at(&inc, m)
}

/// Short-memory construction at every grid time.
pub fn simulate_short_memory_path(
    spec: &ProcessSpec,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
) -> Result<SamplePath> {
    let sim = ProcessSimulator::new(spec, grid)?;
    let inc = sim.increments(key);
    let values = sim.short_memory_path(&inc)?;
    Ok(sim.path(inc, values, PathKind::ShortMemory))
}

/// `∫ b(s)² w(s, t)² ds` over `[t0, t]`.
pub fn short_memory_variance(spec: &ProcessSpec, t: f64, tol: f64) -> Result<f64> {
    let w = spec.check_window(t)?;
    spec.b.eval(t)?;
    let (b, k, t0) = (&spec.b, spec.kernel, spec.t0);
    if k.is_degenerate() {
        return b.integrate(t0, t, Integrand::Squared);
    }
    let integrand = |s: f64| {
        let bs = b.eval(s).unwrap_or(f64::NAN);
        let wt = 1.0 + k.integral_over_lag(t - s) / w;
        bs * bs * wt * wt
    };
    let mut cuts = b.breakpoints(t0, t);
    cuts.extend([1.0, 4.0, 10.0].iter().map(|c| t - c * k.tau()));
    Ok(quad::integrate_split(integrand, t0, t, &cuts, tol))
}

pub fn simulate_first_order(
    spec: &ProcessSpec,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
) -> Result<SamplePath> {
    let sim = ProcessSimulator::new(spec, grid)?;
    let inc = sim.increments(key);
    let values = sim.first_order(&inc)?;
    Ok(sim.path(inc, values, PathKind::FirstOrder))
}

pub fn simulate_full_memory(
    spec: &ProcessSpec,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
    max_iter: usize,
    tol: f64,
) -> Result<FullMemoryPath> {
    let sim = ProcessSimulator::new(spec, grid)?;
    let inc = sim.increments(key);
    let (values, iterations) = sim.full_memory(&inc, max_iter, tol)?;
    Ok(FullMemoryPath {
        path: sim.path(inc, values, PathKind::FullMemory),
        iterations,
    })
}
