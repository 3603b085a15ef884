//! Crank–Nicolson solver for
//!
//! ```text
//! ∂V/∂t + ½ B̃²(t) S² ∂²V/∂S² + c S ∂V/∂S - r V = 0
//! ```
//!
//! with `c = r` (arbitrage-free) or `c = 1` (the variant without the rate on
//! the first-order term).
//!
//! With time to maturity `τ`, the substitution `V = e^{-rτ} U(τ, F)`,
//! `F = S e^{cτ}` removes both the discount and the first-order term, leaving
//! `∂U/∂τ = ½ B̃² F² ∂²U/∂F²`, which is solved on a uniform grid in `F` with
//! the strike on a node. Working in `F` keeps the scheme free of
//! convection-driven oscillations when `B̃` is tiny. The first two steps from
//! the payoff are replaced by four fully implicit half-steps (Rannacher
//! startup). `B̃` is taken at each step's midpoint by linear interpolation of
//! the effective-volatility curve. Dirichlet values: `U(0) = payoff(0)`,
//! `U(F_max) = payoff(F_max)`, which is `V(S_max) = S_max - K e^{-rτ}` for a
//! call and `V(0) = K e^{-rτ}` for a put when `c = r`.

use std::fmt;
use std::str::FromStr;

use super::{AssetModel, OptionSpec};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DriftCoefficient {
    /// `r S ∂V/∂S`
    #[default]
    Rate,
    /// `S ∂V/∂S`
    One,
}

impl fmt::Display for DriftCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rate => "r",
            Self::One => "one",
        })
    }
}

impl FromStr for DriftCoefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "r" => Ok(Self::Rate),
            "one" => Ok(Self::One),
            other => Err(invalid(
                "pde.drift_coefficient",
                format!("expected r|one, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeGrid {
    /// Upper end of the forward-price grid; `None` uses
    /// `max(4K, 4 S0 e^{cT})`, widened so the strike falls on a node.
    pub s_max: Option<f64>,
    pub n_space: usize,
    pub n_time: usize,
    /// Relative accuracy target for the refinement check in [`pde_price`].
    pub tolerance: f64,
}

impl Default for PdeGrid {
    fn default() -> Self {
        Self {
            s_max: None,
            n_space: 400,
            n_time: 400,
            tolerance: 5e-4,
        }
    }
}

impl PdeGrid {
    pub fn new(n_space: usize, n_time: usize) -> Self {
        Self {
            n_space,
            n_time,
            ..Self::default()
        }
    }

    fn validate(&self, strike: f64) -> Result<()> {
        if self.n_space < 50 {
            return Err(invalid(
                "n_space",
                format!("must be >= 50, got {}", self.n_space),
            ));
        }
        if self.n_time < 50 {
            return Err(invalid(
                "n_time",
                format!("must be >= 50, got {}", self.n_time),
            ));
        }
        if let Some(s_max) = self.s_max {
            if !(s_max >= 4.0 * strike) {
                return Err(invalid(
                    "s_max",
                    format!("must be >= 4 x strike, got {s_max}"),
                ));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance", "must be > 0"));
        }
        Ok(())
    }
}

/// `values[k][i]` is `V(times[k], spots[i])`; times ascend from `t0` to the
/// maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub times: Vec<f64>,
    pub spots: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ValueSurface {
    /// Linear interpolation in spot at time index `k`.
    pub fn value_at(&self, k: usize, s: f64) -> f64 {
        let ds = self.spots[1] - self.spots[0];
        let x = (s / ds).clamp(0.0, (self.spots.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.spots.len() - 2);
        let w = x - i as f64;
        let row = &self.values[k];
        row[i] * (1.0 - w) + row[i + 1] * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub price: f64,
    /// `|V(grid) - V(grid / 2)| / 3`, the Richardson estimate for a
    /// second-order scheme.
    pub error_estimate: f64,
    pub surface: ValueSurface,
}

struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Tridiagonal {
    // Thomas algorithm; the system is diagonally dominant for this operator.
    fn solve(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        let n = rhs.len();
        scratch[0] = self.upper[0] / self.diag[0];
        rhs[0] /= self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.lower[i] * scratch[i - 1];
            scratch[i] = self.upper[i] / m;
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
    }
}

struct Problem<'a> {
    model: &'a AssetModel,
    opt: &'a OptionSpec,
    /// Upper end of the forward-price grid, also the spot range of the surface.
    f_max: f64,
    n_space: usize,
    n_time: usize,
    drift: f64,
}

impl Problem<'_> {
    fn df(&self) -> f64 {
        self.f_max / self.n_space as f64
    }

    /// `U` at forward price `f`, linear between nodes and following the
    /// payoff beyond the grid.
    fn lookup(&self, u: &[f64], f: f64) -> f64 {
        if f >= self.f_max {
            return self.opt.kind.payoff(f, self.opt.strike);
        }
        let x = f / self.df();
        let i = (x.floor() as usize).min(self.n_space - 1);
        let w = x - i as f64;
        u[i] * (1.0 - w) + u[i + 1] * w
    }

    /// Four-point Lagrange interpolation of `U` at `f`; used for the price
    /// so interpolation error stays below the scheme's second-order error.
    fn lookup_cubic(&self, u: &[f64], f: f64) -> f64 {
        let x = f / self.df();
        let i = (x.floor() as usize).clamp(1, self.n_space - 2) - 1;
        let nodes = [i as f64, (i + 1) as f64, (i + 2) as f64, (i + 3) as f64];
        (0..4)
            .map(|j| {
                let basis: f64 = (0..4)
                    .filter(|&m| m != j)
                    .map(|m| (x - nodes[m]) / (nodes[j] - nodes[m]))
                    .product();
                basis * u[i + j]
            })
            .sum()
    }

    /// θ-scheme step in time to maturity from `tau` to `tau + dtau`.
    fn step(&self, u: &mut [f64], theta: f64, tau: f64, dtau: f64, work: &mut Work) -> Result<()> {
        let n = self.n_space;
        let t_mid = self.opt.maturity - (tau + 0.5 * dtau);
        let sigma = self.model.effvol.interpolate(t_mid.max(self.model.t0()))?;
        let s2 = sigma * sigma;
        let exp = (1.0 - theta) * dtau;
        let imp = theta * dtau;
        for i in 1..n {
            let c = 0.5 * s2 * (i * i) as f64;
            let k = i - 1;
            work.rhs[k] = u[i] + exp * c * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
            work.sys.lower[k] = -imp * c;
            work.sys.diag[k] = 1.0 + 2.0 * imp * c;
            work.sys.upper[k] = -imp * c;
        }
        // Boundary values are constant in τ.
        work.rhs[0] += imp * 0.5 * s2 * u[0];
        work.rhs[n - 2] += imp * 0.5 * s2 * ((n - 1) * (n - 1)) as f64 * u[n];
        work.sys.solve(&mut work.rhs, &mut work.scratch);
        u[1..n].copy_from_slice(&work.rhs);
        Ok(())
    }

    fn solve(&self, keep_surface: bool) -> Result<(f64, Option<ValueSurface>)> {
        let n = self.n_space;
        let expiry = self.opt.maturity - self.model.t0();
        let df = self.df();
        let mut u: Vec<f64> = (0..=n)
            .map(|i| self.opt.kind.payoff(i as f64 * df, self.opt.strike))
            .collect();
        let mut work = Work::new(n - 1);
        let dtau = expiry / self.n_time as f64;
        let mut levels = Vec::new();
        let spots: Vec<f64> = (0..=n).map(|i| i as f64 * df).collect();
        let mut record = |u: &[f64], tau: f64| {
            if keep_surface {
                let growth = (self.drift * tau).exp();
                let disc = (-self.model.r * tau).exp();
                levels.push(
                    spots
                        .iter()
                        .map(|&s| disc * self.lookup(u, s * growth))
                        .collect::<Vec<_>>(),
                );
            }
        };
        record(&u, 0.0);
        for k in 0..self.n_time {
            let tau = k as f64 * dtau;
            if k < 2 {
                self.step(&mut u, 1.0, tau, 0.5 * dtau, &mut work)?;
                self.step(&mut u, 1.0, tau + 0.5 * dtau, 0.5 * dtau, &mut work)?;
            } else {
                self.step(&mut u, 0.5, tau, dtau, &mut work)?;
            }
            record(&u, (k + 1) as f64 * dtau);
        }
        let f0 = self.model.s0 * (self.drift * expiry).exp();
        let price = (-self.model.r * expiry).exp() * self.lookup_cubic(&u, f0);
        let surface = keep_surface.then(|| {
            levels.reverse();
            let times = (0..=self.n_time)
                .map(|k| {
                    if k == self.n_time {
                        self.opt.maturity
                    } else {
                        self.model.t0() + k as f64 * dtau
                    }
                })
                .collect();
            ValueSurface {
                times,
                spots,
                values: levels,
            }
        });
        Ok((price, surface))
    }
}

struct Work {
    sys: Tridiagonal,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Work {
    fn new(m: usize) -> Self {
        Self {
            sys: Tridiagonal {
                lower: vec![0.0; m],
                diag: vec![0.0; m],
                upper: vec![0.0; m],
            },
            rhs: vec![0.0; m],
            scratch: vec![0.0; m],
        }
    }
}

fn problem<'a>(
    model: &'a AssetModel,
    opt: &'a OptionSpec,
    grid: &PdeGrid,
    n_space: usize,
    n_time: usize,
    drift: DriftCoefficient,
) -> Result<Problem<'a>> {
    let expiry = model.expiry(opt)?;
    let drift = match drift {
        DriftCoefficient::Rate => model.r,
        DriftCoefficient::One => 1.0,
    };
    let f0 = model.s0 * (drift * expiry).exp();
    let f_max = match grid.s_max {
        Some(s_max) => s_max,
        None => {
            // Widened just enough that the strike sits on a node, which keeps
            // the payoff kink from spoiling second-order convergence.
            let floor = (4.0 * opt.strike).max(4.0 * f0);
            let strike_node = (n_space as f64 * opt.strike / floor).floor().max(1.0);
            opt.strike * n_space as f64 / strike_node
        }
    };
    if !(f0 < f_max) {
        return Err(invalid(
            "s_max",
            format!("forward {f0} lies beyond s_max = {f_max}"),
        ));
    }
    Ok(Problem {
        model,
        opt,
        f_max,
        n_space,
        n_time,
        drift,
    })
}

/// One solve on `grid`, without the refinement check.
pub fn pde_solve(
    model: &AssetModel,
    opt: &OptionSpec,
    grid: &PdeGrid,
    drift: DriftCoefficient,
) -> Result<(f64, ValueSurface)> {
    grid.validate(opt.strike)?;
    let (price, surface) =
        problem(model, opt, grid, grid.n_space, grid.n_time, drift)?.solve(true)?;
    Ok((price, surface.expect("surface requested")))
}

/// Solves on `grid` and on a grid with half the steps in both directions;
/// their difference gives the error estimate. Fails with `GridTooCoarse`
/// when the estimate exceeds ten times `tolerance · max(|V|, 0.01 K)`.
pub fn pde_price(
    model: &AssetModel,
    opt: &OptionSpec,
    grid: &PdeGrid,
    drift: DriftCoefficient,
) -> Result<PdeSolution> {
    grid.validate(opt.strike)?;
    let (price, surface) =
        problem(model, opt, grid, grid.n_space, grid.n_time, drift)?.solve(true)?;
    let (coarse_price, _) =
        problem(model, opt, grid, grid.n_space / 2, grid.n_time / 2, drift)?.solve(false)?;
    let error_estimate = (price - coarse_price).abs() / 3.0;
    let tolerance = grid.tolerance * price.abs().max(0.01 * opt.strike);
    if error_estimate > 10.0 * tolerance {
        return Err(Error::GridTooCoarse {
            estimate: error_estimate,
            tolerance,
        });
    }
    Ok(PdeSolution {
        price,
        error_estimate,
        surface: surface.expect("surface requested"),
    })
}
