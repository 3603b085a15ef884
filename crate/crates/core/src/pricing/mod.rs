//! Asset dynamics with short memory and vanilla option pricing.
//!
//! The log-price `h = ln(S/S0)` has drift `A(t)` and diffusion `B̃(t)`, so
//!
//! ```text
//! dS = (A + ½B̃²) S dt + B̃ S dW
//! ```
//!
//! Pricing works under the risk-neutral measure, where the drift of `S` is
//! `r`. Both engines consume the same tabulated [`EffVolCurve`].

mod diagnostic;
mod pde;

pub use diagnostic::{sde_increment_diagnostic, SdeDiagnostic, MIN_DIAGNOSTIC_SEEDS};
pub use pde::{pde_price, pde_solve, DriftCoefficient, PdeGrid, PdeSolution, ValueSurface};

use std::fmt;
use std::str::FromStr;

use crate::coeffs::{CoefficientCurve, CurveRole};
use crate::effvol::EffVolCurve;
use crate::error::{invalid, Error, Result};
use crate::parallel::map_indexed;
use crate::process::{mc_statistics, PathKind, SamplePath, TimeGrid, WienerIncrements};
use crate::rng::StreamKey;
use crate::special::norm_cdf;

/// Minimum number of antithetic pairs accepted by [`mc_price`].
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn payoff(self, spot: f64, strike: f64) -> f64 {
        match self {
            Self::Call => (spot - strike).max(0.0),
            Self::Put => (strike - spot).max(0.0),
        }
    }
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Call => "call",
            Self::Put => "put",
        })
    }
}

impl FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "call" => Ok(Self::Call),
            "put" => Ok(Self::Put),
            other => Err(invalid(
                "option",
                format!("expected call|put, got `{other}`"),
            )),
        }
    }
}

/// European vanilla contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, strike: f64, maturity: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(invalid("strike", format!("must be > 0, got {strike}")));
        }
        if !maturity.is_finite() {
            return Err(invalid("maturity", "must be finite"));
        }
        Ok(Self {
            kind,
            strike,
            maturity,
        })
    }

    pub fn call(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(OptionKind::Call, strike, maturity)
    }

    pub fn put(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(OptionKind::Put, strike, maturity)
    }

    pub fn with_kind(self, kind: OptionKind) -> Self {
        Self { kind, ..self }
    }
}

/// Spot, log-drift `A(t)`, effective volatility and risk-free rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetModel {
    pub s0: f64,
    pub drift: CoefficientCurve,
    pub effvol: EffVolCurve,
    pub r: f64,
}

impl AssetModel {
    pub fn new(s0: f64, drift: CoefficientCurve, effvol: EffVolCurve, r: f64) -> Result<Self> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(invalid("s0", format!("must be > 0, got {s0}")));
        }
        if !r.is_finite() {
            return Err(invalid("r", "must be finite"));
        }
        if let Some(i) = effvol.values().iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveVolatility {
                t: effvol.times()[i],
                value: effvol.values()[i],
            });
        }
        let drift = drift.validated(CurveRole::Drift)?;
        Ok(Self {
            s0,
            drift,
            effvol,
            r,
        })
    }

    pub fn t0(&self) -> f64 {
        self.effvol.t0()
    }

    /// Same model with `B̃` multiplied by `factor`.
    pub fn with_scaled_vol(&self, factor: f64) -> Result<Self> {
        Ok(Self {
            effvol: self.effvol.scaled(factor)?,
            ..self.clone()
        })
    }

    fn expiry(&self, opt: &OptionSpec) -> Result<f64> {
        let t = opt.maturity - self.t0();
        if !(t > 0.0) {
            return Err(invalid(
                "maturity",
                format!("must be after t0 = {}", self.t0()),
            ));
        }
        if opt.maturity > self.effvol.end() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::OutOfDomain {
                t: opt.maturity,
                min: self.t0(),
                max: self.effvol.end(),
            });
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Log-drift `A(t)`, price drift `A + ½B̃²`.
    Physical,
    /// Price drift `r`.
    RiskNeutral,
}

/// Log-price path `h` (in `path.values`) and the prices `S0·exp(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    pub path: SamplePath,
    pub prices: Vec<f64>,
}

/// Exact log-normal stepping on `grid`, whose step ends must be the effvol
/// grid. Step `i` uses `B̃(t_{i+1})`.
pub fn simulate_asset_path(
    model: &AssetModel,
    grid: TimeGrid,
    key: impl Into<StreamKey>,
    measure: Measure,
) -> Result<AssetPath> {
    check_grid(model, &grid)?;
    let inc = WienerIncrements::generate(grid, key);
    let dt = grid.dt();
    let mut h = Vec::with_capacity(grid.n_steps() + 1);
    h.push(0.0);
    let mut x = 0.0;
    for (i, (&vol, &dw)) in model.effvol.values().iter().zip(&inc.dw).enumerate() {
        let drift = match measure {
            Measure::Physical => model.drift.eval(grid.time(i))?,
            Measure::RiskNeutral => model.r - 0.5 * vol * vol,
        };
        x += drift * dt + vol * dw;
        h.push(x);
    }
    let prices = h.iter().map(|v| model.s0 * v.exp()).collect();
    Ok(AssetPath {
        path: SamplePath {
            grid,
            key: inc.key,
            dw: inc.dw,
            values: h,
            kind: PathKind::Sde,
        },
        prices,
    })
}

fn check_grid(model: &AssetModel, grid: &TimeGrid) -> Result<()> {
    let times = model.effvol.times();
    let scale = grid.t_end().abs().max(1.0);
    let same = grid.t0() == model.t0()
        && times.len() == grid.n_steps()
        && times
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - grid.time(i + 1)).abs() <= 1e-12 * scale);
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "time grid differs from the effective-volatility grid".into(),
        ))
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPrice {
    pub price: f64,
    pub std_error: f64,
    /// Antithetic pairs.
    pub n_paths: usize,
}

/// Discounted risk-neutral expectation of `payoff(S_T)`, with antithetic
/// pairs `(Z, -Z)`.
///
/// For a terminal payoff the per-step stepping of [`simulate_asset_path`]
/// only matters through the integrated variance `V = ∫ B̃² dt`: `ln S_T` is
/// normal with mean `ln S0 + rT - V/2` and variance `V`. One normal per path
/// therefore reproduces the stepped terminal law exactly.
pub fn mc_expectation<P>(
    model: &AssetModel,
    maturity: f64,
    n_paths: usize,
    seed: u64,
    payoff: P,
) -> Result<McPrice>
where
    P: Fn(f64) -> f64 + Sync + Send,
{
    if n_paths < MIN_PATHS {
        return Err(Error::TooFewPaths(n_paths));
    }
    let expiry = maturity - model.t0();
    if !(expiry > 0.0) {
        return Err(invalid(
            "maturity",
            format!("must be after t0 = {}", model.t0()),
        ));
    }
    let var = model.effvol.integrated_variance(maturity)?;
    let sd = var.sqrt();
    let fwd_log = model.s0.ln() + model.r * expiry - 0.5 * var;
    let disc = (-model.r * expiry).exp();
    let samples = map_indexed(n_paths, |k| {
        let z = StreamKey::new(seed, k as u64).normal(0);
        let up = (fwd_log + sd * z).exp();
        let down = (fwd_log - sd * z).exp();
        Ok(0.5 * (payoff(up) + payoff(down)))
    })?;
    let stats = mc_statistics(&samples)?;
    Ok(McPrice {
        price: disc * stats.mean,
        std_error: disc * stats.mean_se,
        n_paths,
    })
}

pub fn mc_price(
    model: &AssetModel,
    opt: &OptionSpec,
    n_paths: usize,
    seed: u64,
) -> Result<McPrice> {
    model.expiry(opt)?;
    let (kind, strike) = (opt.kind, opt.strike);
    mc_expectation(model, opt.maturity, n_paths, seed, move |s| {
        kind.payoff(s, strike)
    })
}

/// Black–Scholes price for constant volatility `vol` and expiry `t`.
/// `vol = 0` gives the discounted intrinsic value on the forward.
pub fn bs_closed_form(kind: OptionKind, s0: f64, strike: f64, r: f64, vol: f64, t: f64) -> f64 {
    let disc = (-r * t).exp();
    let sd = vol * t.sqrt();
    if sd == 0.0 {
        return disc * kind.payoff(s0 / disc, strike);
    }
    let d1 = ((s0 / strike).ln() + r * t) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    match kind {
        OptionKind::Call => s0 * norm_cdf(d1) - strike * disc * norm_cdf(d2),
        OptionKind::Put => strike * disc * norm_cdf(-d2) - s0 * norm_cdf(-d1),
    }
}

/// Closed form with the root-mean-square of the model's `B̃` over the life of
/// the option.
pub fn bs_for_model(model: &AssetModel, opt: &OptionSpec) -> Result<f64> {
    let t = model.expiry(opt)?;
    let vol = model.effvol.rms(opt.maturity)?;
    Ok(bs_closed_form(
        opt.kind, model.s0, opt.strike, model.r, vol, t,
    ))
}
