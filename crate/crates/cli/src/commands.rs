use std::path::{Path, PathBuf};

use clap::ValueEnum;
use memvol::effvol::tabulate_effvol;
use memvol::parallel::map_indexed;
use memvol::pricing::{mc_price, pde_price, AssetModel, PdeGrid};
use memvol::process::{base_moments, short_memory_variance, ProcessSimulator};
use memvol::rng::derive_seed;
use memvol::{EffVolCurve, EffVolMethod, QuadOptions, StreamKey, TimeGrid};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{surface_csv, write_atomic, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Base,
    /// Short-memory construction, evaluated separately at each grid time.
    Short,
    /// First-order memory (one Picard iterate).
    First,
    /// Full memory recursion solved by Picard iteration.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Mc,
    Pde,
}

pub fn time_grid(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::new(
        cfg.process.t0,
        cfg.t_end(),
        cfg.numerics.n_steps,
    )?)
}

pub fn quad(cfg: &RunConfig) -> QuadOptions {
    QuadOptions {
        tol: cfg.numerics.quad_tol,
    }
}

/// Effective volatility at grid times after `t0`.
pub fn effvol_curve(cfg: &RunConfig, method: EffVolMethod) -> Result<EffVolCurve, CliError> {
    let times = time_grid(cfg)?.times();
    let p = &cfg.process;
    Ok(tabulate_effvol(
        &p.b,
        p.kernel,
        p.t0,
        &times[1..],
        method,
        quad(cfg),
    )?)
}

pub fn asset_model(cfg: &RunConfig) -> Result<AssetModel, CliError> {
    let curve = effvol_curve(cfg, cfg.numerics.effvol_method)?;
    let p = &cfg.pricing;
    Ok(AssetModel::new(p.s0, p.log_drift.clone(), curve, p.r)?)
}

pub fn pde_grid(cfg: &RunConfig) -> PdeGrid {
    PdeGrid::new(cfg.numerics.pde_space, cfg.numerics.pde_time)
}

fn output(
    flag: Option<PathBuf>,
    fallback: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("no output path: pass --out or set io.{what}")))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(CliError::io(path))
}

pub fn simulate(
    cfg: &RunConfig,
    paths: usize,
    kind: PathChoice,
    out: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    let out = output(out, &cfg.io.simulate, "simulate")?;
    if paths == 0 {
        return Err(CliError::Usage("--paths must be >= 1".into()));
    }
    let grid = time_grid(cfg)?;
    let sim = ProcessSimulator::new(&cfg.process, grid)?;
    let seed = derive_seed(cfg.numerics.seed, "simulate", 0);
    let (max_iter, tol) = (cfg.numerics.picard_max_iter, cfg.numerics.picard_tol);
    let rows = map_indexed(paths, |p| {
        let inc = sim.increments(StreamKey::new(seed, p as u64));
        match kind {
            PathChoice::Base => sim.base(&inc),
            PathChoice::Short => sim.short_memory_path(&inc),
            PathChoice::First => sim.first_order(&inc),
            PathChoice::Full => sim.full_memory(&inc, max_iter, tol).map(|(v, _)| v),
        }
    })?;
    let times = grid.times();
    let mut csv = Csv::new(&cfg.digest, "path_id,t,value");
    for (p, values) in rows.iter().enumerate() {
        for (t, v) in times.iter().zip(values) {
            csv.row(&[&p, t, v]);
        }
    }
    write(&out, &csv.into_bytes())?;
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct MomentsReport {
    pub t: f64,
    pub mean: f64,
    pub base_variance: f64,
    pub short_memory_variance: f64,
    pub config_digest: String,
}

pub fn moments(cfg: &RunConfig, t: f64, out: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    let p = &cfg.process;
    if !(t > p.t0) || t > cfg.t_end() {
        return Err(CliError::Usage(format!(
            "--t must lie in (t0, t0 + horizon] = ({}, {}]",
            p.t0,
            cfg.t_end()
        )));
    }
    let (mean, base_variance) = base_moments(p, t)?;
    let report = MomentsReport {
        t,
        mean,
        base_variance,
        short_memory_variance: short_memory_variance(p, t, cfg.numerics.quad_tol)?,
        config_digest: cfg.digest.clone(),
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    match out.or_else(|| cfg.io.moments.clone()) {
        Some(path) => {
            write(&path, text.as_bytes())?;
            Ok(Some(path))
        }
        None => {
            print!("{text}");
            Ok(None)
        }
    }
}

pub fn effvol(
    cfg: &RunConfig,
    method: Option<EffVolMethod>,
    out: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    let out = output(out, &cfg.io.effvol, "effvol")?;
    let curve = effvol_curve(cfg, method.unwrap_or(cfg.numerics.effvol_method))?;
    let mut csv = Csv::new(&cfg.digest, "t,B");
    for (t, b) in curve.times().iter().zip(curve.values()) {
        csv.row(&[t, b]);
    }
    write(&out, &csv.into_bytes())?;
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct PriceReport {
    pub price: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    pub engine: &'static str,
    pub option: String,
    pub strike: f64,
    pub maturity: f64,
    pub config_digest: String,
}

pub fn price(
    cfg: &RunConfig,
    engine: Engine,
    out: Option<PathBuf>,
    surface: Option<PathBuf>,
) -> Result<PathBuf, CliError> {
    let out = output(out, &cfg.io.price, "price")?;
    if engine == Engine::Mc && surface.is_some() {
        return Err(CliError::Usage("--surface requires --engine pde".into()));
    }
    let surface = surface.or_else(|| cfg.io.surface.clone());
    let model = asset_model(cfg)?;
    let opt = &cfg.pricing.option;
    let base = PriceReport {
        price: 0.0,
        std_error: None,
        error_estimate: None,
        engine: "mc",
        option: opt.kind.to_string(),
        strike: opt.strike,
        maturity: opt.maturity,
        config_digest: cfg.digest.clone(),
    };
    let report = match engine {
        Engine::Mc => {
            let seed = derive_seed(cfg.numerics.seed, "price", 0);
            let mc = mc_price(&model, opt, cfg.numerics.n_paths, seed)?;
            PriceReport {
                price: mc.price,
                std_error: Some(mc.std_error),
                ..base
            }
        }
        Engine::Pde => {
            let sol = pde_price(&model, opt, &pde_grid(cfg), cfg.pricing.drift_coefficient)?;
            if let Some(path) = &surface {
                write(path, &surface_csv(&sol.surface, &cfg.digest).into_bytes())?;
            }
            PriceReport {
                price: sol.price,
                error_estimate: Some(sol.error_estimate),
                engine: "pde",
                ..base
            }
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    write(&out, text.as_bytes())?;
    Ok(out)
}
