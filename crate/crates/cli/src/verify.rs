//! Cross-module invariant checks run against the configured model.

use memvol::effvol::effective_vol;
use memvol::parallel::map_indexed;
use memvol::pricing::{mc_expectation, mc_price, pde_price, DriftCoefficient, OptionKind};
use memvol::process::{mc_statistics, short_memory_variance, ProcessSimulator};
use memvol::rng::derive_seed;
use memvol::{quad, EffVolMethod, EffVolRequest, KernelFamily, StreamKey};

use crate::commands::{asset_model, pde_grid, quad as quad_opts, time_grid};
use crate::config::RunConfig;
use crate::error::CliError;

type Outcome = Result<String, String>;
type CheckFn = fn(&RunConfig) -> Outcome;

pub struct Check {
    pub name: &'static str,
    pub outcome: Outcome,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn model_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

const MAX_VERIFY_PATHS: usize = 20_000;

fn zero_memory_collapse(cfg: &RunConfig) -> Outcome {
    let spec = cfg.process.with_tau(0.0).map_err(model_err)?;
    let grid = time_grid(cfg).map_err(model_err)?;
    let sim = ProcessSimulator::new(&spec, grid).map_err(model_err)?;
    let seed = derive_seed(cfg.numerics.seed, "verify-collapse", 0);
    for p in 0..8 {
        let inc = sim.increments(StreamKey::new(seed, p));
        let base = sim.base(&inc).map_err(model_err)?;
        let short = sim.short_memory_path(&inc).map_err(model_err)?;
        let (full, _) = sim
            .full_memory(&inc, cfg.numerics.picard_max_iter, cfg.numerics.picard_tol)
            .map_err(model_err)?;
        let same = |x: &[f64]| x.iter().zip(&base).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same(&short) || !same(&full) {
            return Err(format!("constructions differ for path {p}"));
        }
    }
    Ok("base, short- and full-memory paths identical for 8 paths".into())
}

fn mean_and_variance(cfg: &RunConfig) -> Outcome {
    let grid = time_grid(cfg).map_err(model_err)?;
    let sim = ProcessSimulator::new(&cfg.process, grid).map_err(model_err)?;
    let n = grid.n_steps();
    let seed = derive_seed(cfg.numerics.seed, "verify-moments", 0);
    let (max_iter, tol) = (cfg.numerics.picard_max_iter, cfg.numerics.picard_tol);
    let paths = cfg.numerics.n_paths.min(MAX_VERIFY_PATHS);
    let pairs = map_indexed(paths, |p| {
        let inc = sim.increments(StreamKey::new(seed, p as u64));
        let (full, _) = sim.full_memory(&inc, max_iter, tol)?;
        Ok((sim.short_memory_at(&inc, n)?, full[n]))
    })
    .map_err(model_err)?;
    let (short, full): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (s, f) = (
        mc_statistics(&short).map_err(model_err)?,
        mc_statistics(&full).map_err(model_err)?,
    );
    let mean = sim.drift()[n];
    let var = short_memory_variance(&cfg.process, grid.t_end(), cfg.numerics.quad_tol)
        .map_err(model_err)?;
    let (zs, zf, zv) = (
        (s.mean - mean) / s.mean_se,
        (f.mean - mean) / f.mean_se,
        (s.variance - var) / s.variance_se,
    );
    pass_if(
        zs.abs() <= 4.0 && zf.abs() <= 4.0 && zv.abs() <= 4.0,
        format!("{paths} paths: mean z {zs:+.2} (short) {zf:+.2} (full), variance z {zv:+.2}"),
    )
}

fn effvol_consistency(cfg: &RunConfig) -> Outcome {
    let p = &cfg.process;
    let opts = quad_opts(cfg);
    let mut worst_order = f64::NEG_INFINITY;
    let mut worst_closed = 0.0f64;
    for i in 1..=10 {
        let t = p.t0 + cfg.numerics.horizon * i as f64 / 10.0;
        let req = EffVolRequest::new(&p.b, p.kernel, p.t0, t);
        let exact = effective_vol(&req, EffVolMethod::Exact, opts).map_err(model_err)?;
        let asym = effective_vol(&req, EffVolMethod::Asymptotic, opts).map_err(model_err)?;
        worst_order = worst_order.max(exact - asym);
        if p.kernel.family() == KernelFamily::Gaussian {
            let closed =
                effective_vol(&req, EffVolMethod::GaussianClosed, opts).map_err(model_err)?;
            worst_closed = worst_closed.max((closed - exact).abs());
        }
    }
    pass_if(
        worst_order <= 1e-9 && worst_closed <= 1e-7,
        format!("max(exact - asymptotic) = {worst_order:.1e}, max |closed - exact| = {worst_closed:.1e}"),
    )
}

fn kernel_integral(cfg: &RunConfig) -> Outcome {
    let k = cfg.process.kernel;
    let tau = k.tau();
    let mut worst = 0.0f64;
    for lag in [0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
        let numeric = if k.is_degenerate() {
            0.0
        } else {
            quad::integrate_split(
                |x| k.value(lag - x).unwrap_or(f64::NAN),
                0.0,
                lag,
                &[lag - 10.0 * tau, lag - 4.0 * tau, lag - tau],
                1e-12,
            )
        };
        worst = worst.max((k.integral(0.0, lag).map_err(model_err)? - numeric).abs());
    }
    pass_if(
        worst <= 1e-8,
        format!("max |closed - quadrature| = {worst:.1e}"),
    )
}

fn pricing_checks(cfg: &RunConfig) -> Outcome {
    let model = asset_model(cfg).map_err(model_err)?;
    let opt = cfg.pricing.option;
    let expiry = opt.maturity - model.t0();
    let drift = cfg.pricing.drift_coefficient;
    let grid = pde_grid(cfg);
    let call =
        pde_price(&model, &opt.with_kind(OptionKind::Call), &grid, drift).map_err(model_err)?;
    let put =
        pde_price(&model, &opt.with_kind(OptionKind::Put), &grid, drift).map_err(model_err)?;
    let growth = match drift {
        DriftCoefficient::Rate => model.r,
        DriftCoefficient::One => 1.0,
    };
    let forward = (-model.r * expiry).exp() * (model.s0 * (growth * expiry).exp() - opt.strike);
    let parity_gap = (call.price - put.price - forward).abs();
    let parity_tol = 2.0 * (call.error_estimate + put.error_estimate) + 1e-10;
    if parity_gap > parity_tol {
        return Err(format!(
            "put-call parity gap {parity_gap:.2e} exceeds {parity_tol:.2e}"
        ));
    }
    let seed = derive_seed(cfg.numerics.seed, "verify-price", 0);
    let n = cfg.numerics.n_paths;
    let fwd = mc_expectation(&model, opt.maturity, n, seed, |s| s).map_err(model_err)?;
    let z_fwd = (fwd.price - model.s0) / fwd.std_error;
    let mut detail = format!("parity gap {parity_gap:.1e}, forward z {z_fwd:+.2}");
    let mut ok = z_fwd.abs() <= 4.0;
    if drift == DriftCoefficient::Rate {
        let mc = mc_price(&model, &opt, n, seed).map_err(model_err)?;
        let pde = if opt.kind == OptionKind::Call {
            call.price
        } else {
            put.price
        };
        let z = (pde - mc.price) / mc.std_error;
        ok &= z.abs() <= 4.0;
        detail.push_str(&format!(", PDE vs MC z {z:+.2}"));
    }
    pass_if(ok, detail)
}

pub fn run_checks(cfg: &RunConfig) -> Vec<Check> {
    let suite: [(&'static str, CheckFn); 5] = [
        ("zero-memory collapse", zero_memory_collapse),
        ("mean and variance", mean_and_variance),
        ("effective volatility", effvol_consistency),
        ("kernel integral", kernel_integral),
        ("pricing", pricing_checks),
    ];
    suite
        .iter()
        .map(|&(name, f)| Check {
            name,
            outcome: f(cfg),
        })
        .collect()
}

/// Prints one line per check; fails listing the checks that did not pass.
pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let mut failures = Vec::new();
    for check in run_checks(cfg) {
        match &check.outcome {
            Ok(detail) => println!("ok   {}: {detail}", check.name),
            Err(detail) => {
                println!("FAIL {}: {detail}", check.name);
                failures.push(format!("{}: {detail}", check.name));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failures))
    }
}
