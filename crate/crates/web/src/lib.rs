//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each export takes plain numbers and returns a flat `Float64Array`; the
//! layout is documented per function. The computations live in ordinary Rust
//! functions so they can be tested natively.

use memvol::effvol::tabulate_effvol;
use memvol::pricing::{pde_price, AssetModel, DriftCoefficient, OptionKind, OptionSpec, PdeGrid};
use memvol::process::ProcessSimulator;
use memvol::{
    CoefficientCurve, EffVolMethod, KernelFamily, MemoryKernel, ProcessSpec, QuadOptions,
    StreamKey, TimeGrid,
};
use wasm_bindgen::prelude::*;

/// Impulse volatility varying linearly from `b_start` at 0 to `b_end` at `horizon`.
fn vol_curve(b_start: f64, b_end: f64, horizon: f64) -> memvol::Result<CoefficientCurve> {
    if b_start == b_end {
        return Ok(CoefficientCurve::constant(b_start));
    }
    CoefficientCurve::piecewise(vec![(0.0, b_start), (horizon, b_end)])
}

fn family(exponential: bool) -> KernelFamily {
    if exponential {
        KernelFamily::Exponential
    } else {
        KernelFamily::Gaussian
    }
}

fn sample_times(horizon: f64, n_points: usize) -> Vec<f64> {
    (1..=n_points)
        .map(|i| horizon * i as f64 / n_points as f64)
        .collect()
}

/// Effective volatility on `n_points` times in `(0, horizon]`, one row per
/// entry of `taus`, preceded by a row holding the times.
pub fn effvol_rows(
    b_start: f64,
    b_end: f64,
    exponential: bool,
    taus: &[f64],
    horizon: f64,
    n_points: usize,
) -> memvol::Result<Vec<f64>> {
    let b = vol_curve(b_start, b_end, horizon)?;
    let times = sample_times(horizon, n_points.max(2));
    let mut out = times.clone();
    for &tau in taus {
        let kernel = MemoryKernel::new(family(exponential), tau)?;
        let curve = tabulate_effvol(
            &b,
            kernel,
            0.0,
            &times,
            EffVolMethod::Exact,
            QuadOptions::default(),
        )?;
        out.extend_from_slice(curve.values());
    }
    Ok(out)
}

/// `n_paths` pairs of paths sharing their noise: the memoryless path followed
/// by the full-memory path, each with `n_steps + 1` values starting at 0.
#[allow(clippy::too_many_arguments)]
pub fn path_rows(
    b_start: f64,
    b_end: f64,
    exponential: bool,
    tau: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> memvol::Result<Vec<f64>> {
    let spec = ProcessSpec::new(
        CoefficientCurve::constant(0.0),
        vol_curve(b_start, b_end, horizon)?,
        MemoryKernel::new(family(exponential), tau)?,
        0.0,
    )?;
    let sim = ProcessSimulator::new(&spec, TimeGrid::new(0.0, horizon, n_steps)?)?;
    let mut out = Vec::with_capacity(2 * n_paths * (n_steps + 1));
    for p in 0..n_paths {
        let inc = sim.increments(StreamKey::new(seed, p as u64));
        out.extend(sim.base(&inc)?);
        out.extend(sim.full_memory(&inc, 200, 1e-10)?.0);
    }
    Ok(out)
}

/// PDE option price for each memory depth in `taus`.
#[allow(clippy::too_many_arguments)]
pub fn price_row(
    s0: f64,
    strike: f64,
    r: f64,
    b_start: f64,
    b_end: f64,
    maturity: f64,
    put: bool,
    exponential: bool,
    taus: &[f64],
) -> memvol::Result<Vec<f64>> {
    let kind = if put {
        OptionKind::Put
    } else {
        OptionKind::Call
    };
    let opt = OptionSpec::new(kind, strike, maturity)?;
    let b = vol_curve(b_start, b_end, maturity)?;
    let times = sample_times(maturity, 100);
    let grid = PdeGrid::new(200, 200);
    taus.iter()
        .map(|&tau| {
            let kernel = MemoryKernel::new(family(exponential), tau)?;
            let curve = tabulate_effvol(
                &b,
                kernel,
                0.0,
                &times,
                EffVolMethod::Exact,
                QuadOptions::default(),
            )?;
            let model = AssetModel::new(s0, CoefficientCurve::constant(r), curve, r)?;
            Ok(pde_price(&model, &opt, &grid, DriftCoefficient::Rate)?.price)
        })
        .collect()
}

fn js(e: memvol::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = effvolCurves)]
pub fn effvol_curves(
    b_start: f64,
    b_end: f64,
    exponential: bool,
    taus: Vec<f64>,
    horizon: f64,
    n_points: usize,
) -> Result<Vec<f64>, JsError> {
    effvol_rows(b_start, b_end, exponential, &taus, horizon, n_points).map_err(js)
}

#[wasm_bindgen(js_name = samplePaths)]
#[allow(clippy::too_many_arguments)]
pub fn sample_paths(
    b_start: f64,
    b_end: f64,
    exponential: bool,
    tau: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    path_rows(
        b_start,
        b_end,
        exponential,
        tau,
        horizon,
        n_steps,
        n_paths,
        seed.into(),
    )
    .map_err(js)
}

#[wasm_bindgen(js_name = priceVsTau)]
#[allow(clippy::too_many_arguments)]
pub fn price_vs_tau(
    s0: f64,
    strike: f64,
    r: f64,
    b_start: f64,
    b_end: f64,
    maturity: f64,
    put: bool,
    exponential: bool,
    taus: Vec<f64>,
) -> Result<Vec<f64>, JsError> {
    price_row(
        s0,
        strike,
        r,
        b_start,
        b_end,
        maturity,
        put,
        exponential,
        &taus,
    )
    .map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effvol_layout_and_zero_tau() {
        let rows = effvol_rows(0.2, 0.2, false, &[0.0, 0.3], 1.0, 10).unwrap();
        assert_eq!(rows.len(), 30);
        assert_eq!(rows[9], 1.0);
        assert!(rows[10..20].iter().all(|&v| v == 0.2));
        assert!(rows[20..].iter().all(|&v| v > 0.2));
    }

    #[test]
    fn paths_share_noise_and_collapse_without_memory() {
        let rows = path_rows(0.2, 0.4, true, 0.0, 1.0, 20, 3, 7).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 21);
        for pair in rows.chunks(42) {
            assert_eq!(pair[..21], pair[21..]);
        }
        let with_memory = path_rows(0.2, 0.4, true, 0.1, 1.0, 20, 3, 7).unwrap();
        assert_eq!(with_memory[..21], rows[..21]);
        assert_ne!(with_memory[21..42], rows[21..42]);
    }

    #[test]
    fn price_grows_with_memory() {
        let prices = price_row(
            100.0,
            100.0,
            0.05,
            0.2,
            0.2,
            1.0,
            false,
            false,
            &[0.0, 0.1, 0.3],
        )
        .unwrap();
        assert!((prices[0] - 10.4506).abs() < 1e-2, "{}", prices[0]);
        assert!(prices.windows(2).all(|w| w[1] > w[0]), "{prices:?}");
    }

    #[test]
    fn invalid_inputs_are_errors() {
        assert!(effvol_rows(-0.1, 0.2, false, &[0.1], 1.0, 10).is_err());
        assert!(price_row(100.0, 100.0, 0.05, 0.2, 0.2, 1.0, false, false, &[-1.0]).is_err());
    }
}
