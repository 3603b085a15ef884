//! Compares the terminal law of the SDE driven by the effective volatility
//! against the direct short-memory construction, on shared Wiener draws.
//! Reports numbers only; no pass/fail is implied.

use crate::effvol::{tabulate_effvol, EffVolMethod, QuadOptions};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::process::{
    mc_statistics, short_memory_variance, McStats, ProcessSimulator, ProcessSpec, TimeGrid,
};
use crate::rng::{derive_seed, StreamKey};

pub const MIN_DIAGNOSTIC_SEEDS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SdeDiagnostic {
    /// Terminal values of the Euler-stepped SDE.
    pub sde: McStats,
    /// Terminal values of the direct construction.
    pub memory: McStats,
    /// `∫ B̃² dt` on the grid (right-end values per step).
    pub sde_variance_analytic: f64,
    /// `∫ b² w² ds`.
    pub memory_variance_analytic: f64,
    /// Sample variance ratio, SDE over direct construction.
    pub ratio: f64,
}

pub fn sde_increment_diagnostic(
    spec: &ProcessSpec,
    grid: TimeGrid,
    n_seeds: usize,
    seed: u64,
    opts: QuadOptions,
) -> Result<SdeDiagnostic> {
    if n_seeds < MIN_DIAGNOSTIC_SEEDS {
        return Err(Error::TooFewSamples(n_seeds));
    }
    let sim = ProcessSimulator::new(spec, grid)?;
    let times = grid.times();
    let effvol = tabulate_effvol(
        &spec.b,
        spec.kernel,
        spec.t0,
        &times[1..],
        EffVolMethod::Exact,
        opts,
    )?;
    let vols = effvol.values();
    let dt = grid.dt();
    let n = grid.n_steps();
    let base_seed = derive_seed(seed, "sde-diagnostic", 0);

    let pairs = map_indexed(n_seeds, |k| {
        let inc = sim.increments(StreamKey::new(base_seed, k as u64));
        let h = sim.drift()[n] + vols.iter().zip(&inc.dw).map(|(v, dw)| v * dw).sum::<f64>();
        let m = sim.short_memory_at(&inc, n)?;
        Ok((h, m))
    })?;
    let (h, m): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let sde = mc_statistics(&h)?;
    let memory = mc_statistics(&m)?;
    Ok(SdeDiagnostic {
        sde,
        memory,
        sde_variance_analytic: vols.iter().map(|v| v * v * dt).sum(),
        memory_variance_analytic: short_memory_variance(spec, grid.t_end(), opts.tol)?,
        ratio: sde.variance / memory.variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientCurve;
    use crate::kernel::MemoryKernel;

    fn spec(tau: f64) -> ProcessSpec {
        ProcessSpec::new(
            CoefficientCurve::constant(0.1),
            CoefficientCurve::constant(0.3),
            MemoryKernel::gaussian(tau).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn memoryless_agreement() {
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let d =
            sde_increment_diagnostic(&spec(0.0), grid, 2000, 3, QuadOptions::default()).unwrap();
        assert!(
            d.sde.variance_within(d.memory_variance_analytic, 4.0),
            "{d:?}"
        );
        assert!(
            d.memory.variance_within(d.sde_variance_analytic, 4.0),
            "{d:?}"
        );
        assert_eq!(d.ratio, 1.0);
    }

    #[test]
    fn report_shape() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let d =
            sde_increment_diagnostic(&spec(0.05), grid, 1000, 9, QuadOptions::default()).unwrap();
        assert_eq!(d.sde.n, 1000);
        assert!(d.ratio.is_finite() && d.ratio > 0.0);
        assert!(d.sde_variance_analytic > 0.09 && d.memory_variance_analytic > 0.09);
    }

    #[test]
    fn too_few_seeds() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let r = sde_increment_diagnostic(&spec(0.1), grid, 999, 0, QuadOptions::default());
        assert!(matches!(r, Err(Error::TooFewSamples(999))));
    }
}
