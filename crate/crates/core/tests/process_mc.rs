use memvol::parallel::map_indexed;
use memvol::process::{
    base_moments, mc_statistics, short_memory_variance, simulate_full_memory,
    simulate_short_memory, ProcessSimulator, WienerIncrements,
};
use memvol::{CoefficientCurve, MemoryKernel, ProcessSpec, StreamKey, TimeGrid};

fn spec(b: f64, kernel: MemoryKernel) -> ProcessSpec {
    ProcessSpec::new(
        CoefficientCurve::constant(0.02),
        CoefficientCurve::constant(b),
        kernel,
        0.0,
    )
    .unwrap()
}

#[test]
fn variance_formula_constant_b() {
    for kernel in [
        MemoryKernel::gaussian(0.2).unwrap(),
        MemoryKernel::exponential(0.05).unwrap(),
    ] {
        let spec = spec(0.3, kernel);
        let grid = TimeGrid::new(0.0, 1.0, 500).unwrap();
        let sim = ProcessSimulator::new(&spec, grid).unwrap();
        let xs = map_indexed(10_000, |p| {
            sim.short_memory_at(&sim.increments(StreamKey::new(21, p as u64)), 500)
        })
        .unwrap();
        let s = mc_statistics(&xs).unwrap();
        let target = short_memory_variance(&spec, 1.0, 1e-10).unwrap();
        assert!(
            s.variance_within(target, 4.0),
            "{kernel}: {s:?} vs {target}"
        );
    }
}

// The absolute variance excess tends to a constant near b²·τ·√π for the
// gaussian kernel, so the decay is measured per unit of observation time,
// with paired samples on shared increments to cancel most of the noise.
#[test]
fn memory_effect_decays_with_window() {
    let spec = spec(0.3, MemoryKernel::gaussian(0.2).unwrap());
    let mut excess = Vec::new();
    for window in [1.0, 10.0, 100.0] {
        let n = (window * 100.0) as usize;
        let sim = ProcessSimulator::new(&spec, TimeGrid::new(0.0, window, n).unwrap()).unwrap();
        let pairs = map_indexed(10_000, |p| {
            let inc = sim.increments(StreamKey::new(22, p as u64));
            Ok((sim.short_memory_at(&inc, n)?, sim.base(&inc)?[n]))
        })
        .unwrap();
        let (short, base): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let gap = mc_statistics(&short).unwrap().variance - mc_statistics(&base).unwrap().variance;
        excess.push(gap / window);
        let analytic = short_memory_variance(&spec, window, 1e-10).unwrap()
            - base_moments(&spec, window).unwrap().1;
        assert!(
            (gap - analytic).abs() < 0.15 * analytic,
            "window {window}: {gap} vs {analytic}"
        );
    }
    assert!(excess[0] > excess[1] && excess[1] > excess[2], "{excess:?}");
}

#[test]
fn grid_refinement_within_monte_carlo_error() {
    let spec = spec(0.3, MemoryKernel::gaussian(0.1).unwrap());
    let fine_grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
    let fine = ProcessSimulator::new(&spec, fine_grid).unwrap();
    let coarse = ProcessSimulator::new(&spec, fine_grid.coarsened().unwrap()).unwrap();
    let pairs = map_indexed(10_000, |p| {
        let inc = WienerIncrements::generate(fine_grid, StreamKey::new(23, p as u64));
        let c = inc.coarsened()?;
        Ok((
            fine.short_memory_at(&inc, 400)?,
            coarse.short_memory_at(&c, 200)?,
        ))
    })
    .unwrap();
    let (f, c): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (sf, sc) = (mc_statistics(&f).unwrap(), mc_statistics(&c).unwrap());
    assert!(
        (sf.variance - sc.variance).abs() < sf.variance_se,
        "{sf:?} {sc:?}"
    );
}

#[test]
fn wrappers_agree_with_simulator() {
    let spec = spec(0.3, MemoryKernel::exponential(0.1).unwrap());
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    let sim = ProcessSimulator::new(&spec, grid).unwrap();
    let inc = sim.increments(StreamKey::new(5, 9));
    let direct = sim.short_memory_at(&inc, 50).unwrap();
    let wrapped = simulate_short_memory(&spec, grid, StreamKey::new(5, 9), 0.5).unwrap();
    assert_eq!(direct.to_bits(), wrapped.to_bits());
    let full = simulate_full_memory(&spec, grid, StreamKey::new(5, 9), 50, 1e-12).unwrap();
    assert!(full.iterations >= 2);
    assert_eq!(full.path.dw, inc.dw);
    assert!(simulate_short_memory(&spec, grid, 1, 0.505).is_err());
}
