use memvol::effvol::tabulate_effvol;
use memvol::pricing::{mc_price, AssetModel, OptionSpec};
use memvol::process::{ProcessSimulator, PICARD_MAX_ITER, PICARD_TOL};
use memvol::{CoefficientCurve, EffVolMethod, MemoryKernel, ProcessSpec, QuadOptions, TimeGrid};

fn run() -> (Vec<u64>, Vec<u64>, u64) {
    let b = CoefficientCurve::piecewise(vec![(0.0, 0.2), (1.0, 0.3)]).unwrap();
    let kernel = MemoryKernel::gaussian(0.1).unwrap();
    let times: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
    let curve = tabulate_effvol(
        &b,
        kernel,
        0.0,
        &times,
        EffVolMethod::Exact,
        QuadOptions::default(),
    )
    .unwrap();
    let spec = ProcessSpec::new(CoefficientCurve::constant(0.01), b, kernel, 0.0).unwrap();
    let sim = ProcessSimulator::new(&spec, TimeGrid::new(0.0, 1.0, 64).unwrap()).unwrap();
    let (full, _) = sim
        .full_memory(&sim.increments(17), PICARD_MAX_ITER, PICARD_TOL)
        .unwrap();
    let model =
        AssetModel::new(100.0, CoefficientCurve::constant(0.0), curve.clone(), 0.03).unwrap();
    let price = mc_price(&model, &OptionSpec::call(100.0, 1.0).unwrap(), 50_000, 4).unwrap();
    (
        curve.values().iter().map(|v| v.to_bits()).collect(),
        full.iter().map(|v| v.to_bits()).collect(),
        price.price.to_bits(),
    )
}

#[test]
fn results_independent_of_worker_count() {
    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
    };
    let one = pool(1).install(run);
    let four = pool(4).install(run);
    assert_eq!(one, four);
    assert_eq!(one, run());
}
