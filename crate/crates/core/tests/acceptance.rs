//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use memvol::effvol::{effective_vol, tabulate_effvol};
use memvol::kernel::KernelFamily;
use memvol::parallel::map_indexed;
use memvol::pricing::{
    mc_price, pde_price, pde_solve, AssetModel, DriftCoefficient, OptionKind, OptionSpec, PdeGrid,
};
use memvol::process::{
    mc_statistics, short_memory_variance, ProcessSimulator, ProcessSpec, TimeGrid, PICARD_MAX_ITER,
    PICARD_TOL,
};
use memvol::special::erf;
use memvol::{
    quad, CoefficientCurve, EffVolCurve, EffVolMethod, EffVolRequest, Integrand, MemoryKernel,
    QuadOptions, StreamKey,
};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Uniform draws for randomized configurations.
struct Draws {
    key: StreamKey,
    step: u64,
}

impl Draws {
    fn new(seed: u64) -> Self {
        Self {
            key: StreamKey::new(seed, 0),
            step: 0,
        }
    }

    fn next(&mut self, lo: f64, hi: f64) -> f64 {
        self.step += 1;
        lo + (hi - lo) * self.key.uniform(self.step)
    }
}

/// `erf(x) = (2/√π) e^{-x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`; every term is
/// positive, so the sum has no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum
}

fn bs_call_oracle(s0: f64, k: f64, r: f64, vol: f64, t: f64) -> f64 {
    let cdf = |x: f64| 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
    let sd = vol * t.sqrt();
    let d1 = ((s0 / k).ln() + r * t) / sd + 0.5 * sd;
    s0 * cdf(d1) - k * (-r * t).exp() * cdf(d1 - sd)
}

fn const_spec(a: f64, b: f64, kernel: MemoryKernel) -> ProcessSpec {
    ProcessSpec::new(
        CoefficientCurve::constant(a),
        CoefficientCurve::constant(b),
        kernel,
        0.0,
    )
    .unwrap()
}

fn random_b(d: &mut Draws, t0: f64, t1: f64, piecewise: bool) -> CoefficientCurve {
    if !piecewise {
        return CoefficientCurve::constant(d.next(0.1, 0.5));
    }
    let n = 4;
    let knots = (0..=n)
        .map(|i| (t0 + (t1 - t0) * i as f64 / n as f64, d.next(0.1, 0.5)))
        .collect();
    CoefficientCurve::piecewise(knots).unwrap()
}

fn gaussian_closed_form_agreement() -> Check {
    let mut d = Draws::new(101);
    let opts = QuadOptions::default();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let tau = d.next(0.01, 0.5);
        let window = d.next(0.5, 10.0);
        let t0 = d.next(-1.0, 1.0);
        let b = random_b(&mut d, t0, t0 + window, i % 2 == 1);
        let req = EffVolRequest::new(&b, MemoryKernel::gaussian(tau).unwrap(), t0, t0 + window);
        let closed =
            effective_vol(&req, EffVolMethod::GaussianClosed, opts).map_err(|e| e.to_string())?;
        let exact = effective_vol(&req, EffVolMethod::Exact, opts).map_err(|e| e.to_string())?;
        worst = worst.max((closed - exact).abs());
    }
    ensure(
        worst <= 1e-7,
        format!("max |closed - exact| = {worst:.2e} over 20 configs (limit 1e-7)"),
    )
}

fn zero_memory_collapse() -> Check {
    let spec = ProcessSpec::new(
        CoefficientCurve::piecewise(vec![(0.0, 0.02), (1.0, 0.08)]).unwrap(),
        CoefficientCurve::piecewise(vec![(0.0, 0.3), (0.5, 0.2), (1.0, 0.25)]).unwrap(),
        MemoryKernel::gaussian(0.0).unwrap(),
        0.0,
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
    let sim = ProcessSimulator::new(&spec, grid).unwrap();
    for seed in 0..20u64 {
        let inc = sim.increments(seed);
        let base = sim.base(&inc).unwrap();
        let short = sim.short_memory_path(&inc).unwrap();
        let (full, _) = sim.full_memory(&inc, PICARD_MAX_ITER, PICARD_TOL).unwrap();
        let same = |x: &[f64]| x.iter().zip(&base).all(|(p, q)| p.to_bits() == q.to_bits());
        if !same(&short) || !same(&full) {
            return Err(format!("paths differ bitwise for seed {seed}"));
        }
    }

    let mut vol_err = 0.0f64;
    for family in [KernelFamily::Gaussian, KernelFamily::Exponential] {
        let kernel = MemoryKernel::new(family, 0.0).unwrap();
        for t in [0.1, 0.37, 0.5, 0.99] {
            let req = EffVolRequest::new(&spec.b, kernel, 0.0, t);
            let b = spec.b.eval(t).unwrap();
            let mut methods = vec![EffVolMethod::Exact, EffVolMethod::Asymptotic];
            if family == KernelFamily::Gaussian {
                methods.push(EffVolMethod::GaussianClosed);
            }
            for m in methods {
                let v =
                    effective_vol(&req, m, QuadOptions::default()).map_err(|e| e.to_string())?;
                vol_err = vol_err.max((v - b).abs());
            }
        }
    }
    if vol_err > 1e-12 {
        return Err(format!(
            "effective volatility differs from b by {vol_err:.2e}"
        ));
    }

    let times: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
    let curve = EffVolCurve::flat(0.0, times, 0.2).unwrap();
    let model = AssetModel::new(100.0, CoefficientCurve::constant(0.0), curve, 0.05).unwrap();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let reference = bs_call_oracle(100.0, 100.0, 0.05, 0.2, 1.0);
    let pde = pde_price(
        &model,
        &opt,
        &PdeGrid::new(400, 400),
        DriftCoefficient::Rate,
    )
    .map_err(|e| e.to_string())?;
    let pde_rel = (pde.price - reference).abs() / reference;
    let mc = mc_price(&model, &opt, 1_000_000, 7).map_err(|e| e.to_string())?;
    let mc_dev = (mc.price - reference).abs() / mc.std_error;
    ensure(
        pde_rel <= 5e-4 && mc_dev <= 4.0,
        format!(
            "bitwise paths ok, vol err {vol_err:.1e}, PDE rel err {pde_rel:.2e} (limit 5e-4), MC {mc_dev:.2} SE (limit 4)"
        ),
    )
}

fn memory_configs() -> Vec<ProcessSpec> {
    let a = CoefficientCurve::piecewise(vec![(0.5, 0.1), (1.0, -0.05), (1.5, 0.2)]).unwrap();
    let b = CoefficientCurve::piecewise(vec![(0.5, 0.25), (1.0, 0.4), (1.5, 0.3)]).unwrap();
    let mut specs = Vec::new();
    for (family, tau) in [
        (KernelFamily::Gaussian, 0.05),
        (KernelFamily::Gaussian, 0.2),
        (KernelFamily::Exponential, 0.05),
        (KernelFamily::Exponential, 0.2),
    ] {
        let kernel = MemoryKernel::new(family, tau).unwrap();
        specs.push(ProcessSpec::new(a.clone(), b.clone(), kernel, 0.5).unwrap());
    }
    specs.push(const_spec(0.05, 0.2, MemoryKernel::gaussian(0.1).unwrap()));
    specs.push(const_spec(
        -0.3,
        0.5,
        MemoryKernel::exponential(0.3).unwrap(),
    ));
    specs
}

fn mean_preservation() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (c, spec) in memory_configs().iter().enumerate() {
        let grid = TimeGrid::new(spec.t0, spec.t0 + 1.0, 200).unwrap();
        let sim = ProcessSimulator::new(spec, grid).unwrap();
        let target = spec
            .a
            .integrate(spec.t0, spec.t0 + 1.0, Integrand::Value)
            .unwrap();
        let pairs = map_indexed(10_000, |p| {
            let inc = sim.increments(StreamKey::new(300 + c as u64, p as u64));
            let (full, _) = sim.full_memory(&inc, PICARD_MAX_ITER, PICARD_TOL)?;
            Ok((sim.short_memory_at(&inc, 200)?, full[200]))
        })
        .map_err(|e| e.to_string())?;
        let (short, full): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let s = mc_statistics(&short).unwrap();
        let f = mc_statistics(&full).unwrap();
        let (zs, zf) = ((s.mean - target) / s.mean_se, (f.mean - target) / f.mean_se);
        ok &= zs.abs() <= 4.0 && zf.abs() <= 4.0;
        lines.push(format!("{zs:+.2}/{zf:+.2}"));
    }
    ensure(
        ok,
        format!("short/full z-scores: {} (limit 4)", lines.join(" ")),
    )
}

fn variance_bridge() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, kernel) in [
        MemoryKernel::gaussian(0.1).unwrap(),
        MemoryKernel::exponential(0.1).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let spec = ProcessSpec::new(
            CoefficientCurve::constant(0.05),
            CoefficientCurve::piecewise(vec![(0.0, 0.2), (1.0, 0.35)]).unwrap(),
            kernel,
            0.0,
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
        let sim = ProcessSimulator::new(&spec, grid).unwrap();
        let xs: Vec<f64> = (0..10_000u64)
            .map(|p| {
                sim.short_memory_at(&sim.increments(StreamKey::new(400 + i as u64, p)), 400)
                    .unwrap()
            })
            .collect();
        let s = mc_statistics(&xs).unwrap();
        let target = short_memory_variance(&spec, 1.0, 1e-10).unwrap();
        let z = (s.variance - target) / s.variance_se;
        ok &= z.abs() <= 4.0;
        lines.push(format!(
            "{}: {:.5} vs {target:.5} ({z:+.2} SE)",
            kernel.family(),
            s.variance
        ));
    }
    ensure(ok, lines.join(", "))
}

fn first_order_validity() -> Check {
    let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
    let mut medians = Vec::new();
    for tau in [0.2, 0.1, 0.05] {
        let spec = const_spec(0.05, 0.3, MemoryKernel::gaussian(tau).unwrap());
        let sim = ProcessSimulator::new(&spec, grid).unwrap();
        let mut gaps: Vec<f64> = (0..100u64)
            .map(|seed| {
                let inc = sim.increments(StreamKey::new(500, seed));
                let first = sim.first_order(&inc).unwrap();
                let (full, _) = sim.full_memory(&inc, PICARD_MAX_ITER, PICARD_TOL).unwrap();
                full.iter()
                    .zip(&first)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        medians.push(0.5 * (gaps[49] + gaps[50]));
    }
    ensure(
        medians.windows(2).all(|w| w[1] < w[0]),
        format!(
            "median max-norm gaps for tau 0.2/0.1/0.05: {:.3e} {:.3e} {:.3e}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn long_window_limits() -> Check {
    let opts = QuadOptions::default();
    let b = CoefficientCurve::constant(0.2);
    let asym = |kernel: MemoryKernel, w: f64| {
        effective_vol(
            &EffVolRequest::new(&b, kernel, 0.0, w),
            EffVolMethod::Asymptotic,
            opts,
        )
        .unwrap()
    };
    for family in [KernelFamily::Gaussian, KernelFamily::Exponential] {
        for w in [0.5, 1.0, 10.0] {
            let mut prev = 0.0;
            for i in 0..=20 {
                let v = asym(MemoryKernel::new(family, 0.05 * i as f64).unwrap(), w);
                if v < prev {
                    return Err(format!(
                        "{family} asymptotic B decreases at tau = {}, window {w}",
                        0.05 * i as f64
                    ));
                }
                prev = v;
            }
        }
    }
    let mut worst = 0.0f64;
    let mut exact_ratios = Vec::new();
    for family in [KernelFamily::Gaussian, KernelFamily::Exponential] {
        for tau in [0.05, 0.1, 0.5] {
            let kernel = MemoryKernel::new(family, tau).unwrap();
            let (e3, e4) = (
                (asym(kernel, 1e3) - 0.2) * 1e3,
                (asym(kernel, 1e4) - 0.2) * 1e4,
            );
            worst = worst.max((e4 / e3 - 1.0).abs());
            if family == KernelFamily::Gaussian {
                let exact = |w: f64| {
                    effective_vol(
                        &EffVolRequest::new(&b, kernel, 0.0, w),
                        EffVolMethod::GaussianClosed,
                        opts,
                    )
                    .unwrap()
                };
                exact_ratios.push(((exact(1e4) - 0.2) * 1e4) / ((exact(1e3) - 0.2) * 1e3));
            }
        }
    }
    let exact_note = exact_ratios
        .iter()
        .map(|r| format!("{r:.3}"))
        .collect::<Vec<_>>()
        .join("/");
    ensure(
        worst <= 0.01,
        format!(
            "asymptotic excess x window changes by {worst:.2e} from 1e3 to 1e4 (limit 1e-2); exact-form ratio (diagnostic) {exact_note}"
        ),
    )
}

fn pricing_consistency() -> Check {
    let err = |e: memvol::Error| e.to_string();
    let b = CoefficientCurve::constant(0.2);
    let times: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let curve = tabulate_effvol(
        &b,
        MemoryKernel::gaussian(0.1).unwrap(),
        0.0,
        &times,
        EffVolMethod::Exact,
        QuadOptions::default(),
    )
    .map_err(err)?;
    let model =
        AssetModel::new(100.0, CoefficientCurve::constant(0.0), curve, 0.05).map_err(err)?;
    let flat = AssetModel::new(
        100.0,
        CoefficientCurve::constant(0.0),
        EffVolCurve::flat(0.0, times, 0.2).unwrap(),
        0.05,
    )
    .map_err(err)?;
    let call = OptionSpec::call(100.0, 1.0).unwrap();
    let put = call.with_kind(OptionKind::Put);
    let grid = PdeGrid::new(400, 400);
    let pde_call = pde_price(&model, &call, &grid, DriftCoefficient::Rate).map_err(err)?;
    let pde_put = pde_price(&model, &put, &grid, DriftCoefficient::Rate).map_err(err)?;
    let mc = mc_price(&model, &call, 1_000_000, 11).map_err(err)?;
    let mc_flat = mc_price(&flat, &call, 1_000_000, 11).map_err(err)?;

    let z = (pde_call.price - mc.price) / mc.std_error;
    let parity_gap = (pde_call.price - pde_put.price - (100.0 - 100.0 * (-0.05f64).exp())).abs();
    let parity_tol = 2.0 * (pde_call.error_estimate + pde_put.error_estimate);
    let lift = mc.price - mc_flat.price;
    let lift_se = mc.std_error.hypot(mc_flat.std_error);
    ensure(
        z.abs() <= 4.0 && parity_gap <= parity_tol && lift > 4.0 * lift_se,
        format!(
            "PDE {:.4} vs MC {:.4} ({z:+.2} SE); parity gap {parity_gap:.1e} (limit {parity_tol:.1e}); memory lift {lift:.4} = {:.1} SE",
            pde_call.price,
            mc.price,
            lift / lift_se
        ),
    )
}

fn numerics_oracles() -> Check {
    let mut d = Draws::new(808);
    let erf_err = (0..1000)
        .map(|_| {
            let x = d.next(-6.0, 6.0);
            (erf(x) - erf_series(x)).abs()
        })
        .fold(0.0, f64::max);

    let mut kern_err = 0.0f64;
    for i in 0..1000 {
        let family = if i % 2 == 0 {
            KernelFamily::Gaussian
        } else {
            KernelFamily::Exponential
        };
        let tau = d.next(0.01, 1.0);
        let s = d.next(0.0, 5.0);
        let t = s + d.next(0.0, 5.0);
        let k = MemoryKernel::new(family, tau).unwrap();
        let oracle = quad::integrate_split(
            |x| k.value(t - x).unwrap(),
            s,
            t,
            &[t - 10.0 * tau, t - 4.0 * tau, t - tau],
            1e-12,
        );
        kern_err = kern_err.max((k.integral(s, t).unwrap() - oracle).abs());
    }

    let times: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
    let model = AssetModel::new(
        100.0,
        CoefficientCurve::constant(0.0),
        EffVolCurve::flat(0.0, times, 0.2).unwrap(),
        0.05,
    )
    .unwrap();
    let opt = OptionSpec::call(100.0, 1.0).unwrap();
    let reference = bs_call_oracle(100.0, 100.0, 0.05, 0.2, 1.0);
    let errs: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            (pde_solve(&model, &opt, &PdeGrid::new(n, n), DriftCoefficient::Rate)
                .unwrap()
                .0
                - reference)
                .abs()
        })
        .collect();
    let factors = [errs[0] / errs[1], errs[1] / errs[2]];
    ensure(
        erf_err <= 1e-12 && kern_err <= 1e-8 && factors.iter().all(|&f| f >= 3.0),
        format!(
            "erf err {erf_err:.1e} (limit 1e-12), kernel integral err {kern_err:.1e} (limit 1e-8), Richardson factors {:.2} {:.2} (limit 3)",
            factors[0], factors[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "gaussian closed form vs exact",
            budget: Some(Duration::from_secs(10)),
            run: gaussian_closed_form_agreement,
        },
        Criterion {
            id: 2,
            name: "zero-memory collapse",
            budget: Some(Duration::from_secs(120)),
            run: zero_memory_collapse,
        },
        Criterion {
            id: 3,
            name: "mean preservation",
            budget: Some(Duration::from_secs(60)),
            run: mean_preservation,
        },
        Criterion {
            id: 4,
            name: "variance bridge",
            budget: Some(Duration::from_secs(60)),
            run: variance_bridge,
        },
        Criterion {
            id: 5,
            name: "first-order validity",
            budget: Some(Duration::from_secs(120)),
            run: first_order_validity,
        },
        Criterion {
            id: 6,
            name: "monotonicity and long-window limit",
            budget: None,
            run: long_window_limits,
        },
        Criterion {
            id: 7,
            name: "pricing consistency",
            budget: Some(Duration::from_secs(180)),
            run: pricing_consistency,
        },
        Criterion {
            id: 8,
            name: "numerics oracles",
            budget: None,
            run: numerics_oracles,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; runtime over budget")),
            Err(d) => (false, d),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {}: {} [{:.1}s] {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
