//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::time::{Duration, Instant};

use mde_core::analysis::{compare_paths, default_family, residual, TestFunction};
use mde_core::library::{self, Builtin};
use mde_core::measure::{DiscreteMeasure, LiftedMeasure};
use mde_core::pvf::PvfSpec;
use mde_core::schemes::{
    interpolate_at, run, support_bound_check, GridSpec, MeasurePath, SchemeConfig, SchemeKind, ON_GRID_TOL,
};
use mde_core::superposition::{build_representation, evaluate_pushforward, verify_fiber_barycenter};
use mde_core::transport::{fiber_pseudometric, lifted_w1, w1_distance, w1_lp, w1_quantile_1d};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_builtin(b: &Builtin, scheme: SchemeKind, n: usize) -> MeasurePath {
    let (spec, mu0) = b.build().expect("builtin scenarios are valid");
    let grid = GridSpec::with_time_step(b.time_step, n, b.t_final).expect("valid grid");
    run(&spec, &mu0, &SchemeConfig::new(scheme, grid)).expect("scheme run")
}

fn w1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    w1_distance(a, b).expect("comparable measures")
}

fn within_time(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn splitting_dirac() -> Outcome {
    let start = Instant::now();
    let b = library::splitting_dirac();
    let mu0 = DiscreteMeasure::dirac(&[0.0]);
    let mut worst = 0.0f64;
    for n in [4usize, 16, 64] {
        let bound = 1.0 / (n * n) as f64 + 1e-9;
        for scheme in [SchemeKind::Las, SchemeKind::Lagrangian] {
            let path = run_builtin(&b, scheme, n);
            for (t, m) in path.times().iter().zip(path.measures()) {
                let exact = library::splitting_solution(&mu0, *t).unwrap();
                let e = w1(m, &exact);
                worst = worst.max(e);
                ensure(e <= bound, || format!("{scheme} N={n} t={t}: W1 {e:e} > {bound:e}"))?;
            }
        }
        let mv = run_builtin(&b, SchemeKind::MeanVelocity, n);
        for m in mv.measures() {
            let e = w1(m, &mu0);
            ensure(e <= 1e-12, || format!("mean-velocity N={n} left the Dirac: W1 {e:e}"))?;
        }
    }
    within_time(start.elapsed(), 1.0)?;
    Ok(format!("max W1 error {worst:.2e}"))
}

fn splitting_uniform() -> Outcome {
    let start = Instant::now();
    let (m, n) = (256usize, 64usize);
    let path = run_builtin(&library::splitting_uniform(m), SchemeKind::Lagrangian, n);
    let bound = 2.0 * (1.0 / m as f64 + 1.0 / n as f64);
    let mut worst = 0.0f64;
    for (t, mu) in path.times().iter().zip(path.measures()) {
        let exact = library::split_uniform_discretized(0.0, 1.0, m, *t).unwrap();
        let e = w1(mu, &exact);
        worst = worst.max(e);
        ensure(e <= bound, || format!("t={t}: W1 {e:e} > {bound:e}"))?;
    }
    within_time(start.elapsed(), 5.0)?;
    Ok(format!("max W1 error {worst:.2e} (bound {bound:.2e})"))
}

fn binomial() -> Outcome {
    let start = Instant::now();
    let b = library::binomial();
    for n in 1..=8usize {
        let path = run_builtin(&b, SchemeKind::Las, n);
        for (k, mu) in path.measures().iter().enumerate() {
            ensure(mu.len() == k + 1, || format!("N={n} node {k}: {} atoms", mu.len()))?;
            let mut c = 1.0f64;
            for i in 0..=k {
                let x = (2.0 * i as f64 - k as f64) / n as f64;
                let w = c / 2f64.powi(k as i32);
                ensure((mu.atom(i)[0] - x).abs() <= 1e-12 && (mu.weight(i) - w).abs() <= 1e-12, || {
                    format!("N={n} node {k} atom {i}: ({}, {}) vs ({x}, {w})", mu.atom(i)[0], mu.weight(i))
                })?;
                c = c * (k - i) as f64 / (i + 1) as f64;
            }
        }
    }
    let mut report = Vec::new();
    for n in [16usize, 64, 256] {
        let path = run_builtin(&b, SchemeKind::Las, n);
        let e = w1(&path.measures()[n], &DiscreteMeasure::dirac(&[0.0]));
        let mad = common::binomial_mad(n);
        ensure(e <= 1.0 / (n as f64).sqrt(), || format!("N={n}: W1 {e} > 1/sqrt(N)"))?;
        ensure((e - mad).abs() <= 1e-9, || format!("N={n}: W1 {e} but E|S_N|/N = {mad}"))?;
        report.push(format!("N={n}: {e:.4}"));
    }
    within_time(start.elapsed(), 5.0)?;
    Ok(format!("exact rows for N<=8; W1 at t=1 {}", report.join(", ")))
}

fn peano() -> Outcome {
    let b = library::peano();
    let path = run_builtin(&b, SchemeKind::Las, 1);
    let expected = [-1.0, 1.0, 3.0, 6.0];
    ensure(path.measures().len() == 4, || format!("{} nodes", path.measures().len()))?;
    for (mu, x) in path.measures().iter().zip(expected) {
        ensure(*mu == DiscreteMeasure::dirac(&[x]), || format!("node {:?} expected delta_{x}", mu.coords()))?;
    }
    let mut last = Vec::new();
    for n in [2usize, 3] {
        let path = run_builtin(&b, SchemeKind::Las, n);
        let grid = path.grid().copied().unwrap();
        for (k, mu) in path.measures().iter().enumerate().take(grid.steps) {
            ensure(mu.len() == 1, || format!("N={n} node {k} is not a single atom"))?;
            let x = mu.atom(0)[0];
            let bin = (2.0 * x.abs().sqrt() / grid.dv + 1e-9).floor() * grid.dv;
            let v = path.interp()[k].velocity(0)[0];
            ensure((v - bin).abs() <= 1e-12, || format!("N={n} node {k} x={x}: velocity {v} vs bin {bin}"))?;
            let next = path.measures()[k + 1].atom(0)[0];
            ensure((next - (x + grid.dt * bin)).abs() <= 1e-12, || {
                format!("N={n} node {k}: next {next} vs {}", x + grid.dt * bin)
            })?;
        }
        last.push(format!("N={n} ends at {}", path.measures().last().unwrap().atom(0)[0]));
    }
    Ok(format!("nodes -1, 1, 3, 6; {}", last.join(", ")))
}

/// (scenario, resolutions) pairs used by the representation checks.
fn small_runs() -> Vec<(Builtin, Vec<usize>)> {
    vec![
        (library::splitting_dirac(), vec![1, 2, 4, 8]),
        (library::splitting_uniform(library::UNIFORM_INITIAL_ATOMS), vec![1, 2, 4, 8]),
        (library::binomial(), vec![1, 2, 4, 8]),
        (library::peano(), vec![1, 2, 3, 8]),
        (library::uniform_fiber(library::UNIFORM_FIBER_ATOMS), vec![1, 2]),
    ]
}

fn representation_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (b, ns) in small_runs() {
        for n in ns {
            for scheme in SchemeKind::ALL {
                let path = run_builtin(&b, scheme, n);
                let eta = build_representation(&path).map_err(|e| format!("{} {scheme} N={n}: {e}", b.name))?;
                let times = path.times();
                let mids = times.windows(2).map(|w| 0.5 * (w[0] + w[1]));
                for t in times.iter().copied().chain(mids) {
                    let e = w1(&evaluate_pushforward(&eta, t).unwrap(), &interpolate_at(&path, t).unwrap());
                    worst = worst.max(e);
                    ensure(e <= 1e-9, || format!("{} {scheme} N={n} t={t}: W1 {e:e}", b.name))?;
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} runs, max W1 {worst:.1e}"))
}

fn superposition() -> Outcome {
    let (mut lag, mut las) = (0.0f64, 0.0f64);
    for (b, ns) in small_runs() {
        let (spec, _) = b.build().unwrap();
        for n in ns {
            for scheme in [SchemeKind::Lagrangian, SchemeKind::Las] {
                let path = run_builtin(&b, scheme, n);
                let dv = path.grid().unwrap().dv;
                let eta = build_representation(&path).unwrap();
                // the right derivative does not exist at the final knot
                for &t in &path.times()[..path.times().len() - 1] {
                    let d = verify_fiber_barycenter(&eta, &spec, t).unwrap().max_defect;
                    if scheme == SchemeKind::Lagrangian {
                        lag = lag.max(d);
                        ensure(d <= 1e-9, || format!("{} lagrangian N={n} t={t}: defect {d:e}", b.name))?;
                    } else {
                        las = las.max(d);
                        ensure(d <= dv + 1e-12, || format!("{} las N={n} t={t}: defect {d} > dv {dv}", b.name))?;
                    }
                }
            }
        }
    }
    Ok(format!("max defect lagrangian {lag:.1e}, las {las:.3}"))
}

fn transport_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let a = common::random_measure(&mut rng, 1, 20);
        let b = common::random_measure(&mut rng, 1, 20);
        let c = common::random_measure(&mut rng, 1, 20);
        let q = w1_quantile_1d(&a, &b).unwrap();
        let lp = w1_lp(&a, &b).unwrap();
        worst = worst.max((q - lp).abs());
        ensure((q - lp).abs() <= 1e-8, || format!("instance {i}: quantile {q} vs LP {lp}"))?;
        let ba = w1_distance(&b, &a).unwrap();
        ensure((q - ba).abs() <= 1e-8, || format!("instance {i}: asymmetric {q} vs {ba}"))?;
        let (ac, bc) = (w1_distance(&a, &c).unwrap(), w1_distance(&b, &c).unwrap());
        ensure(ac <= q + bc + 1e-8, || format!("instance {i}: triangle {ac} > {q} + {bc}"))?;
    }
    for i in 0..100 {
        let a = common::random_lifted(&mut rng, 8);
        let b = common::random_lifted(&mut rng, 8);
        let tr = lifted_w1(&a, &b).unwrap();
        let fw = fiber_pseudometric(&a, &b).unwrap();
        let base = w1_distance(&a.base(), &b.base()).unwrap();
        ensure(tr <= fw + base + 1e-7, || format!("lifted pair {i}: {tr} > {fw} + {base}"))?;
    }
    let pair = |x: f64| LiftedMeasure::from_pairs(&[(vec![x], vec![5.0])], &[1.0]).unwrap();
    let (a, b) = (pair(0.0), pair(1.0));
    let fw = fiber_pseudometric(&a, &b).unwrap();
    ensure(a != b && fw.abs() <= 1e-12, || format!("distinct pair gives {fw}"))?;
    Ok(format!("max |quantile - LP| {worst:.1e}"))
}

fn sup_gap(a: &MeasurePath, b: &MeasurePath) -> f64 {
    let table = compare_paths(0, &[(SchemeKind::Las, a), (SchemeKind::Lagrangian, b)]).unwrap();
    table.gaps[0].gap
}

fn las_lagrangian_gap() -> Outcome {
    let mut report = Vec::new();
    for b in [library::splitting_dirac(), library::binomial(), library::splitting_uniform(64)] {
        let gaps: Vec<f64> = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| sup_gap(&run_builtin(&b, SchemeKind::Las, n), &run_builtin(&b, SchemeKind::Lagrangian, n)))
            .collect();
        for w in gaps.windows(2) {
            ensure(w[1] <= w[0] + 1e-12, || format!("{}: gaps {gaps:?} not decreasing", b.name))?;
        }
        report.push(format!("{} {:.1e}..{:.1e}", b.name, gaps[0], gaps[3]));
    }
    Ok(report.join("; "))
}

fn split_pair_path(n: usize, speed: f64) -> MeasurePath {
    let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let measures = times
        .iter()
        .map(|&t| library::splitting_solution(&DiscreteMeasure::dirac(&[0.0]), speed * t).unwrap())
        .collect();
    MeasurePath::from_nodes(times, measures).unwrap()
}

fn residual_suite() -> Outcome {
    let b = library::binomial();
    let (spec, _) = b.build().unwrap();
    let stationary = run_builtin(&b, SchemeKind::MeanVelocity, 16);
    let d = residual(&stationary, &spec, &default_family(&stationary, 9).unwrap()).unwrap().max_defect;
    ensure(d <= 1e-9, || format!("stationary binomial path defect {d:e}"))?;

    let splitting = PvfSpec::splitting();
    let family = default_family(&split_pair_path(8, 2.0), 9).unwrap();
    let defects: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| {
            let path = run_builtin(&library::splitting_dirac(), SchemeKind::Lagrangian, n);
            residual(&path, &splitting, &family).unwrap().max_defect
        })
        .collect();
    for w in defects.windows(2) {
        ensure(w[1] <= 1.5 * w[0] / 2.0, || format!("defects {defects:?} do not halve"))?;
    }
    let wrong = residual(&split_pair_path(64, 2.0), &splitting, &family).unwrap();
    let truth = residual(&run_builtin(&library::splitting_dirac(), SchemeKind::Lagrangian, 64), &splitting, &family).unwrap();
    let (wt, tt) = (wrong.max_per_test(family.len()), truth.max_per_test(family.len()));
    let best = wt.iter().zip(&tt).map(|(w, t)| w / t.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    ensure(best >= 5.0, || format!("wrong-speed separation only {best:.2}x"))?;
    Ok(format!(
        "defects {}; wrong-speed {:.2e} ({best:.0}x)",
        defects.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(", "),
        wrong.max_defect
    ))
}

fn conservation_suite() -> Outcome {
    let mut runs = 0;
    for (b, ns) in small_runs() {
        let (spec, mu0) = b.build().unwrap();
        for n in ns {
            for scheme in SchemeKind::ALL {
                let path = run_builtin(&b, scheme, n);
                let grid = *path.grid().unwrap();
                for (k, m) in path.measures().iter().enumerate() {
                    let mass = m.total_mass();
                    ensure((mass - 1.0).abs() <= 1e-9, || format!("{} {scheme} N={n} node {k}: mass {mass}", b.name))?;
                    if scheme == SchemeKind::Las {
                        for x in m.coords() {
                            let off = (x - (x / grid.dx).round() * grid.dx).abs();
                            ensure(off <= ON_GRID_TOL * grid.dx, || {
                                format!("{} N={n} node {k}: {x} is {off:e} off the grid", b.name)
                            })?;
                        }
                    }
                }
                for v in path.interp() {
                    ensure((v.total_mass() - 1.0).abs() <= 1e-9, || format!("{} {scheme} N={n}: lift mass", b.name))?;
                }
                let c = spec.sublinearity_bound(path.measures()).unwrap();
                ensure(support_bound_check(&path, c, mu0.support_radius()), || {
                    format!("{} {scheme} N={n}: support bound fails with C={c}", b.name)
                })?;
                runs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        use rand::Rng;
        let dim = rng.gen_range(1..=3);
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r = rng.gen_range(0.2..3.0);
        let f = TestFunction::new(c.clone(), r).unwrap();
        let x: Vec<f64> = c.iter().map(|ci| ci + rng.gen_range(-1.2..1.2) * r).collect();
        let g = f.gradient(&x);
        let h = 1e-6 * r;
        for k in 0..dim {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[k] += h;
            m[k] -= h;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * h);
            let scale = g[k].abs().max(1e-3 * f.gradient_bound());
            let rel = (fd - g[k]).abs() / scale;
            worst = worst.max(rel);
            ensure(rel <= 1e-6, || format!("gradient mismatch at {x:?}: {} vs {fd}", g[k]))?;
        }
    }
    Ok(format!("{runs} runs conserve mass and support; gradient rel err {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("splitting particle from a Dirac", splitting_dirac),
        ("splitting particle from a uniform law", splitting_uniform),
        ("binomial scenario", binomial),
        ("peano scenario", peano),
        ("representation exactness", representation_exactness),
        ("superposition condition", superposition),
        ("transport metrics", transport_suite),
        ("LAS vs Lagrangian gap", las_lagrangian_gap),
        ("residual suite", residual_suite),
        ("conservation and shape", conservation_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({secs:.2} s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} ({secs:.2} s) {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
