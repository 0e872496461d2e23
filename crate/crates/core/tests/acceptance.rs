//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use lifespan_core::bounds::{
    bounds_report, default_cone, upper_bound_thm1, upper_bound_thm2, yamauchi_bound, BoundsOptions,
    LifespanBounds, ProblemSpec, RayProbe,
};
use lifespan_core::datum::{build_factorial_rings, max_factorial_index, InitialDatum, Shape};
use lifespan_core::density::{
    auto_center_search, density_profile, ring_outer_radii, Centers, DensityReport, DensityRequest, Estimator,
};
use lifespan_core::kernel::{kernel_selfcheck, semigroup_sup, Quadrature, QuadratureConfig};
use lifespan_core::report;
use lifespan_core::simulate::{jensen_check, run, BlowupEstimate, BlowupStatus, SimulationConfig};
use lifespan_core::Result;

type Outcome = Result<(bool, String)>;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn constant_exactness() -> Outcome {
    let start = Instant::now();
    let spec = ProblemSpec::new(InitialDatum::constant(1, 1.0)?, 2.0)?;
    let req = DensityRequest {
        alphas: vec![1.0],
        radii: vec![1.0, 10.0, 100.0],
        centers: Centers::Origin,
        estimator: Estimator::GridOracle { resolution: 1024 },
    };
    let density = density_profile(&spec.datum, &req)?;
    let quad = Quadrature::new(64)?;
    let b = bounds_report(&spec, &density, &quad, &BoundsOptions::default())?;
    let config = SimulationConfig { points_per_axis: 256, ..Default::default() };
    let est = run(&spec, &config)?;
    let t_num = est.t_num.unwrap_or(f64::NAN);
    let values = [b.lower, b.thm1.bound.value().unwrap_or(f64::NAN), b.thm2.bound.value().unwrap_or(f64::NAN)];
    let weissler = b.weissler.value().unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    let ok = values.iter().chain([&weissler]).all(|v| close(*v, 1.0, 1e-9)) && close(t_num, 1.0, 0.02) && secs < 30.0;
    Ok((ok, format!("bounds {values:?} weissler {weissler} T_num {t_num} in {secs:.1}s")))
}

fn factorial_rings() -> Outcome {
    let datum = build_factorial_rings::<f64>(5, 1)?;
    let spec = ProblemSpec::new(datum.clone(), 2.0)?;
    let req = DensityRequest {
        alphas: vec![1.0],
        radii: ring_outer_radii(&datum).expect("ring datum"),
        centers: Centers::Origin,
        estimator: Estimator::GridOracle { resolution: 1 << 16 },
    };
    let report = density_profile(&datum, &req)?;
    let at_120 = report.rows_of(lifespan_core::density::RowKind::Origin, 1.0).find(|r| r.r == 120.0).map(|r| r.density);
    let at_120 = at_120.unwrap_or(f64::NAN);
    let thm1 = upper_bound_thm1(&report, spec.p)?.bound.value().unwrap_or(f64::NAN);
    let small_ok = at_120 >= 1.0 - 24.0 / 120.0 - 0.01 && thm1 <= 1.0 / 0.79;

    // D(1) at r = a_k for odd k = 3, 5, … up to the largest factorial
    // representable in f64. Each radius is the outer edge of the last band of
    // build_factorial_rings(k), and further bands only lie outside the ball.
    let k_max = max_factorial_index::<f64>();
    let big = build_factorial_rings::<f64>(k_max, 1)?;
    let outer: Vec<f64> = ring_outer_radii(&big).expect("ring datum").into_iter().skip(1).collect();
    let est = Estimator::GridOracle { resolution: 1 << 20 };
    let mut trend = Vec::with_capacity(outer.len());
    for r in &outer {
        trend.push(lifespan_core::density::density_in_ball(&big, 1.0, &[0.0], *r, &est)?);
    }
    let monotone = trend.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let last = *trend.last().unwrap();
    Ok((
        small_ok && monotone && last > 0.99,
        format!(
            "D(1; 120) = {at_120}, thm1 = {thm1}; k_max = {k_max}: {} radii, D from {} to {last}, monotone {monotone}",
            trend.len(),
            trend[0]
        ),
    ))
}

fn stripe_spec() -> Result<ProblemSpec<f64>> {
    ProblemSpec::new(InitialDatum::stripe(1, 8.0, 0.5, 1.0, 0.25)?, 2.0)
}

fn stripe_request() -> DensityRequest<f64> {
    DensityRequest {
        alphas: vec![0.5, 1.0],
        radii: lifespan_core::density::geometric_radii(10.0, 1000.0, 8).unwrap(),
        centers: Centers::AutoSearch,
        estimator: Estimator::MonteCarlo { samples: 100_000, seed: 7 },
    }
}

fn stripe_quadrature() -> Result<Quadrature<f64>> {
    QuadratureConfig::trapezoid(512).build()
}

fn stripe_sim() -> SimulationConfig {
    SimulationConfig { half_period: 4.0, points_per_axis: 512, t_max: 5.0, snapshot_stride: 2000, ..Default::default() }
}

struct StripeRun {
    density: DensityReport<f64>,
    bounds: LifespanBounds<f64>,
    est: BlowupEstimate<f64>,
    secs: f64,
}

fn stripe_run() -> Result<StripeRun> {
    let start = Instant::now();
    let spec = stripe_spec()?;
    let density = density_profile(&spec.datum, &stripe_request())?;
    let bounds = bounds_report(&spec, &density, &stripe_quadrature()?, &BoundsOptions::default())?;
    let est = run(&spec, &stripe_sim())?;
    Ok(StripeRun { density, bounds, est, secs: start.elapsed().as_secs_f64() })
}

fn report_bodies(r: &StripeRun) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    report::write_density_csv(&mut out, &r.density, "acceptance")?;
    report::write_bounds_csv(&mut out, &r.bounds, "acceptance")?;
    report::write_blowup_csv(&mut out, &r.est, 4.0, 512, "acceptance")?;
    report::write_history_csv(&mut out, &r.est.sup_history, "acceptance")?;
    Ok(out)
}

fn stripe_sandwich(r: &StripeRun) -> Outcome {
    let d_bar = r.density.d_bar(1.0).unwrap_or(f64::NAN);
    let t_num = r.est.t_num.unwrap_or(f64::NAN);
    let thm2 = upper_bound_thm2(1.0, d_bar, 2.0)?.value().unwrap_or(f64::NAN);
    let ok = (0.48..=0.52).contains(&d_bar)
        && r.est.status == BlowupStatus::BlewUp
        && t_num >= 0.98
        && t_num <= 2.0 * 1.02
        && t_num <= thm2 * 1.02
        && r.secs < 60.0;
    Ok((ok, format!("D_bar(1) = {d_bar}, T_num = {t_num}, thm2(1) = {thm2}, {:.1}s", r.secs)))
}

fn kernel_identities() -> Outcome {
    let quad = Quadrature::<f64>::new(64)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [1, 2] {
        let k = kernel_selfcheck(n, 1.0, 1.0, &quad, 16, 1)?;
        ok &= k.failures(1e-8, 1e-10).is_empty();
        detail.push(format!(
            "n={n}: sym {} trans {} semigroup {:.1e} mass {:.1e}",
            k.symmetry_residual, k.translation_residual, k.semigroup_residual, k.conservation_residual
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn semigroup_lower_bound(r: &StripeRun) -> Outcome {
    let spec = stripe_spec()?;
    let quad = stripe_quadrature()?;
    let d_bar = r.density.d_bar(1.0).unwrap_or(f64::NAN);
    let mut ok = true;
    let mut detail = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let s = semigroup_sup(&spec.datum, t, &quad)?.value;
        ok &= s >= d_bar - 0.02;
        detail.push(format!("t={t}: {s:.4}"));
    }
    Ok((ok, format!("{} against {:.4}", detail.join(", "), d_bar - 0.02)))
}

fn jensen_invariant(r: &StripeRun) -> Outcome {
    let quad = stripe_quadrature()?;
    let mut worst = f64::INFINITY;
    let mut min_positive = f64::INFINITY;
    let mut ok = true;
    let snaps: Vec<_> = r.est.snapshots.iter().chain([&r.est.final_state]).collect();
    for snap in &snaps {
        let constant = snap.values.iter().all(|v| *v == snap.values[0]);
        for z in [0.0, 2.0, 4.0 - 1e-3] {
            let j = jensen_check(snap, snap.t, snap.t + 1.0, &[z], 2.0, &quad)?;
            worst = worst.min(j.normalized);
            ok &= j.normalized >= -1e-9 && (constant || j.normalized > 0.0);
        }
        let min = snap.values.iter().copied().fold(f64::INFINITY, f64::min);
        min_positive = min_positive.min(min);
        ok &= constant || min > 0.0;
    }
    Ok((ok, format!("{} snapshots, worst residual {worst:.3e}, min value {min_positive:.3e}", snaps.len())))
}

fn oracle_equivalence() -> Outcome {
    let annulus = InitialDatum::new(
        2,
        Shape::RadialRings { radii: vec![1e-3, 1.0, 2.0], amplitude: 1.0, smoothing_width: 1e-3 },
    )?;
    let mc = lifespan_core::density::density_in_ball(
        &annulus,
        1.0,
        &[0.0, 0.0],
        2.0,
        &Estimator::MonteCarlo { samples: 1_000_000, seed: 2024 },
    )?;
    let grid = lifespan_core::density::oracle_density(&annulus, 1.0, &[0.0, 0.0], 2.0, 1024)?;
    let ok = close(mc, grid, 2e-3) && close(mc, 0.75, 1e-2) && close(grid, 0.75, 1e-2);
    Ok((ok, format!("monte carlo {mc}, grid {grid}, analytic 0.75")))
}

fn conic_coverage() -> Outcome {
    let datum = InitialDatum::new(
        2,
        Shape::ConicSector {
            axis: vec![1.0, 0.0],
            half_width: 0.5,
            amplitude: 1.0,
            inner_radius: 0.0,
            smoothing_width: 0.25,
        },
    )?;
    let spec = ProblemSpec::new(datum, 2.0)?;
    let est = Estimator::MonteCarlo { samples: 100_000, seed: 3 };
    let mut ok = true;
    let mut found = Vec::new();
    for r in [10.0, 31.6, 100.0] {
        let c = auto_center_search(&spec.datum, 0.99, r, &est)?;
        ok &= c.density >= 0.95;
        found.push(format!("r={r}: {:.4}", c.density));
    }
    let thm2 = upper_bound_thm2(0.99, 0.95, 2.0)?.value().unwrap_or(f64::NAN);
    let cone = default_cone(&spec.datum);
    let yam = yamauchi_bound(&spec, Some(&cone), &RayProbe::default())?.bound.value().unwrap_or(f64::NAN);
    ok &= (thm2 - yam).abs() <= 0.1 * yam;
    Ok((ok, format!("{}; thm2(0.99, 0.95) = {thm2:.4}, yamauchi = {yam}", found.join(", "))))
}

fn determinism(first: &StripeRun) -> Outcome {
    let reference = report_bodies(first)?;
    let again = report_bodies(&stripe_run()?)?;
    let mut per_pool = Vec::new();
    for threads in [1, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        let r = pool.install(stripe_run)?;
        per_pool.push(report_bodies(&r)?);
    }
    let same_seed = again == reference;
    let same_threads = per_pool.iter().all(|b| *b == reference);
    Ok((same_seed && same_threads, format!("rerun identical {same_seed}, 1 vs 8 threads identical {same_threads}")))
}

fn main() -> ExitCode {
    let stripe = stripe_run();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 constant datum exactness", constant_exactness()),
        ("2 factorial rings", factorial_rings()),
    ];
    match &stripe {
        Ok(r) => {
            results.push(("3 stripe sandwich", stripe_sandwich(r)));
            results.push(("4 kernel identities", kernel_identities()));
            results.push(("5 semigroup lower bound", semigroup_lower_bound(r)));
            results.push(("6 jensen invariant", jensen_invariant(r)));
        }
        Err(e) => {
            for name in ["3 stripe sandwich", "5 semigroup lower bound", "6 jensen invariant"] {
                results.push((name, Err(e.clone())));
            }
            results.push(("4 kernel identities", kernel_identities()));
        }
    }
    results.push(("7 oracle equivalence", oracle_equivalence()));
    results.push(("8 conic coverage", conic_coverage()));
    match &stripe {
        Ok(r) => results.push(("9 determinism", determinism(r))),
        Err(e) => results.push(("9 determinism", Err(e.clone()))),
    }
    results.sort_by_key(|(name, _)| name.split(' ').next().and_then(|n| n.parse::<u32>().ok()));

    let mut all = true;
    for (name, outcome) in &results {
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (*ok, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("{} criterion {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
