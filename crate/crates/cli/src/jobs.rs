//! The five subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use lifespan_core::bounds::{bounds_report, FlagStatus, LifespanBounds};
use lifespan_core::density::{density_profile, DensityReport};
use lifespan_core::kernel::{kernel_selfcheck, semigroup_sup, Quadrature, QuadratureConfig};
use lifespan_core::report::{self, CheckRow};
use lifespan_core::simulate::{jensen_check, run, BlowupEstimate, BlowupStatus, Snapshot};
use lifespan_core::Error;

use crate::config::LoadedConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    Bounds,
    Simulate,
    Verify,
    KernelCheck,
}

/// What a command did: files written, human-readable lines and, for
/// `verify` and `kernel-check`, the verdict.
#[derive(Debug, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub passed: Option<bool>,
    pub failing: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a LoadedConfig,
    out: PathBuf,
    summary: Summary,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> lifespan_core::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        if self.cfg.run.outputs.timestamp && name.ends_with(".csv") {
            buf.extend_from_slice(report::timestamp_line().as_bytes());
        }
        body(&mut buf)?;
        let path = self.out.join(name);
        fs::write(&path, buf)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn quadrature(&self) -> Result<Quadrature<f64>, CliError> {
        Ok(self.cfg.run.quadrature.build()?)
    }

    fn hash(&self) -> String {
        self.cfg.hash.clone()
    }
}

/// Runs one subcommand, writing reports under `out` (or the configured
/// output directory).
pub fn run_command(cmd: Command, cfg: &LoadedConfig, out: Option<&Path>) -> Result<Summary, CliError> {
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.resolve(&cfg.run.outputs.directory),
    };
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let mut ctx = Ctx { cfg, out, summary: Summary::default() };
    match cmd {
        Command::Density => {
            density(&mut ctx)?;
        }
        Command::Bounds => {
            let d = density(&mut ctx)?;
            bounds(&mut ctx, &d)?;
        }
        Command::Simulate => {
            simulate(&mut ctx)?;
        }
        Command::Verify => verify(&mut ctx)?,
        Command::KernelCheck => {
            let rows = kernel_rows(&ctx)?;
            let hash = ctx.hash();
            let reports: Vec<_> = rows.iter().map(|(r, f)| (*r, f.clone())).collect();
            ctx.write("kernel_check.csv", |b| report::write_kernel_check_csv(b, &reports, &hash))?;
            let failing: Vec<String> = rows
                .iter()
                .filter(|(_, f)| !f.is_empty())
                .map(|(r, f)| format!("kernel n={}: {}", r.dimension, f.join(", ")))
                .collect();
            ctx.summary.lines.push(format!("kernel identities checked for n = 1, 2 ({} failing)", failing.len()));
            ctx.summary.passed = Some(failing.is_empty());
            ctx.summary.failing = failing;
        }
    }
    Ok(ctx.summary)
}

fn density(ctx: &mut Ctx) -> Result<DensityReport<f64>, CliError> {
    let hash = ctx.hash();
    let report = match &ctx.cfg.run.density.ingest {
        Some(path) => {
            let path = ctx.cfg.resolve(path);
            let file = fs::File::open(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let rep: DensityReport<f64> = report::read_density_csv(file)?;
            if rep.dimension != ctx.cfg.run.problem.datum.dimension() {
                return Err(CliError::Config("ingested densities have the wrong dimension".into()));
            }
            ctx.summary.lines.push(format!("ingested densities from {}", path.display()));
            rep
        }
        None => {
            let req = ctx.cfg.density_request()?;
            density_profile(&ctx.cfg.run.problem.datum, &req)?
        }
    };
    ctx.write("density.csv", |b| report::write_density_csv(b, &report, &hash))?;
    for s in &report.summaries {
        ctx.summary.lines.push(format!("alpha {}: D {} D_bar {}", s.alpha, s.d_origin, s.d_bar));
    }
    Ok(report)
}

fn bounds(ctx: &mut Ctx, density: &DensityReport<f64>) -> Result<LifespanBounds<f64>, CliError> {
    let quad = ctx.quadrature()?;
    let b = bounds_report(&ctx.cfg.run.problem, density, &quad, &ctx.cfg.run.bounds)?;
    let hash = ctx.hash();
    ctx.write("bounds.csv", |buf| report::write_bounds_csv(buf, &b, &hash))?;
    let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "unavailable".into());
    ctx.summary.lines.push(format!(
        "lower {} thm1 {} thm2 {} yamauchi {} weissler {}",
        b.lower,
        show(b.thm1.bound.value()),
        show(b.thm2.bound.value()),
        show(b.yamauchi.bound.value()),
        show(b.weissler.value())
    ));
    Ok(b)
}

fn simulate(ctx: &mut Ctx) -> Result<BlowupEstimate<f64>, CliError> {
    let sim = ctx.cfg.run.simulate.clone();
    let hash = ctx.hash();
    match run(&ctx.cfg.run.problem, &sim) {
        Ok(est) => {
            ctx.write("blowup.csv", |b| report::write_blowup_csv(b, &est, sim.half_period, sim.points_per_axis, &hash))?;
            ctx.write("history.csv", |b| report::write_history_csv(b, &est.sup_history, &hash))?;
            if ctx.cfg.run.outputs.grid_dumps {
                for (i, snap) in est.snapshots.iter().enumerate() {
                    ctx.write(&format!("snapshot_{i:04}.grid"), |b| report::write_grid_dump(b, snap))?;
                }
                ctx.write("final.grid", |b| report::write_grid_dump(b, &est.final_state))?;
            }
            let t = est.t_num.map(|t| t.to_string()).unwrap_or_else(|| "none".into());
            ctx.summary.lines.push(format!("{} after {} steps, T_num {t}", est.status.as_str(), est.steps));
            Ok(est)
        }
        Err(Error::NumericalFailure { t, reason }) => {
            ctx.write("blowup.csv", |b| {
                report::write_blowup_failure_csv(b, t, &reason, sim.half_period, sim.points_per_axis, &hash)
            })?;
            Err(CliError::Numerical(format!("{reason} at t = {t}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn kernel_rows(ctx: &Ctx) -> Result<Vec<(lifespan_core::kernel::KernelCheckReport<f64>, Vec<&'static str>)>, CliError> {
    let v = &ctx.cfg.run.verify;
    let quad: Quadrature<f64> = QuadratureConfig::with_nodes(v.kernel_nodes).build()?;
    let seed = ctx.cfg.seed.unwrap_or(0);
    [1usize, 2]
        .iter()
        .map(|&n| {
            let r = kernel_selfcheck(n, 1.0, 1.0, &quad, v.kernel_samples, seed)?;
            let f = r.failures(1e-8, 1e-10);
            Ok((r, f))
        })
        .collect()
}

fn check(rows: &mut Vec<CheckRow>, name: impl Into<String>, passed: bool, value: impl ToString, threshold: impl ToString, detail: impl Into<String>) {
    rows.push(CheckRow {
        check: name.into(),
        passed,
        value: value.to_string(),
        threshold: threshold.to_string(),
        detail: detail.into(),
    });
}

fn jensen_rows(rows: &mut Vec<CheckRow>, snaps: &[&Snapshot<f64>], p: f64, quad: &Quadrature<f64>) -> Result<(), CliError> {
    for snap in snaps {
        let n = snap.dimension;
        let (imax, _) = snap
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let h = 2.0 * snap.half_period / snap.points_per_axis as f64;
        let mut at_max = vec![0.0; n];
        let mut rem = imax;
        for k in (0..n).rev() {
            at_max[k] = -snap.half_period + h * (rem % snap.points_per_axis) as f64;
            rem /= snap.points_per_axis;
        }
        let constant = snap.values.iter().all(|v| *v == snap.values[0]);
        let mut worst = f64::INFINITY;
        for z in [vec![0.0; n], at_max] {
            let j = jensen_check(snap, snap.t, snap.t + 1.0, &z, p, quad)?;
            worst = worst.min(j.normalized);
        }
        let passed = worst >= -1e-9 && (constant || worst > 0.0);
        let detail = if constant { "constant snapshot" } else { "strict positivity required" };
        check(rows, format!("jensen_t={}", snap.t), passed, worst, -1e-9, detail);
    }
    Ok(())
}

fn verify(ctx: &mut Ctx) -> Result<(), CliError> {
    let density = density(ctx)?;
    let b = bounds(ctx, &density)?;
    let est = simulate(ctx)?;
    let run_cfg = &ctx.cfg.run;
    let v = &run_cfg.verify;
    let quad = ctx.quadrature()?;
    let mut rows = Vec::new();

    let tol = v.sandwich_tolerance;
    match (est.status, est.t_num) {
        (BlowupStatus::BlewUp, Some(t_num)) => {
            check(&mut rows, "sandwich_lower", t_num >= b.lower * (1.0 - tol), t_num, b.lower * (1.0 - tol), "lower bound ≤ T_num");
            let uppers = [
                ("thm1", b.thm1.bound.value()),
                ("thm2", b.thm2.bound.value()),
                ("yamauchi", b.yamauchi.bound.value()),
                ("weissler", b.weissler.value()),
            ];
            for (name, u) in uppers {
                if let Some(u) = u {
                    let limit = u * (1.0 + tol);
                    check(&mut rows, format!("sandwich_{name}"), t_num <= limit, t_num, limit, format!("T_num ≤ {name} bound"));
                }
            }
        }
        _ => {
            let t_max = run_cfg.simulate.t_max;
            check(&mut rows, "sandwich_lower", true, "none", b.lower, "no blow-up within horizon");
            for (name, u) in [("thm1", b.thm1.bound.value()), ("thm2", b.thm2.bound.value())] {
                if let Some(u) = u {
                    let limit = u * (1.0 + tol);
                    check(&mut rows, format!("sandwich_{name}"), t_max <= limit, t_max, limit, "horizon passed without blow-up");
                }
            }
        }
    }
    for f in &b.flags {
        let status = match f.status {
            FlagStatus::Pass => "pass",
            FlagStatus::Fail => "fail",
            FlagStatus::NotApplicable => "not applicable",
        };
        check(&mut rows, format!("bounds_flag_{}", f.name), f.status != FlagStatus::Fail, status, "", "");
    }

    let datum = &run_cfg.problem.datum;
    for &t in &v.semigroup_times {
        let s = semigroup_sup(datum, t, &quad)?.value;
        let need = density
            .summaries
            .iter()
            .filter(|s| s.d_bar > 0.0)
            .map(|s| s.alpha * s.d_bar - v.semigroup_tolerance * s.alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        if need.is_finite() {
            check(&mut rows, format!("semigroup_lower_bound_t={t}"), s >= need, s, need, "sup e^{tΔ}φ ≥ α·D̄(α) − tol·α");
        }
    }

    for (r, failures) in kernel_rows(ctx)? {
        let worst = r.semigroup_residual.max(r.conservation_residual);
        check(&mut rows, format!("kernel_n={}", r.dimension), failures.is_empty(), worst, "1e-8", failures.join(" "));
    }

    check(&mut rows, "positivity", est.min_value >= -1e-10, est.min_value, -1e-10, "min over accepted steps");
    let snaps: Vec<&Snapshot<f64>> = est.snapshots.iter().chain([&est.final_state]).collect();
    jensen_rows(&mut rows, &snaps, run_cfg.problem.p, &quad)?;

    let hash = ctx.hash();
    ctx.write("verify.csv", |buf| report::write_verify_csv(buf, &rows, &hash))?;
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: value {} threshold {}", r.check, r.value, r.threshold))
        .collect();
    ctx.summary.lines.push(format!("{} checks, {} failing", rows.len(), failing.len()));
    ctx.summary.passed = Some(failing.is_empty());
    ctx.summary.failing = failing;
    Ok(())
}
