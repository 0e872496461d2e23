//! CSV serialization of every report.
//!
//! Bodies depend only on the inputs; the one run-dependent line is an optional
//! `# generated <unix seconds>` comment at the top, which readers skip.
//! Floats are written with Rust's shortest round-trip formatting.

use std::io::{Read, Write};

use crate::bounds::{AlphaBound, Bound, FlagStatus, LifespanBounds};
use crate::density::{AlphaSummary, DensityReport, DensityRow, Estimator, RowKind};
use crate::error::{Error, Result};
use crate::kernel::KernelCheckReport;
use crate::scalar::Real;
use crate::simulate::{BlowupEstimate, Snapshot};

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Report(e.to_string())
}

/// The comment line placed above a report body.
pub fn timestamp_line() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated {secs}\n")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

fn parse<T: Real>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Report(format!("bad {what} value {field:?}")))
}

fn kind_name(kind: RowKind) -> &'static str {
    match kind {
        RowKind::Origin => "origin",
        RowKind::CenterSup => "center_sup",
    }
}

/// `kind,alpha,r,center_0..center_{n−1},density,estimator,samples_or_resolution,config_hash`.
///
/// Rows of kind `origin` and `center_sup` hold per-radius densities; rows of
/// kind `d_origin` and `d_bar` hold the limsup proxies with their witness
/// radius and centre.
pub fn write_density_csv<T: Real, W: Write>(w: W, report: &DensityReport<T>, config_hash: &str) -> Result<()> {
    let mut out = writer(w);
    let n = report.dimension;
    let mut header = vec!["kind".to_string(), "alpha".into(), "r".into()];
    header.extend((0..n).map(|k| format!("center_{k}")));
    header.extend(["density", "estimator", "samples_or_resolution", "config_hash"].map(String::from));
    out.write_record(&header).map_err(csv_err)?;
    let est = report.estimator.name();
    let size = report.estimator.size().to_string();
    let mut emit = |kind: &str, alpha: T, r: T, center: &[T], density: T| -> Result<()> {
        let mut rec = vec![kind.to_string(), alpha.to_string(), r.to_string()];
        rec.extend(center.iter().map(|c| c.to_string()));
        rec.extend([density.to_string(), est.to_string(), size.clone(), config_hash.to_string()]);
        out.write_record(&rec).map_err(csv_err)
    };
    for row in &report.rows {
        emit(kind_name(row.kind), row.alpha, row.r, &row.center, row.density)?;
    }
    let origin = vec![T::zero(); n];
    for s in &report.summaries {
        emit("d_origin", s.alpha, s.d_origin_radius, &origin, s.d_origin)?;
        emit("d_bar", s.alpha, s.d_bar_radius, &s.d_bar_center, s.d_bar)?;
    }
    out.flush().map_err(csv_err)
}

/// Reads a file produced by [`write_density_csv`]. Monte Carlo seeds are not
/// stored, so an ingested Monte Carlo report carries seed 0.
pub fn read_density_csv<T: Real, R: Read>(r: R) -> Result<DensityReport<T>> {
    let mut rd = reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    let n = headers.iter().filter(|h| h.starts_with("center_")).count();
    let expected = 7 + n;
    if n == 0 || n > 3 || headers.len() != expected || &headers[0] != "kind" {
        return Err(Error::Report("density.csv header does not match the documented layout".into()));
    }
    let mut rows = Vec::new();
    let mut summaries: Vec<AlphaSummary<T>> = Vec::new();
    let mut radii: Vec<T> = Vec::new();
    let mut estimator = None;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != expected {
            return Err(Error::Report(format!("density.csv row has {} fields, expected {expected}", rec.len())));
        }
        let alpha: T = parse(&rec[1], "alpha")?;
        let r: T = parse(&rec[2], "radius")?;
        let center = (0..n).map(|k| parse(&rec[3 + k], "center")).collect::<Result<Vec<T>>>()?;
        let density: T = parse(&rec[3 + n], "density")?;
        if !(density >= T::zero() && density <= T::one()) {
            return Err(Error::Report(format!("density {density} outside [0, 1]")));
        }
        let size: usize = rec[5 + n].parse().map_err(|_| Error::Report("bad samples_or_resolution".into()))?;
        estimator = Some(match &rec[4 + n] {
            "monte_carlo" => Estimator::MonteCarlo { samples: size, seed: 0 },
            "grid_oracle" => Estimator::GridOracle { resolution: size },
            other => return Err(Error::Report(format!("unknown estimator {other:?}"))),
        });
        let summary = |summaries: &mut Vec<AlphaSummary<T>>| -> usize {
            if let Some(i) = summaries.iter().position(|s| s.alpha == alpha) {
                return i;
            }
            summaries.push(AlphaSummary {
                alpha,
                d_origin: T::zero(),
                d_origin_radius: T::zero(),
                d_bar: T::zero(),
                d_bar_radius: T::zero(),
                d_bar_center: vec![T::zero(); n],
            });
            summaries.len() - 1
        };
        match &rec[0] {
            "origin" | "center_sup" => {
                let kind = if &rec[0] == "origin" { RowKind::Origin } else { RowKind::CenterSup };
                if !radii.contains(&r) {
                    radii.push(r);
                }
                rows.push(DensityRow { kind, alpha, r, center, density });
            }
            "d_origin" => {
                let i = summary(&mut summaries);
                summaries[i].d_origin = density;
                summaries[i].d_origin_radius = r;
            }
            "d_bar" => {
                let i = summary(&mut summaries);
                summaries[i].d_bar = density;
                summaries[i].d_bar_radius = r;
                summaries[i].d_bar_center = center;
            }
            other => return Err(Error::Report(format!("unknown row kind {other:?}"))),
        }
    }
    let estimator = estimator.ok_or_else(|| Error::Report("density.csv has no rows".into()))?;
    if summaries.is_empty() {
        return Err(Error::Report("density.csv has no d_origin/d_bar rows".into()));
    }
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    Ok(DensityReport { dimension: n, estimator, radii, rows, summaries })
}

fn flag_str(s: FlagStatus) -> &'static str {
    match s {
        FlagStatus::Pass => "pass",
        FlagStatus::Fail => "fail",
        FlagStatus::NotApplicable => "n/a",
    }
}

/// `name,value,available,parameters,flags,config_hash`, one row per bound.
/// Each row's `flags` lists the consistency checks that involve it.
pub fn write_bounds_csv<T: Real, W: Write>(w: W, b: &LifespanBounds<T>, config_hash: &str) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["name", "value", "available", "parameters", "flags", "config_hash"]).map_err(csv_err)?;
    let flags_for = |key: &str| -> String {
        b.flags
            .iter()
            .filter(|f| f.name.split("_le_").any(|part| part.starts_with(key)))
            .map(|f| format!("{}={}", f.name, flag_str(f.status)))
            .collect::<Vec<_>>()
            .join(";")
    };
    let bound_fields = |bound: &Bound<T>| -> (String, String) {
        match bound {
            Bound::Finite(v) => (v.to_string(), "true".into()),
            Bound::Unavailable(why) => ("unavailable".into(), format!("false:{}", why.as_str())),
        }
    };
    let alpha_params = |a: &AlphaBound<T>| -> String {
        match (a.alpha, a.density) {
            (Some(al), Some(d)) => format!("alpha={al};density={d};p={}", b.p),
            _ => format!("p={}", b.p),
        }
    };
    let mut rows: Vec<[String; 5]> = Vec::new();
    rows.push(["lower".into(), b.lower.to_string(), "true".into(), format!("p={}", b.p), flags_for("lower")]);
    for (name, ab) in [("thm1", &b.thm1), ("thm2", &b.thm2)] {
        let (v, avail) = bound_fields(&ab.bound);
        rows.push([name.into(), v, avail, alpha_params(ab), flags_for(name)]);
    }
    let (v, avail) = bound_fields(&b.yamauchi.bound);
    let mut params = format!("essinf={};p={}", b.yamauchi.essinf, b.p);
    if let Some(c) = &b.yamauchi.cone {
        let axis: Vec<String> = c.axis.iter().map(|a| a.to_string()).collect();
        params = format!("axis={};delta={};{params}", axis.join(" "), c.half_width);
    }
    rows.push(["yamauchi".into(), v, avail, params, flags_for("yamauchi")]);
    let (v, avail) = bound_fields(&b.weissler);
    rows.push(["weissler".into(), v, avail, format!("p={}", b.p), flags_for("weissler")]);
    for r in rows {
        out.write_record(r.iter().map(String::as_str).chain([config_hash])).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

/// One parsed `bounds.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub name: String,
    pub value: Option<f64>,
    pub parameters: String,
    pub flags: String,
}

pub fn read_bounds_csv<R: Read>(r: R) -> Result<Vec<BoundRow>> {
    let mut rd = reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 6 {
            return Err(Error::Report("bounds.csv row must have 6 fields".into()));
        }
        let value = if rec[2].starts_with("true") { Some(parse::<f64>(&rec[1], "bound")?) } else { None };
        rows.push(BoundRow { name: rec[0].into(), value, parameters: rec[3].into(), flags: rec[4].into() });
    }
    Ok(rows)
}

/// `status,t_num,fit_residual,fit,t_stop,steps,min_value,L,N,detail,config_hash`.
pub fn write_blowup_csv<T: Real, W: Write>(
    w: W,
    est: &BlowupEstimate<T>,
    half_period: f64,
    points_per_axis: usize,
    config_hash: &str,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(BLOWUP_HEADER).map_err(csv_err)?;
    let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    let fit = match est.fit_kind {
        Some(crate::simulate::FitKind::LeastSquares) => "least_squares",
        Some(crate::simulate::FitKind::OdeTail) => "ode_tail",
        None => "",
    };
    out.write_record([
        est.status.as_str().to_string(),
        opt(est.t_num),
        opt(est.fit_residual),
        fit.to_string(),
        est.t_stop.to_string(),
        est.steps.to_string(),
        est.min_value.to_string(),
        half_period.to_string(),
        points_per_axis.to_string(),
        String::new(),
        config_hash.to_string(),
    ])
    .map_err(csv_err)?;
    out.flush().map_err(csv_err)
}

const BLOWUP_HEADER: [&str; 11] =
    ["status", "t_num", "fit_residual", "fit", "t_stop", "steps", "min_value", "L", "N", "detail", "config_hash"];

/// Diagnostic row for a run that produced non-finite values.
pub fn write_blowup_failure_csv<W: Write>(
    w: W,
    t: f64,
    reason: &str,
    half_period: f64,
    points_per_axis: usize,
    config_hash: &str,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(BLOWUP_HEADER).map_err(csv_err)?;
    let t = t.to_string();
    out.write_record([
        "numerical_failure",
        "",
        "",
        "",
        &t,
        "",
        "",
        &half_period.to_string(),
        &points_per_axis.to_string(),
        reason,
        config_hash,
    ])
    .map_err(csv_err)?;
    out.flush().map_err(csv_err)
}

/// `t,sup_norm,config_hash`.
pub fn write_history_csv<T: Real, W: Write>(w: W, history: &[(T, T)], config_hash: &str) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "sup_norm", "config_hash"]).map_err(csv_err)?;
    for (t, s) in history {
        out.write_record([t.to_string(), s.to_string(), config_hash.to_string()]).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

pub fn read_history_csv<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut rd = reader(r);
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok((parse(&rec[0], "t")?, parse(&rec[1], "sup_norm")?))
        })
        .collect()
}

/// Header line `n,N,L,t` with its values, then one grid value per line in
/// row-major order.
pub fn write_grid_dump<T: Real, W: Write>(mut w: W, snap: &Snapshot<T>) -> Result<()> {
    let io = |e: std::io::Error| Error::Report(e.to_string());
    writeln!(w, "n,N,L,t").map_err(io)?;
    writeln!(w, "{},{},{},{}", snap.dimension, snap.points_per_axis, snap.half_period, snap.t).map_err(io)?;
    for v in &snap.values {
        writeln!(w, "{v}").map_err(io)?;
    }
    Ok(())
}

pub fn read_grid_dump<T: Real, R: Read>(mut r: R) -> Result<Snapshot<T>> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::Report(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some("n,N,L,t") {
        return Err(Error::Report("grid dump must start with n,N,L,t".into()));
    }
    let head: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    if head.len() != 4 {
        return Err(Error::Report("grid dump header needs four values".into()));
    }
    let dimension: usize = head[0].parse().map_err(|_| Error::Report("bad n".into()))?;
    let points_per_axis: usize = head[1].parse().map_err(|_| Error::Report("bad N".into()))?;
    let values = lines.map(|l| parse(l, "grid")).collect::<Result<Vec<T>>>()?;
    if !(1..=3).contains(&dimension) || values.len() != points_per_axis.pow(dimension as u32) {
        return Err(Error::Report("grid dump size does not match its header".into()));
    }
    Ok(Snapshot { t: parse(head[3], "t")?, dimension, points_per_axis, half_period: parse(head[2], "L")?, values })
}

/// One pass/fail verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub value: String,
    pub threshold: String,
    pub detail: String,
}

/// `check,status,value,threshold,detail,config_hash`.
pub fn write_verify_csv<W: Write>(w: W, rows: &[CheckRow], config_hash: &str) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["check", "status", "value", "threshold", "detail", "config_hash"]).map_err(csv_err)?;
    for r in rows {
        let status = if r.passed { "pass" } else { "fail" };
        out.write_record([r.check.as_str(), status, &r.value, &r.threshold, &r.detail, config_hash])
            .map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

/// `dimension,symmetry,translation,semigroup,conservation,status,config_hash`.
pub fn write_kernel_check_csv<T: Real, W: Write>(
    w: W,
    reports: &[(KernelCheckReport<T>, Vec<&'static str>)],
    config_hash: &str,
) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["dimension", "symmetry", "translation", "semigroup", "conservation", "status", "config_hash"])
        .map_err(csv_err)?;
    for (r, failures) in reports {
        let status = if failures.is_empty() { "pass".to_string() } else { format!("fail:{}", failures.join(" ")) };
        out.write_record([
            r.dimension.to_string(),
            r.symmetry_residual.to_string(),
            r.translation_residual.to_string(),
            r.semigroup_residual.to_string(),
            r.conservation_residual.to_string(),
            status,
            config_hash.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}
