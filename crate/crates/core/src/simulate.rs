//! Blow-up simulation of `u_t = Δu + |u|^{p−1}u` on the torus `[−L, L)ⁿ`.
//!
//! Each step is a Strang splitting: half a diffusion step, the reaction
//! `u′ = |u|^{p−1}u` solved exactly over the full step, half a diffusion step.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bounds::ProblemSpec;
use crate::error::{Error, Result};
use crate::kernel::Quadrature;
use crate::scalar::Real;

/// Grids at least this large update in parallel.
const PARALLEL_CELLS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laplacian {
    /// Second-order central differences with forward Euler sub-steps. The
    /// update is a convex combination of neighbours, so it keeps `u ≥ 0`.
    #[default]
    FiniteDifference,
    /// Exact heat propagator `e^{−|k|²τ}` applied in discrete Fourier space.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// `L`; the torus is `[−L, L)ⁿ`.
    pub half_period: f64,
    /// `N`, a power of two, at least 64.
    pub points_per_axis: usize,
    /// `M`: the run stops once `‖u‖∞ ≥ M`.
    pub blowup_threshold: f64,
    /// `θ` in `dt = θ·min(h²/(4n), (p−1)^{−1}‖u‖∞^{1−p})`.
    pub safety: f64,
    pub t_max: f64,
    /// Keep a copy of the field every this many steps; 0 keeps none.
    pub snapshot_stride: usize,
    /// Points used by the blow-up time fit.
    pub fit_window: usize,
    pub laplacian: Laplacian,
    pub max_steps: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            half_period: 4.0,
            points_per_axis: 256,
            blowup_threshold: 1e8,
            safety: 0.5,
            t_max: 10.0,
            snapshot_stride: 0,
            fit_window: 20,
            laplacian: Laplacian::default(),
            max_steps: 20_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.half_period > 0.0 && self.half_period.is_finite()) {
            return bad("half period must be positive");
        }
        if self.points_per_axis < 64 || !self.points_per_axis.is_power_of_two() {
            return bad("points per axis must be a power of two, at least 64");
        }
        if !(self.blowup_threshold >= 1e4) {
            return bad("blow-up threshold must be at least 1e4");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety factor must lie in (0, 1)");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if self.fit_window < 5 {
            return bad("fit window needs at least 5 points");
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.points_per_axis as f64
    }
}

/// Copy of the field at time `t` on the nodes `−L + i·h`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    pub dimension: usize,
    pub points_per_axis: usize,
    pub half_period: T,
    pub values: Vec<T>,
}

impl<T: Real> Snapshot<T> {
    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Periodic multilinear interpolation.
    pub fn interpolate(&self, x: &[T]) -> T {
        let n = self.dimension;
        let m = self.points_per_axis;
        let period = T::lit(2.0) * self.half_period;
        let h = period / T::from_usize_lossy(m);
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for k in 0..n {
            let s = (x[k] + self.half_period) / h;
            let fl = s.floor();
            let i = fl.to_i64().expect("finite coordinate").rem_euclid(m as i64) as usize;
            base[k] = i;
            frac[k] = s - fl;
        }
        let mut total = T::zero();
        for corner in 0..(1usize << n) {
            let mut w = T::one();
            let mut flat = 0;
            for k in 0..n {
                let up = (corner >> k) & 1 == 1;
                let idx = if up { (base[k] + 1) % m } else { base[k] };
                w = w * if up { frac[k] } else { T::one() - frac[k] };
                flat = flat * m + idx;
            }
            if w != T::zero() {
                total = total + w * self.values[flat];
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupStatus {
    BlewUp,
    NoBlowupWithinHorizon,
}

impl BlowupStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowupStatus::BlewUp => "blew_up",
            BlowupStatus::NoBlowupWithinHorizon => "no_blowup_within_horizon",
        }
    }
}

/// How the blow-up time was obtained from the history tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    LeastSquares,
    /// No usable window; `t + ‖u‖∞^{1−p}/(p−1)` at the last step.
    OdeTail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit<T> {
    pub t_num: T,
    /// RMS of the fit residuals over the range of `‖u‖∞^{1−p}`.
    pub residual: T,
    pub slope: T,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupEstimate<T> {
    pub status: BlowupStatus,
    pub t_num: Option<T>,
    pub fit_residual: Option<T>,
    pub fit_kind: Option<FitKind>,
    pub t_stop: T,
    pub steps: usize,
    /// Smallest grid value seen at any accepted step.
    pub min_value: T,
    pub sup_history: Vec<(T, T)>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: Snapshot<T>,
}

/// Least-squares fit of `y = ‖u‖∞^{1−p}` against `t` over the last `window`
/// points of `history` whose sup-norm is at least `min_sup`; the blow-up time
/// is where the line reaches zero.
///
/// Rejects tails shorter than five points, tails whose time or sup-norm is
/// not strictly increasing, and lines with non-negative slope.
pub fn extrapolate_blowup<T: Real>(history: &[(T, T)], p: T, min_sup: T, window: usize) -> Result<BlowupFit<T>> {
    let tail: Vec<(T, T)> = history.iter().copied().filter(|(_, s)| *s >= min_sup).collect();
    let tail = &tail[tail.len().saturating_sub(window.max(5))..];
    if tail.len() < 5 {
        return Err(Error::FitRejected(format!("{} points above threshold, need 5", tail.len())));
    }
    if tail.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
        return Err(Error::FitRejected("tail is not strictly increasing".into()));
    }
    let exponent = T::one() - p;
    let pts: Vec<(T, T)> = tail.iter().map(|(t, s)| (*t, s.powf(exponent))).collect();
    let m = T::from_usize_lossy(pts.len());
    let t_mean = pts.iter().map(|q| q.0).sum::<T>() / m;
    let y_mean = pts.iter().map(|q| q.1).sum::<T>() / m;
    let sxx: T = pts.iter().map(|q| (q.0 - t_mean) * (q.0 - t_mean)).sum();
    let sxy: T = pts.iter().map(|q| (q.0 - t_mean) * (q.1 - y_mean)).sum();
    let slope = sxy / sxx;
    if !(slope < T::zero()) {
        return Err(Error::FitRejected("fitted line does not decrease".into()));
    }
    let intercept = y_mean - slope * t_mean;
    let t_num = -intercept / slope;
    let (y_lo, y_hi) = pts.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), q| (a.min(q.1), b.max(q.1)));
    let rms = (pts.iter().map(|q| (q.1 - intercept - slope * q.0).powi(2)).sum::<T>() / m).sqrt();
    Ok(BlowupFit { t_num, residual: rms / (y_hi - y_lo), slope, points: pts.len() })
}

struct Grid<T> {
    n: usize,
    m: usize,
    h: T,
    strides: [usize; 3],
}

impl<T: Real> Grid<T> {
    fn coord(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.m
    }

    /// One forward Euler step of length `tau` with the 2n+1 point stencil.
    fn fd_step(&self, u: &[T], out: &mut [T], tau: T) {
        let lambda = tau / (self.h * self.h);
        let two_n = T::from_usize_lossy(2 * self.n);
        let cell = |i: usize| {
            let mut nb = T::zero();
            for axis in 0..self.n {
                let c = self.coord(i, axis);
                let s = self.strides[axis];
                let fwd = if c + 1 == self.m { i + s - self.m * s } else { i + s };
                let bwd = if c == 0 { i + self.m * s - s } else { i - s };
                nb = nb + u[fwd] + u[bwd];
            }
            (T::one() - two_n * lambda) * u[i] + lambda * nb
        };
        if out.len() >= PARALLEL_CELLS {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = cell(i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, o)| *o = cell(i));
        }
    }
}

struct SpectralHeat<T: Real> {
    fwd: std::sync::Arc<dyn rustfft::Fft<T>>,
    inv: std::sync::Arc<dyn rustfft::Fft<T>>,
    /// `|k|²` for each axis index.
    k_sq: Vec<T>,
    buf: Vec<Complex<T>>,
    line: Vec<Complex<T>>,
}

impl<T: Real> SpectralHeat<T> {
    fn new(m: usize, half_period: T) -> Self {
        let mut planner = FftPlanner::new();
        let base = T::PI() / half_period;
        let k_sq = (0..m)
            .map(|j| {
                let signed = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
                let k = base * T::lit(signed);
                k * k
            })
            .collect();
        Self {
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
            k_sq,
            buf: Vec::new(),
            line: vec![Complex::default(); m],
        }
    }

    fn transform_axes(&mut self, grid: &Grid<T>, inverse: bool) {
        let m = grid.m;
        for axis in 0..grid.n {
            let s = grid.strides[axis];
            let total = self.buf.len();
            for start in 0..total {
                if (start / s) % m != 0 {
                    continue;
                }
                for j in 0..m {
                    self.line[j] = self.buf[start + j * s];
                }
                if inverse {
                    self.inv.process(&mut self.line);
                } else {
                    self.fwd.process(&mut self.line);
                }
                for j in 0..m {
                    self.buf[start + j * s] = self.line[j];
                }
            }
        }
    }

    fn step(&mut self, grid: &Grid<T>, u: &mut [T], tau: T) {
        self.buf.clear();
        self.buf.extend(u.iter().map(|v| Complex::new(*v, T::zero())));
        self.transform_axes(grid, false);
        for (i, c) in self.buf.iter_mut().enumerate() {
            let mut ksq = T::zero();
            for axis in 0..grid.n {
                ksq = ksq + self.k_sq[grid.coord(i, axis)];
            }
            *c = *c * (-ksq * tau).exp();
        }
        self.transform_axes(grid, true);
        let norm = T::from_usize_lossy(u.len());
        for (v, c) in u.iter_mut().zip(&self.buf) {
            *v = c.re / norm;
        }
    }
}

/// Exact solution of `v′ = |v|^{p−1}v` after time `dt`; finite whenever `dt`
/// is below the blow-up time of `|v|`.
fn react<T: Real>(v: T, dt: T, p: T) -> T {
    let q = p - T::one();
    let a = v.abs();
    let factor = (T::one() - q * dt * a.powf(q)).powf(-T::one() / q);
    v * factor
}

/// Integrates until `‖u‖∞ ≥ M` or `t ≥ t_max`, then extrapolates the blow-up
/// time from the sup-norm history.
pub fn run<T: Real>(spec: &ProblemSpec<T>, config: &SimulationConfig) -> Result<BlowupEstimate<T>> {
    spec.validate()?;
    config.validate()?;
    let n = spec.datum.dimension();
    let m = config.points_per_axis;
    let half = T::lit(config.half_period);
    let h = T::lit(config.spacing());
    let p = spec.p;
    let q = p - T::one();
    let mut strides = [0usize; 3];
    for (axis, s) in strides.iter_mut().enumerate().take(n) {
        *s = m.pow((n - 1 - axis) as u32);
    }
    let grid = Grid { n, m, h, strides };
    let mut u = spec.datum.periodize(half)?.sample_grid(m);
    let mut scratch = vec![T::zero(); u.len()];
    let mut spectral = match config.laplacian {
        Laplacian::Spectral => Some(SpectralHeat::new(m, half)),
        Laplacian::FiniteDifference => None,
    };
    let snapshot = |u: &[T], t: T| Snapshot {
        t,
        dimension: n,
        points_per_axis: m,
        half_period: half,
        values: u.to_vec(),
    };
    let extremes = |u: &[T]| -> (T, T) {
        u.iter().fold((T::zero(), T::infinity()), |(s, lo), v| (s.max(v.abs()), lo.min(*v)))
    };

    let threshold = T::lit(config.blowup_threshold);
    let t_max = T::lit(config.t_max);
    let diffusive_cap = h * h / T::from_usize_lossy(4 * n);
    let theta = T::lit(config.safety);
    let (mut sup, mut min_value) = extremes(&u);
    let mut t = T::zero();
    let mut history = vec![(t, sup)];
    let mut snapshots = Vec::new();
    let mut steps = 0usize;
    let mut status = BlowupStatus::NoBlowupWithinHorizon;
    while t < t_max {
        if steps >= config.max_steps {
            return Err(Error::NumericalFailure { t: t.to_f64_lossy(), reason: "step limit reached".into() });
        }
        let reaction_cap = if sup > T::zero() { sup.powf(-q) / q } else { T::infinity() };
        let mut dt = theta * diffusive_cap.min(reaction_cap);
        if t + dt > t_max {
            dt = t_max - t;
        }
        let half_dt = dt / T::lit(2.0);
        let mut diffuse = |u: &mut Vec<T>, scratch: &mut Vec<T>| match spectral.as_mut() {
            Some(sp) => sp.step(&grid, u, half_dt),
            None => {
                grid.fd_step(u, scratch, half_dt);
                std::mem::swap(u, scratch);
            }
        };
        diffuse(&mut u, &mut scratch);
        if u.len() >= PARALLEL_CELLS {
            u.par_iter_mut().for_each(|v| *v = react(*v, dt, p));
        } else {
            u.iter_mut().for_each(|v| *v = react(*v, dt, p));
        }
        diffuse(&mut u, &mut scratch);
        t = t + dt;
        steps += 1;
        let (s, lo) = extremes(&u);
        if !s.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure { t: t.to_f64_lossy(), reason: "non-finite field value".into() });
        }
        sup = s;
        min_value = min_value.min(lo);
        history.push((t, sup));
        if config.snapshot_stride > 0 && steps % config.snapshot_stride == 0 {
            snapshots.push(snapshot(&u, t));
        }
        if sup >= threshold {
            status = BlowupStatus::BlewUp;
            break;
        }
    }

    let (t_num, fit_residual, fit_kind) = if status == BlowupStatus::BlewUp {
        let min_sup = T::lit(0.9) * threshold.sqrt();
        match fit_with_retries(&history, p, min_sup, config.fit_window) {
            Some(fit) => (Some(fit.t_num), Some(fit.residual), Some(FitKind::LeastSquares)),
            None => (Some(t + sup.powf(-q) / q), None, Some(FitKind::OdeTail)),
        }
    } else {
        (None, None, None)
    };
    Ok(BlowupEstimate {
        status,
        t_num,
        fit_residual,
        fit_kind,
        t_stop: t,
        steps,
        min_value,
        sup_history: history,
        snapshots,
        final_state: snapshot(&u, t),
    })
}

/// The full window first, then the longest strictly increasing suffix.
fn fit_with_retries<T: Real>(history: &[(T, T)], p: T, min_sup: T, window: usize) -> Option<BlowupFit<T>> {
    if let Ok(fit) = extrapolate_blowup(history, p, min_sup, window) {
        return Some(fit);
    }
    let mut start = history.len().saturating_sub(1);
    while start > 0 && history[start - 1].0 < history[start].0 && history[start - 1].1 < history[start].1 {
        start -= 1;
    }
    extrapolate_blowup(&history[start..], p, min_sup, window).ok()
}

/// Result of the Jensen check at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenCheck<T> {
    /// `∫g u^p − (∫g u)^p`.
    pub residual: T,
    /// The residual divided by `‖u‖∞^p`.
    pub normalized: T,
}

/// `∫ g(z, y, t−s) u(y)^p dy − (∫ g(z, y, t−s) u(y) dy)^p` for a snapshot
/// taken at time `s`, with `u` interpolated periodically.
///
/// The difference is summed in the form `Σ w (v^p − m^p − p m^{p−1}(v − m))`
/// on `v = u/‖u‖∞`, every term of which is non-negative by convexity, so the
/// sign is not lost to cancellation.
pub fn jensen_check<T: Real>(snapshot: &Snapshot<T>, s: T, t: T, z: &[T], p: T, quad: &Quadrature<T>) -> Result<JensenCheck<T>> {
    if !(t > s) {
        return Err(Error::InvalidParameter("Jensen check needs t > s".into()));
    }
    if z.len() != snapshot.dimension {
        return Err(Error::DimensionMismatch { expected: snapshot.dimension, got: z.len() });
    }
    if !(p > T::one()) {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    let scale = snapshot.sup_norm();
    if scale == T::zero() {
        return Ok(JensenCheck { residual: T::zero(), normalized: T::zero() });
    }
    let tau = t - s;
    let v = |y: &[T]| snapshot.interpolate(y) / scale;
    let mass = quad.mass(z.len());
    let m0 = v(z);
    let mean = m0 + quad.heat_average(z, tau, |y| v(y) - m0) / mass;
    let slope = p * mean.powf(p - T::one());
    let mp = mean.powf(p);
    let normalized = quad.heat_average(z, tau, |y| {
        let x = v(y);
        x.powf(p) - mp - slope * (x - mean)
    }) / mass;
    Ok(JensenCheck { residual: normalized * scale.powf(p), normalized })
}
