//! Densities of the superlevel sets `{φ ≥ α}` in large balls.
//!
//! `D(α; r)` is the best fraction over ball centers at radius `r`, `D(α)` the
//! limsup over `r` of the fraction in balls centred at the origin, and `D̄(α)`
//! the limsup of `D(α; r)`. The limsups are approximated by the maximum over
//! the top quartile of a finite radius grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datum::{cone_angle, InitialDatum, Shape};
use crate::error::{Error, Result};
use crate::scalar::{lex_cmp, Real};

/// Samples per independently seeded Monte Carlo chunk. Fixed, so results
/// do not depend on how chunks are spread over workers.
const MC_CHUNK: usize = 4096;
/// Random candidate centers added to the structured ones in the auto search.
const SCATTER_CENTERS: usize = 16;

/// How the fraction of a ball covered by `{φ ≥ α}` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    /// Uniform samples in the ball; sample `i` of chunk `c` comes from the
    /// ChaCha stream `(seed, c)`.
    MonteCarlo { samples: usize, seed: u64 },
    /// Cell centres of a `resolution`ⁿ lattice over the bounding cube,
    /// restricted to the ball.
    GridOracle { resolution: usize },
}

impl Estimator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Estimator::MonteCarlo { samples, .. } if samples < 10_000 => Err(Error::InvalidParameter(format!(
                "Monte Carlo needs at least 10^4 samples, got {samples}"
            ))),
            Estimator::GridOracle { resolution } if resolution < 64 => Err(Error::InvalidParameter(format!(
                "grid oracle needs resolution ≥ 64, got {resolution}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::MonteCarlo { .. } => "monte_carlo",
            Estimator::GridOracle { .. } => "grid_oracle",
        }
    }

    /// Sample count or lattice resolution.
    pub fn size(&self) -> usize {
        match *self {
            Estimator::MonteCarlo { samples, .. } => samples,
            Estimator::GridOracle { resolution } => resolution,
        }
    }

    fn scatter_seed(&self) -> u64 {
        match *self {
            Estimator::MonteCarlo { seed, .. } => seed ^ 0x9e37_79b9_7f4a_7c15,
            Estimator::GridOracle { .. } => 0,
        }
    }
}

/// Which ball centers are tried at each radius. The origin is always among
/// them, so `D̄ ≥ D` holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Centers<T> {
    Origin,
    Explicit(Vec<Vec<T>>),
    AutoSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DensityRequest<T> {
    pub alphas: Vec<T>,
    pub radii: Vec<T>,
    pub centers: Centers<T>,
    pub estimator: Estimator,
}

impl<T: Real> DensityRequest<T> {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a > T::zero())) {
            return Err(Error::InvalidParameter("alphas must be a non-empty list of positive thresholds".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::InvalidParameter("radius grid is empty".into()));
        }
        let mut prev = T::zero();
        for r in &self.radii {
            if !(r.is_finite() && *r > prev) {
                return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
            }
            prev = *r;
        }
        if let Centers::Explicit(list) = &self.centers {
            if let Some(c) = list.iter().find(|c| c.len() != dimension) {
                return Err(Error::DimensionMismatch { expected: dimension, got: c.len() });
            }
        }
        self.estimator.validate()
    }
}

/// `count` geometrically spaced radii from `r_min` to `r_max` inclusive.
pub fn geometric_radii<T: Real>(r_min: T, r_max: T, count: usize) -> Result<Vec<T>> {
    if !(r_min > T::zero() && r_max > r_min && count >= 2) {
        return Err(Error::InvalidParameter("geometric grid needs 0 < r_min < r_max and ≥ 2 points".into()));
    }
    let ratio = (r_max / r_min).ln() / T::from_usize_lossy(count - 1);
    let mut out: Vec<T> = (0..count).map(|i| r_min * (ratio * T::from_usize_lossy(i)).exp()).collect();
    out[count - 1] = r_max;
    Ok(out)
}

/// Outer radii `a_1, a_3, a_5, …` of the amplitude bands of a ring datum,
/// where the origin density of the rings example peaks.
pub fn ring_outer_radii<T: Real>(datum: &InitialDatum<T>) -> Option<Vec<T>> {
    fn collect<T: Real>(shape: &Shape<T>, out: &mut Vec<T>) {
        match shape {
            Shape::RadialRings { radii, .. } => out.extend(radii.iter().step_by(2).copied()),
            Shape::Max { parts } => parts.iter().for_each(|p| collect(p, out)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    collect(datum.shape(), &mut out);
    if out.is_empty() {
        return None;
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    out.dedup();
    Some(out)
}

/// Default threshold grid: `count` log-spaced values from `sup/100` to `sup`.
pub fn default_alphas<T: Real>(sup_norm: T, count: usize) -> Vec<T> {
    if count <= 1 {
        return vec![sup_norm];
    }
    let lo = sup_norm / T::lit(100.0);
    geometric_radii(lo, sup_norm, count).unwrap_or_else(|_| vec![sup_norm])
}

fn unit_ball_point<T: Real>(rng: &mut ChaCha8Rng, n: usize, out: &mut [T]) {
    loop {
        let mut sq = 0.0f64;
        for v in out.iter_mut().take(n) {
            let g: f64 = rng.sample(StandardNormal);
            sq += g * g;
            *v = T::lit(g);
        }
        if sq > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / n as f64);
            let scale = T::lit(radius / sq.sqrt());
            out.iter_mut().for_each(|v| *v = *v * scale);
            return;
        }
    }
}

/// Fractions of `B(center, r)` covered by `{φ ≥ α}` for each threshold.
///
/// All thresholds share the same sample points, so the fractions are exactly
/// non-increasing in `α`.
pub fn superlevel_fractions<T: Real>(
    datum: &InitialDatum<T>,
    alphas: &[T],
    center: &[T],
    r: T,
    estimator: &Estimator,
) -> Result<Vec<T>> {
    let n = datum.dimension();
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    if !(r > T::zero() && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
    }
    if alphas.iter().any(|a| !(*a > T::zero())) {
        return Err(Error::InvalidParameter("thresholds must be positive".into()));
    }
    estimator.validate()?;
    let tally = |x: &[T], counts: &mut [u64]| {
        let v = datum.value(x);
        for (c, a) in counts.iter_mut().zip(alphas) {
            if v >= *a {
                *c += 1;
            }
        }
    };
    let merge = |mut a: (Vec<u64>, u64), b: (Vec<u64>, u64)| {
        a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
        a.1 += b.1;
        a
    };
    let empty = || (vec![0u64; alphas.len()], 0u64);
    let (counts, total) = match *estimator {
        Estimator::MonteCarlo { samples, seed } => {
            let chunks = samples.div_ceil(MC_CHUNK);
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c as u64);
                    let len = MC_CHUNK.min(samples - c * MC_CHUNK);
                    let mut acc = empty();
                    let mut u = vec![T::zero(); n];
                    let mut x = vec![T::zero(); n];
                    for _ in 0..len {
                        unit_ball_point(&mut rng, n, &mut u);
                        for k in 0..n {
                            x[k] = center[k] + r * u[k];
                        }
                        tally(&x, &mut acc.0);
                    }
                    acc.1 = len as u64;
                    acc
                })
                .reduce(empty, merge)
        }
        Estimator::GridOracle { resolution } => {
            let res = resolution;
            let coord = |i: usize| T::lit(-1.0 + (2 * i + 1) as f64 / res as f64);
            (0..res)
                .into_par_iter()
                .map(|i0| {
                    let mut acc = empty();
                    let mut u = vec![T::zero(); n];
                    let mut x = vec![T::zero(); n];
                    u[0] = coord(i0);
                    let rest = res.pow(n as u32 - 1);
                    for flat in 0..rest {
                        let mut rem = flat;
                        for k in (1..n).rev() {
                            u[k] = coord(rem % res);
                            rem /= res;
                        }
                        let sq: T = u.iter().map(|v| *v * *v).sum();
                        if sq > T::one() {
                            continue;
                        }
                        for k in 0..n {
                            x[k] = center[k] + r * u[k];
                        }
                        tally(&x, &mut acc.0);
                        acc.1 += 1;
                    }
                    acc
                })
                .reduce(empty, merge)
        }
    };
    let total = T::from_u64(total).expect("count representable");
    Ok(counts.into_iter().map(|c| T::from_u64(c).expect("count representable") / total).collect())
}

/// `mes(B(center, r) ∩ {φ ≥ α}) / mes(B(center, r))`.
pub fn density_in_ball<T: Real>(
    datum: &InitialDatum<T>,
    alpha: T,
    center: &[T],
    r: T,
    estimator: &Estimator,
) -> Result<T> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(superlevel_fractions(datum, &[alpha], center, r, estimator)?[0])
}

/// Deterministic lattice count, kept separate from the estimator path so tests
/// can use it as an oracle.
pub fn oracle_density<T: Real>(
    datum: &InitialDatum<T>,
    alpha: T,
    center: &[T],
    r: T,
    resolution: usize,
) -> Result<T> {
    density_in_ball(datum, alpha, center, r, &Estimator::GridOracle { resolution })
}

fn structured_candidates<T: Real>(shape: &Shape<T>, n: usize, r: T, out: &mut Vec<Vec<T>>) {
    let along = |dir: &[T], s: T| -> Vec<T> { dir.iter().map(|d| *d * s).collect() };
    let mut e1 = vec![T::zero(); n];
    e1[0] = T::one();
    let neg_e1: Vec<T> = e1.iter().map(|v| -*v).collect();
    match shape {
        Shape::Constant { .. } | Shape::PeriodicStripe { .. } => {}
        Shape::GaussianBump { center, .. } => out.push(center.clone()),
        Shape::ConicSector { axis, half_width, inner_radius, smoothing_width, .. } => {
            // a ball of radius r fits in the cone once its centre is r/sin θ_δ deep
            let (sin, _) = cone_angle(*half_width, n);
            let base = *inner_radius + *smoothing_width;
            for kappa in [1.0, 1.25, 1.5, 2.0, 3.0] {
                out.push(along(axis, base + T::lit(kappa) * (r + *smoothing_width) / sin));
            }
        }
        Shape::RadialRings { radii, .. } => {
            let mut bands: Vec<(T, Option<T>)> = Vec::new();
            let mut start = T::zero();
            for (i, a) in radii.iter().enumerate() {
                if i % 2 == 0 {
                    bands.push((start, Some(*a)));
                } else {
                    start = *a;
                }
            }
            if radii.len() % 2 == 0 {
                bands.push((*radii.last().expect("validated"), None));
            }
            for (lo, hi) in bands {
                match hi {
                    Some(hi) => {
                        let mid = (lo + hi) / T::lit(2.0);
                        out.push(along(&e1, mid));
                        out.push(along(&neg_e1, mid));
                        if hi - lo >= T::lit(2.0) * r {
                            out.push(along(&e1, lo + r));
                        }
                    }
                    None => {
                        out.push(along(&e1, lo + r));
                        out.push(along(&e1, lo + T::lit(2.0) * r));
                    }
                }
            }
        }
        Shape::Max { parts } => parts.iter().for_each(|p| structured_candidates(p, n, r, out)),
    }
}

/// Candidate ball centres at radius `r`: the origin, datum-specific ray points
/// (cone axis at depth ∝ r, ring mid-radii) and a seeded random scatter.
pub fn center_candidates<T: Real>(datum: &InitialDatum<T>, r: T, seed: u64) -> Vec<Vec<T>> {
    let n = datum.dimension();
    let mut out = vec![vec![T::zero(); n]];
    structured_candidates(datum.shape(), n, r, &mut out);
    let extent = out
        .iter()
        .flat_map(|c| c.iter().map(|v| v.abs()))
        .fold(T::zero(), T::max);
    let span = T::lit(2.0) * r + extent;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SCATTER_CENTERS {
        out.push((0..n).map(|_| span * T::lit(rng.random_range(-1.0..1.0))).collect());
    }
    out
}

fn pick_best<T: Real>(cands: &[Vec<T>], values: &[T]) -> (usize, T) {
    let mut best = 0;
    for i in 1..cands.len() {
        let better = values[i] > values[best]
            || (values[i] == values[best] && lex_cmp(&cands[i], &cands[best]) == std::cmp::Ordering::Less);
        if better {
            best = i;
        }
    }
    (best, values[best])
}

/// A ball centre together with the density it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterChoice<T> {
    pub center: Vec<T>,
    pub density: T,
}

/// Best centre among [`center_candidates`] for threshold `alpha` and radius
/// `r`; ties go to the lexicographically smallest centre.
pub fn auto_center_search<T: Real>(
    datum: &InitialDatum<T>,
    alpha: T,
    r: T,
    estimator: &Estimator,
) -> Result<CenterChoice<T>> {
    let cands = center_candidates(datum, r, estimator.scatter_seed());
    let values = cands
        .iter()
        .map(|c| density_in_ball(datum, alpha, c, r, estimator))
        .collect::<Result<Vec<T>>>()?;
    let (i, density) = pick_best(&cands, &values);
    Ok(CenterChoice { center: cands[i].clone(), density })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Ball centred at the origin.
    Origin,
    /// Best centre among the requested candidates.
    CenterSup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow<T> {
    pub kind: RowKind,
    pub alpha: T,
    pub r: T,
    pub center: Vec<T>,
    pub density: T,
}

/// Limsup proxies for one threshold, with their witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary<T> {
    pub alpha: T,
    pub d_origin: T,
    pub d_origin_radius: T,
    pub d_bar: T,
    pub d_bar_radius: T,
    pub d_bar_center: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport<T> {
    pub dimension: usize,
    pub estimator: Estimator,
    pub radii: Vec<T>,
    pub rows: Vec<DensityRow<T>>,
    pub summaries: Vec<AlphaSummary<T>>,
}

impl<T: Real> DensityReport<T> {
    pub fn summary(&self, alpha: T) -> Option<&AlphaSummary<T>> {
        self.summaries.iter().find(|s| s.alpha == alpha)
    }

    /// Estimated `D(α)`.
    pub fn d_origin(&self, alpha: T) -> Option<T> {
        self.summary(alpha).map(|s| s.d_origin)
    }

    /// Estimated `D̄(α)`.
    pub fn d_bar(&self, alpha: T) -> Option<T> {
        self.summary(alpha).map(|s| s.d_bar)
    }

    pub fn rows_of(&self, kind: RowKind, alpha: T) -> impl Iterator<Item = &DensityRow<T>> {
        self.rows.iter().filter(move |r| r.kind == kind && r.alpha == alpha)
    }
}

/// Index range of the top quartile of an ascending radius grid.
pub fn top_quartile(len: usize) -> std::ops::Range<usize> {
    len - len.div_ceil(4)..len
}

/// Origin and centre-supremum densities for every `(α, r)` of the request,
/// plus the limsup proxies over the top quartile of radii.
pub fn density_profile<T: Real>(datum: &InitialDatum<T>, request: &DensityRequest<T>) -> Result<DensityReport<T>> {
    let n = datum.dimension();
    request.validate(n)?;
    let alphas = &request.alphas;
    let origin = vec![T::zero(); n];
    let mut rows = Vec::with_capacity(2 * alphas.len() * request.radii.len());
    // per radius: origin fractions and the best (centre, fraction) per alpha
    let mut per_radius: Vec<(Vec<T>, Vec<(Vec<T>, T)>)> = Vec::with_capacity(request.radii.len());
    for &r in &request.radii {
        let cands = match &request.centers {
            Centers::Origin => vec![origin.clone()],
            Centers::Explicit(list) => std::iter::once(origin.clone()).chain(list.iter().cloned()).collect(),
            Centers::AutoSearch => center_candidates(datum, r, request.estimator.scatter_seed()),
        };
        let fractions = cands
            .iter()
            .map(|c| superlevel_fractions(datum, alphas, c, r, &request.estimator))
            .collect::<Result<Vec<_>>>()?;
        let origin_fr = fractions[0].clone();
        let best: Vec<(Vec<T>, T)> = (0..alphas.len())
            .map(|j| {
                let vals: Vec<T> = fractions.iter().map(|f| f[j]).collect();
                let (i, v) = pick_best(&cands, &vals);
                (cands[i].clone(), v)
            })
            .collect();
        per_radius.push((origin_fr, best));
    }
    for (j, &alpha) in alphas.iter().enumerate() {
        for (k, &r) in request.radii.iter().enumerate() {
            rows.push(DensityRow {
                kind: RowKind::Origin,
                alpha,
                r,
                center: origin.clone(),
                density: per_radius[k].0[j],
            });
            let (c, v) = &per_radius[k].1[j];
            rows.push(DensityRow { kind: RowKind::CenterSup, alpha, r, center: c.clone(), density: *v });
        }
    }
    let quartile = top_quartile(request.radii.len());
    let summaries = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let mut s = AlphaSummary {
                alpha,
                d_origin: T::neg_infinity(),
                d_origin_radius: T::zero(),
                d_bar: T::neg_infinity(),
                d_bar_radius: T::zero(),
                d_bar_center: origin.clone(),
            };
            for k in quartile.clone() {
                let r = request.radii[k];
                let o = per_radius[k].0[j];
                if o > s.d_origin {
                    s.d_origin = o;
                    s.d_origin_radius = r;
                }
                let (c, v) = &per_radius[k].1[j];
                if *v > s.d_bar {
                    s.d_bar = *v;
                    s.d_bar_radius = r;
                    s.d_bar_center = c.clone();
                }
            }
            s
        })
        .collect();
    Ok(DensityReport { dimension: n, estimator: request.estimator, radii: request.radii.clone(), rows, summaries })
}
