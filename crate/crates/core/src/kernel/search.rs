//! Supremum of `z ↦ (e^{tΔ}φ)(z)` over a datum-derived box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{semigroup_eval, Quadrature};
use crate::datum::{cone_angle, InitialDatum, Shape};
use crate::error::{Error, Result};
use crate::scalar::{lex_cmp, Real};

/// Best value found, where it was found, and the box that was searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult<T> {
    pub value: T,
    pub argmax: Vec<T>,
    pub region: Vec<[T; 2]>,
}

fn shape_region<T: Real>(shape: &Shape<T>, n: usize, t: T) -> Option<Vec<[T; 2]>> {
    let reach = T::lit(12.0) * t.sqrt();
    match shape {
        Shape::Constant { .. } => None,
        Shape::GaussianBump { center, width, .. } => {
            Some(center.iter().map(|c| [*c - *width, *c + *width]).collect())
        }
        Shape::PeriodicStripe { period, .. } => {
            let half = *period / T::lit(2.0);
            let mut r = vec![[T::zero(), T::zero()]; n];
            r[0] = [-half, half];
            Some(r)
        }
        Shape::RadialRings { radii, smoothing_width, .. } => {
            let outer = *radii.last().expect("validated") + *smoothing_width + reach;
            Some(vec![[-outer, outer]; n])
        }
        Shape::ConicSector { axis, half_width, inner_radius, smoothing_width, .. } => {
            // far enough along the axis for the kernel footprint to sit deep in the cone
            let (sin, _) = cone_angle(*half_width, n);
            let far = *inner_radius + *smoothing_width + (reach + *smoothing_width) / sin;
            let mid = T::lit(1.5) * far;
            Some(axis.iter().map(|a| [mid * *a - far, mid * *a + far]).collect())
        }
        Shape::Max { parts } => parts
            .iter()
            .filter_map(|p| shape_region(p, n, t))
            .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| [x[0].min(y[0]), x[1].max(y[1])]).collect()),
    }
}

/// Box where the supremum of `e^{tΔ}φ` is sought: one `[lo, hi]` per axis.
/// Degenerate axes (`lo == hi`) are not searched.
pub fn search_region<T: Real>(datum: &InitialDatum<T>, t: T, quad: &Quadrature<T>) -> Vec<[T; 2]> {
    let n = datum.dimension();
    if let Some(r) = &quad.search().region {
        return r.iter().map(|[a, b]| [T::lit(*a), T::lit(*b)]).collect();
    }
    shape_region(datum.shape(), n, t).unwrap_or_else(|| vec![[T::zero(), T::zero()]; n])
}

fn better<T: Real>(cand: (T, &[T]), best: (T, &[T])) -> bool {
    cand.0 > best.0 || (cand.0 == best.0 && lex_cmp(cand.1, best.1) == std::cmp::Ordering::Less)
}

/// `sup_z (e^{tΔ}φ)(z)` estimated on a coarse grid over [`search_region`]
/// followed by per-axis golden-section refinement.
///
/// Grid nodes are evaluated in parallel and reduced in index order (max,
/// ties broken towards the lexicographically smaller center), so the result
/// does not depend on the worker count. Refinement only accepts improvements,
/// so the returned value never exceeds the true supremum by more than the
/// quadrature error.
pub fn semigroup_sup<T: Real>(datum: &InitialDatum<T>, t: T, quad: &Quadrature<T>) -> Result<SupResult<T>> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("semigroup needs t > 0, got {t}")));
    }
    let region = search_region(datum, t, quad);
    let n = datum.dimension();
    if region.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: region.len() });
    }
    if region.iter().any(|[lo, hi]| !(lo <= hi)) {
        return Err(Error::EmptySearch);
    }
    let res = quad.search().resolution;
    if res == 0 {
        return Err(Error::EmptySearch);
    }
    let axis_points: Vec<usize> = region.iter().map(|[lo, hi]| if lo == hi { 1 } else { res }).collect();
    let steps: Vec<T> = region
        .iter()
        .zip(&axis_points)
        .map(|([lo, hi], m)| {
            if *m > 1 { (*hi - *lo) / T::from_usize_lossy(*m - 1) } else { T::zero() }
        })
        .collect();
    let node = |flat: usize| -> Vec<T> {
        let mut rem = flat;
        let mut z = vec![T::zero(); n];
        for axis in (0..n).rev() {
            let i = rem % axis_points[axis];
            rem /= axis_points[axis];
            z[axis] = if axis_points[axis] == 1 {
                (region[axis][0] + region[axis][1]) / T::lit(2.0)
            } else {
                region[axis][0] + steps[axis] * T::from_usize_lossy(i)
            };
        }
        z
    };
    let total: usize = axis_points.iter().product();
    let values: Vec<(T, Vec<T>)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let z = node(flat);
            (quad.heat_average(&z, t, |y| datum.value(y)), z)
        })
        .collect();
    let (mut best_val, mut best_z) = values[0].clone();
    for (v, z) in values.iter().skip(1) {
        if better((*v, z), (best_val, &best_z)) {
            best_val = *v;
            best_z = z.clone();
        }
    }

    let inv_phi = T::lit(0.618_033_988_749_895);
    let mut radius = steps.clone();
    for _ in 0..quad.search().refinement_rounds {
        for axis in 0..n {
            if radius[axis] == T::zero() {
                continue;
            }
            let at = |c: T, base: &[T]| -> T {
                let mut z = base.to_vec();
                z[axis] = c;
                quad.heat_average(&z, t, |y| datum.value(y))
            };
            let (mut a, mut b) = (best_z[axis] - radius[axis], best_z[axis] + radius[axis]);
            let mut c = b - inv_phi * (b - a);
            let mut d = a + inv_phi * (b - a);
            let (mut fc, mut fd) = (at(c, &best_z), at(d, &best_z));
            for _ in 0..24 {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - inv_phi * (b - a);
                    fc = at(c, &best_z);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + inv_phi * (b - a);
                    fd = at(d, &best_z);
                }
            }
            let (cand, val) = if fc >= fd { (c, fc) } else { (d, fd) };
            let mut z = best_z.clone();
            z[axis] = cand;
            if better((val, &z), (best_val, &best_z)) {
                best_val = val;
                best_z = z;
            }
            radius[axis] = radius[axis] / T::lit(2.0);
        }
    }
    debug_assert!(semigroup_eval(datum, &best_z, t, quad).is_ok());
    Ok(SupResult { value: best_val, argmax: best_z, region })
}
