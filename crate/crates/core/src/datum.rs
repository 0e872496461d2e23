//! Initial data: non-negative, bounded, continuous profiles with an exact
//! sup-norm, described by a small JSON-serializable shape language.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Real};

/// One building block of an initial datum.
///
/// All ramps are linear and `smoothing_width` wide, so every shape is
/// Lipschitz with constant `amplitude / smoothing_width` (the Gaussian has
/// its own smooth slope bound).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape<T> {
    Constant {
        amplitude: T,
    },
    /// Radial bands with breakpoints `0 = a_0 < a_1 < … < a_m`: the value is
    /// `amplitude` on `|x| ∈ [a_{2k}, a_{2k+1}]` and vanishes on
    /// `[a_{2k−1}+w, a_{2k}−w]`, with linear ramps in between. The band
    /// opened by the last radius extends to infinity.
    RadialRings {
        radii: Vec<T>,
        amplitude: T,
        smoothing_width: T,
    },
    /// `amplitude` deep inside the open cone `{η : |axis − η/|η|| < half_width}`
    /// and outside `B(0, inner_radius + w)`; zero outside the cone and inside
    /// `B(0, inner_radius)`. Both ramps are in Euclidean distance (to the cone
    /// surface and to the inner sphere).
    ConicSector {
        axis: Vec<T>,
        half_width: T,
        amplitude: T,
        inner_radius: T,
        smoothing_width: T,
    },
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    GaussianBump {
        center: Vec<T>,
        amplitude: T,
        width: T,
    },
    /// Profile along the first coordinate: `amplitude` on a window of length
    /// `duty · period` centred at `k · period`, ramping to zero over
    /// `smoothing_width` outside the window.
    PeriodicStripe {
        period: T,
        duty: T,
        amplitude: T,
        smoothing_width: T,
    },
    /// Pointwise maximum.
    Max {
        parts: Vec<Shape<T>>,
    },
}

/// A validated initial datum on ℝⁿ, `1 ≤ n ≤ 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "DatumRepr<T>",
    into = "DatumRepr<T>",
    bound(serialize = "T: Real", deserialize = "T: Real")
)]
pub struct InitialDatum<T> {
    dimension: usize,
    shape: Shape<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct DatumRepr<T> {
    dimension: usize,
    #[serde(flatten)]
    shape: Shape<T>,
}

impl<T: Real> TryFrom<DatumRepr<T>> for InitialDatum<T> {
    type Error = Error;

    fn try_from(repr: DatumRepr<T>) -> Result<Self> {
        Self::new(repr.dimension, repr.shape)
    }
}

impl<T: Real> From<InitialDatum<T>> for DatumRepr<T> {
    fn from(d: InitialDatum<T>) -> Self {
        DatumRepr { dimension: d.dimension, shape: d.shape }
    }
}

fn invalid<R>(msg: impl Into<String>) -> Result<R> {
    Err(Error::InvalidDatum(msg.into()))
}

fn check_amplitude<T: Real>(a: T) -> Result<()> {
    if !(a.is_finite() && a >= T::zero()) {
        return invalid(format!("amplitude must be finite and ≥ 0, got {a}"));
    }
    Ok(())
}

fn check_width<T: Real>(w: T, what: &str) -> Result<()> {
    if !(w.is_finite() && w > T::zero()) {
        return invalid(format!("{what} must be finite and > 0, got {w}"));
    }
    Ok(())
}

/// `sin θ_δ, cos θ_δ` for the half-opening angle of the cone with chordal
/// half-width δ, i.e. `|ξ − η/|η|| = δ ⇔ angle = 2 asin(δ/2)`.
pub fn cone_angle<T: Real>(half_width: T, dimension: usize) -> (T, T) {
    if dimension == 1 {
        // only the ray along the axis lies in the cone for δ < √2
        return (T::one(), T::zero());
    }
    let two = T::lit(2.0);
    let sin = half_width * (T::one() - half_width * half_width / (two * two)).sqrt();
    let cos = T::one() - half_width * half_width / two;
    (sin, cos)
}

/// Signed Euclidean distance from `x` into the cone (positive inside,
/// clamped to zero outside).
pub(crate) fn cone_depth<T: Real>(x: &[T], axis: &[T], half_width: T) -> T {
    let axis_norm = norm(axis);
    let along = dot(x, axis) / axis_norm;
    let (sin, cos) = cone_angle(half_width, x.len());
    let perp_sq: T = x
        .iter()
        .zip(axis)
        .map(|(xi, ai)| {
            let d = *xi - along * *ai / axis_norm;
            d * d
        })
        .sum();
    (sin * along - cos * perp_sq.sqrt()).max(T::zero())
}

fn ramp<T: Real>(distance: T, width: T) -> T {
    (distance / width).max(T::zero()).min(T::one())
}

impl<T: Real> Shape<T> {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Shape::Constant { amplitude } => check_amplitude(*amplitude),
            Shape::RadialRings { radii, amplitude, smoothing_width } => {
                check_amplitude(*amplitude)?;
                check_width(*smoothing_width, "smoothing_width")?;
                if radii.is_empty() {
                    return invalid("radial rings need at least one radius");
                }
                let mut prev = T::zero();
                for (i, a) in radii.iter().enumerate() {
                    if !(a.is_finite() && *a > prev) {
                        return invalid(format!("radii must be finite, positive and strictly increasing (index {i})"));
                    }
                    // 1-based index i+1 odd closes an amplitude band and opens a zero band
                    if i % 2 == 1 && *a - prev < T::lit(2.0) * *smoothing_width {
                        return invalid(format!(
                            "zero band [{prev}, {a}] is shorter than two smoothing widths"
                        ));
                    }
                    prev = *a;
                }
                Ok(())
            }
            Shape::ConicSector { axis, half_width, amplitude, inner_radius, smoothing_width } => {
                check_amplitude(*amplitude)?;
                check_width(*smoothing_width, "smoothing_width")?;
                if axis.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: axis.len() });
                }
                let an = norm(axis);
                if !((an - T::one()).abs() <= T::lit(1e-6)) {
                    return invalid(format!("cone axis must be a unit vector (norm {an})"));
                }
                if !(*half_width > T::zero() && *half_width < T::lit(2.0).sqrt()) {
                    return invalid(format!("cone half_width must lie in (0, √2), got {half_width}"));
                }
                if !(inner_radius.is_finite() && *inner_radius >= T::zero()) {
                    return invalid("inner_radius must be finite and ≥ 0");
                }
                Ok(())
            }
            Shape::GaussianBump { center, amplitude, width } => {
                check_amplitude(*amplitude)?;
                check_width(*width, "width")?;
                if center.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: center.len() });
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return invalid("gaussian center must be finite");
                }
                Ok(())
            }
            Shape::PeriodicStripe { period, duty, amplitude, smoothing_width } => {
                check_amplitude(*amplitude)?;
                check_width(*period, "period")?;
                check_width(*smoothing_width, "smoothing_width")?;
                if !(*duty > T::zero() && *duty < T::one()) {
                    return invalid(format!("duty must lie in (0, 1), got {duty}"));
                }
                let half = T::lit(0.5);
                if *duty * *period * half + *smoothing_width > *period * half {
                    return invalid("stripe ramps overlap: need smoothing_width ≤ (1 − duty)·period/2");
                }
                Ok(())
            }
            Shape::Max { parts } => {
                if parts.is_empty() {
                    return invalid("max of an empty list");
                }
                parts.iter().try_for_each(|p| p.validate(n))
            }
        }
    }

    fn eval_unchecked(&self, x: &[T]) -> T {
        match self {
            Shape::Constant { amplitude } => *amplitude,
            Shape::RadialRings { radii, amplitude, smoothing_width } => {
                let rho = norm(x);
                let band = radii.partition_point(|a| *a <= rho);
                if band % 2 == 0 {
                    return *amplitude;
                }
                let start = radii[band - 1];
                let from_start = T::one() - (rho - start) / *smoothing_width;
                let from_end = match radii.get(band) {
                    Some(end) => T::one() - (*end - rho) / *smoothing_width,
                    None => T::zero(),
                };
                *amplitude * from_start.max(from_end).max(T::zero()).min(T::one())
            }
            Shape::ConicSector { axis, half_width, amplitude, inner_radius, smoothing_width } => {
                let radial = ramp(norm(x) - *inner_radius, *smoothing_width);
                if radial == T::zero() {
                    return T::zero();
                }
                let angular = ramp(cone_depth(x, axis, *half_width), *smoothing_width);
                *amplitude * radial.min(angular)
            }
            Shape::GaussianBump { center, amplitude, width } => {
                let d2 = crate::scalar::distance_sq(x, center);
                *amplitude * (-d2 / (T::lit(2.0) * *width * *width)).exp()
            }
            Shape::PeriodicStripe { period, duty, amplitude, smoothing_width } => {
                let half = T::lit(0.5);
                let s = x[0] - *period * (x[0] / *period + half).floor();
                let outside = s.abs() - *duty * *period * half;
                if outside <= T::zero() {
                    *amplitude
                } else {
                    *amplitude * (T::one() - outside / *smoothing_width).max(T::zero())
                }
            }
            Shape::Max { parts } => parts
                .iter()
                .map(|p| p.eval_unchecked(x))
                .fold(T::zero(), |a, b| a.max(b)),
        }
    }

    fn sup_norm(&self) -> T {
        match self {
            Shape::Constant { amplitude }
            | Shape::RadialRings { amplitude, .. }
            | Shape::ConicSector { amplitude, .. }
            | Shape::GaussianBump { amplitude, .. }
            | Shape::PeriodicStripe { amplitude, .. } => *amplitude,
            Shape::Max { parts } => parts.iter().map(Shape::sup_norm).fold(T::zero(), T::max),
        }
    }

    fn lipschitz_bound(&self) -> T {
        match self {
            Shape::Constant { .. } => T::zero(),
            Shape::RadialRings { amplitude, smoothing_width, .. }
            | Shape::ConicSector { amplitude, smoothing_width, .. }
            | Shape::PeriodicStripe { amplitude, smoothing_width, .. } => *amplitude / *smoothing_width,
            // max slope of a·exp(−s²/2σ²) is a/(σ√e)
            Shape::GaussianBump { amplitude, width, .. } => {
                *amplitude / (*width * T::E().sqrt())
            }
            Shape::Max { parts } => parts.iter().map(Shape::lipschitz_bound).fold(T::zero(), T::max),
        }
    }
}

impl<T: Real> InitialDatum<T> {
    pub fn new(dimension: usize, shape: Shape<T>) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidDatum(format!("dimension must be 1, 2 or 3, got {dimension}")));
        }
        shape.validate(dimension)?;
        let datum = Self { dimension, shape };
        if datum.sup_norm() <= T::zero() {
            return invalid("datum is identically zero");
        }
        Ok(datum)
    }

    pub fn constant(dimension: usize, amplitude: T) -> Result<Self> {
        Self::new(dimension, Shape::Constant { amplitude })
    }

    pub fn gaussian(center: Vec<T>, amplitude: T, width: T) -> Result<Self> {
        Self::new(center.len(), Shape::GaussianBump { center, amplitude, width })
    }

    pub fn stripe(dimension: usize, period: T, duty: T, amplitude: T, smoothing_width: T) -> Result<Self> {
        Self::new(dimension, Shape::PeriodicStripe { period, duty, amplitude, smoothing_width })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    /// φ(x).
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        Ok(self.shape.eval_unchecked(x))
    }

    /// φ(x) without the dimension check; callers guarantee `x.len() == n`.
    #[inline]
    pub(crate) fn value(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dimension);
        self.shape.eval_unchecked(x)
    }

    /// Exact ‖φ‖∞.
    pub fn sup_norm(&self) -> T {
        self.shape.sup_norm()
    }

    /// A Lipschitz constant valid for the whole datum.
    pub fn lipschitz_bound(&self) -> T {
        self.shape.lipschitz_bound()
    }

    /// Restricts the datum to the cell `[−L, L)ⁿ` and tiles it periodically.
    pub fn periodize(&self, half_period: T) -> Result<PeriodicSampler<'_, T>> {
        if !(half_period.is_finite() && half_period > T::zero()) {
            return Err(Error::InvalidParameter(format!("half period must be > 0, got {half_period}")));
        }
        Ok(PeriodicSampler { datum: self, half_period })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("datum serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDatum(e.to_string()))
    }
}

/// The radial profile of the rings example, `a_k = k!` for `k = 1..=k_max`,
/// amplitude 1 and ramps of width 1/4.
pub fn build_factorial_rings<T: Real>(k_max: usize, dimension: usize) -> Result<InitialDatum<T>> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "factorial rings need k_max ≥ 2 for one full ring, got {k_max}"
        )));
    }
    let mut radii = Vec::with_capacity(k_max);
    let mut f = T::one();
    for k in 1..=k_max {
        f = f * T::from_usize_lossy(k);
        if !f.is_finite() {
            return Err(Error::FactorialOverflow { k });
        }
        radii.push(f);
    }
    InitialDatum::new(
        dimension,
        Shape::RadialRings { radii, amplitude: T::one(), smoothing_width: T::lit(0.25) },
    )
}

/// Largest `k` with `k!` finite in `T`.
pub fn max_factorial_index<T: Real>() -> usize {
    let mut f = T::one();
    let mut k = 1;
    loop {
        let next = f * T::from_usize_lossy(k + 1);
        if !next.is_finite() {
            return k;
        }
        f = next;
        k += 1;
    }
}

/// Periodic extension of a datum restricted to `[−L, L)ⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicSampler<'a, T> {
    datum: &'a InitialDatum<T>,
    half_period: T,
}

impl<T: Real> PeriodicSampler<'_, T> {
    pub fn half_period(&self) -> T {
        self.half_period
    }

    /// Maps a coordinate into `[−L, L)`.
    pub fn wrap(&self, c: T) -> T {
        let period = T::lit(2.0) * self.half_period;
        let w = c - period * ((c + self.half_period) / period).floor();
        // guard the upper edge against rounding
        if w >= self.half_period { w - period } else { w }
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        let wrapped: Vec<T> = x.iter().map(|c| self.wrap(*c)).collect();
        self.datum.eval(&wrapped)
    }

    /// Values at the nodes `−L + i·h`, `h = 2L/N`, row-major (first axis
    /// slowest).
    pub fn sample_grid(&self, points_per_axis: usize) -> Vec<T> {
        let n = self.datum.dimension();
        let h = T::lit(2.0) * self.half_period / T::from_usize_lossy(points_per_axis);
        let total = points_per_axis.pow(n as u32);
        let mut x = vec![T::zero(); n];
        (0..total)
            .map(|flat| {
                let mut rem = flat;
                for axis in (0..n).rev() {
                    let i = rem % points_per_axis;
                    rem /= points_per_axis;
                    x[axis] = -self.half_period + h * T::from_usize_lossy(i);
                }
                self.datum.value(&x)
            })
            .collect()
    }
}
