//! Life-span bounds and their consistency report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datum::{cone_angle, InitialDatum, Shape};
use crate::density::{geometric_radii, top_quartile, DensityReport};
use crate::error::{Error, Result};
use crate::kernel::{semigroup_sup, Quadrature};
use crate::scalar::{norm, Real};

/// Relative slack for comparisons between bounds that may coincide exactly.
const ORDER_SLACK: f64 = 1e-9;

/// An initial datum together with the exponent `p > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ProblemSpec<T: Real> {
    pub datum: InitialDatum<T>,
    pub p: T,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(datum: InitialDatum<T>, p: T) -> Result<Self> {
        let spec = Self { datum, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)
    }
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if p.is_finite() && p > T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")))
    }
}

/// Why a bound carries no number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unavailable {
    /// The density entering the formula is zero: the datum is rarefied there.
    ZeroDensity,
    NoCrossingWithinHorizon,
    /// The liminf along some probed direction is zero.
    ZeroLiminf,
}

impl Unavailable {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unavailable::ZeroDensity => "zero_density",
            Unavailable::NoCrossingWithinHorizon => "no_crossing_within_horizon",
            Unavailable::ZeroLiminf => "zero_liminf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound<T> {
    Finite(T),
    Unavailable(Unavailable),
}

impl<T: Real> Bound<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Unavailable(_) => None,
        }
    }

    pub fn is_available(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }
}

/// `(1/(p−1))·x^{1−p}`, the blow-up time of `u′ = u^p` started at `x`.
pub fn ode_lifespan<T: Real>(x: T, p: T) -> T {
    x.powf(T::one() - p) / (p - T::one())
}

/// `(1/(p−1))·(α·D̄)^{1−p}`; unavailable when `D̄ = 0`.
pub fn upper_bound_thm2<T: Real>(alpha: T, d_bar: T, p: T) -> Result<Bound<T>> {
    check_p(p)?;
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(d_bar >= T::zero() && d_bar <= T::one()) {
        return Err(Error::InvalidParameter(format!("density must lie in [0, 1], got {d_bar}")));
    }
    if d_bar == T::zero() {
        return Ok(Bound::Unavailable(Unavailable::ZeroDensity));
    }
    Ok(Bound::Finite(ode_lifespan(alpha * d_bar, p)))
}

/// `(1/(p−1))·‖φ‖∞^{1−p}`.
pub fn lower_bound<T: Real>(spec: &ProblemSpec<T>) -> T {
    ode_lifespan(spec.datum.sup_norm(), spec.p)
}

/// A density-based bound with the threshold and density that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBound<T> {
    pub bound: Bound<T>,
    pub alpha: Option<T>,
    pub density: Option<T>,
}

fn minimize_over_alphas<T: Real>(
    report: &DensityReport<T>,
    p: T,
    density: impl Fn(&crate::density::AlphaSummary<T>) -> T,
) -> Result<AlphaBound<T>> {
    check_p(p)?;
    let mut best = AlphaBound { bound: Bound::Unavailable(Unavailable::ZeroDensity), alpha: None, density: None };
    for s in &report.summaries {
        let d = density(s);
        if let Bound::Finite(v) = upper_bound_thm2(s.alpha, d, p)? {
            if best.bound.value().is_none_or(|b| v < b) {
                best = AlphaBound { bound: Bound::Finite(v), alpha: Some(s.alpha), density: Some(d) };
            }
        }
    }
    Ok(best)
}

/// Minimum over the report's threshold grid of `(1/(p−1))(α·D(α))^{1−p}`,
/// using the origin-centred densities.
pub fn upper_bound_thm1<T: Real>(report: &DensityReport<T>, p: T) -> Result<AlphaBound<T>> {
    minimize_over_alphas(report, p, |s| s.d_origin)
}

/// Minimum over the report's threshold grid of the bound built from `D̄(α)`.
pub fn upper_bound_thm2_best<T: Real>(report: &DensityReport<T>, p: T) -> Result<AlphaBound<T>> {
    minimize_over_alphas(report, p, |s| s.d_bar)
}

/// Horizon and tolerances for the crossing search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingSearch {
    pub horizon: f64,
    /// Ratio between consecutive bracketing times.
    pub growth: f64,
    pub rel_tol: f64,
}

impl Default for CrossingSearch {
    fn default() -> Self {
        Self { horizon: 100.0, growth: 1.5, rel_tol: 1e-6 }
    }
}

/// First zero of `f(t) = (1/(p−1))·S(t)^{1−p} − t`, where `S(t)` is the
/// supremum of the heat semigroup applied to the datum.
///
/// The scan starts at the lower bound, where `f ≥ 0` because `S ≤ ‖φ‖∞`. A
/// value of `f` there within rounding of zero means the crossing is at the
/// lower bound itself. Otherwise times grow geometrically until `f ≤ 0` and
/// the bracket is bisected. A crossing that enters and leaves between two
/// scan points is not seen.
pub fn weissler_bound<T: Real>(spec: &ProblemSpec<T>, quad: &Quadrature<T>, search: &CrossingSearch) -> Result<Bound<T>> {
    spec.validate()?;
    if !(search.growth > 1.0 && search.horizon > 0.0 && search.rel_tol > 0.0) {
        return Err(Error::InvalidParameter("crossing search needs growth > 1, horizon > 0, rel_tol > 0".into()));
    }
    let f = |t: T| -> Result<T> {
        let s = semigroup_sup(&spec.datum, t, quad)?.value;
        if !(s > T::zero()) {
            return Err(Error::VanishingSemigroup { t: t.to_f64_lossy() });
        }
        Ok(ode_lifespan(s, spec.p) - t)
    };
    let start = lower_bound(spec);
    let horizon = T::lit(search.horizon);
    if start > horizon {
        return Ok(Bound::Unavailable(Unavailable::NoCrossingWithinHorizon));
    }
    if f(start)? <= start * T::lit(1e-12) {
        return Ok(Bound::Finite(start));
    }
    let growth = T::lit(search.growth);
    let mut lo = start;
    let mut hi = start;
    loop {
        let next = (hi * growth).min(horizon);
        if next <= hi {
            return Ok(Bound::Unavailable(Unavailable::NoCrossingWithinHorizon));
        }
        if f(next)? <= T::zero() {
            hi = next;
            break;
        }
        lo = next;
        hi = next;
    }
    let tol = T::lit(search.rel_tol);
    while hi - lo > tol * hi {
        let mid = (lo + hi) / T::lit(2.0);
        if f(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bound::Finite(hi))
}

/// Cone of directions `{x′ ∈ S^{n−1} : |x′ − ξ′| < δ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Cone<T: Real> {
    pub axis: Vec<T>,
    pub half_width: T,
}

/// Where φ is probed for its liminf along rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RayProbe<T: Real> {
    /// Ascending radii; `None` derives a grid from the datum's extent.
    pub radii: Option<Vec<T>>,
    pub directions: usize,
    pub seed: u64,
}

impl<T: Real> Default for RayProbe<T> {
    fn default() -> Self {
        Self { radii: None, directions: 64, seed: 0 }
    }
}

fn shape_extent<T: Real>(shape: &Shape<T>) -> T {
    match shape {
        Shape::Constant { .. } => T::one(),
        Shape::RadialRings { radii, smoothing_width, .. } => *radii.last().expect("validated") + *smoothing_width,
        Shape::ConicSector { inner_radius, smoothing_width, .. } => *inner_radius + *smoothing_width,
        Shape::GaussianBump { center, width, .. } => norm(center) + *width,
        Shape::PeriodicStripe { period, .. } => *period,
        Shape::Max { parts } => parts.iter().map(shape_extent).fold(T::zero(), T::max),
    }
}

/// 16 radii from 10 to 1000 times the datum's extent.
pub fn default_probe_radii<T: Real>(datum: &InitialDatum<T>) -> Vec<T> {
    let base = shape_extent(datum.shape()).max(T::one());
    geometric_radii(T::lit(10.0) * base, T::lit(1000.0) * base, 16).expect("valid grid")
}

/// Unit directions inside the cone: a cell-centred angular grid in 2-D,
/// seeded rejection sampling from the sphere in 3-D.
pub fn cone_directions<T: Real>(cone: &Cone<T>, n: usize, count: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if cone.axis.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cone.axis.len() });
    }
    if count == 0 {
        return Err(Error::EmptyDirections);
    }
    let len = norm(&cone.axis);
    if !(len > T::zero()) || !(cone.half_width > T::zero() && cone.half_width <= T::lit(2.0)) {
        return Err(Error::InvalidParameter("cone needs a nonzero axis and 0 < δ ≤ 2".into()));
    }
    let axis: Vec<T> = cone.axis.iter().map(|a| *a / len).collect();
    match n {
        1 => Ok(vec![axis]),
        2 => {
            let (sin, cos) = cone_angle(cone.half_width, 2);
            let theta = sin.atan2(cos);
            let base = axis[1].atan2(axis[0]);
            Ok((0..count)
                .map(|j| {
                    let u = T::lit(-1.0 + (2 * j + 1) as f64 / count as f64);
                    let a = base + theta * u;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let delta_sq = cone.half_width * cone.half_width;
            let mut out = Vec::with_capacity(count);
            for _ in 0..count.saturating_mul(10_000) {
                if out.len() == count {
                    break;
                }
                let g: Vec<T> = (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
                let gl = norm(&g);
                if !(gl > T::zero()) {
                    continue;
                }
                let x: Vec<T> = g.iter().map(|v| *v / gl).collect();
                let d: T = x.iter().zip(&axis).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
                if d < delta_sq {
                    out.push(x);
                }
            }
            if out.is_empty() {
                return Err(Error::EmptyDirections);
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct YamauchiBound<T: Real> {
    pub bound: Bound<T>,
    /// Estimated essinf over the cone of the liminf along rays.
    pub essinf: T,
    /// `None` for the two-sided one-dimensional form.
    pub cone: Option<Cone<T>>,
}

/// `(1/(p−1))·A^{1−p}` with `A` the smallest, over probed directions, of the
/// minimum of `φ(r x′)` over the top quartile of radii. In one dimension `A`
/// is the larger of the two one-sided values and `cone` is ignored.
pub fn yamauchi_bound<T: Real>(
    spec: &ProblemSpec<T>,
    cone: Option<&Cone<T>>,
    probe: &RayProbe<T>,
) -> Result<YamauchiBound<T>> {
    spec.validate()?;
    let n = spec.datum.dimension();
    let radii = probe.radii.clone().unwrap_or_else(|| default_probe_radii(&spec.datum));
    if radii.is_empty() {
        return Err(Error::InvalidParameter("ray probe needs at least one radius".into()));
    }
    let tail = &radii[top_quartile(radii.len())];
    let liminf = |dir: &[T]| -> T {
        tail.iter()
            .map(|r| {
                let x: Vec<T> = dir.iter().map(|d| *d * *r).collect();
                spec.datum.value(&x)
            })
            .fold(T::infinity(), T::min)
    };
    let (essinf, used) = if n == 1 {
        (liminf(&[T::one()]).max(liminf(&[-T::one()])), None)
    } else {
        let cone = cone.ok_or_else(|| Error::InvalidParameter("cone required for n ≥ 2".into()))?;
        let dirs = cone_directions(cone, n, probe.directions, probe.seed)?;
        (dirs.iter().map(|d| liminf(d)).fold(T::infinity(), T::min), Some(cone.clone()))
    };
    let bound = if essinf > T::zero() {
        Bound::Finite(ode_lifespan(essinf, spec.p))
    } else {
        Bound::Unavailable(Unavailable::ZeroLiminf)
    };
    Ok(YamauchiBound { bound, essinf, cone: used })
}

/// Cone used when none is configured: half the datum's own cone for conic
/// data, otherwise the unit half-width cone around `e₁`.
pub fn default_cone<T: Real>(datum: &InitialDatum<T>) -> Cone<T> {
    fn find<T: Real>(shape: &Shape<T>) -> Option<Cone<T>> {
        match shape {
            Shape::ConicSector { axis, half_width, .. } => {
                Some(Cone { axis: axis.clone(), half_width: *half_width / T::lit(2.0) })
            }
            Shape::Max { parts } => parts.iter().find_map(find),
            _ => None,
        }
    }
    find(datum.shape()).unwrap_or_else(|| {
        let mut axis = vec![T::zero(); datum.dimension()];
        axis[0] = T::one();
        Cone { axis, half_width: T::one() }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagStatus {
    Pass,
    Fail,
    /// One side of the comparison is unavailable.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub status: FlagStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BoundsOptions<T: Real> {
    pub crossing: CrossingSearch,
    pub probe: RayProbe<T>,
    /// Cone for the ray bound; `None` picks [`default_cone`].
    pub cone: Option<Cone<T>>,
    /// Relative offset `ε` in the cone check `thm2(A(1−ε), 1) ≤ 1.05·yamauchi`.
    pub cone_epsilon: f64,
}

impl<T: Real> Default for BoundsOptions<T> {
    fn default() -> Self {
        Self { crossing: CrossingSearch::default(), probe: RayProbe::default(), cone: None, cone_epsilon: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct LifespanBounds<T: Real> {
    pub p: T,
    pub lower: T,
    pub thm1: AlphaBound<T>,
    pub thm2: AlphaBound<T>,
    pub yamauchi: YamauchiBound<T>,
    pub weissler: Bound<T>,
    pub flags: Vec<Flag>,
}

impl<T: Real> LifespanBounds<T> {
    pub fn all_flags_pass(&self) -> bool {
        self.flags.iter().all(|f| f.status != FlagStatus::Fail)
    }

    pub fn flag(&self, name: &str) -> Option<FlagStatus> {
        self.flags.iter().find(|f| f.name == name).map(|f| f.status)
    }
}

fn le_flag<T: Real>(name: &str, a: Option<T>, b: Option<T>) -> Flag {
    let status = match (a, b) {
        (Some(a), Some(b)) if a <= b * (T::one() + T::lit(ORDER_SLACK)) => FlagStatus::Pass,
        (Some(_), Some(_)) => FlagStatus::Fail,
        _ => FlagStatus::NotApplicable,
    };
    Flag { name: name.to_string(), status }
}

/// Every bound for `spec` plus ordering checks between them.
pub fn bounds_report<T: Real>(
    spec: &ProblemSpec<T>,
    density: &DensityReport<T>,
    quad: &Quadrature<T>,
    options: &BoundsOptions<T>,
) -> Result<LifespanBounds<T>> {
    spec.validate()?;
    if density.dimension != spec.datum.dimension() {
        return Err(Error::DimensionMismatch { expected: spec.datum.dimension(), got: density.dimension });
    }
    let p = spec.p;
    let lower = lower_bound(spec);
    let thm1 = upper_bound_thm1(density, p)?;
    let thm2 = upper_bound_thm2_best(density, p)?;
    let cone = options.cone.clone().unwrap_or_else(|| default_cone(&spec.datum));
    let yamauchi = yamauchi_bound(spec, Some(&cone), &options.probe)?;
    let weissler = weissler_bound(spec, quad, &options.crossing)?;

    let mut flags = vec![
        le_flag("lower_le_thm1", Some(lower), thm1.bound.value()),
        le_flag("lower_le_thm2", Some(lower), thm2.bound.value()),
        le_flag("lower_le_yamauchi", Some(lower), yamauchi.bound.value()),
        le_flag("lower_le_weissler", Some(lower), weissler.value()),
    ];
    // pointwise in α, so the ordering must hold for every grid value
    let mut ordered = FlagStatus::NotApplicable;
    for s in &density.summaries {
        if let (Bound::Finite(t2), Bound::Finite(t1)) =
            (upper_bound_thm2(s.alpha, s.d_bar, p)?, upper_bound_thm2(s.alpha, s.d_origin, p)?)
        {
            if t2 > t1 {
                ordered = FlagStatus::Fail;
                break;
            }
            ordered = FlagStatus::Pass;
        }
    }
    flags.push(Flag { name: "thm2_le_thm1".into(), status: ordered });
    let cone_check = match yamauchi.bound {
        Bound::Finite(y) => {
            let alpha = yamauchi.essinf * (T::one() - T::lit(options.cone_epsilon));
            le_flag("thm2_cone_le_yamauchi", upper_bound_thm2(alpha, T::one(), p)?.value(), Some(y * T::lit(1.05)))
        }
        _ => Flag { name: "thm2_cone_le_yamauchi".into(), status: FlagStatus::NotApplicable },
    };
    flags.push(cone_check);
    Ok(LifespanBounds { p, lower, thm1, thm2, yamauchi, weissler, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::build_factorial_rings;
    use crate::density::{density_profile, Centers, DensityRequest, Estimator};
    use crate::kernel::QuadratureConfig;

    fn spec(datum: InitialDatum<f64>, p: f64) -> ProblemSpec<f64> {
        ProblemSpec::new(datum, p).unwrap()
    }

    fn cone_datum() -> InitialDatum<f64> {
        InitialDatum::new(
            2,
            Shape::ConicSector {
                axis: vec![1.0, 0.0],
                half_width: 0.5,
                amplitude: 1.0,
                inner_radius: 0.0,
                smoothing_width: 0.25,
            },
        )
        .unwrap()
    }

    #[test]
    fn thm2_formula_examples() {
        assert_eq!(upper_bound_thm2(1.0, 1.0, 2.0).unwrap(), Bound::Finite(1.0));
        assert_eq!(upper_bound_thm2(2.0, 0.5, 3.0).unwrap(), Bound::Finite(0.5));
        assert_eq!(upper_bound_thm2(1.0, 0.5, 2.0).unwrap(), Bound::Finite(2.0));
        assert_eq!(upper_bound_thm2(1.0, 0.0, 2.0).unwrap(), Bound::Unavailable(Unavailable::ZeroDensity));
        assert!(upper_bound_thm2(1.0, 1.5, 2.0).is_err());
        assert!(upper_bound_thm2(-1.0, 0.5, 2.0).is_err());
        assert!(upper_bound_thm2(1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound(&spec(InitialDatum::constant(1, 1.0).unwrap(), 2.0)), 1.0);
        assert_eq!(lower_bound(&spec(InitialDatum::constant(1, 2.0).unwrap(), 2.0)), 0.5);
        assert_eq!(lower_bound(&spec(InitialDatum::constant(1, 1.0).unwrap(), 3.0)), 0.5);
        assert!(ProblemSpec::new(InitialDatum::constant(1, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn scale_equivariance_of_formulas() {
        let (lambda, p) = (3.0f64, 2.5);
        let base = spec(InitialDatum::stripe(1, 4.0, 0.5, 1.0, 0.5).unwrap(), p);
        let scaled = spec(InitialDatum::stripe(1, 4.0, 0.5, lambda, 0.5).unwrap(), p);
        let factor = lambda.powf(1.0 - p);
        assert!((lower_bound(&scaled) - factor * lower_bound(&base)).abs() < 1e-14);
        let a = upper_bound_thm2(0.7, 0.4, p).unwrap().value().unwrap();
        let b = upper_bound_thm2(0.7 * lambda, 0.4, p).unwrap().value().unwrap();
        assert!((b - factor * a).abs() < 1e-14 * a);
    }

    #[test]
    fn weissler_constant_and_stripe() {
        let quad = Quadrature::<f64>::new(32).unwrap();
        let c = spec(InitialDatum::constant(1, 1.0).unwrap(), 2.0);
        let w = weissler_bound(&c, &quad, &CrossingSearch::default()).unwrap();
        assert!((w.value().unwrap() - 1.0).abs() < 1e-9);
        let c2 = spec(InitialDatum::constant(2, 2.0).unwrap(), 3.0);
        let w = weissler_bound(&c2, &quad, &CrossingSearch::default()).unwrap();
        assert!((w.value().unwrap() - 0.125).abs() < 1e-9);

        let stripe = spec(InitialDatum::stripe(1, 8.0, 0.5, 1.0, 0.25).unwrap(), 2.0);
        let quad = QuadratureConfig::trapezoid(256).build::<f64>().unwrap();
        let w = weissler_bound(&stripe, &quad, &CrossingSearch::default()).unwrap().value().unwrap();
        assert!((1.0..=2.0).contains(&w), "{w}");
        // at the crossing t = 1/S(t)
        let s = semigroup_sup(&stripe.datum, w, &quad).unwrap().value;
        assert!((1.0 / s - w).abs() < 1e-5 * w);
    }

    #[test]
    fn weissler_small_gaussian_has_no_crossing() {
        let quad = Quadrature::<f64>::new(48).unwrap();
        let g = spec(InitialDatum::gaussian(vec![0.0], 0.05, 1.0).unwrap(), 3.0);
        let w = weissler_bound(&g, &quad, &CrossingSearch::default()).unwrap();
        assert_eq!(w, Bound::Unavailable(Unavailable::NoCrossingWithinHorizon));
    }

    #[test]
    fn yamauchi_examples() {
        let probe = RayProbe::default();
        let c = spec(cone_datum(), 2.0);
        let inner = Cone { axis: vec![1.0, 0.0], half_width: 0.25 };
        let y = yamauchi_bound(&c, Some(&inner), &probe).unwrap();
        assert_eq!(y.bound, Bound::Finite(1.0));

        let k = spec(InitialDatum::constant(3, 4.0).unwrap(), 2.0);
        let any = Cone { axis: vec![0.0, 1.0, 1.0], half_width: 0.3 };
        let y = yamauchi_bound(&k, Some(&any), &probe).unwrap();
        assert_eq!(y.bound, Bound::Finite(0.25));

        let rings = spec(build_factorial_rings::<f64>(5, 1).unwrap(), 2.0);
        let y = yamauchi_bound(&rings, None, &probe).unwrap();
        assert_eq!(y.bound, Bound::Unavailable(Unavailable::ZeroLiminf));

        // a wider cone than the datum's sees rays outside it
        let wide = Cone { axis: vec![1.0, 0.0], half_width: 1.0 };
        assert_eq!(yamauchi_bound(&c, Some(&wide), &probe).unwrap().bound, Bound::Unavailable(Unavailable::ZeroLiminf));
    }

    #[test]
    fn one_sided_liminf_in_one_dimension() {
        // zero on the negative half-line, one far out on the positive one
        let d = InitialDatum::new(
            1,
            Shape::ConicSector {
                axis: vec![1.0],
                half_width: 1.0,
                amplitude: 1.0,
                inner_radius: 2.0,
                smoothing_width: 0.5,
            },
        )
        .unwrap();
        let y = yamauchi_bound(&spec(d, 2.0), None, &RayProbe::default()).unwrap();
        assert_eq!(y.essinf, 1.0);
    }

    #[test]
    fn direction_sampling() {
        let cone: Cone<f64> = Cone { axis: vec![0.0, 0.0, 2.0], half_width: 0.2 };
        let dirs = cone_directions(&cone, 3, 50, 5).unwrap();
        assert_eq!(dirs.len(), 50);
        for d in &dirs {
            assert!((norm(d) - 1.0).abs() < 1e-12);
            let dist = (d[0] * d[0] + d[1] * d[1] + (d[2] - 1.0).powi(2)).sqrt();
            assert!(dist < 0.2);
        }
        assert_eq!(cone_directions(&cone, 3, 50, 5).unwrap(), dirs);
        assert_eq!(cone_directions(&cone, 3, 0, 5).unwrap_err(), Error::EmptyDirections);
        let flat: Cone<f64> = Cone { axis: vec![0.0, 1.0], half_width: 0.5 };
        let dirs = cone_directions(&flat, 2, 8, 0).unwrap();
        for d in &dirs {
            let dist = (d[0] * d[0] + (d[1] - 1.0).powi(2)).sqrt();
            assert!(dist < 0.5);
        }
    }

    fn grid_request(alphas: Vec<f64>, radii: Vec<f64>) -> DensityRequest<f64> {
        DensityRequest { alphas, radii, centers: Centers::AutoSearch, estimator: Estimator::GridOracle { resolution: 256 } }
    }

    #[test]
    fn constant_report_all_bounds_coincide() {
        let s = spec(InitialDatum::constant(1, 1.0).unwrap(), 2.0);
        let rep = density_profile(&s.datum, &grid_request(vec![0.5, 1.0], vec![1.0, 10.0, 100.0])).unwrap();
        let quad = Quadrature::new(32).unwrap();
        let b = bounds_report(&s, &rep, &quad, &BoundsOptions::default()).unwrap();
        for v in [b.lower, b.thm1.bound.value().unwrap(), b.thm2.bound.value().unwrap(), b.weissler.value().unwrap()] {
            assert!((v - 1.0).abs() < 1e-9, "{b:?}");
        }
        assert_eq!(b.yamauchi.bound, Bound::Finite(1.0));
        assert_eq!(b.thm1.alpha, Some(1.0));
        assert!(b.all_flags_pass());
    }

    #[test]
    fn gaussian_report_only_lower() {
        let s = spec(InitialDatum::gaussian(vec![0.0, 0.0], 1.0, 1.0).unwrap(), 3.0);
        let rep = density_profile(&s.datum, &grid_request(vec![0.1, 0.5], vec![1e4, 1e5])).unwrap();
        let quad = Quadrature::new(24).unwrap();
        let b = bounds_report(&s, &rep, &quad, &BoundsOptions::default()).unwrap();
        assert!(!b.thm1.bound.is_available());
        assert!(!b.yamauchi.bound.is_available());
        assert_eq!(b.flag("thm2_le_thm1"), Some(FlagStatus::NotApplicable));
        assert!(b.all_flags_pass());
    }

    #[test]
    fn factorial_rings_thm1_is_one() {
        let d = build_factorial_rings::<f64>(5, 1).unwrap();
        let rep = density_profile(
            &d,
            &DensityRequest {
                alphas: vec![0.5, 1.0],
                radii: vec![1.0, 6.0, 120.0],
                centers: Centers::Origin,
                estimator: Estimator::GridOracle { resolution: 1 << 16 },
            },
        )
        .unwrap();
        let t1 = upper_bound_thm1(&rep, 2.0).unwrap();
        assert_eq!(t1.alpha, Some(1.0));
        let v = t1.bound.value().unwrap();
        assert!(v <= 1.0 / 0.79 && v >= 1.0, "{v}");
    }

    #[test]
    fn cone_report_flags() {
        let s = spec(cone_datum(), 2.0);
        let rep = density_profile(
            &s.datum,
            &DensityRequest {
                alphas: vec![0.5, 0.99],
                radii: vec![5.0, 10.0],
                centers: Centers::AutoSearch,
                estimator: Estimator::GridOracle { resolution: 128 },
            },
        )
        .unwrap();
        let quad = QuadratureConfig { nodes_per_axis: 24, ..Default::default() }.build().unwrap();
        let b = bounds_report(&s, &rep, &quad, &BoundsOptions::default()).unwrap();
        assert_eq!(b.yamauchi.bound, Bound::Finite(1.0));
        assert_eq!(b.flag("thm2_cone_le_yamauchi"), Some(FlagStatus::Pass));
        assert!(b.all_flags_pass(), "{:?}", b.flags);
    }
}
