//! Arc sets on the unit circle, Lebesgue measure and the harmonic measure
//! seen from an interior point.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{normalize_angle, DiscAutomorphism, DiscPoint, Involution};
use crate::quadrature::GaussLegendre;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid interval ({0}, {1}): end must exceed start and both must be finite")]
    InvalidInterval(f64, f64),
    #[error("base point {0} is not inside the unit disc")]
    OutsideDisc(DiscPoint),
    #[error("fixed point modulus {0} is not below 1/2")]
    Regime(f64),
}

/// Finite union of closed arcs `[start, end]` (radians), kept sorted,
/// disjoint and inside `[0, 2π]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryArcSet {
    intervals: Vec<(f64, f64)>,
}

impl BoundaryArcSet {
    pub fn empty() -> Self {
        BoundaryArcSet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        BoundaryArcSet { intervals: vec![(0.0, TAU)] }
    }

    /// Builds a normalised set from counter-clockwise intervals in radians.
    /// Intervals may start anywhere and wrap past `2π`.
    pub fn from_intervals(raw: &[(f64, f64)]) -> Result<Self, MeasureError> {
        let mut pieces = Vec::new();
        for &(a, b) in raw {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(MeasureError::InvalidInterval(a, b));
            }
            let len = b - a;
            if len >= TAU {
                return Ok(Self::full());
            }
            let s = normalize_angle(a);
            let e = s + len;
            if e > TAU {
                pieces.push((s, TAU));
                pieces.push((0.0, e - TAU));
            } else {
                pieces.push((s, e));
            }
        }
        pieces.retain(|&(s, e)| e > s);
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for (s, e) in pieces {
            match intervals.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => intervals.push((s, e)),
            }
        }
        Ok(BoundaryArcSet { intervals })
    }

    pub fn from_degrees(raw: &[(f64, f64)]) -> Result<Self, MeasureError> {
        let rad: Vec<(f64, f64)> = raw.iter().map(|&(a, b)| (a.to_radians(), b.to_radians())).collect();
        Self::from_intervals(&rad)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn union(&self, other: &BoundaryArcSet) -> BoundaryArcSet {
        let all: Vec<(f64, f64)> = self.intervals.iter().chain(&other.intervals).copied().collect();
        Self::from_intervals(&all).expect("normalised intervals are valid")
    }

    pub fn contains_angle(&self, t: f64) -> bool {
        let t = normalize_angle(t);
        self.intervals.iter().any(|&(s, e)| t >= s && t <= e)
            || (t == 0.0 && self.intervals.last().is_some_and(|&(_, e)| e >= TAU))
    }

    pub fn contains(&self, zeta: Complex64) -> bool {
        self.contains_angle(zeta.arg())
    }

    /// Midpoint samples: `ceil(density * ℓ(I))` per interval, at least one.
    pub fn sample_angles(&self, density: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for &(s, e) in &self.intervals {
            let n = ((density as f64) * (e - s) / TAU).ceil().max(1.0) as usize;
            let h = (e - s) / n as f64;
            out.extend((0..n).map(|j| s + (j as f64 + 0.5) * h));
        }
        out
    }

    pub fn sample_points(&self, density: usize) -> Vec<Complex64> {
        self.sample_angles(density).into_iter().map(|t| Complex64::from_polar(1.0, t)).collect()
    }

    /// Image under the boundary action of a disc automorphism.
    pub fn image_under(&self, f: &DiscAutomorphism) -> BoundaryArcSet {
        if self.intervals.len() == 1 && self.intervals[0] == (0.0, TAU) {
            return Self::full();
        }
        let mapped: Vec<(f64, f64)> =
            self.intervals.iter().map(|&(s, e)| (f.boundary_lift(s), f.boundary_lift(e))).collect();
        Self::from_intervals(&mapped).expect("boundary lift is increasing")
    }
}

/// Normalised Lebesgue measure of an arc set.
pub fn lebesgue(e: &BoundaryArcSet) -> f64 {
    e.intervals.iter().map(|&(s, t)| t - s).sum::<f64>() / TAU
}

/// Harmonic measure of 𝔻 seen from `w`: density `(1 - |w|²) / |ζ - w|²`
/// against normalised arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicMeasure {
    pub w: DiscPoint,
}

impl HarmonicMeasure {
    pub fn new(w: DiscPoint) -> Result<Self, MeasureError> {
        if w.norm() < 1.0 {
            Ok(HarmonicMeasure { w })
        } else {
            Err(MeasureError::OutsideDisc(w))
        }
    }

    pub fn density(&self, zeta: Complex64) -> f64 {
        (1.0 - self.w.norm_sqr()) / (zeta - self.w).norm_sqr()
    }

    /// Moves `w` to the origin; its boundary Jacobian is the density.
    fn straightening(&self) -> DiscAutomorphism {
        DiscAutomorphism { theta: 0.0, a: self.w }
    }

    /// Density over a `n`-point boundary grid: (min, max).
    pub fn density_range(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|j| self.density(Complex64::from_polar(1.0, TAU * j as f64 / n as f64)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }
}

/// `λ(E)` from the arc endpoints.
pub fn harmonic_mass(lambda: &HarmonicMeasure, e: &BoundaryArcSet) -> f64 {
    let t = lambda.straightening();
    e.intervals.iter().map(|&(s, u)| t.boundary_lift(u) - t.boundary_lift(s)).sum::<f64>() / TAU
}

/// `λ(E)` by composite Gauss–Legendre quadrature of the density, with about
/// `nodes` nodes in total.
pub fn harmonic_mass_quadrature(lambda: &HarmonicMeasure, e: &BoundaryArcSet, nodes: usize) -> f64 {
    let rule = GaussLegendre::new(16);
    let panels_total = (nodes / 16).max(1);
    let mut acc = 0.0;
    for &(s, u) in &e.intervals {
        let panels = ((panels_total as f64) * (u - s) / TAU).ceil().max(1.0) as usize;
        let h = (u - s) / panels as f64;
        for p in 0..panels {
            let a = s + p as f64 * h;
            acc += rule.integrate(a, a + h, |t| lambda.density(Complex64::from_polar(1.0, t)));
        }
    }
    acc / TAU
}

/// Image of `E` under the boundary action of the involution `e`.
pub fn arc_image(e: &Involution, set: &BoundaryArcSet) -> BoundaryArcSet {
    set.image_under(&e.as_automorphism())
}

/// `(λ(e(E)), λ(E))` for the harmonic measure at the fixed point of `e`.
pub fn invariance_check(e: &Involution, set: &BoundaryArcSet) -> (f64, f64) {
    let lambda = HarmonicMeasure { w: e.w };
    (harmonic_mass(&lambda, &arc_image(e, set)), harmonic_mass(&lambda, set))
}

/// Lower bound on `ℓ(e(E))` through the invariant harmonic measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardBound {
    pub actual: f64,
    pub bound: f64,
    pub density_min: f64,
    pub density_max: f64,
}

impl PushforwardBound {
    pub fn holds(&self) -> bool {
        self.actual >= self.bound
            && self.density_min >= 1.0 / 3.0
            && self.density_max <= 4.0
    }
}

/// Grid size for the density range check.
pub const DENSITY_GRID: usize = 1024;

pub fn pushforward_lower_bound(e: &Involution, set: &BoundaryArcSet) -> Result<PushforwardBound, MeasureError> {
    let r = e.w.norm();
    if r >= 0.5 {
        return Err(MeasureError::Regime(r));
    }
    let (density_min, density_max) = HarmonicMeasure { w: e.w }.density_range(DENSITY_GRID);
    Ok(PushforwardBound {
        actual: lebesgue(&arc_image(e, set)),
        bound: lebesgue(set) / 12.0,
        density_min,
        density_max,
    })
}
