//! Points of the unit disc, disc automorphisms and the hyperbolic metric.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::holomap::MapExpr;

/// A point of the complex plane, read as a point of the closed unit disc.
pub type DiscPoint = Complex64;

/// Tolerance used to decide whether a point lies on the unit circle.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {0} is not in the open unit disc")]
    OutsideDisc(DiscPoint),
    /// The midpoint of a point with itself; carries the point as the conventional answer.
    #[error("midpoint of coincident points {0}")]
    DegenerateMidpoint(DiscPoint),
}

/// True when `z` is an interior point with the margin used throughout the crate.
pub fn is_interior(z: DiscPoint) -> bool {
    z.norm() < 1.0 - BOUNDARY_TOL
}

pub fn is_on_circle(z: DiscPoint) -> bool {
    (z.norm() - 1.0).abs() < BOUNDARY_TOL
}

fn check_interior(z: DiscPoint) -> Result<(), GeometryError> {
    if z.norm() < 1.0 && z.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::OutsideDisc(z))
    }
}

/// Pseudo-hyperbolic distance `|z - w| / |1 - conj(w) z|`.
pub fn pseudo_hyperbolic(z: DiscPoint, w: DiscPoint) -> f64 {
    ((z - w) / (1.0 - w.conj() * z)).norm()
}

/// Hyperbolic distance with curvature normalisation `d(0, r) = artanh r`.
pub fn hyperbolic_distance(z: DiscPoint, w: DiscPoint) -> Result<f64, GeometryError> {
    check_interior(z)?;
    check_interior(w)?;
    let p = pseudo_hyperbolic(z, w).min(1.0);
    Ok(p.atanh())
}

/// Radius `t` with `artanh t = artanh(r) / 2`.
fn half_radius(r: f64) -> f64 {
    r / (1.0 + (1.0 - r * r).max(0.0).sqrt())
}

/// Hyperbolic midpoint of `z` and `w`.
///
/// Moves `z` to the origin, halves the hyperbolic radius of the image of `w`
/// and moves back. Coincident inputs return `DegenerateMidpoint(z)`.
pub fn hyperbolic_midpoint(z: DiscPoint, w: DiscPoint) -> Result<DiscPoint, GeometryError> {
    check_interior(z)?;
    check_interior(w)?;
    if z == w {
        return Err(GeometryError::DegenerateMidpoint(z));
    }
    let moved = (w - z) / (1.0 - z.conj() * w);
    let half = moved * (half_radius(moved.norm()) / moved.norm());
    Ok((half + z) / (1.0 + z.conj() * half))
}

/// Disc automorphism `z -> e^{i theta} (z - a) / (1 - conj(a) z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscAutomorphism {
    pub theta: f64,
    pub a: DiscPoint,
}

impl DiscAutomorphism {
    pub fn new(theta: f64, a: DiscPoint) -> Result<Self, GeometryError> {
        check_interior(a)?;
        Ok(DiscAutomorphism { theta: normalize_angle(theta), a })
    }

    pub fn identity() -> Self {
        DiscAutomorphism { theta: 0.0, a: Complex64::new(0.0, 0.0) }
    }

    pub fn rotation(theta: f64) -> Self {
        DiscAutomorphism { theta: normalize_angle(theta), a: Complex64::new(0.0, 0.0) }
    }

    pub fn eval(&self, z: DiscPoint) -> DiscPoint {
        Complex64::from_polar(1.0, self.theta) * (z - self.a) / (1.0 - self.a.conj() * z)
    }

    pub fn derivative(&self, z: DiscPoint) -> Complex64 {
        let den = 1.0 - self.a.conj() * z;
        Complex64::from_polar(1.0, self.theta) * (1.0 - self.a.norm_sqr()) / (den * den)
    }

    pub fn inverse(&self) -> Self {
        DiscAutomorphism {
            theta: normalize_angle(-self.theta),
            a: -self.a * Complex64::from_polar(1.0, self.theta),
        }
    }

    /// Matrix `[[p, q], [r, s]]` acting as `(p z + q) / (r z + s)`.
    fn matrix(&self) -> [Complex64; 4] {
        let u = Complex64::from_polar(1.0, self.theta);
        let one = Complex64::new(1.0, 0.0);
        [u, -u * self.a, -self.a.conj(), one]
    }

    fn from_matrix(m: [Complex64; 4]) -> Self {
        let [p, q, _, s] = m;
        let a = -q / p;
        let u = p / s;
        DiscAutomorphism { theta: normalize_angle(u.arg()), a }
    }

    /// `self ∘ inner`, renormalised to canonical `(theta, a)` form.
    pub fn compose(&self, inner: &DiscAutomorphism) -> DiscAutomorphism {
        let [p1, q1, r1, s1] = self.matrix();
        let [p2, q2, r2, s2] = inner.matrix();
        DiscAutomorphism::from_matrix([
            p1 * p2 + q1 * r2,
            p1 * q2 + q1 * s2,
            r1 * p2 + s1 * r2,
            r1 * q2 + s1 * s2,
        ])
    }

    /// Lift of the boundary action: a continuous, strictly increasing
    /// `psi` with `self(e^{i t}) = e^{i psi(t)}`.
    pub fn boundary_lift(&self, t: f64) -> f64 {
        let v = 1.0 - self.a * Complex64::from_polar(1.0, -t);
        self.theta + t + 2.0 * v.arg()
    }
}

/// Angle reduced to `[0, 2 pi)`.
pub fn normalize_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Self-inverse automorphism `z -> (b - z) / (1 - conj(b) z)` swapping `0` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Involution {
    pub b: DiscPoint,
    /// Fixed point, the hyperbolic midpoint of `0` and `b`.
    pub w: DiscPoint,
}

impl Involution {
    pub fn eval(&self, z: DiscPoint) -> DiscPoint {
        (self.b - z) / (1.0 - self.b.conj() * z)
    }

    pub fn derivative(&self, z: DiscPoint) -> Complex64 {
        let den = 1.0 - self.b.conj() * z;
        -(1.0 - self.b.norm_sqr()) / (den * den)
    }

    pub fn as_automorphism(&self) -> DiscAutomorphism {
        DiscAutomorphism { theta: PI, a: self.b }
    }

    pub fn to_map(&self) -> MapExpr {
        MapExpr::Automorphism(self.as_automorphism())
    }
}

/// The involution exchanging `0` and `b`. For `b = 0` this is `z -> -z`.
pub fn involution_swapping(b: DiscPoint) -> Result<Involution, GeometryError> {
    check_interior(b)?;
    let r = b.norm();
    let w = if r == 0.0 { b } else { b * (half_radius(r) / r) };
    Ok(Involution { b, w })
}

/// `d(z, w) - d(f(z), f(w))`; nonnegative for every holomorphic self-map.
pub fn schwarz_pick_defect(f: &MapExpr, z: DiscPoint, w: DiscPoint) -> Result<f64, GeometryError> {
    let before = hyperbolic_distance(z, w)?;
    let after = hyperbolic_distance(f.eval(z), f.eval(w))?;
    Ok(before - after)
}
