//! Holomorphic self-maps of the disc built from Blaschke products,
//! automorphisms, affine contractions and powers.
//!
//! Every map in this class extends continuously to the closed disc, so the
//! boundary value at `ζ ∈ 𝕋` is plain evaluation.

pub(crate) mod parse;
mod roots;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{is_on_circle, DiscAutomorphism, DiscPoint};
use crate::measure::BoundaryArcSet;

pub use parse::{parse_map, parse_map_at, ParseError};

/// Default cap on the total degree for preimage enumeration.
pub const DEFAULT_DEGREE_CAP: u64 = 4096;
/// Residual accepted for a returned preimage.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;
/// Roots closer than this are merged into one point with multiplicity.
pub const ROOT_CLUSTER_RADIUS: f64 = 1e-8;
/// Samples per unit of normalised arc length used by [`MapExpr::is_inner_on`].
pub const DEFAULT_INNER_DENSITY: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("blaschke zero {0} is not inside the unit disc")]
    ZeroOutsideDisc(Complex64),
    #[error("blaschke product needs at least one zero")]
    NoZeros,
    #[error("zero multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("affine map z -> ({scale}) z + ({shift}) is not a self-map: |scale| + |shift| > 1")]
    AffineNotSelfMap { scale: Complex64, shift: Complex64 },
    #[error("power exponent must be at least 1")]
    ZeroPower,
    #[error("automorphism centre {0} is not inside the unit disc")]
    AutomorphismCentre(Complex64),
    #[error("empty composition")]
    EmptyComposition,
    #[error("total degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: u64, cap: u64 },
    #[error("target {0} is not inside the unit disc")]
    TargetOutsideDisc(Complex64),
}

/// Finite Blaschke product `e^{i rotation} ∏ ((z - a) / (1 - conj(a) z))^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeProduct {
    pub rotation: f64,
    pub zeros: Vec<(Complex64, u32)>,
}

impl BlaschkeProduct {
    pub fn degree(&self) -> u64 {
        self.zeros.iter().map(|&(_, m)| m as u64).sum()
    }

    /// Value and derivative by forward accumulation over the factors.
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::from_polar(1.0, self.rotation);
        let mut dp = Complex64::new(0.0, 0.0);
        for &(a, m) in &self.zeros {
            let den = 1.0 - a.conj() * z;
            let u = (z - a) / den;
            let du = (1.0 - a.norm_sqr()) / (den * den);
            let um = u.powu(m);
            let dum = if m == 0 { Complex64::new(0.0, 0.0) } else { du * u.powu(m - 1) * m as f64 };
            dp = dp * um + p * dum;
            p *= um;
        }
        (p, dp)
    }

    /// Numerator minus `w` times denominator, as ascending coefficients.
    fn preimage_polynomial(&self, w: Complex64) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut num = vec![Complex64::from_polar(1.0, self.rotation)];
        let mut den = vec![one];
        for &(a, m) in &self.zeros {
            for _ in 0..m {
                num = roots::poly_mul(&num, &[-a, one]);
                den = roots::poly_mul(&den, &[one, -a.conj()]);
            }
        }
        num.iter().zip(&den).map(|(n, d)| n - w * d).collect()
    }
}

/// Expression tree for a holomorphic self-map of the unit disc.
#[derive(Debug, Clone, PartialEq)]
pub enum MapExpr {
    Blaschke(BlaschkeProduct),
    Automorphism(DiscAutomorphism),
    /// `z -> scale * z + shift` with `|scale| + |shift| <= 1`.
    Affine { scale: Complex64, shift: Complex64 },
    Power(u32),
    /// `outer ∘ inner`.
    Compose(Box<MapExpr>, Box<MapExpr>),
}

/// Solutions of `f(z) = w` inside the disc, with multiplicity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreimageSet {
    pub points: Vec<(DiscPoint, u32)>,
    /// Set when two computed roots fell within [`ROOT_CLUSTER_RADIUS`]
    /// and were merged into a multiple root.
    pub ill_conditioned: bool,
}

impl PreimageSet {
    pub fn count(&self) -> u64 {
        self.points.iter().map(|&(_, m)| m as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Outcome of sampling `|f|` on a set of boundary arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerStatus {
    Inner,
    NotInner { witness: DiscPoint, modulus: f64 },
    Inconclusive { witness: DiscPoint, modulus: f64 },
}

impl InnerStatus {
    pub fn is_inner(&self) -> bool {
        matches!(self, InnerStatus::Inner)
    }
}

impl MapExpr {
    pub fn identity() -> Self {
        MapExpr::Power(1)
    }

    pub fn power(d: u32) -> Result<Self, MapError> {
        if d == 0 {
            return Err(MapError::ZeroPower);
        }
        Ok(MapExpr::Power(d))
    }

    pub fn affine(scale: Complex64, shift: Complex64) -> Result<Self, MapError> {
        let e = MapExpr::Affine { scale, shift };
        e.validate()?;
        Ok(e)
    }

    pub fn automorphism(theta: f64, a: Complex64) -> Result<Self, MapError> {
        DiscAutomorphism::new(theta, a)
            .map(MapExpr::Automorphism)
            .map_err(|_| MapError::AutomorphismCentre(a))
    }

    pub fn blaschke(rotation: f64, zeros: Vec<(Complex64, u32)>) -> Result<Self, MapError> {
        let e = MapExpr::Blaschke(BlaschkeProduct { rotation, zeros });
        e.validate()?;
        Ok(e)
    }

    pub fn compose(outer: MapExpr, inner: MapExpr) -> Self {
        MapExpr::Compose(Box::new(outer), Box::new(inner))
    }

    /// `maps[0] ∘ maps[1] ∘ … ∘ maps[n-1]`, nested to the right.
    pub fn compose_all(maps: Vec<MapExpr>) -> Result<Self, MapError> {
        let mut it = maps.into_iter().rev();
        let mut acc = it.next().ok_or(MapError::EmptyComposition)?;
        for outer in it {
            acc = MapExpr::compose(outer, acc);
        }
        Ok(acc)
    }

    /// Checks the self-map constraints on every node.
    pub fn validate(&self) -> Result<(), MapError> {
        match self {
            MapExpr::Blaschke(b) => {
                if b.zeros.is_empty() {
                    return Err(MapError::NoZeros);
                }
                for &(a, m) in &b.zeros {
                    if !(a.norm() < 1.0) {
                        return Err(MapError::ZeroOutsideDisc(a));
                    }
                    if m == 0 {
                        return Err(MapError::ZeroMultiplicity);
                    }
                }
                Ok(())
            }
            MapExpr::Automorphism(f) => {
                if f.a.norm() < 1.0 {
                    Ok(())
                } else {
                    Err(MapError::AutomorphismCentre(f.a))
                }
            }
            MapExpr::Affine { scale, shift } => {
                if scale.norm() + shift.norm() <= 1.0 + 1e-15 {
                    Ok(())
                } else {
                    Err(MapError::AffineNotSelfMap { scale: *scale, shift: *shift })
                }
            }
            MapExpr::Power(d) => {
                if *d == 0 {
                    Err(MapError::ZeroPower)
                } else {
                    Ok(())
                }
            }
            MapExpr::Compose(g, h) => {
                g.validate()?;
                h.validate()
            }
        }
    }

    /// Product of branch degrees along the tree.
    pub fn degree(&self) -> u64 {
        match self {
            MapExpr::Blaschke(b) => b.degree(),
            MapExpr::Automorphism(_) => 1,
            MapExpr::Affine { scale, .. } => u64::from(*scale != Complex64::new(0.0, 0.0)),
            MapExpr::Power(d) => *d as u64,
            MapExpr::Compose(g, h) => g.degree().saturating_mul(h.degree()),
        }
    }

    /// Structural classification: true when every node maps the circle to the circle.
    pub fn is_inner(&self) -> bool {
        match self {
            MapExpr::Blaschke(_) | MapExpr::Automorphism(_) | MapExpr::Power(_) => true,
            MapExpr::Affine { scale, shift } => {
                *shift == Complex64::new(0.0, 0.0) && (scale.norm() - 1.0).abs() < 1e-15
            }
            MapExpr::Compose(g, h) => g.is_inner() && h.is_inner(),
        }
    }

    /// Evaluates the map on the closed disc.
    ///
    /// Inner primitives evaluated on the circle return a unit-modulus
    /// value, so long boundary orbits of inner maps stay on 𝕋.
    pub fn eval(&self, z: DiscPoint) -> DiscPoint {
        let on_circle = is_on_circle(z);
        let snap = |v: Complex64| if on_circle && v.norm() > 0.0 { v / v.norm() } else { v };
        match self {
            MapExpr::Blaschke(b) => snap(b.eval_with_derivative(z).0),
            MapExpr::Automorphism(f) => snap(f.eval(z)),
            MapExpr::Affine { scale, shift } => scale * z + shift,
            MapExpr::Power(d) => snap(z.powu(*d)),
            MapExpr::Compose(g, h) => g.eval(h.eval(z)),
        }
    }

    /// Exact chain-rule derivative.
    pub fn derivative(&self, z: DiscPoint) -> Complex64 {
        match self {
            MapExpr::Blaschke(b) => b.eval_with_derivative(z).1,
            MapExpr::Automorphism(f) => f.derivative(z),
            MapExpr::Affine { scale, .. } => *scale,
            MapExpr::Power(d) => match d {
                0 => Complex64::new(0.0, 0.0),
                _ => z.powu(d - 1) * *d as f64,
            },
            MapExpr::Compose(g, h) => g.derivative(h.eval(z)) * h.derivative(z),
        }
    }

    pub fn preimages(&self, w: DiscPoint) -> Result<PreimageSet, MapError> {
        self.preimages_with_cap(w, DEFAULT_DEGREE_CAP)
    }

    /// All solutions of `f(z) = w` with `|z| < 1`, counted with multiplicity.
    pub fn preimages_with_cap(&self, w: DiscPoint, cap: u64) -> Result<PreimageSet, MapError> {
        if !(w.norm() < 1.0) {
            return Err(MapError::TargetOutsideDisc(w));
        }
        let degree = self.degree();
        if degree > cap {
            return Err(MapError::DegreeOverflow { degree, cap });
        }
        Ok(self.preimages_unchecked(w))
    }

    fn preimages_unchecked(&self, w: DiscPoint) -> PreimageSet {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            MapExpr::Power(d) => {
                if w == zero {
                    return PreimageSet { points: vec![(zero, *d)], ill_conditioned: false };
                }
                let r = w.norm().powf(1.0 / *d as f64);
                let points = (0..*d)
                    .map(|k| {
                        let t = (w.arg() + 2.0 * PI * k as f64) / *d as f64;
                        (Complex64::from_polar(r, t), 1)
                    })
                    .collect();
                PreimageSet { points, ill_conditioned: false }
            }
            MapExpr::Affine { scale, shift } => {
                if *scale == zero {
                    return PreimageSet::default();
                }
                let z = (w - shift) / scale;
                let points = if z.norm() < 1.0 { vec![(z, 1)] } else { Vec::new() };
                PreimageSet { points, ill_conditioned: false }
            }
            MapExpr::Automorphism(f) => {
                PreimageSet { points: vec![(f.inverse().eval(w), 1)], ill_conditioned: false }
            }
            MapExpr::Blaschke(b) => self.blaschke_preimages(b, w),
            MapExpr::Compose(g, h) => {
                let outer = g.preimages_unchecked(w);
                let mut set = PreimageSet { points: Vec::new(), ill_conditioned: outer.ill_conditioned };
                for (u, m) in outer.points {
                    if !(u.norm() < 1.0) {
                        continue;
                    }
                    let inner = h.preimages_unchecked(u);
                    set.ill_conditioned |= inner.ill_conditioned;
                    set.points.extend(inner.points.into_iter().map(|(z, k)| (z, k * m)));
                }
                set
            }
        }
    }

    fn blaschke_preimages(&self, b: &BlaschkeProduct, w: DiscPoint) -> PreimageSet {
        if w == Complex64::new(0.0, 0.0) {
            return PreimageSet { points: b.zeros.clone(), ill_conditioned: false };
        }
        let poly = b.preimage_polynomial(w);
        let raw = roots::polynomial_roots(&poly);
        let polished: Vec<Complex64> = raw.into_iter().map(|z| self.polish(z, w)).collect();
        let (points, ill_conditioned) = roots::cluster(&polished, ROOT_CLUSTER_RADIUS);
        let points = points.into_iter().filter(|(z, _)| z.norm() < 1.0).collect();
        PreimageSet { points, ill_conditioned }
    }

    /// Newton pass on `f(z) - w`, keeping only steps that reduce the residual.
    fn polish(&self, mut z: Complex64, w: Complex64) -> Complex64 {
        let mut residual = (self.eval(z) - w).norm();
        for _ in 0..4 {
            if residual < 1e-13 {
                break;
            }
            let d = self.derivative(z);
            if d.norm() == 0.0 {
                break;
            }
            let next = z - (self.eval(z) - w) / d;
            let r = (self.eval(next) - w).norm();
            if r < residual {
                z = next;
                residual = r;
            } else {
                break;
            }
        }
        z
    }

    /// Samples `|f|` on `arc` with `density` points per unit of normalised length.
    pub fn is_inner_on(&self, arc: &BoundaryArcSet, density: usize) -> InnerStatus {
        let lowest = arc
            .sample_points(density)
            .into_iter()
            .map(|zeta| (zeta, self.eval(zeta).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match lowest {
            Some((witness, modulus)) if modulus < 1.0 - 1e-9 => InnerStatus::NotInner { witness, modulus },
            Some((witness, modulus)) if modulus < 1.0 - 1e-12 => InnerStatus::Inconclusive { witness, modulus },
            _ => InnerStatus::Inner,
        }
    }
}

struct ComplexText(Complex64);

impl fmt::Display for ComplexText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = self.0;
        write!(f, "{}", z.re)?;
        if z.im != 0.0 {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            write!(f, "{}{}i", sign, z.im.abs())?;
        }
        Ok(())
    }
}

/// Canonical text form, accepted back by [`parse_map`].
impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapExpr::Power(d) => write!(f, "power({d})"),
            MapExpr::Affine { scale, shift } => {
                write!(f, "affine({}, {})", ComplexText(*scale), ComplexText(*shift))
            }
            MapExpr::Automorphism(a) => write!(f, "auto({}, {})", a.theta, ComplexText(a.a)),
            MapExpr::Blaschke(b) => {
                write!(f, "blaschke({};", b.rotation)?;
                for (i, &(a, m)) in b.zeros.iter().enumerate() {
                    let sep = if i == 0 { " " } else { ", " };
                    write!(f, "{sep}{}", ComplexText(a))?;
                    if m != 1 {
                        write!(f, "x{m}")?;
                    }
                }
                write!(f, ")")
            }
            MapExpr::Compose(g, h) => write!(f, "compose({g}, {h})"),
        }
    }
}
