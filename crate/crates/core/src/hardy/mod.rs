//! H² norms, the Nevanlinna counting function and composition-operator
//! estimates.
//!
//! `ℓ` (arc length on 𝕋) and `A` (area on 𝔻) are both normalised to
//! probability measures, so `‖z‖₂ = 1` under every estimator here.

mod claims;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::DiscPoint;
use crate::holomap::{MapError, MapExpr};
use crate::quadrature::{circle_mean, GaussLegendre};

pub use claims::{
    claim1_delta, claim1_verify, default_r1, littlewood_threshold, opnorm_h20, opnorm_h20_with, shapiro_gamma, shapiro_measure,
    Claim1Report, OpNormEstimate, OpNormOptions,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    #[error("boundary node count {0} must be a power of two >= 256")]
    BoundaryNodes(usize),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature grid supports about {achieved:e}, requested {requested:e}")]
    QuadratureBudget { achieved: f64, requested: f64 },
    #[error("{0}")]
    Domain(String),
}

/// An element of H²: either a self-map of the disc or a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub enum HardyFunction {
    Map(MapExpr),
    /// Ascending coefficients `c_0, …, c_N`.
    Polynomial(Vec<Complex64>),
}

impl HardyFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            HardyFunction::Map(f) => f.eval(z),
            HardyFunction::Polynomial(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a),
        }
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match self {
            HardyFunction::Map(f) => f.derivative(z),
            HardyFunction::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, (n, a)| acc * z + a * n as f64),
        }
    }

    pub fn at_zero(&self) -> Complex64 {
        self.eval(Complex64::new(0.0, 0.0))
    }

    /// `sqrt(Σ|c_n|²)` for polynomials.
    pub fn coefficient_norm(&self) -> Option<f64> {
        match self {
            HardyFunction::Polynomial(c) => Some(c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()),
            HardyFunction::Map(_) => None,
        }
    }

    /// Membership in H²₀.
    pub fn vanishes_at_zero(&self) -> bool {
        self.at_zero().norm() < 1e-12
    }
}

/// Node counts for area and boundary quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes in the radial direction.
    pub radial: usize,
    /// Trapezoid nodes in the angular direction.
    pub angular: usize,
    /// Trapezoid nodes for boundary norms.
    pub boundary: usize,
    /// Requested accuracy; checked against a half-resolution rerun when set.
    pub tolerance: Option<f64>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { radial: 128, angular: 1024, boundary: 4096, tolerance: None }
    }
}

/// Polar sampling grid for suprema over annuli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { radial: 256, angular: 512 }
    }
}

/// Boundary form of the H² norm: trapezoid rule with `m` nodes.
pub fn hardy_norm_boundary(f: &HardyFunction, m: usize) -> Result<f64, HardyError> {
    if m < 256 || !m.is_power_of_two() {
        return Err(HardyError::BoundaryNodes(m));
    }
    Ok(circle_mean(m, |z| f.eval(z).norm_sqr()).sqrt())
}

/// `‖g∘f‖₂` by boundary quadrature.
pub fn composition_norm(g: &HardyFunction, f: &MapExpr, m: usize) -> Result<f64, HardyError> {
    if m < 256 || !m.is_power_of_two() {
        return Err(HardyError::BoundaryNodes(m));
    }
    Ok(circle_mean(m, |z| g.eval(f.eval(z)).norm_sqr()).sqrt())
}

/// Angular trapezoid mean of `|f'|²` on `|z| = r`.
fn angular_mean_sq_derivative(f: &HardyFunction, r: f64, n: usize) -> f64 {
    circle_mean(n, |z| f.derivative(z * r).norm_sqr())
}

/// Area form of the norm: `|f(0)|² + 2∫|f'|² log(1/|z|) dA`.
///
/// With `r = s²` the radial integral becomes `∫₀¹ 16 s³ log(1/s) m(s²) ds`,
/// where `m(r)` is the angular mean of `|f'|²`; the substitution smooths the
/// logarithmic endpoint so Gauss–Legendre converges quickly.
pub fn hardy_norm_littlewood_paley(f: &HardyFunction, quad: &QuadSpec) -> f64 {
    let rule = GaussLegendre::new(quad.radial);
    let nodes: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let area: f64 = nodes
        .par_iter()
        .map(|&(s, w)| w * 16.0 * s.powi(3) * (1.0 / s).ln() * angular_mean_sq_derivative(f, s * s, quad.angular))
        .sum();
    (f.at_zero().norm_sqr() + area).sqrt()
}

/// Littlewood's upper bound `log|(1 - conj(w) f(0)) / (w - f(0))|`.
pub fn littlewood_bound(f0: Complex64, w: Complex64) -> f64 {
    ((1.0 - w.conj() * f0) / (w - f0)).norm().ln()
}

/// Boundary nodes for the Fatou-type bound.
pub const FATOU_NODES: usize = 8192;
/// Tolerance for the Fatou-type bound with a smooth integrand.
pub const FATOU_TOL: f64 = 1e-7;
/// Tolerance after singular cells were dropped from the Fatou quadrature.
pub const FATOU_TOL_SINGULAR: f64 = 1e-5;
/// `|w - f(0)|` below which the Littlewood bound is flagged as near-singular.
pub const NEAR_SINGULAR: f64 = 1e-6;

/// Fatou-type bound for `N_f(w)` by the midpoint rule with `m` cells.
///
/// Cells whose midpoint value of `|(w - f(ζ)) / (1 - conj(w) f(ζ))|` is below
/// one cell width sit on a logarithmic singularity of a nonpositive integrand;
/// they are dropped, which only raises the estimate. Returns the bound and
/// whether any cell was dropped.
pub fn fatou_bound(f: &MapExpr, w: Complex64, m: usize) -> (f64, bool) {
    let h = 2.0 * PI / m as f64;
    let mut dropped = false;
    let mut acc = 0.0;
    for j in 0..m {
        let zeta = Complex64::from_polar(1.0, (j as f64 + 0.5) * h);
        let v = f.eval(zeta);
        let p = ((w - v) / (1.0 - w.conj() * v)).norm();
        if p < h {
            dropped = true;
            continue;
        }
        acc += p.min(1.0).ln();
    }
    (acc / m as f64 + littlewood_bound(f.eval(Complex64::new(0.0, 0.0)), w), dropped)
}

/// Counting-function value with its two upper bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NevanlinnaEstimate {
    pub w: DiscPoint,
    pub value: f64,
    pub preimage_count: u64,
    pub bound_littlewood: f64,
    pub bound_fatou: f64,
    /// Accuracy to which `bound_fatou` is trusted.
    pub fatou_tolerance: f64,
    /// `w` is within [`NEAR_SINGULAR`] of `f(0)`.
    pub near_singular: bool,
    pub ill_conditioned: bool,
}

impl NevanlinnaEstimate {
    pub fn within_littlewood(&self) -> bool {
        self.value <= self.bound_littlewood + 1e-9
    }

    pub fn within_fatou(&self) -> bool {
        self.value <= self.bound_fatou + self.fatou_tolerance
    }
}

/// `N_f(w) = Σ m(z) log(1/|z|)` over preimages; zero at `w = f(0)`.
pub fn nevanlinna_value(f: &MapExpr, w: DiscPoint) -> Result<(f64, u64, bool), HardyError> {
    if w == f.eval(Complex64::new(0.0, 0.0)) {
        return Ok((0.0, 0, false));
    }
    let set = f.preimages(w)?;
    let value = set.points.iter().fold(0.0, |acc, &(z, m)| acc + m as f64 * (1.0 / z.norm()).ln());
    Ok((value, set.count(), set.ill_conditioned))
}

pub fn nevanlinna(f: &MapExpr, w: DiscPoint) -> Result<NevanlinnaEstimate, HardyError> {
    let (value, preimage_count, ill_conditioned) = nevanlinna_value(f, w)?;
    let f0 = f.eval(Complex64::new(0.0, 0.0));
    let (bound_fatou, dropped) = fatou_bound(f, w, FATOU_NODES);
    Ok(NevanlinnaEstimate {
        w,
        value,
        preimage_count,
        bound_littlewood: littlewood_bound(f0, w),
        bound_fatou,
        fatou_tolerance: if dropped { FATOU_TOL_SINGULAR } else { FATOU_TOL },
        near_singular: (w - f0).norm() < NEAR_SINGULAR,
        ill_conditioned,
    })
}

/// `sqrt((1 + |f(0)|) / (1 - |f(0)|))`, the subordination bound on `‖C_f‖`.
pub fn composition_operator_bound(f: &MapExpr) -> f64 {
    let r = f.eval(Complex64::new(0.0, 0.0)).norm();
    ((1.0 + r) / (1.0 - r)).sqrt()
}

/// Two sides of the change-of-variables identity for `‖g∘f‖₂²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeOfVariables {
    /// `‖g∘f‖₂²` by boundary quadrature.
    pub lhs: f64,
    /// `|g(f(0))|² + 2∫|g'|² N_f dA` with `N_f` from preimage enumeration.
    pub rhs: f64,
}

impl ChangeOfVariables {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// `2∫_𝔻 |g'(w)|² N_f(w) dA(w)` in polar coordinates centred at `f(0)`,
/// where the logarithmic singularity of `N_f` sits. Along each ray the radius
/// runs to the unit circle and is substituted `ρ = R s²`.
fn counting_area_integral(f: &MapExpr, g: &HardyFunction, radial: usize, angular: usize) -> Result<f64, HardyError> {
    let w0 = f.eval(Complex64::new(0.0, 0.0));
    let rule = GaussLegendre::new(radial);
    let nodes: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let rays: Vec<f64> = (0..angular)
        .into_par_iter()
        .map(|j| -> Result<f64, HardyError> {
            let dir = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / angular as f64);
            let proj = (w0.conj() * dir).re;
            let reach = -proj + (proj * proj + 1.0 - w0.norm_sqr()).sqrt();
            let mut acc = 0.0;
            for &(s, wt) in &nodes {
                let w = w0 + dir * (reach * s * s);
                let (n, _, _) = nevanlinna_value(f, w)?;
                acc += wt * 2.0 * reach * reach * s.powi(3) * g.derivative(w).norm_sqr() * n;
            }
            Ok(acc)
        })
        .collect::<Result<_, _>>()?;
    // (1/π) ∫dθ with the trapezoid weight 2π/J, times the leading factor 2.
    Ok(2.0 * 2.0 * rays.iter().sum::<f64>() / angular as f64)
}

pub fn change_of_variables_check(
    f: &MapExpr,
    g: &HardyFunction,
    quad: &QuadSpec,
) -> Result<ChangeOfVariables, HardyError> {
    let lhs = composition_norm(g, f, quad.boundary)?.powi(2);
    let head = g.eval(f.eval(Complex64::new(0.0, 0.0))).norm_sqr();
    let area = counting_area_integral(f, g, quad.radial, quad.angular)?;
    if let Some(requested) = quad.tolerance {
        let coarse = counting_area_integral(f, g, (quad.radial / 2).max(1), (quad.angular / 2).max(1))?;
        let achieved = (area - coarse).abs();
        if achieved > requested {
            return Err(HardyError::QuadratureBudget { achieved, requested });
        }
    }
    Ok(ChangeOfVariables { lhs, rhs: head + area })
}
