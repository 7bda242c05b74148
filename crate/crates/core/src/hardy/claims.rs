//! Two-region contraction constants: the counting-function ratio bound on an
//! outer annulus, the Shapiro-type concentration constant, and the bracket on
//! `‖C_f‖` restricted to H²₀.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{composition_norm, nevanlinna_value, GridSpec, HardyError, HardyFunction};
use crate::geometry::DiscPoint;
use crate::holomap::MapExpr;
use crate::measure::{lebesgue, BoundaryArcSet};

fn check_unit_interval(name: &str, x: f64) -> Result<(), HardyError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(HardyError::Domain(format!("{name} = {x} must lie in (0, 1)")))
    }
}

/// `1 - c(1 - r0) / (24(1 + r0))`.
pub fn claim1_delta(c: f64, r0: f64) -> Result<f64, HardyError> {
    check_unit_interval("c", c)?;
    check_unit_interval("r0", r0)?;
    Ok(1.0 - c * (1.0 - r0) / (24.0 * (1.0 + r0)))
}

/// Nontrivial root of `log(1/x) = 2(1 - x)`; below it `log(1/x) > 2(1 - x)`.
pub fn littlewood_threshold() -> f64 {
    let h = |x: f64| (1.0 / x).ln() - 2.0 * (1.0 - x);
    let (mut lo, mut hi) = (1e-6, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Default inner radius of the outer annulus: the square root of
/// [`littlewood_threshold`].
pub fn default_r1() -> f64 {
    littlewood_threshold().sqrt()
}

/// Geometric radii from `lo` to `hi`, clustering toward 1.
fn radii_toward_one(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (1.0 - lo, 1.0 - hi);
    (0..n).map(|i| 1.0 - a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Largest `N_f(w) / log(1/|w|)` on the circle `|w| = radius`, with its
/// location.
fn ratio_row(f: &MapExpr, radius: f64, angular: usize) -> Result<(f64, DiscPoint), HardyError> {
    let scale = (1.0 / radius).ln();
    let mut best = (f64::NEG_INFINITY, Complex64::new(radius, 0.0));
    for j in 0..angular {
        let w = Complex64::from_polar(radius, 2.0 * PI * j as f64 / angular as f64);
        let (n, _, _) = nevanlinna_value(f, w)?;
        let ratio = n / scale;
        if ratio > best.0 {
            best = (ratio, w);
        }
    }
    Ok(best)
}

/// Outcome of checking `N(w) ≤ δ log(1/|w|)` over an outer annulus.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim1Report {
    pub r0: f64,
    pub r1: f64,
    pub delta: f64,
    pub max_ratio: f64,
    pub location: DiscPoint,
    pub violations: usize,
    pub samples: usize,
    /// Largest `|φ(ζ)|` seen on the arc samples.
    pub arc_sup: f64,
}

impl Claim1Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Outer radius of the annulus checked by [`claim1_verify`].
pub const CLAIM1_OUTER: f64 = 1.0 - 1e-3;
const ARC_DENSITY: usize = 4096;

/// Checks `N_φ(w) ≤ δ log(1/|w|) + 1e-9` for `r1 ≤ |w| ≤ 1 - 1e-3`, after
/// confirming `φ(0) = 0` and `|φ| < r0` on the (nonempty) arc.
pub fn claim1_verify(
    phi: &MapExpr,
    arc: &BoundaryArcSet,
    r0: f64,
    r1: f64,
    delta: f64,
    grid: &GridSpec,
) -> Result<Claim1Report, HardyError> {
    check_unit_interval("r0", r0)?;
    check_unit_interval("r1", r1)?;
    check_unit_interval("delta", delta)?;
    let f0 = phi.eval(Complex64::new(0.0, 0.0));
    if f0.norm() > 1e-10 {
        return Err(HardyError::Precondition(format!("map does not fix the origin: f(0) = {f0}")));
    }
    if arc.is_empty() || lebesgue(arc) <= 0.0 {
        return Err(HardyError::Precondition("arc where |f| < r0 is empty".into()));
    }
    let arc_sup = arc.sample_points(ARC_DENSITY).into_iter().map(|z| phi.eval(z).norm()).fold(0.0, f64::max);
    if arc_sup >= r0 {
        return Err(HardyError::Precondition(format!("|f| reaches {arc_sup} >= r0 = {r0} on the arc")));
    }
    let rows: Vec<Vec<(f64, f64, DiscPoint)>> = radii_toward_one(r1, CLAIM1_OUTER, grid.radial)
        .into_par_iter()
        .map(|radius| {
            let scale = (1.0 / radius).ln();
            (0..grid.angular)
                .map(|j| {
                    let w = Complex64::from_polar(radius, 2.0 * PI * j as f64 / grid.angular as f64);
                    nevanlinna_value(phi, w).map(|(n, _, _)| (n, scale, w))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut report = Claim1Report {
        r0,
        r1,
        delta,
        max_ratio: f64::NEG_INFINITY,
        location: Complex64::new(r1, 0.0),
        violations: 0,
        samples: 0,
        arc_sup,
    };
    for (n, scale, w) in rows.into_iter().flatten() {
        report.samples += 1;
        if n > delta * scale + 1e-9 {
            report.violations += 1;
        }
        if n / scale > report.max_ratio {
            report.max_ratio = n / scale;
            report.location = w;
        }
    }
    Ok(report)
}

/// `μ([s, t))` for `dμ = 2u log(1/u) du` on `[0, 1)`.
pub fn shapiro_measure(s: f64, t: f64) -> f64 {
    let anti = |u: f64| if u <= 0.0 { 0.0 } else { 0.5 * u * u - u * u * u.ln() };
    anti(t) - anti(s)
}

const SHAPIRO_SAMPLES: usize = 4096;

/// `sup_{0 ≤ s < r} μ([s, r)) / μ([s, 1))` over a uniform grid in `s`.
///
/// Indicators of `[s, 1)` are the extreme rays of nonnegative increasing
/// functions, so this ratio bounds `∫_[0,r) g dμ / ∫_[0,1) g dμ` for all of them.
pub fn shapiro_gamma(r: f64) -> Result<f64, HardyError> {
    check_unit_interval("r", r)?;
    Ok((0..SHAPIRO_SAMPLES)
        .map(|j| {
            let s = r * j as f64 / SHAPIRO_SAMPLES as f64;
            shapiro_measure(s, r) / shapiro_measure(s, 1.0)
        })
        .fold(0.0, f64::max))
}

/// Bracket on the norm of `g ↦ g∘f` on H²₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpNormEstimate {
    /// Best observed `‖g∘f‖ / ‖g‖` over random test polynomials.
    pub lower: f64,
    /// `min sqrt(γ(r1)(1 - δ(r1)) + δ(r1))` over the inner-radius grid.
    pub upper: f64,
    pub r1: f64,
    pub delta: f64,
    pub gamma: f64,
    /// The ratio sup for the chosen `r1` sits on the outermost grid circle,
    /// so the grid may be too coarse near the boundary.
    pub edge_attained: bool,
}

impl OpNormEstimate {
    pub fn consistent(&self) -> bool {
        self.lower <= self.upper + 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpNormOptions {
    pub trials: usize,
    pub maxdeg: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Inner radii `j / 2^levels`, `0 < j < 2^levels`.
    pub r1_levels: u32,
    pub boundary: usize,
}

impl Default for OpNormOptions {
    fn default() -> Self {
        OpNormOptions { trials: 256, maxdeg: 32, seed: 0, grid: GridSpec::default(), r1_levels: 6, boundary: 4096 }
    }
}

const UPPER_GRID_INNER: f64 = 1e-3;
const UPPER_GRID_OUTER: f64 = 1.0 - 1e-4;

/// Random test polynomial with `g(0) = 0`, degree uniform in `1..=maxdeg` and
/// coefficients uniform on the unit polydisc, normalised to `‖g‖₂ = 1`.
fn random_test_polynomial(rng: &mut ChaCha8Rng, maxdeg: usize) -> HardyFunction {
    let deg = rng.random_range(1..=maxdeg);
    let mut coeffs = vec![Complex64::new(0.0, 0.0)];
    for _ in 0..deg {
        let r = rng.random::<f64>().sqrt();
        coeffs.push(Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>()));
    }
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    HardyFunction::Polynomial(coeffs.into_iter().map(|c| c / norm).collect())
}

pub fn opnorm_h20(f: &MapExpr, trials: usize, maxdeg: usize) -> Result<OpNormEstimate, HardyError> {
    opnorm_h20_with(f, &OpNormOptions { trials, maxdeg, ..OpNormOptions::default() })
}

pub fn opnorm_h20_with(f: &MapExpr, opts: &OpNormOptions) -> Result<OpNormEstimate, HardyError> {
    let f0 = f.eval(Complex64::new(0.0, 0.0));
    if f0.norm() > 1e-10 {
        return Err(HardyError::Precondition(format!("map does not fix the origin: f(0) = {f0}")));
    }
    if opts.trials == 0 || opts.maxdeg == 0 {
        return Err(HardyError::Domain("trials and maxdeg must be positive".into()));
    }
    let lower = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(t as u64);
            let g = random_test_polynomial(&mut rng, opts.maxdeg);
            composition_norm(&g, f, opts.boundary)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let radii = radii_toward_one(UPPER_GRID_INNER, UPPER_GRID_OUTER, opts.grid.radial);
    let rows: Vec<f64> = radii
        .par_iter()
        .map(|&r| ratio_row(f, r, opts.grid.angular).map(|(x, _)| x.min(1.0)))
        .collect::<Result<_, _>>()?;
    // suffix[i] = max ratio over radii[i..].
    let mut suffix = rows.clone();
    for i in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[i] = suffix[i].max(suffix[i + 1]);
    }
    let count = 1usize << opts.r1_levels;
    let candidates: Vec<(f64, f64, f64, bool)> = (1..count)
        .into_par_iter()
        .map(|j| -> Result<_, HardyError> {
            let r1 = j as f64 / count as f64;
            let own = ratio_row(f, r1, opts.grid.angular)?.0.min(1.0);
            let first = radii.partition_point(|&r| r < r1);
            let outer = suffix.get(first).copied().unwrap_or(f64::NEG_INFINITY);
            let delta = own.max(outer).max(0.0);
            let edge = delta < 1.0 && rows.last().is_some_and(|&x| x >= delta) && outer >= own;
            let gamma = shapiro_gamma(r1)?;
            Ok((r1, delta, gamma, edge))
        })
        .collect::<Result<_, _>>()?;
    let value = |&(_, d, g, _): &(f64, f64, f64, bool)| (g * (1.0 - d) + d).sqrt();
    let best = candidates
        .iter()
        .min_by(|a, b| value(a).total_cmp(&value(b)))
        .copied()
        .expect("at least one inner radius");
    Ok(OpNormEstimate {
        lower,
        upper: value(&best),
        r1: best.0,
        delta: best.1,
        gamma: best.2,
        edge_attained: best.3,
    })
}
