//! Sparse block selection and the involution-conjugated blocks
//! `φ̃_k = e_k ∘ φ_k ∘ e_{k-1}` that fix the origin.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{block_decompose, IFSSchedule, IfsError, MarkedIndex};
use crate::geometry::{involution_swapping, DiscPoint, Involution};
use crate::holomap::MapExpr;
use crate::measure::{arc_image, lebesgue, BoundaryArcSet};

/// Grid size for the circle `|z| = 1/2` and for arc samples.
pub const CERT_POINTS: usize = 256;
const ORIGIN_TOL: f64 = 1e-10;

fn half_circle() -> Vec<DiscPoint> {
    (0..CERT_POINTS).map(|j| Complex64::from_polar(0.5, 2.0 * PI * j as f64 / CERT_POINTS as f64)).collect()
}

/// About [`CERT_POINTS`] midpoint samples spread over the arc set.
fn arc_samples(arc: &BoundaryArcSet) -> Vec<DiscPoint> {
    let len = lebesgue(arc);
    if len <= 0.0 {
        return Vec::new();
    }
    arc.sample_points((CERT_POINTS as f64 / len).ceil() as usize)
}

fn sup_modulus(pts: &[DiscPoint]) -> f64 {
    pts.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Radius of a disc containing `e(D(0, 1/2))` for every involution whose fixed
/// point lies in `D(0, 1/2)`.
///
/// The fixed point has modulus below 1/2 exactly when the swapped point `b`
/// has modulus below 4/5, and `|e(z)|` depends only on `|b|` and the angle
/// between `b` and `z`, so a grid over `|b| ∈ [0, 4/5]` and one angle suffices.
/// A margin of 1e-6 is added to the grid maximum.
pub fn certified_r0() -> f64 {
    const RADII: usize = 160;
    const ANGLES: usize = 1440;
    let mut best: f64 = 0.0;
    for i in 0..=RADII {
        let b = Complex64::new(0.8 * i as f64 / RADII as f64, 0.0);
        for j in 0..ANGLES {
            let z = Complex64::from_polar(0.5, 2.0 * PI * j as f64 / ANGLES as f64);
            best = best.max(((b - z) / (1.0 - b.conj() * z)).norm());
        }
    }
    best + 1e-6
}

/// Grid evidence that a block satisfies the two selection conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCertificate {
    pub block: usize,
    pub start: usize,
    pub end: usize,
    /// `max |φ_k(z)|` over [`CERT_POINTS`] points of `|z| = 1/2`.
    pub grid_sup: f64,
    /// `max |φ_k(ζ)|` over samples of the marked arc `E_k`.
    pub arc_sup: f64,
    pub arc_points: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSelection {
    /// `n_1 < ⋯ < n_{K+1}`, all marked.
    pub indices: Vec<usize>,
    pub certificates: Vec<BlockCertificate>,
}

/// Greedily picks marked indices so that each block `φ_k` maps the circle
/// `|z| = 1/2` into `D(0, 1/2 - margin)` and its arc `E_k` into `D(0, 1/2)`.
/// Stops after `count` blocks; fails if `horizon` is reached first.
pub fn select_sparse_blocks(
    s: &IFSSchedule,
    margin: f64,
    count: usize,
    horizon: usize,
) -> Result<BlockSelection, IfsError> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(IfsError::Invalid(format!("margin {margin} must lie in (0, 1/2)")));
    }
    if count == 0 {
        return Err(IfsError::Invalid("block count must be positive".into()));
    }
    let horizon = s.len().map_or(horizon, |n| n.min(horizon));
    let marked = s.marked(horizon);
    let first = marked.first().ok_or_else(|| IfsError::Invalid("schedule has no marked indices".into()))?;
    let mut indices = vec![first.index];
    let mut certificates = Vec::new();
    let mut current: &MarkedIndex = first;
    while certificates.len() < count {
        let start = current.index;
        let mut grid = half_circle();
        let arc = arc_samples(&current.arc);
        let mut on_arc = arc.clone();
        let mut n = start;
        let mut next = None;
        for candidate in marked.iter().filter(|m| m.index > start) {
            while n < candidate.index {
                let f = s.map(n)?;
                grid.iter_mut().for_each(|z| *z = f.eval(*z));
                on_arc.iter_mut().for_each(|z| *z = f.eval(*z));
                n += 1;
            }
            let (grid_sup, arc_sup) = (sup_modulus(&grid), sup_modulus(&on_arc));
            if grid_sup < 0.5 - margin && arc_sup < 0.5 {
                certificates.push(BlockCertificate {
                    block: certificates.len() + 1,
                    start,
                    end: candidate.index,
                    grid_sup,
                    arc_sup,
                    arc_points: arc.len(),
                    margin,
                });
                next = Some(candidate);
                break;
            }
        }
        let Some(next) = next else {
            return Err(IfsError::Exhausted { start, horizon });
        };
        indices.push(next.index);
        current = next;
    }
    Ok(BlockSelection { indices, certificates })
}

/// Per-block verification results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockChecks {
    /// `e_k(0) = Φ_k(0)` lies in `D(0, 1/2)`.
    pub half_disc_contraction: bool,
    /// `|φ̃_k| < r0` on the samples of `e_{k-1}(E_k)`.
    pub boundary_smallness: bool,
    pub fixed_origin_residual: f64,
    /// `|e_k(0) - φ_k ∘ ⋯ ∘ φ_1(0)|` with the right side composed directly.
    pub telescoping_residual: f64,
    /// `max |φ_k|` on `|z| = 1/2`; below 1/2 when the block maps the closed
    /// half disc into itself.
    pub half_disc_sup: f64,
    pub boundary_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedBlock {
    pub k: usize,
    pub start: usize,
    pub end: usize,
    pub phi: MapExpr,
    pub e: Involution,
    pub w: DiscPoint,
    pub phi_tilde: MapExpr,
    /// `e_{k-1}(E_k)`, or `E_1` for the first block.
    pub arc: BoundaryArcSet,
    pub checks: BlockChecks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrace {
    pub indices: Vec<usize>,
    /// `f_{n_1 - 1} ∘ ⋯ ∘ f_1`.
    pub head: MapExpr,
    pub blocks: Vec<PerturbedBlock>,
    pub r0: f64,
    pub c: f64,
}

impl PerturbationTrace {
    /// Number of blocks fully applied by step `m`.
    pub fn blocks_before(&self, m: usize) -> usize {
        self.blocks.iter().take_while(|b| b.end <= m + 1).count()
    }
}

fn marked_at(s: &IFSSchedule, index: usize) -> Result<MarkedIndex, IfsError> {
    s.marked(index).into_iter().find(|m| m.index == index).ok_or_else(|| IfsError::Marking {
        index,
        inequality: "index is not marked".into(),
    })
}

pub fn build_perturbation(s: &IFSSchedule, indices: &[usize]) -> Result<PerturbationTrace, IfsError> {
    let decomposition = block_decompose(s, indices)?;
    let r0 = certified_r0();
    let origin = Complex64::new(0.0, 0.0);
    let mut blocks: Vec<PerturbedBlock> = Vec::with_capacity(decomposition.blocks.len());
    let mut direct = origin;
    for (i, phi) in decomposition.blocks.into_iter().enumerate() {
        let k = i + 1;
        let marked = marked_at(s, indices[i])?;
        let prev = blocks.last().map(|b| b.e);
        let b = phi.eval(prev.map_or(origin, |e| e.eval(origin)));
        direct = phi.eval(direct);
        if b.norm() >= 0.5 {
            return Err(IfsError::Assumption { block: k, inequality: format!("|e_k(0)| = {} is not below 1/2", b.norm()) });
        }
        let e = involution_swapping(b)?;
        let phi_tilde = match prev {
            None => MapExpr::compose(e.to_map(), phi.clone()),
            Some(p) => MapExpr::compose_all(vec![e.to_map(), phi.clone(), p.to_map()])?,
        };
        let fixed_origin_residual = phi_tilde.eval(origin).norm();
        if fixed_origin_residual > ORIGIN_TOL {
            return Err(IfsError::Assumption {
                block: k,
                inequality: format!("|φ̃_k(0)| = {fixed_origin_residual:e} exceeds {ORIGIN_TOL:e}"),
            });
        }
        let arc = match prev {
            None => marked.arc.clone(),
            Some(p) => arc_image(&p, &marked.arc),
        };
        let boundary_sup = arc_samples(&arc).into_iter().map(|z| phi_tilde.eval(z).norm()).fold(0.0, f64::max);
        if boundary_sup >= r0 {
            return Err(IfsError::Assumption {
                block: k,
                inequality: format!("|φ̃_k| reaches {boundary_sup} >= r0 = {r0} on e_(k-1)(E_k)"),
            });
        }
        let half_disc_sup = half_circle().into_iter().map(|z| phi.eval(z).norm()).fold(0.0, f64::max);
        blocks.push(PerturbedBlock {
            k,
            start: indices[i],
            end: indices[i + 1],
            w: e.w,
            checks: BlockChecks {
                half_disc_contraction: true,
                boundary_smallness: true,
                fixed_origin_residual,
                telescoping_residual: (e.eval(origin) - direct).norm(),
                half_disc_sup,
                boundary_sup,
            },
            phi,
            e,
            phi_tilde,
            arc,
        });
    }
    Ok(PerturbationTrace { indices: indices.to_vec(), head: decomposition.head, blocks, r0, c: s.c })
}

fn last_block(trace: &PerturbationTrace, m: usize) -> Result<&PerturbedBlock, IfsError> {
    let k = trace.blocks_before(m);
    if k == 0 {
        let first_end = trace.blocks.first().map_or(0, |b| b.end);
        return Err(IfsError::Invalid(format!("m = {m} ends before the first block (needs m >= {})", first_end - 1)));
    }
    Ok(&trace.blocks[k - 1])
}

/// `F_m(z)` evaluated as `tail ∘ e_k ∘ φ̃_k ∘ ⋯ ∘ φ̃_1 ∘ head`, where `k`
/// counts the blocks completed by step `m`.
pub fn factorized_f(s: &IFSSchedule, trace: &PerturbationTrace, m: usize, z: DiscPoint) -> Result<DiscPoint, IfsError> {
    let last = last_block(trace, m)?;
    let mut z = trace.head.eval(z);
    for b in &trace.blocks[..last.k] {
        z = b.phi_tilde.eval(z);
    }
    s.apply_range(last.end, m, last.e.eval(z))
}

/// The involution `g_m` swapping 0 with `f_m ∘ ⋯ ∘ f_{n_{k+1}} ∘ e_k(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endgame {
    pub m: usize,
    pub k: usize,
    pub b: DiscPoint,
    pub g: Involution,
}

pub fn endgame_automorphism(s: &IFSSchedule, trace: &PerturbationTrace, m: usize) -> Result<Endgame, IfsError> {
    let last = last_block(trace, m)?;
    let b = s.apply_range(last.end, m, last.e.eval(Complex64::new(0.0, 0.0)))?;
    Ok(Endgame { m, k: last.k, b, g: involution_swapping(b)? })
}

#[cfg(test)]
mod tests {
    use super::super::tests::mixed_cycle;
    use super::super::{left_orbit, Generator, Marking};
    use super::*;
    use crate::hardy::{claim1_delta, claim1_verify, default_r1, GridSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn affine(a: f64, b: Complex64) -> MapExpr {
        MapExpr::affine(c(a, 0.0), b).unwrap()
    }

    fn marked_list(maps: Vec<MapExpr>, marks: &[usize]) -> IFSSchedule {
        let marks = marks
            .iter()
            .map(|&index| MarkedIndex { index, arc: BoundaryArcSet::full(), bound: 0.95 })
            .collect();
        IFSSchedule::new(Generator::List(maps)).with_marking(Marking::Indices(marks), 0.5)
    }

    /// Shifts decay so the orbit still tends to 0 while every block moves 0.
    fn drifting_list() -> IFSSchedule {
        let mut maps = Vec::new();
        for (k, shift) in [c(0.2, 0.0), c(0.0, 0.1), c(-0.05, 0.0), c(0.02, 0.01)].into_iter().enumerate() {
            if k == 0 {
                maps.push(MapExpr::Power(2));
            }
            maps.extend([affine(0.5, shift), MapExpr::Power(2), MapExpr::Power(2)]);
        }
        marked_list(maps, &[2, 5, 8, 11])
    }

    #[test]
    fn r0_matches_extreme_involution() {
        let r0 = certified_r0();
        assert!((r0 - (13.0 / 14.0 + 1e-6)).abs() < 1e-9, "{r0}");
        // Random admissible involutions stay inside D(0, r0) on |z| = 1/2.
        for i in 0..200 {
            let b = Complex64::from_polar(0.799 * ((i * 37 % 200) as f64 / 200.0), 0.1 * i as f64);
            let e = involution_swapping(b).unwrap();
            assert!(e.w.norm() < 0.5);
            for j in 0..64 {
                let z = Complex64::from_polar(0.5, 0.3 + 2.0 * PI * j as f64 / 64.0);
                assert!(e.eval(z).norm() < r0);
            }
        }
    }

    #[test]
    fn contracting_schedule_singleton_blocks() {
        let s = IFSSchedule::new(Generator::Cycle(vec![affine(0.45, c(0.0, 0.0))]))
            .with_marking(Marking::Every { period: 1, offset: 1, arc: BoundaryArcSet::full(), bound: 0.6 }, 0.5);
        let sel = select_sparse_blocks(&s, 0.1, 5, 100).unwrap();
        assert_eq!(sel.indices, vec![1, 2, 3, 4, 5, 6]);
        for cert in &sel.certificates {
            assert!((cert.grid_sup - 0.225).abs() < 1e-15);
            assert!((cert.arc_sup - 0.45).abs() < 1e-15);
        }
        // z/2 passes the half-circle test alone but sends the circle onto
        // |z| = 1/2 exactly, so the strict arc test needs two steps.
        let s = IFSSchedule::new(Generator::Cycle(vec![affine(0.5, c(0.0, 0.0))]))
            .with_marking(Marking::Every { period: 1, offset: 1, arc: BoundaryArcSet::full(), bound: 0.6 }, 0.5);
        let sel = select_sparse_blocks(&s, 0.1, 2, 100).unwrap();
        assert_eq!(sel.indices, vec![1, 3, 5]);
    }

    #[test]
    fn blocks_extend_past_rotations() {
        let rot = MapExpr::automorphism(1.0, c(0.0, 0.0)).unwrap();
        let s = IFSSchedule::new(Generator::Cycle(vec![affine(0.9, c(0.0, 0.0)), rot]))
            .with_marking(Marking::Every { period: 2, offset: 1, arc: BoundaryArcSet::full(), bound: 0.95 }, 0.5);
        let sel = select_sparse_blocks(&s, 0.05, 2, 200).unwrap();
        // 0.5 · 0.9^j < 0.45 first at j = 2 and |0.9^j| < 1/2 first at j = 7.
        assert_eq!(sel.indices, vec![1, 15, 29]);
        let manual: f64 = (1..=7).fold(0.5, |r, _| r * 0.9);
        assert!((sel.certificates[0].grid_sup - manual).abs() < 1e-14);
    }

    #[test]
    fn infeasible_margin_exhausts() {
        let s = marked_list(vec![affine(0.5, c(0.0, 0.0)); 3], &[1, 2, 3]);
        assert!(matches!(select_sparse_blocks(&s, 0.4, 1, 10), Err(IfsError::Exhausted { start: 1, .. })));
        assert!(select_sparse_blocks(&s, 0.1, 1, 10).is_ok());
        assert!(matches!(select_sparse_blocks(&s, 0.5, 1, 10), Err(IfsError::Invalid(_))));
    }

    #[test]
    fn single_affine_block() {
        let s = marked_list(vec![affine(0.5, c(0.25, 0.0)), affine(0.5, c(0.0, 0.0))], &[1, 2]);
        let trace = build_perturbation(&s, &[1, 2]).unwrap();
        let b = &trace.blocks[0];
        assert_eq!(b.e.eval(c(0.0, 0.0)), c(0.25, 0.0));
        assert_eq!(b.e.eval(c(0.25, 0.0)), c(0.0, 0.0));
        assert_eq!(b.phi_tilde.eval(c(0.0, 0.0)), c(0.0, 0.0));
        assert!(b.w.norm() < 0.5);
    }

    #[test]
    fn degenerate_involution_is_negation() {
        let trace = build_perturbation(&mixed_cycle(), &[3, 6, 9]).unwrap();
        for b in &trace.blocks {
            assert_eq!(b.e.b, c(0.0, 0.0));
            let z = c(0.3, -0.2);
            assert_eq!(b.e.eval(z), -z);
        }
    }

    #[test]
    fn telescoping_on_drifting_schedule() {
        let s = drifting_list();
        let sel = select_sparse_blocks(&s, 0.05, 3, 100).unwrap();
        assert_eq!(sel.indices, vec![2, 5, 8, 11]);
        let trace = build_perturbation(&s, &sel.indices).unwrap();
        for b in &trace.blocks {
            // Φ_k(0) recomposed straight from the schedule.
            let oracle = s.apply_range(sel.indices[0], b.end - 1, c(0.0, 0.0)).unwrap();
            assert!((b.e.eval(c(0.0, 0.0)) - oracle).norm() < 1e-10);
            assert!(oracle.norm() > 0.0);
            assert!(b.checks.fixed_origin_residual < 1e-10);
            assert!(b.w.norm() < 0.5);
        }
    }

    #[test]
    fn factorization_identity() {
        for (s, sel) in [(mixed_cycle(), vec![3, 6, 9, 12]), (drifting_list(), vec![2, 5, 8, 11])] {
            let trace = build_perturbation(&s, &sel).unwrap();
            for m in sel[1] - 1..sel[1] + 9 {
                for j in 0..100 {
                    let z = Complex64::from_polar(if j % 2 == 0 { 1.0 } else { 0.7 }, 0.0631 * j as f64);
                    let direct = *left_orbit(&s, z, m).unwrap().last().unwrap();
                    let via = factorized_f(&s, &trace, m, z).unwrap();
                    assert!((direct - via).norm() < 1e-10, "m={m} z={z}: {direct} vs {via}");
                }
                let direct0 = *left_orbit(&s, c(0.0, 0.0), m).unwrap().last().unwrap();
                assert!((factorized_f(&s, &trace, m, c(0.0, 0.0)).unwrap() - direct0).norm() < 1e-12);
            }
            assert!(factorized_f(&s, &trace, sel[1] - 2, c(0.0, 0.0)).is_err());
        }
    }

    #[test]
    fn endgame_properties() {
        let s = drifting_list();
        let trace = build_perturbation(&s, &[2, 5, 8, 11]).unwrap();
        let mut sizes = Vec::new();
        // Past the last block only squarings act on e_3(0).
        for m in 11..=13 {
            let end = endgame_automorphism(&s, &trace, m).unwrap();
            assert!(end.g.eval(end.b).norm() < 1e-15);
            sizes.push(end.b.norm());
            for j in 0..16 {
                let z = Complex64::from_polar(0.6, j as f64);
                assert!((end.g.eval(end.g.eval(z)) - z).norm() < 1e-14);
            }
        }
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]), "{sizes:?}");
        let trivial = build_perturbation(&mixed_cycle(), &[3, 6]).unwrap();
        let end = endgame_automorphism(&mixed_cycle(), &trivial, 5).unwrap();
        assert_eq!(end.b, c(0.0, 0.0));
        assert_eq!(end.g.eval(c(0.2, 0.1)), c(-0.2, -0.1));
    }

    #[test]
    fn claim1_holds_on_perturbed_blocks() {
        for (s, sel) in [(mixed_cycle(), vec![3, 6, 9]), (drifting_list(), vec![2, 5, 8, 11])] {
            let trace = build_perturbation(&s, &sel).unwrap();
            let delta = claim1_delta(trace.c, trace.r0).unwrap();
            for b in &trace.blocks {
                let report = claim1_verify(&b.phi_tilde, &b.arc, trace.r0, default_r1(), delta, &GridSpec {
                    radial: 32,
                    angular: 64,
                })
                .unwrap();
                assert!(report.passed(), "{report:?}");
            }
        }
    }
}
