//! Left iterated function systems `F_n = f_n ∘ ⋯ ∘ f_1` and the block
//! perturbation scheme built on top of them.

mod perturb;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{DiscPoint, GeometryError};
use crate::hardy::HardyError;
use crate::holomap::{MapError, MapExpr};
use crate::measure::{lebesgue, BoundaryArcSet};

pub use perturb::{
    build_perturbation, certified_r0, endgame_automorphism, factorized_f, select_sparse_blocks, BlockCertificate,
    BlockChecks, BlockSelection, Endgame, PerturbationTrace, PerturbedBlock, CERT_POINTS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IfsError {
    #[error("index {index} outside the schedule (length {len})")]
    Index { index: usize, len: usize },
    #[error("schedule indices are 1-based")]
    ZeroIndex,
    #[error("indices must be strictly increasing: {0:?}")]
    NotIncreasing(Vec<usize>),
    #[error("at least two indices are needed to form a block, got {0}")]
    TooFewIndices(usize),
    #[error("schedule has no maps")]
    EmptySchedule,
    #[error("block {block}: {inequality}")]
    Assumption { block: usize, inequality: String },
    #[error("marked index {index}: {inequality}")]
    Marking { index: usize, inequality: String },
    #[error("no admissible block found starting at {start} before index {horizon}")]
    Exhausted { start: usize, horizon: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hardy(#[from] HardyError),
}

/// How the maps `f_1, f_2, …` are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Finite explicit list.
    List(Vec<MapExpr>),
    /// Repeats the pattern forever.
    Cycle(Vec<MapExpr>),
    /// `f_n` drawn uniformly from `family`; the draw for `n` depends only on
    /// `(seed, n)`.
    Random { seed: u64, family: Vec<MapExpr> },
}

/// A marked index `n_k` with its arc `E_k` and bound `|f_{n_k}| < δ_k` on it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedIndex {
    pub index: usize,
    pub arc: BoundaryArcSet,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Marking {
    None,
    Indices(Vec<MarkedIndex>),
    /// Indices `offset, offset + period, …` sharing one arc and bound.
    Every { period: usize, offset: usize, arc: BoundaryArcSet, bound: f64 },
    /// Every index whose map stays below `bound` on sampled points of `arc`.
    Auto { arc: BoundaryArcSet, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IFSSchedule {
    pub generator: Generator,
    pub marking: Marking,
    /// Lower bound on the measure of every marked arc.
    pub c: f64,
}

/// Boundary samples per marked arc when checking `|f_{n_k}| < δ_k`.
const MARK_DENSITY: usize = 1024;

impl IFSSchedule {
    pub fn new(generator: Generator) -> Self {
        IFSSchedule { generator, marking: Marking::None, c: 0.5 }
    }

    pub fn with_marking(mut self, marking: Marking, c: f64) -> Self {
        self.marking = marking;
        self.c = c;
        self
    }

    /// Number of maps, or `None` for unbounded generators.
    pub fn len(&self) -> Option<usize> {
        match &self.generator {
            Generator::List(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.generator {
            Generator::List(v) | Generator::Cycle(v) => v.is_empty(),
            Generator::Random { family, .. } => family.is_empty(),
        }
    }

    /// `f_n`, 1-based.
    pub fn map(&self, n: usize) -> Result<&MapExpr, IfsError> {
        if n == 0 {
            return Err(IfsError::ZeroIndex);
        }
        match &self.generator {
            Generator::List(v) => v.get(n - 1).ok_or(IfsError::Index { index: n, len: v.len() }),
            Generator::Cycle(v) if !v.is_empty() => Ok(&v[(n - 1) % v.len()]),
            Generator::Random { seed, family } if !family.is_empty() => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(n as u64);
                Ok(&family[rng.random_range(0..family.len())])
            }
            _ => Err(IfsError::EmptySchedule),
        }
    }

    /// `f_to ∘ ⋯ ∘ f_from` as an expression tree; the identity when `to < from`.
    pub fn segment(&self, from: usize, to: usize) -> Result<MapExpr, IfsError> {
        if to < from {
            return Ok(MapExpr::identity());
        }
        let mut parts = Vec::with_capacity(to - from + 1);
        for n in (from..=to).rev() {
            parts.push(self.map(n)?.clone());
        }
        Ok(MapExpr::compose_all(parts)?)
    }

    /// Applies `f_from`, then `f_{from+1}`, up to `f_to`.
    pub fn apply_range(&self, from: usize, to: usize, z: DiscPoint) -> Result<DiscPoint, IfsError> {
        let mut z = z;
        for n in from..=to {
            z = self.map(n)?.eval(z);
        }
        Ok(z)
    }

    /// Marked indices up to and including `horizon`.
    pub fn marked(&self, horizon: usize) -> Vec<MarkedIndex> {
        match &self.marking {
            Marking::None => Vec::new(),
            Marking::Indices(v) => v.iter().filter(|m| m.index <= horizon).cloned().collect(),
            Marking::Every { period, offset, arc, bound } => (0..)
                .map(|j| offset + j * period)
                .take_while(|&n| n <= horizon)
                .map(|index| MarkedIndex { index, arc: arc.clone(), bound: *bound })
                .collect(),
            Marking::Auto { arc, bound } => {
                let pts = arc.sample_points(MARK_DENSITY);
                (1..=horizon)
                    .filter(|&n| {
                        !pts.is_empty()
                            && self.map(n).is_ok_and(|f| pts.iter().all(|z| f.eval(*z).norm() < *bound))
                    })
                    .map(|index| MarkedIndex { index, arc: arc.clone(), bound: *bound })
                    .collect()
            }
        }
    }

    /// Checks the maps, `c ∈ (0, 1)`, and for every marked index up to
    /// `horizon` that `ℓ(E_k) > c` and `|f_{n_k}| < δ_k < 1` on arc samples.
    pub fn validate(&self, horizon: usize) -> Result<(), IfsError> {
        if self.is_empty() {
            return Err(IfsError::EmptySchedule);
        }
        match &self.generator {
            Generator::List(v) | Generator::Cycle(v) => v.iter().try_for_each(|f| f.validate())?,
            Generator::Random { family, .. } => family.iter().try_for_each(|f| f.validate())?,
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(IfsError::Invalid(format!("c = {} must lie in (0, 1)", self.c)));
        }
        if let Marking::Every { period: 0, .. } | Marking::Every { offset: 0, .. } = self.marking {
            return Err(IfsError::Invalid("marking period and offset must be positive".into()));
        }
        if let Marking::Indices(v) = &self.marking {
            if v.windows(2).any(|w| w[0].index >= w[1].index) {
                return Err(IfsError::NotIncreasing(v.iter().map(|m| m.index).collect()));
            }
        }
        let horizon = self.len().map_or(horizon, |n| n.min(horizon));
        for m in self.marked(horizon) {
            let measure = lebesgue(&m.arc);
            if measure <= self.c {
                return Err(IfsError::Marking {
                    index: m.index,
                    inequality: format!("arc measure {measure} does not exceed c = {}", self.c),
                });
            }
            if !(m.bound > 0.0 && m.bound < 1.0) {
                return Err(IfsError::Marking { index: m.index, inequality: format!("bound {} not in (0, 1)", m.bound) });
            }
            let f = self.map(m.index)?;
            let sup = m.arc.sample_points(MARK_DENSITY).into_iter().map(|z| f.eval(z).norm()).fold(0.0, f64::max);
            if sup >= m.bound {
                return Err(IfsError::Marking {
                    index: m.index,
                    inequality: format!("|f| reaches {sup} >= bound {} on the arc", m.bound),
                });
            }
        }
        Ok(())
    }
}

/// `F_1(z), …, F_n(z)`.
pub fn left_orbit(s: &IFSSchedule, z: DiscPoint, n: usize) -> Result<Vec<DiscPoint>, IfsError> {
    let mut out = Vec::with_capacity(n);
    let mut z = z;
    for k in 1..=n {
        z = s.map(k)?.eval(z);
        out.push(z);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitStatus {
    Converged(DiscPoint),
    Undecided { spread: f64, increment: f64 },
    /// The spread over the grid grew between the midpoint and the end.
    Diverging { spread: f64 },
}

impl LimitStatus {
    pub fn limit(&self) -> Option<DiscPoint> {
        match self {
            LimitStatus::Converged(z) => Some(*z),
            _ => None,
        }
    }
}

const LIMIT_GRID: usize = 32;

/// Decides whether `F_n` is uniformly within `tol` of the constant `F_n(0)`
/// on `D(0, rho)`, using a 32 × 32 polar grid.
pub fn locally_uniform_limit(s: &IFSSchedule, rho: f64, n: usize, tol: f64) -> Result<LimitStatus, IfsError> {
    if !(rho > 0.0 && rho < 1.0) || n == 0 || tol <= 0.0 {
        return Err(IfsError::Invalid(format!("need rho in (0, 1), n >= 1, tol > 0; got {rho}, {n}, {tol}")));
    }
    let mut pts: Vec<DiscPoint> = vec![Complex64::new(0.0, 0.0)];
    for i in 1..=LIMIT_GRID {
        for j in 0..LIMIT_GRID {
            pts.push(Complex64::from_polar(rho * i as f64 / LIMIT_GRID as f64, 2.0 * PI * j as f64 / LIMIT_GRID as f64));
        }
    }
    let spread = |pts: &[DiscPoint]| pts[1..].iter().map(|z| (z - pts[0]).norm()).fold(0.0, f64::max);
    let mut mid_spread = spread(&pts);
    let mut prev_centre = pts[0];
    for k in 1..=n {
        let f = s.map(k)?;
        prev_centre = pts[0];
        for z in pts.iter_mut() {
            *z = f.eval(*z);
        }
        if k == n.div_ceil(2) {
            mid_spread = spread(&pts);
        }
    }
    let end_spread = spread(&pts);
    let increment = (pts[0] - prev_centre).norm();
    if end_spread < tol && increment < tol {
        Ok(LimitStatus::Converged(pts[0]))
    } else if end_spread > mid_spread + tol {
        Ok(LimitStatus::Diverging { spread: end_spread })
    } else {
        Ok(LimitStatus::Undecided { spread: end_spread, increment })
    }
}

/// `F_m` split at indices `n_1 < ⋯ < n_{K+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub indices: Vec<usize>,
    /// `f_{n_1 - 1} ∘ ⋯ ∘ f_1`.
    pub head: MapExpr,
    /// `φ_k = f_{n_{k+1} - 1} ∘ ⋯ ∘ f_{n_k}`.
    pub blocks: Vec<MapExpr>,
}

pub fn block_decompose(s: &IFSSchedule, indices: &[usize]) -> Result<BlockDecomposition, IfsError> {
    if indices.len() < 2 {
        return Err(IfsError::TooFewIndices(indices.len()));
    }
    if indices[0] == 0 {
        return Err(IfsError::ZeroIndex);
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IfsError::NotIncreasing(indices.to_vec()));
    }
    if let Some(len) = s.len() {
        let last = indices[indices.len() - 1] - 1;
        if last > len {
            return Err(IfsError::Index { index: last, len });
        }
    }
    let head = s.segment(1, indices[0] - 1)?;
    let blocks = indices.windows(2).map(|w| s.segment(w[0], w[1] - 1)).collect::<Result<_, _>>()?;
    Ok(BlockDecomposition { indices: indices.to_vec(), head, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::geometry::hyperbolic_distance;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> MapExpr {
        MapExpr::affine(c(0.5, 0.0), c(0.0, 0.0)).unwrap()
    }

    pub(crate) fn mixed_cycle() -> IFSSchedule {
        IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2), MapExpr::Power(2), half()])).with_marking(
            Marking::Every { period: 3, offset: 3, arc: BoundaryArcSet::full(), bound: 0.6 },
            0.5,
        )
    }

    #[test]
    fn orbit_of_halving() {
        let s = IFSSchedule::new(Generator::Cycle(vec![half()]));
        let orbit = left_orbit(&s, c(1.0, 0.0), 10).unwrap();
        for (k, z) in orbit.iter().enumerate() {
            assert_eq!(*z, c(0.5f64.powi(k as i32 + 1), 0.0));
        }
    }

    #[test]
    fn inner_orbits_stay_on_circle() {
        let s = IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2)]));
        for t in [0.1, 1.0, 2.5, 5.9] {
            for z in left_orbit(&s, Complex64::from_polar(1.0, t), 60).unwrap() {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orbit_matches_manual_composition() {
        let s = IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2), half()]));
        let orbit = left_orbit(&s, c(0.9, 0.0), 6).unwrap();
        let mut z = c(0.9, 0.0);
        let manual: Vec<Complex64> = (0..6)
            .map(|k| {
                z = if k % 2 == 0 { z * z } else { z * 0.5 };
                z
            })
            .collect();
        assert_eq!(orbit, manual);
        let f = s.segment(1, 6).unwrap();
        assert!((f.eval(c(0.9, 0.0)) - orbit[5]).norm() < 1e-15);
    }

    #[test]
    fn list_bounds_and_random_determinism() {
        let s = IFSSchedule::new(Generator::List(vec![half()]));
        assert_eq!(s.map(2), Err(IfsError::Index { index: 2, len: 1 }));
        assert_eq!(s.map(0), Err(IfsError::ZeroIndex));
        let family = vec![half(), MapExpr::Power(2), MapExpr::Power(3)];
        let r = IFSSchedule::new(Generator::Random { seed: 9, family: family.clone() });
        let again = IFSSchedule::new(Generator::Random { seed: 9, family });
        let picks: Vec<_> = (1..50).map(|n| r.map(n).unwrap().clone()).collect();
        assert!((1..50).all(|n| again.map(n).unwrap() == &picks[n - 1]));
        assert!(picks.iter().any(|f| f == &MapExpr::Power(3)));
    }

    #[test]
    fn auto_marking_finds_non_inner_steps() {
        let s = IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2), MapExpr::Power(2), half()]))
            .with_marking(Marking::Auto { arc: BoundaryArcSet::full(), bound: 0.6 }, 0.5);
        let idx: Vec<usize> = s.marked(12).iter().map(|m| m.index).collect();
        assert_eq!(idx, vec![3, 6, 9, 12]);
        s.validate(12).unwrap();
    }

    #[test]
    fn validation() {
        mixed_cycle().validate(30).unwrap();
        let bad = IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2)])).with_marking(
            Marking::Every { period: 1, offset: 1, arc: BoundaryArcSet::full(), bound: 0.9 },
            0.5,
        );
        assert!(matches!(bad.validate(5), Err(IfsError::Marking { index: 1, .. })));
        let small_arc = BoundaryArcSet::from_intervals(&[(0.0, 1.0)]).unwrap();
        let bad = IFSSchedule::new(Generator::Cycle(vec![half()]))
            .with_marking(Marking::Every { period: 1, offset: 1, arc: small_arc, bound: 0.9 }, 0.5);
        assert!(matches!(bad.validate(5), Err(IfsError::Marking { .. })));
    }

    #[test]
    fn limit_of_affine_schedule() {
        let s = IFSSchedule::new(Generator::Cycle(vec![MapExpr::affine(c(0.5, 0.0), c(0.25, 0.0)).unwrap()]));
        let z0 = locally_uniform_limit(&s, 0.9, 60, 1e-12).unwrap().limit().unwrap();
        assert!((z0 - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotations_are_undecided() {
        let s = IFSSchedule::new(Generator::Cycle(vec![MapExpr::automorphism(0.7, c(0.0, 0.0)).unwrap()]));
        assert!(matches!(locally_uniform_limit(&s, 0.5, 100, 1e-6).unwrap(), LimitStatus::Undecided { .. }));
    }

    #[test]
    fn limit_of_perturbed_family() {
        // Perturbations of z/2 + 0.1 (fixed point 0.2) decaying like 2^-n;
        // the long-run orbit of an unrelated point is the oracle.
        let maps: Vec<MapExpr> = (1..=200)
            .map(|n| {
                let eps = 0.3 * 0.5f64.powi(n);
                MapExpr::affine(c(0.5 - eps, 0.0), c(0.1 + eps, 0.0)).unwrap()
            })
            .collect();
        let s = IFSSchedule::new(Generator::List(maps));
        let z0 = locally_uniform_limit(&s, 0.9, 200, 1e-10).unwrap().limit().unwrap();
        let oracle = *left_orbit(&s, c(-0.3, 0.4), 200).unwrap().last().unwrap();
        assert!((z0 - oracle).norm() < 1e-10);
        assert!((z0 - c(0.2, 0.0)).norm() < 1e-2);
    }

    #[test]
    fn decomposition_reproduces_composition() {
        let s = IFSSchedule::new(Generator::List(vec![
            MapExpr::Power(2),
            half(),
            MapExpr::blaschke(0.3, vec![(c(0.2, 0.1), 1)]).unwrap(),
            MapExpr::affine(c(0.3, 0.2), c(0.1, -0.1)).unwrap(),
        ]));
        let d = block_decompose(&s, &[2, 3, 5]).unwrap();
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(d.blocks[0], half());
        for k in 0..100 {
            let z = Complex64::from_polar(0.99 * (k as f64 / 100.0), 0.37 * k as f64);
            let direct = *left_orbit(&s, z, 4).unwrap().last().unwrap();
            let via = d.blocks[1].eval(d.blocks[0].eval(d.head.eval(z)));
            assert!((direct - via).norm() < 1e-12);
        }
        let consecutive = block_decompose(&s, &[1, 2, 3, 4]).unwrap();
        for (k, b) in consecutive.blocks.iter().enumerate() {
            assert_eq!(b, s.map(k + 1).unwrap());
        }
        assert_eq!(block_decompose(&s, &[]), Err(IfsError::TooFewIndices(0)));
        assert!(matches!(block_decompose(&s, &[3, 2]), Err(IfsError::NotIncreasing(_))));
        assert!(matches!(block_decompose(&s, &[2, 7]), Err(IfsError::Index { .. })));
    }

    #[test]
    fn schwarz_pick_monotonicity() {
        let s = IFSSchedule::new(Generator::Random {
            seed: 4,
            family: vec![
                MapExpr::blaschke(0.0, vec![(c(0.3, 0.1), 1), (c(-0.2, 0.4), 1)]).unwrap(),
                MapExpr::affine(c(0.6, 0.2), c(0.1, 0.0)).unwrap(),
                MapExpr::automorphism(1.0, c(0.2, -0.3)).unwrap(),
            ],
        });
        let (a, b) = (c(0.3, 0.2), c(-0.5, 0.1));
        let oa = left_orbit(&s, a, 30).unwrap();
        let ob = left_orbit(&s, b, 30).unwrap();
        let mut last = hyperbolic_distance(a, b).unwrap();
        for (x, y) in oa.iter().zip(&ob) {
            let d = hyperbolic_distance(*x, *y).unwrap();
            assert!(d <= last + 1e-10);
            last = d;
        }
    }

    proptest! {
        #[test]
        fn prop_orbit_distances_never_grow(seed in any::<u64>(), r1 in 0.0..0.95f64, r2 in 0.0..0.95f64, t in 0.0..6.28f64) {
            let s = IFSSchedule::new(Generator::Random {
                seed,
                family: vec![
                    MapExpr::Power(2),
                    half(),
                    MapExpr::automorphism(1.0, c(0.3, 0.2)).unwrap(),
                    MapExpr::blaschke(0.4, vec![(c(0.2, -0.5), 1), (c(-0.3, 0.0), 2)]).unwrap(),
                ],
            });
            let (z, w) = (Complex64::from_polar(r1, t), Complex64::from_polar(r2, -t));
            let (oz, ow) = (left_orbit(&s, z, 30).unwrap(), left_orbit(&s, w, 30).unwrap());
            let mut prev = hyperbolic_distance(z, w).unwrap();
            for (a, b) in oz.iter().zip(&ow) {
                if a.norm() >= 1.0 - 1e-9 || b.norm() >= 1.0 - 1e-9 {
                    break;
                }
                let d = hyperbolic_distance(*a, *b).unwrap();
                prop_assert!(d <= prev + 1e-10, "{} after {}", d, prev);
                prev = d;
            }
        }
    }
}
