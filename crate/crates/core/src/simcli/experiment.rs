//! Monte Carlo boundary orbits and the summability diagnostic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scenario::{check_experiment, ExperimentSpec, Scenario};
use super::SimError;
use crate::geometry::{hyperbolic_distance, DiscPoint};
use crate::hardy::{composition_operator_bound, opnorm_h20_with, OpNormOptions};
use crate::ifs::{endgame_automorphism, locally_uniform_limit, IFSSchedule, PerturbationTrace};
use crate::quadrature::circle_nodes;

/// Steps at the end of an orbit that must all lie within `eps_converged`.
pub const CONVERGENCE_WINDOW: usize = 5;
const ON_CIRCLE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryExperiment {
    pub schedule: IFSSchedule,
    pub samples: usize,
    pub steps: usize,
    /// Entry into `D(0, 1 - eps_interior)` is recorded per sample.
    pub eps_interior: f64,
    pub eps_converged: f64,
    pub seed: u64,
    pub rho: f64,
    pub limit_tol: f64,
    pub radial_probe: Option<u32>,
}

impl BoundaryExperiment {
    pub fn new(schedule: IFSSchedule, spec: &ExperimentSpec) -> Self {
        BoundaryExperiment {
            schedule,
            samples: spec.samples,
            steps: spec.steps,
            eps_interior: spec.eps_interior,
            eps_converged: spec.eps_converged,
            seed: spec.seed,
            rho: spec.rho,
            limit_tol: spec.limit_tol,
            radial_probe: spec.radial_probe,
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        Self::new(s.to_schedule(), &s.experiment)
    }

    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            samples: self.samples,
            steps: self.steps,
            eps_interior: self.eps_interior,
            eps_converged: self.eps_converged,
            seed: self.seed,
            rho: self.rho,
            limit_tol: self.limit_tol,
            radial_probe: self.radial_probe,
        }
    }

    /// SHA-256 of the full configuration.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(format!("{self:?}").as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Converged,
    OnBoundary,
    Wandering,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub sample_index: usize,
    pub zeta_angle_rad: f64,
    /// First step with `|F_n(ζ)| < 1 - eps_interior`, or -1.
    pub first_entry_step: i64,
    pub final_distance: f64,
    pub final_modulus: f64,
    pub status: SampleStatus,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub samples: usize,
    pub steps: usize,
    pub converged: usize,
    pub on_boundary: usize,
    pub wandering: usize,
    pub converged_fraction: f64,
    pub limit_re: f64,
    pub limit_im: f64,
    /// Minimum, quartiles and maximum of `final_distance`.
    pub distance_quantiles: [f64; 5],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_inner_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_radial_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    /// The check could not be decided numerically.
    pub inconclusive: bool,
    pub detail: String,
}

impl InvariantResult {
    pub fn check(suite: &str, name: &str, passed: bool, detail: impl Into<String>) -> Self {
        InvariantResult { suite: suite.into(), name: name.into(), passed, inconclusive: false, detail: detail.into() }
    }

    pub fn undecided(suite: &str, name: &str, detail: impl Into<String>) -> Self {
        InvariantResult { suite: suite.into(), name: name.into(), passed: false, inconclusive: true, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<SampleRecord>,
    pub summary: Summary,
    pub invariants: Vec<InvariantResult>,
    pub provenance: Provenance,
}

/// Angle for sample `i`: stream `i` of a generator keyed by `seed`, so the
/// draw does not depend on evaluation order.
pub fn sample_angle(seed: u64, i: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    2.0 * PI * rng.random::<f64>()
}

fn quantiles(values: &[f64]) -> [f64; 5] {
    if values.is_empty() {
        return [0.0; 5];
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    [at(0.0), at(0.25), at(0.5), at(0.75), at(1.0)]
}

pub fn run_boundary_experiment(x: &BoundaryExperiment) -> Result<ExperimentReport, SimError> {
    check_experiment(&x.spec())?;
    let status = locally_uniform_limit(&x.schedule, x.rho, x.steps, x.limit_tol)?;
    let z0 = status.limit().ok_or(SimError::UnresolvedLimit(status))?;
    let maps = (1..=x.steps).map(|n| x.schedule.map(n).cloned()).collect::<Result<Vec<_>, _>>()?;
    let all_inner = maps.iter().all(|f| f.is_inner());
    let interior = 1.0 - x.eps_interior;

    let outcomes: Vec<(SampleRecord, f64)> = (0..x.samples)
        .into_par_iter()
        .map(|i| {
            let angle = sample_angle(x.seed, i);
            let zeta = Complex64::from_polar(1.0, angle);
            let mut z = zeta;
            let mut first_entry = -1i64;
            let mut inner_dev: f64 = 0.0;
            let mut streak = 0usize;
            for (n, f) in maps.iter().enumerate() {
                z = f.eval(z);
                if first_entry < 0 && z.norm() < interior {
                    first_entry = n as i64 + 1;
                }
                inner_dev = inner_dev.max((z.norm() - 1.0).abs());
                streak = if (z - z0).norm() < x.eps_converged { streak + 1 } else { 0 };
            }
            let converged = streak >= CONVERGENCE_WINDOW.min(x.steps);
            let status = if converged {
                SampleStatus::Converged
            } else if (z.norm() - 1.0).abs() <= ON_CIRCLE {
                SampleStatus::OnBoundary
            } else {
                SampleStatus::Wandering
            };
            let radial_deviation = x.radial_probe.map(|j| {
                let r = 1.0 - 0.5f64.powi(j as i32);
                let inside = maps.iter().fold(zeta * r, |w, f| f.eval(w));
                (inside - z).norm()
            });
            let record = SampleRecord {
                sample_index: i,
                zeta_angle_rad: angle,
                first_entry_step: first_entry,
                final_distance: (z - z0).norm(),
                final_modulus: z.norm(),
                status,
                converged,
                radial_deviation,
            };
            (record, inner_dev)
        })
        .collect();

    let (records, inner_devs): (Vec<SampleRecord>, Vec<f64>) = outcomes.into_iter().unzip();
    let count = |s: SampleStatus| records.iter().filter(|r| r.status == s).count();
    let (converged, on_boundary, wandering) =
        (count(SampleStatus::Converged), count(SampleStatus::OnBoundary), count(SampleStatus::Wandering));
    let distances: Vec<f64> = records.iter().map(|r| r.final_distance).collect();
    let max_inner_deviation = all_inner.then(|| inner_devs.iter().copied().fold(0.0, f64::max));
    let max_radial_deviation =
        x.radial_probe.map(|_| records.iter().filter_map(|r| r.radial_deviation).fold(0.0, f64::max));
    let summary = Summary {
        samples: x.samples,
        steps: x.steps,
        converged,
        on_boundary,
        wandering,
        converged_fraction: converged as f64 / x.samples as f64,
        limit_re: z0.re,
        limit_im: z0.im,
        distance_quantiles: quantiles(&distances),
        max_inner_deviation,
        max_radial_deviation,
    };

    let mut invariants = vec![
        InvariantResult::check(
            "simcli",
            "conservation",
            converged + on_boundary + wandering == x.samples,
            format!("{converged} + {on_boundary} + {wandering} of {}", x.samples),
        ),
        InvariantResult::check(
            "simcli",
            "fraction_range",
            (0.0..=1.0).contains(&summary.converged_fraction),
            format!("{}", summary.converged_fraction),
        ),
    ];
    if let Some(dev) = max_inner_deviation {
        invariants.push(InvariantResult::check(
            "simcli",
            "inner_exactness",
            dev <= ON_CIRCLE,
            format!("max ||F_n(ζ)| - 1| = {dev:e}"),
        ));
    }
    Ok(ExperimentReport {
        records,
        summary,
        invariants,
        provenance: Provenance { seed: x.seed, config_hash: x.config_hash() },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityRow {
    pub m: usize,
    pub k: usize,
    /// `‖g_m ∘ F_m‖₂` by boundary quadrature.
    pub norm: f64,
    pub envelope: f64,
    /// `|f_m ∘ ⋯ ∘ f_{n_{k+1}} ∘ e_k(0)|`, expected to decay.
    pub b_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    /// Largest block-wise upper bound on `‖C_φ̃_k‖` restricted to H²₀.
    pub nu: f64,
    pub nu_blocks: Vec<f64>,
    /// `sqrt((1 + |f(0)|) / (1 - |f(0)|))` for the head map `f`.
    pub head_bound: f64,
    pub rows: Vec<SummabilityRow>,
    /// Median over the sample points of `|g_m ∘ F_m(ζ)|` at the last step
    /// of each block range.
    pub medians: Vec<f64>,
    /// `|g_m ∘ F_m(ζ)|` for each sample point at those steps.
    pub values: Vec<Vec<f64>>,
    pub envelope_violations: usize,
    pub medians_decreasing: bool,
    /// Least-squares slope of `ln ‖g_m ∘ F_m‖₂` against `k`, taking the last
    /// step of each block range; at most `ln ν` when the envelope is tight.
    pub log_slope: Option<f64>,
    /// Largest `|d(F_m(ζ), 0) - d(g_m(F_m(ζ)), g_m(0))|` over interior values.
    pub endgame_gap: f64,
}

impl SummabilityReport {
    pub fn invariants(&self) -> Vec<InvariantResult> {
        vec![
            InvariantResult::check(
                "simcli",
                "summability_envelope",
                self.envelope_violations == 0,
                format!("{} of {} steps above the envelope, nu = {}", self.envelope_violations, self.rows.len(), self.nu),
            ),
            InvariantResult::check("simcli", "median_decay", self.medians_decreasing, format!("{:?}", self.medians)),
            InvariantResult::check(
                "simcli",
                "endgame_consistency",
                self.endgame_gap <= 1e-9,
                format!("max gap {:e}", self.endgame_gap),
            ),
        ]
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

const INTERIOR_FOR_DISTANCE: f64 = 1.0 - 1e-6;

/// Checks `‖g_m ∘ F_m‖₂ ≤ ‖C_f‖ ν^k` for every `m` from the end of the first
/// block to `m_max`, with `ν` the largest block-wise operator-norm bound.
pub fn summability_diagnostic(
    s: &IFSSchedule,
    trace: &PerturbationTrace,
    zetas: &[DiscPoint],
    m_max: usize,
    boundary: usize,
    opts: &OpNormOptions,
) -> Result<SummabilityReport, SimError> {
    let Some(first) = trace.blocks.first() else {
        return Err(SimError::Refused("trace has no perturbation blocks".into()));
    };
    let m_min = first.end - 1;
    if m_max < m_min {
        return Err(SimError::Refused(format!("m_max = {m_max} ends before the first block (needs {m_min})")));
    }
    let nu_blocks = trace
        .blocks
        .iter()
        .map(|b| opnorm_h20_with(&b.phi_tilde, opts).map(|e| e.upper))
        .collect::<Result<Vec<_>, _>>()?;
    let nu = nu_blocks.iter().copied().fold(0.0, f64::max);
    let head_bound = composition_operator_bound(&trace.head);

    let nodes: Vec<DiscPoint> = circle_nodes(boundary).collect();
    let mut at_nodes = nodes.clone();
    let mut at_zetas = zetas.to_vec();
    let mut rows = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); trace.blocks.len()];
    let mut endgame_gap: f64 = 0.0;
    for m in 1..=m_max {
        let f = s.map(m)?;
        at_nodes.par_iter_mut().for_each(|z| *z = f.eval(*z));
        at_zetas.iter_mut().for_each(|z| *z = f.eval(*z));
        if m < m_min {
            continue;
        }
        let end = endgame_automorphism(s, trace, m)?;
        let g = end.g;
        let norm = (at_nodes.par_iter().map(|z| g.eval(*z).norm_sqr()).sum::<f64>() / boundary as f64).sqrt();
        rows.push(SummabilityRow {
            m,
            k: end.k,
            norm,
            envelope: head_bound * nu.powi(end.k as i32),
            b_modulus: end.b.norm(),
        });
        let row: Vec<f64> = at_zetas.iter().map(|z| g.eval(*z).norm()).collect();
        for (z, gz) in at_zetas.iter().zip(&row) {
            if z.norm() < INTERIOR_FOR_DISTANCE && *gz < INTERIOR_FOR_DISTANCE {
                let lhs = hyperbolic_distance(*z, Complex64::new(0.0, 0.0))?;
                let rhs = hyperbolic_distance(g.eval(*z), end.b)?;
                endgame_gap = endgame_gap.max((lhs - rhs).abs());
            }
        }
        // The last step of a block range overwrites earlier ones.
        values[end.k - 1] = row;
    }
    let completed = rows.last().map_or(0, |r| r.k);
    values.truncate(completed);
    let medians: Vec<f64> = values.iter().map(|v| median(v)).collect();
    let medians_decreasing = medians.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
    let mut per_block: Vec<(f64, f64)> = Vec::new();
    for r in &rows {
        match per_block.last_mut() {
            Some(last) if last.0 == r.k as f64 => last.1 = r.norm.ln(),
            _ => per_block.push((r.k as f64, r.norm.ln())),
        }
    }
    let log_slope = least_squares_slope(&per_block);
    let envelope_violations = rows.iter().filter(|r| r.norm > r.envelope + 1e-9).count();
    Ok(SummabilityReport {
        nu,
        nu_blocks,
        head_bound,
        rows,
        medians,
        values,
        envelope_violations,
        medians_decreasing,
        log_slope,
        endgame_gap,
    })
}
