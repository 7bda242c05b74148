//! Invariant suites run by `verify`, one per module.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::experiment::{run_boundary_experiment, sample_angle, summability_diagnostic, BoundaryExperiment, InvariantResult};
use super::report::{emit_report, Format};
use super::scenario::{BlocksSpec, MarkedSpec, Scenario, Suite};
use super::SimError;
use crate::geometry::{hyperbolic_distance, hyperbolic_midpoint, involution_swapping, schwarz_pick_defect, DiscPoint};
use crate::hardy::{
    claim1_delta, claim1_verify, default_r1, hardy_norm_boundary, hardy_norm_littlewood_paley, nevanlinna,
    opnorm_h20_with, HardyFunction, OpNormOptions, NEAR_SINGULAR,
};
use crate::holomap::parse_map;
use crate::ifs::{
    build_perturbation, factorized_f, locally_uniform_limit, select_sparse_blocks, BlockSelection, IFSSchedule,
    LimitStatus, PerturbationTrace,
};
use crate::measure::{invariance_check, pushforward_lower_bound, BoundaryArcSet};

/// Last index searched by automatic block selection.
pub const SELECTION_HORIZON: usize = 4096;
const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

fn disc_point(rng: &mut ChaCha8Rng, radius: f64) -> DiscPoint {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>())
}

fn outcome(suite: Suite, name: &str, r: Result<(bool, String), SimError>) -> InvariantResult {
    match r {
        Ok((passed, detail)) => InvariantResult::check(suite.name(), name, passed, detail),
        Err(e) => InvariantResult::undecided(suite.name(), name, e.to_string()),
    }
}

/// Selects (or takes the declared) block indices and builds the trace.
pub fn scenario_trace(
    scn: &Scenario,
    s: &IFSSchedule,
) -> Result<(Option<BlockSelection>, PerturbationTrace), SimError> {
    if scn.schedule.marked == MarkedSpec::None {
        return Err(SimError::Refused("schedule marks no indices, so no perturbation trace exists".into()));
    }
    let (selection, indices) = match &scn.schedule.blocks {
        BlocksSpec::Auto => {
            let sel = select_sparse_blocks(s, scn.schedule.margin, scn.schedule.block_count, SELECTION_HORIZON)?;
            let indices = sel.indices.clone();
            (Some(sel), indices)
        }
        BlocksSpec::Indices(v) => (None, v.clone()),
    };
    Ok((selection, build_perturbation(s, &indices)?))
}

pub fn opnorm_options(scn: &Scenario) -> OpNormOptions {
    OpNormOptions {
        trials: scn.quadrature.trials,
        maxdeg: scn.quadrature.maxdeg,
        seed: scn.experiment.seed,
        grid: scn.quadrature.grid,
        boundary: scn.quadrature.quad.boundary,
        ..OpNormOptions::default()
    }
}

pub fn run_suite(scn: &Scenario, suite: Suite) -> Vec<InvariantResult> {
    match suite {
        Suite::Geometry => geometry_suite(scn),
        Suite::Holomap => holomap_suite(scn),
        Suite::Hardy => hardy_suite(scn),
        Suite::Measure => measure_suite(scn),
        Suite::Ifs => ifs_suite(scn),
        Suite::Simcli => simcli_suite(scn),
    }
}

fn geometry_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(scn.experiment.seed);
    let mut out = Vec::new();
    for (name, f) in &scn.maps {
        let r = (|| {
            let mut worst = f64::INFINITY;
            for _ in 0..64 {
                let (z, w) = (disc_point(&mut rng, 0.95), disc_point(&mut rng, 0.95));
                worst = worst.min(schwarz_pick_defect(f, z, w)?);
            }
            Ok((worst >= -1e-9, format!("{name}: min defect {worst:e}")))
        })();
        out.push(outcome(Suite::Geometry, "schwarz_pick", r));
    }
    let r = (|| {
        let mut gap: f64 = 0.0;
        for _ in 0..64 {
            let (z, w) = (disc_point(&mut rng, 0.95), disc_point(&mut rng, 0.95));
            let m = hyperbolic_midpoint(z, w)?;
            let half = 0.5 * hyperbolic_distance(z, w)?;
            gap = gap.max((hyperbolic_distance(z, m)? - half).abs()).max((hyperbolic_distance(m, w)? - half).abs());
        }
        Ok((gap <= 1e-9, format!("max gap {gap:e}")))
    })();
    out.push(outcome(Suite::Geometry, "midpoint", r));
    let r = (|| {
        let mut gap: f64 = 0.0;
        for _ in 0..64 {
            let (b, z) = (disc_point(&mut rng, 0.9), disc_point(&mut rng, 0.9));
            let e = involution_swapping(b)?;
            gap = gap.max((e.eval(ORIGIN) - b).norm()).max(e.eval(b).norm()).max((e.eval(e.eval(z)) - z).norm());
        }
        Ok((gap <= 1e-10, format!("max residual {gap:e}")))
    })();
    out.push(outcome(Suite::Geometry, "involution", r));
    out
}

fn holomap_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(scn.experiment.seed ^ 1);
    let mut out = Vec::new();
    for (name, f) in &scn.maps {
        let r = (|| {
            let mut worst: f64 = 0.0;
            let mut count_ok = true;
            for _ in 0..16 {
                let w = disc_point(&mut rng, 0.9);
                let pre = f.preimages(w).map_err(crate::ifs::IfsError::from)?;
                if f.is_inner() && pre.count() != f.degree() {
                    count_ok = false;
                }
                for (z, _) in &pre.points {
                    worst = worst.max((f.eval(*z) - w).norm());
                }
            }
            Ok((worst <= 1e-8 && count_ok, format!("{name}: max |f(z) - w| {worst:e}, counts match {count_ok}")))
        })();
        out.push(outcome(Suite::Holomap, "preimages", r));
        if f.is_inner() {
            let dev = (0..256)
                .map(|j| (f.eval(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 256.0)).norm() - 1.0).abs())
                .fold(0.0, f64::max);
            out.push(InvariantResult::check("holomap", "inner_boundary", dev <= 1e-12, format!("{name}: {dev:e}")));
        }
        let text = f.to_string();
        let same = parse_map(&text).as_ref() == Ok(f);
        out.push(InvariantResult::check("holomap", "round_trip", same, format!("{name} = {text}")));
    }
    out
}

fn hardy_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(scn.experiment.seed ^ 2);
    let quad = &scn.quadrature.quad;
    let tol = quad.tolerance.unwrap_or(1e-6);
    let mut out = Vec::new();
    for (name, f) in &scn.maps {
        let h = HardyFunction::Map(f.clone());
        let r = hardy_norm_boundary(&h, quad.boundary).map_err(SimError::from).map(|b| {
            let lp = hardy_norm_littlewood_paley(&h, quad);
            (b, lp)
        });
        out.push(match r {
            Ok((b, lp)) if (b - lp).abs() <= tol => {
                InvariantResult::check("hardy", "norm_concordance", true, format!("{name}: {b} vs {lp}"))
            }
            Ok((b, lp)) => InvariantResult::undecided("hardy", "norm_concordance", format!("{name}: {b} vs {lp}")),
            Err(e) => InvariantResult::undecided("hardy", "norm_concordance", e.to_string()),
        });
        let f0 = f.eval(ORIGIN);
        let r = (|| {
            let (mut lw, mut fa, mut used) = (0, 0, 0);
            while used < 8 {
                let w = disc_point(&mut rng, 0.9);
                if (w - f0).norm() < 10.0 * NEAR_SINGULAR {
                    continue;
                }
                used += 1;
                let est = nevanlinna(f, w)?;
                lw += usize::from(!est.within_littlewood());
                fa += usize::from(!est.within_fatou());
            }
            Ok((lw == 0 && fa == 0, format!("{name}: {lw} Littlewood and {fa} Fatou violations of 8")))
        })();
        out.push(outcome(Suite::Hardy, "counting_bounds", r));
        if f0.norm() <= 1e-10 {
            let r = opnorm_h20_with(f, &opnorm_options(scn))
                .map(|e| (e.consistent(), format!("{name}: [{}, {}]", e.lower, e.upper)))
                .map_err(SimError::from);
            out.push(outcome(Suite::Hardy, "opnorm_bracket", r));
        }
    }
    out
}

fn measure_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(scn.experiment.seed ^ 3);
    let arc = if scn.schedule.arc.is_empty() {
        BoundaryArcSet::from_degrees(&[(0.0, 90.0)]).expect("fixed arc")
    } else {
        scn.schedule.arc.clone()
    };
    let r = (|| {
        let (mut gap, mut bound_ok): (f64, bool) = (0.0, true);
        for _ in 0..16 {
            let e = involution_swapping(disc_point(&mut rng, 0.8))?;
            let (after, before) = invariance_check(&e, &arc);
            gap = gap.max((after - before).abs());
            bound_ok &= pushforward_lower_bound(&e, &arc)?.holds();
        }
        Ok((gap < 1e-8 && bound_ok, format!("max |λ(e(E)) - λ(E)| {gap:e}, pushforward bound {bound_ok}")))
    })();
    vec![outcome(Suite::Measure, "harmonic_invariance", r)]
}

fn ifs_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let s = scn.to_schedule();
    let x = &scn.experiment;
    let mut out = vec![match locally_uniform_limit(&s, x.rho, x.steps, x.limit_tol) {
        Ok(LimitStatus::Converged(z)) => InvariantResult::check("ifs", "interior_limit", true, format!("z0 = {z}")),
        Ok(LimitStatus::Diverging { spread }) => {
            InvariantResult::check("ifs", "interior_limit", false, format!("diverging, spread {spread:e}"))
        }
        Ok(other) => InvariantResult::undecided("ifs", "interior_limit", format!("{other:?}")),
        Err(e) => InvariantResult::undecided("ifs", "interior_limit", e.to_string()),
    }];
    if scn.schedule.marked == MarkedSpec::None {
        return out;
    }
    let (_, trace) = match scenario_trace(scn, &s) {
        Ok(t) => t,
        Err(e) => {
            out.push(InvariantResult::undecided("ifs", "perturbation", e.to_string()));
            return out;
        }
    };
    let failing: Vec<usize> = trace
        .blocks
        .iter()
        .filter(|b| {
            let c = &b.checks;
            !(c.half_disc_contraction
                && c.boundary_smallness
                && c.fixed_origin_residual <= 1e-10
                && c.telescoping_residual <= 1e-10)
        })
        .map(|b| b.k)
        .collect();
    out.push(InvariantResult::check(
        "ifs",
        "perturbation",
        failing.is_empty(),
        format!("{} blocks at {:?}, failing {failing:?}", trace.blocks.len(), trace.indices),
    ));
    let r = (|| {
        let mut gap: f64 = 0.0;
        let first = trace.indices[1] - 1;
        let last = first + 10;
        for m in first..last {
            for j in 0..16 {
                let z = Complex64::from_polar(0.97 * (j as f64 / 16.0), 2.4 * j as f64);
                let direct = s.apply_range(1, m, z)?;
                gap = gap.max((factorized_f(&s, &trace, m, z)? - direct).norm());
            }
        }
        Ok((gap <= 1e-10, format!("max gap {gap:e} for m in {first}..{last}")))
    })();
    out.push(outcome(Suite::Ifs, "factorization", r));
    let r = (|| {
        let delta = claim1_delta(trace.c, trace.r0)?;
        let mut worst = f64::NEG_INFINITY;
        let mut violations = 0;
        for b in &trace.blocks {
            let rep = claim1_verify(&b.phi_tilde, &b.arc, trace.r0, default_r1(), delta, &scn.quadrature.grid)?;
            worst = worst.max(rep.max_ratio);
            violations += rep.violations;
        }
        Ok((violations == 0, format!("delta {delta}, max ratio {worst}, {violations} violations")))
    })();
    out.push(outcome(Suite::Ifs, "claim1", r));
    out
}

fn simcli_suite(scn: &Scenario) -> Vec<InvariantResult> {
    let x = BoundaryExperiment::from_scenario(scn);
    let mut out = match (run_boundary_experiment(&x), run_boundary_experiment(&x)) {
        (Ok(a), Ok(b)) => {
            let same = emit_report(&a, Format::Csv) == emit_report(&b, Format::Csv)
                && emit_report(&a, Format::JsonLines) == emit_report(&b, Format::JsonLines);
            let mut v = a.invariants;
            v.push(InvariantResult::check("simcli", "determinism", same, "two runs, csv and json-lines"));
            v
        }
        (Err(e), _) | (_, Err(e)) => vec![InvariantResult::undecided("simcli", "boundary_experiment", e.to_string())],
    };
    if scn.schedule.marked == MarkedSpec::None {
        return out;
    }
    let s = scn.to_schedule();
    let r = scenario_trace(scn, &s).and_then(|(_, trace)| {
        let zetas: Vec<DiscPoint> =
            (0..101).map(|i| Complex64::from_polar(1.0, sample_angle(x.seed, i))).collect();
        let m_max = trace.indices.last().copied().unwrap_or(1) - 1;
        summability_diagnostic(&s, &trace, &zetas, m_max, scn.quadrature.quad.boundary, &opnorm_options(scn))
    });
    match r {
        Ok(rep) => out.extend(rep.invariants()),
        Err(e) => out.push(InvariantResult::undecided("simcli", "summability", e.to_string())),
    }
    out
}
