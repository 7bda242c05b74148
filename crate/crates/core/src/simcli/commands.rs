//! The four subcommands as pure functions from scenario text to report bytes
//! and an exit code.

use num_complex::Complex64;
use serde_json::{json, Value};

use super::experiment::{run_boundary_experiment, BoundaryExperiment, InvariantResult};
use super::report::{emit_records, emit_report, Format};
use super::scenario::{check_experiment, parse_scenario, Scenario};
use super::suites::{opnorm_options, run_suite, scenario_trace};
use super::{exit, SimError};
use crate::hardy::{
    claim1_delta, claim1_verify, composition_operator_bound, default_r1, hardy_norm_boundary,
    hardy_norm_littlewood_paley, opnorm_h20_with, HardyFunction,
};
use crate::ifs::endgame_automorphism;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub code: i32,
    /// Diagnostic for stderr when the command could not produce a report.
    pub message: Option<String>,
}

impl Outcome {
    fn error(e: SimError) -> Self {
        Outcome { bytes: Vec::new(), code: e.exit_code(), message: Some(e.to_string()) }
    }
}

/// Failures outrank undecided checks.
fn invariant_code(results: &[InvariantResult]) -> i32 {
    if results.iter().any(|r| !r.passed && !r.inconclusive) {
        exit::INVARIANT_FAILURE
    } else if results.iter().any(|r| r.inconclusive) {
        exit::INCONCLUSIVE
    } else {
        exit::OK
    }
}

fn load(text: &str) -> Result<Scenario, SimError> {
    Ok(parse_scenario(text)?)
}

fn run(text: &str, f: impl FnOnce(Scenario) -> Result<Outcome, SimError>) -> Outcome {
    load(text).and_then(f).unwrap_or_else(Outcome::error)
}

pub fn verify(text: &str, format: Format) -> Outcome {
    run(text, |scn| {
        let results: Vec<InvariantResult> = scn.invariants.iter().flat_map(|&s| run_suite(&scn, s)).collect();
        let rows: Vec<Value> = results.iter().map(|r| serde_json::to_value(r).expect("serializable")).collect();
        Ok(Outcome { bytes: emit_records("invariants", &rows, format), code: invariant_code(&results), message: None })
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimulateOptions {
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub radial_probe: Option<u32>,
}

pub fn simulate(text: &str, opts: &SimulateOptions, format: Format) -> Outcome {
    run(text, |mut scn| {
        let x = &mut scn.experiment;
        x.samples = opts.samples.unwrap_or(x.samples);
        x.steps = opts.steps.unwrap_or(x.steps);
        x.seed = opts.seed.unwrap_or(x.seed);
        x.radial_probe = opts.radial_probe.or(x.radial_probe);
        check_experiment(x)?;
        let report = run_boundary_experiment(&BoundaryExperiment::from_scenario(&scn))?;
        Ok(Outcome { bytes: emit_report(&report, format), code: invariant_code(&report.invariants), message: None })
    })
}

pub fn norms(text: &str, format: Format) -> Outcome {
    run(text, |scn| {
        let quad = &scn.quadrature.quad;
        let opts = opnorm_options(&scn);
        let mut rows = Vec::new();
        let mut code = exit::OK;
        for (name, f) in &scn.maps {
            let h = HardyFunction::Map(f.clone());
            let f0 = f.eval(Complex64::new(0.0, 0.0));
            let mut row = json!({
                "map": name,
                "expr": f.to_string(),
                "abs_f0": f0.norm(),
                "norm_boundary": hardy_norm_boundary(&h, quad.boundary)?,
                "norm_littlewood_paley": hardy_norm_littlewood_paley(&h, quad),
                "composition_bound": composition_operator_bound(f),
            });
            if f0.norm() <= 1e-10 {
                let e = opnorm_h20_with(f, &opts)?;
                if !e.consistent() {
                    code = exit::INVARIANT_FAILURE;
                }
                let obj = row.as_object_mut().expect("object");
                obj.insert("opnorm_lower".into(), e.lower.into());
                obj.insert("opnorm_upper".into(), e.upper.into());
                obj.insert("opnorm_r1".into(), e.r1.into());
                obj.insert("opnorm_delta".into(), e.delta.into());
                obj.insert("opnorm_gamma".into(), e.gamma.into());
                obj.insert("opnorm_edge".into(), e.edge_attained.into());
            }
            rows.push(row);
        }
        Ok(Outcome { bytes: emit_records("norms", &rows, format), code, message: None })
    })
}

pub fn perturb(text: &str, format: Format) -> Outcome {
    run(text, |scn| {
        let s = scn.to_schedule();
        let (selection, trace) = scenario_trace(&scn, &s)?;
        let delta = claim1_delta(trace.c, trace.r0)?;
        let mut rows = vec![json!({
            "record": "trace",
            "indices": format!("{:?}", trace.indices),
            "head": trace.head.to_string(),
            "r0": trace.r0,
            "c": trace.c,
            "delta": delta,
            "r1": default_r1(),
        })];
        for cert in selection.iter().flat_map(|sel| &sel.certificates) {
            rows.push(json!({
                "record": "certificate",
                "k": cert.block,
                "start": cert.start,
                "end": cert.end,
                "grid_sup": cert.grid_sup,
                "arc_sup": cert.arc_sup,
                "arc_points": cert.arc_points,
                "margin": cert.margin,
            }));
        }
        let mut code = exit::OK;
        for b in &trace.blocks {
            let c = &b.checks;
            let claim = claim1_verify(&b.phi_tilde, &b.arc, trace.r0, default_r1(), delta, &scn.quadrature.grid)?;
            let ok = c.half_disc_contraction
                && c.boundary_smallness
                && c.fixed_origin_residual <= 1e-10
                && c.telescoping_residual <= 1e-10
                && claim.passed();
            if !ok {
                code = exit::INVARIANT_FAILURE;
            }
            rows.push(json!({
                "record": "block",
                "k": b.k,
                "start": b.start,
                "end": b.end,
                "phi": b.phi.to_string(),
                "e_b_re": b.e.b.re,
                "e_b_im": b.e.b.im,
                "w_re": b.w.re,
                "w_im": b.w.im,
                "phi_tilde": b.phi_tilde.to_string(),
                "half_disc_contraction": c.half_disc_contraction,
                "boundary_smallness": c.boundary_smallness,
                "fixed_origin_residual": c.fixed_origin_residual,
                "telescoping_residual": c.telescoping_residual,
                "half_disc_sup": c.half_disc_sup,
                "boundary_sup": c.boundary_sup,
                "claim1_max_ratio": claim.max_ratio,
                "claim1_violations": claim.violations,
                "claim1_samples": claim.samples,
            }));
        }
        let first = trace.indices[1] - 1;
        let last = trace.indices.last().copied().unwrap_or(first + 1) - 1;
        for m in first..=last {
            let end = endgame_automorphism(&s, &trace, m)?;
            rows.push(json!({
                "record": "endgame",
                "m": end.m,
                "k": end.k,
                "b_re": end.b.re,
                "b_im": end.b.im,
                "abs_b": end.b.norm(),
            }));
        }
        Ok(Outcome { bytes: emit_records("perturbation", &rows, format), code, message: None })
    })
}
