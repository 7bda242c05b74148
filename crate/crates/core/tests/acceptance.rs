//! Acceptance criteria, run sequentially so the runtime limits are measured
//! without contention. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use boundary_ifs::geometry::involution_swapping;
use boundary_ifs::hardy::{
    change_of_variables_check, claim1_delta, claim1_verify, default_r1, hardy_norm_boundary,
    hardy_norm_littlewood_paley, nevanlinna, nevanlinna_value, opnorm_h20, GridSpec, HardyFunction, OpNormOptions,
    QuadSpec,
};
use boundary_ifs::holomap::MapExpr;
use boundary_ifs::ifs::{
    build_perturbation, factorized_f, select_sparse_blocks, Generator, IFSSchedule, Marking, PerturbationTrace,
};
use boundary_ifs::measure::{invariance_check, pushforward_lower_bound, BoundaryArcSet};
use boundary_ifs::simcli::{
    exit, run_boundary_experiment, sample_angle, simulate, summability_diagnostic, BoundaryExperiment, ExperimentSpec,
    Format, SimulateOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disc_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>())
}

fn random_polynomial(rng: &mut ChaCha8Rng, degree: usize) -> HardyFunction {
    HardyFunction::Polynomial((0..=degree).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
}

fn random_blaschke(rng: &mut ChaCha8Rng, max_degree: usize) -> MapExpr {
    let degree = rng.random_range(1..=max_degree);
    let zeros = (0..degree).map(|_| (disc_point(rng, 0.9), 1)).collect();
    MapExpr::blaschke(2.0 * PI * rng.random::<f64>(), zeros).unwrap()
}

fn half() -> MapExpr {
    MapExpr::affine(c(0.5, 0.0), c(0.0, 0.0)).unwrap()
}

fn mixed_cycle() -> IFSSchedule {
    IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2), MapExpr::Power(2), half()]))
        .with_marking(Marking::Auto { arc: BoundaryArcSet::full(), bound: 0.6 }, 0.5)
}

/// Contractions with drifting centres between squarings, so each block moves
/// the origin and the perturbing involutions are nontrivial.
fn drifting_list() -> IFSSchedule {
    let mut maps = vec![MapExpr::Power(2)];
    for shift in [c(0.2, 0.0), c(0.0, 0.1), c(-0.05, 0.0), c(0.02, 0.01)] {
        maps.extend([MapExpr::affine(c(0.5, 0.0), shift).unwrap(), MapExpr::Power(2), MapExpr::Power(2)]);
    }
    IFSSchedule::new(Generator::List(maps))
        .with_marking(Marking::Auto { arc: BoundaryArcSet::full(), bound: 0.9 }, 0.5)
}

const MIXED_SCENARIO: &str = "\
[maps]
p = power(2)
a = affine(0.5, 0)
[schedule]
generator = cycle(p, p, a)
[experiment]
samples = 10000
steps = 60
eps_converged = 1e-9
seed = 2024
";

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn norm_concordance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let quad = QuadSpec { radial: 128, angular: 1024, ..QuadSpec::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let degree = rng.random_range(0..=20);
        let g = random_polynomial(&mut rng, degree);
        let coeff = g.coefficient_norm().unwrap();
        let boundary = hardy_norm_boundary(&g, 4096).map_err(|e| e.to_string())?;
        let lp = hardy_norm_littlewood_paley(&g, &quad);
        worst = worst.max((coeff - boundary).abs()).max((coeff - lp).abs()).max((boundary - lp).abs());
    }
    check(worst <= 1e-6, format!("max pairwise gap {worst:.3e} over 50 polynomials"))
}

fn nevanlinna_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 5] {
        let f = MapExpr::Power(d);
        for _ in 0..100 {
            let w = disc_point(&mut rng, 0.999);
            let (n, _, _) = nevanlinna_value(&f, w).map_err(|e| e.to_string())?;
            worst = worst.max((n - (1.0 / w.norm()).ln()).abs());
        }
    }
    check(worst <= 1e-10, format!("max |N - log(1/|w|)| {worst:.3e} over 300 targets"))
}

fn counting_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut littlewood, mut fatou, mut relaxed) = (0, 0, 0);
    for _ in 0..20 {
        let f = random_blaschke(&mut rng, 5);
        for _ in 0..200 {
            let est = nevanlinna(&f, disc_point(&mut rng, 0.99)).map_err(|e| e.to_string())?;
            littlewood += usize::from(!est.within_littlewood());
            fatou += usize::from(!est.within_fatou());
            relaxed += usize::from(est.fatou_tolerance > 1e-7);
        }
    }
    check(
        littlewood == 0 && fatou == 0,
        format!("{littlewood} Littlewood and {fatou} Fatou violations of 4000 ({relaxed} at the near-singular tolerance)"),
    )
}

fn change_of_variables() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut maps: Vec<MapExpr> = (0..5).map(|_| random_blaschke(&mut rng, 3)).collect();
    maps.extend([
        MapExpr::Power(3),
        MapExpr::automorphism(0.7, c(0.3, -0.4)).unwrap(),
        MapExpr::affine(c(0.5, 0.1), c(0.2, 0.1)).unwrap(),
        MapExpr::compose(MapExpr::Power(2), MapExpr::affine(c(0.6, 0.0), c(0.1, 0.2)).unwrap()),
        MapExpr::compose(random_blaschke(&mut rng, 2), MapExpr::Power(2)),
    ]);
    let mut worst: f64 = 0.0;
    for f in &maps {
        let degree = rng.random_range(1..=6);
        let g = random_polynomial(&mut rng, degree);
        let cv = change_of_variables_check(f, &g, &QuadSpec::default()).map_err(|e| e.to_string())?;
        worst = worst.max(cv.gap());
    }
    check(worst < 1e-4, format!("max |lhs - rhs| {worst:.3e} over 10 pairs"))
}

fn harmonic_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut gap, mut lo, mut hi, mut ratio): (f64, f64, f64, f64) = (0.0, f64::INFINITY, 0.0, f64::INFINITY);
    for _ in 0..100 {
        // |b| < 0.8 keeps the fixed point inside D(0, 1/2).
        let e = involution_swapping(disc_point(&mut rng, 0.8)).map_err(|e| e.to_string())?;
        let arcs: Vec<(f64, f64)> = (0..rng.random_range(1..=3))
            .map(|_| {
                let a = 2.0 * PI * rng.random::<f64>();
                (a, a + 2.0 * rng.random::<f64>())
            })
            .collect();
        let set = BoundaryArcSet::from_intervals(&arcs).map_err(|e| e.to_string())?;
        let (after, before) = invariance_check(&e, &set);
        gap = gap.max((after - before).abs());
        let b = pushforward_lower_bound(&e, &set).map_err(|e| e.to_string())?;
        lo = lo.min(b.density_min);
        hi = hi.max(b.density_max);
        if b.bound > 0.0 {
            ratio = ratio.min(b.actual / b.bound);
        }
    }
    check(
        gap < 1e-8 && lo >= 1.0 / 3.0 && hi <= 4.0 && ratio >= 1.0,
        format!("max invariance gap {gap:.3e}, density in [{lo:.4}, {hi:.4}], min ℓ(e(E)) / (ℓ(E)/12) = {ratio:.3}"),
    )
}

fn perturbation_pipeline() -> Verdict {
    let s = mixed_cycle();
    let sel = select_sparse_blocks(&s, 0.1, 3, 4096).map_err(|e| e.to_string())?;
    let trace = build_perturbation(&s, &sel.indices).map_err(|e| e.to_string())?;
    let fixed = trace.blocks.iter().map(|b| b.phi_tilde.eval(c(0.0, 0.0)).norm()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let points: Vec<Complex64> = (0..100).map(|_| disc_point(&mut rng, 0.99)).collect();
    let first = sel.indices[1] - 1;
    let mut gap: f64 = 0.0;
    for m in first..first + 10 {
        for &z in &points {
            let direct = s.apply_range(1, m, z).map_err(|e| e.to_string())?;
            gap = gap.max((factorized_f(&s, &trace, m, z).map_err(|e| e.to_string())? - direct).norm());
        }
    }
    let delta = claim1_delta(trace.c, trace.r0).map_err(|e| e.to_string())?;
    let mut violations = 0;
    for b in &trace.blocks {
        let grid = GridSpec { radial: 64, angular: 256 };
        let rep = claim1_verify(&b.phi_tilde, &b.arc, trace.r0, default_r1(), delta, &grid).map_err(|e| e.to_string())?;
        violations += rep.violations;
    }
    check(
        fixed <= 1e-10 && gap <= 1e-10 && violations == 0,
        format!(
            "blocks {:?}, max |φ̃(0)| {fixed:.1e}, factorization gap {gap:.1e}, annulus counting-bound violations {violations} at δ = {delta:.6}",
            sel.indices
        ),
    )
}

fn opnorm_brackets() -> Verdict {
    let mut detail = Vec::new();
    let mut ok = true;
    for lambda in [c(0.3, 0.0), c(0.5, 0.2)] {
        let f = MapExpr::affine(lambda, c(0.0, 0.0)).unwrap();
        let e = opnorm_h20(&f, 256, 32).map_err(|e| e.to_string())?;
        ok &= (e.lower - lambda.norm()).abs() <= 1e-3 && e.upper >= e.lower;
        detail.push(format!("λ = {lambda}: [{:.6}, {:.6}] vs {:.6}", e.lower, e.upper, lambda.norm()));
    }
    let f = MapExpr::compose(half(), MapExpr::Power(2));
    let e = opnorm_h20(&f, 256, 32).map_err(|e| e.to_string())?;
    ok &= e.upper < 1.0 && e.upper >= e.lower;
    detail.push(format!("z²/2: [{:.6}, {:.6}]", e.lower, e.upper));
    check(ok, detail.join("; "))
}

fn desk_scale_theorem() -> Verdict {
    let spec = ExperimentSpec { samples: 10_000, steps: 60, eps_converged: 1e-9, seed: 8, ..ExperimentSpec::default() };
    let mixed = run_boundary_experiment(&BoundaryExperiment::new(mixed_cycle(), &spec)).map_err(|e| e.to_string())?;
    let inner = IFSSchedule::new(Generator::Cycle(vec![MapExpr::Power(2)]));
    let inner = run_boundary_experiment(&BoundaryExperiment::new(inner, &spec)).map_err(|e| e.to_string())?;
    let modulus_gap = inner.records.iter().map(|r| (r.final_modulus - 1.0).abs()).fold(0.0, f64::max);
    check(
        mixed.summary.converged == 10_000 && inner.summary.converged == 0 && modulus_gap <= 1e-12,
        format!(
            "mixed cycle {} / 10000 converged; inner {} / 10000 converged, max ||F_60(ζ)| - 1| {modulus_gap:.1e}",
            mixed.summary.converged, inner.summary.converged
        ),
    )
}

fn envelope_on(s: &IFSSchedule, trace: &PerturbationTrace) -> Result<(bool, String), String> {
    let zetas: Vec<Complex64> = (0..201).map(|i| Complex64::from_polar(1.0, sample_angle(9, i))).collect();
    let m_max = trace.indices.last().unwrap() - 1;
    let rep = summability_diagnostic(s, trace, &zetas, m_max, 4096, &OpNormOptions::default())
        .map_err(|e| e.to_string())?;
    let ok = rep.envelope_violations == 0 && rep.medians_decreasing && rep.medians.len() == 3;
    Ok((
        ok,
        format!(
            "ν = {:.4}, {} of {} steps above envelope, medians {:?}",
            rep.nu,
            rep.envelope_violations,
            rep.rows.len(),
            rep.medians.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>()
        ),
    ))
}

fn summability_envelope() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, s) in [("drifting list", drifting_list()), ("mixed cycle", mixed_cycle())] {
        let sel = select_sparse_blocks(&s, 0.1, 3, 4096).map_err(|e| e.to_string())?;
        let trace = build_perturbation(&s, &sel.indices).map_err(|e| e.to_string())?;
        let (pass, d) = envelope_on(&s, &trace)?;
        ok &= pass;
        detail.push(format!("{name}: {d}"));
    }
    check(ok, detail.join("; "))
}

fn determinism() -> Verdict {
    let a = simulate(MIXED_SCENARIO, &SimulateOptions::default(), Format::Csv);
    let b = simulate(MIXED_SCENARIO, &SimulateOptions::default(), Format::Csv);
    if a.code != exit::OK {
        return Err(format!("simulate exited {}: {:?}", a.code, a.message));
    }
    check(a.bytes == b.bytes && !a.bytes.is_empty(), format!("{} bytes, identical = {}", a.bytes.len(), a.bytes == b.bytes))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Verdict); 10] = [
        ("norm-estimator concordance", Duration::from_secs(10), norm_concordance),
        ("Nevanlinna exactness", Duration::from_secs(1), nevanlinna_exactness),
        ("Littlewood and Fatou bounds", Duration::from_secs(60), counting_bounds),
        ("change of variables", Duration::from_secs(60), change_of_variables),
        ("harmonic-measure invariance", Duration::from_secs(5), harmonic_invariance),
        ("perturbation pipeline", Duration::from_secs(30), perturbation_pipeline),
        ("operator-norm brackets", Duration::from_secs(60), opnorm_brackets),
        ("boundary convergence at desk scale", Duration::from_secs(30), desk_scale_theorem),
        ("summability envelope", Duration::from_secs(120), summability_envelope),
        ("determinism", Duration::from_secs(10), determinism),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let elapsed = start.elapsed();
        let timed = elapsed <= *limit;
        let (passed, detail) = match verdict {
            Ok(d) => (timed, d),
            Err(d) => (false, d),
        };
        failures += usize::from(!passed);
        println!(
            "criterion {:>2} {}: {} ({:.2}s of {}s{}) {detail}",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if timed { "" } else { ", over the runtime limit" },
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
