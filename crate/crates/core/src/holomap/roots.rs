use nalgebra::DMatrix;
use num_complex::Complex64;

/// Product of two polynomials in ascending coefficient order.
pub(crate) fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots of a polynomial (ascending coefficients) as eigenvalues of its
/// companion matrix.
pub(crate) fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    let n = coeffs.len() - 1;
    match n {
        0 => return Vec::new(),
        1 => return vec![-coeffs[0] / coeffs[1]],
        _ => {}
    }
    let lead = coeffs[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues());
    match eig {
        Some(v) => v.iter().copied().collect(),
        None => durand_kerner(&coeffs),
    }
}

/// Fallback simultaneous iteration when the Schur sweep fails to converge.
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Groups roots within `radius` of each other; returns the groups' centroids
/// with counts and whether any merge happened.
pub(crate) fn cluster(roots: &[Complex64], radius: f64) -> (Vec<(Complex64, u32)>, bool) {
    let mut groups: Vec<(Complex64, u32)> = Vec::new();
    let mut merged = false;
    for &z in roots {
        match groups.iter_mut().find(|(c, _)| (*c - z).norm() < radius) {
            Some((c, m)) => {
                *c = (*c * *m as f64 + z) / (*m as f64 + 1.0);
                *m += 1;
                merged = true;
            }
            None => groups.push((z, 1)),
        }
    }
    (groups, merged)
}
