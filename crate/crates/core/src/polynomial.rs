//! Real polynomial roots via companion-matrix eigenvalues.

use nalgebra::DMatrix;

/// Evaluate `Σ c_i x^(n-i)` (coefficients highest degree first).
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Value and derivative by Horner's scheme.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// `|p(x)| / Σ |c_i x^(n-i)|`.
pub fn relative_residual(coeffs: &[f64], x: f64) -> f64 {
    let scale = coeffs.iter().fold(0.0, |acc, &c| acc * x.abs() + c.abs());
    if scale == 0.0 {
        0.0
    } else {
        eval(coeffs, x).abs() / scale
    }
}

/// Real roots, ascending. Leading zero coefficients are stripped. Each
/// eigenvalue with a small imaginary part is polished by Newton steps and
/// kept when its relative residual is at most `tol`.
pub fn real_roots(coeffs: &[f64], tol: f64) -> Vec<f64> {
    let start = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[0];
    let mut comp = DMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    let eig = comp.complex_eigenvalues();
    let mut roots: Vec<f64> = Vec::new();
    for z in eig.iter() {
        if z.im.abs() > 1e-4 * (1.0 + z.re.abs()) {
            continue;
        }
        let x = polish(c, z.re);
        if x.is_finite() && relative_residual(c, x) <= tol {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + a.abs()));
    roots
}

fn polish(c: &[f64], mut x: f64) -> f64 {
    let mut best = x;
    let mut best_res = relative_residual(c, x);
    for _ in 0..50 {
        let (p, dp) = eval_with_derivative(c, x);
        if dp == 0.0 || p == 0.0 {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() {
            break;
        }
        let res = relative_residual(c, next);
        if res < best_res {
            best = next;
            best_res = res;
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
        x = next;
    }
    best
}
