use crate::channel::ChannelParams;
use crate::covariance::{cross_term, direct_gain};
use crate::error::{Error, Result};

use super::{RateSolution, Scheme};

const GRID_POINTS: usize = 2001;

/// `ξ(ρ, b) = P / (P + b²[1 + P + a²P + 2aPρ] - 2bP[1 + aρ])`.
pub fn xi(rho: f64, b: f64, a: f64, p: f64) -> f64 {
    p / (p + b * b * (1.0 + p + a * a * p + 2.0 * a * p * rho) - 2.0 * b * p * (1.0 + a * rho))
}

/// Largest admissible correlation `ρ0`.
pub fn rho_max(a: f64, p: f64) -> f64 {
    let a2p2 = a * a * p * p;
    ((a2p2 + p - (p * (2.0 * a2p2 + p)).sqrt()) / a2p2).sqrt()
}

/// Both roots in `b` of the two-user quadratic at fixed `ρ`, if real.
fn b_roots(rho: f64, a: f64, p: f64) -> Option<(f64, f64)> {
    let qa = 2.0 * a * p + 2.0 * p * rho + 2.0 * a * a * p * rho + rho + 2.0 * a * p * rho * rho;
    let half_qb = 2.0 * p * rho + a * p + a * p * rho * rho;
    let qc = 2.0 * p * rho;
    let disc = p * p * a * a * rho.powi(4) - 2.0 * rho * rho * (a * a * p * p + p) + a * a * p * p;
    if disc < 0.0 {
        return None;
    }
    let big = half_qb + disc.sqrt();
    // product of roots is qc/qa
    Some((big / qa, qc / big))
}

fn best_at(rho: f64, a: f64, p: f64) -> Option<(f64, f64)> {
    let (b1, b2) = b_roots(rho, a, p)?;
    let x1 = xi(rho, b1, a, p);
    let x2 = xi(rho, b2, a, p);
    let pick = |x: f64| if x.is_finite() && x > 0.0 { x } else { f64::NEG_INFINITY };
    if pick(x1) >= pick(x2) {
        Some((b1, pick(x1)))
    } else {
        Some((b2, pick(x2)))
    }
}

fn score(rho: f64, a: f64, p: f64) -> f64 {
    best_at(rho, a, p).map_or(f64::NEG_INFINITY, |(_, x)| x)
}

/// Residuals of the two defining equations (power and correlation) at
/// `(b, β, ρ)`, each relative to the magnitude of its terms.
pub fn two_user_residuals(b: f64, beta: f64, rho: f64, a: f64, p: f64) -> (f64, f64) {
    let beta2 = beta * beta;
    let t1 = b * b * (1.0 + p + a * a * p + 2.0 * a * rho * p);
    let t2 = 2.0 * b * p * (1.0 + a * rho);
    let r_power = (p * beta2 - (p - t2 + t1)).abs() / (p * beta2 + p + t1 + t2);
    let s1 = 2.0 * b * (rho + a);
    let s2 = b * b * (rho * (1.0 + a * a) + 2.0 * a);
    let r_corr = (-rho * beta2 - (rho - s1 + s2)).abs() / (rho * beta2 + rho + s1 + s2);
    (r_power, r_corr)
}

/// Two-user rate maximized over `ρ ∈ [0, ρ0]` and both quadratic roots.
pub fn rate_two_user(a: f64, p: f64) -> Result<RateSolution> {
    if a == 0.0 {
        return Err(Error::DegenerateGain);
    }
    let params = ChannelParams::new(2, a, p)?;
    let rho0 = rho_max(a, p);
    let step = rho0 / (GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let v = score(i as f64 * step, a, p);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = best_i.saturating_sub(1) as f64 * step;
    let mut hi = ((best_i + 1).min(GRID_POINTS - 1) as f64 * step).min(rho0);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = score(x1, a, p);
    let mut f2 = score(x2, a, p);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * rho0.max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = score(x2, a, p);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = score(x1, a, p);
        }
    }
    let mut rho = best_i as f64 * step;
    for cand in [x1, x2] {
        if score(cand, a, p) > score(rho, a, p) {
            rho = cand;
        }
    }
    let (b, x) = best_at(rho, a, p).ok_or(Error::NoAdmissibleRoot)?;
    let mut sol = RateSolution::from_triple(Scheme::TwoUser, params, b, 1.0 / x.sqrt(), 1.0 + rho);
    sol.rho = Some(rho);
    if let Some(beta2) = polish_beta2(b, 1.0 / x, a, p) {
        let lambda = steady_lambda(b, beta2, a, p);
        let mut polished = RateSolution::from_triple(Scheme::TwoUser, params, b, beta2.sqrt(), lambda);
        let worst = |s: &RateSolution| s.diagnostics.residual_beta.max(s.diagnostics.residual_closure);
        if worst(&polished) < worst(&sol) {
            polished.rho = Some(lambda - 1.0);
            sol = polished;
        }
    }
    Ok(sol)
}

/// `λ` solving `β² = g_λ(b)`.
fn steady_lambda(b: f64, beta2: f64, a: f64, p: f64) -> f64 {
    let c = direct_gain(b, a);
    (beta2 - c * c - b * b / p) / cross_term(b, a, 2)
}

/// Newton refinement of `β²` at fixed `b` on the closure condition
/// `(s² - q²c²) λ(s) = (b²/P)(s + c²)` with `s = β²`.
///
/// Near `ρ = ρ0` the quadratic in `b` has a double root, so `b` carries
/// `√ε` error; re-solving `β²` for that `b` restores a consistent triple.
fn polish_beta2(b: f64, beta2: f64, a: f64, p: f64) -> Option<f64> {
    let c2 = direct_gain(b, a).powi(2);
    let q = 1.0 - b * (1.0 + a);
    let qc2 = q * q * c2;
    let d = cross_term(b, a, 2);
    let k = b * b / p;
    if d == 0.0 {
        return None;
    }
    let mut s = beta2;
    for _ in 0..50 {
        let lam_d = s - c2 - k;
        let g = (s * s - qc2) * lam_d / d - k * (s + c2);
        let dg = (2.0 * s * lam_d + s * s - qc2) / d - k;
        if dg == 0.0 || !dg.is_finite() {
            return None;
        }
        let step = g / dg;
        s -= step;
        if !(s > 0.0) {
            return None;
        }
        if step.abs() <= 1e-17 * s {
            break;
        }
    }
    Some(s)
}
