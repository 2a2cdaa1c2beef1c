use crate::channel::ChannelParams;
use crate::error::{Error, Result};

use super::{RateSolution, Scheme};

/// Coefficients (highest degree first) of the two-user Kramer quartic in `ρ`.
pub fn kramer_quartic(a: f64, p: f64) -> [f64; 5] {
    let k = a * a * p + 1.0;
    [
        2.0 * a.powi(3) * p * p,
        a * a * p,
        -4.0 * a * p * k,
        -(2.0 * a * a * p + p + 2.0),
        2.0 * a * p * k,
    ]
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kramer's two-user code: the unique `ρ ∈ (0, 1)` of the quartic.
pub fn kramer_two_user(a: f64, p: f64) -> Result<RateSolution> {
    let params = ChannelParams::new(2, a, p)?;
    if !(a > 0.0) {
        return Err(Error::DegenerateGain);
    }
    let c = kramer_quartic(a, p);
    let f = |r: f64| crate::polynomial::eval(&c, r);
    let (f0, f1) = (f(0.0), f(1.0));
    if !(f0 > 0.0 && f1 < 0.0) {
        return Err(Error::RootNotBracketed(format!("f(0)={f0}, f(1)={f1}")));
    }
    let rho = bisect(f, 0.0, 1.0);
    let den = p * (1.0 + a * a + 2.0 * a * rho) + 1.0;
    let b = p * (1.0 + a * rho) / den;
    let beta = ((a * a * p * (1.0 - rho * rho) + 1.0) / den).sqrt();
    let mut sol = RateSolution::from_triple(Scheme::KramerTwoUser, params, b, beta, 1.0 + rho);
    sol.rho = Some(rho);
    Ok(sol)
}

/// Relative residual of the equal-gain fixed-point equation at `λ`.
pub fn kramer_equal_gain_residual(lambda: f64, m: usize, p: f64) -> f64 {
    let mf = m as f64;
    let q = p * mf * lambda + 1.0;
    let r = (p * lambda * (mf - lambda) + 1.0) / q;
    let first = (lambda + 1.0 / q) * r.powi(m as i32);
    let second = 1.0 / q;
    let rhs = q * q * (first - second);
    (lambda - rhs).abs() / (lambda.abs() + q * q * (first.abs() + second))
}

// fixed-point equation with the trivial root at λ = 0 divided out
fn reduced(lambda: f64, m: usize, p: f64) -> f64 {
    let mf = m as f64;
    let q = p * mf * lambda + 1.0;
    let r = (p * lambda * (mf - lambda) + 1.0) / q;
    ((lambda + 1.0 / q) * r.powi(m as i32) - (lambda + q) / (q * q)) / lambda
}

/// Equal-gain (`a = 1`) fixed point `λ ∈ (0, M)`.
pub fn kramer_equal_gain(m: usize, p: f64) -> Result<RateSolution> {
    let params = ChannelParams::new(m, 1.0, p)?;
    let mf = m as f64;
    if m == 1 {
        let b = p / (p + 1.0);
        let beta = (1.0 / (p + 1.0)).sqrt();
        return Ok(RateSolution::from_triple(Scheme::KramerEqualGain, params, b, beta, 1.0));
    }
    const SCAN: usize = 4096;
    let mut best: Option<RateSolution> = None;
    let mut prev_x = mf * 1e-9;
    let mut prev_f = reduced(prev_x, m, p);
    for i in 1..=SCAN {
        let x = mf * i as f64 / SCAN as f64 * (1.0 - 1e-12);
        let fx = reduced(x, m, p);
        if prev_f.is_finite() && fx.is_finite() && (prev_f < 0.0) != (fx < 0.0) {
            let lambda = bisect(|l| reduced(l, m, p), prev_x, x);
            let q = p * mf * lambda + 1.0;
            let b = p * lambda / q;
            let beta = ((p * lambda * (mf - lambda) + 1.0) / q).sqrt();
            let sol = RateSolution::from_triple(Scheme::KramerEqualGain, params, b, beta, lambda);
            let d = &sol.diagnostics;
            if d.a_coef > 1.0 && d.b_coef > 0.0 && best.as_ref().map_or(true, |s| sol.r_sym > s.r_sym) {
                best = Some(sol);
            }
        }
        prev_x = x;
        prev_f = fx;
    }
    best.ok_or_else(|| Error::RootNotBracketed(format!("no sign change on (0, {m})")))
}
