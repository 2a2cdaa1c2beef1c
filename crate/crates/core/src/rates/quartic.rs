use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::covariance::cross_term;
use crate::error::{Error, Result};
use crate::polynomial::{real_roots, relative_residual};

use super::{
    kramer_equal_gain, rate_no_interference_m, verify_theorem2_aligned, RateSolution, Scheme,
    Theorem2Diagnostics,
};

/// Quartic in `β` and its auxiliary `Y` terms for a given `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticCoefficients {
    /// `Z0..Z4` (index = power of `β`).
    pub z: [f64; 5],
    /// `Y0..Y2`.
    pub y: [f64; 3],
    /// Coefficients in `x = β√A`, highest degree first.
    pub scaled: [f64; 5],
}

impl QuarticCoefficients {
    /// Built from `A`-normalized sums so that large `A^M` never overflows.
    pub fn new(a_coef: f64, a: f64, p: f64, m: usize) -> Self {
        let mf = m as f64;
        let inv = 1.0 / a_coef;
        // S / A^(M-2) and G / A^(M-1)
        let s_hat = (0..m - 1).fold(0.0, |acc, j| acc * inv + (j + 1) as f64);
        let g_hat = (0..m).fold(0.0, |acc, _| acc * inv + 1.0);
        let y0_n = (a_coef - 1.0) * g_hat / (a_coef * s_hat);
        let y1_n = -2.0 * a * mf / s_hat;
        let kappa = a * ((mf - 2.0) * a + 2.0);
        let y2_n = g_hat / (p * s_hat) + mf * kappa / s_hat;

        let om = 1.0 - a;
        let k = kappa / (p * om.powi(4));
        let l = 2.0 * a / (p * om.powi(3));
        let y2 = y2_n / (om * om);
        let y1 = y1_n / om;
        let scaled = [
            k + y2 + y0_n,
            -4.0 * k + l - 2.0 * y2 - y1,
            6.0 * k - 3.0 * l + y2 + y1,
            -4.0 * k + 3.0 * l,
            k - l,
        ];
        let sa = a_coef.sqrt();
        let mut z = [0.0; 5];
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = scaled[4 - i] * sa.powi(i as i32);
        }
        let y = [y0_n * a_coef * a_coef, y1_n * a_coef, y2_n * a_coef];
        Self { z, y, scaled }
    }

    /// `Σ Z_i β^i`.
    pub fn eval(&self, beta: f64) -> f64 {
        self.z.iter().rev().fold(0.0, |acc, &c| acc * beta + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.z.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One admissible root of the quartic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticRoot {
    pub beta: f64,
    pub b: f64,
    /// Aligned gain `1 - b(1+(M-1)a)`.
    pub q: f64,
    pub lambda: f64,
    /// `|Σ Z_i β^i| / Σ |Z_i β^i|`.
    pub residual: f64,
    /// `|Σ Z_i β^i| / max |Z_i|`.
    pub residual_max_coef: f64,
    pub diagnostics: Theorem2Diagnostics,
}

/// `Ma / ((M-2)a + 2)`, the far end of the admissible range of `β√A`.
fn x_bound(a: f64, m: usize) -> f64 {
    let mf = m as f64;
    mf * a / ((mf - 2.0) * a + 2.0)
}

// ascending-order polynomial product
fn pmul(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len() + v.len() - 1];
    for (i, x) in u.iter().enumerate() {
        for (j, y) in v.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// The same steady-state system as the quartic in `β`, written in the
/// aligned gain `q = 1 - b(1+(M-1)a)` and divided by `A^M`. Ascending order.
///
/// With `κ = 1+(M-1)a`: `b = (1-q)/κ`, `β√A = (Ma + q(1-a))/κ`, and the
/// closure equation becomes
/// `(c²A^{-M} - q²)L(q) - Ĝ/(MP) b²(q² - c²) = 0` with
/// `L = c²(1-A)/A - b²/P`, `Ĝ = Σ_{j<M} A^{-j}`.
pub fn aligned_polynomial(a_coef: f64, a: f64, p: f64, m: usize) -> Vec<f64> {
    let mf = m as f64;
    let kappa = 1.0 + (mf - 1.0) * a;
    let bq = [1.0 / kappa, -1.0 / kappa];
    let cq = [mf * a / kappa, (1.0 - a) / kappa];
    let b2 = pmul(&bq, &bq);
    let c2 = pmul(&cq, &cq);
    let inv = 1.0 / a_coef;
    let g_hat = (0..m).fold(0.0, |acc, _| acc * inv + 1.0);
    let a_neg_m = (-mf * a_coef.ln()).exp();
    let shrink = (1.0 - a_coef) / a_coef;
    let l: Vec<f64> = (0..3).map(|k| c2[k] * shrink - b2[k] / p).collect();
    let mut t1: Vec<f64> = c2.iter().map(|v| v * a_neg_m).collect();
    t1[2] -= 1.0;
    let left = pmul(&t1, &l);
    let q2_minus_c2 = [-c2[0], -c2[1], 1.0 - c2[2]];
    let right = pmul(&b2, &q2_minus_c2);
    let w = g_hat / (mf * p);
    left.iter().zip(&right).map(|(x, y)| x - w * y).collect()
}

/// Admissible roots `β` of the quartic at fixed `A`, ascending. A root is
/// admissible when `β√A` lies strictly inside the range fixed by `a`, the
/// recovered `λ` lies in `(0, M)` and the triple closes the steady-state
/// equations. Roots are located in the aligned-gain form, which stays well
/// conditioned when `q` is near zero.
pub fn quartic_beta(a_coef: f64, a: f64, p: f64, m: usize) -> Result<Vec<QuarticRoot>> {
    if !(a_coef > 1.0) || a == 0.0 || a == 1.0 || !(p > 0.0) || m < 2 {
        return Err(Error::DomainError(format!(
            "quartic needs A > 1, a not in {{0, 1}}, P > 0, M >= 2 (A={a_coef}, a={a}, P={p}, M={m})"
        )));
    }
    let mf = m as f64;
    let zq = QuarticCoefficients::new(a_coef, a, p, m);
    let bound = x_bound(a, m);
    let (lo, hi) = if a < 1.0 { (bound, 1.0) } else { (1.0, bound) };
    let sa = a_coef.sqrt();
    let max_z = zq.max_abs();
    let kappa = 1.0 + (mf - 1.0) * a;
    let mut poly = aligned_polynomial(a_coef, a, p, m);
    poly.reverse();
    let mut out = Vec::new();
    for q in real_roots(&poly, 1e-9) {
        let x = (mf * a + q * (1.0 - a)) / kappa;
        if !(x > lo && x < hi) {
            continue;
        }
        let beta = x / sa;
        let b = (1.0 - q) / kappa;
        let lambda = (x * x * (1.0 / a_coef - 1.0) - b * b / p) / cross_term(b, a, m);
        let diagnostics = verify_theorem2_aligned(b, q, beta, lambda, a, p, m);
        if !diagnostics.feasible() {
            continue;
        }
        out.push(QuarticRoot {
            beta,
            b,
            q,
            lambda,
            residual: relative_residual(&zq.scaled, x),
            residual_max_coef: zq.eval(beta).abs() / max_z,
            diagnostics,
        });
    }
    if out.is_empty() {
        return Err(Error::NoAdmissibleRoot);
    }
    out.sort_by(|u, v| u.beta.partial_cmp(&v.beta).unwrap());
    Ok(out)
}

/// Search grid over `A > 1`: `A - 1` log-spaced in `[min_excess, a_max - 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AGrid {
    pub points: usize,
    pub min_excess: f64,
    pub a_max: f64,
}

impl AGrid {
    /// 64 points reaching `10 · max(P, a²P, 2)`.
    pub fn for_channel(a: f64, p: f64) -> Self {
        Self {
            points: 64,
            min_excess: 1e-3,
            a_max: 10.0 * p.max(a * a * p).max(2.0),
        }
    }

    fn log_excess(&self, i: usize) -> f64 {
        let t0 = self.min_excess.ln();
        let t1 = (self.a_max - 1.0).ln();
        t0 + (t1 - t0) * i as f64 / (self.points - 1) as f64
    }
}

fn smallest_root(t: f64, a: f64, p: f64, m: usize) -> Option<QuarticRoot> {
    let a_coef = 1.0 + t.exp();
    quartic_beta(a_coef, a, p, m).ok().map(|mut v| v.swap_remove(0))
}

/// Best quartic rate over `A > 1` (grid plus golden-section refinement).
///
/// `a = 1` is answered by the equal-gain fixed point; `a` within `1e-6` of 1
/// is moved to `1 ± 1e-6`. `M = 1` has no interference.
pub fn theorem3_rate(a: f64, p: f64, m: usize) -> Result<RateSolution> {
    theorem3_rate_with_grid(a, p, m, AGrid::for_channel(a, p))
}

pub fn theorem3_rate_with_grid(a: f64, p: f64, m: usize, grid: AGrid) -> Result<RateSolution> {
    if a == 0.0 {
        return Err(Error::DegenerateGain);
    }
    if m == 1 {
        return rate_no_interference_m(p, 1);
    }
    if a == 1.0 {
        return kramer_equal_gain(m, p);
    }
    let a = if (a - 1.0).abs() < 1e-6 {
        if a < 1.0 {
            1.0 - 1e-6
        } else {
            1.0 + 1e-6
        }
    } else {
        a
    };
    let params = ChannelParams::new(m, a, p)?;
    if grid.points < 2 {
        return Err(Error::EmptyGrid);
    }
    let found: Vec<(f64, Option<QuarticRoot>)> = (0..grid.points)
        .into_par_iter()
        .map(|i| {
            let t = grid.log_excess(i);
            (t, smallest_root(t, a, p, m))
        })
        .collect();
    let beta_of = |r: &Option<QuarticRoot>| r.as_ref().map_or(f64::INFINITY, |r| r.beta);
    let (best_i, _) = found
        .iter()
        .enumerate()
        .min_by(|x, y| beta_of(&x.1 .1).partial_cmp(&beta_of(&y.1 .1)).unwrap())
        .unwrap();
    let mut best_t = found[best_i].0;
    let mut best = found[best_i].1.clone().ok_or(Error::NoAdmissibleRoot)?;

    let mut lo = found[best_i.saturating_sub(1)].0;
    let mut hi = found[(best_i + 1).min(grid.points - 1)].0;
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |t: f64| smallest_root(t, a, p, m);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut r1 = eval(x1);
    let mut r2 = eval(x2);
    for _ in 0..100 {
        for (t, r) in [(x1, &r1), (x2, &r2)] {
            if let Some(r) = r {
                if r.beta < best.beta {
                    best = r.clone();
                    best_t = t;
                }
            }
        }
        if hi - lo < 1e-12 {
            break;
        }
        if beta_of(&r1) < beta_of(&r2) {
            hi = x2;
            x2 = x1;
            r2 = r1;
            x1 = hi - gr * (hi - lo);
            r1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            r1 = r2;
            x2 = lo + gr * (hi - lo);
            r2 = eval(x2);
        }
    }
    let mut sol = RateSolution::from_diagnostics(Scheme::Quartic, params, best.b, best.beta, best.diagnostics);
    sol.a_coef = Some(1.0 + best_t.exp());
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    // coefficients straight from the defining formulas
    fn direct(a_coef: f64, a: f64, p: f64, m: usize) -> ([f64; 5], [f64; 3]) {
        let mf = m as f64;
        let am = a_coef.powi(m as i32);
        let am1 = a_coef.powi(m as i32 - 1);
        let den = -mf * am1 + (am - 1.0) / (a_coef - 1.0);
        let kappa = a * ((mf - 2.0) * a + 2.0);
        let y0 = -(am - 1.0) * (a_coef - 1.0) / den;
        let y1 = mf * (a_coef - 1.0) * am1 / den * 2.0 * a;
        let y2 = -(am - 1.0) / (p * den) - mf * (a_coef - 1.0) * am1 / den * kappa;
        let om = 1.0 - a;
        let k = kappa / (p * om.powi(4));
        let l = 2.0 * a / (p * om.powi(3));
        let s = a_coef.sqrt();
        let z4 = y0 + a_coef * y2 / (om * om) + k * a_coef * a_coef;
        let z3 = -4.0 * s.powi(3) * k + l * s.powi(3) - 2.0 * y2 * s / (om * om) - y1 * s / om;
        let z2 = 6.0 * a_coef * k - 3.0 * a_coef * l + y2 / (om * om) + y1 / om;
        let z1 = -4.0 * s * k + 3.0 * s * l;
        let z0 = k - l;
        ([z0, z1, z2, z3, z4], [y0, y1, y2])
    }

    #[test]
    fn coefficients_match_definitions() {
        for &(a_coef, a, p, m) in &[
            (10.0, 0.5, 100.0, 2usize),
            (3.0, 3.0, 1e4, 4),
            (1.7, 0.3, 10.0, 8),
            (50.0, 2.0, 1e3, 4),
        ] {
            let q = QuarticCoefficients::new(a_coef, a, p, m);
            let (z, y) = direct(a_coef, a, p, m);
            for i in 0..5 {
                assert!((q.z[i] - z[i]).abs() <= 1e-12 * z[i].abs().max(1e-300), "Z{i}: {} vs {}", q.z[i], z[i]);
            }
            for i in 0..3 {
                assert!((q.y[i] - y[i]).abs() <= 1e-12 * y[i].abs(), "Y{i}");
            }
        }
    }

    #[test]
    fn example_grid_point() {
        let roots = quartic_beta(10.0, 0.5, 100.0, 2).unwrap();
        let q = QuarticCoefficients::new(10.0, 0.5, 100.0, 2);
        for r in &roots {
            assert!(q.eval(r.beta).abs() < 1e-9 * q.max_abs());
            let x = r.beta * 10f64.sqrt();
            assert!(x > 0.5 && x < 1.0);
        }
        let two = super::super::rate_two_user(0.5, 100.0).unwrap();
        let r = super::super::symmetric_rate(roots[0].beta);
        assert!((r - two.r_sym).abs() < 0.2, "{r} vs {}", two.r_sym);
    }

    #[test]
    fn aligned_form_has_the_same_roots() {
        for &(a_coef, a, p, m) in &[(10.0, 0.5, 100.0, 2usize), (5.0, 3.0, 100.0, 4), (2.0, 0.3, 10.0, 4)] {
            let zq = QuarticCoefficients::new(a_coef, a, p, m);
            let mf = m as f64;
            let kappa = 1.0 + (mf - 1.0) * a;
            let mut poly = aligned_polynomial(a_coef, a, p, m);
            poly.reverse();
            let xs: Vec<f64> = real_roots(&poly, 1e-10)
                .iter()
                .map(|q| (mf * a + q * (1.0 - a)) / kappa)
                .collect();
            let mut direct = real_roots(&zq.scaled, 1e-10);
            direct.retain(|x| xs.iter().any(|y| (x - y).abs() < 1e-6));
            assert_eq!(direct.len(), real_roots(&zq.scaled, 1e-10).len(), "{a_coef} {a} {p} {m}");
            for x in xs {
                assert!(relative_residual(&zq.scaled, x) < 1e-12);
            }
        }
    }

    #[test]
    fn domain_checked() {
        assert!(quartic_beta(0.5, 0.5, 10.0, 2).is_err());
        assert!(quartic_beta(2.0, 1.0, 10.0, 2).is_err());
    }

    #[test]
    fn routing() {
        let k = theorem3_rate(1.0, 10.0, 4).unwrap();
        assert_eq!(k.scheme, Scheme::KramerEqualGain);
        assert_eq!(theorem3_rate(0.0, 10.0, 2), Err(Error::DegenerateGain));
        assert_eq!(theorem3_rate(0.5, 10.0, 1).unwrap().scheme, Scheme::NoInterference);
    }
}
