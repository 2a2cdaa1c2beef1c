use crate::error::{Error, Result};

use super::{theorem3_rate, QuarticCoefficients};

/// Per-user GDoF of the scheme: `1 - α/2` below 1, `α/2` above.
pub fn gdof_closed_form(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::DomainError(format!("alpha={alpha} must be > 0")));
    }
    if alpha == 1.0 {
        return Err(Error::UndefinedAtOne);
    }
    Ok(if alpha > 1.0 { alpha / 2.0 } else { 1.0 - alpha / 2.0 })
}

/// `d̂(P) = R_sym / (½ log P)` along a ladder of powers with `a = P^((α-1)/2)`.
pub fn gdof_numeric(alpha: f64, m: usize, ladder: &[f64]) -> Result<Vec<(f64, f64)>> {
    if alpha == 1.0 {
        return Err(Error::UndefinedAtOne);
    }
    if ladder.is_empty() {
        return Err(Error::EmptyGrid);
    }
    ladder
        .iter()
        .map(|&p| {
            if !(p > 1.0) {
                return Err(Error::DomainError(format!("ladder power {p} must exceed 1")));
            }
            let a = p.powf((alpha - 1.0) / 2.0);
            let sol = theorem3_rate(a, p, m)?;
            Ok((p, sol.r_sym / (0.5 * p.log2())))
        })
        .collect()
}

/// Asymptotic parameter choice at a given `(α, P, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GdofParams {
    pub v: f64,
    pub gamma: f64,
    pub a_coef: f64,
    pub beta: f64,
    pub b: f64,
    /// `|Σ Z_i β^i| / max_i |Z_i β^i|` at these parameters.
    pub residual: f64,
}

pub fn gdof_params(alpha: f64, p: f64, m: usize) -> Result<GdofParams> {
    if alpha == 1.0 {
        return Err(Error::UndefinedAtOne);
    }
    if m < 2 {
        return Err(Error::DomainError("M must be at least 2".into()));
    }
    let mf = m as f64;
    let v = alpha / 2.0;
    let a_coef = p.powf(v);
    let (gamma, beta) = if alpha > 1.0 {
        let g = mf / (mf - 1.0);
        (g, p.powf(-alpha / 4.0) * g)
    } else {
        (mf, p.powf(alpha / 4.0 - 0.5) * mf)
    };
    let a = p.powf((alpha - 1.0) / 2.0);
    let b = (1.0 - beta * a_coef.sqrt()) / (1.0 - a);
    let q = QuarticCoefficients::new(a_coef, a, p, m);
    let largest = q
        .z
        .iter()
        .enumerate()
        .fold(0.0, |acc: f64, (i, z)| acc.max((z * beta.powi(i as i32)).abs()));
    Ok(GdofParams {
        v,
        gamma,
        a_coef,
        beta,
        b,
        residual: q.eval(beta).abs() / largest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form() {
        assert_eq!(gdof_closed_form(2.0).unwrap(), 1.0);
        assert_eq!(gdof_closed_form(0.5).unwrap(), 0.75);
        assert!((gdof_closed_form(1.0 - 1e-12).unwrap() - 0.5).abs() < 1e-11);
        assert!((gdof_closed_form(1.0 + 1e-12).unwrap() - 0.5).abs() < 1e-11);
        assert_eq!(gdof_closed_form(1.0), Err(Error::UndefinedAtOne));
    }

    #[test]
    fn params_examples() {
        let g = gdof_params(2.0, 1e6, 2).unwrap();
        assert_eq!(g.gamma, 2.0);
        let g = gdof_params(0.5, 1e6, 3).unwrap();
        assert_eq!(g.gamma, 3.0);
        assert_eq!(g.v, 0.25);
    }

    #[test]
    fn ladder_of_one() {
        let l = gdof_numeric(2.0, 2, &[1e3]).unwrap();
        assert_eq!(l.len(), 1);
        assert!(gdof_numeric(2.0, 2, &[1.0]).is_err());
    }

    const LADDER: [f64; 3] = [1e3, 1e6, 1e9];

    fn values(alpha: f64, m: usize) -> Vec<f64> {
        gdof_numeric(alpha, m, &LADDER).unwrap().into_iter().map(|(_, d)| d).collect()
    }

    #[test]
    fn ladder_alpha_two_ends_near_one() {
        let d = values(2.0, 2);
        assert!((d[2] - 1.0).abs() <= 0.05, "{d:?}");
    }

    #[test]
    fn ladder_alpha_two_increases() {
        let d = values(2.0, 2);
        assert!(d.windows(2).all(|w| w[1] > w[0]), "{d:?}");
    }

    #[test]
    fn ladder_alpha_half_ends_near_three_quarters() {
        let d = values(0.5, 2);
        assert!((d[2] - 0.75).abs() <= 0.05, "{d:?}");
    }

    #[test]
    fn ladder_alpha_two_four_users() {
        let d = values(2.0, 4);
        assert!((d[2] - 1.0).abs() <= 0.05, "{d:?}");
    }
}
