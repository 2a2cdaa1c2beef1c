//! Achievable symmetric rates: steady-state checks, closed forms and solvers.

mod gdof;
mod kramer;
mod quartic;
mod two_user;

pub use gdof::{gdof_closed_form, gdof_numeric, gdof_params, GdofParams};
pub use kramer::{kramer_equal_gain, kramer_equal_gain_residual, kramer_quartic, kramer_two_user};
pub use quartic::{
    aligned_polynomial, quartic_beta, theorem3_rate, theorem3_rate_with_grid, AGrid, QuarticCoefficients, QuarticRoot,
};
pub use two_user::{rate_two_user, rho_max, two_user_residuals, xi};

use crate::channel::ChannelParams;
use crate::covariance::{cross_term, direct_gain, SteadyTarget};
use crate::error::{Error, Result};

/// Strict margin kept from the ends of `0 < λ < M`.
pub const LAMBDA_MARGIN: f64 = 1e-9;
/// Largest residual accepted by [`Theorem2Diagnostics::feasible`].
pub const RESIDUAL_TOL: f64 = 1e-9;

/// `½ log⁺(1/β²)` in bits.
pub fn symmetric_rate(beta: f64) -> f64 {
    (-beta.log2()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    NoInterference,
    TwoUser,
    KramerTwoUser,
    KramerEqualGain,
    Quartic,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::NoInterference => "no-interference",
            Scheme::TwoUser => "proposed-two-user",
            Scheme::KramerTwoUser => "kramer-two-user",
            Scheme::KramerEqualGain => "kramer-equal-gain",
            Scheme::Quartic => "proposed-quartic",
        }
    }
}

/// Which branch of the ordering condition applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingBranch {
    /// `A = C ≠ 1` with all eigenvalues equal.
    Degenerate,
    /// `A ≠ 0`, `A ≠ C`, `(λ^(k) - λ^(k+1))/(A - C) > 0`.
    General,
    /// Neither branch holds.
    Violated,
}

/// Steady-state consistency report for a triple `(b, β, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Diagnostics {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    /// Eigenvalues `λ^(1..M)` generated from `λ`.
    pub lambdas: Vec<f64>,
    /// Relative residual of the `β²` equation.
    pub residual_beta: f64,
    /// Relative residual of the cyclic closure equation.
    pub residual_closure: f64,
    /// `LAMBDA_MARGIN < λ < M - LAMBDA_MARGIN`.
    pub lambda_in_range: bool,
    pub ordering: OrderingBranch,
}

impl Theorem2Diagnostics {
    pub fn feasible(&self) -> bool {
        self.residual_beta <= RESIDUAL_TOL
            && self.residual_closure <= RESIDUAL_TOL
            && self.lambda_in_range
            && self.ordering != OrderingBranch::Violated
    }
}

/// Σ_{j<M} A^j.
pub(crate) fn geometric_sum(a: f64, m: usize) -> f64 {
    (0..m).fold(0.0, |acc, _| acc * a + 1.0)
}

/// Eigenvalue chain `λ^(1..M)` of the steady state. Uses the division form
/// `λ^(k+1) = (λ^(k) - B)/A` when `A ≥ 1`, otherwise the equivalent
/// multiplication form run backward from `λ^(M) = Cλ + B`.
pub fn lambda_chain(lambda: f64, a: f64, b: f64, c: f64, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    out[0] = lambda;
    if m == 1 {
        return out;
    }
    if a >= 1.0 {
        for k in 1..m {
            out[k] = (out[k - 1] - b) / a;
        }
    } else {
        out[m - 1] = c * lambda + b;
        for k in (1..m - 1).rev() {
            out[k] = a * out[k + 1] + b;
        }
    }
    out
}

/// Check the steady-state conditions for `(b, β, λ)`.
pub fn verify_theorem2(b: f64, beta: f64, lambda: f64, a: f64, p: f64, m: usize) -> Theorem2Diagnostics {
    let q = 1.0 - b * (1.0 + (m as f64 - 1.0) * a);
    verify_theorem2_aligned(b, q, beta, lambda, a, p, m)
}

/// As [`verify_theorem2`], with `q = 1 - b(1+(M-1)a)` supplied by the caller.
/// Near `q = 0` the subtraction loses digits, so solvers that know `q`
/// accurately pass it here.
pub fn verify_theorem2_aligned(
    b: f64,
    q: f64,
    beta: f64,
    lambda: f64,
    a: f64,
    p: f64,
    m: usize,
) -> Theorem2Diagnostics {
    let beta2 = beta * beta;
    let c = direct_gain(b, a);
    let d = cross_term(b, a, m);
    let a_coef = c * c / beta2;
    let b_coef = b * b / (p * beta2);
    let c_coef = q * q / beta2;

    let g = c * c + lambda * d + b * b / p;
    let residual_beta = (beta2 - g).abs() / (beta2 + c * c + (lambda * d).abs() + b * b / p);

    let pow = a_coef.powi(m as i32 - 1);
    let gsum = geometric_sum(a_coef, m);
    let lhs = (1.0 - c_coef * pow) * lambda;
    let rhs = b_coef * gsum;
    let scale = lambda.abs() + (c_coef * pow * lambda).abs() + rhs.abs();
    let mut residual_closure = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };

    let lambdas = lambda_chain(lambda, a_coef, b_coef, c_coef, m);
    if m > 1 {
        // closing link of the chain not used to build it
        let link = if a_coef >= 1.0 {
            let last = lambdas[m - 1];
            (c_coef * lambda + b_coef - last).abs() / (c_coef * lambda.abs() + b_coef + last.abs())
        } else {
            let second = lambdas[1];
            (a_coef * second + b_coef - lambda).abs() / (a_coef * second.abs() + b_coef + lambda.abs())
        };
        if link.is_finite() {
            residual_closure = residual_closure.max(link);
        } else {
            residual_closure = f64::INFINITY;
        }
    }

    let mf = m as f64;
    // a single user has R = [1]
    let lambda_in_range = if m == 1 {
        (lambda - 1.0).abs() <= RESIDUAL_TOL
    } else {
        lambda > LAMBDA_MARGIN && lambda < mf - LAMBDA_MARGIN
    };

    let equal = lambdas
        .iter()
        .all(|l| (l - lambda).abs() <= 1e-9 * lambda.abs().max(1.0));
    let a_eq_c = (a_coef - c_coef).abs() <= 1e-12 * a_coef.abs().max(c_coef.abs());
    let ordering = if m == 1 {
        OrderingBranch::General
    } else if a_eq_c {
        if equal && (a_coef - 1.0).abs() > 1e-12 {
            OrderingBranch::Degenerate
        } else {
            OrderingBranch::Violated
        }
    } else if a_coef != 0.0
        && lambdas
            .windows(2)
            .all(|w| (w[0] - w[1]) / (a_coef - c_coef) > 0.0)
    {
        OrderingBranch::General
    } else {
        OrderingBranch::Violated
    };

    Theorem2Diagnostics {
        a_coef,
        b_coef,
        c_coef,
        lambdas,
        residual_beta,
        residual_closure,
        lambda_in_range,
        ordering,
    }
}

/// Steady-state eigenvalues from `(A, B, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyLambda {
    pub lambdas: Vec<f64>,
    /// All entries inside `(0, M)`.
    pub feasible: bool,
}

pub fn steady_state_lambda(a: f64, b: f64, c: f64, m: usize) -> Result<SteadyLambda> {
    let lambda = if (a - c).abs() <= 1e-12 * a.abs().max(c.abs()) && (a - 1.0).abs() > 1e-12 {
        b / (1.0 - a)
    } else {
        let den = 1.0 - c * a.powi(m as i32 - 1);
        if den == 0.0 {
            return Err(Error::SingularSystem);
        }
        b * geometric_sum(a, m) / den
    };
    let lambdas = lambda_chain(lambda, a, b, c, m);
    let mf = m as f64;
    let feasible = lambdas.iter().all(|&l| l > 0.0 && l < mf);
    Ok(SteadyLambda { lambdas, feasible })
}

/// A steady-state rate with its triple and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    pub scheme: Scheme,
    pub params: ChannelParams,
    pub b: f64,
    pub beta: f64,
    pub lambdas: Vec<f64>,
    pub r_sym: f64,
    pub diagnostics: Theorem2Diagnostics,
    /// Correlation `ρ` for two-user solutions.
    pub rho: Option<f64>,
    /// The `A` at which a quartic solution was found.
    pub a_coef: Option<f64>,
}

impl RateSolution {
    pub(crate) fn from_triple(
        scheme: Scheme,
        params: ChannelParams,
        b: f64,
        beta: f64,
        lambda: f64,
    ) -> Self {
        let diagnostics = verify_theorem2(b, beta, lambda, params.a, params.p, params.m);
        Self::from_diagnostics(scheme, params, b, beta, diagnostics)
    }

    pub(crate) fn from_diagnostics(
        scheme: Scheme,
        params: ChannelParams,
        b: f64,
        beta: f64,
        diagnostics: Theorem2Diagnostics,
    ) -> Self {
        Self {
            scheme,
            params,
            b,
            beta,
            lambdas: diagnostics.lambdas.clone(),
            r_sym: symmetric_rate(beta),
            diagnostics,
            rho: None,
            a_coef: None,
        }
    }

    pub fn feasible(&self) -> bool {
        self.diagnostics.feasible()
    }

    pub fn lambda(&self) -> f64 {
        self.lambdas[0]
    }

    /// The steady state a transient schedule must reach.
    pub fn steady_target(&self) -> SteadyTarget {
        SteadyTarget {
            b: self.b,
            beta: self.beta,
            lambdas: self.lambdas.clone(),
            power: self.params.p,
        }
    }
}

/// No-interference solution: `b = P/(P+1)`, `β = 1/√(P+1)`, `λ = 1`.
pub fn rate_no_interference(p: f64) -> Result<RateSolution> {
    rate_no_interference_m(p, 1)
}

/// Same solution for `M` non-interfering users.
pub fn rate_no_interference_m(p: f64, m: usize) -> Result<RateSolution> {
    let params = ChannelParams::new(m, 0.0, p)?;
    let b = p / (p + 1.0);
    let beta = 1.0 / (p + 1.0).sqrt();
    let mut sol = RateSolution::from_triple(Scheme::NoInterference, params, b, beta, 1.0);
    sol.r_sym = 0.5 * p.ln_1p() / std::f64::consts::LN_2;
    Ok(sol)
}

/// `g_λ(b) = [1 - b(1-a)]² + abλ[2(1-a)b + Mab - 2] + b²/P`.
pub fn g_lambda(b: f64, lambda: f64, a: f64, p: f64, m: usize) -> f64 {
    let c = direct_gain(b, a);
    c * c + lambda * cross_term(b, a, m) + b * b / p
}

/// Unconstrained minimizer of `g_λ` and the minimum value.
pub fn minimize_g_lambda(lambda: f64, a: f64, p: f64, m: usize) -> Result<(f64, f64)> {
    let mf = m as f64;
    let den = (1.0 - a) * (1.0 - a) + 1.0 / p + (2.0 * a * (1.0 - a) + mf * a * a) * lambda;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateDenominator);
    }
    let b = (a * lambda + (1.0 - a)) / den;
    Ok((b, g_lambda(b, lambda, a, p, m)))
}
