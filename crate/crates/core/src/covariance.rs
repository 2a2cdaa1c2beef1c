//! Input covariance dynamics in the Hadamard eigenbasis and the transient
//! schedule that drives the identity covariance into a prescribed steady state.

use nalgebra::DMatrix;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::hadamard::{modulation_vector, HadamardMatrix};

/// Common input power `P_n` and the eigenvalues `λ_n^{(1..M)}` of the
/// normalized covariance, in rotation order: `λ_n^{(k)}` belongs to column
/// `((n+k-2) mod M) + 1` of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub power: f64,
    pub lambdas: Vec<f64>,
}

impl CovarianceState {
    /// `R_1 = I`.
    pub fn initial(p1: f64, m: usize) -> Self {
        Self {
            power: p1,
            lambdas: vec![1.0; m],
        }
    }

    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `λ_n = λ_n^{(1)}`, the eigenvalue along `α_n`.
    pub fn lambda(&self) -> f64 {
        self.lambdas[0]
    }

    /// Dense `R_n` assembled from the eigenvalues at step `n`.
    pub fn matrix(&self, n: usize, h: &HadamardMatrix) -> DMatrix<f64> {
        let m = h.order();
        let mut r = DMatrix::zeros(m, m);
        for (k, &lam) in self.lambdas.iter().enumerate() {
            let col = h.column((n + k - 1) % m);
            for i in 0..m {
                for j in 0..m {
                    r[(i, j)] += lam * (col[i] as f64) * (col[j] as f64) / m as f64;
                }
            }
        }
        r
    }
}

/// `c = 1 - b(1-a)`.
pub fn direct_gain(b: f64, a: f64) -> f64 {
    1.0 - b * (1.0 - a)
}

/// `d = ab[2(1-a)b + Mab - 2]`.
pub fn cross_term(b: f64, a: f64, m: usize) -> f64 {
    a * b * (2.0 * (1.0 - a) * b + m as f64 * a * b - 2.0)
}

/// `c² + M d`, evaluated as the equivalent square `(1 - b(1+(M-1)a))²`.
pub fn aligned_gain(b: f64, a: f64, m: usize) -> f64 {
    let q = 1.0 - b * (1.0 + (m as f64 - 1.0) * a);
    q * q
}

/// One step of the covariance recursion.
pub fn recurse(
    state: &CovarianceState,
    b: f64,
    beta: f64,
    params: &ChannelParams,
) -> Result<CovarianceState> {
    let m = params.m;
    if state.lambdas.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: state.lambdas.len(),
        });
    }
    if beta == 0.0 {
        return Err(Error::ZeroContraction);
    }
    let s = 1.0 / (beta * beta);
    let c = direct_gain(b, params.a);
    let c2 = c * c;
    let e = aligned_gain(b, params.a, m);
    let b2 = b * b;
    let p = state.power;
    let mut u = Vec::with_capacity(m);
    for k in 0..m - 1 {
        u.push(s * (c2 * p * state.lambdas[k + 1] + b2));
    }
    u.push(s * (e * p * state.lambdas[0] + b2));
    let power = u.iter().sum::<f64>() / m as f64;
    let lambdas = u.iter().map(|v| v / power).collect();
    Ok(CovarianceState { power, lambdas })
}

/// Power update written directly from `λ_n`.
pub fn next_power(power: f64, lambda: f64, b: f64, beta: f64, params: &ChannelParams) -> f64 {
    let c = direct_gain(b, params.a);
    power / (beta * beta)
        * (b * b / power + c * c + lambda * cross_term(b, params.a, params.m))
}

/// Full-matrix step: returns `(P_{n+1}, R_{n+1})` from `(P_n, R_n)` at step `n`.
/// `P_{n+1}` is read off the diagonal of the updated covariance.
pub fn recurse_matrix(
    power: f64,
    r: &DMatrix<f64>,
    n: usize,
    b: f64,
    beta: f64,
    params: &ChannelParams,
    h: &HadamardMatrix,
) -> Result<(f64, DMatrix<f64>)> {
    if beta == 0.0 {
        return Err(Error::ZeroContraction);
    }
    let m = params.m;
    let alpha = modulation_vector(h, n).as_f64();
    let av = nalgebra::DVector::from_vec(alpha);
    let lambda = (av.transpose() * r * &av)[(0, 0)] / m as f64;
    let c = direct_gain(b, params.a);
    let d = cross_term(b, params.a, m);
    let scale = power / (beta * beta);
    let gamma = (r * (c * c) + DMatrix::identity(m, m) * (b * b / power) + &av * av.transpose() * (d * lambda))
        * scale;
    let next = gamma.diagonal().sum() / m as f64;
    Ok((next, gamma / next))
}

/// Result of projecting a symmetric matrix on the Hadamard columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCheck {
    /// `max_k ‖R h_k - λ_k h_k‖_∞`.
    pub residual: f64,
    /// Rayleigh quotients `h_kᵀ R h_k / M`, in column order of `H`.
    pub eigenvalues: Vec<f64>,
}

impl EigenCheck {
    /// Eigenvalues relabelled into rotation order for step `n`.
    pub fn rotation_order(&self, n: usize) -> Vec<f64> {
        let m = self.eigenvalues.len();
        (0..m).map(|k| self.eigenvalues[(n + k - 1) % m]).collect()
    }
}

pub fn eigencheck(r: &DMatrix<f64>, h: &HadamardMatrix) -> EigenCheck {
    let m = h.order();
    let mut residual: f64 = 0.0;
    let mut eigenvalues = Vec::with_capacity(m);
    for k in 0..m {
        let col: Vec<f64> = h.column(k).iter().map(|&v| v as f64).collect();
        let rh: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| r[(i, j)] * col[j]).sum())
            .collect();
        let lam = rh.iter().zip(&col).map(|(x, y)| x * y).sum::<f64>() / m as f64;
        for i in 0..m {
            residual = residual.max((rh[i] - lam * col[i]).abs());
        }
        eigenvalues.push(lam);
    }
    EigenCheck {
        residual,
        eigenvalues,
    }
}

/// Coding parameters of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub b: f64,
    pub beta: f64,
    /// Input power `P_n` entering the step.
    pub power: f64,
}

/// The `M - 1` steering steps plus the steady-state triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSchedule {
    pub p1: f64,
    pub steps: Vec<StepParams>,
    pub steady: StepParams,
}

/// Steady state to steer into: `(b, β)`, eigenvalues in rotation order, power.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyTarget {
    pub b: f64,
    pub beta: f64,
    pub lambdas: Vec<f64>,
    pub power: f64,
}

/// `(A, B, C)` of a steady triple.
pub fn steady_coefficients(b: f64, beta: f64, params: &ChannelParams) -> (f64, f64, f64) {
    let b2 = beta * beta;
    let c = direct_gain(b, params.a);
    (
        c * c / b2,
        b * b / (params.p * b2),
        aligned_gain(b, params.a, params.m) / b2,
    )
}

const REL_TOL: f64 = 1e-12;

/// Build the transient schedule reaching `target` at step `M`.
///
/// `b_k = b` throughout; the contraction factors and the initial power are
/// solved backward from the target state, then the result is verified by a
/// forward run of [`recurse`].
pub fn transient_schedule(target: &SteadyTarget, params: &ChannelParams) -> Result<TransientSchedule> {
    let m = params.m;
    if target.lambdas.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: target.lambdas.len(),
        });
    }
    if !(target.beta > 0.0) || !(target.power > 0.0) {
        return Err(Error::InfeasibleTransient("beta and power must be positive".into()));
    }
    let (a_coef, _, c_coef) = steady_coefficients(target.b, target.beta, params);
    let steady = StepParams {
        b: target.b,
        beta: target.beta,
        power: target.power,
    };
    let all_equal = target
        .lambdas
        .iter()
        .all(|l| (l - target.lambdas[0]).abs() <= 1e-12 * target.lambdas[0].abs().max(1.0));
    let a_eq_c = (a_coef - c_coef).abs() <= REL_TOL * a_coef.abs().max(c_coef.abs()).max(1e-300);

    if m == 1 || (a_eq_c && all_equal) {
        if m > 1 && (a_coef - 1.0).abs() <= REL_TOL {
            return Err(Error::InfeasibleTransient("A = C = 1".into()));
        }
        let sched = TransientSchedule {
            p1: target.power,
            steps: vec![steady; m - 1],
            steady,
        };
        verify_transient(&sched, target, params)?;
        return Ok(sched);
    }
    if a_coef == 0.0 {
        return Err(Error::InfeasibleTransient("A = 0".into()));
    }
    if a_eq_c {
        return Err(Error::InfeasibleTransient("A = C with unequal eigenvalues".into()));
    }
    for k in 0..m - 1 {
        if (target.lambdas[k] - target.lambdas[k + 1]) / (a_coef - c_coef) <= 0.0 {
            return Err(Error::InfeasibleTransient(format!(
                "eigenvalue ordering at k={} incompatible with sign of A - C",
                k + 1
            )));
        }
    }

    let b = target.b;
    let b2 = b * b;
    let c = direct_gain(b, params.a);
    let c2 = c * c;
    if c2 == 0.0 {
        return Err(Error::InfeasibleTransient("1 - b(1-a) = 0".into()));
    }
    let e = aligned_gain(b, params.a, m);
    let mut u: Vec<f64> = target.lambdas.iter().map(|l| l * target.power).collect();
    let mut betas = vec![0.0; m - 1];
    for n in (1..m).rev() {
        let w1 = u[0];
        let fresh = u[m - 1];
        let den = w1 * e - fresh * c2;
        if den == 0.0 {
            return Err(Error::InfeasibleTransient(format!("singular backward step {n}")));
        }
        let w = b2 * (fresh - w1) / den;
        let s = w1 / (c2 * w + b2);
        if !(w > 0.0) || !(s > 0.0) || !s.is_finite() {
            return Err(Error::InfeasibleTransient(format!(
                "no positive solution at backward step {n}"
            )));
        }
        betas[n - 1] = 1.0 / s.sqrt();
        let mut prev = Vec::with_capacity(m);
        prev.push(w);
        for k in 1..m {
            prev.push((u[k - 1] / s - b2) / c2);
        }
        u = prev;
    }
    let p1 = u[0];
    let mut state = CovarianceState::initial(p1, m);
    let mut steps = Vec::with_capacity(m - 1);
    for &beta in &betas {
        steps.push(StepParams {
            b,
            beta,
            power: state.power,
        });
        state = recurse(&state, b, beta, params)?;
    }
    let sched = TransientSchedule { p1, steps, steady };
    verify_transient(&sched, target, params)?;
    Ok(sched)
}

fn verify_transient(sched: &TransientSchedule, target: &SteadyTarget, params: &ChannelParams) -> Result<()> {
    let mut state = CovarianceState::initial(sched.p1, params.m);
    for st in &sched.steps {
        state = recurse(&state, st.b, st.beta, params)?;
    }
    let power_err = (state.power - target.power).abs() / target.power;
    let lam_err = state
        .lambdas
        .iter()
        .zip(&target.lambdas)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if power_err > 1e-9 || lam_err > 1e-9 {
        return Err(Error::InfeasibleTransient(format!(
            "forward check missed target (power {power_err:.3e}, lambda {lam_err:.3e})"
        )));
    }
    Ok(())
}
