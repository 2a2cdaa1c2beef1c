//! Time-varying feedback encoder, interval decoder and Monte Carlo sessions.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{transmit_into, ChannelParams, NoiseSource};
use crate::covariance::{recurse, transient_schedule, CovarianceState, StepParams, TransientSchedule};
use crate::error::{Error, Result};
use crate::gaussian;
use crate::hadamard::{build_hadamard, modulation_vector, HadamardMatrix};
use crate::rates::{minimize_g_lambda, symmetric_rate, RateSolution};

/// Per-step coding parameters: an explicit prefix followed by a constant tail.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSchedule {
    pub p1: f64,
    /// Parameters of steps `1..=steps.len()`.
    pub steps: Vec<StepParams>,
    /// Parameters of every later step.
    pub tail: StepParams,
    hadamard: HadamardMatrix,
}

impl CodeSchedule {
    pub fn new(p1: f64, steps: Vec<StepParams>, tail: StepParams, m: usize) -> Result<Self> {
        if !(p1 > 0.0 && p1.is_finite()) {
            return Err(Error::InvalidParams(format!("P1={p1} must be > 0")));
        }
        for st in steps.iter().chain(std::iter::once(&tail)) {
            if st.beta == 0.0 {
                return Err(Error::ZeroContraction);
            }
            if !(st.beta > 0.0 && st.beta <= 1.0) || !st.b.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "step parameters b={}, beta={} out of range",
                    st.b, st.beta
                )));
            }
        }
        Ok(Self {
            p1,
            steps,
            tail,
            hadamard: build_hadamard(m)?,
        })
    }

    /// Transient steps followed by the steady triple.
    pub fn from_transient(ts: &TransientSchedule, m: usize) -> Result<Self> {
        Self::new(ts.p1, ts.steps.clone(), ts.steady, m)
    }

    /// Schedule steering the identity covariance into the steady state of `sol`.
    pub fn from_solution(sol: &RateSolution) -> Result<Self> {
        let ts = transient_schedule(&sol.steady_target(), &sol.params)?;
        Self::from_transient(&ts, sol.params.m)
    }

    /// The same `(b, β)` at every step with constant power `P`.
    pub fn constant(p: f64, b: f64, beta: f64, m: usize) -> Result<Self> {
        Self::new(p, Vec::new(), StepParams { b, beta, power: p }, m)
    }

    /// No-interference schedule `b = P/(P+1)`, `β = 1/√(P+1)`.
    pub fn no_interference(p: f64, m: usize) -> Result<Self> {
        Self::constant(p, p / (p + 1.0), 1.0 / (p + 1.0).sqrt(), m)
    }

    /// Per-step minimizer of `g_λ` at the current `λ_n`, with `β_n² = g_λ(b_n)`
    /// so the power stays at `P` for `horizon` steps.
    pub fn greedy(params: &ChannelParams, horizon: usize) -> Result<Self> {
        let mut state = CovarianceState::initial(params.p, params.m);
        let mut steps = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let (b, g) = minimize_g_lambda(state.lambda(), params.a, state.power, params.m)?;
            if !(g > 0.0) {
                return Err(Error::DegenerateGain);
            }
            let beta = g.sqrt();
            steps.push(StepParams {
                b,
                beta,
                power: state.power,
            });
            state = recurse(&state, b, beta, params)?;
        }
        let tail = *steps.last().ok_or(Error::EmptyGrid)?;
        Self::new(params.p, steps, tail, params.m)
    }

    pub fn users(&self) -> usize {
        self.hadamard.order()
    }

    pub fn hadamard(&self) -> &HadamardMatrix {
        &self.hadamard
    }

    /// Parameters of step `n` (1-based).
    pub fn step(&self, n: usize) -> StepParams {
        assert!(n >= 1, "step index starts at 1");
        self.steps.get(n - 1).copied().unwrap_or(self.tail)
    }

    /// `α_n` as reals.
    pub fn alpha(&self, n: usize) -> Vec<f64> {
        modulation_vector(&self.hadamard, n).as_f64()
    }

    /// Largest `β_n` over steps `n ≥ M`, including the constant tail.
    pub fn beta_tail(&self) -> f64 {
        let m = self.users();
        self.steps
            .iter()
            .skip(m - 1)
            .map(|s| s.beta)
            .fold(self.tail.beta, f64::max)
    }

    /// `log2 Π_{i<n} β_i`.
    pub fn log2_beta_product(&self, n: usize) -> f64 {
        (1..n).map(|i| self.step(i).beta.log2()).sum()
    }

    /// Covariance states `1..=horizon` driven by this schedule.
    pub fn covariance_path(&self, params: &ChannelParams, horizon: usize) -> Result<Vec<CovarianceState>> {
        let mut out = Vec::with_capacity(horizon);
        let mut state = CovarianceState::initial(self.p1, params.m);
        for n in 1..=horizon {
            out.push(state.clone());
            if n < horizon {
                let st = self.step(n);
                state = recurse(&state, st.b, st.beta, params)?;
            }
        }
        Ok(out)
    }

    /// Checks that the tail contracts and its power stays within `P`.
    pub fn validate(&self, params: &ChannelParams) -> Result<()> {
        if params.m != self.users() {
            return Err(Error::DimensionMismatch {
                expected: params.m,
                got: self.users(),
            });
        }
        let beta = self.beta_tail();
        if !(beta < 1.0) {
            return Err(Error::RateInfeasible { rate: 0.0, bound: 0.0 });
        }
        if self.tail.power > params.p * (1.0 + 1e-9) {
            return Err(Error::InvalidParams(format!(
                "tail power {} exceeds P={}",
                self.tail.power, params.p
            )));
        }
        Ok(())
    }
}

/// `X_1 = F_X^{-1}(θ)` with `X ~ N(0, P1)`.
pub fn encode_init(theta: &[f64], p1: f64) -> Result<Vec<f64>> {
    theta
        .iter()
        .map(|&t| {
            if t > 0.0 && t < 1.0 {
                Ok(gaussian::inv_cdf(t, p1))
            } else {
                Err(Error::DomainError(format!("message point {t} outside (0, 1)")))
            }
        })
        .collect()
}

/// `x_{n+1} = (x_n - b_n α_n y_n) / β_n`, elementwise.
pub fn encode_step(x: &[f64], y: &[f64], b: f64, beta: f64, alpha: &[f64]) -> Result<Vec<f64>> {
    if beta == 0.0 {
        return Err(Error::ZeroContraction);
    }
    let m = x.len();
    for len in [y.len(), alpha.len()] {
        if len != m {
            return Err(Error::DimensionMismatch { expected: m, got: len });
        }
    }
    Ok((0..m).map(|i| pull(x[i], b, beta, alpha[i], y[i])).collect())
}

#[inline]
fn pull(x: f64, b: f64, beta: f64, alpha: f64, y: f64) -> f64 {
    (x - b * alpha * y) / beta
}

/// `w_n(s) = β_n s + b_n α_n y_n`.
#[inline]
pub fn ifs_map(s: f64, beta: f64, b: f64, alpha: f64, y: f64) -> f64 {
    beta * s + b * alpha * y
}

/// `T_{n-1}(s) = w_1 ∘ … ∘ w_{n-1}(s)` for `user`, with `n - 1 = y.len()`.
pub fn ifs_compose(s: f64, user: usize, y: &[f64], schedule: &CodeSchedule) -> f64 {
    let m = schedule.users();
    let h = schedule.hadamard();
    let mut v = s;
    for k in (1..=y.len()).rev() {
        let st = schedule.step(k);
        let alpha = h.entry(user, h.column_index(k)) as f64;
        v = ifs_map(v, st.beta, st.b, alpha, y[k - 1]);
    }
    debug_assert!(user < m);
    v
}

/// `T_{n-1}^{-1}(x1)`, evaluated with the encoder's own arithmetic.
pub fn ifs_pull_back(x1: f64, user: usize, y: &[f64], schedule: &CodeSchedule) -> f64 {
    let h = schedule.hadamard();
    let mut v = x1;
    for k in 1..=y.len() {
        let st = schedule.step(k);
        let alpha = h.entry(user, h.column_index(k)) as f64;
        v = pull(v, st.b, st.beta, alpha, y[k - 1]);
    }
    v
}

/// Target rate, slack and window half-width at horizon `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingWindow {
    pub n: usize,
    /// Target rate `R` in bits per channel use.
    pub rate: f64,
    /// `β`, the largest tail contraction.
    pub beta: f64,
    /// `ε` with `log(β+ε)^{-1} = (R + log β^{-1}) / 2`.
    pub eps: f64,
    /// `t_m = 2^{(n/2)(log(β+ε)^{-1} - R)}`.
    pub t: f64,
    pub log2_t: f64,
}

impl DecodingWindow {
    pub fn new(schedule: &CodeSchedule, n: usize, rate: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        let beta = schedule.beta_tail();
        let bound = symmetric_rate(beta);
        if !(rate > 0.0) || !(rate < bound) {
            return Err(Error::RateInfeasible { rate, bound });
        }
        let mid = 0.5 * (rate + bound);
        let eps = (-mid).exp2() - beta;
        let log2_t = 0.5 * n as f64 * (mid - rate);
        Ok(Self {
            n,
            rate,
            beta,
            eps,
            t: log2_t.exp2(),
            log2_t,
        })
    }
}

/// Decoded interval for one user at horizon `n`.
///
/// The pre-image `J_n = (T_{n-1}(-t), T_{n-1}(t))` is held as a center and a
/// base-2 log half-width so that widths far below machine resolution stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedInterval {
    pub user: usize,
    pub window: DecodingWindow,
    /// `T_{n-1}(0)`.
    pub center: f64,
    /// `log2(t Π_{i<n} β_i)`.
    pub log2_half: f64,
    /// `F_X(T_{n-1}(-t))`, possibly equal to `hi` in floating point.
    pub lo: f64,
    pub hi: f64,
    /// `log2 |Δ_n|`.
    pub log2_width: f64,
}

impl DecodedInterval {
    /// Width of the pre-image interval, `2 t Π β_i`.
    pub fn pre_image_width(&self) -> f64 {
        (self.log2_half + 1.0).exp2()
    }

    /// `R_n = -(1/n) log |Δ_n|`.
    pub fn empirical_rate(&self) -> f64 {
        -self.log2_width / self.window.n as f64
    }

    /// Whether `θ ∈ Δ_n`, decided on the pulled-back pseudo-symbol `|X_n| < t`.
    pub fn contains(&self, theta: f64, y: &[f64], schedule: &CodeSchedule) -> bool {
        if !(theta > 0.0 && theta < 1.0) {
            return false;
        }
        let x1 = gaussian::inv_cdf(theta, schedule.p1);
        self.contains_x1(x1, y, schedule)
    }

    pub fn contains_x1(&self, x1: f64, y: &[f64], schedule: &CodeSchedule) -> bool {
        ifs_pull_back(x1, self.user, y, schedule).abs() < self.window.t
    }
}

/// Decode `user` at horizon `n = y.len() + 1` at target rate `rate`.
pub fn decode(user: usize, y: &[f64], schedule: &CodeSchedule, rate: f64) -> Result<DecodedInterval> {
    if user >= schedule.users() {
        return Err(Error::InvalidParams(format!("user index {user} out of range")));
    }
    let n = y.len() + 1;
    let window = DecodingWindow::new(schedule, n, rate)?;
    Ok(interval(user, y, schedule, window))
}

fn interval(user: usize, y: &[f64], schedule: &CodeSchedule, window: DecodingWindow) -> DecodedInterval {
    let center = ifs_compose(0.0, user, y, schedule);
    let log2_half = window.log2_t + schedule.log2_beta_product(window.n);
    let sd = schedule.p1.sqrt();
    let half = log2_half.exp2();
    DecodedInterval {
        user,
        window,
        center,
        log2_half,
        lo: gaussian::cdf(center - half, schedule.p1),
        hi: gaussian::cdf(center + half, schedule.p1),
        log2_width: gaussian::log2_mass(center / sd, log2_half - sd.log2()),
    }
}

/// Per-user outcome of a Monte Carlo session.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStats {
    pub user: usize,
    /// Fraction of kept trials with `θ ∉ Δ_n`.
    pub p_e: f64,
    /// Mean `R_n` over kept trials, scaled by the kept fraction under retransmission.
    pub rate_bits: f64,
    /// Mean of `(1/n) Σ_k X_k²`.
    pub avg_power: f64,
    /// Trials discarded because `R_n < R`.
    pub retransmissions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub trials: u64,
    pub horizon: usize,
    pub rate: f64,
    pub users: Vec<UserStats>,
    /// Largest `|T_{n-1}(X_n) - X_1| / max(|X_1|, √P1)` seen.
    pub max_ifs_error: f64,
}

/// Session settings besides the channel and schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub horizon: usize,
    /// `r` in `R = r log(1/β)`.
    pub rate_fraction: f64,
    pub trials: u64,
    pub seed: u64,
    pub retransmit: bool,
}

/// One trial's encoder trajectory and feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub theta: Vec<f64>,
    /// `x[n-1][m] = X_n^{(m)}` for `n = 1..=horizon`.
    pub x: Vec<Vec<f64>>,
    /// `y[m][n-1] = Y_n^{(m)}` for `n = 1..horizon`.
    pub y: Vec<Vec<f64>>,
}

const MESSAGE_KEY: u64 = 0x9e37_79b9_7f4a_7c15;

/// Uniform message points in `(0, 1)` for one trial.
pub fn message_points(seed: u64, trial: u64, m: usize) -> Vec<f64> {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ MESSAGE_KEY);
    rng.set_stream(trial);
    (0..m)
        .map(|_| ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE)
        .collect()
}

/// Run the encoder and channel of one trial for `horizon` uses.
pub fn run_trial(
    params: &ChannelParams,
    schedule: &CodeSchedule,
    horizon: usize,
    seed: u64,
    trial: u64,
) -> Result<TrialTrace> {
    let m = params.m;
    if schedule.users() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: schedule.users(),
        });
    }
    let theta = message_points(seed, trial, m);
    let mut noise = NoiseSource::new(seed).trial(trial, m);
    let mut x = Vec::with_capacity(horizon);
    let mut y = vec![Vec::with_capacity(horizon.saturating_sub(1)); m];
    let mut cur = encode_init(&theta, schedule.p1)?;
    let mut sent = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut out = vec![0.0; m];
    for n in 1..=horizon {
        x.push(cur.clone());
        if n == horizon {
            break;
        }
        let alpha = schedule.alpha(n);
        for i in 0..m {
            sent[i] = alpha[i] * cur[i];
        }
        noise.fill_step(n, &mut z);
        transmit_into(&sent, params, &z, &mut out)?;
        for i in 0..m {
            y[i].push(out[i]);
        }
        let st = schedule.step(n);
        cur = encode_step(&cur, &out, st.b, st.beta, &alpha)?;
    }
    Ok(TrialTrace { theta, x, y })
}

#[derive(Debug, Clone, Default)]
struct Tally {
    errors: Vec<u64>,
    kept: Vec<u64>,
    rate_sum: Vec<f64>,
    power_sum: Vec<f64>,
    retrans: Vec<u64>,
    ifs: f64,
}

impl Tally {
    fn new(m: usize) -> Self {
        Self {
            errors: vec![0; m],
            kept: vec![0; m],
            rate_sum: vec![0.0; m],
            power_sum: vec![0.0; m],
            retrans: vec![0; m],
            ifs: 0.0,
        }
    }

    fn merge(mut self, o: Self) -> Self {
        for i in 0..self.errors.len() {
            self.errors[i] += o.errors[i];
            self.kept[i] += o.kept[i];
            self.rate_sum[i] += o.rate_sum[i];
            self.power_sum[i] += o.power_sum[i];
            self.retrans[i] += o.retrans[i];
        }
        self.ifs = self.ifs.max(o.ifs);
        self
    }
}

/// Run `trials` independent sessions at `R = r log(1/β)` and decode at the horizon.
pub fn run_session(params: &ChannelParams, schedule: &CodeSchedule, cfg: &SessionConfig) -> Result<SessionResult> {
    let m = params.m;
    if !(cfg.rate_fraction > 0.0 && cfg.rate_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "rate fraction {} outside (0, 1)",
            cfg.rate_fraction
        )));
    }
    schedule.validate(params)?;
    let rate = cfg.rate_fraction * symmetric_rate(schedule.beta_tail());
    let window = DecodingWindow::new(schedule, cfg.horizon, rate)?;
    let sd1 = schedule.p1.sqrt();

    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Tally> {
            let tr = run_trial(params, schedule, cfg.horizon, cfg.seed, trial)?;
            let mut t = Tally::new(m);
            let last = &tr.x[cfg.horizon - 1];
            for u in 0..m {
                let x1 = tr.x[0][u];
                let back = ifs_compose(last[u], u, &tr.y[u], schedule);
                t.ifs = t.ifs.max((back - x1).abs() / x1.abs().max(sd1));
                t.power_sum[u] = tr.x.iter().map(|v| v[u] * v[u]).sum::<f64>() / cfg.horizon as f64;
                let dec = interval(u, &tr.y[u], schedule, window);
                let r_n = dec.empirical_rate();
                if cfg.retransmit && r_n < rate {
                    t.retrans[u] = 1;
                    continue;
                }
                t.kept[u] = 1;
                t.rate_sum[u] = r_n;
                if !dec.contains(tr.theta[u], &tr.y[u], schedule) {
                    t.errors[u] = 1;
                }
            }
            Ok(t)
        })
        .try_reduce(|| Tally::new(m), |a, b| Ok(a.merge(b)))?;

    let total = cfg.trials as f64;
    let users = (0..m)
        .map(|u| {
            let kept = tally.kept[u] as f64;
            let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
            let mut rate_bits = ratio(tally.rate_sum[u], kept);
            if cfg.retransmit {
                rate_bits *= ratio(kept, total);
            }
            UserStats {
                user: u + 1,
                p_e: ratio(tally.errors[u] as f64, kept),
                rate_bits,
                avg_power: ratio(tally.power_sum[u], total),
                retransmissions: tally.retrans[u],
            }
        })
        .collect();
    Ok(SessionResult {
        trials: cfg.trials,
        horizon: cfg.horizon,
        rate,
        users,
        max_ifs_error: tally.ifs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi_oracle(x: f64) -> f64 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn encode_init_examples() {
        assert_eq!(encode_init(&[0.5], 3.0).unwrap(), vec![0.0]);
        assert!(encode_init(&[0.5; 4], 1.0).unwrap().iter().all(|&v| v == 0.0));
        let x = encode_init(&[phi_oracle(1.0)], 1.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(matches!(encode_init(&[0.0], 1.0), Err(Error::DomainError(_))));
        assert!(matches!(encode_init(&[0.2, 1.0], 1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn encode_step_examples() {
        assert_eq!(encode_step(&[1.5], &[7.0], 0.0, 1.0, &[1.0]).unwrap(), vec![1.5]);
        assert_eq!(encode_step(&[2.0], &[2.0], 1.0, 1.0, &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(encode_step(&[2.0], &[1.0], 0.5, 0.5, &[-1.0]).unwrap(), vec![5.0]);
        assert!(matches!(
            encode_step(&[2.0], &[1.0], 0.5, 0.0, &[-1.0]),
            Err(Error::ZeroContraction)
        ));
    }

    #[test]
    fn ifs_map_examples() {
        assert_eq!(ifs_map(0.0, 0.7, 0.0, 1.0, 3.0), 0.0);
        assert_eq!(ifs_map(1.0, 0.5, 2.0, 1.0, 3.0), 6.5);
    }

    #[test]
    fn single_step_decode_is_window_image() {
        let s = CodeSchedule::no_interference(10.0, 1).unwrap();
        let rate = 0.5 * symmetric_rate(s.beta_tail());
        let d = decode(0, &[], &s, rate).unwrap();
        assert_eq!(d.center, 0.0);
        assert!((d.pre_image_width() - 2.0 * d.window.t).abs() <= 1e-15 * d.window.t);
        let sd = 10f64.sqrt();
        assert!((d.lo - phi_oracle(-d.window.t / sd)).abs() < 1e-14);
        assert!((d.hi - phi_oracle(d.window.t / sd)).abs() < 1e-14);
    }

    #[test]
    fn window_sizing() {
        let s = CodeSchedule::no_interference(3.0, 1).unwrap();
        // β = 1/2, log β^{-1} = 1
        let w = DecodingWindow::new(&s, 10, 0.5).unwrap();
        assert!(((w.beta + w.eps).log2() + 0.75).abs() < 1e-14);
        assert!((w.log2_t - 5.0 * 0.25).abs() < 1e-14);
        assert!(matches!(
            DecodingWindow::new(&s, 10, 1.0),
            Err(Error::RateInfeasible { .. })
        ));
    }

    fn zero_noise_run(s: &CodeSchedule, params: &ChannelParams, horizon: usize, rate: f64, mut check: impl FnMut(usize, usize, f64, bool)) {
        let m = params.m;
        for trial in 0..20 {
            let theta = message_points(5, trial, m);
            let mut x = encode_init(&theta, s.p1).unwrap();
            let mut ys = vec![Vec::new(); m];
            for n in 1..horizon {
                let alpha = s.alpha(n);
                let sent: Vec<f64> = x.iter().zip(&alpha).map(|(a, b)| a * b).collect();
                let y = crate::channel::transmit(&sent, params, &vec![0.0; m]).unwrap();
                let st = s.step(n);
                x = encode_step(&x, &y, st.b, st.beta, &alpha).unwrap();
                for u in 0..m {
                    ys[u].push(y[u]);
                    let d = decode(u, &ys[u], s, rate).unwrap();
                    let x1 = gaussian::inv_cdf(theta[u], s.p1);
                    check(n + 1, u, x1, d.contains(theta[u], &ys[u], s));
                }
            }
        }
    }

    #[test]
    fn zero_noise_feedback_keeps_message_inside() {
        let params = ChannelParams::new(2, 0.0, 10.0).unwrap();
        let s = CodeSchedule::no_interference(10.0, 2).unwrap();
        let rate = 0.8 * symmetric_rate(s.beta_tail());
        // X_{n+1} = X_n (1-b)/β = X_n / √(P+1)
        zero_noise_run(&s, &params, 40, rate, |n, u, x1, inside| {
            let w = DecodingWindow::new(&s, n, rate).unwrap();
            let xn = x1.abs() * 11f64.powf(-0.5 * (n - 1) as f64);
            assert_eq!(inside, xn < w.t, "n={n} user={u}");
            if n == 40 {
                assert!(inside);
            }
        });
    }

    #[test]
    fn zero_noise_without_feedback_scales_pseudo_symbol() {
        // b = 0: X_n = X_1 / Π β_i, so θ ∈ Δ_n iff |X_1| < t Π β_i
        let params = ChannelParams::new(2, 0.3, 1.0).unwrap();
        let s = CodeSchedule::constant(1.0, 0.0, 0.5, 2).unwrap();
        let mut outside = 0;
        zero_noise_run(&s, &params, 12, 0.5, |n, _, x1, inside| {
            let w = DecodingWindow::new(&s, n, 0.5).unwrap();
            let expect = x1.abs() < (w.log2_t - (n - 1) as f64).exp2();
            assert_eq!(inside, expect, "n={n}");
            outside += usize::from(!inside);
        });
        assert!(outside > 0);
    }

    #[test]
    fn empty_session() {
        let params = ChannelParams::new(1, 0.0, 10.0).unwrap();
        let s = CodeSchedule::no_interference(10.0, 1).unwrap();
        let cfg = SessionConfig {
            horizon: 10,
            rate_fraction: 0.5,
            trials: 0,
            seed: 1,
            retransmit: false,
        };
        let r = run_session(&params, &s, &cfg).unwrap();
        assert_eq!(r.trials, 0);
        assert_eq!(r.users[0].p_e, 0.0);
        assert_eq!(r.users[0].retransmissions, 0);
    }

    #[test]
    fn session_rejects_bad_fraction() {
        let params = ChannelParams::new(1, 0.0, 10.0).unwrap();
        let s = CodeSchedule::no_interference(10.0, 1).unwrap();
        let mut cfg = SessionConfig {
            horizon: 10,
            rate_fraction: 1.0,
            trials: 5,
            seed: 1,
            retransmit: false,
        };
        assert!(run_session(&params, &s, &cfg).is_err());
        cfg.rate_fraction = 0.5;
        let flat = CodeSchedule::constant(10.0, 0.0, 1.0, 1).unwrap();
        assert!(matches!(
            run_session(&params, &flat, &cfg),
            Err(Error::RateInfeasible { .. })
        ));
    }

    #[test]
    fn session_is_deterministic() {
        let params = ChannelParams::new(2, 0.5, 10.0).unwrap();
        let s = CodeSchedule::greedy(&params, 30).unwrap();
        let cfg = SessionConfig {
            horizon: 30,
            rate_fraction: 0.6,
            trials: 200,
            seed: 42,
            retransmit: true,
        };
        assert_eq!(run_session(&params, &s, &cfg).unwrap(), run_session(&params, &s, &cfg).unwrap());
    }

    #[test]
    fn greedy_preserves_power() {
        for (m, a) in [(2, 0.3), (4, 1.0), (8, 2.0)] {
            let params = ChannelParams::new(m, a, 10.0).unwrap();
            let s = CodeSchedule::greedy(&params, 40).unwrap();
            for st in &s.steps {
                assert!((st.power - 10.0).abs() < 1e-9 * 10.0);
                assert!(st.beta > 0.0 && st.beta < 1.0);
            }
        }
    }

    #[test]
    fn error_rate_decreases_with_horizon() {
        let params = ChannelParams::new(1, 0.0, 10.0).unwrap();
        let s = CodeSchedule::no_interference(10.0, 1).unwrap();
        let run = |n| {
            let cfg = SessionConfig {
                horizon: n,
                rate_fraction: 0.8,
                trials: 4000,
                seed: 9,
                retransmit: false,
            };
            run_session(&params, &s, &cfg).unwrap().users[0].p_e
        };
        let (p1, p2) = (run(10), run(20));
        let sigma = (p1 * (1.0 - p1) / 4000.0).sqrt();
        assert!(p2 <= p1 + 3.0 * sigma, "{p1} {p2}");
    }

    #[test]
    fn inputs_have_zero_mean() {
        let params = ChannelParams::new(2, 0.5, 10.0).unwrap();
        let s = CodeSchedule::greedy(&params, 12).unwrap();
        let trials = 20000u64;
        let mut sum = vec![vec![0.0; 2]; 12];
        let mut sq = vec![vec![0.0; 2]; 12];
        for t in 0..trials {
            let tr = run_trial(&params, &s, 12, 3, t).unwrap();
            for n in 0..12 {
                for u in 0..2 {
                    sum[n][u] += tr.x[n][u];
                    sq[n][u] += tr.x[n][u] * tr.x[n][u];
                }
            }
        }
        let tf = trials as f64;
        for n in 0..12 {
            for u in 0..2 {
                let mean = sum[n][u] / tf;
                let var = sq[n][u] / tf - mean * mean;
                assert!(mean.abs() < 5.0 * (var / tf).sqrt(), "n={} u={u} mean={mean}", n + 1);
            }
        }
    }

    proptest! {
        #[test]
        fn ifs_map_contracts(s in -50.0..50.0f64, t in -50.0..50.0f64, beta in 0.01..1.0f64,
                             b in -3.0..3.0f64, y in -20.0..20.0f64, neg in any::<bool>()) {
            let alpha = if neg { -1.0 } else { 1.0 };
            let d = (ifs_map(t, beta, b, alpha, y) - ifs_map(s, beta, b, alpha, y)).abs();
            prop_assert!((d - beta * (t - s).abs()).abs() <= 1e-12 * (1.0 + d));
        }

        #[test]
        fn pull_back_inverts_compose(x1 in -5.0..5.0f64, ys in proptest::collection::vec(-10.0..10.0f64, 0..30),
                                     user in 0usize..4) {
            let params = ChannelParams::new(4, 0.3, 10.0).unwrap();
            let s = CodeSchedule::greedy(&params, 40).unwrap();
            let xn = ifs_pull_back(x1, user, &ys, &s);
            let back = ifs_compose(xn, user, &ys, &s);
            prop_assert!((back - x1).abs() <= 1e-9 * x1.abs().max(10f64.sqrt()));
        }

        #[test]
        fn encode_step_matches_pull_back(x in proptest::collection::vec(-5.0..5.0f64, 2),
                                         y in proptest::collection::vec(-5.0..5.0f64, 2),
                                         n in 1usize..10) {
            let params = ChannelParams::new(2, 0.5, 10.0).unwrap();
            let s = CodeSchedule::greedy(&params, 12).unwrap();
            let st = s.step(n);
            let next = encode_step(&x, &y, st.b, st.beta, &s.alpha(n)).unwrap();
            for u in 0..2 {
                let back = ifs_map(next[u], st.beta, st.b, s.alpha(n)[u], y[u]);
                prop_assert!((back - x[u]).abs() <= 1e-12 * (1.0 + x[u].abs() + y[u].abs()));
            }
        }

        #[test]
        fn width_is_slope_product(ys in proptest::collection::vec(-3.0..3.0f64, 0..12), frac in 0.1..0.9f64) {
            let s = CodeSchedule::no_interference(10.0, 1).unwrap();
            let rate = frac * symmetric_rate(s.beta_tail());
            let d = decode(0, &ys, &s, rate).unwrap();
            let t = d.window.t;
            let direct = ifs_compose(t, 0, &ys, &s) - ifs_compose(-t, 0, &ys, &s);
            let prod: f64 = (1..=ys.len()).map(|k| s.step(k).beta).product();
            prop_assert!((d.pre_image_width() - 2.0 * t * prod).abs() <= 1e-12 * 2.0 * t * prod);
            prop_assert!((direct - 2.0 * t * prod).abs() <= 1e-9 * (2.0 * t * prod + d.center.abs()));
        }
    }
}
