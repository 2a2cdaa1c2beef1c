//! Symmetric M-user Gaussian interference channel and its noise source.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// User count, cross gain and per-user power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub m: usize,
    pub a: f64,
    pub p: f64,
}

impl ChannelParams {
    pub fn new(m: usize, a: f64, p: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParams("M must be at least 1".into()));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParams(format!("cross gain a={a} must be >= 0")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("power P={p} must be > 0")));
        }
        Ok(Self { m, a, p })
    }

    /// Build from SNR in dB and the interference exponent α (`a²P = P^α`).
    pub fn from_alpha(m: usize, snr_db: f64, alpha: f64) -> Result<Self> {
        let p = db_to_linear(snr_db);
        Self::new(m, p.powf((alpha - 1.0) / 2.0), p)
    }

    pub fn snr(&self) -> f64 {
        self.p
    }

    pub fn inr(&self) -> f64 {
        self.a * self.a * self.p
    }

    /// `log INR / log SNR`; `None` when SNR = 1.
    pub fn alpha(&self) -> Option<f64> {
        if self.p == 1.0 {
            None
        } else {
            Some(self.inr().ln() / self.p.ln())
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `y_m = x_m + a Σ_{k≠m} x_k + z_m`.
pub fn transmit(x: &[f64], params: &ChannelParams, z: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; params.m];
    transmit_into(x, params, z, &mut y)?;
    Ok(y)
}

pub fn transmit_into(x: &[f64], params: &ChannelParams, z: &[f64], y: &mut [f64]) -> Result<()> {
    let m = params.m;
    for len in [x.len(), z.len(), y.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: len,
            });
        }
    }
    for i in 0..m {
        let cross: f64 = x
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, v)| v)
            .sum();
        y[i] = x[i] + params.a * cross + z[i];
    }
    Ok(())
}

/// Seeded source of unit-variance Gaussian noise keyed by (trial, step, user).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
}

/// Noise stream confined to one trial.
pub struct TrialNoise {
    rng: ChaCha8Rng,
    users: usize,
}

// each normal draw consumes two u64 = four 32-bit words
const WORDS_PER_DRAW: u128 = 4;

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn trial(&self, trial: u64, users: usize) -> TrialNoise {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        TrialNoise { rng, users }
    }
}

impl TrialNoise {
    /// Fill `out` with the noise vector of step `n` (1-based).
    pub fn fill_step(&mut self, n: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.users);
        let base = (n as u128 - 1) * self.users as u128 * WORDS_PER_DRAW;
        self.rng.set_word_pos(base);
        for z in out.iter_mut() {
            *z = box_muller(self.rng.next_u64(), self.rng.next_u64());
        }
    }

    /// Noise value for one user at step `n`.
    pub fn at(&mut self, n: usize, user: usize) -> f64 {
        let pos = ((n as u128 - 1) * self.users as u128 + user as u128) * WORDS_PER_DRAW;
        self.rng.set_word_pos(pos);
        box_muller(self.rng.next_u64(), self.rng.next_u64())
    }
}

fn box_muller(u: u64, v: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((u >> 11) + 1) as f64 * SCALE;
    let u2 = (v >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
