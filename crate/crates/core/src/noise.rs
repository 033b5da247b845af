//! Pulse-train noise: amplitude factors, non-cumulative pulse-timing shifts and
//! per-atom spontaneous-emission events.
//!
//! Every random number is drawn from a ChaCha8 stream keyed by
//! `(master_seed, realization_index)` and selected by a fixed stream id, so a
//! realization is a pure function of its key no matter which thread builds it
//! or in which order atoms are evolved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STREAM_AMPLITUDE: u64 = 1;
const STREAM_PERIOD: u64 = 2;
pub(crate) const STREAM_ENSEMBLE: u64 = 3;
const STREAM_ATOM_BASE: u64 = 1 << 32;

/// ChaCha words consumed per kick by the spontaneous-emission schedule
/// (two `f64` draws of two words each).
const SE_WORDS_PER_KICK: u128 = 4;

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a list of indices into a seed. Order matters; used to derive per-point
/// seeds in scans.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(splitmix64(master), |acc, &i| {
        splitmix64(acc ^ splitmix64(i.wrapping_add(0x51_7CC1_B727_220A)))
    })
}

/// A ChaCha8 stream keyed by `(master_seed, realization)` and selected by `stream`.
pub fn keyed_rng(master_seed: u64, realization: u64, stream: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = master_seed ^ splitmix64(realization);
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Amplitude noise level, in `[0, 2]`.
    #[serde(default)]
    pub amplitude_level: f64,
    /// Period noise level, in `[0, 1)`, in units of the kick period.
    #[serde(default)]
    pub period_level: f64,
    /// Probability of a spontaneous-emission event per atom per pulse.
    #[serde(default)]
    pub se_probability: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub realization_index: u64,
    /// Optional timing resolution (units of the kick period) onto which pulse
    /// shifts are rounded, mimicking a sampled pulse generator.
    #[serde(default)]
    pub period_quantum: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            amplitude_level: 0.0,
            period_level: 0.0,
            se_probability: 0.0,
            master_seed: 0,
            realization_index: 0,
            period_quantum: None,
        }
    }

    pub fn amplitude(level: f64) -> Self {
        Self {
            amplitude_level: level,
            ..Self::noiseless()
        }
    }

    pub fn period(level: f64) -> Self {
        Self {
            period_level: level,
            ..Self::noiseless()
        }
    }

    pub fn with_seed(self, master_seed: u64, realization_index: u64) -> Self {
        Self {
            master_seed,
            realization_index,
            ..self
        }
    }

    pub fn with_se(self, se_probability: f64) -> Self {
        Self {
            se_probability,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.amplitude_level) {
            return Err(Error::InvalidNoiseLevel {
                field: "amplitude_level",
                value: self.amplitude_level,
                bound: "[0, 2]",
            });
        }
        if !(0.0..1.0).contains(&self.period_level) {
            return Err(Error::InvalidNoiseLevel {
                field: "period_level",
                value: self.period_level,
                bound: "[0, 1)",
            });
        }
        if !(0.0..=1.0).contains(&self.se_probability) {
            return Err(Error::InvalidNoiseLevel {
                field: "se_probability",
                value: self.se_probability,
                bound: "[0, 1]",
            });
        }
        if let Some(q) = self.period_quantum {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::invalid(
                    "period_quantum",
                    format!("must be positive, got {q}"),
                ));
            }
        }
        Ok(())
    }
}

/// One concrete draw of the pulse train plus the key for the per-atom
/// spontaneous-emission schedule. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub master_seed: u64,
    pub realization_index: u64,
    pub amplitude_level: f64,
    pub period_level: f64,
    pub se_probability: f64,
    pub n_atoms: usize,
    /// `R_A,n = 1 + delta_A,n`.
    pub amplitude_factors: Vec<f64>,
    /// Shift of pulse `n` from its nominal time `n`, in kick periods.
    /// The first entry is always zero.
    pub period_offsets: Vec<f64>,
}

impl NoiseRealization {
    /// The noiseless pulse train of `n_kicks` kicks.
    pub fn clean(n_kicks: usize) -> Self {
        Self {
            master_seed: 0,
            realization_index: 0,
            amplitude_level: 0.0,
            period_level: 0.0,
            se_probability: 0.0,
            n_atoms: 0,
            amplitude_factors: vec![1.0; n_kicks],
            period_offsets: vec![0.0; n_kicks],
        }
    }

    pub fn n_kicks(&self) -> usize {
        self.amplitude_factors.len()
    }

    /// Durations of the free evolutions between consecutive kicks.
    pub fn intervals(&self) -> Result<Vec<f64>> {
        free_evolution_intervals(&self.period_offsets)
    }

    /// Spontaneous-emission outcome for `atom` right after kick `kick`:
    /// `Some(beta)` with the freshly drawn quasimomentum when an event occurs.
    ///
    /// Random access: the answer depends only on the realization key and the
    /// `(atom, kick)` pair.
    pub fn se_event(&self, atom: usize, kick: usize) -> Option<f64> {
        if self.se_probability <= 0.0 {
            return None;
        }
        let mut rng = self.atom_rng(atom);
        rng.set_word_pos(kick as u128 * SE_WORDS_PER_KICK);
        let u: f64 = rng.random();
        let beta: f64 = rng.random();
        (u < self.se_probability).then_some(beta)
    }

    /// The full schedule for one atom, one entry per kick.
    pub fn se_schedule(&self, atom: usize) -> Vec<Option<f64>> {
        if self.se_probability <= 0.0 {
            return vec![None; self.n_kicks()];
        }
        let mut rng = self.atom_rng(atom);
        (0..self.n_kicks())
            .map(|_| {
                let u: f64 = rng.random();
                let beta: f64 = rng.random();
                (u < self.se_probability).then_some(beta)
            })
            .collect()
    }

    fn atom_rng(&self, atom: usize) -> ChaCha8Rng {
        keyed_rng(
            self.master_seed,
            self.realization_index,
            STREAM_ATOM_BASE + atom as u64,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Draw a realization of `n_kicks` pulses for an ensemble of `n_atoms` atoms.
pub fn sample_realization(
    cfg: &NoiseConfig,
    n_kicks: usize,
    n_atoms: usize,
) -> Result<NoiseRealization> {
    cfg.validate()?;

    let amplitude_factors = if cfg.amplitude_level == 0.0 {
        vec![1.0; n_kicks]
    } else {
        let mut rng = keyed_rng(cfg.master_seed, cfg.realization_index, STREAM_AMPLITUDE);
        (0..n_kicks)
            .map(|_| 1.0 + cfg.amplitude_level * (rng.random::<f64>() - 0.5))
            .collect()
    };

    let period_offsets = if cfg.period_level == 0.0 {
        vec![0.0; n_kicks]
    } else {
        let mut rng = keyed_rng(cfg.master_seed, cfg.realization_index, STREAM_PERIOD);
        (0..n_kicks)
            .map(|n| {
                let d = cfg.period_level * (rng.random::<f64>() - 0.5);
                match (n, cfg.period_quantum) {
                    (0, _) => 0.0,
                    (_, Some(q)) => (d / q).round() * q,
                    (_, None) => d,
                }
            })
            .collect()
    };

    Ok(NoiseRealization {
        master_seed: cfg.master_seed,
        realization_index: cfg.realization_index,
        amplitude_level: cfg.amplitude_level,
        period_level: cfg.period_level,
        se_probability: cfg.se_probability,
        n_atoms,
        amplitude_factors,
        period_offsets,
    })
}

/// Free-evolution durations `1 + d[n+1] - d[n]` between kick `n` and `n + 1`.
pub fn free_evolution_intervals(offsets: &[f64]) -> Result<Vec<f64>> {
    if let Some(&first) = offsets.first() {
        if first != 0.0 {
            return Err(Error::invalid(
                "period_offsets",
                format!("first pulse defines the time origin, offset must be 0, got {first}"),
            ));
        }
    }
    offsets
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let dt = 1.0 + w[1] - w[0];
            if dt > 0.0 {
                Ok(dt)
            } else {
                Err(Error::IntervalNonPositive {
                    index: i,
                    value: dt,
                })
            }
        })
        .collect()
}
