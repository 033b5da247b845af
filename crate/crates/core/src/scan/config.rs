use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::params::{hbar_from_period, CS_RECOIL_FREQUENCY};
use crate::qkr::{BetaMode, EnsembleSpec, InitialMomentum, DEFAULT_CUTOFF, DEFAULT_SIGMA_P};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Quantum,
    EpsClassical,
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Abscissa {
    Hbar,
    Epsilon,
    /// Kick period in microseconds, converted with the caesium recoil frequency.
    PeriodUs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    Amplitude,
    Period,
    /// Levels are spontaneous-emission probabilities per pulse.
    Se,
}

/// Atom cloud settings shared by the quantum and epsilon-classical engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_beta")]
    pub beta: BetaMode,
    #[serde(default)]
    pub kappa_spread: f64,
    #[serde(default)]
    pub detection_window: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

fn default_atoms() -> usize {
    2000
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA_P
}

fn default_beta() -> BetaMode {
    BetaMode::FromMomentum
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            atoms: default_atoms(),
            sigma: default_sigma(),
            beta: default_beta(),
            kappa_spread: 0.0,
            detection_window: None,
            cutoff: default_cutoff(),
        }
    }
}

impl EnsembleConfig {
    pub fn to_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            n_atoms: self.atoms,
            initial: InitialMomentum::Gaussian { sigma: self.sigma },
            beta: self.beta,
            kappa_spread: self.kappa_spread,
            detection_window: self.detection_window,
            cutoff: self.cutoff,
        }
    }
}

/// A scan over one abscissa at one or more noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub engine: Engine,
    #[serde(default = "default_abscissa")]
    pub abscissa: Abscissa,
    /// Inclusive `[lo, hi]` in abscissa units.
    pub range: [f64; 2],
    pub step: f64,
    /// Kick strength `k = kappa / hbar`, held fixed along the scan.
    pub k: f64,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_kicks")]
    pub kicks: usize,
    /// Realizations per point; defaults to 12, or 3 for a zero noise level.
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Resonance order `m` for epsilon; defaults to the nearest resonance.
    #[serde(default)]
    pub resonance: Option<u32>,
    /// Spontaneous-emission probability applied on top of the scanned noise.
    #[serde(default)]
    pub se_probability: f64,
    #[serde(default)]
    pub period_quantum: Option<f64>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
}

fn default_abscissa() -> Abscissa {
    Abscissa::Hbar
}

fn default_noise() -> NoiseKind {
    NoiseKind::None
}

fn default_levels() -> Vec<f64> {
    vec![0.0]
}

fn default_kicks() -> usize {
    20
}

pub(crate) const DEFAULT_REALIZATIONS: usize = 12;
pub(crate) const DEFAULT_REALIZATIONS_NOISELESS: usize = 3;

impl ScanSpec {
    /// A quantum scan over hbar with every optional field at its default.
    pub fn quantum(range: [f64; 2], step: f64, k: f64) -> Self {
        Self {
            engine: Engine::Quantum,
            abscissa: Abscissa::Hbar,
            range,
            step,
            k,
            noise: NoiseKind::None,
            levels: default_levels(),
            kicks: default_kicks(),
            realizations: None,
            seed: 0,
            resonance: None,
            se_probability: 0.0,
            period_quantum: None,
            ensemble: EnsembleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(
                "range",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(
                "step",
                format!("must be positive, got {}", self.step),
            ));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::config(
                "k",
                format!("must be non-negative, got {}", self.k),
            ));
        }
        if self.levels.is_empty() {
            return Err(Error::config(
                "levels",
                "at least one noise level is required",
            ));
        }
        if self.realizations == Some(0) {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if self.noise == NoiseKind::None && self.levels.iter().any(|&l| l != 0.0) {
            return Err(Error::config("levels", "nonzero levels need a noise kind"));
        }
        for &level in &self.levels {
            self.noise_config(level, 0)
                .validate()
                .map_err(|e| match e {
                    Error::InvalidNoiseLevel {
                        field,
                        value,
                        bound,
                    } => Error::config("levels", format!("{field} = {value} is outside {bound}")),
                    other => other,
                })?;
        }
        if self.engine == Engine::Theory
            && !matches!(self.noise, NoiseKind::None | NoiseKind::Amplitude)
        {
            return Err(Error::config(
                "noise",
                "the theory engine only models amplitude noise",
            ));
        }
        if self.engine == Engine::EpsClassical && self.noise == NoiseKind::Period {
            return Err(Error::config(
                "noise",
                "the epsilon-classical engine does not model period noise",
            ));
        }
        if self.resonance == Some(0) {
            return Err(Error::config("resonance", "must be a positive integer"));
        }
        if self.engine != Engine::Theory {
            self.ensemble
                .to_spec()
                .validate()
                .map_err(|e| Error::config("ensemble", e.to_string()))?;
        }
        for x in self.points() {
            let hbar = self.hbar_at(x);
            if !(hbar > 0.0) {
                return Err(Error::config(
                    "range",
                    format!("abscissa {x} maps to non-positive hbar {hbar}"),
                ));
            }
        }
        Ok(())
    }

    /// Abscissa values `lo, lo + step, ...` up to and including `hi`.
    pub fn points(&self) -> Vec<f64> {
        let [lo, hi] = self.range;
        let n = ((hi - lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * self.step).collect()
    }

    pub fn hbar_at(&self, x: f64) -> f64 {
        match self.abscissa {
            Abscissa::Hbar => x,
            Abscissa::Epsilon => TAU * self.resonance.unwrap_or(1) as f64 + x,
            Abscissa::PeriodUs => hbar_from_period(x * 1e-6, CS_RECOIL_FREQUENCY),
        }
    }

    /// Resonance order used to convert hbar into epsilon.
    pub fn resonance_for(&self, hbar: f64) -> u32 {
        self.resonance
            .unwrap_or_else(|| ((hbar / TAU).round() as u32).max(1))
    }

    pub fn realizations_for(&self, level: f64) -> usize {
        self.realizations.unwrap_or(if level == 0.0 {
            DEFAULT_REALIZATIONS_NOISELESS
        } else {
            DEFAULT_REALIZATIONS
        })
    }

    pub fn noise_config(&self, level: f64, seed: u64) -> NoiseConfig {
        let mut cfg = NoiseConfig {
            se_probability: self.se_probability,
            period_quantum: self.period_quantum,
            master_seed: seed,
            ..NoiseConfig::noiseless()
        };
        match self.noise {
            NoiseKind::None => {}
            NoiseKind::Amplitude => cfg.amplitude_level = level,
            NoiseKind::Period => cfg.period_level = level,
            NoiseKind::Se => cfg.se_probability = level,
        }
        cfg
    }
}

/// Parse and validate a TOML scan configuration. Unknown and duplicate keys
/// are rejected.
pub fn parse_config(text: &str) -> Result<ScanSpec> {
    let spec: ScanSpec = toml::from_str(text).map_err(|e| Error::Parse {
        path: "<config>".into(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<ScanSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}
