//! Closed-form predictors: early-time energy diffusion rates with and without
//! amplitude noise, the quantum kick strength, and the resonance-peak heights
//! together with their inverses.
//!
//! Rates and energies are in units of `(rho / hbar)^2`, i.e. two-photon recoil
//! energy units, so every expression carries the `1 / hbar^2` factor.

pub mod bessel;
pub mod quadrature;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_j, bessel_j_orders};

use crate::error::{Error, Result};

/// Convergence target for the noise-averaged Bessel quadrature.
pub const NOISE_AVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionInputs {
    pub kappa: f64,
    pub hbar: f64,
    pub regime: Regime,
    pub amplitude_level: f64,
}

impl DiffusionInputs {
    pub fn new(kappa: f64, hbar: f64, regime: Regime) -> Self {
        Self {
            kappa,
            hbar,
            regime,
            amplitude_level: 0.0,
        }
    }

    pub fn with_amplitude_noise(self, level: f64) -> Self {
        Self {
            amplitude_level: level,
            ..self
        }
    }

    /// Bessel argument: `kappa` classically, `kappa_q` quantum mechanically.
    pub fn bessel_argument(&self) -> f64 {
        match self.regime {
            Regime::Classical => self.kappa,
            Regime::Quantum => quantum_kick_strength(self.kappa, self.hbar),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must be non-negative, got {}", self.kappa),
            ));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::invalid(
                "hbar",
                format!("must be positive, got {}", self.hbar),
            ));
        }
        check_amplitude_level(self.amplitude_level)
    }
}

fn check_amplitude_level(level: f64) -> Result<()> {
    if (0.0..=2.0).contains(&level) {
        Ok(())
    } else {
        Err(Error::InvalidNoiseLevel {
            field: "amplitude_level",
            value: level,
            bound: "[0, 2]",
        })
    }
}

/// `kappa_q = 2 kappa sin(hbar / 2) / hbar`; vanishes at every multiple of `2 pi`.
pub fn quantum_kick_strength(kappa: f64, hbar: f64) -> f64 {
    let half = 0.5 * hbar;
    if half == 0.0 {
        return kappa;
    }
    kappa * half.sin() / half
}

/// Early-time rate without noise:
/// `(1/2)(kappa/hbar)^2 (1/2 - J2(K) - J1(K)^2 + J2(K)^2 + J3(K)^2)`.
pub fn diffusion_rate(inputs: &DiffusionInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.amplitude_level != 0.0 {
        return Err(Error::invalid(
            "amplitude_level",
            "diffusion_rate is the noiseless rate; use diffusion_rate_with_noise",
        ));
    }
    let k = inputs.bessel_argument();
    let j = bessel_j_orders(3, k);
    let bracket = 0.5 - j[2] - j[1] * j[1] + j[2] * j[2] + j[3] * j[3];
    Ok(0.5 * (inputs.kappa / inputs.hbar).powi(2) * bracket)
}

/// Average of `J_n(K + dK)` over multiplicative amplitude noise, `dK = K delta`
/// with `delta` uniform on `[-level/2, level/2]`.
pub fn noise_averaged_bessel(order: i32, k: f64, level: f64) -> Result<f64> {
    check_amplitude_level(level)?;
    let half_width = 0.5 * level * k.abs();
    if half_width == 0.0 {
        return Ok(bessel_j(order, k));
    }
    let integral = quadrature::integrate(
        k - half_width,
        k + half_width,
        NOISE_AVERAGE_TOL * 2.0 * half_width,
        |x| bessel_j(order, x),
    );
    Ok(integral / (2.0 * half_width))
}

/// Early-time rate with amplitude noise:
/// `(kappa^2 + Var) / (4 hbar^2) + (kappa^2 / 2 hbar^2)(-J2 - J1^2 + J2^2 + J3^2)`
/// where the Bessel functions are noise averaged and `Var = kappa^2 L^2 / 12`
/// is the variance of the kick-strength fluctuation.
pub fn diffusion_rate_with_noise(inputs: &DiffusionInputs) -> Result<f64> {
    inputs.validate()?;
    let level = inputs.amplitude_level;
    let k = inputs.bessel_argument();
    let j1 = noise_averaged_bessel(1, k, level)?;
    let j2 = noise_averaged_bessel(2, k, level)?;
    let j3 = noise_averaged_bessel(3, k, level)?;
    let kappa2 = inputs.kappa * inputs.kappa;
    let hbar2 = inputs.hbar * inputs.hbar;
    let variance = kappa2 * level * level / 12.0;
    Ok((kappa2 + variance) / (4.0 * hbar2)
        + kappa2 / (2.0 * hbar2) * (-j2 - j1 * j1 + j2 * j2 + j3 * j3))
}

/// Which closed-form peak height to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakModel {
    /// Resonance without noise, `k^2 n / 4`.
    NoNoise,
    /// Resonance under amplitude noise of level 2, `k^2 n / 3`.
    MaxAmplitudeNoise,
    /// Correlation-free growth, `k^2 n / 4`.
    Quasilinear,
}

impl PeakModel {
    /// Closed forms exist only for amplitude noise levels 0 and 2.
    pub fn from_amplitude_level(level: f64) -> Result<Self> {
        if level == 0.0 {
            Ok(PeakModel::NoNoise)
        } else if level == 2.0 {
            Ok(PeakModel::MaxAmplitudeNoise)
        } else {
            Err(Error::UnsupportedNoiseLevel(level))
        }
    }

    fn coefficient(self) -> f64 {
        match self {
            PeakModel::NoNoise | PeakModel::Quasilinear => 0.25,
            PeakModel::MaxAmplitudeNoise => 1.0 / 3.0,
        }
    }
}

/// Peak energy after `n` kicks for kick strength `k = kappa / hbar`.
pub fn resonance_height(k: f64, n: u32, model: PeakModel) -> f64 {
    model.coefficient() * k * k * n as f64
}

/// Invert [`resonance_height`] for `k`.
pub fn extract_k_from_energy(energy: f64, n: u32, model: PeakModel) -> Result<f64> {
    if !(energy >= 0.0) {
        return Err(Error::invalid(
            "energy",
            format!("must be non-negative, got {energy}"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid(
            "kicks",
            "at least one kick is needed to extract k",
        ));
    }
    Ok((energy / (model.coefficient() * n as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kick_strength_limits() {
        assert!(quantum_kick_strength(5.0, 2.0 * PI).abs() < 1e-14);
        assert!(quantum_kick_strength(5.0, 4.0 * PI).abs() < 1e-14);
        assert!(close(quantum_kick_strength(5.0, 1e-6), 5.0, 1e-10));
        assert_eq!(quantum_kick_strength(5.0, 0.0), 5.0);
    }

    #[test]
    fn quantum_rate_at_resonance_is_quasilinear() {
        for kappa in [1.0, 7.3, 23.0] {
            let d =
                diffusion_rate(&DiffusionInputs::new(kappa, 2.0 * PI, Regime::Quantum)).unwrap();
            let ql = kappa * kappa / (4.0 * 4.0 * PI * PI);
            assert!(close(d, ql, 1e-12 * ql), "{d} vs {ql}");
        }
    }

    #[test]
    fn classical_rate_tends_to_quasilinear() {
        let hbar = 1.0;
        let kappa = 4000.0;
        let d = diffusion_rate(&DiffusionInputs::new(kappa, hbar, Regime::Classical)).unwrap();
        let ql = kappa * kappa / 4.0;
        assert!((d / ql - 1.0).abs() < 0.03);
    }

    #[test]
    fn noiseless_rate_rejects_noise_level() {
        let inputs = DiffusionInputs::new(1.0, 1.0, Regime::Classical).with_amplitude_noise(1.0);
        assert!(diffusion_rate(&inputs).is_err());
        let bad = DiffusionInputs::new(1.0, 1.0, Regime::Classical).with_amplitude_noise(2.5);
        assert!(diffusion_rate_with_noise(&bad).is_err());
        assert!(diffusion_rate(&DiffusionInputs::new(1.0, 0.0, Regime::Quantum)).is_err());
    }

    #[test]
    fn noise_averaged_bessel_limits() {
        for n in 0..4 {
            for k in [0.5, 3.7, 12.0] {
                assert_eq!(noise_averaged_bessel(n, k, 0.0).unwrap(), bessel_j(n, k));
                let near = noise_averaged_bessel(n, k, 1e-4).unwrap();
                assert!((near - bessel_j(n, k)).abs() < 1e-6);
            }
            assert_eq!(
                noise_averaged_bessel(n, 0.0, 2.0).unwrap(),
                bessel_j(n, 0.0)
            );
        }
        assert!(noise_averaged_bessel(1, 1.0, 3.0).is_err());
    }

    #[test]
    fn noise_averaged_bessel_closed_form_order_one() {
        // The mean of J_1 over [a, b] is (J_0(a) - J_0(b)) / (b - a).
        for (k, l) in [(2.0, 1.0), (5.0, 2.0), (0.5, 0.3)] {
            let (a, b) = (k * (1.0 - l / 2.0), k * (1.0 + l / 2.0));
            let want = (bessel_j(0, a) - bessel_j(0, b)) / (b - a);
            assert!((noise_averaged_bessel(1, k, l).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn noisy_rate_reduces_to_noiseless() {
        for regime in [Regime::Classical, Regime::Quantum] {
            for hbar in [0.3, 2.0, 5.0, 9.0] {
                let inputs = DiffusionInputs::new(3.7 * hbar, hbar, regime);
                let a = diffusion_rate(&inputs).unwrap();
                let b = diffusion_rate_with_noise(&inputs).unwrap();
                assert!(close(a, b, 1e-14 * a.abs().max(1.0)));
            }
        }
    }

    #[test]
    fn noisy_rate_at_resonance_matches_peak_rate() {
        let hbar = 2.0 * PI;
        for kappa in [3.7 * hbar, 3.77 * hbar, 1.0] {
            let inputs =
                DiffusionInputs::new(kappa, hbar, Regime::Quantum).with_amplitude_noise(2.0);
            let d = diffusion_rate_with_noise(&inputs).unwrap();
            let want = kappa * kappa / (3.0 * hbar * hbar);
            assert!(close(d, want, 1e-12 * want));
        }
    }

    #[test]
    fn noisy_rate_is_continuous_in_level() {
        let inputs = DiffusionInputs::new(3.7 * 1.3, 1.3, Regime::Quantum);
        let mut prev = diffusion_rate_with_noise(&inputs).unwrap();
        for i in 1..=200 {
            let l = 0.01 * i as f64;
            let d = diffusion_rate_with_noise(&inputs.with_amplitude_noise(l)).unwrap();
            assert!(
                (d - prev).abs() < 0.05 * prev.abs().max(1.0),
                "jump at L={l}"
            );
            prev = d;
        }
    }

    #[test]
    fn classical_and_quantum_agree_at_small_hbar() {
        for i in 1..=29 {
            let hbar = 0.01 * i as f64;
            let c =
                diffusion_rate(&DiffusionInputs::new(3.7 * hbar, hbar, Regime::Classical)).unwrap();
            let q =
                diffusion_rate(&DiffusionInputs::new(3.7 * hbar, hbar, Regime::Quantum)).unwrap();
            assert!(((q - c) / c).abs() < 0.01, "hbar={hbar}: {c} vs {q}");
        }
    }

    #[test]
    fn peak_heights() {
        assert!(close(
            resonance_height(3.77, 20, PeakModel::MaxAmplitudeNoise),
            94.75,
            0.01
        ));
        assert!(close(
            resonance_height(3.63, 20, PeakModel::Quasilinear),
            65.9,
            0.05
        ));
        assert_eq!(resonance_height(3.77, 0, PeakModel::NoNoise), 0.0);
        assert!(matches!(
            PeakModel::from_amplitude_level(1.0),
            Err(Error::UnsupportedNoiseLevel(_))
        ));
        assert_eq!(
            PeakModel::from_amplitude_level(2.0).unwrap(),
            PeakModel::MaxAmplitudeNoise
        );
    }

    #[test]
    fn k_extraction() {
        let k = extract_k_from_energy(94.75, 20, PeakModel::MaxAmplitudeNoise).unwrap();
        assert!(close(k, 3.77, 5e-4));
        let k = extract_k_from_energy(66.0, 20, PeakModel::Quasilinear).unwrap();
        assert!(close(k, 3.63, 0.02));
        assert_eq!(
            extract_k_from_energy(0.0, 20, PeakModel::Quasilinear).unwrap(),
            0.0
        );
        assert!(extract_k_from_energy(1.0, 0, PeakModel::Quasilinear).is_err());
        assert!(extract_k_from_energy(-1.0, 3, PeakModel::Quasilinear).is_err());
        for model in [
            PeakModel::NoNoise,
            PeakModel::MaxAmplitudeNoise,
            PeakModel::Quasilinear,
        ] {
            for k in [0.1, 3.77, 12.5] {
                let e = resonance_height(k, 17, model);
                assert!(close(
                    extract_k_from_energy(e, 17, model).unwrap(),
                    k,
                    1e-12 * k
                ));
            }
        }
    }
}
