use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Engine, ScanSpec};
use super::output::write_portrait;
use crate::epsmap::{eps_energy, phase_portrait, EpsParams, PortraitGrid, PortraitPoint};
use crate::error::Result;
use crate::noise::{derive_seed, NoiseConfig};
use crate::params::ScaledParams;
use crate::qkr::ensemble_energy;
use crate::theory::{diffusion_rate_with_noise, DiffusionInputs, Regime};

/// One `(abscissa point, noise level)` cell of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub point: usize,
    pub abscissa: f64,
    pub hbar: f64,
    pub level: f64,
    /// Mean energy after the last kick, or the quantum diffusion rate for the
    /// theory engine.
    pub energy: f64,
    /// Standard error across realizations (zero for theory).
    pub sem: f64,
    /// Classical diffusion rate (theory engine only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<f64>,
    /// Master seed of this cell; realization `r` is keyed `(seed, r)`.
    pub seed: u64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub spec: ScanSpec,
    /// Ordered by level, then by abscissa.
    pub points: Vec<CurvePoint>,
}

impl EnergyCurve {
    /// `(E, sem)` along the abscissa for level index `level`.
    pub fn level(&self, level: usize) -> Vec<(f64, f64)> {
        let n = self.spec.points().len();
        self.points[level * n..(level + 1) * n]
            .iter()
            .map(|p| (p.energy, p.sem))
            .collect()
    }
}

/// Run every point of a scan. Each cell gets its own seed derived from
/// `(seed, point index, level index)`, so results do not depend on the order
/// in which points are evaluated or on the thread count.
pub fn run_scan(spec: &ScanSpec) -> Result<EnergyCurve> {
    spec.validate()?;
    let xs = spec.points();
    let mut points = Vec::with_capacity(xs.len() * spec.levels.len());
    for (li, &level) in spec.levels.iter().enumerate() {
        for (pi, &x) in xs.iter().enumerate() {
            let hbar = spec.hbar_at(x);
            let seed = derive_seed(spec.seed, &[pi as u64, li as u64]);
            let realizations = spec.realizations_for(level);
            log::info!(
                "point {}/{} level {level}: hbar = {hbar:.6}",
                pi + 1,
                xs.len()
            );
            let cfg = spec.noise_config(level, seed);
            let (energy, sem, classical) = match spec.engine {
                Engine::Quantum => {
                    let params = ScaledParams::from_k(hbar, spec.k, spec.kicks)?;
                    let (e, s) =
                        ensemble_energy(&spec.ensemble.to_spec(), &params, &cfg, realizations)?;
                    (e, s, None)
                }
                Engine::EpsClassical => {
                    let m = spec.resonance_for(hbar);
                    let p = EpsParams {
                        m,
                        ..EpsParams::new(hbar - TAU * m as f64, spec.k)
                    };
                    let (e, s) = eps_energy(
                        &p,
                        spec.kicks,
                        &spec.ensemble.to_spec(),
                        &cfg,
                        realizations,
                        true,
                    )?;
                    (e, s, None)
                }
                Engine::Theory => {
                    let kappa = spec.k * hbar;
                    let rate = |regime| {
                        diffusion_rate_with_noise(
                            &DiffusionInputs::new(kappa, hbar, regime)
                                .with_amplitude_noise(cfg.amplitude_level),
                        )
                    };
                    (rate(Regime::Quantum)?, 0.0, Some(rate(Regime::Classical)?))
                }
            };
            points.push(CurvePoint {
                point: pi,
                abscissa: x,
                hbar,
                level,
                energy,
                sem,
                classical,
                seed,
                realizations: if spec.engine == Engine::Theory {
                    0
                } else {
                    realizations
                },
            });
        }
    }
    Ok(EnergyCurve {
        spec: spec.clone(),
        points,
    })
}

/// Phase portrait request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSpec {
    pub epsilon: f64,
    pub k: f64,
    /// Amplitude noise level.
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub beta: f64,
    pub grid: PortraitGrid,
    pub iters: usize,
    #[serde(default)]
    pub seed: u64,
}

impl PortraitSpec {
    pub fn points(&self) -> Result<Vec<PortraitPoint>> {
        let p = EpsParams::new(self.epsilon, self.k).with_beta(self.beta);
        let cfg = NoiseConfig::amplitude(self.level).with_seed(self.seed, 0);
        phase_portrait(&p, &self.grid, self.iters, &cfg)
    }
}

/// Compute a portrait and write it as CSV; returns the number of points.
pub fn run_portrait(spec: &PortraitSpec, out: &Path) -> Result<usize> {
    let points = spec.points()?;
    write_portrait(out, spec, &points)?;
    Ok(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{Abscissa, NoiseKind};

    #[test]
    fn theory_scan_shape() {
        let spec = ScanSpec {
            engine: Engine::Theory,
            noise: NoiseKind::Amplitude,
            levels: vec![1.0, 2.0],
            ..ScanSpec::quantum([0.5, 4.0 * std::f64::consts::PI], 0.5, 3.7)
        };
        let curve = run_scan(&spec).unwrap();
        assert_eq!(curve.points.len(), 2 * spec.points().len());
        assert_eq!(curve.level(1).len(), spec.points().len());
        assert!(curve
            .points
            .iter()
            .all(|p| p.classical.is_some() && p.sem == 0.0));
    }

    #[test]
    fn seeds_depend_on_position_only() {
        let spec = ScanSpec {
            engine: Engine::EpsClassical,
            abscissa: Abscissa::Epsilon,
            ensemble: crate::scan::EnsembleConfig {
                atoms: 200,
                ..Default::default()
            },
            ..ScanSpec::quantum([-0.04, 0.04], 0.02, 3.7)
        };
        let full = run_scan(&spec).unwrap();
        let tail = run_scan(&ScanSpec {
            range: [0.0, 0.04],
            ..spec.clone()
        })
        .unwrap();
        // Point 0 of the shorter scan shares its seed with point 0 of the full scan.
        assert_eq!(full.points[0].seed, tail.points[0].seed);
        assert_ne!(full.points[0].seed, full.points[1].seed);
    }

    #[test]
    fn epsilon_zero_uses_resonant_limit() {
        let spec = ScanSpec {
            engine: Engine::EpsClassical,
            abscissa: Abscissa::Epsilon,
            ensemble: crate::scan::EnsembleConfig {
                atoms: 100,
                ..Default::default()
            },
            ..ScanSpec::quantum([-0.02, 0.02], 0.02, 3.7)
        };
        let curve = run_scan(&spec).unwrap();
        assert_eq!(curve.points.len(), 3);
        assert!(curve.points.iter().all(|p| p.energy.is_finite()));
    }
}
