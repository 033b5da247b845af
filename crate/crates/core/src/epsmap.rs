//! The epsilon-classical map near quantum resonance, and the true classical
//! standard map used as a brute-force check on the diffusion formulas.
//!
//! Close to `hbar = 2 pi m` the quantum kicked rotor is mimicked by
//!
//! ```text
//! phi' = phi + sign(eps) rho + pi l + hbar beta   (mod 2 pi)
//! rho' = rho + |eps| k R sin(phi')
//! ```
//!
//! with `eps = hbar - 2 pi m` and energy `E = <rho^2> / (2 eps^2)`.

use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{keyed_rng, sample_realization, NoiseConfig, NoiseRealization, STREAM_ENSEMBLE};
use crate::qkr::{sample_atoms, EnergyTrace, EnsembleSpec};
use crate::stats;

/// Above this detuning the map is a poor approximation of the quantum rotor.
pub const EPS_VALIDITY_LIMIT: f64 = 0.5;

const CHUNK: usize = 256;
const STREAM_PHASE: u64 = STREAM_ENSEMBLE + 3;
const STREAM_CLASSICAL: u64 = 1 << 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsParams {
    /// Detuning from resonance, `hbar - 2 pi m`.
    pub epsilon: f64,
    /// Kick strength `k = kappa / hbar`.
    pub k: f64,
    #[serde(default = "default_l")]
    pub l: i32,
    #[serde(default = "default_m")]
    pub m: u32,
    /// Quasimomentum used by single-trajectory iteration and portraits.
    #[serde(default)]
    pub beta: f64,
}

fn default_l() -> i32 {
    1
}

fn default_m() -> u32 {
    1
}

impl EpsParams {
    pub fn new(epsilon: f64, k: f64) -> Self {
        Self {
            epsilon,
            k,
            l: 1,
            m: 1,
            beta: 0.0,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn hbar(&self) -> f64 {
        TAU * self.m as f64 + self.epsilon
    }

    /// Effective kick `|eps| k`.
    pub fn scaled_kick(&self) -> f64 {
        self.epsilon.abs() * self.k
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be finite"));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::invalid(
                "k",
                format!("must be non-negative, got {}", self.k),
            ));
        }
        if self.m == 0 {
            return Err(Error::invalid(
                "m",
                "resonance order must be a positive integer",
            ));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(
                "beta",
                format!("must lie in [0, 1), got {}", self.beta),
            ));
        }
        if self.epsilon.abs() > EPS_VALIDITY_LIMIT {
            log::warn!(
                "|epsilon| = {} exceeds {EPS_VALIDITY_LIMIT}; the epsilon-classical map is unreliable this far from resonance",
                self.epsilon.abs()
            );
        }
        Ok(())
    }

    fn phase_shift(&self, beta: f64) -> f64 {
        PI * self.l as f64 + self.hbar() * beta
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One iteration with amplitude factor `r_a`. The angle is updated first.
pub fn eps_step((phi, rho): (f64, f64), p: &EpsParams, r_a: f64) -> (f64, f64) {
    let phi = (phi + sign(p.epsilon) * rho + p.phase_shift(p.beta)).rem_euclid(TAU);
    (phi, rho + p.scaled_kick() * r_a * phi.sin())
}

/// Inverse of [`eps_step`] for the same `p` and `r_a`.
pub fn eps_step_inverse((phi, rho): (f64, f64), p: &EpsParams, r_a: f64) -> (f64, f64) {
    let rho = rho - p.scaled_kick() * r_a * phi.sin();
    (
        (phi - sign(p.epsilon) * rho - p.phase_shift(p.beta)).rem_euclid(TAU),
        rho,
    )
}

/// Trajectories of the map: `(phi, rho)` with a quasimomentum per trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsEnsemble {
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub beta: Vec<f64>,
    pub kicks: usize,
}

impl EpsEnsemble {
    pub fn new(phi: Vec<f64>, rho: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if phi.len() != rho.len() || phi.len() != beta.len() {
            return Err(Error::invalid(
                "trajectories",
                "phi, rho and beta must have equal length",
            ));
        }
        let phi = phi.into_iter().map(|x| x.rem_euclid(TAU)).collect();
        Ok(Self {
            phi,
            rho,
            beta,
            kicks: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Apply one iteration to every trajectory.
    pub fn step(&mut self, p: &EpsParams, r_a: f64) {
        for ((phi, rho), beta) in self.phi.iter_mut().zip(self.rho.iter_mut()).zip(&self.beta) {
            let q = EpsParams { beta: *beta, ..*p };
            (*phi, *rho) = eps_step((*phi, *rho), &q, r_a);
        }
        self.kicks += 1;
    }

    /// `<rho^2> / (2 eps^2)`.
    pub fn energy(&self, epsilon: f64) -> Result<f64> {
        if epsilon == 0.0 {
            return Err(Error::EpsilonZero);
        }
        let sq: Vec<f64> = self.rho.iter().map(|r| r * r).collect();
        Ok(stats::mean(&sq) / (2.0 * epsilon * epsilon))
    }
}

fn reject_period_noise(cfg: &NoiseConfig) -> Result<()> {
    if cfg.period_level != 0.0 {
        return Err(Error::invalid(
            "period_level",
            "period noise detunes every step by about 2 pi m times the shift and is not representable in the epsilon-classical map",
        ));
    }
    Ok(())
}

/// Per-kick mean energies `E_t`, `t = 0..=n_kicks`, for one realization.
///
/// Iterates in the scaled momentum `n = rho / |eps|`, which is the same map and
/// stays well defined at `eps = 0` (the resonant limit).
fn eps_realization(
    p: &EpsParams,
    n_kicks: usize,
    spec: &EnsembleSpec,
    realization: &NoiseRealization,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>> {
    let atoms = sample_atoms(spec, seed, index)?;
    let mut phase_rng = keyed_rng(seed, index, STREAM_PHASE);
    let a = atoms.len() as f64;
    // Stratified phases, with strata shuffled so that phi0 is not correlated
    // with beta (which is stratified by atom index).
    let mut strata: Vec<usize> = (0..atoms.len()).collect();
    strata.shuffle(&mut phase_rng);
    let phi0: Vec<f64> = strata
        .iter()
        .map(|&s| TAU * (s as f64 + phase_rng.random::<f64>()) / a)
        .collect();
    let s = sign(p.epsilon);
    let eps = p.epsilon.abs();

    let chunks: Vec<Vec<Vec<f64>>> = atoms
        .par_chunks(CHUNK)
        .zip(phi0.par_chunks(CHUNK))
        .enumerate()
        .map(|(c, (chunk, phases))| {
            let mut sq = vec![Vec::with_capacity(chunk.len()); n_kicks + 1];
            for (j, (atom, &phi_start)) in chunk.iter().zip(phases).enumerate() {
                let index = c * CHUNK + j;
                let mut beta = atom.beta;
                let mut phi = phi_start;
                // Ladder-consistent start rho0 = |eps| n0, carried as n0.
                let mut n = atom.n0 as f64;
                sq[0].push(n * n);
                for t in 0..n_kicks {
                    phi = (phi + s * eps * n + p.phase_shift(beta)).rem_euclid(TAU);
                    n += atom.kick_factor * p.k * realization.amplitude_factors[t] * phi.sin();
                    if let Some(b) = realization.se_event(index, t) {
                        beta = b;
                    }
                    sq[t + 1].push(n * n);
                }
            }
            sq
        })
        .collect();

    Ok((0..=n_kicks)
        .map(|t| {
            let all: Vec<f64> = chunks.iter().flat_map(|c| c[t].iter().copied()).collect();
            stats::sum(&all) / (2.0 * a)
        })
        .collect())
}

/// Energy after every kick averaged over trajectories and `n_realizations`
/// realizations keyed `(cfg.master_seed, cfg.realization_index + r)`.
///
/// At `eps = 0` the rescaling by `eps^-2` is singular; pass `resonant_limit`
/// to use the limiting map instead of failing.
pub fn eps_trace(
    p: &EpsParams,
    n_kicks: usize,
    spec: &EnsembleSpec,
    cfg: &NoiseConfig,
    n_realizations: usize,
    resonant_limit: bool,
) -> Result<EnergyTrace> {
    p.validate()?;
    spec.validate()?;
    cfg.validate()?;
    reject_period_noise(cfg)?;
    if p.epsilon == 0.0 && !resonant_limit {
        return Err(Error::EpsilonZero);
    }
    if n_realizations == 0 {
        return Err(Error::invalid(
            "n_realizations",
            "need at least one realization",
        ));
    }
    let mut per_realization = Vec::with_capacity(n_realizations);
    for r in 0..n_realizations {
        let rc = NoiseConfig {
            realization_index: cfg.realization_index.wrapping_add(r as u64),
            ..*cfg
        };
        let realization = sample_realization(&rc, n_kicks, spec.n_atoms)?;
        per_realization.push(eps_realization(
            p,
            n_kicks,
            spec,
            &realization,
            rc.master_seed,
            rc.realization_index,
        )?);
    }
    let len = n_kicks + 1;
    let (energies, sems) = (0..len)
        .map(|t| stats::mean_sem(&per_realization.iter().map(|e| e[t]).collect::<Vec<_>>()))
        .unzip();
    Ok(EnergyTrace {
        energies,
        sems,
        per_realization,
    })
}

/// Final energy and standard error across realizations.
pub fn eps_energy(
    p: &EpsParams,
    n_kicks: usize,
    spec: &EnsembleSpec,
    cfg: &NoiseConfig,
    n_realizations: usize,
    resonant_limit: bool,
) -> Result<(f64, f64)> {
    Ok(eps_trace(p, n_kicks, spec, cfg, n_realizations, resonant_limit)?.final_energy())
}

/// Rectangular grid of initial conditions for a phase portrait.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitGrid {
    pub n_phi: usize,
    pub n_rho: usize,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl PortraitGrid {
    pub fn initial_conditions(&self) -> Result<Vec<(f64, f64)>> {
        if self.n_phi == 0 || self.n_rho == 0 {
            return Err(Error::invalid(
                "grid",
                "needs at least one point along each axis",
            ));
        }
        if !(self.rho_min <= self.rho_max) {
            return Err(Error::invalid("grid", "rho_min must not exceed rho_max"));
        }
        let mut out = Vec::with_capacity(self.n_phi * self.n_rho);
        for i in 0..self.n_rho {
            let rho = if self.n_rho == 1 {
                self.rho_min
            } else {
                self.rho_min + (self.rho_max - self.rho_min) * i as f64 / (self.n_rho - 1) as f64
            };
            for j in 0..self.n_phi {
                out.push((TAU * j as f64 / self.n_phi as f64, rho));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortraitPoint {
    pub phi: f64,
    pub rho: f64,
    pub trajectory: usize,
}

/// Every iterate of every grid trajectory, initial points included. With
/// amplitude noise all trajectories share one realization.
pub fn phase_portrait(
    p: &EpsParams,
    grid: &PortraitGrid,
    n_iters: usize,
    cfg: &NoiseConfig,
) -> Result<Vec<PortraitPoint>> {
    p.validate()?;
    cfg.validate()?;
    reject_period_noise(cfg)?;
    let starts = grid.initial_conditions()?;
    let factors = sample_realization(
        &NoiseConfig {
            se_probability: 0.0,
            ..*cfg
        },
        n_iters,
        0,
    )?
    .amplitude_factors;
    let mut points = Vec::with_capacity(starts.len() * (n_iters + 1));
    for (id, &(phi, rho)) in starts.iter().enumerate() {
        let mut z = (phi, rho);
        points.push(PortraitPoint {
            phi,
            rho,
            trajectory: id,
        });
        for &r in &factors {
            z = eps_step(z, p, r);
            points.push(PortraitPoint {
                phi: z.0,
                rho: z.1,
                trajectory: id,
            });
        }
    }
    Ok(points)
}

/// CSV with header `phi,rho,trajectory`.
pub fn portrait_csv(points: &[PortraitPoint]) -> String {
    let mut out = String::from("phi,rho,trajectory\n");
    for pt in points {
        out.push_str(&format!(
            "{:.12e},{:.12e},{}\n",
            pt.phi, pt.rho, pt.trajectory
        ));
    }
    out
}

/// How amplitude noise is shared in the classical map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSharing {
    /// All trajectories of a realization see the same pulse train, as atoms do.
    PerRealization,
    /// Every trajectory draws its own pulse train. Same expectation, far less
    /// variance in the ensemble mean.
    #[default]
    PerTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalEnsemble {
    pub n_trajectories: usize,
    /// Initial momenta are uniform on `[0, rho_spread)`.
    #[serde(default = "default_spread")]
    pub rho_spread: f64,
    #[serde(default)]
    pub sharing: NoiseSharing,
}

fn default_spread() -> f64 {
    TAU
}

impl ClassicalEnsemble {
    pub fn new(n_trajectories: usize) -> Self {
        Self {
            n_trajectories,
            rho_spread: TAU,
            sharing: NoiseSharing::PerTrajectory,
        }
    }
}

/// Energy growth of the classical standard map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalGrowth {
    /// Displacement energy `<(rho - rho0)^2> / (2 hbar^2)` after each kick.
    pub energies: Vec<f64>,
    /// Least-squares slope of the energy over kicks `0..=5` (or all kicks if fewer).
    pub rate: f64,
}

/// Kicks used by the growth-rate fit.
pub const RATE_FIT_KICKS: usize = 5;

/// Iterate `rho += kappa R sin(phi); phi += dtau rho` and fit the early energy
/// growth. Energies are divided by `hbar^2` to compare with the quantum units.
pub fn classical_map_energy(
    kappa: f64,
    hbar: f64,
    n_kicks: usize,
    ensemble: &ClassicalEnsemble,
    cfg: &NoiseConfig,
    n_realizations: usize,
) -> Result<ClassicalGrowth> {
    cfg.validate()?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(
            "kappa",
            format!("must be non-negative, got {kappa}"),
        ));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::invalid(
            "hbar",
            format!("must be positive, got {hbar}"),
        ));
    }
    if ensemble.n_trajectories == 0 || n_realizations == 0 {
        return Err(Error::invalid(
            "n_trajectories",
            "need at least one trajectory and realization",
        ));
    }
    if n_kicks == 0 {
        return Err(Error::invalid(
            "n_kicks",
            "need at least one kick to fit a rate",
        ));
    }
    let n = ensemble.n_trajectories;
    let mut per_realization = Vec::with_capacity(n_realizations);
    for r in 0..n_realizations {
        let seed = cfg.master_seed;
        let index = cfg.realization_index.wrapping_add(r as u64);
        let shared = sample_realization(
            &NoiseConfig {
                realization_index: index,
                ..*cfg
            },
            n_kicks,
            0,
        )?;
        let shared_intervals = shared.intervals()?;

        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let chunks: Vec<Vec<Vec<f64>>> = starts
            .par_iter()
            .map(|&start| -> Result<Vec<Vec<f64>>> {
                let len = CHUNK.min(n - start);
                let mut rng = keyed_rng(seed, index, STREAM_CLASSICAL + (start / CHUNK) as u64);
                let mut sq = vec![Vec::with_capacity(len); n_kicks + 1];
                let mut factors = shared.amplitude_factors.clone();
                let mut offsets = shared.period_offsets.clone();
                for _ in 0..len {
                    let mut phi = TAU * rng.random::<f64>();
                    let rho0 = ensemble.rho_spread * rng.random::<f64>();
                    let intervals = if ensemble.sharing == NoiseSharing::PerTrajectory {
                        for (t, f) in factors.iter_mut().enumerate() {
                            *f = 1.0 + cfg.amplitude_level * (rng.random::<f64>() - 0.5);
                            offsets[t] = if t == 0 {
                                0.0
                            } else {
                                cfg.period_level * (rng.random::<f64>() - 0.5)
                            };
                        }
                        crate::noise::free_evolution_intervals(&offsets)?
                    } else {
                        shared_intervals.clone()
                    };
                    let mut rho = rho0;
                    sq[0].push(0.0);
                    for t in 0..n_kicks {
                        rho += kappa * factors[t] * phi.sin();
                        phi += intervals.get(t).copied().unwrap_or(1.0) * rho;
                        let d = rho - rho0;
                        sq[t + 1].push(d * d);
                    }
                }
                Ok(sq)
            })
            .collect::<Result<_>>()?;
        let scale = 1.0 / (2.0 * hbar * hbar * n as f64);
        per_realization.push(
            (0..=n_kicks)
                .map(|t| {
                    stats::sum(
                        &chunks
                            .iter()
                            .flat_map(|c| c[t].iter().copied())
                            .collect::<Vec<_>>(),
                    ) * scale
                })
                .collect::<Vec<f64>>(),
        );
    }
    let energies: Vec<f64> = (0..=n_kicks)
        .map(|t| stats::mean(&per_realization.iter().map(|e| e[t]).collect::<Vec<_>>()))
        .collect();
    let fit = RATE_FIT_KICKS.min(n_kicks);
    let x: Vec<f64> = (0..=fit).map(|t| t as f64).collect();
    let rate = stats::ls_slope(&x, &energies[..=fit]);
    Ok(ClassicalGrowth { energies, rate })
}
