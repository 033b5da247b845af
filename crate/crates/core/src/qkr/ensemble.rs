//! Ensembles of atoms evolved under one noise realization at a time.
//!
//! Atoms are processed in fixed-size chunks; chunk results are reduced in atom
//! order, so the output bits do not depend on the number of worker threads.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::propagator::{LadderFft, Propagator};
use super::state::QuantumState;
use crate::error::{Error, Result};
use crate::noise::{keyed_rng, sample_realization, NoiseConfig, NoiseRealization, STREAM_ENSEMBLE};
use crate::params::ScaledParams;
use crate::stats;

/// Atoms per work unit. Fixed so that reductions are thread-count independent.
const CHUNK: usize = 32;

/// Default ladder cutoff `M`; the ladder spans `n in [-M, M)`.
pub const DEFAULT_CUTOFF: usize = 512;

/// Default thermal momentum spread, two-photon recoils.
pub const DEFAULT_SIGMA_P: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialMomentum {
    /// Gaussian of standard deviation `sigma` (two-photon recoils), sampled by
    /// stratified inverse transform.
    Gaussian { sigma: f64 },
    /// Explicit momenta, reused cyclically if there are fewer than atoms.
    Explicit { momenta: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BetaMode {
    /// `beta = frac(p)`, `n0 = floor(p)`.
    FromMomentum,
    /// Every atom gets the same `beta`; `n0` puts `n0 + beta` nearest to `p`.
    Fixed { beta: f64 },
    /// Stratified uniform `beta` drawn independently of `p`; `n0` puts
    /// `n0 + beta` nearest to `p`, so a cold start covers `[-1/2, 1/2)`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_atoms: usize,
    pub initial: InitialMomentum,
    pub beta: BetaMode,
    /// Relative standard deviation of the per-atom kick-strength factor.
    #[serde(default)]
    pub kappa_spread: f64,
    /// Momentum window `|p| <= p_max` seen by the detector.
    #[serde(default)]
    pub detection_window: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self::thermal(2000)
    }
}

impl EnsembleSpec {
    /// A cloud with the default thermal spread and `beta = frac(p)`.
    pub fn thermal(n_atoms: usize) -> Self {
        Self {
            n_atoms,
            initial: InitialMomentum::Gaussian {
                sigma: DEFAULT_SIGMA_P,
            },
            beta: BetaMode::FromMomentum,
            kappa_spread: 0.0,
            detection_window: None,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// Plane waves `|n = 0>` with stratified uniform quasimomenta.
    pub fn uniform_beta(n_atoms: usize) -> Self {
        Self {
            initial: InitialMomentum::Gaussian { sigma: 0.0 },
            beta: BetaMode::Uniform,
            ..Self::thermal(n_atoms)
        }
    }

    pub fn with_cutoff(self, cutoff: usize) -> Self {
        Self { cutoff, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::invalid("n_atoms", "need at least one atom"));
        }
        if self.cutoff == 0 {
            return Err(Error::invalid("cutoff", "must be at least 1"));
        }
        match &self.initial {
            InitialMomentum::Gaussian { sigma } if !(*sigma >= 0.0 && sigma.is_finite()) => {
                return Err(Error::invalid(
                    "sigma",
                    format!("must be non-negative, got {sigma}"),
                ));
            }
            InitialMomentum::Explicit { momenta } if momenta.is_empty() => {
                return Err(Error::invalid("momenta", "explicit momentum list is empty"));
            }
            _ => {}
        }
        if let BetaMode::Fixed { beta } = self.beta {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::invalid(
                    "beta",
                    format!("must lie in [0, 1), got {beta}"),
                ));
            }
        }
        if !(self.kappa_spread >= 0.0 && self.kappa_spread.is_finite()) {
            return Err(Error::invalid(
                "kappa_spread",
                format!("must be non-negative, got {}", self.kappa_spread),
            ));
        }
        if let Some(w) = self.detection_window {
            if !(w > 0.0) {
                return Err(Error::invalid(
                    "detection_window",
                    format!("must be positive, got {w}"),
                ));
            }
        }
        Ok(())
    }
}

/// Initial condition of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomInit {
    pub n0: i64,
    pub beta: f64,
    pub kick_factor: f64,
}

impl AtomInit {
    pub fn momentum(&self) -> f64 {
        self.n0 as f64 + self.beta
    }

    pub fn state(&self, cutoff: usize) -> Result<QuantumState> {
        QuantumState::eigenstate(cutoff, self.n0, self.beta, self.kick_factor)
    }
}

/// Draw the atoms of an ensemble. Deterministic in `(seed, realization)`.
pub fn sample_atoms(spec: &EnsembleSpec, seed: u64, realization: u64) -> Result<Vec<AtomInit>> {
    spec.validate()?;
    let standard = Normal::new(0.0, 1.0).expect("standard normal");
    let mut strat = keyed_rng(seed, realization, STREAM_ENSEMBLE);
    let mut aux = keyed_rng(seed, realization, STREAM_ENSEMBLE + 1);
    let mut spread = keyed_rng(seed, realization, STREAM_ENSEMBLE + 2);
    let a = spec.n_atoms as f64;

    let mut atoms = Vec::with_capacity(spec.n_atoms);
    for j in 0..spec.n_atoms {
        let u = (j as f64 + strat.random::<f64>()) / a;
        let draw = |u: f64| -> f64 {
            match &spec.initial {
                InitialMomentum::Gaussian { sigma } if *sigma == 0.0 => 0.0,
                InitialMomentum::Gaussian { sigma } => {
                    sigma * standard.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16))
                }
                InitialMomentum::Explicit { momenta } => momenta[j % momenta.len()],
            }
        };
        let (n0, beta) = match spec.beta {
            BetaMode::FromMomentum => split_momentum(draw(u)),
            BetaMode::Fixed { beta } => (nearest_index(draw(u), beta), beta),
            BetaMode::Uniform => {
                let beta = u.min(1.0 - f64::EPSILON);
                (nearest_index(draw(aux.random::<f64>()), beta), beta)
            }
        };
        let kick_factor = if spec.kappa_spread == 0.0 {
            1.0
        } else {
            // Normal(1, s) truncated to g > 0.
            loop {
                let g = 1.0
                    + spec.kappa_spread * standard.inverse_cdf(spread.random::<f64>().max(1e-300));
                if g > 0.0 {
                    break g;
                }
            }
        };
        let limit = spec.cutoff as i64;
        if n0 < -limit || n0 >= limit {
            return Err(Error::invalid(
                "initial",
                format!(
                    "initial momentum index {n0} lies outside the ladder of cutoff {}",
                    spec.cutoff
                ),
            ));
        }
        atoms.push(AtomInit {
            n0,
            beta,
            kick_factor,
        });
    }
    Ok(atoms)
}

/// Ladder index whose momentum `n + beta` is nearest to `p`, ties upward.
fn nearest_index(p: f64, beta: f64) -> i64 {
    (p - beta + 0.5).floor() as i64
}

fn split_momentum(p: f64) -> (i64, f64) {
    let n0 = p.floor();
    let beta = p - n0;
    if beta >= 1.0 {
        (n0 as i64 + 1, 0.0)
    } else {
        (n0 as i64, beta)
    }
}

/// Per-realization tables shared by all atoms.
struct RealizationPlan {
    /// Nominal `k_n = kappa R_A,n / hbar` for each kick.
    kick_strengths: Vec<f64>,
    /// Angle-space multipliers for `g = 1`, one per kick (empty if unused).
    kick_tables: Vec<Vec<Complex64>>,
    /// `(a, table index)` for each free step, `a = hbar dtau / 2`.
    free_steps: Vec<(f64, usize)>,
    quadratic_tables: Vec<Vec<Complex64>>,
}

impl RealizationPlan {
    fn new(
        fft: &LadderFft,
        params: &ScaledParams,
        realization: &NoiseRealization,
        unit_factor_atoms: bool,
    ) -> Result<Self> {
        let n = params.kicks;
        if realization.n_kicks() < n {
            return Err(Error::invalid(
                "realization",
                format!("has {} kicks, simulation needs {n}", realization.n_kicks()),
            ));
        }
        let kick_strengths: Vec<f64> = realization.amplitude_factors[..n]
            .iter()
            .map(|r| params.kappa * r / params.hbar)
            .collect();
        let kick_tables = if unit_factor_atoms {
            kick_strengths.iter().map(|&k| fft.kick_phases(k)).collect()
        } else {
            Vec::new()
        };
        let intervals = crate::noise::free_evolution_intervals(&realization.period_offsets[..n])?;
        let mut free_steps = Vec::with_capacity(intervals.len());
        let mut quadratic_tables: Vec<Vec<Complex64>> = Vec::new();
        let mut coefficients: Vec<f64> = Vec::new();
        for dtau in intervals {
            let a = 0.5 * params.hbar * dtau;
            let idx = match coefficients.iter().position(|&c| c == a) {
                Some(i) => i,
                None => {
                    coefficients.push(a);
                    quadratic_tables.push(fft.quadratic_phases(a));
                    coefficients.len() - 1
                }
            };
            free_steps.push((a, idx));
        }
        Ok(Self {
            kick_strengths,
            kick_tables,
            free_steps,
            quadratic_tables,
        })
    }

    /// Evolve one atom through every kick, calling `observe` with the kick
    /// number (1-based) after each kick and spontaneous-emission step.
    fn run(
        &self,
        prop: &mut Propagator,
        state: &mut QuantumState,
        schedule: &[Option<f64>],
        mut observe: impl FnMut(usize, &QuantumState),
    ) -> Result<()> {
        let n = self.kick_strengths.len();
        for s in 0..n {
            if state.kick_factor() == 1.0 && !self.kick_tables.is_empty() {
                prop.kick_with_phases(state, &self.kick_tables[s])?;
            } else {
                let phases = prop
                    .plans()
                    .kick_phases(state.kick_factor() * self.kick_strengths[s]);
                prop.kick_with_phases(state, &phases)?;
            }
            if let Some(beta) = schedule.get(s).copied().flatten() {
                state.set_beta(beta)?;
            }
            observe(s + 1, state);
            if s + 1 < n {
                let (a, idx) = self.free_steps[s];
                prop.free_evolve_with_table(state, a, &self.quadratic_tables[idx])?;
            }
        }
        Ok(())
    }
}

/// Evolve a single atom: `N` kicks of strength `kappa R_A,n`, spontaneous
/// emission right after each kick, and free evolution for the realized
/// intervals in between.
pub fn evolve_atom(
    initial: &QuantumState,
    params: &ScaledParams,
    realization: &NoiseRealization,
    atom_index: usize,
) -> Result<QuantumState> {
    let fft = LadderFft::new(initial.cutoff());
    let plan = RealizationPlan::new(&fft, params, realization, initial.kick_factor() == 1.0)?;
    let mut prop = Propagator::with_plans(fft);
    let mut state = initial.clone();
    let schedule = realization.se_schedule(atom_index);
    plan.run(&mut prop, &mut state, &schedule, |_, _| {})?;
    Ok(state)
}

/// Like [`evolve_atom`], also returning the energy after every kick
/// (entry 0 is the initial energy).
pub fn evolve_atom_trace(
    initial: &QuantumState,
    params: &ScaledParams,
    realization: &NoiseRealization,
    atom_index: usize,
) -> Result<(QuantumState, Vec<f64>)> {
    let fft = LadderFft::new(initial.cutoff());
    let plan = RealizationPlan::new(&fft, params, realization, initial.kick_factor() == 1.0)?;
    let mut prop = Propagator::with_plans(fft);
    let mut state = initial.clone();
    let schedule = realization.se_schedule(atom_index);
    let mut energies = vec![state.energy()];
    plan.run(&mut prop, &mut state, &schedule, |_, s| {
        energies.push(s.energy())
    })?;
    Ok((state, energies))
}

/// Histogram layout: bins of `width` centred on integer multiples of `width`.
#[derive(Debug, Clone, Copy)]
struct Binning {
    width: f64,
    offset: i64,
    count: usize,
}

impl Binning {
    fn new(width: f64, cutoff: usize) -> Self {
        let half = ((cutoff as f64 + 1.0) / width).ceil() as i64;
        Self {
            width,
            offset: half,
            count: (2 * half + 1) as usize,
        }
    }

    fn bin(&self, p: f64) -> usize {
        ((p / self.width).round() as i64 + self.offset).clamp(0, self.count as i64 - 1) as usize
    }

    fn center(&self, i: usize) -> f64 {
        (i as i64 - self.offset) as f64 * self.width
    }
}

struct RealizationOutcome {
    /// Windowed `(mass, second moment)` sums per kick, reduced over atoms.
    energies: Vec<f64>,
    histogram: Option<Vec<f64>>,
}

fn simulate_realization(
    spec: &EnsembleSpec,
    params: &ScaledParams,
    realization: &NoiseRealization,
    atoms: &[AtomInit],
    fft: &LadderFft,
    binning: Option<Binning>,
) -> Result<RealizationOutcome> {
    let unit = atoms.iter().any(|a| a.kick_factor == 1.0);
    let plan = Arc::new(RealizationPlan::new(fft, params, realization, unit)?);
    let n = params.kicks;
    let window = spec.detection_window;

    type ChunkOut = (Vec<Vec<(f64, f64)>>, Option<Vec<f64>>);
    let chunks: Vec<ChunkOut> = atoms
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| -> Result<ChunkOut> {
            let mut prop = Propagator::with_plans(fft.clone());
            let mut hist = binning.map(|b| vec![0.0; b.count]);
            let mut per_atom = Vec::with_capacity(chunk.len());
            for (j, atom) in chunk.iter().enumerate() {
                let index = c * CHUNK + j;
                let mut state = atom.state(spec.cutoff)?;
                let schedule = realization.se_schedule(index);
                let mut moments = Vec::with_capacity(n + 1);
                moments.push(state.windowed_moments(window));
                plan.run(&mut prop, &mut state, &schedule, |_, s| {
                    moments.push(s.windowed_moments(window))
                })?;
                if let (Some(h), Some(b)) = (hist.as_mut(), binning) {
                    for (p, prob) in state.distribution() {
                        h[b.bin(p)] += prob;
                    }
                }
                per_atom.push(moments);
            }
            Ok((per_atom, hist))
        })
        .collect::<Result<_>>()?;

    let mut energies = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let mass: Vec<f64> = chunks
            .iter()
            .flat_map(|(atoms, _)| atoms.iter().map(|m| m[t].0))
            .collect();
        let second: Vec<f64> = chunks
            .iter()
            .flat_map(|(atoms, _)| atoms.iter().map(|m| m[t].1))
            .collect();
        let total = stats::sum(&mass);
        energies.push(if total > 0.0 {
            stats::sum(&second) / (2.0 * total)
        } else {
            0.0
        });
    }

    let histogram = binning.map(|b| {
        let mut h = vec![0.0; b.count];
        for (_, ch) in &chunks {
            for (acc, v) in h.iter_mut().zip(ch.as_ref().expect("histogram requested")) {
                *acc += v;
            }
        }
        h
    });
    Ok(RealizationOutcome {
        energies,
        histogram,
    })
}

/// Mean energy after every kick, averaged over atoms and then realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    /// Entry `t` is the energy after `t` kicks.
    pub energies: Vec<f64>,
    /// Standard error across realizations.
    pub sems: Vec<f64>,
    /// `per_realization[r][t]`.
    pub per_realization: Vec<Vec<f64>>,
}

impl EnergyTrace {
    pub fn final_energy(&self) -> (f64, f64) {
        let last = self.energies.len() - 1;
        (self.energies[last], self.sems[last])
    }
}

fn realization_config(cfg: &NoiseConfig, r: usize) -> NoiseConfig {
    NoiseConfig {
        realization_index: cfg.realization_index.wrapping_add(r as u64),
        ..*cfg
    }
}

fn check_run(spec: &EnsembleSpec, cfg: &NoiseConfig, n_realizations: usize) -> Result<()> {
    spec.validate()?;
    cfg.validate()?;
    if n_realizations == 0 {
        return Err(Error::invalid(
            "n_realizations",
            "need at least one realization",
        ));
    }
    Ok(())
}

/// Energy after every kick for `n_realizations` realizations keyed
/// `(cfg.master_seed, cfg.realization_index + r)`.
pub fn ensemble_trace(
    spec: &EnsembleSpec,
    params: &ScaledParams,
    cfg: &NoiseConfig,
    n_realizations: usize,
) -> Result<EnergyTrace> {
    check_run(spec, cfg, n_realizations)?;
    let fft = LadderFft::new(spec.cutoff);
    let mut per_realization = Vec::with_capacity(n_realizations);
    for r in 0..n_realizations {
        let rc = realization_config(cfg, r);
        let realization = sample_realization(&rc, params.kicks, spec.n_atoms)?;
        let atoms = sample_atoms(spec, rc.master_seed, rc.realization_index)?;
        let out = simulate_realization(spec, params, &realization, &atoms, &fft, None)?;
        per_realization.push(out.energies);
    }
    Ok(summarize(per_realization))
}

fn summarize(per_realization: Vec<Vec<f64>>) -> EnergyTrace {
    let len = per_realization[0].len();
    let (energies, sems) = (0..len)
        .map(|t| {
            let column: Vec<f64> = per_realization.iter().map(|e| e[t]).collect();
            stats::mean_sem(&column)
        })
        .unzip();
    EnergyTrace {
        energies,
        sems,
        per_realization,
    }
}

/// Final mean energy and its standard error across realizations.
pub fn ensemble_energy(
    spec: &EnsembleSpec,
    params: &ScaledParams,
    cfg: &NoiseConfig,
    n_realizations: usize,
) -> Result<(f64, f64)> {
    Ok(ensemble_trace(spec, params, cfg, n_realizations)?.final_energy())
}

/// Ensemble momentum distribution after the last kick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    /// Bin centres, two-photon recoils.
    pub momenta: Vec<f64>,
    /// Probabilities, summing to one before any detection window.
    pub probabilities: Vec<f64>,
    pub bin_width: f64,
    pub energy: f64,
    pub sem: f64,
}

impl MomentumDistribution {
    /// CSV with header `p,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,probability\n");
        for (p, w) in self.momenta.iter().zip(&self.probabilities) {
            out.push_str(&format!("{p},{w:e}\n"));
        }
        out
    }
}

pub fn momentum_distribution(
    spec: &EnsembleSpec,
    params: &ScaledParams,
    cfg: &NoiseConfig,
    n_realizations: usize,
    bin_width: f64,
) -> Result<MomentumDistribution> {
    check_run(spec, cfg, n_realizations)?;
    if !(bin_width > 0.0) {
        return Err(Error::invalid(
            "bin_width",
            format!("must be positive, got {bin_width}"),
        ));
    }
    let fft = LadderFft::new(spec.cutoff);
    let binning = Binning::new(bin_width, spec.cutoff);
    let mut hist = vec![0.0; binning.count];
    let mut per_realization = Vec::with_capacity(n_realizations);
    for r in 0..n_realizations {
        let rc = realization_config(cfg, r);
        let realization = sample_realization(&rc, params.kicks, spec.n_atoms)?;
        let atoms = sample_atoms(spec, rc.master_seed, rc.realization_index)?;
        let out = simulate_realization(spec, params, &realization, &atoms, &fft, Some(binning))?;
        for (acc, v) in hist
            .iter_mut()
            .zip(out.histogram.expect("histogram requested"))
        {
            *acc += v;
        }
        per_realization.push(out.energies);
    }
    let norm = (spec.n_atoms * n_realizations) as f64;
    let trace = summarize(per_realization);
    let (energy, sem) = trace.final_energy();
    Ok(MomentumDistribution {
        momenta: (0..binning.count).map(|i| binning.center(i)).collect(),
        probabilities: hist.into_iter().map(|h| h / norm).collect(),
        bin_width,
        energy,
        sem,
    })
}
