//! Quantum kicked-rotor ensembles resolved in quasimomentum.
//!
//! Each atom carries a quasimomentum `beta` and amplitudes on the integer
//! ladder; its momentum in two-photon recoils is `n + beta`. A period consists
//! of a delta kick `exp(i k cos(theta))`, `k = g kappa R_A,n / hbar`, an optional
//! spontaneous-emission reshuffle of `beta`, and free evolution
//! `exp(-i hbar dtau (n + beta)^2 / 2)`.

mod ensemble;
mod propagator;
mod state;

pub use ensemble::{
    ensemble_energy, ensemble_trace, evolve_atom, evolve_atom_trace, momentum_distribution,
    sample_atoms, AtomInit, BetaMode, EnergyTrace, EnsembleSpec, InitialMomentum,
    MomentumDistribution, DEFAULT_CUTOFF, DEFAULT_SIGMA_P,
};
pub use propagator::{free_evolve, kick, LadderFft, Propagator};
pub use state::{QuantumState, TAIL_EDGE_FRACTION, TAIL_MASS_LIMIT};
