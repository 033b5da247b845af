use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fraction of the cutoff beyond which probability counts as tail mass.
pub const TAIL_EDGE_FRACTION: f64 = 0.9;
/// Largest tail mass tolerated before the cutoff is declared insufficient.
pub const TAIL_MASS_LIMIT: f64 = 1e-8;

/// One atom: a quasimomentum, a kick-strength factor and amplitudes on the
/// integer ladder `n in [-M, M)`.
///
/// Amplitudes are stored in FFT order (`n >= 0` first, then the negative
/// indices), so the angle-space transform needs no reshuffling.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    beta: f64,
    kick_factor: f64,
    cutoff: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// The momentum eigenstate `|n0>` with quasimomentum `beta`.
    pub fn eigenstate(cutoff: usize, n0: i64, beta: f64, kick_factor: f64) -> Result<Self> {
        let mut state = Self::zeros(cutoff, beta, kick_factor)?;
        let idx = state.index_of(n0).ok_or_else(|| {
            Error::invalid(
                "n0",
                format!("{n0} is outside the ladder [-{cutoff}, {cutoff})"),
            )
        })?;
        state.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Build from amplitudes given in ladder order, `n = -M ..= M - 1`.
    pub fn from_ladder(beta: f64, kick_factor: f64, ladder: &[Complex64]) -> Result<Self> {
        if ladder.is_empty() || ladder.len() % 2 != 0 {
            return Err(Error::invalid(
                "amplitudes",
                "ladder length must be even and non-zero",
            ));
        }
        let cutoff = ladder.len() / 2;
        let mut state = Self::zeros(cutoff, beta, kick_factor)?;
        for (j, &c) in ladder.iter().enumerate() {
            let n = j as i64 - cutoff as i64;
            let idx = state.index_of(n).expect("ladder index in range");
            state.amps[idx] = c;
        }
        Ok(state)
    }

    fn zeros(cutoff: usize, beta: f64, kick_factor: f64) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::invalid("cutoff", "must be at least 1"));
        }
        check_beta(beta)?;
        if !(kick_factor > 0.0 && kick_factor.is_finite()) {
            return Err(Error::invalid(
                "kick_factor",
                format!("must be positive, got {kick_factor}"),
            ));
        }
        Ok(Self {
            beta,
            kick_factor,
            cutoff,
            amps: vec![Complex64::new(0.0, 0.0); 2 * cutoff],
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Replace the quasimomentum, keeping the amplitudes.
    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        check_beta(beta)?;
        self.beta = beta;
        Ok(())
    }

    pub fn kick_factor(&self) -> f64 {
        self.kick_factor
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn index_of(&self, n: i64) -> Option<usize> {
        let m = self.cutoff as i64;
        if n < -m || n >= m {
            return None;
        }
        Some(if n >= 0 {
            n as usize
        } else {
            (2 * m + n) as usize
        })
    }

    /// Ladder index of storage slot `i`.
    #[inline]
    pub fn ladder_index(&self, i: usize) -> i64 {
        ladder_index(i, self.cutoff)
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        self.index_of(n)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amps[i])
    }

    /// Raw amplitudes in FFT order.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Amplitudes in ladder order, `n = -M ..= M - 1`.
    pub fn to_ladder(&self) -> Vec<Complex64> {
        let m = self.cutoff;
        self.amps[m..]
            .iter()
            .chain(&self.amps[..m])
            .copied()
            .collect()
    }

    /// `(momentum n + beta, probability)` pairs in ladder order.
    pub fn distribution(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = self.cutoff;
        (m..2 * m).chain(0..m).map(move |i| {
            (
                self.ladder_index(i) as f64 + self.beta,
                self.amps[i].norm_sqr(),
            )
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        let probs: Vec<f64> = self.amps.iter().map(|c| c.norm_sqr()).collect();
        crate::stats::sum(&probs)
    }

    /// Mean energy `<(n + beta)^2> / 2` in two-photon recoil units.
    pub fn energy(&self) -> f64 {
        self.windowed_moments(None).1 / 2.0
    }

    /// `(mass, <p^2> mass)` restricted to `|n + beta| <= p_max`.
    pub fn windowed_moments(&self, p_max: Option<f64>) -> (f64, f64) {
        let mut mass = 0.0;
        let mut second = 0.0;
        for (i, c) in self.amps.iter().enumerate() {
            let p = self.ladder_index(i) as f64 + self.beta;
            if p_max.is_some_and(|w| p.abs() > w) {
                continue;
            }
            let prob = c.norm_sqr();
            mass += prob;
            second += prob * p * p;
        }
        (mass, second)
    }

    /// Probability beyond `|n| > 0.9 M`.
    pub fn tail_mass(&self) -> f64 {
        let edge = (TAIL_EDGE_FRACTION * self.cutoff as f64) as i64;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.ladder_index(*i).abs() > edge)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    pub fn check_cutoff(&self) -> Result<()> {
        let tail = self.tail_mass();
        if tail < TAIL_MASS_LIMIT {
            Ok(())
        } else {
            Err(Error::CutoffInsufficient {
                cutoff: self.cutoff,
                edge: (TAIL_EDGE_FRACTION * self.cutoff as f64) as usize,
                tail_mass: tail,
            })
        }
    }
}

#[inline]
pub(crate) fn ladder_index(i: usize, cutoff: usize) -> i64 {
    if i < cutoff {
        i as i64
    } else {
        i as i64 - 2 * cutoff as i64
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid(
            "beta",
            format!("quasimomentum must lie in [0, 1), got {beta}"),
        ))
    }
}
