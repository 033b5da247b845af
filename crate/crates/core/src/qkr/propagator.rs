//! One-period building blocks: the delta kick and the free evolution between
//! kicks.
//!
//! The kick `exp(i k cos(theta))` is diagonal in angle space and is applied by
//! transforming the ladder onto a `2M`-point angle grid and back. The
//! independent route [`Propagator::kick_bessel`] convolves the amplitudes with
//! `i^m J_m(k)` directly on the (cyclic) ladder.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::state::{ladder_index, QuantumState};
use crate::error::{Error, Result};
use crate::theory::bessel_j_orders;

/// Width of the blocks used when building linear phase ramps.
const RAMP_BLOCK: i64 = 64;

/// Bessel coefficients below this magnitude are dropped from the convolution.
const BESSEL_DROP: f64 = 1e-18;

/// FFT plans for a ladder of `2M` sites. Cheap to clone and share.
#[derive(Clone)]
pub struct LadderFft {
    cutoff: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    cos_grid: Arc<Vec<f64>>,
}

impl std::fmt::Debug for LadderFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LadderFft")
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl LadderFft {
    pub fn new(cutoff: usize) -> Self {
        let len = 2 * cutoff;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let cos_grid = (0..len)
            .map(|j| (TAU * j as f64 / len as f64).cos())
            .collect();
        Self {
            cutoff,
            forward,
            inverse,
            cos_grid: Arc::new(cos_grid),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        2 * self.cutoff
    }

    pub fn is_empty(&self) -> bool {
        self.cutoff == 0
    }

    /// Angle-grid multipliers `exp(i k cos(theta_j)) / 2M` for a kick of
    /// strength `k`; the `1/2M` absorbs the unnormalised transform pair.
    pub fn kick_phases(&self, k_eff: f64) -> Vec<Complex64> {
        let scale = 1.0 / self.len() as f64;
        self.cos_grid
            .iter()
            .map(|&c| Complex64::from_polar(scale, k_eff * c))
            .collect()
    }

    /// `exp(-i a n^2)` on the ladder, with `a = hbar dtau / 2`.
    pub fn quadratic_phases(&self, a: f64) -> Vec<Complex64> {
        (0..self.len())
            .map(|i| {
                let n = ladder_index(i, self.cutoff) as f64;
                Complex64::from_polar(1.0, -a * n * n)
            })
            .collect()
    }
}

/// Applies kicks and free evolutions to states on one ladder size. Holds the
/// transform scratch space, so use one per thread.
pub struct Propagator {
    fft: LadderFft,
    scratch: Vec<Complex64>,
    ramp: Vec<Complex64>,
    block: Vec<Complex64>,
}

impl Propagator {
    pub fn new(cutoff: usize) -> Self {
        Self::with_plans(LadderFft::new(cutoff))
    }

    pub fn with_plans(fft: LadderFft) -> Self {
        let scratch_len = fft
            .forward
            .get_inplace_scratch_len()
            .max(fft.inverse.get_inplace_scratch_len());
        let len = fft.len();
        Self {
            fft,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            ramp: vec![Complex64::new(0.0, 0.0); len],
            block: vec![Complex64::new(0.0, 0.0); RAMP_BLOCK as usize],
        }
    }

    pub fn plans(&self) -> &LadderFft {
        &self.fft
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        if state.cutoff() != self.fft.cutoff {
            return Err(Error::invalid(
                "cutoff",
                format!(
                    "state cutoff {} does not match propagator cutoff {}",
                    state.cutoff(),
                    self.fft.cutoff
                ),
            ));
        }
        Ok(())
    }

    /// Kick of nominal strength `kappa_n`; the state's own factor `g` scales it,
    /// so the angle-space phase is `exp(i g kappa_n cos(theta) / hbar)`.
    pub fn kick(&mut self, state: &mut QuantumState, kappa_n: f64, hbar: f64) -> Result<()> {
        check_kick(kappa_n, hbar)?;
        let k_eff = state.kick_factor() * kappa_n / hbar;
        let phases = self.fft.kick_phases(k_eff);
        self.kick_with_phases(state, &phases)
    }

    /// Kick with multipliers from [`LadderFft::kick_phases`].
    pub fn kick_with_phases(
        &mut self,
        state: &mut QuantumState,
        phases: &[Complex64],
    ) -> Result<()> {
        self.check_state(state)?;
        let amps = state.amplitudes_mut();
        self.fft
            .inverse
            .process_with_scratch(amps, &mut self.scratch);
        for (a, p) in amps.iter_mut().zip(phases) {
            *a *= p;
        }
        self.fft
            .forward
            .process_with_scratch(amps, &mut self.scratch);
        state.check_cutoff()
    }

    /// The same kick computed as a convolution with `i^m J_m(k)`.
    pub fn kick_bessel(&mut self, state: &mut QuantumState, kappa_n: f64, hbar: f64) -> Result<()> {
        self.check_state(state)?;
        check_kick(kappa_n, hbar)?;
        let k_eff = state.kick_factor() * kappa_n / hbar;
        let max_order = (k_eff.abs() + 40.0 + 15.0 * k_eff.abs().cbrt()).ceil() as usize;
        let mut coeffs = bessel_j_orders(max_order, k_eff);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() < BESSEL_DROP) {
            coeffs.pop();
        }
        let len = state.len() as i64;
        let src = state.amplitudes().to_vec();
        let i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let out = state.amplitudes_mut();
        for (target, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &j) in coeffs.iter().enumerate() {
                let m = m as i64;
                // i^m J_m couples n -> n + m; J_{-m} = (-1)^m J_m.
                let up = i_pow[(m % 4) as usize] * j;
                acc += up * src[(target as i64 - m).rem_euclid(len) as usize];
                if m > 0 {
                    let down =
                        i_pow[((-m).rem_euclid(4)) as usize] * (if m % 2 == 0 { j } else { -j });
                    acc += down * src[(target as i64 + m).rem_euclid(len) as usize];
                }
            }
            *slot = acc;
        }
        state.check_cutoff()
    }

    /// Free evolution for `dtau` periods: `c_n <- c_n exp(-i hbar dtau (n + beta)^2 / 2)`.
    pub fn free_evolve(&mut self, state: &mut QuantumState, dtau: f64, hbar: f64) -> Result<()> {
        if !(dtau > 0.0) {
            return Err(Error::invalid(
                "dtau",
                format!("free evolution needs a positive duration, got {dtau}"),
            ));
        }
        self.check_state(state)?;
        let a = 0.5 * hbar * dtau;
        let beta = state.beta();
        for (i, c) in state.amplitudes_mut().iter_mut().enumerate() {
            let p = ladder_index(i, self.fft.cutoff) as f64 + beta;
            *c *= Complex64::from_polar(1.0, -a * p * p);
        }
        Ok(())
    }

    /// Free evolution using a precomputed `exp(-i a n^2)` table, `a = hbar dtau / 2`.
    /// The `beta`-dependent part `exp(-i a (2 beta n + beta^2))` is a linear
    /// ramp built from block powers.
    pub fn free_evolve_with_table(
        &mut self,
        state: &mut QuantumState,
        a: f64,
        quadratic: &[Complex64],
    ) -> Result<()> {
        self.check_state(state)?;
        let beta = state.beta();
        if beta == 0.0 {
            for (c, q) in state.amplitudes_mut().iter_mut().zip(quadratic) {
                *c *= q;
            }
            return Ok(());
        }
        self.fill_ramp(-2.0 * a * beta, -a * beta * beta);
        for ((c, q), r) in state
            .amplitudes_mut()
            .iter_mut()
            .zip(quadratic)
            .zip(&self.ramp)
        {
            *c *= q * r;
        }
        Ok(())
    }

    /// `ramp[i] = exp(i (slope n_i + offset))`.
    fn fill_ramp(&mut self, slope: f64, offset: f64) {
        for (j, b) in self.block.iter_mut().enumerate() {
            *b = Complex64::from_polar(1.0, slope * j as f64);
        }
        let cutoff = self.fft.cutoff;
        let mut current_block = i64::MIN;
        let mut base = Complex64::new(1.0, 0.0);
        for i in 0..self.ramp.len() {
            let n = ladder_index(i, cutoff);
            let q = n.div_euclid(RAMP_BLOCK);
            let r = n.rem_euclid(RAMP_BLOCK) as usize;
            if q != current_block {
                current_block = q;
                base = Complex64::from_polar(1.0, slope * (q * RAMP_BLOCK) as f64 + offset);
            }
            self.ramp[i] = base * self.block[r];
        }
    }
}

fn check_kick(kappa_n: f64, hbar: f64) -> Result<()> {
    if !(kappa_n >= 0.0 && kappa_n.is_finite()) {
        return Err(Error::invalid(
            "kappa_n",
            format!("kick strength must be non-negative, got {kappa_n}"),
        ));
    }
    if !(hbar > 0.0) {
        return Err(Error::invalid(
            "hbar",
            format!("must be positive, got {hbar}"),
        ));
    }
    Ok(())
}

/// Kick `state` once with its own propagator. Convenient for one-off use;
/// loops should hold a [`Propagator`].
pub fn kick(state: &mut QuantumState, kappa_n: f64, hbar: f64) -> Result<()> {
    Propagator::new(state.cutoff()).kick(state, kappa_n, hbar)
}

pub fn free_evolve(state: &mut QuantumState, dtau: f64, hbar: f64) -> Result<()> {
    Propagator::new(state.cutoff()).free_evolve(state, dtau, hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::bessel_j;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(cutoff: usize, width: i64, beta: f64, seed: u64) -> QuantumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ladder = vec![Complex64::new(0.0, 0.0); 2 * cutoff];
        for n in -width..=width {
            ladder[(n + cutoff as i64) as usize] =
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let norm: f64 = ladder.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut ladder {
            *c /= norm;
        }
        QuantumState::from_ladder(beta, 1.0, &ladder).unwrap()
    }

    fn max_diff(a: &QuantumState, b: &QuantumState) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_kick_is_identity() {
        let s0 = random_state(64, 10, 0.3, 1);
        let mut s = s0.clone();
        kick(&mut s, 0.0, 2.0).unwrap();
        assert!(max_diff(&s, &s0) < 1e-15);
    }

    #[test]
    fn plane_wave_kick_gives_bessel_populations() {
        let k = 3.77;
        let mut s = QuantumState::eigenstate(128, 0, 0.0, 1.0).unwrap();
        kick(&mut s, k, 1.0).unwrap();
        for m in -30..=30 {
            let want = bessel_j(m, k).powi(2);
            assert!((s.amplitude(m as i64).norm_sqr() - want).abs() < 1e-14);
        }
        // sum m^2 J_m(k)^2 = k^2 / 2, checked by brute-force summation.
        let brute: f64 = (-200..=200)
            .map(|m: i32| (m as f64).powi(2) * bessel_j(m, k).powi(2))
            .sum();
        assert!((brute - k * k / 2.0).abs() < 1e-12);
        assert!((2.0 * s.energy() - brute).abs() < 1e-11);
    }

    #[test]
    fn kick_is_unitary() {
        let mut s = random_state(256, 40, 0.0, 7);
        let mut prop = Propagator::new(256);
        for _ in 0..10 {
            prop.kick(&mut s, 3.77, 1.0).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_and_bessel_routes_agree() {
        let mut prop = Propagator::new(256);
        for (seed, k) in [(1u64, 0.5), (2, 3.77), (3, 7.0), (4, 10.0)] {
            let s0 = random_state(256, 60, 0.37, seed);
            let mut a = s0.clone();
            let mut b = s0.clone();
            prop.kick(&mut a, k, 1.0).unwrap();
            prop.kick_bessel(&mut b, k, 1.0).unwrap();
            let d = max_diff(&a, &b);
            assert!(d < 1e-10, "k={k}: {d:e}");
        }
    }

    #[test]
    fn kick_factor_scales_strength() {
        let mut a = QuantumState::eigenstate(64, 0, 0.0, 1.5).unwrap();
        let mut b = QuantumState::eigenstate(64, 0, 0.0, 1.0).unwrap();
        kick(&mut a, 2.0, 1.0).unwrap();
        kick(&mut b, 3.0, 1.0).unwrap();
        assert!(max_diff(&a, &b) < 1e-14);
    }

    #[test]
    fn negative_kick_rejected() {
        let mut s = QuantumState::eigenstate(16, 0, 0.0, 1.0).unwrap();
        assert!(kick(&mut s, -1.0, 1.0).is_err());
        assert!(free_evolve(&mut s, 0.0, 1.0).is_err());
    }

    #[test]
    fn cutoff_overflow_reported() {
        let mut s = QuantumState::eigenstate(16, 0, 0.0, 1.0).unwrap();
        assert!(matches!(
            kick(&mut s, 30.0, 1.0),
            Err(Error::CutoffInsufficient { .. })
        ));
    }

    #[test]
    fn resonant_free_evolution_is_identity() {
        let s0 = random_state(64, 20, 0.0, 3);
        let mut s = s0.clone();
        free_evolve(&mut s, 1.0, 4.0 * PI).unwrap();
        assert!(max_diff(&s, &s0) < 1e-12);
    }

    #[test]
    fn antiresonant_free_evolution_alternates_sign() {
        let s0 = random_state(64, 20, 0.0, 4);
        let mut s = s0.clone();
        free_evolve(&mut s, 1.0, 2.0 * PI).unwrap();
        for n in -20..=20 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((s.amplitude(n) - s0.amplitude(n) * sign).norm() < 1e-12);
        }
    }

    #[test]
    fn half_quasimomentum_at_two_pi_is_a_global_phase() {
        let s0 = random_state(64, 20, 0.5, 5);
        let mut s = s0.clone();
        free_evolve(&mut s, 1.0, 2.0 * PI).unwrap();
        let phase = Complex64::from_polar(1.0, -PI / 4.0);
        for n in -20..=20 {
            assert!((s.amplitude(n) - s0.amplitude(n) * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn table_free_evolution_matches_direct() {
        let mut prop = Propagator::new(128);
        for (beta, dtau, hbar) in [
            (0.0, 1.0, 2.1),
            (0.37, 0.95, 2.0 * PI + 0.05),
            (0.999, 1.07, 5.0),
        ] {
            let s0 = random_state(128, 100, beta, 9);
            let mut a = s0.clone();
            let mut b = s0.clone();
            prop.free_evolve(&mut a, dtau, hbar).unwrap();
            let a_coef = 0.5 * hbar * dtau;
            let table = prop.plans().quadratic_phases(a_coef);
            prop.free_evolve_with_table(&mut b, a_coef, &table).unwrap();
            assert!(max_diff(&a, &b) < 1e-11, "{:e}", max_diff(&a, &b));
        }
    }
}
