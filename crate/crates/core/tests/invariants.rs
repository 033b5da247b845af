use std::f64::consts::TAU;

use aokr::noise::NoiseConfig;
use aokr::qkr::{
    ensemble_energy, evolve_atom, momentum_distribution, EnsembleSpec, Propagator, QuantumState,
};
use aokr::{NoiseRealization, ScaledParams};
use proptest::prelude::*;

fn distribution(n0: i64, beta: f64, hbar: f64) -> Vec<(f64, f64)> {
    let params = ScaledParams::from_k(hbar, 2.5, 8).unwrap();
    let start = QuantumState::eigenstate(256, n0, beta, 1.0).unwrap();
    evolve_atom(&start, &params, &NoiseRealization::clean(8), 0)
        .unwrap()
        .distribution()
        .collect()
}

fn shift_mismatch(beta: f64, hbar: f64) -> f64 {
    let base = distribution(0, beta, hbar);
    let shifted = distribution(1, beta, hbar);
    let lookup = |p: f64| {
        base.iter()
            .find(|(q, _)| (q - p).abs() < 1e-9)
            .map_or(0.0, |(_, w)| *w)
    };
    shifted
        .iter()
        .map(|&(p, w)| (w - lookup(p - 1.0)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn translation_symmetry_at_resonant_periods() {
    for hbar in [TAU, 2.0 * TAU] {
        for beta in [0.0, 0.3, 0.5] {
            let m = shift_mismatch(beta, hbar);
            assert!(m < 1e-12, "hbar {hbar} beta {beta}: {m}");
        }
    }
    // Elsewhere the free phase is not a global phase and the shift is not exact.
    assert!(shift_mismatch(0.3, 1.7) > 1e-4);
}

#[test]
fn weak_amplitude_noise_converges_to_noiseless() {
    let spec = EnsembleSpec::thermal(400);
    for hbar in [TAU, TAU + 0.1] {
        let params = ScaledParams::from_k(hbar, 3.77, 20).unwrap();
        let clean = ensemble_energy(&spec, &params, &NoiseConfig::noiseless().with_seed(8, 0), 3)
            .unwrap()
            .0;
        let noisy = ensemble_energy(
            &spec,
            &params,
            &NoiseConfig::amplitude(0.01).with_seed(8, 0),
            3,
        )
        .unwrap()
        .0;
        assert!(
            (noisy - clean).abs() / clean < 0.01,
            "hbar {hbar}: {noisy} vs {clean}"
        );
    }
}

#[test]
fn spontaneous_emission_keeps_norm_and_distribution_normalized() {
    let spec = EnsembleSpec::thermal(100).with_cutoff(256);
    let params = ScaledParams::from_k(TAU, 3.0, 10).unwrap();
    let cfg = NoiseConfig::noiseless().with_se(0.2).with_seed(1, 0);
    let d = momentum_distribution(&spec, &params, &cfg, 2, 1.0).unwrap();
    let total: f64 = d.probabilities.iter().sum();
    assert!((total - 1.0).abs() < 1e-10, "{total}");
    let json = serde_json::to_string(&d).unwrap();
    assert!(json.contains("\"bin_width\":1.0"));
}

#[test]
fn cutoff_too_small_is_reported() {
    let params = ScaledParams::from_k(TAU, 3.77, 30).unwrap();
    let start = QuantumState::eigenstate(16, 0, 0.5, 1.0).unwrap();
    let err = evolve_atom(&start, &params, &NoiseRealization::clean(30), 0).unwrap_err();
    assert!(
        matches!(err, aokr::Error::CutoffInsufficient { .. }),
        "{err}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kick_routes_agree(k in 0.0f64..10.0, beta in 0.0f64..1.0, n0 in -20i64..20) {
        let mut prop = Propagator::new(256);
        let mut a = QuantumState::eigenstate(256, n0, beta, 1.0).unwrap();
        prop.kick(&mut a, 1.3, 0.7).unwrap();
        prop.free_evolve(&mut a, 1.0, 0.7).unwrap();
        let mut b = a.clone();
        let hbar = 1.0;
        prop.kick(&mut a, k * hbar, hbar).unwrap();
        prop.kick_bessel(&mut b, k * hbar, hbar).unwrap();
        let diff = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "{}", diff);
    }

    #[test]
    fn evolution_is_unitary(k in 0.0f64..6.0, hbar in 0.1f64..13.0, beta in 0.0f64..1.0) {
        let params = ScaledParams::from_k(hbar, k, 10).unwrap();
        let start = QuantumState::eigenstate(256, 0, beta, 1.0).unwrap();
        let cfg = NoiseConfig::amplitude(1.0).with_seed(3, 0);
        let r = aokr::noise::sample_realization(&cfg, 10, 1).unwrap();
        let out = evolve_atom(&start, &params, &r, 0).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-11);
    }
}
