//! Cross-backend integration checks on randomized systems: the determinant
//! closed form and the direct linear solve must describe the same physics,
//! and both must conserve probability flux.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supercavity::{
    closed_form_amplitudes, find_peaks, scan, scatter_direct, Error, ScanMethod, SystemParams,
};

/// Draws a valid system: segment length up to 64, moderate weak links,
/// optionally an atom anywhere in the segment with an in-band frequency.
fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let n = rng.random_range(1..=64);
    let eta = rng.random_range(0.005..=1.0);
    let omega_c = rng.random_range(-0.5..=0.5);
    let xi = rng.random_range(0.5..=2.0);
    let base = if rng.random_bool(0.5) {
        let site = rng.random_range(1..=n);
        let omega_a = omega_c + 1.8 * xi * rng.random_range(-1.0..=1.0);
        let g = rng.random_range(0.0..=0.3) * xi;
        SystemParams::with_atom(n, eta, site, omega_a, g).unwrap()
    } else {
        SystemParams::empty(n, eta).unwrap()
    };
    base.shifted_omega_c(omega_c)
        .unwrap()
        .scaled_xi(xi)
        .unwrap()
}

/// A probe wave vector clear of the band edges and of the atomic pole guard
/// of `params` (so the closed form is defined there).
fn probe_k(rng: &mut ChaCha8Rng, params: &SystemParams) -> f64 {
    loop {
        let k = rng.random_range(0.02..=std::f64::consts::PI - 0.02);
        let energy = params.dispersion(k).unwrap();
        let near_pole = params
            .atom()
            .is_some_and(|a| a.g > 0.0 && (energy - a.omega_a).abs() < 1e-6 * params.xi());
        if !near_pole {
            return k;
        }
    }
}

#[test]
fn closed_form_and_direct_solve_agree_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c_ca_71);
    for _ in 0..300 {
        let params = random_params(&mut rng);
        for _ in 0..20 {
            let k = probe_k(&mut rng, &params);
            let (t_closed, r_closed) = closed_form_amplitudes(&params, k).unwrap();
            let direct = scatter_direct(&params, k).unwrap();
            let dt = (t_closed - direct.t).norm();
            let dr = (r_closed - direct.r).norm();
            assert!(
                dt < 1e-9 && dr < 1e-9,
                "amplitude mismatch at k = {k} for {params:?}: |dt| = {dt:.3e}, |dr| = {dr:.3e}"
            );
        }
    }
}

#[test]
fn probability_flux_is_conserved_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1_0b_5e);
    for _ in 0..300 {
        let params = random_params(&mut rng);
        for _ in 0..20 {
            let k = probe_k(&mut rng, &params);
            let sol = scatter_direct(&params, k).unwrap();
            let defect = (sol.transmission + sol.reflection - 1.0).abs();
            assert!(
                defect < 1e-10,
                "|T + R - 1| = {defect:.3e} at k = {k} for {params:?}"
            );
            assert!(sol.transmission <= 1.0 + 1e-12);
            assert!(sol.reflection <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn transmission_is_invariant_under_segment_mirror() {
    // Reflecting the atom position about the segment center leaves |t|
    // unchanged: the structure is traversed in reverse order.
    let mut rng = ChaCha8Rng::seed_from_u64(0x3197);
    for _ in 0..60 {
        let n = rng.random_range(2..=40);
        let eta = rng.random_range(0.01..=0.5);
        let site = rng.random_range(1..=n);
        let omega_a = 1.8 * rng.random_range(-1.0..=1.0);
        let g = rng.random_range(0.01..=0.3);
        let params = SystemParams::with_atom(n, eta, site, omega_a, g).unwrap();
        let mirrored = SystemParams::with_atom(n, eta, n + 1 - site, omega_a, g).unwrap();
        for _ in 0..10 {
            let k = probe_k(&mut rng, &params);
            let t = scatter_direct(&params, k).unwrap().transmission;
            let t_mirror = scatter_direct(&mirrored, k).unwrap().transmission;
            assert!(
                (t - t_mirror).abs() < 1e-9,
                "mirror asymmetry {:.3e} at k = {k} for {params:?}",
                (t - t_mirror).abs()
            );
        }
    }
}

#[test]
fn peak_extraction_is_backend_independent() {
    let params = SystemParams::with_atom(31, 0.01, 12, 2.0 * (std::f64::consts::PI / 8.0).cos(), 0.1)
        .unwrap();
    let window = std::f64::consts::PI / 8.0;
    let closed = scan(
        &params,
        window - 0.05,
        window + 0.05,
        40_001,
        ScanMethod::ClosedForm,
    )
    .unwrap();
    let direct = scan(
        &params,
        window - 0.05,
        window + 0.05,
        40_001,
        ScanMethod::Direct,
    )
    .unwrap();
    let peaks_closed = find_peaks(&closed, 0.1).unwrap().peaks;
    let peaks_direct = find_peaks(&direct, 0.1).unwrap().peaks;
    assert_eq!(peaks_closed.len(), peaks_direct.len());
    for (a, b) in peaks_closed.iter().zip(&peaks_direct) {
        assert!(
            (a.k_center - b.k_center).abs() < 1e-9,
            "centers diverge: {} vs {}",
            a.k_center,
            b.k_center
        );
        assert!((a.t_max - b.t_max).abs() < 1e-7);
    }
}

#[test]
fn pole_guard_refusal_matches_direct_solvability() {
    // Exactly at the atomic frequency the closed form refuses while the
    // direct solver produces the perfect-reflection solution.
    let params = SystemParams::with_atom(21, 0.05, 7, 0.9, 0.15).unwrap();
    let k_star = params.wavevector_at_energy(0.9).unwrap();
    match closed_form_amplitudes(&params, k_star) {
        Err(Error::PoleProximity { .. }) => {}
        other => panic!("expected pole refusal, got {other:?}"),
    }
    let sol = scatter_direct(&params, k_star).unwrap();
    assert!(sol.transmission < 1e-12);
    assert!((sol.reflection - 1.0).abs() < 1e-8);
}
