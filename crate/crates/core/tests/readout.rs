use std::f64::consts::PI;

use jjtls::algebra::{expectation, pauli, Density, Operator, Pauli};
use jjtls::effective::{badcavity_params, build_effective_hamiltonian, build_effective_lindblad, adiabatic_cavity_amplitude, EffectiveModel};
use jjtls::model::{simple_model, LindbladTerm};
use jjtls::readout::*;
use jjtls::scalar::C;
use jjtls::solver::{build_liouvillian, model_liouvillian, model_liouvillian_with, steady_state, uniform_grid};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C<f64> {
    C::new(re, im)
}

#[test]
fn quadrature_matches_full_steady_state() {
    for kappa in [5.0, 10.0] {
        let m = simple_model::<f64>(0.8, kappa, 10, 1.5, &[(0.4, 1.0)]).unwrap();
        let rho = steady_state(&model_liouvillian(&m).unwrap()).unwrap();
        let ops = m.operators().unwrap();
        let quad = expectation(&rho, &(&ops.a + &ops.a.adjoint())).unwrap().re;
        let sx = expectation(&rho, &ops.sigma_x[0]).unwrap().re;
        let sy = expectation(&rho, &ops.sigma_y[0]).unwrap().re;
        let predicted = quadrature_signal(&m, &[(sx, sy)]).unwrap();
        assert!(sx.abs() + sy.abs() > 1e-3, "spins must be nontrivial");
        assert!(((quad - predicted) / quad).abs() < 0.05, "kappa {kappa}: {quad} vs {predicted}");
    }
}

#[test]
fn weight_rows_share_one_direction() {
    // Every TLS couples through the same cavity response, so the rows are
    // parallel and scaled by g_n.
    let m = simple_model::<f64>(0.9, 1.7, 2, 0.0, &[(0.0, 0.2), (0.3, 0.5)]).unwrap();
    let q = QuadratureSignal::new(&m).unwrap();
    let (a, b) = (q.tls_weights[0], q.tls_weights[1]);
    assert!((a.0 * b.1 - a.1 * b.0).abs() < 1e-15);
    assert!((b.0 / a.0 - 2.5).abs() < 1e-12);
    assert!(!q.rows_independent(1e-9));
}

#[test]
fn rotated_quadrature_reads_sigma_x() {
    for (g, kappa, dc) in [(0.3, 2.0, 0.0), (0.3, 2.0, 1.1), (-0.2, 0.5, -3.0), (0.7, 1.0, 4.0)] {
        let m = simple_model::<f64>(dc, kappa, 2, 0.0, &[(0.0, g)]).unwrap();
        let p = badcavity_params(&m).unwrap();
        let phi = measurement_phase(g, kappa, dc).unwrap();
        let gain_expected = g.abs() / (kappa * kappa + dc * dc).sqrt();
        for s in [c(0.3, 0.1), c(-0.2, 0.4), c(0.05, -0.45)] {
            let field = adiabatic_cavity_amplitude(&p, &[s], 0.0).unwrap();
            let q = rotated_quadrature(field, phi);
            let sx = 2.0 * s.re;
            assert!((q / sx - gain_expected).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn phase_reflection_sums_to_minus_pi(g in 0.01f64..5.0, kappa in 0.01f64..5.0, dc in -5.0f64..5.0) {
        let s = measurement_phase(g, kappa, dc).unwrap() + measurement_phase(g, kappa, -dc).unwrap();
        prop_assert!((s + PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_is_linear(
        eps in 0.0f64..2.0, sx in -1.0f64..1.0, sy in -1.0f64..1.0, k in 0.0f64..3.0,
    ) {
        let m = simple_model::<f64>(0.6, 1.2, 2, eps, &[(0.0, 0.4)]).unwrap();
        let m0 = simple_model::<f64>(0.6, 1.2, 2, 0.0, &[(0.0, 0.4)]).unwrap();
        let m2 = simple_model::<f64>(0.6, 1.2, 2, k * eps, &[(0.0, 0.4)]).unwrap();
        let full = quadrature_signal(&m, &[(sx, sy)]).unwrap();
        let spins_only = quadrature_signal(&m0, &[(sx, sy)]).unwrap();
        let drive_only = quadrature_signal(&m, &[(0.0, 0.0)]).unwrap();
        prop_assert!((full - spins_only - drive_only).abs() < 1e-12);
        let scaled_drive = quadrature_signal(&m2, &[(0.0, 0.0)]).unwrap();
        prop_assert!((scaled_drive - k * drive_only).abs() < 1e-12);
        let scaled_spins = quadrature_signal(&m0, &[(k * sx, k * sy)]).unwrap();
        prop_assert!((scaled_spins - k * spins_only).abs() < 1e-12);
    }
}

#[test]
fn uncoupled_tls_leaves_empty_cavity_identity() {
    let (kappa, dc, eps) = (2.0, 0.7, 0.6);
    let m = simple_model::<f64>(dc, kappa, 6, eps, &[(0.3, 0.0)]).unwrap();
    // Settled field times a ground TLS; the pinning decay only selects the TLS state.
    let pin = LindbladTerm::new(m.operators().unwrap().sigma_minus[0].clone(), 1.0).unwrap();
    let rho0 = steady_state(&model_liouvillian_with(&m, &[pin]).unwrap()).unwrap();
    let grid = uniform_grid(6.0, 121);
    let chk = photon_correlation_check(&m, &rho0, &grid).unwrap();
    let target = eps * eps / (kappa * kappa + dc * dc);
    assert!(chk.predicted.iter().all(|p| (p - target).abs() < 1e-15));
    assert!(chk.relative_residual() < 1e-6, "{}", chk.relative_residual());
}

#[test]
fn photon_number_tracks_decaying_population() {
    let g = 1.0;
    let m = simple_model::<f64>(0.0, 10.0 * g, 6, 0.0, &[(0.0, g)]).unwrap();
    // Excited TLS, empty cavity: index 0 in the [e, g] basis.
    let rho0 = Density::basis(&m.space(), 0).unwrap();
    let grid = uniform_grid(8.0, 161);
    let chk = photon_correlation_check(&m, &rho0, &grid).unwrap();
    assert!(chk.warnings.is_empty());
    assert!(chk.relative_residual() < 0.05, "{}", chk.relative_residual());
    for (ci, ph) in chk.record.c.iter().zip(&chk.record.photon) {
        assert!(ci.im.abs() < 1e-9 && ci.re > -1e-9 && *ph > -1e-9);
    }
}

#[test]
fn correlation_residual_shrinks_with_kappa() {
    let g = 1.0;
    let run = |kappa: f64| {
        let m = simple_model::<f64>(0.0, kappa, 6, 0.0, &[(0.0, g)]).unwrap();
        let rho0 = Density::basis(&m.space(), 0).unwrap();
        let t_end = 5.0 / kappa + 2.0 * kappa / (g * g);
        photon_correlation_check(&m, &rho0, &uniform_grid(t_end, 201)).unwrap()
    };
    let low = run(3.0 * g);
    let high = run(10.0 * g);
    assert!(low.warnings.is_empty());
    assert!(high.relative_residual() < low.relative_residual());
    let flagged = run(2.0 * g);
    assert_eq!(flagged.warnings.len(), 1);
}

#[test]
fn correlation_check_needs_one_tls() {
    let m = simple_model::<f64>(0.0, 3.0, 2, 0.0, &[(0.0, 0.2), (0.0, 0.2)]).unwrap();
    let rho0 = Density::basis(&m.space(), 0).unwrap();
    assert!(photon_correlation_check(&m, &rho0, &[0.0, 1.0]).is_err());
}

#[test]
fn dephasing_rate_and_detuning_recovered() {
    let (delta, gamma) = (3.0, 0.4);
    let h = pauli::<f64>(Pauli::Z).scale_real(delta / 2.0);
    // D[sigma_z] at rate r damps coherences at 2r.
    let l = build_liouvillian(&h, &[LindbladTerm::new(pauli(Pauli::Z), gamma / 2.0).unwrap()]).unwrap();
    let rho = Density::new(Operator::from_matrix(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3, 0.0), c(0.7, 0.0)]))).unwrap()).unwrap();
    let taus = uniform_grid(12.0, 1201);
    let f = regression_extract(&l, &rho, &pauli(Pauli::Minus), &pauli(Pauli::Plus), &taus).unwrap();
    assert!(((f.rate - gamma) / gamma).abs() < 0.02, "{f:?}");
    assert!(((f.frequency - delta) / delta).abs() < 0.02, "{f:?}");
    assert!(f.warning.is_none());
    let r = regression_extract(&l, &rho, &pauli(Pauli::Plus), &pauli(Pauli::Minus), &taus).unwrap();
    assert!(((r.frequency + delta) / delta).abs() < 0.02);
}

#[test]
fn damped_coherence_decays_at_half_the_population_rate() {
    let m = simple_model::<f64>(0.8, 2.0, 2, 0.0, &[(1.5, 0.5)]).unwrap();
    let p = badcavity_params(&m).unwrap();
    let l = build_liouvillian(&build_effective_hamiltonian(&p).unwrap(), &build_effective_lindblad(&p).unwrap()).unwrap();
    let rho = steady_state(&l).unwrap();
    let taus = uniform_grid(8.0 / p.gamma2[0], 2001);
    let f = regression_extract(&l, &rho, &pauli(Pauli::Minus), &pauli(Pauli::Plus), &taus).unwrap();
    assert!(((f.rate - p.gamma1[0] / 2.0) / p.gamma2[0]).abs() < 0.02, "{f:?}");
    assert!(((f.frequency - p.delta_bar()[0]) / p.delta_bar()[0]).abs() < 0.02, "{f:?}");
}

#[test]
fn dispersive_pull_splits_transmission_peak() {
    let (g, detuning, kappa, eps) = (1.0, 10.0, 0.02, 0.004);
    let chi = g * g / detuning;
    let spectrum = |excited: bool, dc: f64| {
        // The TLS tracks the drive frame: Delta_n - Delta_c stays fixed.
        let m = simple_model::<f64>(dc, kappa, 4, eps, &[(dc + detuning, g)]).unwrap();
        let ops = m.operators().unwrap();
        let hold = if excited { &ops.sigma_plus[0] } else { &ops.sigma_minus[0] };
        let l = model_liouvillian_with(&m, &[LindbladTerm::new(hold.clone(), 0.05).unwrap()]).unwrap();
        steady_photon_number(&l, &ops.n).unwrap()
    };
    let grid: Vec<f64> = (0..=600).map(|k| -0.3 + k as f64 * 0.001).collect();
    let total: Vec<f64> = grid.iter().map(|&dc| spectrum(true, dc) + spectrum(false, dc)).collect();
    let peak = |range: std::ops::Range<usize>| {
        range.max_by(|&a, &b| total[a].partial_cmp(&total[b]).unwrap()).map(|k| grid[k]).unwrap()
    };
    let mid = grid.len() / 2;
    let (left, right) = (peak(0..mid), peak(mid..grid.len()));
    let sep = right - left;
    assert!(((sep - 2.0 * chi) / (2.0 * chi)).abs() < 0.15, "separation {sep} vs {}", 2.0 * chi);

    let m = simple_model::<f64>(0.0, kappa, 4, 0.0, &[(detuning, g)]).unwrap();
    let pull = dispersive_readout_shift(&m, 0).unwrap();
    assert!((pull.shift() - chi).abs() < 1e-15);
    // Excited TLS raises the resonator, so its peak sits at negative Delta_c.
    assert!((left + pull.shift()).abs() < 0.15 * chi && (right - pull.shift()).abs() < 0.15 * chi);
}
