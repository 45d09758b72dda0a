use std::f64::consts::{PI, TAU};

use jjtls::algebra::{expectation, trace_distance, Density, Operator};
use jjtls::effective::*;
use jjtls::model::{build_hamiltonian, simple_model, LindbladTerm, SystemModel};
use jjtls::scalar::mhz;
use jjtls::solver::{evolve_segments, model_liouvillian_with, steady_state, Liouvillian, Method, Segment, StepOptions};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn fine() -> StepOptions {
    StepOptions { steps_per_period: 400.0, ..StepOptions::default() }
}

/// Frobenius norm of the entries that change the photon number.
fn photon_changing_norm(h: &Operator<f64>, fock: usize) -> f64 {
    let d = h.dim();
    let block = d / fock;
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i / block != j / block {
                acc += h.matrix()[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn sorted_eigs(m: DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn bad_cavity_rates_at_hand_values() {
    let m = simple_model::<f64>(0.0, mhz(5.1), 3, 0.0, &[(0.0, mhz(1.0))]).unwrap();
    let p = badcavity_params(&m).unwrap();
    // g^2 kappa / kappa^2 = g^2 / kappa = (2 pi)(1 / 5.1)
    assert!((p.gamma2[0] / TAU - 0.19608).abs() < 5e-6);
    assert!((p.gamma1[0] / TAU - 0.39216).abs() < 1e-5);
    assert_eq!(p.gamma1[0], 2.0 * p.gamma2[0]);
}

#[test]
fn dispersive_coupling_poles_and_zero() {
    let at = |dc_mhz: f64| {
        let m = simple_model::<f64>(mhz(dc_mhz), 0.0, 3, 0.0, &[(mhz(10.0), mhz(1.0)), (mhz(32.0), mhz(1.0))]).unwrap();
        dispersive_params(&m).map(|p| p.lambda[(0, 1)])
    };
    assert!(at(21.0).unwrap().abs() < 1e-15 * at(0.0).unwrap().abs());
    assert!(at(20.9).unwrap() * at(21.1).unwrap() < 0.0);
    assert!(at(10.0).is_err() && at(32.0).is_err());
    assert!(at(10.001).unwrap().abs() > 100.0 * at(0.0).unwrap().abs());
    assert!(at(31.999).unwrap().abs() > 100.0 * at(0.0).unwrap().abs());
}

#[test]
fn frame_change_removes_first_order_coupling() {
    let fock = 5;
    let delta = 2.0;
    let g = 0.05 * delta;
    let m = simple_model::<f64>(0.0, 0.0, fock, 0.0, &[(delta, g), (1.3 * delta, g)]).unwrap();
    let h = build_hamiltonian(&m).unwrap();
    let u = dispersive_unitary(&m).unwrap();
    assert!(u.unitarity_deviation() < 1e-10);
    let h_new = &(&u * &h) * &u.adjoint();
    let before = photon_changing_norm(&h, fock);
    let after = photon_changing_norm(&h_new, fock);
    assert!(after * 10.0 <= before, "{before} -> {after}");
}

#[test]
fn trivial_frame_change_is_identity() {
    let m = simple_model::<f64>(0.0, 0.0, 4, 0.0, &[(1.0, 0.0), (2.0, 0.0)]).unwrap();
    let u = dispersive_unitary(&m).unwrap();
    assert!((u.matrix() - Operator::<f64>::identity(&m.space()).matrix()).norm() < 1e-15);
    let driven = simple_model::<f64>(0.7, 0.0, 10, 0.2, &[(1.0, 0.1)]).unwrap();
    assert!(dispersive_unitary(&driven).unwrap().unitarity_deviation() < 1e-10);
}

#[test]
fn effective_spectrum_matches_full_one_excitation_block() {
    let (d1, d2, dc) = (10.0, 13.0, 0.0);
    let g = 0.3;
    let m = simple_model::<f64>(dc, 0.0, 3, 0.0, &[(d1, g), (d2, 0.8 * g)]).unwrap();
    let h = build_hamiltonian(&m).unwrap();
    // Full basis index = photon * 4 + tls, tls order |ee>, |eg>, |ge>, |gg>: |1,gg>, |0,eg>, |0,ge>.
    let idx = [4 + 3, 1, 2];
    let block = DMatrix::from_fn(3, 3, |i, j| h.matrix()[(idx[i], idx[j])]);
    let ground = h.matrix()[(3, 3)].re;
    let full: Vec<f64> = sorted_eigs(block).into_iter().map(|e| e - ground).collect();

    let p = dispersive_params(&m).unwrap();
    let he = build_effective_hamiltonian(&p).unwrap();
    let eblock = DMatrix::from_fn(2, 2, |i, j| he.matrix()[(i + 1, j + 1)]);
    let eground = he.matrix()[(3, 3)].re;
    let eff: Vec<f64> = sorted_eigs(eblock).into_iter().map(|e| e - eground).collect();

    // The photon-like eigenvalue sits near dc; the TLS-like ones are the top two.
    let bound = g.powi(3) / (d1 - dc).powi(2);
    for k in 0..2 {
        let diff = (full[k + 1] - eff[k]).abs();
        assert!(diff < bound, "level {k}: {} vs {} (bound {bound})", full[k + 1], eff[k]);
    }
    // Second-order physics is actually being tested.
    let bare = [d1.min(d2), d1.max(d2)];
    assert!((0..2).all(|k| (full[k + 1] - bare[k]).abs() > 10.0 * bound));
}

#[test]
fn bad_cavity_coupling_magnitude_properties() {
    let base = |dn: f64, dm: f64, dc: f64| {
        let m = simple_model::<f64>(dc, 1.0, 3, 0.0, &[(dn, 0.2), (dm, 0.3)]).unwrap();
        badcavity_params(&m).unwrap()
    };
    let ref_mag = base(0.0, 0.0, 0.4).lambda[(0, 1)].norm();
    for (dn, dm) in [(1.0, -2.0), (5.0, 5.0), (-0.3, 7.0)] {
        let p = base(dn, dm, 0.4);
        assert!((p.lambda[(0, 1)].norm() - ref_mag).abs() < 1e-15);
        assert_eq!(p.lambda[(0, 1)], p.lambda[(1, 0)].conj());
    }
    let peak = base(0.0, 0.0, 0.0).lambda[(0, 1)].norm();
    for dc in [-3.0, -0.1, 0.05, 2.0] {
        assert!(base(0.0, 0.0, dc).lambda[(0, 1)].norm() < peak);
    }
    // 1/|Delta_c| tail.
    let far = base(0.0, 0.0, 1e3).lambda[(0, 1)].norm() * 1e3;
    assert!((far - 0.06).abs() < 1e-6);
}

#[test]
fn bloch_equations_of_induced_damping() {
    let (g, kappa, dc, delta) = (0.3, 2.0, 0.5, 0.8);
    let m = simple_model::<f64>(dc, kappa, 3, 0.0, &[(delta, g)]).unwrap();
    let p = badcavity_params(&m).unwrap();
    let l = Liouvillian::new(build_effective_hamiltonian(&p).unwrap(), build_effective_lindblad(&p).unwrap()).unwrap();
    // Bloch vector (1, 0, 0.6) mixed state.
    let (x0, z0) = (0.5, 0.6);
    let rho0 = Density::new(
        Operator::from_matrix(DMatrix::from_row_slice(2, 2, &[
            C64::new((1.0 + z0) / 2.0, 0.0), C64::new(x0 / 2.0, 0.0),
            C64::new(x0 / 2.0, 0.0), C64::new((1.0 - z0) / 2.0, 0.0),
        ]))
        .unwrap(),
    )
    .unwrap();
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
    let seg = Segment { generator: l, duration: 5.0 };
    let traj = evolve_segments(&rho0, &[seg], &grid, Method::Rk4, &fine()).unwrap();
    let sm = jjtls::algebra::pauli::<f64>(jjtls::algebra::Pauli::Minus);
    let sz = jjtls::algebra::pauli::<f64>(jjtls::algebra::Pauli::Z);
    for (t, rho) in grid.iter().zip(&traj.states) {
        let z = expectation(rho, &sz).unwrap().re;
        let s = expectation(rho, &sm).unwrap();
        let z_expected = -1.0 + (z0 + 1.0) * (-p.gamma1[0] * t).exp();
        let s_expected = C64::new(x0 / 2.0, 0.0) * (C64::new(-p.gamma2[0], -p.delta_bar[0]) * *t).exp();
        assert!((z - z_expected).abs() < 1e-9, "t={t}: {z} vs {z_expected}");
        assert!((s - s_expected).norm() < 1e-9, "t={t}: {s} vs {s_expected}");
    }
}

#[test]
fn adiabatic_amplitude_tracks_full_steady_state() {
    let g = 0.2;
    let m = simple_model::<f64>(0.3, 5.0 * g, 8, 0.4, &[(0.5, g)]).unwrap();
    let l = model_liouvillian_with(&m, &[]).unwrap();
    let rho = steady_state(&l).unwrap();
    let ops = m.operators().unwrap();
    let a = expectation(&rho, &ops.a).unwrap();
    let s = expectation(&rho, &ops.sigma_minus[0]).unwrap();
    let p = badcavity_params(&m).unwrap();
    let predicted = adiabatic_cavity_amplitude(&p, &[s], m.drive.epsilon0).unwrap();
    assert!((a - predicted).norm() < 0.05 * a.norm(), "{a} vs {predicted}");
}

#[test]
fn residual_coupling_structure() {
    let undriven = simple_model::<f64>(0.0, 0.0, 5, 0.0, &[(2.0, 0.1)]).unwrap();
    let ops = undriven.operators().unwrap();
    let stark = (&ops.sigma_z[0] * &ops.n).scale_real(0.01 / 2.0);
    let hx = residual_coupling(&undriven).unwrap();
    assert!((hx.matrix() - stark.matrix()).norm() < 1e-15);

    let driven = simple_model::<f64>(0.7, 0.0, 5, 0.3, &[(2.0, 0.1)]).unwrap();
    let hx = residual_coupling(&driven).unwrap();
    // Cavity-vacuum block (photon 0) vanishes by normal ordering.
    for i in 0..2 {
        for j in 0..2 {
            assert!(hx.matrix()[(i, j)].norm() < 1e-15);
        }
    }

    let doubled = simple_model::<f64>(0.0, 0.0, 5, 0.0, &[(2.0, 0.2)]).unwrap();
    let n1 = residual_coupling(&undriven).unwrap().hermitian_spectral_norm();
    let n2 = residual_coupling(&doubled).unwrap().hermitian_spectral_norm();
    assert!((n2 / n1 - 4.0).abs() < 1e-12);
}

#[test]
fn validity_flags_before_blowup() {
    let g = 0.1;
    let m = simple_model::<f64>(0.0, 0.0, 3, 0.0, &[(0.5 * g, g), (1.0, g)]).unwrap();
    let p = dispersive_params(&m).unwrap();
    assert!(p.lambda[(0, 1)].is_finite());
    let r = validity_report(&m, Regime::Dispersive, &ValidityThresholds::default());
    assert!(!r.passed());
    assert!(r.flagged().any(|c| c.name.contains("tls1")));
}

#[test]
fn induced_decay_matches_full_purcell_rate() {
    // Excited TLS far from an empty damped cavity loses population at the induced rate.
    let (delta, g, kappa) = (10.0, 0.25, 0.5);
    let m = simple_model::<f64>(0.0, kappa, 3, 0.0, &[(delta, g)]).unwrap();
    let p = dispersive_params(&m).unwrap();
    let l = model_liouvillian_with(&m, &[]).unwrap();
    let rho0 = Density::basis(&m.space(), 0).unwrap();
    let grid = [50.0, 200.0];
    let traj = evolve_segments(&rho0, &[Segment { generator: l, duration: 200.0 }], &grid, Method::Rk4, &StepOptions::default()).unwrap();
    let ops = m.operators().unwrap();
    let pe: Vec<f64> = traj
        .states
        .iter()
        .map(|s| (expectation(s, &ops.sigma_z[0]).unwrap().re + 1.0) / 2.0)
        .collect();
    let fitted = (pe[0] / pe[1]).ln() / (grid[1] - grid[0]);
    // Photon loss at Lindblad rate 2 kappa doubles the population decay
    // relative to the amplitude-damping rate (g/Delta)^2 kappa.
    let ratio = fitted / p.induced_decay[0];
    assert!((ratio - 2.0).abs() < 0.05, "fitted {fitted}, induced {}", p.induced_decay[0]);
}

#[test]
fn effective_faithfulness_dispersive_swap() {
    let g = mhz(0.5);
    let dc = mhz(-20.0);
    let m = simple_model::<f64>(dc, 0.0, 4, 0.0, &[(0.0, g), (0.0, g)]).unwrap();
    let p = dispersive_params(&m).unwrap();
    let t_star = PI / (2.0 * p.lambda[(0, 1)].abs());
    let grid: Vec<f64> = (0..=8).map(|k| t_star * k as f64 / 8.0).collect();
    let full_l = model_liouvillian_with(&m, &[]).unwrap();
    // |0> (x) |e g>
    let rho_full = Density::basis(&m.space(), 1).unwrap();
    let full = evolve_segments(&rho_full, &[Segment { generator: full_l, duration: t_star }], &grid, Method::Rk4, &StepOptions::default()).unwrap();
    let eff_l = Liouvillian::new(build_effective_hamiltonian(&p).unwrap(), vec![]).unwrap();
    let rho_eff = Density::basis(&[2, 2], 1).unwrap();
    let eff = evolve_segments(&rho_eff, &[Segment { generator: eff_l, duration: t_star }], &grid, Method::Rk4, &StepOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for (f, e) in full.states.iter().zip(&eff.states) {
        let red = jjtls::algebra::partial_trace(f, &[1, 2]).unwrap();
        worst = worst.max(trace_distance(&red, e).unwrap());
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn lindblad_terms_use_regime_rates() {
    let m: SystemModel<f64> = simple_model::<f64>(0.4, 1.5, 3, 0.0, &[(2.0, 0.1), (3.0, 0.2)]).unwrap();
    let b = badcavity_params(&m).unwrap();
    let terms: Vec<LindbladTerm<f64>> = build_effective_lindblad(&b).unwrap();
    assert_eq!(terms.len(), 2);
    assert_eq!(terms[1].rate, b.gamma1[1]);
    let d = dispersive_params(&m).unwrap();
    assert_eq!(build_effective_lindblad(&d).unwrap()[0].rate, d.induced_decay[0]);
}

#[test]
fn single_precision_parameters() {
    let m = simple_model::<f32>(0.0, 5.1, 3, 0.0, &[(0.0, 1.0)]).unwrap();
    let p = badcavity_params(&m).unwrap();
    assert!((p.gamma2[0] - 1.0 / 5.1).abs() < 1e-6);
}
