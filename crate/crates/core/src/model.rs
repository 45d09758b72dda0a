//! Driven Jaynes-Cummings model of TLS's coupled to a damped resonator,
//! written in the frame rotating at the drive frequency.
//!
//! All frequencies are angular (rad/us) and times are in microseconds.

use std::collections::HashSet;

use crate::algebra::{annihilation, embed, number, pauli, Operator, Pauli};
use crate::error::{Error, Result};
use crate::scalar::{re, to_f64, Real};

/// Largest TLS roster accepted by [`SystemModel`].
pub const MAX_TLS: usize = 8;
/// Default ceiling on the full Hilbert-space dimension `fock_dim * 2^N`.
pub const DEFAULT_DIM_BUDGET: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct TlsSpec<T: Real> {
    pub label: String,
    /// `omega_n - omega_d`.
    pub delta: T,
    pub g: T,
}

impl<T: Real> TlsSpec<T> {
    pub fn new(label: impl Into<String>, delta: T, g: T) -> Self {
        Self { label: label.into(), delta, g }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonatorSpec<T: Real> {
    /// `omega_c - omega_d`.
    pub delta_c: T,
    /// Field-amplitude decay rate.
    pub kappa: T,
    pub fock_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSpec<T: Real> {
    /// In-frame drive amplitude: `epsilon(t) = 2 epsilon0 cos(omega_d t)`.
    pub epsilon0: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel<T: Real> {
    pub resonator: ResonatorSpec<T>,
    pub drive: DriveSpec<T>,
    pub tls: Vec<TlsSpec<T>>,
    pub dim_budget: usize,
}

/// A dissipator `rate * (c rho c^dag - {c^dag c, rho}/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladTerm<T: Real> {
    pub collapse: Operator<T>,
    pub rate: T,
}

impl<T: Real> LindbladTerm<T> {
    pub fn new(collapse: Operator<T>, rate: T) -> Result<Self> {
        if !(rate >= T::zero()) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("Lindblad rate {rate} must be >= 0")));
        }
        Ok(Self { collapse, rate })
    }
}

impl<T: Real> SystemModel<T> {
    pub fn new(resonator: ResonatorSpec<T>, drive: DriveSpec<T>, tls: Vec<TlsSpec<T>>) -> Result<Self> {
        let model = Self { resonator, drive, tls, dim_budget: DEFAULT_DIM_BUDGET };
        model.validate()?;
        Ok(model)
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        self.dim_budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.resonator;
        if r.fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim {} < 2", r.fock_dim)));
        }
        if !(r.kappa >= T::zero()) || !r.kappa.is_finite() || !r.delta_c.is_finite() {
            return Err(Error::InvalidModel(format!(
                "resonator needs finite delta_c and kappa >= 0 (kappa = {})",
                r.kappa
            )));
        }
        if !self.drive.epsilon0.is_finite() || self.drive.epsilon0 < T::zero() {
            return Err(Error::InvalidModel(format!("drive amplitude {} must be >= 0", self.drive.epsilon0)));
        }
        if self.tls.is_empty() || self.tls.len() > MAX_TLS {
            return Err(Error::InvalidModel(format!(
                "TLS count {} outside 1..={MAX_TLS}",
                self.tls.len()
            )));
        }
        let mut labels = HashSet::new();
        for t in &self.tls {
            if !t.g.is_finite() || !t.delta.is_finite() {
                return Err(Error::InvalidModel(format!("TLS '{}' has non-finite parameters", t.label)));
            }
            if !labels.insert(t.label.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate TLS label '{}'", t.label)));
            }
        }
        let dim = self.dim();
        if dim > self.dim_budget {
            return Err(Error::DimensionBudget { dim, budget: self.dim_budget });
        }
        Ok(())
    }

    pub fn n_tls(&self) -> usize {
        self.tls.len()
    }

    /// `[fock_dim, 2, 2, ...]`.
    pub fn space(&self) -> Vec<usize> {
        let mut s = vec![self.resonator.fock_dim];
        s.extend(std::iter::repeat_n(2, self.tls.len()));
        s
    }

    /// Space of the TLS's alone, `[2; N]`.
    pub fn tls_space(&self) -> Vec<usize> {
        vec![2; self.tls.len()]
    }

    pub fn dim(&self) -> usize {
        self.resonator.fock_dim << self.tls.len()
    }

    /// Slots occupied by the TLS's in [`SystemModel::space`].
    pub fn tls_slots(&self) -> Vec<usize> {
        (1..=self.tls.len()).collect()
    }

    pub fn operators(&self) -> Result<ModelOperators<T>> {
        ModelOperators::new(self)
    }

    /// Largest rate in the model: `max(|Delta_c|, |Delta_n|, |g_n|, kappa, epsilon0)`.
    pub fn max_rate(&self) -> T {
        let r = &self.resonator;
        self.tls.iter().fold(
            r.delta_c.abs().max(r.kappa).max(self.drive.epsilon0),
            |acc, t| acc.max(t.delta.abs()).max(t.g.abs()),
        )
    }

    /// Copy with the drive switched off.
    pub fn undriven(&self) -> Self {
        let mut m = self.clone();
        m.drive.epsilon0 = T::zero();
        m
    }

    /// Copy with a different resonator detuning.
    pub fn with_delta_c(&self, delta_c: T) -> Self {
        let mut m = self.clone();
        m.resonator.delta_c = delta_c;
        m
    }
}

/// Embedded operators of a model, built once.
#[derive(Clone, Debug)]
pub struct ModelOperators<T: Real> {
    pub a: Operator<T>,
    pub n: Operator<T>,
    pub sigma_minus: Vec<Operator<T>>,
    pub sigma_plus: Vec<Operator<T>>,
    pub sigma_x: Vec<Operator<T>>,
    pub sigma_y: Vec<Operator<T>>,
    pub sigma_z: Vec<Operator<T>>,
}

impl<T: Real> ModelOperators<T> {
    fn new(model: &SystemModel<T>) -> Result<Self> {
        let space = model.space();
        let fock = model.resonator.fock_dim;
        let a = embed(&annihilation(fock)?, 0, &space)?;
        let n = embed(&number(fock)?, 0, &space)?;
        let mut out = Self {
            a,
            n,
            sigma_minus: Vec::new(),
            sigma_plus: Vec::new(),
            sigma_x: Vec::new(),
            sigma_y: Vec::new(),
            sigma_z: Vec::new(),
        };
        for slot in model.tls_slots() {
            out.sigma_minus.push(embed(&pauli(Pauli::Minus), slot, &space)?);
            out.sigma_plus.push(embed(&pauli(Pauli::Plus), slot, &space)?);
            out.sigma_x.push(embed(&pauli(Pauli::X), slot, &space)?);
            out.sigma_y.push(embed(&pauli(Pauli::Y), slot, &space)?);
            out.sigma_z.push(embed(&pauli(Pauli::Z), slot, &space)?);
        }
        Ok(out)
    }

    /// `a^dag a + sum_n (sigma_nz + 1)/2`.
    pub fn excitation_number(&self) -> Operator<T> {
        let half = re::<T>(0.5);
        let id = Operator::identity(self.a.space());
        self.sigma_z.iter().fold(self.n.clone(), |acc, z| {
            &acc + &(z + &id).scale_real(half)
        })
    }
}

/// Rotating-frame Hamiltonian
/// `Delta_c a^dag a + sum_n [Delta_n/2 sigma_nz + g_n (a sigma_n+ + a^dag sigma_n-)] + epsilon0 (a + a^dag)`.
pub fn build_hamiltonian<T: Real>(model: &SystemModel<T>) -> Result<Operator<T>> {
    model.validate()?;
    let ops = model.operators()?;
    hamiltonian_from(model, &ops)
}

pub(crate) fn hamiltonian_from<T: Real>(model: &SystemModel<T>, ops: &ModelOperators<T>) -> Result<Operator<T>> {
    let half = re::<T>(0.5);
    let a_dag = ops.a.adjoint();
    let mut h = ops.n.scale_real(model.resonator.delta_c);
    for (k, t) in model.tls.iter().enumerate() {
        h = &h + &ops.sigma_z[k].scale_real(t.delta * half);
        let hop = &ops.a * &ops.sigma_plus[k];
        let hop = &hop + &(&a_dag * &ops.sigma_minus[k]);
        h = &h + &hop.scale_real(t.g);
    }
    if model.drive.epsilon0 != T::zero() {
        h = &h + &(&ops.a + &a_dag).scale_real(model.drive.epsilon0);
    }
    // Exact Hermiticity regardless of rounding in the products above.
    Ok(h.hermitian_part())
}

/// Photon loss: collapse `a` at Lindblad rate `2 kappa`, so the field
/// amplitude decays at `kappa`.
pub fn build_collapse_operators<T: Real>(model: &SystemModel<T>) -> Result<Vec<LindbladTerm<T>>> {
    model.validate()?;
    let a = embed(&annihilation(model.resonator.fock_dim)?, 0, &model.space())?;
    Ok(vec![LindbladTerm::new(a, re::<T>(2.0) * model.resonator.kappa)?])
}

/// Outcome of the Fock-truncation heuristic.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    /// Estimated steady photon number of the empty driven cavity.
    pub mean_photons: f64,
    pub required_fock_dim: usize,
    pub fock_dim: usize,
    pub passed: bool,
    pub warnings: Vec<String>,
}

/// Checks `fock_dim >= n + 5 sqrt(n) + 5` with `n = |epsilon0 / (kappa + i Delta_c)|^2`.
/// An undriven model always passes.
pub fn validate_truncation<T: Real>(model: &SystemModel<T>) -> TruncationReport {
    let eps = to_f64(model.drive.epsilon0);
    let kappa = to_f64(model.resonator.kappa);
    let dc = to_f64(model.resonator.delta_c);
    let fock_dim = model.resonator.fock_dim;
    if eps == 0.0 {
        return TruncationReport {
            mean_photons: 0.0,
            required_fock_dim: 2,
            fock_dim,
            passed: fock_dim >= 2,
            warnings: Vec::new(),
        };
    }
    let denom = kappa * kappa + dc * dc;
    if denom == 0.0 {
        return TruncationReport {
            mean_photons: f64::INFINITY,
            required_fock_dim: usize::MAX,
            fock_dim,
            passed: false,
            warnings: vec!["resonant undamped drive: cavity amplitude grows without bound".into()],
        };
    }
    let nbar = eps * eps / denom;
    let required = (nbar + 5.0 * nbar.sqrt() + 5.0).ceil() as usize;
    TruncationReport {
        mean_photons: nbar,
        required_fock_dim: required,
        fock_dim,
        passed: fock_dim >= required,
        warnings: Vec::new(),
    }
}

/// Piecewise-constant parameter schedule; parameters switch instantly at
/// segment boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T: Real> {
    segments: Vec<(SystemModel<T>, T)>,
}

impl<T: Real> Schedule<T> {
    pub fn new(segments: Vec<(SystemModel<T>, T)>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidArgument("schedule has no segments".into()))?;
        let (fock, n) = (first.0.resonator.fock_dim, first.0.n_tls());
        for (m, d) in &segments {
            m.validate()?;
            if !(*d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidArgument(format!("segment duration {d} must be > 0")));
            }
            if m.resonator.fock_dim != fock || m.n_tls() != n {
                return Err(Error::InvalidArgument("schedule segments must share fock_dim and TLS count".into()));
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(model: SystemModel<T>, duration: T) -> Result<Self> {
        Self::new(vec![(model, duration)])
    }

    pub fn segments(&self) -> &[(SystemModel<T>, T)] {
        &self.segments
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, (_, d)| acc + *d)
    }

    pub fn space(&self) -> Vec<usize> {
        self.segments[0].0.space()
    }
}

/// Convenience: a one-TLS or multi-TLS model with a shared coupling.
pub fn simple_model<T: Real>(delta_c: T, kappa: T, fock_dim: usize, epsilon0: T, tls: &[(T, T)]) -> Result<SystemModel<T>> {
    SystemModel::new(
        ResonatorSpec { delta_c, kappa, fock_dim },
        DriveSpec { epsilon0 },
        tls.iter()
            .enumerate()
            .map(|(k, (d, g))| TlsSpec::new(format!("tls{}", k + 1), *d, *g))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;
    use approx::assert_abs_diff_eq;

    fn one_tls(delta_c: f64, delta: f64, g: f64, eps: f64) -> SystemModel<f64> {
        simple_model(delta_c, 0.0, 4, eps, &[(delta, g)]).unwrap()
    }

    #[test]
    fn undriven_uncoupled_hamiltonian_is_diagonal() {
        let m = one_tls(2.0, 3.0, 0.0, 0.0);
        let h = build_hamiltonian(&m).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(h.matrix()[(i, j)], C::new(0.0, 0.0));
                }
            }
        }
        // |n, e> index 2n, energy 2n + 1.5; |n, g> index 2n+1, energy 2n - 1.5
        assert_abs_diff_eq!(h.matrix()[(2, 2)].re, 2.0 + 1.5);
        assert_abs_diff_eq!(h.matrix()[(3, 3)].re, 2.0 - 1.5);
    }

    #[test]
    fn jaynes_cummings_matrix_element() {
        let m = one_tls(0.4, -1.0, 0.77, 0.3);
        let h = build_hamiltonian(&m).unwrap();
        // <0,e| = index 0, |1,g> = index 3
        assert_abs_diff_eq!(h.matrix()[(0, 3)].re, 0.77, epsilon = 1e-15);
        assert_eq!(h.hermitian_deviation(), 0.0);
    }

    #[test]
    fn excitation_number_conserved_without_drive() {
        let m = simple_model(0.3, 0.1, 5, 0.0, &[(1.0, 0.2), (-0.5, 0.35)]).unwrap();
        let ops = m.operators().unwrap();
        let h = build_hamiltonian(&m).unwrap();
        let comm = h.commutator(&ops.excitation_number()).unwrap();
        assert!(comm.max_abs() < 1e-12);
        let driven = simple_model(0.3, 0.1, 5, 0.2, &[(1.0, 0.2)]).unwrap();
        let ops = driven.operators().unwrap();
        let h = build_hamiltonian(&driven).unwrap();
        assert!(h.commutator(&ops.excitation_number()).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn hamiltonian_is_linear_in_parameters() {
        let base = simple_model(0.3, 0.0, 4, 0.2, &[(1.0, 0.2), (-0.5, 0.35)]).unwrap();
        let h0 = build_hamiltonian(&base).unwrap();
        let bump = |f: &dyn Fn(&mut SystemModel<f64>, f64)| {
            let mut p = base.clone();
            let mut q = base.clone();
            f(&mut p, 1.0);
            f(&mut q, 2.0);
            let hp = build_hamiltonian(&p).unwrap();
            let hq = build_hamiltonian(&q).unwrap();
            // Second difference vanishes for an affine dependence.
            let second = &(&hq - &hp) - &(&hp - &h0);
            assert!(second.max_abs() < 1e-12);
        };
        bump(&|m, s| m.resonator.delta_c += 0.7 * s);
        bump(&|m, s| m.tls[0].delta += 0.7 * s);
        bump(&|m, s| m.tls[1].g += 0.7 * s);
        bump(&|m, s| m.drive.epsilon0 += 0.7 * s);
    }

    #[test]
    fn collapse_operator_rate_convention() {
        let m = simple_model(0.0, 1.3, 3, 0.0, &[(0.0, 0.1)]).unwrap();
        let terms = build_collapse_operators(&m).unwrap();
        assert_eq!(terms.len(), 1);
        assert_abs_diff_eq!(terms[0].rate, 2.6);
        let m0 = simple_model(0.0, 0.0, 3, 0.0, &[(0.0, 0.1)]).unwrap();
        assert_eq!(build_collapse_operators(&m0).unwrap()[0].rate, 0.0);
    }

    #[test]
    fn truncation_heuristic() {
        let undriven = simple_model(0.0, 1.0, 2, 0.0, &[(0.0, 0.1)]).unwrap();
        assert!(validate_truncation(&undriven).passed);
        let m = simple_model(0.0, 1.0, 10, 1.0, &[(0.0, 0.1)]).unwrap();
        let r = validate_truncation(&m);
        assert_abs_diff_eq!(r.mean_photons, 1.0);
        assert_eq!(r.required_fock_dim, 11);
        assert!(!r.passed);
        let blow = simple_model(0.0, 0.0, 10, 1.0, &[(0.0, 0.1)]).unwrap();
        let r = validate_truncation(&blow);
        assert!(!r.passed && !r.warnings.is_empty());
    }

    #[test]
    fn model_validation() {
        assert!(simple_model(0.0, -1.0, 4, 0.0, &[(0.0, 0.1)]).is_err());
        assert!(simple_model::<f64>(0.0, 1.0, 4, 0.0, &[]).is_err());
        assert!(simple_model(0.0, 1.0, 1, 0.0, &[(0.0, 0.1)]).is_err());
        let big = simple_model(0.0, 1.0, 40, 0.0, &[(0.0, 0.1); 5]);
        assert!(matches!(big, Err(Error::DimensionBudget { .. })));
        let dup = SystemModel::new(
            ResonatorSpec { delta_c: 0.0, kappa: 0.0, fock_dim: 3 },
            DriveSpec { epsilon0: 0.0 },
            vec![TlsSpec::new("a", 0.0, 0.1), TlsSpec::new("a", 1.0, 0.1)],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn schedule_invariants() {
        let m = simple_model(0.0, 1.0, 4, 0.0, &[(0.0, 0.1)]).unwrap();
        let other = simple_model(0.0, 1.0, 5, 0.0, &[(0.0, 0.1)]).unwrap();
        assert!(Schedule::new(vec![(m.clone(), 1.0), (other, 1.0)]).is_err());
        assert!(Schedule::new(vec![(m.clone(), 0.0)]).is_err());
        let s = Schedule::new(vec![(m.clone(), 1.0), (m, 0.5)]).unwrap();
        assert_abs_diff_eq!(s.total_duration(), 1.5);
    }
}
