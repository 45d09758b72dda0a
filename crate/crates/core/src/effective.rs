//! Effective TLS-only models obtained by eliminating the resonator.
//!
//! Two regimes are covered: the dispersive (high-Q) limit, where the cavity
//! is only virtually excited and mediates a real XY exchange, and the
//! strongly damped (bad-cavity) limit, where the field adiabatically follows
//! the TLS's and induces complex exchange plus decay. Both produce
//! Hamiltonians and Lindblad terms on the `2^N` TLS space, with TLS `n` in
//! slot `n`.

use nalgebra::DMatrix;

use crate::algebra::{embed, matrix_exp, pauli, Operator, Pauli};
use crate::error::{Error, Result};
use crate::model::{LindbladTerm, SystemModel};
use crate::scalar::{cr, imag_unit, modulus, re, to_f64, CMatrix, Real, C};

/// Which effective description a result belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Dispersive,
    BadCavity,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Dispersive => "dispersive",
            Regime::BadCavity => "bad_cavity",
        }
    }
}

/// Common view of both parameter bundles, used by Hamiltonian builders and
/// the gate module.
pub trait EffectiveModel<T: Real> {
    fn regime(&self) -> Regime;
    fn labels(&self) -> &[String];
    fn n_tls(&self) -> usize {
        self.labels().len()
    }
    /// Effective detunings, one per TLS.
    fn delta_bar(&self) -> &[T];
    /// Coefficient of `sigma_n+` in the single-qubit drive term.
    fn drive_amplitude(&self, n: usize) -> C<T>;
    /// Coefficient of `sigma_n+ sigma_m-`.
    fn coupling(&self, n: usize, m: usize) -> C<T>;
    /// Amplitude-damping rate of TLS `n`.
    fn damping_rate(&self, n: usize) -> T;
    /// Rate entering the operations-per-coherence-time budget.
    fn decoherence_rate(&self, n: usize) -> T;
}

/// Dispersive-limit parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveDispersive<T: Real> {
    pub labels: Vec<String>,
    /// `Delta_n + (g_n^2 / Delta_nc)(1 - 2 epsilon0 / Delta_c)`.
    pub delta_bar: Vec<T>,
    /// `2 epsilon0 g_n / Delta_nc`.
    pub omega_nx: Vec<T>,
    /// `(g_n / Delta_nc)^2 kappa`.
    pub induced_decay: Vec<T>,
    /// `Delta_n - Delta_c`.
    pub delta_nc: Vec<T>,
    /// Symmetric exchange matrix, zero diagonal.
    pub lambda: DMatrix<T>,
}

/// Strongly damped (bad-cavity) parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveBadCavity<T: Real> {
    pub labels: Vec<String>,
    /// `Delta_n - Delta_c g_n^2 / (kappa^2 + Delta_c^2)`.
    pub delta_bar: Vec<T>,
    /// `-i g_n epsilon0 / (kappa + i Delta_c)`.
    pub omega: Vec<C<T>>,
    /// Induced dephasing `g_n^2 kappa / (kappa^2 + Delta_c^2)`.
    pub gamma2: Vec<T>,
    /// Induced decay, exactly `2 gamma2`.
    pub gamma1: Vec<T>,
    /// `-i g_n g_m / (kappa + i Delta_c)` above the diagonal, conjugate below.
    pub lambda: CMatrix<T>,
    pub g: Vec<T>,
    pub kappa: T,
    pub delta_c: T,
}

impl<T: Real> EffectiveModel<T> for EffectiveDispersive<T> {
    fn regime(&self) -> Regime {
        Regime::Dispersive
    }
    fn labels(&self) -> &[String] {
        &self.labels
    }
    fn delta_bar(&self) -> &[T] {
        &self.delta_bar
    }
    fn drive_amplitude(&self, n: usize) -> C<T> {
        cr(self.omega_nx[n] * re::<T>(0.5))
    }
    fn coupling(&self, n: usize, m: usize) -> C<T> {
        cr(self.lambda[(n, m)])
    }
    fn damping_rate(&self, n: usize) -> T {
        self.induced_decay[n]
    }
    fn decoherence_rate(&self, n: usize) -> T {
        self.induced_decay[n]
    }
}

impl<T: Real> EffectiveModel<T> for EffectiveBadCavity<T> {
    fn regime(&self) -> Regime {
        Regime::BadCavity
    }
    fn labels(&self) -> &[String] {
        &self.labels
    }
    fn delta_bar(&self) -> &[T] {
        &self.delta_bar
    }
    fn drive_amplitude(&self, n: usize) -> C<T> {
        self.omega[n]
    }
    fn coupling(&self, n: usize, m: usize) -> C<T> {
        self.lambda[(n, m)]
    }
    fn damping_rate(&self, n: usize) -> T {
        self.gamma1[n]
    }
    fn decoherence_rate(&self, n: usize) -> T {
        self.gamma2[n]
    }
}

fn labels<T: Real>(model: &SystemModel<T>) -> Vec<String> {
    model.tls.iter().map(|t| t.label.clone()).collect()
}

/// Dispersive-limit parameters of `model`.
pub fn dispersive_params<T: Real>(model: &SystemModel<T>) -> Result<EffectiveDispersive<T>> {
    model.validate()?;
    let dc = model.resonator.delta_c;
    let eps = model.drive.epsilon0;
    let kappa = model.resonator.kappa;
    if eps != T::zero() && dc == T::zero() {
        return Err(Error::InvalidRegime(
            "dispersive drive terms need a nonzero resonator detuning".into(),
        ));
    }
    let mut delta_nc = Vec::with_capacity(model.n_tls());
    for t in &model.tls {
        let d = t.delta - dc;
        if d == T::zero() {
            return Err(Error::Resonant { label: t.label.clone(), against: "the resonator".into() });
        }
        delta_nc.push(d);
    }
    let drive_factor = if eps == T::zero() { T::one() } else { T::one() - re::<T>(2.0) * eps / dc };
    let two = re::<T>(2.0);
    let n = model.n_tls();
    let mut lambda = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (gi, gj) = (model.tls[i].g, model.tls[j].g);
                lambda[(i, j)] = gi * gj * (delta_nc[i] + delta_nc[j]) / (two * delta_nc[i] * delta_nc[j]);
            }
        }
    }
    Ok(EffectiveDispersive {
        labels: labels(model),
        delta_bar: model
            .tls
            .iter()
            .zip(&delta_nc)
            .map(|(t, &d)| t.delta + t.g * t.g / d * drive_factor)
            .collect(),
        omega_nx: model.tls.iter().zip(&delta_nc).map(|(t, &d)| two * eps * t.g / d).collect(),
        induced_decay: model
            .tls
            .iter()
            .zip(&delta_nc)
            .map(|(t, &d)| (t.g / d) * (t.g / d) * kappa)
            .collect(),
        delta_nc,
        lambda,
    })
}

/// Bad-cavity parameters of `model`.
pub fn badcavity_params<T: Real>(model: &SystemModel<T>) -> Result<EffectiveBadCavity<T>> {
    model.validate()?;
    let kappa = model.resonator.kappa;
    if kappa <= T::zero() {
        return Err(Error::InvalidRegime("adiabatic elimination needs kappa > 0".into()));
    }
    let dc = model.resonator.delta_c;
    let eps = model.drive.epsilon0;
    let denom = kappa * kappa + dc * dc;
    let pole = C::new(kappa, dc);
    let i = imag_unit::<T>();
    let n = model.n_tls();
    let g: Vec<T> = model.tls.iter().map(|t| t.g).collect();
    let mut lambda = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let l = -i * g[a] * g[b] / pole;
            lambda[(a, b)] = l;
            lambda[(b, a)] = l.conj();
        }
    }
    let gamma2: Vec<T> = g.iter().map(|&gn| gn * gn * kappa / denom).collect();
    Ok(EffectiveBadCavity {
        labels: labels(model),
        delta_bar: model.tls.iter().map(|t| t.delta - dc * t.g * t.g / denom).collect(),
        omega: g.iter().map(|&gn| -i * gn * eps / pole).collect(),
        gamma1: gamma2.iter().map(|&x| re::<T>(2.0) * x).collect(),
        gamma2,
        lambda,
        g,
        kappa,
        delta_c: dc,
    })
}

fn tls_ops<T: Real>(n_tls: usize, which: Pauli) -> Result<Vec<Operator<T>>> {
    let space = vec![2; n_tls];
    (0..n_tls).map(|k| embed(&pauli(which), k, &space)).collect()
}

/// `sum_{n<m} (lambda_nm sigma_n+ sigma_m- + h.c.)` on the TLS space.
pub fn interaction_hamiltonian<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Result<Operator<T>> {
    let n = params.n_tls();
    let sp = tls_ops::<T>(n, Pauli::Plus)?;
    let sm = tls_ops::<T>(n, Pauli::Minus)?;
    let mut h = Operator::zeros(&vec![2; n]);
    for (a, spa) in sp.iter().enumerate() {
        for (b, smb) in sm.iter().enumerate().skip(a + 1) {
            let hop = (spa * smb).scale(params.coupling(a, b));
            h = &h + &(&hop + &hop.adjoint());
        }
    }
    Ok(h)
}

/// Single-qubit part: `sum_n delta_bar_n/2 sigma_nz` plus the drive terms.
pub fn single_qubit_hamiltonian<T: Real, E: EffectiveModel<T> + ?Sized>(
    params: &E,
    include_detuning: bool,
    include_drive: bool,
) -> Result<Operator<T>> {
    let n = params.n_tls();
    let sz = tls_ops::<T>(n, Pauli::Z)?;
    let sp = tls_ops::<T>(n, Pauli::Plus)?;
    let half = re::<T>(0.5);
    let mut h = Operator::zeros(&vec![2; n]);
    for k in 0..n {
        if include_detuning {
            h = &h + &sz[k].scale_real(params.delta_bar()[k] * half);
        }
        if include_drive {
            let d = sp[k].scale(params.drive_amplitude(k));
            h = &h + &(&d + &d.adjoint());
        }
    }
    Ok(h)
}

/// Full effective Hamiltonian on the `2^N` TLS space.
pub fn build_effective_hamiltonian<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Result<Operator<T>> {
    let h = &single_qubit_hamiltonian(params, true, true)? + &interaction_hamiltonian(params)?;
    Ok(h.hermitian_part())
}

/// Induced amplitude damping: `sigma_n-` at the regime's decay rate.
pub fn build_effective_lindblad<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Result<Vec<LindbladTerm<T>>> {
    let sm = tls_ops::<T>(params.n_tls(), Pauli::Minus)?;
    sm.into_iter()
        .enumerate()
        .map(|(k, op)| LindbladTerm::new(op, params.damping_rate(k)))
        .collect()
}

/// Frame change `exp(-epsilon0 (a - a^dag)/Delta_c) prod_n exp(-g_n (a^dag sigma_n- - sigma_n+ a)/Delta_nc)`
/// on the full space, factors multiplied left to right in the order written.
pub fn dispersive_unitary<T: Real>(model: &SystemModel<T>) -> Result<Operator<T>> {
    let p = dispersive_params(model)?;
    let ops = model.operators()?;
    let a_dag = ops.a.adjoint();
    let mut u = Operator::identity(&model.space());
    let eps = model.drive.epsilon0;
    if eps != T::zero() {
        let gen = &ops.a - &a_dag;
        u = matrix_exp(&gen, cr(-eps / model.resonator.delta_c))?;
    }
    for (k, t) in model.tls.iter().enumerate() {
        if t.g == T::zero() {
            continue;
        }
        let gen = &(&a_dag * &ops.sigma_minus[k]) - &(&ops.sigma_plus[k] * &ops.a);
        u = &u * &matrix_exp(&gen, cr(-t.g / p.delta_nc[k]))?;
    }
    Ok(u)
}

/// Residual cavity-TLS term left after the frame change:
/// `sum_n (g_n^2/Delta_nc) sigma_nz [a^dag a + epsilon0 (Delta_c - 2 Delta_nc)/(2 Delta_nc Delta_c) (a + a^dag)]`.
pub fn residual_coupling<T: Real>(model: &SystemModel<T>) -> Result<Operator<T>> {
    let p = dispersive_params(model)?;
    let ops = model.operators()?;
    let quad = &ops.a + &ops.a.adjoint();
    let eps = model.drive.epsilon0;
    let dc = model.resonator.delta_c;
    let two = re::<T>(2.0);
    let mut h = Operator::zeros(&model.space());
    for (k, t) in model.tls.iter().enumerate() {
        let d = p.delta_nc[k];
        let mut field = ops.n.clone();
        if eps != T::zero() {
            field = &field + &quad.scale_real(eps * (dc - two * d) / (two * d * dc));
        }
        h = &h + &(&ops.sigma_z[k] * &field).scale_real(t.g * t.g / d);
    }
    Ok(h.hermitian_part())
}

/// Field amplitude slaved to the TLS coherences:
/// `<a> = -i (epsilon0 + sum_n g_n <sigma_n->) / (kappa + i Delta_c)`.
pub fn adiabatic_cavity_amplitude<T: Real>(
    params: &EffectiveBadCavity<T>,
    sigma_minus: &[C<T>],
    epsilon0: T,
) -> Result<C<T>> {
    if sigma_minus.len() != params.g.len() {
        return Err(Error::DimensionMismatch { expected: params.g.len(), found: sigma_minus.len() });
    }
    let source = sigma_minus
        .iter()
        .zip(&params.g)
        .fold(cr(epsilon0), |acc, (&s, &g)| acc + s * g);
    Ok(-imag_unit::<T>() * source / C::new(params.kappa, params.delta_c))
}

/// Thresholds for [`validity_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityThresholds {
    /// Upper bound on `g_n/|Delta_nc|` and `kappa/|Delta_nc|`.
    pub dispersive_ratio: f64,
    /// Upper bound on `g_n/kappa`.
    pub badcavity_ratio: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self { dispersive_ratio: 0.1, badcavity_ratio: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport {
    pub regime: Regime,
    pub ratios: Vec<RatioCheck>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.ratios.iter().all(|r| r.ok)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &RatioCheck> {
        self.ratios.iter().filter(|r| !r.ok)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).abs()
    }
}

/// Regime conditions as named ratios; advisory only.
pub fn validity_report<T: Real>(model: &SystemModel<T>, regime: Regime, thresholds: &ValidityThresholds) -> ValidityReport {
    let kappa = to_f64(model.resonator.kappa);
    let dc = to_f64(model.resonator.delta_c);
    let mut ratios = Vec::new();
    let mut push = |name: String, value: f64, threshold: f64| {
        ratios.push(RatioCheck { name, value, threshold, ok: value <= threshold });
    };
    for t in &model.tls {
        let g = to_f64(t.g).abs();
        match regime {
            Regime::Dispersive => {
                let d = to_f64(t.delta) - dc;
                push(format!("g/|delta_nc| ({})", t.label), ratio(g, d), thresholds.dispersive_ratio);
                push(format!("kappa/|delta_nc| ({})", t.label), ratio(kappa, d), thresholds.dispersive_ratio);
            }
            Regime::BadCavity => {
                push(format!("g/kappa ({})", t.label), ratio(g, kappa), thresholds.badcavity_ratio);
            }
        }
    }
    ValidityReport { regime, ratios }
}

/// `|lambda_nm|` in either regime.
pub fn coupling_magnitude<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E, n: usize, m: usize) -> T {
    modulus(params.coupling(n, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simple_model;
    use approx::assert_relative_eq;

    #[test]
    fn equal_detunings_give_g_squared_over_delta() {
        let m = simple_model(-3.0, 0.0, 3, 0.0, &[(1.0, 0.2), (1.0, 0.3)]).unwrap();
        let p = dispersive_params(&m).unwrap();
        assert_relative_eq!(p.lambda[(0, 1)], 0.2 * 0.3 / 4.0, max_relative = 1e-15);
        assert_eq!(p.lambda[(0, 0)], 0.0);
        assert_eq!(p.lambda[(0, 1)], p.lambda[(1, 0)]);
    }

    #[test]
    fn undriven_dispersive_is_pure_lamb_shift() {
        let m = simple_model(0.0, 0.5, 3, 0.0, &[(2.0, 0.1)]).unwrap();
        let p = dispersive_params(&m).unwrap();
        assert_eq!(p.omega_nx[0], 0.0);
        assert_relative_eq!(p.delta_bar[0], 2.0 + 0.01 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.induced_decay[0], 0.0025 * 0.5, max_relative = 1e-15);
    }

    #[test]
    fn resonant_tls_is_named() {
        let m = simple_model(1.0, 0.0, 3, 0.0, &[(2.0, 0.1), (1.0, 0.1)]).unwrap();
        match dispersive_params(&m) {
            Err(Error::Resonant { label, .. }) => assert_eq!(label, "tls2"),
            other => panic!("{other:?}"),
        }
        let driven = simple_model(0.0, 0.0, 3, 0.3, &[(2.0, 0.1)]).unwrap();
        assert!(matches!(dispersive_params(&driven), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn bad_cavity_needs_damping() {
        let m = simple_model(0.0, 0.0, 3, 0.0, &[(0.0, 0.1)]).unwrap();
        assert!(matches!(badcavity_params(&m), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn bad_cavity_at_zero_detuning() {
        let (g1, g2, kappa, eps): (f64, f64, f64, f64) = (0.3, 0.4, 2.0, 0.7);
        let m = simple_model(0.0, kappa, 3, eps, &[(0.1, g1), (-0.2, g2)]).unwrap();
        let p = badcavity_params(&m).unwrap();
        let l = p.lambda[(0, 1)];
        assert_relative_eq!(modulus(l), g1 * g2 / kappa, max_relative = 1e-15);
        assert_relative_eq!(l.im.atan2(l.re), -std::f64::consts::FRAC_PI_2, max_relative = 1e-15);
        assert_relative_eq!(p.omega[0].im, -g1 * eps / kappa, max_relative = 1e-15);
        assert_eq!(p.omega[0].re, 0.0);
        assert_eq!(p.delta_bar, vec![0.1, -0.2]);
    }

    #[test]
    fn single_tls_undriven_hamiltonian_is_sigma_z() {
        let m = simple_model(0.0, 0.0, 3, 0.0, &[(2.0, 0.1)]).unwrap();
        let p = dispersive_params(&m).unwrap();
        let h = build_effective_hamiltonian(&p).unwrap();
        let expected = pauli::<f64>(Pauli::Z).scale_real(p.delta_bar[0] / 2.0);
        assert!((h.matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn bad_cavity_exchange_block() {
        let (g1, g2, kappa) = (0.3, 0.4, 2.0);
        let m = simple_model(0.0, kappa, 3, 0.0, &[(0.0, g1), (0.0, g2)]).unwrap();
        let p = badcavity_params(&m).unwrap();
        let h = build_effective_hamiltonian(&p).unwrap();
        // Basis |ee>, |eg>, |ge>, |gg>.
        let l = C::new(0.0, -g1 * g2 / kappa);
        assert!((h.matrix()[(1, 2)] - l).norm() < 1e-15);
        assert!((h.matrix()[(2, 1)] - l.conj()).norm() < 1e-15);
        assert_eq!(h.matrix()[(0, 0)], cr(0.0));
    }

    #[test]
    fn vanishing_kappa_switches_off_dispersive_damping() {
        let m = simple_model(0.0, 0.0, 3, 0.0, &[(2.0, 0.1), (3.0, 0.2)]).unwrap();
        let p = dispersive_params(&m).unwrap();
        assert!(build_effective_lindblad(&p).unwrap().iter().all(|t| t.rate == 0.0));
    }

    #[test]
    fn validity_flags() {
        let ok = simple_model(0.0, 0.01, 3, 0.0, &[(1.0, 0.05)]).unwrap();
        assert!(validity_report(&ok, Regime::Dispersive, &ValidityThresholds::default()).passed());
        let strong = simple_model(0.0, 0.3, 3, 0.0, &[(0.0, 0.3)]).unwrap();
        let r = validity_report(&strong, Regime::BadCavity, &ValidityThresholds::default());
        assert!(!r.passed());
        assert_eq!(r.flagged().count(), 1);
        let loose = ValidityThresholds { badcavity_ratio: 2.0, ..Default::default() };
        assert!(validity_report(&strong, Regime::BadCavity, &loose).passed());
        let resonant = simple_model(1.0, 0.0, 3, 0.0, &[(1.0, 0.05)]).unwrap();
        let r = validity_report(&resonant, Regime::Dispersive, &ValidityThresholds::default());
        assert!(r.ratios[0].value.is_infinite() && !r.passed());
    }

    #[test]
    fn adiabatic_amplitude_limits() {
        let m = simple_model(0.5, 2.0, 3, 0.0, &[(0.0, 0.3)]).unwrap();
        let p = badcavity_params(&m).unwrap();
        let empty = adiabatic_cavity_amplitude(&p, &[cr(0.0)], 0.4).unwrap();
        assert!((empty - C::new(0.0, -0.4) / C::new(2.0, 0.5)).norm() < 1e-15);
        let s = C::new(0.2, -0.1);
        let tls = adiabatic_cavity_amplitude(&p, &[s], 0.0).unwrap();
        assert!((tls - C::new(0.0, -0.3) * s / C::new(2.0, 0.5)).norm() < 1e-15);
        assert!(adiabatic_cavity_amplitude(&p, &[], 0.0).is_err());
    }
}
