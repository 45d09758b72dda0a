//! Readout observables: the stationary field quadrature as a linear function
//! of the TLS spin components, the phase that isolates one TLS, the photon
//! number / TLS correlation identity, regression-theorem rate fits and the
//! dispersive resonator pull.

use crate::algebra::{Density, Operator};
use crate::effective::dispersive_params;
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::scalar::{argument, re, to_f64, Real, C};
use crate::solver::{evolve_segments, model_liouvillian, two_time_correlation_with, Liouvillian, Method, Segment, StepOptions, Trajectory};

/// `<a + a^dag> = offset + sum_n (w_x <sigma_nx> + w_y <sigma_ny>)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSignal<T: Real> {
    pub offset: T,
    /// `(w_x, w_y)` per TLS.
    pub tls_weights: Vec<(T, T)>,
}

impl<T: Real> QuadratureSignal<T> {
    pub fn new(model: &SystemModel<T>) -> Result<Self> {
        let kappa = model.resonator.kappa;
        let dc = model.resonator.delta_c;
        let denom = kappa * kappa + dc * dc;
        if denom == T::zero() {
            return Err(Error::Undefined("quadrature signal needs kappa or Delta_c nonzero".into()));
        }
        let two = re::<T>(2.0);
        let offset = -two * model.drive.epsilon0 * dc / denom;
        let tls_weights = model.tls.iter().map(|t| (-t.g * dc / denom, -t.g * kappa / denom)).collect();
        Ok(Self { offset, tls_weights })
    }

    pub fn evaluate(&self, spins: &[(T, T)]) -> Result<T> {
        if spins.len() != self.tls_weights.len() {
            return Err(Error::DimensionMismatch { expected: self.tls_weights.len(), found: spins.len() });
        }
        Ok(self
            .tls_weights
            .iter()
            .zip(spins)
            .fold(self.offset, |acc, (&(wx, wy), &(sx, sy))| acc + wx * sx + wy * sy))
    }

    /// Whether every pair of weight rows is linearly independent, i.e. no
    /// two TLS's contribute along the same quadrature direction.
    pub fn rows_independent(&self, rel_tol: f64) -> bool {
        let w = &self.tls_weights;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                let (a, b) = (w[i], w[j]);
                let cross = to_f64(a.0 * b.1 - a.1 * b.0).abs();
                let scale = to_f64((a.0 * a.0 + a.1 * a.1).sqrt() * (b.0 * b.0 + b.1 * b.1).sqrt());
                if !(cross > rel_tol * scale) {
                    return false;
                }
            }
        }
        true
    }
}

/// Stationary quadrature `<a + a^dag>` predicted from per-TLS `(<sigma_x>, <sigma_y>)`.
pub fn quadrature_signal<T: Real>(model: &SystemModel<T>, spins: &[(T, T)]) -> Result<T> {
    QuadratureSignal::new(model)?.evaluate(spins)
}

/// `arg(-i g1 / (kappa + i Delta_c))`, principal value.
pub fn measurement_phase<T: Real>(g1: T, kappa: T, delta_c: T) -> Result<T> {
    if g1 == T::zero() {
        return Err(Error::Undefined("measurement phase needs a nonzero coupling".into()));
    }
    if kappa == T::zero() && delta_c == T::zero() {
        return Err(Error::Undefined("measurement phase needs kappa or Delta_c nonzero".into()));
    }
    let z = C::new(T::zero(), -g1) / C::new(kappa, delta_c);
    Ok(argument(z))
}

/// `<a e^{-i phi} + a^dag e^{i phi}>` for a given field amplitude.
pub fn rotated_quadrature<T: Real>(amplitude: C<T>, phase: T) -> T {
    let rot = C::new(phase.cos(), -phase.sin());
    re::<T>(2.0) * (amplitude * rot).re
}

/// Series recorded along a full-model run with one TLS.
#[derive(Clone, Debug)]
pub struct CorrelationRecord<T: Real> {
    pub times: Vec<T>,
    /// `<sigma_+ sigma_->`.
    pub c: Vec<C<T>>,
    /// `<sigma_+ + sigma_->`.
    pub m: Vec<T>,
    /// `<a^dag a>`.
    pub photon: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct CorrelationCheck<T: Real> {
    pub record: CorrelationRecord<T>,
    /// `(g^2 C + g epsilon0 M + epsilon0^2) / (kappa^2 + Delta_c^2)` on the grid.
    pub predicted: Vec<T>,
    /// Start of the scored window, `5/kappa`.
    pub transient: T,
    /// Largest `|<a^dag a> - predicted|` after the transient.
    pub residual: T,
    /// Largest `<a^dag a>` after the transient.
    pub scale: T,
    pub warnings: Vec<String>,
    pub trajectory: Trajectory<T>,
}

impl<T: Real> CorrelationCheck<T> {
    pub fn relative_residual(&self) -> f64 {
        let s = to_f64(self.scale);
        if s > 0.0 {
            to_f64(self.residual) / s
        } else if to_f64(self.residual) == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Ratio `kappa / g` below which the correlation identity is flagged.
pub const CORRELATION_KAPPA_RATIO: f64 = 3.0;

pub fn photon_correlation_check<T: Real>(
    model: &SystemModel<T>,
    rho0: &Density<T>,
    t_grid: &[T],
) -> Result<CorrelationCheck<T>> {
    photon_correlation_check_with(model, rho0, t_grid, &StepOptions::default())
}

pub fn photon_correlation_check_with<T: Real>(
    model: &SystemModel<T>,
    rho0: &Density<T>,
    t_grid: &[T],
    opts: &StepOptions,
) -> Result<CorrelationCheck<T>> {
    if model.n_tls() != 1 {
        return Err(Error::InvalidArgument(format!(
            "correlation identity needs exactly one TLS, got {}",
            model.n_tls()
        )));
    }
    let kappa = model.resonator.kappa;
    let dc = model.resonator.delta_c;
    let denom = kappa * kappa + dc * dc;
    if kappa <= T::zero() {
        return Err(Error::InvalidRegime("correlation identity needs kappa > 0".into()));
    }
    let g = model.tls[0].g;
    let eps = model.drive.epsilon0;
    let mut warnings = Vec::new();
    if to_f64(kappa) < CORRELATION_KAPPA_RATIO * to_f64(g.abs()) {
        warnings.push(format!(
            "kappa/g = {:.3} is below {CORRELATION_KAPPA_RATIO}; the adiabatic identity is not expected to hold",
            to_f64(kappa / g.abs())
        ));
    }

    let total = t_grid.last().copied().unwrap_or_else(T::zero);
    let seg = Segment { generator: model_liouvillian(model)?, duration: total };
    let traj = evolve_segments(rho0, std::slice::from_ref(&seg), t_grid, Method::Rk4, opts)?;

    let ops = model.operators()?;
    let pe = &ops.sigma_plus[0] * &ops.sigma_minus[0];
    let c = traj.expectations(&pe)?;
    let m: Vec<T> = traj.expectations(&ops.sigma_x[0])?.iter().map(|z| z.re).collect();
    let photon: Vec<T> = traj.expectations(&ops.n)?.iter().map(|z| z.re).collect();
    let predicted: Vec<T> = c
        .iter()
        .zip(&m)
        .map(|(ci, &mi)| (g * g * ci.re + g * eps * mi + eps * eps) / denom)
        .collect();

    let transient = re::<T>(5.0) / kappa;
    let mut residual = T::zero();
    let mut scale = T::zero();
    for (k, &t) in t_grid.iter().enumerate() {
        if t < transient {
            continue;
        }
        residual = residual.max((photon[k] - predicted[k]).abs());
        scale = scale.max(photon[k].abs());
    }
    if t_grid.iter().all(|&t| t < transient) {
        warnings.push("grid ends inside the transient window; nothing was scored".into());
    }
    Ok(CorrelationCheck {
        record: CorrelationRecord { times: t_grid.to_vec(), c, m, photon },
        predicted,
        transient,
        residual,
        scale,
        warnings,
        trajectory: traj,
    })
}

/// Single complex exponential fitted to a two-time correlation,
/// `c(tau) ~ A exp(-rate tau - i frequency tau)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    pub rate: f64,
    pub frequency: f64,
    pub amplitude: C<f64>,
    /// Samples used (prefix of the grid with `|c| > 1e-3 |c(0)|`).
    pub window: usize,
    /// Largest deviation of the fit from the data, relative to `|c(0)|`.
    pub residual: f64,
    pub warning: Option<String>,
}

/// Relative amplitude that closes the fit window.
pub const FIT_WINDOW_FLOOR: f64 = 1e-3;
/// Fit residual above which a quality warning is attached.
pub const FIT_RESIDUAL_WARN: f64 = 0.1;

/// Computes `<a(tau) b(0)>` in the steady state and fits one exponential.
pub fn regression_extract<T: Real>(
    l: &Liouvillian<T>,
    rho_ss: &Density<T>,
    a: &Operator<T>,
    b: &Operator<T>,
    taus: &[T],
) -> Result<RegressionFit> {
    let opts = StepOptions { steps_per_period: 200.0, ..StepOptions::default() };
    let corr = two_time_correlation_with(l, rho_ss, a, b, taus, Method::Rk4, &opts)?;
    let t: Vec<f64> = taus.iter().map(|&x| to_f64(x)).collect();
    let z: Vec<C<f64>> = corr.iter().map(|v| C::new(to_f64(v.re), to_f64(v.im))).collect();
    fit_exponential(&t, &z)
}

/// Log-linear least-squares fit of `z(t) ~ A exp(-rate t - i frequency t)`.
pub fn fit_exponential(t: &[f64], z: &[C<f64>]) -> Result<RegressionFit> {
    if t.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), found: z.len() });
    }
    let z0 = z.first().map(|v| v.norm()).unwrap_or(0.0);
    if !(z0 > 0.0) {
        return Err(Error::Undefined("correlation vanishes at tau = 0".into()));
    }
    let window = z.iter().take_while(|v| v.norm() > FIT_WINDOW_FLOOR * z0).count();
    if window < 3 {
        return Err(Error::Undefined(format!("only {window} samples above the fit floor")));
    }
    let mut phase = Vec::with_capacity(window);
    let mut prev = z[0].arg();
    let mut offset = 0.0;
    for v in &z[..window] {
        let mut p = v.arg() + offset;
        while p - prev > std::f64::consts::PI {
            p -= 2.0 * std::f64::consts::PI;
            offset -= 2.0 * std::f64::consts::PI;
        }
        while p - prev < -std::f64::consts::PI {
            p += 2.0 * std::f64::consts::PI;
            offset += 2.0 * std::f64::consts::PI;
        }
        phase.push(p);
        prev = p;
    }
    let logs: Vec<f64> = z[..window].iter().map(|v| v.norm().ln()).collect();
    let ts = &t[..window];
    let (s_log, i_log) = linear_fit(ts, &logs);
    let (s_ph, i_ph) = linear_fit(ts, &phase);
    let amplitude = C::from_polar(i_log.exp(), i_ph);
    let rate = -s_log;
    let frequency = -s_ph;
    let residual = ts
        .iter()
        .zip(&z[..window])
        .map(|(&tk, &zk)| (zk - amplitude * C::new(-rate * tk, -frequency * tk).exp()).norm() / z0)
        .fold(0.0, f64::max);
    let warning = (residual > FIT_RESIDUAL_WARN)
        .then(|| format!("single-exponential fit residual {residual:.3} exceeds {FIT_RESIDUAL_WARN}"));
    Ok(RegressionFit { rate, frequency, amplitude, window, residual, warning })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Effective resonator detunings with TLS `n` excited and in its ground state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersivePull<T: Real> {
    pub excited: T,
    pub ground: T,
}

impl<T: Real> DispersivePull<T> {
    /// `g_n^2 / Delta_nc`.
    pub fn shift(&self) -> T {
        (self.excited - self.ground) / re(2.0)
    }
}

pub fn dispersive_readout_shift<T: Real>(model: &SystemModel<T>, n: usize) -> Result<DispersivePull<T>> {
    if n >= model.n_tls() {
        return Err(Error::InvalidArgument(format!("TLS index {n} out of range")));
    }
    let p = dispersive_params(model)?;
    let g = model.tls[n].g;
    let chi = g * g / p.delta_nc[n];
    let dc = model.resonator.delta_c;
    Ok(DispersivePull { excited: dc + chi, ground: dc - chi })
}

/// Steady `<a^dag a>` of a model, the transmission proxy.
pub fn steady_photon_number<T: Real>(l: &Liouvillian<T>, number: &Operator<T>) -> Result<T> {
    let rho = crate::solver::steady_state(l)?;
    Ok(crate::algebra::expectation(&rho, number)?.re)
}
