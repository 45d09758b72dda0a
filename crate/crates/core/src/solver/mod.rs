//! Master-equation propagation, steady states, unitary propagators and
//! two-time correlations via the quantum regression theorem.

mod liouvillian;
mod propagate;

pub use liouvillian::Liouvillian;
pub use propagate::{propagate_raw, Method, Segment, StepOptions, Trajectory, TRACE_FAILURE};

use nalgebra::DVector;

use crate::algebra::{matrix_exp, max_abs, trace_product, unvectorize, Density, Operator, PureState};
use crate::error::{Error, Result};
use crate::model::{build_collapse_operators, build_hamiltonian, LindbladTerm, Schedule, SystemModel};
use crate::scalar::{cr, imag_unit, modulus, re, to_f64, tol, CMatrix, Real, C};

use propagate::{as_density, check_grid};

pub fn build_liouvillian<T: Real>(h: &Operator<T>, terms: &[LindbladTerm<T>]) -> Result<Liouvillian<T>> {
    Liouvillian::new(h.clone(), terms.to_vec())
}

/// Full-model generator (Hamiltonian plus photon loss) for one model.
pub fn model_liouvillian<T: Real>(model: &SystemModel<T>) -> Result<Liouvillian<T>> {
    Liouvillian::new(build_hamiltonian(model)?, build_collapse_operators(model)?)
}

/// Full-model generator with additional dissipators (e.g. artificial TLS noise).
pub fn model_liouvillian_with<T: Real>(model: &SystemModel<T>, extra: &[LindbladTerm<T>]) -> Result<Liouvillian<T>> {
    let mut terms = build_collapse_operators(model)?;
    terms.extend_from_slice(extra);
    Liouvillian::new(build_hamiltonian(model)?, terms)
}

/// Integrates the master equation segment by segment over `schedule`,
/// sampling at `t_grid`. The state is carried unchanged across segment
/// boundaries.
pub fn evolve<T: Real>(
    rho0: &Density<T>,
    schedule: &Schedule<T>,
    t_grid: &[T],
    method: Method,
) -> Result<Trajectory<T>> {
    evolve_with(rho0, schedule, t_grid, method, &StepOptions::default())
}

pub fn evolve_with<T: Real>(
    rho0: &Density<T>,
    schedule: &Schedule<T>,
    t_grid: &[T],
    method: Method,
    opts: &StepOptions,
) -> Result<Trajectory<T>> {
    let segments = schedule
        .segments()
        .iter()
        .map(|(m, d)| Ok(Segment { generator: model_liouvillian(m)?, duration: *d }))
        .collect::<Result<Vec<_>>>()?;
    evolve_segments(rho0, &segments, t_grid, method, opts)
}

/// Propagates a density matrix through arbitrary generator segments.
pub fn evolve_segments<T: Real>(
    rho0: &Density<T>,
    segments: &[Segment<T>],
    t_grid: &[T],
    method: Method,
    opts: &StepOptions,
) -> Result<Trajectory<T>> {
    if let Some(s) = segments.first() {
        if s.generator.dim() != rho0.dim() {
            return Err(Error::DimensionMismatch { expected: s.generator.dim(), found: rho0.dim() });
        }
    }
    let raw = propagate_raw(rho0.matrix(), segments, t_grid, method, opts, true)?;
    let space = rho0.space().to_vec();
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states: raw.into_iter().map(|m| as_density(m, &space)).collect(),
    })
}

/// Uniform grid `0, dt, 2 dt, ..., t_end` (the last point is `t_end`).
pub fn uniform_grid<T: Real>(t_end: T, points: usize) -> Vec<T> {
    let n = points.max(2);
    (0..n)
        .map(|k| t_end * re::<T>(k as f64) / re::<T>((n - 1) as f64))
        .collect()
}

/// `exp(-i H t)`.
pub fn unitary_propagator<T: Real>(h: &Operator<T>, t: T) -> Result<Operator<T>> {
    let dev = h.hermitian_deviation();
    if dev > tol::<T>(1e-10) * (T::one() + h.max_abs()) {
        return Err(Error::InvalidArgument(format!("Hamiltonian not Hermitian (deviation {dev})")));
    }
    matrix_exp(h, -imag_unit::<T>() * t)
}

/// Closed-system evolution of a pure state, exact between grid points.
pub fn evolve_pure<T: Real>(psi0: &PureState<T>, h: &Operator<T>, t_grid: &[T]) -> Result<Vec<PureState<T>>> {
    check_grid(t_grid, t_grid.last().copied().unwrap_or_else(T::zero))?;
    let mut out = Vec::with_capacity(t_grid.len());
    let mut psi = psi0.clone();
    let mut now = T::zero();
    let mut cached: Option<(T, Operator<T>)> = None;
    for &t in t_grid {
        let dt = t - now;
        if dt > T::zero() {
            let reuse = matches!(&cached, Some((h_dt, _)) if (*h_dt - dt).abs() <= dt * re::<T>(1e-12));
            if !reuse {
                cached = Some((dt, unitary_propagator(h, dt)?));
            }
            psi = psi.evolved(cached.as_ref().map(|c| &c.1).expect("propagator cached"))?;
            now = t;
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Largest dimension for which the superoperator is materialized.
pub const DENSE_LIMIT: usize = 100;
/// Above this many superoperator rows the kernel is found by LU instead of SVD.
const SVD_ROWS: usize = 1024;
/// Singular values below this fraction of the largest count as zero.
const KERNEL_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;

/// The unique trace-one element of the kernel of `L`.
pub fn steady_state<T: Real>(l: &Liouvillian<T>) -> Result<Density<T>> {
    let d = l.dim();
    if d > DENSE_LIMIT {
        return Err(Error::InvalidDimension(format!(
            "steady state needs a dense superoperator; dimension {d} > {DENSE_LIMIT}"
        )));
    }
    let s = l.superoperator();
    let n = d * d;
    let norm = max_abs(&s);
    if norm == T::zero() {
        return Err(Error::NonUniqueSteadyState(n));
    }

    let vec = if n <= SVD_ROWS {
        let svd = s.clone().svd(false, true);
        let sv = &svd.singular_values;
        let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
        let zero = smax * tol::<T>(KERNEL_TOL);
        let kernel: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] <= zero).collect();
        if kernel.len() > 1 {
            return Err(Error::NonUniqueSteadyState(kernel.len()));
        }
        let Some(&k) = kernel.first() else {
            let smin = sv.iter().fold(smax, |a, &b| a.min(b));
            return Err(Error::NoSteadyState(to_f64(smin / smax)));
        };
        let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
        DVector::from_iterator(n, v_t.row(k).iter().map(|z| z.conj()))
    } else {
        // Replace one equation by the trace constraint.
        let mut a = s.clone();
        for j in 0..n {
            a[(0, j)] = cr(T::zero());
        }
        for i in 0..d {
            a[(0, i * d + i)] = cr(T::one());
        }
        let mut b = DVector::zeros(n);
        b[0] = cr(T::one());
        a.lu()
            .solve(&b)
            .ok_or(Error::NonUniqueSteadyState(2))?
    };

    let mut rho = unvectorize(&vec, d);
    let tr = rho.trace();
    if modulus(tr) == T::zero() {
        return Err(Error::NoSteadyState(0.0));
    }
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * cr(re::<T>(0.5));
    let residual = max_abs(&l.apply(&rho));
    if residual > norm * tol::<T>(RESIDUAL_TOL) {
        return Err(Error::NoSteadyState(to_f64(residual / norm)));
    }
    Ok(as_density(rho, l.space()))
}

/// Checks that `rho` is (numerically) stationary under `l`.
pub fn is_steady<T: Real>(l: &Liouvillian<T>, rho: &Density<T>, rel_tol: f64) -> bool {
    let scale = l.rate_scale().max(T::one());
    max_abs(&l.apply(rho.matrix())) <= scale * re::<T>(rel_tol)
}

/// `<A(tau) B(0)> = Tr(A e^{L tau}[B rho_ss])` for each `tau` in `taus`.
pub fn two_time_correlation<T: Real>(
    l: &Liouvillian<T>,
    rho_ss: &Density<T>,
    a: &Operator<T>,
    b: &Operator<T>,
    taus: &[T],
) -> Result<Vec<C<T>>> {
    two_time_correlation_with(l, rho_ss, a, b, taus, Method::Rk4, &StepOptions::default())
}

pub fn two_time_correlation_with<T: Real>(
    l: &Liouvillian<T>,
    rho_ss: &Density<T>,
    a: &Operator<T>,
    b: &Operator<T>,
    taus: &[T],
    method: Method,
    opts: &StepOptions,
) -> Result<Vec<C<T>>> {
    let d = l.dim();
    for m in [rho_ss.dim(), a.dim(), b.dim()] {
        if m != d {
            return Err(Error::DimensionMismatch { expected: d, found: m });
        }
    }
    if !is_steady(l, rho_ss, 1e-7 * T::tolerance_scale()) {
        return Err(Error::InvalidState("rho_ss is not a steady state of the generator".into()));
    }
    let total = taus.last().copied().unwrap_or_else(T::zero);
    let x0: CMatrix<T> = b.matrix() * rho_ss.matrix();
    if total == T::zero() {
        return Ok(taus.iter().map(|_| trace_product(a.matrix(), &x0)).collect());
    }
    let seg = Segment { generator: l.clone(), duration: total };
    let xs = propagate_raw(&x0, std::slice::from_ref(&seg), taus, method, opts, false)?;
    Ok(xs.iter().map(|x| trace_product(a.matrix(), x)).collect())
}
