//! Time stepping for `d rho / dt = L[rho]` with piecewise-constant generators.

use crate::algebra::{is_finite, Density, Operator};
use crate::error::{Error, Result};
use crate::scalar::{cr, modulus, re, to_f64, CMatrix, Real};

use super::Liouvillian;

/// Integration method for [`super::evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4,
    /// Dormand-Prince 5(4) with error control.
    Adaptive,
}

/// Knobs shared by both methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    /// Steps per shortest period `2 pi / rate_scale`.
    pub steps_per_period: f64,
    /// Optional hard cap on the step (us).
    pub max_step: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub min_step: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 50.0,
            max_step: None,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            min_step: 1e-14,
        }
    }
}

/// One constant-generator piece of a propagation.
#[derive(Clone, Debug)]
pub struct Segment<T: Real> {
    pub generator: Liouvillian<T>,
    pub duration: T,
}

/// Time grid with states sampled on it.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<Density<T>>,
}

impl<T: Real> Trajectory<T> {
    /// `Tr(rho(t) op)` along the trajectory.
    pub fn expectations(&self, op: &Operator<T>) -> Result<Vec<crate::scalar::C<T>>> {
        self.states.iter().map(|s| crate::algebra::expectation(s, op)).collect()
    }

    /// Largest `|Tr rho - 1|`.
    pub fn max_trace_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| to_f64(modulus(s.trace() - cr(T::one()))))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all sampled states.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(|s| to_f64(s.min_eigenvalue()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Failure threshold for trace drift during a run.
pub const TRACE_FAILURE: f64 = 1e-6;

/// Checks a time grid against a total duration.
pub(crate) fn check_grid<T: Real>(t_grid: &[T], total: T) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if t_grid[0] < T::zero() {
        return Err(Error::InvalidArgument("time grid starts before 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    let slack = total * re::<T>(1e-12);
    if t_grid[t_grid.len() - 1] > total + slack {
        return Err(Error::InvalidArgument(format!(
            "time grid ends at {} beyond schedule duration {}",
            t_grid[t_grid.len() - 1],
            total
        )));
    }
    Ok(())
}

/// Propagates a raw matrix through `segments`, returning the state at every
/// time in `t_grid` (measured from the start of the first segment).
///
/// No renormalization or Hermitization is applied.
pub fn propagate_raw<T: Real>(
    x0: &CMatrix<T>,
    segments: &[Segment<T>],
    t_grid: &[T],
    method: Method,
    opts: &StepOptions,
    trace_guard: bool,
) -> Result<Vec<CMatrix<T>>> {
    if segments.is_empty() {
        return Err(Error::InvalidArgument("no segments to propagate".into()));
    }
    let total = segments.iter().fold(T::zero(), |acc, s| acc + s.duration);
    check_grid(t_grid, total)?;
    let d = segments[0].generator.dim();
    if x0.nrows() != d || x0.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x0.nrows() });
    }
    let trace0 = x0.trace();

    let mut out = Vec::with_capacity(t_grid.len());
    let mut x = x0.clone();
    let mut now = T::zero();
    let mut seg_idx = 0;
    let mut seg_end = segments[0].duration;
    let mut max_step = max_step_for(&segments[0].generator, opts);
    let mut adaptive_h: Option<T> = None;

    for &target in t_grid {
        while now < target {
            // Advance to the nearer of the target and the segment boundary.
            let stop = if seg_end < target { seg_end } else { target };
            if stop > now {
                let gen = &segments[seg_idx].generator;
                x = match method {
                    Method::Rk4 => rk4_span(gen, x, stop - now, max_step),
                    Method::Adaptive => {
                        let (y, h) = dopri_span(gen, x, stop - now, max_step, adaptive_h, opts)?;
                        adaptive_h = Some(h);
                        y
                    }
                };
                now = stop;
                if !is_finite(&x) {
                    return Err(Error::IntegratorFailure(format!("non-finite state at t = {now}")));
                }
                if trace_guard {
                    let drift = to_f64(modulus(x.trace() - trace0));
                    if drift > TRACE_FAILURE {
                        return Err(Error::IntegratorFailure(format!(
                            "trace drift {drift:e} at t = {now}"
                        )));
                    }
                }
            }
            if now >= seg_end && seg_idx + 1 < segments.len() {
                seg_idx += 1;
                seg_end += segments[seg_idx].duration;
                max_step = max_step_for(&segments[seg_idx].generator, opts);
                adaptive_h = None;
            } else if now >= seg_end {
                // Rounding put the last grid point marginally past the end.
                now = target;
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

fn max_step_for<T: Real>(gen: &Liouvillian<T>, opts: &StepOptions) -> T {
    let scale = to_f64(gen.rate_scale());
    let mut h = if scale > 0.0 {
        std::f64::consts::TAU / (opts.steps_per_period * scale)
    } else {
        f64::INFINITY
    };
    if let Some(cap) = opts.max_step {
        h = h.min(cap);
    }
    re(h)
}

fn rk4_span<T: Real>(gen: &Liouvillian<T>, mut x: CMatrix<T>, span: T, max_step: T) -> CMatrix<T> {
    let n = if max_step.is_finite() {
        to_f64(span / max_step).ceil().max(1.0) as usize
    } else {
        1
    };
    let h = span / re::<T>(n as f64);
    let half = cr(h * re::<T>(0.5));
    let full = cr(h);
    let sixth = cr(h / re::<T>(6.0));
    let two = cr(re::<T>(2.0));
    for _ in 0..n {
        let k1 = gen.apply(&x);
        let k2 = gen.apply(&(&x + &k1 * half));
        let k3 = gen.apply(&(&x + &k2 * half));
        let k4 = gen.apply(&(&x + &k3 * full));
        x += (k1 + (k2 + k3) * two + k4) * sixth;
    }
    x
}

// Dormand-Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri_span<T: Real>(
    gen: &Liouvillian<T>,
    mut x: CMatrix<T>,
    span: T,
    max_step: T,
    start_h: Option<T>,
    opts: &StepOptions,
) -> Result<(CMatrix<T>, T)> {
    let c = |v: f64, h: T| cr(re::<T>(v) * h);
    let min_step = re::<T>(opts.min_step);
    let mut h = start_h.unwrap_or(max_step).min(max_step).min(span);
    if !h.is_finite() {
        h = span;
    }
    let mut done = T::zero();
    let mut k1 = gen.apply(&x);
    while done < span {
        let remaining = span - done;
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let k2 = gen.apply(&(&x + &k1 * c(A21, step)));
        let k3 = gen.apply(&(&x + &k1 * c(A31, step) + &k2 * c(A32, step)));
        let k4 = gen.apply(&(&x + &k1 * c(A41, step) + &k2 * c(A42, step) + &k3 * c(A43, step)));
        let k5 = gen.apply(
            &(&x + &k1 * c(A51, step) + &k2 * c(A52, step) + &k3 * c(A53, step) + &k4 * c(A54, step)),
        );
        let k6 = gen.apply(
            &(&x + &k1 * c(A61, step)
                + &k2 * c(A62, step)
                + &k3 * c(A63, step)
                + &k4 * c(A64, step)
                + &k5 * c(A65, step)),
        );
        let y = &x + &k1 * c(B1, step) + &k3 * c(B3, step) + &k4 * c(B4, step) + &k5 * c(B5, step) + &k6 * c(B6, step);
        let k7 = gen.apply(&y);
        let err = &k1 * c(E1, step) + &k3 * c(E3, step) + &k4 * c(E4, step) + &k5 * c(E5, step) + &k6 * c(E6, step) + &k7 * c(E7, step);

        // Scaled RMS error.
        let mut acc = 0.0;
        for (e, (a, b)) in err.iter().zip(x.iter().zip(y.iter())) {
            let scale = opts.abs_tol + opts.rel_tol * to_f64(modulus(*a)).max(to_f64(modulus(*b)));
            let r = to_f64(modulus(*e)) / scale;
            acc += r * r;
        }
        let err_norm = (acc / err.len() as f64).sqrt();

        if err_norm <= 1.0 {
            x = y;
            k1 = k7;
            done = if last { span } else { done + step };
        }
        let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
        let next = step * re::<T>(factor);
        if err_norm > 1.0 && next < min_step {
            return Err(Error::IntegratorFailure(format!("step size underflow ({next})")));
        }
        if !(last && err_norm <= 1.0) {
            h = next.min(max_step);
        }
    }
    Ok((x, h))
}

/// Wraps a propagated matrix as a density matrix; invariants are reported by
/// the trajectory diagnostics rather than enforced per sample.
pub(crate) fn as_density<T: Real>(m: CMatrix<T>, space: &[usize]) -> Density<T> {
    Density::new_unchecked(Operator::from_parts_unchecked(m, space.to_vec()))
}
