//! Gate synthesis on the effective TLS models: iSWAP from the exchange
//! term, axis rotations from the single-qubit terms, fidelities, Lie-algebra
//! closure and the operations-per-coherence-time budget.

use rayon::prelude::*;

use crate::algebra::{
    embed, matrix_exp, trace_product, unvectorize, vectorize, AxisState, Operator, PureState,
};
use crate::effective::{
    dispersive_params, dispersive_unitary, interaction_hamiltonian, single_qubit_hamiltonian, EffectiveModel, Regime,
};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, SystemModel};
use crate::scalar::{argument, cr, imag_unit, modulus, re, to_f64, CMatrix, Real, C};
use crate::solver::{propagate_raw, Liouvillian, Method, Segment, StepOptions};

/// Relative tolerance on `|delta_bar_n - delta_bar_m| / |lambda|` for a
/// plain (echo-free) iSWAP.
pub const DETUNING_MATCH_TOL: f64 = 1e-6;
const UNITARITY_TOL: f64 = 1e-8;
/// Linear-independence threshold for the Lie closure.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Timing and phase bookkeeping for an iSWAP on one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct IswapSchedule<T: Real> {
    pub pair: (usize, usize),
    /// `pi / (2 |lambda|)`.
    pub duration: T,
    /// Phase `theta` of `lambda = |lambda| e^{i theta}`.
    pub swap_phase: T,
    /// Z corrections `diag(e^{i phi}, 1)` on the pair that turn the bare
    /// exchange propagator into iSWAP.
    pub phase_corrections: [T; 2],
    /// `delta_bar_k * duration` for every TLS, undone by the same kind of
    /// correction when the single-qubit detunings act during the gate.
    pub detuning_phases: Vec<T>,
}

impl<T: Real> IswapSchedule<T> {
    /// Product of `diag(e^{i phi_k}, 1)` over all TLS's. With
    /// `include_detuning` the detuning phases are folded in.
    pub fn correction(&self, include_detuning: bool) -> Result<Operator<T>> {
        let n = self.detuning_phases.len();
        let mut angles = vec![T::zero(); n];
        angles[self.pair.0] = self.phase_corrections[0];
        angles[self.pair.1] = self.phase_corrections[1];
        if include_detuning {
            for (a, d) in angles.iter_mut().zip(&self.detuning_phases) {
                *a += *d;
            }
        }
        z_corrections(&angles)
    }
}

/// `prod_k diag(e^{i angle_k}, 1)` on `[2; N]`.
pub fn z_corrections<T: Real>(angles: &[T]) -> Result<Operator<T>> {
    let space = vec![2; angles.len()];
    let mut out = Operator::identity(&space);
    for (k, &a) in angles.iter().enumerate() {
        let mut m = CMatrix::<T>::identity(2, 2);
        m[(0, 0)] = C::new(a.cos(), a.sin());
        out = &out * &embed(&Operator::from_parts_unchecked(m, vec![2]), k, &space)?;
    }
    Ok(out)
}

fn check_pair(n_tls: usize, pair: (usize, usize)) -> Result<()> {
    if pair.0 == pair.1 || pair.0 >= n_tls || pair.1 >= n_tls {
        return Err(Error::InvalidArgument(format!("bad TLS pair {pair:?} for {n_tls} TLS's")));
    }
    Ok(())
}

/// Duration and corrections for an iSWAP between `pair.0` and `pair.1`.
pub fn iswap_schedule<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E, pair: (usize, usize)) -> Result<IswapSchedule<T>> {
    check_pair(params.n_tls(), pair)?;
    let (n, m) = pair;
    let lambda = params.coupling(n, m);
    let mag = modulus(lambda);
    if mag == T::zero() {
        return Err(Error::InvalidArgument(format!("TLS's {n} and {m} are not coupled")));
    }
    let db = params.delta_bar();
    let mismatch = (db[n] - db[m]).abs();
    if mismatch > mag * re::<T>(DETUNING_MATCH_TOL) {
        return Err(Error::RequiresEcho { mismatch: to_f64(mismatch) });
    }
    let duration = T::pi() / (re::<T>(2.0) * mag);
    let theta = argument(lambda);
    Ok(IswapSchedule {
        pair,
        duration,
        swap_phase: theta,
        phase_corrections: [T::pi() - theta, theta - T::pi()],
        detuning_phases: db.iter().map(|&d| d * duration).collect(),
    })
}

/// The drive-off Hamiltonian an iSWAP runs under: detunings plus exchange.
pub fn gate_hamiltonian<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Result<Operator<T>> {
    Ok((&single_qubit_hamiltonian(params, true, false)? + &interaction_hamiltonian(params)?).hermitian_part())
}

/// iSWAP on `pair` (`|eg> -> i|ge>`, `|ge> -> i|eg>`), identity elsewhere.
pub fn iswap_target<T: Real>(n_tls: usize, pair: (usize, usize)) -> Result<Operator<T>> {
    check_pair(n_tls, pair)?;
    let d = 1usize << n_tls;
    let bit = |idx: usize, k: usize| (idx >> (n_tls - 1 - k)) & 1;
    let mut m = CMatrix::<T>::zeros(d, d);
    for col in 0..d {
        let (a, b) = (bit(col, pair.0), bit(col, pair.1));
        if a == b {
            m[(col, col)] = cr(T::one());
        } else {
            let row = col ^ (1 << (n_tls - 1 - pair.0)) ^ (1 << (n_tls - 1 - pair.1));
            m[(row, col)] = imag_unit();
        }
    }
    Ok(Operator::from_parts_unchecked(m, vec![2; n_tls]))
}

/// Ideal single-qubit rotation `exp(-i angle sigma_axis / 2)`.
pub fn rotation_unitary<T: Real>(axis: Axis, angle: T) -> Operator<T> {
    let p = match axis {
        Axis::X => crate::algebra::pauli(crate::algebra::Pauli::X),
        Axis::Z => crate::algebra::pauli(crate::algebra::Pauli::Z),
    };
    matrix_exp(&p, -imag_unit::<T>() * angle * re::<T>(0.5)).expect("finite rotation angle")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// A model segment and how long to hold it.
#[derive(Clone, Debug)]
pub struct RotationSegment<T: Real> {
    pub model: SystemModel<T>,
    pub duration: T,
    /// `Omega_nx` (x) or `delta_bar_n` (z) in the segment.
    pub rate: T,
}

/// Segment realizing a rotation of TLS `n` by `angle` in the dispersive
/// model: x uses the driven model, z the same model with the drive off.
/// Negative durations are wrapped by one full period `2 pi / |rate|`.
pub fn single_qubit_rotation<T: Real>(model: &SystemModel<T>, n: usize, axis: Axis, angle: T) -> Result<RotationSegment<T>> {
    if n >= model.n_tls() {
        return Err(Error::InvalidArgument(format!("TLS index {n} out of range")));
    }
    let seg_model = match axis {
        Axis::X => model.clone(),
        Axis::Z => model.undriven(),
    };
    let p = dispersive_params(&seg_model)?;
    let rate = match axis {
        Axis::X => p.omega_nx[n],
        Axis::Z => p.delta_bar[n],
    };
    if rate == T::zero() {
        return Err(Error::UnreachableRotation(format!(
            "{} rotation of '{}' has zero rate",
            if axis == Axis::X { "x" } else { "z" },
            p.labels[n]
        )));
    }
    let mut duration = angle / rate;
    if duration < T::zero() {
        let period = T::two_pi() / rate.abs();
        duration += period * (-duration / period).ceil();
    }
    Ok(RotationSegment { model: seg_model, duration, rate })
}

/// `|Tr(target^dag actual)| / d`; both must be unitary.
pub fn gate_fidelity_unitary<T: Real>(actual: &Operator<T>, target: &Operator<T>) -> Result<T> {
    if actual.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: actual.dim() });
    }
    for op in [actual, target] {
        let dev = op.unitarity_deviation();
        if dev > re::<T>(UNITARITY_TOL) * re::<T>(T::tolerance_scale()) {
            return Err(Error::NonUnitary(to_f64(dev)));
        }
    }
    Ok(overlap_fidelity(actual.matrix(), target.matrix()))
}

/// `|Tr(target^dag m)| / d` without unitarity checks (for projected blocks).
pub fn overlap_fidelity<T: Real>(m: &CMatrix<T>, target: &CMatrix<T>) -> T {
    modulus(trace_product(&target.adjoint(), m)) / re::<T>(m.nrows() as f64)
}

/// The `6^N` products of single-qubit axis states.
pub fn axis_inputs<T: Real>(n_tls: usize) -> Result<Vec<PureState<T>>> {
    let total = 6usize.pow(n_tls as u32);
    (0..total)
        .map(|mut idx| {
            let mut parts = vec![AxisState::Excited.state(); n_tls];
            for k in (0..n_tls).rev() {
                parts[k] = AxisState::ALL[idx % 6].state();
                idx /= 6;
            }
            PureState::product(&parts)
        })
        .collect()
}

fn n_qubits(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(format!("{dim} is not a qubit-register dimension")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Mean of `|<psi| target^dag actual |psi>|^2` over the axis inputs.
pub fn state_averaged_fidelity<T: Real>(actual: &Operator<T>, target: &Operator<T>) -> Result<T> {
    if actual.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: actual.dim() });
    }
    let inputs = axis_inputs::<T>(n_qubits(target.dim())?)?;
    let m = target.matrix().adjoint() * actual.matrix();
    let sum = inputs.iter().fold(T::zero(), |acc, psi| {
        let amp = psi.amplitudes().dotc(&(&m * psi.amplitudes()));
        acc + amp.norm_sqr()
    });
    Ok(sum / re::<T>(inputs.len() as f64))
}

/// Superoperators up to this many rows are exponentiated exactly.
const EXACT_SUPEROPERATOR_ROWS: usize = 256;

/// Mean state fidelity `<psi|T^dag C E(|psi><psi|) C^dag T|psi>` over the
/// axis inputs, where `E` is the open-system evolution through `segments`
/// and `C` an optional correction applied afterwards.
pub fn gate_fidelity_open<T: Real>(
    segments: &[Segment<T>],
    target: &Operator<T>,
    correction: Option<&Operator<T>>,
) -> Result<T> {
    let d = target.dim();
    let n = n_qubits(d)?;
    for s in segments {
        if s.generator.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s.generator.dim() });
        }
    }
    if let Some(c) = correction {
        if c.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: c.dim() });
        }
    }
    let channel = if d * d <= EXACT_SUPEROPERATOR_ROWS {
        let mut p = CMatrix::<T>::identity(d * d, d * d);
        for s in segments {
            let sup = Operator::from_parts_unchecked(s.generator.superoperator(), vec![d * d]);
            p = matrix_exp(&sup, cr(s.duration))?.into_matrix() * p;
        }
        Some(p)
    } else {
        None
    };
    let total = segments.iter().fold(T::zero(), |acc, s| acc + s.duration);
    let inputs = axis_inputs::<T>(n)?;
    let fids: Vec<T> = inputs
        .par_iter()
        .map(|psi| {
            let rho0 = psi.to_density().into_operator().into_matrix();
            let mut rho = match &channel {
                Some(p) => unvectorize(&(p * vectorize(&rho0)), d),
                None if segments.is_empty() => rho0,
                None => propagate_raw(&rho0, segments, &[total], Method::Rk4, &StepOptions::default(), true)?
                    .pop()
                    .expect("one sample"),
            };
            if let Some(c) = correction {
                rho = c.matrix() * rho * c.matrix().adjoint();
            }
            let out = target.matrix() * psi.amplitudes();
            Ok(out.dotc(&(&rho * &out)).re)
        })
        .collect::<Result<Vec<T>>>()?;
    let sum = fids.iter().fold(T::zero(), |acc, &f| acc + f);
    Ok(sum / re::<T>(fids.len() as f64))
}

/// Outcome of [`universality_closure`].
#[derive(Clone, Debug, PartialEq)]
pub struct LieClosureResult {
    /// Real dimension of the spanned Lie algebra (traceless part).
    pub dimension: usize,
    /// Commutator rounds performed.
    pub generations: usize,
    /// Norm of each accepted element before normalization.
    pub basis_norms: Vec<f64>,
    /// True when a round added nothing new.
    pub closed: bool,
}

fn hs_real<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + (x.conj() * *y).re)
}

struct RealSpan<T: Real> {
    basis: Vec<CMatrix<T>>,
    norms: Vec<f64>,
    floor: T,
}

impl<T: Real> RealSpan<T> {
    /// Adds the traceless part of `x` if it is independent of the span.
    fn try_add(&mut self, x: CMatrix<T>) -> bool {
        let d = x.nrows();
        let mut x = x;
        let shift = x.trace() / cr(re::<T>(d as f64));
        for i in 0..d {
            x[(i, i)] -= shift;
        }
        let scale = hs_real(&x, &x).sqrt();
        if scale <= self.floor {
            return false;
        }
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for b in &self.basis {
                let c = hs_real(b, &x);
                x -= b * cr(c);
            }
        }
        let norm = hs_real(&x, &x).sqrt();
        if norm <= scale * re::<T>(CLOSURE_TOL) {
            return false;
        }
        self.norms.push(to_f64(norm));
        self.basis.push(x / cr(norm));
        true
    }
}

/// Real dimension of the Lie algebra generated by `i H_k` (reported on the
/// Hermitian side), built by repeated commutators `i[A, B]`.
pub fn universality_closure<T: Real>(generators: &[Operator<T>], max_generations: usize) -> Result<LieClosureResult> {
    let Some(first) = generators.first() else {
        return Ok(LieClosureResult { dimension: 0, generations: 0, basis_norms: vec![], closed: true });
    };
    let d = first.dim();
    for g in generators {
        if g.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.dim() });
        }
        if !g.is_hermitian(re::<T>(1e-10) * (T::one() + g.max_abs())) {
            return Err(Error::InvalidArgument("closure generators must be Hermitian".into()));
        }
    }
    let largest = generators.iter().fold(T::zero(), |acc, g| acc.max(g.norm()));
    let mut span = RealSpan { basis: Vec::new(), norms: Vec::new(), floor: largest * re::<T>(CLOSURE_TOL) };
    for g in generators {
        span.try_add(g.matrix().clone());
    }
    let full = d * d - 1;
    let i = imag_unit::<T>();
    let mut frontier: Vec<usize> = (0..span.basis.len()).collect();
    let mut generations = 0;
    let mut closed = false;
    while generations < max_generations && span.basis.len() < full {
        let known = span.basis.len();
        let mut added = Vec::new();
        for &a in &frontier {
            for b in 0..known {
                if a == b || (frontier.contains(&b) && b < a) {
                    continue;
                }
                let (x, y) = (&span.basis[a], &span.basis[b]);
                let comm = (x * y - y * x) * i;
                if span.try_add(comm) {
                    added.push(span.basis.len() - 1);
                }
            }
        }
        generations += 1;
        if added.is_empty() {
            closed = true;
            break;
        }
        frontier = added;
    }
    if span.basis.len() == full {
        closed = true;
    }
    Ok(LieClosureResult { dimension: span.basis.len(), generations, basis_norms: span.norms, closed })
}

/// The two control Hamiltonians of the effective model: `H1` (detunings
/// plus exchange) and `H2` (drive terms).
pub fn effective_generators<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Result<(Operator<T>, Operator<T>)> {
    let h1 = gate_hamiltonian(params)?;
    let h2 = single_qubit_hamiltonian(params, false, true)?.hermitian_part();
    Ok((h1, h2))
}

/// Two-qubit operations per decoherence time for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBudget<T: Real> {
    pub pair: (usize, usize),
    pub coupling: T,
    pub rate: T,
    /// `|lambda| / rate`; infinite when the rate vanishes.
    pub ops: T,
}

pub fn decoherence_budget<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E) -> Vec<PairBudget<T>> {
    let n = params.n_tls();
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let coupling = modulus(params.coupling(a, b));
            let rate = params.decoherence_rate(a).max(params.decoherence_rate(b));
            let ops = if rate == T::zero() { re::<T>(f64::INFINITY) } else { coupling / rate };
            out.push(PairBudget { pair: (a, b), coupling, rate, ops });
        }
    }
    out
}

/// Summary of an iSWAP on one pair in one regime.
#[derive(Clone, Debug, PartialEq)]
pub struct GateReport<T: Real> {
    pub target: String,
    pub regime: Regime,
    pub duration: T,
    /// Corrected effective unitary against iSWAP.
    pub fidelity_unitary: T,
    /// Same, with the induced Lindblad terms, state-averaged.
    pub fidelity_open: T,
    pub ops_budget: T,
}

pub fn iswap_report<T: Real, E: EffectiveModel<T> + ?Sized>(params: &E, pair: (usize, usize)) -> Result<GateReport<T>> {
    let sched = iswap_schedule(params, pair)?;
    let h = gate_hamiltonian(params)?;
    let target = iswap_target::<T>(params.n_tls(), pair)?;
    let corr = sched.correction(true)?;
    let u = matrix_exp(&h, -imag_unit::<T>() * sched.duration)?;
    let fidelity_unitary = gate_fidelity_unitary(&(&corr * &u), &target)?;
    let terms = crate::effective::build_effective_lindblad(params)?;
    let seg = Segment { generator: Liouvillian::new(h, terms)?, duration: sched.duration };
    let fidelity_open = gate_fidelity_open(&[seg], &target, Some(&corr))?;
    let budget = decoherence_budget(params)
        .into_iter()
        .find(|b| b.pair == (pair.0.min(pair.1), pair.0.max(pair.1)))
        .map(|b| b.ops)
        .unwrap_or_else(T::zero);
    Ok(GateReport {
        target: format!("iswap({},{})", params.labels()[pair.0], params.labels()[pair.1]),
        regime: params.regime(),
        duration: sched.duration,
        fidelity_unitary,
        fidelity_open,
        ops_budget: budget,
    })
}

/// Full-model (closed, `kappa = 0`) iSWAP fidelity on the cavity-vacuum
/// block, without and with the dispersive frame change at the gate edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FramedFidelity<T: Real> {
    pub unframed: T,
    pub framed: T,
}

pub fn full_model_iswap_fidelity<T: Real>(model: &SystemModel<T>, pair: (usize, usize)) -> Result<FramedFidelity<T>> {
    let mut closed = model.undriven();
    closed.resonator.kappa = T::zero();
    let params = dispersive_params(&closed)?;
    let sched = iswap_schedule(&params, pair)?;
    let h = build_hamiltonian(&closed)?;
    let u = matrix_exp(&h, -imag_unit::<T>() * sched.duration)?;
    let s = dispersive_unitary(&closed)?;
    let framed_u = &(&s * &u) * &s.adjoint();
    let n = closed.n_tls();
    let block = 1usize << n;
    let corr = sched.correction(true)?;
    let target = iswap_target::<T>(n, pair)?;
    let score = |op: &Operator<T>| {
        let m = op.matrix().view((0, 0), (block, block)).into_owned();
        overlap_fidelity(&(corr.matrix() * m), target.matrix())
    };
    Ok(FramedFidelity { unframed: score(&u), framed: score(&framed_u) })
}
