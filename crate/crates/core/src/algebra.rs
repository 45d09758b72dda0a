//! Dense complex operator algebra on tensor-product Hilbert spaces.
//!
//! Every operator carries a `space` tag: the ordered list of subsystem
//! dimensions whose product is the matrix dimension. Slot 0 is always the
//! resonator, slots `1..=N` are the TLS's in roster order, and Kronecker
//! products place slot 0 in the most significant position.
//!
//! For a single two-level system the basis is `[|e>, |g>]`, so that
//! `sigma_z = diag(1, -1)` and `sigma_+ = |e><g|`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cr, imag_unit, modulus, re, tol, CMatrix, CVector, Real, C};

/// Dense operator on a tagged tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Real> {
    matrix: CMatrix<T>,
    space: Vec<usize>,
}

impl<T: Real> Operator<T> {
    /// Wraps a square matrix, checking the space tag and finiteness.
    pub fn new(matrix: CMatrix<T>, space: Vec<usize>) -> Result<Self> {
        check_space(&space)?;
        let dim: usize = space.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("operator".into()));
        }
        Ok(Self { matrix, space })
    }

    /// Single-subsystem operator (space tag `[dim]`).
    pub fn from_matrix(matrix: CMatrix<T>) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    pub(crate) fn from_parts_unchecked(matrix: CMatrix<T>, space: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), space.iter().product::<usize>());
        Self { matrix, space }
    }

    pub fn identity(space: &[usize]) -> Self {
        let d = space.iter().product();
        Self { matrix: CMatrix::identity(d, d), space: space.to_vec() }
    }

    pub fn zeros(space: &[usize]) -> Self {
        let d = space.iter().product();
        Self { matrix: CMatrix::zeros(d, d), space: space.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn space(&self) -> &[usize] {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), space: self.space.clone() }
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        Self { matrix: &self.matrix * factor, space: self.space.clone() }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(cr(factor))
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }

    /// Largest elementwise `|A - A^dagger|`.
    pub fn hermitian_deviation(&self) -> T {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn is_hermitian(&self, tolerance: T) -> bool {
        self.hermitian_deviation() <= tolerance
    }

    /// Largest elementwise `|U^dagger U - 1|`.
    pub fn unitarity_deviation(&self) -> T {
        let d = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - CMatrix::<T>::identity(d, d)))
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = cr(re::<T>(0.5));
        Self {
            matrix: (&self.matrix + self.matrix.adjoint()) * half,
            space: self.space.clone(),
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            space: self.space.clone(),
        })
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix + &other.matrix * &self.matrix,
            space: self.space.clone(),
        })
    }

    /// Kronecker product; the result's space tag is the concatenation.
    pub fn kron(&self, other: &Self) -> Self {
        let mut space = self.space.clone();
        space.extend_from_slice(&other.space);
        Self { matrix: self.matrix.kronecker(&other.matrix), space }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.matrix.norm()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        max_abs(&self.matrix)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = self.hermitian_part().matrix.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Spectral norm of a Hermitian operator.
    pub fn hermitian_spectral_norm(&self) -> T {
        self.hermitian_eigenvalues()
            .into_iter()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    /// Returns a copy with a different (compatible) space tag.
    pub fn with_space(&self, space: Vec<usize>) -> Result<Self> {
        Self::new(self.matrix.clone(), space)
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { matrix: &self.matrix + &rhs.matrix, space: self.space.clone() }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { matrix: &self.matrix - &rhs.matrix, space: self.space.clone() }
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { matrix: &self.matrix * &rhs.matrix, space: self.space.clone() }
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator { matrix: -&self.matrix, space: self.space.clone() }
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct Density<T: Real> {
    op: Operator<T>,
}

/// Tolerances enforced by [`Density::new`], in double precision.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

impl<T: Real> Density<T> {
    pub fn new(op: Operator<T>) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev > tol(HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev})")));
        }
        let tr = op.trace();
        if modulus(tr - cr(T::one())) > tol(TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_ev = op.hermitian_eigenvalues()[0];
        if min_ev < -tol::<T>(POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev}")));
        }
        Ok(Self { op })
    }

    pub(crate) fn new_unchecked(op: Operator<T>) -> Self {
        Self { op }
    }

    /// `|psi><psi|`.
    pub fn from_pure(state: &PureState<T>) -> Self {
        let v = &state.amplitudes;
        Self { op: Operator::from_parts_unchecked(v * v.adjoint(), state.space.clone()) }
    }

    /// Computational basis projector `|k><k|`.
    pub fn basis(space: &[usize], index: usize) -> Result<Self> {
        Ok(Self::from_pure(&PureState::basis(space, index)?))
    }

    /// Tensor product of density matrices in slot order.
    pub fn product(parts: &[Density<T>]) -> Result<Self> {
        let mut iter = parts.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let op = iter.fold(first.op.clone(), |acc, p| acc.kron(&p.op));
        Ok(Self { op })
    }

    pub fn as_operator(&self) -> &Operator<T> {
        &self.op
    }

    pub fn into_operator(self) -> Operator<T> {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn space(&self) -> &[usize] {
        self.op.space()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.op.matrix()
    }

    pub fn trace(&self) -> C<T> {
        self.op.trace()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.op.hermitian_eigenvalues()[0]
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> T {
        (self.matrix() * self.matrix()).trace().re
    }
}

/// Normalized state vector on a tagged space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    amplitudes: CVector<T>,
    space: Vec<usize>,
}

impl<T: Real> PureState<T> {
    pub fn new(amplitudes: CVector<T>, space: Vec<usize>) -> Result<Self> {
        check_space(&space)?;
        let dim: usize = space.iter().product();
        same_dim(dim, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > tol(1e-12) {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, space })
    }

    /// Normalizes `amplitudes` before wrapping.
    pub fn normalized(amplitudes: CVector<T>, space: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= T::zero() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.unscale(norm), space)
    }

    pub fn basis(space: &[usize], index: usize) -> Result<Self> {
        check_space(space)?;
        let dim: usize = space.iter().product();
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = cr(T::one());
        Ok(Self { amplitudes: v, space: space.to_vec() })
    }

    /// Tensor product in slot order.
    pub fn product(parts: &[PureState<T>]) -> Result<Self> {
        let mut iter = parts.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let mut amps = first.amplitudes.clone();
        let mut space = first.space.clone();
        for p in iter {
            amps = amps.kronecker(&p.amplitudes);
            space.extend_from_slice(&p.space);
        }
        Ok(Self { amplitudes: amps, space })
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn space(&self) -> &[usize] {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn to_density(&self) -> Density<T> {
        Density::from_pure(self)
    }

    /// Applies an operator and renormalizes (used for unitaries).
    pub fn evolved(&self, op: &Operator<T>) -> Result<Self> {
        same_dim(self.dim(), op.dim())?;
        Self::normalized(op.matrix() * &self.amplitudes, self.space.clone())
    }
}

/// Single-qubit states used for inputs and tests, in the `[|e>, |g>]` basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxisState {
    Excited,
    Ground,
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl AxisState {
    pub const ALL: [AxisState; 6] = [
        AxisState::Excited,
        AxisState::Ground,
        AxisState::PlusX,
        AxisState::MinusX,
        AxisState::PlusY,
        AxisState::MinusY,
    ];

    pub fn state<T: Real>(self) -> PureState<T> {
        let h = re::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let (e, g) = match self {
            AxisState::Excited => (cr(T::one()), cr(T::zero())),
            AxisState::Ground => (cr(T::zero()), cr(T::one())),
            AxisState::PlusX => (cr(h), cr(h)),
            AxisState::MinusX => (cr(h), cr(-h)),
            AxisState::PlusY => (cr(h), imag_unit::<T>() * h),
            AxisState::MinusY => (cr(h), -imag_unit::<T>() * h),
        };
        PureState { amplitudes: CVector::from_vec(vec![e, g]), space: vec![2] }
    }
}

/// Which single-qubit operator [`pauli`] returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

fn check_space(space: &[usize]) -> Result<()> {
    if space.is_empty() || space.contains(&0) {
        return Err(Error::InvalidDimension(format!("bad space tag {space:?}")));
    }
    Ok(())
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn is_finite<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z)))
}

/// Resonator annihilation operator truncated to `fock_dim` levels.
pub fn annihilation<T: Real>(fock_dim: usize) -> Result<Operator<T>> {
    if fock_dim < 2 {
        return Err(Error::InvalidDimension(format!("fock_dim {fock_dim} < 2")));
    }
    let mut m = CMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        m[(n - 1, n)] = cr(re::<T>(n as f64).sqrt());
    }
    Ok(Operator { matrix: m, space: vec![fock_dim] })
}

pub fn creation<T: Real>(fock_dim: usize) -> Result<Operator<T>> {
    Ok(annihilation::<T>(fock_dim)?.adjoint())
}

/// `a^dagger a`, built diagonal so it is exact at every level.
pub fn number<T: Real>(fock_dim: usize) -> Result<Operator<T>> {
    if fock_dim < 2 {
        return Err(Error::InvalidDimension(format!("fock_dim {fock_dim} < 2")));
    }
    let diag = CVector::from_fn(fock_dim, |n, _| cr(re::<T>(n as f64)));
    Ok(Operator { matrix: CMatrix::from_diagonal(&diag), space: vec![fock_dim] })
}

pub fn pauli<T: Real>(which: Pauli) -> Operator<T> {
    let o = cr(T::zero());
    let l = cr(T::one());
    let i = imag_unit::<T>();
    // Row-major literal.
    let entries = match which {
        Pauli::X => [o, l, l, o],
        Pauli::Y => [o, -i, i, o],
        Pauli::Z => [l, o, o, -l],
        Pauli::Plus => [o, l, o, o],
        Pauli::Minus => [o, o, l, o],
    };
    Operator { matrix: CMatrix::from_row_slice(2, 2, &entries), space: vec![2] }
}

/// Places a single-subsystem operator into `slot` of `space`.
pub fn embed<T: Real>(op: &Operator<T>, slot: usize, space: &[usize]) -> Result<Operator<T>> {
    check_space(space)?;
    if slot >= space.len() {
        return Err(Error::InvalidArgument(format!("slot {slot} outside space {space:?}")));
    }
    same_dim(space[slot], op.dim())?;
    let before: usize = space[..slot].iter().product();
    let after: usize = space[slot + 1..].iter().product();
    let left = CMatrix::<T>::identity(before, before);
    let right = CMatrix::<T>::identity(after, after);
    let m = left.kronecker(&op.matrix).kronecker(&right);
    Ok(Operator { matrix: m, space: space.to_vec() })
}

/// `Tr(a b)` without forming the product.
pub fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> C<T> {
    let d = a.nrows();
    let mut acc = cr(T::zero());
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Tr(rho op)`.
pub fn expectation<T: Real>(state: &Density<T>, op: &Operator<T>) -> Result<C<T>> {
    same_dim(state.dim(), op.dim())?;
    Ok(trace_product(state.matrix(), op.matrix()))
}

/// `<psi|op|psi>`.
pub fn expectation_pure<T: Real>(state: &PureState<T>, op: &Operator<T>) -> Result<C<T>> {
    same_dim(state.dim(), op.dim())?;
    Ok(state.amplitudes.dotc(&(op.matrix() * &state.amplitudes)))
}

/// Reduced operator on the `keep` slots (sorted, order preserved).
pub fn partial_trace_operator<T: Real>(op: &Operator<T>, keep: &[usize]) -> Result<Operator<T>> {
    let space = op.space();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace needs a nonempty keep set".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&s| s >= space.len()) {
        return Err(Error::InvalidArgument(format!("keep set {keep:?} outside space {space:?}")));
    }
    let traced: Vec<usize> = (0..space.len()).filter(|s| !keep.contains(s)).collect();
    let kept_space: Vec<usize> = keep.iter().map(|&s| space[s]).collect();
    let dk: usize = kept_space.iter().product();
    let dr: usize = traced.iter().map(|&s| space[s]).product();

    // Strides of each slot in the full row-major multi-index.
    let mut stride = vec![1usize; space.len()];
    for s in (0..space.len().saturating_sub(1)).rev() {
        stride[s] = stride[s + 1] * space[s + 1];
    }
    let offset = |index: usize, slots: &[usize]| -> usize {
        let mut rem = index;
        let mut off = 0;
        for &s in slots.iter().rev() {
            off += (rem % space[s]) * stride[s];
            rem /= space[s];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|k| offset(k, &keep)).collect();
    let traced_off: Vec<usize> = (0..dr).map(|r| offset(r, &traced)).collect();

    let m = op.matrix();
    let mut out = CMatrix::zeros(dk, dk);
    for (i, &ki) in kept_off.iter().enumerate() {
        for (j, &kj) in kept_off.iter().enumerate() {
            let mut acc = cr(T::zero());
            for &r in &traced_off {
                acc += m[(ki + r, kj + r)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(Operator { matrix: out, space: kept_space })
}

/// Reduced density matrix on the `keep` slots.
pub fn partial_trace<T: Real>(state: &Density<T>, keep: &[usize]) -> Result<Density<T>> {
    Ok(Density::new_unchecked(partial_trace_operator(state.as_operator(), keep)?))
}

/// `exp(scale * op)` by Pade scaling-and-squaring.
pub fn matrix_exp<T: Real>(op: &Operator<T>, scale: C<T>) -> Result<Operator<T>> {
    let scaled = op.matrix() * scale;
    if !is_finite(&scaled) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let m = scaled.exp();
    if !is_finite(&m) {
        return Err(Error::NonFinite("matrix exponential overflowed".into()));
    }
    Ok(Operator { matrix: m, space: op.space.clone() })
}

/// Trace distance `||a - b||_1 / 2` between two Hermitian operators.
pub fn trace_distance<T: Real>(a: &Density<T>, b: &Density<T>) -> Result<T> {
    same_dim(a.dim(), b.dim())?;
    let diff = a.as_operator() - b.as_operator();
    let sum = diff
        .hermitian_eigenvalues()
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x.abs());
    Ok(sum * re::<T>(0.5))
}

/// Uniformly random-ish Hermitian matrix from a caller-supplied entry source,
/// used by property tests.
pub fn hermitian_from_entries<T: Real>(dim: usize, mut entry: impl FnMut() -> (f64, f64)) -> CMatrix<T> {
    let mut m = CMatrix::<T>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let (a, b) = entry();
            if i == j {
                m[(i, i)] = cr(re(a));
            } else {
                let z = Complex::new(re::<T>(a), re::<T>(b));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    m
}

/// Column-stacked vectorization.
pub(crate) fn vectorize<T: Real>(m: &CMatrix<T>) -> CVector<T> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize<T: Real>(v: &CVector<T>, dim: usize) -> CMatrix<T> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}
