use crate::algebra::{max_abs, Operator};
use crate::error::{Error, Result};
use crate::model::LindbladTerm;
use crate::scalar::{cr, imag_unit, re, CMatrix, Real};

/// Generator of the master equation
/// `L[rho] = -i[H, rho] + sum_k r_k (c_k rho c_k^dag - {c_k^dag c_k, rho}/2)`.
///
/// [`Liouvillian::apply`] is matrix-free; [`Liouvillian::superoperator`]
/// materializes the column-stacked `d^2 x d^2` matrix.
#[derive(Clone, Debug)]
pub struct Liouvillian<T: Real> {
    hamiltonian: Operator<T>,
    terms: Vec<LindbladTerm<T>>,
    /// `H - (i/2) sum r c^dag c`.
    effective: CMatrix<T>,
    /// Nonzero-rate collapse operators pre-scaled by `sqrt(rate)`.
    jumps: Vec<CMatrix<T>>,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(hamiltonian: Operator<T>, terms: Vec<LindbladTerm<T>>) -> Result<Self> {
        let d = hamiltonian.dim();
        let mut effective = hamiltonian.matrix().clone();
        let mut jumps = Vec::new();
        let half_i = imag_unit::<T>() * re::<T>(0.5);
        for t in &terms {
            if t.collapse.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: t.collapse.dim() });
            }
            if t.rate == T::zero() {
                continue;
            }
            let c = t.collapse.matrix();
            effective -= (c.adjoint() * c) * (half_i * t.rate);
            jumps.push(c * cr(t.rate.sqrt()));
        }
        Ok(Self { hamiltonian, terms, effective, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn space(&self) -> &[usize] {
        self.hamiltonian.space()
    }

    pub fn hamiltonian(&self) -> &Operator<T> {
        &self.hamiltonian
    }

    pub fn terms(&self) -> &[LindbladTerm<T>] {
        &self.terms
    }

    /// Matrix-free action on an arbitrary (not necessarily Hermitian) matrix.
    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let i = imag_unit::<T>();
        let left = &self.effective * rho;
        let right = rho * self.effective.adjoint();
        let mut out = (left - right) * (-i);
        for c in &self.jumps {
            out += c * rho * c.adjoint();
        }
        out
    }

    /// Column-stacked superoperator: `vec(L[rho]) = S vec(rho)`.
    pub fn superoperator(&self) -> CMatrix<T> {
        let d = self.dim();
        let id = CMatrix::<T>::identity(d, d);
        let i = imag_unit::<T>();
        // vec(A X B) = (B^T (x) A) vec(X)
        let mut s = id.kronecker(&self.effective) * (-i);
        s += self.effective.adjoint().transpose().kronecker(&id) * i;
        for c in &self.jumps {
            s += c.conjugate().kronecker(c);
        }
        s
    }

    /// Upper bound on the magnitude of the generator's eigenvalues: spread of
    /// the Hamiltonian spectrum plus the dissipative strengths.
    pub fn rate_scale(&self) -> T {
        let ev = self.hamiltonian.hermitian_eigenvalues();
        let spread = ev[ev.len() - 1] - ev[0];
        let diss = self.terms.iter().fold(T::zero(), |acc, t| {
            if t.rate == T::zero() {
                return acc;
            }
            let c = t.collapse.matrix();
            let ctc = Operator::from_parts_unchecked(c.adjoint() * c, t.collapse.space().to_vec());
            acc + t.rate * ctc.hermitian_spectral_norm()
        });
        spread + diss
    }

    /// Largest `|Tr L[E_ij]|` over the matrix-unit basis; zero for a valid
    /// generator.
    pub fn trace_defect(&self) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::<T>::zeros(d, d);
                e[(i, j)] = cr(T::one());
                let t = self.apply(&e).trace();
                worst = worst.max((t.re * t.re + t.im * t.im).sqrt());
            }
        }
        worst
    }

    /// Largest absolute entry of the superoperator, used as `||L||`.
    pub fn norm_estimate(&self) -> T {
        max_abs(&self.superoperator())
    }
}
