//! RF-SQUID junction resonator: flux-dependent frequency and TLS coupling.
//!
//! Parameters are in reduced phase units. Energies are angular frequencies
//! (rad/us): `E_L = (hbar/2e)^2 / (L hbar)` and `E_C = e^2 / (2 C_0 hbar)`, and
//! phases are dimensionless, `phi = 2 e Phi / hbar`. In these units the
//! potential is `U(phi) = -E_J cos(phi) + E_L (phi + phi_ex)^2 / 2`.

use crate::error::{Error, Result};
use crate::scalar::{re, to_f64, Real};

/// Junction/loop parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitParams<T: Real> {
    pub e_j: T,
    pub e_l: T,
    pub e_c: T,
    /// External phase `2 e Phi_ex / hbar`.
    pub phi_ex: T,
}

/// Component of a TLS polarization along the junction phase coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlsPolarization<T: Real> {
    pub j_x: T,
}

impl<T: Real> TlsPolarization<T> {
    pub fn new(j_x: T) -> Result<Self> {
        if !j_x.is_finite() || j_x.abs() > T::one() {
            return Err(Error::InvalidArgument(format!("|j_x| = {j_x} exceeds 1")));
        }
        Ok(Self { j_x })
    }
}

impl<T: Real> CircuitParams<T> {
    pub fn new(e_j: T, e_l: T, e_c: T, phi_ex: T) -> Result<Self> {
        let p = Self { e_j, e_l, e_c, phi_ex };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.e_j, self.e_l, self.e_c]
            .iter()
            .all(|x| x.is_finite() && *x > T::zero());
        if !ok || !self.phi_ex.is_finite() {
            return Err(Error::DegenerateCircuit(format!(
                "energies must be positive and finite (E_J={}, E_L={}, E_C={}, phi_ex={})",
                self.e_j, self.e_l, self.e_c, self.phi_ex
            )));
        }
        Ok(())
    }

    /// `dU/dphi`.
    fn force(&self, phi: T) -> T {
        self.e_l * (phi + self.phi_ex) + self.e_j * phi.sin()
    }

    /// `d^2U/dphi^2`, the curvature that sets the oscillator frequency.
    fn curvature(&self, phi: T) -> T {
        self.e_l + self.e_j * phi.cos()
    }
}

const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 100;

/// Equilibrium phase `phi_s`: the local minimum of the potential closest to
/// the bare-inductor position `-phi_ex`.
pub fn solve_phase_shift<T: Real>(circuit: &CircuitParams<T>) -> Result<T> {
    circuit.validate()?;
    let center = -circuit.phi_ex;
    // Every stationary point satisfies |phi + phi_ex| <= E_J / E_L.
    let reach = circuit.e_j / circuit.e_l;

    if circuit.e_l > circuit.e_j {
        // Force is strictly increasing: exactly one root.
        if let Some(phi) = newton(circuit, center, center - reach, center + reach) {
            return Ok(phi);
        }
        return bisect(circuit, center - reach, center + reach);
    }

    // Multistable: scan the admissible window for sign changes and keep the
    // stable root nearest the center.
    let samples = 64 + (to_f64(reach) * 64.0).ceil() as usize;
    let lo = center - reach;
    let step = (reach + reach) / re::<T>(samples as f64);
    let mut best: Option<T> = None;
    let mut prev_phi = lo;
    let mut prev_f = circuit.force(lo);
    for k in 1..=samples {
        let phi = lo + step * re::<T>(k as f64);
        let f = circuit.force(phi);
        if prev_f < T::zero() && f >= T::zero() {
            // Upward crossing: a minimum.
            let root = bisect(circuit, prev_phi, phi)?;
            if circuit.curvature(root) > T::zero() {
                let better = match best {
                    Some(b) => (root - center).abs() < (b - center).abs(),
                    None => true,
                };
                if better {
                    best = Some(root);
                }
            }
        }
        prev_phi = phi;
        prev_f = f;
    }
    best.ok_or_else(|| {
        Error::DegenerateCircuit("no stable minimum with E_L + E_J cos(phi_s) > 0".into())
    })
}

fn newton<T: Real>(c: &CircuitParams<T>, start: T, lo: T, hi: T) -> Option<T> {
    let tol = re::<T>(NEWTON_TOL);
    let mut phi = start;
    for _ in 0..MAX_NEWTON {
        let f = c.force(phi);
        let df = c.curvature(phi);
        if df <= T::zero() {
            return None;
        }
        let next = phi - f / df;
        if next < lo - tol || next > hi + tol || !next.is_finite() {
            return None;
        }
        if (next - phi).abs() <= tol {
            return Some(next);
        }
        phi = next;
    }
    None
}

fn bisect<T: Real>(c: &CircuitParams<T>, mut lo: T, mut hi: T) -> Result<T> {
    let mut f_lo = c.force(lo);
    let f_hi = c.force(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return Err(Error::DegenerateCircuit("phase equation has no bracketed root".into()));
    }
    let tol = re::<T>(NEWTON_TOL);
    for _ in 0..200 {
        let mid = (lo + hi) * re::<T>(0.5);
        let f_mid = c.force(mid);
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= tol {
            break;
        }
    }
    Ok((lo + hi) * re::<T>(0.5))
}

fn stable_phase<T: Real>(circuit: &CircuitParams<T>) -> Result<T> {
    let phi_s = solve_phase_shift(circuit)?;
    if circuit.curvature(phi_s) <= T::zero() {
        return Err(Error::DegenerateCircuit(format!("unstable phase shift {phi_s}")));
    }
    Ok(phi_s)
}

/// Small-oscillation frequency `sqrt(8 E_C (E_L + E_J cos phi_s))`.
pub fn resonator_frequency<T: Real>(circuit: &CircuitParams<T>) -> Result<T> {
    let phi_s = stable_phase(circuit)?;
    Ok((re::<T>(8.0) * circuit.e_c * circuit.curvature(phi_s)).sqrt())
}

/// TLS-resonator coupling `E_J j_x sin(phi_s) sqrt(4 E_C / omega_c)`.
pub fn coupling_constant<T: Real>(circuit: &CircuitParams<T>, pol: &TlsPolarization<T>) -> Result<T> {
    let phi_s = stable_phase(circuit)?;
    let omega_c = (re::<T>(8.0) * circuit.e_c * circuit.curvature(phi_s)).sqrt();
    let phi_zpf = (re::<T>(4.0) * circuit.e_c / omega_c).sqrt();
    Ok(circuit.e_j * pol.j_x * phi_s.sin() * phi_zpf)
}
