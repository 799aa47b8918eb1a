//! Trajectory metrics on the reduced two-qubit state: concurrence, overlap
//! fidelity against the free evolution, and base-2 von Neumann entropy.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{
    eigh, kron, sigma_y, spectral_map, trace, CMatrix, DensityMatrix, StateVector,
};
use crate::model::{free_qubit_energies, ModelParams};
use crate::scalar::{r, Scalar};
use crate::states::{bell_state, BellKind};

/// Metrics of one trajectory sample, all clipped into their closed ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample<T: Scalar> {
    /// Dimensionless time ωt.
    pub omega_t: T,
    /// Wootters concurrence in [0, 1].
    pub concurrence: T,
    /// Overlap fidelity Tr[ρ_ideal ρ_S] in [0, 1].
    pub fidelity: T,
    /// Entropy exchange in bits, [0, 2].
    pub entropy: T,
}

fn expect_two_qubits<T: Scalar>(rho: &DensityMatrix<T>) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!(
            "two-qubit metric on a {}-dim state",
            rho.dim()
        )));
    }
    Ok(())
}

fn clamp_metric<T: Scalar>(x: T, hi: T) -> T {
    debug_assert!(
        x > -r::<T>(1e-9) && x < hi + r::<T>(1e-9),
        "metric value outside its range beyond clipping tolerance"
    );
    x.max(T::zero()).min(hi)
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// λ_i are the square roots of the eigenvalues of ρ (σ^y⊗σ^y) ρ* (σ^y⊗σ^y)
/// in decreasing order and C = max{λ_1 − λ_2 − λ_3 − λ_4, 0}. Computed from
/// the Hermitian similar form √ρ ρ̃ √ρ, which shares the spectrum but keeps
/// the eigenproblem well behaved.
pub fn concurrence<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    expect_two_qubits(rho)?;
    let (vals, vecs) = eigh(rho.mat())?;
    let sqrt_rho = spectral_map(&vals, &vecs, |l| {
        Complex::new(l.max(T::zero()).sqrt(), T::zero())
    });
    let yy = kron(&sigma_y::<T>(), &sigma_y::<T>());
    let conj = rho.mat().mapv(|x| x.conj());
    let rho_tilde = yy.dot(&conj).dot(&yy);
    let m = sqrt_rho.dot(&rho_tilde).dot(&sqrt_rho);
    let (mvals, _) = eigh(&m)?;
    let mut lambdas: Vec<T> = mvals.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).expect("non-NaN"));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(clamp_metric(c.max(T::zero()), T::one()))
}

/// Free evolution of the chosen Bell state under H_S alone:
/// ρ_ideal(t) = e^{−iH_S t}|ψ(0)⟩⟨ψ(0)|e^{+iH_S t}. `t` is ordinary time,
/// not ωt; H_S is diagonal so the phases are exact.
pub fn ideal_evolution<T: Scalar>(
    kind: BellKind,
    p: &ModelParams<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    p.validate()?;
    let energies = free_qubit_energies(p);
    let psi0 = bell_state::<T>(kind);
    let mut amps = psi0.into_amplitudes();
    for (i, a) in amps.iter_mut().enumerate() {
        let phase = Complex::new(T::zero(), -energies[i] * t).exp();
        *a *= phase;
    }
    Ok(StateVector::from_amplitudes(amps).to_density())
}

/// Overlap fidelity F = Tr[ρ_ideal ρ_S].
///
/// This is the quantity as defined, not the Uhlmann fidelity; the two differ
/// for mixed states. It reaches 1 only when ρ_S equals a pure ρ_ideal.
pub fn fidelity<T: Scalar>(rho_s: &DensityMatrix<T>, rho_ideal: &DensityMatrix<T>) -> Result<T> {
    expect_two_qubits(rho_s)?;
    expect_two_qubits(rho_ideal)?;
    let product = rho_ideal.mat().dot(rho_s.mat());
    let tr = trace(&product);
    debug_assert!(tr.im.abs() < r::<T>(1e-9), "fidelity trace picked up an imaginary part");
    Ok(clamp_metric(tr.re, T::one()))
}

/// Entropy exchange En = −Tr(ρ_S log₂ ρ_S) in bits, at most log₂ 4 = 2.
///
/// Eigenvalues at or below zero contribute nothing; an eigenvalue under
/// −1e-6 signals an upstream positivity failure and is rejected.
pub fn entropy_exchange<T: Scalar>(rho_s: &DensityMatrix<T>) -> Result<T> {
    expect_two_qubits(rho_s)?;
    let (vals, _) = eigh(rho_s.mat())?;
    let bound = r::<T>(1e-6);
    let mut acc = T::zero();
    for &l in vals.iter() {
        if l < -bound {
            return Err(Error::Positivity {
                min_eig: l.to_f64().unwrap_or(f64::NAN),
                bound: 1e-6,
            });
        }
        if l > T::zero() {
            acc -= l * l.log2();
        }
    }
    Ok(clamp_metric(acc, r(2.0)))
}

/// All three metrics of a reduced state at dimensionless time ωt.
pub fn evaluate<T: Scalar>(
    kind: BellKind,
    p: &ModelParams<T>,
    omega_t: T,
    rho_s: &DensityMatrix<T>,
) -> Result<MetricSample<T>> {
    let t = omega_t / p.time_unit();
    let ideal = ideal_evolution(kind, p, t)?;
    Ok(MetricSample {
        omega_t,
        concurrence: concurrence(rho_s)?,
        fidelity: fidelity(rho_s, &ideal)?,
        entropy: entropy_exchange(rho_s)?,
    })
}

/// Partial transpose over the second qubit, the exact separability witness
/// for two qubits (kept as a cross-check oracle, not a primary metric).
pub fn partial_transpose<T: Scalar>(rho: &DensityMatrix<T>) -> Result<CMatrix<T>> {
    expect_two_qubits(rho)?;
    let m = rho.mat();
    let mut out = CMatrix::zeros((4, 4));
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                for bp in 0..2 {
                    out[[a * 2 + b, ap * 2 + bp]] = m[[a * 2 + bp, ap * 2 + b]];
                }
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of the partial transpose; negative iff entangled.
pub fn min_ppt_eigenvalue<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    let pt = partial_transpose(rho)?;
    let (vals, _) = eigh(&pt)?;
    Ok(vals[0])
}

/// Werner state p·|Φ+⟩⟨Φ+| + (1−p)·I/4, handy in tests and verification.
pub fn werner_state<T: Scalar>(p_mix: T) -> DensityMatrix<T> {
    let bell = bell_state::<T>(BellKind::PhiPlus).to_density();
    let quarter = (T::one() - p_mix) / r(4.0);
    let mut m = bell.mat().mapv(|x| x * Complex::new(p_mix, T::zero()));
    for i in 0..4 {
        m[[i, i]] += Complex::new(quarter, T::zero());
    }
    DensityMatrix::trusted(m)
}
