//! Initial states: Bell pairs for the qubits, vacuum or thermal states for
//! the cavities.
//!
//! A truncated thermal state is handled as a weighted sum over Fock states,
//! ρ_b = Σ_m w_m |m⟩⟨m| with w_m = e^{−E_m/T}/Z, the partition function taken
//! over the truncated space so weights and retained vectors stay mutually
//! consistent. Joint terms below a cutoff weight are dropped and the rest
//! renormalized, which bounds the number of pure product states the closed
//! evolution has to push around.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{kron, CMatrix, CVector, DensityMatrix, SpaceLayout, StateVector};
use crate::model::ModelParams;
use crate::scalar::{r, Scalar};

/// Default cutoff on joint thermal weights before renormalization.
pub const DEFAULT_CUTOFF_WEIGHT: f64 = 1e-8;

/// The two Bell states used as initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    /// (|00⟩ + |11⟩)/√2
    #[serde(rename = "phi+", alias = "phi_plus")]
    PhiPlus,
    /// (|01⟩ + |10⟩)/√2
    #[serde(rename = "psi+", alias = "psi_plus")]
    PsiPlus,
}

impl BellKind {
    pub fn label(&self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PsiPlus => "psi+",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phi_plus" | "phiplus" => Ok(BellKind::PhiPlus),
            "psi+" | "psi_plus" | "psiplus" => Ok(BellKind::PsiPlus),
            other => Err(Error::Config(format!("unknown Bell state `{other}`"))),
        }
    }
}

/// Bath preparation of the two cavities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bath {
    Vacuum,
    /// Thermal equilibrium at the model's temperature.
    Thermal,
}

/// Normalized 4-vector of the chosen Bell state over |00⟩,|01⟩,|10⟩,|11⟩.
pub fn bell_state<T: Scalar>(kind: BellKind) -> StateVector<T> {
    let s = Complex::new(T::one() / r::<T>(2.0).sqrt(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let amps = match kind {
        BellKind::PhiPlus => [s, zero, zero, s],
        BellKind::PsiPlus => [zero, s, s, zero],
    };
    StateVector::from_amplitudes(CVector::from_iter(amps))
}

/// One retained eigenvector of the joint thermal bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalTerm<T: Scalar> {
    /// Fock occupations (m, n) of mode 1 and mode 2.
    pub occupations: (usize, usize),
    /// Renormalized weight in (0, 1].
    pub weight: T,
    /// Bath energy E_m1 + E_n2.
    pub energy: T,
}

/// Raw Gibbs weights of one truncated mode, w_m = e^{−E_m/T}/Z with
/// E_m = (1+ε_j)ω_j·m and Z summed over the truncated space.
pub fn single_mode_weights<T: Scalar>(p: &ModelParams<T>, j: usize) -> Result<Vec<T>> {
    p.validate()?;
    let n = p.n_max;
    if p.temperature == T::zero() {
        let mut w = vec![T::zero(); n];
        w[0] = T::one();
        return Ok(w);
    }
    let freq = p.mode_frequency(j);
    let mut w: Vec<T> = (0..n)
        .map(|m| (-freq * r::<T>(m as f64) / p.temperature).exp())
        .collect();
    let z: T = w.iter().copied().sum();
    for x in &mut w {
        *x = *x / z;
    }
    Ok(w)
}

/// Joint thermal decomposition: terms with weight ≥ `cutoff_weight`,
/// renormalized to sum to one, ordered by (m, n).
pub fn thermal_terms<T: Scalar>(
    p: &ModelParams<T>,
    cutoff_weight: T,
) -> Result<Vec<ThermalTerm<T>>> {
    p.validate()?;
    if p.temperature == T::zero() {
        return Ok(vec![ThermalTerm { occupations: (0, 0), weight: T::one(), energy: T::zero() }]);
    }
    let w1 = single_mode_weights(p, 0)?;
    let w2 = single_mode_weights(p, 1)?;
    let f1 = p.mode_frequency(0);
    let f2 = p.mode_frequency(1);
    let mut terms = Vec::new();
    let mut total = T::zero();
    for (m, &wm) in w1.iter().enumerate() {
        for (n, &wn) in w2.iter().enumerate() {
            let w = wm * wn;
            if w >= cutoff_weight {
                let energy = f1 * r::<T>(m as f64) + f2 * r::<T>(n as f64);
                terms.push(ThermalTerm { occupations: (m, n), weight: w, energy });
                total += w;
            }
        }
    }
    if terms.is_empty() || total <= T::zero() {
        return Err(Error::Parameter(format!(
            "thermal cutoff weight {cutoff_weight:e} discards every term"
        )));
    }
    for t in &mut terms {
        t.weight = t.weight / total;
    }
    Ok(terms)
}

/// Smallest cutoff N whose discarded single-mode Boltzmann tail stays below
/// `tail_bound`; returns `min_n` when temperature is zero or the bound is
/// already met there.
pub fn recommended_n_max<T: Scalar>(
    mode_frequency: T,
    temperature: T,
    tail_bound: T,
    min_n: usize,
) -> usize {
    if temperature <= T::zero() {
        return min_n;
    }
    let q = (-mode_frequency / temperature).exp();
    if q <= T::zero() {
        return min_n;
    }
    // geometric tail: P(m >= N) = q^N < bound
    let n = (tail_bound.ln() / q.ln()).ceil();
    let n = n.to_f64().unwrap_or(f64::INFINITY).max(min_n as f64);
    n.min(1e6) as usize
}

/// Full-space initial density matrix ρ(0) = ρ_Bell ⊗ ρ_b1 ⊗ ρ_b2.
///
/// The bath factors are diagonal (vacuum projectors or truncated Gibbs
/// mixtures), so positivity holds by construction.
pub fn initial_density<T: Scalar>(
    kind: BellKind,
    bath: Bath,
    p: &ModelParams<T>,
    layout: &SpaceLayout,
) -> Result<DensityMatrix<T>> {
    p.validate()?;
    if layout.mode_dim() != p.n_max {
        return Err(Error::Dimension(format!(
            "layout mode dim {} does not match n_max {}",
            layout.mode_dim(),
            p.n_max
        )));
    }
    let bell_rho = bell_state::<T>(kind).to_density();
    let weights = |j: usize| -> Result<Vec<T>> {
        match bath {
            Bath::Vacuum => {
                let mut w = vec![T::zero(); p.n_max];
                w[0] = T::one();
                Ok(w)
            }
            Bath::Thermal => single_mode_weights(p, j),
        }
    };
    let d1 = diag_from_weights::<T>(&weights(0)?);
    let d2 = diag_from_weights::<T>(&weights(1)?);
    let full = kron(&kron(bell_rho.mat(), &d1), &d2);
    Ok(DensityMatrix::trusted(full))
}

fn diag_from_weights<T: Scalar>(w: &[T]) -> CMatrix<T> {
    let n = w.len();
    let mut m = CMatrix::zeros((n, n));
    for (k, &wk) in w.iter().enumerate() {
        m[[k, k]] = Complex::new(wk, T::zero());
    }
    m
}
