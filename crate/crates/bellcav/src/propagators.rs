//! Time evolution engines.
//!
//! Closed (γ = 0) dynamics run through either the Laguerre-series propagator
//! or exact diagonalization. Since H = H₁ + H₂ on disjoint factors, the
//! production path evolves each (qubit, mode) subsystem on its own 2N-dim
//! space and recombines reduced states from per-subsystem contractions; the
//! joint-space path [`evolve_closed_full`] exists as an independent
//! cross-check at small cutoffs.
//!
//! Leaky-cavity (γ > 0) dynamics integrate the Lindblad equation with
//! classic fourth-order Runge–Kutta, either directly on the joint space
//! ([`LindbladStepper::FullSpace`], affordable at small cutoffs) or as a
//! product of the two single-subsystem channels applied to the Bell state
//! ([`LindbladStepper::Factorized`], the production route). Density matrices
//! are never renormalized during integration; trace drift and reduced-state
//! positivity are monitored and bounded instead, and the internal step is
//! halved and the run retried when either monitor trips.
//!
//! Time arguments on the low-level propagators are plain time in the
//! dimensionless energy units of the Hamiltonian; trajectory grids are quoted
//! in ωt with ω = ω₁ and converted internally.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{
    eigh, hermiticity_deviation, max_abs, reduce_pure, spectral_map, trace, CMatrix, CVector,
    DensityMatrix, OperatorMatrix, StateVector,
};
use crate::model::{
    build_total_hamiltonian, subsystem_hamiltonian_local, LindbladGenerator, ModelParams,
};
use crate::scalar::{r, Scalar};
use crate::states::{bell_state, initial_density, thermal_terms, Bath, BellKind, ThermalTerm};

// ---------------------------------------------------------------------------
// Configuration types
// ---------------------------------------------------------------------------

/// Settings of the Laguerre-series propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreConfig<T: Scalar> {
    /// Laguerre family parameter α ∈ (−1, ∞); any value expands the same
    /// propagator, the choice only shifts convergence. Default 0.
    pub alpha: T,
    /// Truncation order of the series per sub-step.
    pub k_max: usize,
    /// Series sub-step, in the same time units as the propagation time
    /// handed to [`laguerre_apply`]. Scenario-level configs quote it in ωt
    /// and the evolvers convert.
    pub step: T,
    /// Convergence threshold on the running tail-term norm.
    pub tolerance: T,
}

impl<T: Scalar> Default for LaguerreConfig<T> {
    fn default() -> Self {
        Self { alpha: T::zero(), k_max: 64, step: r(0.1), tolerance: r(1e-12) }
    }
}

impl<T: Scalar> LaguerreConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alpha <= r(-1.0) {
            return Err(Error::Parameter("laguerre alpha must exceed -1".into()));
        }
        if self.k_max < 1 {
            return Err(Error::Parameter("laguerre k_max must be at least 1".into()));
        }
        if self.step <= T::zero() {
            return Err(Error::Parameter("laguerre step must be positive".into()));
        }
        if self.tolerance <= T::zero() {
            return Err(Error::Parameter("laguerre tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Same settings with the sub-step rescaled from ωt to plain time.
    pub fn in_plain_time(&self, time_unit: T) -> Self {
        Self { step: self.step / time_unit, ..*self }
    }
}

/// Uniform sampling grid in dimensionless time ωt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Scalar> {
    t_max: T,
    dt: T,
    count: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(t_max: T, dt: T) -> Result<Self> {
        if dt <= T::zero() {
            return Err(Error::Parameter("grid dt must be positive".into()));
        }
        if t_max < T::zero() {
            return Err(Error::Parameter("grid t_max must be non-negative".into()));
        }
        let steps = (t_max / dt + r(1e-9)).floor().to_f64().unwrap_or(0.0) as usize;
        Ok(Self { t_max, dt, count: steps + 1 })
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of samples including t = 0.
    pub fn count(&self) -> usize {
        self.count
    }

    /// ωt of the i-th sample.
    pub fn omega_t(&self, i: usize) -> T {
        self.dt * r(i as f64)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.count).map(|i| self.omega_t(i)).collect()
    }
}

/// Reduced two-qubit states along a grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Scalar> {
    /// Sample times in ωt, strictly increasing.
    pub times: Vec<T>,
    /// ρ_S(t) after tracing out both modes.
    pub reduced: Vec<DensityMatrix<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest |Tr ρ_S − 1| along the run.
    pub fn max_trace_deviation(&self) -> T {
        self.reduced
            .iter()
            .map(|rho| (rho.trace() - Complex::new(T::one(), T::zero())).norm())
            .fold(T::zero(), T::max)
    }

    /// Smallest reduced-state eigenvalue along the run.
    pub fn min_reduced_eigenvalue(&self) -> Result<T> {
        let mut min = T::infinity();
        for rho in &self.reduced {
            min = min.min(rho.min_eigenvalue()?);
        }
        Ok(min)
    }
}

/// Closed-evolution propagator choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedMethod<T: Scalar> {
    /// Spectral decomposition once, phases per sample.
    Exact,
    /// Laguerre series applied step by step.
    Laguerre(LaguerreConfig<T>),
}

/// Which space the Lindblad integrator works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindbladStepper {
    /// Direct joint-space integration of the master equation; quadratic in
    /// the total dimension, so meant for small cutoffs and cross-checks.
    FullSpace,
    /// Product of the two single-subsystem channels applied to the Bell
    /// state; exact for this model since the generator splits over disjoint
    /// subsystems. Production route.
    Factorized,
}

/// Runge–Kutta stepping policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkConfig<T: Scalar> {
    /// Internal steps per grid interval; the internal step is dt/substeps.
    pub substeps: usize,
    /// Bound on |Tr ρ − 1| over the whole run.
    pub trace_bound: T,
    /// How far below zero reduced-state eigenvalues may dip.
    pub eig_bound: T,
    /// How many times the internal step may be halved after a monitor trips
    /// before giving up.
    pub max_halvings: usize,
}

impl<T: Scalar> Default for RkConfig<T> {
    fn default() -> Self {
        Self { substeps: 4, trace_bound: r(1e-6), eig_bound: r(1e-6), max_halvings: 3 }
    }
}

// ---------------------------------------------------------------------------
// Laguerre-series propagator
// ---------------------------------------------------------------------------

/// Apply U(t) = exp(−iHt) to a vector through the Laguerre expansion
///
/// U(t) = (1/(1+it))^{α+1} Σ_k (it/(1+it))^k L^α_k(H),
///
/// evaluated with the three-term recurrence as operator–vector products and
/// split into sub-steps of `cfg.step`. The expansion variable has modulus
/// below one for every real t, but the usable order degrades with ‖H‖·t, so
/// the splitting is what keeps the series short.
pub fn laguerre_apply<T: Scalar>(
    h: &OperatorMatrix<T>,
    t: T,
    v: &StateVector<T>,
    cfg: &LaguerreConfig<T>,
) -> Result<StateVector<T>> {
    cfg.validate()?;
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermiticity_deviation(h.mat()).to_f64().unwrap_or(f64::NAN),
        });
    }
    if h.dim() != v.dim() {
        return Err(Error::Dimension(format!(
            "operator dim {} does not match state dim {}",
            h.dim(),
            v.dim()
        )));
    }
    let n_sub = (t.abs() / cfg.step).ceil().to_f64().unwrap_or(1.0).max(1.0) as usize;
    let dt = t / r(n_sub as f64);
    let mut state = v.amplitudes().clone();
    for _ in 0..n_sub {
        state = laguerre_substep(h.mat(), dt, &state, cfg)?;
    }
    Ok(StateVector::from_amplitudes(state))
}

fn laguerre_substep<T: Scalar>(
    h: &CMatrix<T>,
    t: T,
    v: &CVector<T>,
    cfg: &LaguerreConfig<T>,
) -> Result<CVector<T>> {
    let one = Complex::new(T::one(), T::zero());
    let it = Complex::new(T::zero(), t);
    let z = it / (one + it);
    let prefactor = (one + it).powf(-(cfg.alpha + T::one()));
    let pref_mag = prefactor.norm();

    // k = 0 term: L^α_0 = 1
    let mut w_prev = v.clone();
    let mut acc = v.clone();
    // k = 1 term: L^α_1(H)v = (1+α)v − Hv
    let hv = h.dot(&w_prev);
    let first = Complex::new(T::one() + cfg.alpha, T::zero());
    let mut w_curr = CVector::zeros(v.len());
    for i in 0..v.len() {
        w_curr[i] = w_prev[i] * first - hv[i];
    }
    let mut zk = z;
    add_scaled(&mut acc, &w_curr, zk);

    let mut below_tol = 0usize;
    let mut last_tail = T::infinity();
    for k in 1..cfg.k_max {
        // (k+1) L_{k+1} = (2k+1+α−H) L_k − (k+α) L_{k−1}
        let kf = r::<T>(k as f64);
        let a_coef = Complex::new(kf + kf + T::one() + cfg.alpha, T::zero());
        let b_coef = Complex::new(kf + cfg.alpha, T::zero());
        let inv = Complex::new(T::one() / (kf + T::one()), T::zero());
        let hw = h.dot(&w_curr);
        let mut w_next = CVector::zeros(v.len());
        for i in 0..v.len() {
            w_next[i] = (w_curr[i] * a_coef - hw[i] - w_prev[i] * b_coef) * inv;
        }
        zk *= z;
        add_scaled(&mut acc, &w_next, zk);
        let tail = vec_norm_raw(&w_next) * zk.norm() * pref_mag;
        last_tail = tail;
        if tail < cfg.tolerance {
            below_tol += 1;
            if below_tol >= 2 {
                return Ok(acc.mapv(|x| x * prefactor));
            }
        } else {
            below_tol = 0;
        }
        w_prev = w_curr;
        w_curr = w_next;
    }
    if last_tail < cfg.tolerance {
        return Ok(acc.mapv(|x| x * prefactor));
    }
    Err(Error::SeriesNoConvergence {
        residual: last_tail.to_f64().unwrap_or(f64::NAN),
        terms: cfg.k_max,
    })
}

fn add_scaled<T: Scalar>(acc: &mut CVector<T>, term: &CVector<T>, factor: Complex<T>) {
    for (a, t) in acc.iter_mut().zip(term.iter()) {
        *a += *t * factor;
    }
}

fn vec_norm_raw<T: Scalar>(v: &CVector<T>) -> T {
    v.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// U(t) = V e^{−iΛt} V† from the spectral decomposition of H.
pub fn exact_propagator<T: Scalar>(h: &OperatorMatrix<T>, t: T) -> Result<OperatorMatrix<T>> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermiticity_deviation(h.mat()).to_f64().unwrap_or(f64::NAN),
        });
    }
    let (vals, vecs) = eigh(h.mat())?;
    let u = spectral_map(&vals, &vecs, |l| Complex::new(T::zero(), -l * t).exp());
    OperatorMatrix::general(u)
}

// ---------------------------------------------------------------------------
// Sample finalization and monitors
// ---------------------------------------------------------------------------

fn finalize_sample<T: Scalar>(
    mat: CMatrix<T>,
    step: usize,
    trace_bound: T,
    eig_bound: T,
) -> Result<DensityMatrix<T>> {
    let dev = hermiticity_deviation(&mat);
    if dev > crate::hilbert::adaptive_tol(1e-8, max_abs(&mat)) {
        return Err(Error::NotDensity(format!(
            "sample at step {step} lost Hermiticity (deviation {dev:e})"
        )));
    }
    let drift = (trace(&mat) - Complex::new(T::one(), T::zero())).norm();
    if drift > trace_bound {
        return Err(Error::TraceDrift {
            drift: drift.to_f64().unwrap_or(f64::NAN),
            bound: trace_bound.to_f64().unwrap_or(f64::NAN),
            step,
        });
    }
    let rho = DensityMatrix::trusted(mat);
    let min_eig = rho.min_eigenvalue()?;
    if min_eig < -eig_bound {
        return Err(Error::Positivity {
            min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
            bound: eig_bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(rho)
}

// ---------------------------------------------------------------------------
// Closed evolution
// ---------------------------------------------------------------------------

/// Bell coefficients as (qubit-1 index, qubit-2 index, amplitude).
fn bell_coefficients<T: Scalar>(kind: BellKind) -> Vec<(usize, usize, Complex<T>)> {
    let amps = bell_state::<T>(kind);
    let mut out = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let c = amps.amplitudes()[a * 2 + b];
            if c.norm_sqr() > T::zero() {
                out.push((a, b, c));
            }
        }
    }
    out
}

/// Per-subsystem evolution of the basis vectors |a, m⟩ under H_j.
enum FactorEvolver<T: Scalar> {
    Exact {
        vals: Vec<T>,
        vecs: CMatrix<T>,
        /// initial vectors in the eigenbasis, one per (a, m) slot
        coords: Vec<CVector<T>>,
    },
    Laguerre {
        h: OperatorMatrix<T>,
        cfg: LaguerreConfig<T>,
        dt: T,
        current: Vec<CVector<T>>,
        steps_taken: usize,
    },
}

impl<T: Scalar> FactorEvolver<T> {
    /// `slots`: the (qubit index, occupation) basis states to track.
    fn new(
        h: OperatorMatrix<T>,
        n_max: usize,
        slots: &[(usize, usize)],
        method: &ClosedMethod<T>,
        dt_plain: T,
    ) -> Result<Self> {
        let dim = h.dim();
        debug_assert_eq!(dim, 2 * n_max);
        match method {
            ClosedMethod::Exact => {
                let (vals, vecs) = eigh(h.mat())?;
                let coords = slots
                    .iter()
                    .map(|&(a, m)| {
                        // V† e_(a·N+m) is the conjugated matching row of V
                        let row = a * n_max + m;
                        CVector::from_iter((0..dim).map(|i| vecs[[row, i]].conj()))
                    })
                    .collect();
                Ok(FactorEvolver::Exact { vals: vals.to_vec(), vecs, coords })
            }
            ClosedMethod::Laguerre(cfg) => {
                cfg.validate()?;
                let current = slots
                    .iter()
                    .map(|&(a, m)| {
                        let mut v = CVector::zeros(dim);
                        v[a * n_max + m] = Complex::new(T::one(), T::zero());
                        v
                    })
                    .collect();
                Ok(FactorEvolver::Laguerre { h, cfg: *cfg, dt: dt_plain, current, steps_taken: 0 })
            }
        }
    }

    /// Evolved vectors at grid step `step` (plain time `t`). The Laguerre
    /// variant advances incrementally, so steps must be visited in order.
    fn vectors_at(&mut self, step: usize, t: T) -> Result<Vec<CVector<T>>> {
        match self {
            FactorEvolver::Exact { vals, vecs, coords } => {
                let phases: Vec<Complex<T>> =
                    vals.iter().map(|&l| Complex::new(T::zero(), -l * t).exp()).collect();
                let dim = vals.len();
                let out = coords
                    .iter()
                    .map(|y| {
                        let mut scaled = CVector::zeros(dim);
                        for i in 0..dim {
                            scaled[i] = y[i] * phases[i];
                        }
                        vecs.dot(&scaled)
                    })
                    .collect();
                Ok(out)
            }
            FactorEvolver::Laguerre { h, cfg, dt, current, steps_taken } => {
                if step != *steps_taken {
                    return Err(Error::Parameter(
                        "laguerre factor evolution must advance one grid step at a time".into(),
                    ));
                }
                if step > 0 {
                    for v in current.iter_mut() {
                        let sv = StateVector::from_amplitudes(v.clone());
                        *v = laguerre_apply(h, *dt, &sv, cfg)?.into_amplitudes();
                    }
                }
                *steps_taken += 1;
                Ok(current.clone())
            }
        }
    }
}

/// Contraction blocks of one subsystem at one time and occupation:
/// `block[a][a'][α][α'] = Σ_k v_a[(α,k)] · conj(v_{a'}[(α',k)])`.
type QubitBlock<T> = [[[[Complex<T>; 2]; 2]; 2]; 2];

fn qubit_blocks<T: Scalar>(
    vectors: &[CVector<T>],
    n_max: usize,
    occ_count: usize,
) -> Vec<QubitBlock<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut blocks = vec![[[[[zero; 2]; 2]; 2]; 2]; occ_count];
    for (mi, block) in blocks.iter_mut().enumerate() {
        for a in 0..2 {
            for ap in 0..2 {
                let va = &vectors[a * occ_count + mi];
                let vap = &vectors[ap * occ_count + mi];
                for alpha in 0..2 {
                    for alphap in 0..2 {
                        let mut acc = zero;
                        for k in 0..n_max {
                            acc += va[alpha * n_max + k] * vap[alphap * n_max + k].conj();
                        }
                        block[a][ap][alpha][alphap] = acc;
                    }
                }
            }
        }
    }
    blocks
}

fn assemble_reduced<T: Scalar>(
    coeffs: &[(usize, usize, Complex<T>)],
    terms: &[(usize, usize, T)],
    blocks1: &[QubitBlock<T>],
    blocks2: &[QubitBlock<T>],
) -> CMatrix<T> {
    let mut rho = CMatrix::<T>::zeros((4, 4));
    for &(mi, ni, w) in terms {
        let wb = Complex::new(w, T::zero());
        let b1 = &blocks1[mi];
        let b2 = &blocks2[ni];
        for &(a, b, c) in coeffs {
            for &(ap, bp, cp) in coeffs {
                let coeff = wb * c * cp.conj();
                for alpha in 0..2 {
                    for beta in 0..2 {
                        for alphap in 0..2 {
                            for betap in 0..2 {
                                rho[[alpha * 2 + beta, alphap * 2 + betap]] += coeff
                                    * b1[a][ap][alpha][alphap]
                                    * b2[b][bp][beta][betap];
                            }
                        }
                    }
                }
            }
        }
    }
    rho
}

fn bath_terms<T: Scalar>(
    bath: Bath,
    p: &ModelParams<T>,
    cutoff_weight: T,
) -> Result<Vec<ThermalTerm<T>>> {
    match bath {
        Bath::Vacuum => {
            Ok(vec![ThermalTerm { occupations: (0, 0), weight: T::one(), energy: T::zero() }])
        }
        Bath::Thermal => thermal_terms(p, cutoff_weight),
    }
}

/// Closed (γ = 0) evolution of the reduced two-qubit state, factorized over
/// the two subsystems.
///
/// Every retained bath term is a product Fock state, so each subsystem only
/// tracks 2·(#occupations) basis vectors; the reduced state is a weighted
/// contraction of per-subsystem blocks. Requires γ_1 = γ_2 = 0.
pub fn evolve_closed<T: Scalar>(
    kind: BellKind,
    bath: Bath,
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    method: &ClosedMethod<T>,
    cutoff_weight: T,
) -> Result<Trajectory<T>> {
    p.validate()?;
    if p.gamma.iter().any(|&g| g != T::zero()) {
        return Err(Error::Scenario("closed evolution requires gamma = 0".into()));
    }
    let terms = bath_terms(bath, p, cutoff_weight)?;
    let time_unit = p.time_unit();
    let dt_plain = grid.dt() / time_unit;
    let method_plain = match method {
        ClosedMethod::Exact => ClosedMethod::Exact,
        ClosedMethod::Laguerre(cfg) => ClosedMethod::Laguerre(cfg.in_plain_time(time_unit)),
    };

    // distinct occupations per mode, ascending
    let mut occ1: Vec<usize> = terms.iter().map(|t| t.occupations.0).collect();
    let mut occ2: Vec<usize> = terms.iter().map(|t| t.occupations.1).collect();
    occ1.sort_unstable();
    occ1.dedup();
    occ2.sort_unstable();
    occ2.dedup();
    let term_table: Vec<(usize, usize, T)> = terms
        .iter()
        .map(|t| {
            (
                occ1.binary_search(&t.occupations.0).unwrap(),
                occ2.binary_search(&t.occupations.1).unwrap(),
                t.weight,
            )
        })
        .collect();

    let slots = |occ: &[usize]| -> Vec<(usize, usize)> {
        let mut s = Vec::with_capacity(2 * occ.len());
        for a in 0..2 {
            for &m in occ {
                s.push((a, m));
            }
        }
        s
    };

    let h1 = subsystem_hamiltonian_local(1, p)?;
    let shared = p.is_symmetric() && occ1 == occ2;
    let mut ev1 = FactorEvolver::new(h1, p.n_max, &slots(&occ1), &method_plain, dt_plain)?;
    let mut ev2 = if shared {
        None
    } else {
        let h2 = subsystem_hamiltonian_local(2, p)?;
        Some(FactorEvolver::new(h2, p.n_max, &slots(&occ2), &method_plain, dt_plain)?)
    };

    let coeffs = bell_coefficients::<T>(kind);
    let mut reduced = Vec::with_capacity(grid.count());
    for step in 0..grid.count() {
        let t_plain = grid.omega_t(step) / time_unit;
        let v1 = ev1.vectors_at(step, t_plain)?;
        let blocks1 = qubit_blocks(&v1, p.n_max, occ1.len());
        let blocks2 = match ev2.as_mut() {
            Some(ev) => qubit_blocks(&ev.vectors_at(step, t_plain)?, p.n_max, occ2.len()),
            None => blocks1.clone(),
        };
        let mat = assemble_reduced(&coeffs, &term_table, &blocks1, &blocks2);
        reduced.push(finalize_sample(mat, step, r(1e-6), r(1e-6))?);
    }
    Ok(Trajectory { times: grid.times(), reduced })
}

/// Closed evolution carried out on the joint space, tracing each evolved
/// pure product state. Quadratic-in-total-dim memory: meant for small
/// cutoffs as the independent cross-check of the factorized path.
pub fn evolve_closed_full<T: Scalar>(
    kind: BellKind,
    bath: Bath,
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    method: &ClosedMethod<T>,
    cutoff_weight: T,
) -> Result<Trajectory<T>> {
    p.validate()?;
    if p.gamma.iter().any(|&g| g != T::zero()) {
        return Err(Error::Scenario("closed evolution requires gamma = 0".into()));
    }
    let layout = p.layout()?;
    let terms = bath_terms(bath, p, cutoff_weight)?;
    let time_unit = p.time_unit();
    let coeffs = bell_coefficients::<T>(kind);
    let h = build_total_hamiltonian(p, &layout)?;

    let initial: Vec<CVector<T>> = terms
        .iter()
        .map(|term| {
            let mut psi = CVector::zeros(layout.total_dim());
            for &(a, b, c) in &coeffs {
                psi[layout.index_of([a, b, term.occupations.0, term.occupations.1])] = c;
            }
            psi
        })
        .collect();

    enum Engine<T: Scalar> {
        Exact { vals: Vec<T>, vecs: CMatrix<T>, coords: Vec<CVector<T>> },
        Laguerre { cfg: LaguerreConfig<T>, dt: T, current: Vec<CVector<T>> },
    }
    let mut engine = match method {
        ClosedMethod::Exact => {
            let (vals, vecs) = eigh(h.mat())?;
            let adj = crate::hilbert::adjoint(&vecs);
            let coords = initial.iter().map(|psi| adj.dot(psi)).collect();
            Engine::Exact { vals: vals.to_vec(), vecs, coords }
        }
        ClosedMethod::Laguerre(cfg) => Engine::Laguerre {
            cfg: cfg.in_plain_time(time_unit),
            dt: grid.dt() / time_unit,
            current: initial.clone(),
        },
    };

    let mut reduced = Vec::with_capacity(grid.count());
    for step in 0..grid.count() {
        let t_plain = grid.omega_t(step) / time_unit;
        let vectors: Vec<CVector<T>> = match &mut engine {
            Engine::Exact { vals, vecs, coords } => {
                let phases: Vec<Complex<T>> =
                    vals.iter().map(|&l| Complex::new(T::zero(), -l * t_plain).exp()).collect();
                coords
                    .iter()
                    .map(|y| {
                        let mut scaled = CVector::zeros(y.len());
                        for i in 0..y.len() {
                            scaled[i] = y[i] * phases[i];
                        }
                        vecs.dot(&scaled)
                    })
                    .collect()
            }
            Engine::Laguerre { cfg, dt, current } => {
                if step > 0 {
                    for v in current.iter_mut() {
                        let sv = StateVector::from_amplitudes(v.clone());
                        *v = laguerre_apply(&h, *dt, &sv, cfg)?.into_amplitudes();
                    }
                }
                current.clone()
            }
        };
        let mut mat = CMatrix::<T>::zeros((4, 4));
        for (term, psi) in terms.iter().zip(vectors.iter()) {
            let w = Complex::new(term.weight, T::zero());
            let part = reduce_pure(psi, &[0, 1], &layout)?;
            for i in 0..4 {
                for j in 0..4 {
                    mat[[i, j]] += part[[i, j]] * w;
                }
            }
        }
        reduced.push(finalize_sample(mat, step, r(1e-6), r(1e-6))?);
    }
    Ok(Trajectory { times: grid.times(), reduced })
}

// ---------------------------------------------------------------------------
// Lindblad integration
// ---------------------------------------------------------------------------

/// Advance X by `steps` classic RK4 steps of size `h` under the generator.
pub fn rk4_advance<T: Scalar>(gen: &LindbladGenerator<T>, x: &mut CMatrix<T>, h: T, steps: usize) {
    let hc = Complex::new(h, T::zero());
    let half = Complex::new(h / r(2.0), T::zero());
    let sixth = Complex::new(h / r(6.0), T::zero());
    let two = Complex::new(r::<T>(2.0), T::zero());
    for _ in 0..steps {
        let k1 = gen.apply(x);
        let x2 = add_scaled_mat(x, &k1, half);
        let k2 = gen.apply(&x2);
        let x3 = add_scaled_mat(x, &k2, half);
        let k3 = gen.apply(&x3);
        let x4 = add_scaled_mat(x, &k3, hc);
        let k4 = gen.apply(&x4);
        for ((((xi, k1i), k2i), k3i), k4i) in
            x.iter_mut().zip(k1.iter()).zip(k2.iter()).zip(k3.iter()).zip(k4.iter())
        {
            *xi += (*k1i + (*k2i + *k3i) * two + *k4i) * sixth;
        }
    }
}

fn add_scaled_mat<T: Scalar>(x: &CMatrix<T>, k: &CMatrix<T>, factor: Complex<T>) -> CMatrix<T> {
    let mut out = x.clone();
    for (o, ki) in out.iter_mut().zip(k.iter()) {
        *o += *ki * factor;
    }
    out
}

/// Integrate dX/dt under the generator from X₀ over plain time `t` in
/// `steps` RK4 steps. Building block for the integrators and the
/// composition checks.
pub fn lindblad_integrate<T: Scalar>(
    gen: &LindbladGenerator<T>,
    x0: &CMatrix<T>,
    t: T,
    steps: usize,
) -> CMatrix<T> {
    let mut x = x0.clone();
    if steps > 0 {
        rk4_advance(gen, &mut x, t / r(steps as f64), steps);
    }
    x
}

fn run_lindblad_full<T: Scalar>(
    kind: BellKind,
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    substeps: usize,
    rk: &RkConfig<T>,
) -> Result<Trajectory<T>> {
    let layout = p.layout()?;
    let gen = LindbladGenerator::full_space(p, &layout)?;
    let mut rho = initial_density(kind, Bath::Vacuum, p, &layout)?.into_mat();
    let dt_plain = grid.dt() / p.time_unit();
    let h = dt_plain / r(substeps as f64);
    let mut reduced = Vec::with_capacity(grid.count());
    for step in 0..grid.count() {
        if step > 0 {
            rk4_advance(&gen, &mut rho, h, substeps);
        }
        let drift = (trace(&rho) - Complex::new(T::one(), T::zero())).norm();
        if drift > rk.trace_bound {
            return Err(Error::TraceDrift {
                drift: drift.to_f64().unwrap_or(f64::NAN),
                bound: rk.trace_bound.to_f64().unwrap_or(f64::NAN),
                step,
            });
        }
        let mat = crate::hilbert::partial_trace_raw(&rho, &[0, 1], &layout)?;
        reduced.push(finalize_sample(mat, step, rk.trace_bound, rk.eig_bound)?);
    }
    Ok(Trajectory { times: grid.times(), reduced })
}

fn run_lindblad_factorized<T: Scalar>(
    kind: BellKind,
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    substeps: usize,
    rk: &RkConfig<T>,
) -> Result<Trajectory<T>> {
    let n = p.n_max;
    let dim = 2 * n;
    let zero = Complex::new(T::zero(), T::zero());
    let unit = |a: usize, ap: usize| -> CMatrix<T> {
        let mut x = CMatrix::from_elem((dim, dim), zero);
        x[[a * n, ap * n]] = Complex::new(T::one(), T::zero());
        x
    };
    let gen1 = LindbladGenerator::subsystem(1, p)?;
    let shared = p.is_symmetric();
    let gen2 = if shared { None } else { Some(LindbladGenerator::subsystem(2, p)?) };

    // the four matrix units |a,0><a',0| per subsystem, flattened as 2a+a'
    let mut units1: Vec<CMatrix<T>> = (0..4).map(|i| unit(i / 2, i % 2)).collect();
    let mut units2: Vec<CMatrix<T>> = if shared { Vec::new() } else { units1.clone() };

    let dt_plain = grid.dt() / p.time_unit();
    let h = dt_plain / r(substeps as f64);
    let coeffs = bell_coefficients::<T>(kind);
    let mode_trace = |x: &CMatrix<T>| -> [[Complex<T>; 2]; 2] {
        let mut m = [[zero; 2]; 2];
        for alpha in 0..2 {
            for alphap in 0..2 {
                let mut acc = zero;
                for k in 0..n {
                    acc += x[[alpha * n + k, alphap * n + k]];
                }
                m[alpha][alphap] = acc;
            }
        }
        m
    };

    let mut reduced = Vec::with_capacity(grid.count());
    for step in 0..grid.count() {
        if step > 0 {
            for x in units1.iter_mut() {
                rk4_advance(&gen1, x, h, substeps);
            }
            if let Some(gen2) = &gen2 {
                for x in units2.iter_mut() {
                    rk4_advance(gen2, x, h, substeps);
                }
            }
        }
        let m1: Vec<[[Complex<T>; 2]; 2]> = units1.iter().map(&mode_trace).collect();
        let m2: Vec<[[Complex<T>; 2]; 2]> =
            if shared { m1.clone() } else { units2.iter().map(&mode_trace).collect() };
        let mut mat = CMatrix::<T>::zeros((4, 4));
        for &(a, b, c) in &coeffs {
            for &(ap, bp, cp) in &coeffs {
                let coeff = c * cp.conj();
                let b1 = &m1[a * 2 + ap];
                let b2 = &m2[b * 2 + bp];
                for alpha in 0..2 {
                    for beta in 0..2 {
                        for alphap in 0..2 {
                            for betap in 0..2 {
                                mat[[alpha * 2 + beta, alphap * 2 + betap]] +=
                                    coeff * b1[alpha][alphap] * b2[beta][betap];
                            }
                        }
                    }
                }
            }
        }
        reduced.push(finalize_sample(mat, step, rk.trace_bound, rk.eig_bound)?);
    }
    Ok(Trajectory { times: grid.times(), reduced })
}

/// Lindblad evolution from a Bell state with both cavities in vacuum.
///
/// The internal RK4 step starts at grid.dt/substeps and is halved (with a
/// clean restart) whenever the trace or positivity monitor trips, up to
/// `rk.max_halvings` times; a run that still trips fails with the monitor's
/// error.
pub fn evolve_lindblad<T: Scalar>(
    kind: BellKind,
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    stepper: LindbladStepper,
    rk: &RkConfig<T>,
) -> Result<Trajectory<T>> {
    p.validate()?;
    if rk.substeps == 0 {
        return Err(Error::Parameter("rk substeps must be positive".into()));
    }
    let mut substeps = rk.substeps;
    let mut attempt = 0;
    loop {
        let result = match stepper {
            LindbladStepper::FullSpace => run_lindblad_full(kind, p, grid, substeps, rk),
            LindbladStepper::Factorized => run_lindblad_factorized(kind, p, grid, substeps, rk),
        };
        match result {
            Err(Error::TraceDrift { .. } | Error::Positivity { .. })
                if attempt < rk.max_halvings =>
            {
                attempt += 1;
                substeps *= 2;
            }
            other => return other,
        }
    }
}
