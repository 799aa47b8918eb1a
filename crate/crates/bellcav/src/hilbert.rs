//! Tensor-product linear algebra over the composite space of two qubits and
//! two truncated bosonic modes.
//!
//! Factor order is fixed as `[atom 1, atom 2, mode 1, mode 2]` with row-major
//! index arithmetic; every operator and state in the crate uses this one
//! convention. Qubit basis index 0 is the σ^z = +1 level unless a model flips
//! it (see [`crate::model::QubitBasis`]).
//!
//! Matrices are dense `ndarray` arrays of complex scalars. The Hermitian
//! eigensolver is a cyclic Jacobi sweep, which is plenty at the dimensions
//! this crate works with (a few thousand at most, usually well under 200).

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cr, r, Scalar};

pub type CMatrix<T> = Array2<Complex<T>>;
pub type CVector<T> = Array1<Complex<T>>;

/// Tolerance that respects both a spec-level bound and the scalar's epsilon.
///
/// For `f64` the fixed bound governs; for `f32` the epsilon term keeps the
/// same checks meaningful.
pub(crate) fn adaptive_tol<T: Scalar>(fixed: f64, scale: T) -> T {
    let eps_term = scale.max(T::one()) * T::epsilon() * r(64.0);
    r::<T>(fixed).max(eps_term)
}

// ---------------------------------------------------------------------------
// Space layout
// ---------------------------------------------------------------------------

/// Ordered factor dimensions of the composite Hilbert space.
///
/// Convention: `[2, 2, N, N]` for atom 1, atom 2, mode 1, mode 2. The two
/// mode cutoffs are always equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    factor_dims: [usize; 4],
    total_dim: usize,
}

impl SpaceLayout {
    /// Layout with the canonical `[2, 2, n_max, n_max]` factors.
    pub fn two_atoms_two_modes(n_max: usize) -> Result<Self> {
        Self::new([2, 2, n_max, n_max])
    }

    pub fn new(factor_dims: [usize; 4]) -> Result<Self> {
        if factor_dims.iter().any(|&d| d < 2) {
            return Err(Error::Dimension(format!(
                "every factor dimension must be >= 2, got {factor_dims:?}"
            )));
        }
        if factor_dims[2] != factor_dims[3] {
            return Err(Error::Dimension(format!(
                "the two mode cutoffs must match, got {} and {}",
                factor_dims[2], factor_dims[3]
            )));
        }
        let total_dim = factor_dims.iter().product();
        Ok(Self { factor_dims, total_dim })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Fock cutoff shared by both modes.
    pub fn mode_dim(&self) -> usize {
        self.factor_dims[2]
    }

    /// Row-major stride of one factor in the flat index.
    pub fn stride(&self, factor: usize) -> usize {
        self.factor_dims[factor + 1..].iter().product()
    }

    /// Flat index of a per-factor multi-index.
    pub fn index_of(&self, idx: [usize; 4]) -> usize {
        debug_assert!(idx.iter().zip(&self.factor_dims).all(|(i, d)| i < d));
        idx.iter()
            .zip(&self.factor_dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Per-factor multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 4] {
        let mut idx = [0usize; 4];
        for f in (0..4).rev() {
            idx[f] = flat % self.factor_dims[f];
            flat /= self.factor_dims[f];
        }
        idx
    }
}

// ---------------------------------------------------------------------------
// Role types
// ---------------------------------------------------------------------------

/// Dense square complex matrix tagged with whether it is Hermitian.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T: Scalar> {
    mat: CMatrix<T>,
    hermitian: bool,
}

impl<T: Scalar> OperatorMatrix<T> {
    /// Wrap a matrix after checking Hermiticity (entrywise, 1e-12 scale).
    pub fn hermitian(mat: CMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermiticity_deviation(&mat);
        let tol = adaptive_tol(1e-12, max_abs(&mat));
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { mat, hermitian: true })
    }

    /// Wrap a square matrix with no Hermiticity claim.
    pub fn general(mat: CMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        Ok(Self { mat, hermitian: false })
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix<T> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: adjoint(&self.mat), hermitian: self.hermitian }
    }

    /// Sum of two operators; Hermiticity survives addition.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "operator sum of dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self { mat: &self.mat + &other.mat, hermitian: self.hermitian && other.hermitian })
    }

    /// Scale by a real factor; Hermiticity survives.
    pub fn scale_re(&self, factor: T) -> Self {
        let f = Complex::new(factor, T::zero());
        Self { mat: self.mat.mapv(|x| x * f), hermitian: self.hermitian }
    }
}

/// Dense density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T: Scalar> {
    mat: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Full validation: Hermitian to 1e-10, trace within 1e-8 of one, minimum
    /// eigenvalue above -1e-8.
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermiticity_deviation(&mat);
        if dev > adaptive_tol(1e-10, max_abs(&mat)) {
            return Err(Error::NotDensity(format!("hermiticity deviation {dev:e}")));
        }
        let tr = trace(&mat);
        let tr_err = (tr - Complex::new(T::one(), T::zero())).norm();
        if tr_err > adaptive_tol(1e-8, T::one()) {
            return Err(Error::NotDensity(format!("trace error {tr_err:e}")));
        }
        let rho = Self { mat };
        let min_eig = rho.min_eigenvalue()?;
        if min_eig < -adaptive_tol(1e-8, T::one()) {
            return Err(Error::NotDensity(format!("min eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    /// Wrap a matrix that is a density matrix by construction.
    ///
    /// Hermiticity and trace are still asserted in debug builds (trace at the
    /// looser monitored-drift bound of 1e-6, since integrators hand their
    /// unrenormalized samples through here); the eigenvalue check is skipped,
    /// so use only where positivity is structural or monitored separately.
    pub(crate) fn trusted(mat: CMatrix<T>) -> Self {
        debug_assert!(mat.is_square());
        debug_assert!(
            hermiticity_deviation(&mat) <= adaptive_tol(1e-10, max_abs(&mat)),
            "trusted density matrix is not Hermitian"
        );
        debug_assert!(
            (trace(&mat) - Complex::new(T::one(), T::zero())).norm()
                <= adaptive_tol(1e-6, T::one()),
            "trusted density matrix does not have unit trace"
        );
        Self { mat }
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix<T> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> Complex<T> {
        trace(&self.mat)
    }

    /// Tr ρ², equals 1 exactly for pure states.
    pub fn purity(&self) -> T {
        let sq = self.mat.dot(&self.mat);
        trace(&sq).re
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        let (vals, _) = eigh(&self.mat)?;
        Ok(vals[0])
    }

    /// Eigenvalues ascending (real, since ρ is Hermitian).
    pub fn eigenvalues(&self) -> Result<Array1<T>> {
        let (vals, _) = eigh(&self.mat)?;
        Ok(vals)
    }

    /// Reduce onto the kept factors; trace and Hermiticity are preserved.
    pub fn partial_trace(&self, keep: &[usize], layout: &SpaceLayout) -> Result<DensityMatrix<T>> {
        if self.dim() != layout.total_dim() {
            return Err(Error::Dimension(format!(
                "density matrix dim {} does not match layout total {}",
                self.dim(),
                layout.total_dim()
            )));
        }
        let reduced = partial_trace_raw(&self.mat, keep, layout)?;
        Ok(DensityMatrix::trusted(reduced))
    }
}

/// Dense complex state vector.
#[derive(Debug, Clone)]
pub struct StateVector<T: Scalar> {
    vec: CVector<T>,
}

impl<T: Scalar> StateVector<T> {
    /// Wrap a vector after checking that its norm is 1 to 1e-10.
    pub fn normalized(vec: CVector<T>) -> Result<Self> {
        let n = vec_norm(&vec);
        if (n - T::one()).abs() > adaptive_tol(1e-10, T::one()) {
            return Err(Error::Parameter(format!("state vector norm {n:e} is not 1")));
        }
        Ok(Self { vec })
    }

    pub fn from_amplitudes(vec: CVector<T>) -> Self {
        Self { vec }
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.vec
    }

    pub fn into_amplitudes(self) -> CVector<T> {
        self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.vec)
    }

    /// Outer product |ψ⟩⟨ψ| as a density matrix.
    pub fn to_density(&self) -> DensityMatrix<T> {
        let n = self.dim();
        let mut out = CMatrix::<T>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.vec[i] * self.vec[j].conj();
            }
        }
        DensityMatrix::trusted(out)
    }
}

// ---------------------------------------------------------------------------
// Elementary operators
// ---------------------------------------------------------------------------

pub fn identity<T: Scalar>(dim: usize) -> CMatrix<T> {
    CMatrix::from_diag(&CVector::from_elem(dim, Complex::new(T::one(), T::zero())))
}

/// σ^x in the computational basis.
pub fn sigma_x<T: Scalar>() -> CMatrix<T> {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 1]] = cr(1.0);
    m[[1, 0]] = cr(1.0);
    m
}

/// σ^y in the computational basis.
pub fn sigma_y<T: Scalar>() -> CMatrix<T> {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 1]] = Complex::new(T::zero(), -T::one());
    m[[1, 0]] = Complex::new(T::zero(), T::one());
    m
}

/// σ^z with basis index 0 as the +1 eigenstate.
pub fn sigma_z<T: Scalar>() -> CMatrix<T> {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 0]] = cr(1.0);
    m[[1, 1]] = cr(-1.0);
    m
}

/// Bosonic annihilation operator on a Fock space truncated at `dim` levels:
/// a|k⟩ = √k |k−1⟩.
pub fn annihilation<T: Scalar>(dim: usize) -> CMatrix<T> {
    let mut m = CMatrix::zeros((dim, dim));
    for k in 1..dim {
        m[[k - 1, k]] = Complex::new(r::<T>(k as f64).sqrt(), T::zero());
    }
    m
}

/// Number operator a†a on the truncated Fock space.
pub fn number_op<T: Scalar>(dim: usize) -> CMatrix<T> {
    let mut m = CMatrix::zeros((dim, dim));
    for k in 0..dim {
        m[[k, k]] = cr(k as f64);
    }
    m
}

// ---------------------------------------------------------------------------
// Products, embeddings, reductions
// ---------------------------------------------------------------------------

/// Kronecker product of two square matrices.
pub fn kron<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros((na * nb, na * nb));
    for i1 in 0..na {
        for j1 in 0..na {
            let aij = a[[i1, j1]];
            for i2 in 0..nb {
                for j2 in 0..nb {
                    out[[i1 * nb + i2, j1 * nb + j2]] = aij * b[[i2, j2]];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kron_vec<T: Scalar>(a: &CVector<T>, b: &CVector<T>) -> CVector<T> {
    let (na, nb) = (a.len(), b.len());
    let mut out = CVector::zeros(na * nb);
    for i in 0..na {
        for j in 0..nb {
            out[i * nb + j] = a[i] * b[j];
        }
    }
    out
}

/// Kronecker product of two operators; Hermiticity survives the product.
pub fn kron_op<T: Scalar>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    let mat = kron(a.mat(), b.mat());
    if a.is_hermitian() && b.is_hermitian() {
        OperatorMatrix { mat, hermitian: true }
    } else {
        OperatorMatrix { mat, hermitian: false }
    }
}

/// Lift a factor-local operator to the full space: I ⊗ … ⊗ op ⊗ … ⊗ I.
pub fn embed<T: Scalar>(
    op: &CMatrix<T>,
    factor: usize,
    layout: &SpaceLayout,
) -> Result<CMatrix<T>> {
    let dims = layout.factor_dims();
    if factor >= dims.len() {
        return Err(Error::Dimension(format!("factor index {factor} out of range")));
    }
    let d = dims[factor];
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::Dimension(format!(
            "operator dim {} does not match factor {} dim {}",
            op.nrows(),
            factor,
            d
        )));
    }
    let pre: usize = dims[..factor].iter().product();
    let post: usize = dims[factor + 1..].iter().product();
    let total = layout.total_dim();
    let mut out = CMatrix::zeros((total, total));
    for p in 0..pre {
        for i in 0..d {
            for j in 0..d {
                let v = op[[i, j]];
                if v == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for q in 0..post {
                    out[[(p * d + i) * post + q, (p * d + j) * post + q]] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Lift an operator acting on an ordered pair of factors to the full space.
///
/// `op` lives on the product of factors `(fa, fb)` with `fa < fb`, indexed
/// row-major as `ia * dims[fb] + ib`.
pub fn embed_pair<T: Scalar>(
    op: &CMatrix<T>,
    factors: (usize, usize),
    layout: &SpaceLayout,
) -> Result<CMatrix<T>> {
    let (fa, fb) = factors;
    let dims = layout.factor_dims();
    if fa >= fb || fb >= dims.len() {
        return Err(Error::Dimension(format!("bad factor pair ({fa}, {fb})")));
    }
    let (da, db) = (dims[fa], dims[fb]);
    if op.nrows() != da * db {
        return Err(Error::Dimension(format!(
            "operator dim {} does not match factor pair dim {}",
            op.nrows(),
            da * db
        )));
    }
    let total = layout.total_dim();
    let sa = layout.stride(fa);
    let sb = layout.stride(fb);
    // enumerate the identity part: all flat indices with zero at fa, fb
    let mut rest: Vec<usize> = Vec::new();
    for flat in 0..total {
        let idx = layout.unravel(flat);
        if idx[fa] == 0 && idx[fb] == 0 {
            rest.push(flat);
        }
    }
    let mut out = CMatrix::zeros((total, total));
    for ia in 0..da {
        for ib in 0..db {
            for ja in 0..da {
                for jb in 0..db {
                    let v = op[[ia * db + ib, ja * db + jb]];
                    if v == Complex::new(T::zero(), T::zero()) {
                        continue;
                    }
                    for &base in &rest {
                        out[[base + ia * sa + ib * sb, base + ja * sa + jb * sb]] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Flat offsets of every multi-index over the given subset of factors.
fn subset_offsets(factors: &[usize], layout: &SpaceLayout) -> Vec<usize> {
    let dims: Vec<usize> = factors.iter().map(|&f| layout.factor_dims()[f]).collect();
    let strides: Vec<usize> = factors.iter().map(|&f| layout.stride(f)).collect();
    let count: usize = dims.iter().product();
    let mut offsets = Vec::with_capacity(count);
    for mut k in 0..count {
        let mut off = 0;
        for f in (0..dims.len()).rev() {
            off += (k % dims[f]) * strides[f];
            k /= dims[f];
        }
        offsets.push(off);
    }
    offsets
}

fn split_keep_trace(keep: &[usize], layout: &SpaceLayout) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_factors = layout.factor_dims().len();
    if keep.is_empty() {
        return Err(Error::Parameter("partial trace with empty keep set".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::Parameter("duplicate factor in keep set".into()));
    }
    if *keep_sorted.last().unwrap() >= n_factors {
        return Err(Error::Parameter(format!(
            "keep factor {} out of range (0..{n_factors})",
            keep_sorted.last().unwrap()
        )));
    }
    let traced: Vec<usize> = (0..n_factors).filter(|f| !keep_sorted.contains(f)).collect();
    Ok((keep_sorted, traced))
}

/// Partial trace over the factors not in `keep`; kept factors stay in
/// ascending layout order.
pub fn partial_trace_raw<T: Scalar>(
    rho: &CMatrix<T>,
    keep: &[usize],
    layout: &SpaceLayout,
) -> Result<CMatrix<T>> {
    if rho.nrows() != layout.total_dim() || !rho.is_square() {
        return Err(Error::Dimension(format!(
            "matrix shape {:?} does not match layout total {}",
            rho.shape(),
            layout.total_dim()
        )));
    }
    let (keep_sorted, traced) = split_keep_trace(keep, layout)?;
    let keep_offsets = subset_offsets(&keep_sorted, layout);
    let traced_offsets = subset_offsets(&traced, layout);
    let k = keep_offsets.len();
    let mut out = CMatrix::zeros((k, k));
    for (i, &ri) in keep_offsets.iter().enumerate() {
        for (j, &rj) in keep_offsets.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &t in &traced_offsets {
                acc += rho[[ri + t, rj + t]];
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a pure state without forming the full outer
/// product.
pub fn reduce_pure<T: Scalar>(
    psi: &CVector<T>,
    keep: &[usize],
    layout: &SpaceLayout,
) -> Result<CMatrix<T>> {
    if psi.len() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "state dim {} does not match layout total {}",
            psi.len(),
            layout.total_dim()
        )));
    }
    let (keep_sorted, traced) = split_keep_trace(keep, layout)?;
    let keep_offsets = subset_offsets(&keep_sorted, layout);
    let traced_offsets = subset_offsets(&traced, layout);
    let k = keep_offsets.len();
    let mut out = CMatrix::zeros((k, k));
    for (i, &ri) in keep_offsets.iter().enumerate() {
        for (j, &rj) in keep_offsets.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &t in &traced_offsets {
                acc += psi[ri + t] * psi[rj + t].conj();
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian operator: eigenvalues ascending, columns
/// of the returned matrix are the matching orthonormal eigenvectors.
pub fn eig_hermitian<T: Scalar>(a: &OperatorMatrix<T>) -> Result<(Array1<T>, CMatrix<T>)> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermiticity_deviation(a.mat()).to_f64().unwrap_or(f64::NAN),
        });
    }
    eigh(a.mat())
}

/// Jacobi eigendecomposition on a raw matrix assumed Hermitian.
pub(crate) fn eigh<T: Scalar>(mat: &CMatrix<T>) -> Result<(Array1<T>, CMatrix<T>)> {
    let n = mat.nrows();
    // work on the Hermitian average to shed representation noise
    let mut a = CMatrix::zeros((n, n));
    let half = cr::<T>(0.5);
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = (mat[[i, j]] + mat[[j, i]].conj()) * half;
        }
    }
    let mut v = identity::<T>(n);

    let scale = frobenius(&a).max(T::min_positive_value());
    let tol = scale * T::epsilon() * r(8.0);
    let skip = tol / r((n * n) as f64);
    let max_sweeps = 60;
    let mut converged = false;
    let mut last_off = T::zero();
    for _sweep in 0..max_sweeps {
        let off = off_diagonal_norm(&a);
        last_off = off;
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[[p, q]];
                let rmag = apq.norm();
                if rmag <= skip {
                    continue;
                }
                let phase = apq / Complex::new(rmag, T::zero());
                let delta = a[[p, p]].re - a[[q, q]].re;
                let phi = delta / (rmag + rmag);
                let t = if phi == T::zero() {
                    T::one()
                } else {
                    -phi.signum() / (phi.abs() + (phi * phi + T::one()).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = phase * Complex::new(t * c, T::zero());

                // A <- J^dag A J, touching only rows/cols p and q
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * Complex::new(c, T::zero()) - aiq * s.conj();
                    a[[i, q]] = aip * s + aiq * Complex::new(c, T::zero());
                }
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = apj * Complex::new(c, T::zero()) - aqj * s;
                    a[[q, j]] = apj * s.conj() + aqj * Complex::new(c, T::zero());
                }
                a[[p, q]] = Complex::new(T::zero(), T::zero());
                a[[q, p]] = Complex::new(T::zero(), T::zero());
                a[[p, p]] = Complex::new(a[[p, p]].re, T::zero());
                a[[q, q]] = Complex::new(a[[q, q]].re, T::zero());

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * Complex::new(c, T::zero()) - viq * s.conj();
                    v[[i, q]] = vip * s + viq * Complex::new(c, T::zero());
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::EigNoConvergence {
            sweeps: max_sweeps,
            off_norm: last_off.to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("non-NaN eigenvalues"));
    let vals = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut vecs = CMatrix::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vecs[[row, col]] = v[[row, src]];
        }
    }
    Ok((vals, vecs))
}

/// Assemble V f(Λ) V† from an eigendecomposition.
pub fn spectral_map<T: Scalar>(
    vals: &Array1<T>,
    vecs: &CMatrix<T>,
    f: impl Fn(T) -> Complex<T>,
) -> CMatrix<T> {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (col, &lambda) in vals.iter().enumerate() {
        let fv = f(lambda);
        for row in 0..n {
            scaled[[row, col]] *= fv;
        }
    }
    scaled.dot(&adjoint(vecs))
}

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

fn check_square<T: Scalar>(m: &CMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("matrix shape {:?} is not square", m.shape())));
    }
    Ok(())
}

pub fn adjoint<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = CMatrix::zeros((cols, rows));
    for i in 0..rows {
        for j in 0..cols {
            out[[j, i]] = m[[i, j]].conj();
        }
    }
    out
}

pub fn trace<T: Scalar>(m: &CMatrix<T>) -> Complex<T> {
    m.diag().iter().copied().sum()
}

pub fn max_abs<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().map(|x| x.norm()).fold(T::zero(), T::max)
}

/// Largest entrywise |a - b|.
pub fn max_abs_diff<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).norm())
        .fold(T::zero(), T::max)
}

pub fn hermiticity_deviation<T: Scalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            dev = dev.max(d);
        }
    }
    dev
}

pub fn vec_norm<T: Scalar>(v: &CVector<T>) -> T {
    v.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

fn frobenius<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

fn off_diagonal_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[[i, j]].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hermitian, random_matrix, random_pure_state};
    use ndarray::array;
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = CMatrix<f64>;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i2 = identity::<f64>(2);
        assert_eq!(kron(&i2, &i2), identity::<f64>(4));
        let sz_i = kron(&sigma_z::<f64>(), &i2);
        let expect = M::from_diag(&array![c(1., 0.), c(1., 0.), c(-1., 0.), c(-1., 0.)]);
        assert_eq!(sz_i, expect);
    }

    #[test]
    fn kron_sigma_x_pair_fixes_bell_vector() {
        // oracle: 4x4 matrix written out by hand from the definition
        let hand = array![
            [c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
            [c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)],
            [c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)],
            [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
        ];
        let built = kron(&sigma_x::<f64>(), &sigma_x::<f64>());
        assert_eq!(built, hand);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = array![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let out = built.dot(&bell);
        for (a, b) in out.iter().zip(bell.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn kron_associativity_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 3);
        let cm = random_matrix(&mut rng, 2);
        let left = kron(&kron(&a, &b), &cm);
        let right = kron(&a, &kron(&b, &cm));
        assert_eq!(left, right);
    }

    #[test]
    fn embed_identity_and_commutation() {
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        let e = embed(&identity::<f64>(2), 1, &layout).unwrap();
        assert_eq!(e, identity::<f64>(layout.total_dim()));

        let layout4 = SpaceLayout::new([2, 2, 2, 2]).unwrap();
        let z0 = embed(&sigma_z::<f64>(), 0, &layout4).unwrap();
        let z1 = embed(&sigma_z::<f64>(), 1, &layout4).unwrap();
        let ab = z0.dot(&z1);
        let ba = z1.dot(&z0);
        assert_eq!(ab, ba);

        let x0 = embed(&sigma_x::<f64>(), 0, &layout4).unwrap();
        let n3 = embed(&number_op::<f64>(2), 3, &layout4).unwrap();
        assert_eq!(x0.dot(&n3), n3.dot(&x0));
    }

    #[test]
    fn embed_annihilation_matches_sparse_oracle() {
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        let a_mode1 = embed(&annihilation::<f64>(3), 2, &layout).unwrap();

        // oracle: construct from the basis-state action a|s1,s2,k,l> = sqrt(k)|s1,s2,k-1,l>
        let total = layout.total_dim();
        let mut oracle = M::zeros((total, total));
        for col in 0..total {
            let idx = layout.unravel(col);
            if idx[2] > 0 {
                let mut to = idx;
                to[2] -= 1;
                oracle[[layout.index_of(to), col]] = c((idx[2] as f64).sqrt(), 0.0);
            }
        }
        assert_eq!(a_mode1, oracle);

        // annihilates anything with mode-1 occupation 0
        let mut psi = CVector::<f64>::zeros(total);
        psi[layout.index_of([1, 0, 0, 2])] = c(1.0, 0.0);
        let out = a_mode1.dot(&psi);
        assert!(out.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn embed_pair_matches_composed_embeds() {
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        // coupling-like operator on (qubit 0, mode 2): sigma_x (x) a
        let local = kron(&sigma_x::<f64>(), &annihilation::<f64>(3));
        let lifted = embed_pair(&local, (0, 2), &layout).unwrap();
        let x = embed(&sigma_x::<f64>(), 0, &layout).unwrap();
        let a = embed(&annihilation::<f64>(3), 2, &layout).unwrap();
        let composed = x.dot(&a);
        assert!(max_abs_diff(&lifted, &composed) < 1e-15);
    }

    #[test]
    fn partial_trace_product_state() {
        let layout = SpaceLayout::new([2, 2, 2, 2]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = array![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let mut vac = CVector::<f64>::zeros(4);
        vac[0] = c(1., 0.);
        let psi = kron_vec(&bell, &vac);
        let rho = StateVector::from_amplitudes(psi).to_density();
        let reduced = rho.partial_trace(&[0, 1], &layout).unwrap();
        let bell_rho = StateVector::from_amplitudes(bell).to_density();
        assert!(max_abs_diff(reduced.mat(), bell_rho.mat()) < 1e-15);
    }

    #[test]
    fn partial_trace_maximally_mixed() {
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        let total = layout.total_dim();
        let rho = identity::<f64>(total).mapv(|x| x / c(total as f64, 0.0));
        let reduced = partial_trace_raw(&rho, &[0, 1], &layout).unwrap();
        let expect = identity::<f64>(4).mapv(|x| x / c(4.0, 0.0));
        assert!(max_abs_diff(&reduced, &expect) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        let g = random_matrix(&mut rng, layout.total_dim());
        let reduced = partial_trace_raw(&g, &[1, 2], &layout).unwrap();
        assert!((trace(&reduced) - trace(&g)).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let layout = SpaceLayout::new([2, 2, 2, 2]).unwrap();
        let rho = identity::<f64>(16).mapv(|x| x / c(16.0, 0.0));
        assert!(partial_trace_raw(&rho, &[], &layout).is_err());
        assert!(partial_trace_raw(&rho, &[4], &layout).is_err());
        assert!(partial_trace_raw(&rho, &[1, 1], &layout).is_err());
    }

    #[test]
    fn schmidt_spectra_match_across_the_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let layout = SpaceLayout::new([2, 2, 3, 3]).unwrap();
        let psi = random_pure_state(&mut rng, layout.total_dim());
        let rho_q = reduce_pure(&psi, &[0, 1], &layout).unwrap();
        let rho_m = reduce_pure(&psi, &[2, 3], &layout).unwrap();
        let (mut eq, _) = eigh(&rho_q).unwrap();
        let (em, _) = eigh(&rho_m).unwrap();
        // qubit reduction is 4-dim, mode reduction 9-dim: compare the top 4
        let mut top_m: Vec<f64> = em.to_vec();
        top_m.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eq.as_slice_mut().unwrap().sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (q, m) in eq.iter().zip(top_m.iter()) {
            assert!((q - m).abs() < 1e-10, "schmidt mismatch {q} vs {m}");
        }
        // remaining mode eigenvalues vanish
        for m in top_m[4..].iter() {
            assert!(m.abs() < 1e-10);
        }
        // entropy agrees across the cut
        let ent = |vals: &[f64]| -> f64 {
            vals.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum()
        };
        assert!((ent(eq.as_slice().unwrap()) - ent(&top_m)).abs() < 1e-8);
    }

    #[test]
    fn eigh_pauli_matrices() {
        let (vals_z, vecs_z) =
            eig_hermitian(&OperatorMatrix::hermitian(sigma_z::<f64>()).unwrap()).unwrap();
        assert!((vals_z[0] + 1.0).abs() < 1e-14 && (vals_z[1] - 1.0).abs() < 1e-14);
        // ascending order puts |1> first, |0> second
        assert!(vecs_z[[1, 0]].norm() > 0.999 && vecs_z[[0, 1]].norm() > 0.999);

        let (vals_x, _) =
            eig_hermitian(&OperatorMatrix::hermitian(sigma_x::<f64>()).unwrap()).unwrap();
        assert!((vals_x[0] + 1.0).abs() < 1e-14 && (vals_x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3, 8, 17] {
            let a = random_hermitian(&mut rng, n);
            let (vals, vecs) = eigh(&a).unwrap();
            let rebuilt = spectral_map(&vals, &vecs, |l| c(l, 0.0));
            assert!(max_abs_diff(&a, &rebuilt) < 1e-10, "reconstruction failed at n={n}");
            let vv = adjoint(&vecs).dot(&vecs);
            assert!(max_abs_diff(&vv, &identity::<f64>(n)) < 1e-10);
            for w in vals.as_slice().unwrap().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eigh_handles_degenerate_spectra() {
        let a = identity::<f64>(6).mapv(|x| x * c(3.5, 0.0));
        let (vals, vecs) = eigh(&a).unwrap();
        assert!(vals.iter().all(|&l| (l - 3.5).abs() < 1e-14));
        assert!(max_abs_diff(&vecs, &identity::<f64>(6)) < 1e-14);
    }

    #[test]
    fn hermitian_wrapper_rejects_non_hermitian() {
        let mut m = sigma_x::<f64>();
        m[[0, 1]] = c(0.3, 0.2);
        assert!(OperatorMatrix::hermitian(m.clone()).is_err());
        let op = OperatorMatrix::general(m).unwrap();
        assert!(eig_hermitian(&op).is_err());
    }

    #[test]
    fn density_validation_catches_defects() {
        // good: maximally mixed
        let ok = identity::<f64>(4).mapv(|x| x / c(4.0, 0.0));
        assert!(DensityMatrix::new(ok).is_ok());
        // bad trace
        let half = identity::<f64>(4).mapv(|x| x / c(8.0, 0.0));
        assert!(DensityMatrix::new(half).is_err());
        // negative eigenvalue, unit trace, Hermitian
        let neg = M::from_diag(&array![c(0.7, 0.), c(0.5, 0.), c(-0.2, 0.), c(0., 0.)]);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn layout_checks_and_index_arithmetic() {
        assert!(SpaceLayout::new([2, 2, 3, 4]).is_err());
        assert!(SpaceLayout::new([2, 1, 3, 3]).is_err());
        let layout = SpaceLayout::new([2, 2, 5, 5]).unwrap();
        assert_eq!(layout.total_dim(), 100);
        for flat in [0usize, 1, 49, 99] {
            assert_eq!(layout.index_of(layout.unravel(flat)), flat);
        }
        assert_eq!(layout.index_of([1, 0, 3, 2]), 1 * 50 + 0 * 25 + 3 * 5 + 2);
    }

    #[test]
    fn generic_scalar_compiles_for_f32() {
        let a = sigma_x::<f32>();
        let (vals, _) = eigh(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-5 && (vals[1] - 1.0).abs() < 1e-5);
    }
}
