//! Dense complex matrix kernels.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Operators on the
//! Hilbert–Schmidt space are stored as [`SuperOperator`]s in the
//! column-stacking convention: `vec(X)[i + j*d] = X[i, j]`, so that
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative hermiticity tolerance for user-supplied matrices.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default zero-snapping threshold (relative to `max(1, λ_max)`).
pub const ZERO_TOL: f64 = 1e-10;
/// Eigenvalue clustering threshold (relative to `max(1, λ_max)`).
pub const CLUSTER_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// Matrix unit `E_ij` of shape `rows × cols`.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(rows, cols);
    m[(i, j)] = re(1.0);
    m
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    let mut m = zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = re(*v);
    }
    m
}

/// Builds a matrix from real row-major entries.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, j| re(rows[i][j]))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().copied().sum()
}

/// Frobenius norm.
pub fn fro(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Orthogonal complement `I − P` of a projection.
pub fn complement(p: &ComplexMatrix) -> ComplexMatrix {
    identity(p.nrows()) - p
}

pub fn check_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn check_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() == a.ncols() && a.nrows() > 0 {
        Ok(a.nrows())
    } else {
        Err(Error::ShapeMismatch(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())))
    }
}

pub fn hermiticity_residual(a: &ComplexMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// `Tr X*Y`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<C64> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    Ok(hs(x, y))
}

/// Unchecked `Tr X*Y`.
pub(crate) fn hs(x: &ComplexMatrix, y: &ComplexMatrix) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn vectorize(x: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace on `H ⊗ K` with `dims = (d_H, d_K)`.
pub fn partial_trace(x: &ComplexMatrix, which: Factor, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (dh, dk) = dims;
    if x.nrows() != dh * dk || x.ncols() != dh * dk {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix with dims ({dh},{dk})",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(match which {
        Factor::Second => ComplexMatrix::from_fn(dh, dh, |i, j| (0..dk).map(|k| x[(i * dk + k, j * dk + k)]).sum()),
        Factor::First => ComplexMatrix::from_fn(dk, dk, |k, l| (0..dh).map(|i| x[(i * dk + k, i * dk + l)]).sum()),
    })
}

/// Eigendecomposition of a Hermitian matrix, ascending.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }

    /// `U diag(f(λ)) U*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        &scaled * u.adjoint()
    }

    /// Orthonormal eigenvectors whose eigenvalue satisfies `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        let cols: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.eigenvalues[j])).collect();
        let u = &self.eigenvectors;
        ComplexMatrix::from_fn(u.nrows(), cols.len(), |i, k| u[(i, cols[k])])
    }
}

/// Hermitian eigendecomposition of a matrix that is Hermitian by construction.
/// The input is symmetrized first; nothing is snapped.
pub fn eigh(a: &ComplexMatrix) -> HermitianSpectrum {
    let h = (a + a.adjoint()).scale(0.5);
    let n = h.nrows();
    if n == 0 {
        return HermitianSpectrum { eigenvalues: vec![], eigenvectors: zeros(0, 0) };
    }
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, k| se.eigenvectors[(r, idx[k])]);
    HermitianSpectrum { eigenvalues, eigenvectors }
}

/// Validated Hermitian eigendecomposition. Eigenvalues within
/// `tol·max(1, |λ|_max)` of zero are snapped to exactly zero.
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<HermitianSpectrum> {
    check_square(a)?;
    check_finite(a)?;
    let residual = hermiticity_residual(a);
    if residual > HERMITICITY_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let mut sp = eigh(a);
    let scale = sp.eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
    for l in sp.eigenvalues.iter_mut() {
        if l.abs() <= tol * scale {
            *l = 0.0;
        }
    }
    Ok(sp)
}

/// One distinct spectral value together with its spectral projection.
#[derive(Debug, Clone)]
pub struct SpectralCluster {
    pub value: f64,
    pub projection: ComplexMatrix,
    pub multiplicity: usize,
}

/// Hermitian positive semidefinite matrix with its spectral data.
#[derive(Debug, Clone)]
pub struct PositiveOperator {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
    support_rank: usize,
    zero_threshold: f64,
    clusters: Vec<SpectralCluster>,
}

impl PositiveOperator {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(a, ZERO_TOL)
    }

    pub fn with_tolerance(a: ComplexMatrix, tol: f64) -> Result<Self> {
        let sp = hermitian_eig(&a, tol)?;
        let scale = sp.max().abs().max(1.0);
        let zero_threshold = tol * scale;
        if sp.min() < -zero_threshold {
            return Err(Error::NotPositive { min_eig: sp.min() });
        }
        Ok(Self::from_spectrum(a, sp, zero_threshold))
    }

    /// Builds from a matrix that is PSD up to rounding (e.g. the image of a
    /// PSD operator under a positive map). Only the hermiticity check is
    /// relaxed; negative eigenvalues beyond the threshold are still errors.
    pub fn from_computed(a: ComplexMatrix) -> Result<Self> {
        check_finite(&a)?;
        let h = (&a + a.adjoint()).scale(0.5);
        let mut sp = eigh(&h);
        let scale = sp.eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let zero_threshold = ZERO_TOL * scale;
        if sp.min() < -zero_threshold {
            return Err(Error::NotPositive { min_eig: sp.min() });
        }
        for l in sp.eigenvalues.iter_mut() {
            if l.abs() <= zero_threshold {
                *l = 0.0;
            }
        }
        Ok(Self::from_spectrum(h, sp, zero_threshold))
    }

    fn from_spectrum(matrix: ComplexMatrix, sp: HermitianSpectrum, zero_threshold: f64) -> Self {
        let eigenvalues: Vec<f64> = sp.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let support_rank = eigenvalues.iter().filter(|&&l| l > 0.0).count();
        let lmax = eigenvalues.last().copied().unwrap_or(0.0);
        let ctol = CLUSTER_TOL * lmax.max(1.0);
        let u = &sp.eigenvectors;
        let n = eigenvalues.len();

        let mut groups: Vec<Vec<usize>> = Vec::new();
        for j in 0..n {
            let start_new = match groups.last() {
                None => true,
                Some(g) => {
                    let prev = eigenvalues[*g.last().unwrap()];
                    (eigenvalues[j] == 0.0) != (prev == 0.0) || eigenvalues[j] - prev > ctol
                }
            };
            if start_new {
                groups.push(vec![j]);
            } else {
                groups.last_mut().unwrap().push(j);
            }
        }
        let clusters = groups
            .into_iter()
            .map(|g| {
                let value = g.iter().map(|&j| eigenvalues[j]).sum::<f64>() / g.len() as f64;
                let mut p = zeros(n, n);
                for &j in &g {
                    let v = u.column(j);
                    p += v * v.adjoint();
                }
                SpectralCluster { value, projection: p, multiplicity: g.len() }
            })
            .collect();

        PositiveOperator {
            matrix,
            eigenvalues,
            eigenvectors: sp.eigenvectors,
            support_rank,
            zero_threshold,
            clusters,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    pub fn is_invertible(&self) -> bool {
        self.support_rank == self.dim()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// Distinct spectral values (ascending, zero first when present).
    pub fn clusters(&self) -> &[SpectralCluster] {
        &self.clusters
    }

    /// Clusters with strictly positive value.
    pub fn positive_clusters(&self) -> impl Iterator<Item = &SpectralCluster> {
        self.clusters.iter().filter(|c| c.value > 0.0)
    }

    /// `U diag(f(λ)) U*` over the stored (snapped) eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(l));
        }
        &scaled * self.eigenvectors.adjoint()
    }

    fn map_complex(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            for v in scaled.column_mut(j).iter_mut() {
                *v *= s;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn support_projection(&self) -> ComplexMatrix {
        self.map(|l| if l > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn generalized_inverse(&self) -> ComplexMatrix {
        self.map(|l| if l > 0.0 { 1.0 / l } else { 0.0 })
    }

    /// Real power restricted to the support (`0^p := 0` for every `p`).
    pub fn power(&self, p: f64) -> ComplexMatrix {
        self.map(|l| if l > 0.0 { l.powf(p) } else { 0.0 })
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        self.map(|l| l.sqrt())
    }

    /// Principal-branch complex power on the support.
    pub fn complex_power(&self, z: C64) -> ComplexMatrix {
        self.map_complex(|l| if l > 0.0 { (z * l.ln()).exp() } else { C64::new(0.0, 0.0) })
    }

    /// Orthonormal basis of the support (columns).
    pub fn support_isometry(&self) -> ComplexMatrix {
        let cols: Vec<usize> = (0..self.dim()).filter(|&j| self.eigenvalues[j] > 0.0).collect();
        let u = &self.eigenvectors;
        ComplexMatrix::from_fn(u.nrows(), cols.len(), |i, k| u[(i, cols[k])])
    }

    /// Positive multiple `s·A` sharing the spectral data.
    pub fn scaled(&self, s: f64) -> Result<PositiveOperator> {
        PositiveOperator::new(self.matrix.scale(s))
    }
}

/// Linear map on Hilbert–Schmidt space, `B(C^{d_in}) → B(C^{d_out})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

/// Side of a multiplication superoperator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl SuperOperator {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != dim_out * dim_out || matrix.ncols() != dim_in * dim_in {
            return Err(Error::ShapeMismatch(format!(
                "superoperator matrix {}x{} does not match dims ({dim_in},{dim_out})",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite(&matrix)?;
        Ok(SuperOperator { dim_in, dim_out, matrix })
    }

    /// Assembles the matrix by applying `f` to every matrix unit.
    pub fn from_fn(dim_in: usize, dim_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut m = zeros(dim_out * dim_out, dim_in * dim_in);
        for j in 0..dim_in {
            for i in 0..dim_in {
                let col = i + j * dim_in;
                let y = f(&matrix_unit(dim_in, dim_in, i, j));
                m.column_mut(col).copy_from_slice(y.as_slice());
            }
        }
        SuperOperator { dim_in, dim_out, matrix: m }
    }

    pub fn identity(d: usize) -> Self {
        SuperOperator { dim_in: d, dim_out: d, matrix: identity(d * d) }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(x.shape(), (self.dim_in, self.dim_in));
        let v = &self.matrix * vectorize(x);
        unvectorize(&v, self.dim_out, self.dim_out)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SuperOperator) -> Result<SuperOperator> {
        if inner.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "compose: inner output {} vs outer input {}",
                inner.dim_out, self.dim_in
            )));
        }
        Ok(SuperOperator { dim_in: inner.dim_in, dim_out: self.dim_out, matrix: &self.matrix * &inner.matrix })
    }

    /// Hilbert–Schmidt adjoint.
    pub fn adjoint(&self) -> SuperOperator {
        SuperOperator { dim_in: self.dim_out, dim_out: self.dim_in, matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: f64) -> SuperOperator {
        SuperOperator { dim_in: self.dim_in, dim_out: self.dim_out, matrix: self.matrix.scale(s) }
    }

    pub fn add(&self, other: &SuperOperator) -> Result<SuperOperator> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("superoperator sum".into()));
        }
        Ok(SuperOperator { dim_in: self.dim_in, dim_out: self.dim_out, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        other.scale(-1.0).add(self)
    }
}

/// `L_A` (`X ↦ AX`) or `R_A` (`X ↦ XA`) for a `d × d` matrix `A`.
pub fn multiplication_superoperator(a: &ComplexMatrix, side: Side, d: usize) -> Result<SuperOperator> {
    if a.shape() != (d, d) {
        return Err(Error::ShapeMismatch(format!("expected {d}x{d}, got {:?}", a.shape())));
    }
    let m = match side {
        Side::Left => kron(&identity(d), a),
        Side::Right => kron(&a.transpose(), &identity(d)),
    };
    Ok(SuperOperator { dim_in: d, dim_out: d, matrix: m })
}

/// `L_A R_B`, i.e. `X ↦ AXB`.
pub fn sandwich_superoperator(a: &ComplexMatrix, b: &ComplexMatrix) -> SuperOperator {
    let d = a.nrows();
    SuperOperator { dim_in: d, dim_out: d, matrix: kron(&b.transpose(), a) }
}

/// Orthonormal basis (columns) of the null space of `A`, using the
/// eigen-decomposition of `A*A` with a relative cut.
pub fn null_space(a: &ComplexMatrix, rel_tol: f64) -> ComplexMatrix {
    let g = a.adjoint() * a;
    let sp = eigh(&g);
    let scale = sp.max().abs().max(1.0);
    sp.select(|l| l <= rel_tol * scale)
}

/// Gram–Schmidt orthonormalization of vectors; drops those whose residual
/// norm falls below `tol` times their original norm.
pub fn orthonormalize(vectors: &[ComplexVector], tol: f64) -> Vec<ComplexVector> {
    let mut basis: Vec<ComplexVector> = Vec::new();
    for v in vectors {
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let n = w.norm();
        if n > tol * n0 {
            basis.push(w / C64::new(n, 0.0));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        fro(&(a - b)) <= tol
    }

    #[test]
    fn eig_of_two_by_two() {
        let a = from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let sp = hermitian_eig(&a, ZERO_TOL).unwrap();
        assert!((sp.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((sp.eigenvalues[1] - 3.0).abs() < 1e-14);
        let v = sp.eigenvectors.column(0);
        assert!((v[0] + v[1]).norm() < 1e-12);
        assert!(close(&sp.reconstruct(), &a, 1e-13));
    }

    #[test]
    fn eig_rejects_non_hermitian_and_nan() {
        let a = from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(hermitian_eig(&a, ZERO_TOL), Err(Error::NotHermitian { .. })));
        let mut b = identity(2);
        b[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(hermitian_eig(&b, ZERO_TOL).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn support_and_inverse() {
        let a = PositiveOperator::new(diag(&[2.0, 0.0])).unwrap();
        assert!(close(&a.support_projection(), &diag(&[1.0, 0.0]), 1e-15));
        assert!(close(&a.generalized_inverse(), &diag(&[0.5, 0.0]), 1e-15));
        let s = 0.5f64.sqrt();
        let psi = ComplexVector::from_vec(vec![re(s), re(s)]);
        let p = PositiveOperator::new(&psi * psi.adjoint()).unwrap();
        assert!(close(&p.support_projection(), &from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]), 1e-14));
        assert_eq!(p.support_rank(), 1);
    }

    #[test]
    fn powers() {
        let a = PositiveOperator::new(diag(&[4.0, 0.0])).unwrap();
        assert!(close(&a.complex_power(re(0.5)), &diag(&[2.0, 0.0]), 1e-14));
        assert!(close(&a.complex_power(re(0.0)), &a.support_projection(), 1e-15));
        let e = std::f64::consts::E;
        let b = PositiveOperator::new(diag(&[e, 1.0])).unwrap();
        let bi = b.complex_power(c(0.0, 1.0));
        assert!((bi[(0, 0)] - c(1.0f64.cos(), 1.0f64.sin())).norm() < 1e-14);
        assert!((bi[(1, 1)] - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn clustering_merges_degenerate_values() {
        let a = PositiveOperator::new(diag(&[1.0, 1.0 + 1e-12, 3.0, 0.0])).unwrap();
        let values: Vec<f64> = a.clusters().iter().map(|c| c.value).collect();
        assert_eq!(values.len(), 3);
        assert_eq!(values[0], 0.0);
        assert_eq!(a.clusters()[1].multiplicity, 2);
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&identity(2), &identity(2)).unwrap(), re(2.0));
        let e12 = matrix_unit(2, 2, 0, 1);
        assert_eq!(hs_inner(&e12, &e12.scale(2.0).map(|z| z * c(0.0, 1.0))).unwrap(), c(0.0, 2.0));
        assert!(matches!(hs_inner(&identity(2), &identity(3)), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn partial_trace_examples() {
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 4.0]);
        let pt = partial_trace(&kron(&a, &b), Factor::Second, (2, 2)).unwrap();
        assert!(close(&pt, &a.scale(7.0), 1e-14));
        let pt1 = partial_trace(&kron(&a, &b), Factor::First, (2, 2)).unwrap();
        assert!(close(&pt1, &b.scale(3.0), 1e-14));
        let s = 0.5f64.sqrt();
        let psi = ComplexVector::from_vec(vec![re(s), re(0.0), re(0.0), re(s)]);
        let rho = &psi * psi.adjoint();
        assert!(close(&partial_trace(&rho, Factor::Second, (2, 2)).unwrap(), &identity(2).scale(0.5), 1e-15));
        assert!(partial_trace(&identity(3), Factor::Second, (2, 2)).is_err());
    }

    #[test]
    fn multiplication_superoperators() {
        let a = diag(&[1.0, 2.0]);
        let l = multiplication_superoperator(&a, Side::Left, 2).unwrap();
        let e21 = matrix_unit(2, 2, 1, 0);
        assert!(close(&l.apply(&e21), &e21.scale(2.0), 1e-15));
        let id = multiplication_superoperator(&identity(3), Side::Right, 3).unwrap();
        assert_eq!(id, SuperOperator::identity(3));
    }
}
