//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use crate::{CMatrix, Error, Result, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Largest singular value; `0` for empty matrices.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd_unordered(false, false)
        .singular_values
        .iter()
        .fold(0.0, |m: f64, &s| m.max(s))
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m: f64, z| m.max(z.norm()))
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖A − I‖` in operator norm.
pub fn identity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    op_norm(&(a - CMatrix::identity(n, a.ncols())))
}

/// Orthonormal basis of the column span, keeping singular values above `tol`.
pub fn range_basis(a: &CMatrix, tol: f64) -> CMatrix {
    if a.is_empty() {
        return CMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol)
        .collect();
    u.select_columns(&keep)
}

/// Numerical rank with absolute singular-value threshold `tol`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    a.clone()
        .svd_unordered(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Orthonormal basis of `(span within) ⊖ (span columns)`, the vectors of
/// `span within` orthogonal to every column of `columns`.
pub fn orthonormal_complement(columns: &CMatrix, within: &CMatrix, tol: f64) -> Result<CMatrix> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("rank tolerance must be positive, got {tol}")));
    }
    if columns.nrows() != within.nrows() && columns.ncols() > 0 {
        return Err(Error::DimensionMismatch(format!(
            "columns live in dimension {}, ambient span in {}",
            columns.nrows(),
            within.nrows()
        )));
    }
    let qw = range_basis(within, tol);
    let qc = range_basis(columns, tol);
    let kw = qw.ncols();
    if kw == 0 || qc.ncols() == 0 {
        return Ok(qw);
    }
    // null space of Qc* Qw, padded square so that V is complete
    let cross = qc.adjoint() * &qw;
    let rows = cross.nrows().max(kw);
    let mut padded = CMatrix::zeros(rows, kw);
    padded.view_mut((0, 0), (cross.nrows(), kw)).copy_from(&cross);
    let svd = padded.svd_unordered(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= tol)
        .collect();
    let mut y = CMatrix::zeros(kw, null.len());
    for (j, &k) in null.iter().enumerate() {
        for i in 0..kw {
            y[(i, j)] = v_t[(k, i)].conj();
        }
    }
    Ok(range_basis(&(qw * y), tol))
}

/// Orthogonal projection onto the span of orthonormal columns `q`.
pub fn projector(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// Eigendecomposition of the Hermitian part of `a`: real eigenvalues and
/// orthonormal eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    if a.is_empty() {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let h = (a + a.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Square root of a positive semidefinite matrix. Eigenvalues in
/// `[-neg_tol, 0)` are clamped to zero; anything more negative is an error.
pub fn psd_sqrt(a: &CMatrix, neg_tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(a);
    if let Some(&bad) = vals.iter().find(|&&v| v < -neg_tol) {
        return Err(Error::Precondition(format!(
            "matrix is not positive semidefinite (eigenvalue {bad:.3e})"
        )));
    }
    let roots = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)),
    ));
    Ok(&vecs * roots * vecs.adjoint())
}

/// Eigenvalues of a general square matrix, read off the diagonal of its
/// complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Vec<C64> {
    if a.is_empty() {
        return Vec::new();
    }
    let (_, t) = Schur::new(a.clone()).unpack();
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// Hausdorff distance between two finite subsets of the plane.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let one_way = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Least-squares solution `X` of `A X = B` through the pseudo-inverse.
pub fn solve_least_squares(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch("least squares row counts differ".into()));
    }
    if a.is_empty() {
        return Ok(CMatrix::zeros(a.ncols(), b.ncols()));
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, tol)
        .map_err(|e| Error::Precondition(format!("least squares failed: {e}")))
}
