//! Truncated operators with exactness windows, and the creation operators.

use crate::fock::TruncatedFockSpace;
use crate::linalg::{self, one};
use crate::{CMatrix, Error, Result, DENSE_LIMIT};

/// Where an operator acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Fock(TruncatedFockSpace),
    /// A plain `C^N`; each basis index counts as its own level.
    Plain(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Fock(s) => s.dim(),
            Domain::Plain(n) => *n,
        }
    }

    /// Largest admissible window value.
    pub fn max_window(&self) -> usize {
        match self {
            Domain::Fock(s) => s.max_level() + 1,
            Domain::Plain(n) => *n,
        }
    }

    /// Number of leading basis columns inside window `w`.
    pub fn window_dim(&self, w: usize) -> usize {
        match self {
            Domain::Fock(s) => s.window_dim(w),
            Domain::Plain(n) => w.min(*n),
        }
    }
}

/// A square complex matrix together with the level `exact_below` below which
/// its columns carry no truncation error.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    domain: Domain,
    matrix: CMatrix,
    exact_below: usize,
}

impl Operator {
    pub fn new(space: TruncatedFockSpace, matrix: CMatrix, exact_below: usize) -> Result<Self> {
        Operator::with_domain(Domain::Fock(space), matrix, exact_below)
    }

    pub fn plain(matrix: CMatrix, exact_below: usize) -> Result<Self> {
        let n = matrix.nrows();
        Operator::with_domain(Domain::Plain(n), matrix, exact_below)
    }

    pub fn with_domain(domain: Domain, matrix: CMatrix, exact_below: usize) -> Result<Self> {
        let d = domain.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, domain has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite("operator matrix".into()));
        }
        if exact_below > domain.max_window() {
            return Err(Error::WindowViolation(format!(
                "exact_below {exact_below} exceeds {}",
                domain.max_window()
            )));
        }
        Ok(Operator { domain, matrix, exact_below })
    }

    pub fn identity(space: TruncatedFockSpace) -> Result<Self> {
        check_dense(space.dim())?;
        Operator::new(space, CMatrix::identity(space.dim(), space.dim()), space.max_level() + 1)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn space(&self) -> Option<TruncatedFockSpace> {
        match self.domain {
            Domain::Fock(s) => Some(s),
            Domain::Plain(_) => None,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn exact_below(&self) -> usize {
        self.exact_below
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of exact leading columns.
    pub fn window_dim(&self) -> usize {
        self.domain.window_dim(self.exact_below)
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    /// Conjugate transpose of the truncated matrix. This is only an
    /// approximation of the adjoint of the untruncated operator.
    pub fn truncated_adjoint(&self) -> CMatrix {
        self.matrix.adjoint()
    }
}

/// Largest singular value of the operator's matrix.
pub fn op_norm(a: &Operator) -> f64 {
    a.norm()
}

pub(crate) fn check_dense(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge { dim, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// `S_i ⊗ I_E` truncated to `space`; level-`M` columns are annihilated.
pub fn creation_operator(i: usize, space: &TruncatedFockSpace) -> Result<Operator> {
    if i == 0 || i > space.n() {
        return Err(Error::InvalidLetter { letter: i, n: space.n() });
    }
    check_dense(space.dim())?;
    let d = space.coeff_dim();
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for w in 0..space.num_words() {
        if let Some(v) = space.prepend_index(i, w) {
            for p in 0..d {
                m[(v * d + p, w * d + p)] = one();
            }
        }
    }
    Operator::new(*space, m, space.max_level())
}

/// `(S_i ⊗ I) A` computed by moving rows.
pub fn create_left(i: usize, space: &TruncatedFockSpace, a: &CMatrix) -> CMatrix {
    let d = space.coeff_dim();
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for w in 0..space.num_words() {
        if let Some(v) = space.prepend_index(i, w) {
            for p in 0..d {
                out.row_mut(v * d + p).copy_from(&a.row(w * d + p));
            }
        }
    }
    out
}

/// `(S_i ⊗ I)^* A` computed by moving rows.
pub fn annihilate_left(i: usize, space: &TruncatedFockSpace, a: &CMatrix) -> CMatrix {
    let d = space.coeff_dim();
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for w in 0..space.num_words() {
        if let Some(v) = space.prepend_index(i, w) {
            for p in 0..d {
                out.row_mut(w * d + p).copy_from(&a.row(v * d + p));
            }
        }
    }
    out
}

/// `A (S_i ⊗ I)` computed by moving columns.
pub fn create_right(a: &CMatrix, i: usize, space: &TruncatedFockSpace) -> CMatrix {
    let d = space.coeff_dim();
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for w in 0..space.num_words() {
        if let Some(v) = space.prepend_index(i, w) {
            for p in 0..d {
                out.column_mut(w * d + p).copy_from(&a.column(v * d + p));
            }
        }
    }
    out
}
