//! Seeded generators for symbols and matrices.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::fock::TruncatedFockSpace;
use crate::linalg::{c, one};
use crate::symbol::Symbol;
use crate::{CMatrix, Result, C64};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    if d == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = gaussian_matrix(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DVector::from_iterator(
        d,
        (0..d).map(|k| {
            let z = r[(k, k)];
            if z.norm() > 0.0 { z / c(z.norm(), 0.0) } else { one() }
        }),
    );
    q * CMatrix::from_diagonal(&phases)
}

/// A symbol with independent Gaussian entries on every row, scaled by
/// `scale`.
pub fn dense_symbol<R: Rng + ?Sized>(space: TruncatedFockSpace, scale: f64, rng: &mut R) -> Result<Symbol> {
    let m = gaussian_matrix(space.dim(), space.coeff_dim(), rng) * c(scale, 0.0);
    Symbol::from_dense(space, &m)
}

/// An `e_1`-diagonal symbol with Gaussian blocks at levels `0..=degree`.
pub fn e1_symbol<R: Rng + ?Sized>(
    space: TruncatedFockSpace,
    degree: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Symbol> {
    let d = space.coeff_dim();
    let blocks: Vec<CMatrix> = (0..=degree.min(space.max_level()))
        .map(|_| gaussian_matrix(d, d, rng) * c(scale, 0.0))
        .collect();
    Symbol::e1_series(space, &blocks)
}

/// An isometric `e_1`-supported symbol: `E` is split into blocks `E_j`,
/// each sent by a unitary into `e_1^{⊗m_j} ⊗ E_j` with `m_j ≤ max_degree`,
/// then the whole symbol is conjugated by a unitary on `E`. The result is
/// constant exactly when every `m_j` is zero.
pub fn isometric_symbol<R: Rng + ?Sized>(
    space: TruncatedFockSpace,
    max_degree: usize,
    rng: &mut R,
) -> Result<Symbol> {
    let d = space.coeff_dim();
    let top = max_degree.min(space.max_level());
    let mut blocks = vec![CMatrix::zeros(d, d); top + 1];
    let mut start = 0;
    while start < d {
        let size = rng.random_range(1..=d - start);
        let level = rng.random_range(0..=top);
        let u = unitary(size, rng);
        blocks[level].view_mut((start, start), (size, size)).copy_from(&u);
        start += size;
    }
    let v = unitary(d, rng);
    let conj: Vec<CMatrix> = blocks.iter().map(|b| &v * b * v.adjoint()).collect();
    Symbol::e1_series(space, &conj)
}

/// A constant symbol `Ω ⊗ A` with `A` unitary.
pub fn constant_unitary_symbol<R: Rng + ?Sized>(space: TruncatedFockSpace, rng: &mut R) -> Result<Symbol> {
    Symbol::constant(space, &unitary(space.coeff_dim(), rng))
}

/// Random unit vector in `C^d`.
pub fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let v = gaussian_matrix(d, 1, rng);
    let nv = v.norm();
    if nv == 0.0 {
        let mut e = CMatrix::zeros(d, 1);
        e[(0, 0)] = one();
        return e;
    }
    v / c(nv, 0.0)
}
