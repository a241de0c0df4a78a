//! Symbols `L: E → F(n, M) ⊗ E`, stored column-sparse.

use std::collections::BTreeMap;

use crate::fock::{FockVector, TruncatedFockSpace};
use crate::linalg::{self, zero};
use crate::operator::check_dense;
use crate::{CMatrix, Error, Result, C64};

/// The generator of an odometer map. Column `q` holds the coefficients of
/// `L h_q` in the canonical basis of the symbol's space.
///
/// Columns listed in `boundary` are padding for examples that need an
/// infinite coefficient space; checks that support it skip them.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    space: TruncatedFockSpace,
    columns: Vec<BTreeMap<usize, C64>>,
    boundary: Vec<usize>,
}

impl Symbol {
    /// Builds a symbol from `(row, value)` lists, one per coefficient column.
    pub fn new(space: TruncatedFockSpace, columns: Vec<Vec<(usize, C64)>>) -> Result<Self> {
        if columns.len() != space.coeff_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns for coefficient dimension {}",
                columns.len(),
                space.coeff_dim()
            )));
        }
        let dim = space.dim();
        let mut out = Vec::with_capacity(columns.len());
        for col in columns {
            let mut map = BTreeMap::new();
            for (row, v) in col {
                if row >= dim {
                    return Err(Error::DimensionMismatch(format!(
                        "row {row} outside a space of dimension {dim}"
                    )));
                }
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite("symbol entry".into()));
                }
                *map.entry(row).or_insert(zero()) += v;
            }
            map.retain(|_, v: &mut C64| *v != zero());
            out.push(map);
        }
        Ok(Symbol { space, columns: out, boundary: Vec::new() })
    }

    /// Symbol from a dense `D × d` matrix.
    pub fn from_dense(space: TruncatedFockSpace, matrix: &CMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.coeff_dim() {
            return Err(Error::DimensionMismatch(format!(
                "symbol matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim(),
                space.coeff_dim()
            )));
        }
        let columns = (0..matrix.ncols())
            .map(|q| {
                (0..matrix.nrows())
                    .filter(|&r| matrix[(r, q)] != zero())
                    .map(|r| (r, matrix[(r, q)]))
                    .collect()
            })
            .collect();
        Symbol::new(space, columns)
    }

    /// `L h_q = Σ_r e_1^{⊗r} ⊗ C_r h_q`, with `C_r = coeffs[r]` a `d × d`
    /// matrix whose column `q` is the level-`r` coefficient of `L h_q`.
    pub fn e1_series(space: TruncatedFockSpace, coeffs: &[CMatrix]) -> Result<Self> {
        let d = space.coeff_dim();
        if coeffs.len() > space.max_level() + 1 {
            return Err(Error::LevelOverflow { len: coeffs.len() - 1, max_level: space.max_level() });
        }
        let mut columns = vec![Vec::new(); d];
        for (r, block) in coeffs.iter().enumerate() {
            if block.nrows() != d || block.ncols() != d {
                return Err(Error::DimensionMismatch(format!("level-{r} block must be {d}x{d}")));
            }
            let base = space.level_start(r) * d;
            for (q, col) in columns.iter_mut().enumerate() {
                for s in 0..d {
                    col.push((base + s, block[(s, q)]));
                }
            }
        }
        Symbol::new(space, columns)
    }

    /// The constant symbol `L h = Ω ⊗ A h`.
    pub fn constant(space: TruncatedFockSpace, a: &CMatrix) -> Result<Self> {
        Symbol::e1_series(space, std::slice::from_ref(a))
    }

    /// Scalar symbol `ξ = Σ_p c_p e_1^{⊗p}` on `F(n, M)`.
    pub fn scalar_e1(n: usize, max_level: usize, coeffs: &[C64]) -> Result<Self> {
        let space = TruncatedFockSpace::new(n, max_level, 1)?;
        let blocks: Vec<CMatrix> =
            coeffs.iter().map(|&c| CMatrix::from_element(1, 1, c)).collect();
        Symbol::e1_series(space, &blocks)
    }

    /// Marks columns as padding.
    pub fn with_boundary(mut self, mut columns: Vec<usize>) -> Result<Self> {
        columns.sort_unstable();
        columns.dedup();
        if let Some(&q) = columns.iter().find(|&&q| q >= self.coeff_dim()) {
            return Err(Error::DimensionMismatch(format!("boundary column {q} out of range")));
        }
        self.boundary = columns;
        Ok(self)
    }

    pub fn space(&self) -> &TruncatedFockSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn coeff_dim(&self) -> usize {
        self.space.coeff_dim()
    }

    pub fn max_level(&self) -> usize {
        self.space.max_level()
    }

    pub fn boundary_columns(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_columns(&self) -> Vec<usize> {
        (0..self.coeff_dim()).filter(|q| !self.boundary.contains(q)).collect()
    }

    /// Largest level carrying a nonzero coefficient; `0` for the zero symbol.
    pub fn support_degree(&self) -> usize {
        let d = self.coeff_dim();
        self.columns
            .iter()
            .filter_map(|c| c.keys().next_back())
            .map(|&row| self.space.level_of_word(row / d))
            .max()
            .unwrap_or(0)
    }

    /// Nonzero entries `(row, value)` of column `q`.
    pub fn column(&self, q: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.columns[q].iter().map(|(&r, &v)| (r, v))
    }

    pub fn entry(&self, row: usize, q: usize) -> C64 {
        self.columns[q].get(&row).copied().unwrap_or(zero())
    }

    /// `L h_q` as a word-keyed vector.
    pub fn column_vector(&self, q: usize) -> FockVector {
        let d = self.coeff_dim();
        let mut v = FockVector::zero(self.n(), d);
        for (row, val) in self.column(q) {
            v.add(self.space.word_at(row / d), row % d, val);
        }
        v
    }

    /// `c^{h_q}_{r,s}`, the coefficient of `e_1^{⊗r} ⊗ h_s` in `L h_q`.
    pub fn e1_coefficient(&self, q: usize, r: usize, s: usize) -> C64 {
        if r > self.max_level() {
            return zero();
        }
        self.entry(self.space.level_start(r) * self.coeff_dim() + s, q)
    }

    fn on_diagonal(&self, row: usize) -> bool {
        let w = row / self.coeff_dim();
        w == self.space.level_start(self.space.level_of_word(w))
    }

    /// Norm of the part of `L h_q` off `span{e_1^{⊗r} ⊗ h_s}`.
    pub fn off_diagonal_norm(&self, q: usize) -> f64 {
        self.column(q)
            .filter(|&(row, _)| !self.on_diagonal(row))
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Norm of the part of `L h_q` above level 0.
    pub fn nonconstant_norm(&self, q: usize) -> f64 {
        let d = self.coeff_dim();
        self.column(q)
            .filter(|&(row, _)| row >= d)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Blocks `C_0, …, C_K` of the `e_1`-diagonal part.
    pub fn diagonal_blocks(&self, levels: usize) -> Vec<CMatrix> {
        let d = self.coeff_dim();
        (0..levels)
            .map(|r| CMatrix::from_fn(d, d, |s, q| self.e1_coefficient(q, r, s)))
            .collect()
    }

    /// The `d × d` level-0 block `A` with `P_Ω L = Ω ⊗ A`.
    pub fn level0_block(&self) -> CMatrix {
        self.diagonal_blocks(1).remove(0)
    }

    /// `L^* L` as a `d × d` matrix.
    pub fn gram(&self) -> CMatrix {
        let d = self.coeff_dim();
        CMatrix::from_fn(d, d, |i, j| {
            let (a, b) = (&self.columns[i], &self.columns[j]);
            let mut acc = zero();
            for (row, v) in b {
                if let Some(u) = a.get(row) {
                    acc += u.conj() * v;
                }
            }
            acc
        })
    }

    /// Operator norm `‖L‖`.
    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.gram()).sqrt()
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        check_dense(self.space.dim())?;
        let mut m = CMatrix::zeros(self.space.dim(), self.coeff_dim());
        for (q, col) in self.columns.iter().enumerate() {
            for (&row, &v) in col {
                m[(row, q)] = v;
            }
        }
        Ok(m)
    }

    /// The same symbol seen in a different truncation of the same space.
    /// Canonical indices do not depend on `M`, so rows carry over unchanged.
    pub fn with_max_level(&self, max_level: usize) -> Result<Symbol> {
        let sd = self.support_degree();
        if sd > max_level {
            return Err(Error::LevelOverflow { len: sd, max_level });
        }
        let space = self.space.with_max_level(max_level)?;
        Ok(Symbol { space, columns: self.columns.clone(), boundary: self.boundary.clone() })
    }
}
