//! The odometer map `W_L`: base-`n` carry on words, with overflow words fed
//! through the symbol.

use serde::Serialize;

use crate::fock::{FockVector, TruncatedFockSpace, Word};
use crate::linalg::{self, one, zero};
use crate::operator::{annihilate_left, check_dense, create_left, create_right, Operator};
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result};

/// Result of one carry step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Carry {
    Word(Word),
    /// The word was `n^{⊗m}`; the image is `e_1^{⊗m} ⊗ Lη`.
    Overflow(usize),
}

/// `n^k (a, …) ↦ 1^k (a+1, …)` for `a ≠ n`; `n^m ↦ overflow(m)`.
pub fn carry_successor(word: &Word) -> Result<Carry> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let n = word.n();
    let letters = word.letters();
    match letters.iter().position(|&l| l != n) {
        None => Ok(Carry::Overflow(letters.len())),
        Some(k) => {
            let mut out = vec![1; k];
            out.push(letters[k] + 1);
            out.extend_from_slice(&letters[k + 1..]);
            Ok(Carry::Word(Word::new(n, out)?))
        }
    }
}

/// `e_1^{⊗m} ⊗ v`.
fn lift_by_ones(v: &FockVector, m: usize) -> FockVector {
    let mut out = FockVector::zero(v.n(), v.coeff_dim());
    let prefix = Word::repeat(v.n(), 1, m).expect("letter 1 is always valid");
    for (w, p, val) in v.iter() {
        out.add(prefix.concat(w), p, val);
    }
    out
}

/// `W_L (e_μ ⊗ h_p)` without truncation.
pub fn apply_basis(symbol: &Symbol, word: &Word, p: usize) -> Result<FockVector> {
    let d = symbol.coeff_dim();
    if word.n() != symbol.n() || p >= d {
        return Err(Error::DimensionMismatch("basis vector does not match symbol".into()));
    }
    let m = if word.is_empty() {
        0
    } else {
        match carry_successor(word)? {
            Carry::Word(next) => return Ok(FockVector::basis(next, p, d)),
            Carry::Overflow(m) => m,
        }
    };
    Ok(lift_by_ones(&symbol.column_vector(p), m))
}

/// `W_L v` without truncation.
pub fn apply(symbol: &Symbol, v: &FockVector) -> Result<FockVector> {
    let mut out = FockVector::zero(symbol.n(), symbol.coeff_dim());
    for (w, p, val) in v.iter() {
        out.add_scaled(&apply_basis(symbol, w, p)?, val);
    }
    Ok(out)
}

/// Closed-form `W_L^* (e_ν ⊗ h_l)`, valid for `e_1`-supported symbols:
/// `e_1^m ⊗ h_l ↦ Σ_{p≤m} Σ_q conj(c^{h_q}_{m−p,l}) e_n^{⊗p} ⊗ h_q` and
/// `e_1^m ⊗ e_a ⊗ ρ ⊗ h_l ↦ e_n^m ⊗ e_{a−1} ⊗ ρ ⊗ h_l` for `a > 1`.
pub fn adjoint_basis_formula(symbol: &Symbol, word: &Word, l: usize) -> Result<FockVector> {
    let n = symbol.n();
    let d = symbol.coeff_dim();
    if word.n() != n || l >= d {
        return Err(Error::DimensionMismatch("basis vector does not match symbol".into()));
    }
    let letters = word.letters();
    let m = letters.iter().take_while(|&&a| a == 1).count();
    let mut out = FockVector::zero(n, d);
    if m == letters.len() {
        for p in 0..=m {
            let prefix = Word::repeat(n, n, p)?;
            for q in 0..d {
                let c = symbol.e1_coefficient(q, m - p, l);
                if c != zero() {
                    out.add(prefix.clone(), q, c.conj());
                }
            }
        }
    } else {
        let mut pre = vec![n; m];
        pre.push(letters[m] - 1);
        pre.extend_from_slice(&letters[m + 1..]);
        out.add(Word::new(n, pre)?, l, one());
    }
    Ok(out)
}

/// `W_L^* v` through [`adjoint_basis_formula`].
pub fn apply_adjoint_formula(symbol: &Symbol, v: &FockVector) -> Result<FockVector> {
    let mut out = FockVector::zero(symbol.n(), symbol.coeff_dim());
    for (w, p, val) in v.iter() {
        out.add_scaled(&adjoint_basis_formula(symbol, w, p)?, val);
    }
    Ok(out)
}

/// The truncated matrix of `W_L` together with its symbol.
#[derive(Clone, Debug)]
pub struct OdometerMap {
    symbol: Symbol,
    operator: Operator,
}

impl OdometerMap {
    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn matrix(&self) -> &CMatrix {
        self.operator.matrix()
    }

    pub fn space(&self) -> TruncatedFockSpace {
        self.operator.space().expect("odometer maps act on Fock spaces")
    }

    pub fn into_parts(self) -> (Symbol, Operator) {
        (self.symbol, self.operator)
    }

    /// Columns at levels below this value are exact.
    pub fn exact_below(&self) -> usize {
        self.operator.exact_below()
    }
}

/// Dense `W_L` on the symbol's own truncation, exact below `M − sd + 1`.
pub fn build_odometer(symbol: &Symbol) -> Result<OdometerMap> {
    build_odometer_at(symbol, symbol.max_level())
}

/// Dense `W_L` on `F(n, level) ⊗ E`. When `level` is smaller than the
/// symbol's own truncation the window shrinks to `level + 1 − sd` (possibly
/// zero).
pub fn build_odometer_at(symbol: &Symbol, level: usize) -> Result<OdometerMap> {
    let space = symbol.space().with_max_level(level)?;
    check_dense(space.dim())?;
    let d = space.coeff_dim();
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for wi in 0..space.num_words() {
        let word = space.word_at(wi);
        for p in 0..d {
            let col = wi * d + p;
            let image = apply_basis(symbol, &word, p)?;
            for (w, s, v) in image.iter() {
                if w.len() <= level {
                    m[(space.basis_index(w, s)?, col)] += v;
                }
            }
        }
    }
    let exact_below = (level + 1).saturating_sub(symbol.support_degree());
    let operator = Operator::new(space, m, exact_below)?;
    Ok(OdometerMap { symbol: symbol.clone(), operator })
}

/// Residual of one odometer relation.
#[derive(Clone, Debug, Serialize)]
pub struct RelationResidual {
    pub relation: String,
    pub residual: f64,
}

/// Outcome of [`verify_fock_representation`].
#[derive(Clone, Debug)]
pub struct FockVerdict {
    pub passed: bool,
    pub relations: Vec<RelationResidual>,
    /// Relations are compared on columns at levels below this value.
    pub window: usize,
    /// `Lη = W(Ω ⊗ η)`, present when the relations hold.
    pub symbol: Option<Symbol>,
}

impl FockVerdict {
    pub fn max_residual(&self) -> f64 {
        self.relations.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Checks `W(S_k ⊗ I) = S_{k+1} ⊗ I` for `k < n` and
/// `W(S_n ⊗ I) = (S_1 ⊗ I)W` on the common exactness window, using the
/// Frobenius norm of the windowed difference.
pub fn verify_fock_representation(
    w: &Operator,
    space: &TruncatedFockSpace,
    tol: f64,
) -> Result<FockVerdict> {
    if w.space() != Some(*space) {
        return Err(Error::DimensionMismatch("operator does not act on the given space".into()));
    }
    let n = space.n();
    let window = w.exact_below().saturating_sub(1).min(space.max_level());
    let cols = space.window_dim(window);
    let a = w.matrix();
    let windowed = |m: &CMatrix| m.columns(0, cols).norm();
    let mut relations = Vec::with_capacity(n);
    for k in 1..n {
        let lhs = create_right(a, k, space);
        let rhs = create_right(&CMatrix::identity(space.dim(), space.dim()), k + 1, space);
        relations.push(RelationResidual {
            relation: format!("W S_{k} = S_{}", k + 1),
            residual: windowed(&(lhs - rhs)),
        });
    }
    let lhs = create_right(a, n, space);
    let rhs = create_left(1, space, a);
    relations.push(RelationResidual {
        relation: format!("W S_{n} = S_1 W"),
        residual: windowed(&(lhs - rhs)),
    });
    let passed = relations.iter().all(|r| r.residual <= tol);
    let d = space.coeff_dim();
    let symbol = if passed && w.exact_below() >= 1 {
        Some(Symbol::from_dense(*space, &a.columns(0, d).into_owned())?)
    } else {
        None
    };
    Ok(FockVerdict { passed, relations, window, symbol })
}

/// Dense `W_L^*` from the closed formula. Requires an `e_1`-supported
/// symbol whose odometer map is isometric; for other symbols no formula is
/// known.
pub fn adjoint_isometric(map: &OdometerMap, tol: f64) -> Result<Operator> {
    let symbol = map.symbol();
    let off = (0..symbol.coeff_dim())
        .map(|q| symbol.off_diagonal_norm(q))
        .fold(0.0, f64::max);
    if off > 1e-12 {
        return Err(Error::Precondition(format!(
            "symbol is not e_1-supported (off-diagonal mass {off:.3e})"
        )));
    }
    let iso = crate::classify::check_isometric(symbol, symbol.max_level(), tol, 0)?;
    if !iso.verdict {
        return Err(Error::Precondition(
            "W_L is not isometric; no closed-form adjoint is known for non-isometric symbols"
                .into(),
        ));
    }
    adjoint_from_formula(map)
}

pub(crate) fn adjoint_from_formula(map: &OdometerMap) -> Result<Operator> {
    let space = map.space();
    let symbol = map.symbol();
    let d = space.coeff_dim();
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    for wi in 0..space.num_words() {
        let word = space.word_at(wi);
        for l in 0..d {
            let col = wi * d + l;
            for (w, q, v) in adjoint_basis_formula(symbol, &word, l)?.iter() {
                m[(space.basis_index(w, q)?, col)] += v;
            }
        }
    }
    // the formula never raises the level, so every column is exact
    Operator::new(space, m, space.max_level() + 1)
}

/// `‖L‖` and the truncated `‖W_L‖` with the bound `‖L‖ ≤ ‖W_L‖ ≤ 1 + ‖L‖`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormBounds {
    pub symbol_norm: f64,
    pub odometer_norm: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn norm_bounds(map: &OdometerMap) -> NormBounds {
    let symbol_norm = map.symbol().norm();
    let odometer_norm = map.operator().norm();
    let slack = 1e-12;
    NormBounds {
        symbol_norm,
        odometer_norm,
        lower_holds: symbol_norm <= odometer_norm + slack,
        upper_holds: odometer_norm <= 1.0 + symbol_norm + slack,
    }
}

/// Level block of `W_L` on `H_m ⊗ E` and the norm of what leaks out of the
/// level, computed without truncation.
pub fn level_block(symbol: &Symbol, m: usize) -> Result<(CMatrix, f64)> {
    let n = symbol.n();
    let d = symbol.coeff_dim();
    let space = TruncatedFockSpace::new(n, m, d)?;
    let range = space.level_range(m);
    check_dense(range.len())?;
    let base = range.start;
    let mut block = CMatrix::zeros(range.len(), range.len());
    let mut leak: f64 = 0.0;
    for col in range.clone() {
        let (word, p) = space.basis_label(col);
        for (w, s, v) in apply_basis(symbol, &word, p)?.iter() {
            if w.len() == m {
                block[(space.basis_index(w, s)? - base, col - base)] += v;
            } else {
                leak += v.norm_sqr();
            }
        }
    }
    Ok((block, leak.sqrt()))
}

/// `(S_i ⊗ I)^* W` on a dense operator, exposed for witness checks.
pub fn annihilate_after(i: usize, space: &TruncatedFockSpace, a: &CMatrix) -> CMatrix {
    annihilate_left(i, space, a)
}

/// `‖A − B‖` restricted to the first `cols` columns, in operator norm.
pub fn windowed_distance(a: &CMatrix, b: &CMatrix, cols: usize) -> f64 {
    linalg::op_norm(&(a.columns(0, cols) - b.columns(0, cols)))
}
