//! Isometric, Nica-covariant and unitary classification of odometer maps
//! from their symbols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::fock::{FockVector, TruncatedFockSpace, Word};
use crate::linalg::{self, c, zero};
use crate::odometer::{self, apply, apply_adjoint_formula};
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result, C64};

/// Number of random vectors used by the norm cross-check.
pub const RANDOM_VECTORS: usize = 50;

/// Default cap on the number of words visited by matrix-free relation checks.
pub const RELATION_WORD_CAP: usize = 1024;

/// Orthonormal basis of the truncated `E_L`, in `e_1`-diagonal coordinates:
/// row `m·d + s` is the coefficient of `e_1^{⊗m} ⊗ h_s`.
#[derive(Clone, Debug)]
pub struct ELSpace {
    pub level: usize,
    pub coeff_dim: usize,
    pub basis: CMatrix,
}

impl ELSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// The basis as dense columns of `F(n, level) ⊗ E`.
    pub fn to_fock(&self, n: usize) -> Result<CMatrix> {
        let space = TruncatedFockSpace::new(n, self.level, self.coeff_dim)?;
        crate::operator::check_dense(space.dim())?;
        let d = self.coeff_dim;
        let mut out = CMatrix::zeros(space.dim(), self.dim());
        for m in 0..=self.level {
            let base = space.level_start(m) * d;
            for s in 0..d {
                out.row_mut(base + s).copy_from(&self.basis.row(m * d + s));
            }
        }
        Ok(out)
    }

    /// Distance from `L h_q` to `E_L` for every column `q`, counting the
    /// off-diagonal mass of `L h_q` as lying outside.
    pub fn range_residual(&self, symbol: &Symbol) -> f64 {
        let d = self.coeff_dim;
        let rows = (self.level + 1) * d;
        let mut worst: f64 = 0.0;
        for q in symbol.interior_columns() {
            let v = CMatrix::from_fn(rows, 1, |i, _| symbol.e1_coefficient(q, i / d, i % d));
            let proj = &self.basis * (self.basis.adjoint() * &v);
            let inside = (v - proj).norm();
            worst = worst.max(inside.hypot(symbol.off_diagonal_norm(q)));
        }
        worst
    }
}

/// `span{e_1^{⊗m} ⊗ η : m ≤ K} ∩ span{e_1^{⊗p} ⊗ Lζ : 1 ≤ p ≤ K − sd}^⊥`.
pub fn compute_e_l(symbol: &Symbol, level: usize, tol: f64) -> Result<ELSpace> {
    let d = symbol.coeff_dim();
    let sd = symbol.support_degree();
    let rows = (level + 1) * d;
    let within = CMatrix::identity(rows, rows);
    let shifts = level.saturating_sub(sd);
    let interior = symbol.interior_columns();
    let mut b = CMatrix::zeros(rows, shifts * interior.len());
    for p in 1..=shifts {
        for (j, &q) in interior.iter().enumerate() {
            let col = (p - 1) * interior.len() + j;
            for r in 0..=sd.min(level - p) {
                for s in 0..d {
                    b[((p + r) * d + s, col)] = symbol.e1_coefficient(q, r, s);
                }
            }
        }
    }
    let basis = linalg::orthonormal_complement(&b, &within, tol)?;
    Ok(ELSpace { level, coeff_dim: d, basis })
}

/// Outcome of [`check_isometric`].
#[derive(Clone, Debug, Serialize)]
pub struct IsometryCheck {
    pub verdict: bool,
    /// `‖L^*L − I‖` over the interior columns.
    pub isometry_residual: f64,
    pub e1_support_residual: f64,
    /// `max_r |Σ_{p,s} c^η_{p+r,s} conj(c^ζ_{p,s})|` over `r = 1..sd`.
    pub gram_residual: f64,
    /// Deviation of the `W_L` columns at levels below the window from an
    /// orthonormal family.
    pub column_residual: f64,
    /// Worst relative defect `|‖W_L v‖² − ‖v‖²| / ‖v‖²` over random vectors.
    pub random_norm_residual: f64,
    pub window: usize,
    pub cross_check_agrees: bool,
    pub interior_columns: Vec<usize>,
}

/// Matrices `H_r = Σ_p C_p^* C_{p+r}` restricted to the interior columns.
fn shifted_grams(symbol: &Symbol) -> Vec<CMatrix> {
    let sd = symbol.support_degree();
    let blocks = symbol.diagonal_blocks(sd + 1);
    let interior = symbol.interior_columns();
    (0..=sd)
        .map(|r| {
            let mut h = CMatrix::zeros(symbol.coeff_dim(), symbol.coeff_dim());
            for p in 0..=(sd - r) {
                h += blocks[p].adjoint() * &blocks[p + r];
            }
            h.select_rows(&interior).select_columns(&interior)
        })
        .collect()
}

/// Tests `L^*L = I`, `e_1`-support and the shifted Gram sums, then cross
/// checks against the action of `W_L` on columns at levels below `window`.
pub fn check_isometric(symbol: &Symbol, window: usize, tol: f64, seed: u64) -> Result<IsometryCheck> {
    let interior = symbol.interior_columns();
    let gram = symbol.gram().select_rows(&interior).select_columns(&interior);
    let isometry_residual = linalg::identity_defect(&gram);
    let e1_support_residual = interior
        .iter()
        .map(|&q| symbol.off_diagonal_norm(q))
        .fold(0.0, f64::max);
    let gram_residual = shifted_grams(symbol)
        .iter()
        .skip(1)
        .map(linalg::max_abs)
        .fold(0.0, f64::max);
    let verdict = isometry_residual <= tol && e1_support_residual <= tol && gram_residual <= tol;

    let column_residual = overflow_column_residual(symbol, window, &interior)?;
    let random_norm_residual = random_norm_defect(symbol, window, &interior, seed)?;
    let cross = column_residual <= tol && random_norm_residual <= tol;
    Ok(IsometryCheck {
        verdict,
        isometry_residual,
        e1_support_residual,
        gram_residual,
        column_residual,
        random_norm_residual,
        window,
        cross_check_agrees: cross == verdict,
        interior_columns: interior,
    })
}

/// Columns `W(e_n^{⊗m} ⊗ h_q) = e_1^{⊗m} ⊗ Lh_q` for `m < window` must be
/// orthonormal and orthogonal to the carry columns, which are themselves
/// distinct basis vectors `e_ν ⊗ h_p` with `ν` not a power of `1`.
fn overflow_column_residual(symbol: &Symbol, window: usize, interior: &[usize]) -> Result<f64> {
    let n = symbol.n();
    let mut images = Vec::with_capacity(window * interior.len());
    for m in 0..window {
        let word = Word::repeat(n, n, m)?;
        for &q in interior {
            images.push(odometer::apply_basis(symbol, &word, q)?);
        }
    }
    let mut worst: f64 = 0.0;
    for (i, u) in images.iter().enumerate() {
        for (j, v) in images.iter().enumerate().skip(i) {
            let target = if i == j { c(1.0, 0.0) } else { zero() };
            worst = worst.max((u.inner(v) - target).norm());
        }
        let carry_overlap: f64 = u
            .iter()
            .filter(|(w, p, _)| w.len() < window && !w.is_power_of(1) && interior.contains(p))
            .map(|(_, _, v)| v.norm_sqr())
            .sum();
        worst = worst.max(carry_overlap.sqrt());
    }
    Ok(worst)
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_word_below(n: usize, window: usize, rng: &mut ChaCha8Rng) -> Result<Word> {
    let len = rng.random_range(0..window.max(1));
    let letters = (0..len).map(|_| rng.random_range(1..=n)).collect();
    Word::new(n, letters)
}

fn random_norm_defect(symbol: &Symbol, window: usize, interior: &[usize], seed: u64) -> Result<f64> {
    if window == 0 || interior.is_empty() {
        return Ok(0.0);
    }
    let n = symbol.n();
    let d = symbol.coeff_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_VECTORS {
        let mut v = FockVector::zero(n, d);
        for m in 0..window {
            let word = Word::repeat(n, n, m)?;
            for &q in interior {
                v.add(word.clone(), q, gaussian(&mut rng));
            }
        }
        for _ in 0..8 {
            let word = random_word_below(n, window, &mut rng)?;
            let q = interior[rng.random_range(0..interior.len())];
            v.add(word, q, gaussian(&mut rng));
        }
        let before = v.norm_sqr();
        let after = apply(symbol, &v)?.norm_sqr();
        worst = worst.max((after - before).abs() / before);
    }
    Ok(worst)
}

/// Outcome of [`check_nica`].
#[derive(Clone, Debug, Serialize)]
pub struct NicaCheck {
    pub verdict: bool,
    /// Norm of the symbol above level 0, worst interior column.
    pub constant_residual: f64,
    /// `max ‖W^*(S_1 ⊗ I)f − (S_n ⊗ I)W^* f‖` over basis vectors `f` below
    /// `relation_levels`.
    pub relation_residual: f64,
    pub relation_levels: usize,
    pub relation_agrees: bool,
}

/// Number of levels whose words fit inside `cap`, never more than `max_level`.
pub fn relation_levels(n: usize, max_level: usize, cap: usize) -> usize {
    let mut levels = 0;
    let mut words = 0usize;
    let mut size = 1usize;
    while levels <= max_level {
        match words.checked_add(size) {
            Some(w) if w <= cap => words = w,
            _ => break,
        }
        levels += 1;
        size = match size.checked_mul(n) {
            Some(s) => s,
            None => break,
        };
    }
    levels.max(1)
}

fn require_isometric(symbol: &Symbol, tol: f64) -> Result<()> {
    let iso = check_isometric(symbol, 0, tol, 0)?;
    if !iso.verdict {
        return Err(Error::Precondition(format!(
            "W_L is not isometric (isometry {:.3e}, support {:.3e}, gram {:.3e})",
            iso.isometry_residual, iso.e1_support_residual, iso.gram_residual
        )));
    }
    Ok(())
}

fn constant_residual(symbol: &Symbol) -> f64 {
    symbol
        .interior_columns()
        .iter()
        .map(|&q| symbol.nonconstant_norm(q))
        .fold(0.0, f64::max)
}

/// Nica covariance: the symbol must be constant. The defining relation
/// `W^*(S_1 ⊗ I) = (S_n ⊗ I)W^*` is evaluated independently with the
/// closed-form adjoint.
pub fn check_nica(symbol: &Symbol, tol: f64, levels: usize) -> Result<NicaCheck> {
    require_isometric(symbol, tol)?;
    let constant_residual = constant_residual(symbol);
    let verdict = constant_residual <= tol;
    let n = symbol.n();
    let d = symbol.coeff_dim();
    let space = TruncatedFockSpace::new(n, levels.saturating_sub(1), d)?;
    let mut relation_residual: f64 = 0.0;
    for wi in 0..space.level_start(levels) {
        let word = space.word_at(wi);
        for l in symbol.interior_columns() {
            let f = FockVector::basis(word.clone(), l, d);
            let lhs = apply_adjoint_formula(symbol, &f.create(1)?)?;
            let rhs = apply_adjoint_formula(symbol, &f)?.create(n)?;
            relation_residual = relation_residual.max(lhs.sub(&rhs).norm());
        }
    }
    Ok(NicaCheck {
        verdict,
        constant_residual,
        relation_residual,
        relation_levels: levels,
        relation_agrees: (relation_residual <= tol) == verdict,
    })
}

/// Outcome of [`check_unitary`].
#[derive(Clone, Debug, Serialize)]
pub struct UnitaryCheck {
    pub verdict: bool,
    pub constant_residual: f64,
    /// `max(‖A^*A − I‖, ‖AA^* − I‖)` for the level-0 block `A`.
    pub unitarity_residual: f64,
    /// `d − rank A`.
    pub surjectivity_defect: usize,
    /// Worst deviation of a level block of `W_L` from a unitary, including
    /// the mass that leaves the level.
    pub block_residual: f64,
    pub block_levels: usize,
    pub block_agrees: bool,
}

/// Largest number of level blocks of size at most `cap` to inspect.
pub fn block_levels(n: usize, d: usize, max_level: usize, cap: usize) -> usize {
    let mut m = 0;
    while m <= max_level && n.checked_pow(m as u32).and_then(|s| s.checked_mul(d)).is_some_and(|s| s <= cap) {
        m += 1;
        if n == 1 && m > 8 {
            break;
        }
    }
    m
}

/// Unitarity: constant symbol with unitary level-0 block. Cross-checked on
/// the level blocks of `W_L`.
pub fn check_unitary(symbol: &Symbol, tol: f64, levels: usize) -> Result<UnitaryCheck> {
    require_isometric(symbol, tol)?;
    let constant_residual = constant_residual(symbol);
    let a = symbol.level0_block();
    let d = a.nrows();
    let unitarity_residual = linalg::identity_defect(&(a.adjoint() * &a))
        .max(linalg::identity_defect(&(&a * a.adjoint())));
    let surjectivity_defect = d - linalg::rank(&a, tol.max(1e-12));
    let verdict = constant_residual <= tol && unitarity_residual <= tol;
    let mut block_residual: f64 = 0.0;
    for m in 0..levels {
        let (b, leak) = odometer::level_block(symbol, m)?;
        let r = linalg::identity_defect(&(b.adjoint() * &b))
            .max(linalg::identity_defect(&(&b * b.adjoint())))
            .max(leak);
        block_residual = block_residual.max(r);
    }
    Ok(UnitaryCheck {
        verdict,
        constant_residual,
        unitarity_residual,
        surjectivity_defect,
        block_residual,
        block_levels: levels,
        block_agrees: (block_residual <= tol) == verdict,
    })
}

/// Options for [`classify`].
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub window: usize,
    pub tol: f64,
    pub seed: u64,
}

impl ClassifyOptions {
    pub fn for_symbol(symbol: &Symbol) -> Self {
        ClassifyOptions { window: symbol.max_level(), tol: crate::DEFAULT_TOL, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Residuals {
    pub isometry_residual: f64,
    pub gram_residual: f64,
    pub e1_support_residual: f64,
    pub column_residual: f64,
    pub random_norm_residual: f64,
    pub constant_residual: f64,
    pub unitarity_residual: f64,
    pub surjectivity_defect: f64,
    pub nica_residual: Option<f64>,
    pub block_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub is_isometric: bool,
    pub is_nica: bool,
    pub is_unitary: bool,
    pub is_constant_symbol: bool,
    pub residuals: Residuals,
    pub window: usize,
    pub tolerance: f64,
    pub interior_columns: Vec<usize>,
}

/// Runs every check; Nica and unitary verdicts are only reached through an
/// isometric verdict.
pub fn classify(symbol: &Symbol, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    let tol = opts.tol;
    let iso = check_isometric(symbol, opts.window, tol, opts.seed)?;
    let constant = constant_residual(symbol);
    let a = symbol.level0_block();
    let unitarity = linalg::identity_defect(&(a.adjoint() * &a))
        .max(linalg::identity_defect(&(&a * a.adjoint())));
    let defect = (a.nrows() - linalg::rank(&a, tol.max(1e-12))) as f64;
    let mut residuals = Residuals {
        isometry_residual: iso.isometry_residual,
        gram_residual: iso.gram_residual,
        e1_support_residual: iso.e1_support_residual,
        column_residual: iso.column_residual,
        random_norm_residual: iso.random_norm_residual,
        constant_residual: constant,
        unitarity_residual: unitarity,
        surjectivity_defect: defect,
        nica_residual: None,
        block_residual: None,
    };
    let (mut is_nica, mut is_unitary) = (false, false);
    if iso.verdict {
        let n = symbol.n();
        let nica = check_nica(symbol, tol, relation_levels(n, symbol.max_level(), RELATION_WORD_CAP))?;
        let unitary = check_unitary(
            symbol,
            tol,
            block_levels(n, symbol.coeff_dim(), symbol.max_level(), 256),
        )?;
        residuals.nica_residual = Some(nica.relation_residual);
        residuals.block_residual = Some(unitary.block_residual);
        is_nica = nica.verdict;
        is_unitary = unitary.verdict;
    }
    Ok(ClassificationReport {
        is_isometric: iso.verdict,
        is_nica,
        is_unitary,
        is_constant_symbol: constant <= tol,
        residuals,
        window: opts.window,
        tolerance: tol,
        interior_columns: iso.interior_columns,
    })
}
