//! Invariant subspaces of the creation tuple, their wandering subspaces and
//! the inner multi-analytic factorization `Φ = i_S ∘ Π`.

use serde::Serialize;

use crate::fock::TruncatedFockSpace;
use crate::linalg::{self, zero};
use crate::odometer::{build_odometer, OdometerMap};
use crate::operator::{check_dense, create_left};
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result};

/// A subspace `S ⊆ F(n, M) ⊗ E` with `(S_i ⊗ I) S ⊆ S` away from the top
/// level.
#[derive(Clone, Debug)]
pub struct InvariantSubspace {
    ambient: TruncatedFockSpace,
    basis: CMatrix,
    invariance_residuals: Vec<f64>,
}

impl InvariantSubspace {
    /// Orthonormalizes `columns` and checks `‖(I − P_S)(S_i ⊗ I)P_S‖ ≤ tol`,
    /// the truncated creation operators discarding the level-`M` boundary.
    pub fn from_basis(ambient: TruncatedFockSpace, columns: &CMatrix, tol: f64) -> Result<Self> {
        check_dense(ambient.dim())?;
        if columns.nrows() != ambient.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subspace columns have length {}, ambient dimension is {}",
                columns.nrows(),
                ambient.dim()
            )));
        }
        if !linalg::is_finite(columns) {
            return Err(Error::NonFinite("subspace basis".into()));
        }
        let basis = linalg::range_basis(columns, tol);
        let proj = linalg::projector(&basis);
        let complement = CMatrix::identity(ambient.dim(), ambient.dim()) - proj;
        let invariance_residuals: Vec<f64> = (1..=ambient.n())
            .map(|i| linalg::op_norm(&(&complement * create_left(i, &ambient, &basis))))
            .collect();
        if let Some(&worst) = invariance_residuals.iter().find(|&&r| r > tol) {
            return Err(Error::NotInvariant { residual: worst, tol });
        }
        Ok(InvariantSubspace { ambient, basis, invariance_residuals })
    }

    /// `span{(S_μ ⊗ I) g : g ∈ generators, |μ| + level(g) ≤ M}`.
    pub fn from_generators(ambient: TruncatedFockSpace, generators: &CMatrix, tol: f64) -> Result<Self> {
        check_dense(ambient.dim())?;
        if generators.nrows() != ambient.dim() {
            return Err(Error::DimensionMismatch("generator length differs from ambient".into()));
        }
        let mut cols: Vec<CMatrix> = Vec::new();
        let mut frontier = generators.clone();
        for _ in 0..=ambient.max_level() {
            if frontier.ncols() == 0 || linalg::max_abs(&frontier) == 0.0 {
                break;
            }
            cols.push(frontier.clone());
            let top = top_level_mass(&ambient, &frontier, tol);
            let next: Vec<CMatrix> = (1..=ambient.n())
                .map(|i| {
                    let mut moved = create_left(i, &ambient, &frontier);
                    // columns that already touch level M would be truncated
                    for (j, t) in top.iter().enumerate() {
                        if *t {
                            moved.column_mut(j).fill(zero());
                        }
                    }
                    moved
                })
                .collect();
            let total: usize = next.iter().map(|m| m.ncols()).sum();
            let mut stacked = CMatrix::zeros(ambient.dim(), total);
            let mut at = 0;
            for m in next {
                stacked.columns_mut(at, m.ncols()).copy_from(&m);
                at += m.ncols();
            }
            frontier = linalg::range_basis(&stacked, tol);
        }
        let total: usize = cols.iter().map(|m| m.ncols()).sum();
        let mut all = CMatrix::zeros(ambient.dim(), total);
        let mut at = 0;
        for m in cols {
            all.columns_mut(at, m.ncols()).copy_from(&m);
            at += m.ncols();
        }
        InvariantSubspace::from_basis(ambient, &all, tol)
    }

    pub fn ambient(&self) -> &TruncatedFockSpace {
        &self.ambient
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn invariance_residuals(&self) -> &[f64] {
        &self.invariance_residuals
    }

    pub fn projector(&self) -> CMatrix {
        linalg::projector(&self.basis)
    }
}

fn top_level_mass(space: &TruncatedFockSpace, cols: &CMatrix, tol: f64) -> Vec<bool> {
    let top = space.level_range(space.max_level());
    (0..cols.ncols())
        .map(|j| top.clone().any(|r| cols[(r, j)].norm() > tol))
        .collect()
}

/// Highest level at which any column has an entry above `tol`.
pub fn max_level_of(space: &TruncatedFockSpace, cols: &CMatrix, tol: f64) -> usize {
    let mut top = 0;
    for r in 0..cols.nrows() {
        if cols.row(r).iter().any(|z| z.norm() > tol) {
            top = top.max(space.level_of(r));
        }
    }
    top
}

/// Orthonormal basis of `S ⊖ Σ_i (S_i ⊗ I) S`.
pub fn wandering_subspace(s: &InvariantSubspace, tol: f64) -> Result<CMatrix> {
    let space = s.ambient();
    let n = space.n();
    let k = s.dim();
    let mut shifted = CMatrix::zeros(space.dim(), n * k);
    for i in 1..=n {
        shifted.columns_mut((i - 1) * k, k).copy_from(&create_left(i, space, s.basis()));
    }
    linalg::orthonormal_complement(&shifted, s.basis(), tol)
}

/// Factorization of an invariant subspace through its wandering subspace.
#[derive(Clone, Debug)]
pub struct BeurlingFactorization {
    pub wandering_basis: CMatrix,
    /// Highest level touched by the wandering basis.
    pub wandering_level: usize,
    /// Words `|μ| ≤ budget` index the columns of `Φ`.
    pub budget: usize,
    /// `F(n, budget) ⊗ E_*`, the domain of `Φ`.
    pub star_space: TruncatedFockSpace,
    /// `Φ(e_μ ⊗ η_j) = (S_μ ⊗ I) η_j`.
    pub phi: CMatrix,
    /// `Π = i_S^* Φ` in the orthonormal basis of `S`.
    pub pi: CMatrix,
    pub inner_residual: f64,
    pub multi_analytic_residual: f64,
    pub factor_residual: f64,
    /// `‖(I − ΦΦ^*) P_S‖`; nonzero when the budget cannot reach all of `S`.
    pub coverage_residual: f64,
}

impl BeurlingFactorization {
    pub fn wandering_dim(&self) -> usize {
        self.wandering_basis.ncols()
    }

    pub fn covers(&self, tol: f64) -> bool {
        self.coverage_residual <= tol
    }
}

pub fn beurling_factorize(s: &InvariantSubspace, tol: f64) -> Result<BeurlingFactorization> {
    let wandering = wandering_subspace(s, tol)?;
    beurling_factorize_with(s, &wandering, tol)
}

/// Factorization over a caller-chosen orthonormal basis of `E_*`.
pub fn beurling_factorize_with(
    s: &InvariantSubspace,
    wandering: &CMatrix,
    tol: f64,
) -> Result<BeurlingFactorization> {
    let space = *s.ambient();
    let k = wandering.ncols();
    if k == 0 {
        return Err(Error::DegenerateWindow("the wandering subspace is trivial".into()));
    }
    let wandering_level = max_level_of(&space, wandering, tol);
    if wandering_level >= space.max_level() && space.max_level() > 0 {
        return Err(Error::DegenerateWindow(format!(
            "wandering vectors reach level {wandering_level} = M; no room for words"
        )));
    }
    let budget = space.max_level() - wandering_level;
    let star_space = TruncatedFockSpace::new(space.n(), budget, k)?;
    check_dense(star_space.dim())?;
    let mut phi = CMatrix::zeros(space.dim(), star_space.dim());
    for wi in 0..star_space.num_words() {
        let block = match star_space.strip_index(wi) {
            None => wandering.clone(),
            Some((i, rest)) => {
                create_left(i, &space, &phi.columns(rest * k, k).into_owned())
            }
        };
        phi.columns_mut(wi * k, k).copy_from(&block);
    }
    let pi = s.basis().adjoint() * &phi;
    let inner_residual = linalg::identity_defect(&(phi.adjoint() * &phi));
    let window = star_space.window_dim(budget);
    let mut multi_analytic_residual: f64 = 0.0;
    for i in 1..=space.n() {
        let lhs = star_right_create(&phi, i, &star_space);
        let rhs = create_left(i, &space, &phi);
        multi_analytic_residual = multi_analytic_residual
            .max(linalg::op_norm(&(lhs.columns(0, window) - rhs.columns(0, window))));
    }
    let factor_residual = linalg::op_norm(&(&phi - s.basis() * &pi));
    let coverage_residual = linalg::op_norm(&(s.basis() - &phi * (phi.adjoint() * s.basis())));
    Ok(BeurlingFactorization {
        wandering_basis: wandering.clone(),
        wandering_level,
        budget,
        star_space,
        phi,
        pi,
        inner_residual,
        multi_analytic_residual,
        factor_residual,
        coverage_residual,
    })
}

/// `A (S_i ⊗ I_{E_*})` for a matrix whose columns are indexed by
/// `star_space`.
fn star_right_create(a: &CMatrix, i: usize, star_space: &TruncatedFockSpace) -> CMatrix {
    let k = star_space.coeff_dim();
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for w in 0..star_space.num_words() {
        if let Some(v) = star_space.prepend_index(i, w) {
            for p in 0..k {
                out.column_mut(w * k + p).copy_from(&a.column(v * k + p));
            }
        }
    }
    out
}

/// The unitary `τ` on `E_*` with `Φ' = Φ(I ⊗ τ)`, recovered by least
/// squares, and the residual of that identity.
#[derive(Clone, Debug)]
pub struct RelativeUnitary {
    pub tau: CMatrix,
    pub residual: f64,
    pub unitarity_residual: f64,
}

pub fn relative_unitary(
    first: &BeurlingFactorization,
    second: &BeurlingFactorization,
    tol: f64,
) -> Result<RelativeUnitary> {
    if first.star_space != second.star_space || first.phi.nrows() != second.phi.nrows() {
        return Err(Error::DimensionMismatch("factorizations of different shapes".into()));
    }
    let k = first.wandering_dim();
    let x = linalg::solve_least_squares(&first.phi, &second.phi, tol)?;
    let tau = x.view((0, 0), (k, k)).into_owned();
    let words = first.star_space.num_words();
    let mut lifted = CMatrix::zeros(first.phi.ncols(), first.phi.ncols());
    for w in 0..words {
        lifted.view_mut((w * k, w * k), (k, k)).copy_from(&tau);
    }
    let residual = linalg::op_norm(&(&second.phi - &first.phi * &lifted))
        .max(linalg::op_norm(&(&x - &lifted)));
    let unitarity_residual = linalg::identity_defect(&(tau.adjoint() * &tau));
    Ok(RelativeUnitary { tau, residual, unitarity_residual })
}

/// The induced symbol `L_* = Π^* W_L|_{E_*}` and the identities it
/// satisfies.
#[derive(Clone, Debug)]
pub struct InducedSymbol {
    pub symbol: Symbol,
    pub factorization: BeurlingFactorization,
    /// `‖(I − P_S) W_L P‖` over the part of `S` where `W_L` is exact.
    pub invariance_residual: f64,
    /// `‖W_L Φ − Φ W_{L_*}‖` on the common window.
    pub residual: f64,
    /// `‖Φ^* W_L Φ − W_{L_*}‖` on the common window.
    pub compression_residual: f64,
    /// Star-space levels covered by the two residuals above.
    pub window: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InducedSummary {
    pub invariance_residual: f64,
    pub residual: f64,
    pub compression_residual: f64,
    pub window: usize,
}

pub fn induced_symbol(s: &InvariantSubspace, map: &OdometerMap, tol: f64) -> Result<InducedSymbol> {
    let space = *s.ambient();
    if map.space() != space {
        return Err(Error::DimensionMismatch("odometer map and subspace live in different spaces".into()));
    }
    let w = map.matrix();
    let eb = map.exact_below();
    // the part of S supported strictly below the window
    let outside = space.dim() - space.window_dim(eb);
    let mut high = CMatrix::zeros(space.dim(), outside);
    for (j, r) in (space.window_dim(eb)..space.dim()).enumerate() {
        high[(r, j)] = linalg::one();
    }
    let exact_part = linalg::orthonormal_complement(&high, s.basis(), tol)?;
    let complement = CMatrix::identity(space.dim(), space.dim()) - s.projector();
    let invariance_residual = linalg::op_norm(&(&complement * w * &exact_part));
    if invariance_residual > tol {
        return Err(Error::NotInvariant { residual: invariance_residual, tol });
    }
    let fact = beurling_factorize(s, tol)?;
    let images = w * &fact.wandering_basis;
    let columns = fact.phi.adjoint() * images;
    let star = fact.star_space;
    let symbol = Symbol::from_dense(star, &chop(columns, 1e-13))?;
    let star_map = build_odometer(&symbol)?;
    let window = star_map.exact_below().min(eb.saturating_sub(fact.wandering_level));
    let cols = star.window_dim(window);
    let lhs = w * &fact.phi;
    let rhs = &fact.phi * star_map.matrix();
    let residual = linalg::op_norm(&(lhs.columns(0, cols) - rhs.columns(0, cols)));
    let compressed = fact.phi.adjoint() * lhs;
    let compression_residual =
        linalg::op_norm(&(compressed.columns(0, cols) - star_map.matrix().columns(0, cols)));
    Ok(InducedSymbol {
        symbol,
        factorization: fact,
        invariance_residual,
        residual,
        compression_residual,
        window,
    })
}

/// Entries below `eps` in modulus set to zero, so that round-off does not
/// inflate the support degree of derived symbols.
fn chop(mut m: CMatrix, eps: f64) -> CMatrix {
    m.iter_mut().for_each(|z| {
        if z.norm() < eps {
            *z = zero();
        }
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, one};
    use crate::random::unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coordinate_columns(dim: usize, rows: std::ops::Range<usize>) -> CMatrix {
        let mut m = CMatrix::zeros(dim, rows.len());
        for (j, r) in rows.enumerate() {
            m[(r, j)] = one();
        }
        m
    }

    fn upper_levels(n: usize, max_level: usize, d: usize) -> InvariantSubspace {
        let space = TruncatedFockSpace::new(n, max_level, d).unwrap();
        let cols = coordinate_columns(space.dim(), d..space.dim());
        InvariantSubspace::from_basis(space, &cols, 1e-10).unwrap()
    }

    #[test]
    fn whole_space_wanders_at_the_vacuum() {
        let space = TruncatedFockSpace::new(2, 3, 2).unwrap();
        let all = CMatrix::identity(space.dim(), space.dim());
        let s = InvariantSubspace::from_basis(space, &all, 1e-10).unwrap();
        let f = beurling_factorize(&s, 1e-10).unwrap();
        assert_eq!(f.wandering_dim(), 2);
        assert_eq!(f.wandering_level, 0);
        assert_eq!(f.star_space.dim(), space.dim());
        let full = &f.phi * f.phi.adjoint();
        assert!(linalg::identity_defect(&full) < 1e-12);
        assert!(f.inner_residual < 1e-12 && f.multi_analytic_residual < 1e-12);
    }

    #[test]
    fn upper_levels_wander_at_level_one() {
        let s = upper_levels(2, 4, 1);
        let e = wandering_subspace(&s, 1e-10).unwrap();
        assert_eq!(e.ncols(), 2);
        assert_eq!(max_level_of(s.ambient(), &e, 1e-10), 1);
        let f = beurling_factorize(&s, 1e-10).unwrap();
        // Σ_{m ≤ M−1} n^m · nd = Σ_{1 ≤ m ≤ M} n^m · d
        assert_eq!(f.phi.ncols(), s.dim());
        assert_eq!(linalg::rank(&f.phi, 1e-10), s.dim());
        assert!(f.covers(1e-10));
        assert!(f.factor_residual < 1e-12);
    }

    #[test]
    fn word_identities() {
        let s = upper_levels(2, 3, 2);
        let f = beurling_factorize(&s, 1e-10).unwrap();
        let k = f.wandering_dim();
        let space = *s.ambient();
        for wi in 0..f.star_space.num_words() {
            let word = f.star_space.word_at(wi);
            let mut v = f.wandering_basis.clone();
            for &i in word.letters().iter().rev() {
                v = create_left(i, &space, &v);
            }
            assert!(max_abs(&(f.phi.columns(wi * k, k) - &v)) < 1e-14);
            let back = f.phi.adjoint() * &v;
            let want = coordinate_columns(f.star_space.dim(), wi * k..(wi + 1) * k);
            assert!(max_abs(&(back - want)) < 1e-12);
        }
    }

    #[test]
    fn generated_by_first_letter_has_wandering_dim_d() {
        let d = 2;
        let space = TruncatedFockSpace::new(2, 3, d).unwrap();
        let start = space.level_start(1) * d;
        let g = coordinate_columns(space.dim(), start..start + d);
        let s = InvariantSubspace::from_generators(space, &g, 1e-10).unwrap();
        let e = wandering_subspace(&s, 1e-10).unwrap();
        assert_eq!(e.ncols(), d);
        assert!(max_abs(&(linalg::projector(&e) - linalg::projector(&g))) < 1e-12);
    }

    #[test]
    fn vacuum_alone_is_not_invariant() {
        let space = TruncatedFockSpace::new(2, 2, 1).unwrap();
        let omega = coordinate_columns(space.dim(), 0..1);
        let err = InvariantSubspace::from_basis(space, &omega, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NotInvariant { .. }));
    }

    #[test]
    fn top_level_wandering_vectors_are_degenerate() {
        let space = TruncatedFockSpace::new(2, 2, 1).unwrap();
        let top = coordinate_columns(space.dim(), space.level_range(2));
        let s = InvariantSubspace::from_basis(space, &top, 1e-10).unwrap();
        assert!(matches!(beurling_factorize(&s, 1e-10), Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn induced_symbol_of_upper_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=2 {
            let s = upper_levels(2, 5, d);
            let a = unitary(d, &mut rng);
            let sym = Symbol::constant(*s.ambient(), &a).unwrap();
            let map = build_odometer(&sym).unwrap();
            let ind = induced_symbol(&s, &map, 1e-10).unwrap();
            assert!(ind.residual < 1e-10 && ind.compression_residual < 1e-10);
            assert!(ind.window >= 1);
            // dense oracle: W_L restricted to level one, in wandering coordinates
            let b = &ind.factorization.wandering_basis;
            let want = b.adjoint() * map.matrix() * b;
            assert!(max_abs(&(ind.symbol.level0_block() - want)) < 1e-12);
            assert_eq!(ind.symbol.support_degree(), 0);
        }
    }

    #[test]
    fn first_letter_subspace_is_not_w_invariant() {
        // W(e_1) = e_2 leaves the subspace generated by e_1
        let space = TruncatedFockSpace::new(2, 3, 1).unwrap();
        let at = space.level_start(1);
        let s = InvariantSubspace::from_generators(space, &coordinate_columns(space.dim(), at..at + 1), 1e-10)
            .unwrap();
        let sym = Symbol::constant(space, &CMatrix::identity(1, 1)).unwrap();
        let map = build_odometer(&sym).unwrap();
        assert!(matches!(induced_symbol(&s, &map, 1e-10), Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn wandering_bases_differ_by_a_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = upper_levels(2, 4, 2);
        let e = wandering_subspace(&s, 1e-10).unwrap();
        let tau = unitary(e.ncols(), &mut rng);
        let first = beurling_factorize_with(&s, &e, 1e-10).unwrap();
        let second = beurling_factorize_with(&s, &(&e * &tau), 1e-10).unwrap();
        let rel = relative_unitary(&first, &second, 1e-10).unwrap();
        assert!(rel.residual < 1e-10 && rel.unitarity_residual < 1e-10);
        assert!(max_abs(&(rel.tau - tau)) < 1e-10);
    }
}
