//! Pure row contractions, their Poisson-kernel dilation, and odometer lifts
//! of contractive pairs.

use serde::Serialize;

use crate::fock::TruncatedFockSpace;
use crate::linalg::{self, zero};
use crate::odometer::{build_odometer, build_odometer_at, RelationResidual};
use crate::operator::{annihilate_left, check_dense, creation_operator};
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result};

/// Slack allowed on `Σ T_i T_i^* ≤ I`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// An `n`-tuple `(T_1, …, T_n)` on `C^h` with `Σ T_i T_i^* ≤ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowContraction {
    tuples: Vec<CMatrix>,
}

impl RowContraction {
    pub fn new(tuples: Vec<CMatrix>) -> Result<Self> {
        let first = tuples
            .first()
            .ok_or_else(|| Error::InvalidParameter("a row contraction needs n ≥ 1".into()))?;
        let h = first.nrows();
        for t in &tuples {
            if t.nrows() != h || t.ncols() != h {
                return Err(Error::DimensionMismatch(format!(
                    "tuple entries must all be {h}x{h}"
                )));
            }
            if !linalg::is_finite(t) {
                return Err(Error::NonFinite("row contraction".into()));
            }
        }
        let rc = RowContraction { tuples };
        let (vals, _) = linalg::hermitian_eigen(&rc.defect_square());
        if let Some(&low) = vals.iter().find(|&&v| v < -CONTRACTION_SLACK) {
            return Err(Error::Precondition(format!(
                "Σ T_i T_i^* exceeds the identity (defect eigenvalue {low:.3e})"
            )));
        }
        Ok(rc)
    }

    pub fn n(&self) -> usize {
        self.tuples.len()
    }

    pub fn dim(&self) -> usize {
        self.tuples[0].nrows()
    }

    pub fn tuples(&self) -> &[CMatrix] {
        &self.tuples
    }

    /// `Σ T_i X T_i^*`.
    pub fn phi(&self, x: &CMatrix) -> CMatrix {
        let h = self.dim();
        let mut out = CMatrix::zeros(h, h);
        for t in &self.tuples {
            out += t * x * t.adjoint();
        }
        out
    }

    /// `I − Σ T_i T_i^*`.
    pub fn defect_square(&self) -> CMatrix {
        let h = self.dim();
        CMatrix::identity(h, h) - self.phi(&CMatrix::identity(h, h))
    }

    /// `‖[T_1 … T_n]‖ = ‖Σ T_i T_i^*‖^{1/2}`.
    pub fn row_norm(&self) -> f64 {
        linalg::op_norm(&self.phi(&CMatrix::identity(self.dim(), self.dim()))).sqrt()
    }
}

/// Outcome of [`purity_test`].
#[derive(Clone, Debug, Serialize)]
pub struct PurityResult {
    pub pure: bool,
    /// `r_m = trace Φ^m(I)` for `m = 0, 1, …` until the test stopped.
    pub residuals: Vec<f64>,
    /// The row norm was below one, which forces geometric decay.
    pub strict: bool,
}

/// Decides purity from `r_m = Σ_{|μ|=m} Σ_k ‖T_μ^* e_k‖² = trace Φ^m(I)`.
pub fn purity_test(t: &RowContraction, m_max: usize, tol: f64) -> PurityResult {
    let h = t.dim();
    let strict = t.row_norm() < 1.0 - tol;
    let mut x = CMatrix::identity(h, h);
    let mut residuals = vec![h as f64];
    let mut reached = residuals[0] < tol;
    for _ in 0..m_max {
        if reached {
            break;
        }
        x = t.phi(&x);
        let r = x.trace().re;
        residuals.push(r);
        reached = r < tol;
    }
    PurityResult { pure: reached || strict, residuals, strict }
}

/// The minimal isometric dilation truncated to `F(n, M) ⊗ D_{T*}`.
#[derive(Clone, Debug)]
pub struct DilationData {
    /// `F(n, M) ⊗ C^r` with `r` the defect dimension.
    pub space: TruncatedFockSpace,
    pub defect_root: CMatrix,
    /// Orthonormal basis of the defect space, as columns in `C^h`.
    pub defect_basis: CMatrix,
    /// `Π_T`, a `dim(space) × h` matrix.
    pub poisson: CMatrix,
    /// `max_k (‖e_k‖² − ‖Π_T e_k‖²)`.
    pub purity_residual: f64,
    /// `Σ_{|μ|=M+1} ‖T_μ^* e_k‖²` for each basis vector `e_k`.
    pub tail: Vec<f64>,
}

impl DilationData {
    pub fn defect_dim(&self) -> usize {
        self.defect_basis.ncols()
    }

    /// `‖Π_T^* Π_T − I‖`.
    pub fn isometry_defect(&self) -> f64 {
        linalg::identity_defect(&(self.poisson.adjoint() * &self.poisson))
    }
}

/// Orthonormal basis of `range(D)` chosen by pivoted Gram–Schmidt on the
/// columns of `D`, ties going to the lower index. Coordinate vectors in the
/// range are reproduced exactly.
pub fn defect_basis(d: &CMatrix, tol: f64) -> CMatrix {
    let r = linalg::rank(d, tol);
    let h = d.nrows();
    let mut basis = CMatrix::zeros(h, r);
    let mut residual = d.clone();
    let mut used = vec![false; d.ncols()];
    for k in 0..r {
        let mut best = None;
        let mut best_norm = 0.0;
        for (j, &taken) in used.iter().enumerate() {
            let nrm = residual.column(j).norm();
            if !taken && nrm > best_norm {
                best_norm = nrm;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        used[j] = true;
        let mut v = residual.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..k {
                let b = basis.column(i);
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let nv = v.norm();
        v /= linalg::c(nv, 0.0);
        basis.set_column(k, &v);
        for col in 0..residual.ncols() {
            let proj = v.dotc(&residual.column(col));
            let upd = residual.column(col) - &v * proj;
            residual.set_column(col, &upd);
        }
    }
    basis
}

/// `Π_T h = Σ_{|μ| ≤ M} e_μ ⊗ B^* D T_μ^* h`, with `D` the positive square
/// root of `I − Σ T_i T_i^*` and `B` the defect basis.
pub fn poisson_kernel(t: &RowContraction, max_level: usize, tol: f64) -> Result<DilationData> {
    let h = t.dim();
    let n = t.n();
    let defect_root = linalg::psd_sqrt(&t.defect_square(), CONTRACTION_SLACK)?;
    let basis = defect_basis(&defect_root, tol);
    let r = basis.ncols();
    if r == 0 {
        return Err(Error::DilationInexact { residual: 1.0, tol });
    }
    let space = TruncatedFockSpace::new(n, max_level, r)?;
    check_dense(space.dim())?;
    let head = basis.adjoint() * &defect_root;
    let mut poisson = CMatrix::zeros(space.dim(), h);
    // T_μ^* for every word, level by level: T_{iμ}^* = T_μ^* T_i^*
    let adj: Vec<CMatrix> = t.tuples().iter().map(|m| m.adjoint()).collect();
    let mut words: Vec<CMatrix> = Vec::with_capacity(space.num_words());
    for wi in 0..space.num_words() {
        let x = match space.strip_index(wi) {
            None => CMatrix::identity(h, h),
            Some((i, rest)) => &words[rest] * &adj[i - 1],
        };
        poisson.view_mut((wi * r, 0), (r, h)).copy_from(&(&head * &x));
        words.push(x);
    }
    let gram = poisson.adjoint() * &poisson;
    let purity_residual = (0..h).map(|k| 1.0 - gram[(k, k)].re).fold(0.0, f64::max);
    let mut x = CMatrix::identity(h, h);
    for _ in 0..=max_level {
        x = t.phi(&x);
    }
    let tail = (0..h).map(|k| x[(k, k)].re).collect();
    if purity_residual > tol {
        return Err(Error::DilationInexact { residual: purity_residual, tol });
    }
    Ok(DilationData { space, defect_root, defect_basis: basis, poisson, purity_residual, tail })
}

/// Residuals of the two identities the kernel must satisfy.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelResiduals {
    /// `max_i ‖Π_T T_i^* − (S_i ⊗ I)^* Π_T‖` on rows below level `M`.
    pub intertwining: f64,
    /// `‖Π_T^* Π_T − (I − Φ^{M+1}(I))‖`.
    pub telescoping: f64,
}

pub fn kernel_residuals(t: &RowContraction, data: &DilationData) -> KernelResiduals {
    let space = data.space;
    let pi = &data.poisson;
    let rows = space.window_dim(space.max_level());
    let intertwining = t
        .tuples()
        .iter()
        .enumerate()
        .map(|(k, ti)| {
            let lhs = pi * ti.adjoint();
            let rhs = annihilate_left(k + 1, &space, pi);
            linalg::op_norm(&(lhs.rows(0, rows) - rhs.rows(0, rows)))
        })
        .fold(0.0, f64::max);
    let h = t.dim();
    let mut x = CMatrix::identity(h, h);
    for _ in 0..=space.max_level() {
        x = t.phi(&x);
    }
    let want = CMatrix::identity(h, h) - x;
    let telescoping = linalg::op_norm(&(pi.adjoint() * pi - want));
    KernelResiduals { intertwining, telescoping }
}

/// A row contraction `T` with an operator `W` satisfying the odometer
/// relations.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractivePair {
    pub t: RowContraction,
    pub w: CMatrix,
}

impl ContractivePair {
    pub fn new(t: RowContraction, w: CMatrix) -> Result<Self> {
        if w.nrows() != t.dim() || w.ncols() != t.dim() {
            return Err(Error::DimensionMismatch(format!(
                "W is {}x{}, T acts on dimension {}",
                w.nrows(),
                w.ncols(),
                t.dim()
            )));
        }
        if !linalg::is_finite(&w) {
            return Err(Error::NonFinite("pair operator W".into()));
        }
        Ok(ContractivePair { t, w })
    }

    pub fn n(&self) -> usize {
        self.t.n()
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }
}

/// Outcome of [`verify_pair`].
#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    pub passed: bool,
    pub relations: Vec<RelationResidual>,
    pub purity: PurityResult,
}

impl PairVerdict {
    pub fn max_residual(&self) -> f64 {
        self.relations.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Operator-norm residuals of `W T_i = T_{i+1}` (`i < n`), `W T_n = T_1 W`,
/// plus the purity test.
pub fn verify_pair(pair: &ContractivePair, tol: f64, m_max: usize) -> PairVerdict {
    let n = pair.n();
    let t = pair.t.tuples();
    let w = &pair.w;
    let mut relations = Vec::with_capacity(n);
    for k in 1..n {
        relations.push(RelationResidual {
            relation: format!("W T_{k} = T_{}", k + 1),
            residual: linalg::op_norm(&(w * &t[k - 1] - &t[k])),
        });
    }
    relations.push(RelationResidual {
        relation: format!("W T_{n} = T_1 W"),
        residual: linalg::op_norm(&(w * &t[n - 1] - &t[0] * w)),
    });
    let purity = purity_test(&pair.t, m_max, tol);
    let passed = purity.pure && relations.iter().all(|r| r.residual <= tol);
    PairVerdict { passed, relations, purity }
}

/// Compression of `(W_L, S^E)` to the co-invariant subspace of levels
/// `≤ K`.
pub fn compress_pair(symbol: &Symbol, level: usize) -> Result<ContractivePair> {
    let sd = symbol.support_degree();
    let limit = symbol.max_level().saturating_sub(sd);
    if level > limit {
        return Err(Error::WindowViolation(format!(
            "compression level {level} exceeds M − sd = {limit}"
        )));
    }
    let space = symbol.space().with_max_level(level)?;
    check_dense(space.dim())?;
    let tuples = (1..=space.n())
        .map(|i| creation_operator(i, &space).map(|op| op.into_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let w = build_odometer_at(symbol, level)?.into_parts().1.into_matrix();
    ContractivePair::new(RowContraction::new(tuples)?, w)
}

/// Symbol `L' η = Π_T W Π_T^* (Ω ⊗ η)` of the odometer lift and the
/// residual of `Π_T W^* = W_{L'}^* Π_T`.
#[derive(Clone, Debug)]
pub struct Lift {
    pub symbol: Symbol,
    pub dilation: DilationData,
    /// `‖Π_T W^* − W_{L'}^* Π_T‖` on rows at levels below `window`.
    pub residual: f64,
    pub window: usize,
    pub pair_norm: f64,
    pub lift_norm: f64,
}

pub fn odometer_lift(pair: &ContractivePair, max_level: usize, tol: f64) -> Result<Lift> {
    let verdict = verify_pair(pair, tol, 4 * (max_level + 1) + 64);
    if !verdict.passed {
        return Err(Error::Precondition(format!(
            "pair fails its relations or purity (relation residual {:.3e}, pure {})",
            verdict.max_residual(),
            verdict.purity.pure
        )));
    }
    let dilation = poisson_kernel(&pair.t, max_level, tol)?;
    let pi = &dilation.poisson;
    let r = dilation.defect_dim();
    let image = pi * &pair.w * pi.adjoint();
    let mut columns = image.columns(0, r).into_owned();
    columns.iter_mut().for_each(|z| {
        if !(z.re.is_finite() && z.im.is_finite()) {
            *z = zero();
        }
    });
    let symbol = Symbol::from_dense(dilation.space, &columns)?;
    let map = build_odometer(&symbol)?;
    let window = map.exact_below();
    let rows = dilation.space.window_dim(window);
    let lhs = pi * pair.w.adjoint();
    let rhs = map.matrix().adjoint() * pi;
    let residual = linalg::op_norm(&(lhs.rows(0, rows) - rhs.rows(0, rows)));
    Ok(Lift {
        pair_norm: linalg::op_norm(&pair.w),
        lift_norm: map.operator().norm(),
        symbol,
        dilation,
        residual,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs, one};

    #[test]
    fn zero_row_is_pure_and_dilates_to_vacuum() {
        let t = RowContraction::new(vec![CMatrix::zeros(3, 3), CMatrix::zeros(3, 3)]).unwrap();
        let p = purity_test(&t, 10, 1e-12);
        assert!(p.pure);
        assert_eq!(p.residuals[1], 0.0);
        let dil = poisson_kernel(&t, 2, 1e-10).unwrap();
        assert_eq!(dil.defect_dim(), 3);
        let mut want = CMatrix::zeros(dil.space.dim(), 3);
        for k in 0..3 {
            want[(k, k)] = one();
        }
        assert!(max_abs(&(&dil.poisson - want)) < 1e-15);
    }

    #[test]
    fn unitary_scalar_is_not_pure() {
        let t = RowContraction::new(vec![CMatrix::identity(1, 1)]).unwrap();
        let p = purity_test(&t, 20, 1e-12);
        assert!(!p.pure);
        assert!(p.residuals.iter().all(|&r| (r - 1.0).abs() < 1e-15));
        assert!(matches!(poisson_kernel(&t, 3, 1e-10), Err(Error::DilationInexact { .. })));
    }

    #[test]
    fn rejects_non_contractions() {
        let big = CMatrix::identity(2, 2) * c(1.1, 0.0);
        assert!(matches!(RowContraction::new(vec![big]), Err(Error::Precondition(_))));
        assert!(RowContraction::new(vec![]).is_err());
    }

    #[test]
    fn compressed_vacuum_pair() {
        let space = TruncatedFockSpace::new(2, 3, 1).unwrap();
        let s = Symbol::constant(space, &CMatrix::identity(1, 1)).unwrap();
        let pair = compress_pair(&s, 1).unwrap();
        assert_eq!(pair.dim(), 3);
        for t in pair.t.tuples() {
            assert_eq!(linalg::rank(t, 1e-12), 1);
        }
        assert_eq!(pair.w[(0, 0)], one());
        assert_eq!(pair.w[(2, 1)], one());
        assert!(verify_pair(&pair, 1e-12, 8).passed);

        let zero_level = compress_pair(&s, 0).unwrap();
        assert!(zero_level.t.tuples().iter().all(|t| max_abs(t) == 0.0));
        assert_eq!(zero_level.w, CMatrix::identity(1, 1));
        assert!(matches!(compress_pair(&s, 4), Err(Error::WindowViolation(_))));
    }

    #[test]
    fn perturbation_breaks_relations() {
        let space = TruncatedFockSpace::new(2, 3, 1).unwrap();
        let s = Symbol::constant(space, &CMatrix::identity(1, 1)).unwrap();
        let pair = compress_pair(&s, 2).unwrap();
        let e = CMatrix::from_fn(7, 7, |i, j| if i == 0 && j == 0 { one() } else { zero() });
        let mut residuals = Vec::new();
        for eps in [1e-3, 2e-3] {
            let bad = ContractivePair::new(pair.t.clone(), &pair.w + &e * c(eps, 0.0)).unwrap();
            let v = verify_pair(&bad, 1e-12, 8);
            assert!(!v.passed);
            residuals.push(v.max_residual());
        }
        assert!((residuals[1] / residuals[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lift_of_zero_row_reproduces_w() {
        let t = RowContraction::new(vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)]).unwrap();
        let w = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.0, 0.2), c(-0.4, 0.0), c(0.5, 0.0)]);
        let pair = ContractivePair::new(t, w.clone()).unwrap();
        let lift = odometer_lift(&pair, 2, 1e-10).unwrap();
        assert!(lift.residual <= 1e-12);
        assert_eq!(lift.symbol.level0_block(), w);
        assert_eq!(lift.symbol.support_degree(), 0);
    }
}
