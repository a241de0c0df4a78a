//! Spectra of unitary odometer maps and the catalogue of worked examples.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;

use crate::classify::check_unitary;
use crate::fock::{FockVector, TruncatedFockSpace, Word};
use crate::linalg::{self, c, one, zero};
use crate::odometer::{apply_basis, build_odometer, level_block};
use crate::operator::{check_dense, creation_operator, Operator};
use crate::report::Check;
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues of one level block against their prediction.
#[derive(Clone, Debug, Serialize)]
pub struct LevelSpectrum {
    pub level: usize,
    #[serde(with = "crate::io::complex_list")]
    pub eigenvalues: Vec<C64>,
    #[serde(with = "crate::io::complex_list")]
    pub predicted: Vec<C64>,
    pub hausdorff: f64,
    /// `max ||λ| − 1|` over the computed eigenvalues.
    pub modulus_residual: f64,
    /// `‖B^{n^m} − I ⊗ A‖` for the level block `B`.
    pub power_residual: f64,
    /// `max(‖B^*B − I‖, ‖BB^* − I‖)`.
    pub unitarity_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub per_level: Vec<LevelSpectrum>,
    /// Largest gap between consecutive eigenvalue angles over all levels.
    pub max_gap: f64,
}

impl SpectrumReport {
    pub fn angles(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .per_level
            .iter()
            .flat_map(|l| l.eigenvalues.iter().map(|z| z.arg().rem_euclid(2.0 * PI)))
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// Plain-text histogram of eigenvalue angles over `[0, 2π)`.
    pub fn histogram(&self, bins: usize) -> String {
        angle_histogram(&self.angles(), bins)
    }
}

/// Largest gap between sorted angles on the circle, wrap-around included.
pub fn max_angular_gap(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 2.0 * PI;
    }
    let mut a: Vec<f64> = angles.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    a.sort_by(|x, y| x.total_cmp(y));
    let mut gap = a[0] + 2.0 * PI - a[a.len() - 1];
    for w in a.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

pub fn angle_histogram(angles: &[f64], bins: usize) -> String {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for t in angles {
        let k = ((t.rem_euclid(2.0 * PI) / (2.0 * PI)) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1);
    let mut out = String::new();
    for (k, &n) in counts.iter().enumerate() {
        let lo = 2.0 * PI * k as f64 / bins as f64;
        let hi = 2.0 * PI * (k + 1) as f64 / bins as f64;
        let bar = "#".repeat((n * 40).div_ceil(peak));
        out.push_str(&format!("[{lo:6.4}, {hi:6.4}) {n:5} {bar}\n"));
    }
    out
}

/// All `N`-th roots of every point in `values`.
pub fn nth_roots(values: &[C64], count: usize) -> Vec<C64> {
    let nf = count as f64;
    values
        .iter()
        .flat_map(|z| {
            let (r, t) = (z.norm().powf(1.0 / nf), z.arg());
            (0..count).map(move |k| C64::from_polar(r, (t + 2.0 * PI * k as f64) / nf))
        })
        .collect()
}

fn matrix_power(b: &CMatrix, mut e: usize) -> CMatrix {
    let mut acc = CMatrix::identity(b.nrows(), b.ncols());
    let mut base = b.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Eigenvalues of `W_L` on each `H_m ⊗ E`, `m ≤ M`, for a unitary symbol.
pub fn spectrum_per_level(symbol: &Symbol, max_level: usize, tol: f64) -> Result<SpectrumReport> {
    let unitary = check_unitary(symbol, tol, 1)?;
    if !unitary.verdict {
        return Err(Error::Precondition(format!(
            "symbol is not unitary (constant residual {:.3e}, level-0 unitarity {:.3e})",
            unitary.constant_residual, unitary.unitarity_residual
        )));
    }
    let n = symbol.n();
    let d = symbol.coeff_dim();
    let a = symbol.level0_block();
    let base = linalg::eigenvalues(&a);
    let mut per_level = Vec::with_capacity(max_level + 1);
    let mut all_angles = Vec::new();
    for m in 0..=max_level {
        let size = n
            .checked_pow(m as u32)
            .and_then(|s| s.checked_mul(d))
            .ok_or(Error::TooLarge { dim: usize::MAX, limit: crate::DENSE_LIMIT })?;
        check_dense(size)?;
        let (b, _) = level_block(symbol, m)?;
        let eigenvalues = linalg::eigenvalues(&b);
        let count = n.pow(m as u32);
        let predicted = nth_roots(&base, count);
        let words = count;
        let mut id_a = CMatrix::zeros(size, size);
        for w in 0..words {
            id_a.view_mut((w * d, w * d), (d, d)).copy_from(&a);
        }
        let power_residual = linalg::op_norm(&(matrix_power(&b, count) - id_a));
        let unitarity_residual = linalg::identity_defect(&(b.adjoint() * &b))
            .max(linalg::identity_defect(&(&b * b.adjoint())));
        let modulus_residual = eigenvalues.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        all_angles.extend(eigenvalues.iter().map(|z| z.arg()));
        per_level.push(LevelSpectrum {
            level: m,
            hausdorff: linalg::hausdorff(&eigenvalues, &predicted),
            eigenvalues,
            predicted,
            modulus_residual,
            power_residual,
            unitarity_residual,
        });
    }
    Ok(SpectrumReport { per_level, max_gap: max_angular_gap(&all_angles) })
}

/// Classification a gallery entry is expected to reproduce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub isometric: Option<bool>,
    pub nica: Option<bool>,
    pub unitary: Option<bool>,
}

/// A named worked example.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: String,
    pub parameters: serde_json::Value,
    pub symbol: Option<Symbol>,
    /// Raw operators for examples outside the Fock picture.
    pub operators: Vec<(String, Operator)>,
    pub expected: Expected,
    /// Checks made while constructing the entry.
    pub checks: Vec<Check>,
}

/// The adding machine on `span{e_0, …, e_{N−1}}`:
/// `V_1 e_k = q̄^{2k} e_{2k}`, `V_2 e_k = q̄^{2k+1} e_{2k+1}`, `W e_k = q̄ e_{k+1}`.
pub fn gallery_adding_machine(q: C64, size: usize, tol: f64) -> Result<GalleryEntry> {
    if !(q.re.is_finite() && q.im.is_finite()) || (q.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("q = {q} is not unimodular")));
    }
    if size < 4 {
        return Err(Error::DegenerateWindow(format!("N = {size} leaves no relation window")));
    }
    let qb = q.conj();
    let pow = |k: usize| qb.powu(k as u32);
    let mut v1 = CMatrix::zeros(size, size);
    let mut v2 = CMatrix::zeros(size, size);
    let mut w = CMatrix::zeros(size, size);
    for k in 0..size {
        if 2 * k < size {
            v1[(2 * k, k)] = pow(2 * k);
        }
        if 2 * k + 1 < size {
            v2[(2 * k + 1, k)] = pow(2 * k + 1);
        }
        if k + 1 < size {
            w[(k + 1, k)] = qb;
        }
    }
    // columns k ≤ (N − 2)/2
    let window = (size - 2) / 2 + 1;
    let on = |m: CMatrix| linalg::op_norm(&m.columns(0, window).into_owned());
    let wa = w.adjoint();
    let mut checks = vec![
        Check::at_most("W V_1 = V_2", on(&w * &v1 - &v2), tol),
        Check::at_most("W V_2 = q V_1 W", on(&w * &v2 - &v1 * &w * q), tol),
        Check::at_most("W^* V_1 = conj(q) V_2 W^*", on(&wa * &v1 - &v2 * &wa * qb), tol),
    ];
    let is_one = (q - one()).norm() <= tol;
    let nica_residual = on(&wa * &v1 - &v2 * &wa);
    checks.push(Check::verdict(
        "W^* V_1 = V_2 W^* exactly when q = 1",
        (nica_residual <= tol) == is_one,
        nica_residual,
        tol,
    ));
    let operators = vec![
        ("V_1".to_string(), Operator::plain(v1, size.div_ceil(2))?),
        ("V_2".to_string(), Operator::plain(v2, size / 2)?),
        ("W".to_string(), Operator::plain(w, size - 1)?),
    ];
    Ok(GalleryEntry {
        name: "adding-machine".into(),
        parameters: json!({ "q": [q.re, q.im], "size": size, "window": window, "nica": nica_residual <= tol }),
        symbol: None,
        operators,
        expected: Expected { isometric: None, nica: Some(is_one), unitary: None },
        checks,
    })
}

/// Block-diagonal symbol `L h_m = e_1^{⊗m} ⊗ h_m`, `m < d`.
pub fn gallery_weak_bishift(n: usize, d: usize, max_level: usize, tol: f64) -> Result<GalleryEntry> {
    if d > max_level && d > 1 {
        return Err(Error::InvalidParameter(format!("d = {d} exceeds M = {max_level}")));
    }
    let space = TruncatedFockSpace::new(n, max_level, d)?;
    let columns = (0..d)
        .map(|m| vec![(space.level_start(m) * d + m, one())])
        .collect();
    let symbol = Symbol::new(space, columns)?;
    let mut checks = Vec::new();
    for m in 1..d {
        let image = apply_basis(&symbol, &Word::vacuum(n), m)?.annihilate(1);
        let want = FockVector::basis(Word::repeat(n, 1, m - 1)?, m, d);
        checks.push(Check::at_most(
            format!("S_1^* W (Ω ⊗ h_{m}) = e_1^{{{}}} ⊗ h_{m}", m - 1),
            image.sub(&want).norm(),
            tol,
        ));
    }
    Ok(GalleryEntry {
        name: "weak-bishift".into(),
        parameters: json!({ "n": n, "d": d, "max_level": max_level }),
        symbol: Some(symbol),
        operators: Vec::new(),
        expected: Expected { isometric: Some(true), nica: Some(d == 1), unitary: Some(d == 1) },
        checks,
    })
}

/// Coefficients `c_0 = sqrt(2/(√5+3))`, `c_p = c_0 ω^{p−1}` with
/// `ω = (1 − √5)/2`.
pub fn golden_coefficients(terms: usize) -> Vec<f64> {
    let s5 = 5f64.sqrt();
    let c0 = (2.0 / (s5 + 3.0)).sqrt();
    let omega = (1.0 - s5) / 2.0;
    let mut out = Vec::with_capacity(terms + 1);
    out.push(c0);
    let mut power = 1.0;
    for _ in 1..=terms {
        out.push(c0 * power);
        power *= omega;
    }
    out
}

/// The golden-ratio sequence together with partial-sum diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct GoldenRatio {
    pub terms: usize,
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub symbol: Symbol,
    /// `|Σ_{p≤P} c_p² − 1|`.
    pub norm_defect: f64,
    /// `c_0² ω^{2P} / (1 − ω²)`.
    pub norm_tail: f64,
    /// `|Σ_{p≤P−r} c_{p+r} c_p|` for `r = 1..=4`.
    pub shift_sums: Vec<f64>,
    /// `c_0² |ω|^{2P−r} / (1 − ω²)` for `r = 1..=4`.
    pub shift_tails: Vec<f64>,
}

/// `ξ = Σ_{p≤P} c_p e_1^{⊗p}` on `F(n, max(P, M))`.
pub fn gallery_golden_ratio(terms: usize, n: usize, max_level: usize) -> Result<GoldenRatio> {
    if terms == 0 {
        return Err(Error::InvalidParameter("the golden-ratio sequence needs P ≥ 1".into()));
    }
    let coefficients = golden_coefficients(terms);
    let level = max_level.max(terms);
    let symbol = Symbol::scalar_e1(
        n,
        level,
        &coefficients.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>(),
    )?;
    let s5 = 5f64.sqrt();
    let omega: f64 = (1.0 - s5) / 2.0;
    let c0sq = coefficients[0] * coefficients[0];
    let denom = 1.0 - omega * omega;
    let norm_defect = (coefficients.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
    let norm_tail = c0sq * omega.abs().powi(2 * terms as i32) / denom;
    let shift_sums = (1..=4)
        .map(|r| {
            (0..=terms.saturating_sub(r))
                .filter(|p| p + r <= terms)
                .map(|p| coefficients[p + r] * coefficients[p])
                .sum::<f64>()
                .abs()
        })
        .collect();
    let shift_tails = (1..=4)
        .map(|r: i32| c0sq * omega.abs().powi(2 * terms as i32 - r) / denom)
        .collect();
    Ok(GoldenRatio { terms, coefficients, symbol, norm_defect, norm_tail, shift_sums, shift_tails })
}

pub fn golden_entry(terms: usize, n: usize, max_level: usize) -> Result<GalleryEntry> {
    let g = gallery_golden_ratio(terms, n, max_level)?;
    let mut checks = vec![Check::at_most("norm defect within tail", g.norm_defect, g.norm_tail + 1e-15)];
    for (r, (s, t)) in g.shift_sums.iter().zip(&g.shift_tails).enumerate() {
        checks.push(Check::at_most(format!("shift sum r={} within tail", r + 1), *s, t + 1e-15));
    }
    Ok(GalleryEntry {
        name: "golden-ratio".into(),
        parameters: json!({ "terms": terms, "n": n, "max_level": g.symbol.max_level() }),
        symbol: Some(g.symbol),
        operators: Vec::new(),
        expected: Expected { isometric: Some(true), nica: Some(false), unitary: Some(false) },
        checks,
    })
}

/// Constant shift `L h_p = Ω ⊗ h_{p+1}` with the last column as boundary.
pub fn gallery_shift_symbol(n: usize, d: usize, max_level: usize) -> Result<GalleryEntry> {
    if d < 2 {
        return Err(Error::InvalidParameter("the shift symbol needs d ≥ 2".into()));
    }
    let space = TruncatedFockSpace::new(n, max_level, d)?;
    let a = CMatrix::from_fn(d, d, |s, q| if s == q + 1 { one() } else { zero() });
    let symbol = Symbol::constant(space, &a)?.with_boundary(vec![d - 1])?;
    let mut checks = Vec::new();
    if space.dim() <= 512 {
        let reach = orbit_span_dim(&symbol, 0, 1e-10)?;
        checks.push(Check::at_most(
            "orbit of Ω ⊗ h_0 spans the truncation",
            (space.dim() - reach) as f64,
            0.0,
        ));
    }
    Ok(GalleryEntry {
        name: "shift".into(),
        parameters: json!({ "n": n, "d": d, "max_level": max_level }),
        symbol: Some(symbol),
        operators: Vec::new(),
        expected: Expected { isometric: Some(true), nica: Some(true), unitary: Some(false) },
        checks,
    })
}

/// Dimension of the span of everything reachable from basis vector
/// `start` by the truncated `S_1, …, S_n` and `W_L`.
pub fn orbit_span_dim(symbol: &Symbol, start: usize, tol: f64) -> Result<usize> {
    let space = *symbol.space();
    check_dense(space.dim())?;
    let mut gens: Vec<CMatrix> = (1..=space.n())
        .map(|i| creation_operator(i, &space).map(|o| o.into_matrix()))
        .collect::<Result<_>>()?;
    gens.push(build_odometer(symbol)?.into_parts().1.into_matrix());
    let dim = space.dim();
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut e = CMatrix::zeros(dim, 1);
    e[(start, 0)] = one();
    queue.push_back(e);
    while let Some(v) = queue.pop_front() {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = (b.adjoint() * &r)[(0, 0)];
                r -= b * proj;
            }
        }
        let nr = r.norm();
        if nr <= tol {
            continue;
        }
        let u = r / c(nr, 0.0);
        for g in &gens {
            queue.push_back(g * &u);
        }
        basis.push(u);
        if basis.len() == dim {
            break;
        }
    }
    Ok(basis.len())
}

/// Gallery entry addressed by name.
pub fn gallery_by_name(name: &str, params: &GalleryParams) -> Result<GalleryEntry> {
    match name {
        "adding-machine" => gallery_adding_machine(C64::from_polar(1.0, params.q_angle), params.size, params.tol),
        "weak-bishift" => gallery_weak_bishift(params.n, params.d, params.max_level, params.tol),
        "golden-ratio" => golden_entry(params.terms, params.n, params.max_level),
        "shift" => gallery_shift_symbol(params.n, params.d, params.max_level),
        "phase" => {
            let space = TruncatedFockSpace::new(params.n, params.max_level, 1)?;
            let symbol = Symbol::constant(space, &CMatrix::from_element(1, 1, C64::from_polar(1.0, params.theta)))?;
            Ok(GalleryEntry {
                name: "phase".into(),
                parameters: json!({ "n": params.n, "max_level": params.max_level, "theta": params.theta }),
                symbol: Some(symbol),
                operators: Vec::new(),
                expected: Expected { isometric: Some(true), nica: Some(true), unitary: Some(true) },
                checks: Vec::new(),
            })
        }
        other => Err(Error::InvalidParameter(format!("unknown gallery entry '{other}'"))),
    }
}

/// Parameters shared by the gallery constructors.
#[derive(Clone, Debug)]
pub struct GalleryParams {
    pub n: usize,
    pub d: usize,
    pub max_level: usize,
    pub terms: usize,
    pub size: usize,
    pub q_angle: f64,
    pub theta: f64,
    pub tol: f64,
}

impl Default for GalleryParams {
    fn default() -> Self {
        GalleryParams { n: 2, d: 3, max_level: 4, terms: 60, size: 16, q_angle: 0.0, theta: 0.0, tol: crate::DEFAULT_TOL }
    }
}

pub const GALLERY_NAMES: [&str; 5] = ["adding-machine", "weak-bishift", "golden-ratio", "shift", "phase"];
