//! JSON formats for operators, symbols, contractive pairs and subspaces.
//!
//! Sparse objects list `[row, col, re, im]` entries in row-major order with
//! zeros omitted; dense matrices are flat row-major lists of `[re, im]`.
//! Writers are canonical, so `write(read(x)) == x` for any file a writer
//! produced.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dilation::{ContractivePair, RowContraction};
use crate::fock::TruncatedFockSpace;
use crate::operator::{Domain, Operator};
use crate::subspace::InvariantSubspace;
use crate::symbol::Symbol;
use crate::{CMatrix, Error, Result, C64};

/// Serde adapter writing complex lists as `[[re, im], …]`.
pub mod complex_list {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for z in v {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

type Entry = (usize, usize, f64, f64);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FockFile {
    kind: String,
    n: usize,
    max_level: usize,
    coeff_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact_below: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    boundary_columns: Vec<usize>,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlainFile {
    kind: String,
    dim: usize,
    exact_below: usize,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    kind: String,
    n: usize,
    dim: usize,
    t: Vec<Vec<[f64; 2]>>,
    w: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceFile {
    kind: String,
    n: usize,
    max_level: usize,
    coeff_dim: usize,
    generators: usize,
    entries: Vec<Entry>,
}

fn expect_kind(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Schema(format!("expected kind \"{want}\", found \"{found}\"")));
    }
    Ok(())
}

fn check_value(re: f64, im: f64) -> Result<C64> {
    if !(re.is_finite() && im.is_finite()) {
        return Err(Error::NonFinite("JSON entry".into()));
    }
    Ok(C64::new(re, im))
}

fn sparse_entries(m: &CMatrix) -> Vec<Entry> {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((r, c, z.re, z.im));
            }
        }
    }
    out
}

fn sparse_to_dense(rows: usize, cols: usize, entries: &[Entry]) -> Result<CMatrix> {
    crate::operator::check_dense(rows.max(cols))?;
    let mut m = CMatrix::zeros(rows, cols);
    let mut seen = std::collections::BTreeSet::new();
    for &(r, c, re, im) in entries {
        if r >= rows || c >= cols {
            return Err(Error::Schema(format!("entry ({r}, {c}) outside a {rows}x{cols} matrix")));
        }
        if !seen.insert((r, c)) {
            return Err(Error::Schema(format!("duplicate entry ({r}, {c})")));
        }
        m[(r, c)] = check_value(re, im)?;
    }
    Ok(m)
}

fn dense_list(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    out
}

fn dense_from_list(dim: usize, list: &[[f64; 2]]) -> Result<CMatrix> {
    if list.len() != dim * dim {
        return Err(Error::Schema(format!("dense matrix has {} entries, expected {}", list.len(), dim * dim)));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (k, &[re, im]) in list.iter().enumerate() {
        m[(k / dim, k % dim)] = check_value(re, im)?;
    }
    Ok(m)
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

fn peek_kind(text: &str) -> Result<String> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    v.get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Schema("missing string field \"kind\"".into()))
}

pub fn symbol_to_json(symbol: &Symbol) -> Result<String> {
    let space = symbol.space();
    let mut entries: Vec<Entry> = (0..symbol.coeff_dim())
        .flat_map(|q| symbol.column(q).map(move |(row, z)| (row, q, z.re, z.im)))
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    to_line(&FockFile {
        kind: "symbol".into(),
        n: space.n(),
        max_level: space.max_level(),
        coeff_dim: space.coeff_dim(),
        exact_below: None,
        boundary_columns: symbol.boundary_columns().to_vec(),
        entries,
    })
}

pub fn symbol_from_json(text: &str) -> Result<Symbol> {
    let f: FockFile = serde_json::from_str(text)?;
    expect_kind(&f.kind, "symbol")?;
    if f.exact_below.is_some() {
        return Err(Error::Schema("symbols carry no exact_below".into()));
    }
    let space = TruncatedFockSpace::new(f.n, f.max_level, f.coeff_dim)?;
    let mut columns = vec![Vec::new(); f.coeff_dim];
    let mut seen = std::collections::BTreeSet::new();
    for &(r, c, re, im) in &f.entries {
        if r >= space.dim() || c >= f.coeff_dim {
            return Err(Error::Schema(format!(
                "entry ({r}, {c}) outside a {}x{} symbol",
                space.dim(),
                f.coeff_dim
            )));
        }
        if !seen.insert((r, c)) {
            return Err(Error::Schema(format!("duplicate entry ({r}, {c})")));
        }
        columns[c].push((r, check_value(re, im)?));
    }
    let symbol = Symbol::new(space, columns)?;
    if f.boundary_columns.is_empty() {
        Ok(symbol)
    } else {
        symbol
            .with_boundary(f.boundary_columns)
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

pub fn operator_to_json(op: &Operator) -> Result<String> {
    let entries = sparse_entries(op.matrix());
    match op.domain() {
        Domain::Fock(space) => to_line(&FockFile {
            kind: "operator".into(),
            n: space.n(),
            max_level: space.max_level(),
            coeff_dim: space.coeff_dim(),
            exact_below: Some(op.exact_below()),
            boundary_columns: Vec::new(),
            entries,
        }),
        Domain::Plain(dim) => to_line(&PlainFile {
            kind: "plain-operator".into(),
            dim,
            exact_below: op.exact_below(),
            entries,
        }),
    }
}

pub fn operator_from_json(text: &str) -> Result<Operator> {
    if peek_kind(text)? == "plain-operator" {
        let f: PlainFile = serde_json::from_str(text)?;
        let m = sparse_to_dense(f.dim, f.dim, &f.entries)?;
        return Operator::plain(m, f.exact_below).map_err(|e| Error::Schema(e.to_string()));
    }
    let f: FockFile = serde_json::from_str(text)?;
    expect_kind(&f.kind, "operator")?;
    if !f.boundary_columns.is_empty() {
        return Err(Error::Schema("operators carry no boundary_columns".into()));
    }
    let space = TruncatedFockSpace::new(f.n, f.max_level, f.coeff_dim)?;
    let m = sparse_to_dense(space.dim(), space.dim(), &f.entries)?;
    let eb = f.exact_below.unwrap_or(0);
    Operator::new(space, m, eb).map_err(|e| Error::Schema(e.to_string()))
}

pub fn pair_to_json(pair: &ContractivePair) -> Result<String> {
    to_line(&PairFile {
        kind: "pair".into(),
        n: pair.n(),
        dim: pair.dim(),
        t: pair.t.tuples().iter().map(dense_list).collect(),
        w: dense_list(&pair.w),
    })
}

pub fn pair_from_json(text: &str) -> Result<ContractivePair> {
    let f: PairFile = serde_json::from_str(text)?;
    expect_kind(&f.kind, "pair")?;
    if f.t.len() != f.n {
        return Err(Error::Schema(format!("pair lists {} matrices for n = {}", f.t.len(), f.n)));
    }
    crate::operator::check_dense(f.dim)?;
    let tuples = f.t.iter().map(|m| dense_from_list(f.dim, m)).collect::<Result<Vec<_>>>()?;
    let w = dense_from_list(f.dim, &f.w)?;
    ContractivePair::new(RowContraction::new(tuples)?, w)
}

pub fn subspace_to_json(s: &InvariantSubspace) -> Result<String> {
    let space = s.ambient();
    to_line(&SubspaceFile {
        kind: "subspace".into(),
        n: space.n(),
        max_level: space.max_level(),
        coeff_dim: space.coeff_dim(),
        generators: s.dim(),
        entries: sparse_entries(s.basis()),
    })
}

/// Reads a subspace given by generators; the result is the smallest
/// invariant subspace containing them.
pub fn subspace_from_json(text: &str, tol: f64) -> Result<InvariantSubspace> {
    let f: SubspaceFile = serde_json::from_str(text)?;
    expect_kind(&f.kind, "subspace")?;
    let space = TruncatedFockSpace::new(f.n, f.max_level, f.coeff_dim)?;
    let g = sparse_to_dense(space.dim(), f.generators, &f.entries)?;
    InvariantSubspace::from_generators(space, &g, tol)
}

pub fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
