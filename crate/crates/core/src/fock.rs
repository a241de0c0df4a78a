//! Words of the free semigroup and truncated Fock-space indexing.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;

use crate::{Error, Result, C64};

/// A word `μ = μ_1 μ_2 … μ_k` over the alphabet `1..=n`. The empty word is
/// the vacuum label `Ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    n: usize,
    letters: Vec<usize>,
}

impl Word {
    pub fn new(n: usize, letters: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("alphabet size must be at least 1".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::InvalidLetter { letter: bad, n });
        }
        Ok(Word { n, letters })
    }

    pub fn vacuum(n: usize) -> Self {
        Word { n, letters: Vec::new() }
    }

    /// The word `i i … i` of length `m`.
    pub fn repeat(n: usize, letter: usize, m: usize) -> Result<Self> {
        Word::new(n, vec![letter; m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `i·μ`, the label of `S_i e_μ`.
    pub fn prepend(&self, letter: usize) -> Result<Self> {
        if letter == 0 || letter > self.n {
            return Err(Error::InvalidLetter { letter, n: self.n });
        }
        let mut letters = Vec::with_capacity(self.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.letters);
        Ok(Word { n: self.n, letters })
    }

    /// Concatenation `μν`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { n: self.n, letters }
    }

    /// True when every letter equals `letter` (vacuously true for `Ω`).
    pub fn is_power_of(&self, letter: usize) -> bool {
        self.letters.iter().all(|&l| l == letter)
    }

    pub(crate) fn from_letters_unchecked(n: usize, letters: Vec<usize>) -> Self {
        Word { n, letters }
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.n.cmp(&other.n))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "Ω");
        }
        write!(f, "(")?;
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// All words of length `0..=max_level` in canonical order.
pub fn enumerate_words(n: usize, max_level: usize) -> Vec<Word> {
    let mut out = vec![Word::vacuum(n)];
    let mut level = vec![Word::vacuum(n)];
    for _ in 0..max_level {
        let mut next = Vec::with_capacity(level.len() * n);
        for w in &level {
            for l in 1..=n {
                let mut letters = w.letters.clone();
                letters.push(l);
                next.push(Word { n, letters });
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Canonical index of `word` inside `space`.
pub fn word_index(word: &Word, space: &TruncatedFockSpace) -> Result<usize> {
    space.word_index(word)
}

/// `F(n, M) ⊗ C^d`: words of length at most `M` tensored with a
/// `d`-dimensional coefficient space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedFockSpace {
    n: usize,
    max_level: usize,
    coeff_dim: usize,
    words: usize,
}

fn checked_pow(n: usize, m: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..m {
        acc = acc.checked_mul(n)?;
    }
    Some(acc)
}

fn checked_word_count(n: usize, max_level: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for m in 0..=max_level {
        total = total.checked_add(level)?;
        if m < max_level {
            level = level.checked_mul(n)?;
        }
    }
    Some(total)
}

impl TruncatedFockSpace {
    pub fn new(n: usize, max_level: usize, coeff_dim: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("alphabet size must be at least 1".into()));
        }
        if coeff_dim == 0 {
            return Err(Error::InvalidParameter("coefficient dimension must be at least 1".into()));
        }
        let words = checked_word_count(n, max_level)
            .filter(|w| w.checked_mul(coeff_dim).is_some())
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "space n={n}, M={max_level}, d={coeff_dim} is not indexable"
                ))
            })?;
        Ok(TruncatedFockSpace { n, max_level, coeff_dim, words })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    /// Number of words of length at most `M`.
    pub fn num_words(&self) -> usize {
        self.words
    }

    /// Total dimension `d · Σ n^m`.
    pub fn dim(&self) -> usize {
        self.words * self.coeff_dim
    }

    /// Same alphabet and coefficients, different truncation.
    pub fn with_max_level(&self, max_level: usize) -> Result<Self> {
        TruncatedFockSpace::new(self.n, max_level, self.coeff_dim)
    }

    pub fn with_coeff_dim(&self, coeff_dim: usize) -> Result<Self> {
        TruncatedFockSpace::new(self.n, self.max_level, coeff_dim)
    }

    /// `n^m`, the number of words at level `m ≤ M`.
    pub fn level_size(&self, m: usize) -> usize {
        assert!(m <= self.max_level, "level {m} above truncation");
        self.n.pow(m as u32)
    }

    /// Index of the first word at level `m`; for `m = M + 1` this is the
    /// total word count.
    pub fn level_start(&self, m: usize) -> usize {
        assert!(m <= self.max_level + 1, "level {m} above truncation");
        if self.n == 1 {
            return m;
        }
        let n = self.n as u128;
        ((n.pow(m as u32) - 1) / (n - 1)) as usize
    }

    /// Basis indices of `H_m ⊗ E`.
    pub fn level_range(&self, m: usize) -> std::ops::Range<usize> {
        let d = self.coeff_dim;
        self.level_start(m) * d..self.level_start(m + 1) * d
    }

    /// Number of basis vectors at levels `< w` (clamped to the whole space).
    pub fn window_dim(&self, w: usize) -> usize {
        self.level_start(w.min(self.max_level + 1)) * self.coeff_dim
    }

    pub fn word_index(&self, word: &Word) -> Result<usize> {
        if word.n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "word over {} letters in a space over {}",
                word.n, self.n
            )));
        }
        if word.len() > self.max_level {
            return Err(Error::LevelOverflow { len: word.len(), max_level: self.max_level });
        }
        let mut offset = 0usize;
        for &l in &word.letters {
            offset = offset * self.n + (l - 1);
        }
        Ok(self.level_start(word.len()) + offset)
    }

    /// Inverse of [`word_index`](Self::word_index).
    pub fn word_at(&self, index: usize) -> Word {
        assert!(index < self.words, "word index {index} out of range");
        let m = self.level_of_word(index);
        let mut offset = index - self.level_start(m);
        let mut letters = vec![0; m];
        for slot in letters.iter_mut().rev() {
            *slot = offset % self.n + 1;
            offset /= self.n;
        }
        Word { n: self.n, letters }
    }

    /// Level of the word with canonical index `index`.
    pub fn level_of_word(&self, index: usize) -> usize {
        let mut m = 0;
        while self.level_start(m + 1) <= index {
            m += 1;
        }
        m
    }

    /// Level of basis vector `i`.
    pub fn level_of(&self, basis: usize) -> usize {
        self.level_of_word(basis / self.coeff_dim)
    }

    pub fn basis_index(&self, word: &Word, p: usize) -> Result<usize> {
        if p >= self.coeff_dim {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {p} outside 0..{}",
                self.coeff_dim
            )));
        }
        Ok(self.word_index(word)? * self.coeff_dim + p)
    }

    pub fn basis_label(&self, basis: usize) -> (Word, usize) {
        (self.word_at(basis / self.coeff_dim), basis % self.coeff_dim)
    }

    /// Word index of `i·μ` given the word index of `μ`, or `None` when
    /// `|μ| = M`.
    pub fn prepend_index(&self, letter: usize, word: usize) -> Option<usize> {
        let m = self.level_of_word(word);
        if m >= self.max_level {
            return None;
        }
        let offset = word - self.level_start(m);
        Some(self.level_start(m + 1) + (letter - 1) * checked_pow(self.n, m)? + offset)
    }

    /// Word index of `μ` given that of `i·μ`, together with `i`.
    pub fn strip_index(&self, word: usize) -> Option<(usize, usize)> {
        let m = self.level_of_word(word);
        if m == 0 {
            return None;
        }
        let offset = word - self.level_start(m);
        let block = self.n.pow((m - 1) as u32);
        Some((offset / block + 1, self.level_start(m - 1) + offset % block))
    }
}

/// A finitely supported vector in `F_n^2 ⊗ C^d`, keyed by `(word, p)`.
/// It is not tied to a truncation, so matrix-free actions can be evaluated
/// at any level.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    n: usize,
    coeff_dim: usize,
    entries: BTreeMap<(Word, usize), C64>,
}

impl FockVector {
    pub fn zero(n: usize, coeff_dim: usize) -> Self {
        FockVector { n, coeff_dim, entries: BTreeMap::new() }
    }

    pub fn basis(word: Word, p: usize, coeff_dim: usize) -> Self {
        let mut v = FockVector::zero(word.n(), coeff_dim);
        v.add(word, p, C64::new(1.0, 0.0));
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    pub fn add(&mut self, word: Word, p: usize, value: C64) {
        debug_assert!(p < self.coeff_dim && word.n() == self.n);
        *self.entries.entry((word, p)).or_insert(C64::new(0.0, 0.0)) += value;
    }

    pub fn add_scaled(&mut self, other: &FockVector, scale: C64) {
        for ((w, p), v) in &other.entries {
            self.add(w.clone(), *p, v * scale);
        }
    }

    pub fn get(&self, word: &Word, p: usize) -> C64 {
        self.entries
            .get(&(word.clone(), p))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, usize, C64)> {
        self.entries.iter().map(|((w, p), v)| (w, *p, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, linear in the first slot.
    pub fn inner(&self, other: &FockVector) -> C64 {
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = C64::new(0.0, 0.0);
        for (key, v) in &small.entries {
            if let Some(u) = large.entries.get(key) {
                acc += if flip { u * v.conj() } else { v * u.conj() };
            }
        }
        acc
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0));
        out
    }

    /// `(S_i ⊗ I) self`.
    pub fn create(&self, letter: usize) -> Result<FockVector> {
        let mut out = FockVector::zero(self.n, self.coeff_dim);
        for ((w, p), v) in &self.entries {
            out.entries.insert((w.prepend(letter)?, *p), *v);
        }
        Ok(out)
    }

    /// `(S_i ⊗ I)^* self`.
    pub fn annihilate(&self, letter: usize) -> FockVector {
        let mut out = FockVector::zero(self.n, self.coeff_dim);
        for ((w, p), v) in &self.entries {
            if w.letters.first() == Some(&letter) {
                let rest = Word::from_letters_unchecked(self.n, w.letters[1..].to_vec());
                out.entries.insert((rest, *p), *v);
            }
        }
        out
    }

    /// Largest word length carrying a nonzero entry.
    pub fn max_level(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|((w, _), _)| w.len())
            .max()
    }

    /// Squared norm of the part above level `m`.
    pub fn tail_norm_sqr(&self, m: usize) -> f64 {
        self.entries
            .iter()
            .filter(|((w, _), _)| w.len() > m)
            .map(|(_, v)| v.norm_sqr())
            .sum()
    }

    /// Dense coefficients in `space`, dropping everything above level `M`.
    pub fn to_dense(&self, space: &TruncatedFockSpace) -> Result<DVector<C64>> {
        if space.n() != self.n || space.coeff_dim() != self.coeff_dim {
            return Err(Error::DimensionMismatch("vector and space disagree".into()));
        }
        let mut out = DVector::zeros(space.dim());
        for ((w, p), v) in &self.entries {
            if w.len() <= space.max_level() {
                out[space.basis_index(w, *p)?] += v;
            }
        }
        Ok(out)
    }

    pub fn from_dense(space: &TruncatedFockSpace, column: &[C64]) -> Result<FockVector> {
        if column.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} in a space of dimension {}",
                column.len(),
                space.dim()
            )));
        }
        let mut out = FockVector::zero(space.n(), space.coeff_dim());
        for (i, v) in column.iter().enumerate() {
            if *v != C64::new(0.0, 0.0) {
                let (w, p) = space.basis_label(i);
                out.entries.insert((w, p), *v);
            }
        }
        Ok(out)
    }
}
