//! Evaluation of noncommutative polynomials on tuples of complex matrices, and
//! polynomials with matrix coefficients.
//!
//! The evaluation convention is fixed throughout the crate:
//! for `P = Σ c_w ⊗ X^w`, `P(A)(C) = Σ_w c_w · C · A^w`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::NcPolynomial;
use crate::word::Word;

pub type CMatrix = DMatrix<Complex64>;

/// Checks that every matrix of the tuple is `k × k` for a common `k` and returns `k`.
pub fn tuple_size(a: &[CMatrix]) -> Result<usize> {
    let k = a.first().map(|m| m.nrows()).unwrap_or(0);
    for m in a {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::SizeMismatch { expected: k, found: m.nrows().max(m.ncols()) });
        }
    }
    Ok(k)
}

pub fn adjoint_tuple(a: &[CMatrix]) -> Vec<CMatrix> {
    a.iter().map(|m| m.adjoint()).collect()
}

/// Memoized word products `A^w` for one matrix tuple.
pub struct MonomialCache<'a> {
    tuple: &'a [CMatrix],
    k: usize,
    cache: HashMap<Word, CMatrix>,
}

impl<'a> MonomialCache<'a> {
    pub fn new(tuple: &'a [CMatrix]) -> Result<Self> {
        let k = tuple_size(tuple)?;
        Ok(MonomialCache { tuple, k, cache: HashMap::new() })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&mut self, w: &Word) -> Result<CMatrix> {
        if let Some(m) = self.cache.get(w) {
            return Ok(m.clone());
        }
        let m = match w.split_last() {
            None => CMatrix::identity(self.k, self.k),
            Some((prefix, l)) => {
                let a = self
                    .tuple
                    .get(l as usize - 1)
                    .ok_or(Error::LetterOutOfRange { letter: l as usize, n: self.tuple.len() })?;
                self.get(&prefix)? * a
            }
        };
        self.cache.insert(w.clone(), m.clone());
        Ok(m)
    }
}

/// `Σ c_w A^w` for a scalar-coefficient polynomial.
pub fn eval_poly(p: &NcPolynomial, a: &[CMatrix]) -> Result<CMatrix> {
    let mut cache = MonomialCache::new(a)?;
    eval_poly_cached(p, &mut cache)
}

pub fn eval_poly_cached(p: &NcPolynomial, cache: &mut MonomialCache<'_>) -> Result<CMatrix> {
    let k = cache.size();
    let mut out = CMatrix::zeros(k, k);
    for (w, c) in p.terms() {
        out += cache.get(w)? * c.to_complex();
    }
    Ok(out)
}

/// `P = Σ_w c_w ⊗ X^w` with `k × k` complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixNcPolynomial {
    k: usize,
    terms: BTreeMap<Word, CMatrix>,
}

impl MatrixNcPolynomial {
    pub fn zero(k: usize) -> Self {
        MatrixNcPolynomial { k, terms: BTreeMap::new() }
    }

    /// `c ⊗ 1`.
    pub fn constant(c: CMatrix) -> Self {
        let mut p = Self::zero(c.nrows());
        p.add_term(Word::one(), c);
        p
    }

    /// `I_k ⊗ p`.
    pub fn from_scalar(p: &NcPolynomial, k: usize) -> Self {
        let mut out = Self::zero(k);
        for (w, c) in p.terms() {
            out.add_term(w.clone(), CMatrix::identity(k, k) * c.to_complex());
        }
        out
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn add_term(&mut self, w: Word, c: CMatrix) {
        assert_eq!(c.shape(), (self.k, self.k), "coefficient size mismatch");
        match self.terms.get_mut(&w) {
            Some(existing) => *existing += c,
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &CMatrix)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Word) -> CMatrix {
        self.terms.get(w).cloned().unwrap_or_else(|| CMatrix::zeros(self.k, self.k))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    /// `Σ c_w^* ⊗ (X^w)^*`.
    pub fn star(&self) -> Self {
        MatrixNcPolynomial {
            k: self.k,
            terms: self.terms.iter().map(|(w, c)| (w.star(), c.adjoint())).collect(),
        }
    }

    /// `P(A)(C) = Σ_w c_w C A^w`.
    pub fn evaluate(&self, a: &[CMatrix], c: &CMatrix) -> Result<CMatrix> {
        let mut cache = MonomialCache::new(a)?;
        self.evaluate_cached(&mut cache, c)
    }

    pub fn evaluate_cached(&self, cache: &mut MonomialCache<'_>, c: &CMatrix) -> Result<CMatrix> {
        self.check_sizes(cache.size(), c)?;
        let mut out = CMatrix::zeros(self.k, self.k);
        for (w, coeff) in &self.terms {
            out += coeff * c * cache.get(w)?;
        }
        Ok(out)
    }

    /// The linear map `C ↦ P(A)(C)` on `M_k(ℂ)`.
    pub fn evaluate_as_map(&self, a: &[CMatrix]) -> Result<LinearMap> {
        let mut cache = MonomialCache::new(a)?;
        self.check_sizes(cache.size(), &CMatrix::identity(self.k, self.k))?;
        let k = self.k;
        let mut m = CMatrix::zeros(k * k, k * k);
        for (w, coeff) in &self.terms {
            // vec(c C M) = (Mᵀ ⊗ c) vec(C) in column-major vectorization
            m += cache.get(w)?.transpose().kronecker(coeff);
        }
        Ok(LinearMap { k, matrix: m })
    }

    /// `P(A)(I_k)` computed as the block row `[c_w]_w` times the block column `[A^w]_w`.
    pub fn evaluate_block_product(&self, a: &[CMatrix]) -> Result<CMatrix> {
        let mut cache = MonomialCache::new(a)?;
        let k = self.k;
        self.check_sizes(cache.size(), &CMatrix::identity(k, k))?;
        let s = self.terms.len();
        let mut row = CMatrix::zeros(k, k * s);
        let mut col = CMatrix::zeros(k * s, k);
        for (i, (w, coeff)) in self.terms.iter().enumerate() {
            row.view_mut((0, i * k), (k, k)).copy_from(coeff);
            col.view_mut((i * k, 0), (k, k)).copy_from(&cache.get(w)?);
        }
        Ok(row * col)
    }

    /// `(Id ⊗ τ)(P P^*) = Σ_{u,v} c_u c_v^* τ(v^* u)` for a moment functional `τ`.
    pub fn tau_gram<F>(&self, mut moment: F) -> Result<CMatrix>
    where
        F: FnMut(&Word) -> Result<Complex64>,
    {
        let mut out = CMatrix::zeros(self.k, self.k);
        for (u, cu) in &self.terms {
            for (v, cv) in &self.terms {
                let t = moment(&v.star().concat(u))?;
                if t != Complex64::new(0.0, 0.0) {
                    out += cu * cv.adjoint() * t;
                }
            }
        }
        Ok(out)
    }

    fn check_sizes(&self, k: usize, c: &CMatrix) -> Result<()> {
        if k != self.k {
            return Err(Error::SizeMismatch { expected: self.k, found: k });
        }
        if c.shape() != (self.k, self.k) {
            return Err(Error::SizeMismatch { expected: self.k, found: c.nrows() });
        }
        Ok(())
    }
}

/// A linear operator on `k × k` matrices stored as its `k² × k²` matrix acting
/// on column-major vectorizations.
#[derive(Clone, Debug)]
pub struct LinearMap {
    k: usize,
    matrix: CMatrix,
}

impl LinearMap {
    pub fn apply(&self, c: &CMatrix) -> CMatrix {
        let v = CMatrix::from_column_slice(self.k * self.k, 1, c.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(self.k, self.k, out.as_slice())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Norm as an operator on `(M_k, ‖·‖_HS)`.
    pub fn hs_operator_norm(&self) -> f64 {
        self.matrix.clone().svd(false, false).singular_values.max()
    }
}

/// `⟨X, Y⟩_HS = tr(X^* Y)`.
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn max_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}
