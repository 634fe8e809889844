//! Elements of the tensor square `ℂ⟨X⟩ ⊗ ℂ⟨X⟩` and the free difference quotient.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::Result;
use crate::matpoly::{CMatrix, MonomialCache};
use crate::poly::NcPolynomial;
use crate::scalar::GaussianRational;
use crate::word::{Letter, Word};

/// `Σ c · u ⊗ v`, kept in the monomial basis so duplicates merge and zero
/// summands never appear.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TensorPolynomial {
    terms: BTreeMap<(Word, Word), GaussianRational>,
}

impl TensorPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `p ⊗ q`.
    pub fn from_pair(p: &NcPolynomial, q: &NcPolynomial) -> Self {
        let mut out = Self::zero();
        for (u, a) in p.terms() {
            for (v, b) in q.terms() {
                out.add_term(u.clone(), v.clone(), a * b);
            }
        }
        out
    }

    pub fn add_term(&mut self, left: Word, right: Word, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        let key = (left, right);
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Word, &GaussianRational)> {
        self.terms.iter().map(|((u, v), c)| (u, v, c))
    }

    /// The summands as `(c·u, v)` pairs of polynomials.
    pub fn summands(&self) -> Vec<(NcPolynomial, NcPolynomial)> {
        self.terms()
            .map(|(u, v, c)| (NcPolynomial::monomial(u.clone(), c.clone()), NcPolynomial::word(v.clone())))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (u, v, c) in other.terms() {
            out.add_term(u.clone(), v.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut out = Self::zero();
        for (u, v, a) in self.terms() {
            out.add_term(u.clone(), v.clone(), a * c);
        }
        out
    }

    /// `(a ⊗ b)(c ⊗ d) = ac ⊗ bd`.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, b, x) in self.terms() {
            for (c, d, y) in other.terms() {
                out.add_term(a.concat(c), b.concat(d), x * y);
            }
        }
        out
    }

    /// `(a ⊗ b)^* = a^* ⊗ b^*` with conjugated coefficients.
    pub fn star(&self) -> Self {
        let mut out = Self::zero();
        for (u, v, c) in self.terms() {
            out.add_term(u.star(), v.star(), c.conj());
        }
        out
    }

    /// `(Id ⊗ φ)`: applies a functional to the right factor.
    pub fn apply_right<F>(&self, mut phi: F) -> Result<NcPolynomial>
    where
        F: FnMut(&Word) -> Result<GaussianRational>,
    {
        let mut out = NcPolynomial::zero();
        for (u, v, c) in self.terms() {
            out.add_term(u.clone(), c * &phi(v)?);
        }
        Ok(out)
    }

    /// `(φ ⊗ ψ)` applied to every summand.
    pub fn apply_both<F, G>(&self, mut phi: F, mut psi: G) -> Result<GaussianRational>
    where
        F: FnMut(&Word) -> Result<GaussianRational>,
        G: FnMut(&Word) -> Result<GaussianRational>,
    {
        let mut acc = GaussianRational::zero();
        for (u, v, c) in self.terms() {
            acc += &(&(c * &phi(u)?) * &psi(v)?);
        }
        Ok(acc)
    }

    /// `m_C(p ⊗ q) = p(A) C q(A)`, summed.
    pub fn evaluate(&self, a: &[CMatrix], c: &CMatrix) -> Result<CMatrix> {
        let mut cache = MonomialCache::new(a)?;
        let k = cache.size();
        let mut out = CMatrix::zeros(k, k);
        for (u, v, coeff) in self.terms() {
            out += cache.get(u)? * c * cache.get(v)? * coeff.to_complex();
        }
        Ok(out)
    }
}

impl fmt::Display for TensorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (u, v, c)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c != &GaussianRational::from_int(1) {
                write!(f, "{c}*")?;
            }
            write!(f, "{} ⊗ {}", u.to_power_string(), v.to_power_string())?;
        }
        Ok(())
    }
}

/// `∂_{X_i} p`: on a monomial, one `prefix ⊗ suffix` term per occurrence of `X_i`.
pub fn free_difference_quotient(p: &NcPolynomial, i: Letter) -> TensorPolynomial {
    let mut out = TensorPolynomial::zero();
    for (w, c) in p.terms() {
        let letters = w.letters();
        for (j, &l) in letters.iter().enumerate() {
            if l == i {
                out.add_term(
                    Word::from_slice(&letters[..j]),
                    Word::from_slice(&letters[j + 1..]),
                    c.clone(),
                );
            }
        }
    }
    out
}
