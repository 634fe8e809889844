//! Single-variable polynomials over `ℂ` and their evaluation on upper
//! triangular matrices through divided differences.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matpoly::CMatrix;
use crate::poly::NcPolynomial;

/// `Σ coeffs[j] x^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<Complex64>,
}

impl UniPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        UniPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        UniPoly { coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect() }
    }

    /// Reads a polynomial in the single letter `X1`.
    pub fn from_nc(p: &NcPolynomial) -> Result<Self> {
        p.check_alphabet(1)?;
        let mut coeffs = vec![Complex64::zero(); p.degree() + 1];
        for (w, c) in p.terms() {
            coeffs[w.len()] += c.to_complex();
        }
        Ok(UniPoly { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation at a scalar.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, &c| acc * z + c)
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, a: &CMatrix) -> CMatrix {
        let k = a.nrows();
        let mut acc = CMatrix::zeros(k, k);
        for &c in self.coeffs.iter().rev() {
            acc = &acc * a;
            for i in 0..k {
                acc[(i, i)] += c;
            }
        }
        acc
    }
}

/// Chebyshev polynomial of the second kind, `U_0 = 1`, `U_1 = 2x`,
/// `U_{m+1} = 2x U_m − U_{m−1}`.
pub fn chebyshev_u(d: usize) -> UniPoly {
    let mut prev = vec![0.0; d + 1];
    let mut cur = vec![0.0; d + 1];
    cur[0] = 1.0;
    for _ in 0..d {
        let mut next = vec![0.0; d + 1];
        for j in 0..d {
            next[j + 1] += 2.0 * cur[j];
        }
        for j in 0..=d {
            next[j] -= prev[j];
        }
        prev = cur;
        cur = next;
    }
    UniPoly::from_real(&cur)
}

/// `p(A)` for upper triangular `A` with pairwise distinct diagonal entries.
///
/// Entry `(i, j)` is the sum over chains `i = s_0 < s_1 < … < s_l = j` of
/// `p[z_{s_0}, …, z_{s_l}] · t_{s_0 s_1} ⋯ t_{s_{l−1} s_l}`.
pub fn eval_upper_triangular(p: &UniPoly, a: &CMatrix) -> Result<CMatrix> {
    let k = a.nrows();
    if a.ncols() != k {
        return Err(Error::SizeMismatch { expected: k, found: a.ncols() });
    }
    for i in 0..k {
        for j in 0..i {
            if !a[(i, j)].is_zero() {
                return Err(Error::InvalidArgument(format!("entry ({}, {}) below the diagonal", i + 1, j + 1)));
            }
        }
    }
    let z: Vec<Complex64> = (0..k).map(|i| a[(i, i)]).collect();
    for i in 0..k {
        for j in i + 1..k {
            if z[i] == z[j] {
                return Err(Error::RepeatedDiagonal(i + 1, j + 1));
            }
        }
    }
    let values: Vec<Complex64> = z.iter().map(|&x| p.eval(x)).collect();
    let mut out = CMatrix::zeros(k, k);
    let mut chain = Vec::with_capacity(k);
    for i in 0..k {
        out[(i, i)] = values[i];
        chain.clear();
        chain.push(i);
        extend_chains(a, &z, &values, &mut chain, Complex64::new(1.0, 0.0), &mut out);
    }
    Ok(out)
}

fn extend_chains(
    a: &CMatrix,
    z: &[Complex64],
    values: &[Complex64],
    chain: &mut Vec<usize>,
    weight: Complex64,
    out: &mut CMatrix,
) {
    let last = *chain.last().unwrap();
    for next in last + 1..a.nrows() {
        let t = a[(last, next)];
        if t.is_zero() {
            continue;
        }
        chain.push(next);
        let w = weight * t;
        out[(chain[0], next)] += divided_difference(z, values, chain) * w;
        extend_chains(a, z, values, chain, w, out);
        chain.pop();
    }
}

/// `Σ_s p(z_s) / Π_{r ≠ s} (z_s − z_r)` over the nodes of `chain`.
fn divided_difference(z: &[Complex64], values: &[Complex64], chain: &[usize]) -> Complex64 {
    let mut total = Complex64::zero();
    for &s in chain {
        let mut denom = Complex64::new(1.0, 0.0);
        for &r in chain {
            if r != s {
                denom *= z[s] - z[r];
            }
        }
        total += values[s] / denom;
    }
    total
}
