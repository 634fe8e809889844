//! Christoffel-Darboux kernels `κ_{τ,d}(X, Y) = Σ_w P_w(X) ⊗ P_w^*(Y)`, the
//! Christoffel function, the variational minimizer and Siciak-type
//! approximants on matrix tuples.

use std::collections::HashMap;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::{orthobasis, OrthoBasis};
use crate::matpoly::{adjoint_tuple, tuple_size, CMatrix, MatrixNcPolynomial, MonomialCache};
use crate::poly::NcPolynomial;
use crate::scalar::{rat_to_f64, GaussianRational, Rational};
use crate::tensor::TensorPolynomial;
use crate::traces::TracialState;
use crate::word::{enumerate_words, word_count, Word};

const MAX_CONDITION: f64 = 1e12;

/// The degree-`d` kernel of a state, held as its orthogonal basis.
#[derive(Clone, Debug)]
pub struct KernelRep {
    basis: OrthoBasis,
    numeric: NumericForm,
}

/// Floating orthonormal data used for evaluation.
#[derive(Clone, Debug)]
enum NumericForm {
    /// `letters[l][m]` holds the power coefficients of the orthonormal
    /// polynomial of degree `m` in letter `l + 1`; words factor over runs.
    Runs { letters: Vec<Vec<Option<Vec<f64>>>> },
    /// One sparse row of monomial coefficients per retained word.
    Words { rows: Vec<Vec<(Word, f64)>> },
}

/// Band `n − ε ≤ Φ ≤ n + ε` around the level `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetSpec {
    pub level: f64,
    pub epsilon: f64,
    pub k: usize,
    pub degree: usize,
}

impl LevelSetSpec {
    pub fn new(level: f64, epsilon: f64, k: usize, degree: usize) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!("band halfwidth {epsilon} must be non-negative")));
        }
        Ok(LevelSetSpec { level, epsilon, k, degree })
    }

    pub fn contains(&self, phi: f64) -> bool {
        phi >= self.level - self.epsilon && phi <= self.level + self.epsilon
    }
}

pub fn cd_kernel(state: &TracialState, d: usize) -> Result<KernelRep> {
    let basis = orthobasis(state, d)?;
    let runs = state.n() == 1 || state.cumulant_tables().is_some();
    let numeric = if runs { runs_form(&basis) } else { NumericForm::Words { rows: basis.orthonormal() } };
    Ok(KernelRep { basis, numeric })
}

fn runs_form(basis: &OrthoBasis) -> NumericForm {
    let n = basis.n().max(1);
    let d = basis.degree();
    let mut letters = vec![vec![None; d + 1]; n];
    for (w, row) in basis.words().iter().zip(basis.orthonormal()) {
        let runs = w.runs();
        if runs.len() > 1 {
            continue;
        }
        let (l, m) = runs.first().copied().unwrap_or((1, 0));
        let mut coeffs = vec![0.0; m + 1];
        for (u, c) in row {
            coeffs[u.len()] += c;
        }
        if m == 0 {
            for slot in letters.iter_mut() {
                slot[0] = Some(coeffs.clone());
            }
        } else {
            letters[l as usize - 1][m] = Some(coeffs);
        }
    }
    NumericForm::Runs { letters }
}

impl KernelRep {
    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// `κ(X, X)(1) = Σ_w Q_w Q_w^* / ν_w`.
    pub fn diagonal_polynomial(&self) -> NcPolynomial {
        let mut out = NcPolynomial::zero();
        for (q, nu) in self.basis.polys().iter().zip(self.basis.norms()) {
            let inv = Rational::one() / nu;
            out = out.add(&q.multiply(&q.star()).scale_rational(&inv));
        }
        out
    }

    /// `Σ_w Q_w ⊗ Q_w^* / ν_w` as an element of the tensor square.
    pub fn tensor(&self) -> TensorPolynomial {
        let mut out = TensorPolynomial::zero();
        for (q, nu) in self.basis.polys().iter().zip(self.basis.norms()) {
            let inv = GaussianRational::real(Rational::one() / nu);
            out = out.add(&TensorPolynomial::from_pair(q, &q.star()).scale(&inv));
        }
        out
    }

    /// `M_d(τ)^{-1} = Lᵀ N^{-1} L` over the word index.
    pub fn inverse_moment_form(&self) -> Result<Vec<Vec<Rational>>> {
        let l = self.basis.lower_triangular()?;
        let size = l.len();
        let mut inv = vec![vec![Rational::zero(); size]; size];
        for (row, nu) in l.iter().zip(self.basis.norms()) {
            let inv_nu = Rational::one() / nu;
            for a in 0..size {
                if row[a].is_zero() {
                    continue;
                }
                let fa = &row[a] * &inv_nu;
                for b in 0..size {
                    if !row[b].is_zero() {
                        inv[a][b] += &fa * &row[b];
                    }
                }
            }
        }
        Ok(inv)
    }

    /// `Σ_{u,v} (M^{-1})_{u,v} u v^*`, the diagonal polynomial through the inverse moment matrix.
    pub fn diagonal_from_inverse(&self) -> Result<NcPolynomial> {
        let inv = self.inverse_moment_form()?;
        let words = self.basis.words();
        let mut out = NcPolynomial::zero();
        for (a, row) in inv.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    out.add_term(words[a].concat(&words[b].star()), GaussianRational::real(v.clone()));
                }
            }
        }
        Ok(out)
    }

    /// `κ(A, B)(C) = Σ_w P_w(A) C P_w^*(B)`.
    pub fn evaluate(&self, a: &[CMatrix], b: &[CMatrix], c: &CMatrix) -> Result<CMatrix> {
        let k = check_pair(a, b, c)?;
        let mut ca = MonomialCache::new(a)?;
        let mut cb = MonomialCache::new(b)?;
        let mut out = CMatrix::zeros(k, k);
        for row in self.basis.orthonormal() {
            let mut pa = CMatrix::zeros(k, k);
            let mut pb = CMatrix::zeros(k, k);
            for (w, coeff) in &row {
                pa += ca.get(w)? * Complex64::new(*coeff, 0.0);
                pb += cb.get(&w.star())? * Complex64::new(*coeff, 0.0);
            }
            out += pa * c * pb;
        }
        Ok(out)
    }

    /// `Σ_{u,v} (M^{-1})_{u,v} A^u C B^{v^*}`.
    pub fn evaluate_inverse_form(&self, a: &[CMatrix], b: &[CMatrix], c: &CMatrix) -> Result<CMatrix> {
        let k = check_pair(a, b, c)?;
        let inv = self.inverse_moment_form()?;
        let words = self.basis.words();
        let mut ca = MonomialCache::new(a)?;
        let mut cb = MonomialCache::new(b)?;
        let mut out = CMatrix::zeros(k, k);
        for (i, row) in inv.iter().enumerate() {
            let left = ca.get(&words[i])? * c;
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    out += &left * cb.get(&words[j].star())? * Complex64::new(rat_to_f64(v), 0.0);
                }
            }
        }
        Ok(out)
    }

    /// `P_w(A)` for every retained word, in basis order.
    pub fn orthonormal_values(&self, a: &[CMatrix]) -> Result<Vec<CMatrix>> {
        let mut cache = MonomialCache::new(a)?;
        let k = cache.size();
        self.basis
            .orthonormal()
            .iter()
            .map(|row| {
                let mut m = CMatrix::zeros(k, k);
                for (w, coeff) in row {
                    m += cache.get(w)? * Complex64::new(*coeff, 0.0);
                }
                Ok(m)
            })
            .collect()
    }

    /// `κ(A, A^*)(I_k) = Σ_w P_w(A) P_w(A)^*`.
    pub fn kernel_at(&self, a: &[CMatrix]) -> Result<CMatrix> {
        let k = tuple_size(a)?;
        let mut out = CMatrix::zeros(k, k);
        for p in self.orthonormal_values(a)? {
            out += &p * p.adjoint();
        }
        Ok(out)
    }

    /// `Σ_w ‖P_w(A)‖_F² = k · tr_k κ(A, A^*)(I_k)`, for real or complex tuples.
    pub fn kernel_trace_sum<T>(&self, a: &[DMatrix<T>]) -> Result<f64>
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        let k = a.first().map_or(0, |m| m.nrows());
        for m in a {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::SizeMismatch { expected: k, found: m.nrows() });
            }
        }
        if a.len() != self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: a.len() });
        }
        match &self.numeric {
            NumericForm::Runs { letters } => Ok(runs_trace_sum(letters, a, self.degree())),
            NumericForm::Words { rows } => {
                let mut cache: HashMap<Word, DMatrix<T>> = HashMap::new();
                let mut total = 0.0;
                for row in rows {
                    let mut m = DMatrix::<T>::zeros(k, k);
                    for (w, c) in row {
                        m += generic_monomial(&mut cache, a, w) * T::from_real(*c);
                    }
                    total += m.norm_squared();
                }
                Ok(total)
            }
        }
    }

    /// `Λ(A) = κ(A, A^*)(I_k)^{-1}`.
    pub fn christoffel_function(&self, a: &[CMatrix]) -> Result<CMatrix> {
        let kmat = self.kernel_at(a)?;
        let k = kmat.nrows();
        let sv = kmat.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 0.0) || smax / smin > MAX_CONDITION {
            return Err(Error::Singular(format!("kernel value has condition number {:e}", smax / smin)));
        }
        kmat.lu()
            .solve(&CMatrix::identity(k, k))
            .ok_or_else(|| Error::Singular("kernel value".into()))
    }

    /// `P_d(X) = Σ_w Λ(A) P_w(A) ⊗ P_w^*(X)`, with `Λ(A)`.
    pub fn variational_minimizer(&self, a: &[CMatrix]) -> Result<(MatrixNcPolynomial, CMatrix)> {
        let lambda = self.christoffel_function(a)?;
        let k = lambda.nrows();
        let mut out = MatrixNcPolynomial::zero(k);
        for (row, p) in self.basis.orthonormal().iter().zip(self.orthonormal_values(a)?) {
            let lp = &lambda * p;
            for (w, c) in row {
                out.add_term(w.star(), &lp * Complex64::new(*c, 0.0));
            }
        }
        Ok((out, lambda))
    }

    /// `tr_k(κ(A, A^*)(I_k))^{1/d}` with the normalized trace.
    pub fn siciak_trace(&self, a: &[CMatrix]) -> Result<f64> {
        let d = self.positive_degree()?;
        let k = tuple_size(a)?;
        Ok((self.kernel_trace_sum(a)? / k as f64).powf(1.0 / d as f64))
    }

    /// Real-tuple variant of [`KernelRep::siciak_trace`].
    pub fn siciak_trace_real(&self, a: &[DMatrix<f64>]) -> Result<f64> {
        let d = self.positive_degree()?;
        let k = a.first().map_or(1, |m| m.nrows());
        Ok((self.kernel_trace_sum(a)? / k as f64).powf(1.0 / d as f64))
    }

    /// `‖κ(A, A^*)(I_k)‖^{1/d}` with the operator norm.
    pub fn siciak_norm(&self, a: &[CMatrix]) -> Result<f64> {
        let d = self.positive_degree()?;
        let kmat = self.kernel_at(a)?;
        Ok(kmat.singular_values().max().powf(1.0 / d as f64))
    }

    pub fn level_set_contains(&self, spec: &LevelSetSpec, a: &[CMatrix]) -> Result<bool> {
        Ok(spec.contains(self.siciak_trace(a)?))
    }

    fn positive_degree(&self) -> Result<usize> {
        match self.degree() {
            0 => Err(Error::InvalidArgument("Siciak approximants need degree >= 1".into())),
            d => Ok(d),
        }
    }
}

fn check_pair(a: &[CMatrix], b: &[CMatrix], c: &CMatrix) -> Result<usize> {
    let k = tuple_size(a)?;
    let kb = tuple_size(b)?;
    if kb != k || a.len() != b.len() {
        return Err(Error::SizeMismatch { expected: k, found: kb });
    }
    if c.shape() != (k, k) {
        return Err(Error::SizeMismatch { expected: k, found: c.nrows() });
    }
    Ok(k)
}

fn generic_monomial<T>(cache: &mut HashMap<Word, DMatrix<T>>, a: &[DMatrix<T>], w: &Word) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if let Some(m) = cache.get(w) {
        return m.clone();
    }
    let k = a[0].nrows();
    let m = match w.split_last() {
        None => DMatrix::<T>::identity(k, k),
        Some((prefix, l)) => generic_monomial(cache, a, &prefix) * &a[l as usize - 1],
    };
    cache.insert(w.clone(), m.clone());
    m
}

fn runs_trace_sum<T>(letters: &[Vec<Option<Vec<f64>>>], a: &[DMatrix<T>], d: usize) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    let k = a[0].nrows();
    // values[l][m] = P_m(A_l)
    let values: Vec<Vec<Option<DMatrix<T>>>> = letters
        .iter()
        .zip(a)
        .map(|(polys, x)| {
            let mut powers = vec![DMatrix::<T>::identity(k, k)];
            for m in 1..=d {
                powers.push(&powers[m - 1] * x);
            }
            polys
                .iter()
                .map(|p| {
                    p.as_ref().map(|coeffs| {
                        let mut acc = DMatrix::<T>::zeros(k, k);
                        for (j, &c) in coeffs.iter().enumerate() {
                            if c != 0.0 {
                                acc += &powers[j] * T::from_real(c);
                            }
                        }
                        acc
                    })
                })
                .collect()
        })
        .collect();
    let c0 = match letters.first().and_then(|v| v[0].as_ref()) {
        Some(c) => c[0],
        None => return 0.0,
    };
    // g[x][r] = Σ R R^* over nonempty alternating run products R of length ≤ r
    // whose first run avoids letter x (x = n: no restriction)
    let n = values.len();
    let identity = DMatrix::<T>::identity(k, k);
    let mut g: Vec<Vec<DMatrix<T>>> = vec![vec![DMatrix::<T>::zeros(k, k); d + 1]; n + 1];
    for r in 1..=d {
        for x in 0..=n {
            if x == n && r < d {
                continue;
            }
            let mut acc = DMatrix::<T>::zeros(k, k);
            for (l, polys) in values.iter().enumerate() {
                if l == x {
                    continue;
                }
                for m in 1..=r {
                    if let Some(p) = &polys[m] {
                        acc += p * (&identity + &g[l][r - m]) * p.adjoint();
                    }
                }
            }
            g[x][r] = acc;
        }
    }
    let tail: f64 = if d == 0 { 0.0 } else { (0..k).map(|i| g[n][d][(i, i)].real()).sum() };
    c0 * c0 * (k as f64 + tail)
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelIdentityReport {
    pub n: usize,
    pub degree: usize,
    /// `(τ ⊗ τ)(κ^* κ)` as text.
    pub normalization: String,
    pub expected_normalization: usize,
    pub normalization_ok: bool,
    pub reproducing_ok: bool,
    pub monomials_checked: usize,
    pub symmetric_ok: bool,
    pub failures: Vec<String>,
}

/// Checks `(τ⊗τ)(κ^*κ) = σ(n,d)`, the reproducing property on monomials of
/// length at most `d`, and `Σ Q_w ⊗ Q_w^*/ν_w = Σ Q_w^* ⊗ Q_w/ν_w`, exactly.
pub fn kernel_identities(state: &TracialState, d: usize) -> Result<KernelIdentityReport> {
    let kernel = cd_kernel(state, d)?;
    let kappa = kernel.tensor();
    let tau = |w: &Word| state.moment(w).map(GaussianRational::real);
    let mut failures = Vec::new();

    let normalization = kappa.star().multiply(&kappa).apply_both(tau, tau)?;
    let expected_normalization = word_count(state.n(), d);
    let normalization_ok = normalization == GaussianRational::from_int(expected_normalization as i64);
    if !normalization_ok {
        failures.push(format!("normalization is {normalization}, expected {expected_normalization}"));
    }

    let monomials = enumerate_words(state.n(), d);
    let mut reproducing_ok = true;
    for w in &monomials {
        let p = NcPolynomial::word(w.clone());
        let image = kappa.multiply(&TensorPolynomial::from_pair(&NcPolynomial::one(), &p)).apply_right(tau)?;
        if image != p {
            reproducing_ok = false;
            failures.push(format!("reproducing property fails on {w}: got {image}"));
        }
    }

    let mut swapped = TensorPolynomial::zero();
    for (q, nu) in kernel.basis().polys().iter().zip(kernel.basis().norms()) {
        let inv = GaussianRational::real(Rational::one() / nu);
        swapped = swapped.add(&TensorPolynomial::from_pair(&q.star(), q).scale(&inv));
    }
    let symmetric_ok = swapped == kappa;
    if !symmetric_ok {
        failures.push("kernel is not symmetric under exchanging P_w and P_w^*".into());
    }

    Ok(KernelIdentityReport {
        n: state.n(),
        degree: d,
        normalization: normalization.to_string(),
        expected_normalization,
        normalization_ok,
        reproducing_ok,
        monomials_checked: monomials.len(),
        symmetric_ok,
        failures,
    })
}

/// Convenience: `κ(A, A^*)(I)` for a tuple and its adjoint through [`KernelRep::evaluate`].
pub fn kernel_at_adjoint(kernel: &KernelRep, a: &[CMatrix]) -> Result<CMatrix> {
    let k = tuple_size(a)?;
    kernel.evaluate(a, &adjoint_tuple(a), &CMatrix::identity(k, k))
}
