//! Moment and localizing matrices, noncommutative Gram-Schmidt, the
//! triangular factorization of the inverse moment matrix, hermitized bases and
//! orthogonal systems of free products.

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::NcPolynomial;
use crate::scalar::{rat, rat_to_f64, GaussianRational, Rational};
use crate::traces::TracialState;
use crate::word::{enumerate_words, Letter, Word};

/// `M_d(τ)_{u,v} = τ(u^* v)` over words of length at most `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    degree: usize,
    words: Vec<Word>,
    entries: Vec<Vec<Rational>>,
}

impl MomentMatrix {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        rational_to_f64(&self.entries)
    }
}

pub fn rational_to_f64(m: &[Vec<Rational>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| rat_to_f64(&m[i][j]))
}

pub fn moment_matrix(state: &TracialState, d: usize) -> Result<MomentMatrix> {
    let words = enumerate_words(state.n().max(1), d);
    let size = words.len();
    let mut entries = vec![vec![Rational::zero(); size]; size];
    for i in 0..size {
        let us = words[i].star();
        for j in i..size {
            let v = state.moment(&us.concat(&words[j]))?;
            entries[j][i] = v.clone();
            entries[i][j] = v;
        }
    }
    Ok(MomentMatrix { degree: d, words, entries })
}

/// `τ(v^* g w)` for `v, w` of length at most `d − ⌈deg g / 2⌉`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizingMatrix {
    pub g: NcPolynomial,
    pub degree: usize,
    pub words: Vec<Word>,
    pub entries: Vec<Vec<GaussianRational>>,
}

pub fn localizing_matrix(state: &TracialState, g: &NcPolynomial, d: usize) -> Result<LocalizingMatrix> {
    if !g.is_selfadjoint() {
        return Err(Error::NotSelfadjoint(g.to_string()));
    }
    if g.degree() > 2 * d {
        return Err(Error::DegreeOverflow { degree: g.degree(), bound: 2 * d });
    }
    let words = enumerate_words(state.n().max(1), d - g.degree().div_ceil(2));
    let mut entries = Vec::with_capacity(words.len());
    for v in &words {
        let vs = v.star();
        let mut row = Vec::with_capacity(words.len());
        for w in &words {
            let mut acc = GaussianRational::zero();
            for (u, c) in g.terms() {
                let m = state.moment(&vs.concat(u).concat(w))?;
                acc += &c.scale(&m);
            }
            row.push(acc);
        }
        entries.push(row);
    }
    Ok(LocalizingMatrix { g: g.clone(), degree: d, words, entries })
}

/// Exact positive semidefiniteness by symmetric elimination: a negative pivot,
/// or a zero pivot with a nonzero remaining row, rules it out.
pub fn is_psd_exact(m: &[Vec<Rational>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    for k in 0..n {
        let pivot = a[k][k].clone();
        if pivot.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            if (k + 1..n).any(|j| !a[k][j].is_zero()) {
                return false;
            }
            continue;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &pivot;
            for j in k + 1..n {
                if !a[k][j].is_zero() {
                    let t = &f * &a[k][j];
                    a[i][j] -= t;
                }
            }
        }
    }
    true
}

/// Monic orthogonal polynomials `Q_w` with squared norms `ν_w = τ(Q_w^* Q_w)`
/// for the retained words, in graded-lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoBasis {
    n: usize,
    degree: usize,
    words: Vec<Word>,
    polys: Vec<NcPolynomial>,
    norms: Vec<Rational>,
    dropped: Vec<Word>,
}

impl OrthoBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn polys(&self) -> &[NcPolynomial] {
        &self.polys
    }

    pub fn norms(&self) -> &[Rational] {
        &self.norms
    }

    pub fn dropped(&self) -> &[Word] {
        &self.dropped
    }

    pub fn is_faithful(&self) -> bool {
        self.dropped.is_empty()
    }

    pub fn get(&self, w: &Word) -> Option<(&NcPolynomial, &Rational)> {
        let i = self.words.binary_search(w).ok()?;
        Some((&self.polys[i], &self.norms[i]))
    }

    /// `P_w = Q_w / √ν_w` with floating coefficients.
    pub fn orthonormal(&self) -> Vec<Vec<(Word, f64)>> {
        self.polys
            .iter()
            .zip(&self.norms)
            .map(|(q, nu)| {
                let s = rat_to_f64(nu).sqrt();
                q.terms().map(|(w, c)| (w.clone(), rat_to_f64(&c.re) / s)).collect()
            })
            .collect()
    }

    /// Rows are the coefficients of `Q_w` over all words of length at most `d`.
    pub fn lower_triangular(&self) -> Result<Vec<Vec<Rational>>> {
        if !self.is_faithful() {
            return Err(Error::Singular(format!("{} dropped words", self.dropped.len())));
        }
        let mut out = Vec::with_capacity(self.len());
        for q in &self.polys {
            let mut row = vec![Rational::zero(); self.words.len()];
            for (w, c) in q.terms() {
                if !c.is_real() {
                    return Err(Error::InvalidArgument("complex orthogonal polynomial".into()));
                }
                let j = self.words.binary_search(w).expect("coefficient outside the word index");
                row[j] = c.re.clone();
            }
            out.push(row);
        }
        Ok(out)
    }
}

/// Gram-Schmidt over generators given as coefficient vectors on `words`.
struct GsOutput {
    retained: Vec<usize>,
    vectors: Vec<Vec<GaussianRational>>,
    norms: Vec<Rational>,
    dropped: Vec<usize>,
}

fn gram_schmidt_vectors(
    m: &[Vec<Rational>],
    generators: &[Vec<GaussianRational>],
    labels: &[Word],
    approximate: bool,
) -> Result<GsOutput> {
    let size = m.len();
    let mut out = GsOutput { retained: Vec::new(), vectors: Vec::new(), norms: Vec::new(), dropped: Vec::new() };
    for (j, h) in generators.iter().enumerate() {
        // mh = M h, so that τ(p^* h) = Σ conj(p_a) (M h)_a
        let mut mh = vec![GaussianRational::zero(); size];
        for (b, hb) in h.iter().enumerate() {
            if hb.is_zero() {
                continue;
            }
            for a in 0..size {
                if !m[a][b].is_zero() {
                    mh[a] += &hb.scale(&m[a][b]);
                }
            }
        }
        let pairing = |p: &[GaussianRational], v: &[GaussianRational]| {
            let mut acc = GaussianRational::zero();
            for (pa, va) in p.iter().zip(v) {
                if !pa.is_zero() && !va.is_zero() {
                    acc += &(&pa.conj() * va);
                }
            }
            acc
        };
        let mut q = h.clone();
        for (v, nu) in out.vectors.iter().zip(&out.norms) {
            let proj = pairing(v, &mh);
            if proj.is_zero() {
                continue;
            }
            let f = proj.scale(&(Rational::one() / nu));
            for (qa, va) in q.iter_mut().zip(v) {
                if !va.is_zero() {
                    *qa -= &(&f * va);
                }
            }
        }
        // Q_j is orthogonal to every earlier Q, so τ(Q_j^* Q_j) = τ(Q_j^* h_j)
        let nu = pairing(&q, &mh);
        if !nu.im.is_zero() {
            return Err(Error::InvalidArgument("squared norm is not real".into()));
        }
        let nu = nu.re;
        let tol = if approximate { rat(1, 1_000_000_000_000) * pairing(h, &mh).re } else { Rational::zero() };
        if nu < -tol.clone() {
            return Err(Error::NegativeNorm(labels[j].clone()));
        }
        if nu <= tol {
            out.dropped.push(j);
            continue;
        }
        out.retained.push(j);
        out.vectors.push(q);
        out.norms.push(nu);
    }
    Ok(out)
}

fn vector_to_poly(words: &[Word], v: &[GaussianRational]) -> NcPolynomial {
    NcPolynomial::from_terms(words.iter().cloned().zip(v.iter().cloned()))
}

fn unit_vectors(size: usize) -> Vec<Vec<GaussianRational>> {
    (0..size)
        .map(|j| {
            let mut v = vec![GaussianRational::zero(); size];
            v[j] = GaussianRational::one();
            v
        })
        .collect()
}

/// Classical Gram-Schmidt on the words of length at most `d` in graded-lex
/// order. Words of zero norm are dropped.
pub fn gram_schmidt(state: &TracialState, d: usize) -> Result<OrthoBasis> {
    let mm = moment_matrix(state, d)?;
    let words = mm.words().to_vec();
    let gs = gram_schmidt_vectors(mm.entries(), &unit_vectors(words.len()), &words, state.is_approximate())?;
    Ok(OrthoBasis {
        n: state.n(),
        degree: d,
        words: gs.retained.iter().map(|&j| words[j].clone()).collect(),
        polys: gs.vectors.iter().map(|v| vector_to_poly(&words, v)).collect(),
        norms: gs.norms,
        dropped: gs.dropped.iter().map(|&j| words[j].clone()).collect(),
    })
}

/// `M^{-1} = Lᵀ N^{-1} L` with its floating counterpart `D = N^{-1/2} L`.
#[derive(Clone, Debug)]
pub struct InverseFactorization {
    pub l: Vec<Vec<Rational>>,
    pub norms: Vec<Rational>,
    pub inverse: Vec<Vec<Rational>>,
    /// `M · Lᵀ N^{-1} L` is the identity, exactly.
    pub exact_identity: bool,
    pub d: DMatrix<f64>,
    /// `‖M^{-1} − DᵀD‖_max` with `M^{-1}` from a floating inverse.
    pub max_residual: f64,
}

pub fn inverse_factorization(m: &MomentMatrix, basis: &OrthoBasis) -> Result<InverseFactorization> {
    let l = basis.lower_triangular()?;
    let size = m.size();
    if l.len() != size {
        return Err(Error::SizeMismatch { expected: size, found: l.len() });
    }
    let norms = basis.norms().to_vec();
    let mut inverse = vec![vec![Rational::zero(); size]; size];
    for (row, nu) in l.iter().zip(&norms) {
        let inv_nu = Rational::one() / nu;
        for a in 0..size {
            if row[a].is_zero() {
                continue;
            }
            let fa = &row[a] * &inv_nu;
            for b in 0..size {
                if !row[b].is_zero() {
                    inverse[a][b] += &fa * &row[b];
                }
            }
        }
    }
    let mut exact_identity = true;
    'outer: for i in 0..size {
        for j in 0..size {
            let mut acc = Rational::zero();
            for k in 0..size {
                if !m.entry(i, k).is_zero() && !inverse[k][j].is_zero() {
                    acc += m.entry(i, k) * &inverse[k][j];
                }
            }
            let expected = if i == j { Rational::one() } else { Rational::zero() };
            if acc != expected {
                exact_identity = false;
                break 'outer;
            }
        }
    }
    let d = DMatrix::from_fn(size, size, |i, j| rat_to_f64(&l[i][j]) / rat_to_f64(&norms[i]).sqrt());
    let m_inv = m.to_f64().try_inverse().ok_or_else(|| Error::Singular("moment matrix".into()))?;
    let max_residual = (m_inv - d.transpose() * &d).amax();
    Ok(InverseFactorization { l, norms, inverse, exact_identity, d, max_residual })
}

/// Orthogonal polynomials that are selfadjoint, one per word slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfadjointBasis {
    pub slots: Vec<Word>,
    pub polys: Vec<NcPolynomial>,
    pub norms: Vec<Rational>,
    pub dropped: Vec<Word>,
}

/// The generator for each slot: `X^w` when selfadjoint, otherwise
/// `(X^w + X^{w*})/2` at `w` and `(X^w − X^{w*})/(2i)` at `w*` for `w < w*`.
pub fn hermitized_monomials(n: usize, d: usize) -> Vec<(Word, NcPolynomial)> {
    let half = GaussianRational::real(rat(1, 2));
    let minus_half_i = GaussianRational::new(Rational::zero(), rat(-1, 2));
    enumerate_words(n, d)
        .into_iter()
        .map(|w| {
            let ws = w.star();
            let p = if w == ws {
                NcPolynomial::word(w.clone())
            } else if w < ws {
                NcPolynomial::from_terms([(w.clone(), half.clone()), (ws, half.clone())])
            } else {
                // slot w = v* with v < w: Im X^v = (X^v − X^w)/(2i)
                NcPolynomial::from_terms([(ws, minus_half_i.clone()), (w.clone(), -&minus_half_i)])
            };
            (w, p)
        })
        .collect()
}

pub fn selfadjoint_basis(state: &TracialState, d: usize) -> Result<SelfadjointBasis> {
    let mm = moment_matrix(state, d)?;
    let words = mm.words().to_vec();
    let gens = hermitized_monomials(state.n(), d);
    let vectors: Vec<Vec<GaussianRational>> =
        gens.iter().map(|(_, p)| words.iter().map(|w| p.coeff(w)).collect()).collect();
    let labels: Vec<Word> = gens.iter().map(|(w, _)| w.clone()).collect();
    let gs = gram_schmidt_vectors(mm.entries(), &vectors, &labels, state.is_approximate())?;
    Ok(SelfadjointBasis {
        slots: gs.retained.iter().map(|&j| gens[j].0.clone()).collect(),
        polys: gs.vectors.iter().map(|v| vector_to_poly(&words, v)).collect(),
        norms: gs.norms,
        dropped: gs.dropped.iter().map(|&j| gens[j].0.clone()).collect(),
    })
}

fn rename_letter(p: &NcPolynomial, letter: Letter) -> NcPolynomial {
    NcPolynomial::from_terms(p.terms().map(|(w, c)| (Word::new(vec![letter; w.len()]), c.clone())))
}

/// Orthogonal system of free variables: `Q_w` is the product of the
/// single-variable `Q_{|π|}` over the maximal constant-letter runs `π` of `w`.
/// `factors[i]` is the single-variable basis (in `X1`) of letter `i + 1`.
pub fn free_product_orthobasis(factors: &[OrthoBasis], d: usize) -> Result<OrthoBasis> {
    let n = factors.len();
    for f in factors {
        if f.n() != 1 || f.degree() < d {
            return Err(Error::InvalidArgument("factors must be single-variable bases of degree >= d".into()));
        }
    }
    let mut out = OrthoBasis { n, degree: d, words: Vec::new(), polys: Vec::new(), norms: Vec::new(), dropped: Vec::new() };
    for w in enumerate_words(n.max(1), d) {
        let mut q = NcPolynomial::one();
        let mut nu = Rational::one();
        let mut retained = true;
        for (letter, len) in w.runs() {
            match factors[letter as usize - 1].get(&Word::new(vec![1; len])) {
                Some((p, norm)) => {
                    q = q.multiply(&rename_letter(p, letter));
                    nu *= norm;
                }
                None => {
                    retained = false;
                    break;
                }
            }
        }
        if retained {
            out.words.push(w);
            out.polys.push(q);
            out.norms.push(nu);
        } else {
            out.dropped.push(w);
        }
    }
    Ok(out)
}

/// Orthogonal basis of a state: through the single-variable marginals when
/// the state is a free product, by Gram-Schmidt otherwise.
pub fn orthobasis(state: &TracialState, d: usize) -> Result<OrthoBasis> {
    if state.cumulant_tables().is_some() && state.n() > 1 {
        let factors = (1..=state.n() as Letter)
            .map(|l| gram_schmidt(&state.marginal(l).expect("free product marginal"), d))
            .collect::<Result<Vec<_>>>()?;
        free_product_orthobasis(&factors, d)
    } else {
        gram_schmidt(state, d)
    }
}

/// `τ(p^* q)` for polynomials.
pub fn tau_pairing(state: &TracialState, p: &NcPolynomial, q: &NcPolynomial) -> Result<GaussianRational> {
    let mut acc = GaussianRational::zero();
    for (u, a) in p.terms() {
        let us = u.star();
        let ac = a.conj();
        for (v, b) in q.terms() {
            let m = state.moment(&us.concat(v))?;
            if !m.is_zero() {
                acc += &(&ac * b).scale(&m);
            }
        }
    }
    Ok(acc)
}
