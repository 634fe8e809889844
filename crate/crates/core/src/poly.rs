//! Noncommutative polynomials with exact Gaussian-rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, GaussianRational, Rational};
use crate::word::{Letter, Word};

/// Sparse polynomial `Σ c_w X^w`; zero coefficients are never stored and
/// terms iterate in graded lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NcPolynomial {
    terms: BTreeMap<Word, GaussianRational>,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        NcPolynomial { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::monomial(Word::one(), c)
    }

    pub fn monomial(w: Word, c: GaussianRational) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c);
        p
    }

    pub fn word(w: Word) -> Self {
        Self::monomial(w, GaussianRational::one())
    }

    /// The indeterminate `X_l`.
    pub fn var(l: Letter) -> Self {
        Self::word(Word::letter(l))
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, GaussianRational)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    /// Adds `c X^w`, dropping the entry if it cancels.
    pub fn add_term(&mut self, w: Word, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> GaussianRational {
        self.terms.get(w).cloned().unwrap_or_else(GaussianRational::zero)
    }

    /// Largest word length present; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Largest letter index used.
    pub fn max_letter(&self) -> Letter {
        self.terms.keys().map(Word::max_letter).max().unwrap_or(0)
    }

    /// Graded-lex largest word with nonzero coefficient.
    pub fn leading_word(&self) -> Option<&Word> {
        self.terms.keys().next_back()
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(GaussianRational::is_real)
    }

    pub fn add(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> NcPolynomial {
        self.scale(&-GaussianRational::one())
    }

    pub fn scale(&self, c: &GaussianRational) -> NcPolynomial {
        if c.is_zero() {
            return Self::zero();
        }
        NcPolynomial { terms: self.terms.iter().map(|(w, a)| (w.clone(), a * c)).collect() }
    }

    pub fn scale_rational(&self, r: &Rational) -> NcPolynomial {
        self.scale(&GaussianRational::real(r.clone()))
    }

    /// Free-algebra product: words juxtapose.
    pub fn multiply(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut out = Self::zero();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), a * b);
            }
        }
        out
    }

    pub fn pow(&self, e: usize) -> NcPolynomial {
        (0..e).fold(Self::one(), |acc, _| acc.multiply(self))
    }

    /// Conjugates coefficients and reverses words.
    pub fn star(&self) -> NcPolynomial {
        NcPolynomial { terms: self.terms.iter().map(|(w, c)| (w.star(), c.conj())).collect() }
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.star() == *self
    }

    /// Fails if some letter exceeds `n`.
    pub fn check_alphabet(&self, n: usize) -> Result<()> {
        let m = self.max_letter() as usize;
        if m > n {
            return Err(Error::LetterOutOfRange { letter: m, n });
        }
        Ok(())
    }

    /// Linear functional `Σ c_w f(w)`.
    pub fn apply_functional<F>(&self, mut f: F) -> Result<GaussianRational>
    where
        F: FnMut(&Word) -> Result<GaussianRational>,
    {
        let mut acc = GaussianRational::zero();
        for (w, c) in &self.terms {
            let v = f(w)?;
            acc += &(c * &v);
        }
        Ok(acc)
    }

    /// Parses the expression grammar, rejecting letters above `n`.
    pub fn parse(text: &str, n: usize) -> Result<NcPolynomial> {
        let p = Parser::new(text).parse_all()?;
        p.check_alphabet(n)?;
        Ok(p)
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let negative = if c.is_real() { c.re.is_negative() } else { c.re.is_zero() && c.im.is_negative() };
            let magnitude = if negative { -c } else { c.clone() };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if w.is_empty() {
                write!(f, "{magnitude}")?;
            } else if magnitude.is_one() {
                f.write_str(&w.to_power_string())?;
            } else {
                write!(f, "{}*{}", magnitude, w.to_power_string())?;
            }
        }
        Ok(())
    }
}

/// Recursive-descent parser for
/// `expr := term (('+'|'-') term)*`,
/// `term := factor ('*' factor)*`,
/// `factor := 'X' int ['^' int] | '(' expr ')' ['^' int] | coeff | 'i'`.
struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser { chars: text.chars().collect(), pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse_all(&mut self) -> Result<NcPolynomial> {
        if self.peek().is_none() {
            return self.err("empty expression");
        }
        let p = self.expr()?;
        match self.peek() {
            None => Ok(p),
            Some(c) => self.err(format!("unexpected '{c}'")),
        }
    }

    fn expr(&mut self) -> Result<NcPolynomial> {
        let mut acc = match self.peek() {
            Some('-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some('+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some('-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NcPolynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = acc.multiply(&self.factor()?);
                }
                // juxtaposed indeterminates and groups, e.g. `X1X2` or `2(X1+X2)`
                Some('X') | Some('x') | Some('(') => acc = acc.multiply(&self.factor()?),
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<NcPolynomial> {
        match self.peek() {
            Some('X') | Some('x') => {
                self.pos += 1;
                let l = self.integer()?;
                if l == 0 || l > Letter::MAX as u64 {
                    return self.err(format!("bad letter index {l}"));
                }
                let base = NcPolynomial::var(l as Letter);
                self.power(base)
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                self.power(inner)
            }
            Some('i') => {
                self.pos += 1;
                Ok(NcPolynomial::constant(GaussianRational::i()))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.pos < self.chars.len() {
                    let c = self.chars[self.pos];
                    let exp_sign = (c == '-' || c == '+')
                        && self.pos > start
                        && matches!(self.chars[self.pos - 1], 'e' | 'E');
                    if c.is_ascii_digit() || c == '.' || c == '/' || c == 'e' || c == 'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let (value, _) = parse_rational(&text).map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("bad coefficient '{text}'"),
                })?;
                Ok(NcPolynomial::constant(GaussianRational::real(value)))
            }
            Some(c) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }

    fn power(&mut self, base: NcPolynomial) -> Result<NcPolynomial> {
        if self.peek() == Some('^') {
            self.pos += 1;
            let e = self.integer()?;
            if e > 64 {
                return self.err("exponent too large");
            }
            return Ok(base.pow(e as usize));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| Error::Parse { pos: start, msg: "integer out of range".into() })
    }
}

/// `word,coefficient` rows for CSV output.
pub fn to_csv_rows(p: &NcPolynomial) -> Vec<String> {
    p.terms()
        .map(|(w, c)| {
            let coeff = if c.is_real() { format_rational(&c.re) } else { c.to_string() };
            format!("{w},{coeff}")
        })
        .collect()
}
