//! Words in the free monoid over `n` letters.
//!
//! Letters are 1-based (`X1..Xn`). Words compare by the graded lexicographic
//! order: shorter words first, then lexicographically by the first differing
//! letter. The empty word is the identity `1`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Letter index, 1-based.
pub type Letter = u16;

/// A word `X_{l1} X_{l2} ... X_{lm}` (empty = the identity).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.iter().all(|&l| l >= 1), "letters are 1-based");
        Word(letters)
    }

    /// The identity word `1`.
    pub fn one() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn from_slice(letters: &[Letter]) -> Self {
        Word::new(letters.to_vec())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest letter index, 0 for the identity.
    pub fn max_letter(&self) -> Letter {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Concatenation `self * other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The star involution on words: reversal.
    pub fn star(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    /// Cyclic rotation moving the first `k` letters to the end.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let mut v = self.0.clone();
        v.rotate_left(k % self.len());
        Word(v)
    }

    /// Maximal runs of a repeated letter, as `(letter, run length)`.
    pub fn runs(&self) -> Vec<(Letter, usize)> {
        let mut out: Vec<(Letter, usize)> = Vec::new();
        for &l in &self.0 {
            match out.last_mut() {
                Some((last, len)) if *last == l => *len += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    /// Drops the last letter; `None` for the identity.
    pub fn split_last(&self) -> Option<(Word, Letter)> {
        let (&last, rest) = self.0.split_last()?;
        Some((Word(rest.to_vec()), last))
    }

    /// Text form using powers and `*`, e.g. `X1^2*X2`. Used inside polynomials.
    pub fn to_power_string(&self) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        self.runs()
            .iter()
            .map(|&(l, e)| if e == 1 { format!("X{l}") } else { format!("X{l}^{e}") })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_gradlex(self, other)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lexicographic comparison.
pub fn compare_gradlex(u: &Word, v: &Word) -> Ordering {
    u.len().cmp(&v.len()).then_with(|| u.0.cmp(&v.0))
}

/// Juxtaposition form: `X1X2X2`, or `1` for the identity.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1");
        }
        for l in &self.0 {
            write!(f, "X{l}")?;
        }
        Ok(())
    }
}

/// Parses `1`, `X1X2`, `X1*X2`, `X1^2X2` and mixtures thereof.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty word".into() });
        }
        if t == ['1'] {
            return Ok(Word::one());
        }
        let mut letters = Vec::new();
        let mut i = 0;
        let read_int = |i: &mut usize| -> Result<u32> {
            let start = *i;
            while *i < t.len() && t[*i].is_ascii_digit() {
                *i += 1;
            }
            if start == *i {
                return Err(Error::Parse { pos: start, msg: "expected integer".into() });
            }
            let digits: String = t[start..*i].iter().collect();
            digits
                .parse()
                .map_err(|_| Error::Parse { pos: start, msg: "integer out of range".into() })
        };
        while i < t.len() {
            match t[i] {
                'X' | 'x' => {
                    i += 1;
                    let pos = i;
                    let l = read_int(&mut i)?;
                    if l == 0 || l > Letter::MAX as u32 {
                        return Err(Error::Parse { pos, msg: format!("bad letter index {l}") });
                    }
                    let mut e = 1;
                    if i < t.len() && t[i] == '^' {
                        i += 1;
                        e = read_int(&mut i)?;
                    }
                    letters.extend(std::iter::repeat_n(l as Letter, e as usize));
                }
                '*' => i += 1,
                c => return Err(Error::Parse { pos: i, msg: format!("unexpected '{c}' in word") }),
            }
        }
        Ok(Word(letters))
    }
}

/// σ(n,d) = 1 + n + ... + n^d, the number of words of length at most `d`.
pub fn word_count(n: usize, d: usize) -> usize {
    (0..=d).map(|i| n.pow(i as u32)).sum()
}

/// All words over `n` letters of length at most `d`, in graded lexicographic order.
pub fn enumerate_words(n: usize, d: usize) -> Vec<Word> {
    assert!(n >= 1, "alphabet must be non-empty");
    let mut out = Vec::with_capacity(word_count(n, d));
    out.push(Word::one());
    let mut start = 0;
    for _ in 0..d {
        let end = out.len();
        for i in start..end {
            for l in 1..=n as Letter {
                let mut v = out[i].0.clone();
                v.push(l);
                out.push(Word(v));
            }
        }
        start = end;
    }
    out
}

/// Words of length exactly `len`, graded-lex order.
pub fn words_of_length(n: usize, len: usize) -> Vec<Word> {
    let all = enumerate_words(n, len);
    let skip = if len == 0 { 0 } else { word_count(n, len - 1) };
    all.into_iter().skip(skip).collect()
}

/// Graded-lex minimal element of the orbit of `w` under rotation, and also
/// under reversal when `use_star` is set.
pub fn cyclic_canonical(w: &Word, use_star: bool) -> Word {
    let mut best = w.clone();
    let m = w.len();
    let consider = |cand: &Word, best: &mut Word| {
        for k in 0..m.max(1) {
            let r = cand.rotate(k);
            if r < *best {
                *best = r;
            }
        }
    };
    consider(w, &mut best);
    if use_star {
        consider(&w.star(), &mut best);
    }
    best
}
