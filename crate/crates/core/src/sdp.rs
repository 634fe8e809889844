//! Tracial moment relaxations over cyclic classes of words, SDPA sparse
//! export and import, and feasibility checks of concrete moment tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::NcPolynomial;
use crate::scalar::{rat_to_f64, GaussianRational, Rational};
use crate::traces::TracialState;
use crate::word::{cyclic_canonical, enumerate_words, Word};

/// Canonical words of length `1..=2d` under rotation and reversal, numbered from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVariableIndex {
    n: usize,
    degree: usize,
    classes: Vec<Word>,
    ids: HashMap<Word, usize>,
}

impl MomentVariableIndex {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument("moment variables need n >= 1 and d >= 1".into()));
        }
        let mut classes: Vec<Word> = enumerate_words(n, 2 * d)
            .iter()
            .filter(|w| !w.is_empty())
            .map(|w| cyclic_canonical(w, true))
            .collect();
        classes.sort_by(crate::word::compare_gradlex);
        classes.dedup();
        let ids = classes.iter().enumerate().map(|(i, w)| (w.clone(), i + 1)).collect();
        Ok(MomentVariableIndex { n, degree: d, classes, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Representatives in variable order; `classes()[i - 1]` is variable `i`.
    pub fn classes(&self) -> &[Word] {
        &self.classes
    }

    /// Variable id of a word, `None` for the empty word.
    pub fn lookup(&self, w: &Word) -> Result<Option<usize>> {
        if w.is_empty() {
            return Ok(None);
        }
        self.ids
            .get(&cyclic_canonical(w, true))
            .copied()
            .map(Some)
            .ok_or_else(|| Error::DegreeOverflow { degree: w.len(), bound: 2 * self.degree })
    }

    /// `y` read off a state, one value per class.
    pub fn assemble(&self, state: &TracialState) -> Result<Vec<Rational>> {
        self.classes.iter().map(|w| state.moment(w)).collect()
    }
}

/// `min cᵀy  s.t.  Σ y_i F_i − F_0 ⪰ 0` in SDPA sparse layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub m: usize,
    pub block_sizes: Vec<usize>,
    pub objective: Vec<f64>,
    /// `(matno, block, i, j) → value` with `i ≤ j`, all 1-based; matno 0 is `F_0`.
    pub entries: BTreeMap<(usize, usize, usize, usize), f64>,
}

/// A relaxation together with the data that the SDPA file does not carry.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub index: MomentVariableIndex,
    pub problem: SdpProblem,
    pub f: NcPolynomial,
    pub constraints: Vec<NcPolynomial>,
    /// Coefficient of the empty word in `f`, added to `cᵀy`.
    pub objective_constant: f64,
    /// Words indexing the rows of each block.
    pub block_words: Vec<Vec<Word>>,
}

fn real_coeffs(p: &NcPolynomial, what: &str) -> Result<Vec<(Word, Rational)>> {
    if !p.is_selfadjoint() {
        return Err(Error::NotSelfadjoint(format!("{what} {p}")));
    }
    if !p.has_real_coefficients() {
        return Err(Error::InvalidArgument(format!("{what} {p} must have real coefficients")));
    }
    Ok(p.terms().map(|(w, c)| (w.clone(), c.re.clone())).collect())
}

/// Builds the moment block and one localizing block per constraint `g ⪰ 0`.
pub fn build_relaxation(f: &NcPolynomial, constraints: &[NcPolynomial], n: usize, d: usize) -> Result<Relaxation> {
    f.check_alphabet(n)?;
    let need = constraints.iter().map(|g| g.degree().div_ceil(2)).chain([f.degree().div_ceil(2)]).max().unwrap_or(0);
    if need > d {
        return Err(Error::DegreeOverflow { degree: need, bound: d });
    }
    let index = MomentVariableIndex::new(n, d)?;
    let fc = real_coeffs(f, "objective")?;
    let mut objective = vec![0.0; index.len()];
    let mut objective_constant = 0.0;
    for (w, c) in &fc {
        match index.lookup(w)? {
            Some(id) => objective[id - 1] += rat_to_f64(c),
            None => objective_constant += rat_to_f64(c),
        }
    }

    let mut blocks: Vec<(Vec<(Word, Rational)>, usize)> = vec![(vec![(Word::one(), Rational::from_integer(1.into()))], d)];
    for g in constraints {
        g.check_alphabet(n)?;
        blocks.push((real_coeffs(g, "constraint")?, d - g.degree().div_ceil(2)));
    }

    let mut block_sizes = Vec::new();
    let mut block_words = Vec::new();
    let mut entries: BTreeMap<(usize, usize, usize, usize), Rational> = BTreeMap::new();
    for (b, (g, dj)) in blocks.iter().enumerate() {
        let words = enumerate_words(n, *dj);
        for (i, u) in words.iter().enumerate() {
            let us = u.star();
            for (j, v) in words.iter().enumerate().skip(i) {
                for (w, c) in g {
                    let word = us.concat(w).concat(v);
                    // F_0 carries the negated constant part
                    let (matno, value) = match index.lookup(&word)? {
                        Some(id) => (id, c.clone()),
                        None => (0, -c.clone()),
                    };
                    *entries.entry((matno, b + 1, i + 1, j + 1)).or_insert_with(|| Rational::from_integer(0.into())) += value;
                }
            }
        }
        block_sizes.push(words.len());
        block_words.push(words);
    }
    let entries = entries
        .into_iter()
        .filter(|(_, v)| *v != Rational::from_integer(0.into()))
        .map(|(k, v)| (k, rat_to_f64(&v)))
        .collect();
    Ok(Relaxation {
        problem: SdpProblem { m: index.len(), block_sizes, objective, entries },
        index,
        f: f.clone(),
        constraints: constraints.to_vec(),
        objective_constant,
        block_words,
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl SdpProblem {
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.m);
        let _ = writeln!(out, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let obj: Vec<String> = self.objective.iter().map(|&c| fmt_float(c)).collect();
        let _ = writeln!(out, "{}", obj.join(" "));
        for ((matno, blk, i, j), v) in &self.entries {
            let _ = writeln!(out, "{matno} {blk} {i} {j} {}", fmt_float(*v));
        }
        out
    }

    /// Reads SDPA sparse text; comment lines starting with `"` or `*` are skipped.
    pub fn from_sdpa(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse { pos: 0, msg: format!("missing {what}") });
        let tokens = |l: &str| -> Vec<String> {
            l.replace(['{', '}', '(', ')', ','], " ").split_whitespace().map(str::to_string).collect()
        };
        let bad = |pos: usize, msg: String| Error::Parse { pos, msg };
        let (pos, l) = next("variable count")?;
        let m: usize = tokens(l).first().and_then(|t| t.parse().ok()).ok_or_else(|| bad(pos, "bad variable count".into()))?;
        let (pos, l) = next("block count")?;
        let nblocks: usize = tokens(l).first().and_then(|t| t.parse().ok()).ok_or_else(|| bad(pos, "bad block count".into()))?;
        let (pos, l) = next("block sizes")?;
        let block_sizes = tokens(l)
            .iter()
            .take(nblocks)
            .map(|t| t.parse::<i64>().map(|s| s.unsigned_abs() as usize))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(pos, "bad block size".into()))?;
        if block_sizes.len() != nblocks {
            return Err(bad(pos, "too few block sizes".into()));
        }
        let (pos, l) = next("objective")?;
        let objective = tokens(l)
            .iter()
            .take(m)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(pos, "bad objective entry".into()))?;
        if objective.len() != m {
            return Err(bad(pos, "too few objective entries".into()));
        }
        let mut entries = BTreeMap::new();
        for (pos, l) in lines {
            let t = tokens(l);
            if t.len() != 5 {
                return Err(bad(pos, format!("expected 5 fields, got {}", t.len())));
            }
            let idx: Vec<usize> = t[..4].iter().map(|s| s.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad(pos, "bad index".into()))?;
            let v: f64 = t[4].parse().map_err(|_| bad(pos, "bad value".into()))?;
            let (i, j) = (idx[2].min(idx[3]), idx[2].max(idx[3]));
            if idx[0] > m || idx[1] == 0 || idx[1] > nblocks || i == 0 || j > block_sizes[idx[1] - 1] {
                return Err(bad(pos, "entry index out of range".into()));
            }
            *entries.entry((idx[0], idx[1], i, j)).or_insert(0.0) += v;
        }
        Ok(SdpProblem { m, block_sizes, objective, entries })
    }

    /// `Σ y_i F_i − F_0` per block, symmetric.
    pub fn blocks_at(&self, y: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        if y.len() != self.m {
            return Err(Error::SizeMismatch { expected: self.m, found: y.len() });
        }
        let mut blocks: Vec<DMatrix<f64>> = self.block_sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (&(matno, blk, i, j), &v) in &self.entries {
            let scale = if matno == 0 { -1.0 } else { y[matno - 1] };
            let b = &mut blocks[blk - 1];
            b[(i - 1, j - 1)] += scale * v;
            if i != j {
                b[(j - 1, i - 1)] += scale * v;
            }
        }
        Ok(blocks)
    }
}

pub fn export_sdpa(p: &SdpProblem, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, p.to_sdpa())?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub tolerance: f64,
    pub min_eigenvalues: Vec<f64>,
    /// `τ(f)` in floating point, the constant term included.
    pub objective: f64,
    pub objective_exact: String,
    pub failures: Vec<String>,
}

/// Evaluates every block at the moments of `state` and checks `λ_min ≥ −tol`.
pub fn check_feasibility(relax: &Relaxation, state: &TracialState, tol: f64) -> Result<FeasibilityReport> {
    if state.n() != relax.index.n() {
        return Err(Error::SizeMismatch { expected: relax.index.n(), found: state.n() });
    }
    let y: Vec<f64> = relax.index.assemble(state)?.iter().map(rat_to_f64).collect();
    let blocks = relax.problem.blocks_at(&y)?;
    let mut failures = Vec::new();
    let min_eigenvalues: Vec<f64> = blocks
        .iter()
        .map(|b| if b.nrows() == 0 { 0.0 } else { b.clone().symmetric_eigen().eigenvalues.min() })
        .collect();
    for (i, &e) in min_eigenvalues.iter().enumerate() {
        if e < -tol {
            let name = if i == 0 { "moment block".to_string() } else { format!("localizing block for {}", relax.constraints[i - 1]) };
            failures.push(format!("{name} has eigenvalue {e:e}"));
        }
    }
    let exact = relax.f.apply_functional(|w| state.moment(w).map(GaussianRational::real))?;
    let objective = relax.objective_constant + relax.problem.objective.iter().zip(&y).map(|(c, v)| c * v).sum::<f64>();
    Ok(FeasibilityReport {
        feasible: failures.is_empty(),
        tolerance: tol,
        min_eigenvalues,
        objective,
        objective_exact: exact.to_string(),
        failures,
    })
}

/// External solver result: `key = value` lines with at least `optimum`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverRecord {
    pub optimum: f64,
    pub fields: BTreeMap<String, String>,
}

pub fn read_solver_record(text: &str) -> Result<SolverRecord> {
    let mut fields = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { pos: i + 1, msg: format!("expected key = value, got '{line}'") })?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let optimum = fields
        .get("optimum")
        .ok_or_else(|| Error::InvalidArgument("solver record has no optimum".into()))?
        .parse()
        .map_err(|_| Error::InvalidArgument("solver optimum is not a number".into()))?;
    Ok(SolverRecord { optimum, fields })
}
