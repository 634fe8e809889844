//! Tracial states given by their moments: the semicircle and free Poisson
//! laws, free products of single-variable laws through free cumulants, and
//! user moment tables.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use nalgebra::DMatrix;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::{is_psd_exact, moment_matrix};
use crate::scalar::{parse_rational, rat_to_f64, Rational};
use crate::word::{cyclic_canonical, enumerate_words, word_count, Letter, Word};

/// Behaviour of a cumulant sequence past its stored prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum CumulantTail {
    /// Only the stored prefix is known.
    Unknown,
    Zero,
    Constant(Rational),
}

/// Free cumulants `κ_1, κ_2, …` of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantTable {
    values: Vec<Rational>,
    tail: CumulantTail,
}

impl CumulantTable {
    /// A finite prefix `κ_1..κ_m`.
    pub fn new(values: Vec<Rational>) -> Self {
        CumulantTable { values, tail: CumulantTail::Unknown }
    }

    pub fn with_tail(values: Vec<Rational>, tail: CumulantTail) -> Self {
        CumulantTable { values, tail }
    }

    /// `κ_2 = variance`, everything else zero.
    pub fn semicircle(variance: Rational) -> Self {
        Self::with_tail(vec![Rational::zero(), variance], CumulantTail::Zero)
    }

    /// `κ_m = c` for every `m`.
    pub fn free_poisson(c: Rational) -> Self {
        Self::with_tail(Vec::new(), CumulantTail::Constant(c))
    }

    /// `κ_m` for `m ≥ 1`, `None` past a finite prefix.
    pub fn kappa(&self, m: usize) -> Option<Rational> {
        assert!(m >= 1, "cumulants start at order 1");
        if let Some(v) = self.values.get(m - 1) {
            return Some(v.clone());
        }
        match &self.tail {
            CumulantTail::Unknown => None,
            CumulantTail::Zero => Some(Rational::zero()),
            CumulantTail::Constant(c) => Some(c.clone()),
        }
    }

    /// The stored prefix.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Number of known cumulants, `None` when all are known.
    pub fn order(&self) -> Option<usize> {
        match self.tail {
            CumulantTail::Unknown => Some(self.values.len()),
            _ => None,
        }
    }

    /// Largest block size that can carry a nonzero cumulant, if bounded.
    fn max_block(&self) -> Option<usize> {
        match self.tail {
            CumulantTail::Zero => Some(self.values.iter().rposition(|v| !v.is_zero()).map_or(0, |i| i + 1)),
            CumulantTail::Unknown | CumulantTail::Constant(_) => None,
        }
    }

    fn kappa_checked(&self, m: usize) -> Result<Rational> {
        self.kappa(m)
            .ok_or_else(|| Error::InvalidArgument(format!("free cumulant of order {m} is not available")))
    }
}

/// `[z^j] M(z)^s` for `j < len`, with `M(z) = 1 + Σ m_j z^j`.
fn series_powers(moments: &[Rational], len: usize, max_power: usize) -> Vec<Vec<Rational>> {
    let mut base = vec![Rational::zero(); len];
    if len > 0 {
        base[0] = Rational::one();
    }
    for j in 1..len {
        if let Some(m) = moments.get(j - 1) {
            base[j] = m.clone();
        }
    }
    let mut powers = vec![{
        let mut one = vec![Rational::zero(); len];
        if len > 0 {
            one[0] = Rational::one();
        }
        one
    }];
    for _ in 0..max_power {
        let prev = powers.last().unwrap();
        let mut next = vec![Rational::zero(); len];
        for (i, a) in prev.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in base.iter().enumerate().take(len - i) {
                next[i + j] += a * b;
            }
        }
        powers.push(next);
    }
    powers
}

/// Inverts `m_p = Σ_{π ∈ NC(p)} Π_{V ∈ π} κ_{|V|}`; `moments[0]` is `m_1`.
pub fn cumulants_from_moments(moments: &[Rational]) -> CumulantTable {
    let order = moments.len();
    let mut kappa: Vec<Rational> = Vec::with_capacity(order);
    let powers = series_powers(moments, order, order);
    for p in 1..=order {
        let mut rest = Rational::zero();
        for (s, k) in kappa.iter().enumerate() {
            let s = s + 1;
            rest += k * &powers[s][p - s];
        }
        kappa.push(&moments[p - 1] - rest);
    }
    CumulantTable::new(kappa)
}

/// `m_1..m_order` from the cumulants by the moment-cumulant formula.
pub fn moments_from_cumulants(table: &CumulantTable, order: usize) -> Result<Vec<Rational>> {
    let mut moments: Vec<Rational> = Vec::with_capacity(order);
    for p in 1..=order {
        let powers = series_powers(&moments, p, p);
        let mut m = Rational::zero();
        for s in 1..=p {
            let k = table.kappa_checked(s)?;
            if !k.is_zero() {
                m += k * &powers[s][p - s];
            }
        }
        moments.push(m);
    }
    Ok(moments)
}

/// Memo policy for the free product recursion.
trait MomentMemo {
    fn get(&self, w: &[Letter]) -> Option<Rational>;
    fn put(&self, w: &[Letter], v: &Rational);
}

struct NoMemo;

impl MomentMemo for NoMemo {
    fn get(&self, _: &[Letter]) -> Option<Rational> {
        None
    }
    fn put(&self, _: &[Letter], _: &Rational) {}
}

#[derive(Default)]
struct ExactMemo(RefCell<HashMap<Vec<Letter>, Rational>>);

impl MomentMemo for ExactMemo {
    fn get(&self, w: &[Letter]) -> Option<Rational> {
        self.0.borrow().get(w).cloned()
    }
    fn put(&self, w: &[Letter], v: &Rational) {
        self.0.borrow_mut().insert(w.to_vec(), v.clone());
    }
}

struct CanonicalMemo<'a>(&'a RwLock<HashMap<Word, Rational>>);

impl MomentMemo for CanonicalMemo<'_> {
    fn get(&self, w: &[Letter]) -> Option<Rational> {
        let key = cyclic_canonical(&Word::from_slice(w), true);
        self.0.read().unwrap().get(&key).cloned()
    }
    fn put(&self, w: &[Letter], v: &Rational) {
        let key = cyclic_canonical(&Word::from_slice(w), true);
        self.0.write().unwrap().insert(key, v.clone());
    }
}

/// Mixed moment of free variables: the sum over non-crossing partitions of
/// the letter positions into single-letter blocks of `Π κ_{|V|}`.
pub fn free_product_moment(w: &Word, tables: &[CumulantTable]) -> Result<Rational> {
    fp_moment(w.letters(), tables, &ExactMemo::default())
}

fn fp_moment(w: &[Letter], tables: &[CumulantTable], memo: &dyn MomentMemo) -> Result<Rational> {
    if w.is_empty() {
        return Ok(Rational::one());
    }
    if let Some(v) = memo.get(w) {
        return Ok(v);
    }
    let letter = w[0];
    let table = tables
        .get(letter as usize - 1)
        .ok_or(Error::LetterOutOfRange { letter: letter as usize, n: tables.len() })?;
    let mut total = Rational::zero();
    // the block of position 0 is grown left to right; each gap between
    // consecutive block elements is an independent sub-word
    let mut stack: Vec<(usize, usize, Rational)> = vec![(0, 1, Rational::one())];
    while let Some((last, size, prod)) = stack.pop() {
        let kappa = table.kappa_checked(size)?;
        if !kappa.is_zero() {
            let tail = fp_moment(&w[last + 1..], tables, memo)?;
            if !tail.is_zero() {
                total += kappa * &prod * tail;
            }
        }
        if table.max_block().is_some_and(|b| size >= b) {
            continue;
        }
        for next in last + 1..w.len() {
            if w[next] != letter {
                continue;
            }
            let gap = fp_moment(&w[last + 1..next], tables, memo)?;
            if !gap.is_zero() {
                stack.push((next, size + 1, &prod * gap));
            }
        }
    }
    memo.put(w, &total);
    Ok(total)
}

enum Source {
    FreeProduct(Vec<CumulantTable>),
    Table { entries: HashMap<Word, Rational>, d_max: usize },
}

/// A tracial state represented by its moments.
pub struct TracialState {
    n: usize,
    source: Source,
    approximate: bool,
    label: String,
    cache: RwLock<HashMap<Word, Rational>>,
}

impl fmt::Debug for TracialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TracialState").field("n", &self.n).field("label", &self.label).finish()
    }
}

impl Clone for TracialState {
    fn clone(&self) -> Self {
        let source = match &self.source {
            Source::FreeProduct(t) => Source::FreeProduct(t.clone()),
            Source::Table { entries, d_max } => Source::Table { entries: entries.clone(), d_max: *d_max },
        };
        TracialState {
            n: self.n,
            source,
            approximate: self.approximate,
            label: self.label.clone(),
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

/// Semicircular variables of the given variance; several variables are free.
pub fn semicircle_state(variance: Rational, n: usize, free: bool) -> Result<TracialState> {
    if !variance.is_positive() {
        return Err(Error::InvalidArgument("variance must be positive".into()));
    }
    if n > 1 && !free {
        return Err(Error::InvalidArgument("several semicirculars must be free".into()));
    }
    let label = format!("semicircle(variance={variance}, n={n})");
    Ok(free_product_state(vec![CumulantTable::semicircle(variance); n], label))
}

/// Free Poisson variables of rate `c`, mutually free.
pub fn free_poisson_state(c: Rational, n: usize) -> Result<TracialState> {
    if !c.is_positive() {
        return Err(Error::InvalidArgument("rate must be positive".into()));
    }
    let label = format!("poisson(c={c}, n={n})");
    Ok(free_product_state(vec![CumulantTable::free_poisson(c); n], label))
}

/// Free product of single-variable laws given by their cumulants.
pub fn free_product_state(tables: Vec<CumulantTable>, label: String) -> TracialState {
    TracialState {
        n: tables.len(),
        source: Source::FreeProduct(tables),
        approximate: false,
        label,
        cache: RwLock::new(HashMap::new()),
    }
}

/// A state given by an explicit table of moments up to words of length `2·d_max`.
pub fn moment_table_state(entries: Vec<(Word, Rational)>, n: usize, d_max: usize) -> Result<TracialState> {
    let mut map: HashMap<Word, Rational> = HashMap::new();
    for (w, v) in entries {
        if w.max_letter() as usize > n {
            return Err(Error::LetterOutOfRange { letter: w.max_letter() as usize, n });
        }
        if w.len() > 2 * d_max {
            return Err(Error::InconsistentTable(format!("word {w} is longer than 2*{d_max}")));
        }
        let key = cyclic_canonical(&w, true);
        if let Some(prev) = map.get(&key) {
            if prev != &v {
                return Err(Error::InconsistentTable(format!(
                    "{w} = {v} conflicts with {key} = {prev} (cyclically equivalent)"
                )));
            }
        }
        map.insert(key, v);
    }
    match map.get(&Word::one()) {
        Some(v) if !v.is_one() => {
            return Err(Error::InconsistentTable(format!("moment of the identity is {v}, expected 1")))
        }
        Some(_) => {}
        None => {
            map.insert(Word::one(), Rational::one());
        }
    }
    Ok(TracialState {
        n,
        source: Source::Table { entries: map, d_max },
        approximate: false,
        label: format!("table(n={n}, d_max={d_max})"),
        cache: RwLock::new(HashMap::new()),
    })
}

/// Parses `word,value` lines (`#` starts a comment) into a moment table
/// state; `d_max` is half the longest word. Decimal values mark the state as
/// approximate.
pub fn moment_table_from_csv(text: &str, n: usize) -> Result<TracialState> {
    let mut entries = Vec::new();
    let mut approximate = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (w, v) = line.split_once(',').ok_or_else(|| Error::Parse {
            pos: lineno + 1,
            msg: format!("line {}: expected 'word,value'", lineno + 1),
        })?;
        if w.trim().eq_ignore_ascii_case("word") {
            continue;
        }
        let word: Word = w.trim().parse().map_err(|e| Error::Parse {
            pos: lineno + 1,
            msg: format!("line {}: {e}", lineno + 1),
        })?;
        let (value, decimal) = parse_rational(v)?;
        approximate |= decimal;
        entries.push((word, value));
    }
    let longest = entries.iter().map(|(w, _)| w.len()).max().unwrap_or(0);
    let mut state = moment_table_state(entries, n, longest.div_ceil(2))?;
    state.approximate = approximate;
    Ok(state)
}

impl TracialState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when some moments came from decimal input.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    /// Longest word with a known moment, `None` when unbounded.
    pub fn max_moment_length(&self) -> Option<usize> {
        match &self.source {
            Source::FreeProduct(_) => None,
            Source::Table { d_max, .. } => Some(2 * d_max),
        }
    }

    pub fn cumulant_tables(&self) -> Option<&[CumulantTable]> {
        match &self.source {
            Source::FreeProduct(t) => Some(t),
            Source::Table { .. } => None,
        }
    }

    /// The law of one variable, for free products.
    pub fn marginal(&self, letter: Letter) -> Option<TracialState> {
        let tables = self.cumulant_tables()?;
        let t = tables.get((letter as usize).checked_sub(1)?)?;
        Some(free_product_state(vec![t.clone()], format!("{} marginal {letter}", self.label)))
    }

    /// `τ(w)`, memoized by the cyclic and star canonical form of `w`.
    pub fn moment(&self, w: &Word) -> Result<Rational> {
        self.check_word(w)?;
        match &self.source {
            Source::FreeProduct(tables) => fp_moment(w.letters(), tables, &CanonicalMemo(&self.cache)),
            Source::Table { .. } => self.table_lookup(w),
        }
    }

    pub fn moment_f64(&self, w: &Word) -> Result<f64> {
        Ok(rat_to_f64(&self.moment(w)?))
    }

    /// `τ(w)` recomputed with a fresh memo keyed by the exact word, so no
    /// cyclic identification is assumed.
    pub fn moment_uncached(&self, w: &Word) -> Result<Rational> {
        self.check_word(w)?;
        match &self.source {
            Source::FreeProduct(tables) => fp_moment(w.letters(), tables, &ExactMemo::default()),
            Source::Table { .. } => self.table_lookup(w),
        }
    }

    /// `τ(w)` by the plain recursion without any memo.
    pub fn moment_unmemoized(&self, w: &Word) -> Result<Rational> {
        self.check_word(w)?;
        match &self.source {
            Source::FreeProduct(tables) => fp_moment(w.letters(), tables, &NoMemo),
            Source::Table { .. } => self.table_lookup(w),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().unwrap().len()
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.max_letter() as usize > self.n {
            return Err(Error::LetterOutOfRange { letter: w.max_letter() as usize, n: self.n });
        }
        Ok(())
    }

    fn table_lookup(&self, w: &Word) -> Result<Rational> {
        let Source::Table { entries, .. } = &self.source else { unreachable!() };
        entries.get(&cyclic_canonical(w, true)).cloned().ok_or_else(|| Error::MissingMoment(w.clone()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    pub state: String,
    pub degree: usize,
    pub matrix_size: usize,
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub psd_exact: Option<bool>,
    pub tracial: bool,
    pub star_symmetric: bool,
    pub pairs_checked: usize,
    pub growth_bound: f64,
    pub growth_max_length: usize,
    pub approximate: bool,
    pub failures: Vec<String>,
}

const TRACE_PAIRS: usize = 200;
const GROWTH_WORD_LIMIT: usize = 100_000;

/// Checks positivity of `M_d(τ)`, traciality and star symmetry on random
/// words, and estimates the growth bound `max |τ(w)|^{1/|w|}`.
pub fn verify_state(state: &TracialState, d: usize, exact: bool) -> Result<StateReport> {
    let m = moment_matrix(state, d)?;
    let dim = m.size();
    let eig = DMatrix::from_fn(dim, dim, |i, j| rat_to_f64(m.entry(i, j))).symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let psd = min_eigenvalue >= -1e-10 * dim as f64;
    let psd_exact = exact.then(|| is_psd_exact(m.entries()));
    let mut failures = Vec::new();
    if !psd {
        failures.push(format!("moment matrix has eigenvalue {min_eigenvalue:e}"));
    }
    if psd_exact == Some(false) {
        failures.push("exact LDL^T found a negative pivot".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x7261_6365);
    let (mut tracial, mut star_symmetric, mut pairs_checked) = (true, true, 0);
    if d > 0 {
        let random_word = |rng: &mut ChaCha8Rng, len: usize| {
            Word::new((0..len).map(|_| rng.random_range(1..=state.n as Letter)).collect())
        };
        for _ in 0..TRACE_PAIRS {
            let total = rng.random_range(1..=2 * d);
            let split = rng.random_range(0..=total);
            let u = random_word(&mut rng, split);
            let v = random_word(&mut rng, total - split);
            let uv = u.concat(&v);
            let a = state.moment_uncached(&uv)?;
            if a != state.moment_uncached(&v.concat(&u))? {
                tracial = false;
                failures.push(format!("tau({u}{v}) != tau({v}{u})"));
            }
            if a != state.moment_uncached(&uv.star())? {
                star_symmetric = false;
                failures.push(format!("tau({uv}) != tau of its reversal"));
            }
            pairs_checked += 1;
        }
    }

    let mut growth_max_length = 0;
    while growth_max_length < 2 * d && word_count(state.n, growth_max_length + 1) <= GROWTH_WORD_LIMIT {
        growth_max_length += 1;
    }
    let mut growth_bound: f64 = 0.0;
    for w in enumerate_words(state.n, growth_max_length).iter().skip(1) {
        let v = state.moment(w)?.abs().to_f64().unwrap_or(f64::INFINITY);
        growth_bound = growth_bound.max(v.powf(1.0 / w.len() as f64));
    }

    Ok(StateReport {
        state: state.label.clone(),
        degree: d,
        matrix_size: dim,
        psd: psd && psd_exact != Some(false),
        min_eigenvalue,
        psd_exact,
        tracial,
        star_symmetric,
        pairs_checked,
        growth_bound,
        growth_max_length,
        approximate: state.approximate,
        failures,
    })
}
