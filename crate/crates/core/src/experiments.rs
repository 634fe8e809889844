//! Random matrix samplers, rejection sampling into a level-set band of the
//! kernel approximant, and grid runs that produce CSV tables.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{cd_kernel, KernelRep, LevelSetSpec};
use crate::matpoly::{eval_poly, CMatrix};
use crate::poly::NcPolynomial;
use crate::scalar::{parse_rational, rat_to_f64, GaussianRational, Rational};
use crate::traces::{free_poisson_state, semicircle_state, TracialState};

/// Normalization of the symmetric Gaussian ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GoeConvention {
    /// `(X + Xᵀ)/2`.
    #[default]
    Half,
    /// `(X + Xᵀ)/√(2k)`, spectrum on the scale of the semicircle.
    Wigner,
}

impl std::str::FromStr for GoeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half" => Ok(GoeConvention::Half),
            "wigner" => Ok(GoeConvention::Wigner),
            other => Err(Error::InvalidArgument(format!("unknown GOE convention '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum SamplerLaw {
    Goe { sigma: f64, convention: GoeConvention },
    Wishart { c: f64, m: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub law: SamplerLaw,
    pub k: usize,
    pub seed: u64,
    pub workers: usize,
}

impl SamplerConfig {
    pub fn goe(k: usize, sigma: f64, convention: GoeConvention, seed: u64, workers: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("GOE scale {sigma} must be positive")));
        }
        Self::checked(SamplerLaw::Goe { sigma, convention }, k, seed, workers)
    }

    /// Wishart with `M = c·k` columns; `c·k` must be a positive integer.
    pub fn wishart(k: usize, c: &Rational, seed: u64, workers: usize) -> Result<Self> {
        let m = c * Rational::from_integer((k as i64).into());
        if !m.is_integer() || m <= Rational::from_integer(0.into()) {
            return Err(Error::InvalidArgument(format!("c·k = {m} must be a positive integer")));
        }
        let m = rat_to_f64(&m) as usize;
        Self::checked(SamplerLaw::Wishart { c: rat_to_f64(c), m }, k, seed, workers)
    }

    fn checked(law: SamplerLaw, k: usize, seed: u64, workers: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("matrix size k must be at least 1".into()));
        }
        Ok(SamplerConfig { law, k, seed, workers: workers.max(1) })
    }
}

/// Draw limits for [`rejection_sample`], shared out evenly between workers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RejectionLimits {
    pub max_draws: u64,
    /// Draws after which a rate below `min_rate` aborts the run.
    pub abort_after: u64,
    pub min_rate: f64,
}

impl Default for RejectionLimits {
    fn default() -> Self {
        RejectionLimits { max_draws: 1_000_000_000, abort_after: 1_000_000, min_rate: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub config: SamplerConfig,
    pub degree: usize,
    pub epsilon: f64,
    pub level: f64,
    pub target: usize,
    pub accepted: usize,
    pub draws: u64,
    pub accept_rate: f64,
    pub mean: f64,
    pub stderr: f64,
    pub wall_seconds: f64,
    /// Accepted tuples, kept only on request.
    #[serde(skip)]
    pub samples: Vec<Vec<CMatrix>>,
}

/// Symmetric Gaussian matrix with the default convention.
pub fn sample_goe<R: Rng + ?Sized>(k: usize, sigma: f64, rng: &mut R) -> DMatrix<f64> {
    sample_goe_with(k, sigma, GoeConvention::Half, rng)
}

pub fn sample_goe_with<R: Rng + ?Sized>(k: usize, sigma: f64, convention: GoeConvention, rng: &mut R) -> DMatrix<f64> {
    let x = DMatrix::<f64>::from_fn(k, k, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    let scale = match convention {
        GoeConvention::Half => 0.5,
        GoeConvention::Wigner => 1.0 / (2.0 * k as f64).sqrt(),
    };
    (&x + x.transpose()) * scale
}

/// `(1/k) G G^*` with `G` a `k × m` standard complex Gaussian matrix.
pub fn sample_wishart<R: Rng + ?Sized>(k: usize, m: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(k, m, |_, _| {
        Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
    });
    &g * g.adjoint() / Complex64::new(k as f64, 0.0)
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Normalized trace `Re tr_k f(A)`.
pub fn normalized_trace(f: &NcPolynomial, a: &[CMatrix]) -> Result<f64> {
    let m = eval_poly(f, a)?;
    Ok(m.trace().re / m.nrows() as f64)
}

enum Drawn {
    Real(Vec<DMatrix<f64>>),
    Complex(Vec<CMatrix>),
}

struct WorkerOutcome {
    values: Vec<f64>,
    draws: u64,
    samples: Vec<Vec<CMatrix>>,
    failure: Option<Error>,
}

/// Draws tuples of independent matrices until `n_accept` land in the band,
/// and averages `tr_k f` over them.
#[allow(clippy::too_many_arguments)]
pub fn rejection_sample(
    kernel: &KernelRep,
    spec: &LevelSetSpec,
    sampler: &SamplerConfig,
    n_accept: usize,
    f: &NcPolynomial,
    limits: &RejectionLimits,
    keep_samples: bool,
) -> Result<SampleReport> {
    if n_accept == 0 {
        return Err(Error::InvalidArgument("the number of samples must be at least 1".into()));
    }
    if spec.k != sampler.k || spec.degree != kernel.degree() {
        return Err(Error::InvalidArgument("level set, sampler and kernel disagree on k or d".into()));
    }
    f.check_alphabet(kernel.n())?;
    let d = kernel.degree().max(1) as f64;
    let started = Instant::now();
    let workers = sampler.workers;
    let quota = |i: usize| n_accept / workers + usize::from(i < n_accept % workers);
    let share = |total: u64| total.div_ceil(workers as u64).max(1);

    let run = |i: usize| -> WorkerOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed ^ i as u64);
        let mut out = WorkerOutcome { values: Vec::new(), draws: 0, samples: Vec::new(), failure: None };
        let want = quota(i);
        let (max_draws, abort_after) = (share(limits.max_draws), share(limits.abort_after));
        while out.values.len() < want {
            if out.draws >= max_draws {
                out.failure = Some(low_acceptance(out.values.len(), out.draws));
                break;
            }
            if out.draws >= abort_after && (out.values.len() as f64) < limits.min_rate * out.draws as f64 {
                out.failure = Some(low_acceptance(out.values.len(), out.draws));
                break;
            }
            out.draws += 1;
            let (sum, tuple) = match sampler.law {
                SamplerLaw::Goe { sigma, convention } => {
                    let tuple: Vec<DMatrix<f64>> =
                        (0..kernel.n()).map(|_| sample_goe_with(sampler.k, sigma, convention, &mut rng)).collect();
                    (kernel.kernel_trace_sum(&tuple), Drawn::Real(tuple))
                }
                SamplerLaw::Wishart { m, .. } => {
                    let tuple: Vec<CMatrix> = (0..kernel.n()).map(|_| sample_wishart(sampler.k, m, &mut rng)).collect();
                    (kernel.kernel_trace_sum(&tuple), Drawn::Complex(tuple))
                }
            };
            let sum = match sum {
                Ok(v) => v,
                Err(e) => {
                    out.failure = Some(e);
                    break;
                }
            };
            let phi = (sum / sampler.k as f64).powf(1.0 / d);
            if !spec.contains(phi) {
                continue;
            }
            let tuple = match tuple {
                Drawn::Real(t) => t.iter().map(to_complex).collect(),
                Drawn::Complex(t) => t,
            };
            match normalized_trace(f, &tuple) {
                Ok(v) => out.values.push(v),
                Err(e) => {
                    out.failure = Some(e);
                    break;
                }
            }
            if keep_samples {
                out.samples.push(tuple);
            }
        }
        out
    };

    let outcomes: Vec<WorkerOutcome> = if workers == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|i| scope.spawn(move || run(i))).collect();
            handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
        })
    };

    let draws: u64 = outcomes.iter().map(|o| o.draws).sum();
    let accepted: usize = outcomes.iter().map(|o| o.values.len()).sum();
    if let Some(err) = outcomes.iter().find_map(|o| o.failure.as_ref()) {
        return Err(match err {
            Error::LowAcceptance { .. } => low_acceptance(accepted, draws),
            other => Error::InvalidArgument(other.to_string()),
        });
    }
    let values: Vec<f64> = outcomes.iter().flat_map(|o| o.values.iter().copied()).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SampleReport {
        config: *sampler,
        degree: kernel.degree(),
        epsilon: spec.epsilon,
        level: spec.level,
        target: n_accept,
        accepted,
        draws,
        accept_rate: accepted as f64 / draws as f64,
        mean,
        stderr,
        wall_seconds: started.elapsed().as_secs_f64(),
        samples: outcomes.into_iter().flat_map(|o| o.samples).collect(),
    })
}

fn low_acceptance(accepted: usize, draws: u64) -> Error {
    Error::LowAcceptance { rate: accepted as f64 / draws.max(1) as f64, draws }
}

/// A parsed grid description.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureConfig {
    pub law: FigureLaw,
    pub vars: usize,
    pub degrees: Vec<usize>,
    pub ks: Vec<usize>,
    pub epsilon: f64,
    pub samples: usize,
    pub observable: String,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FigureLaw {
    Semicircle { variance: Rational, sigma: f64, convention: GoeConvention },
    Poisson { c: Rational },
}

impl FigureConfig {
    /// Reads flat `key = value` lines; `#` starts a comment. Lists accept
    /// commas, spaces and inclusive ranges `a..b`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut law = None;
        let mut vars = 1;
        let (mut degrees, mut ks) = (Vec::new(), Vec::new());
        let mut epsilon = None;
        let mut samples = None;
        let mut observable = None;
        let mut seed = 0u64;
        let mut workers = 1;
        let mut variance = Rational::from_integer(1.into());
        let mut sigma = 1.0;
        let mut c = None;
        let mut convention = GoeConvention::Half;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse { pos: lineno + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number '{v}' for {key}")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("bad integer '{v}' for {key}")));
            match key {
                "law" => law = Some(value.to_ascii_lowercase()),
                "vars" => vars = int(value)? as usize,
                "degree" | "degrees" => degrees = parse_list(value).map_err(bad)?,
                "k" | "ks" => ks = parse_list(value).map_err(bad)?,
                "epsilon" => epsilon = Some(num(value)?),
                "samples" | "N" => samples = Some(int(value)? as usize),
                "observable" => observable = Some(value.trim_matches('"').to_string()),
                "seed" => seed = int(value)?,
                "workers" => workers = int(value)? as usize,
                "sigma" => sigma = num(value)?,
                "variance" => variance = parse_rational(value)?.0,
                "c" => c = Some(parse_rational(value)?.0),
                "convention" => convention = value.parse()?,
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        let missing = |what: &str| Error::InvalidArgument(format!("figure config is missing '{what}'"));
        let law = match law.as_deref() {
            Some("semicircle") | Some("goe") => FigureLaw::Semicircle { variance, sigma, convention },
            Some("poisson") | Some("wishart") => FigureLaw::Poisson { c: c.ok_or_else(|| missing("c"))? },
            Some(other) => return Err(Error::InvalidArgument(format!("unknown law '{other}' for sampling"))),
            None => return Err(missing("law")),
        };
        if degrees.is_empty() {
            return Err(missing("degrees"));
        }
        if ks.is_empty() {
            return Err(missing("ks"));
        }
        Ok(FigureConfig {
            law,
            vars,
            degrees,
            ks,
            epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
            samples: samples.ok_or_else(|| missing("samples"))?,
            observable: observable.ok_or_else(|| missing("observable"))?,
            seed,
            workers,
        })
    }

    pub fn state(&self) -> Result<TracialState> {
        match &self.law {
            FigureLaw::Semicircle { variance, .. } => semicircle_state(variance.clone(), self.vars, true),
            FigureLaw::Poisson { c } => free_poisson_state(c.clone(), self.vars),
        }
    }

    pub fn sampler(&self, k: usize) -> Result<SamplerConfig> {
        match &self.law {
            FigureLaw::Semicircle { sigma, convention, .. } => {
                SamplerConfig::goe(k, *sigma, *convention, self.seed, self.workers)
            }
            FigureLaw::Poisson { c } => SamplerConfig::wishart(k, c, self.seed, self.workers),
        }
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.parse().map_err(|_| format!("bad range '{item}'"))?;
            let b: usize = b.parse().map_err(|_| format!("bad range '{item}'"))?;
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| format!("bad list entry '{item}'"))?);
        }
    }
    Ok(out)
}

/// One grid run: a report per `(d, k)` and the exact value `τ(f)`.
#[derive(Clone, Debug, Serialize)]
pub struct Figure {
    pub observable: String,
    pub tau_f: f64,
    pub rows: Vec<SampleReport>,
}

pub const CSV_HEADER: &str = "d,k,epsilon,N,accept_rate,mean,stderr";

impl Figure {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&csv_row(r));
            out.push('\n');
        }
        out
    }
}

pub fn csv_row(r: &SampleReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
        r.degree, r.config.k, r.epsilon, r.accepted, r.accept_rate, r.mean, r.stderr
    );
    s
}

/// Runs the grid in the order degrees × ks, using the same seed at every point.
pub fn run_figure(config: &FigureConfig, limits: &RejectionLimits) -> Result<Figure> {
    let state = config.state()?;
    let f = NcPolynomial::parse(&config.observable, config.vars)?;
    let tau_f = f
        .apply_functional(|w| state.moment(w).map(GaussianRational::real))?
        .to_complex()
        .re;
    let mut rows = Vec::new();
    for &d in &config.degrees {
        let kernel = cd_kernel(&state, d)?;
        for &k in &config.ks {
            let spec = LevelSetSpec::new(config.vars as f64, config.epsilon, k, d)?;
            let sampler = config.sampler(k)?;
            rows.push(rejection_sample(&kernel, &spec, &sampler, config.samples, &f, limits, false)?);
        }
    }
    Ok(Figure { observable: config.observable.clone(), tau_f, rows })
}
