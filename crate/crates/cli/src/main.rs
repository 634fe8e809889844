use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ncck_core::experiments::{
    csv_row, rejection_sample, run_figure, FigureConfig, GoeConvention, RejectionLimits, SamplerConfig, CSV_HEADER,
};
use ncck_core::gram::orthobasis;
use ncck_core::kernel::{cd_kernel, kernel_identities, LevelSetSpec};
use ncck_core::poly::to_csv_rows;
use ncck_core::scalar::{format_rational, parse_rational};
use ncck_core::sdp::{build_relaxation, check_feasibility, read_solver_record};
use ncck_core::traces::{free_poisson_state, moment_table_from_csv, semicircle_state, verify_state, TracialState};
use ncck_core::word::enumerate_words;
use ncck_core::{Error, NcPolynomial};

/// Noncommutative Christoffel-Darboux kernels, orthogonal polynomials and
/// tracial moment relaxations.
#[derive(Parser, Debug)]
#[command(name = "ncck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the moments τ(w) for all words of length at most --degree.
    Moments {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Print τ of this polynomial instead of the table.
        #[arg(long)]
        observable: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the monic orthogonal polynomials Q_w with their squared norms.
    Ortho {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        degree: usize,
        /// Print the floating orthonormal polynomials P_w instead.
        #[arg(long)]
        orthonormal: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the diagonal Christoffel-Darboux kernel κ(X, X)(1).
    Kernel {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        degree: usize,
        /// Check normalization, reproducing property and symmetry instead.
        #[arg(long)]
        identities: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check positivity, traciality and growth of a state's moments.
    Verify {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        degree: usize,
        /// Also run the exact rational positivity test.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rejection-sample random matrices in the level-set band and average an observable.
    Sample {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        observable: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a grid of sampling points described by a key = value config file.
    Figure {
        /// Config file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the worker count of the config file.
        #[arg(long, env = "NCCK_WORKERS")]
        workers: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the tracial moment relaxation as SDPA sparse text.
    SdpExport {
        #[command(flatten)]
        problem: SdpArgs,
        #[arg(long, default_value_t = 1)]
        vars: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a relaxation at a state's moments and report feasibility.
    SdpCheck {
        #[command(flatten)]
        problem: SdpArgs,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Solver record with an `optimum = value` line, checked against the witness objective.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Law {
    Semicircle,
    Poisson,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Goe {
    Half,
    Wigner,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[arg(long, value_enum, default_value = "semicircle")]
    law: Law,
    /// Number of free variables.
    #[arg(long, default_value_t = 1)]
    vars: usize,
    /// Semicircle variance.
    #[arg(long, default_value = "1")]
    variance: String,
    /// Free Poisson rate.
    #[arg(long)]
    c: Option<String>,
    /// Moment table CSV with word,value rows.
    #[arg(long)]
    moments: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "NCCK_WORKERS", default_value_t = 1)]
    workers: usize,
    /// GOE scale parameter.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// GOE normalization.
    #[arg(long, value_enum, default_value = "half")]
    goe: Goe,
}

#[derive(Args, Debug)]
struct SdpArgs {
    /// Selfadjoint objective polynomial.
    #[arg(long)]
    objective: String,
    /// File with one constraint polynomial g ⪰ 0 per line.
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    degree: usize,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Usage errors exit with 2, domain errors with 1.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::LetterOutOfRange { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure { code: 1, message: format!("{}: {e}", path.display()) })
}

fn build_state(args: &StateArgs) -> Result<TracialState, Failure> {
    if args.vars == 0 {
        return Err(usage("--vars must be at least 1"));
    }
    let state = match args.law {
        Law::Semicircle => semicircle_state(parse_rational(&args.variance)?.0, args.vars, true)?,
        Law::Poisson => {
            let c = args.c.as_deref().ok_or_else(|| usage("--law poisson needs --c"))?;
            free_poisson_state(parse_rational(c)?.0, args.vars)?
        }
        Law::Table => {
            let path = args.moments.as_ref().ok_or_else(|| usage("--law table needs --moments FILE"))?;
            moment_table_from_csv(&read_file(path)?, args.vars)?
        }
    };
    Ok(state)
}

/// Writes through a temporary file in the target directory and renames it.
fn emit(output: &OutputArgs, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure { code: 1, message: e.to_string() };
    match &output.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io)?;
            stdout.flush().map_err(io)
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn lines(rows: impl IntoIterator<Item = String>) -> String {
    rows.into_iter().map(|r| r + "\n").collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Moments { state, degree, observable, output } => {
            let st = build_state(&state)?;
            if let Some(obs) = observable {
                let f = NcPolynomial::parse(&obs, st.n())?;
                let v = f.apply_functional(|w| st.moment(w).map(ncck_core::GaussianRational::real))?;
                let text = match output.format {
                    Format::Json => json_text(&json!({ "observable": obs, "value": v.to_string() })),
                    Format::Csv => format!("observable,value\n{obs},{v}\n"),
                    Format::Text => format!("{v}\n"),
                };
                return emit(&output, &text);
            }
            let mut rows = Vec::new();
            for w in enumerate_words(st.n(), degree) {
                let v = st.moment(&w)?;
                rows.push((w.to_string(), format_rational(&v)));
            }
            let text = match output.format {
                Format::Json => json_text(&Value::Array(
                    rows.iter().map(|(w, v)| json!({ "word": w, "value": v })).collect(),
                )),
                Format::Csv => lines(std::iter::once("word,value".to_string()).chain(rows.iter().map(|(w, v)| format!("{w},{v}")))),
                Format::Text => lines(rows.iter().map(|(w, v)| format!("{w} {v}"))),
            };
            emit(&output, &text)
        }
        Command::Ortho { state, degree, orthonormal, output } => {
            let st = build_state(&state)?;
            let basis = orthobasis(&st, degree)?;
            let rows: Vec<(String, String, String)> = if orthonormal {
                basis
                    .words()
                    .iter()
                    .zip(basis.orthonormal())
                    .map(|(w, p)| {
                        let poly = p.iter().map(|(u, c)| format!("{c:e}*{}", u.to_power_string())).collect::<Vec<_>>().join(" + ");
                        (w.to_string(), "1".to_string(), poly)
                    })
                    .collect()
            } else {
                basis
                    .words()
                    .iter()
                    .zip(basis.polys())
                    .zip(basis.norms())
                    .map(|((w, q), nu)| (w.to_string(), format_rational(nu), q.to_string()))
                    .collect()
            };
            let text = match output.format {
                Format::Json => json_text(&json!({
                    "degree": degree,
                    "orthonormal": orthonormal,
                    "dropped": basis.dropped().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                    "basis": rows.iter().map(|(w, nu, p)| json!({ "word": w, "norm": nu, "polynomial": p })).collect::<Vec<_>>(),
                })),
                Format::Csv => lines(
                    std::iter::once("word,norm,polynomial".to_string()).chain(rows.iter().map(|(w, nu, p)| format!("{w},{nu},\"{p}\""))),
                ),
                Format::Text => lines(rows.iter().map(|(w, nu, p)| {
                    if orthonormal {
                        format!("P[{w}] = {p}")
                    } else {
                        format!("Q[{w}] = {p}    nu = {nu}")
                    }
                })),
            };
            emit(&output, &text)
        }
        Command::Kernel { state, degree, identities, output } => {
            let st = build_state(&state)?;
            if identities {
                let report = kernel_identities(&st, degree)?;
                let v = serde_json::to_value(&report).map_err(|e| Failure { code: 1, message: e.to_string() })?;
                return emit(&output, &json_text(&v));
            }
            let kappa = cd_kernel(&st, degree)?.diagonal_polynomial();
            let text = match output.format {
                Format::Json => json_text(&json!({
                    "degree": degree,
                    "polynomial": kappa.to_string(),
                    "terms": to_csv_rows(&kappa).iter().map(|r| {
                        let (w, c) = r.split_once(',').unwrap_or((r, ""));
                        json!({ "word": w, "coefficient": c })
                    }).collect::<Vec<_>>(),
                })),
                Format::Csv => lines(std::iter::once("word,coefficient".to_string()).chain(to_csv_rows(&kappa))),
                Format::Text => format!("{kappa}\n"),
            };
            emit(&output, &text)
        }
        Command::Verify { state, degree, exact, output } => {
            let st = build_state(&state)?;
            let report = verify_state(&st, degree, exact)?;
            let v = serde_json::to_value(&report).map_err(|e| Failure { code: 1, message: e.to_string() })?;
            let text = match output.format {
                Format::Csv => {
                    let obj = v.as_object().cloned().unwrap_or_default();
                    lines(std::iter::once("key,value".to_string()).chain(obj.iter().map(|(k, x)| format!("{k},{x}"))))
                }
                _ => json_text(&v),
            };
            emit(&output, &text)
        }
        Command::Sample { state, sampling, degree, k, epsilon, samples, observable, output } => {
            let st = build_state(&state)?;
            let f = NcPolynomial::parse(&observable, st.n())?;
            let convention = match sampling.goe {
                Goe::Half => GoeConvention::Half,
                Goe::Wigner => GoeConvention::Wigner,
            };
            let sampler = match state.law {
                Law::Semicircle => SamplerConfig::goe(k, sampling.sigma, convention, sampling.seed, sampling.workers)?,
                Law::Poisson => {
                    let c = parse_rational(state.c.as_deref().unwrap_or_default())?.0;
                    SamplerConfig::wishart(k, &c, sampling.seed, sampling.workers)?
                }
                Law::Table => return Err(usage("sampling needs --law semicircle or --law poisson")),
            };
            let kernel = cd_kernel(&st, degree)?;
            let spec = LevelSetSpec::new(st.n() as f64, epsilon, k, degree)?;
            let report = rejection_sample(&kernel, &spec, &sampler, samples, &f, &RejectionLimits::default(), false)?;
            let text = match output.format {
                Format::Json => json_text(&serde_json::to_value(&report).map_err(|e| Failure { code: 1, message: e.to_string() })?),
                _ => format!("{CSV_HEADER}\n{}\n", csv_row(&report)),
            };
            emit(&output, &text)
        }
        Command::Figure { config, workers, output } => {
            let mut cfg = FigureConfig::parse(&read_file(&config)?)?;
            if let Some(w) = workers {
                cfg.workers = w.max(1);
            }
            let fig = run_figure(&cfg, &RejectionLimits::default())?;
            let text = match output.format {
                Format::Json => json_text(&serde_json::to_value(&fig).map_err(|e| Failure { code: 1, message: e.to_string() })?),
                _ => fig.to_csv(),
            };
            emit(&output, &text)
        }
        Command::SdpExport { problem, vars, output } => {
            let relax = build_problem(&problem, vars)?;
            emit(&output, &relax.problem.to_sdpa())
        }
        Command::SdpCheck { problem, state, tol, solution, output } => {
            let relax = build_problem(&problem, state.vars)?;
            let st = build_state(&state)?;
            let report = check_feasibility(&relax, &st, tol)?;
            let mut v = serde_json::to_value(&report).map_err(|e| Failure { code: 1, message: e.to_string() })?;
            if let Some(path) = solution {
                let record = read_solver_record(&read_file(&path)?)?;
                v["solver_optimum"] = json!(record.optimum);
                v["witness_above_optimum"] = json!(report.objective >= record.optimum - tol);
            }
            emit(&output, &json_text(&v))
        }
    }
}

fn build_problem(args: &SdpArgs, vars: usize) -> Result<ncck_core::sdp::Relaxation, Failure> {
    let f = NcPolynomial::parse(&args.objective, vars)?;
    let mut constraints = Vec::new();
    if let Some(path) = &args.constraints {
        for line in read_file(path)?.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                constraints.push(NcPolynomial::parse(line, vars)?);
            }
        }
    }
    Ok(build_relaxation(&f, &constraints, vars, args.degree)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ncck: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
