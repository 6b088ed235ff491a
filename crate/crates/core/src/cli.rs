//! Command-line driver. Exit codes: 0 pass, 1 property violation, 2 input error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cocycle::{reconstruct, reconstruct_trace, MatrixElementQuery, Time};
use crate::error::{Error, Result};
use crate::formats::{
    fmt_f64, matrix_to_json, pair, parse_permutation, read_generator, read_step_function,
    read_vector, GeneratorFile, Pair, VectorFile,
};
use crate::generator::{diagnostics_with, max_form_deficit, DiagnosticsOptions, GeneratorMatrix};
use crate::models::{
    birth_death, cayley_shift, cayley_shift_compressed, iho, shg, CoefficientFunction, KSign,
    ShgOptions,
};
use crate::numerics::{basis_vector, op_norm, C64};
use crate::par::Execution;
use crate::qds::{qds_csv, qds_table, QdsSemigroup};
use crate::semigroup::{evolve, random_schur_trials, trotter_study, SemigroupFamily};

#[derive(Debug, Parser)]
#[command(
    name = "semicocycle",
    version,
    about = "Semigroup method for quantum stochastic cocycles on truncated spaces"
)]
pub struct Cli {
    /// Run sweeps sequentially instead of on the thread pool.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an example generator file.
    Model(ModelArgs),
    /// Check the form inequality and report diagnostics as JSON.
    Validate(ValidateArgs),
    /// Evaluate G^{c,d} and Q^{c,d}_t.
    Semigroup(SemigroupArgs),
    /// Reconstruct a cocycle matrix element between exponential vectors.
    Reconstruct(ReconstructArgs),
    /// Trotter–Kato convergence table (CSV `n,t,error`).
    Trotter(TrotterArgs),
    /// Conservativity and complete positivity of the vacuum semigroup (CSV).
    Qds(QdsArgs),
    /// Randomized Schur-product admissibility sweep.
    Schur(SchurArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelName {
    Cayley,
    Iho,
    Bd,
    Shg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    Printed,
    Dissipative,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub name: ModelName,
    /// Truncation dimension of 𝔥 (window size for bd, first mode for shg).
    #[arg(long)]
    pub dim: usize,
    /// Second mode dimension for shg (defaults to --dim).
    #[arg(long)]
    pub dim2: Option<usize>,
    /// Coefficient λ: zero, sqrt, abs-sqrt, odd-sqrt, const:x, linear:a,b or @table.json.
    #[arg(long, default_value = "sqrt")]
    pub lambda: String,
    /// Coefficient μ, same syntax as --lambda.
    #[arg(long, default_value = "zero")]
    pub mu: String,
    /// SHG drive ω (real).
    #[arg(long, default_value = "0")]
    pub omega: String,
    /// SHG coupling λ (real).
    #[arg(long, default_value = "0")]
    pub coupling: String,
    /// Sign of the SHG number term.
    #[arg(long, value_enum, default_value = "printed")]
    pub k_sign: SignArg,
    /// Permutation file for V₁ (SHG): JSON array of target indices.
    #[arg(long)]
    pub perm1: Option<PathBuf>,
    /// Permutation file for V₂ (SHG).
    #[arg(long)]
    pub perm2: Option<PathBuf>,
    /// Cayley only: build on this larger dimension and compress to --dim.
    #[arg(long)]
    pub ambient: Option<usize>,
    /// Output generator file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Generator file.
    #[arg(long)]
    pub generator: PathBuf,
    /// Verdict tolerance.
    #[arg(long, default_value = "1e-10")]
    pub tol: String,
    /// Interior margin in basis steps (0 keeps the whole truncation).
    #[arg(long, default_value_t = 0)]
    pub margin: usize,
    /// Seed for the random probes of the relative-bound profile.
    #[arg(long)]
    pub seed: u64,
    /// Number of random unit probes.
    #[arg(long, default_value_t = 1000)]
    pub probes: usize,
    /// Report file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SemigroupArgs {
    #[arg(long)]
    pub generator: PathBuf,
    /// Noise vector c: `re[:im],…` or @vector.json (zero when omitted).
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Noise vector d, same syntax as --c.
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Evolution time (decimal).
    #[arg(long)]
    pub t: String,
    #[arg(long, default_value = "1e-10")]
    pub tol: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub generator: PathBuf,
    /// Vector file for u.
    #[arg(long)]
    pub u: PathBuf,
    /// Vector file for v.
    #[arg(long)]
    pub v: PathBuf,
    /// Step-function file for f.
    #[arg(long)]
    pub f: PathBuf,
    /// Step-function file for g.
    #[arg(long)]
    pub g: PathBuf,
    /// Time (decimal string, at most both supports).
    #[arg(long)]
    pub t: String,
    /// Use normalized exponential vectors.
    #[arg(long)]
    pub normalized: bool,
    /// Write a `t,re,im` trace on the grid k·t/trace_steps, k = 0..=trace_steps.
    #[arg(long, requires = "trace_steps")]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub trace_steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Largest time of the uniform grid (decimal).
    #[arg(long)]
    pub tmax: Option<String>,
    /// Grid intervals; the grid is k·tmax/steps, k = 0..=steps.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Explicit comma-separated times (overrides --tmax/--steps; may be empty).
    #[arg(long)]
    pub times: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrotterArgs {
    #[arg(long)]
    pub generator: PathBuf,
    /// Comma-separated increasing regularization indices.
    #[arg(long, default_value = "2,4,8,16,32,64,128,256")]
    pub schedule: String,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Probe vector files (default e_0).
    #[arg(long)]
    pub probe: Vec<PathBuf>,
    #[arg(long, default_value = "1e-10")]
    pub tol: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QdsArgs {
    #[arg(long)]
    pub generator: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also compute the minimum Choi eigenvalue (h_dim ≤ 64).
    #[arg(long)]
    pub cp: bool,
    #[arg(long, default_value = "1e-10")]
    pub tol: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SchurArgs {
    #[arg(long)]
    pub generator: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Largest number of noise vectors per trial.
    #[arg(long, default_value_t = 3)]
    pub nmax: usize,
    #[arg(long, default_value = "1e-10")]
    pub tol: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Violation,
}

impl Outcome {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Violation
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation => 1,
        }
    }
}

/// Exit code for an error: precondition failures are property violations,
/// everything else is bad input.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition(_) => 1,
        _ => 2,
    }
}

pub fn run_cli(cli: Cli) -> Result<Outcome> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Model(a) => cmd_model(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Semigroup(a) => cmd_semigroup(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Trotter(a) => cmd_trotter(a, exec),
        Command::Qds(a) => cmd_qds(a, exec),
        Command::Schur(a) => cmd_schur(a, exec),
    }
}

/// Parses `args`, runs, and returns the process exit code; diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::InvalidInput(format!("{what}: not a finite number: {s:?}")))
}

fn parse_tol(s: &str) -> Result<f64> {
    let t = parse_real(s, "tol")?;
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("tol must be >= 0, got {s}")));
    }
    Ok(t)
}

/// `re[:im],…` or `@vector.json`; `None` gives the zero vector of length `d`.
fn parse_noise_vector(s: Option<&str>, d: usize, what: &str) -> Result<Vec<C64>> {
    let v = match s {
        None => return Ok(vec![C64::new(0.0, 0.0); d]),
        Some(s) if s.starts_with('@') => read_vector(Path::new(&s[1..]))?,
        Some(s) if s.trim().is_empty() => Vec::new(),
        Some(s) => s
            .split(',')
            .map(|z| {
                let (r, i) = z.split_once(':').unwrap_or((z, "0"));
                Ok(C64::new(parse_real(r, what)?, parse_real(i, what)?))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if v.len() != d {
        return Err(Error::InvalidInput(format!(
            "{what} has {} entries, expected noise_dim = {d}",
            v.len()
        )));
    }
    Ok(v)
}

fn uniform_grid(tmax: &Time, steps: u64) -> Vec<Time> {
    if steps == 0 {
        return vec![Time::zero()];
    }
    (0..=steps).map(|k| tmax.mul_int(k).div_int(steps)).collect()
}

impl GridArgs {
    fn times(&self) -> Result<Vec<f64>> {
        if let Some(list) = &self.times {
            return list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Time::parse(s).map(|t| t.to_f64()))
                .collect();
        }
        match (&self.tmax, self.steps) {
            (Some(tmax), Some(steps)) => {
                Ok(uniform_grid(&Time::parse(tmax)?, steps).iter().map(Time::to_f64).collect())
            }
            _ => Err(Error::InvalidInput("give --times or both --tmax and --steps".into())),
        }
    }
}

fn cmd_model(a: ModelArgs) -> Result<Outcome> {
    let lambda = CoefficientFunction::parse(&a.lambda)?;
    let mu = CoefficientFunction::parse(&a.mu)?;
    let f: GeneratorMatrix = match a.name {
        ModelName::Cayley => match a.ambient {
            Some(amb) => cayley_shift_compressed(a.dim, amb)?,
            None => cayley_shift(a.dim)?,
        },
        ModelName::Iho => iho(a.dim, &lambda, &mu)?,
        ModelName::Bd => birth_death(a.dim, &lambda, &mu)?,
        ModelName::Shg => {
            let m2 = a.dim2.unwrap_or(a.dim);
            let n = a.dim * m2;
            let perm = |p: &Option<PathBuf>| -> Result<Option<Vec<usize>>> {
                p.as_ref()
                    .map(|path| parse_permutation(&std::fs::read_to_string(path)?, n))
                    .transpose()
            };
            let opts = ShgOptions {
                sign: match a.k_sign {
                    SignArg::Printed => KSign::Printed,
                    SignArg::Dissipative => KSign::Dissipative,
                },
                perm1: perm(&a.perm1)?,
                perm2: perm(&a.perm2)?,
            };
            shg(a.dim, m2, parse_real(&a.omega, "omega")?, parse_real(&a.coupling, "coupling")?, &opts)?
        }
    };
    let text = serde_json::to_string(&GeneratorFile::from_generator(&f))? + "\n";
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

fn cmd_validate(a: ValidateArgs) -> Result<Outcome> {
    let tol = parse_tol(&a.tol)?;
    let f = read_generator(&a.generator)?;
    let opts = DiagnosticsOptions {
        tol,
        margin: a.margin,
        seed: a.seed,
        random_probes: a.probes,
        ..Default::default()
    };
    let report = diagnostics_with(&f, &opts)?;
    emit_json(a.out.as_deref(), &report)?;
    Ok(Outcome::from_ok(report.verdicts.form_inequality))
}

#[derive(Serialize)]
struct SemigroupReport {
    t: String,
    c: Vec<Pair>,
    d: Vec<Pair>,
    generator: Vec<Vec<Pair>>,
    propagator: Vec<Vec<Pair>>,
    op_norm: f64,
    form_inequality: bool,
    contraction: bool,
}

fn cmd_semigroup(a: SemigroupArgs) -> Result<Outcome> {
    let tol = parse_tol(&a.tol)?;
    let t = Time::parse(&a.t)?;
    let f = read_generator(&a.generator)?;
    let dn = f.noise_dim();
    let c = parse_noise_vector(a.c.as_deref(), dn, "c")?;
    let d = parse_noise_vector(a.d.as_deref(), dn, "d")?;
    let fam = SemigroupFamily::new(f);
    let g = fam.generator(&c, &d)?;
    let q = evolve(&g, t.to_f64())?;
    let norm = op_norm(&q);
    let form_inequality = max_form_deficit(fam.source()) <= tol;
    let contraction = norm <= 1.0 + tol;
    let report = SemigroupReport {
        t: t.to_decimal_string(),
        c: c.iter().map(|&z| pair(z)).collect(),
        d: d.iter().map(|&z| pair(z)).collect(),
        generator: matrix_to_json(&g),
        propagator: matrix_to_json(&q),
        op_norm: norm,
        form_inequality,
        contraction,
    };
    emit_json(a.out.as_deref(), &report)?;
    // A contractive generator must give contractive semigroups.
    Ok(Outcome::from_ok(!form_inequality || contraction))
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<Outcome> {
    let f = read_generator(&a.generator)?;
    let q = MatrixElementQuery {
        u: read_vector(&a.u)?,
        v: read_vector(&a.v)?,
        f: read_step_function(&a.f)?,
        g: read_step_function(&a.g)?,
        t: Time::parse(&a.t)?,
        normalized: a.normalized,
    };
    let fam = SemigroupFamily::new(f);
    let z = reconstruct(&fam, &q)?;
    if let (Some(path), Some(steps)) = (&a.trace, a.trace_steps) {
        let grid = uniform_grid(&q.t, steps);
        let vals = reconstruct_trace(&fam, &q, &grid)?;
        let mut csv = String::from("t,re,im\n");
        for (t, v) in grid.iter().zip(vals) {
            csv.push_str(&format!("{},{},{}\n", fmt_f64(t.to_f64()), fmt_f64(v.re), fmt_f64(v.im)));
        }
        std::fs::write(path, csv)?;
    }
    emit(None, &format!("[{}, {}]\n", fmt_f64(z.re), fmt_f64(z.im)))?;
    Ok(Outcome::Pass)
}

fn parse_schedule(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("schedule entry {x:?} is not a positive integer")))
        })
        .collect()
}

fn cmd_trotter(a: TrotterArgs, exec: Execution) -> Result<Outcome> {
    let tol = parse_tol(&a.tol)?;
    let schedule = parse_schedule(&a.schedule)?;
    let tgrid = a.grid.times()?;
    let f = read_generator(&a.generator)?;
    let dn = f.noise_dim();
    let c = parse_noise_vector(a.c.as_deref(), dn, "c")?;
    let d = parse_noise_vector(a.d.as_deref(), dn, "d")?;
    let probes = if a.probe.is_empty() {
        vec![basis_vector(f.h_dim(), 0)]
    } else {
        a.probe.iter().map(|p| read_vector(p)).collect::<Result<Vec<_>>>()?
    };
    let study = trotter_study(&f, &schedule, &c, &d, &tgrid, &probes, tol, exec)?;
    emit(a.out.as_deref(), &study.to_csv())?;
    let ok = study.regularized_deficits.iter().all(|&x| x <= tol);
    Ok(Outcome::from_ok(ok))
}

fn cmd_qds(a: QdsArgs, exec: Execution) -> Result<Outcome> {
    let tol = parse_tol(&a.tol)?;
    let tgrid = a.grid.times()?;
    let f = read_generator(&a.generator)?;
    let contractive = max_form_deficit(&f) <= tol;
    let sg = QdsSemigroup::new(f);
    let rows = qds_table(&sg, &tgrid, a.cp, exec)?;
    emit(a.out.as_deref(), &qds_csv(&rows))?;
    let cp_ok = rows.iter().all(|r| r.min_choi_eig.is_none_or(|x| x >= -tol));
    Ok(Outcome::from_ok(!contractive || cp_ok))
}

fn cmd_schur(a: SchurArgs, exec: Execution) -> Result<Outcome> {
    let tol = parse_tol(&a.tol)?;
    if a.nmax == 0 {
        return Err(Error::InvalidInput("--nmax must be positive".into()));
    }
    let f = read_generator(&a.generator)?;
    let fam = SemigroupFamily::new(f);
    let sweep = random_schur_trials(&fam, a.trials, a.nmax, a.seed, tol, exec)?;
    emit_json(a.out.as_deref(), &sweep)?;
    Ok(Outcome::from_ok(sweep.violations == 0))
}

/// Writes `v` as a vector file.
pub fn write_vector(path: &Path, v: &[C64]) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string(&VectorFile::from_vec(v))?)?)
}
