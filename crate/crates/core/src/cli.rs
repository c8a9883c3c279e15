//! Command-line front end.
//!
//! Exit codes: 0 success or clean diagnostics, 1 usage or input error,
//! 2 when `elicit` finds an inconsistency or a convexity witness.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::distributions::Distribution;
use crate::elicit::{
    bound_check, convex_level_set_test, default_grid, envelope, identify_c, spectral_bounds_check,
    DEFAULT_C_TOLERANCE,
};
use crate::io::{
    format_sig, json_real, parse_json, read_forecasts, read_observations, write_ranking,
    DistributionSpec, FunctionalSpec, MeasureSpec,
};
use crate::risk::{evaluate, RiskFunctional};
use crate::sampling::random_atomic;
use crate::scoring::{compare, ScoringFunction};
use crate::spectral::{SpectralMeasure, QUADRATURE_TOL};

pub const DEFAULT_SEED: u64 = 20_160_104;
pub const FIGURE_POINTS: usize = 512;

#[derive(Debug, Parser)]
#[command(
    name = "riskelicit",
    version,
    about = "Risk measures and elicitability diagnostics"
)]
pub struct Cli {
    /// Worker threads for parallel searches (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a risk functional on data or an inline distribution.
    Eval(EvalArgs),
    /// Elicitability diagnostics for a risk functional.
    Elicit(ElicitArgs),
    /// Rank forecast methods by mean score.
    Score(ScoreArgs),
    /// Integrated spectral functions on a uniform grid.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimpleType {
    Var,
    Es,
    Expectile,
    Negmean,
}

#[derive(Debug, Args)]
pub struct FunctionalArgs {
    /// Functional type; use --spec for spectral measures and families.
    #[arg(long = "type", value_enum, conflicts_with = "spec")]
    pub kind: Option<SimpleType>,
    /// Level α or τ in (0, 1).
    #[arg(long, requires = "kind")]
    pub level: Option<f64>,
    /// Functional as JSON, inline or `@path`.
    #[arg(long)]
    pub spec: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub functional: FunctionalArgs,
    /// CSV with a `y` column, read as an empirical law.
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    pub input: Option<PathBuf>,
    /// Distribution as JSON, inline or `@path`.
    #[arg(long)]
    pub dist: Option<String>,
}

#[derive(Debug, Args)]
pub struct ElicitArgs {
    #[command(flatten)]
    pub functional: FunctionalArgs,
    /// Levels for C identification, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Tolerance on the spread of the per-level C solutions.
    #[arg(long, default_value_t = DEFAULT_C_TOLERANCE)]
    pub tol: f64,
    /// Candidates examined by the convex-level-set search.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// Tolerance on hitting a level set in the search.
    #[arg(long, default_value_t = 1e-9)]
    pub search_tol: f64,
    /// Random laws in the bound check test set.
    #[arg(long, default_value_t = 200)]
    pub test_laws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreFamily {
    Quantile,
    Expectile,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// CSV with `method,period,forecast,realization`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub family: ScoreFamily,
    /// α or τ in (0, 1).
    #[arg(long)]
    pub level: f64,
    /// Ranking CSV destination.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// C in (0, 1].
    #[arg(long = "c")]
    pub c: f64,
    /// Levels q of the m_q curves, comma separated.
    #[arg(long = "p", value_delimiter = ',', default_values_t = vec![0.3, 0.8])]
    pub p: Vec<f64>,
    #[arg(long)]
    pub output: PathBuf,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let (result, buffer) = pool.install(|| {
        let mut buffer = Vec::new();
        (dispatch(&cli, &mut buffer), buffer)
    });
    let _ = out.write_all(&buffer);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Elicit(a) => cmd_elicit(a, cli.seed, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Figure(a) => cmd_figure(a, out),
    }
}

fn inline_or_file(text: &str) -> anyhow::Result<String> {
    match text.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(text.to_string()),
    }
}

fn functional_spec(a: &FunctionalArgs) -> anyhow::Result<FunctionalSpec> {
    if let Some(spec) = &a.spec {
        return Ok(parse_json(&inline_or_file(spec)?)?);
    }
    let kind = a
        .kind
        .ok_or_else(|| anyhow!("one of --type or --spec is required"))?;
    let level = || {
        a.level
            .ok_or_else(|| anyhow!("--level is required for this type"))
    };
    Ok(match kind {
        SimpleType::Var => FunctionalSpec::Var { level: level()? },
        SimpleType::Es => FunctionalSpec::Es { level: level()? },
        SimpleType::Expectile => FunctionalSpec::Expectile { level: level()? },
        SimpleType::Negmean => FunctionalSpec::Negmean,
    })
}

/// Accuracy the evaluation path is built for.
fn nominal_tolerance(rf: &RiskFunctional<f64>, d: &Distribution<f64>) -> f64 {
    let has_density = rf
        .measures()
        .is_some_and(|ms| ms.iter().any(|m| m.density().is_some()));
    match rf {
        RiskFunctional::Expectile { .. } => 1e-10,
        _ if has_density && !d.is_atomic() => QUADRATURE_TOL,
        _ => 1e-12,
    }
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = functional_spec(&a.functional)?;
    let rf = spec.to_functional()?;
    let dist_spec = match (&a.input, &a.dist) {
        (Some(path), _) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            DistributionSpec::Empirical {
                values: read_observations(file)?,
            }
        }
        (None, Some(text)) => parse_json(&inline_or_file(text)?)?,
        (None, None) => bail!("one of --input or --dist is required"),
    };
    let d = dist_spec.to_distribution()?;
    let value = evaluate(&rf, &d)?;
    writeln!(out, "{}", format_sig(value))?;
    let report = json!({
        "spec": spec,
        "n": dist_spec.size(),
        "value": json_real(value),
        "tolerance": nominal_tolerance(&rf, &d),
    });
    writeln!(out, "{report}")?;
    Ok(0)
}

fn bound_test_set(seed: u64, laws: usize) -> Vec<Distribution<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set: Vec<Distribution<f64>> = (1..20)
        .map(|k| Distribution::two_point(0.0, 1.0, k as f64 / 20.0).expect("valid"))
        .collect();
    set.extend((0..laws).map(|_| random_atomic(&mut rng, 10, -5.0, 5.0)));
    set
}

fn cmd_elicit(a: &ElicitArgs, seed: u64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = functional_spec(&a.functional)?;
    let rf = spec.to_functional()?;
    let grid = a.grid.clone().unwrap_or_else(default_grid);
    let ident = identify_c(&rf, &grid, a.tol)?;

    let mut bound_violations = Vec::new();
    let mut margins = Vec::new();
    let mut spectral_violations = 0;
    if ident.consistent {
        let c = ident.c_hat.min(1.0);
        let report = bound_check(
            &rf,
            c,
            &bound_test_set(seed, a.test_laws),
            a.search_tol.max(1e-9),
        )?;
        bound_violations = report
            .violations()
            .map(|r| {
                json!({
                    "index": r.index,
                    "lower": json_real(r.lower),
                    "value": json_real(r.value),
                    "upper": json_real(r.upper),
                })
            })
            .collect();
        for (i, m) in rf.measures().unwrap_or_default().iter().enumerate() {
            let r = spectral_bounds_check(m, c, &grid)?;
            spectral_violations += r.violations();
            margins.extend(r.margins.iter().map(|g| {
                json!({
                    "measure": i,
                    "p": g.p,
                    "g": json_real(g.g),
                    "lower": json_real(g.lower_margin),
                    "upper": json_real(g.upper_margin),
                    "integrated": json_real(g.integrated_margin),
                    "integrated_equality": g.integrated_equality(),
                    "violated": g.violated(),
                })
            }));
        }
    }

    let witness = convex_level_set_test(&rf, a.budget, seed, a.search_tol)?;
    let witnesses: Vec<Value> = witness
        .iter()
        .map(|w| {
            let law = |d: &Distribution<f64>| -> Vec<[f64; 2]> {
                d.atoms()
                    .unwrap_or_default()
                    .iter()
                    .map(|x| [x.value, x.weight])
                    .collect()
            };
            json!({
                "P0": law(&w.p0),
                "P1": law(&w.p1),
                "p": w.p,
                "t": w.t,
                "value_at_mixture": json_real(w.value_at_mixture),
            })
        })
        .collect();

    let consistent = ident.consistent
        && witnesses.is_empty()
        && bound_violations.is_empty()
        && spectral_violations == 0;
    let verdict = if consistent {
        if witness.is_none() {
            format!(
                "consistent; no convexity violation found at budget {}",
                a.budget
            )
        } else {
            "consistent".to_string()
        }
    } else {
        "inconsistent".to_string()
    };
    let report = json!({
        "verdict": verdict,
        "spec": spec,
        "C_hat": json_real(ident.c_hat),
        "tolerance": ident.tolerance,
        "residuals": ident.residuals.iter().map(|&(p, r)| json!({"p": p, "residual": json_real(r)})).collect::<Vec<_>>(),
        "out_of_range": ident.out_of_range.iter().map(|&(p, r)| json!({"p": p, "value": json_real(r)})).collect::<Vec<_>>(),
        "bound_violations": bound_violations,
        "witnesses": witnesses,
        "margins": margins,
        "budget": a.budget,
        "seed": seed,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if consistent { 0 } else { 2 })
}

fn cmd_score(a: &ScoreArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let s = match a.family {
        ScoreFamily::Quantile => ScoringFunction::pinball(a.level)?,
        ScoreFamily::Expectile => ScoringFunction::asymmetric_squared(a.level)?,
    };
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let series = read_forecasts(file)?;
    let ranking = compare(&series, &s);
    if let Some(path) = &a.output {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_ranking(BufWriter::new(file), &ranking)?;
    }
    let width = ranking
        .iter()
        .map(|r| r.method.len())
        .max()
        .unwrap_or(0)
        .max(6);
    writeln!(out, "{:>4}  {:<width$}  mean_score", "rank", "method")?;
    for r in &ranking {
        writeln!(
            out,
            "{:>4}  {:<width$}  {}",
            r.rank,
            r.method,
            format_sig(r.mean_score)
        )?;
    }
    Ok(0)
}

/// Grid `k/(n-1)`, `k = 0..n`.
pub fn figure_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| k as f64 / (points - 1) as f64)
        .collect()
}

/// Header and rows of the figure table for one value of `C`.
pub fn figure_table(c: f64, qs: &[f64]) -> crate::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let uc = SpectralMeasure::uc(c)?;
    let es = SpectralMeasure::dirac(c)?;
    let mps = qs
        .iter()
        .map(|&q| SpectralMeasure::mp(q, c))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut header = vec![
        "p".to_string(),
        "uc_integrated".into(),
        "es_integrated".into(),
    ];
    header.extend(qs.iter().map(|q| format!("m_{q}")));
    let rows = figure_grid(FIGURE_POINTS)
        .into_iter()
        .map(|p| {
            let mut row = vec![p, uc.integrated_spectral(p)?, es.integrated_spectral(p)?];
            for m in &mps {
                row.push(m.integrated_spectral(p)?);
            }
            Ok(row)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    debug_assert!(rows
        .iter()
        .all(|r| (r[1] - envelope(c, r[0])).abs() < 1e-12));
    Ok((header, rows))
}

fn cmd_figure(a: &FigureArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (header, rows) = figure_table(a.c, &a.p)?;
    let file =
        File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(&header)?;
    for row in &rows {
        w.write_record(row.iter().map(|&v| format_sig(v)))?;
    }
    w.flush()?;
    writeln!(out, "wrote {} rows to {}", rows.len(), a.output.display())?;
    Ok(0)
}

/// Round-trips a measure through its JSON form.
pub fn echo_measure(m: &SpectralMeasure<f64>) -> String {
    serde_json::to_string(&MeasureSpec::from_measure(m)).expect("plain data")
}
