//! Command-line surface: fit, compare, profile, quantile, simulate, and
//! bayes-prep over CSV/JSON files. All user-facing numbers are reported in
//! the original (unscaled) units; scaling stays an internal detail.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 estimability or
//! convergence failure (diagnostics are still written).

use crate::bayesprep;
use crate::dataset::{self, SNDataset};
use crate::distributions::Family;
use crate::estimate::{
    self, compare_grid, detect_limiting, fit_ml, FitError, FitOptions, FitResult,
};
use crate::likelihood::ModelSpec;
use crate::params::{RelationshipKind, TpVector};
use crate::reparam::ReparamError;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "snfit",
    version,
    about = "Censored maximum-likelihood fitting of nonlinear S-N fatigue models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one relationship/family pair to an S-N data file
    Fit(FitArgs),
    /// Fit a relationship x family grid and rank by AIC
    Compare(CompareArgs),
    /// Profile relative likelihood over one or two USP coordinates
    Profile(ProfileArgs),
    /// Life-quantile estimates with Wald and profile-likelihood bands
    Quantile(QuantileArgs),
    /// Simulate an S-N test campaign from traditional parameters
    Simulate(SimulateArgs),
    /// Default priors and MCMC chain starting points from a fit
    BayesPrep(BayesPrepArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with stress, cycles, status (and optional count) columns
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    relationship: String,
    #[arg(long)]
    family: String,
    /// Extra optimizations from perturbed starts, keeping the best
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated relationship names; all six when omitted
    #[arg(long, value_delimiter = ',')]
    relationships: Vec<String>,
    /// Comma-separated family names; all four when omitted
    #[arg(long, value_delimiter = ',')]
    families: Vec<String>,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Fit JSON produced by the fit command
    #[arg(long)]
    fit: PathBuf,
    /// USP coordinate name
    #[arg(long)]
    coord: String,
    /// second coordinate for a two-dimensional profile
    #[arg(long)]
    coord2: Option<String>,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Grid half-width in Wald standard errors
    #[arg(long, default_value_t = 6.0)]
    span: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantileArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Quantile probability
    #[arg(long)]
    p: f64,
    /// Confidence level of the bands
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    /// Comma-separated stress levels in original units
    #[arg(long, value_delimiter = ',')]
    stress_grid: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    relationship: String,
    #[arg(long)]
    family: String,
    /// Traditional parameters as inline JSON, e.g.
    /// '{"kind":"basquin","beta0":12,"beta1":-3,"sigma":0.4}'
    #[arg(long)]
    tp: String,
    #[arg(long, value_delimiter = ',')]
    stresses: Vec<f64>,
    /// Censoring horizon in cycles
    #[arg(long)]
    runout: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BayesPrepArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Standard-error multiplier for the weakly informative marginals
    #[arg(long, default_value_t = 20.0)]
    factor: f64,
    /// Use flat marginals instead of weakly informative normals
    #[arg(long, default_value_t = false)]
    flat: bool,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Estimability(String),
}

impl CliError {
    fn usage<E: std::fmt::Display>(e: E) -> CliError {
        CliError::Usage(e.to_string())
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(CliError::usage),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes()).map_err(CliError::usage)
        }
    }
}

fn load_data(path: &PathBuf) -> Result<SNDataset, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    dataset::load_and_scale(file).map_err(CliError::usage)
}

fn parse_relationship(name: &str) -> Result<RelationshipKind, CliError> {
    RelationshipKind::parse(name)
        .ok_or_else(|| CliError::Usage(format!("unknown relationship {name:?}")))
}

fn parse_family(name: &str) -> Result<Family, CliError> {
    Family::parse(name).ok_or_else(|| CliError::Usage(format!("unknown family {name:?}")))
}

fn load_fit(path: &PathBuf) -> Result<FitResult, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(CliError::usage)?;
    FitResult::from_json(&value).map_err(CliError::Usage)
}

fn fit_failure_json(err: &FitError) -> serde_json::Value {
    serde_json::json!({
        "error": err.to_string(),
        "kind": "estimability",
    })
}

fn is_estimability(err: &FitError) -> bool {
    matches!(
        err,
        FitError::Estimability(
            ReparamError::DegenerateAnchors(_)
                | ReparamError::InsufficientCurvature
                | ReparamError::InsufficientFailures
                | ReparamError::NotEnoughData(_)
        ) | FitError::NoFiniteLikelihood
    )
}

fn run_fit(args: &FitArgs) -> Result<(), CliError> {
    let data = load_data(&args.data)?;
    let spec = ModelSpec::new(
        parse_relationship(&args.relationship)?,
        parse_family(&args.family)?,
    );
    let opts = FitOptions {
        restarts: args.restarts,
    };
    match fit_ml(&spec, &data, &opts) {
        Ok(fit) => {
            let mut doc = fit.to_json();
            let advisories = detect_limiting(&fit);
            doc["advisories"] = serde_json::to_value(&advisories).unwrap();
            let text = serde_json::to_string_pretty(&doc).unwrap();
            write_output(&args.out, &text)?;
            if fit.diagnostics.converged {
                Ok(())
            } else {
                Err(CliError::Estimability(
                    "fit did not converge; diagnostics written".into(),
                ))
            }
        }
        Err(e) if is_estimability(&e) => {
            let doc = fit_failure_json(&e);
            let text = serde_json::to_string_pretty(&doc).unwrap();
            write_output(&args.out, &text)?;
            Err(CliError::Estimability(e.to_string()))
        }
        Err(e) => Err(CliError::usage(e)),
    }
}

fn csv_number(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let data = load_data(&args.data)?;
    let relationships: Vec<RelationshipKind> = if args.relationships.is_empty() {
        RelationshipKind::ALL.to_vec()
    } else {
        args.relationships
            .iter()
            .map(|s| parse_relationship(s))
            .collect::<Result<_, _>>()?
    };
    let families: Vec<Family> = if args.families.is_empty() {
        Family::ALL.to_vec()
    } else {
        args.families
            .iter()
            .map(|s| parse_family(s))
            .collect::<Result<_, _>>()?
    };
    let rows = compare_grid(
        &data,
        &relationships,
        &families,
        &FitOptions {
            restarts: args.restarts,
        },
    );
    let mut text =
        String::from("specified_for,relationship,distribution,n_parms,neg_loglik,aic,status\n");
    for row in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.mode_label(),
            row.relationship.table_name(),
            row.family.table_name(),
            row.n_parms,
            csv_number(row.neg_loglik),
            csv_number(row.aic),
            row.status.replace(',', ";"),
        ));
    }
    write_output(&args.out, &text)
}

fn run_profile(args: &ProfileArgs) -> Result<(), CliError> {
    let fit = load_fit(&args.fit)?;
    let coord = fit
        .usp_hat
        .index_of(&args.coord)
        .ok_or_else(|| CliError::Usage(format!("no USP coordinate named {:?}", args.coord)))?;
    let grid = estimate::default_profile_grid(&fit, coord, args.points, args.span);
    let trace = match &args.coord2 {
        None => estimate::profile_1d(&fit, coord, &grid),
        Some(name2) => {
            let coord2 = fit.usp_hat.index_of(name2).ok_or_else(|| {
                CliError::Usage(format!("no USP coordinate named {name2:?}"))
            })?;
            let grid2 = estimate::default_profile_grid(&fit, coord2, args.points, args.span);
            estimate::profile_2d(&fit, (coord, coord2), &grid, &grid2)
        }
    };
    let mut text = String::new();
    text.push_str(&trace.coord_names.join(","));
    text.push_str(",rel_lik\n");
    for (values, rel) in trace.grid.iter().zip(trace.rel_lik.iter()) {
        for v in values {
            text.push_str(&format!("{v:.10},"));
        }
        match rel {
            Some(r) => text.push_str(&format!("{r:.10}\n")),
            None => text.push('\n'),
        }
    }
    write_output(&args.out, &text)
}

fn run_quantile(args: &QuantileArgs) -> Result<(), CliError> {
    let fit = load_fit(&args.fit)?;
    if args.stress_grid.is_empty() {
        return Err(CliError::Usage("empty --stress-grid".into()));
    }
    let band = estimate::quantile_band(&fit, args.p, &args.stress_grid, args.level)
        .map_err(CliError::usage)?;
    let mut text = String::from(
        "stress,estimate,lower,upper,wald_lower,wald_upper,lower_open,upper_open\n",
    );
    for pt in &band {
        text.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{},{}\n",
            pt.stress,
            pt.estimate,
            pt.lower,
            pt.upper,
            pt.wald_lower,
            pt.wald_upper,
            pt.lower_open,
            pt.upper_open
        ));
    }
    write_output(&args.out, &text)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let relationship = parse_relationship(&args.relationship)?;
    let family = parse_family(&args.family)?;
    let tp: TpVector = serde_json::from_str(&args.tp)
        .map_err(|e| CliError::Usage(format!("bad --tp JSON: {e}")))?;
    if tp.kind != relationship {
        return Err(CliError::Usage(format!(
            "--tp kind {:?} does not match --relationship {:?}",
            tp.kind.name(),
            relationship.name()
        )));
    }
    if args.stresses.is_empty() {
        return Err(CliError::Usage("empty --stresses".into()));
    }
    let spec = ModelSpec::new(relationship, family);
    let rows = estimate::simulate(&spec, &tp, &args.stresses, args.runout, args.seed)
        .map_err(CliError::usage)?;
    let mut text = String::from("stress,cycles,status\n");
    for r in &rows {
        let status = if r.status.is_failure() {
            "failure"
        } else {
            "runout"
        };
        text.push_str(&format!("{},{:.10e},{}\n", r.stress, r.cycles, status));
    }
    write_output(&args.out, &text)
}

fn run_bayes_prep(args: &BayesPrepArgs) -> Result<(), CliError> {
    let fit = load_fit(&args.fit)?;
    let priors = if args.flat {
        let names: Vec<String> = fit
            .usp_hat
            .names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        bayesprep::flat_priors(&names).map_err(CliError::usage)?
    } else {
        bayesprep::weakly_informative_from_fit(&fit, args.factor).map_err(CliError::usage)?
    };
    let inits =
        bayesprep::chain_inits(&fit, args.chains, args.seed).map_err(CliError::usage)?;
    let doc = bayesprep::export_json(&priors, &inits);
    write_output(&args.out, &serde_json::to_string_pretty(&doc).unwrap())
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("SNFIT_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                // ignore the error if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

/// Entry point: returns the process exit code.
pub fn run(args: &[String]) -> u8 {
    configure_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Compare(a) => run_compare(a),
        Command::Profile(a) => run_profile(a),
        Command::Quantile(a) => run_quantile(a),
        Command::Simulate(a) => run_simulate(a),
        Command::BayesPrep(a) => run_bayes_prep(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Estimability(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
