//! `autonomy` command-line runner: executes the studies, writes
//! schema-versioned exports and validates parameter files.

pub mod error;
pub mod export;
pub mod studies;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use autonomy_amds::scenario::{corpus_problems, load_scenarios, parse_scenarios, shipped_scenarios};
use autonomy_core::ans::Portfolio;
use autonomy_core::params::StudyParameters;
use autonomy_core::RandomStream;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_PARTIAL};
use studies::{AmdsMode, AmdsSettings, Inputs, StudyOutcome, REGISTRY};

#[derive(Debug, Parser)]
#[command(name = "autonomy", version, about = "Mission autonomy studies and decision-support evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run studies and write their exports.
    Run(RunArgs),
    /// Check parameter, mission, scenario and endpoint files.
    Validate(InputArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Study parameter file. Defaults to the built-in set.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Mission table. Defaults to missions.json beside --params, else built-in.
    #[arg(long)]
    pub missions: Option<PathBuf>,
    /// Decision-support scenario corpus. Defaults to the built-in corpus.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Chat endpoint configuration for live mode.
    #[arg(long)]
    pub endpoint_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Comma-separated study names, or `all`.
    #[arg(long, default_value = "all")]
    pub studies: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "artifacts")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = AmdsMode::Replay)]
    pub amds_mode: AmdsMode,
    /// Transcript to replay. Defaults to the built-in reference transcript.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: InputArgs,
}

/// What a run was asked to do; written to `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub studies: Vec<&'static str>,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub parameter_file: Option<PathBuf>,
    pub mission_file: Option<PathBuf>,
    pub scenario_file: Option<PathBuf>,
    pub amds_mode: AmdsMode,
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct StudyError {
    pub study: &'static str,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub studies: Vec<StudyOutcome>,
    pub errors: Vec<StudyError>,
    pub partial: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if let Some(e) = self.errors.first() {
            e.exit_code
        } else if self.partial {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        }
    }

    pub fn study(&self, name: &str) -> Option<&StudyOutcome> {
        self.studies.iter().find(|s| s.study == name)
    }
}

fn missions_path(inputs: &InputArgs) -> Option<PathBuf> {
    inputs.missions.clone().or_else(|| {
        let p = inputs.params.as_ref()?.parent()?.join("missions.json");
        p.exists().then_some(p)
    })
}

fn load_inputs(manifest: &RunManifest, endpoint_config: Option<PathBuf>) -> CliResult<Inputs> {
    let params = match &manifest.parameter_file {
        Some(p) => StudyParameters::load(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => StudyParameters::shipped(),
    };
    let diags = params.validate();
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(CliError::Config(format!("invalid parameters:\n  {}", lines.join("\n  "))));
    }
    let portfolio = match &manifest.mission_file {
        Some(p) => Portfolio::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => Portfolio::shipped(),
    };
    let scenarios = match &manifest.scenario_file {
        Some(p) => load_scenarios(p)?,
        None => shipped_scenarios(),
    };
    Ok(Inputs {
        params,
        portfolio,
        scenarios,
        amds: AmdsSettings {
            mode: manifest.amds_mode,
            transcript: manifest.transcript.clone(),
            endpoint_config,
        },
    })
}

/// Run every study in the manifest. Independent studies run in parallel;
/// each draws from its own split of the manifest seed.
pub fn run(manifest: &RunManifest, endpoint_config: Option<PathBuf>) -> CliResult<RunSummary> {
    let inputs = load_inputs(manifest, endpoint_config)?;
    std::fs::create_dir_all(&manifest.output_dir)?;
    export::write_json(&manifest.output_dir.join("manifest.json"), manifest)?;
    let root = RandomStream::new(manifest.seed);
    let results: Vec<(&'static str, CliResult<StudyOutcome>)> = manifest
        .studies
        .par_iter()
        .map(|&name| {
            let index = studies::registry_index(name).unwrap_or(REGISTRY.len()) as u64;
            let dir = manifest.output_dir.join(name);
            (name, studies::run_study(name, &inputs, &root.split(index), &dir))
        })
        .collect();
    let mut summary = RunSummary {
        seed: manifest.seed,
        studies: Vec::new(),
        errors: Vec::new(),
        partial: false,
    };
    for (name, r) in results {
        match r {
            Ok(o) => {
                summary.partial |= o.partial;
                summary.studies.push(o);
            }
            Err(e) => summary.errors.push(StudyError {
                study: name,
                message: e.to_string(),
                exit_code: e.exit_code(),
            }),
        }
    }
    export::write_json(&manifest.output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDiagnostic {
    pub file: String,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FileDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.file, self.field, self.message)
    }
}

fn label(path: Option<&Path>) -> String {
    path.map(|p| p.display().to_string()).unwrap_or_else(|| "<built-in>".into())
}

/// Every invariant violation across the input files. Empty means valid.
pub fn validate(inputs: &InputArgs) -> Vec<FileDiagnostic> {
    let mut out = Vec::new();
    let mut diag = |file: &str, field: &str, message: String| {
        out.push(FileDiagnostic { file: file.to_string(), field: field.to_string(), message });
    };

    let pfile = label(inputs.params.as_deref());
    match inputs.params.as_deref().map(StudyParameters::load).unwrap_or_else(|| Ok(StudyParameters::shipped())) {
        Ok(p) => {
            for d in p.validate() {
                diag(&pfile, &d.field, d.message);
            }
        }
        Err(e) => diag(&pfile, "", e.to_string()),
    }

    let mpath = missions_path(inputs);
    let mfile = label(mpath.as_deref());
    let portfolio = match mpath.as_deref().map(Portfolio::load).unwrap_or_else(|| Ok(Portfolio::shipped())) {
        Ok(p) => {
            for (acronym, stored, computed) in p.ans_mismatches(0.001) {
                diag(
                    &mfile,
                    &format!("missions[{acronym}].ans"),
                    format!("stored {stored} but ans_score(rtt_latency) = {computed:.4}"),
                );
            }
            Some(p)
        }
        Err(e) => {
            diag(&mfile, "", e.to_string());
            None
        }
    };

    let sfile = label(inputs.scenarios.as_deref());
    let scenarios = match &inputs.scenarios {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| e.to_string())
            .and_then(|t| parse_scenarios(&t).map_err(|e| e.to_string())),
        None => Ok(shipped_scenarios()),
    };
    match scenarios {
        Ok(s) => {
            let portfolio = portfolio.unwrap_or_else(Portfolio::shipped);
            for (id, message) in corpus_problems(&s, &portfolio) {
                diag(&sfile, &format!("scenarios[{id}]"), message);
            }
        }
        Err(e) => diag(&sfile, "", e),
    }

    if let Some(p) = &inputs.endpoint_config {
        if let Err(e) = autonomy_amds::client::load_endpoints(p) {
            diag(&p.display().to_string(), "", e.to_string());
        }
    }
    out
}

fn print_summary(summary: &RunSummary, out_dir: &Path) {
    for s in &summary.studies {
        let passed = s.checks.iter().filter(|c| c.passed).count();
        let misses = s.headlines.iter().filter(|h| h.within_tolerance == Some(false)).count();
        println!(
            "{:<12} {}  checks {passed}/{}  off-reference {misses}",
            s.study,
            if s.partial { "partial" } else { "ok" },
            s.checks.len()
        );
        for n in &s.notes {
            println!("    {n}");
        }
    }
    for e in &summary.errors {
        eprintln!("{:<12} error: {}", e.study, e.message);
    }
    println!("artifacts in {}", out_dir.display());
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Validate(inputs) => {
            let diags = validate(&inputs);
            for d in &diags {
                println!("{d}");
            }
            if diags.is_empty() {
                println!("all inputs valid");
                EXIT_OK
            } else {
                EXIT_CONFIG
            }
        }
        Command::Run(args) => {
            let studies = match studies::parse_studies(&args.studies) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return e.exit_code();
                }
            };
            let manifest = RunManifest {
                studies,
                seed: args.seed,
                output_dir: args.out.clone(),
                parameter_file: args.inputs.params.clone(),
                mission_file: missions_path(&args.inputs),
                scenario_file: args.inputs.scenarios.clone(),
                amds_mode: args.amds_mode,
                transcript: args.transcript.clone(),
            };
            match run(&manifest, args.inputs.endpoint_config.clone()) {
                Ok(summary) => {
                    print_summary(&summary, &args.out);
                    summary.exit_code()
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
    }
}
