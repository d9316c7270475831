//! The `planpred` command line: validate, infer, gen, simulate and analyze.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use planpred::analysis::{analyze, AnalysisError, StudyTask};
use planpred::format::{
    load_participants, load_task, load_task_dir, participants_to_csv, posterior_rows,
    posterior_to_csv, render_table, report_csvs, sig6, write_atomic, FormatError, Metadata,
    TaskFile,
};
use planpred::inference::{infer, ModelConfig, ModelKind, Normalization};
use planpred::simulate::{
    complexity_signature, generate_task, synth_participants, ComplexitySignature, GeneratedTask,
    GeneratorSpec, SimulateError, STANDARD_SIGNATURES,
};
use planpred::svg::{task_chart, TaskChart};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Parse(_) => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_parse() {
            CliError::Parse(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn domain(e: impl ToString) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "planpred",
    version,
    about = "Goal inference with plan predictability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check task files for structural problems.
    Validate(ValidateArgs),
    /// Print the goal posterior for one task.
    Infer(InferArgs),
    /// Generate tasks with a given complexity signature.
    Gen(GenArgs),
    /// Produce synthetic participant responses.
    Simulate(SimulateArgs),
    /// Compare participant scores with both models and write a report bundle.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Full,
    Ppo,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Full => ModelKind::Full,
            ModelArg::Ppo => ModelKind::Ppo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Conventional,
    #[value(name = "paper_literal", alias = "paper-literal")]
    PaperLiteral,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Conventional => Normalization::Conventional,
            NormalizationArg::PaperLiteral => Normalization::PaperLiteral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct BetaArgs {
    /// Rationality of plan choice.
    #[arg(long, default_value_t = ModelConfig::DEFAULT_BETA1)]
    pub beta1: f64,
    /// Rationality of observed actions.
    #[arg(long, default_value_t = ModelConfig::DEFAULT_BETA2)]
    pub beta2: f64,
    /// Predictability bias.
    #[arg(long, default_value_t = ModelConfig::DEFAULT_BETA3)]
    pub beta3: f64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Conventional)]
    pub normalization: NormalizationArg,
}

impl BetaArgs {
    fn config(&self, model: ModelKind) -> Result<ModelConfig, CliError> {
        let config = ModelConfig::new(model)
            .with_betas(self.beta1, self.beta2, self.beta3)
            .with_normalization(self.normalization.into());
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Task files or directories of task files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    pub task: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Full)]
    pub model: ModelArg,
    #[command(flatten)]
    pub betas: BetaArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Part types in each goal product (2-4).
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub k: u8,
    /// Part types collected along the observed path.
    #[arg(long)]
    pub n: u8,
    /// Colors of the decisive remaining type.
    #[arg(long)]
    pub c: u8,
    /// Task `i` is searched with seed `seed + i`.
    #[arg(long, env = "PLANPRED_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    /// Only keep tasks where the two models pick different goals.
    #[arg(long)]
    pub require_disagreement: bool,
    #[arg(long, default_value_t = 10)]
    pub width: u32,
    #[arg(long, default_value_t = 10)]
    pub height: u32,
    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory of task files.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub tasks: Option<PathBuf>,
    /// Generate tasks instead: `standard` for the nine standard signatures, or
    /// comma-separated `k,n,c` (repeatable).
    #[arg(long)]
    pub gen: Vec<String>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub participants: u32,
    #[arg(long, value_enum, default_value_t = ModelArg::Ppo)]
    pub model: ModelArg,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Standard deviation of score noise.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, env = "PLANPRED_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub participants: PathBuf,
    #[command(flatten)]
    pub betas: BetaArgs,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(a) => cmd_validate(&a, out, err),
        Command::Infer(a) => cmd_infer(&a, out, err),
        Command::Gen(a) => cmd_gen(&a, out, err),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::Analyze(a) => cmd_analyze(&a, out, err),
    }
}

fn json_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_validate(
    args: &ValidateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let mut worst: Option<CliError> = None;
    let mut failures = 0;
    for path in &args.paths {
        for file in json_files(path)? {
            match load_task(&file) {
                Ok(t) => {
                    let sig = complexity_signature(&t.study.task)
                        .map(|s| s.to_string())
                        .unwrap_or_else(|e| e.to_string());
                    writeln!(
                        out,
                        "ok {} (id {}, signature {sig})",
                        file.display(),
                        t.study.id
                    )?;
                }
                Err(e) => {
                    failures += 1;
                    writeln!(err, "error: {e}")?;
                    let e = CliError::from(e);
                    if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                        worst = Some(e);
                    }
                }
            }
        }
    }
    match worst {
        Some(e) => Err(match e {
            CliError::Domain(_) => {
                CliError::Domain(format!("{failures} file(s) failed validation"))
            }
            _ => CliError::Parse(format!("{failures} file(s) failed validation")),
        }),
        None => Ok(()),
    }
}

fn config_echo(config: &ModelConfig) -> String {
    format!(
        "model={} beta1={} beta2={} beta3={} normalization={}",
        config.model, config.beta1, config.beta2, config.beta3, config.normalization
    )
}

fn opt(v: Option<u32>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn cmd_infer(args: &InferArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = args.betas.config(args.model.into())?;
    let task = load_task(&args.task)?.study.task;
    let scores = task.scores().map_err(domain)?;
    let posterior = infer(&task, config).map_err(domain)?;
    let rows = posterior_rows(&posterior, &scores);
    match args.format {
        OutputFormat::Csv => {
            writeln!(err, "{}", config_echo(&config))?;
            out.write_all(posterior_to_csv(&rows).as_bytes())?;
        }
        OutputFormat::Table => {
            writeln!(out, "{}", config_echo(&config))?;
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.candidate_id.clone(),
                        sig6(r.probability),
                        r.plans.to_string(),
                        r.feasible_plans.to_string(),
                        opt(r.min_cost),
                        opt(r.min_remaining_cost),
                    ]
                })
                .collect();
            out.write_all(
                render_table(
                    &[
                        "candidate",
                        "probability",
                        "plans",
                        "feasible",
                        "min_cost",
                        "min_remaining",
                    ],
                    &body,
                )
                .as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn signature_from(k: u8, n: u8, c: u8) -> Result<ComplexitySignature, CliError> {
    ComplexitySignature::new(k, n, c).map_err(|e| CliError::Usage(e.to_string()))
}

fn task_file_name(sig: ComplexitySignature, seed: u64) -> String {
    format!("k{}n{}c{}-s{seed}.json", sig.k, sig.n, sig.c)
}

fn generate_one(
    sig: ComplexitySignature,
    seed: u64,
    tune: impl Fn(&mut GeneratorSpec),
) -> Result<(String, GeneratedTask), SimulateError> {
    let mut spec = GeneratorSpec::new(sig, seed);
    tune(&mut spec);
    let g = generate_task(&spec)?;
    Ok((
        task_file_name(sig, seed)
            .trim_end_matches(".json")
            .to_string(),
        g,
    ))
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let sig = signature_from(args.k, args.n, args.c)?;
    fs::create_dir_all(&args.out)?;
    let mut written = 0;
    let mut failure = None;
    for i in 0..args.count {
        let seed = args.seed.wrapping_add(u64::from(i));
        let result = generate_one(sig, seed, |spec| {
            spec.width = args.width;
            spec.height = args.height;
            spec.max_attempts = args.max_attempts;
            spec.require_disagreement = args.require_disagreement;
        });
        match result {
            Ok((id, g)) => {
                let path = args.out.join(task_file_name(sig, seed));
                let file = TaskFile::from_task(Some(id), &g.task, Metadata::from(&g.report));
                write_atomic(&path, file.to_json().as_bytes())?;
                writeln!(
                    out,
                    "wrote {} signature {sig} attempts {}",
                    path.display(),
                    g.report.attempts
                )?;
                written += 1;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    match failure {
        None => Ok(()),
        Some(SimulateError::InvalidSpec(m)) => Err(CliError::Usage(m)),
        Some(e) => {
            writeln!(
                err,
                "generated {written} of {} task(s); kept partial outputs in {}",
                args.count,
                args.out.display()
            )?;
            Err(domain(e))
        }
    }
}

fn parse_signature_list(specs: &[String]) -> Result<Vec<ComplexitySignature>, CliError> {
    let mut sigs = Vec::new();
    for s in specs {
        if s == "standard" {
            sigs.extend(STANDARD_SIGNATURES);
            continue;
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let nums: Vec<u8> = parts
            .iter()
            .map(|p| p.parse::<u8>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                CliError::Usage(format!("--gen expects `standard` or `k,n,c`, got `{s}`"))
            })?;
        match nums.as_slice() {
            [k, n, c] => sigs.push(signature_from(*k, *n, *c)?),
            _ => {
                return Err(CliError::Usage(format!(
                    "--gen expects `standard` or `k,n,c`, got `{s}`"
                )))
            }
        }
    }
    Ok(sigs)
}

fn cmd_simulate(
    args: &SimulateArgs,
    out: &mut dyn Write,
    _err: &mut dyn Write,
) -> Result<(), CliError> {
    if !args.noise.is_finite() || args.noise < 0.0 {
        return Err(CliError::Usage(format!(
            "--noise must be >= 0, got {}",
            args.noise
        )));
    }
    let config = args.betas.config(args.model.into())?;
    let tasks: Vec<StudyTask> = match &args.tasks {
        Some(dir) => load_task_dir(dir)?.into_iter().map(|t| t.study).collect(),
        None => {
            let mut tasks = Vec::new();
            for sig in parse_signature_list(&args.gen)? {
                let (id, g) = generate_one(sig, args.seed, |spec| spec.require_disagreement = true)
                    .map_err(domain)?;
                tasks.push(StudyTask { id, task: g.task });
            }
            tasks
        }
    };
    let records = synth_participants(&tasks, config, args.noise, args.participants, args.seed)
        .map_err(domain)?;
    let csv = participants_to_csv(&records);
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_analyze(
    args: &AnalyzeArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let config = args.betas.config(ModelKind::Full)?;
    let tasks: Vec<StudyTask> = load_task_dir(&args.tasks)?
        .into_iter()
        .map(|t| t.study)
        .collect();
    let records = load_participants(&args.participants)?;
    let report = match analyze(&tasks, &records, config) {
        Ok(r) => r,
        Err(AnalysisError::NoParticipants) => {
            let design = planpred::analysis::Design::from_tasks(&tasks);
            let groups = planpred::analysis::group_by_participant(&records);
            if let Ok((_, log)) = planpred::analysis::exclude_invalid(&groups, &design) {
                for e in log {
                    writeln!(
                        err,
                        "excluded {} (task {}): {}",
                        e.participant_id, e.task_id, e.reason
                    )?;
                }
            }
            return Err(domain("no valid participants"));
        }
        Err(e) => return Err(domain(e)),
    };

    fs::create_dir_all(&args.out)?;
    for (name, contents) in report_csvs(&report, &tasks) {
        write_atomic(&args.out.join(name), contents.as_bytes())?;
    }
    for t in &tasks {
        let rows: Vec<_> = report
            .per_task
            .iter()
            .filter(|r| r.task_id == t.id)
            .collect();
        let pick = |m: ModelKind| {
            rows.iter()
                .find(|r| r.model == m)
                .map(|r| r.posterior.clone())
                .unwrap_or_default()
        };
        let chart = TaskChart {
            title: t.id.clone(),
            candidates: t.candidate_ids(),
            full: pick(ModelKind::Full),
            ppo: pick(ModelKind::Ppo),
            human: rows.first().map(|r| r.human.clone()),
        };
        write_atomic(
            &args.out.join(format!("task-{}.svg", t.id)),
            task_chart(&chart).as_bytes(),
        )?;
    }

    writeln!(
        out,
        "participants: {} valid, {} excluded; vector length {}",
        report.valid_participants.len(),
        report
            .exclusions
            .iter()
            .map(|e| e.participant_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        report.human_vector.len()
    )?;
    let overall: Vec<Vec<String>> = report
        .overall
        .iter()
        .map(|o| {
            vec![
                o.model.to_string(),
                sig6(o.correlation.r),
                sig6(o.correlation.p_value),
            ]
        })
        .collect();
    out.write_all(render_table(&["model", "r", "p_value"], &overall).as_bytes())?;
    writeln!(
        out,
        "paired t (ppo - full): t={} p={} df={}",
        sig6(report.t_test.t),
        sig6(report.t_test.p_value),
        report.t_test.df
    )?;
    for (c, model) in report
        .complexity
        .iter()
        .zip([ModelKind::Full, ModelKind::Ppo])
    {
        match c {
            Ok(c) => writeln!(
                out,
                "complexity ({model}): r={} p={}",
                sig6(c.correlation.r),
                sig6(c.correlation.p_value)
            )?,
            Err(e) => writeln!(out, "complexity ({model}): {e}")?,
        }
    }
    let t = &report.beta_fit.table;
    writeln!(
        out,
        "mean r: full={} ppo_same={} ppo_individual={}; modal beta3={}",
        sig6(t.full),
        sig6(t.ppo_same),
        sig6(t.ppo_individual),
        sig6(report.beta_fit.modal_beta3())
    )?;
    writeln!(out, "report written to {}", args.out.display())?;
    Ok(())
}
