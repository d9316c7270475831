//! On-disk formats: JSON task files, participant CSVs, posterior CSVs and
//! the analysis report bundle. Writers go through a temp file in the target
//! directory and rename it into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AnalysisReport, ParticipantRecord, StudyTask};
use crate::gridworld::{Grid, PartInstance, PartKind, Path, Position};
use crate::inference::{GoalPosterior, InferenceError, Task};
use crate::plans::{GoalProduct, GoalScores, Observation, Requirement};
use crate::simulate::{complexity_signature, GenerationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    /// The file could not be read as the expected structure.
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    /// The file parsed but describes an invalid task or record set.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl FormatError {
    pub fn is_parse(&self) -> bool {
        matches!(self, FormatError::Parse { .. } | FormatError::Io { .. })
    }

    fn io(path: &FsPath, source: io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn parse(path: &FsPath, message: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    fn invalid(path: &FsPath, message: impl Into<String>) -> Self {
        FormatError::Invalid {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartType {
    Square,
    Triangle,
    SmallRectangle,
    Circle,
}

impl From<PartType> for PartKind {
    fn from(t: PartType) -> Self {
        match t {
            PartType::Square => PartKind::Square,
            PartType::Triangle => PartKind::Triangle,
            PartType::SmallRectangle => PartKind::SmallRectangle,
            PartType::Circle => PartKind::Circle,
        }
    }
}

impl From<PartKind> for PartType {
    fn from(k: PartKind) -> Self {
        match k {
            PartKind::Square => PartType::Square,
            PartKind::Triangle => PartType::Triangle,
            PartKind::SmallRectangle => PartType::SmallRectangle,
            PartKind::Circle => PartType::Circle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDto {
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDto {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: PartType,
    pub color: String,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDto {
    pub width: u32,
    pub height: u32,
    pub agent_start: CellDto,
    pub parts: Vec<PartDto>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationDto {
    /// `[x, y]` cells, starting at the agent's start cell.
    pub path: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementDto {
    #[serde(rename = "type")]
    pub kind: PartType,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateDto {
    pub id: String,
    pub required: Vec<RequirementDto>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<[u8; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_full: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_ppo: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<String, String>,
}

impl Metadata {
    pub fn is_empty(&self) -> bool {
        self == &Metadata::default()
    }
}

impl From<&GenerationReport> for Metadata {
    fn from(r: &GenerationReport) -> Self {
        let s = r.signature;
        Metadata {
            signature: Some([s.k, s.n, s.c]),
            seed: Some(r.seed),
            attempts: Some(r.attempts),
            true_goal: r.true_goal.clone(),
            argmax_full: Some(r.argmax_full.clone()),
            argmax_ppo: Some(r.argmax_ppo.clone()),
            roles: r
                .roles
                .iter()
                .map(|(id, role)| (id.clone(), role.to_string()))
                .collect(),
        }
    }
}

/// JSON task file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub grid: GridDto,
    pub observation: ObservationDto,
    pub candidates: Vec<CandidateDto>,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    pub metadata: Metadata,
}

impl TaskFile {
    pub fn from_task(id: Option<String>, task: &Task, metadata: Metadata) -> Self {
        let g = &task.grid;
        TaskFile {
            schema_version: SCHEMA_VERSION,
            id,
            grid: GridDto {
                width: g.width,
                height: g.height,
                agent_start: CellDto {
                    x: g.agent_start.x,
                    y: g.agent_start.y,
                },
                parts: g
                    .parts
                    .iter()
                    .map(|p| PartDto {
                        id: p.id.clone(),
                        kind: p.kind.into(),
                        color: p.color.clone(),
                        x: p.pos.x,
                        y: p.pos.y,
                    })
                    .collect(),
            },
            observation: ObservationDto {
                path: task
                    .observation
                    .path()
                    .cells
                    .iter()
                    .map(|c| [c.x, c.y])
                    .collect(),
            },
            candidates: task
                .candidates
                .iter()
                .map(|c| CandidateDto {
                    id: c.id.clone(),
                    required: c
                        .required()
                        .iter()
                        .map(|r| RequirementDto {
                            kind: r.kind.into(),
                            color: r.color.clone(),
                        })
                        .collect(),
                })
                .collect(),
            metadata,
        }
    }

    /// Builds and validates the task. Errors are human-readable.
    pub fn to_task(&self) -> Result<Task, String> {
        let g = &self.grid;
        let parts = g
            .parts
            .iter()
            .map(|p| {
                PartInstance::new(
                    p.id.clone(),
                    p.kind.into(),
                    p.color.clone(),
                    Position::new(p.x, p.y),
                )
            })
            .collect();
        let grid = Grid::new(
            g.width,
            g.height,
            Position::new(g.agent_start.x, g.agent_start.y),
            parts,
        );
        let join = |v: Vec<crate::gridworld::Violation>| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        };
        crate::gridworld::validate_grid(&grid).map_err(join)?;
        let path = Path::new(
            self.observation
                .path
                .iter()
                .map(|&[x, y]| Position::new(x, y))
                .collect(),
        );
        let observation = Observation::new(&grid, path).map_err(join)?;
        let candidates = self
            .candidates
            .iter()
            .map(|c| {
                GoalProduct::new(
                    c.id.clone(),
                    c.required
                        .iter()
                        .map(|r| Requirement::new(r.kind.into(), r.color.clone()))
                        .collect(),
                )
                .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Task::new(grid, observation, candidates).map_err(|e| match e {
            InferenceError::InvalidTask(m) => m,
            other => other.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task files always serialize");
        s.push('\n');
        s
    }
}

/// Parses JSON text into a task file, reporting the failing field path and
/// the line/column on error.
pub fn parse_task_file(text: &str) -> Result<TaskFile, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: TaskFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            inner.to_string()
        } else {
            format!("field `{field}`: {inner}")
        }
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        ));
    }
    Ok(file)
}

/// A task loaded from disk, with its file and metadata kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTask {
    pub source: PathBuf,
    pub study: StudyTask,
    pub metadata: Metadata,
}

pub fn load_task(path: &FsPath) -> Result<LoadedTask, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let file = parse_task_file(&text).map_err(|m| FormatError::parse(path, m))?;
    let task = file.to_task().map_err(|m| FormatError::invalid(path, m))?;
    let id = file.id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(LoadedTask {
        source: path.to_path_buf(),
        study: StudyTask { id, task },
        metadata: file.metadata,
    })
}

/// Loads every `*.json` file in `dir`, sorted by file name.
pub fn load_task_dir(dir: &FsPath) -> Result<Vec<LoadedTask>, FormatError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| FormatError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(FormatError::invalid(dir, "no task files (*.json) found"));
    }
    let tasks = files
        .iter()
        .map(|f| load_task(f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ids: Vec<&str> = tasks.iter().map(|t| t.study.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(FormatError::invalid(
            dir,
            format!("duplicate task id `{}`", w[0]),
        ));
    }
    Ok(tasks)
}

/// Writes `contents` to `path` by way of a temp file in the same directory.
pub fn write_atomic(path: &FsPath, contents: &[u8]) -> Result<(), FormatError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| FormatError::io(path, e))?;
    tmp.write_all(contents)
        .map_err(|e| FormatError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| FormatError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ParticipantRow {
    participant_id: String,
    task_id: String,
    candidate_id: String,
    score: u8,
    selected: u8,
}

pub fn participants_to_csv(records: &[ParticipantRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        for (cand, score) in &r.scores {
            w.serialize(ParticipantRow {
                participant_id: r.participant_id.clone(),
                task_id: r.task_id.clone(),
                candidate_id: cand.clone(),
                score: *score,
                selected: u8::from(*cand == r.selected),
            })
            .expect("in-memory csv write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

/// Parses participant rows into one record per (participant, task), in order
/// of first appearance. Scores must be integers in 1..=7 and each
/// (participant, task) must have exactly one selected row.
pub fn parse_participants_csv(text: &str) -> Result<Vec<ParticipantRecord>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    for col in [
        "participant_id",
        "task_id",
        "candidate_id",
        "score",
        "selected",
    ] {
        if !headers.iter().any(|h| h == col) {
            return Err(format!("missing column `{col}`"));
        }
    }
    let mut records: Vec<ParticipantRecord> = Vec::new();
    let mut selected_count: Vec<u32> = Vec::new();
    for row in rdr.deserialize::<ParticipantRow>() {
        let row = row.map_err(|e| e.to_string())?;
        let line = records.len();
        if !(1..=7).contains(&row.score) {
            return Err(format!(
                "participant `{}` task `{}` candidate `{}`: score {} outside 1..=7",
                row.participant_id, row.task_id, row.candidate_id, row.score
            ));
        }
        if row.selected > 1 {
            return Err(format!("selected must be 0 or 1, got {}", row.selected));
        }
        let idx = records
            .iter()
            .position(|r| r.participant_id == row.participant_id && r.task_id == row.task_id)
            .unwrap_or_else(|| {
                records.push(ParticipantRecord {
                    participant_id: row.participant_id.clone(),
                    task_id: row.task_id.clone(),
                    scores: Vec::new(),
                    selected: String::new(),
                });
                selected_count.push(0);
                line
            });
        let rec = &mut records[idx];
        if rec.scores.iter().any(|(c, _)| *c == row.candidate_id) {
            return Err(format!(
                "participant `{}` task `{}`: candidate `{}` scored twice",
                row.participant_id, row.task_id, row.candidate_id
            ));
        }
        if row.selected == 1 {
            rec.selected = row.candidate_id.clone();
            selected_count[idx] += 1;
        }
        rec.scores.push((row.candidate_id, row.score));
    }
    for (r, n) in records.iter().zip(&selected_count) {
        if *n != 1 {
            return Err(format!(
                "participant `{}` task `{}`: {n} selected rows (expected exactly 1)",
                r.participant_id, r.task_id
            ));
        }
    }
    Ok(records)
}

pub fn load_participants(path: &FsPath) -> Result<Vec<ParticipantRecord>, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_participants_csv(&text).map_err(|m| FormatError::parse(path, m))
}

/// One posterior row as printed by `infer --format csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub candidate_id: String,
    pub probability: f64,
    pub plans: usize,
    pub feasible_plans: usize,
    pub min_cost: Option<u32>,
    pub min_remaining_cost: Option<u32>,
}

pub fn posterior_rows(posterior: &GoalPosterior, scores: &[GoalScores]) -> Vec<PosteriorRow> {
    posterior
        .probs
        .iter()
        .zip(scores)
        .map(|((id, p), s)| PosteriorRow {
            candidate_id: id.clone(),
            probability: *p,
            plans: s.plans.len(),
            feasible_plans: s.feasible_count(),
            min_cost: s.min_cost(),
            min_remaining_cost: s.min_remaining_cost(),
        })
        .collect()
}

/// Full-precision CSV: floats use the shortest representation that parses
/// back to the same value.
pub fn posterior_to_csv(rows: &[PosteriorRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

pub fn parse_posterior_csv(text: &str) -> Result<Vec<PosteriorRow>, String> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())
}

/// Six significant digits, trailing zeros trimmed, always with a decimal
/// point or exponent so it reads as a real number.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("float round-trip");
    let mag = rounded.abs();
    let s = if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    };
    if s.contains(['.', 'e']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                s.push_str(&format!("{cell:<w$}", w = widths[i]));
            } else {
                s.push_str(&format!("{cell:>w$}", w = widths[i]));
            }
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn csv_string<R: Serialize>(rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

fn csv_with_header<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

#[derive(Serialize)]
struct OverallRow<'a> {
    model: &'a str,
    r: f64,
    p_value: f64,
    n: usize,
}

#[derive(Serialize)]
struct PerTaskRow<'a> {
    task_id: &'a str,
    model: &'a str,
    k: Option<u8>,
    n: Option<u8>,
    c: Option<u8>,
    k_minus_n: Option<u8>,
    r: Option<f64>,
    p_value: Option<f64>,
    status: &'a str,
}

#[derive(Serialize)]
struct PerParticipantRow<'a> {
    participant_id: &'a str,
    r_full: f64,
    r_ppo: f64,
    best_beta3: f64,
}

#[derive(Serialize)]
struct BetaFitRow<'a> {
    participant_id: &'a str,
    beta3: f64,
    r: f64,
    best: u8,
}

#[derive(Serialize)]
struct HistogramRow {
    beta3: f64,
    participants: usize,
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    model: &'a str,
    mean_r: f64,
}

#[derive(Serialize)]
struct TTestRow {
    t: f64,
    p_value: f64,
    df: usize,
    mean_difference: f64,
}

#[derive(Serialize)]
struct ComplexityRow<'a> {
    model: &'a str,
    r: Option<f64>,
    p_value: Option<f64>,
    n: Option<usize>,
    excluded_tasks: String,
    error: String,
}

#[derive(Serialize)]
struct VectorRow<'a> {
    task_id: &'a str,
    candidate_id: &'a str,
    human: f64,
    full: f64,
    ppo: f64,
}

#[derive(Serialize)]
struct ExclusionRow<'a> {
    participant_id: &'a str,
    task_id: &'a str,
    reason: String,
}

/// CSV reports of an analysis run, keyed by file name.
pub fn report_csvs(report: &AnalysisReport, tasks: &[StudyTask]) -> Vec<(String, String)> {
    let mut files = Vec::new();

    files.push((
        "overall.csv".to_string(),
        csv_string(report.overall.iter().map(|o| OverallRow {
            model: o.model.token(),
            r: o.correlation.r,
            p_value: o.correlation.p_value,
            n: o.correlation.n,
        })),
    ));

    let signature = |id: &str| {
        tasks
            .iter()
            .find(|t| t.id == id)
            .and_then(|t| complexity_signature(&t.task).ok())
    };
    files.push((
        "per_task.csv".to_string(),
        csv_string(report.per_task.iter().map(|row| {
            let sig = signature(&row.task_id);
            PerTaskRow {
                task_id: &row.task_id,
                model: row.model.token(),
                k: sig.map(|s| s.k),
                n: sig.map(|s| s.n),
                c: sig.map(|s| s.c),
                k_minus_n: row.remaining_types,
                r: row.correlation.map(|c| c.r),
                p_value: row.correlation.map(|c| c.p_value),
                status: if row.correlation.is_some() {
                    "ok"
                } else {
                    "degenerate"
                },
            }
        })),
    ));

    let best: BTreeMap<&str, f64> = report
        .beta_fit
        .results
        .iter()
        .map(|r| (r.participant_id.as_str(), r.best_beta3))
        .collect();
    files.push((
        "per_participant.csv".to_string(),
        csv_string(report.per_participant.iter().map(|p| PerParticipantRow {
            participant_id: &p.participant_id,
            r_full: p.r_full,
            r_ppo: p.r_ppo,
            best_beta3: best[p.participant_id.as_str()],
        })),
    ));

    files.push((
        "beta_fit.csv".to_string(),
        csv_string(report.beta_fit.results.iter().flat_map(|res| {
            res.per_beta_r.iter().map(move |&(b, r)| BetaFitRow {
                participant_id: &res.participant_id,
                beta3: b,
                r,
                best: u8::from(b == res.best_beta3),
            })
        })),
    ));

    files.push((
        "beta_histogram.csv".to_string(),
        csv_string(
            report
                .beta_fit
                .histogram
                .iter()
                .map(|&(beta3, participants)| HistogramRow {
                    beta3,
                    participants,
                }),
        ),
    ));

    let t = &report.beta_fit.table;
    files.push((
        "comparison.csv".to_string(),
        csv_string([
            ComparisonRow {
                model: "full",
                mean_r: t.full,
            },
            ComparisonRow {
                model: "ppo_same",
                mean_r: t.ppo_same,
            },
            ComparisonRow {
                model: "ppo_individual",
                mean_r: t.ppo_individual,
            },
        ]),
    ));

    let tt = &report.t_test;
    files.push((
        "t_test.csv".to_string(),
        csv_string([TTestRow {
            t: tt.t,
            p_value: tt.p_value,
            df: tt.df,
            mean_difference: tt.mean_difference,
        }]),
    ));

    files.push((
        "complexity.csv".to_string(),
        csv_string(
            report
                .complexity
                .iter()
                .zip([
                    crate::inference::ModelKind::Full,
                    crate::inference::ModelKind::Ppo,
                ])
                .map(|(c, model)| match c {
                    Ok(c) => ComplexityRow {
                        model: model.token(),
                        r: Some(c.correlation.r),
                        p_value: Some(c.correlation.p_value),
                        n: Some(c.correlation.n),
                        excluded_tasks: c.excluded.join(" "),
                        error: String::new(),
                    },
                    Err(e) => ComplexityRow {
                        model: model.token(),
                        r: None,
                        p_value: None,
                        n: None,
                        excluded_tasks: String::new(),
                        error: e.to_string(),
                    },
                }),
        ),
    ));

    let full = &report.overall[0].model_vector.0;
    let ppo = &report.overall[1].model_vector.0;
    let cells = report
        .design
        .tasks
        .iter()
        .flat_map(|(t, cs)| cs.iter().map(move |c| (t.as_str(), c.as_str())));
    files.push((
        "vectors.csv".to_string(),
        csv_string(
            cells
                .enumerate()
                .map(|(i, (task_id, candidate_id))| VectorRow {
                    task_id,
                    candidate_id,
                    human: report.human_vector.0[i],
                    full: full[i],
                    ppo: ppo[i],
                }),
        ),
    ));

    files.push((
        "exclusions.csv".to_string(),
        csv_with_header(
            &["participant_id", "task_id", "reason"],
            report.exclusions.iter().map(|e| ExclusionRow {
                participant_id: &e.participant_id,
                task_id: &e.task_id,
                reason: e.reason.to_string(),
            }),
        ),
    ));

    files
}
