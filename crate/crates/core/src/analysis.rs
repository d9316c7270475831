//! Participant data analysis: exclusion, score/model vectors, Pearson
//! correlations, paired t-tests, per-task complexity trends and per-person
//! fitting of the predictability bias.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::inference::{infer, GoalPosterior, InferenceError, ModelConfig, ModelKind, Task};
use crate::simulate::complexity_signature;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("incomplete record: participant `{participant}` task `{task}`: {detail}")]
    IncompleteRecord {
        participant: String,
        task: String,
        detail: String,
    },
    #[error("ordering mismatch: {0}")]
    OrderingMismatch(String),
    #[error("degenerate vector: {0}")]
    DegenerateVector(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("no valid participants")]
    NoParticipants,
    #[error("task `{task}`: {source}")]
    Inference {
        task: String,
        #[source]
        source: InferenceError,
    },
}

/// A task with the identifier participants refer to it by.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTask {
    pub id: String,
    pub task: Task,
}

impl StudyTask {
    pub fn candidate_ids(&self) -> Vec<String> {
        self.task.candidates.iter().map(|c| c.id.clone()).collect()
    }
}

/// One participant's answer to one task: a 1–7 score per candidate and the
/// candidate they picked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub task_id: String,
    pub scores: Vec<(String, u8)>,
    pub selected: String,
}

impl ParticipantRecord {
    pub fn score(&self, candidate: &str) -> Option<u8> {
        self.scores
            .iter()
            .find(|(c, _)| c == candidate)
            .map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub id: String,
    pub records: Vec<ParticipantRecord>,
}

impl Participant {
    fn record(&self, task_id: &str) -> Option<&ParticipantRecord> {
        self.records.iter().find(|r| r.task_id == task_id)
    }
}

/// Groups records by participant, keeping first-appearance order.
pub fn group_by_participant(records: &[ParticipantRecord]) -> Vec<Participant> {
    let mut out: Vec<Participant> = Vec::new();
    for r in records {
        match out.iter_mut().find(|p| p.id == r.participant_id) {
            Some(p) => p.records.push(r.clone()),
            None => out.push(Participant {
                id: r.participant_id.clone(),
                records: vec![r.clone()],
            }),
        }
    }
    out
}

/// Task order and, per task, candidate order. Fixes vector layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub tasks: Vec<(String, Vec<String>)>,
}

impl Design {
    pub fn from_tasks(tasks: &[StudyTask]) -> Self {
        Self {
            tasks: tasks
                .iter()
                .map(|t| (t.id.clone(), t.candidate_ids()))
                .collect(),
        }
    }

    pub fn vector_len(&self) -> usize {
        self.tasks.iter().map(|(_, c)| c.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    AllScoresEqual,
    SelectedNotHighest,
}

impl std::fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExclusionReason::AllScoresEqual => "same score for all candidates",
            ExclusionReason::SelectedNotHighest => "selected candidate not scored highest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub participant_id: String,
    pub task_id: String,
    pub reason: ExclusionReason,
}

fn check_complete(p: &Participant, design: &Design) -> Result<(), AnalysisError> {
    for (task_id, candidates) in &design.tasks {
        let incomplete = |detail: String| AnalysisError::IncompleteRecord {
            participant: p.id.clone(),
            task: task_id.clone(),
            detail,
        };
        let rec = p
            .record(task_id)
            .ok_or_else(|| incomplete("no record".into()))?;
        for c in candidates {
            let s = rec
                .score(c)
                .ok_or_else(|| incomplete(format!("no score for candidate `{c}`")))?;
            if !(1..=7).contains(&s) {
                return Err(incomplete(format!("score {s} for `{c}` outside 1..=7")));
            }
        }
        if rec.scores.len() != candidates.len() {
            return Err(incomplete(format!(
                "{} scores for {} candidates",
                rec.scores.len(),
                candidates.len()
            )));
        }
        if !candidates.contains(&rec.selected) {
            return Err(incomplete(format!(
                "selected unknown candidate `{}`",
                rec.selected
            )));
        }
    }
    Ok(())
}

/// Drops every participant who, on any task, gave all candidates the same
/// score or did not give the selected candidate the (possibly shared)
/// highest score. Returns the survivors and one log entry per violation.
pub fn exclude_invalid(
    participants: &[Participant],
    design: &Design,
) -> Result<(Vec<Participant>, Vec<Exclusion>), AnalysisError> {
    let mut valid = Vec::new();
    let mut log = Vec::new();
    for p in participants {
        check_complete(p, design)?;
        let mut ok = true;
        for (task_id, _) in &design.tasks {
            let rec = p.record(task_id).expect("checked complete");
            let max = rec.scores.iter().map(|(_, s)| *s).max().unwrap_or(0);
            let min = rec.scores.iter().map(|(_, s)| *s).min().unwrap_or(0);
            let mut flag = |reason| {
                ok = false;
                log.push(Exclusion {
                    participant_id: p.id.clone(),
                    task_id: task_id.clone(),
                    reason,
                });
            };
            if max == min {
                flag(ExclusionReason::AllScoresEqual);
            }
            if rec.score(&rec.selected) != Some(max) {
                flag(ExclusionReason::SelectedNotHighest);
            }
        }
        if ok {
            valid.push(p.clone());
        }
    }
    Ok((valid, log))
}

/// Scores or probabilities serialized in (task, candidate) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn score_vector(p: &Participant, design: &Design) -> Result<ScoreVector, AnalysisError> {
    let mut out = Vec::with_capacity(design.vector_len());
    for (task_id, candidates) in &design.tasks {
        let rec = p.record(task_id).ok_or_else(|| {
            AnalysisError::OrderingMismatch(format!(
                "participant `{}` has no task `{task_id}`",
                p.id
            ))
        })?;
        for c in candidates {
            let s = rec.score(c).ok_or_else(|| {
                AnalysisError::OrderingMismatch(format!(
                    "participant `{}` task `{task_id}` has no candidate `{c}`",
                    p.id
                ))
            })?;
            out.push(f64::from(s));
        }
    }
    Ok(ScoreVector(out))
}

/// Elementwise mean of the participants' score vectors.
pub fn average_score_vector(
    participants: &[Participant],
    design: &Design,
) -> Result<ScoreVector, AnalysisError> {
    if participants.is_empty() {
        return Err(AnalysisError::NoParticipants);
    }
    let mut sum = vec![0.0; design.vector_len()];
    for p in participants {
        for (acc, v) in sum.iter_mut().zip(score_vector(p, design)?.0) {
            *acc += v;
        }
    }
    let n = participants.len() as f64;
    Ok(ScoreVector(sum.into_iter().map(|s| s / n).collect()))
}

fn posteriors(
    tasks: &[StudyTask],
    config: ModelConfig,
) -> Result<Vec<GoalPosterior>, AnalysisError> {
    tasks
        .iter()
        .map(|t| {
            infer(&t.task, config).map_err(|source| AnalysisError::Inference {
                task: t.id.clone(),
                source,
            })
        })
        .collect()
}

/// Concatenated posteriors, in task order and each task's candidate order.
pub fn model_vector(
    tasks: &[StudyTask],
    config: ModelConfig,
) -> Result<ScoreVector, AnalysisError> {
    Ok(ScoreVector(
        posteriors(tasks, config)?
            .into_iter()
            .flat_map(|p| p.values())
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

fn two_tailed_t(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Sample Pearson correlation with a two-tailed p-value from
/// `t = r √((n-2)/(1-r²))` on `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationReport, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::TooFew { needed: 3, got: n });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateVector(
            if sxx == 0.0 {
                "first argument is constant"
            } else {
                "second argument is constant"
            }
            .into(),
        ));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let t = if r.abs() == 1.0 {
        f64::INFINITY
    } else {
        r * (df / (1.0 - r * r)).sqrt()
    };
    Ok(CorrelationReport {
        r,
        p_value: two_tailed_t(t, df),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestReport {
    pub t: f64,
    pub p_value: f64,
    pub df: usize,
    pub mean_difference: f64,
}

/// Paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestReport, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::TooFew { needed: 2, got: n });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let t = if var == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (var / n as f64).sqrt()
    };
    let p_value = if t == 0.0 {
        1.0
    } else {
        two_tailed_t(t, df as f64)
    };
    Ok(TTestReport {
        t,
        p_value,
        df,
        mean_difference: mean,
    })
}

/// Correlation of the averaged human scores with one model, for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCorrelation {
    pub task_id: String,
    pub model: ModelKind,
    /// `k - n`, when the task has a well-defined signature.
    pub remaining_types: Option<u8>,
    /// `None` when either vector is constant.
    pub correlation: Option<CorrelationReport>,
    pub human: Vec<f64>,
    pub posterior: Vec<f64>,
}

/// Per-task correlations for each configured model, task-major.
pub fn per_task_report(
    tasks: &[StudyTask],
    participants: &[Participant],
    configs: &[ModelConfig],
) -> Result<Vec<TaskCorrelation>, AnalysisError> {
    let mut out = Vec::new();
    let per_model: Vec<Vec<GoalPosterior>> = configs
        .iter()
        .map(|c| posteriors(tasks, *c))
        .collect::<Result<_, _>>()?;
    for (ti, t) in tasks.iter().enumerate() {
        let design = Design::from_tasks(std::slice::from_ref(t));
        let human = average_score_vector(participants, &design)?.0;
        let remaining = complexity_signature(&t.task).ok().map(|s| s.remaining());
        for (config, posts) in configs.iter().zip(&per_model) {
            let posterior = posts[ti].values();
            out.push(TaskCorrelation {
                task_id: t.id.clone(),
                model: config.model,
                remaining_types: remaining,
                correlation: pearson(&human, &posterior).ok(),
                human: human.clone(),
                posterior,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityCorrelation {
    pub model: ModelKind,
    pub correlation: CorrelationReport,
    /// Tasks left out because their per-task correlation was undefined.
    pub excluded: Vec<String>,
}

/// Correlates one model's per-task `r` with `k - n` across tasks.
pub fn complexity_correlation(
    rows: &[TaskCorrelation],
    model: ModelKind,
) -> Result<ComplexityCorrelation, AnalysisError> {
    let mut rs = Vec::new();
    let mut kn = Vec::new();
    let mut excluded = Vec::new();
    for row in rows.iter().filter(|r| r.model == model) {
        match (row.correlation, row.remaining_types) {
            (Some(c), Some(rem)) => {
                rs.push(c.r);
                kn.push(f64::from(rem));
            }
            _ => excluded.push(row.task_id.clone()),
        }
    }
    Ok(ComplexityCorrelation {
        model,
        correlation: pearson(&rs, &kn)?,
        excluded,
    })
}

/// `0.0, 0.1, …, 1.0`.
pub fn beta3_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaFitResult {
    pub participant_id: String,
    pub best_beta3: f64,
    pub per_beta_r: Vec<(f64, f64)>,
}

/// Average per-participant `r` for the full model, the predictability model
/// at the base `beta3`, and the predictability model at each participant's
/// best `beta3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonTable {
    pub full: f64,
    pub ppo_same: f64,
    pub ppo_individual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaFit {
    pub results: Vec<BetaFitResult>,
    pub histogram: Vec<(f64, usize)>,
    pub table: ComparisonTable,
}

impl BetaFit {
    /// Most frequent best `beta3`; ties go to the smaller value.
    pub fn modal_beta3(&self) -> f64 {
        let mut best = self.histogram[0];
        for &h in &self.histogram {
            if h.1 > best.1 {
                best = h;
            }
        }
        best.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn fit_beta3(
    participants: &[Participant],
    tasks: &[StudyTask],
    base: ModelConfig,
) -> Result<BetaFit, AnalysisError> {
    if participants.is_empty() {
        return Err(AnalysisError::NoParticipants);
    }
    let design = Design::from_tasks(tasks);
    let grid = beta3_grid();
    let ppo = ModelConfig {
        model: ModelKind::Ppo,
        ..base
    };
    let vectors = grid
        .iter()
        .map(|&b| model_vector(tasks, ModelConfig { beta3: b, ..ppo }))
        .collect::<Result<Vec<_>, _>>()?;
    let full_vec = model_vector(
        tasks,
        ModelConfig {
            model: ModelKind::Full,
            ..base
        },
    )?;
    let same_vec = model_vector(tasks, ppo)?;

    let mut results = Vec::new();
    let (mut full_rs, mut same_rs, mut indiv_rs) = (Vec::new(), Vec::new(), Vec::new());
    for p in participants {
        let human = score_vector(p, &design)?;
        let per_beta_r = grid
            .iter()
            .zip(&vectors)
            .map(|(&b, v)| pearson(&human.0, &v.0).map(|c| (b, c.r)))
            .collect::<Result<Vec<_>, _>>()?;
        let (best_beta3, best_r) =
            per_beta_r
                .iter()
                .copied()
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, (b, r)| {
                    if r > acc.1 {
                        (b, r)
                    } else {
                        acc
                    }
                });
        full_rs.push(pearson(&human.0, &full_vec.0)?.r);
        same_rs.push(pearson(&human.0, &same_vec.0)?.r);
        indiv_rs.push(best_r);
        results.push(BetaFitResult {
            participant_id: p.id.clone(),
            best_beta3,
            per_beta_r,
        });
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &results {
        let slot = grid
            .iter()
            .position(|&b| b == r.best_beta3)
            .expect("best is a grid value");
        *counts.entry(slot).or_default() += 1;
    }
    let histogram = grid
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, counts.get(&i).copied().unwrap_or(0)))
        .collect();
    Ok(BetaFit {
        results,
        histogram,
        table: ComparisonTable {
            full: mean(&full_rs),
            ppo_same: mean(&same_rs),
            ppo_individual: mean(&indiv_rs),
        },
    })
}

/// Correlation of the averaged human vector with one model vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OverallCorrelation {
    pub model: ModelKind,
    pub correlation: CorrelationReport,
    pub model_vector: ScoreVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantCorrelation {
    pub participant_id: String,
    pub r_full: f64,
    pub r_ppo: f64,
}

/// Everything the report bundle contains.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub design: Design,
    pub exclusions: Vec<Exclusion>,
    pub valid_participants: Vec<String>,
    pub human_vector: ScoreVector,
    pub overall: Vec<OverallCorrelation>,
    pub per_participant: Vec<ParticipantCorrelation>,
    pub t_test: TTestReport,
    pub per_task: Vec<TaskCorrelation>,
    pub complexity: Vec<Result<ComplexityCorrelation, AnalysisError>>,
    pub beta_fit: BetaFit,
}

/// Runs the whole comparison: exclusion, overall and per-participant
/// correlations, paired t-test, per-task correlations with the `k - n`
/// trend, and the `beta3` fit. `config.model` is ignored; both models run.
pub fn analyze(
    tasks: &[StudyTask],
    records: &[ParticipantRecord],
    config: ModelConfig,
) -> Result<AnalysisReport, AnalysisError> {
    let design = Design::from_tasks(tasks);
    let participants = group_by_participant(records);
    let (valid, exclusions) = exclude_invalid(&participants, &design)?;
    if valid.is_empty() {
        return Err(AnalysisError::NoParticipants);
    }
    let human_vector = average_score_vector(&valid, &design)?;
    let full_cfg = ModelConfig {
        model: ModelKind::Full,
        ..config
    };
    let ppo_cfg = ModelConfig {
        model: ModelKind::Ppo,
        ..config
    };

    let mut overall = Vec::new();
    for cfg in [full_cfg, ppo_cfg] {
        let mv = model_vector(tasks, cfg)?;
        overall.push(OverallCorrelation {
            model: cfg.model,
            correlation: pearson(&human_vector.0, &mv.0)?,
            model_vector: mv,
        });
    }

    let mut per_participant = Vec::new();
    for p in &valid {
        let v = score_vector(p, &design)?;
        per_participant.push(ParticipantCorrelation {
            participant_id: p.id.clone(),
            r_full: pearson(&v.0, &overall[0].model_vector.0)?.r,
            r_ppo: pearson(&v.0, &overall[1].model_vector.0)?.r,
        });
    }
    let ppo_rs: Vec<f64> = per_participant.iter().map(|c| c.r_ppo).collect();
    let full_rs: Vec<f64> = per_participant.iter().map(|c| c.r_full).collect();
    let t_test = if ppo_rs.len() >= 2 {
        paired_t_test(&ppo_rs, &full_rs)?
    } else {
        TTestReport {
            t: f64::NAN,
            p_value: f64::NAN,
            df: 0,
            mean_difference: ppo_rs
                .first()
                .zip(full_rs.first())
                .map_or(f64::NAN, |(a, b)| a - b),
        }
    };

    let per_task = per_task_report(tasks, &valid, &[full_cfg, ppo_cfg])?;
    let complexity = [ModelKind::Full, ModelKind::Ppo]
        .into_iter()
        .map(|m| complexity_correlation(&per_task, m))
        .collect();
    let beta_fit = fit_beta3(&valid, tasks, config)?;

    Ok(AnalysisReport {
        valid_participants: valid.iter().map(|p| p.id.clone()).collect(),
        design,
        exclusions,
        human_vector,
        overall,
        per_participant,
        t_test,
        per_task,
        complexity,
        beta_fit,
    })
}
