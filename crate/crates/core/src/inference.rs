//! Goal posteriors under Boltzmann-rational plan models.
//!
//! Both models share the same skeleton, `P(g | a) ∝ Σ_{p ∈ P_g} w(p, a) · P(p | g)`
//! with a uniform goal prior, and differ only in the plan/observation term
//! `w`:
//!
//! * **full inverse planning** uses `P(a | p)`, a softmax of `-β₂ · cost(p - a)`
//!   taken over the plans of the same goal;
//! * **plan predictability oriented** uses `P(p | a)`, a softmax of
//!   `-β₃ · cost(p - a)` taken over the plans of every candidate goal.
//!
//! The plan prior `P(p | g)` is a softmax of `-β₁ · cost(p)`. In
//! [`Normalization::Conventional`] its normalizer is shared by all candidate
//! plans, so it cancels when goals are compared and a goal's weight grows
//! with both the quality and the number of its plans. All arithmetic is done
//! in log space with max-subtraction.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gridworld::{validate_grid, Grid, Violation};
use crate::plans::{score_plans, GoalProduct, GoalScores, Observation, PlanError, ScoredPlan};

/// Probabilities below this are reported as exactly zero.
pub const FLUSH_TO_ZERO: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("softmax over an empty list")]
    EmptyInput,
    #[error("no feasible support: every value is -inf")]
    NoFeasibleSupport,
    #[error("observation inconsistent with all plans of candidates [{}]", .0.join(", "))]
    NoFeasibleGoal(Vec<String>),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelKind {
    #[default]
    Full,
    Ppo,
}

impl ModelKind {
    pub fn token(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Ppo => "ppo",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ModelKind::Full),
            "ppo" => Ok(ModelKind::Ppo),
            other => Err(format!("unknown model `{other}` (expected full or ppo)")),
        }
    }
}

/// How the plan prior and the predictability term are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Normalization {
    /// Plan prior shares one normalizer across all candidate plans;
    /// predictability is normalized over all candidate plans.
    #[default]
    Conventional,
    /// Printed normalizations: the plan prior is normalized over the goals
    /// that own the plan, and predictability is normalized per goal.
    PaperLiteral,
}

impl Normalization {
    pub fn token(self) -> &'static str {
        match self {
            Normalization::Conventional => "conventional",
            Normalization::PaperLiteral => "paper_literal",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Normalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(Normalization::Conventional),
            "paper_literal" => Ok(Normalization::PaperLiteral),
            other => Err(format!(
                "unknown normalization `{other}` (expected conventional or paper_literal)"
            )),
        }
    }
}

/// Rationality parameters and model choice.
///
/// `beta1` drives the plan prior, `beta2` the full model's action
/// likelihood and `beta3` the plan predictability bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub model: ModelKind,
    pub normalization: Normalization,
}

impl ModelConfig {
    pub const DEFAULT_BETA1: f64 = 0.3;
    pub const DEFAULT_BETA2: f64 = 0.3;
    pub const DEFAULT_BETA3: f64 = 0.5;

    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64, beta3: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self.beta3 = beta3;
        self
    }

    pub fn with_model(mut self, model: ModelKind) -> Self {
        self.model = model;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            if !b.is_finite() || b < 0.0 {
                return Err(InferenceError::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {b}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            beta1: Self::DEFAULT_BETA1,
            beta2: Self::DEFAULT_BETA2,
            beta3: Self::DEFAULT_BETA3,
            model: ModelKind::Full,
            normalization: Normalization::Conventional,
        }
    }
}

/// An inference problem: the world, what was observed, and the candidate
/// goals shown to the observer.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub grid: Grid,
    pub observation: Observation,
    pub candidates: Vec<GoalProduct>,
}

impl Task {
    pub fn new(
        grid: Grid,
        observation: Observation,
        candidates: Vec<GoalProduct>,
    ) -> Result<Self, InferenceError> {
        let task = Self {
            grid,
            observation,
            candidates,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let join = |v: Vec<Violation>| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        };
        validate_grid(&self.grid).map_err(|v| InferenceError::InvalidTask(join(v)))?;
        crate::gridworld::validate_path(&self.grid, self.observation.path())
            .map_err(|v| InferenceError::InvalidTask(join(v)))?;
        if self.candidates.is_empty() {
            return Err(InferenceError::InvalidTask("no candidate goals".into()));
        }
        let mut ids: Vec<&str> = self.candidates.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(InferenceError::InvalidTask(format!(
                "duplicate candidate id `{}`",
                w[0]
            )));
        }
        Ok(())
    }

    pub fn scores(&self) -> Result<Vec<GoalScores>, InferenceError> {
        Ok(score_plans(
            &self.grid,
            &self.candidates,
            &self.observation,
        )?)
    }
}

/// `P(g | a)` for each candidate, in candidate order, plus the config that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalPosterior {
    pub probs: Vec<(String, f64)>,
    pub config: ModelConfig,
}

impl GoalPosterior {
    pub fn get(&self, goal_id: &str) -> Option<f64> {
        self.probs
            .iter()
            .find(|(id, _)| id == goal_id)
            .map(|(_, p)| *p)
    }

    pub fn values(&self) -> Vec<f64> {
        self.probs.iter().map(|(_, p)| *p).collect()
    }

    /// Index of the most probable candidate; ties resolve to the earliest.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, (_, p)) in self.probs.iter().enumerate() {
            if *p > self.probs[best].1 {
                best = i;
            }
        }
        best
    }

    pub fn argmax_id(&self) -> &str {
        &self.probs[self.argmax()].0
    }
}

/// `P(p | a)` aligned with the [`GoalScores`] it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanPredictability {
    pub probs: Vec<Vec<f64>>,
}

fn logsumexp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-probabilities of a Boltzmann distribution over `values`.
/// Entries equal to `-inf` get `-inf` for every `beta`, including zero.
pub fn log_softmax(values: &[f64], beta: f64) -> Result<Vec<f64>, InferenceError> {
    if values.is_empty() {
        return Err(InferenceError::EmptyInput);
    }
    let scaled: Vec<f64> = values
        .iter()
        .map(|&v| if v == f64::NEG_INFINITY { v } else { beta * v })
        .collect();
    let norm = logsumexp(scaled.iter().copied());
    if norm == f64::NEG_INFINITY {
        return Err(InferenceError::NoFeasibleSupport);
    }
    Ok(scaled.into_iter().map(|z| z - norm).collect())
}

fn flush(p: f64) -> f64 {
    if p < FLUSH_TO_ZERO {
        0.0
    } else {
        p
    }
}

/// `p_i = exp(β v_i) / Σ_j exp(β v_j)`.
pub fn softmax(values: &[f64], beta: f64) -> Result<Vec<f64>, InferenceError> {
    Ok(log_softmax(values, beta)?
        .into_iter()
        .map(|l| flush(l.exp()))
        .collect())
}

fn neg_cost(plan: &ScoredPlan) -> f64 {
    -f64::from(plan.cost)
}

fn neg_remaining(plan: &ScoredPlan) -> f64 {
    plan.remaining_cost
        .map_or(f64::NEG_INFINITY, |c| -f64::from(c))
}

fn log_plan_prior(scored: &[ScoredPlan], beta1: f64) -> Result<Vec<f64>, InferenceError> {
    let q: Vec<f64> = scored.iter().map(neg_cost).collect();
    log_softmax(&q, beta1)
}

/// Boltzmann plan choice `P(p | g)` over the given plans, from `-cost(p)`.
pub fn plan_prior(scored: &[ScoredPlan], beta1: f64) -> Result<Vec<f64>, InferenceError> {
    Ok(log_plan_prior(scored, beta1)?
        .into_iter()
        .map(|l| flush(l.exp()))
        .collect())
}

fn log_full_likelihood(scored: &[ScoredPlan], beta2: f64) -> Option<Vec<f64>> {
    let q: Vec<f64> = scored.iter().map(neg_remaining).collect();
    log_softmax(&q, beta2).ok()
}

/// `P(a | p)` over one goal's plans, from `-cost(p - a)`. `None` when no
/// plan of the goal is consistent with the observation.
pub fn full_likelihood(scored: &[ScoredPlan], beta2: f64) -> Option<Vec<f64>> {
    log_full_likelihood(scored, beta2).map(|v| v.into_iter().map(|l| flush(l.exp())).collect())
}

fn log_plan_predictability(
    scored: &[GoalScores],
    beta3: f64,
    normalization: Normalization,
) -> Result<Vec<Vec<f64>>, InferenceError> {
    let no_goal =
        || InferenceError::NoFeasibleGoal(scored.iter().map(|g| g.goal_id.clone()).collect());
    match normalization {
        Normalization::Conventional => {
            let flat: Vec<f64> = scored
                .iter()
                .flat_map(|g| g.plans.iter().map(neg_remaining))
                .collect();
            let logp = log_softmax(&flat, beta3).map_err(|_| no_goal())?;
            let mut it = logp.into_iter();
            Ok(scored
                .iter()
                .map(|g| it.by_ref().take(g.plans.len()).collect())
                .collect())
        }
        Normalization::PaperLiteral => {
            let out: Vec<Vec<f64>> = scored
                .iter()
                .map(|g| {
                    log_full_likelihood(&g.plans, beta3)
                        .unwrap_or_else(|| vec![f64::NEG_INFINITY; g.plans.len()])
                })
                .collect();
            if out.iter().flatten().all(|l| *l == f64::NEG_INFINITY) {
                return Err(no_goal());
            }
            Ok(out)
        }
    }
}

/// `P(p | a)` for every plan of every candidate.
pub fn plan_predictability(
    scored: &[GoalScores],
    beta3: f64,
    normalization: Normalization,
) -> Result<PlanPredictability, InferenceError> {
    let logp = log_plan_predictability(scored, beta3, normalization)?;
    Ok(PlanPredictability {
        probs: logp
            .into_iter()
            .map(|g| g.into_iter().map(|l| flush(l.exp())).collect())
            .collect(),
    })
}

/// Log plan prior for every candidate plan, aligned with `scored`.
fn log_priors(
    scored: &[GoalScores],
    beta1: f64,
    normalization: Normalization,
) -> Result<Vec<Vec<f64>>, InferenceError> {
    match normalization {
        Normalization::Conventional => {
            let flat: Vec<ScoredPlan> = scored
                .iter()
                .flat_map(|g| g.plans.iter().cloned())
                .collect();
            if flat.is_empty() {
                return Ok(scored.iter().map(|_| Vec::new()).collect());
            }
            let logp = log_plan_prior(&flat, beta1)?;
            let mut it = logp.into_iter();
            Ok(scored
                .iter()
                .map(|g| it.by_ref().take(g.plans.len()).collect())
                .collect())
        }
        Normalization::PaperLiteral => {
            // Normalized over the goals g' with p ∈ P_g'. Q_g'(p) = -cost(p)
            // is the same for every owner, so each owner gets an equal share.
            Ok(scored
                .iter()
                .map(|g| {
                    g.plans
                        .iter()
                        .map(|sp| {
                            let owners = scored
                                .iter()
                                .filter(|other| {
                                    other
                                        .plans
                                        .iter()
                                        .any(|o| o.plan.assignment == sp.plan.assignment)
                                })
                                .count();
                            let q = vec![neg_cost(sp); owners];
                            log_softmax(&q, beta1).map(|l| l[0])
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?)
        }
    }
}

fn normalize_goals(
    scored: &[GoalScores],
    log_weights: Vec<f64>,
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    let probs = log_softmax(&log_weights, 1.0).map_err(|_| {
        InferenceError::NoFeasibleGoal(scored.iter().map(|g| g.goal_id.clone()).collect())
    })?;
    Ok(GoalPosterior {
        probs: scored
            .iter()
            .zip(probs)
            .map(|(g, l)| (g.goal_id.clone(), flush(l.exp())))
            .collect(),
        config,
    })
}

/// Full inverse planning posterior from pre-scored plans.
pub fn full_posterior_from_scores(
    scored: &[GoalScores],
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    config.validate()?;
    let priors = log_priors(scored, config.beta1, config.normalization)?;
    let weights = scored
        .iter()
        .zip(&priors)
        .map(
            |(g, prior)| match log_full_likelihood(&g.plans, config.beta2) {
                Some(lik) => logsumexp(lik.iter().zip(prior).map(|(l, p)| l + p)),
                None => f64::NEG_INFINITY,
            },
        )
        .collect();
    normalize_goals(scored, weights, config)
}

/// Plan predictability oriented posterior from pre-scored plans.
pub fn ppo_posterior_from_scores(
    scored: &[GoalScores],
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    config.validate()?;
    let priors = log_priors(scored, config.beta1, config.normalization)?;
    let pred = log_plan_predictability(scored, config.beta3, config.normalization)?;
    let weights = pred
        .iter()
        .zip(&priors)
        .map(|(pr, prior)| logsumexp(pr.iter().zip(prior).map(|(a, b)| a + b)))
        .collect();
    normalize_goals(scored, weights, config)
}

pub fn posterior_from_scores(
    scored: &[GoalScores],
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    match config.model {
        ModelKind::Full => full_posterior_from_scores(scored, config),
        ModelKind::Ppo => ppo_posterior_from_scores(scored, config),
    }
}

pub fn full_model_posterior(
    task: &Task,
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    full_posterior_from_scores(
        &task.scores()?,
        ModelConfig {
            model: ModelKind::Full,
            ..config
        },
    )
}

pub fn ppo_model_posterior(
    task: &Task,
    config: ModelConfig,
) -> Result<GoalPosterior, InferenceError> {
    ppo_posterior_from_scores(
        &task.scores()?,
        ModelConfig {
            model: ModelKind::Ppo,
            ..config
        },
    )
}

/// Posterior under the model selected by `config.model`.
pub fn infer(task: &Task, config: ModelConfig) -> Result<GoalPosterior, InferenceError> {
    match config.model {
        ModelKind::Full => full_model_posterior(task, config),
        ModelKind::Ppo => ppo_model_posterior(task, config),
    }
}
