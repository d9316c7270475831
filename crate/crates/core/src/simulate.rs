//! Noisy-rational agents, stimulus generation and synthetic observers.
//!
//! Stimuli are found by seeded rejection sampling: each attempt draws a
//! layout, lets a Boltzmann agent pick a plan for a random goal, cuts its
//! route at a point where exactly `n` part types have been collected, and
//! keeps the result only if it has the requested complexity signature (and,
//! optionally, the two models pick different goals). Every attempt owns an
//! RNG stream derived from `(seed, attempt)`, so the outcome does not depend
//! on evaluation order.

use std::collections::HashSet;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{ParticipantRecord, StudyTask};
use crate::gridworld::{
    collected_along, manhattan_distance, Grid, PartInstance, PartKind, Path, Position,
};
use crate::inference::{
    full_posterior_from_scores, infer, ppo_posterior_from_scores, GoalPosterior, InferenceError,
    ModelConfig, Task,
};
use crate::plans::{
    collected_kinds, enumerate_plans, score_plans, GoalProduct, Observation, Plan, PlanError,
    Requirement,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("goal `{0}` has no plan on this grid")]
    NoPlans(String),
    #[error("prefix of {requested} steps exceeds route length {available}")]
    PrefixTooLong { requested: u32, available: u32 },
    #[error("heterogeneous candidates: type counts {0:?}")]
    HeterogeneousCandidates(Vec<usize>),
    #[error("invalid complexity signature: {0}")]
    InvalidSignature(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("no task found after {attempts} attempts")]
    NoTaskFound { attempts: u32 },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Task complexity: goal type count `k`, collected type count `n`, and the
/// largest number of colors `c` among required types not yet collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexitySignature {
    pub k: u8,
    pub n: u8,
    pub c: u8,
}

impl ComplexitySignature {
    pub fn new(k: u8, n: u8, c: u8) -> Result<Self, SimulateError> {
        if !(2..=4).contains(&k) {
            return Err(SimulateError::InvalidSignature(format!(
                "k must be 2..=4, got {k}"
            )));
        }
        if n >= k {
            return Err(SimulateError::InvalidSignature(format!(
                "n must be < k, got n={n} k={k}"
            )));
        }
        if c < 1 {
            return Err(SimulateError::InvalidSignature("c must be >= 1".into()));
        }
        Ok(Self { k, n, c })
    }

    /// Remaining part types, `k - n`.
    pub fn remaining(&self) -> u8 {
        self.k - self.n
    }
}

impl fmt::Display for ComplexitySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.k, self.n, self.c)
    }
}

/// The nine `(k, n, c)` combinations used in the original stimulus set.
pub const STANDARD_SIGNATURES: [ComplexitySignature; 9] = [
    ComplexitySignature { k: 2, n: 1, c: 2 },
    ComplexitySignature { k: 3, n: 1, c: 2 },
    ComplexitySignature { k: 3, n: 2, c: 2 },
    ComplexitySignature { k: 4, n: 1, c: 2 },
    ComplexitySignature { k: 4, n: 2, c: 2 },
    ComplexitySignature { k: 4, n: 3, c: 2 },
    ComplexitySignature { k: 2, n: 1, c: 3 },
    ComplexitySignature { k: 3, n: 2, c: 3 },
    ComplexitySignature { k: 4, n: 3, c: 3 },
];

/// Parameters for [`generate_task`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub signature: ComplexitySignature,
    pub width: u32,
    pub height: u32,
    /// Colors available to every part type.
    pub palette: Vec<String>,
    /// Inclusive range of instances placed per (type, color).
    pub instances_per_color: (u32, u32),
    pub seed: u64,
    pub max_attempts: u32,
    pub require_disagreement: bool,
    /// Models used to judge disagreement and to rank candidates.
    pub config: ModelConfig,
}

impl GeneratorSpec {
    pub fn new(signature: ComplexitySignature, seed: u64) -> Self {
        Self {
            signature,
            width: 10,
            height: 10,
            palette: vec!["red".into(), "blue".into(), "green".into()],
            instances_per_color: (1, 3),
            seed,
            max_attempts: 10_000,
            require_disagreement: true,
            config: ModelConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidSpec(m));
        if self.max_attempts < 1 {
            return bad("max_attempts must be >= 1".into());
        }
        if self.width == 0 || self.height == 0 {
            return bad("grid must be non-empty".into());
        }
        let distinct: HashSet<&String> = self.palette.iter().collect();
        if distinct.len() != self.palette.len() || self.palette.is_empty() {
            return bad("palette must be non-empty with distinct colors".into());
        }
        if usize::from(self.signature.c) > self.palette.len() {
            return bad(format!(
                "c = {} needs at least {} colors, palette has {}",
                self.signature.c,
                self.signature.c,
                self.palette.len()
            ));
        }
        let (lo, hi) = self.instances_per_color;
        if lo < 1 || lo > hi {
            return bad(format!(
                "instances_per_color range {lo}..={hi} is empty or starts at 0"
            ));
        }
        self.config.validate()?;
        Ok(())
    }
}

/// A sampled agent: its goal, chosen plan and full route.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub goal_id: String,
    pub plan: Plan,
    pub path: Path,
}

/// Why each candidate was put on the list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateRole {
    FullArgmax,
    PpoArgmax,
    Low,
    Filler,
}

impl fmt::Display for CandidateRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateRole::FullArgmax => "full_argmax",
            CandidateRole::PpoArgmax => "ppo_argmax",
            CandidateRole::Low => "low",
            CandidateRole::Filler => "filler",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub attempts: u32,
    pub seed: u64,
    pub signature: ComplexitySignature,
    /// Candidate id of the goal the simulated agent actually pursued, if it
    /// made the candidate list.
    pub true_goal: Option<String>,
    pub argmax_full: String,
    pub argmax_ppo: String,
    pub roles: Vec<(String, CandidateRole)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTask {
    pub task: Task,
    pub report: GenerationReport,
}

/// Rng for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a plan for `goal` from the Boltzmann plan prior.
pub fn sample_plan<R: Rng + ?Sized>(
    grid: &Grid,
    goal: &GoalProduct,
    beta1: f64,
    rng: &mut R,
) -> Result<Plan, SimulateError> {
    let plans = enumerate_plans(grid, goal).plans;
    if plans.is_empty() {
        return Err(SimulateError::NoPlans(goal.id.clone()));
    }
    let q = plans
        .iter()
        .map(|p| crate::plans::plan_cost(grid, p).map(|c| -f64::from(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let probs = crate::inference::softmax(&q, beta1)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (plan, pr) in plans.iter().zip(&probs) {
        acc += pr;
        if u < acc {
            return Ok(plan.clone());
        }
    }
    // rounding left a sliver above the last cumulative sum
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(plans.len() - 1);
    Ok(plans[last].clone())
}

fn step_toward(from: Position, to: Position) -> Position {
    if from.x < to.x {
        Position::new(from.x + 1, from.y)
    } else if from.x > to.x {
        Position::new(from.x - 1, from.y)
    } else if from.y < to.y {
        Position::new(from.x, from.y + 1)
    } else {
        Position::new(from.x, from.y - 1)
    }
}

/// Shortest route through the plan's parts in priority order (moving along
/// x before y on every leg), cut after `prefix_steps` moves.
pub fn execute_plan(grid: &Grid, plan: &Plan, prefix_steps: u32) -> Result<Path, SimulateError> {
    let waypoints = plan.waypoints(grid)?;
    let full = crate::gridworld::route_cost(grid.agent_start, &waypoints);
    if prefix_steps > full {
        return Err(SimulateError::PrefixTooLong {
            requested: prefix_steps,
            available: full,
        });
    }
    let mut cells = vec![grid.agent_start];
    let mut here = grid.agent_start;
    'legs: for target in waypoints {
        while here != target {
            if cells.len() as u32 > prefix_steps {
                break 'legs;
            }
            here = step_toward(here, target);
            cells.push(here);
        }
    }
    cells.truncate(prefix_steps as usize + 1);
    Ok(Path::new(cells))
}

/// Samples a plan for `goal` and executes the whole route.
pub fn sample_trajectory<R: Rng + ?Sized>(
    grid: &Grid,
    goal: &GoalProduct,
    beta1: f64,
    rng: &mut R,
) -> Result<TrajectorySample, SimulateError> {
    let plan = sample_plan(grid, goal, beta1, rng)?;
    let full = crate::plans::plan_cost(grid, &plan)?;
    let path = execute_plan(grid, &plan, full)?;
    Ok(TrajectorySample {
        goal_id: goal.id.clone(),
        plan,
        path,
    })
}

pub fn complexity_signature(task: &Task) -> Result<ComplexitySignature, SimulateError> {
    let counts: Vec<usize> = task
        .candidates
        .iter()
        .map(GoalProduct::type_count)
        .collect();
    if counts.windows(2).any(|w| w[0] != w[1]) {
        return Err(SimulateError::HeterogeneousCandidates(counts));
    }
    let k = counts[0] as u8;
    let collected = collected_kinds(&task.observation);
    let n = collected.len() as u8;
    let required: HashSet<PartKind> = task.candidates.iter().flat_map(|g| g.kinds()).collect();
    let c = required
        .iter()
        .filter(|kind| !collected.contains(kind))
        .map(|&kind| {
            task.grid
                .parts
                .iter()
                .filter(|p| p.kind == kind)
                .map(|p| p.color.as_str())
                .collect::<HashSet<_>>()
                .len()
        })
        .max()
        .unwrap_or(0) as u8;
    ComplexitySignature::new(k, n, c)
}

/// Searches for a task with `spec.signature`; see the module docs.
pub fn generate_task(spec: &GeneratorSpec) -> Result<GeneratedTask, SimulateError> {
    spec.validate()?;
    (0..spec.max_attempts)
        .into_par_iter()
        .find_map_first(|attempt| {
            let mut rng = stream_rng(spec.seed, u64::from(attempt));
            try_generate(spec, &mut rng).map(|(task, mut report)| {
                report.attempts = attempt + 1;
                GeneratedTask { task, report }
            })
        })
        .ok_or(SimulateError::NoTaskFound {
            attempts: spec.max_attempts,
        })
}

fn kind_slug(kind: PartKind) -> &'static str {
    match kind {
        PartKind::Square => "sq",
        PartKind::Triangle => "tr",
        PartKind::SmallRectangle => "rc",
        PartKind::Circle => "ci",
    }
}

fn random_layout(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Option<Grid> {
    let ComplexitySignature { k, n, c } = spec.signature;
    let kinds = &PartKind::ALL[..k as usize];
    let decisive = rng.random_range(n..k);
    let mut parts = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let i = i as u8;
        let color_count = if i == decisive {
            c
        } else if i >= n {
            rng.random_range(1..=c)
        } else {
            rng.random_range(1..=spec.palette.len() as u8)
        };
        let mut palette = spec.palette.clone();
        palette.shuffle(rng);
        palette.truncate(color_count as usize);
        palette.sort();
        for color in palette {
            let count = rng.random_range(spec.instances_per_color.0..=spec.instances_per_color.1);
            for j in 0..count {
                parts.push(PartInstance::new(
                    format!("{}-{}-{}", kind_slug(kind), color, j),
                    kind,
                    color.clone(),
                    Position::new(0, 0),
                ));
            }
        }
    }
    let cells = (spec.width * spec.height) as usize;
    if parts.len() + 1 > cells {
        return None;
    }
    let mut positions: Vec<Position> = (0..spec.height)
        .flat_map(|y| (0..spec.width).map(move |x| Position::new(x, y)))
        .collect();
    positions.shuffle(rng);
    let agent_start = positions[0];
    for (part, &pos) in parts.iter_mut().zip(&positions[1..]) {
        part.pos = pos;
    }
    Some(Grid::new(spec.width, spec.height, agent_start, parts))
}

fn colors_of(grid: &Grid, kind: PartKind) -> Vec<String> {
    let mut colors: Vec<String> = grid
        .parts
        .iter()
        .filter(|p| p.kind == kind)
        .map(|p| p.color.clone())
        .collect();
    colors.sort();
    colors.dedup();
    colors
}

/// Every goal product over the first `k` kinds using colors on the grid.
fn goal_pool(grid: &Grid, k: u8) -> Vec<GoalProduct> {
    let mut combos: Vec<Vec<Requirement>> = vec![Vec::new()];
    for &kind in &PartKind::ALL[..k as usize] {
        let colors = colors_of(grid, kind);
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                colors.iter().map(move |color| {
                    let mut next = prefix.clone();
                    next.push(Requirement::new(kind, color.clone()));
                    next
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|req| {
            let id = req
                .iter()
                .map(|r| r.color.as_str())
                .collect::<Vec<_>>()
                .join("-");
            GoalProduct::new(id, req).expect("pool goals have distinct kinds")
        })
        .collect()
}

/// Cut points (in steps) at which exactly `n` parts of `route` have been
/// reached.
fn prefix_window(grid: &Grid, plan: &Plan, n: u8) -> Result<(u32, u32), SimulateError> {
    let waypoints = plan.waypoints(grid)?;
    let mut arrivals = vec![0u32];
    let mut here = grid.agent_start;
    let mut total = 0;
    for w in &waypoints {
        total += manhattan_distance(here, *w);
        arrivals.push(total);
        here = *w;
    }
    let n = n as usize;
    Ok((arrivals[n], arrivals[n + 1] - 1))
}

fn strict_argmax(post: &GoalPosterior, margin: f64) -> Option<usize> {
    let best = post.argmax();
    let top = post.probs[best].1;
    let clear = post
        .probs
        .iter()
        .enumerate()
        .all(|(i, (_, p))| i == best || top - p > margin);
    clear.then_some(best)
}

fn slot_differences(a: &GoalProduct, b: &GoalProduct) -> usize {
    a.required()
        .iter()
        .zip(b.required())
        .filter(|(x, y)| x.color != y.color)
        .count()
}

fn color_multiset(g: &GoalProduct) -> Vec<&str> {
    let mut colors: Vec<&str> = g.required().iter().map(|r| r.color.as_str()).collect();
    colors.sort_unstable();
    colors
}

fn try_generate(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Option<(Task, GenerationReport)> {
    let sig = spec.signature;
    let grid = random_layout(spec, rng)?;
    let pool = goal_pool(&grid, sig.k);
    if pool.len() < 4 {
        return None;
    }

    let true_goal = pool.choose(rng)?.clone();
    let plan = sample_plan(&grid, &true_goal, spec.config.beta1, rng).ok()?;
    let (lo, hi) = prefix_window(&grid, &plan, sig.n).ok()?;
    if lo > hi {
        return None;
    }
    let steps = rng.random_range(lo..=hi);
    let path = execute_plan(&grid, &plan, steps).ok()?;
    let picked: Vec<&str> = collected_along(&grid, &path)
        .iter()
        .map(|p| p.id.as_str())
        .collect();
    let intended: Vec<&str> = plan.part_ids().take(sig.n as usize).collect();
    if picked != intended {
        return None;
    }
    let observation = Observation::new(&grid, path).ok()?;

    let scored = score_plans(&grid, &pool, &observation).ok()?;
    let full = full_posterior_from_scores(&scored, spec.config).ok()?;
    let ppo = ppo_posterior_from_scores(&scored, spec.config).ok()?;
    let i_full = strict_argmax(&full, 1e-6)?;
    let i_ppo = strict_argmax(&ppo, 1e-6)?;
    if spec.require_disagreement && i_full == i_ppo {
        return None;
    }

    let mut chosen: Vec<(usize, CandidateRole)> = vec![(i_full, CandidateRole::FullArgmax)];
    if i_ppo != i_full {
        chosen.push((i_ppo, CandidateRole::PpoArgmax));
    }
    let high = |i: usize| full.probs[i].1.max(ppo.probs[i].1);
    let feasible = |i: usize| scored[i].feasible_count() > 0;
    while chosen.len() < 3 {
        let taken: HashSet<usize> = chosen.iter().map(|c| c.0).collect();
        let rest = (0..pool.len()).filter(|i| !taken.contains(i));
        let pick = rest
            .min_by(|&a, &b| {
                (!feasible(a))
                    .cmp(&!feasible(b))
                    .then(high(a).total_cmp(&high(b)))
            })
            .expect("pool has at least four goals");
        chosen.push((pick, CandidateRole::Low));
    }
    {
        let taken: HashSet<usize> = chosen.iter().map(|c| c.0).collect();
        let multisets: HashSet<Vec<&str>> =
            chosen.iter().map(|c| color_multiset(&pool[c.0])).collect();
        let diversity = |i: usize| {
            let novel = !multisets.contains(&color_multiset(&pool[i]));
            let spread: usize = chosen
                .iter()
                .map(|c| slot_differences(&pool[i], &pool[c.0]))
                .sum();
            (novel, spread)
        };
        let pick = (0..pool.len())
            .filter(|i| !taken.contains(i))
            .max_by(|&a, &b| {
                diversity(a)
                    .cmp(&diversity(b))
                    .then(high(b).total_cmp(&high(a)))
                    .then(b.cmp(&a))
            })
            .expect("pool has at least four goals");
        chosen.push((pick, CandidateRole::Filler));
    }

    chosen.shuffle(rng);
    let labels = ["A", "B", "C", "D"];
    let mut candidates = Vec::new();
    let mut roles = Vec::new();
    let label_of = |pool_idx: usize| -> Option<String> {
        chosen
            .iter()
            .position(|c| c.0 == pool_idx)
            .map(|slot| labels[slot].to_string())
    };
    for (slot, &(idx, role)) in chosen.iter().enumerate() {
        let g = &pool[idx];
        candidates.push(GoalProduct::new(labels[slot], g.required().to_vec()).ok()?);
        roles.push((labels[slot].to_string(), role));
    }
    let true_idx = pool.iter().position(|g| g.id == true_goal.id)?;
    let report = GenerationReport {
        attempts: 0,
        seed: spec.seed,
        signature: sig,
        true_goal: label_of(true_idx),
        argmax_full: label_of(i_full)?,
        argmax_ppo: label_of(i_ppo)?,
        roles,
    };
    let task = Task::new(grid, observation, candidates).ok()?;
    if complexity_signature(&task).ok()? != sig {
        return None;
    }
    Some((task, report))
}

/// Synthetic observers answering every task from the posterior of `config`.
///
/// Each participant maps the posteriors affinely from `[0, max posterior]`
/// (the largest probability over all tasks) onto the 1–7 scale, adds
/// Gaussian noise truncated at two standard deviations, rounds and clamps.
/// The selected candidate is the highest score, ties broken by posterior.
pub fn synth_participants(
    tasks: &[StudyTask],
    config: ModelConfig,
    noise_sd: f64,
    count: u32,
    seed: u64,
) -> Result<Vec<ParticipantRecord>, SimulateError> {
    if count < 1 {
        return Err(SimulateError::InvalidSpec(
            "participant count must be >= 1".into(),
        ));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(SimulateError::InvalidSpec(format!(
            "noise sd must be >= 0, got {noise_sd}"
        )));
    }
    let posteriors = tasks
        .iter()
        .map(|t| infer(&t.task, config))
        .collect::<Result<Vec<_>, _>>()?;
    let top = posteriors
        .iter()
        .flat_map(|p| p.values())
        .fold(0.0f64, f64::max);
    let noise = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");

    let width = count.to_string().len().max(3);
    let mut records = Vec::new();
    for i in 0..count {
        let mut rng = stream_rng(seed, u64::from(i));
        let participant_id = format!("P{:0width$}", i + 1);
        for (t, post) in tasks.iter().zip(&posteriors) {
            let scores: Vec<(String, u8)> = post
                .probs
                .iter()
                .map(|(id, p)| {
                    let base = if top > 0.0 { 1.0 + 6.0 * p / top } else { 1.0 };
                    let e = if noise_sd > 0.0 {
                        loop {
                            let z: f64 = noise.sample(&mut rng);
                            if z.abs() <= 2.0 * noise_sd {
                                break z;
                            }
                        }
                    } else {
                        0.0
                    };
                    (id.clone(), (base + e).round().clamp(1.0, 7.0) as u8)
                })
                .collect();
            let mut best = 0;
            for j in 1..scores.len() {
                let better = scores[j].1 > scores[best].1
                    || (scores[j].1 == scores[best].1 && post.probs[j].1 > post.probs[best].1);
                if better {
                    best = j;
                }
            }
            records.push(ParticipantRecord {
                participant_id: participant_id.clone(),
                task_id: t.id.clone(),
                selected: scores[best].0.clone(),
                scores,
            });
        }
    }
    Ok(records)
}
