//! Plan enumeration and plan costs.
//!
//! A plan assigns one concrete part instance to every slot of a goal
//! product. The agent always collects slots in part-type priority order, so
//! a plan fixes a unique route and its cost is a plain waypoint route cost.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::gridworld::{
    collected_along, route_cost, validate_path, Grid, PartInstance, PartKind, Path, Position,
    Violation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown part `{0}`")]
    UnknownPart(String),
    #[error("goal `{goal}`: {reason}")]
    InvalidGoal { goal: String, reason: String },
}

/// One slot of a goal product: a part type in a given color.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Requirement {
    pub kind: PartKind,
    pub color: String,
}

impl Requirement {
    pub fn new(kind: PartKind, color: impl Into<String>) -> Self {
        Self {
            kind,
            color: color.into(),
        }
    }

    pub fn matches(&self, part: &PartInstance) -> bool {
        part.kind == self.kind && part.color == self.color
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.color, self.kind)
    }
}

/// A candidate goal: two to four distinct part types, each in one color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalProduct {
    pub id: String,
    required: Vec<Requirement>,
}

impl GoalProduct {
    pub const MIN_TYPES: usize = 2;
    pub const MAX_TYPES: usize = 4;

    pub fn new(id: impl Into<String>, mut required: Vec<Requirement>) -> Result<Self, PlanError> {
        let id = id.into();
        let invalid = |reason: String| PlanError::InvalidGoal {
            goal: id.clone(),
            reason,
        };
        if !(Self::MIN_TYPES..=Self::MAX_TYPES).contains(&required.len()) {
            return Err(invalid(format!(
                "needs {} to {} part types, got {}",
                Self::MIN_TYPES,
                Self::MAX_TYPES,
                required.len()
            )));
        }
        required.sort_by_key(|r| r.kind);
        if let Some(w) = required.windows(2).find(|w| w[0].kind == w[1].kind) {
            return Err(invalid(format!("part type {} used twice", w[0].kind)));
        }
        Ok(Self { id, required })
    }

    /// Slots in collection order.
    pub fn required(&self) -> &[Requirement] {
        &self.required
    }

    pub fn kinds(&self) -> impl Iterator<Item = PartKind> + '_ {
        self.required.iter().map(|r| r.kind)
    }

    pub fn type_count(&self) -> usize {
        self.required.len()
    }
}

/// A concrete choice of part instances for a goal, keyed by slot type.
/// `BTreeMap` iteration order is the collection order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    pub goal_id: String,
    pub assignment: BTreeMap<PartKind, String>,
}

impl Plan {
    /// Part ids in collection order.
    pub fn part_ids(&self) -> impl Iterator<Item = &str> {
        self.assignment.values().map(String::as_str)
    }

    pub fn waypoints(&self, grid: &Grid) -> Result<Vec<Position>, PlanError> {
        self.part_ids()
            .map(|id| {
                grid.part(id)
                    .map(|p| p.pos)
                    .ok_or_else(|| PlanError::UnknownPart(id.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanSet {
    pub goal_id: String,
    pub plans: Vec<Plan>,
}

/// What an observer has seen: a path prefix and the parts picked up on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    path: Path,
    collected: Vec<PartInstance>,
}

impl Observation {
    pub fn new(grid: &Grid, path: Path) -> Result<Self, Vec<Violation>> {
        validate_path(grid, &path)?;
        let collected = collected_along(grid, &path).into_iter().cloned().collect();
        Ok(Self { path, collected })
    }

    /// The agent standing at its start cell.
    pub fn empty(grid: &Grid) -> Self {
        Self {
            path: Path::at(grid.agent_start),
            collected: Vec::new(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn collected(&self) -> &[PartInstance] {
        &self.collected
    }

    pub fn current_position(&self) -> Position {
        self.path.last().expect("observation path is never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent(String),
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

/// A plan together with its full cost and the cost of what is left of it
/// after the observation (`None` when the observation rules the plan out).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredPlan {
    pub plan: Plan,
    pub cost: u32,
    pub remaining_cost: Option<u32>,
}

impl ScoredPlan {
    pub fn is_feasible(&self) -> bool {
        self.remaining_cost.is_some()
    }
}

/// Scored plans for one candidate goal, in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalScores {
    pub goal_id: String,
    pub plans: Vec<ScoredPlan>,
}

impl GoalScores {
    pub fn feasible_count(&self) -> usize {
        self.plans.iter().filter(|p| p.is_feasible()).count()
    }

    pub fn min_cost(&self) -> Option<u32> {
        self.plans.iter().map(|p| p.cost).min()
    }

    pub fn min_remaining_cost(&self) -> Option<u32> {
        self.plans.iter().filter_map(|p| p.remaining_cost).min()
    }
}

/// Every way to fill the goal's slots with matching instances: the
/// Cartesian product over slots, each slot's instances sorted by id.
pub fn enumerate_plans(grid: &Grid, goal: &GoalProduct) -> PlanSet {
    let options: Vec<Vec<&PartInstance>> = goal
        .required()
        .iter()
        .map(|req| {
            let mut matching: Vec<_> = grid.parts.iter().filter(|p| req.matches(p)).collect();
            matching.sort_by(|a, b| a.id.cmp(&b.id));
            matching
        })
        .collect();

    let mut plans = Vec::new();
    if options.iter().all(|o| !o.is_empty()) {
        let mut index = vec![0usize; options.len()];
        'outer: loop {
            let assignment = options
                .iter()
                .zip(&index)
                .map(|(opts, &i)| (opts[i].kind, opts[i].id.clone()))
                .collect();
            plans.push(Plan {
                goal_id: goal.id.clone(),
                assignment,
            });
            // odometer increment, last slot fastest
            for slot in (0..index.len()).rev() {
                index[slot] += 1;
                if index[slot] < options[slot].len() {
                    continue 'outer;
                }
                index[slot] = 0;
            }
            break;
        }
    }
    PlanSet {
        goal_id: goal.id.clone(),
        plans,
    }
}

pub fn plan_cost(grid: &Grid, plan: &Plan) -> Result<u32, PlanError> {
    Ok(route_cost(grid.agent_start, &plan.waypoints(grid)?))
}

pub fn check_consistency(plan: &Plan, obs: &Observation) -> Consistency {
    if obs.collected().len() > plan.assignment.len() {
        return Consistency::Inconsistent(format!(
            "collected {} parts but plan has {} slots",
            obs.collected().len(),
            plan.assignment.len()
        ));
    }
    for (got, (kind, want)) in obs.collected().iter().zip(&plan.assignment) {
        if &got.id != want {
            return Consistency::Inconsistent(format!("wrong instance for slot {kind}"));
        }
    }
    Consistency::Consistent
}

pub fn remaining_cost(
    grid: &Grid,
    plan: &Plan,
    obs: &Observation,
) -> Result<Option<u32>, PlanError> {
    let waypoints = plan.waypoints(grid)?;
    if !check_consistency(plan, obs).is_consistent() {
        return Ok(None);
    }
    let done = obs.collected().len();
    Ok(Some(route_cost(obs.current_position(), &waypoints[done..])))
}

pub fn score_plans(
    grid: &Grid,
    goals: &[GoalProduct],
    obs: &Observation,
) -> Result<Vec<GoalScores>, PlanError> {
    goals
        .iter()
        .map(|goal| {
            let plans = enumerate_plans(grid, goal)
                .plans
                .into_iter()
                .map(|plan| {
                    Ok(ScoredPlan {
                        cost: plan_cost(grid, &plan)?,
                        remaining_cost: remaining_cost(grid, &plan, obs)?,
                        plan,
                    })
                })
                .collect::<Result<Vec<_>, PlanError>>()?;
            Ok(GoalScores {
                goal_id: goal.id.clone(),
                plans,
            })
        })
        .collect()
}

/// Distinct part kinds among the collected parts.
pub fn collected_kinds(obs: &Observation) -> HashSet<PartKind> {
    obs.collected().iter().map(|p| p.kind).collect()
}
