//! Seeded random tasks for property and oracle tests.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use planpred::plans::{enumerate_plans, Observation};
use planpred::{GoalProduct, Grid, PartInstance, PartKind, Path, Position, Requirement, Task};

pub const COLORS: [&str; 3] = ["red", "blue", "green"];

pub struct Limits {
    pub max_side: u32,
    pub max_colors: usize,
    pub max_per_color: u32,
    pub max_candidates: usize,
    pub max_total_plans: usize,
}

pub const MICRO: Limits = Limits {
    max_side: 7,
    max_colors: 2,
    max_per_color: 2,
    max_candidates: 4,
    max_total_plans: 100,
};

pub const STANDARD: Limits = Limits {
    max_side: 10,
    max_colors: 3,
    max_per_color: 3,
    max_candidates: 4,
    max_total_plans: usize::MAX,
};

/// Walks toward each waypoint in turn, picking the axis at random whenever
/// both reduce the distance, for at most `steps` moves.
pub fn wander_route<R: Rng>(
    rng: &mut R,
    start: Position,
    waypoints: &[Position],
    steps: usize,
) -> Path {
    let mut cells = vec![start];
    let mut here = start;
    for &w in waypoints {
        while here != w && cells.len() <= steps {
            let dx = w.x != here.x;
            let dy = w.y != here.y;
            let move_x = dx && (!dy || rng.random_bool(0.5));
            here = if move_x {
                Position::new(if w.x > here.x { here.x + 1 } else { here.x - 1 }, here.y)
            } else {
                Position::new(here.x, if w.y > here.y { here.y + 1 } else { here.y - 1 })
            };
            cells.push(here);
        }
    }
    Path::new(cells)
}

/// A random task within `limits`, or `None` when the draw breaks a limit.
pub fn try_random_task<R: Rng>(rng: &mut R, limits: &Limits) -> Option<Task> {
    let width = rng.random_range(3..=limits.max_side);
    let height = rng.random_range(3..=limits.max_side);
    let k = rng.random_range(2..=4usize);
    let mut kinds = PartKind::ALL.to_vec();
    kinds.shuffle(rng);
    kinds.truncate(k);

    let mut parts = Vec::new();
    for &kind in &kinds {
        let n_colors = rng.random_range(1..=limits.max_colors);
        for &color in COLORS.choose_multiple(rng, n_colors) {
            for j in 0..rng.random_range(1..=limits.max_per_color) {
                parts.push((kind, color, j));
            }
        }
    }
    let mut cells: Vec<Position> = (0..height)
        .flat_map(|y| (0..width).map(move |x| Position::new(x, y)))
        .collect();
    if parts.len() + 1 > cells.len() {
        return None;
    }
    cells.shuffle(rng);
    let start = cells[0];
    let instances: Vec<PartInstance> = parts
        .iter()
        .zip(&cells[1..])
        .map(|(&(kind, color, j), &pos)| {
            PartInstance::new(format!("{}-{color}-{j}", kind.token()), kind, color, pos)
        })
        .collect();
    let grid = Grid::new(width, height, start, instances);

    let n_cands = rng.random_range(1..=limits.max_candidates);
    let mut candidates = Vec::new();
    for i in 0..n_cands {
        let size = rng.random_range(2..=k);
        let chosen: Vec<PartKind> = kinds.choose_multiple(rng, size).copied().collect();
        let reqs = chosen
            .into_iter()
            .map(|kind| {
                // mostly colors that exist for the kind, occasionally any color
                let present: Vec<&str> = grid
                    .parts
                    .iter()
                    .filter(|p| p.kind == kind)
                    .map(|p| p.color.as_str())
                    .collect();
                let color = if rng.random_bool(0.9) {
                    *present.choose(rng).unwrap()
                } else {
                    *COLORS.choose(rng).unwrap()
                };
                Requirement::new(kind, color)
            })
            .collect();
        candidates.push(GoalProduct::new(format!("g{i}"), reqs).ok()?);
    }
    let total: usize = candidates
        .iter()
        .map(|g| enumerate_plans(&grid, g).plans.len())
        .sum();
    if total > limits.max_total_plans {
        return None;
    }

    // observed path: partway along some candidate's plan, or a short random
    // walk when no candidate has a plan
    let with_plans: Vec<_> = candidates
        .iter()
        .map(|g| enumerate_plans(&grid, g).plans)
        .filter(|p| !p.is_empty())
        .collect();
    let path = match with_plans.choose(rng) {
        Some(plans) => {
            let plan = plans.choose(rng).unwrap();
            let waypoints = plan.waypoints(&grid).ok()?;
            let full: u32 = planpred::gridworld::route_cost(start, &waypoints);
            let steps = rng.random_range(0..=full) as usize;
            wander_route(rng, start, &waypoints, steps)
        }
        None => Path::at(start),
    };
    let observation = Observation::new(&grid, path).ok()?;
    Task::new(grid, observation, candidates).ok()
}

pub fn random_task<R: Rng>(rng: &mut R, limits: &Limits) -> Task {
    loop {
        if let Some(t) = try_random_task(rng, limits) {
            return t;
        }
    }
}
