//! Slow, direct reference computations used to cross-check the library.
//!
//! Nothing here calls into planpred beyond reading plain data out of the
//! task: distances come from breadth-first search, plans from recursive
//! enumeration, and posteriors from summing linear-space weights.

use std::collections::{HashSet, VecDeque};

use planpred::{ModelConfig, ModelKind, Normalization, PartKind, Position, Task};

/// Shortest 4-connected walk length between two cells.
pub fn bfs_distance(width: u32, height: u32, from: Position, to: Position) -> u32 {
    let mut seen = vec![false; (width * height) as usize];
    let idx = |p: Position| (p.y * width + p.x) as usize;
    let mut queue = VecDeque::from([(from, 0u32)]);
    seen[idx(from)] = true;
    while let Some((p, d)) = queue.pop_front() {
        if p == to {
            return d;
        }
        let mut next = Vec::new();
        if p.x > 0 {
            next.push(Position::new(p.x - 1, p.y));
        }
        if p.x + 1 < width {
            next.push(Position::new(p.x + 1, p.y));
        }
        if p.y > 0 {
            next.push(Position::new(p.x, p.y - 1));
        }
        if p.y + 1 < height {
            next.push(Position::new(p.x, p.y + 1));
        }
        for n in next {
            if !seen[idx(n)] {
                seen[idx(n)] = true;
                queue.push_back((n, d + 1));
            }
        }
    }
    panic!("unreachable cell");
}

/// A plan as the ids of the chosen parts, in collection order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NaivePlan {
    pub parts: Vec<String>,
    pub cost: u32,
    pub remaining: Option<u32>,
}

fn rank(kind: PartKind) -> u8 {
    match kind {
        PartKind::Square => 0,
        PartKind::Triangle => 1,
        PartKind::SmallRectangle => 2,
        PartKind::Circle => 3,
    }
}

/// Parts picked up along the observed path, in first-visit order.
pub fn collected_ids(task: &Task) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for cell in &task.observation.path().cells {
        for part in &task.grid.parts {
            if part.pos == *cell && seen.insert(part.id.clone()) {
                out.push(part.id.clone());
            }
        }
    }
    out
}

fn choose(slots: &[Vec<String>], prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    if prefix.len() == slots.len() {
        out.push(prefix.clone());
        return;
    }
    for id in &slots[prefix.len()] {
        prefix.push(id.clone());
        choose(slots, prefix, out);
        prefix.pop();
    }
}

/// Every plan of candidate `goal`, with cost and remaining cost.
pub fn plans_for(task: &Task, goal: usize) -> Vec<NaivePlan> {
    let grid = &task.grid;
    let mut reqs: Vec<_> = task.candidates[goal].required().to_vec();
    reqs.sort_by_key(|r| rank(r.kind));
    let slots: Vec<Vec<String>> = reqs
        .iter()
        .map(|r| {
            grid.parts
                .iter()
                .filter(|p| p.kind == r.kind && p.color == r.color)
                .map(|p| p.id.clone())
                .collect()
        })
        .collect();
    let mut assignments = Vec::new();
    choose(&slots, &mut Vec::new(), &mut assignments);

    let pos = |id: &str| grid.parts.iter().find(|p| p.id == id).unwrap().pos;
    let walk = |from: Position, ids: &[String]| {
        let mut here = from;
        let mut total = 0;
        for id in ids {
            let to = pos(id);
            total += bfs_distance(grid.width, grid.height, here, to);
            here = to;
        }
        total
    };
    let collected = collected_ids(task);
    let here = *task.observation.path().cells.last().unwrap();
    assignments
        .into_iter()
        .map(|parts| {
            let cost = walk(grid.agent_start, &parts);
            let consistent =
                collected.len() <= parts.len() && parts[..collected.len()] == collected[..];
            let remaining = consistent.then(|| walk(here, &parts[collected.len()..]));
            NaivePlan {
                parts,
                cost,
                remaining,
            }
        })
        .collect()
}

/// Goal posterior by direct summation, or `None` when every candidate is
/// inconsistent with the observation.
pub fn naive_posterior(task: &Task, config: &ModelConfig) -> Option<Vec<f64>> {
    let plans: Vec<Vec<NaivePlan>> = (0..task.candidates.len())
        .map(|g| plans_for(task, g))
        .collect();
    let e = |beta: f64, c: u32| (-beta * f64::from(c)).exp();

    let prior = |p: &NaivePlan| -> f64 {
        match config.normalization {
            Normalization::Conventional => {
                let z: f64 = plans
                    .iter()
                    .flatten()
                    .map(|q| e(config.beta1, q.cost))
                    .sum();
                e(config.beta1, p.cost) / z
            }
            Normalization::PaperLiteral => {
                let owners = plans
                    .iter()
                    .filter(|ps| ps.iter().any(|q| q.parts == p.parts))
                    .count();
                1.0 / owners as f64
            }
        }
    };

    let mut weights = Vec::new();
    for ps in &plans {
        let mut w = 0.0;
        match config.model {
            ModelKind::Full => {
                let z: f64 = ps
                    .iter()
                    .filter_map(|p| p.remaining)
                    .map(|r| e(config.beta2, r))
                    .sum();
                for p in ps {
                    if let Some(r) = p.remaining {
                        w += e(config.beta2, r) / z * prior(p);
                    }
                }
            }
            ModelKind::Ppo => {
                let z: f64 = match config.normalization {
                    Normalization::Conventional => plans
                        .iter()
                        .flatten()
                        .filter_map(|p| p.remaining)
                        .map(|r| e(config.beta3, r))
                        .sum(),
                    Normalization::PaperLiteral => ps
                        .iter()
                        .filter_map(|p| p.remaining)
                        .map(|r| e(config.beta3, r))
                        .sum(),
                };
                for p in ps {
                    if let Some(r) = p.remaining {
                        w += e(config.beta3, r) / z * prior(p);
                    }
                }
            }
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return None;
    }
    Some(weights.into_iter().map(|w| w / total).collect())
}
