//! Grid environment for item-creating tasks.
//!
//! The world is an open rectangle of cells with 4-connected unit-cost moves
//! and no obstacles, so the shortest route between two cells is their
//! Manhattan distance. Parts sit on cells (at most one per cell) and are
//! picked up automatically when the agent enters their cell.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

/// A cell coordinate: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub x: u32,
    pub y: u32,
}

impl Position {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    fn in_bounds(self, width: u32, height: u32) -> bool {
        self.x < width && self.y < height
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The four part types. Declaration order is the collection priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartKind {
    Square,
    Triangle,
    SmallRectangle,
    Circle,
}

impl PartKind {
    pub const ALL: [PartKind; 4] = [
        PartKind::Square,
        PartKind::Triangle,
        PartKind::SmallRectangle,
        PartKind::Circle,
    ];

    /// Collection rank, 0 (collected first) to 3.
    pub fn priority(self) -> u8 {
        self as u8
    }

    pub fn from_priority(rank: u8) -> Option<Self> {
        Self::ALL.get(rank as usize).copied()
    }

    pub fn token(self) -> &'static str {
        match self {
            PartKind::Square => "square",
            PartKind::Triangle => "triangle",
            PartKind::SmallRectangle => "small_rectangle",
            PartKind::Circle => "circle",
        }
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PartKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.token() == s)
            .ok_or_else(|| format!("unknown part type `{s}`"))
    }
}

/// A concrete part lying on the grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartInstance {
    pub id: String,
    pub kind: PartKind,
    pub color: String,
    pub pos: Position,
}

impl PartInstance {
    pub fn new(
        id: impl Into<String>,
        kind: PartKind,
        color: impl Into<String>,
        pos: Position,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            color: color.into(),
            pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub width: u32,
    pub height: u32,
    pub parts: Vec<PartInstance>,
    pub agent_start: Position,
}

impl Grid {
    pub fn new(width: u32, height: u32, agent_start: Position, parts: Vec<PartInstance>) -> Self {
        Self {
            width,
            height,
            parts,
            agent_start,
        }
    }

    pub fn part(&self, id: &str) -> Option<&PartInstance> {
        self.parts.iter().find(|p| p.id == id)
    }

    pub fn part_at(&self, pos: Position) -> Option<&PartInstance> {
        self.parts.iter().find(|p| p.pos == pos)
    }

    pub fn contains(&self, pos: Position) -> bool {
        pos.in_bounds(self.width, self.height)
    }

    /// Reflects every position across the vertical axis (x -> width-1-x).
    pub fn mirrored_x(&self) -> Grid {
        let flip = |p: Position| Position::new(self.width - 1 - p.x, p.y);
        Grid {
            width: self.width,
            height: self.height,
            parts: self
                .parts
                .iter()
                .map(|p| PartInstance {
                    pos: flip(p.pos),
                    ..p.clone()
                })
                .collect(),
            agent_start: flip(self.agent_start),
        }
    }

    /// Reflects every position across the horizontal axis (y -> height-1-y).
    pub fn mirrored_y(&self) -> Grid {
        let flip = |p: Position| Position::new(p.x, self.height - 1 - p.y);
        Grid {
            width: self.width,
            height: self.height,
            parts: self
                .parts
                .iter()
                .map(|p| PartInstance {
                    pos: flip(p.pos),
                    ..p.clone()
                })
                .collect(),
            agent_start: flip(self.agent_start),
        }
    }
}

/// An agent trajectory. The first cell is where the agent started.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Path {
    pub cells: Vec<Position>,
}

impl Path {
    pub fn new(cells: Vec<Position>) -> Self {
        Self { cells }
    }

    pub fn at(start: Position) -> Self {
        Self { cells: vec![start] }
    }

    /// Number of moves, i.e. cells minus one.
    pub fn steps(&self) -> u32 {
        self.cells.len().saturating_sub(1) as u32
    }

    pub fn last(&self) -> Option<Position> {
        self.cells.last().copied()
    }

    pub fn prefix(&self, steps: usize) -> Path {
        Path::new(self.cells[..(steps + 1).min(self.cells.len())].to_vec())
    }

    pub fn mirrored_x(&self, width: u32) -> Path {
        Path::new(
            self.cells
                .iter()
                .map(|p| Position::new(width - 1 - p.x, p.y))
                .collect(),
        )
    }

    pub fn mirrored_y(&self, height: u32) -> Path {
        Path::new(
            self.cells
                .iter()
                .map(|p| Position::new(p.x, height - 1 - p.y))
                .collect(),
        )
    }
}

/// A structural problem found by [`validate_grid`] or [`validate_path`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyGrid,
    OutOfBounds {
        what: String,
        pos: Position,
    },
    DuplicateCell(Position),
    DuplicatePartId(String),
    PartOnStart {
        id: String,
        pos: Position,
    },
    EmptyPath,
    WrongStart {
        expected: Position,
        found: Position,
    },
    NonAdjacentStep {
        index: usize,
        from: Position,
        to: Position,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGrid => write!(f, "grid has zero width or height"),
            Violation::OutOfBounds { what, pos } => write!(f, "out of bounds: {what} at {pos}"),
            Violation::DuplicateCell(pos) => write!(f, "duplicate cell {pos}"),
            Violation::DuplicatePartId(id) => write!(f, "duplicate part id `{id}`"),
            Violation::PartOnStart { id, pos } => {
                write!(f, "part `{id}` occupies the agent start cell {pos}")
            }
            Violation::EmptyPath => write!(f, "path has no cells"),
            Violation::WrongStart { expected, found } => {
                write!(
                    f,
                    "wrong start: path begins at {found}, agent starts at {expected}"
                )
            }
            Violation::NonAdjacentStep { index, from, to } => {
                write!(f, "non-adjacent step {index}: {from} -> {to}")
            }
        }
    }
}

pub fn manhattan_distance(a: Position, b: Position) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Length of the shortest route that starts at `start` and visits
/// `waypoints` in the given order.
pub fn route_cost(start: Position, waypoints: &[Position]) -> u32 {
    waypoints
        .iter()
        .scan(start, |here, &next| {
            let leg = manhattan_distance(*here, next);
            *here = next;
            Some(leg)
        })
        .sum()
}

pub fn validate_grid(grid: &Grid) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if grid.width == 0 || grid.height == 0 {
        violations.push(Violation::EmptyGrid);
    }
    if !grid.contains(grid.agent_start) {
        violations.push(Violation::OutOfBounds {
            what: "agent start".into(),
            pos: grid.agent_start,
        });
    }
    let mut cells = HashSet::new();
    let mut ids = HashSet::new();
    for part in &grid.parts {
        if !grid.contains(part.pos) {
            violations.push(Violation::OutOfBounds {
                what: format!("part `{}`", part.id),
                pos: part.pos,
            });
        }
        if !cells.insert(part.pos) {
            violations.push(Violation::DuplicateCell(part.pos));
        }
        if !ids.insert(part.id.as_str()) {
            violations.push(Violation::DuplicatePartId(part.id.clone()));
        }
        if part.pos == grid.agent_start {
            violations.push(Violation::PartOnStart {
                id: part.id.clone(),
                pos: part.pos,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

pub fn validate_path(grid: &Grid, path: &Path) -> Result<(), Vec<Violation>> {
    let Some(&first) = path.cells.first() else {
        return Err(vec![Violation::EmptyPath]);
    };
    let mut violations = Vec::new();
    if first != grid.agent_start {
        violations.push(Violation::WrongStart {
            expected: grid.agent_start,
            found: first,
        });
    }
    for &cell in &path.cells {
        if !grid.contains(cell) {
            violations.push(Violation::OutOfBounds {
                what: "path cell".into(),
                pos: cell,
            });
        }
    }
    for (i, pair) in path.cells.windows(2).enumerate() {
        if manhattan_distance(pair[0], pair[1]) != 1 {
            violations.push(Violation::NonAdjacentStep {
                index: i + 1,
                from: pair[0],
                to: pair[1],
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Parts picked up along `path`, in order of first visit.
pub fn collected_along<'g>(grid: &'g Grid, path: &Path) -> Vec<&'g PartInstance> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &cell in &path.cells {
        if let Some(part) = grid.part_at(cell) {
            if seen.insert(part.id.as_str()) {
                out.push(part);
            }
        }
    }
    out
}
