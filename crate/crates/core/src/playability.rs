//! Tile-based A* agents that decide whether a sketch segment can be
//! traversed.
//!
//! The agent only looks at affordances. A cell is passable unless it is
//! solid, a hazard or outside the grid. The agent stands on a passable cell
//! when the cell below is solid (or the cell is on the bottom row) or when
//! the cell itself is climbable. From a standing cell it can
//!
//! * walk one cell sideways, then fall if nothing holds it up;
//! * jump: rise `h` cells (1 <= h <= jump height) in its column, move
//!   `|s|` cells sideways at the top of the arc (0 <= |s| <= reach + 1),
//!   then fall. `|s| - 1` columns are crossed strictly in mid-air, so a
//!   gap of `reach` cells can be cleared and one of `reach + 1` cannot;
//! * climb up or down when on a climbable cell.
//!
//! Falling is straight down and stops on the first standing cell; falling
//! into a hazard kills the move. Every step moves to a 4-neighbour, which
//! keeps the Manhattan heuristic admissible.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::level::{Grid, Sketch};
use crate::registry::{Affordance, GameId};

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovementModel {
    pub game: GameId,
    pub jump_height: usize,
    pub jump_reach: usize,
    /// Cells fallen per step; falling steps cost `1 / fall_speed` of a
    /// walking step.
    pub fall_speed: usize,
    pub solid: Vec<Affordance>,
    pub hazard: Vec<Affordance>,
    pub climbable: Vec<Affordance>,
}

/// `None` is an out-of-bounds cell.
pub fn passable(cell: Option<Affordance>, model: &MovementModel) -> bool {
    match cell {
        None => false,
        Some(a) => !model.solid.contains(&a) && !model.hazard.contains(&a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Column 0 to the last column.
    Horizontal,
    /// Bottom two rows to the top two rows.
    Ascend,
    /// Top two rows to the bottom two rows.
    Descend,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Horizontal, Direction::Ascend, Direction::Descend];

    pub fn is_vertical(self) -> bool {
        self != Direction::Horizontal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Walk { dx: isize },
    Jump { height: usize, shift: isize },
    ClimbUp,
    ClimbDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetError {
    NoStart,
    NoGoal,
}

impl fmt::Display for SetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetError::NoStart => f.write_str("no start cell"),
            SetError::NoGoal => f.write_str("no goal cell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    pub found: bool,
    pub direction: Direction,
    /// Start cell followed by every cell entered, up to the goal.
    pub path: Vec<Cell>,
    pub moves: Vec<Move>,
    pub expanded: usize,
    pub cost: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Fall,
    Other,
}

/// Read-only view of a sketch under one movement model.
struct Terrain<'a> {
    cells: &'a Grid<Affordance>,
    model: &'a MovementModel,
}

impl<'a> Terrain<'a> {
    fn new(sketch: &'a Sketch, model: &'a MovementModel) -> Self {
        Terrain {
            cells: &sketch.cells,
            model,
        }
    }

    fn at(&self, r: isize, c: isize) -> Option<Affordance> {
        self.cells.get_signed(r, c)
    }

    fn passable(&self, r: isize, c: isize) -> bool {
        passable(self.at(r, c), self.model)
    }

    fn solid(&self, r: isize, c: isize) -> bool {
        self.at(r, c).is_some_and(|a| self.model.solid.contains(&a))
    }

    fn climbable(&self, r: isize, c: isize) -> bool {
        self.at(r, c).is_some_and(|a| self.model.climbable.contains(&a))
    }

    fn supported(&self, r: isize, c: isize) -> bool {
        r == self.cells.height() as isize - 1 || self.solid(r + 1, c)
    }

    fn standing(&self, r: isize, c: isize) -> bool {
        self.passable(r, c) && (self.supported(r, c) || self.climbable(r, c))
    }

    /// Drops from `from` until standing. `None` if a hazard is hit.
    fn fall(&self, from: (isize, isize), out: &mut Vec<(Cell, Step)>) -> Option<()> {
        let (mut r, c) = from;
        while !self.standing(r, c) {
            if !self.passable(r + 1, c) {
                return None;
            }
            r += 1;
            out.push(((r as usize, c as usize), Step::Fall));
        }
        Some(())
    }

    /// Cells entered by `mv` from the standing cell `from`.
    fn simulate(&self, from: Cell, mv: Move) -> Option<Vec<(Cell, Step)>> {
        let (r0, c0) = (from.0 as isize, from.1 as isize);
        let mut out = Vec::new();
        let push = |out: &mut Vec<(Cell, Step)>, r: isize, c: isize| {
            out.push(((r as usize, c as usize), Step::Other));
        };
        match mv {
            Move::Walk { dx } => {
                if !self.standing(r0, c0) || !self.passable(r0, c0 + dx) {
                    return None;
                }
                push(&mut out, r0, c0 + dx);
                self.fall((r0, c0 + dx), &mut out)?;
            }
            Move::Jump { height, shift } => {
                if height == 0
                    || height > self.model.jump_height
                    || shift.unsigned_abs() > self.model.jump_reach + 1
                    || !self.standing(r0, c0)
                {
                    return None;
                }
                let mut r = r0;
                for _ in 0..height {
                    r -= 1;
                    if !self.passable(r, c0) {
                        return None;
                    }
                    push(&mut out, r, c0);
                }
                let mut c = c0;
                for _ in 0..shift.unsigned_abs() {
                    c += shift.signum();
                    if !self.passable(r, c) {
                        return None;
                    }
                    push(&mut out, r, c);
                }
                self.fall((r, c), &mut out)?;
            }
            Move::ClimbUp => {
                if !self.climbable(r0, c0) || !self.passable(r0 - 1, c0) {
                    return None;
                }
                push(&mut out, r0 - 1, c0);
                self.fall((r0 - 1, c0), &mut out)?;
            }
            Move::ClimbDown => {
                if !(self.climbable(r0, c0) || self.climbable(r0 + 1, c0)) || !self.passable(r0 + 1, c0) {
                    return None;
                }
                push(&mut out, r0 + 1, c0);
                self.fall((r0 + 1, c0), &mut out)?;
            }
        }
        Some(out)
    }

    fn moves(&self) -> Vec<Move> {
        let m = self.model;
        let reach = (m.jump_reach + 1) as isize;
        let mut moves = vec![
            Move::Walk { dx: 1 },
            Move::Walk { dx: -1 },
            Move::ClimbUp,
            Move::ClimbDown,
        ];
        for height in 1..=m.jump_height {
            for shift in -reach..=reach {
                moves.push(Move::Jump { height, shift });
            }
        }
        moves
    }

    fn step_cost(&self, step: Step) -> usize {
        match step {
            Step::Fall => 1,
            Step::Other => self.model.fall_speed,
        }
    }
}

pub fn start_goal_sets(
    sketch: &Sketch,
    direction: Direction,
    model: &MovementModel,
) -> std::result::Result<(Vec<Cell>, Vec<Cell>), SetError> {
    let t = Terrain::new(sketch, model);
    let (h, w) = sketch.cells.dims();
    let collect = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, standing: bool| {
        let mut v = Vec::new();
        for r in rows {
            for c in cols.clone() {
                let (ri, ci) = (r as isize, c as isize);
                let ok = if standing {
                    t.standing(ri, ci)
                } else {
                    t.passable(ri, ci)
                };
                if ok {
                    v.push((r, c));
                }
            }
        }
        v
    };
    let low = h.saturating_sub(2)..h;
    let high = 0..h.min(2);
    let (starts, goals) = match direction {
        Direction::Horizontal => (
            collect(0..h, 0..w.min(1), true),
            collect(0..h, w.saturating_sub(1)..w, true),
        ),
        Direction::Ascend => (collect(low, 0..w, true), collect(high, 0..w, false)),
        Direction::Descend => (collect(high, 0..w, false), collect(low, 0..w, false)),
    };
    if starts.is_empty() {
        Err(SetError::NoStart)
    } else if goals.is_empty() {
        Err(SetError::NoGoal)
    } else {
        Ok((starts, goals))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct Node {
    cell: Cell,
    /// Reached a goal part-way through a move; no further expansion.
    terminal: bool,
}

struct Parent {
    from: Option<Node>,
    mv: Option<Move>,
    cells: Vec<Cell>,
}

/// Dense per-node storage for one grid.
struct NodeTable<T> {
    width: usize,
    slots: Vec<T>,
}

impl<T: Clone> NodeTable<T> {
    fn new(height: usize, width: usize, fill: T) -> Self {
        NodeTable {
            width,
            slots: vec![fill; height * width * 2],
        }
    }
}

impl<T> NodeTable<T> {
    fn slot(&self, node: Node) -> usize {
        (node.cell.0 * self.width + node.cell.1) * 2 + node.terminal as usize
    }

    fn get(&self, node: Node) -> &T {
        &self.slots[self.slot(node)]
    }

    fn set(&mut self, node: Node, value: T) {
        let i = self.slot(node);
        self.slots[i] = value;
    }
}

struct GoalMask {
    width: usize,
    mask: Vec<bool>,
}

impl GoalMask {
    fn new(height: usize, width: usize, goals: &[Cell]) -> Self {
        let mut mask = vec![false; height * width];
        for &(r, c) in goals {
            mask[r * width + c] = true;
        }
        GoalMask { width, mask }
    }

    fn contains(&self, cell: Cell) -> bool {
        self.mask[cell.0 * self.width + cell.1]
    }
}

/// Cells entered before the first goal hit, and whether a goal was hit.
fn truncate_at_goal(cells: &[(Cell, Step)], goals: &GoalMask) -> (usize, bool) {
    match cells.iter().position(|&(c, _)| goals.contains(c)) {
        Some(i) => (i + 1, true),
        None => (cells.len(), false),
    }
}

/// Entry cells for a start: the start itself plus any fall needed to settle.
fn settle(t: &Terrain<'_>, start: Cell) -> Option<Vec<(Cell, Step)>> {
    let mut cells = vec![(start, Step::Other)];
    t.fall((start.0 as isize, start.1 as isize), &mut cells)?;
    Some(cells)
}

pub fn astar(sketch: &Sketch, model: &MovementModel, direction: Direction) -> PathResult {
    let not_found = |expanded| PathResult {
        found: false,
        direction,
        path: Vec::new(),
        moves: Vec::new(),
        expanded,
        cost: 0,
    };
    let (starts, goals) = match start_goal_sets(sketch, direction, model) {
        Ok(sets) => sets,
        Err(_) => return not_found(0),
    };
    let (h, w) = sketch.cells.dims();
    let t = Terrain::new(sketch, model);
    let goal_mask = GoalMask::new(h, w, &goals);
    let heuristic = |cell: Cell| {
        goals
            .iter()
            .map(|g| g.0.abs_diff(cell.0) + g.1.abs_diff(cell.1))
            .min()
            .unwrap_or(0)
    };
    let moves = t.moves();

    let mut best: NodeTable<usize> = NodeTable::new(h, w, usize::MAX);
    let mut parents: NodeTable<Option<Parent>> = NodeTable {
        width: w,
        slots: (0..h * w * 2).map(|_| None).collect(),
    };
    let mut closed: NodeTable<bool> = NodeTable::new(h, w, false);
    let mut open = BinaryHeap::new();
    let mut seq = 0usize;
    let mut push = |open: &mut BinaryHeap<_>, node: Node, g: usize| {
        let h = if node.terminal { 0 } else { heuristic(node.cell) };
        open.push(Reverse((g + h, h, seq, node, g)));
        seq += 1;
    };

    // A start that cannot stand settles by falling first, and is a goal
    // immediately if its fall crosses one.
    for &start in &starts {
        let Some(cells) = settle(&t, start) else { continue };
        let (n, hit) = truncate_at_goal(&cells, &goal_mask);
        let cost: usize = cells[1..n].iter().map(|&(_, s)| t.step_cost(s)).sum();
        let node = Node {
            cell: cells[n - 1].0,
            terminal: hit,
        };
        if cost < *best.get(node) {
            best.set(node, cost);
            parents.set(
                node,
                Some(Parent {
                    from: None,
                    mv: None,
                    cells: cells[..n].iter().map(|&(c, _)| c).collect(),
                }),
            );
            push(&mut open, node, cost);
        }
    }

    let mut expanded = 0;
    while let Some(Reverse((_, _, _, node, g))) = open.pop() {
        if *closed.get(node) {
            continue;
        }
        closed.set(node, true);
        if node.terminal {
            return reconstruct(&parents, node, direction, expanded, g);
        }
        expanded += 1;
        for &mv in &moves {
            let Some(cells) = t.simulate(node.cell, mv) else {
                continue;
            };
            if cells.is_empty() {
                continue;
            }
            let (n, hit) = truncate_at_goal(&cells, &goal_mask);
            let cost = g + cells[..n].iter().map(|&(_, s)| t.step_cost(s)).sum::<usize>();
            let next = Node {
                cell: cells[n - 1].0,
                terminal: hit,
            };
            if *closed.get(next) || *best.get(next) <= cost {
                continue;
            }
            best.set(next, cost);
            parents.set(
                next,
                Some(Parent {
                    from: Some(node),
                    mv: Some(mv),
                    cells: cells[..n].iter().map(|&(c, _)| c).collect(),
                }),
            );
            push(&mut open, next, cost);
        }
    }
    not_found(expanded)
}

fn reconstruct(
    parents: &NodeTable<Option<Parent>>,
    goal: Node,
    direction: Direction,
    expanded: usize,
    cost: usize,
) -> PathResult {
    let mut chain = Vec::new();
    let mut cur = Some(goal);
    while let Some(node) = cur {
        let p = parents.get(node).as_ref().expect("reached nodes have parents");
        chain.push(p);
        cur = p.from;
    }
    chain.reverse();
    let mut path = Vec::new();
    let mut moves = Vec::new();
    for p in chain {
        path.extend_from_slice(&p.cells);
        if let Some(mv) = p.mv {
            moves.push(mv);
        }
    }
    PathResult {
        found: true,
        direction,
        path,
        moves,
        expanded,
        cost,
    }
}

/// Re-executes a move list from `start` and returns the cells visited,
/// cut at the first goal cell exactly as the search does.
pub fn replay(
    sketch: &Sketch,
    model: &MovementModel,
    direction: Direction,
    start: Cell,
    moves: &[Move],
) -> Option<Vec<Cell>> {
    let (starts, goals) = start_goal_sets(sketch, direction, model).ok()?;
    if !starts.contains(&start) {
        return None;
    }
    let t = Terrain::new(sketch, model);
    let (h, w) = sketch.cells.dims();
    let goal_mask = GoalMask::new(h, w, &goals);
    let mut cells = settle(&t, start)?;
    for &mv in moves {
        let from = cells.last()?.0;
        cells.extend(t.simulate(from, mv)?);
    }
    let (n, hit) = truncate_at_goal(&cells, &goal_mask);
    hit.then(|| cells[..n].iter().map(|&(c, _)| c).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Grounded,
    Rising(usize),
    Drifting(usize),
    Falling,
}

/// Cell-level physics check that does not reuse the move generator:
/// 4-adjacent steps through passable cells, rises bounded by the jump
/// height and launched from standing cells, bounded mid-air drift, and no
/// steering while falling.
pub fn check_path(
    sketch: &Sketch,
    model: &MovementModel,
    direction: Direction,
    path: &[Cell],
) -> std::result::Result<(), String> {
    let (starts, goals) = start_goal_sets(sketch, direction, model).map_err(|e| e.to_string())?;
    let first = *path.first().ok_or("empty path")?;
    if !starts.contains(&first) {
        return Err(format!("{first:?} is not a start cell"));
    }
    let last = *path.last().unwrap();
    if !goals.contains(&last) {
        return Err(format!("{last:?} is not a goal cell"));
    }
    let t = Terrain::new(sketch, model);
    let stands = |c: Cell| t.standing(c.0 as isize, c.1 as isize);
    // A cell above a platform can be crossed mid-jump or landed on, so
    // every phase consistent with the path so far is tracked.
    let mut phases = vec![if stands(first) { Phase::Grounded } else { Phase::Falling }];
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !t.passable(b.0 as isize, b.1 as isize) {
            return Err(format!("{b:?} is not passable"));
        }
        let dr = b.0 as isize - a.0 as isize;
        let dc = b.1 as isize - a.1 as isize;
        let mut next: Vec<Phase> = phases
            .iter()
            .filter_map(|&phase| match (dr, dc.abs(), phase) {
                (-1, 0, Phase::Grounded) => Some(Phase::Rising(1)),
                (-1, 0, Phase::Rising(n)) if n < model.jump_height => Some(Phase::Rising(n + 1)),
                (0, 1, Phase::Grounded) => Some(Phase::Falling),
                (0, 1, Phase::Rising(_)) => Some(Phase::Drifting(1)),
                (0, 1, Phase::Drifting(n)) if n <= model.jump_reach => Some(Phase::Drifting(n + 1)),
                (1, 0, _) => Some(Phase::Falling),
                _ => None,
            })
            .collect();
        if next.is_empty() {
            return Err(format!("illegal step {a:?} -> {b:?} from {phases:?}"));
        }
        if stands(b) {
            next.push(Phase::Grounded);
        }
        next.sort_unstable();
        next.dedup();
        phases = next;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Playability {
    pub horizontal: bool,
    pub vertical: bool,
}

impl Playability {
    pub fn playable(&self) -> bool {
        self.horizontal || self.vertical
    }
}

pub fn playability(sketch: &Sketch, model: &MovementModel) -> Playability {
    Playability {
        horizontal: astar(sketch, model, Direction::Horizontal).found,
        vertical: astar(sketch, model, Direction::Ascend).found || astar(sketch, model, Direction::Descend).found,
    }
}

pub fn is_playable(sketch: &Sketch, model: &MovementModel) -> bool {
    playability(sketch, model).playable()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayabilityBatch {
    pub results: Vec<Playability>,
    pub percentage: f64,
}

pub fn playable_percentage(sketches: &[Sketch], model: &MovementModel) -> Result<PlayabilityBatch> {
    if sketches.is_empty() {
        return Err(Error::EmptySet);
    }
    let results = map_ordered(sketches, |_, s| playability(s, model));
    let playable = results.iter().filter(|p| p.playable()).count();
    Ok(PlayabilityBatch {
        percentage: 100.0 * playable as f64 / results.len() as f64,
        results,
    })
}
