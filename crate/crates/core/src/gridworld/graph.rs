//! Per-agent position graphs.
//!
//! The robot (agent 0) lives on free cells times four headings and may move
//! forward or turn by a quarter; opponents live on free cells and step in the
//! four compass directions.

use std::fmt;

use thiserror::Error;

use super::scenario::{Cell, Direction, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("isolated-cell: free cell {cell} has no enabled opponent movement")]
    IsolatedCell { cell: Cell },
    #[error("opponent index {index} out of range (scenario has {count} opponents)")]
    NoSuchOpponent { index: usize, count: usize },
}

/// A position of one agent. Only the robot carries an orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub agent_index: usize,
    pub cell: Cell,
    pub orientation: Option<Direction>,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.orientation {
            Some(d) => write!(f, "({},{},{})", self.cell.x, self.cell.y, d.letter()),
            None => write!(f, "({},{})", self.cell.x, self.cell.y),
        }
    }
}

pub const ROBOT_MOVES: [&str; 3] = ["forward", "turn_left", "turn_right"];
pub const OPPONENT_MOVES: [&str; 4] = ["N", "E", "S", "W"];

/// Positions, movements and movement effects of a single agent.
#[derive(Debug, Clone)]
pub struct WorldGraph {
    pub agent_index: usize,
    pub positions: Vec<Position>,
    pub initial: u32,
    pub movements: &'static [&'static str],
    /// Enabled `(movement, target)` pairs per position, in movement order.
    pub effects: Vec<Vec<(u8, u32)>>,
    width: usize,
    /// Grid index (times 4 for the robot, plus heading) to position id.
    lookup: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl WorldGraph {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn location_of(&self, v: u32) -> Cell {
        self.positions[v as usize].cell
    }

    pub fn enabled(&self, v: u32) -> &[(u8, u32)] {
        &self.effects[v as usize]
    }

    pub fn effect(&self, v: u32, movement: u8) -> Option<u32> {
        self.effects[v as usize]
            .iter()
            .find(|(m, _)| *m == movement)
            .map(|&(_, t)| t)
    }

    pub fn movement_name(&self, m: u8) -> &'static str {
        self.movements[m as usize]
    }

    /// Position id of `cell` (with `orientation` for the robot graph).
    pub fn position_id(&self, cell: Cell, orientation: Option<Direction>) -> Option<u32> {
        let base = cell.y.checked_mul(self.width)? + cell.x;
        let idx = match (self.agent_index, orientation) {
            (0, Some(d)) => base * 4 + d.index(),
            (0, None) => return None,
            (_, None) => base,
            (_, Some(_)) => return None,
        };
        self.lookup.get(idx).copied().filter(|&v| v != NONE)
    }

    /// Deadlock-freedom: every position has an enabled movement and all
    /// effects stay inside the graph.
    pub fn is_deadlock_free(&self) -> bool {
        self.effects
            .iter()
            .all(|e| !e.is_empty() && e.iter().all(|&(_, t)| (t as usize) < self.positions.len()))
    }
}

pub fn build_robot_graph(scenario: &Scenario) -> WorldGraph {
    let free = scenario.free_cells();
    let mut lookup = vec![NONE; scenario.width * scenario.height * 4];
    let mut positions = Vec::with_capacity(free.len() * 4);
    for &cell in &free {
        for d in Direction::ALL {
            lookup[(cell.y * scenario.width + cell.x) * 4 + d.index()] = positions.len() as u32;
            positions.push(Position {
                agent_index: 0,
                cell,
                orientation: Some(d),
            });
        }
    }
    let id = |c: Cell, d: Direction| lookup[(c.y * scenario.width + c.x) * 4 + d.index()];
    let effects = positions
        .iter()
        .map(|p| {
            let d = p.orientation.expect("robot positions carry a heading");
            let mut e = Vec::with_capacity(3);
            if let Some(ahead) = p.cell.step(d).filter(|c| scenario.is_free(*c)) {
                e.push((0, id(ahead, d)));
            }
            e.push((1, id(p.cell, d.left())));
            e.push((2, id(p.cell, d.right())));
            e
        })
        .collect();
    let initial = id(scenario.robot_start, scenario.robot_start_orientation);
    WorldGraph {
        agent_index: 0,
        positions,
        initial,
        movements: &ROBOT_MOVES,
        effects,
        width: scenario.width,
        lookup,
    }
}

/// Graph of opponent `index` (1-based, as in the world state tuple).
pub fn build_opponent_graph(scenario: &Scenario, index: usize) -> Result<WorldGraph, GraphError> {
    let count = scenario.opponent_starts.len();
    if index == 0 || index > count {
        return Err(GraphError::NoSuchOpponent { index, count });
    }
    let free = scenario.free_cells();
    let mut lookup = vec![NONE; scenario.width * scenario.height];
    for (i, c) in free.iter().enumerate() {
        lookup[c.y * scenario.width + c.x] = i as u32;
    }
    let mut effects = Vec::with_capacity(free.len());
    for &cell in &free {
        let e: Vec<(u8, u32)> = Direction::ALL
            .iter()
            .filter_map(|&d| {
                let t = cell.step(d).filter(|c| scenario.is_free(*c))?;
                Some((d.index() as u8, lookup[t.y * scenario.width + t.x]))
            })
            .collect();
        if e.is_empty() {
            return Err(GraphError::IsolatedCell { cell });
        }
        effects.push(e);
    }
    let start = scenario.opponent_starts[index - 1];
    let positions = free
        .into_iter()
        .map(|cell| Position {
            agent_index: index,
            cell,
            orientation: None,
        })
        .collect();
    Ok(WorldGraph {
        agent_index: index,
        positions,
        initial: lookup[start.y * scenario.width + start.x],
        movements: &OPPONENT_MOVES,
        effects,
        width: scenario.width,
        lookup,
    })
}

/// Robot graph followed by one graph per opponent.
pub fn build_world_graphs(scenario: &Scenario) -> Result<Vec<WorldGraph>, GraphError> {
    let mut graphs = vec![build_robot_graph(scenario)];
    for i in 1..=scenario.opponent_starts.len() {
        graphs.push(build_opponent_graph(scenario, i)?);
    }
    Ok(graphs)
}
