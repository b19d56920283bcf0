//! Game-based abstraction of the world POMDP.
//!
//! Player 1 (the robot) sees abstract states that group every world state
//! sharing an observation; Player 2 resolves the uncertainty by picking the
//! concrete opponent position at which the robot's action executes. Each
//! Player-1 state `B` with action `α` leads to a selector state `⟨B, α⟩`
//! whose Player-2 choices are the admissible opponent positions.
//!
//! Two refinements shrink Player 2's options by keeping history:
//! remembering the opponent's exact position for one step after the robot
//! loses sight of it, and tracking a set of flagged regions that may contain
//! the hidden opponent.

mod build;
mod from_pomdp;
mod hotspots;
mod lift;
mod regions;

use std::fmt;

use thiserror::Error;

pub use build::{build_abstract_world_pg, AbstractGame, AbstractionOptions, MemberSet, Node};
pub use from_pomdp::{build_abstract_pg, ObservationGame};
pub use hotspots::collision_hotspots;
pub use lift::{lift_actions, lift_strategy, ObservationAutomaton};
pub use regions::{row_stripes, single_block, singletons, RegionPartition};

use crate::gridworld::{ScenarioError, WorldGraph};
use crate::model::ModelError;

#[derive(Debug, Error, PartialEq)]
pub enum AbstractionError {
    #[error("abstraction supports exactly one opponent, scenario has {0}")]
    OpponentCount(usize),
    #[error("region refinement needs a region partition")]
    MissingPartition,
    #[error("invalid region partition: {0}")]
    Partition(#[from] ScenarioError),
    #[error("model carries no observations")]
    NoObservations,
    #[error("states sharing observation {observation} offer different actions")]
    UnequalActions { observation: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("strategy undefined on reachable Player-1 state {state}")]
    UndefinedStrategy { state: usize },
    #[error("memory update from state {state} under {action} is ambiguous for observation {observation}")]
    AmbiguousUpdate { state: usize, action: String, observation: String },
}

/// History kept in far-away abstract states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Refinement {
    /// Plain observation classes.
    None,
    /// Remember the opponent's position for one move after the robot's own
    /// move hides it.
    #[default]
    OneStep,
    /// One-step memory plus region flags that over-approximate where the
    /// hidden opponent can be.
    Regions,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::None => "none",
            Refinement::OneStep => "one-step",
            Refinement::Regions => "regions",
        }
    }

    pub fn parse(s: &str) -> Option<Refinement> {
        match s {
            "none" => Some(Refinement::None),
            "one-step" => Some(Refinement::OneStep),
            "regions" => Some(Refinement::Regions),
            _ => None,
        }
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a Player-1 state knows about the opponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum View {
    /// Opponent seen at this position.
    Visible(u32),
    /// Opponent somewhere out of sight.
    Hidden,
    /// Out of sight, but it was at this position before the robot's move.
    LastSeen(u32),
    /// Out of sight, inside the blocks of this interned flag set.
    Flags(u32),
}

/// A Player-1 state of the abstract world game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractState {
    pub robot: u32,
    pub turn: u8,
    pub view: View,
}

impl AbstractState {
    /// Decoration like `r(0,0,E)|o(2,2)|t0` or `r(0,0,E)|far|t1`.
    pub fn describe(&self, graphs: &[WorldGraph], flag_sets: &[Vec<u32>]) -> String {
        let r = graphs[0].positions[self.robot as usize];
        let o = |v: u32| graphs[1].positions[v as usize];
        let view = match self.view {
            View::Visible(v) => format!("o{}", o(v)),
            View::Hidden => "far".to_string(),
            View::LastSeen(v) => format!("last{}", o(v)),
            View::Flags(f) => {
                let ids: Vec<String> = flag_sets[f as usize].iter().map(|b| b.to_string()).collect();
                format!("flags{{{}}}", ids.join(","))
            }
        };
        format!("r{}|{}|t{}", r, view, self.turn)
    }
}
