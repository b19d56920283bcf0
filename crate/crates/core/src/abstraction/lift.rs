//! Lifting a memoryless game strategy to a finite-memory strategy on the
//! world POMDP.

use std::collections::{BTreeMap, HashMap};

use super::{AbstractGame, AbstractState, AbstractionError, View};
use crate::gridworld::WorldGraph;
use crate::solver::Strategy;
use crate::worldmodel::Observation;

/// A finite-memory, observation-based robot strategy. Memory states are
/// the abstract Player-1 states; the action depends only on memory and the
/// memory update only on the observation received after acting.
#[derive(Debug, Clone)]
pub struct ObservationAutomaton {
    pub initial: usize,
    pub memory: Vec<AbstractState>,
    /// Action name per memory state; `None` on goal and bad states.
    pub output: Vec<Option<String>>,
    pub update: HashMap<(u32, Observation), u32>,
    flag_sets: Vec<Vec<u32>>,
    block_of: Option<Vec<u32>>,
}

impl ObservationAutomaton {
    pub fn num_memory_states(&self) -> usize {
        self.memory.len()
    }

    pub fn action(&self, mem: usize) -> Option<&str> {
        self.output[mem].as_deref()
    }

    pub fn next(&self, mem: usize, obs: &Observation) -> Option<usize> {
        self.update.get(&(mem as u32, *obs)).map(|&m| m as usize)
    }

    /// Initial memory state consistent with the first observation.
    pub fn start(&self, obs: &Observation) -> Option<usize> {
        (self.observation(self.initial) == *obs).then_some(self.initial)
    }

    pub fn observation(&self, mem: usize) -> Observation {
        let st = self.memory[mem];
        Observation {
            robot: st.robot,
            opponent: match st.view {
                View::Visible(v) => Some(v),
                _ => None,
            },
            turn: st.turn,
        }
    }

    /// Whether memory state `mem` allows the opponent to be at `v1`.
    pub fn admits(&self, mem: usize, v1: u32) -> bool {
        match self.memory[mem].view {
            View::Visible(v) | View::LastSeen(v) => v == v1,
            View::Hidden => true,
            View::Flags(f) => match &self.block_of {
                Some(b) => self.flag_sets[f as usize].contains(&b[v1 as usize]),
                None => true,
            },
        }
    }

    /// Human-readable `state -> action` rows in memory order.
    pub fn dump(&self, graphs: &[WorldGraph]) -> String {
        let mut out = String::new();
        for (m, st) in self.memory.iter().enumerate() {
            if let Some(a) = &self.output[m] {
                out.push_str(&format!("{} -> {}\n", st.describe(graphs, &self.flag_sets), a));
            }
        }
        out
    }
}

/// Turns the Player-1 part of a solved strategy into an observation
/// automaton.
pub fn lift_strategy(game: &AbstractGame, strategy: &Strategy) -> Result<ObservationAutomaton, AbstractionError> {
    let m = &game.model;
    let choices = (0..game.num_player1())
        .map(|p| {
            if m.labels[p].is_target() {
                return Ok(None);
            }
            match strategy.choice.get(p).copied().flatten() {
                Some(local) if (local as usize) < m.choices(p).len() => Ok(Some(m.row_start[p] + local as usize)),
                _ => Err(AbstractionError::UndefinedStrategy { state: p }),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    build_automaton(game, &choices)
}

/// Rebuilds an automaton from `decoration -> action` rows, as written by a
/// strategy dump.
pub fn lift_actions(
    game: &AbstractGame,
    graphs: &[WorldGraph],
    actions: &BTreeMap<String, String>,
) -> Result<ObservationAutomaton, AbstractionError> {
    let m = &game.model;
    let choices = (0..game.num_player1())
        .map(|p| {
            if m.labels[p].is_target() {
                return Ok(None);
            }
            actions
                .get(&game.decoration(p, graphs))
                .and_then(|a| m.find_choice(p, a))
                .map(Some)
                .ok_or(AbstractionError::UndefinedStrategy { state: p })
        })
        .collect::<Result<Vec<_>, _>>()?;
    build_automaton(game, &choices)
}

fn build_automaton(game: &AbstractGame, choices: &[Option<usize>]) -> Result<ObservationAutomaton, AbstractionError> {
    let m = &game.model;
    let mut output = vec![None; game.num_player1()];
    let mut update = HashMap::new();
    for (p, c) in choices.iter().enumerate() {
        let Some(c) = *c else { continue };
        output[p] = Some(m.action_name(c).to_string());
        for (sel, _) in m.transitions(c) {
            for ch in m.choices(sel) {
                for (q, _) in m.transitions(ch) {
                    let obs = game.observation(q);
                    match update.insert((p as u32, obs), q as u32) {
                        Some(prev) if prev as usize != q => {
                            return Err(AbstractionError::AmbiguousUpdate {
                                state: p,
                                action: m.action_name(c).to_string(),
                                observation: obs.to_string(),
                            })
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(ObservationAutomaton {
        initial: m.initial,
        memory: game.states.clone(),
        output,
        update,
        flag_sets: game.flag_sets.clone(),
        block_of: game.partition.as_ref().map(|p| p.block_of.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_abstract_world_pg, row_stripes, AbstractionOptions, RegionPartition, Refinement};
    use super::*;
    use crate::gridworld::{build_world_graphs, Cell, Scenario, VisibilityTable};
    use crate::solver::{solve_pg, Query, SolveOptions};
    use crate::worldmodel::OpponentPolicy;

    fn lifted(s: &Scenario, refinement: Refinement) -> (AbstractGame, ObservationAutomaton) {
        let g = build_world_graphs(s).unwrap();
        let part = RegionPartition::new(s, row_stripes(s, 2), &g[1]).unwrap();
        let game = build_abstract_world_pg(
            s,
            &g,
            &VisibilityTable::new(s),
            &OpponentPolicy::Uniform,
            Some(&part),
            &AbstractionOptions::with_refinement(refinement),
        )
        .unwrap();
        let r = solve_pg(&game.model, &Query::reach_avoid(), &SolveOptions::default()).unwrap();
        let a = lift_strategy(&game, &r.strategy).unwrap();
        (game, a)
    }

    #[test]
    fn unrefined_automaton_is_memoryless_in_observations() {
        let s = Scenario::open_room(3, 6, 1, Cell::new(0, 0), Cell::new(2, 5), Cell::new(2, 5));
        let (game, a) = lifted(&s, Refinement::None);
        assert_eq!(a.num_memory_states(), game.num_player1());
        let mut by_obs: HashMap<Observation, Option<String>> = HashMap::new();
        for m in 0..a.num_memory_states() {
            let prev = by_obs.insert(a.observation(m), a.output[m].clone());
            assert!(prev.is_none(), "two memory states share an observation");
        }
    }

    #[test]
    fn one_step_memory_only_restricts_the_adversary() {
        // Last-seen states occur on opponent turns, where the robot has a
        // single action, so the lifted outputs agree with the observation.
        let s = Scenario::open_room(3, 6, 1, Cell::new(0, 0), Cell::new(2, 5), Cell::new(2, 5));
        let (game, a) = lifted(&s, Refinement::OneStep);
        for m in 0..a.num_memory_states() {
            if matches!(game.states[m].view, View::LastSeen(_)) && !game.model.labels[m].is_target() {
                assert_eq!(a.action(m), Some(crate::worldmodel::OPPONENT_ACTION));
            }
        }
    }

    #[test]
    fn region_memory_separates_identical_observations() {
        let s = Scenario::open_room(4, 10, 1, Cell::new(0, 0), Cell::new(3, 9), Cell::new(3, 9));
        let (_, a) = lifted(&s, Refinement::Regions);
        let mut by_obs: HashMap<Observation, Vec<&str>> = HashMap::new();
        for m in 0..a.num_memory_states() {
            if let Some(act) = a.action(m) {
                by_obs.entry(a.observation(m)).or_default().push(act);
            }
        }
        let split = by_obs.iter().any(|(o, acts)| o.opponent.is_none() && acts.iter().any(|x| *x != acts[0]));
        assert!(split, "no far-away observation maps to two actions");
    }

    #[test]
    fn updates_cover_every_reachable_memory_state() {
        let s = Scenario::open_room(4, 8, 2, Cell::new(0, 0), Cell::new(3, 7), Cell::new(3, 7));
        for r in [Refinement::None, Refinement::OneStep, Refinement::Regions] {
            let (game, a) = lifted(&s, r);
            let mut reach = vec![false; a.num_memory_states()];
            let mut stack = vec![a.initial];
            reach[a.initial] = true;
            while let Some(m) = stack.pop() {
                for (&(from, _), &to) in &a.update {
                    if from as usize == m && !reach[to as usize] {
                        reach[to as usize] = true;
                        stack.push(to as usize);
                    }
                }
            }
            for (m, &r) in reach.iter().enumerate() {
                if r && !game.model.labels[m].is_target() {
                    assert!(a.action(m).is_some());
                }
            }
        }
    }

    #[test]
    fn dumped_actions_rebuild_the_same_automaton() {
        let s = Scenario::open_room(4, 6, 1, Cell::new(0, 0), Cell::new(3, 5), Cell::new(3, 5));
        let g = build_world_graphs(&s).unwrap();
        let (game, a) = lifted(&s, Refinement::Regions);
        let rows: BTreeMap<String, String> = (0..a.num_memory_states())
            .filter_map(|m| a.action(m).map(|x| (game.decoration(m, &g), x.to_string())))
            .collect();
        let b = lift_actions(&game, &g, &rows).unwrap();
        assert_eq!(a.output, b.output);
        assert_eq!(a.update, b.update);
        let mut partial = rows.clone();
        partial.pop_first();
        assert!(matches!(lift_actions(&game, &g, &partial), Err(AbstractionError::UndefinedStrategy { .. })));
    }

    #[test]
    fn undefined_choice_is_reported() {
        let s = Scenario::open_room(3, 3, 1, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2));
        let (game, _) = lifted(&s, Refinement::OneStep);
        let mut strat = solve_pg(&game.model, &Query::reach_avoid(), &SolveOptions::default()).unwrap().strategy;
        strat.choice[0] = None;
        assert_eq!(lift_strategy(&game, &strat).unwrap_err(), AbstractionError::UndefinedStrategy { state: 0 });
    }
}
