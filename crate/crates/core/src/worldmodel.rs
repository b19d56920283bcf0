//! World MDP and world POMDP over the product of agent graphs.
//!
//! A world state is the tuple `(v_0, …, v_n, j)` where `j` says whose turn it
//! is. The robot moves when `j = 0`; opponent `i` moves when `j = i` by
//! sampling its policy, after which the turn passes to `(i + 1) mod (n + 1)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::gridworld::{Cell, Scenario, VisibilityTable, WorldGraph};
use crate::model::{ExplicitModel, Interner, Labels, ModelBuilder, ModelError, Player};

/// Name of the single action available on opponent turns.
pub const OPPONENT_ACTION: &str = "opponent";

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("need the robot graph and at least one opponent graph")]
    MissingGraphs,
    #[error("{graphs} opponent graphs but {policies} policies")]
    PolicyCount { graphs: usize, policies: usize },
    #[error("policy of opponent {agent} puts mass on disabled movement {movement} at position {position}")]
    DisabledMovement { agent: usize, position: u32, movement: u8 },
    #[error("policy of opponent {agent} at position {position} is not a distribution: {reason}")]
    BadPolicyRow { agent: usize, position: u32, reason: String },
    #[error("world state space too large to index")]
    TooLarge,
    #[error("observations require exactly one opponent, model has {0}")]
    OpponentCount(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Randomized movement choice of one opponent.
#[derive(Debug, Clone, PartialEq)]
pub enum OpponentPolicy {
    /// Equal probability on every enabled movement.
    Uniform,
    /// Explicit rows keyed by `(robot position, opponent position)`; pairs
    /// without a row fall back to uniform.
    Table(HashMap<(u32, u32), Vec<(u8, f64)>>),
}

impl OpponentPolicy {
    /// Movement distribution at `(v0, vi)` for an opponent with graph `g`.
    pub fn row(&self, g: &WorldGraph, v0: u32, vi: u32) -> Vec<(u8, f64)> {
        let uniform = || {
            let e = g.enabled(vi);
            let p = 1.0 / e.len() as f64;
            e.iter().map(|&(m, _)| (m, p)).collect()
        };
        match self {
            OpponentPolicy::Uniform => uniform(),
            OpponentPolicy::Table(t) => t.get(&(v0, vi)).cloned().unwrap_or_else(uniform),
        }
    }

    fn check(&self, g: &WorldGraph) -> Result<(), WorldError> {
        let OpponentPolicy::Table(t) = self else {
            return Ok(());
        };
        let mut keys: Vec<_> = t.keys().copied().collect();
        keys.sort_unstable();
        for (v0, vi) in keys {
            let row = &t[&(v0, vi)];
            let bad_row = |reason: String| WorldError::BadPolicyRow {
                agent: g.agent_index,
                position: vi,
                reason,
            };
            if (vi as usize) >= g.len() {
                return Err(bad_row("position out of range".into()));
            }
            let mut mass = 0.0;
            for &(m, p) in row {
                if g.effect(vi, m).is_none() {
                    return Err(WorldError::DisabledMovement {
                        agent: g.agent_index,
                        position: vi,
                        movement: m,
                    });
                }
                if !(p > 0.0) {
                    return Err(bad_row(format!("probability {p}")));
                }
                mass += p;
            }
            if (mass - 1.0).abs() > crate::model::MASS_TOLERANCE {
                return Err(bad_row(format!("mass {mass}")));
            }
        }
        Ok(())
    }
}

/// Decoded world state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub positions: Vec<u32>,
    pub turn: usize,
}

/// A world MDP (or POMDP, once observations are attached) together with the
/// tuple encoding of its states.
#[derive(Debug, Clone)]
pub struct WorldModel {
    pub model: ExplicitModel,
    /// Packed tuple per state.
    keys: Vec<u64>,
    index: HashMap<u64, u32>,
    /// Number of positions per agent.
    radices: Vec<u64>,
}

impl WorldModel {
    pub fn num_opponents(&self) -> usize {
        self.radices.len() - 1
    }

    fn pack(&self, st: &WorldState) -> u64 {
        pack(&self.radices, &st.positions, st.turn)
    }

    pub fn state(&self, s: usize) -> WorldState {
        let mut k = self.keys[s];
        let turns = self.radices.len() as u64;
        let turn = (k % turns) as usize;
        k /= turns;
        let mut positions = vec![0; self.radices.len()];
        for i in (0..self.radices.len()).rev() {
            positions[i] = (k % self.radices[i]) as u32;
            k /= self.radices[i];
        }
        WorldState { positions, turn }
    }

    /// State id of a tuple, if it is reachable.
    pub fn find(&self, st: &WorldState) -> Option<usize> {
        self.index.get(&self.pack(st)).map(|&i| i as usize)
    }

    pub fn decoration(&self, s: usize, graphs: &[WorldGraph]) -> String {
        decorate(&self.state(s), graphs)
    }

    /// Fills `model.state_names` with tuple decorations.
    pub fn name_states(&mut self, graphs: &[WorldGraph]) {
        let names = (0..self.model.num_states()).map(|s| self.decoration(s, graphs)).collect();
        self.model.state_names = Some(names);
    }
}

fn pack(radices: &[u64], positions: &[u32], turn: usize) -> u64 {
    let mut k = 0u64;
    for (i, &v) in positions.iter().enumerate() {
        k = k * radices[i] + v as u64;
    }
    k * radices.len() as u64 + turn as u64
}

/// Tuple decoration such as `r(0,0,E)|o(2,2)|t0`.
pub fn decorate(st: &WorldState, graphs: &[WorldGraph]) -> String {
    let mut out = format!("r{}", graphs[0].positions[st.positions[0] as usize]);
    let n = st.positions.len() - 1;
    for i in 1..=n {
        let p = graphs[i].positions[st.positions[i] as usize];
        if n == 1 {
            out.push_str(&format!("|o{p}"));
        } else {
            out.push_str(&format!("|o{i}{p}"));
        }
    }
    out.push_str(&format!("|t{}", st.turn));
    out
}

/// Builds the reachable fragment of the world MDP. Every state is a
/// Player-1 state and labels are left empty; see [`label_states`].
pub fn build_world_mdp(graphs: &[WorldGraph], policies: &[OpponentPolicy]) -> Result<WorldModel, WorldError> {
    if graphs.len() < 2 {
        return Err(WorldError::MissingGraphs);
    }
    let n = graphs.len() - 1;
    if policies.len() != n {
        return Err(WorldError::PolicyCount { graphs: n, policies: policies.len() });
    }
    for (g, p) in graphs[1..].iter().zip(policies) {
        p.check(g)?;
    }
    let radices: Vec<u64> = graphs.iter().map(|g| g.len() as u64).collect();
    let total = radices
        .iter()
        .try_fold(radices.len() as u64, |acc, &r| acc.checked_mul(r))
        .ok_or(WorldError::TooLarge)?;
    if total > u32::MAX as u64 {
        return Err(WorldError::TooLarge);
    }

    let init: Vec<u32> = graphs.iter().map(|g| g.initial).collect();
    let mut ids: HashMap<u64, u32> = HashMap::new();
    let mut keys = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |st: (Vec<u32>, usize), keys: &mut Vec<u64>, queue: &mut VecDeque<(Vec<u32>, usize)>| -> u32 {
        let k = pack(&radices, &st.0, st.1);
        *ids.entry(k).or_insert_with(|| {
            keys.push(k);
            queue.push_back(st);
            (keys.len() - 1) as u32
        })
    };
    intern((init, 0), &mut keys, &mut queue);

    let mut b = ModelBuilder::new();
    let opp = b.action_id(OPPONENT_ACTION);
    let moves: Vec<u32> = graphs[0].movements.iter().map(|m| b.action_id(m)).collect();
    let mut s = 0usize;
    while let Some((pos, turn)) = queue.pop_front() {
        b.start_row(s, Player::One, Labels::NONE)?;
        let next_turn = (turn + 1) % (n + 1);
        if turn == 0 {
            for &(m, t) in graphs[0].enabled(pos[0]) {
                let mut p2 = pos.clone();
                p2[0] = t;
                let id = intern((p2, next_turn), &mut keys, &mut queue);
                b.add_choice_id(moves[m as usize], &[(id, 1.0)]);
            }
        } else {
            let g = &graphs[turn];
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(4);
            for (m, p) in policies[turn - 1].row(g, pos[0], pos[turn]) {
                let target = g.effect(pos[turn], m).ok_or(WorldError::DisabledMovement {
                    agent: turn,
                    position: pos[turn],
                    movement: m,
                })?;
                let mut p2 = pos.clone();
                p2[turn] = target;
                let id = intern((p2, next_turn), &mut keys, &mut queue);
                match row.iter_mut().find(|(t, _)| *t == id) {
                    Some(e) => e.1 += p,
                    None => row.push((id, p)),
                }
            }
            b.add_choice_id(opp, &row);
        }
        s += 1;
    }
    Ok(WorldModel {
        model: b.finish(0),
        keys,
        index: ids,
        radices,
    })
}

/// Marks collision states `bad` and goal-cell states `goal`. A state in both
/// sets is labeled goal only.
pub fn label_states(world: &mut WorldModel, scenario: &Scenario, graphs: &[WorldGraph]) {
    for s in 0..world.model.num_states() {
        let st = world.state(s);
        let robot = graphs[0].location_of(st.positions[0]);
        let goal = scenario.goal_cells.contains(&robot);
        let collision = (1..st.positions.len()).any(|i| graphs[i].location_of(st.positions[i]) == robot);
        world.model.labels[s] = Labels {
            goal,
            bad: collision && !goal,
        };
    }
}

/// What the robot perceives: its own position, the opponent's position when
/// visible (`None` stands for "far away"), and whose turn it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub robot: u32,
    pub opponent: Option<u32>,
    pub turn: u8,
}

impl Observation {
    pub fn describe(&self, graphs: &[WorldGraph]) -> String {
        let r = graphs[0].positions[self.robot as usize];
        match self.opponent {
            Some(o) => format!("r{}|o{}|t{}", r, graphs[1].positions[o as usize], self.turn),
            None => format!("r{}|far|t{}", r, self.turn),
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.opponent {
            Some(o) => write!(f, "{}:{}:{}", self.robot, o, self.turn),
            None => write!(f, "{}:far:{}", self.robot, self.turn),
        }
    }
}

/// Observation the robot receives in a world state with one opponent.
pub fn observe(st: &WorldState, graphs: &[WorldGraph], vis: &VisibilityTable) -> Observation {
    let robot_cell: Cell = graphs[0].location_of(st.positions[0]);
    let opp_cell = graphs[1].location_of(st.positions[1]);
    Observation {
        robot: st.positions[0],
        opponent: vis.sees(robot_cell, opp_cell).then_some(st.positions[1]),
        turn: st.turn as u8,
    }
}

/// A world POMDP: the world model with observation ids attached.
#[derive(Debug, Clone)]
pub struct WorldPomdp {
    pub world: WorldModel,
    pub observations: Vec<Observation>,
}

impl WorldPomdp {
    pub fn model(&self) -> &ExplicitModel {
        &self.world.model
    }

    pub fn observation_of(&self, s: usize) -> Observation {
        let obs = self.world.model.observations.as_ref().expect("observations attached");
        self.observations[obs[s] as usize]
    }
}

/// Attaches the robot's observation to every state of a one-opponent world model.
pub fn attach_observations(
    mut world: WorldModel,
    graphs: &[WorldGraph],
    vis: &VisibilityTable,
) -> Result<WorldPomdp, WorldError> {
    if world.num_opponents() != 1 {
        return Err(WorldError::OpponentCount(world.num_opponents()));
    }
    let mut table = Interner::default();
    let ids = (0..world.model.num_states())
        .map(|s| table.intern(observe(&world.state(s), graphs, vis)).0)
        .collect();
    let observations = table.into_values();
    world.model.observations = Some(ids);
    world.model.observation_names = observations.iter().map(|o| o.describe(graphs)).collect();
    world.model.validate()?;
    Ok(WorldPomdp { world, observations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{build_world_graphs, Direction};
    use std::collections::HashSet;

    fn sc1(n: usize) -> Scenario {
        Scenario::open_room(n, n, 3, Cell::new(0, 0), Cell::new(n - 1, n - 1), Cell::new(n - 1, n - 1))
    }

    fn world(s: &Scenario) -> (Vec<WorldGraph>, WorldModel) {
        let g = build_world_graphs(s).unwrap();
        let mut w = build_world_mdp(&g, &vec![OpponentPolicy::Uniform; g.len() - 1]).unwrap();
        label_states(&mut w, s, &g);
        (g, w)
    }

    /// Tuple-level BFS that shares no code with the builder.
    fn oracle_reachable(n: i64) -> usize {
        type T = (i64, i64, usize, i64, i64, u8);
        let dirs = [(0, -1), (1, 0), (0, 1), (-1, 0)];
        let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < n && y < n;
        let start: T = (0, 0, 1, n - 1, n - 1, 0);
        let mut seen: HashSet<T> = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some((x, y, d, ox, oy, j)) = stack.pop() {
            let mut next = Vec::new();
            if j == 0 {
                let (dx, dy) = dirs[d];
                if inside(x + dx, y + dy) {
                    next.push((x + dx, y + dy, d, ox, oy, 1));
                }
                next.push((x, y, (d + 3) % 4, ox, oy, 1));
                next.push((x, y, (d + 1) % 4, ox, oy, 1));
            } else {
                for (dx, dy) in dirs {
                    if inside(ox + dx, oy + dy) {
                        next.push((x, y, d, ox + dx, oy + dy, 0));
                    }
                }
            }
            for t in next {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn reachable_count_matches_tuple_bfs() {
        for n in [2, 3, 4] {
            let (_, w) = world(&sc1(n));
            assert_eq!(w.model.num_states(), oracle_reachable(n as i64), "n = {n}");
        }
    }

    #[test]
    fn robot_turn_offers_three_dirac_moves() {
        // 1x2 grid, robot at (0,0) facing the opponent at (1,0).
        let s = Scenario::open_room(2, 1, 3, Cell::new(0, 0), Cell::new(1, 0), Cell::new(1, 0));
        let (_, w) = world(&s);
        let m = &w.model;
        let names: Vec<_> = m.choices(m.initial).map(|c| m.action_name(c).to_string()).collect();
        assert_eq!(names, ["forward", "turn_left", "turn_right"]);
        for c in m.choices(m.initial) {
            assert_eq!(m.transitions(c).count(), 1);
        }
    }

    #[test]
    fn corner_opponent_splits_evenly() {
        let s = sc1(3);
        let (g, w) = world(&s);
        let m = &w.model;
        let c = m.choices(m.initial).start;
        let (after, _) = m.transitions(c).next().unwrap();
        assert_eq!(w.state(after).turn, 1);
        let row: Vec<_> = m.transitions(m.choices(after).start).collect();
        assert_eq!(row.len(), 2);
        for (t, p) in row {
            assert_eq!(p, 0.5);
            assert_ne!(g[1].location_of(w.state(t).positions[1]), Cell::new(2, 2));
        }
    }

    #[test]
    fn labels_and_tie_rule() {
        let mut s = sc1(3);
        s.goal_cells = [Cell::new(2, 2), Cell::new(1, 1)].into_iter().collect();
        let (g, w) = world(&s);
        let find = |rc: Cell, oc: Cell| {
            let v0 = g[0].position_id(rc, Some(Direction::E)).unwrap();
            let v1 = g[1].position_id(oc, None).unwrap();
            (0..w.model.num_states())
                .find(|&i| w.state(i).positions == vec![v0, v1])
                .unwrap()
        };
        assert_eq!(w.model.labels[find(Cell::new(1, 0), Cell::new(1, 0))], Labels { goal: false, bad: true });
        assert_eq!(w.model.labels[find(Cell::new(1, 1), Cell::new(0, 2))], Labels { goal: true, bad: false });
        assert_eq!(w.model.labels[find(Cell::new(1, 1), Cell::new(1, 1))], Labels { goal: true, bad: false });
    }

    #[test]
    fn turns_alternate_and_rows_normalize() {
        let mut s = sc1(3);
        s.opponent_starts.push(Cell::new(2, 0));
        let (_, w) = world(&s);
        assert!(w.model.validate().is_ok());
        for st in 0..w.model.num_states() {
            let j = w.state(st).turn;
            for c in w.model.choices(st) {
                for (t, _) in w.model.transitions(c) {
                    assert_eq!(w.state(t).turn, (j + 1) % 3);
                }
            }
        }
        assert_eq!(w.model.bfs_order().len(), w.model.num_states());
    }

    #[test]
    fn observations_hide_distant_and_occluded() {
        let s = Scenario::open_room(6, 3, 3, Cell::new(0, 1), Cell::new(5, 1), Cell::new(5, 1));
        let (g, w) = world(&s);
        let vis = VisibilityTable::new(&s);
        let p = attach_observations(w, &g, &vis).unwrap();
        let init = p.observation_of(p.model().initial);
        assert_eq!(init.opponent, None, "Chebyshev distance 5 > 3");

        let mut blocked = Scenario::open_room(3, 3, 3, Cell::new(0, 1), Cell::new(2, 1), Cell::new(2, 1));
        blocked.obstacles.insert(Cell::new(1, 1));
        let (g, w) = world(&blocked);
        let vis = VisibilityTable::new(&blocked);
        let p = attach_observations(w, &g, &vis).unwrap();
        assert_eq!(p.observation_of(p.model().initial).opponent, None, "behind an obstacle");

        let near = sc1(3);
        let (g, w) = world(&near);
        let vis = VisibilityTable::new(&near);
        let p = attach_observations(w, &g, &vis).unwrap();
        let o = p.observation_of(p.model().initial);
        assert_eq!(o.opponent, Some(g[1].initial));
        assert_eq!(p.model().observation_names[0], "r(0,0,E)|o(2,2)|t0");
    }

    #[test]
    fn observation_consistency_projection() {
        let mut s = sc1(5);
        s.obstacles.insert(Cell::new(2, 2));
        let (g, w) = world(&s);
        let vis = VisibilityTable::new(&s);
        let p = attach_observations(w, &g, &vis).unwrap();
        for st in 0..p.model().num_states() {
            let ws = p.world.state(st);
            let o = p.observation_of(st);
            assert_eq!(o.robot, ws.positions[0]);
            assert_eq!(o.turn as usize, ws.turn);
            if let Some(v1) = o.opponent {
                assert_eq!(v1, ws.positions[1]);
            }
        }
    }

    #[test]
    fn policy_on_disabled_move_is_rejected() {
        let s = sc1(3);
        let g = build_world_graphs(&s).unwrap();
        let corner = g[1].position_id(Cell::new(2, 2), None).unwrap();
        let table = HashMap::from([((g[0].initial, corner), vec![(1u8, 1.0)])]);
        assert!(matches!(
            build_world_mdp(&g, &[OpponentPolicy::Table(table)]),
            Err(WorldError::DisabledMovement { movement: 1, .. })
        ));
    }

    #[test]
    fn multi_opponent_models_reject_observations() {
        let mut s = sc1(3);
        s.opponent_starts.push(Cell::new(2, 0));
        let (g, w) = world(&s);
        let vis = VisibilityTable::new(&s);
        assert!(matches!(attach_observations(w, &g, &vis), Err(WorldError::OpponentCount(2))));
    }
}
