//! Direct construction of the abstract world game from the agent graphs,
//! without materializing the world POMDP first.

use std::collections::{HashMap, HashSet, VecDeque};

use fixedbitset::FixedBitSet;

use super::{AbstractState, AbstractionError, RegionPartition, Refinement, View};
use crate::gridworld::{Scenario, VisibilityTable, WorldGraph};
use crate::model::{ExplicitModel, Interner, Labels, Player};
use crate::worldmodel::{Observation, OpponentPolicy, OPPONENT_ACTION};

/// Which hidden opponent positions Player 2 may pick in a far-away state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemberSet {
    /// Every hidden free cell.
    #[default]
    AllHidden,
    /// Only positions that form a reachable world state together with the
    /// robot position and turn, exactly as in the observation classes of the
    /// reachable world POMDP.
    Reachable,
}

impl MemberSet {
    pub fn name(self) -> &'static str {
        match self {
            MemberSet::AllHidden => "all-hidden",
            MemberSet::Reachable => "reachable",
        }
    }

    pub fn parse(s: &str) -> Option<MemberSet> {
        match s {
            "all-hidden" => Some(MemberSet::AllHidden),
            "reachable" => Some(MemberSet::Reachable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbstractionOptions {
    pub refinement: Refinement,
    pub members: MemberSet,
    /// Drop Player-2 choices whose successor distribution repeats an earlier one.
    pub merge_duplicate_choices: bool,
}

impl Default for AbstractionOptions {
    fn default() -> Self {
        AbstractionOptions {
            refinement: Refinement::OneStep,
            members: MemberSet::AllHidden,
            merge_duplicate_choices: true,
        }
    }
}

impl AbstractionOptions {
    pub fn with_refinement(refinement: Refinement) -> Self {
        AbstractionOptions {
            refinement,
            ..Default::default()
        }
    }
}

/// Role of a state of [`AbstractGame::model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Player1(usize),
    Selector { class: usize, action: u32 },
}

/// The abstract world game. Player-1 states come first, so model state `p`
/// with `p < states.len()` is `states[p]`; selector `i` is model state
/// `states.len() + i`.
#[derive(Debug, Clone)]
pub struct AbstractGame {
    pub model: ExplicitModel,
    pub states: Vec<AbstractState>,
    pub selectors: Vec<(u32, u32)>,
    pub flag_sets: Vec<Vec<u32>>,
    pub refinement: Refinement,
    pub members: MemberSet,
    pub partition: Option<RegionPartition>,
}

impl AbstractGame {
    pub fn num_player1(&self) -> usize {
        self.states.len()
    }

    pub fn node(&self, s: usize) -> Node {
        if s < self.states.len() {
            Node::Player1(s)
        } else {
            let (class, action) = self.selectors[s - self.states.len()];
            Node::Selector {
                class: class as usize,
                action,
            }
        }
    }

    pub fn observation(&self, p: usize) -> Observation {
        let st = self.states[p];
        Observation {
            robot: st.robot,
            opponent: match st.view {
                View::Visible(v) => Some(v),
                _ => None,
            },
            turn: st.turn,
        }
    }

    pub fn decoration(&self, s: usize, graphs: &[WorldGraph]) -> String {
        match self.node(s) {
            Node::Player1(p) => self.states[p].describe(graphs, &self.flag_sets),
            Node::Selector { class, action } => format!(
                "{}#{}",
                self.states[class].describe(graphs, &self.flag_sets),
                self.model.action_names[action as usize]
            ),
        }
    }

    /// Fills `model.state_names` with decorations.
    pub fn name_states(&mut self, graphs: &[WorldGraph]) {
        let names = (0..self.model.num_states()).map(|s| self.decoration(s, graphs)).collect();
        self.model.state_names = Some(names);
    }
}

struct Builder<'a> {
    scenario: &'a Scenario,
    graphs: &'a [WorldGraph],
    partition: Option<&'a RegionPartition>,
    opts: AbstractionOptions,
    /// Per robot free-cell index: visible opponent positions.
    seen: Vec<FixedBitSet>,
    /// Per robot free-cell index and cell parity: hidden admissible positions.
    hidden: Vec<[Vec<u32>; 2]>,
    /// Per robot free-cell index and block: whether the block is fully visible.
    block_visible: Vec<Vec<bool>>,
    reachable_opponent: Vec<bool>,
    invariant: u8,
    states: Interner<AbstractState>,
    labels: Vec<Labels>,
    flags: Interner<Vec<u32>>,
    prune_cache: HashMap<(u32, u32), u32>,
    expand_cache: HashMap<u32, u32>,
    queue: VecDeque<u32>,
}

fn cell_parity(g: &WorldGraph, v: u32) -> u8 {
    let c = g.location_of(v);
    ((c.x + c.y) & 1) as u8
}

impl<'a> Builder<'a> {
    /// Free-cell index of the robot's cell; equals the opponent position id of that cell.
    fn cell_of(&self, v0: u32) -> usize {
        v0 as usize / 4
    }

    fn robot_parity(&self, v0: u32) -> u8 {
        let d = self.graphs[0].positions[v0 as usize].orientation.map_or(0, |d| d.index());
        cell_parity(&self.graphs[0], v0) ^ (d & 1) as u8
    }

    fn visible(&self, v0: u32, v1: u32) -> bool {
        self.seen[self.cell_of(v0)].contains(v1 as usize)
    }

    /// Parity the opponent's cell has in every reachable world state with
    /// robot position `v0` and turn `turn`.
    fn opponent_parity(&self, v0: u32, turn: u8) -> u8 {
        self.invariant ^ self.robot_parity(v0) ^ turn
    }

    fn admissible(&self, v0: u32, turn: u8, v1: u32) -> bool {
        match self.opts.members {
            MemberSet::AllHidden => true,
            MemberSet::Reachable => {
                self.reachable_opponent[v1 as usize] && cell_parity(&self.graphs[1], v1) == self.opponent_parity(v0, turn)
            }
        }
    }

    fn members(&self, st: &AbstractState) -> Vec<u32> {
        match st.view {
            View::Visible(v) | View::LastSeen(v) => vec![v],
            View::Hidden => {
                let h = &self.hidden[self.cell_of(st.robot)];
                match self.opts.members {
                    MemberSet::Reachable => h[self.opponent_parity(st.robot, st.turn) as usize].clone(),
                    MemberSet::AllHidden => {
                        let mut all = [h[0].as_slice(), h[1].as_slice()].concat();
                        all.sort_unstable();
                        all
                    }
                }
            }
            View::Flags(f) => {
                let part = self.partition.expect("flags need a partition");
                self.flags
                    .value(f)
                    .iter()
                    .flat_map(|&b| part.members[b as usize].iter().copied())
                    .filter(|&v| !self.visible(st.robot, v) && self.admissible(st.robot, st.turn, v))
                    .collect()
            }
        }
    }

    fn intern_flags(&mut self, mut blocks: Vec<u32>, cell: usize) -> u32 {
        blocks.retain(|&b| !self.block_visible[cell][b as usize]);
        debug_assert!(!blocks.is_empty(), "flag set pruned to nothing");
        self.flags.intern(blocks).0
    }

    fn prune(&mut self, f: u32, cell: usize) -> u32 {
        if let Some(&g) = self.prune_cache.get(&(f, cell as u32)) {
            return g;
        }
        let blocks = self.flags.value(f).clone();
        let g = self.intern_flags(blocks, cell);
        self.prune_cache.insert((f, cell as u32), g);
        g
    }

    fn expand(&mut self, f: u32) -> u32 {
        if let Some(&g) = self.expand_cache.get(&f) {
            return g;
        }
        let part = self.partition.expect("flags need a partition");
        let g = self.flags.intern(part.expand(self.flags.value(f))).0;
        self.expand_cache.insert(f, g);
        g
    }

    fn node(&mut self, st: AbstractState) -> u32 {
        let (id, fresh) = self.states.intern(st);
        if fresh {
            let robot = self.graphs[0].location_of(st.robot);
            let goal = self.scenario.goal_cells.contains(&robot);
            let collision = matches!(st.view, View::Visible(v) if self.graphs[1].location_of(v) == robot);
            self.labels.push(Labels {
                goal,
                bad: collision && !goal,
            });
            self.queue.push_back(id);
        }
        id
    }

    /// Abstract state reached when the robot moves to `v0` while the opponent
    /// stays at `v1`.
    fn after_robot(&mut self, from: View, v0: u32, v1: u32) -> u32 {
        let view = if self.visible(v0, v1) {
            View::Visible(v1)
        } else {
            match (from, self.opts.refinement) {
                (View::Visible(_), Refinement::None) => View::Hidden,
                (View::Visible(_), _) => View::LastSeen(v1),
                (View::Flags(f), _) => View::Flags(self.prune(f, self.cell_of(v0))),
                _ => View::Hidden,
            }
        };
        self.node(AbstractState { robot: v0, turn: 1, view })
    }

    /// Abstract state reached when the opponent moves from `from_pos` to `v1`
    /// while the robot stays at `v0`.
    fn after_opponent(&mut self, from: View, v0: u32, from_pos: u32, v1: u32) -> u32 {
        let view = if self.visible(v0, v1) {
            View::Visible(v1)
        } else {
            match (from, self.opts.refinement) {
                (View::Visible(_) | View::LastSeen(_), Refinement::Regions) => {
                    let part = self.partition.expect("flags need a partition");
                    let mut blocks: Vec<u32> = self.graphs[1]
                        .enabled(from_pos)
                        .iter()
                        .filter(|&&(_, t)| !self.visible(v0, t))
                        .map(|&(_, t)| part.block_of[t as usize])
                        .collect();
                    blocks.sort_unstable();
                    blocks.dedup();
                    View::Flags(self.intern_flags(blocks, self.cell_of(v0)))
                }
                (View::Flags(f), _) => {
                    let e = self.expand(f);
                    View::Flags(self.prune(e, self.cell_of(v0)))
                }
                _ => View::Hidden,
            }
        };
        self.node(AbstractState { robot: v0, turn: 0, view })
    }
}

/// Builds the reachable part of the abstract world game of a one-opponent
/// scenario.
pub fn build_abstract_world_pg(
    scenario: &Scenario,
    graphs: &[WorldGraph],
    vis: &VisibilityTable,
    policy: &OpponentPolicy,
    partition: Option<&RegionPartition>,
    opts: &AbstractionOptions,
) -> Result<AbstractGame, AbstractionError> {
    if graphs.len() != 2 {
        return Err(AbstractionError::OpponentCount(graphs.len().saturating_sub(1)));
    }
    if opts.refinement == Refinement::Regions && partition.is_none() {
        return Err(AbstractionError::MissingPartition);
    }
    let partition = partition.filter(|_| opts.refinement == Refinement::Regions);
    let (robot, opp) = (&graphs[0], &graphs[1]);

    let mut seen = Vec::with_capacity(opp.len());
    let mut hidden = Vec::with_capacity(opp.len());
    for c in 0..opp.len() as u32 {
        let from = opp.location_of(c);
        let mut bits = FixedBitSet::with_capacity(opp.len());
        let mut h: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        for v in 0..opp.len() as u32 {
            if vis.sees(from, opp.location_of(v)) {
                bits.insert(v as usize);
            } else {
                h[cell_parity(opp, v) as usize].push(v);
            }
        }
        seen.push(bits);
        hidden.push(h);
    }
    let block_visible = match partition {
        Some(p) => seen
            .iter()
            .map(|bits| p.members.iter().map(|m| m.iter().all(|&v| bits.contains(v as usize))).collect())
            .collect(),
        None => Vec::new(),
    };
    let mut reachable_opponent = vec![false; opp.len()];
    let mut stack = vec![opp.initial];
    reachable_opponent[opp.initial as usize] = true;
    while let Some(v) = stack.pop() {
        for &(_, t) in opp.enabled(v) {
            if !reachable_opponent[t as usize] {
                reachable_opponent[t as usize] = true;
                stack.push(t);
            }
        }
    }
    if opts.members == MemberSet::Reachable {
        for h in &mut hidden {
            for list in h.iter_mut() {
                list.retain(|&v| reachable_opponent[v as usize]);
            }
        }
    }

    let mut b = Builder {
        scenario,
        graphs,
        partition,
        opts: *opts,
        seen,
        hidden,
        block_visible,
        reachable_opponent,
        invariant: 0,
        states: Interner::default(),
        labels: Vec::new(),
        flags: Interner::default(),
        prune_cache: HashMap::new(),
        expand_cache: HashMap::new(),
        queue: VecDeque::new(),
    };
    b.invariant = b.robot_parity(robot.initial) ^ cell_parity(opp, opp.initial);

    let (v0, v1) = (robot.initial, opp.initial);
    let view = if b.visible(v0, v1) {
        View::Visible(v1)
    } else if let Some(p) = partition {
        View::Flags(b.intern_flags(vec![p.block_of[v1 as usize]], b.cell_of(v0)))
    } else {
        View::Hidden
    };
    b.node(AbstractState { robot: v0, turn: 0, view });

    let mut actions: Interner<String> = Interner::default();
    let absorb = actions.intern("absorb".to_string()).0;
    let opponent_action = actions.intern(OPPONENT_ACTION.to_string()).0;
    let moves: Vec<u32> = robot.movements.iter().map(|m| actions.intern(m.to_string()).0).collect();
    let mut member_action: HashMap<u32, u32> = HashMap::new();

    // Player-1 rows: (action, selector index) or an absorbing loop.
    let mut p1_rows: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut selectors: Vec<(u32, u32)> = Vec::new();
    let mut sel_row_start: Vec<usize> = vec![0];
    let mut sel_choice_action: Vec<u32> = Vec::new();
    let mut sel_choice_start: Vec<usize> = vec![0];
    let mut sel_targets: Vec<u32> = Vec::new();
    let mut sel_probs: Vec<f64> = Vec::new();

    while let Some(p) = b.queue.pop_front() {
        debug_assert_eq!(p as usize, p1_rows.len());
        if b.labels[p as usize].is_target() {
            p1_rows.push(Vec::new());
            continue;
        }
        let st = *b.states.value(p);
        let members = b.members(&st);
        assert!(!members.is_empty(), "abstract state without admissible opponent position");
        let mut row = Vec::new();
        let steps: Vec<(u32, Option<u32>)> = if st.turn == 0 {
            robot.enabled(st.robot).iter().map(|&(m, t)| (moves[m as usize], Some(t))).collect()
        } else {
            vec![(opponent_action, None)]
        };
        for (action, robot_target) in steps {
            let mut dedup: HashSet<Vec<(u32, u64)>> = HashSet::new();
            for &m in &members {
                let mut dist: Vec<(u32, f64)> = match robot_target {
                    Some(v0) => vec![(b.after_robot(st.view, v0, m), 1.0)],
                    None => {
                        let mut d: Vec<(u32, f64)> = Vec::with_capacity(4);
                        for (mv, prob) in policy.row(opp, st.robot, m) {
                            let t = opp.effect(m, mv).expect("policy checked against enabled moves");
                            let n = b.after_opponent(st.view, st.robot, m, t);
                            match d.iter_mut().find(|(x, _)| *x == n) {
                                Some(e) => e.1 += prob,
                                None => d.push((n, prob)),
                            }
                        }
                        d
                    }
                };
                dist.sort_by_key(|&(t, _)| t);
                if opts.merge_duplicate_choices && !dedup.insert(dist.iter().map(|&(t, p)| (t, p.to_bits())).collect()) {
                    continue;
                }
                let name = *member_action.entry(m).or_insert_with(|| {
                    let c = opp.location_of(m);
                    actions.intern(format!("v1=({},{})", c.x, c.y)).0
                });
                sel_choice_action.push(name);
                for (t, pr) in dist {
                    sel_targets.push(t);
                    sel_probs.push(pr);
                }
                sel_choice_start.push(sel_targets.len());
            }
            sel_row_start.push(sel_choice_action.len());
            row.push((action, selectors.len() as u32));
            selectors.push((p, action));
        }
        p1_rows.push(row);
    }

    let n1 = b.states.len();
    let n = n1 + selectors.len();
    let mut players = vec![Player::One; n1];
    players.resize(n, Player::Two);
    let mut labels = b.labels.clone();
    labels.resize(n, Labels::NONE);
    let mut row_start = Vec::with_capacity(n + 1);
    let mut choice_action = Vec::new();
    let mut choice_start = vec![0];
    let mut targets = Vec::new();
    let mut probs = Vec::new();
    for (p, row) in p1_rows.iter().enumerate() {
        row_start.push(choice_action.len());
        if row.is_empty() {
            choice_action.push(absorb);
            targets.push(p as u32);
            probs.push(1.0);
            choice_start.push(targets.len());
        }
        for &(a, sel) in row {
            choice_action.push(a);
            targets.push((n1 as u32) + sel);
            probs.push(1.0);
            choice_start.push(targets.len());
        }
    }
    let offset = targets.len();
    for i in 0..selectors.len() {
        row_start.push(choice_action.len());
        for c in sel_row_start[i]..sel_row_start[i + 1] {
            choice_action.push(sel_choice_action[c]);
            choice_start.push(offset + sel_choice_start[c + 1]);
        }
    }
    row_start.push(choice_action.len());
    targets.extend_from_slice(&sel_targets);
    probs.extend_from_slice(&sel_probs);

    let flag_sets = b.flags.values().to_vec();
    let states = b.states.into_values();
    let model = ExplicitModel {
        players,
        labels,
        initial: 0,
        row_start,
        choice_action,
        choice_start,
        targets,
        probs,
        action_names: actions.into_values(),
        observations: None,
        observation_names: Vec::new(),
        state_names: None,
    };
    Ok(AbstractGame {
        model,
        states,
        selectors,
        flag_sets,
        refinement: opts.refinement,
        members: opts.members,
        partition: partition.cloned(),
    })
}
