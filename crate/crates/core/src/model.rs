//! Explicit-state models shared by every stage: Markov chains, MDPs,
//! turn-based stochastic games and POMDPs.
//!
//! Storage is compressed-sparse-row: each state owns a contiguous run of
//! choices, each choice an action name and a contiguous run of
//! `(target, probability)` entries.

use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use thiserror::Error;

/// Tolerance for a distribution's total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
    Unassigned,
}

impl Player {
    pub fn tag(self) -> &'static str {
        match self {
            Player::One => "1",
            Player::Two => "2",
            Player::Unassigned => "-",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Player> {
        match tag {
            "1" => Some(Player::One),
            "2" => Some(Player::Two),
            "-" => Some(Player::Unassigned),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Labels {
    pub goal: bool,
    pub bad: bool,
}

impl Labels {
    pub const NONE: Labels = Labels { goal: false, bad: false };

    pub fn is_target(self) -> bool {
        self.goal || self.bad
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("state {state} has no choices")]
    Deadlock { state: usize },
    #[error("choice {choice} of state {state} has mass {mass}, expected 1")]
    NotNormalized { state: usize, choice: usize, mass: f64 },
    #[error("choice {choice} of state {state} has non-positive probability {prob}")]
    NonPositive { state: usize, choice: usize, prob: f64 },
    #[error("transition target {target} out of range ({states} states)")]
    TargetOutOfRange { target: usize, states: usize },
    #[error("states {a} and {b} share observation {observation} but offer different actions")]
    ObservationActionMismatch { a: usize, b: usize, observation: String },
    #[error("rows must be added in state order: expected state {expected}, got {got}")]
    RowOrder { expected: usize, got: usize },
    #[error("initial state {initial} out of range ({states} states)")]
    BadInitial { initial: usize, states: usize },
}

/// A finite probability distribution with strictly positive mass summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    support: Vec<(T, f64)>,
}

impl<T: Copy + PartialEq> Distribution<T> {
    pub fn dirac(x: T) -> Self {
        Distribution { support: vec![(x, 1.0)] }
    }

    pub fn new(support: Vec<(T, f64)>) -> Result<Self, ModelError> {
        let mut mass = 0.0;
        for (i, &(_, p)) in support.iter().enumerate() {
            if !(p > 0.0) {
                return Err(ModelError::NonPositive { state: 0, choice: i, prob: p });
            }
            mass += p;
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(ModelError::NotNormalized { state: 0, choice: 0, mass });
        }
        Ok(Distribution { support })
    }

    /// Uniform over `items`, which must be non-empty.
    pub fn uniform(items: &[T]) -> Self {
        let p = 1.0 / items.len() as f64;
        Distribution {
            support: items.iter().map(|&x| (x, p)).collect(),
        }
    }

    pub fn support(&self) -> &[(T, f64)] {
        &self.support
    }

    pub fn prob(&self, x: T) -> f64 {
        self.support.iter().filter(|(y, _)| *y == x).map(|(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitModel {
    pub players: Vec<Player>,
    pub labels: Vec<Labels>,
    pub initial: usize,
    /// Choice range of state `s` is `row_start[s]..row_start[s + 1]`.
    pub row_start: Vec<usize>,
    pub choice_action: Vec<u32>,
    /// Transition range of choice `c` is `choice_start[c]..choice_start[c + 1]`.
    pub choice_start: Vec<usize>,
    pub targets: Vec<u32>,
    pub probs: Vec<f64>,
    pub action_names: Vec<String>,
    /// Observation id per state, when the model is partially observable.
    pub observations: Option<Vec<u32>>,
    pub observation_names: Vec<String>,
    /// Human-readable decoration per state.
    pub state_names: Option<Vec<String>>,
}

impl ExplicitModel {
    pub fn num_states(&self) -> usize {
        self.players.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choice_action.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.targets.len()
    }

    pub fn choices(&self, s: usize) -> Range<usize> {
        self.row_start[s]..self.row_start[s + 1]
    }

    pub fn action_name(&self, choice: usize) -> &str {
        &self.action_names[self.choice_action[choice] as usize]
    }

    pub fn transitions(&self, choice: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.choice_start[choice]..self.choice_start[choice + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.probs[r])
            .map(|(&t, &p)| (t as usize, p))
    }

    /// First choice of `s` carrying `action`.
    pub fn find_choice(&self, s: usize, action: &str) -> Option<usize> {
        self.choices(s).find(|&c| self.action_name(c) == action)
    }

    pub fn state_name(&self, s: usize) -> String {
        match &self.state_names {
            Some(n) => n[s].clone(),
            None => format!("s{s}"),
        }
    }

    pub fn is_mdp(&self) -> bool {
        self.players.iter().all(|&p| p == Player::One)
    }

    pub fn is_mc(&self) -> bool {
        (0..self.num_states()).all(|s| self.choices(s).len() == 1)
    }

    /// Checks structural well-formedness: no deadlocks, normalized positive
    /// rows, in-range targets, and equal action sets under equal observations.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.num_states();
        if self.initial >= n {
            return Err(ModelError::BadInitial { initial: self.initial, states: n });
        }
        for s in 0..n {
            if self.choices(s).is_empty() {
                return Err(ModelError::Deadlock { state: s });
            }
            for c in self.choices(s) {
                let mut mass = 0.0;
                for (t, p) in self.transitions(c) {
                    if t >= n {
                        return Err(ModelError::TargetOutOfRange { target: t, states: n });
                    }
                    if !(p > 0.0) {
                        return Err(ModelError::NonPositive { state: s, choice: c, prob: p });
                    }
                    mass += p;
                }
                if (mass - 1.0).abs() > MASS_TOLERANCE {
                    return Err(ModelError::NotNormalized { state: s, choice: c, mass });
                }
            }
        }
        if let Some(obs) = &self.observations {
            let mut first: HashMap<u32, usize> = HashMap::new();
            for s in 0..n {
                let rep = *first.entry(obs[s]).or_insert(s);
                if !self.same_actions(rep, s) {
                    return Err(ModelError::ObservationActionMismatch {
                        a: rep,
                        b: s,
                        observation: self.observation_names[obs[s] as usize].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn same_actions(&self, a: usize, b: usize) -> bool {
        let acts = |s: usize| self.choices(s).map(|c| self.choice_action[c]).collect::<Vec<_>>();
        acts(a) == acts(b)
    }

    /// States in breadth-first order from the initial state.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = Vec::with_capacity(self.num_states());
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for c in self.choices(s) {
                for (t, _) in self.transitions(c) {
                    if !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        order
    }

    /// Whether every goal or bad state only loops to itself.
    pub fn targets_absorbing(&self) -> bool {
        (0..self.num_states())
            .filter(|&s| self.labels[s].is_target())
            .all(|s| self.choices(s).all(|c| self.transitions(c).all(|(t, _)| t == s)))
    }

    /// Replaces every choice of a goal or bad state by a single self-loop
    /// named `absorb`. State ids are unchanged.
    pub fn make_absorbing(&self) -> ExplicitModel {
        let mut b = ModelBuilder::new();
        for s in 0..self.num_states() {
            b.start_row(s, self.players[s], self.labels[s]).expect("rows in order");
            if self.labels[s].is_target() {
                b.add_choice("absorb", &[(s as u32, 1.0)]);
                continue;
            }
            for c in self.choices(s) {
                let row: Vec<(u32, f64)> = self.transitions(c).map(|(t, p)| (t as u32, p)).collect();
                b.add_choice(self.action_name(c), &row);
            }
        }
        let mut m = b.finish(self.initial);
        m.observations = self.observations.clone();
        m.observation_names = self.observation_names.clone();
        m.state_names = self.state_names.clone();
        m
    }
}

/// Incremental construction of an [`ExplicitModel`]; rows must be started in
/// state order and each row's choices added before the next row starts.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    players: Vec<Player>,
    labels: Vec<Labels>,
    row_start: Vec<usize>,
    choice_action: Vec<u32>,
    choice_start: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
    action_names: Vec<String>,
    action_ids: HashMap<String, u32>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        ModelBuilder {
            choice_start: vec![0],
            ..Default::default()
        }
    }

    pub fn num_rows(&self) -> usize {
        self.players.len()
    }

    pub fn start_row(&mut self, state: usize, player: Player, labels: Labels) -> Result<(), ModelError> {
        if state != self.players.len() {
            return Err(ModelError::RowOrder {
                expected: self.players.len(),
                got: state,
            });
        }
        self.players.push(player);
        self.labels.push(labels);
        self.row_start.push(self.choice_action.len());
        Ok(())
    }

    /// Overrides the labels of a row that is already started.
    pub fn set_labels(&mut self, state: usize, labels: Labels) {
        self.labels[state] = labels;
    }

    pub fn action_id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.action_ids.get(name) {
            return id;
        }
        let id = self.action_names.len() as u32;
        self.action_names.push(name.to_string());
        self.action_ids.insert(name.to_string(), id);
        id
    }

    /// Adds a choice to the current row. Probabilities are stored as given.
    pub fn add_choice(&mut self, action: &str, row: &[(u32, f64)]) {
        let id = self.action_id(action);
        self.add_choice_id(id, row);
    }

    pub fn add_choice_id(&mut self, action: u32, row: &[(u32, f64)]) {
        self.choice_action.push(action);
        for &(t, p) in row {
            self.targets.push(t);
            self.probs.push(p);
        }
        self.choice_start.push(self.targets.len());
    }

    pub fn finish(mut self, initial: usize) -> ExplicitModel {
        self.row_start.push(self.choice_action.len());
        ExplicitModel {
            players: self.players,
            labels: self.labels,
            initial,
            row_start: self.row_start,
            choice_action: self.choice_action,
            choice_start: self.choice_start,
            targets: self.targets,
            probs: self.probs,
            action_names: self.action_names,
            observations: None,
            observation_names: Vec::new(),
            state_names: None,
        }
    }
}

/// Interns values to dense `u32` ids in first-seen order.
#[derive(Debug, Clone)]
pub struct Interner<T: std::hash::Hash + Eq + Clone> {
    ids: HashMap<T, u32>,
    values: Vec<T>,
}

impl<T: std::hash::Hash + Eq + Clone> Default for Interner<T> {
    fn default() -> Self {
        Interner {
            ids: HashMap::new(),
            values: Vec::new(),
        }
    }
}

impl<T: std::hash::Hash + Eq + Clone> Interner<T> {
    /// Returns the id of `value` and whether it was newly inserted.
    pub fn intern(&mut self, value: T) -> (u32, bool) {
        if let Some(&id) = self.ids.get(&value) {
            return (id, false);
        }
        let id = self.values.len() as u32;
        self.ids.insert(value.clone(), id);
        self.values.push(value);
        (id, true)
    }

    pub fn get(&self, value: &T) -> Option<u32> {
        self.ids.get(value).copied()
    }

    pub fn value(&self, id: u32) -> &T {
        &self.values[id as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}
