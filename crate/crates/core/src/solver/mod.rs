//! Reach-avoid value iteration for games, MDPs and Markov chains.
//!
//! Values start at the goal indicator and grow monotonically toward the
//! least fixed point of
//! `V(s) = max_a Σ P(s,a)(t)·V(t)` on Player-1 states and
//! `V(s) = min_a Σ P(s,a)(t)·V(t)` on Player-2 states,
//! with goal states pinned to 1 and bad states to 0.

pub mod enumerate;

pub use enumerate::{enumerate_optimal, evaluate_mc_exact, random_game};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ExplicitModel, Player};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Increase below which a Player-1 choice is not replaced.
const IMPROVEMENT_EPS: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("goal/bad state {state} is not absorbing")]
    NonAbsorbing { state: usize },
    #[error("state {state} has no player assigned")]
    UnassignedPlayer { state: usize },
    #[error("state {state} belongs to Player 2, but an MDP was expected")]
    NotAnMdp { state: usize },
    #[error("state {state} has {choices} choices, but a Markov chain was expected")]
    NotAChain { state: usize, choices: usize },
    #[error("no convergence after {iterations} sweeps (residual {residual:e}); tighten the tolerance or report the residual")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("strategy space has {combinations} combinations, limit is {limit}")]
    TooLarge { combinations: f64, limit: f64 },
}

/// Maximize `P(¬bad U goal)`, optionally against a threshold `p`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Query {
    pub threshold: Option<f64>,
}

impl Query {
    pub fn reach_avoid() -> Query {
        Query { threshold: None }
    }

    pub fn with_threshold(p: f64) -> Result<Query, SolverError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SolverError::BadThreshold(p));
        }
        Ok(Query { threshold: Some(p) })
    }

    /// Whether `value` establishes the threshold; `None` without one.
    pub fn holds(&self, value: f64) -> Option<bool> {
        self.threshold.map(|p| value >= p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// In-place updates in a fixed order; canonical and single-threaded.
    #[default]
    GaussSeidel,
    /// Synchronous updates computed in parallel.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mode: SweepMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            mode: SweepMode::GaussSeidel,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerance(tolerance: f64) -> SolveOptions {
        SolveOptions {
            tolerance,
            ..Default::default()
        }
    }
}

/// Memoryless deterministic choices, as indices into each state's choice list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub choice: Vec<Option<u32>>,
    pub adversary_choice: Vec<Option<u32>>,
}

impl Strategy {
    /// Global choice id selected at `s` by whichever player owns it.
    pub fn selected(&self, model: &ExplicitModel, s: usize) -> usize {
        let local = self.choice[s].or(self.adversary_choice[s]).unwrap_or(0);
        model.row_start[s] + local as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueResult {
    pub values: Vec<f64>,
    pub strategy: Strategy,
    pub iterations: usize,
    pub residual: f64,
}

impl ValueResult {
    pub fn initial_value(&self, model: &ExplicitModel) -> f64 {
        self.values[model.initial]
    }
}

/// Solves a two-player game.
pub fn solve_pg(pg: &ExplicitModel, _q: &Query, opts: &SolveOptions) -> Result<ValueResult, SolverError> {
    if let Some(s) = pg.players.iter().position(|&p| p == Player::Unassigned) {
        return Err(SolverError::UnassignedPlayer { state: s });
    }
    iterate(pg, opts)
}

/// Solves an MDP (a game without Player-2 states).
pub fn solve_mdp(mdp: &ExplicitModel, q: &Query, opts: &SolveOptions) -> Result<ValueResult, SolverError> {
    if let Some(s) = mdp.players.iter().position(|&p| p == Player::Two) {
        return Err(SolverError::NotAnMdp { state: s });
    }
    solve_pg(mdp, q, opts)
}

/// Reach-avoid probabilities of a Markov chain.
pub fn evaluate_mc(mc: &ExplicitModel, _q: &Query, opts: &SolveOptions) -> Result<ValueResult, SolverError> {
    if let Some(s) = (0..mc.num_states()).find(|&s| mc.choices(s).len() != 1) {
        return Err(SolverError::NotAChain {
            state: s,
            choices: mc.choices(s).len(),
        });
    }
    iterate(mc, opts)
}

/// Sweep order: reverse breadth-first order from the initial state, then
/// unreachable states. Targets are skipped since their values are fixed.
fn sweep_order(m: &ExplicitModel) -> Vec<usize> {
    let mut order = m.bfs_order();
    order.reverse();
    let mut seen = vec![false; m.num_states()];
    for &s in &order {
        seen[s] = true;
    }
    order.extend((0..m.num_states()).filter(|&s| !seen[s]));
    order.retain(|&s| !m.labels[s].is_target());
    order
}

#[inline]
fn backup(m: &ExplicitModel, v: &[f64], s: usize) -> (f64, u32) {
    let maximize = m.players[s] != Player::Two;
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut arg = 0u32;
    for (i, c) in m.choices(s).enumerate() {
        let mut q = 0.0;
        for k in m.choice_start[c]..m.choice_start[c + 1] {
            q += m.probs[k] * v[m.targets[k] as usize];
        }
        if (maximize && q > best) || (!maximize && q < best) {
            best = q;
            arg = i as u32;
        }
    }
    (best.clamp(0.0, 1.0), arg)
}

fn iterate(m: &ExplicitModel, opts: &SolveOptions) -> Result<ValueResult, SolverError> {
    if !(opts.tolerance > 0.0) {
        return Err(SolverError::BadTolerance(opts.tolerance));
    }
    if let Some(s) = (0..m.num_states()).find(|&s| {
        m.labels[s].is_target() && m.choices(s).any(|c| m.transitions(c).any(|(t, _)| t != s))
    }) {
        return Err(SolverError::NonAbsorbing { state: s });
    }
    let n = m.num_states();
    let mut v: Vec<f64> = m.labels.iter().map(|l| if l.goal { 1.0 } else { 0.0 }).collect();
    let mut p1: Vec<Option<u32>> = (0..n)
        .map(|s| (m.players[s] != Player::Two).then_some(0))
        .collect();
    let order = sweep_order(m);
    let mut iterations = 0;
    let mut residual = 0.0f64;
    if !order.is_empty() {
        loop {
            residual = 0.0;
            match opts.mode {
                SweepMode::GaussSeidel => {
                    for &s in &order {
                        let (new, arg) = backup(m, &v, s);
                        let old = v[s];
                        if m.players[s] != Player::Two && new > old + IMPROVEMENT_EPS {
                            p1[s] = Some(arg);
                        }
                        residual = residual.max((new - old).abs());
                        v[s] = new;
                    }
                }
                SweepMode::Jacobi => {
                    let updates: Vec<(f64, u32)> = order.par_iter().map(|&s| backup(m, &v, s)).collect();
                    for (&s, (new, arg)) in order.iter().zip(updates) {
                        let old = v[s];
                        if m.players[s] != Player::Two && new > old + IMPROVEMENT_EPS {
                            p1[s] = Some(arg);
                        }
                        residual = residual.max((new - old).abs());
                        v[s] = new;
                    }
                }
            }
            iterations += 1;
            if residual < opts.tolerance {
                break;
            }
            if iterations >= opts.max_iterations {
                return Err(SolverError::NoConvergence { iterations, residual });
            }
        }
    }
    let p2 = (0..n)
        .map(|s| (m.players[s] == Player::Two).then(|| backup(m, &v, s).1))
        .collect();
    Ok(ValueResult {
        values: v,
        strategy: Strategy {
            choice: p1,
            adversary_choice: p2,
        },
        iterations,
        residual,
    })
}

/// The Markov chain obtained by fixing both players' choices.
pub fn induced_chain(m: &ExplicitModel, strategy: &Strategy) -> ExplicitModel {
    let mut b = crate::model::ModelBuilder::new();
    for s in 0..m.num_states() {
        b.start_row(s, Player::One, m.labels[s]).expect("rows in order");
        let c = strategy.selected(m, s);
        let row: Vec<(u32, f64)> = m.transitions(c).map(|(t, p)| (t as u32, p)).collect();
        b.add_choice(m.action_name(c), &row);
    }
    let mut mc = b.finish(m.initial);
    mc.state_names = m.state_names.clone();
    mc
}

/// CSV rows `state,value`.
pub fn value_dump(values: &[f64]) -> String {
    let mut out = String::from("state,value\n");
    for (s, v) in values.iter().enumerate() {
        out.push_str(&format!("{s},{v}\n"));
    }
    out
}
