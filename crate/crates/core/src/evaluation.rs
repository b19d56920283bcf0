//! Certification of lifted strategies on the world POMDP, the fully
//! observable upper bound, and Monte-Carlo cross-checks.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::ObservationAutomaton;
use crate::model::{ExplicitModel, ModelBuilder, Player};
use crate::solver::{evaluate_mc, solve_mdp, Query, SolveOptions, SolverError};
use crate::worldmodel::WorldPomdp;

/// Horizon per unit of grid diameter used by default in simulation.
pub const HORIZON_PER_DIAMETER: usize = 100;
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("strategy has no memory state for the initial observation {0}")]
    NoStart(String),
    #[error("memory update undefined from memory {memory} on observation {observation}")]
    MissingUpdate { memory: usize, observation: String },
    #[error("memory {memory} outputs no action in non-terminal POMDP state {state}")]
    NoOutput { memory: usize, state: usize },
    #[error("action {action} chosen in memory {memory} is unavailable in POMDP state {state}")]
    MissingAction { memory: usize, state: usize, action: String },
    #[error("memory {memory} excludes the opponent position of reachable POMDP state {state}")]
    Inadmissible { memory: usize, state: usize },
    #[error("simulation needs at least one run")]
    ZeroRuns,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Product chain of the POMDP under a lifted strategy.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub value: f64,
    pub product_states: usize,
    pub chain: ExplicitModel,
}

fn successor_memory(
    pomdp: &WorldPomdp,
    automaton: &ObservationAutomaton,
    mem: usize,
    t: usize,
) -> Result<usize, EvaluationError> {
    let obs = pomdp.observation_of(t);
    let next = automaton.next(mem, &obs).ok_or_else(|| EvaluationError::MissingUpdate {
        memory: mem,
        observation: obs.to_string(),
    })?;
    if !automaton.admits(next, pomdp.world.state(t).positions[1]) {
        return Err(EvaluationError::Inadmissible { memory: next, state: t });
    }
    Ok(next)
}

fn chosen_choice(
    pomdp: &WorldPomdp,
    automaton: &ObservationAutomaton,
    s: usize,
    mem: usize,
) -> Result<usize, EvaluationError> {
    let action = automaton.action(mem).ok_or(EvaluationError::NoOutput { memory: mem, state: s })?;
    pomdp.model().find_choice(s, action).ok_or_else(|| EvaluationError::MissingAction {
        memory: mem,
        state: s,
        action: action.to_string(),
    })
}

fn start_memory(pomdp: &WorldPomdp, automaton: &ObservationAutomaton) -> Result<usize, EvaluationError> {
    let s0 = pomdp.model().initial;
    let obs = pomdp.observation_of(s0);
    automaton.start(&obs).ok_or_else(|| EvaluationError::NoStart(obs.to_string()))
}

/// Reach-avoid probability of the lifted strategy on the POMDP, from the
/// product of POMDP states and automaton memory.
pub fn certify(pomdp: &WorldPomdp, automaton: &ObservationAutomaton, tol: f64) -> Result<Certificate, EvaluationError> {
    let m = pomdp.model();
    let start = (m.initial, start_memory(pomdp, automaton)?);
    let mut ids: HashMap<(usize, usize), u32> = HashMap::new();
    let mut queue = VecDeque::new();
    ids.insert(start, 0);
    queue.push_back(start);
    let mut b = ModelBuilder::new();
    let mut row = 0usize;
    while let Some((s, mem)) = queue.pop_front() {
        b.start_row(row, Player::One, m.labels[s]).expect("rows in order");
        row += 1;
        if m.labels[s].is_target() {
            b.add_choice("absorb", &[(row as u32 - 1, 1.0)]);
            continue;
        }
        let c = chosen_choice(pomdp, automaton, s, mem)?;
        let mut dist = Vec::new();
        for (t, p) in m.transitions(c) {
            let key = (t, successor_memory(pomdp, automaton, mem, t)?);
            let next = ids.len() as u32;
            let id = *ids.entry(key).or_insert_with(|| {
                queue.push_back(key);
                next
            });
            dist.push((id, p));
        }
        b.add_choice(m.action_name(c), &dist);
    }
    let chain = b.finish(0);
    let r = evaluate_mc(&chain, &Query::reach_avoid(), &SolveOptions::with_tolerance(tol))?;
    Ok(Certificate {
        value: r.initial_value(&chain),
        product_states: chain.num_states(),
        chain,
    })
}

/// Optimal reach-avoid value of the fully observable world MDP.
pub fn upper_bound(world: &ExplicitModel, tol: f64) -> Result<f64, EvaluationError> {
    let mdp = if world.targets_absorbing() { world.clone() } else { world.make_absorbing() };
    let r = solve_mdp(&mdp, &Query::reach_avoid(), &SolveOptions::with_tolerance(tol))?;
    Ok(r.initial_value(&mdp))
}

/// Fraction of simulated runs reaching the goal, with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub runs: usize,
    pub successes: usize,
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

impl McEstimate {
    pub fn from_counts(successes: usize, runs: usize) -> McEstimate {
        let (n, p) = (runs as f64, successes as f64 / runs as f64);
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        McEstimate {
            runs,
            successes,
            estimate: p,
            low: (center - half).max(0.0),
            high: (center + half).min(1.0),
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }

    /// Binomial standard deviation of the estimate under success probability `p`.
    pub fn sigma(p: f64, runs: usize) -> f64 {
        (p * (1.0 - p) / runs as f64).sqrt()
    }
}

/// Samples `runs` trajectories of at most `horizon` steps. Run `i` draws
/// from ChaCha8 stream `i` of `seed`, so results do not depend on thread
/// scheduling. Runs still undecided at the horizon count as failures.
pub fn simulate(
    pomdp: &WorldPomdp,
    automaton: &ObservationAutomaton,
    runs: usize,
    horizon: usize,
    seed: u64,
) -> Result<McEstimate, EvaluationError> {
    if runs == 0 {
        return Err(EvaluationError::ZeroRuns);
    }
    let m = pomdp.model();
    let start = start_memory(pomdp, automaton)?;
    let outcomes: Result<Vec<bool>, EvaluationError> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run as u64);
            let (mut s, mut mem) = (m.initial, start);
            for _ in 0..=horizon {
                let l = m.labels[s];
                if l.goal {
                    return Ok(true);
                }
                if l.bad {
                    return Ok(false);
                }
                let c = chosen_choice(pomdp, automaton, s, mem)?;
                let mut u: f64 = rng.gen();
                let mut next = None;
                for (t, p) in m.transitions(c) {
                    next = Some(t);
                    if u < p {
                        break;
                    }
                    u -= p;
                }
                let t = next.expect("validated rows are non-empty");
                mem = successor_memory(pomdp, automaton, mem, t)?;
                s = t;
            }
            Ok(false)
        })
        .collect();
    let successes = outcomes?.into_iter().filter(|&x| x).count();
    Ok(McEstimate::from_counts(successes, runs))
}

/// Summary of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub pg_value: f64,
    pub certified_value: f64,
    pub mdp_upper_bound: f64,
    pub monte_carlo: Option<McEstimate>,
    pub scenario_digest: String,
}

impl EvaluationReport {
    /// Whether `pg ≤ certified ≤ bound` holds up to `tol`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.pg_value <= self.certified_value + tol && self.certified_value <= self.mdp_upper_bound + tol
    }
}
