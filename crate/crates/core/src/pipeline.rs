//! End-to-end run on one scenario: graphs, abstract game, solve, lift,
//! certify, bound and simulate.

use std::time::Instant;

use serde::Serialize;

use crate::abstraction::{
    build_abstract_world_pg, lift_strategy, row_stripes, AbstractGame, AbstractionOptions, MemberSet, ObservationAutomaton,
    RegionPartition, Refinement,
};
use crate::error::Error;
use crate::evaluation::{certify, simulate, upper_bound, EvaluationReport, McEstimate, HORIZON_PER_DIAMETER};
use crate::export::StrategyDump;
use crate::gridworld::{build_world_graphs, Cell, Scenario, VisibilityTable, WorldGraph};
use crate::solver::{solve_pg, Query, SolveOptions, ValueResult, DEFAULT_TOLERANCE};
use crate::worldmodel::{attach_observations, build_world_mdp, label_states, OpponentPolicy, WorldPomdp};

/// Stripe height of the region partition used when none is given.
pub const DEFAULT_STRIPE_ROWS: usize = 2;
/// Convergence tolerance for certification and the MDP bound.
pub const EVALUATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub refinement: Refinement,
    pub members: MemberSet,
    /// Region blocks; falls back to the scenario's own regions, then to row
    /// stripes.
    pub regions: Option<Vec<Vec<Cell>>>,
    pub tolerance: f64,
    pub threshold: Option<f64>,
    /// Monte-Carlo runs; zero skips simulation.
    pub runs: usize,
    pub seed: u64,
    pub horizon: Option<usize>,
    /// Build the world POMDP to certify the lifted strategy and bound it.
    pub certify: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            refinement: Refinement::OneStep,
            members: MemberSet::AllHidden,
            regions: None,
            tolerance: DEFAULT_TOLERANCE,
            threshold: None,
            runs: 0,
            seed: 0,
            horizon: None,
            certify: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSize {
    pub states: usize,
    pub choices: usize,
    pub transitions: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub graphs: Vec<WorldGraph>,
    pub game: AbstractGame,
    pub solution: ValueResult,
    pub automaton: ObservationAutomaton,
    pub pomdp: Option<WorldPomdp>,
    pub report: EvaluationReport,
    pub size: ModelSize,
    /// Whether the threshold is established by the game value.
    pub verdict: Option<bool>,
    pub build_s: f64,
    pub solve_s: f64,
}

/// Report file contents.
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile<'a> {
    pub refinement: &'a str,
    pub members: &'a str,
    pub threshold: Option<f64>,
    pub established: Option<bool>,
    pub size: ModelSize,
    pub report: &'a EvaluationReport,
}

impl PipelineOutput {
    pub fn strategy_dump(&self, scenario: &Scenario) -> StrategyDump {
        let mut order = Vec::new();
        let mut actions = std::collections::BTreeMap::new();
        for m in 0..self.automaton.num_memory_states() {
            if let Some(a) = self.automaton.action(m) {
                let d = self.game.decoration(m, &self.graphs);
                order.push(d.clone());
                actions.insert(d, a.to_string());
            }
        }
        StrategyDump {
            refinement: self.game.refinement,
            members: self.game.members,
            scenario_digest: scenario.digest(),
            regions: self.game.partition.as_ref().map(|p| p.blocks.clone()),
            actions,
            order,
        }
    }

    /// TOML report. Deterministic: timings are not included.
    pub fn report_toml(&self, opts: &PipelineOptions) -> String {
        let file = ReportFile {
            refinement: self.game.refinement.name(),
            members: opts.members.name(),
            threshold: opts.threshold,
            established: self.verdict,
            size: self.size,
            report: &self.report,
        };
        toml::to_string(&file).expect("report serializes")
    }
}

/// Region blocks used for `refinement = regions`.
pub fn resolve_regions(scenario: &Scenario, opts: &PipelineOptions) -> Vec<Vec<Cell>> {
    opts.regions
        .clone()
        .or_else(|| scenario.regions.clone())
        .unwrap_or_else(|| row_stripes(scenario, DEFAULT_STRIPE_ROWS))
}

/// Builds the reachable world POMDP of a one-opponent scenario.
pub fn world_pomdp(scenario: &Scenario, graphs: &[WorldGraph], vis: &VisibilityTable) -> Result<WorldPomdp, Error> {
    let policies = vec![OpponentPolicy::Uniform; graphs.len() - 1];
    let mut world = build_world_mdp(graphs, &policies)?;
    label_states(&mut world, scenario, graphs);
    Ok(attach_observations(world, graphs, vis)?)
}

pub fn run_pipeline(scenario: &Scenario, opts: &PipelineOptions) -> Result<PipelineOutput, Error> {
    let query = match opts.threshold {
        Some(p) => Query::with_threshold(p)?,
        None => Query::reach_avoid(),
    };
    let solve_opts = SolveOptions::with_tolerance(opts.tolerance);
    if !(opts.tolerance > 0.0) {
        return Err(crate::solver::SolverError::BadTolerance(opts.tolerance).into());
    }
    scenario.validate()?;
    let started = Instant::now();
    let graphs = build_world_graphs(scenario)?;
    let vis = VisibilityTable::new(scenario);
    let partition = match opts.refinement {
        Refinement::Regions => Some(
            RegionPartition::new(scenario, resolve_regions(scenario, opts), &graphs[1])
                .map_err(crate::abstraction::AbstractionError::Partition)?,
        ),
        _ => None,
    };
    let aopts = AbstractionOptions {
        refinement: opts.refinement,
        members: opts.members,
        merge_duplicate_choices: true,
    };
    let game = build_abstract_world_pg(scenario, &graphs, &vis, &OpponentPolicy::Uniform, partition.as_ref(), &aopts)?;
    let build_s = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let solution = solve_pg(&game.model, &query, &solve_opts)?;
    let solve_s = started.elapsed().as_secs_f64();
    let pg_value = solution.initial_value(&game.model);
    let automaton = lift_strategy(&game, &solution.strategy)?;

    let (pomdp, certified_value, mdp_upper_bound) = if opts.certify || opts.runs > 0 {
        let pomdp = world_pomdp(scenario, &graphs, &vis)?;
        let cert = certify(&pomdp, &automaton, EVALUATION_TOLERANCE)?.value;
        let bound = upper_bound(pomdp.model(), EVALUATION_TOLERANCE)?;
        (Some(pomdp), cert, bound)
    } else {
        (None, f64::NAN, f64::NAN)
    };
    let monte_carlo = match &pomdp {
        Some(p) if opts.runs > 0 => {
            let horizon = opts.horizon.unwrap_or(HORIZON_PER_DIAMETER * scenario.diameter());
            Some(simulate(p, &automaton, opts.runs, horizon, opts.seed)?)
        }
        _ => None,
    };
    let size = ModelSize {
        states: game.model.num_states(),
        choices: game.model.num_choices(),
        transitions: game.model.num_transitions(),
    };
    Ok(PipelineOutput {
        verdict: query.holds(pg_value),
        report: EvaluationReport {
            pg_value,
            certified_value,
            mdp_upper_bound,
            monte_carlo,
            scenario_digest: scenario.digest(),
        },
        graphs,
        game,
        solution,
        automaton,
        pomdp,
        size,
        build_s,
        solve_s,
    })
}

/// Simulates a dumped strategy on a scenario, rebuilding the abstraction it
/// was extracted from.
pub fn simulate_dump(
    scenario: &Scenario,
    dump: &StrategyDump,
    runs: usize,
    seed: u64,
    horizon: Option<usize>,
) -> Result<McEstimate, Error> {
    scenario.validate()?;
    let graphs = build_world_graphs(scenario)?;
    let vis = VisibilityTable::new(scenario);
    let partition = match dump.refinement {
        Refinement::Regions => {
            let blocks = dump
                .regions
                .clone()
                .or_else(|| scenario.regions.clone())
                .unwrap_or_else(|| row_stripes(scenario, DEFAULT_STRIPE_ROWS));
            Some(RegionPartition::new(scenario, blocks, &graphs[1]).map_err(crate::abstraction::AbstractionError::Partition)?)
        }
        _ => None,
    };
    let aopts = AbstractionOptions {
        refinement: dump.refinement,
        members: dump.members,
        merge_duplicate_choices: true,
    };
    let game = build_abstract_world_pg(scenario, &graphs, &vis, &OpponentPolicy::Uniform, partition.as_ref(), &aopts)?;
    let automaton = crate::abstraction::lift_actions(&game, &graphs, &dump.actions)?;
    let pomdp = world_pomdp(scenario, &graphs, &vis)?;
    let horizon = horizon.unwrap_or(HORIZON_PER_DIAMETER * scenario.diameter());
    Ok(simulate(&pomdp, &automaton, runs, horizon, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_room_report() {
        let s = Scenario::open_room(3, 3, 3, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2));
        let opts = PipelineOptions {
            threshold: Some(0.99),
            runs: 2000,
            seed: 1,
            ..Default::default()
        };
        let out = run_pipeline(&s, &opts).unwrap();
        assert!((out.report.pg_value - 0.8323).abs() < 5e-5);
        assert_eq!(out.verdict, Some(false));
        assert!(out.report.sandwich_holds(1e-6));
        let toml = out.report_toml(&opts);
        assert!(toml.contains("pg_value"));
        assert_eq!(toml, run_pipeline(&s, &opts).unwrap().report_toml(&opts));
    }

    #[test]
    fn dumped_strategy_simulates_like_the_original() {
        let s = Scenario::open_room(4, 6, 1, Cell::new(0, 0), Cell::new(3, 5), Cell::new(3, 5));
        let opts = PipelineOptions {
            refinement: Refinement::Regions,
            runs: 3000,
            seed: 5,
            ..Default::default()
        };
        let out = run_pipeline(&s, &opts).unwrap();
        let dump = StrategyDump::parse(&out.strategy_dump(&s).to_text()).unwrap();
        let est = simulate_dump(&s, &dump, 3000, 5, None).unwrap();
        assert_eq!(Some(est), out.report.monte_carlo);
    }

    #[test]
    fn bad_threshold_is_rejected() {
        let s = Scenario::open_room(3, 3, 3, Cell::new(0, 0), Cell::new(2, 2), Cell::new(2, 2));
        let opts = PipelineOptions {
            threshold: Some(1.5),
            ..Default::default()
        };
        assert!(run_pipeline(&s, &opts).unwrap_err().is_invalid_input());
    }
}
